//! Accounts, credentials and sessions.

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use chrono::NaiveDate;
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::UserId;
use crate::rbac::{effective_priority, EmptyRoleSet, Priority, Role, RoleSet};
use crate::time::Timestamp;

pub const MIN_PASSWORD_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: UserId,
    pub username: String,
    /// PHC-format salted hash; the raw password is never kept.
    pub credential: String,
    pub roles: RoleSet,
    /// UTC day the counter below belongs to.
    pub tx_day: Option<NaiveDate>,
    pub tx_count: u32,
    pub created_at: Timestamp,
}

impl UserAccount {
    pub fn effective_priority(&self) -> Result<Priority, EmptyRoleSet> {
        effective_priority(&self.roles)
    }

    pub fn is_admin(&self) -> bool {
        self.roles.contains(&Role::Admin)
    }

    /// Counted actions already spent on the UTC day containing `now`.
    pub fn transactions_on(&self, now: Timestamp) -> u32 {
        match self.tx_day {
            Some(day) if day == now.date_naive() => self.tx_count,
            _ => 0,
        }
    }

    /// Charges one counted action at `at`, rolling the counter over at UTC midnight.
    pub fn charge_transaction(&mut self, at: Timestamp) {
        let day = at.date_naive();
        if self.tx_day == Some(day) {
            self.tx_count += 1;
        } else {
            self.tx_day = Some(day);
            self.tx_count = 1;
        }
    }
}

/// A live login. The bearer token itself is never stored, only its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: SessionId,
    pub user_id: UserId,
    pub login_time: Timestamp,
    pub expires_at: Timestamp,
}

impl Session {
    pub fn is_live(&self, now: Timestamp) -> bool {
        now <= self.expires_at
    }
}

/// SHA-256 digest of a bearer token, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn of(token: &SessionToken) -> Self {
        SessionId(hex::encode(Sha256::digest(token.0.as_bytes())))
    }
}

/// The bearer secret handed to a client at login.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionToken(String);

impl SessionToken {
    pub fn generate() -> Self {
        let mut bytes = [0u8; 32];
        OsRng.fill_bytes(&mut bytes);
        SessionToken(hex::encode(bytes))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for SessionToken {
    fn from(s: &str) -> Self {
        SessionToken(s.to_owned())
    }
}

impl From<String> for SessionToken {
    fn from(s: String) -> Self {
        SessionToken(s)
    }
}

impl std::fmt::Debug for SessionToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionToken(..)")
    }
}

/// Argon2id cost settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashCost {
    pub memory_kib: u32,
    pub iterations: u32,
}

impl Default for HashCost {
    fn default() -> Self {
        HashCost {
            memory_kib: Params::DEFAULT_M_COST,
            iterations: Params::DEFAULT_T_COST,
        }
    }
}

impl HashCost {
    /// Cheapest parameters argon2 accepts. Only for tests.
    pub const MINIMAL: HashCost = HashCost {
        memory_kib: 8,
        iterations: 1,
    };

    fn hasher(self) -> Argon2<'static> {
        let params = Params::new(self.memory_kib, self.iterations, 1, None)
            .unwrap_or_default();
        Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
    }
}

pub fn hash_password(password: &str, cost: HashCost) -> String {
    let salt = SaltString::generate(&mut OsRng);
    cost.hasher()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .expect("argon2 hashing with validated params")
}

/// Verifies against a stored PHC string; the parameters embedded in the
/// hash win over the current cost settings.
pub fn verify_password(password: &str, credential: &str) -> bool {
    PasswordHash::new(credential)
        .map(|parsed| {
            Argon2::default()
                .verify_password(password.as_bytes(), &parsed)
                .is_ok()
        })
        .unwrap_or(false)
}
