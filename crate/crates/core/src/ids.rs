//! Opaque identifiers.
//!
//! Identifiers are allocated from per-kind counters held in the engine
//! state, so replaying a journal hands out the same ids again. They are
//! zero-padded so that lexicographic order matches allocation order.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            pub fn from_counter(n: u64) -> Self {
                $name(format!("{}-{:06}", $prefix, n))
            }

            /// Counter value encoded in the id, if it has the canonical shape.
            pub fn counter(&self) -> Option<u64> {
                self.0
                    .strip_prefix($prefix)
                    .and_then(|rest| rest.strip_prefix('-'))
                    .and_then(|n| n.parse().ok())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_type!(UserId, "user");
id_type!(JobId, "job");
id_type!(
    /// Identifies a permission request.
    RequestId,
    "req"
);
