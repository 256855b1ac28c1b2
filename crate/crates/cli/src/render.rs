use jobgate_core::time::board_format;
use jobgate_server::wire::{AccountView, BackupView, ClaimView, JobView, ResolutionView};

pub const BOARD_HEADER: [&str; 6] = [
    "S.No",
    "Assigned By",
    "Assigned On",
    "Assigned Person Level",
    "Job Type",
    "Job Description",
];

/// Keeps each cell on one line.
fn cell(s: &str) -> String {
    s.chars().map(|c| if c.is_control() { ' ' } else { c }).collect()
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(c);
            out.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        out.trim_end().to_owned()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// The job board as a fixed-column table.
pub fn board(jobs: &[JobView]) -> String {
    let rows: Vec<Vec<String>> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            vec![
                (i + 1).to_string(),
                cell(&j.assigned_by),
                board_format(j.assigned_on),
                j.level_label.to_string(),
                cell(&j.job_type),
                cell(&j.description),
            ]
        })
        .collect();
    table(&BOARD_HEADER, &rows)
}

fn name(username: &Option<String>, id: &impl std::fmt::Display) -> String {
    username.clone().unwrap_or_else(|| id.to_string())
}

pub fn account(a: &AccountView) -> String {
    let roles: Vec<&str> = a.roles.iter().map(|r| r.as_str()).collect();
    format!("{} {} [{}]\n", a.user_id, a.username, roles.join(", "))
}

pub fn job(j: &JobView) -> String {
    format!(
        "posted {} for {} ({}): {}\n",
        j.job_id,
        j.level_label,
        board_format(j.assigned_on),
        cell(&j.job_type)
    )
}

pub fn claim(c: &ClaimView) -> String {
    format!(
        "claim on {} by {} admitted (login {})\n",
        c.job_id,
        name(&c.username, &c.user_id),
        board_format(c.login_time)
    )
}

pub fn resolution(r: &ResolutionView) -> String {
    format!(
        "{} assigned to {} ({} claim{})\n",
        r.job_id,
        name(&r.winner_username, &r.winner),
        r.ranking.len(),
        if r.ranking.len() == 1 { "" } else { "s" }
    )
}

pub fn backup(verb: &str, b: &BackupView) -> String {
    format!(
        "{verb} {}: {} accounts, {} jobs, {} permission requests\n",
        b.name, b.accounts, b.jobs, b.requests
    )
}
