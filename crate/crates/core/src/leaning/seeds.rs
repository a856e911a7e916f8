use std::path::Path;

use serde::Deserialize;

use super::{Label, SeedLabel, SeedOrigin};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Position {
    Left,
    Center,
    Right,
}

#[derive(Debug, Deserialize)]
struct PoliticianRow {
    user_id: String,
    position: Position,
    has_account: bool,
}

/// Politician seeds of one country together with account coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedLoad {
    pub seeds: Vec<SeedLabel>,
    pub politicians: usize,
    pub with_accounts: usize,
    /// `with_accounts / politicians`.
    pub coverage: f64,
}

impl SeedLoad {
    /// Whether the country has enough politicians on the platform.
    pub fn accepted(&self, coverage_threshold: f64) -> bool {
        self.coverage >= coverage_threshold
    }
}

/// Reads a politician list (`user_id,position,has_account`).
///
/// Left and right politicians with accounts become seeds; center politicians
/// count towards coverage but never seed.
pub fn load_seeds(path: &Path) -> Result<SeedLoad> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut seeds = Vec::new();
    let mut politicians = 0usize;
    let mut with_accounts = 0usize;
    for row in r.deserialize::<PoliticianRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        politicians += 1;
        let user = row.user_id.trim();
        if !row.has_account || user.is_empty() {
            continue;
        }
        with_accounts += 1;
        let label = match row.position {
            Position::Left => Label::Left,
            Position::Right => Label::Right,
            Position::Center => continue,
        };
        seeds.push(SeedLabel {
            user_id: user.to_owned(),
            label,
            origin: SeedOrigin::Politician,
        });
    }
    if politicians == 0 {
        return Err(Error::InvalidInput(format!(
            "{}: empty politician list",
            path.display()
        )));
    }
    seeds.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    seeds.dedup_by(|a, b| a.user_id == b.user_id);
    if seeds.is_empty() {
        log::warn!("{}: no left or right seeds with accounts", path.display());
    }
    Ok(SeedLoad {
        seeds,
        politicians,
        with_accounts,
        coverage: with_accounts as f64 / politicians as f64,
    })
}
