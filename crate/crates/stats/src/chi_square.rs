//! Pearson chi-square test of independence on 2x2 tables.

use serde::{Deserialize, Serialize};

use crate::contingency::ContingencyTable2x2;
use crate::distributions::chi2_sf;
use crate::error::{Result, StatsError};
use crate::report::{DegreesOfFreedom, TestReport, DEFAULT_ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    None,
    #[default]
    Yates,
}

impl std::str::FromStr for Correction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Correction::None),
            "yates" => Ok(Correction::Yates),
            other => Err(format!("unknown correction `{other}` (expected yates|none)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOptions {
    pub correction: Correction,
    pub alpha: f64,
    /// Downgrade the `E_ij >= 5` requirement to a note instead of an error.
    pub force: bool,
}

impl Default for ChiSquareOptions {
    fn default() -> Self {
        Self { correction: Correction::Yates, alpha: DEFAULT_ALPHA, force: false }
    }
}

/// Statistic `sum (|O - E| - c)^2 / E` with `c = 0.5` under Yates, clipped
/// so that cells with `|O - E| < 0.5` contribute zero.
pub fn chi2_statistic(table: &ContingencyTable2x2, correction: Correction) -> Result<f64> {
    if table.row_totals().contains(&0) || table.col_totals().contains(&0) {
        return Err(StatsError::Degenerate("contingency table has a zero margin".into()));
    }
    let expected = table.expected();
    let c = match correction {
        Correction::None => 0.0,
        Correction::Yates => 0.5,
    };
    let mut stat = 0.0;
    for (obs_row, exp_row) in table.observed.iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            let dev = ((o as f64 - e).abs() - c).max(0.0);
            stat += dev * dev / e;
        }
    }
    Ok(stat)
}

pub fn chi2_independence(table: &ContingencyTable2x2, options: ChiSquareOptions) -> Result<TestReport> {
    let statistic = chi2_statistic(table, options.correction)?;
    let mut notes = Vec::new();
    for (i, row) in table.expected().iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e < 5.0 {
                if !options.force {
                    return Err(StatsError::ExpectedFrequency { row: i, col: j, expected: e });
                }
                notes.push(format!("expected frequency {e:.3} in cell ({i},{j}) is below 5"));
            }
        }
    }
    let p = chi2_sf(statistic, 1.0)?.value;
    let name = match options.correction {
        Correction::None => "chi-square independence",
        Correction::Yates => "chi-square independence (Yates)",
    };
    let mut report = TestReport::new(name, statistic, DegreesOfFreedom::One(1.0), p, options.alpha);
    report.notes = notes;
    Ok(report)
}
