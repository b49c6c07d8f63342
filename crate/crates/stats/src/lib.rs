//! Distribution kernels and the hypothesis tests used to analyze neutral
//! agent conformity: chi-square independence, Shapiro-Wilk, Levene,
//! two-way and Welch ANOVA, Games-Howell, partial eta squared and post hoc
//! power.

pub mod anova;
pub mod chi_square;
pub mod contingency;
pub mod distributions;
pub mod effect;
mod error;
pub mod normality;
pub mod posthoc;
pub mod power;
mod quadrature;
pub mod report;
pub mod special;
pub mod variance;
pub mod welch;

pub use anova::{one_way_anova, two_way_anova, AnovaRow, AnovaTable, Observation, OneWayAnova, Source};
pub use chi_square::{chi2_independence, chi2_statistic, ChiSquareOptions, Correction};
pub use contingency::ContingencyTable2x2;
pub use distributions::DistributionResult;
pub use effect::{partial_eta_squared, EffectBand, EffectSize};
pub use error::{Result, StatsError};
pub use normality::shapiro_wilk;
pub use posthoc::{games_howell, PairwiseComparison};
pub use power::{posthoc_power_anova, posthoc_power_total};
pub use report::{DegreesOfFreedom, TestReport, DEFAULT_ALPHA};
pub use variance::{levene_test, Center};
pub use welch::{welch_anova, welch_t_test};
