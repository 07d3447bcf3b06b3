//! Human annotation workflow: sampling items for raters, turning rater
//! choices into gold labels, measuring agreement, and splitting the gold set.

pub mod agreement;
mod matrix;
pub mod sampling;
pub mod split;
pub mod store;
mod vote;

pub use agreement::{
    agreement_report, cohen_kappa, cohen_kappa_mean, fleiss_kappa, krippendorff_alpha,
    krippendorff_alpha_partial, AgreementReport,
};
pub use matrix::{LabelExport, LabelMatrix};
pub use sampling::{allocate_quotas, stratified_sample, SampleItem, SamplePlan};
pub use split::{stratified_split, Split};
pub use vote::{majority_vote, GoldLabel, VoteOutcome};
