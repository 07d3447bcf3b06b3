//! Negative binomial engagement regression with emotion-probability
//! predictors and fixed-effect controls.

mod design;
mod fit;
mod inference;
pub mod report;
mod special;

pub use design::{
    build_design, Controls, DesignMatrix, DesignReport, DurationControl, ModelSpec, ALLOWED_PREDICTORS,
};
pub use fit::{
    fit_nb, fit_poisson, nb_log_likelihood, nb_score, poisson_log_likelihood, wald_p_value, Coefficient,
    FitResult, ModelKind, ALPHA_LOWER_BOUND, ETA_CLIP, LL_TOLERANCE, NB_MAX_OUTER, POISSON_MAX_ITER,
};
pub use inference::{
    chi2_1_survival, irr, lr_test, overdispersion_test, predict_curve, significance_stars, unit_grid,
    CurvePoint, Irr, OverdispersionTest, Z_95,
};
pub use report::FitReport;
