//! Domination measures fitted by linear programming, and the factorizations they induce.

mod factor;
mod fit;
mod measure;
mod operator;

pub use factor::{factorize_multilinear, Factorization, FACTOR_SLACK};
pub use fit::{
    candidates, fit_domination_lp, fit_domination_lp_with, sum_form, sum_to_product, verify_certificate,
    CandidateFamily, DominationCertificate, DominationExponents, FitOptions, ProductCheck, VerifyReport,
    DEFAULT_CANDIDATES, PRODUCT_SLACK,
};
pub use measure::{augment_measure, build_factor_space, f_seminorm, uniform_strict};
pub use operator::MultilinearOperator;
