//! Singular kernel sequences `φ_n`, closed forms for monomial kernels, and
//! numerical checkers for the hypotheses (h1)–(h8).

mod closed_form;
mod hypotheses;
mod sequence;
mod suite;

pub use closed_form::{
    closed_form_double_integral, double_integral_quadrature, monomial_h_norm,
    monomial_h_norm_terms, monomial_limit,
};
pub use hypotheses::{
    check_h1, check_h4, check_h5, check_h6, check_h7, check_h8, check_sup_conditions,
    default_ladder, h6_weighted_integral, h7_functional, h8_grid, h_norm_sq, kstar_lp, lr_norm,
    richardson_limit, HypothesisReport, Probe, SupVariant, Verdict,
};
pub use sequence::{AlphaRule, KernelFamily, KernelSequence};
pub use suite::{
    constant_suite, counterexample_suite, monomial_suite, run_suite, Check, CheckGroup, FamilySpec,
    SuiteConfig, SuiteReport, TABLE_CELLS,
};
