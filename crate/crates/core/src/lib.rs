//! Regularized gap functions for polynomial variational inequalities, with
//! explicit Łojasiewicz-type error-bound exponents and tools to test them
//! numerically.
//!
//! An instance pairs a polynomial map `F` with a basic semialgebraic set
//! `Ω = {g ≤ 0, h = 0}` and a regularization `ρ > 0`. The gap function is
//! `ψ(x) = max_{y∈Ω} ⟨F(x), x − y⟩ − ρ/2 ‖x − y‖²`.

pub mod error;
pub mod exec;
pub mod exponent;
pub mod feasible;
pub mod gap;
pub mod lab;
pub mod poly;
pub mod qp;
pub mod report;
pub mod solver;
pub mod tol;

pub use error::{Error, Result};
pub use exec::{configure_threads, Exec};
pub use exponent::{alpha_for_instance, pow_alpha, r_function, Alpha, ExponentCertificate};
pub use feasible::{BoxRegion, FeasibleSet, MfcqReport, RawFeasibleSet};
pub use gap::{ArgmaxStrategy, GapEvaluation, ResidualCertificate, ViInstance};
pub use lab::{
    estimate_zero_set, fit_exponent, sample_cloud, verify_error_bound, verify_lojasiewicz, BoundReport, BoundRow,
    BoundSummary, CloudKind, SampleCloud, Verdict, ZeroSetConfig, ZeroSetEstimate,
};
pub use poly::{Polynomial, PolynomialMap, Term};
pub use solver::{
    correlate_rate, default_step, extragradient, gap_descent, natural_residual, DescentParams, RateRow, SolverTrace,
    TerminalStatus,
};
pub use tol::Tolerances;
