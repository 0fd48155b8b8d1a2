//! Spectral-Galerkin simulation of semilinear stochastic heat equations on
//! the unit interval with additive space-time white noise and odd-degree
//! polynomial reaction terms (stochastic Ginzburg-Landau being the flagship
//! instance).
//!
//! The crate provides:
//!
//! - a sine spectral basis with fast transforms, diagonal semigroup /
//!   resolvent / Crank-Nicolson factors, and rectangle-rule L^q norms
//!   ([`spectral`]);
//! - polynomial reaction terms with closed-form growth, one-sided, and
//!   local-Lipschitz constants, plus the step-size-dependent truncation gate
//!   that switches the nonlinearity off on oversized states ([`drift`]);
//! - a counter-based Gaussian increment source that makes coarse increments
//!   exact sums of fine ones, the backbone of coupled-path error estimation
//!   ([`noise`]);
//! - three one-step integrators sharing one evaluation pipeline:
//!   truncated exponential Euler, truncated linear-implicit Euler, and a
//!   truncated Crank-Nicolson reference ([`scheme`]);
//! - a coupled Monte Carlo strong-error harness with deterministic
//!   multi-threading, log-log order fitting, and a per-step energy audit
//!   ([`harness`]);
//! - an executable verification suite for the operator and drift
//!   inequalities underpinning the integrators ([`verify`]);
//! - a flat key-value configuration format ([`config`]) and fixed-layout
//!   CSV writers ([`report`]).
//!
//! Determinism is a design contract throughout: a (seed, run index) pair
//! fixes every path bitwise, independent of thread count or query order.

pub mod config;
pub mod drift;
pub mod error;
pub mod harness;
pub mod noise;
pub mod report;
pub mod scheme;
pub mod spectral;
pub mod verify;

pub use config::{load_config, parse_config, serialize_config, ConfigFile};
pub use drift::{IndicatorVariant, PolynomialDrift, TruncationRule};
pub use error::{Error, Result};
pub use harness::{
    fit_order, lyapunov_audit, strong_error_mc, AuditReport, ErrorRow, ErrorTable,
    ExperimentConfig, OrderFit, XiSpec,
};
pub use noise::{IncrementBlock, NoiseSource};
pub use scheme::{run_path, PathRecord, RecordSpec, SchemeContext, SchemeKind, SchemeState};
pub use spectral::{lq_norm_pow, GridField, ModeBasis, SpectralField, TimeGrid};
pub use verify::{verify_inequalities, VerifyEntry, VerifyOptions, VerifyReport};
