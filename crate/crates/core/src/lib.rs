//! Spectrally negative Lévy processes with Parisian reflection below and a
//! dividend barrier above: scale functions, fluctuation identities and a
//! Monte Carlo path simulator to check them.

pub mod config;
pub mod error;
pub mod identities;
pub mod levy_model;
pub mod quadrature;
pub mod scale;
pub mod simulate;
pub mod special;
pub mod verification;

pub use error::{Error, Result};
pub use identities::{Evaluator, Identity, IdentityValue, Scenario, Source};
pub use levy_model::{JumpComponent, LevyModel, MagnitudeLaw, ModelKind, VariationClass};
pub use simulate::{estimate, estimate_many, simulate_path, MCEstimate, Mode, PathOutcome, Request, SimConfig, StopReason, Target};
pub use scale::{BackendKind, ScaleContext, ShiftedKernelValue, ShiftedKernels, Side, ZFamily};
pub use verification::{run_suite, CheckKind, CheckResult, CheckSpec, Report, Tolerance, Verdict};
