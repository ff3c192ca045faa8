use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("module `{0}` carries no tau intertwiner")]
    MissingTau(String),
    #[error("slot {slot} out of range for a space with {len} slots")]
    Slot { slot: usize, len: usize },
    #[error("tensor `{0}` is not defined on the requested slots")]
    SlotKind(String),
    #[error("root-indexed tensor requested but the root list is empty")]
    NoRoots,
    #[error("u must be regular")]
    IrregularU,
    #[error("kappa must be purely imaginary and nonzero, got {0}")]
    Kappa(String),
    #[error("matrix is not diagonalizable to tolerance (defect {0:e})")]
    NotDiagonalizable(f64),
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("ad_U inversion ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget of {0} exhausted before reaching the end of the path")]
    StepBudget(usize),
    #[error("path clearance {found:e} below required {required:e}")]
    Clearance { found: f64, required: f64 },
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("singular matrix in {0}")]
    Singular(String),
    #[error("point lies on a forbidden divisor: {0}")]
    Divisor(String),
    #[error("xi is not inside D_{0}")]
    Domain(i32),
    #[error("branch ambiguity: {0}")]
    Branch(String),
    #[error("ledger mismatch: {0}")]
    Ledger(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("oracle did not converge: {0}")]
    Oracle(String),
    #[error("fit residual {0:e} too large: the Stokes data do not follow the proposed flow")]
    Fit(f64),
    #[error("tolerance not met: {0}")]
    Tolerance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
