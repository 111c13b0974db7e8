//! SI and SIR compartmental systems.
//!
//! ```text
//! SI:   dS/dt = -α S I          SIR:  dS/dt = -α S I
//!       dI/dt =  α S I                dI/dt =  α S I - β I
//!                                     dR/dt =  β I
//! ```
//!
//! Compartments are real-valued counts of individuals. Both systems conserve
//! the total population `N`. The SI system has the closed-form logistic
//! solution implemented by [`si_exact`].

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Transmission rate of the 1978 boarding-school influenza outbreak, 1/(individual·day).
pub const DEFAULT_ALPHA: f64 = 2.18e-3;
/// Recovery rate of the same outbreak, 1/day.
pub const DEFAULT_BETA: f64 = 2.18e-3 * 202.0;
pub const DEFAULT_S0: f64 = 762.0;
pub const DEFAULT_I0: f64 = 1.0;
pub const DEFAULT_R0: f64 = 0.0;
pub const DEFAULT_T0: f64 = 0.0;
/// End of the simulated window, days.
pub const DEFAULT_T_END: f64 = 14.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid initial state: compartment {name} = {value} must be finite and non-negative")]
    InvalidState { name: &'static str, value: f64 },
    #[error("closed-form SI solution undefined for i0 = 0 (c = s0 / (N - s0) divides by zero)")]
    ExactSolutionUndefined,
}

/// Right-hand side of an autonomous or time-dependent system on a
/// fixed-dimension state vector.
///
/// Implemented by the model parameter types and by any closure
/// `Fn(f64, &[f64; D]) -> [f64; D]`.
pub trait OdeSystem<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

impl<F, const D: usize> OdeSystem<D> for F
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D] {
        self(t, y)
    }
}

fn check_rate(name: &'static str, value: f64, allow_zero: bool) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if allow_zero && value < 0.0 {
        return Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be >= 0",
        });
    }
    if !allow_zero && value <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be > 0",
        });
    }
    Ok(())
}

fn check_count(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidState { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiParams {
    alpha: f64,
}

impl SiParams {
    pub fn new(alpha: f64) -> Result<Self, ModelError> {
        check_rate("alpha", alpha, false)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for SiParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    alpha: f64,
    beta: f64,
}

impl SirParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        check_rate("alpha", alpha, false)?;
        check_rate("beta", beta, true)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for SirParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

/// Susceptible and infected counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiState {
    pub s: f64,
    pub i: f64,
}

impl SiState {
    /// Validated constructor for initial conditions.
    pub fn new(s: f64, i: f64) -> Result<Self, ModelError> {
        check_count("S", s)?;
        check_count("I", i)?;
        Ok(Self { s, i })
    }

    pub fn total(&self) -> f64 {
        self.s + self.i
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.s, self.i]
    }

    /// Unchecked: solver output may dip marginally below zero.
    pub fn from_array([s, i]: [f64; 2]) -> Self {
        Self { s, i }
    }
}

impl Default for SiState {
    fn default() -> Self {
        Self {
            s: DEFAULT_S0,
            i: DEFAULT_I0,
        }
    }
}

/// Susceptible, infected and recovered counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirState {
    pub fn new(s: f64, i: f64, r: f64) -> Result<Self, ModelError> {
        check_count("S", s)?;
        check_count("I", i)?;
        check_count("R", r)?;
        Ok(Self { s, i, r })
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.i, self.r]
    }

    pub fn from_array([s, i, r]: [f64; 3]) -> Self {
        Self { s, i, r }
    }
}

impl Default for SirState {
    fn default() -> Self {
        Self {
            s: DEFAULT_S0,
            i: DEFAULT_I0,
            r: DEFAULT_R0,
        }
    }
}

/// Time derivatives of an SI state, individuals/day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiRates {
    pub ds_dt: f64,
    pub di_dt: f64,
}

/// Time derivatives of an SIR state, individuals/day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirRates {
    pub ds_dt: f64,
    pub di_dt: f64,
    pub dr_dt: f64,
}

/// `(-α s i, α s i)`. The components are exact negations of each other.
pub fn si_rhs(params: &SiParams, state: &SiState) -> SiRates {
    let infection = params.alpha * state.s * state.i;
    SiRates {
        ds_dt: -infection,
        di_dt: infection,
    }
}

/// `(-α s i, α s i - β i, β i)`.
pub fn sir_rhs(params: &SirParams, state: &SirState) -> SirRates {
    let infection = params.alpha * state.s * state.i;
    let recovery = params.beta * state.i;
    SirRates {
        ds_dt: -infection,
        di_dt: infection - recovery,
        dr_dt: recovery,
    }
}

impl OdeSystem<2> for SiParams {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
        let r = si_rhs(self, &SiState::from_array(*y));
        [r.ds_dt, r.di_dt]
    }
}

impl OdeSystem<3> for SirParams {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        let r = sir_rhs(self, &SirState::from_array(*y));
        [r.ds_dt, r.di_dt, r.dr_dt]
    }
}

/// Closed-form SI solution at time `t` for the initial state `initial`
/// (taken at `t = 0`).
///
/// With `N = s0 + i0` and `c = s0 / (N - s0)`:
///
/// ```text
/// S(t) = N e^{-αtN} c / (1 + e^{-αtN} c)
/// I(t) = N (N - s0) / (N - s0 + e^{-Nαt} s0)
/// ```
///
/// When `e^{-αtN} c` overflows (large negative `t`) the S quotient is
/// `inf/inf`; S is then taken as `N - I(t)`.
pub fn si_exact(params: &SiParams, initial: &SiState, t: f64) -> Result<SiState, ModelError> {
    if initial.i == 0.0 {
        return Err(ModelError::ExactSolutionUndefined);
    }
    let n = initial.s + initial.i;
    let n_minus_s0 = n - initial.s;
    let c = initial.s / n_minus_s0;
    let decay = (-params.alpha * t * n).exp();
    let i = n * n_minus_s0 / (n_minus_s0 + decay * initial.s);
    let scaled = decay * c;
    let s = if scaled.is_finite() {
        n * scaled / (1.0 + scaled)
    } else {
        n - i
    };
    Ok(SiState { s, i })
}

/// Which compartmental system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Si,
    Sir,
}

impl ModelKind {
    pub fn compartments(self) -> &'static [&'static str] {
        match self {
            ModelKind::Si => &["S", "I"],
            ModelKind::Sir => &["S", "I", "R"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Si => "si",
            ModelKind::Sir => "sir",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(ModelKind::Si),
            "sir" => Ok(ModelKind::Sir),
            other => Err(format!("unknown model '{other}' (expected si or sir)")),
        }
    }
}

/// A model together with its rate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Si(SiParams),
    Sir(SirParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Si(_) => ModelKind::Si,
            ModelSpec::Sir(_) => ModelKind::Sir,
        }
    }
}

/// A fully specified initial value problem (interval supplied separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Problem {
    Si { params: SiParams, initial: SiState },
    Sir { params: SirParams, initial: SirState },
}

impl Problem {
    /// SI outbreak with the boarding-school parameters.
    pub fn default_si() -> Self {
        Problem::Si {
            params: SiParams::default(),
            initial: SiState::default(),
        }
    }

    /// SIR outbreak with the boarding-school parameters.
    pub fn default_sir() -> Self {
        Problem::Sir {
            params: SirParams::default(),
            initial: SirState::default(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Problem::Si { .. } => ModelKind::Si,
            Problem::Sir { .. } => ModelKind::Sir,
        }
    }

    pub fn model(&self) -> ModelSpec {
        match *self {
            Problem::Si { params, .. } => ModelSpec::Si(params),
            Problem::Sir { params, .. } => ModelSpec::Sir(params),
        }
    }

    /// Total population `N` at the initial time.
    pub fn population(&self) -> f64 {
        match self {
            Problem::Si { initial, .. } => initial.total(),
            Problem::Sir { initial, .. } => initial.total(),
        }
    }
}
