//! In-scope Hamiltonians, their propagators, and the propagator period.
//!
//! `hamiltonian` and `propagator` use Pauli operators directly, so
//! `propagator(kind, t) = exp(−i H t)` with `H` built from σ's.
//!
//! The pulse-sequence layer measures time in the dimensionless `tau` of the
//! published decompositions, where the coupling is written with spin-½
//! operators S = σ/2. Bilinear terms then carry a factor 1/4, so a sequence
//! evaluated at `tau` realizes `propagator(kind, tau / 4)`. [`TargetFamily`]
//! is the single place where that conversion happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, expm_hermitian, Mat4, C64};
use crate::quantum::pauli;

/// Pauli-normalized time per unit of sequence `tau`.
pub const PAULI_TIME_PER_TAU: f64 = 0.25;

/// Relative DM/XY strength γ = D/J and dimensionless time τ = J·t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub gamma: f64,
    pub tau: f64,
}

impl EvolutionParams {
    pub fn new(gamma: f64, tau: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !tau.is_finite() {
            return Err(Error::EvalError(format!("tau = {tau}")));
        }
        Ok(Self { gamma, tau })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeGamma(gamma))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// (XX + YY) + γ (XY − YX)
    DmXy { gamma: f64 },
    /// γ′ (XX + YY) + (XY − YX)
    DmXyPrimed { gamma_prime: f64 },
    /// j_zz · ZZ
    Zz { j_zz: f64 },
    /// j · (XX + YY + ZZ)
    Xyz { j: f64 },
}

fn exchange_xy() -> Mat4 {
    pauli::pair('X', 'X') + pauli::pair('Y', 'Y')
}

fn dm_term() -> Mat4 {
    pauli::pair('X', 'Y') - pauli::pair('Y', 'X')
}

pub fn hamiltonian(kind: HamiltonianKind) -> Mat4 {
    match kind {
        HamiltonianKind::DmXy { gamma } => exchange_xy() + gamma * dm_term(),
        HamiltonianKind::DmXyPrimed { gamma_prime } => gamma_prime * exchange_xy() + dm_term(),
        HamiltonianKind::Zz { j_zz } => j_zz * pauli::pair('Z', 'Z'),
        HamiltonianKind::Xyz { j } => j * (exchange_xy() + pauli::pair('Z', 'Z')),
    }
}

/// exp(−i · hamiltonian(kind) · t), `t` in Pauli-normalized units.
pub fn propagator(kind: HamiltonianKind, t: f64) -> Mat4 {
    expm_hermitian(&hamiltonian(kind), t).expect("model Hamiltonians are Hermitian")
}

/// The two propagator families the published decompositions target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFamily {
    /// exp(−iτ/4 [(XX+YY) + γ(XY−YX)])
    DmXy,
    /// exp(−iτ/4 [γ(XX+YY) + (XY−YX)])
    DmXyPrimed,
}

impl TargetFamily {
    pub fn kind(self, gamma: f64) -> HamiltonianKind {
        match self {
            TargetFamily::DmXy => HamiltonianKind::DmXy { gamma },
            TargetFamily::DmXyPrimed => HamiltonianKind::DmXyPrimed { gamma_prime: gamma },
        }
    }

    /// Target unitary at sequence time `tau`.
    pub fn unitary(self, gamma: f64, tau: f64) -> Mat4 {
        propagator(self.kind(gamma), tau * PAULI_TIME_PER_TAU)
    }
}

/// Cubic P(γ) = c3 γ³ + c2 γ² + c1 γ + c0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPoly {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl PeriodPoly {
    /// Published fit of the period in sequence `tau`.
    pub const PUBLISHED: PeriodPoly = PeriodPoly {
        c3: 3.008,
        c2: -6.627,
        c1: -0.1498,
        c0: 12.59,
    };

    pub fn eval(&self, gamma: f64) -> f64 {
        ((self.c3 * gamma + self.c2) * gamma + self.c1) * gamma + self.c0
    }
}

pub fn period_fit_eval(p: &PeriodPoly, gamma: f64) -> f64 {
    p.eval(gamma)
}

/// Scan settings for [`find_period_of`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodSearch {
    /// Phase-invariant distance 1 − F accepted as "equal".
    pub tol: f64,
    /// Largest period considered.
    pub bound: f64,
    /// Coarse scan step.
    pub step: f64,
}

impl Default for PeriodSearch {
    fn default() -> Self {
        Self {
            tol: DEFAULT_PERIOD_TOL,
            bound: 20.0,
            step: 1e-3,
        }
    }
}

pub const DEFAULT_PERIOD_TOL: f64 = 1e-10;

/// Smallest P > 0 (Pauli units) with exp(−iH(τ+P)) = e^{iα} exp(−iHτ) for
/// the DM/XY Hamiltonian at `gamma`.
pub fn find_period(gamma: f64, tol: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("period tolerance {tol}")));
    }
    find_period_of(
        HamiltonianKind::DmXy { gamma },
        PeriodSearch {
            tol,
            ..Default::default()
        },
    )
    .map_err(|e| match e {
        Error::NoPeriodFound { bound, .. } => Error::NoPeriodFound { gamma, bound },
        other => other,
    })
}

/// Period of the DM/XY propagator in sequence `tau` (4× the Pauli period).
pub fn tau_period(gamma: f64) -> Result<f64> {
    Ok(find_period(gamma, DEFAULT_PERIOD_TOL)? / PAULI_TIME_PER_TAU)
}

/// Generic period search.
///
/// Because U(τ)†U(τ+P) = U(P), the distance d(P) = 1 − |Tr U(P)|/4 does not
/// depend on τ. The spectrum is computed once; d is scanned on a grid of
/// `step`, and each local minimum is refined by bisection on the sign of
/// d/dP |Tr U(P)|² until the bracket collapses.
pub fn find_period_of(kind: HamiltonianKind, search: PeriodSearch) -> Result<f64> {
    let spectrum = eigh(&hamiltonian(kind))?.values;
    let trace = |p: f64| -> C64 { spectrum.iter().map(|&l| C64::from_polar(1.0, -l * p)).sum() };
    let distance = |p: f64| 1.0 - trace(p).norm() / 4.0;
    // d/dP |S|² = 2 Re(S* S′), S′ = Σ −iλ e^{−iλP}; positive while approaching a peak.
    let slope = |p: f64| -> f64 {
        let s = trace(p);
        let ds: C64 = spectrum
            .iter()
            .map(|&l| C64::new(0.0, -l) * C64::from_polar(1.0, -l * p))
            .sum();
        2.0 * (s.conj() * ds).re
    };

    let gamma = match kind {
        HamiltonianKind::DmXy { gamma } => gamma,
        HamiltonianKind::DmXyPrimed { gamma_prime } => gamma_prime,
        _ => f64::NAN,
    };
    let steps = (search.bound / search.step).ceil() as usize;
    let mut prev = distance(0.0);
    let mut cur = distance(search.step);
    for i in 1..steps {
        let p = i as f64 * search.step;
        let next = distance(p + search.step);
        if cur <= prev && cur <= next {
            let (mut lo, mut hi) = (p - search.step, p + search.step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let best = 0.5 * (lo + hi);
            if distance(best) <= search.tol {
                return Ok(best);
            }
        }
        prev = cur;
        cur = next;
    }
    Err(Error::NoPeriodFound {
        gamma,
        bound: search.bound,
    })
}
