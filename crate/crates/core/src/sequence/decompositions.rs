//! Published pulse decompositions of the DM/XY propagator, the piecewise
//! dispatch over all γ ≥ 0, and ZZ term isolation from a system Hamiltonian.

use super::{AngleExpr, PulseElement, PulseSequence, Source, SystemKind};
use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::model::{
    check_gamma, find_period_of, tau_period, HamiltonianKind, PeriodSearch, TargetFamily, PAULI_TIME_PER_TAU,
};
use crate::quantum::Qubit;

use AngleExpr::{Gamma, Pi, Tau};

fn c(x: f64) -> AngleExpr {
    AngleExpr::c(x)
}

fn half_pi() -> AngleExpr {
    Pi / c(2.0)
}

/// (0.8423 − 0.3455 cos(1.117γ) + 0.01806 sin(1.117γ)) τ
pub fn a_theta1() -> AngleExpr {
    AngleExpr::trig_gamma(0.8423, -0.3455, 1.117, 0.01806) * Tau
}

/// 1.345 e^{−0.8731γ} + 1.796
pub fn a_theta2() -> AngleExpr {
    c(1.345) * (c(-0.8731) * Gamma).exp() + c(1.796)
}

/// Shared τ-linear angle of decomposition B.
pub fn b_theta() -> AngleExpr {
    AngleExpr::exp2(0.09812, -2.42, 0.4023, 0.5524) * Tau
}

// 3.142 is the published rounded constant, not π
#[allow(clippy::approx_constant)]
pub fn b_theta1() -> AngleExpr {
    -b_theta() + c(3.142)
}

pub fn b_theta2() -> AngleExpr {
    b_theta() - AngleExpr::exp2(1.242, -0.9617, 0.3546, -0.1145)
}

pub fn b_theta3() -> AngleExpr {
    AngleExpr::exp2(1.259, -0.957, 3.479, -0.0087)
}

pub fn b_theta4() -> AngleExpr {
    AngleExpr::exp2(1.256, -0.959, 1.912, -0.0166)
}

/// Nine-element skeleton for the γ ≤ 1 family with free angles θ1, θ2.
pub fn a_template(theta1: AngleExpr, theta2: AngleExpr) -> Vec<PulseElement> {
    let (q1, q2) = (Qubit::One, Qubit::Two);
    vec![
        PulseElement::sqr(q2, half_pi(), -half_pi()),
        PulseElement::sqr(q1, half_pi(), theta2.clone()),
        PulseElement::sqr(q2, Pi, Pi),
        PulseElement::zz(Pi / c(4.0)),
        PulseElement::sqr(q1, theta1.clone(), theta2.clone() + half_pi()),
        PulseElement::sqr(q2, Pi - theta1, c(0.0)),
        PulseElement::zz(Pi / c(4.0)),
        PulseElement::sqr(q1, half_pi(), theta2 + Pi),
        PulseElement::sqr(q2, half_pi(), half_pi()),
    ]
}

/// Eight-element skeleton for the primed family. `theta23` is the combined
/// θ2 + θ3 angle of the fourth element.
pub fn b_template(
    theta1: AngleExpr,
    theta23: AngleExpr,
    theta3: AngleExpr,
    theta4: AngleExpr,
) -> Vec<PulseElement> {
    let (q1, q2) = (Qubit::One, Qubit::Two);
    vec![
        PulseElement::sqr(q1, half_pi(), half_pi()),
        PulseElement::sqr(q2, half_pi(), theta3.clone()),
        PulseElement::zz(Pi / c(4.0)),
        PulseElement::sqr(q1, theta23, c(0.0)),
        PulseElement::sqr(q2, theta1, theta4),
        PulseElement::zz(Pi / c(4.0)),
        PulseElement::sqr(q1, half_pi(), half_pi()),
        PulseElement::sqr(q2, half_pi(), theta3),
    ]
}

/// Symbolic decomposition A in `gamma` and `tau`.
pub fn decomposition_a() -> PulseSequence {
    PulseSequence::new(
        "decomposition-a",
        Source::Published,
        a_template(a_theta1(), a_theta2()),
    )
}

/// Symbolic decomposition B in `gamma` (= γ′) and `tau`.
pub fn decomposition_b() -> PulseSequence {
    PulseSequence::new(
        "decomposition-b",
        Source::Published,
        b_template(b_theta1(), b_theta2() + b_theta3(), b_theta3(), b_theta4()),
    )
}

fn check_unit_range(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange { gamma })
    }
}

/// Decomposition A bound to (γ, τ); γ must lie in [0, 1].
pub fn decomposition_a_at(gamma: f64, tau: f64) -> Result<PulseSequence> {
    check_unit_range(gamma)?;
    Ok(decomposition_a().bind(gamma, tau))
}

/// Decomposition B bound to (γ′, τ); γ′ must lie in [0, 1].
pub fn decomposition_b_at(gamma_prime: f64, tau: f64) -> Result<PulseSequence> {
    check_unit_range(gamma_prime)?;
    Ok(decomposition_b().bind(gamma_prime, tau))
}

/// Period of the primed propagator in sequence `tau`.
fn primed_tau_period(gamma_prime: f64) -> Result<f64> {
    let p = find_period_of(
        HamiltonianKind::DmXyPrimed { gamma_prime },
        PeriodSearch::default(),
    )?;
    Ok(p / PAULI_TIME_PER_TAU)
}

/// Sequence realizing the DM/XY propagator at any γ ≥ 0.
///
/// For γ ≤ 1 decomposition A is used; above, the Hamiltonian is rescaled by
/// 1/γ into the primed family and decomposition B runs at (1/γ, γτ). Time is
/// folded into one period first so the τ-linear angles stay in their
/// fitted range.
pub fn decomposition_full(gamma: f64, tau: f64) -> Result<PulseSequence> {
    check_gamma(gamma)?;
    if !tau.is_finite() {
        return Err(Error::EvalError(format!("tau = {tau}")));
    }
    let mut seq = if gamma <= 1.0 {
        let folded = tau.rem_euclid(tau_period(gamma)?);
        decomposition_a_at(gamma, folded)?
    } else {
        let gp = 1.0 / gamma;
        let folded = (gamma * tau).rem_euclid(primed_tau_period(gp)?);
        decomposition_b_at(gp, folded)?
    };
    seq.name = "decomposition-full".to_owned();
    Ok(seq)
}

/// Built-in decompositions selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    A,
    B,
    Full,
}

impl Decomposition {
    pub fn sequence_at(self, gamma: f64, tau: f64) -> Result<PulseSequence> {
        match self {
            Decomposition::A => decomposition_a_at(gamma, tau),
            Decomposition::B => decomposition_b_at(gamma, tau),
            Decomposition::Full => decomposition_full(gamma, tau),
        }
    }

    pub fn target_family(self) -> TargetFamily {
        match self {
            Decomposition::B => TargetFamily::DmXyPrimed,
            _ => TargetFamily::DmXy,
        }
    }

    pub fn target(self, gamma: f64, tau: f64) -> Mat4 {
        self.target_family().unitary(gamma, tau)
    }
}

impl std::str::FromStr for Decomposition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Decomposition::A),
            "b" => Ok(Decomposition::B),
            "full" => Ok(Decomposition::Full),
            other => Err(format!("unknown decomposition '{other}' (expected A, B or full)")),
        }
    }
}

/// ZZ angle produced by [`isolate_zz`]: the sequence equals `uzz(angle)` up
/// to global phase.
pub fn isolated_zz_angle(system: HamiltonianKind, t: f64) -> Result<f64> {
    match system {
        HamiltonianKind::Zz { j_zz } => Ok(2.0 * j_zz * t),
        HamiltonianKind::Xyz { j } => Ok(2.0 * j * t),
        _ => Err(Error::UnsupportedSystem),
    }
}

/// Refocus everything but ZZ out of free evolution by conjugating with a π
/// rotation about Z on qubit 1: `Z1(π) · U(t) · Z1(π) · U(t)`.
pub fn isolate_zz(system: HamiltonianKind, t: f64) -> Result<PulseSequence> {
    let (kind, j) = match system {
        HamiltonianKind::Zz { j_zz } => (SystemKind::Zz, j_zz),
        HamiltonianKind::Xyz { j } => (SystemKind::Xyz, j),
        _ => return Err(Error::UnsupportedSystem),
    };
    let evolve = || PulseElement::SysEvolve {
        system: kind,
        j,
        t: c(t),
    };
    Ok(PulseSequence::new(
        "zz-isolation",
        Source::User,
        vec![
            PulseElement::zrot(Qubit::One, Pi),
            evolve(),
            PulseElement::zrot(Qubit::One, Pi),
            evolve(),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{gate_fidelity, uzz};
    use crate::sequence::{parse_sequence, write_sequence, EvalCtx};
    use std::f64::consts::PI;

    fn fid(d: Decomposition, g: f64, t: f64) -> f64 {
        gate_fidelity(
            &d.sequence_at(g, t).unwrap().compile(0.0, 0.0).unwrap(),
            &d.target(g, t),
        )
    }

    #[test]
    fn decomposition_a_examples() {
        assert!(fid(Decomposition::A, 0.5, 5.0) >= 0.999);
        let t2 = a_theta2().eval(&EvalCtx::new(0.0, 0.0));
        assert!((t2 - (1.345 + 1.796)).abs() < 1e-12);
    }

    #[test]
    fn decomposition_b_example() {
        assert!(fid(Decomposition::B, 0.5, 3.0) >= 0.999);
    }

    #[test]
    fn full_dispatch_above_one() {
        assert!(fid(Decomposition::Full, 2.0, 1.0) >= 0.999);
        // a long time exercises the folding
        assert!(fid(Decomposition::Full, 0.4, 137.0) >= 0.999);
        assert!(fid(Decomposition::Full, 3.0, -20.0) >= 0.999);
    }

    #[test]
    fn structure() {
        let a = decomposition_a();
        assert_eq!((a.len(), a.count_zz()), (9, 2));
        assert_eq!((a.count_sqr(Qubit::One), a.count_sqr(Qubit::Two)), (3, 4));
        let b = decomposition_b();
        assert_eq!((b.len(), b.count_zz()), (8, 2));
        assert_eq!((b.count_sqr(Qubit::One), b.count_sqr(Qubit::Two)), (3, 3));
        assert!(matches!(
            &a.elements[0],
            PulseElement::Sqr {
                qubit: Qubit::Two,
                ..
            }
        ));
    }

    #[test]
    fn range_errors() {
        assert!(matches!(
            decomposition_a_at(1.5, 0.0),
            Err(Error::GammaOutOfRange { .. })
        ));
        assert!(matches!(
            decomposition_b_at(-0.1, 0.0),
            Err(Error::GammaOutOfRange { .. })
        ));
        assert!(matches!(
            decomposition_full(-1.0, 0.0),
            Err(Error::NegativeGamma(_))
        ));
    }

    #[test]
    fn text_round_trip_preserves_compilation() {
        let seq = decomposition_a_at(0.3, 2.0).unwrap();
        let back = parse_sequence(&write_sequence(&seq)).unwrap();
        assert_eq!(back, seq);
        let (u, v) = (seq.compile(0.0, 0.0).unwrap(), back.compile(0.0, 0.0).unwrap());
        assert_eq!(u.max_abs_diff(&v), 0.0);
        let sym = decomposition_b();
        assert_eq!(parse_sequence(&write_sequence(&sym)).unwrap(), sym);
    }

    #[test]
    fn zz_isolation() {
        let seq = isolate_zz(HamiltonianKind::Xyz { j: 1.0 }, PI / 8.0).unwrap();
        let u = seq.compile(0.0, 0.0).unwrap();
        assert!(1.0 - gate_fidelity(&u, &uzz(PI / 4.0)) <= 1e-10);
        let seq = isolate_zz(HamiltonianKind::Zz { j_zz: 0.7 }, 0.3).unwrap();
        let angle = isolated_zz_angle(HamiltonianKind::Zz { j_zz: 0.7 }, 0.3).unwrap();
        assert!(1.0 - gate_fidelity(&seq.compile(0.0, 0.0).unwrap(), &uzz(angle)) <= 1e-10);
        assert_eq!(
            isolate_zz(HamiltonianKind::DmXy { gamma: 0.2 }, 1.0).unwrap_err(),
            Error::UnsupportedSystem
        );
    }
}
