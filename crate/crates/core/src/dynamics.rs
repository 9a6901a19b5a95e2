//! Two-qubit state dynamics under the DM/XY propagator: concurrence
//! trajectories, the interrupted-evolution preservation protocol, and the
//! average relative deviation between trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::model::{check_gamma, tau_period, TargetFamily};
use crate::quantum::{concurrence_pure, pauli, Qubit, StateVec4};
use crate::sequence::decomposition_full;

/// Smallest reference value accepted by [`aed`].
pub const AED_REFERENCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Matrix exponential of the Hamiltonian.
    Exact,
    /// Compiled pulse sequence from the piecewise decomposition.
    Decomposition,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Decomposition => "decomposition",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Method::Exact),
            "decomposition" => Ok(Method::Decomposition),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// U(γ, τ) realized by `method`.
pub fn evolution(gamma: f64, tau: f64, method: Method) -> Result<Mat4> {
    check_gamma(gamma)?;
    match method {
        Method::Exact => Ok(TargetFamily::DmXy.unitary(gamma, tau)),
        Method::Decomposition => decomposition_full(gamma, tau)?.compile(0.0, 0.0),
    }
}

pub fn evolve_state(psi0: &StateVec4, gamma: f64, tau: f64, method: Method) -> Result<StateVec4> {
    Ok(psi0.evolve(&evolution(gamma, tau, method)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub concurrence: f64,
    pub state: StateVec4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub gamma: f64,
    pub method: Method,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn concurrences(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.concurrence).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }
}

fn point(tau: f64, state: StateVec4) -> TrajectoryPoint {
    TrajectoryPoint {
        tau,
        concurrence: concurrence_pure(&state).clamp(0.0, 1.0),
        state,
    }
}

pub fn concurrence_trajectory(
    psi0: &StateVec4,
    gamma: f64,
    taus: &[f64],
    method: Method,
) -> Result<Trajectory> {
    if !taus.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidConfig(
            "tau list must be strictly increasing".into(),
        ));
    }
    let points = taus
        .iter()
        .map(|&t| Ok(point(t, evolve_state(psi0, gamma, t, method)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        gamma,
        method,
        points,
    })
}

/// `n` points τ_i = i·P/n covering one propagator period P.
pub fn period_taus(gamma: f64, n: usize) -> Result<Vec<f64>> {
    let p = tau_period(gamma)?;
    Ok((0..n).map(|i| i as f64 * p / n as f64).collect())
}

/// Interrupting operator I ⊗ σz. It anticommutes with the DM/XY Hamiltonian,
/// so O·U·O = U†.
pub fn interrupt_operator() -> Mat4 {
    Qubit::Two.embed(&pauli::z())
}

/// Alternate U(γ, seg_tau) and O for `n_cycles` full O·U·O·U blocks.
///
/// One point is recorded at τ = 0 and one after every U·O half-cycle, at the
/// accumulated evolution time. O is local, so recording before or after it
/// gives the same concurrence; even-numbered points close a full block.
pub fn preservation_trajectory(
    psi0: &StateVec4,
    gamma: f64,
    seg_tau: f64,
    n_cycles: usize,
    method: Method,
) -> Result<Trajectory> {
    if !(seg_tau > 0.0 && seg_tau.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "segment length must be > 0, got {seg_tau}"
        )));
    }
    let u = evolution(gamma, seg_tau, method)?;
    let o = interrupt_operator();
    let mut state = *psi0;
    let mut points = vec![point(0.0, state)];
    for half in 1..=2 * n_cycles {
        state = state.evolve(&u).evolve(&o);
        points.push(point(half as f64 * seg_tau, state));
    }
    Ok(Trajectory {
        gamma,
        method,
        points,
    })
}

/// Closed-form singlet concurrence under the DM/XY propagator.
pub fn singlet_concurrence(gamma: f64, tau: f64) -> f64 {
    let s2 = gamma * gamma / (1.0 + gamma * gamma);
    let w = (1.0 + gamma * gamma).sqrt();
    (1.0 - s2 * (w * tau).sin().powi(2)).max(0.0).sqrt()
}

/// Minimum and maximum concurrence of `psi0` over one period: a dense scan
/// followed by golden-section refinement around the best samples.
pub fn concurrence_extrema(
    psi0: &StateVec4,
    gamma: f64,
    method: Method,
    samples: usize,
) -> Result<(f64, f64)> {
    let p = tau_period(gamma)?;
    let c = |t: f64| -> Result<f64> { Ok(concurrence_pure(&evolve_state(psi0, gamma, t, method)?)) };
    let h = p / samples.max(3) as f64;
    let grid = (0..=samples.max(3))
        .map(|i| Ok((i as f64 * h, c(i as f64 * h)?)))
        .collect::<Result<Vec<_>>>()?;
    let refine = |sign: f64| -> Result<f64> {
        let (t0, v0) = grid
            .iter()
            .copied()
            .min_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
            .expect("non-empty grid");
        let (mut a, mut b) = (t0 - h, t0 + h);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (sign * c(x1)?, sign * c(x2)?);
        for _ in 0..100 {
            if b - a < 1e-12 {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = sign * c(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = sign * c(x2)?;
            }
        }
        Ok(sign * (sign * v0).min(f1.min(f2)))
    };
    Ok((refine(1.0)?, refine(-1.0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AedResult {
    pub n: usize,
    pub value_percent: f64,
    /// |e − t| / |t| per point.
    pub per_point: Vec<f64>,
}

/// Average relative deviation in percent: 100/n · Σ |e_i − t_i| / |t_i|.
pub fn aed(experimental: &[f64], theoretical: &[f64]) -> Result<AedResult> {
    if experimental.len() != theoretical.len() {
        return Err(Error::LengthMismatch(experimental.len(), theoretical.len()));
    }
    if theoretical.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let per_point = experimental
        .iter()
        .zip(theoretical)
        .enumerate()
        .map(|(i, (&e, &t))| {
            if t.abs() < AED_REFERENCE_FLOOR {
                Err(Error::DegenerateReference { index: i, value: t })
            } else {
                Ok((e - t).abs() / t.abs())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_point.len();
    Ok(AedResult {
        n,
        value_percent: 100.0 / n as f64 * per_point.iter().sum::<f64>(),
        per_point,
    })
}

#[derive(Serialize)]
struct AedReport<'a> {
    schema: u32,
    #[serde(flatten)]
    result: &'a AedResult,
}

pub fn aed_json(result: &AedResult) -> String {
    serde_json::to_string_pretty(&AedReport { schema: 1, result }).expect("plain struct")
}

pub fn write_trajectories<W: Write>(writer: W, trajectories: &[&Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tau", "concurrence", "method", "gamma"])?;
    for t in trajectories {
        for p in &t.points {
            w.write_record([
                p.tau.to_string(),
                p.concurrence.to_string(),
                t.method.name().to_owned(),
                t.gamma.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gate_fidelity;

    #[test]
    fn zero_time_is_identity() {
        let psi = StateVec4::singlet();
        for m in [Method::Exact, Method::Decomposition] {
            let out = evolve_state(&psi, 0.4, 0.0, m).unwrap();
            assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-3);
        }
        let out = evolve_state(&psi, 0.4, 0.0, Method::Exact).unwrap();
        assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singlet_is_stationary_without_dm() {
        let psi = StateVec4::singlet();
        for tau in [0.3, 2.0, 9.1] {
            let out = evolve_state(&psi, 0.0, tau, Method::Exact).unwrap();
            assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-12);
            assert!((concurrence_pure(&out) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn methods_agree_on_states() {
        let psi = StateVec4::singlet();
        let e = evolve_state(&psi, 0.66, 3.0, Method::Exact).unwrap();
        let d = evolve_state(&psi, 0.66, 3.0, Method::Decomposition).unwrap();
        assert!(e.inner(&d).norm() >= 0.999);
        assert!((d.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_numeric() {
        let psi = StateVec4::singlet();
        let taus: Vec<f64> = (0..40).map(|i| 0.37 * i as f64).collect();
        let tr = concurrence_trajectory(&psi, 0.8, &taus, Method::Exact).unwrap();
        for p in &tr.points {
            assert!((p.concurrence - singlet_concurrence(0.8, p.tau)).abs() < 1e-10);
        }
    }

    #[test]
    fn product_state_stays_unentangled() {
        let psi = StateVec4::basis(0);
        let taus: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let tr = concurrence_trajectory(&psi, 0.7, &taus, Method::Exact).unwrap();
        assert!(tr.concurrences().iter().all(|&c| c < 1e-10));
        assert!(concurrence_trajectory(&psi, 0.7, &[1.0, 1.0], Method::Exact).is_err());
    }

    #[test]
    fn extrema_of_singlet() {
        let (lo, hi) = concurrence_extrema(&StateVec4::singlet(), 0.5, Method::Exact, 400).unwrap();
        assert!((lo - 1.0 / 1.25f64.sqrt()).abs() < 1e-9);
        assert!((hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn preservation_returns_to_start() {
        let psi = StateVec4::singlet();
        let tr = preservation_trajectory(&psi, 0.66, 1.0, 5, Method::Exact).unwrap();
        assert_eq!(tr.points.len(), 11);
        for p in tr.points.iter().step_by(2) {
            assert!((p.concurrence - 1.0).abs() < 1e-9);
            assert!((p.state.inner(&psi).norm() - 1.0).abs() < 1e-10);
        }
        let tr = preservation_trajectory(&psi, 0.66, 1.0, 0, Method::Exact).unwrap();
        assert_eq!(tr.points.len(), 1);
    }

    #[test]
    fn interrupt_flips_the_hamiltonian() {
        let o = interrupt_operator();
        let u = TargetFamily::DmXy.unitary(0.99, 2.5);
        let block = o * u * o * u;
        assert!(1.0 - gate_fidelity(&block, &Mat4::identity()) <= 1e-10);
    }

    #[test]
    fn local_interrupt_keeps_concurrence() {
        let psi = evolve_state(&StateVec4::singlet(), 0.5, 1.3, Method::Exact).unwrap();
        let flipped = psi.evolve(&interrupt_operator());
        assert!((concurrence_pure(&psi) - concurrence_pure(&flipped)).abs() < 1e-12);
    }

    #[test]
    fn aed_examples() {
        let t = [0.5, 0.8, 1.0];
        assert_eq!(aed(&t, &t).unwrap().value_percent, 0.0);
        let e: Vec<f64> = t.iter().map(|x| 1.02 * x).collect();
        assert!((aed(&e, &t).unwrap().value_percent - 2.0).abs() < 1e-12);
        assert!(matches!(
            aed(&[1.0], &[1e-9]),
            Err(Error::DegenerateReference { index: 0, .. })
        ));
        assert!(matches!(
            aed(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(aed(&[], &[]).is_err());
        let json: serde_json::Value = serde_json::from_str(&aed_json(&aed(&e, &t).unwrap())).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(json["n"], 3);
        assert_eq!(json["per_point"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn trajectory_csv() {
        let tr = concurrence_trajectory(&StateVec4::singlet(), 0.33, &[0.0, 1.0], Method::Exact).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &[&tr]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tau,concurrence,method,gamma"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!((row[0], row[2], row[3]), ("0", "exact", "0.33"));
        assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lines.count(), 1);
    }
}
