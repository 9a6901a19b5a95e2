//! Fidelity profile optimization: fidelity over a (γ, τ) grid and a
//! real-coded GA that searches skeleton angles against it.

mod ga;
mod pointwise;
mod surface;

pub use ga::{evolve, evolve_objective, GAConfig, GenStats, GeneDomain, Objective, RunResult};
pub use pointwise::{optimize_pointwise, PointwiseRow, PointwiseTable};
pub use surface::{optimize_surface, SurfaceSlot, SurfaceSolution};

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::model::TargetFamily;
use crate::quantum::gate_fidelity;
use crate::sequence::{a_template, b_template, AngleExpr, Decomposition, PulseSequence, Source};

/// Minimum fidelity below which [`fitness`] applies its penalty.
pub const PENALTY_FLOOR: f64 = 0.9999;
pub const PENALTY_WEIGHT: f64 = 10.0;

/// Tensor grid of (γ, τ) nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub gammas: Vec<f64>,
    pub taus: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl Grid {
    pub fn new(gammas: Vec<f64>, taus: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || taus.is_empty() {
            return Err(Error::InvalidConfig("grid axes must be non-empty".into()));
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if !sorted(&gammas) || !sorted(&taus) {
            return Err(Error::InvalidConfig(
                "grid axes must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { gammas, taus })
    }

    /// `n_gamma` × `n_tau` uniform nodes including both ends of each range.
    pub fn uniform(gamma: (f64, f64), n_gamma: usize, tau: (f64, f64), n_tau: usize) -> Result<Self> {
        Self::new(linspace(gamma.0, gamma.1, n_gamma), linspace(tau.0, tau.1, n_tau))
    }

    /// 31×31 over γ ∈ [0, 1], τ ∈ [0, 15].
    pub fn standard() -> Self {
        Self::uniform((0.0, 1.0), 31, (0.0, 15.0), 31).expect("static grid")
    }

    pub fn single(gamma: f64, tau: f64) -> Self {
        Self {
            gammas: vec![gamma],
            taus: vec![tau],
        }
    }

    pub fn len(&self) -> usize {
        self.gammas.len() * self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in γ-major order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.gammas
            .iter()
            .flat_map(|&g| self.taus.iter().map(move |&t| (g, t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityProfile {
    pub gamma_axis: Vec<f64>,
    pub tau_axis: Vec<f64>,
    /// `values[i][j]` at (gamma_axis[i], tau_axis[j]).
    pub values: Vec<Vec<f64>>,
    pub min: f64,
    pub mean: f64,
    pub argmin: (f64, f64),
}

impl FidelityProfile {
    fn from_values(grid: &Grid, flat: Vec<f64>) -> Self {
        let nt = grid.taus.len();
        let mut min = f64::INFINITY;
        let mut argmin = (grid.gammas[0], grid.taus[0]);
        for (k, &v) in flat.iter().enumerate() {
            // NaN from a failed compile counts as the worst node
            let v = if v.is_nan() { 0.0 } else { v };
            if v < min {
                min = v;
                argmin = (grid.gammas[k / nt], grid.taus[k % nt]);
            }
        }
        let mean = flat
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { *v })
            .sum::<f64>()
            / flat.len() as f64;
        Self {
            gamma_axis: grid.gammas.clone(),
            tau_axis: grid.taus.clone(),
            values: flat.chunks(nt).map(<[f64]>::to_vec).collect(),
            min,
            mean,
            argmin,
        }
    }

    /// (γ, τ, fidelity) rows in γ-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.gamma_axis.iter().enumerate().flat_map(move |(i, &g)| {
            self.tau_axis
                .iter()
                .enumerate()
                .map(move |(j, &t)| (g, t, self.values[i][j]))
        })
    }
}

/// Fidelity of `realize(γ, τ)` against `target(γ, τ)` at every node.
/// Nodes whose realization fails score 0.
pub fn profile_with<R, T>(grid: &Grid, realize: R, target: T) -> FidelityProfile
where
    R: Fn(f64, f64) -> Result<Mat4> + Sync,
    T: Fn(f64, f64) -> Mat4 + Sync,
{
    let flat: Vec<f64> = grid
        .nodes()
        .par_iter()
        .map(|&(g, t)| match realize(g, t) {
            Ok(u) => gate_fidelity(&u, &target(g, t)),
            Err(_) => 0.0,
        })
        .collect();
    FidelityProfile::from_values(grid, flat)
}

/// Profile of a sequence symbolic in `gamma`/`tau`.
pub fn profile(seq: &PulseSequence, family: TargetFamily, grid: &Grid) -> FidelityProfile {
    profile_with(grid, |g, t| seq.compile(g, t), |g, t| family.unitary(g, t))
}

pub fn profile_decomposition(d: Decomposition, grid: &Grid) -> FidelityProfile {
    profile_with(
        grid,
        |g, t| d.sequence_at(g, t)?.compile(0.0, 0.0),
        |g, t| d.target(g, t),
    )
}

/// Profile of a skeleton with fixed genes.
pub fn profile_genes(skeleton: &Skeleton, genes: &[f64], grid: &Grid) -> FidelityProfile {
    profile_with(
        grid,
        |g, t| skeleton.template.compile_with_genes(g, t, genes),
        |g, t| skeleton.family.unitary(g, t),
    )
}

/// Mean fidelity minus a penalty when the minimum drops below
/// [`PENALTY_FLOOR`].
pub fn fitness_of_profile(p: &FidelityProfile) -> f64 {
    p.mean - PENALTY_WEIGHT * (PENALTY_FLOOR - p.min).max(0.0)
}

pub fn fitness(genes: &[f64], skeleton: &Skeleton, grid: &Grid) -> f64 {
    fitness_of_profile(&profile_genes(skeleton, genes, grid))
}

/// Discrete symmetries of a skeleton's gene space: every gene is periodic,
/// and an optional involution maps gene i to `sign[i]·g + offset[i]`.
/// Both leave the compiled unitary unchanged up to global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetry {
    pub periods: Vec<f64>,
    pub involution: Option<(Vec<f64>, Vec<f64>)>,
}

/// Sequence template whose free angles are gene slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub name: String,
    pub template: PulseSequence,
    pub family: TargetFamily,
    pub slot_names: Vec<String>,
    pub symmetry: Symmetry,
}

impl Skeleton {
    pub fn new(
        name: impl Into<String>,
        template: PulseSequence,
        family: TargetFamily,
        slot_names: Vec<String>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        let n = template.gene_count();
        if slot_names.len() != n || symmetry.periods.len() != n {
            return Err(Error::LengthMismatch(slot_names.len(), n));
        }
        if let Some((s, o)) = &symmetry.involution {
            if s.len() != n || o.len() != n {
                return Err(Error::LengthMismatch(s.len(), n));
            }
        }
        Ok(Self {
            name: name.into(),
            template,
            family,
            slot_names,
            symmetry,
        })
    }

    /// Nine-element skeleton of decomposition A with θ1 = g0, θ2 = g1.
    pub fn decomposition_a() -> Self {
        let template = PulseSequence::new(
            "skeleton-a",
            Source::GaDerived,
            a_template(AngleExpr::Gene(0), AngleExpr::Gene(1)),
        );
        Self::new(
            "A",
            template,
            TargetFamily::DmXy,
            vec!["theta1".into(), "theta2".into()],
            Symmetry {
                periods: vec![TAU, TAU],
                involution: Some((vec![-1.0, 1.0], vec![0.0, PI])),
            },
        )
        .expect("static skeleton")
    }

    /// Eight-element skeleton of decomposition B with genes θ1, θ2+θ3, θ3, θ4.
    pub fn decomposition_b() -> Self {
        let g = AngleExpr::Gene;
        let template = PulseSequence::new(
            "skeleton-b",
            Source::GaDerived,
            b_template(g(0), g(1), g(2), g(3)),
        );
        Self::new(
            "B",
            template,
            TargetFamily::DmXyPrimed,
            vec![
                "theta1".into(),
                "theta23".into(),
                "theta3".into(),
                "theta4".into(),
            ],
            Symmetry {
                periods: vec![TAU; 4],
                involution: None,
            },
        )
        .expect("static skeleton")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Some(Self::decomposition_a()),
            "B" => Some(Self::decomposition_b()),
            _ => None,
        }
    }

    pub fn gene_count(&self) -> usize {
        self.slot_names.len()
    }

    pub fn fidelity(&self, genes: &[f64], gamma: f64, tau: f64) -> f64 {
        match self.template.compile_with_genes(gamma, tau, genes) {
            Ok(u) => gate_fidelity(&u, &self.family.unitary(gamma, tau)),
            Err(_) => 0.0,
        }
    }

    /// Sequence with gene slots replaced by surfaces.
    pub fn instantiate(&self, slots: &[AngleExpr], name: &str) -> PulseSequence {
        let mut seq = self.template.fill_genes(slots);
        seq.name = name.to_owned();
        seq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{a_theta1, a_theta2};

    #[test]
    fn grid_construction() {
        let g = Grid::uniform((0.0, 1.0), 3, (0.0, 15.0), 2).unwrap();
        assert_eq!(g.gammas, vec![0.0, 0.5, 1.0]);
        assert_eq!(g.nodes()[1], (0.0, 15.0));
        assert!(Grid::new(vec![], vec![1.0]).is_err());
        assert!(Grid::new(vec![1.0, 0.5], vec![1.0]).is_err());
        assert_eq!(Grid::standard().len(), 961);
    }

    #[test]
    fn exact_profile_is_one() {
        let grid = Grid::uniform((0.0, 1.0), 4, (0.0, 10.0), 4).unwrap();
        let p = profile_with(
            &grid,
            |g, t| Ok(TargetFamily::DmXy.unitary(g, t)),
            |g, t| TargetFamily::DmXy.unitary(g, t),
        );
        assert!(p.values.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((fitness_of_profile(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_node_profile_is_gate_fidelity() {
        let seq = crate::sequence::decomposition_a();
        let p = profile(&seq, TargetFamily::DmXy, &Grid::single(0.3, 4.0));
        let f = gate_fidelity(
            &seq.compile(0.3, 4.0).unwrap(),
            &TargetFamily::DmXy.unitary(0.3, 4.0),
        );
        assert_eq!(p.min, f);
        assert_eq!(p.values, vec![vec![f]]);
    }

    #[test]
    fn published_angles_as_genes() {
        let skel = Skeleton::decomposition_a();
        let grid = Grid::uniform((0.0, 1.0), 5, (0.0, 15.0), 5).unwrap();
        // genes are constant over a grid, so score each node on its own
        let mut worst = 1.0f64;
        for (g, t) in grid.nodes() {
            let ctx = crate::sequence::EvalCtx::new(g, t);
            let genes = [a_theta1().eval(&ctx), a_theta2().eval(&ctx)];
            let node = Grid::single(g, t);
            let p = profile_genes(&skel, &genes, &node);
            let f = fitness(&genes, &skel, &node);
            assert!(f <= 1.0);
            assert_eq!(f, p.mean - PENALTY_WEIGHT * (PENALTY_FLOOR - p.min).max(0.0));
            worst = worst.min(p.min);
        }
        assert!(worst >= 0.999, "{worst}");
    }

    #[test]
    fn symmetries_preserve_fidelity() {
        let skel = Skeleton::decomposition_a();
        let genes = [1.3, 2.2];
        let f0 = skel.fidelity(&genes, 0.4, 3.0);
        let (s, o) = skel.symmetry.involution.clone().unwrap();
        let inv: Vec<f64> = (0..2).map(|i| s[i] * genes[i] + o[i]).collect();
        assert!((skel.fidelity(&inv, 0.4, 3.0) - f0).abs() < 1e-12);
        for i in 0..2 {
            let mut g = genes.to_vec();
            g[i] += skel.symmetry.periods[i];
            assert!((skel.fidelity(&g, 0.4, 3.0) - f0).abs() < 1e-12);
        }
        let skel = Skeleton::decomposition_b();
        let genes = [0.3, 1.1, 2.0, -0.7];
        let f0 = skel.fidelity(&genes, 0.6, 2.0);
        for i in 0..4 {
            let mut g = genes.to_vec();
            g[i] += skel.symmetry.periods[i];
            assert!((skel.fidelity(&g, 0.6, 2.0) - f0).abs() < 1e-12);
        }
    }

    #[test]
    fn skeleton_shapes() {
        assert_eq!(Skeleton::decomposition_a().gene_count(), 2);
        assert_eq!(Skeleton::decomposition_b().gene_count(), 4);
        assert!(Skeleton::by_name("c").is_none());
        let bad = Skeleton::new(
            "x",
            Skeleton::decomposition_a().template,
            TargetFamily::DmXy,
            vec!["only".into()],
            Symmetry {
                periods: vec![TAU],
                involution: None,
            },
        );
        assert!(bad.is_err());
    }
}
