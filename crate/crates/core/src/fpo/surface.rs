//! Surface mode: the chromosome holds the coefficients of a closed form per
//! gene slot, and fitness is taken over the whole grid at once.

use super::ga::{evolve_objective, GeneDomain, Objective, RunResult};
use super::{profile_with, FidelityProfile, GAConfig, Grid, Skeleton, PENALTY_FLOOR, PENALTY_WEIGHT};
use crate::error::{Error, Result};
use crate::fitting::FitForm;
use crate::sequence::{AngleExpr, PulseSequence, Source};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSlot {
    pub form: FitForm,
    pub tau_scaled: bool,
}

impl SurfaceSlot {
    pub fn eval(&self, coeffs: &[f64], gamma: f64, tau: f64) -> f64 {
        let v = self.form.eval(coeffs, gamma);
        if self.tau_scaled {
            v * tau
        } else {
            v
        }
    }

    pub fn expr(&self, coeffs: &[f64]) -> AngleExpr {
        let e = self.form.expr(coeffs);
        if self.tau_scaled {
            AngleExpr::linear_tau(e)
        } else {
            e
        }
    }

    /// Default slot forms and starting box for a skeleton.
    pub fn defaults_for(skeleton: &Skeleton) -> Result<(Vec<SurfaceSlot>, Vec<f64>, Vec<f64>)> {
        match skeleton.name.as_str() {
            "A" => Ok((
                vec![
                    SurfaceSlot {
                        form: FitForm::TrigGamma,
                        tau_scaled: true,
                    },
                    SurfaceSlot {
                        form: FitForm::Exp2,
                        tau_scaled: false,
                    },
                ],
                vec![0.5, 0.0, 1.0, 0.0, 1.5, -1.0, 1.5, 0.0],
                vec![0.5, 0.5, 0.5, 0.5, 1.5, 1.0, 1.5, 0.5],
            )),
            other => Err(Error::InvalidConfig(format!(
                "no default surface forms for skeleton {other}"
            ))),
        }
    }
}

struct SurfaceObjective<'a> {
    skeleton: &'a Skeleton,
    slots: &'a [SurfaceSlot],
    grid: &'a Grid,
    center: &'a [f64],
    spread: &'a [f64],
}

impl SurfaceObjective<'_> {
    fn node_genes(&self, chrom: &[f64], gamma: f64, tau: f64) -> Vec<f64> {
        let mut off = 0;
        self.slots
            .iter()
            .map(|s| {
                let k = s.form.arity();
                let v = s.eval(&chrom[off..off + k], gamma, tau);
                off += k;
                v
            })
            .collect()
    }
}

impl Objective for SurfaceObjective<'_> {
    fn gene_count(&self) -> usize {
        self.slots.iter().map(|s| s.form.arity()).sum()
    }

    fn domain(&self) -> GeneDomain {
        GeneDomain::Free {
            center: self.center.to_vec(),
            spread: self.spread.to_vec(),
        }
    }

    fn fitness(&self, chrom: &[f64]) -> f64 {
        let (mut min, mut sum) = (f64::INFINITY, 0.0);
        for (g, t) in self.grid.nodes() {
            let f = self.skeleton.fidelity(&self.node_genes(chrom, g, t), g, t);
            min = min.min(f);
            sum += f;
        }
        sum / self.grid.len() as f64 - PENALTY_WEIGHT * (PENALTY_FLOOR - min).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSolution {
    pub slots: Vec<SurfaceSlot>,
    pub coefficients: Vec<Vec<f64>>,
    pub profile: FidelityProfile,
    pub run: RunResult,
}

impl SurfaceSolution {
    pub fn exprs(&self) -> Vec<AngleExpr> {
        self.slots
            .iter()
            .zip(&self.coefficients)
            .map(|(s, c)| s.expr(c))
            .collect()
    }

    pub fn sequence(&self, skeleton: &Skeleton) -> PulseSequence {
        let mut seq = skeleton.instantiate(&self.exprs(), "surface-fit");
        seq.source = Source::GaDerived;
        seq
    }
}

/// Evolve surface coefficients directly against `grid`.
pub fn optimize_surface(
    skeleton: &Skeleton,
    slots: &[SurfaceSlot],
    grid: &Grid,
    config: &GAConfig,
    center: &[f64],
    spread: &[f64],
) -> Result<SurfaceSolution> {
    if slots.len() != skeleton.gene_count() {
        return Err(Error::LengthMismatch(slots.len(), skeleton.gene_count()));
    }
    let objective = SurfaceObjective {
        skeleton,
        slots,
        grid,
        center,
        spread,
    };
    let n = objective.gene_count();
    if center.len() != n || spread.len() != n {
        return Err(Error::LengthMismatch(center.len().min(spread.len()), n));
    }
    let run = evolve_objective(&objective, config, 0, None)?;
    let mut coefficients = Vec::new();
    let mut off = 0;
    for s in slots {
        let k = s.form.arity();
        let mut c = run.best[off..off + k].to_vec();
        s.form.canonicalize(&mut c);
        coefficients.push(c);
        off += k;
    }
    let profile = profile_with(
        grid,
        |g, t| {
            let genes = objective.node_genes(&run.best, g, t);
            skeleton.template.compile_with_genes(g, t, &genes)
        },
        |g, t| skeleton.family.unitary(g, t),
    );
    Ok(SurfaceSolution {
        slots: slots.to_vec(),
        coefficients,
        profile,
        run,
    })
}
