//! Pulse sequences: element types, compilation to a 4x4 unitary, the
//! text format and the built-in decompositions.

mod decompositions;
mod expr;
mod text;

pub use decompositions::{
    a_template, a_theta1, a_theta2, b_template, b_theta, b_theta1, b_theta2, b_theta3, b_theta4,
    decomposition_a, decomposition_a_at, decomposition_b, decomposition_b_at, decomposition_full, isolate_zz,
    isolated_zz_angle, Decomposition,
};
pub use expr::{AngleExpr, EvalCtx};
pub use text::{parse_sequence, write_sequence};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat4, C64};
use crate::model::{propagator, HamiltonianKind};
use crate::quantum::{sqr, uzz, zrot, Qubit};

/// System Hamiltonians that can appear as free-evolution segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Zz,
    Xyz,
}

impl SystemKind {
    pub fn hamiltonian(self, j: f64) -> HamiltonianKind {
        match self {
            SystemKind::Zz => HamiltonianKind::Zz { j_zz: j },
            SystemKind::Xyz => HamiltonianKind::Xyz { j },
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SystemKind::Zz => "zz",
            SystemKind::Xyz => "xyz",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseElement {
    /// Selective rotation about `cos(phi) X + sin(phi) Y`.
    Sqr {
        qubit: Qubit,
        theta: AngleExpr,
        phi: AngleExpr,
    },
    /// `exp(-i angle ZZ)`
    Zz { angle: AngleExpr },
    /// Rotation about Z on one qubit.
    ZRot { qubit: Qubit, theta: AngleExpr },
    /// Free evolution under a system Hamiltonian for (Pauli-unit) time `t`.
    SysEvolve {
        system: SystemKind,
        j: f64,
        t: AngleExpr,
    },
}

impl PulseElement {
    pub fn sqr(qubit: Qubit, theta: impl Into<AngleExpr>, phi: impl Into<AngleExpr>) -> Self {
        PulseElement::Sqr {
            qubit,
            theta: theta.into(),
            phi: phi.into(),
        }
    }

    pub fn zz(angle: impl Into<AngleExpr>) -> Self {
        PulseElement::Zz { angle: angle.into() }
    }

    pub fn zrot(qubit: Qubit, theta: impl Into<AngleExpr>) -> Self {
        PulseElement::ZRot {
            qubit,
            theta: theta.into(),
        }
    }

    pub fn unitary(&self, ctx: &EvalCtx) -> Result<Mat4> {
        Ok(match self {
            PulseElement::Sqr { qubit, theta, phi } => sqr(*qubit, theta.try_eval(ctx)?, phi.try_eval(ctx)?),
            PulseElement::Zz { angle } => uzz(angle.try_eval(ctx)?),
            PulseElement::ZRot { qubit, theta } => zrot(*qubit, theta.try_eval(ctx)?),
            PulseElement::SysEvolve { system, j, t } => propagator(system.hamiltonian(*j), t.try_eval(ctx)?),
        })
    }

    fn exprs(&self) -> Vec<&AngleExpr> {
        match self {
            PulseElement::Sqr { theta, phi, .. } => vec![theta, phi],
            PulseElement::Zz { angle } => vec![angle],
            PulseElement::ZRot { theta, .. } => vec![theta],
            PulseElement::SysEvolve { t, .. } => vec![t],
        }
    }

    fn map_exprs(&self, f: &dyn Fn(&AngleExpr) -> AngleExpr) -> Self {
        match self {
            PulseElement::Sqr { qubit, theta, phi } => PulseElement::Sqr {
                qubit: *qubit,
                theta: f(theta),
                phi: f(phi),
            },
            PulseElement::Zz { angle } => PulseElement::Zz { angle: f(angle) },
            PulseElement::ZRot { qubit, theta } => PulseElement::ZRot {
                qubit: *qubit,
                theta: f(theta),
            },
            PulseElement::SysEvolve { system, j, t } => PulseElement::SysEvolve {
                system: *system,
                j: *j,
                t: f(t),
            },
        }
    }
}

/// Where a sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Published,
    GaDerived,
    User,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::Published => "published",
            Source::GaDerived => "ga_derived",
            Source::User => "user",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "published" => Some(Source::Published),
            "ga_derived" => Some(Source::GaDerived),
            "user" => Some(Source::User),
            _ => None,
        }
    }
}

/// Ordered product of pulse elements, in written operator order: the first
/// element is the leftmost factor and therefore acts last.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub name: String,
    pub source: Source,
    pub elements: Vec<PulseElement>,
}

impl PulseSequence {
    pub fn new(name: impl Into<String>, source: Source, elements: Vec<PulseElement>) -> Self {
        Self {
            name: name.into(),
            source,
            elements,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of genes the sequence expects.
    pub fn gene_count(&self) -> usize {
        self.elements
            .iter()
            .flat_map(|e| e.exprs())
            .filter_map(|e| e.max_gene())
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn count_sqr(&self, qubit: Qubit) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::Sqr { qubit: q, .. } if *q == qubit))
            .count()
    }

    pub fn count_zz(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::Zz { .. }))
            .count()
    }

    /// Copy with `gamma`/`tau` replaced by literals.
    pub fn bind(&self, gamma: f64, tau: f64) -> Self {
        self.map_exprs(&|e| e.substitute(gamma, tau))
    }

    /// Copy with gene slots replaced by expressions (e.g. fitted surfaces).
    pub fn fill_genes(&self, slots: &[AngleExpr]) -> Self {
        self.map_exprs(&|e| e.fill_genes(slots))
    }

    fn map_exprs(&self, f: &dyn Fn(&AngleExpr) -> AngleExpr) -> Self {
        Self {
            name: self.name.clone(),
            source: self.source,
            elements: self.elements.iter().map(|el| el.map_exprs(f)).collect(),
        }
    }

    pub fn compile(&self, gamma: f64, tau: f64) -> Result<Mat4> {
        self.compile_ctx(&EvalCtx::new(gamma, tau))
    }

    pub fn compile_with_genes(&self, gamma: f64, tau: f64, genes: &[f64]) -> Result<Mat4> {
        let need = self.gene_count();
        if genes.len() < need {
            return Err(Error::LengthMismatch(genes.len(), need));
        }
        self.compile_ctx(&EvalCtx::with_genes(gamma, tau, genes))
    }

    pub fn compile_ctx(&self, ctx: &EvalCtx) -> Result<Mat4> {
        let mut acc = Mat4::identity();
        for el in &self.elements {
            acc = mul_sparse(&acc, &el.unitary(ctx)?);
        }
        Ok(acc)
    }
}

pub fn compile(seq: &PulseSequence, gamma: f64, tau: f64) -> Result<Mat4> {
    seq.compile(gamma, tau)
}

// Embedded single-qubit gates are half zeros; skipping them roughly halves
// the cost of the GA's inner loop.
fn mul_sparse(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = Mat4::zeros();
    for k in 0..4 {
        for c in 0..4 {
            let bkc = b[(k, c)];
            if bkc == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..4 {
                out[(r, c)] += a[(r, k)] * bkc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gate_fidelity;
    use std::f64::consts::PI;

    #[test]
    fn compile_uses_written_order() {
        let q1 = Qubit::One;
        let seq = PulseSequence::new(
            "order",
            Source::User,
            vec![
                PulseElement::sqr(q1, PI / 2.0, 0.0),
                PulseElement::zrot(q1, PI / 3.0),
            ],
        );
        let u = seq.compile(0.0, 0.0).unwrap();
        let expect = sqr(q1, PI / 2.0, 0.0) * zrot(q1, PI / 3.0);
        assert!(u.max_abs_diff(&expect) < 1e-14);
        let reversed = zrot(q1, PI / 3.0) * sqr(q1, PI / 2.0, 0.0);
        assert!(u.max_abs_diff(&reversed) > 1e-3);
    }

    #[test]
    fn genes_fill_and_length_check() {
        let seq = PulseSequence::new(
            "g",
            Source::User,
            vec![PulseElement::zz(AngleExpr::Gene(1) * AngleExpr::Tau)],
        );
        assert_eq!(seq.gene_count(), 2);
        assert!(matches!(
            seq.compile_with_genes(0.0, 1.0, &[0.1]),
            Err(Error::LengthMismatch(1, 2))
        ));
        let u = seq.compile_with_genes(0.0, 2.0, &[0.0, 0.25]).unwrap();
        assert!(gate_fidelity(&u, &uzz(0.5)) > 1.0 - 1e-14);
        let filled = seq.fill_genes(&[AngleExpr::c(0.0), AngleExpr::c(0.25)]);
        assert_eq!(filled.gene_count(), 0);
        assert!(filled.compile(0.0, 2.0).unwrap().max_abs_diff(&u) < 1e-15);
    }

    #[test]
    fn missing_gene_is_eval_error() {
        let seq = PulseSequence::new("g", Source::User, vec![PulseElement::zz(AngleExpr::Gene(0))]);
        assert!(matches!(seq.compile(0.0, 0.0), Err(Error::EvalError(_))));
    }

    #[test]
    fn sys_evolve_matches_propagator() {
        let seq = PulseSequence::new(
            "s",
            Source::User,
            vec![PulseElement::SysEvolve {
                system: SystemKind::Xyz,
                j: 0.7,
                t: AngleExpr::c(0.3),
            }],
        );
        let u = seq.compile(0.0, 0.0).unwrap();
        let p = propagator(HamiltonianKind::Xyz { j: 0.7 }, 0.3);
        assert!(u.max_abs_diff(&p) < 1e-14);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = sqr(Qubit::Two, 0.4, 1.1) * uzz(0.3);
        let b = sqr(Qubit::One, 1.3, -0.2);
        assert!(mul_sparse(&a, &b).max_abs_diff(&(a * b)) < 1e-15);
    }
}
