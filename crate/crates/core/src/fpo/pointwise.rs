//! Independent GA runs per node, followed by branch canonicalization so the
//! reported angles vary smoothly along τ.

use rayon::prelude::*;

use super::ga::{evolve_objective, GridObjective};
use super::{GAConfig, Grid, Skeleton};
use crate::error::{Error, Result};
use crate::fitting::AngleSample;

/// Gene perturbation used to decide whether a slot matters at a node.
const PROBE: f64 = 0.3;
/// Fidelity change below which a gene counts as unidentified.
const SENSITIVITY_FLOOR: f64 = 1e-8;
/// Branch costs closer than this are treated as ties.
const TIE_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseRow {
    pub gamma: f64,
    pub tau: f64,
    pub genes: Vec<f64>,
    /// False for genes the fidelity does not depend on at this node.
    pub identified: Vec<bool>,
    pub fidelity: f64,
    pub converged: bool,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseTable {
    pub skeleton: String,
    pub slot_names: Vec<String>,
    pub rows: Vec<PointwiseRow>,
}

impl PointwiseTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.rows.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min)
    }

    /// Long-format rows; unidentified genes are left out.
    pub fn to_samples(&self) -> Vec<AngleSample> {
        self.rows
            .iter()
            .flat_map(|r| {
                r.genes
                    .iter()
                    .zip(&r.identified)
                    .zip(&self.slot_names)
                    .filter(|((_, &id), _)| id)
                    .map(move |((&angle, _), slot)| AngleSample {
                        gamma: r.gamma,
                        tau: r.tau,
                        slot: slot.clone(),
                        angle,
                    })
            })
            .collect()
    }
}

fn identified(skeleton: &Skeleton, genes: &[f64], gamma: f64, tau: f64, f0: f64) -> Vec<bool> {
    (0..genes.len())
        .map(|i| {
            [PROBE, -PROBE].iter().any(|d| {
                let mut g = genes.to_vec();
                g[i] += d;
                (skeleton.fidelity(&g, gamma, tau) - f0).abs() > SENSITIVITY_FLOOR
            })
        })
        .collect()
}

/// Run one GA per node. Node `i` draws from random stream `i`, so the table
/// does not depend on thread scheduling.
pub fn optimize_pointwise(
    skeleton: &Skeleton,
    nodes: &[(f64, f64)],
    config: &GAConfig,
) -> Result<PointwiseTable> {
    if nodes.is_empty() {
        return Err(Error::InvalidConfig("no nodes to optimize".into()));
    }
    config.validate()?;
    let rows = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &(gamma, tau))| {
            let grid = Grid::single(gamma, tau);
            let run = evolve_objective(
                &GridObjective {
                    skeleton,
                    grid: &grid,
                },
                config,
                i as u64,
                None,
            )?;
            let fidelity = skeleton.fidelity(&run.best, gamma, tau);
            Ok(PointwiseRow {
                gamma,
                tau,
                identified: identified(skeleton, &run.best, gamma, tau, fidelity),
                converged: fidelity >= config.target_fitness,
                generations: run.history.len(),
                genes: run.best,
                fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = PointwiseTable {
        skeleton: skeleton.name.clone(),
        slot_names: skeleton.slot_names.clone(),
        rows,
    };
    canonicalize(&mut table, skeleton);
    Ok(table)
}

/// Walk each γ row in τ order and replace every gene vector by the symmetry
/// image closest to the linear extrapolation of earlier nodes. Genes without
/// history are reduced into [−P/2, P/2). Near-ties go to the image whose
/// first referenced gene does not move backwards.
pub fn canonicalize(table: &mut PointwiseTable, skeleton: &Skeleton) {
    let sym = &skeleton.symmetry;
    let n = skeleton.gene_count();
    let mut order: Vec<usize> = (0..table.rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&table.rows[a], &table.rows[b]);
        ra.gamma.total_cmp(&rb.gamma).then(ra.tau.total_cmp(&rb.tau))
    });

    let mut start = 0;
    while start < order.len() {
        let gamma = table.rows[order[start]].gamma;
        let end = start
            + order[start..]
                .iter()
                .take_while(|&&i| table.rows[i].gamma == gamma)
                .count();
        // (tau, value) history per gene
        let mut hist: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for &ri in &order[start..end] {
            let row = &table.rows[ri];
            let refs: Vec<Option<f64>> = hist
                .iter()
                .map(|h| match h.as_slice() {
                    [] => None,
                    [.., (t1, y1)] if h.len() == 1 || row.tau == *t1 => Some(*y1),
                    [.., (t0, y0), (t1, y1)] => Some(y1 + (y1 - y0) * (row.tau - t1) / (t1 - t0)),
                    _ => unreachable!(),
                })
                .collect();

            let mut images = vec![row.genes.clone()];
            if let Some((signs, offsets)) = &sym.involution {
                images.push((0..n).map(|i| signs[i] * row.genes[i] + offsets[i]).collect());
            }
            let mut best: Option<(f64, bool, Vec<f64>)> = None;
            for img in images {
                let mut cost = 0.0;
                let mut forward = true;
                let mut first = true;
                let placed: Vec<f64> = (0..n)
                    .map(|i| {
                        let p = sym.periods[i];
                        match refs[i] {
                            Some(r) => {
                                let v = img[i] + p * ((r - img[i]) / p).round();
                                if row.identified[i] {
                                    cost += (v - r).abs();
                                    if first {
                                        forward = v >= r;
                                        first = false;
                                    }
                                }
                                v
                            }
                            None => img[i] - p * (img[i] / p + 0.5).floor(),
                        }
                    })
                    .collect();
                let better = match &best {
                    None => true,
                    Some((c, fwd, _)) => {
                        if (cost - c).abs() <= TIE_TOL {
                            forward && !fwd
                        } else {
                            cost < *c
                        }
                    }
                };
                if better {
                    best = Some((cost, forward, placed));
                }
            }
            let (_, _, placed) = best.expect("at least one image");
            for i in 0..n {
                if row.identified[i] {
                    hist[i].push((row.tau, placed[i]));
                }
            }
            table.rows[ri].genes = placed;
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn single_node_converges() {
        let skel = Skeleton::decomposition_a();
        let t = optimize_pointwise(&skel, &[(0.5, 2.0)], &GAConfig::default()).unwrap();
        assert!(t.rows[0].fidelity >= 0.9999, "{}", t.rows[0].fidelity);
        assert!(t.all_converged());
    }

    #[test]
    fn theta2_is_free_at_tau_zero() {
        let skel = Skeleton::decomposition_a();
        let f = skel.fidelity(&[0.0, 1.0], 0.3, 0.0);
        assert!(f > 1.0 - 1e-12);
        assert_eq!(identified(&skel, &[0.0, 1.0], 0.3, 0.0, f), vec![true, false]);
        let g = [1.2, 2.5];
        let f = skel.fidelity(&g, 0.3, 2.0);
        assert_eq!(identified(&skel, &g, 0.3, 2.0, f), vec![true, true]);
    }

    #[test]
    fn canonicalization_follows_the_branch() {
        let skel = Skeleton::decomposition_a();
        // exact solutions, scrambled by the symmetries
        let slope = 0.5 * 1.25f64.sqrt();
        let theta2 = PI - 0.5f64.atan();
        let rows: Vec<PointwiseRow> = (0..6)
            .map(|k| {
                let tau = 3.0 * k as f64;
                let t1 = slope * tau;
                let genes = if k % 2 == 0 {
                    vec![t1 + TAU, theta2 + 2.0 * TAU]
                } else {
                    vec![(-t1).rem_euclid(TAU), theta2 + PI]
                };
                PointwiseRow {
                    gamma: 0.5,
                    tau,
                    identified: vec![true, k > 0],
                    genes,
                    fidelity: 1.0,
                    converged: true,
                    generations: 1,
                }
            })
            .collect();
        for r in &rows {
            assert!(skel.fidelity(&r.genes, r.gamma, r.tau) > 1.0 - 1e-10);
        }
        let mut table = PointwiseTable {
            skeleton: "A".into(),
            slot_names: skel.slot_names.clone(),
            rows,
        };
        canonicalize(&mut table, &skel);
        for r in &table.rows {
            assert!((r.genes[0] - slope * r.tau).abs() < 1e-9, "{:?}", r);
            if r.tau > 0.0 {
                assert!((r.genes[1] - theta2).abs() < 1e-9, "{:?}", r);
            }
        }
        let samples = table.to_samples();
        assert_eq!(samples.len(), 11);
    }

    #[test]
    fn empty_nodes_rejected() {
        let skel = Skeleton::decomposition_a();
        assert!(optimize_pointwise(&skel, &[], &GAConfig::default()).is_err());
    }
}
