//! Small dense complex matrices and the Hermitian eigensolver behind the
//! matrix exponential.
//!
//! Everything here is fixed-size and `Copy`; two-qubit work never needs more
//! than 4×4, so there is no heap allocation on the hot paths.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used by the unitary / Hermitian role checks.
pub const ROLE_TOL: f64 = 1e-12;

/// Dense N×N complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Mat<2>;
pub type Mat4 = Mat<4>;

impl<const N: usize> std::fmt::Debug for Mat<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat{N}[")?;
        for row in &self.0 {
            write!(f, " ")?;
            for z in row {
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<const N: usize> Default for Mat<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Mat<N> {
    pub const fn zeros() -> Self {
        Mat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for k in 0..N {
            m.0[k][k] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (k, v) in d.into_iter().enumerate() {
            m.0[k][k] = v;
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        let mut m = Self::zeros();
        for (r, row) in rows.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                m.0[r][c] = C64::new(x, 0.0);
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for r in 0..N {
            for c in 0..N {
                m.0[c][r] = self.0[r][c].conj();
            }
        }
        m
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = z.conj());
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|k| self.0[k][k]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |(H - H†)_jk|
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// max |(U†U - I)_jk|
    pub fn unitary_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= ROLE_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary_defect() <= ROLE_TOL
    }

    pub fn mul_vec(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [ZERO; N];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|c| self.0[r][c] * v[c]).sum();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<const N: usize> Index<(usize, usize)> for Mat<N> {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.0[r][c]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Mat<N> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.0[r][c]
    }
}

impl<const N: usize> Mul for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for r in 0..N {
            for k in 0..N {
                let a = self.0[r][k];
                if a == ZERO {
                    continue;
                }
                for c in 0..N {
                    m.0[r][c] += a * rhs.0[k][c];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for Mat<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self;
        m.0.iter_mut()
            .flatten()
            .zip(rhs.0.iter().flatten())
            .for_each(|(a, b)| *a += b);
        m
    }
}

impl<const N: usize> Sub for Mat<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Neg for Mat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl<const N: usize> Mul<Mat<N>> for f64 {
    type Output = Mat<N>;
    fn mul(self, rhs: Mat<N>) -> Mat<N> {
        rhs.scale(C64::new(self, 0.0))
    }
}

/// Tensor product with `a` acting on qubit 1 (the left factor).
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for ar in 0..2 {
        for ac in 0..2 {
            for br in 0..2 {
                for bc in 0..2 {
                    m.0[2 * ar + br][2 * ac + bc] = a.0[ar][ac] * b.0[br][bc];
                }
            }
        }
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix: `h = V diag(values) V†`.
#[derive(Debug, Clone, Copy)]
pub struct Eigh<const N: usize> {
    /// Eigenvalues in ascending order.
    pub values: [f64; N],
    /// Columns are the matching orthonormal eigenvectors.
    pub vectors: Mat<N>,
}

impl<const N: usize> Eigh<N> {
    /// `V diag(f(λ)) V†`
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Mat<N> {
        let mut d = [ZERO; N];
        for (k, &l) in self.values.iter().enumerate() {
            d[k] = f(l);
        }
        self.vectors * Mat::from_diag(d) * self.vectors.adjoint()
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the real symmetric Jacobi rotation, so the iterates stay exactly Hermitian
/// up to rounding.
pub fn eigh<const N: usize>(h: &Mat<N>) -> Result<Eigh<N>> {
    let defect = h.hermitian_defect();
    if defect > ROLE_TOL * h.max_abs().max(1.0) || !h.is_finite() {
        return Err(Error::NonHermitianInput {
            max_asymmetry: defect,
        });
    }
    // Symmetrize so the rotations see an exactly Hermitian input.
    let mut a = (*h + h.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = Mat::<N>::identity();
    let scale = a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|r| (0..N).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a.0[r][c].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a.0[p][q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;

                // A <- A G
                for r in 0..N {
                    let arp = a.0[r][p];
                    let arq = a.0[r][q];
                    a.0[r][p] = arp * g_pp + arq * g_qp;
                    a.0[r][q] = arp * g_pq + arq * g_qq;
                }
                // A <- G† A
                for col in 0..N {
                    let apc = a.0[p][col];
                    let aqc = a.0[q][col];
                    a.0[p][col] = g_pp.conj() * apc + g_qp.conj() * aqc;
                    a.0[q][col] = g_pq.conj() * apc + g_qq.conj() * aqc;
                }
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                // V <- V G
                for r in 0..N {
                    let vrp = v.0[r][p];
                    let vrq = v.0[r][q];
                    v.0[r][p] = vrp * g_pp + vrq * g_qp;
                    v.0[r][q] = vrp * g_pq + vrq * g_qq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|k| k);
    order.sort_by(|&i, &j| a.0[i][i].re.total_cmp(&a.0[j][j].re));
    let values = std::array::from_fn(|k| a.0[order[k]][order[k]].re);
    let mut vectors = Mat::<N>::zeros();
    for (k, &src) in order.iter().enumerate() {
        for r in 0..N {
            vectors.0[r][k] = v.0[r][src];
        }
    }
    Ok(Eigh { values, vectors })
}

/// Singular values (descending) by one-sided Jacobi (Hestenes) rotations.
///
/// Columns are orthogonalized pairwise in place, so small singular values keep
/// an absolute accuracy of order ε·‖a‖ instead of √ε·‖a‖ as they would via
/// the eigenvalues of a·a†.
pub fn singular_values<const N: usize>(a: &Mat<N>) -> [f64; N] {
    let mut m = *a;
    let col_dot =
        |m: &Mat<N>, i: usize, j: usize| -> C64 { (0..N).map(|r| m.0[r][i].conj() * m.0[r][j]).sum() };
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..N {
            for q in p + 1..N {
                let alpha = col_dot(&m, p, p).re;
                let beta = col_dot(&m, q, q).re;
                let gamma = col_dot(&m, p, q);
                let mag = gamma.norm();
                if mag == 0.0 || mag <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let theta = (beta - alpha) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..N {
                    let mp = m.0[r][p];
                    let mq = m.0[r][q];
                    m.0[r][p] = mp * c - mq * phase.conj() * s;
                    m.0[r][q] = mp * s + mq * phase.conj() * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: [f64; N] = std::array::from_fn(|k| (0..N).map(|r| m.0[r][k].norm_sqr()).sum::<f64>().sqrt());
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `exp(-i h t)` for Hermitian `h`, via spectral decomposition.
pub fn expm_hermitian(h: &Mat4, t: f64) -> Result<Mat4> {
    let e = eigh(h)?;
    Ok(e.map(|l| C64::from_polar(1.0, -l * t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::pauli;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_identity_and_diagonal_paulis() {
        assert_eq!(kron2(&Mat2::identity(), &Mat2::identity()), Mat4::identity());
        let zz = kron2(&pauli::z(), &pauli::z());
        let expect = Mat4::from_diag([ONE, -ONE, -ONE, ONE]);
        assert_eq!(zz, expect);
    }

    #[test]
    fn kron_xy_corner_entry() {
        // σx ⊗ σy: row |00⟩, column |11⟩ picks σx[0][1]·σy[0][1] = 1·(−i).
        let xy = kron2(&pauli::x(), &pauli::y());
        assert_eq!(xy[(0, 3)], c(0.0, -1.0));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&Mat4::zeros(), 3.7).unwrap();
        assert!(u.max_abs_diff(&Mat4::identity()) < 1e-15);
    }

    #[test]
    fn expm_zz_at_pi_is_minus_identity() {
        let zz = kron2(&pauli::z(), &pauli::z());
        let u = expm_hermitian(&zz, std::f64::consts::PI).unwrap();
        assert!(u.max_abs_diff(&(-Mat4::identity())) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = Mat4::zeros();
        m[(0, 1)] = ONE;
        assert!(matches!(
            expm_hermitian(&m, 1.0),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let h = Mat4::from_real([
            [2.0, 1.0, 0.0, 0.5],
            [1.0, -1.0, 0.3, 0.0],
            [0.0, 0.3, 0.5, -0.7],
            [0.5, 0.0, -0.7, 1.5],
        ]) + kron2(&pauli::x(), &pauli::y());
        let e = eigh(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let back = e.map(|l| c(l, 0.0));
        assert!(back.max_abs_diff(&h) < 1e-13);
        assert!(e.vectors.unitary_defect() < 1e-13);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // Unitary times diag(3, 2, 1, 0) times unitary.
        let u = expm_hermitian(
            &(kron2(&pauli::x(), &pauli::y()) + kron2(&pauli::z(), &pauli::x())),
            0.4,
        )
        .unwrap();
        let w = expm_hermitian(&kron2(&pauli::y(), &pauli::y()), 1.1).unwrap();
        let d = Mat4::from_diag([c(3.0, 0.0), c(0.0, 2.0), c(-1.0, 0.0), ZERO]);
        let sv = singular_values(&(u * d * w));
        for (a, b) in sv.iter().zip([3.0, 2.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-14, "{sv:?}");
        }
    }

    #[test]
    fn eigh_handles_degenerate_spectrum() {
        let h = kron2(&pauli::x(), &pauli::x()) + kron2(&pauli::y(), &pauli::y());
        let e = eigh(&h).unwrap();
        let expect = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
