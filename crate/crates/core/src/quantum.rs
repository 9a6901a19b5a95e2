//! Two-qubit quantum primitives: Pauli operators, the native gates, gate
//! fidelity, pure/mixed states and Wootters concurrence.
//!
//! Qubit 1 is the left tensor factor and the basis order is
//! |00⟩, |01⟩, |10⟩, |11⟩ throughout.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron2, singular_values, Mat, Mat2, Mat4, C64, I, ONE, ZERO};

pub mod pauli {
    use super::*;

    pub fn id() -> Mat2 {
        Mat2::identity()
    }

    pub fn x() -> Mat2 {
        Mat2::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> Mat2 {
        Mat([[ZERO, -I], [I, ZERO]])
    }

    pub fn z() -> Mat2 {
        Mat2::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// σ_a ⊗ σ_b for axis letters in `"IXYZ"`.
    pub fn pair(a: char, b: char) -> Mat4 {
        kron2(&by_name(a), &by_name(b))
    }

    fn by_name(c: char) -> Mat2 {
        match c {
            'X' | 'x' => x(),
            'Y' | 'y' => y(),
            'Z' | 'z' => z(),
            _ => id(),
        }
    }
}

/// Which of the two qubits an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub fn new(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Qubit::One),
            2 => Ok(Qubit::Two),
            other => Err(Error::BadQubitIndex(other)),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Qubit::One => 1,
            Qubit::Two => 2,
        }
    }

    /// Lift a single-qubit operator onto the two-qubit space.
    pub fn embed(self, op: &Mat2) -> Mat4 {
        match self {
            Qubit::One => kron2(op, &Mat2::identity()),
            Qubit::Two => kron2(&Mat2::identity(), op),
        }
    }
}

/// exp(−i θ/2 [cos φ σx + sin φ σy]) as a 2×2 matrix.
pub fn rotation_xy(theta: f64, phi: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    let off = C64::new(0.0, -s);
    Mat([
        [C64::new(c, 0.0), off * C64::from_polar(1.0, -phi)],
        [off * C64::from_polar(1.0, phi), C64::new(c, 0.0)],
    ])
}

/// Single-qubit rotation by `theta` about the in-plane axis at azimuth `phi`.
pub fn sqr(qubit: Qubit, theta: f64, phi: f64) -> Mat4 {
    qubit.embed(&rotation_xy(theta, phi))
}

/// exp(−i θ/2 σz) on one qubit.
pub fn zrot(qubit: Qubit, theta: f64) -> Mat4 {
    let d = C64::from_polar(1.0, -0.5 * theta);
    qubit.embed(&Mat([[d, ZERO], [ZERO, d.conj()]]))
}

/// exp(−i · angle · σ1z σ2z).
pub fn uzz(angle: f64) -> Mat4 {
    let m = C64::from_polar(1.0, -angle);
    let p = m.conj();
    Mat4::from_diag([m, p, p, m])
}

/// F = |Tr(u† v)| / 4. Equals 1 exactly when `u` and `v` agree up to a
/// global phase.
pub fn gate_fidelity(u: &Mat4, v: &Mat4) -> f64 {
    let tr: C64 =
        u.0.iter()
            .flatten()
            .zip(v.0.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum();
    (tr.norm() / 4.0).min(1.0)
}

/// Normalization tolerance for state vectors.
pub const NORM_TOL: f64 = 1e-12;

/// Pure two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec4([C64; 4]);

impl StateVec4 {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let n = norm_sqr(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self(amplitudes))
    }

    /// Rescale arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let n = norm_sqr(&amplitudes).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self(amplitudes.map(|a| a / n)))
    }

    /// Computational basis state |k⟩, k ∈ 0..4.
    pub fn basis(k: usize) -> Self {
        let mut a = [ZERO; 4];
        a[k] = ONE;
        Self(a)
    }

    /// (|01⟩ − |10⟩)/√2
    pub fn singlet() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self([ZERO, h, -h, ZERO])
    }

    /// |a⟩ ⊗ |b⟩ from two (normalized internally) single-qubit states.
    pub fn product(a: [C64; 2], b: [C64; 2]) -> Result<Self> {
        Self::normalized([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.0)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// `u |ψ⟩`. Unitarity of `u` is the caller's contract.
    pub fn evolve(&self, u: &Mat4) -> Self {
        Self(u.mul_vec(&self.0))
    }

    pub fn density(&self) -> Density4 {
        let mut m = Mat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m.0[r][c] = self.0[r] * self.0[c].conj();
            }
        }
        Density4(m)
    }
}

fn norm_sqr(a: &[C64; 4]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Validated two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density4(Mat4);

impl Density4 {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn new(m: Mat4) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > crate::linalg::ROLE_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = eigh(&m)?.values[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }
}

/// Eigenvalues of ρ below this are treated as rounding noise when forming √ρ.
const SPECTRAL_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Wootters concurrence of a (possibly mixed) two-qubit state.
///
/// The λᵢ (square roots of the eigenvalues of ρ·ρ̃, ρ̃ = (σy⊗σy) ρ* (σy⊗σy))
/// are the singular values of √ρ (σy⊗σy) √ρ*, which is how they are computed
/// here: it avoids square roots of near-zero eigenvalues.
pub fn concurrence(rho: &Density4) -> f64 {
    let yy = pauli::pair('Y', 'Y');
    // Density4 guarantees Hermiticity, so the decomposition cannot fail.
    let sqrt_rho = eigh(rho.matrix())
        .expect("validated density is Hermitian")
        .map(|l| {
            if l > SPECTRAL_FLOOR {
                C64::new(l.sqrt(), 0.0)
            } else {
                ZERO
            }
        });
    let l = singular_values(&(sqrt_rho * yy * sqrt_rho.conj()));
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// Pure-state shortcut C = |⟨ψ|σy⊗σy|ψ*⟩|.
pub fn concurrence_pure(psi: &StateVec4) -> f64 {
    let a = psi.amplitudes();
    // σy⊗σy maps (a00, a01, a10, a11)* to (−a11*, a10*, a01*, −a00*).
    let flipped = [-a[3].conj(), a[2].conj(), a[1].conj(), -a[0].conj()];
    let ip: C64 = a.iter().zip(&flipped).map(|(x, y)| x.conj() * y).sum();
    ip.norm().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn random_unitary(seed: &[f64]) -> Mat4 {
        let mut h = Mat4::zeros();
        let mut k = 0;
        for r in 0..4 {
            for c in r..4 {
                let re = seed[k % seed.len()];
                let im = if r == c { 0.0 } else { seed[(k + 7) % seed.len()] };
                h.0[r][c] = C64::new(re, im);
                h.0[c][r] = C64::new(re, -im);
                k += 1;
            }
        }
        expm_hermitian(&h, 1.0).unwrap()
    }

    #[test]
    fn fidelity_identity_phase_and_orthogonal() {
        let u = uzz(0.37) * sqr(Qubit::One, 1.1, 0.4);
        assert!((gate_fidelity(&u, &u) - 1.0).abs() < 1e-15);
        let phased = u.scale(C64::from_polar(1.0, 0.7));
        assert!((gate_fidelity(&u, &phased) - 1.0).abs() < 1e-15);
        // Tr((−iσx)⊗I) = 0
        assert!(gate_fidelity(&Mat4::identity(), &sqr(Qubit::One, PI, 0.0)) < 1e-15);
    }

    #[test]
    fn sqr_special_values() {
        for phi in [0.0, 0.3, 2.0, -1.0] {
            assert!(sqr(Qubit::One, 0.0, phi).max_abs_diff(&Mat4::identity()) < 1e-15);
        }
        // exp(−iπσy/2) = −iσy
        let expect = Qubit::Two.embed(&pauli::y().scale(-I));
        assert!(sqr(Qubit::Two, PI, FRAC_PI_2).max_abs_diff(&expect) < 1e-15);
        let a = sqr(Qubit::One, 0.8, 1.3);
        let b = sqr(Qubit::One, 0.8 + 4.0 * PI, 1.3);
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn sqr_matches_generator_exponential() {
        let (theta, phi): (f64, f64) = (1.234, -0.77);
        let gen = 0.5 * (phi.cos() * pauli::pair('X', 'I') + phi.sin() * pauli::pair('Y', 'I'));
        let expect = expm_hermitian(&gen, theta).unwrap();
        assert!(sqr(Qubit::One, theta, phi).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn bad_qubit_index() {
        assert_eq!(Qubit::new(3), Err(Error::BadQubitIndex(3)));
        assert_eq!(Qubit::new(0), Err(Error::BadQubitIndex(0)));
    }

    #[test]
    fn uzz_values() {
        assert_eq!(uzz(0.0), Mat4::identity());
        let m = C64::from_polar(1.0, -FRAC_PI_4);
        let expect = Mat4::from_diag([m, m.conj(), m.conj(), m]);
        assert!(uzz(FRAC_PI_4).max_abs_diff(&expect) < 1e-15);
        assert!((uzz(0.3) * uzz(0.5)).max_abs_diff(&uzz(0.8)) < 1e-15);
        let via_expm = expm_hermitian(&pauli::pair('Z', 'Z'), 0.9).unwrap();
        assert!(uzz(0.9).max_abs_diff(&via_expm) < 1e-14);
    }

    #[test]
    fn zrot_is_axial_rotation() {
        let via_expm = expm_hermitian(&(0.5 * pauli::pair('Z', 'I')), PI).unwrap();
        assert!(zrot(Qubit::One, PI).max_abs_diff(&via_expm) < 1e-14);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&StateVec4::singlet().density()) - 1.0).abs() < 1e-12);
        assert!(concurrence(&StateVec4::basis(0).density()) < 1e-12);
        let (s, c) = (PI / 6.0).sin_cos();
        let psi = StateVec4::new([C64::new(c, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        let expect = 2.0 * (c * s).abs();
        assert!((expect - 0.866_025_403_784_438_6).abs() < 1e-15);
        assert!((concurrence(&psi.density()) - expect).abs() < 1e-12);
        assert!((concurrence_pure(&psi) - expect).abs() < 1e-12);
    }

    #[test]
    fn concurrence_of_werner_mixture() {
        // p|singlet⟩⟨singlet| + (1−p) I/4 has C = max(0, (3p − 1)/2).
        for p in [0.2, 0.5, 0.8, 1.0] {
            let m = StateVec4::singlet().density().matrix().scale(C64::new(p, 0.0))
                + Mat4::identity().scale(C64::new((1.0 - p) / 4.0, 0.0));
            let c = concurrence(&Density4::new(m).unwrap());
            let expect = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert!((c - expect).abs() < 1e-10, "p={p}: {c} vs {expect}");
        }
    }

    #[test]
    fn invalid_density_rejected() {
        let mut m = Mat4::identity();
        assert!(matches!(Density4::new(m), Err(Error::InvalidDensity(_))));
        m = Mat4::from_diag([C64::new(1.5, 0.0), C64::new(-0.5, 0.0), ZERO, ZERO]);
        assert!(matches!(Density4::new(m), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn unnormalized_state_rejected() {
        assert!(matches!(
            StateVec4::new([ONE, ONE, ZERO, ZERO]),
            Err(Error::NotNormalized(_))
        ));
    }

    fn qubit_state() -> impl Strategy<Value = [C64; 2]> {
        (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, p)| {
            [
                C64::new((t / 2.0).cos(), 0.0),
                C64::from_polar((t / 2.0).sin(), p),
            ]
        })
    }

    proptest! {
        #[test]
        fn product_states_have_zero_concurrence(a in qubit_state(), b in qubit_state()) {
            let psi = StateVec4::product(a, b).unwrap();
            prop_assert!(concurrence(&psi.density()) <= 1e-10);
        }

        #[test]
        fn mixed_and_pure_concurrence_agree(
            re in proptest::array::uniform4(-1.0f64..1.0),
            im in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            let amps = std::array::from_fn(|k| C64::new(re[k], im[k]));
            prop_assume!(amps.iter().map(|z: &C64| z.norm_sqr()).sum::<f64>() > 1e-3);
            let psi = StateVec4::normalized(amps).unwrap();
            let c = concurrence(&psi.density());
            prop_assert!((c - concurrence_pure(&psi)).abs() < 1e-7);
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn fidelity_symmetric_bounded_phase_invariant(
            a in proptest::collection::vec(-2.0f64..2.0, 16),
            b in proptest::collection::vec(-2.0f64..2.0, 16),
            alpha in -PI..PI,
        ) {
            let u = random_unitary(&a);
            let v = random_unitary(&b);
            let f = gate_fidelity(&u, &v);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((f - gate_fidelity(&v, &u)).abs() < 1e-14);
            let vp = v.scale(C64::from_polar(1.0, alpha));
            prop_assert!((f - gate_fidelity(&u, &vp)).abs() < 1e-14);
        }
    }
}
