//! Quantization of a discrete random variable: `N` configurations exchanging
//! probability through the currents `γ_αβ`, and the equivalent hermitian
//! Schrödinger form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, VarqError};
use crate::numerics::rk4_step;

/// Populations below this are outside the region where the local form holds.
pub const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystemSpec {
    u: DMatrix<f64>,
    theta: DMatrix<f64>,
    a: f64,
    b: f64,
}

impl SpinSystemSpec {
    /// `u` must be symmetric and `theta` antisymmetric (exactly).
    pub fn new(u: DMatrix<f64>, theta: DMatrix<f64>, a: f64, b: f64) -> Result<Self> {
        let n = u.nrows();
        if n < 2 || !u.is_square() || theta.shape() != (n, n) {
            return Err(VarqError::InvalidSpec(format!(
                "need square N×N matrices with N ≥ 2, got U {:?} and θ {:?}",
                u.shape(),
                theta.shape()
            )));
        }
        if !(a > 0.0 && a.is_finite()) || !b.is_finite() {
            return Err(VarqError::InvalidSpec(format!("need a > 0 and finite b, got a = {a}, b = {b}")));
        }
        for i in 0..n {
            if theta[(i, i)] != 0.0 {
                return Err(VarqError::InvalidSpec(format!("θ has nonzero diagonal at {i}")));
            }
            for j in 0..n {
                if !u[(i, j)].is_finite() || !theta[(i, j)].is_finite() {
                    return Err(VarqError::InvalidSpec(format!("non-finite coupling at ({i}, {j})")));
                }
                if u[(i, j)] != u[(j, i)] {
                    return Err(VarqError::InvalidSpec(format!("U is not symmetric at ({i}, {j})")));
                }
                if theta[(i, j)] != -theta[(j, i)] {
                    return Err(VarqError::InvalidSpec(format!("θ is not antisymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SpinSystemSpec { u, theta, a, b })
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn shift(&self) -> &DMatrix<f64> {
        &self.theta
    }
}

/// Normalized complex `N`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub psi: DVector<Complex64>,
}

impl SpinState {
    pub fn new(psi: DVector<Complex64>) -> Result<Self> {
        let n = psi.norm_squared();
        if (n - 1.0).abs() > 1e-12 {
            return Err(VarqError::InvalidState(format!("state has norm² {n}, expected 1")));
        }
        Ok(SpinState { psi })
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut psi = DVector::zeros(n);
        psi[k] = Complex64::new(1.0, 0.0);
        SpinState { psi }
    }

    pub fn populations(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `(p_α, λ_α = a·arg ψ_α)`.
    pub fn to_local(&self, a: f64) -> (Vec<f64>, Vec<f64>) {
        (self.populations(), self.psi.iter().map(|z| a * z.arg()).collect())
    }

    /// `ψ_α = √p_α e^{iλ_α/a}`.
    pub fn from_local(p: &[f64], lam: &[f64], a: f64) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(VarqError::InvalidState("negative population".into()));
        }
        SpinState::new(DVector::from_iterator(
            p.len(),
            p.iter().zip(lam).map(|(&x, &l)| Complex64::from_polar(x.sqrt(), l / a)),
        ))
    }
}

/// `h_αβ = −b U_αβ e^{−iθ_αβ/a}`.
pub fn build_hamiltonian(spec: &SpinSystemSpec) -> DMatrix<Complex64> {
    let n = spec.len();
    let h = DMatrix::from_fn(n, n, |i, j| {
        Complex64::from_polar(-spec.b * spec.u[(i, j)], 0.0) * Complex64::from_polar(1.0, -spec.theta[(i, j)] / spec.a)
    });
    debug_assert!((0..n).all(|i| (0..n).all(|j| h[(i, j)] == h[(j, i)].conj())));
    h
}

/// `ψ(t) = exp(−i h t / a) ψ(0)` by diagonalizing `h`.
pub fn propagate(spec: &SpinSystemSpec, state: &SpinState, t: f64) -> Result<SpinState> {
    if !t.is_finite() {
        return Err(VarqError::InvalidArgument(format!("time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let eig = nalgebra::SymmetricEigen::new(build_hamiltonian(spec));
    let v = &eig.eigenvectors;
    let mut c = v.adjoint() * &state.psi;
    for (k, w) in eig.eigenvalues.iter().enumerate() {
        c[k] *= Complex64::from_polar(1.0, -w * t / spec.a);
    }
    Ok(SpinState { psi: v * c })
}

/// `⟨ψ|h|ψ⟩`.
pub fn energy(spec: &SpinSystemSpec, state: &SpinState) -> f64 {
    (state.psi.adjoint() * build_hamiltonian(spec) * &state.psi)[(0, 0)].re
}

fn phase_arg(spec: &SpinSystemSpec, lam: &[f64], i: usize, j: usize) -> f64 {
    (lam[i] - lam[j] + spec.theta[(i, j)]) / spec.a
}

/// `γ_αβ = √(p_α p_β) U_αβ · (−b/a) sin((λ_α − λ_β + θ_αβ)/a)`.
pub fn gamma_currents(spec: &SpinSystemSpec, p: &[f64], lam: &[f64]) -> Result<DMatrix<f64>> {
    check_local(spec, p, lam)?;
    let n = spec.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (p[i] * p[j]).sqrt() * spec.u[(i, j)] * (-spec.b / spec.a) * phase_arg(spec, lam, i, j).sin()
    }))
}

/// `ṗ_α + Σ_β (γ_αβ − γ_βα)` for a supplied rate `ṗ`.
pub fn balance_residual(gamma: &DMatrix<f64>, p_dot: &[f64]) -> Vec<f64> {
    let n = gamma.nrows();
    (0..n).map(|i| p_dot[i] + (0..n).map(|j| gamma[(i, j)] - gamma[(j, i)]).sum::<f64>()).collect()
}

fn check_local(spec: &SpinSystemSpec, p: &[f64], lam: &[f64]) -> Result<()> {
    let n = spec.len();
    if p.len() != n || lam.len() != n {
        return Err(VarqError::InvalidArgument(format!("local state must have {n} components")));
    }
    if let Some(i) = p.iter().position(|&x| !(x > P_FLOOR)) {
        return Err(VarqError::rejected("population below floor", Some(i)));
    }
    Ok(())
}

/// Right-hand side of the local equations, state laid out as `[p; λ]`.
pub fn local_rates(spec: &SpinSystemSpec, p: &[f64], lam: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = spec.len();
    let (a, b) = (spec.a, spec.b);
    let mut p_dot = vec![0.0; n];
    let mut lam_dot = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let u = spec.u[(i, j)];
            if u == 0.0 {
                continue;
            }
            let phi = phase_arg(spec, lam, i, j);
            lam_dot[i] += u * (p[j] / p[i]).sqrt() * b * phi.cos();
            if j > i {
                let f = 2.0 * b / a * u * (p[i] * p[j]).sqrt() * phi.sin();
                p_dot[i] += f;
                p_dot[j] -= f;
            }
        }
    }
    (p_dot, lam_dot)
}

/// One RK4 step of the local `(p, λ)` equations.
pub fn local_form_step(spec: &SpinSystemSpec, p: &[f64], lam: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_local(spec, p, lam)?;
    let n = spec.len();
    let y: Vec<f64> = p.iter().chain(lam).cloned().collect();
    let out = rk4_step(
        |y: &[f64]| {
            let (pd, ld) = local_rates(spec, &y[..n], &y[n..]);
            pd.into_iter().chain(ld).collect()
        },
        &y,
        dt,
    )?;
    let (p1, l1) = out.split_at(n);
    check_local(spec, p1, l1)?;
    Ok((p1.to_vec(), l1.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> SpinSystemSpec {
        SpinSystemSpec::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), DMatrix::zeros(2, 2), 1.0, -1.0)
            .unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> SpinSystemSpec {
        let mut u = DMatrix::zeros(n, n);
        let mut th = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.random_range(-1.0..1.0);
                u[(i, j)] = x;
                u[(j, i)] = x;
                if j > i {
                    let t = rng.random_range(-2.0..2.0);
                    th[(i, j)] = t;
                    th[(j, i)] = -t;
                }
            }
        }
        SpinSystemSpec::new(u, th, 0.7, 1.3).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> SpinState {
        let v = DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let norm = v.norm();
        SpinState::new(v / Complex64::new(norm, 0.0)).unwrap()
    }

    #[test]
    fn pauli_hamiltonian() {
        let h = build_hamiltonian(&pauli_x());
        assert_eq!(h[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(h[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(h[(0, 0)].norm(), 0.0);
    }

    #[test]
    fn hermitian_with_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_spec(&mut rng, 4);
        let h = build_hamiltonian(&s);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
        let z = SpinSystemSpec::new(s.u.clone(), s.theta.clone(), 0.7, 0.0).unwrap();
        assert!(build_hamiltonian(&z).iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn invalid_specs() {
        let u = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(SpinSystemSpec::new(u, DMatrix::zeros(2, 2), 1.0, 1.0).is_err());
        let th = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(SpinSystemSpec::new(DMatrix::identity(2, 2), th, 1.0, 1.0).is_err());
        assert!(SpinSystemSpec::new(DMatrix::identity(1, 1), DMatrix::zeros(1, 1), 1.0, 1.0).is_err());
    }

    #[test]
    fn rabi_oscillation() {
        let s = pauli_x();
        let psi0 = SpinState::basis(2, 0);
        assert_eq!(propagate(&s, &psi0, 0.0).unwrap().psi, psi0.psi);
        for k in 0..50 {
            let t = 0.13 * k as f64;
            let p = propagate(&s, &psi0, t).unwrap().populations();
            assert!((p[1] - t.sin().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn local_form_matches_propagation() {
        let s = pauli_x();
        let t0 = 0.1;
        let st = propagate(&s, &SpinState::basis(2, 0), t0).unwrap();
        let (mut p, mut lam) = st.to_local(1.0);
        let dt = 1e-3;
        let steps = ((std::f64::consts::FRAC_PI_2 - 0.2) / dt) as usize;
        for k in 1..=steps {
            let (p1, l1) = local_form_step(&s, &p, &lam, dt).unwrap();
            p = p1;
            lam = l1;
            let exact = propagate(&s, &st, k as f64 * dt).unwrap();
            let local = SpinState::from_local(&p, &lam, 1.0).unwrap();
            assert!((exact.psi.clone() - local.psi).norm() < 1e-4);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rates_vanish_for_equal_phases() {
        let s = SpinSystemSpec::new(DMatrix::from_element(3, 3, 0.4), DMatrix::zeros(3, 3), 1.0, 2.0).unwrap();
        let (pd, _) = local_rates(&s, &[1.0 / 3.0; 3], &[0.2; 3]);
        assert!(pd.iter().all(|&x| x == 0.0));
        let g = gamma_currents(&s, &[0.2, 0.3, 0.5], &[0.1; 3]).unwrap();
        assert!(balance_residual(&g, &[0.0; 3]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn floor_is_enforced() {
        let s = pauli_x();
        assert!(matches!(local_form_step(&s, &[1.0, 0.0], &[0.0, 0.0], 1e-3), Err(VarqError::StepRejected { .. })));
    }

    proptest! {
        #[test]
        fn propagation_is_unitary(seed in 0u64..1000, t in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_spec(&mut rng, 5);
            let st = random_state(&mut rng, 5);
            let out = propagate(&s, &st, t).unwrap();
            prop_assert!((out.psi.norm_squared() - 1.0).abs() < 1e-12);
            prop_assert!((energy(&s, &out) - energy(&s, &st)).abs() < 1e-12);
        }

        #[test]
        fn exchange_balances(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_spec(&mut rng, 4);
            let st = random_state(&mut rng, 4);
            let (p, lam) = st.to_local(s.a);
            let (pd, _) = local_rates(&s, &p, &lam);
            prop_assert!(pd.iter().sum::<f64>().abs() < 1e-14);
            let g = gamma_currents(&s, &p, &lam).unwrap();
            prop_assert!(balance_residual(&g, &pd).iter().all(|x| x.abs() < 1e-13));
        }

        #[test]
        fn local_rates_match_schrodinger(seed in 0u64..1000) {
            // d/dt of √p e^{iλ/a} must equal −i h ψ / a
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_spec(&mut rng, 3);
            let st = random_state(&mut rng, 3);
            let (p, lam) = st.to_local(s.a);
            let (pd, ld) = local_rates(&s, &p, &lam);
            let hpsi = build_hamiltonian(&s) * &st.psi;
            for k in 0..3 {
                let z = st.psi[k];
                let dz = z * Complex64::new(pd[k] / (2.0 * p[k]), ld[k] / s.a);
                let want = -Complex64::i() * hpsi[k] / s.a;
                prop_assert!((dz - want).norm() < 1e-10 * (1.0 + want.norm()));
            }
        }
    }
}
