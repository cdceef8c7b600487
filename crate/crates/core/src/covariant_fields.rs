//! De Donder–Weyl description of one real scalar field in 1+1 dimensions
//! with metric `diag(+, −)`: covariant Legendre transform, polymomenta,
//! Hamilton equations with the spatial constraint solved in closed form, and
//! the energy–momentum tensor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VarqError};
use crate::potential::Potential;

/// `L = ½ η (w₀² − w₁²) − V(q)`.
#[derive(Debug, Clone)]
pub struct FieldLagrangianSpec {
    pub eta: f64,
    pub potential: Potential,
}

impl FieldLagrangianSpec {
    pub fn new(eta: f64, potential: Potential) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(VarqError::InvalidSpec(format!("η must be positive, got {eta}")));
        }
        Ok(FieldLagrangianSpec { eta, potential })
    }

    /// Klein–Gordon: `V = m² q² / 2`.
    pub fn klein_gordon(eta: f64, mass: f64) -> Result<Self> {
        FieldLagrangianSpec::new(eta, Potential::harmonic(mass * mass))
    }

    pub fn lagrangian(&self, q: f64, w0: f64, w1: f64) -> f64 {
        0.5 * self.eta * (w0 * w0 - w1 * w1) - self.potential.value(q)
    }
}

/// Periodic spatial grid `x_j = j L / N`, `j = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    length: f64,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || n < 4 {
            return Err(VarqError::InvalidArgument(format!("periodic grid needs L > 0 and N ≥ 4, got {length}, {n}")));
        }
        Ok(PeriodicGrid { length, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|j| f(self.node(j))).collect()
    }

    /// Wavenumber of Fourier mode `k` (`2πk/L`).
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.length
    }
}

/// Field `q(x)` and time polymomentum `π⁰ = η ∂₀q` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState1p1 {
    pub grid: PeriodicGrid,
    pub q: Vec<f64>,
    pub pi0: Vec<f64>,
    pub t: f64,
}

impl FieldState1p1 {
    pub fn new(grid: PeriodicGrid, q: Vec<f64>, pi0: Vec<f64>, t: f64) -> Result<Self> {
        if q.len() != grid.len() || pi0.len() != grid.len() {
            return Err(VarqError::InvalidState("field lengths do not match the grid".into()));
        }
        if q.iter().chain(&pi0).any(|x| !x.is_finite()) || !t.is_finite() {
            return Err(VarqError::InvalidState("field state is not finite".into()));
        }
        Ok(FieldState1p1 { grid, q, pi0, t })
    }

    /// `q = A cos(k x − ω t)` at `t = 0` with `ω = √(k² + m²)` for the
    /// Klein–Gordon potential of mass `m`.
    pub fn plane_wave(spec: &FieldLagrangianSpec, grid: PeriodicGrid, mode: usize, amp: f64, mass: f64) -> Result<Self> {
        let k = grid.wavenumber(mode);
        let w = (k * k + mass * mass).sqrt();
        let q = grid.sample(|x| amp * (k * x).cos());
        let pi0 = grid.sample(|x| spec.eta * amp * w * (k * x).sin());
        FieldState1p1::new(grid, q, pi0, 0.0)
    }

    /// Space polymomentum from the constraint, `π¹ = −η ∂₁q` (central).
    pub fn pi1(&self, spec: &FieldLagrangianSpec) -> Vec<f64> {
        gradient(&self.grid, &self.q).into_iter().map(|g| -spec.eta * g).collect()
    }
}

fn gradient(grid: &PeriodicGrid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.spacing();
    (0..n).map(|j| (f[(j + 1) % n] - f[(j + n - 1) % n]) / (2.0 * h)).collect()
}

/// `(π⁰, π¹, H)` for velocities `w = (∂₀q, ∂₁q)` at field value `q`.
/// `H = ((π⁰)² − (π¹)²)/(2η) + V` is a Lorentz scalar, not an energy.
pub fn covariant_legendre(spec: &FieldLagrangianSpec, q: f64, w0: f64, w1: f64) -> (f64, f64, f64) {
    let pi0 = spec.eta * w0;
    let pi1 = -spec.eta * w1;
    (pi0, pi1, covariant_hamiltonian(spec, q, pi0, pi1))
}

pub fn covariant_hamiltonian(spec: &FieldLagrangianSpec, q: f64, pi0: f64, pi1: f64) -> f64 {
    (pi0 * pi0 - pi1 * pi1) / (2.0 * spec.eta) + spec.potential.value(q)
}

/// `(∂H/∂π⁰, ∂H/∂π¹)`, which returns the velocities `(w₀, w₁)`.
pub fn covariant_velocities(spec: &FieldLagrangianSpec, pi0: f64, pi1: f64) -> (f64, f64) {
    (pi0 / spec.eta, -pi1 / spec.eta)
}

/// Canonical energy density `H_c = (π⁰)²/(2η) + η(∂₁q)²/2 + V(q)`.
pub fn canonical_reduction(spec: &FieldLagrangianSpec, pi0: f64, dq_dx1: f64, q: f64) -> f64 {
    pi0 * pi0 / (2.0 * spec.eta) + 0.5 * spec.eta * dq_dx1 * dq_dx1 + spec.potential.value(q)
}

/// `∂H_c/∂π⁰`, the time derivative of the field.
pub fn canonical_velocity(spec: &FieldLagrangianSpec, pi0: f64) -> f64 {
    pi0 / spec.eta
}

fn force(spec: &FieldLagrangianSpec, grid: &PeriodicGrid, q: &[f64], out: &mut [f64]) {
    let n = q.len();
    let h2 = grid.spacing().powi(2);
    // −∂₁π¹ − V′ with π¹ = −η∂₁q on the staggered faces
    for j in 0..n {
        let lap = (q[(j + 1) % n] - 2.0 * q[j] + q[(j + n - 1) % n]) / h2;
        out[j] = spec.eta * lap - spec.potential.derivative(q[j]);
    }
}

/// Velocity-Verlet integration of `∂₀q = π⁰/η`, `∂₀π⁰ = −∂₁π¹ − V′(q)`.
pub fn ddw_evolve(spec: &FieldLagrangianSpec, state: &FieldState1p1, dt: f64, n_steps: usize) -> Result<FieldState1p1> {
    let mut out = state.clone();
    ddw_evolve_with(spec, &mut out, dt, n_steps, |_| {})?;
    Ok(out)
}

/// As [`ddw_evolve`], calling `observe` after every step.
pub fn ddw_evolve_with(
    spec: &FieldLagrangianSpec,
    state: &mut FieldState1p1,
    dt: f64,
    n_steps: usize,
    mut observe: impl FnMut(&FieldState1p1),
) -> Result<()> {
    let h = state.grid.spacing();
    if !dt.is_finite() || dt.abs() > h {
        return Err(VarqError::rejected(format!("CFL violated: |dt| = {dt} exceeds h = {h}"), None));
    }
    let n = state.q.len();
    let mut f = vec![0.0; n];
    force(spec, &state.grid, &state.q, &mut f);
    let t0 = state.t;
    for step in 1..=n_steps {
        for j in 0..n {
            state.pi0[j] += 0.5 * dt * f[j];
            state.q[j] += dt * state.pi0[j] / spec.eta;
        }
        force(spec, &state.grid, &state.q, &mut f);
        for j in 0..n {
            state.pi0[j] += 0.5 * dt * f[j];
        }
        state.t = t0 + step as f64 * dt;
        if let Some(j) = state.q.iter().chain(&state.pi0).position(|x| !x.is_finite()) {
            return Err(VarqError::numerical("field became non-finite", vec![("index".into(), (j % n) as f64)]));
        }
        observe(state);
    }
    Ok(())
}

/// Mixed tensor `T^σ_ν` at every node, stored as `[T⁰₀, T⁰₁, T¹₀, T¹₁]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMomentum {
    pub grid: PeriodicGrid,
    pub t: Vec<[f64; 4]>,
}

impl EnergyMomentum {
    pub fn energy_density(&self) -> Vec<f64> {
        self.t.iter().map(|c| c[0]).collect()
    }

    /// `(∫T⁰₀ dx, ∫T⁰₁ dx)`.
    pub fn totals(&self) -> (f64, f64) {
        let h = self.grid.spacing();
        self.t.iter().fold((0.0, 0.0), |(e, p), c| (e + h * c[0], p + h * c[1]))
    }
}

/// `T^σ_ν = π^σ ∂_νq − δ^σ_ν L` with central spatial differences.
pub fn energy_momentum(spec: &FieldLagrangianSpec, state: &FieldState1p1) -> EnergyMomentum {
    let dq = gradient(&state.grid, &state.q);
    let t = (0..state.q.len())
        .map(|j| {
            let w0 = state.pi0[j] / spec.eta;
            let w1 = dq[j];
            let l = spec.lagrangian(state.q[j], w0, w1);
            let (p0, p1) = (state.pi0[j], -spec.eta * w1);
            [p0 * w0 - l, p0 * w1, p1 * w0, p1 * w1 - l]
        })
        .collect();
    EnergyMomentum { grid: state.grid, t }
}

/// Pointwise `∂_σ T^σ_ν` between two states a time `dt` apart, from centred
/// time differences and the average of the two spatial divergences.
pub fn conservation_residual(spec: &FieldLagrangianSpec, a: &FieldState1p1, b: &FieldState1p1, dt: f64) -> Vec<[f64; 2]> {
    let (ta, tb) = (energy_momentum(spec, a), energy_momentum(spec, b));
    let n = a.q.len();
    let h = a.grid.spacing();
    let div = |t: &EnergyMomentum, j: usize, c: usize| (t.t[(j + 1) % n][c] - t.t[(j + n - 1) % n][c]) / (2.0 * h);
    (0..n)
        .map(|j| {
            let mut r = [0.0; 2];
            for nu in 0..2 {
                let dt_t = (tb.t[j][nu] - ta.t[j][nu]) / dt;
                r[nu] = dt_t + 0.5 * (div(&ta, j, 2 + nu) + div(&tb, j, 2 + nu));
            }
            r
        })
        .collect()
}

/// Largest Euler–Lagrange residual `η(∂₀²q − ∂₁²q) + V′(q)` over a stored
/// history with uniform step `dt`, using fourth-order stencils in both
/// directions so the leapfrog discretization error is what remains.
pub fn extremal_embedding_check(spec: &FieldLagrangianSpec, history: &[FieldState1p1], dt: f64) -> Result<f64> {
    if history.len() < 5 {
        return Err(VarqError::InvalidArgument("need at least five frames".into()));
    }
    let grid = history[0].grid;
    let n = grid.len();
    let h2 = grid.spacing().powi(2);
    let dt2 = dt * dt;
    let mut worst: f64 = 0.0;
    for k in 2..history.len() - 2 {
        let (qm2, qm1, q0, qp1, qp2) =
            (&history[k - 2].q, &history[k - 1].q, &history[k].q, &history[k + 1].q, &history[k + 2].q);
        for j in 0..n {
            let tt = (-qp2[j] + 16.0 * qp1[j] - 30.0 * q0[j] + 16.0 * qm1[j] - qm2[j]) / (12.0 * dt2);
            let xx = (-q0[(j + 2) % n] + 16.0 * q0[(j + 1) % n] - 30.0 * q0[j] + 16.0 * q0[(j + n - 1) % n]
                - q0[(j + n - 2) % n])
                / (12.0 * h2);
            let r = spec.eta * (tt - xx) + spec.potential.derivative(q0[j]);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Angular frequency of Fourier mode `mode`, from a least-squares fit of
/// its unwrapped phase over `n_steps` steps.
pub fn mode_frequency(spec: &FieldLagrangianSpec, state: &FieldState1p1, mode: usize, dt: f64, n_steps: usize) -> Result<f64> {
    let grid = state.grid;
    let k = grid.wavenumber(mode);
    let project = |q: &[f64]| -> Complex64 {
        q.iter().enumerate().map(|(j, &v)| v * Complex64::from_polar(1.0, -k * grid.node(j))).sum()
    };
    let mut phases = vec![project(&state.q).arg()];
    let mut st = state.clone();
    ddw_evolve_with(spec, &mut st, dt, n_steps, |s| {
        let p = project(&s.q).arg();
        let prev = *phases.last().expect("nonempty");
        phases.push(p + 2.0 * PI * ((prev - p) / (2.0 * PI)).round());
    })?;
    let m = phases.len() as f64;
    let (mut st_, mut sp, mut stt, mut stp) = (0.0, 0.0, 0.0, 0.0);
    for (i, p) in phases.iter().enumerate() {
        let t = i as f64 * dt;
        st_ += t;
        sp += p;
        stt += t * t;
        stp += t * p;
    }
    let slope = (m * stp - st_ * sp) / (m * stt - st_ * st_);
    Ok(-slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kg() -> FieldLagrangianSpec {
        FieldLagrangianSpec::klein_gordon(1.0, 1.0).unwrap()
    }

    #[test]
    fn legendre_examples() {
        let free = FieldLagrangianSpec::new(1.0, Potential::free()).unwrap();
        assert_eq!(covariant_legendre(&free, 0.3, 1.0, 0.0), (1.0, 0.0, 0.5));
        assert_eq!(covariant_legendre(&free, 0.3, 1.0, 1.0).2, 0.0);
        let s = FieldLagrangianSpec::new(2.5, Potential::harmonic(1.0)).unwrap();
        let (p0, p1, _) = covariant_legendre(&s, 0.2, 0.7, -1.3);
        let (w0, w1) = covariant_velocities(&s, p0, p1);
        assert!((w0 - 0.7).abs() < 1e-12 && (w1 + 1.3).abs() < 1e-12);
        assert!(FieldLagrangianSpec::new(0.0, Potential::free()).is_err());
    }

    #[test]
    fn canonical_reduction_examples() {
        let s = kg();
        assert_eq!(canonical_reduction(&s, 0.0, 0.0, 0.7), s.potential.value(0.7));
        let free = FieldLagrangianSpec::new(1.0, Potential::free()).unwrap();
        assert_eq!(canonical_reduction(&free, 1.0, 1.0, 0.0), 1.0);
        assert_eq!(canonical_velocity(&s, 0.3), 0.3);
    }

    #[test]
    fn static_equilibrium() {
        let g = PeriodicGrid::new(10.0, 64).unwrap();
        let st = FieldState1p1::new(g, vec![0.0; 64], vec![0.0; 64], 0.0).unwrap();
        let out = ddw_evolve(&kg(), &st, 0.05, 1000).unwrap();
        assert!(out.q.iter().chain(&out.pi0).all(|&x| x == 0.0));
        let t = energy_momentum(&kg(), &out);
        assert!(t.t.iter().all(|c| c.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn cfl_rejected() {
        let g = PeriodicGrid::new(1.0, 10).unwrap();
        let st = FieldState1p1::new(g, vec![0.0; 10], vec![0.0; 10], 0.0).unwrap();
        assert!(matches!(ddw_evolve(&kg(), &st, 0.2, 1), Err(VarqError::StepRejected { .. })));
    }

    #[test]
    fn massless_pulse_advects() {
        let free = FieldLagrangianSpec::new(1.0, Potential::free()).unwrap();
        let g = PeriodicGrid::new(20.0, 800).unwrap();
        let shape = |x: f64| (-(x - 5.0).powi(2)).exp();
        let dshape = |x: f64| -2.0 * (x - 5.0) * shape(x);
        // right mover: q̇ = −q'
        let st = FieldState1p1::new(g, g.sample(shape), g.sample(|x| -dshape(x)), 0.0).unwrap();
        let out = ddw_evolve(&free, &st, 0.0125, 400).unwrap();
        let want = g.sample(|x| shape(x - 5.0));
        let err = out.q.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn energy_density_is_canonical_hamiltonian() {
        let s = kg();
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let st = FieldState1p1::new(g, g.sample(|x| x.sin() + 0.3 * (3.0 * x).cos()), g.sample(|x| (2.0 * x).cos()), 0.0).unwrap();
        let t = energy_momentum(&s, &st);
        let dq = gradient(&g, &st.q);
        for j in 0..64 {
            assert!((t.t[j][0] - canonical_reduction(&s, st.pi0[j], dq[j], st.q[j])).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_control_residual() {
        let s = kg();
        let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let hist: Vec<FieldState1p1> = (0..6)
            .map(|k| {
                let q = g.sample(|x| ((k * k) as f64 * 0.37 + 3.0 * x).sin() * (1.0 + 0.5 * k as f64));
                FieldState1p1::new(g, q, vec![0.0; 32], k as f64 * 0.1).unwrap()
            })
            .collect();
        assert!(extremal_embedding_check(&s, &hist, 0.1).unwrap() > 1.0);
    }

    #[test]
    fn reversal_retraces() {
        let s = FieldLagrangianSpec::new(1.0, Potential::polynomial(vec![0.0, 0.0, 0.5, 0.0, 0.1])).unwrap();
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let st = FieldState1p1::new(g, g.sample(|x| x.sin()), g.sample(|x| 0.5 * (2.0 * x).cos()), 0.0).unwrap();
        let mut fwd = ddw_evolve(&s, &st, 0.01, 500).unwrap();
        fwd.pi0.iter_mut().for_each(|p| *p = -*p);
        let back = ddw_evolve(&s, &fwd, 0.01, 500).unwrap();
        for j in 0..64 {
            assert!((back.q[j] - st.q[j]).abs() < 1e-10);
            assert!((back.pi0[j] + st.pi0[j]).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn constraint_holds_by_construction(a in 0.1f64..2.0, eta in 0.5f64..2.0) {
            let s = FieldLagrangianSpec::new(eta, Potential::harmonic(1.0)).unwrap();
            let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
            let st = FieldState1p1::new(g, g.sample(|x| a * x.cos()), vec![0.0; 32], 0.0).unwrap();
            let out = ddw_evolve(&s, &st, 0.05, 10).unwrap();
            let pi1 = out.pi1(&s);
            let dq = gradient(&g, &out.q);
            for j in 0..32 {
                prop_assert_eq!(pi1[j] + eta * dq[j], 0.0);
            }
        }
    }
}
