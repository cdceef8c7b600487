//! Generalized Madelung hydrodynamics: a density `ρ` and multiplier `λ`
//! coupled through a diffusion current whose strength `ρd²(ρ)` may carry a
//! first-order pole at `ρ = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VarqError};
use crate::mechanics::{
    central_gradient, face_velocities, transport_density, upwind_density_step, ClassicalEnsemble,
    NaturalSystemSpec,
};
use crate::numerics::{Grid1D, TridiagonalOperator};

/// Relative density floor; cells below `RHO_FLOOR · max ρ` are masked.
pub const RHO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionMode {
    /// `d ≡ 0`
    Classical,
    /// `ρd²(ρ) = (a/2)²/ρ + g(ρ)`
    QuantumPole,
}

#[derive(Clone)]
pub struct DiffusionSpec {
    pub a: f64,
    pub g: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub mode: DiffusionMode,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("a", &self.a)
            .field("g", &self.g.as_ref().map(|_| "<fn>"))
            .field("mode", &self.mode)
            .finish()
    }
}

impl DiffusionSpec {
    pub fn classical() -> Self {
        DiffusionSpec { a: 1.0, g: None, mode: DiffusionMode::Classical }
    }

    pub fn quantum(a: f64) -> Result<Self> {
        let s = DiffusionSpec { a, g: None, mode: DiffusionMode::QuantumPole };
        s.validate()?;
        Ok(s)
    }

    pub fn with_regular_part(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        self.g = Some(Arc::new(g));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(VarqError::InvalidSpec(format!("action constant must be positive, got {}", self.a)));
        }
        if !self.g_at(0.0).is_finite() {
            return Err(VarqError::InvalidSpec("g(ρ) must be finite at ρ = 0".into()));
        }
        Ok(())
    }

    fn g_at(&self, rho: f64) -> f64 {
        self.g.as_ref().map_or(0.0, |g| g(rho))
    }

    fn g_prime(&self, rho: f64) -> f64 {
        match &self.g {
            None => 0.0,
            Some(g) => {
                let e = 1e-6 * rho.abs().max(1e-6);
                (g(rho + e) - g((rho - e).max(0.0))) / (rho + e - (rho - e).max(0.0))
            }
        }
    }

    /// The regular combination `ρd(ρ)`, positive branch.
    pub fn rho_d(&self, rho: f64) -> f64 {
        match self.mode {
            DiffusionMode::Classical => 0.0,
            DiffusionMode::QuantumPole => {
                let r = 0.25 * self.a * self.a + rho * self.g_at(rho);
                r.max(0.0).sqrt()
            }
        }
    }

    /// `ρd²(ρ)`, singular at `ρ = 0` in the quantum mode.
    pub fn rho_d2(&self, rho: f64) -> f64 {
        match self.mode {
            DiffusionMode::Classical => 0.0,
            DiffusionMode::QuantumPole => 0.25 * self.a * self.a / rho + self.g_at(rho),
        }
    }
}

/// `(ρ, λ)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub lam: Vec<f64>,
}

impl HydroState {
    pub fn new(grid: Grid1D, rho: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.len() || lam.len() != grid.len() {
            return Err(VarqError::InvalidState("field lengths do not match the grid".into()));
        }
        if rho.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(VarqError::InvalidState("density must be nonnegative and finite".into()));
        }
        let mass = grid.integrate(&rho);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(VarqError::InvalidState(format!("density integrates to {mass}, expected 1")));
        }
        Ok(HydroState { grid, rho, lam })
    }

    pub fn total_probability(&self) -> f64 {
        self.grid.integrate(&self.rho)
    }

    pub fn centroid(&self) -> f64 {
        crate::mechanics::first_moment(&self.grid, &self.rho)
    }

    /// Cells where `ρ` exceeds the relative floor.
    pub fn mask(&self) -> Vec<bool> {
        density_mask(&self.rho)
    }
}

pub(crate) fn density_mask(rho: &[f64]) -> Vec<bool> {
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    rho.iter().map(|&r| r > RHO_FLOOR * peak).collect()
}

/// Diffusion current `i = ρd(ρ) ∂ρ / m` at the nodes.
pub fn diffusion_current(spec: &NaturalSystemSpec, dspec: &DiffusionSpec, grid: &Grid1D, rho: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = rho.iter().position(|&r| !(r >= 0.0)) {
        return Err(VarqError::InvalidState(format!("negative density at node {i}")));
    }
    let grad = central_gradient(grid, rho);
    (0..grid.len()).map(|i| Ok(dspec.rho_d(rho[i]) * grad[i] / spec.mass_at(grid.node(i))?)).collect()
}

/// Per-face energy contributions; entry `k` is the face left of node `k`,
/// with one extra face right of the last node.
fn face_energies(spec: &NaturalSystemSpec, dspec: &DiffusionSpec, state: &HydroState) -> Result<Vec<f64>> {
    let g = &state.grid;
    let n = g.len();
    let h = g.spacing();
    let mask = state.mask();
    let amp: Vec<f64> = state.rho.iter().map(|r| r.sqrt()).collect();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let q = g.q_min() + (k as f64 - 0.5) * h;
        let mu = 1.0 / spec.mass_at(q)?;
        let (l, r) = (k.checked_sub(1), if k < n { Some(k) } else { None });
        let rl = l.map_or(0.0, |i| state.rho[i]);
        let rr = r.map_or(0.0, |i| state.rho[i]);
        let mut e = 0.0;
        if let (Some(i), Some(j)) = (l, r) {
            if mask[i] && mask[j] {
                let dl = (state.lam[j] - state.lam[i]) / h;
                e += 0.5 * (rl + rr) * 0.5 * mu * dl * dl;
            }
        }
        if dspec.mode == DiffusionMode::QuantumPole {
            let d_amp = (r.map_or(0.0, |i| amp[i]) - l.map_or(0.0, |i| amp[i])) / h;
            e += 0.5 * dspec.a * dspec.a * mu * d_amp * d_amp;
            let d_rho = (rr - rl) / h;
            e += 0.5 * dspec.g_at(0.5 * (rl + rr)) * mu * d_rho * d_rho;
        }
        out.push(e);
    }
    Ok(out)
}

/// Effective Hamiltonian density
/// `ρ[(∂λ)²/(2m) + V] + ½ ρd²(ρ) (∂ρ)²/m`, with gradient terms built on
/// cell faces and shared between the two adjacent nodes. Its grid integral
/// equals the discrete energy of the amplitude `√ρ e^{iλ/a}`.
pub fn effective_hamiltonian_density(
    spec: &NaturalSystemSpec,
    dspec: &DiffusionSpec,
    state: &HydroState,
) -> Result<Vec<f64>> {
    let g = &state.grid;
    let n = g.len();
    let faces = face_energies(spec, dspec, state)?;
    Ok((0..n)
        .map(|i| {
            let left = if i == 0 { faces[0] } else { 0.5 * faces[i] };
            let right = if i == n - 1 { faces[n] } else { 0.5 * faces[i + 1] };
            state.rho[i] * spec.potential.value(g.node(i)) + left + right
        })
        .collect())
}

/// Locate an interior node: a masked cell with appreciable density
/// (`√floor` of the peak) on both sides. Masked tails fluctuating around the
/// floor do not count.
fn interior_node(rho: &[f64], mask: &[bool]) -> Option<usize> {
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let big = RHO_FLOOR.sqrt() * peak;
    let first = rho.iter().position(|&r| r > big)?;
    let last = rho.iter().rposition(|&r| r > big)?;
    (first..=last).find(|&i| !mask[i])
}

/// Quantum potential `−(a²/2) ∂(m⁻¹∂√ρ)/√ρ` plus the regular `g`
/// contribution, at unmasked nodes.
pub fn quantum_potential(spec: &NaturalSystemSpec, dspec: &DiffusionSpec, grid: &Grid1D, rho: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if dspec.mode == DiffusionMode::Classical {
        return Ok(vec![0.0; n]);
    }
    let h = grid.spacing();
    let amp: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let op = TridiagonalOperator::kinetic_plus_potential(
        grid,
        dspec.a * dspec.a,
        |q| 1.0 / spec.mass.value(q),
        &vec![0.0; n],
    )?;
    let t_amp = op.apply(&amp);
    let mask = density_mask(rho);
    let mut out = vec![0.0; n];
    let with_g = dspec.g.is_some();
    let mu = if with_g { spec.face_inverse_mass(grid)? } else { Vec::new() };
    let grad = if with_g { central_gradient(grid, rho) } else { Vec::new() };
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let mut qi = t_amp[i] / amp[i];
        if with_g {
            let flux = |k: usize| dspec.g_at(0.5 * (rho[k] + rho[k + 1])) * mu[k] * (rho[k + 1] - rho[k]) / h;
            let fr = if i + 1 < n { flux(i) } else { 0.0 };
            let fl = if i > 0 { flux(i - 1) } else { 0.0 };
            let m = spec.mass_at(grid.node(i))?;
            qi += 0.5 * dspec.g_prime(rho[i]) * grad[i] * grad[i] / m - (fr - fl) / h;
        }
        out[i] = qi;
    }
    Ok(out)
}

/// One step of the coupled `(ρ, λ)` system.
///
/// In the classical mode the step is exactly
/// [`mechanics::transport_density`](crate::mechanics::transport_density).
/// Otherwise `ρ` is advanced by conservative upwinding with the face
/// velocities of `λ`, then `λ` by
/// `∂_t λ = −[(∂λ)²/(2m) + V + Q(ρ)]` with `Q` evaluated on the updated
/// density. Masked cells keep their `λ` and carry no flux.
pub fn madelung_step(spec: &NaturalSystemSpec, dspec: &DiffusionSpec, state: &HydroState, dt: f64) -> Result<HydroState> {
    let grid = &state.grid;
    if dspec.mode == DiffusionMode::Classical {
        let ens = ClassicalEnsemble { grid: *grid, rho: state.rho.clone(), s: state.lam.clone() };
        let next = transport_density(&ens, spec, dt)?;
        return Ok(HydroState { grid: *grid, rho: next.rho, lam: next.s });
    }
    let mask = state.mask();
    if let Some(i) = interior_node(&state.rho, &mask) {
        return Err(VarqError::rejected("density node below floor", Some(i)));
    }
    let n = grid.len();
    let mu = spec.face_inverse_mass(grid)?;
    let mut vel = face_velocities(grid, &state.lam, &mu);
    for (k, v) in vel.iter_mut().enumerate() {
        if !(mask[k] && mask[k + 1]) {
            *v = 0.0;
        }
    }
    let rho = upwind_density_step(grid, &state.rho, &vel, dt)?;
    if let Some(i) = interior_node(&rho, &density_mask(&rho)) {
        return Err(VarqError::rejected("density node formed", Some(i)));
    }
    let q_pot = quantum_potential(spec, dspec, grid, &rho)?;
    let mut lam = state.lam.clone();
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let vr = if i + 1 < n { vel[i] } else { 0.0 };
        let vl = if i > 0 { vel[i - 1] } else { 0.0 };
        let m = spec.mass_at(grid.node(i))?;
        // average of the two one-sided kinetic energies
        let kin = 0.25 * m * (vr * vr + vl * vl);
        lam[i] -= dt * (kin + spec.potential.value(grid.node(i)) + q_pot[i]);
    }
    if let Some(i) = lam.iter().position(|x| !x.is_finite()) {
        return Err(VarqError::numerical("phase became non-finite", vec![("node".into(), i as f64)]));
    }
    Ok(HydroState { grid: *grid, rho, lam })
}

/// Residuals of the `λ` and `ρ` equations at one state, given time
/// derivatives. Masked cells report zero.
pub fn balance_residuals(
    spec: &NaturalSystemSpec,
    dspec: &DiffusionSpec,
    state: &HydroState,
    dlam_dt: &[f64],
    drho_dt: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = &state.grid;
    let n = g.len();
    let mask = state.mask();
    let q_pot = quantum_potential(spec, dspec, g, &state.rho)?;
    let grad = central_gradient(g, &state.lam);
    let mut r_lam = vec![0.0; n];
    let mut flux = vec![0.0; n];
    for i in 0..n {
        let m = spec.mass_at(g.node(i))?;
        if mask[i] {
            r_lam[i] = dlam_dt[i] + grad[i] * grad[i] / (2.0 * m) + spec.potential.value(g.node(i)) + q_pot[i];
            flux[i] = state.rho[i] * grad[i] / m;
        }
    }
    let div = central_gradient(g, &flux);
    let r_rho = (0..n).map(|i| drho_dt[i] + div[i]).collect();
    Ok((r_lam, r_rho))
}

/// Stored `(ρ, λ)` frames at spacing `dt`.
#[derive(Debug, Clone)]
pub struct HydroHistory {
    pub dt: f64,
    pub frames: Vec<HydroState>,
}

impl HydroHistory {
    pub fn record(
        spec: &NaturalSystemSpec,
        dspec: &DiffusionSpec,
        state: &HydroState,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self> {
        let mut frames = vec![state.clone()];
        for _ in 0..n_steps {
            let next = madelung_step(spec, dspec, frames.last().expect("nonempty"), dt)?;
            frames.push(next);
        }
        Ok(HydroHistory { dt, frames })
    }

    /// `t → −t`, `λ → −λ`, `ρ → ρ`.
    pub fn time_reversed(&self) -> Self {
        let frames = self
            .frames
            .iter()
            .rev()
            .map(|f| HydroState { grid: f.grid, rho: f.rho.clone(), lam: f.lam.iter().map(|x| -x).collect() })
            .collect();
        HydroHistory { dt: self.dt, frames }
    }

    /// `(λ-residual, ρ-residual)` at interior frames.
    pub fn residuals(&self, spec: &NaturalSystemSpec, dspec: &DiffusionSpec) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let f = &self.frames;
        let inv = 1.0 / (2.0 * self.dt);
        (1..f.len().saturating_sub(1))
            .map(|k| {
                let dl: Vec<f64> = f[k + 1].lam.iter().zip(&f[k - 1].lam).map(|(a, b)| (a - b) * inv).collect();
                let dr: Vec<f64> = f[k + 1].rho.iter().zip(&f[k - 1].rho).map(|(a, b)| (a - b) * inv).collect();
                balance_residuals(spec, dspec, &f[k], &dl, &dr)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{build_grid, eigensolve_lowest};
    use crate::potential::Potential;
    use proptest::prelude::*;

    fn ground(n: usize) -> (Grid1D, NaturalSystemSpec, f64, Vec<f64>) {
        let g = build_grid(-8.0, 8.0, n).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
        let op = TridiagonalOperator::kinetic_plus_potential(&g, 1.0, |_| 1.0, &spec.potential.sample(&g.nodes())).unwrap();
        let p = eigensolve_lowest(&op, &g, 1).unwrap().remove(0);
        let rho = p.vector.iter().map(|v| v * v).collect();
        (g, spec, p.value, rho)
    }

    #[test]
    fn pole_branch() {
        let d = DiffusionSpec::quantum(1.0).unwrap();
        assert_eq!(d.rho_d(0.3), 0.5);
        assert!((d.rho_d2(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(DiffusionSpec::classical().rho_d(0.3), 0.0);
        assert!(DiffusionSpec::quantum(0.0).is_err());
    }

    #[test]
    fn currents() {
        let g = build_grid(-3.0, 3.0, 121).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::free());
        let flat = vec![1.0 / 6.05; 121];
        let q = DiffusionSpec::quantum(1.0).unwrap();
        assert!(diffusion_current(&spec, &q, &g, &flat).unwrap().iter().all(|&x| x == 0.0));
        let rho = g.sample(|x| (-x * x).exp());
        let cur = diffusion_current(&spec, &q, &g, &rho).unwrap();
        let grad = central_gradient(&g, &rho);
        for (c, d) in cur.iter().zip(&grad) {
            assert!((c - 0.5 * d).abs() < 1e-15);
        }
        let cl = diffusion_current(&spec, &DiffusionSpec::classical(), &g, &rho).unwrap();
        assert!(cl.iter().all(|&x| x == 0.0));
        let mut neg = rho.clone();
        neg[3] = -1e-3;
        assert!(matches!(diffusion_current(&spec, &q, &g, &neg), Err(VarqError::InvalidState(_))));
    }

    #[test]
    fn ground_state_energy_density_integrates_to_eigenvalue() {
        let (g, spec, w0, rho) = ground(801);
        let st = HydroState::new(g, rho, vec![-w0 * 0.7; 801]).unwrap();
        let he = effective_hamiltonian_density(&spec, &DiffusionSpec::quantum(1.0).unwrap(), &st).unwrap();
        assert!((g.integrate(&he) - w0).abs() < 1e-10);
        assert!((w0 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn first_term_linear_in_density() {
        let g = build_grid(-4.0, 4.0, 161).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
        let rho = crate::mechanics::normalized_gaussian(&g, 0.2, 0.8).unwrap();
        let lam = g.sample(|q| 0.3 * q * q);
        let a = HydroState { grid: g, rho: rho.clone(), lam: lam.clone() };
        let b = HydroState { grid: g, rho: rho.iter().map(|r| 2.0 * r).collect(), lam };
        let c = DiffusionSpec::classical();
        let ha = effective_hamiltonian_density(&spec, &c, &a).unwrap();
        let hb = effective_hamiltonian_density(&spec, &c, &b).unwrap();
        for (x, y) in ha.iter().zip(&hb) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs().max(1e-300));
        }
        let flat = HydroState { grid: g, rho: rho.clone(), lam: vec![1.0; 161] };
        let free = NaturalSystemSpec::unit_mass(Potential::free());
        assert!(effective_hamiltonian_density(&free, &c, &flat).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stationary_ground_state() {
        let (g, spec, w0, rho) = ground(801);
        let st = HydroState::new(g, rho.clone(), vec![0.0; 801]).unwrap();
        let d = DiffusionSpec::quantum(1.0).unwrap();
        let dt = 1e-4;
        let mut cur = st;
        for _ in 0..100 {
            cur = madelung_step(&spec, &d, &cur, dt).unwrap();
        }
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        for i in 0..801 {
            assert!((cur.rho[i] - rho[i]).abs() < 1e-14);
            if rho[i] > 1e-8 * peak {
                assert!((cur.lam[i] + w0 * 0.01).abs() < 1e-9, "{i} {}", cur.lam[i]);
            }
        }
    }

    #[test]
    fn classical_mode_is_transport() {
        let g = build_grid(-4.0, 4.0, 201).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
        let ens = ClassicalEnsemble::gaussian(g, 0.4, 0.5, 0.3).unwrap();
        let st = HydroState::new(g, ens.rho.clone(), ens.s.clone()).unwrap();
        let a = madelung_step(&spec, &DiffusionSpec::classical(), &st, 0.01).unwrap();
        let b = transport_density(&ens, &spec, 0.01).unwrap();
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.lam, b.s);
    }

    #[test]
    fn interior_node_rejected() {
        let g = build_grid(-4.0, 4.0, 201).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
        let mut rho = g.sample(|q| q * q * (-q * q).exp());
        let norm = g.integrate(&rho);
        rho.iter_mut().for_each(|r| *r /= norm);
        let st = HydroState::new(g, rho, vec![0.0; 201]).unwrap();
        let r = madelung_step(&spec, &DiffusionSpec::quantum(1.0).unwrap(), &st, 1e-5);
        assert!(matches!(r, Err(VarqError::StepRejected { location: Some(100), .. })));
    }

    #[test]
    fn quantum_coupling_changes_classical_update() {
        // the d(ρ) term is inert classically but not under the extended balance
        let g = build_grid(-4.0, 4.0, 201).unwrap();
        let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
        let ens = ClassicalEnsemble::gaussian(g, 0.4, 0.5, 0.0).unwrap();
        let st = HydroState::new(g, ens.rho.clone(), ens.s.clone()).unwrap();
        let dt = 1e-3;
        let mut a = st.clone();
        let mut b = st;
        for _ in 0..20 {
            a = madelung_step(&spec, &DiffusionSpec::classical(), &a, dt).unwrap();
            b = madelung_step(&spec, &DiffusionSpec::quantum(1.0).unwrap(), &b, dt).unwrap();
        }
        let d = a.rho.iter().zip(&b.rho).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d > 1e-4);
    }

    proptest! {
        #[test]
        fn probability_conserved(c in -1.0f64..1.0, w in 0.5f64..1.2, k in 0.0f64..0.8) {
            let g = build_grid(-6.0, 6.0, 241).unwrap();
            let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
            let rho = crate::mechanics::normalized_gaussian(&g, c, w).unwrap();
            let lam = g.sample(|q| k * q);
            let d = DiffusionSpec::quantum(1.0).unwrap().with_regular_part(|r| 0.1 * r).unwrap();
            let mut st = HydroState::new(g, rho, lam).unwrap();
            for _ in 0..20 {
                st = madelung_step(&spec, &d, &st, 5e-4).unwrap();
                prop_assert!((st.total_probability() - 1.0).abs() < 1e-9);
            }
        }
    }
}
