//! Classical probabilistic mechanics: the Legendre transform, Hamilton's
//! equations, and transport of a probability density by a Hamilton–Jacobi
//! action field.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VarqError};
use crate::numerics::{rk4_step, Grid1D};
use crate::potential::{MassProfile, Potential};

/// Natural Lagrangian `L = m(q) w²/2 − V(q)`.
#[derive(Debug, Clone)]
pub struct NaturalSystemSpec {
    pub mass: MassProfile,
    pub potential: Potential,
}

impl NaturalSystemSpec {
    pub fn new(mass: MassProfile, potential: Potential) -> Self {
        NaturalSystemSpec { mass, potential }
    }

    /// Unit mass in the given potential.
    pub fn unit_mass(potential: Potential) -> Self {
        NaturalSystemSpec { mass: MassProfile::Constant(1.0), potential }
    }

    pub fn mass_at(&self, q: f64) -> Result<f64> {
        let m = self.mass.value(q);
        if m > 0.0 && m.is_finite() {
            Ok(m)
        } else {
            Err(VarqError::InvalidSpec(format!("mass must be positive and finite, got m({q}) = {m}")))
        }
    }

    /// Check `m > 0` and finite `V` on every node of `grid`.
    pub fn validate_on(&self, grid: &Grid1D) -> Result<()> {
        for q in grid.nodes() {
            self.mass_at(q)?;
            if !self.potential.value(q).is_finite() {
                return Err(VarqError::InvalidSpec(format!("potential is not finite at q = {q}")));
            }
        }
        Ok(())
    }

    /// Inverse mass sampled at cell faces.
    pub(crate) fn face_inverse_mass(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        (0..grid.len() - 1).map(|i| self.mass_at(grid.face(i)).map(|m| 1.0 / m)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: f64,
    pub p: f64,
}

/// `H(q, p) = p²/(2m(q)) + V(q)`.
pub fn legendre_hamiltonian(spec: &NaturalSystemSpec, q: f64, p: f64) -> Result<f64> {
    let m = spec.mass_at(q)?;
    Ok(p * p / (2.0 * m) + spec.potential.value(q))
}

/// Velocity `w = ∂H/∂p`.
pub fn legendre_velocity(spec: &NaturalSystemSpec, q: f64, p: f64) -> Result<f64> {
    Ok(p / spec.mass_at(q)?)
}

/// Momentum `p = ∂L/∂w`.
pub fn legendre_momentum(spec: &NaturalSystemSpec, q: f64, w: f64) -> Result<f64> {
    Ok(spec.mass_at(q)? * w)
}

/// Trajectory from [`hamilton_flow`]. If the state left the allowed range
/// the run stops and `escaped_at` holds the offending step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<PhaseState>,
    pub escaped_at: Option<usize>,
}

impl Trajectory {
    /// Times at which `p` changes sign, linearly interpolated.
    pub fn momentum_zero_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, w) in self.states.windows(2).enumerate() {
            let (p0, p1) = (w[0].p, w[1].p);
            if p0 != 0.0 && p0.signum() != p1.signum() {
                out.push((k as f64 + p0 / (p0 - p1)) * self.dt);
            }
        }
        out
    }
}

/// Integrate Hamilton's equations with RK4. `bounds` limits `q`; leaving it
/// (or a non-finite state) ends the run with an escape report rather than an
/// error.
pub fn hamilton_flow(
    spec: &NaturalSystemSpec,
    state: PhaseState,
    dt: f64,
    n_steps: usize,
    bounds: Option<(f64, f64)>,
) -> Result<Trajectory> {
    if !(dt.is_finite() && (dt * n_steps as f64).is_finite()) {
        return Err(VarqError::InvalidArgument(format!("time step {dt} with {n_steps} steps is not finite")));
    }
    spec.mass_at(state.q)?;
    let (lo, hi) = bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let rhs = |y: &[f64]| {
        let (q, p) = (y[0], y[1]);
        let m = spec.mass.value(q);
        let dm = spec.mass.derivative(q);
        vec![p / m, p * p * dm / (2.0 * m * m) - spec.potential.derivative(q)]
    };
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(state);
    let mut y = vec![state.q, state.p];
    for k in 1..=n_steps {
        let next = match rk4_step(rhs, &y, dt) {
            Ok(v) => v,
            Err(_) => return Ok(Trajectory { dt, states, escaped_at: Some(k) }),
        };
        if !(next[0] >= lo && next[0] <= hi) || !next[1].is_finite() || spec.mass.value(next[0]) <= 0.0 {
            return Ok(Trajectory { dt, states, escaped_at: Some(k) });
        }
        y = next;
        states.push(PhaseState { q: y[0], p: y[1] });
    }
    Ok(Trajectory { dt, states, escaped_at: None })
}

/// Density `ρ` and action `S` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub s: Vec<f64>,
}

impl ClassicalEnsemble {
    pub fn new(grid: Grid1D, rho: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.len() || s.len() != grid.len() {
            return Err(VarqError::InvalidState("field lengths do not match the grid".into()));
        }
        if rho.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) || s.iter().any(|x| !x.is_finite()) {
            return Err(VarqError::InvalidState("density must be nonnegative and fields finite".into()));
        }
        let mass = grid.integrate(&rho);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(VarqError::InvalidState(format!("density integrates to {mass}, expected 1")));
        }
        Ok(ClassicalEnsemble { grid, rho, s })
    }

    /// Normalized Gaussian of standard deviation `width` with linear action
    /// `S = p0 q`.
    pub fn gaussian(grid: Grid1D, center: f64, width: f64, p0: f64) -> Result<Self> {
        let rho = normalized_gaussian(&grid, center, width)?;
        let s = grid.sample(|q| p0 * q);
        ClassicalEnsemble::new(grid, rho, s)
    }

    pub fn total_probability(&self) -> f64 {
        self.grid.integrate(&self.rho)
    }

    pub fn centroid(&self) -> f64 {
        first_moment(&self.grid, &self.rho)
    }

    /// `∂S` at `q`, linearly interpolated from face differences.
    pub fn action_gradient_at(&self, q: f64) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let x = ((q - g.q_min()) / h - 0.5).clamp(0.0, (g.len() - 2) as f64);
        let i = (x.floor() as usize).min(g.len() - 3);
        let t = x - i as f64;
        let d0 = (self.s[i + 1] - self.s[i]) / h;
        let d1 = (self.s[i + 2] - self.s[i + 1]) / h;
        d0 + t * (d1 - d0)
    }

    /// `∂²S` at the node nearest `q`.
    pub fn action_curvature_at(&self, q: f64) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let i = (((q - g.q_min()) / h).round() as usize).clamp(1, g.len() - 2);
        (self.s[i + 1] - 2.0 * self.s[i] + self.s[i - 1]) / (h * h)
    }
}

pub(crate) fn normalized_gaussian(grid: &Grid1D, center: f64, width: f64) -> Result<Vec<f64>> {
    if !(width > 0.0 && width.is_finite() && center.is_finite()) {
        return Err(VarqError::InvalidArgument(format!("bad Gaussian centre {center} / width {width}")));
    }
    let raw = grid.sample(|q| (-(q - center).powi(2) / (2.0 * width * width)).exp());
    let norm = grid.integrate(&raw);
    if !(norm > 0.0) {
        return Err(VarqError::InvalidArgument("Gaussian has no mass on the grid".into()));
    }
    Ok(raw.into_iter().map(|r| r / norm).collect())
}

pub(crate) fn first_moment(grid: &Grid1D, rho: &[f64]) -> f64 {
    let num: f64 = rho.iter().enumerate().map(|(i, r)| grid.node(i) * r).sum();
    let den: f64 = rho.iter().sum();
    num / den
}

/// Face velocities `(S_{i+1} − S_i)/(h m_{i+1/2})`.
pub(crate) fn face_velocities(grid: &Grid1D, s: &[f64], inv_mass: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    s.windows(2).zip(inv_mass).map(|(w, mu)| (w[1] - w[0]) / h * mu).collect()
}

/// Conservative first-order upwind update of `ρ` with closed outer faces.
pub(crate) fn upwind_density_step(grid: &Grid1D, rho: &[f64], face_vel: &[f64], dt: f64) -> Result<Vec<f64>> {
    let h = grid.spacing();
    let (imax, vmax) = face_vel
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let cfl = vmax * dt.abs() / h;
    if !(cfl <= 1.0) {
        return Err(VarqError::rejected(format!("CFL number {cfl:.3} exceeds 1"), Some(imax)));
    }
    let flux: Vec<f64> =
        face_vel.iter().enumerate().map(|(i, &u)| if u >= 0.0 { u * rho[i] } else { u * rho[i + 1] }).collect();
    let n = rho.len();
    let r = dt / h;
    Ok((0..n)
        .map(|i| {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            rho[i] - r * (right - left)
        })
        .collect())
}

/// Godunov Hamiltonian `V + max(max(p⁻,0)², min(p⁺,0)²)/(2m)` with
/// second-order one-sided differences.
fn hj_rate(grid: &Grid1D, s: &[f64], m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = s.len();
    let h = grid.spacing();
    (0..n)
        .map(|i| {
            let back = if i >= 2 {
                Some((3.0 * s[i] - 4.0 * s[i - 1] + s[i - 2]) / (2.0 * h))
            } else if i == 1 {
                Some((s[1] - s[0]) / h)
            } else {
                None
            };
            let fwd = if i + 2 < n {
                Some((-3.0 * s[i] + 4.0 * s[i + 1] - s[i + 2]) / (2.0 * h))
            } else if i + 1 < n {
                Some((s[i + 1] - s[i]) / h)
            } else {
                None
            };
            let (pm, pp) = match (back, fwd) {
                (Some(b), Some(f)) => (b, f),
                (Some(b), None) => (b, b),
                (None, Some(f)) => (f, f),
                (None, None) => (0.0, 0.0),
            };
            let k = pm.max(0.0).powi(2).max(pp.min(0.0).powi(2));
            k / (2.0 * m[i]) + v[i]
        })
        .collect()
}

/// One step of the coupled classical system: conservative upwind continuity
/// for `ρ` with the velocity of `S`, then a Godunov (Heun) Hamilton–Jacobi
/// step for `S`.
pub fn transport_density(ens: &ClassicalEnsemble, spec: &NaturalSystemSpec, dt: f64) -> Result<ClassicalEnsemble> {
    let grid = &ens.grid;
    let mu = spec.face_inverse_mass(grid)?;
    let vel = face_velocities(grid, &ens.s, &mu);
    let rho = upwind_density_step(grid, &ens.rho, &vel, dt)?;
    let m: Vec<f64> = grid.nodes().iter().map(|&q| spec.mass_at(q)).collect::<Result<_>>()?;
    let v = spec.potential.sample(&grid.nodes());
    let r0 = hj_rate(grid, &ens.s, &m, &v);
    let s1: Vec<f64> = ens.s.iter().zip(&r0).map(|(s, r)| s - dt * r).collect();
    let r1 = hj_rate(grid, &s1, &m, &v);
    let s: Vec<f64> = ens.s.iter().zip(&s1).zip(&r1).map(|((s0, s1), r)| 0.5 * (s0 + s1 - dt * r)).collect();
    if let Some(i) = s.iter().position(|x| !x.is_finite()) {
        return Err(VarqError::numerical("action became non-finite", vec![("node".into(), i as f64)]));
    }
    Ok(ClassicalEnsemble { grid: *grid, rho, s })
}

/// Replace `S` by the linear action with the same gradient at the density
/// centroid. The centroid's characteristic is unchanged; the ensemble is
/// re-embedded in a caustic-free field of extremals.
pub fn re_embed(ens: &ClassicalEnsemble) -> ClassicalEnsemble {
    let qc = ens.centroid();
    let p = ens.action_gradient_at(qc);
    let g = &ens.grid;
    let i = (((qc - g.q_min()) / g.spacing()).round() as usize).min(g.len() - 1);
    let s0 = ens.s[i] - p * g.node(i);
    ClassicalEnsemble { grid: *g, rho: ens.rho.clone(), s: g.sample(|q| s0 + p * q) }
}

/// Result of [`transport_run`].
#[derive(Debug, Clone)]
pub struct TransportRun {
    pub times: Vec<f64>,
    pub centroids: Vec<f64>,
    pub probability: Vec<f64>,
    pub re_embeddings: usize,
    pub last: ClassicalEnsemble,
}

/// Repeated [`transport_density`]. When `curvature_limit` is set and
/// `|∂²S|` at the centroid exceeds it, the ensemble is re-embedded before
/// the next step, which keeps runs through focal points well defined.
pub fn transport_run(
    ens: &ClassicalEnsemble,
    spec: &NaturalSystemSpec,
    dt: f64,
    n_steps: usize,
    curvature_limit: Option<f64>,
) -> Result<TransportRun> {
    let mut cur = ens.clone();
    let mut out = TransportRun {
        times: vec![0.0],
        centroids: vec![cur.centroid()],
        probability: vec![cur.total_probability()],
        re_embeddings: 0,
        last: cur.clone(),
    };
    for k in 1..=n_steps {
        if let Some(limit) = curvature_limit {
            if cur.action_curvature_at(cur.centroid()).abs() > limit {
                cur = re_embed(&cur);
                out.re_embeddings += 1;
            }
        }
        cur = transport_density(&cur, spec, dt)?;
        out.times.push(k as f64 * dt);
        out.centroids.push(cur.centroid());
        out.probability.push(cur.total_probability());
    }
    out.last = cur;
    Ok(out)
}

/// Pointwise `∂_t S + H(q, ∂S)` with central differences in `q`.
pub fn hj_residual(ens: &ClassicalEnsemble, spec: &NaturalSystemSpec, ds_dt: &[f64]) -> Result<Vec<f64>> {
    let g = &ens.grid;
    if ds_dt.len() != g.len() {
        return Err(VarqError::InvalidArgument("time derivative length does not match grid".into()));
    }
    let grad = central_gradient(g, &ens.s);
    (0..g.len()).map(|i| Ok(ds_dt[i] + legendre_hamiltonian(spec, g.node(i), grad[i])?)).collect()
}

/// Central differences inside, second-order one-sided at the ends.
pub(crate) fn central_gradient(grid: &Grid1D, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.spacing();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Pointwise `∂_t ρ + ∂(ρ ∂S/m)`.
pub fn continuity_residual(
    ens: &ClassicalEnsemble,
    spec: &NaturalSystemSpec,
    drho_dt: &[f64],
) -> Result<Vec<f64>> {
    let g = &ens.grid;
    let grad = central_gradient(g, &ens.s);
    let flux: Vec<f64> = (0..g.len())
        .map(|i| Ok(ens.rho[i] * legendre_velocity(spec, g.node(i), grad[i])?))
        .collect::<Result<_>>()?;
    let div = central_gradient(g, &flux);
    Ok(drho_dt.iter().zip(&div).map(|(a, b)| a + b).collect())
}

/// Stored solution frames at uniform spacing `dt`.
#[derive(Debug, Clone)]
pub struct EnsembleHistory {
    pub dt: f64,
    pub frames: Vec<ClassicalEnsemble>,
}

/// Residual fields at one interior time level.
#[derive(Debug, Clone)]
pub struct ResidualFrame {
    pub hamilton_jacobi: Vec<f64>,
    pub continuity: Vec<f64>,
}

impl EnsembleHistory {
    pub fn record(ens: &ClassicalEnsemble, spec: &NaturalSystemSpec, dt: f64, n_steps: usize) -> Result<Self> {
        let mut frames = vec![ens.clone()];
        for _ in 0..n_steps {
            let next = transport_density(frames.last().expect("nonempty"), spec, dt)?;
            frames.push(next);
        }
        Ok(EnsembleHistory { dt, frames })
    }

    /// The map `t → −t`, `S → −S`, `ρ → ρ` applied to the stored frames.
    pub fn time_reversed(&self) -> Self {
        let frames = self
            .frames
            .iter()
            .rev()
            .map(|f| ClassicalEnsemble { grid: f.grid, rho: f.rho.clone(), s: f.s.iter().map(|x| -x).collect() })
            .collect();
        EnsembleHistory { dt: self.dt, frames }
    }

    /// Residuals at interior frames, with centred time differences.
    pub fn residuals(&self, spec: &NaturalSystemSpec) -> Result<Vec<ResidualFrame>> {
        let f = &self.frames;
        (1..f.len().saturating_sub(1))
            .map(|k| {
                let inv = 1.0 / (2.0 * self.dt);
                let ds: Vec<f64> = f[k + 1].s.iter().zip(&f[k - 1].s).map(|(a, b)| (a - b) * inv).collect();
                let dr: Vec<f64> = f[k + 1].rho.iter().zip(&f[k - 1].rho).map(|(a, b)| (a - b) * inv).collect();
                Ok(ResidualFrame {
                    hamilton_jacobi: hj_residual(&f[k], spec, &ds)?,
                    continuity: continuity_residual(&f[k], spec, &dr)?,
                })
            })
            .collect()
    }
}

/// Discrepancy between a classical transport step and the same step with
/// the coupling `d(ρ) (j/ρ) ∂ρ` added to the Lagrangian.
///
/// Under the classical balance equation the coupling only redefines the
/// multiplier, `∂S → ∂S + d(ρ)∂ρ`, and the velocity `(∂S' − d(ρ)∂ρ)/m`
/// is unchanged. The face increment of `∫ d(ρ) dρ` is integrated with
/// Simpson's rule; faces touching a zero density are skipped.
pub fn lagrangian_equivalence_check(
    ens: &ClassicalEnsemble,
    spec: &NaturalSystemSpec,
    d_rho: impl Fn(f64) -> f64,
    dt: f64,
) -> Result<f64> {
    let grid = &ens.grid;
    let h = grid.spacing();
    let mu = spec.face_inverse_mass(grid)?;
    let plain = face_velocities(grid, &ens.s, &mu);
    let peak = ens.rho.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * peak;
    let coupled: Vec<f64> = (0..plain.len())
        .map(|i| {
            let (r0, r1) = (ens.rho[i], ens.rho[i + 1]);
            let dd = if r0 > floor && r1 > floor {
                let mid = 0.5 * (r0 + r1);
                (r1 - r0) / 6.0 * (d_rho(r0) + 4.0 * d_rho(mid) + d_rho(r1))
            } else {
                0.0
            };
            let gauge = (ens.s[i + 1] - ens.s[i]) + dd;
            (gauge - dd) / h * mu[i]
        })
        .collect();
    let a = upwind_density_step(grid, &ens.rho, &plain, dt)?;
    let b = upwind_density_step(grid, &ens.rho, &coupled, dt)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
