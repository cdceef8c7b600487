//! Quantum domain of a single real scalar field with constant internal
//! metric `η`: vacuum spectrum of `−(f²/2η)∂² + V`, invariant-state tensors,
//! vacuum fluctuations, the space-independent sector and spherically
//! symmetric confined solutions built from a conjugate pair `(φ, φ̃)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, VarqError};
use crate::hydrodynamics::RHO_FLOOR;
use crate::mechanics::central_gradient;
use crate::numerics::banded::BandedMatrix;
use crate::numerics::{eigensolve_lowest, CayleyStepper, Grid1D, TridiagonalOperator};
use crate::potential::Potential;

/// Largest end sample, relative to the peak, for a mode to count as resolved.
pub const TAIL_TOLERANCE: f64 = 1e-6;
/// Modes used by the confined solver when the caller does not choose.
pub const DEFAULT_MODES: usize = 8;
/// Smallest tail integral admitted into a decay-rate fit.
pub const TAIL_FLOOR: f64 = 1e-280;

// cells where ψ₀ falls below this fraction of its peak carry no log source
const RATIO_MASK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct QFieldSpec {
    pub eta: f64,
    pub potential: Potential,
    pub f: f64,
}

impl QFieldSpec {
    pub fn new(eta: f64, potential: Potential, f: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(VarqError::InvalidSpec(format!("η must be positive, got {eta}")));
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(VarqError::InvalidSpec(format!("f must be positive, got {f}")));
        }
        Ok(QFieldSpec { eta, potential, f })
    }

    /// `V ≥ 0` on the grid and nondecreasing outward at both ends, rising
    /// above its interior minimum.
    pub fn check_confining(&self, grid: &Grid1D) -> Result<()> {
        let v = self.potential.sample(&grid.nodes());
        let n = v.len();
        if let Some(i) = v.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(VarqError::InvalidSpec(format!("potential is negative or non-finite at node {i}")));
        }
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if n < 3 || v[0] < v[1] || v[n - 1] < v[n - 2] || v[0] <= min || v[n - 1] <= min {
            return Err(VarqError::InvalidSpec("potential does not grow toward the grid ends".into()));
        }
        Ok(())
    }

    /// Grid form of `−(f²/2η)∂² + V`.
    pub fn hamiltonian(&self, grid: &Grid1D) -> Result<TridiagonalOperator> {
        let eta = self.eta;
        TridiagonalOperator::kinetic_plus_potential(grid, self.f * self.f, |_| 1.0 / eta, &self.potential.sample(&grid.nodes()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VacuumSpectrum {
    pub grid: Grid1D,
    pub w: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
}

impl VacuumSpectrum {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `h Σ ψ_i ψ_j`.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.grid.integrate(&self.psi[i].iter().zip(&self.psi[j]).map(|(a, b)| a * b).collect::<Vec<_>>())
    }

    pub fn gap(&self, n: usize) -> f64 {
        self.w[n] - self.w[0]
    }
}

/// The `k` lowest invariant states.
pub fn vacuum_spectrum(spec: &QFieldSpec, grid: &Grid1D, k: usize) -> Result<VacuumSpectrum> {
    spec.check_confining(grid)?;
    let op = spec.hamiltonian(grid)?;
    let pairs = eigensolve_lowest(&op, grid, k)?;
    let mut w = Vec::with_capacity(k);
    let mut psi = Vec::with_capacity(k);
    for (n, p) in pairs.into_iter().enumerate() {
        let peak = p.vector.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let edge = p.vector[0].abs().max(p.vector[p.vector.len() - 1].abs());
        if edge > TAIL_TOLERANCE * peak {
            return Err(VarqError::InvalidArgument(format!(
                "grid does not resolve mode {n}: edge amplitude {:.2e} of peak",
                edge / peak
            )));
        }
        w.push(p.value);
        psi.push(p.vector);
    }
    let vac = VacuumSpectrum { grid: *grid, w, psi };
    for i in 0..k {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            let o = vac.overlap(i, j);
            if (o - target).abs() > 1e-8 {
                return Err(VarqError::numerical(
                    "eigenvectors lost orthonormality",
                    vec![(format!("overlap {i},{j}"), o)],
                ));
            }
        }
    }
    if vac.w[0] < 0.0 {
        return Err(VarqError::numerical("negative vacuum energy", vec![("w0".into(), vac.w[0])]));
    }
    Ok(vac)
}

/// `T^σ_ν = δ^σ_ν w_s` in `dim` space-time dimensions.
pub fn invariant_state_tensor(ws: f64, dim: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal_element(dim, dim, ws)
}

/// Mean and variance of `q` in the fundamental vacuum `ψ₀²`.
pub fn field_fluctuations(vac: &VacuumSpectrum) -> (f64, f64) {
    let g = &vac.grid;
    let rho: Vec<f64> = vac.psi[0].iter().map(|p| p * p).collect();
    let mean = g.integrate(&rho.iter().enumerate().map(|(i, r)| g.node(i) * r).collect::<Vec<_>>());
    let var = g.integrate(&rho.iter().enumerate().map(|(i, r)| (g.node(i) - mean).powi(2) * r).collect::<Vec<_>>());
    (mean, var)
}

/// Pointwise random energy and momentum densities.
#[derive(Debug, Clone)]
pub struct RandomEnergy {
    pub energy: Vec<f64>,
    /// One entry per spatial direction, lower index.
    pub momentum: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

/// `−(f²/2η) Δ√ρ / √ρ` with the operator's Dirichlet ghosts.
fn quantum_potential(spec: &QFieldSpec, grid: &Grid1D, rho: &[f64], mask: &[bool]) -> Vec<f64> {
    let h = grid.spacing();
    let s: Vec<f64> = rho.iter().map(|r| r.max(0.0).sqrt()).collect();
    let n = s.len();
    let k = spec.f * spec.f / (2.0 * spec.eta * h * h);
    (0..n)
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let l = if i > 0 { s[i - 1] } else { 0.0 };
            let r = if i + 1 < n { s[i + 1] } else { 0.0 };
            -k * (l - 2.0 * s[i] + r) / s[i]
        })
        .collect()
}

/// `ε^Q` and `P^Q_m` from `ρ`, `λ⁰` and the spatial components `λ^m`
/// (upper index; metric signature `(+, −, −, −)`). Masked cells are zero.
pub fn random_energy_density(
    spec: &QFieldSpec,
    grid: &Grid1D,
    rho: &[f64],
    lam0: &[f64],
    lam_m: &[Vec<f64>],
) -> Result<RandomEnergy> {
    let n = grid.len();
    if rho.len() != n || lam0.len() != n || lam_m.iter().any(|l| l.len() != n) {
        return Err(VarqError::InvalidArgument("field lengths do not match the grid".into()));
    }
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let mask: Vec<bool> = rho.iter().map(|&r| r > RHO_FLOOR * peak).collect();
    let v = spec.potential.sample(&grid.nodes());
    let qp = quantum_potential(spec, grid, rho, &mask);
    let d0 = central_gradient(grid, lam0);
    let dm: Vec<Vec<f64>> = lam_m.iter().map(|l| central_gradient(grid, l)).collect();
    let inv = 1.0 / spec.eta;
    let energy = (0..n)
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let spatial: f64 = dm.iter().map(|d| d[i] * d[i]).sum();
            0.5 * inv * (d0[i] * d0[i] + spatial) + v[i] + qp[i]
        })
        .collect();
    let momentum = dm
        .iter()
        .map(|d| (0..n).map(|i| if mask[i] { -inv * d0[i] * d[i] } else { 0.0 }).collect())
        .collect();
    Ok(RandomEnergy { energy, momentum, mask })
}

/// Output of [`space_independent_evolve`], one entry per recorded time.
#[derive(Debug, Clone)]
pub struct SectorRun {
    pub grid: Grid1D,
    pub dt: f64,
    pub f: f64,
    pub frames: Vec<Vec<Complex64>>,
    pub energy_density: Vec<Vec<f64>>,
    pub momentum_density: Vec<Vec<f64>>,
    pub mean_energy: Vec<f64>,
}

impl SectorRun {
    pub fn times(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Largest `|w̄(t) − w̄(0)| / |w̄(0)|`.
    pub fn mean_energy_drift(&self) -> f64 {
        let w0 = self.mean_energy[0];
        self.mean_energy.iter().map(|w| (w - w0).abs()).fold(0.0, f64::max) / w0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn history(&self) -> SectorHistory {
        let (rho, lam) = self
            .frames
            .iter()
            .map(|psi| {
                let c = crate::wavefunction::canonical_map_forward(psi, self.f);
                (c.rho, c.lam)
            })
            .unzip();
        SectorHistory { grid: self.grid, dt: self.dt, f: self.f, rho, lam }
    }
}

/// `i f ∂₀ψ = −(f²/2η)∂²ψ + Vψ` with the random energy density read off
/// `ε^Q = −∂₀λ̃ = Re(ψ* H ψ)/|ψ|²` and `w̄ = h Σ Re(ψ* H ψ)`.
pub fn space_independent_evolve(
    spec: &QFieldSpec,
    grid: &Grid1D,
    psi0: &[Complex64],
    dt: f64,
    n_steps: usize,
) -> Result<SectorRun> {
    if psi0.len() != grid.len() {
        return Err(VarqError::InvalidState("amplitude length does not match the grid".into()));
    }
    let norm = grid.integrate(&psi0.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
    if (norm - 1.0).abs() > 1e-9 {
        return Err(VarqError::InvalidState(format!("initial amplitude has norm {norm}")));
    }
    let op = spec.hamiltonian(grid)?;
    let stepper = CayleyStepper::new(&op, dt, spec.f)?;
    let zeros = vec![0.0; grid.len()];
    let mut run = SectorRun {
        grid: *grid,
        dt,
        f: spec.f,
        frames: Vec::with_capacity(n_steps + 1),
        energy_density: Vec::with_capacity(n_steps + 1),
        momentum_density: Vec::with_capacity(n_steps + 1),
        mean_energy: Vec::with_capacity(n_steps + 1),
    };
    let mut psi = psi0.to_vec();
    for step in 0..=n_steps {
        if step > 0 {
            psi = stepper.step(&psi);
        }
        let hpsi = op.apply_complex(&psi);
        let local: Vec<f64> = psi.iter().zip(&hpsi).map(|(p, hp)| (p.conj() * hp).re).collect();
        let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        let eps: Vec<f64> = local
            .iter()
            .zip(&rho)
            .map(|(l, r)| if *r > RHO_FLOOR * peak { l / r } else { 0.0 })
            .collect();
        let wbar = grid.integrate(&local);
        if !wbar.is_finite() {
            return Err(VarqError::numerical("mean energy is not finite", vec![("step".into(), step as f64)]));
        }
        let lam = crate::wavefunction::canonical_map_forward(&psi, spec.f).lam;
        let moment = random_energy_density(spec, grid, &rho, &lam, std::slice::from_ref(&zeros))?;
        run.momentum_density.push(moment.momentum.into_iter().next().expect("one direction"));
        run.energy_density.push(eps);
        run.mean_energy.push(wbar);
        run.frames.push(psi.clone());
    }
    Ok(run)
}

/// Local fields `(ρ, λ̃)` of the space-independent sector on equally spaced
/// times. `λ̃` is defined modulo `2πf`.
#[derive(Debug, Clone)]
pub struct SectorHistory {
    pub grid: Grid1D,
    pub dt: f64,
    pub f: f64,
    pub rho: Vec<Vec<f64>>,
    pub lam: Vec<Vec<f64>>,
}

impl SectorHistory {
    /// `x⁰ → −x⁰`, `λ → −λ`, `ρ → ρ`.
    pub fn inverted(&self) -> Self {
        SectorHistory {
            grid: self.grid,
            dt: self.dt,
            f: self.f,
            rho: self.rho.iter().rev().cloned().collect(),
            lam: self.lam.iter().rev().map(|l| l.iter().map(|x| -x).collect()).collect(),
        }
    }

    /// `(Hamilton–Jacobi residual, continuity residual)` at interior frames,
    /// zero where the density or a neighbour is below `1e-6` of the peak.
    pub fn residuals(&self, spec: &QFieldSpec) -> Vec<(Vec<f64>, Vec<f64>)> {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.len();
        let v = spec.potential.sample(&g.nodes());
        let period = 2.0 * PI * self.f;
        let inv_eta = 1.0 / spec.eta;
        (1..self.rho.len().saturating_sub(1))
            .map(|k| {
                let rho = &self.rho[k];
                let lam = &self.lam[k];
                let peak = rho.iter().cloned().fold(0.0, f64::max);
                let mask: Vec<bool> = rho.iter().map(|&r| r > RHO_FLOOR * peak).collect();
                let qp = quantum_potential(spec, g, rho, &mask);
                let mut hj = vec![0.0; n];
                let mut cont = vec![0.0; n];
                for i in 1..n - 1 {
                    if !(rho[i - 1] > 1e-6 * peak && rho[i] > 1e-6 * peak && rho[i + 1] > 1e-6 * peak) {
                        continue;
                    }
                    let mut dl = self.lam[k + 1][i] - self.lam[k - 1][i];
                    dl -= period * (dl / period).round();
                    let grad = (lam[i + 1] - lam[i - 1]) / (2.0 * h);
                    hj[i] = dl / (2.0 * self.dt) + 0.5 * inv_eta * grad * grad + v[i] + qp[i];
                    let right = 0.5 * (rho[i] + rho[i + 1]) * (lam[i + 1] - lam[i]) / h;
                    let left = 0.5 * (rho[i - 1] + rho[i]) * (lam[i] - lam[i - 1]) / h;
                    let drho = (self.rho[k + 1][i] - self.rho[k - 1][i]) / (2.0 * self.dt);
                    cont[i] = drho + inv_eta * (right - left) / h;
                }
                (hj, cont)
            })
            .collect()
    }
}

/// Radial grid and Newton controls for [`confined_solve`].
#[derive(Debug, Clone, Serialize)]
pub struct RadialOptions {
    /// Defaults to `0.5 f / (w₁ − w₀)`.
    pub r_min: Option<f64>,
    pub r_max: f64,
    pub n_r: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions { r_min: None, r_max: 150.0, n_r: 600, tol: 1e-10, max_iterations: 30 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

/// Converged conjugate pair on a log-spaced radial grid.
///
/// `a[j][m]`, `b[j][m]` hold the mode amplitudes of `φ` and `φ̃` for modes
/// `m + 1`, divided by the mode-0 amplitude; `log_a0`, `log_b0` hold the
/// logarithms of the mode-0 amplitudes.
#[derive(Debug, Clone, Serialize)]
pub struct RadialPair {
    pub grid: Grid1D,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub log_a0: Vec<f64>,
    pub log_b0: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub phi_tilde: Vec<Vec<f64>>,
    /// `ρ − ψ₀²`, evaluated without cancellation.
    pub rho_excess: Vec<Vec<f64>>,
    pub log: Vec<IterationRecord>,
    pub residual: f64,
    pub w0: f64,
    pub f: f64,
}

impl RadialPair {
    pub fn rho(&self, j: usize) -> Vec<f64> {
        self.phi[j].iter().zip(&self.phi_tilde[j]).map(|(a, b)| a * b).collect()
    }

    /// `λ̂ = w₀ r / 3 − (f/2) log(φ/φ̃)` where `ρ > 0`, zero elsewhere.
    pub fn lambda_hat(&self, j: usize) -> Vec<f64> {
        let r = self.r[j];
        self.phi[j]
            .iter()
            .zip(&self.phi_tilde[j])
            .map(|(p, t)| if *p > 0.0 && *t > 0.0 { self.w0 * r / 3.0 - 0.5 * self.f * (p / t).ln() } else { 0.0 })
            .collect()
    }

    /// `∫ |ρ(q, r) − ψ₀²(q)| dq` at every radius.
    pub fn tail_integrals(&self) -> Vec<f64> {
        self.rho_excess.iter().map(|e| self.grid.integrate(&e.iter().map(|x| x.abs()).collect::<Vec<_>>())).collect()
    }
}

fn phi_functions(z: f64) -> (f64, f64) {
    let p1 = if z.abs() > 1e-6 { z.exp_m1() / z } else { 1.0 + 0.5 * z };
    let p2 = if z.abs() > 1e-4 { (z.exp_m1() - z) / (z * z) } else { 0.5 + z / 6.0 };
    (p1, p2)
}

struct RadialModel<'a> {
    f: f64,
    h: f64,
    m: usize,
    psi: &'a [Vec<f64>],
    mask: Vec<bool>,
    // ψ_{m+1}/ψ₀ on the mask
    ratio: Vec<Vec<f64>>,
    r: Vec<f64>,
    // per interval and mode: decay factor and exponential quadrature weights
    e: Vec<Vec<f64>>,
    w0: Vec<Vec<f64>>,
    w1: Vec<Vec<f64>>,
}

struct NodeFields {
    xa: Vec<f64>,
    xb: Vec<f64>,
    s: Vec<f64>,
}

struct NodeSource {
    p: Vec<f64>,
    q: Vec<f64>,
}

type Amplitudes = Vec<Vec<f64>>;

impl<'a> RadialModel<'a> {
    fn new(spec: &QFieldSpec, vac: &'a VacuumSpectrum, r: Vec<f64>) -> Self {
        let k = vac.len();
        let m = k - 1;
        let psi0 = &vac.psi[0];
        let peak = psi0.iter().cloned().fold(0.0, f64::max);
        let mask: Vec<bool> = psi0.iter().map(|&p| p > RATIO_MASK * peak).collect();
        let ratio = (1..k)
            .map(|n| (0..psi0.len()).map(|i| if mask[i] { vac.psi[n][i] / psi0[i] } else { 0.0 }).collect())
            .collect();
        let f = spec.f;
        let nr = r.len();
        let mut e = vec![vec![0.0; m]; nr - 1];
        let mut w0 = vec![vec![0.0; m]; nr - 1];
        let mut w1 = vec![vec![0.0; m]; nr - 1];
        for i in 0..nr - 1 {
            let dr = r[i + 1] - r[i];
            for n in 0..m {
                let z = -vac.gap(n + 1) * dr / f;
                let (p1, p2) = phi_functions(z);
                e[i][n] = z.exp();
                w0[i][n] = dr * (p1 - p2);
                w1[i][n] = dr * p2;
            }
        }
        RadialModel { f, h: vac.grid.spacing(), m, psi: &vac.psi, mask, ratio, r, e, w0, w1 }
    }

    fn fields(&self, j: usize, a: &[f64], b: &[f64]) -> Option<NodeFields> {
        let nq = self.mask.len();
        let fr = self.f / self.r[j];
        let mut xa = vec![0.0; nq];
        let mut xb = vec![0.0; nq];
        let mut s = vec![0.0; nq];
        for i in 0..nq {
            if !self.mask[i] {
                continue;
            }
            let (mut x, mut y) = (0.0, 0.0);
            for n in 0..self.m {
                x += a[n] * self.ratio[n][i];
                y += b[n] * self.ratio[n][i];
            }
            if !(x > -1.0 && y > -1.0) {
                return None;
            }
            xa[i] = x;
            xb[i] = y;
            s[i] = fr * (x.ln_1p() - y.ln_1p());
        }
        Some(NodeFields { xa, xb, s })
    }

    fn source(&self, fl: &NodeFields) -> NodeSource {
        let psi0 = &self.psi[0];
        let k = self.m + 1;
        let mut p = vec![0.0; k];
        let mut q = vec![0.0; k];
        for i in 0..psi0.len() {
            if !self.mask[i] {
                continue;
            }
            let wa = self.h * psi0[i] * fl.s[i] * (1.0 + fl.xa[i]);
            let wb = self.h * psi0[i] * fl.s[i] * (1.0 + fl.xb[i]);
            for n in 0..k {
                p[n] += self.psi[n][i] * wa;
                q[n] += self.psi[n][i] * wb;
            }
        }
        NodeSource { p, q }
    }

    // T_n = P_n − â_n P₀, U_n = Q_n − b̂_n Q₀
    fn reduced(&self, a: &[f64], b: &[f64], src: &NodeSource) -> (Vec<f64>, Vec<f64>) {
        let t = (0..self.m).map(|n| src.p[n + 1] - a[n] * src.p[0]).collect();
        let u = (0..self.m).map(|n| src.q[n + 1] - b[n] * src.q[0]).collect();
        (t, u)
    }

    fn evaluate(&self, a: &Amplitudes, b: &Amplitudes) -> Option<(Vec<NodeFields>, Vec<NodeSource>)> {
        let mut fields = Vec::with_capacity(a.len());
        let mut sources = Vec::with_capacity(a.len());
        for j in 0..a.len() {
            let fl = self.fields(j, &a[j], &b[j])?;
            sources.push(self.source(&fl));
            fields.push(fl);
        }
        Some((fields, sources))
    }

    fn residual(&self, a: &Amplitudes, b: &Amplitudes, src: &[NodeSource]) -> (Amplitudes, Amplitudes, f64) {
        let nr = self.r.len();
        let tu: Vec<_> = (0..nr).map(|j| self.reduced(&a[j], &b[j], &src[j])).collect();
        let mut ra = vec![vec![0.0; self.m]; nr - 1];
        let mut rb = vec![vec![0.0; self.m]; nr - 1];
        let mut worst = 0.0_f64;
        for i in 0..nr - 1 {
            let dr = self.r[i + 1] - self.r[i];
            for n in 0..self.m {
                let (e, w0, w1) = (self.e[i][n], self.w0[i][n], self.w1[i][n]);
                ra[i][n] = a[i + 1][n] - e * a[i][n] + (w0 * tu[i].0[n] + w1 * tu[i + 1].0[n]) / self.f;
                rb[i][n] = b[i][n] - e * b[i + 1][n] + (w0 * tu[i + 1].1[n] + w1 * tu[i].1[n]) / self.f;
                worst = worst.max(ra[i][n].abs() / dr).max(rb[i][n].abs() / dr);
            }
        }
        (ra, rb, worst)
    }

    // Jacobians of (T, U) with respect to (â, b̂) at node j, row-major M×M
    fn blocks(&self, j: usize, a: &[f64], b: &[f64], fl: &NodeFields, src: &NodeSource) -> [Vec<f64>; 4] {
        let k = self.m + 1;
        let fr = self.f / self.r[j];
        let mut dp_a = vec![0.0; k * k];
        let mut dp_b = vec![0.0; k * k];
        let mut dq_a = vec![0.0; k * k];
        let mut dq_b = vec![0.0; k * k];
        for i in 0..self.mask.len() {
            if !self.mask[i] {
                continue;
            }
            let g1 = self.h * (fr + fl.s[i]);
            let g2 = -self.h * fr * (1.0 + fl.xa[i]) / (1.0 + fl.xb[i]);
            let g3 = self.h * fr * (1.0 + fl.xb[i]) / (1.0 + fl.xa[i]);
            let g4 = self.h * (fl.s[i] - fr);
            for n in 0..k {
                let pn = self.psi[n][i];
                for mm in 1..k {
                    let pp = pn * self.psi[mm][i];
                    let at = n * k + mm;
                    dp_a[at] += g1 * pp;
                    dp_b[at] += g2 * pp;
                    dq_a[at] += g3 * pp;
                    dq_b[at] += g4 * pp;
                }
            }
        }
        let m = self.m;
        let reduce = |d: &[f64], amp: &[f64], diag: f64| {
            let mut out = vec![0.0; m * m];
            for n in 0..m {
                for mm in 0..m {
                    out[n * m + mm] = d[(n + 1) * k + mm + 1] - amp[n] * d[mm + 1] - if n == mm { diag } else { 0.0 };
                }
            }
            out
        };
        [
            reduce(&dp_a, a, src.p[0]),
            reduce(&dp_b, a, 0.0),
            reduce(&dq_a, b, 0.0),
            reduce(&dq_b, b, src.q[0]),
        ]
    }

    fn newton_direction(
        &self,
        a: &Amplitudes,
        b: &Amplitudes,
        fields: &[NodeFields],
        src: &[NodeSource],
        ra: &Amplitudes,
        rb: &Amplitudes,
    ) -> Result<(Amplitudes, Amplitudes)> {
        let m = self.m;
        let nr = self.r.len();
        let dim = 2 * m * nr;
        let blocks: Vec<[Vec<f64>; 4]> = (0..nr).map(|j| self.blocks(j, &a[j], &b[j], &fields[j], &src[j])).collect();
        let idx = |j: usize, k: usize| 2 * m * j + k;
        let mut mat = BandedMatrix::zeros(dim, 3 * m, 3 * m);
        let mut rhs = vec![0.0; dim];
        let f = self.f;
        for j in 0..nr {
            for n in 0..m {
                let row = idx(j, n);
                mat.add(row, idx(j, n), 1.0);
                if j > 0 {
                    let i = j - 1;
                    let (w0, w1) = (self.w0[i][n] / f, self.w1[i][n] / f);
                    mat.add(row, idx(i, n), -self.e[i][n]);
                    for k in 0..m {
                        mat.add(row, idx(j, k), w1 * blocks[j][0][n * m + k]);
                        mat.add(row, idx(i, k), w0 * blocks[i][0][n * m + k]);
                        mat.add(row, idx(j, m + k), w1 * blocks[j][1][n * m + k]);
                        mat.add(row, idx(i, m + k), w0 * blocks[i][1][n * m + k]);
                    }
                    rhs[row] = -ra[i][n];
                }
                let row = idx(j, m + n);
                mat.add(row, idx(j, m + n), 1.0);
                if j + 1 < nr {
                    let (w0, w1) = (self.w0[j][n] / f, self.w1[j][n] / f);
                    mat.add(row, idx(j + 1, m + n), -self.e[j][n]);
                    for k in 0..m {
                        mat.add(row, idx(j + 1, k), w0 * blocks[j + 1][2][n * m + k]);
                        mat.add(row, idx(j, k), w1 * blocks[j][2][n * m + k]);
                        mat.add(row, idx(j + 1, m + k), w0 * blocks[j + 1][3][n * m + k]);
                        mat.add(row, idx(j, m + k), w1 * blocks[j][3][n * m + k]);
                    }
                    rhs[row] = -rb[j][n];
                }
            }
        }
        let dz = mat.solve(&rhs)?;
        let da = (0..nr).map(|j| dz[idx(j, 0)..idx(j, m)].to_vec()).collect();
        let db = (0..nr).map(|j| dz[idx(j, m)..idx(j, 2 * m)].to_vec()).collect();
        Ok((da, db))
    }
}

fn log_radial_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let span = (r_max / r_min).ln();
    (0..n).map(|j| r_min * (span * j as f64 / (n - 1) as f64).exp()).collect()
}

fn axpy(x: &Amplitudes, s: f64, d: &Amplitudes) -> Amplitudes {
    x.iter().zip(d).map(|(xr, dr)| xr.iter().zip(dr).map(|(a, b)| a + s * b).collect()).collect()
}

/// Bounded solution of the conjugate radial pair
///
/// `−f ∂_r φ = (−(f²/2η)∂² + V − w₀ + (f/r) log(φ/φ̃)) φ`,
/// `  f ∂_r φ̃ = (−(f²/2η)∂² + V − w₀ + (f/r) log(φ/φ̃)) φ̃`
///
/// in the eigenbasis of `vac`. `φ` starts from `Σ c_n ψ_n e^{−(w_n−w₀)r/f}`
/// at `r_min`, `φ̃` is pinned to `ψ₀` at `r_max` and the product of the
/// mode-0 amplitudes to 1 there. The discretized system (exponential
/// quadrature of each mode against its own decay kernel) is solved by damped
/// Newton; a step is accepted only if it lowers the residual.
pub fn confined_solve(spec: &QFieldSpec, vac: &VacuumSpectrum, c: &[f64], opts: &RadialOptions) -> Result<RadialPair> {
    let k = vac.len();
    if k < 2 {
        return Err(VarqError::InvalidArgument("confined solve needs at least two modes".into()));
    }
    if c.is_empty() || c.len() > k {
        return Err(VarqError::InvalidArgument(format!("expected 1..={k} mode coefficients, got {}", c.len())));
    }
    if c[0] != 1.0 {
        return Err(VarqError::InvalidArgument(format!("c₀ must be 1, got {}", c[0])));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(VarqError::InvalidArgument("mode coefficients must be finite".into()));
    }
    let f = spec.f;
    let r_min = opts.r_min.unwrap_or(0.5 * f / vac.gap(1));
    if !(r_min > 0.0 && opts.r_max > r_min && opts.r_max.is_finite()) || opts.n_r < 3 {
        return Err(VarqError::InvalidArgument(format!(
            "radial grid needs 0 < r_min < r_max and at least 3 points, got [{r_min}, {}] with {}",
            opts.r_max, opts.n_r
        )));
    }
    let m = k - 1;
    let nr = opts.n_r;
    let model = RadialModel::new(spec, vac, log_radial_grid(r_min, opts.r_max, nr));
    let mut a: Amplitudes = (0..nr)
        .map(|j| (0..m).map(|n| c.get(n + 1).copied().unwrap_or(0.0) * (-vac.gap(n + 1) * model.r[j] / f).exp()).collect())
        .collect();
    let mut b: Amplitudes = vec![vec![0.0; m]; nr];

    let (mut fields, mut src) = model.evaluate(&a, &b).ok_or_else(|| VarqError::Diverged {
        message: "seed φ is not positive on the grid".into(),
        iteration: 0,
        residual: f64::NAN,
    })?;
    let (mut ra, mut rb, mut res) = model.residual(&a, &b, &src);
    let mut log = vec![IterationRecord { iteration: 0, residual: res, step: 0.0 }];
    let mut iteration = 0;
    while res >= opts.tol {
        if iteration == opts.max_iterations {
            return Err(VarqError::MaxIterations { iterations: iteration, residual: res });
        }
        iteration += 1;
        let (da, db) = model.newton_direction(&a, &b, &fields, &src, &ra, &rb)?;
        let mut step = 1.0;
        let accepted = loop {
            let ta = axpy(&a, step, &da);
            let tb = axpy(&b, step, &db);
            if let Some((tf, ts)) = model.evaluate(&ta, &tb) {
                let (tra, trb, tres) = model.residual(&ta, &tb, &ts);
                if tres.is_finite() && tres < res {
                    break Some((ta, tb, tf, ts, tra, trb, tres));
                }
            }
            step *= 0.5;
            if step < 1e-4 {
                break None;
            }
        };
        match accepted {
            Some((ta, tb, tf, ts, tra, trb, tres)) => {
                a = ta;
                b = tb;
                fields = tf;
                src = ts;
                ra = tra;
                rb = trb;
                res = tres;
                log.push(IterationRecord { iteration, residual: res, step });
            }
            None => return Err(VarqError::MaxIterations { iterations: iteration, residual: res }),
        }
    }

    // mode-0 amplitudes: v = log(a₀b₀), u = log(a₀/b₀)
    let r = &model.r;
    let p0: Vec<f64> = src.iter().map(|s| s.p[0]).collect();
    let q0: Vec<f64> = src.iter().map(|s| s.q[0]).collect();
    let mut v = vec![0.0; nr];
    for j in (0..nr - 1).rev() {
        let dr = r[j + 1] - r[j];
        v[j] = v[j + 1] - 0.5 * dr * ((q0[j] - p0[j]) + (q0[j + 1] - p0[j + 1])) / f;
    }
    let mut y = vec![0.0; nr];
    y[0] = -r[0] * r[0] * v[0];
    for j in 0..nr - 1 {
        let dr = r[j + 1] - r[j];
        let g0 = r[j] * r[j] * (p0[j] + q0[j]);
        let g1 = r[j + 1] * r[j + 1] * (p0[j + 1] + q0[j + 1]);
        y[j + 1] = y[j] - 0.5 * dr * (g0 + g1) / f;
    }
    let u: Vec<f64> = (0..nr).map(|j| y[j] / (r[j] * r[j])).collect();
    let log_a0: Vec<f64> = (0..nr).map(|j| 0.5 * (u[j] + v[j])).collect();
    let log_b0: Vec<f64> = (0..nr).map(|j| 0.5 * (v[j] - u[j])).collect();

    let psi0 = &vac.psi[0];
    let nq = psi0.len();
    let mut phi = Vec::with_capacity(nr);
    let mut phi_tilde = Vec::with_capacity(nr);
    let mut rho_excess = Vec::with_capacity(nr);
    for j in 0..nr {
        let (ea, eb) = (log_a0[j].exp(), log_b0[j].exp());
        let fl = &fields[j];
        let mut pj = vec![0.0; nq];
        let mut tj = vec![0.0; nq];
        let mut xj = vec![0.0; nq];
        for i in 0..nq {
            pj[i] = ea * psi0[i] * (1.0 + fl.xa[i]);
            tj[i] = eb * psi0[i] * (1.0 + fl.xb[i]);
            xj[i] = psi0[i] * psi0[i] * (v[j] + fl.xa[i].ln_1p() + fl.xb[i].ln_1p()).exp_m1();
        }
        phi.push(pj);
        phi_tilde.push(tj);
        rho_excess.push(xj);
    }
    Ok(RadialPair {
        grid: vac.grid,
        r: model.r.clone(),
        c: c.to_vec(),
        a,
        b,
        log_a0,
        log_b0,
        phi,
        phi_tilde,
        rho_excess,
        log,
        residual: res,
        w0: vac.w[0],
        f,
    })
}

/// First successive approximation to `φ` about the uncoupled pair
/// `φ₀ = Σ c_n ψ_n e^{−(w_n−w₀)r/f}`, `φ̃₀ = ψ₀`:
///
/// `δφ(q, r) = ∫_r^{r_end} φ₀(q, r′) log(φ₀(q, r′)/φ̃₀(q)) / r′ dr′`,
///
/// returned as its projections `⟨ψ_n, δφ(·, r_j)⟩` for every mode. The
/// integral is a trapezoid sum over the supplied radii.
pub fn first_correction(spec: &QFieldSpec, vac: &VacuumSpectrum, c: &[f64], r: &[f64]) -> Result<Vec<Vec<f64>>> {
    let k = vac.len();
    if c.is_empty() || c.len() > k || c[0] != 1.0 {
        return Err(VarqError::InvalidArgument("mode coefficients must start with c₀ = 1".into()));
    }
    if r.len() < 2 || r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
        return Err(VarqError::InvalidArgument("radii must be positive and increasing".into()));
    }
    let psi0 = &vac.psi[0];
    let nq = psi0.len();
    let peak = psi0.iter().cloned().fold(0.0, f64::max);
    let mask: Vec<bool> = psi0.iter().map(|&p| p > RATIO_MASK * peak).collect();
    let integrand = |rr: f64| -> Result<Vec<f64>> {
        let amp: Vec<f64> = (0..c.len()).map(|n| c[n] * (-vac.gap(n) * rr / spec.f).exp()).collect();
        (0..nq)
            .map(|i| {
                if !mask[i] {
                    return Ok(0.0);
                }
                let phi0: f64 = amp.iter().enumerate().map(|(n, a)| a * vac.psi[n][i]).sum();
                if !(phi0 > 0.0) {
                    return Err(VarqError::Diverged {
                        message: format!("φ₀ not positive at node {i}, r = {rr}"),
                        iteration: 0,
                        residual: f64::NAN,
                    });
                }
                Ok(phi0 * (phi0 / psi0[i]).ln() / rr)
            })
            .collect()
    };
    let nr = r.len();
    let mut acc = vec![0.0; nq];
    let mut out = vec![vec![0.0; k]; nr];
    let mut upper = integrand(r[nr - 1])?;
    for j in (0..nr - 1).rev() {
        let lower = integrand(r[j])?;
        let dr = r[j + 1] - r[j];
        for i in 0..nq {
            acc[i] += 0.5 * dr * (lower[i] + upper[i]);
        }
        for n in 0..k {
            out[j][n] = vac.grid.integrate(&acc.iter().zip(&vac.psi[n]).map(|(x, p)| x * p).collect::<Vec<_>>());
        }
        upper = lower;
    }
    Ok(out)
}

/// Decay rate of `∫|ρ − ψ₀²| dq` fitted over `[0.5, 0.9]·r_max`, and the
/// confinement radius `f / (w₁ − w₀)`.
pub fn confinement_report(pair: &RadialPair, vac: &VacuumSpectrum) -> Result<(f64, f64)> {
    confinement_report_window(pair, vac, 0.5, 0.9)
}

/// As [`confinement_report`] with the window given as fractions of `r_max`.
pub fn confinement_report_window(pair: &RadialPair, vac: &VacuumSpectrum, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let r_max = *pair.r.last().expect("nonempty radial grid");
    let tails = pair.tail_integrals();
    let pts: Vec<(f64, f64)> = pair
        .r
        .iter()
        .zip(&tails)
        .filter(|(r, t)| **r >= lo * r_max && **r <= hi * r_max && **t > TAIL_FLOOR)
        .map(|(r, t)| (*r, t.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(VarqError::FitWindowEmpty(format!(
            "{} usable points in [{:.3}, {:.3}]",
            pts.len(),
            lo * r_max,
            hi * r_max
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok((-sxy / sxx, pair.f / vac.gap(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::build_grid;

    fn harmonic(n: usize, l: f64, f: f64) -> (QFieldSpec, Grid1D) {
        (QFieldSpec::new(1.0, Potential::harmonic(1.0), f).unwrap(), build_grid(-l, l, n).unwrap())
    }

    #[test]
    fn oscillator_levels() {
        let (spec, g) = harmonic(2001, 10.0, 1.0);
        let vac = vacuum_spectrum(&spec, &g, 3).unwrap();
        for (r, w) in vac.w.iter().enumerate() {
            assert!((w - (r as f64 + 0.5)).abs() < 1e-4, "w{r} = {w}");
        }
        let (mean, var) = field_fluctuations(&vac);
        assert!(mean.abs() < 1e-8);
        assert!((var - 0.5).abs() < 1e-4);
    }

    #[test]
    fn shift_and_scaling() {
        let (spec, g) = harmonic(801, 10.0, 1.0);
        let base = vacuum_spectrum(&spec, &g, 3).unwrap();
        let up = QFieldSpec::new(1.0, Potential::harmonic(1.0).shifted(0.7), 1.0).unwrap();
        let shifted = vacuum_spectrum(&up, &g, 3).unwrap();
        for (a, b) in base.w.iter().zip(&shifted.w) {
            assert!((b - a - 0.7).abs() < 1e-9);
        }
        let (half, g2) = harmonic(2001, 8.0, 0.5);
        let (_, v_half) = field_fluctuations(&vacuum_spectrum(&half, &g2, 1).unwrap());
        let (_, v_full) = field_fluctuations(&vacuum_spectrum(&harmonic(2001, 8.0, 1.0).0, &g2, 1).unwrap());
        assert!((v_half / v_full - 0.5).abs() < 1e-4);
    }

    #[test]
    fn rejects_unconfined_and_unresolved() {
        let g = build_grid(-5.0, 5.0, 201).unwrap();
        let free = QFieldSpec::new(1.0, Potential::free(), 1.0).unwrap();
        assert!(matches!(vacuum_spectrum(&free, &g, 2), Err(VarqError::InvalidSpec(_))));
        let neg = QFieldSpec::new(1.0, Potential::polynomial(vec![-1.0, 0.0, 1.0]), 1.0).unwrap();
        assert!(matches!(vacuum_spectrum(&neg, &g, 2), Err(VarqError::InvalidSpec(_))));
        let small = build_grid(-2.0, 2.0, 201).unwrap();
        let (spec, _) = harmonic(3, 1.0, 1.0);
        assert!(matches!(vacuum_spectrum(&spec, &small, 3), Err(VarqError::InvalidArgument(_))));
        assert!(QFieldSpec::new(1.0, Potential::free(), 0.0).is_err());
    }

    #[test]
    fn tensor_identity() {
        let t = invariant_state_tensor(0.5, 2);
        assert_eq!(t, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        assert_eq!(invariant_state_tensor(0.0, 4), DMatrix::zeros(4, 4));
        assert_eq!(invariant_state_tensor(1.25, 4).trace(), 5.0);
    }

    #[test]
    fn invariant_state_energy_density() {
        let (spec, g) = harmonic(801, 10.0, 1.0);
        let vac = vacuum_spectrum(&spec, &g, 2).unwrap();
        for s in 0..2 {
            let rho: Vec<f64> = vac.psi[s].iter().map(|p| p * p).collect();
            let zero = vec![0.0; g.len()];
            let out = random_energy_density(&spec, &g, &rho, &zero, &[zero.clone(), zero.clone(), zero.clone()]).unwrap();
            let peak = rho.iter().cloned().fold(0.0, f64::max);
            for i in 0..g.len() {
                // ψ₁ changes sign; its node and the far tails are excluded
                if rho[i] > 1e-6 * peak {
                    assert!((out.energy[i] - vac.w[s]).abs() < 1e-6 * (1.0 + vac.w[s]), "node {i}");
                }
            }
            assert!(out.momentum.iter().flatten().all(|p| *p == 0.0));
        }
    }

    #[test]
    fn momentum_density_and_inversion() {
        let (spec, g) = harmonic(201, 5.0, 1.0);
        let rho = g.sample(|q| (-q * q).exp());
        let lam0 = g.sample(|q| 0.3 * q * q);
        let lam1 = g.sample(|q| q.sin());
        let out = random_energy_density(&spec, &g, &rho, &lam0, std::slice::from_ref(&lam1)).unwrap();
        let neg = |v: &Vec<f64>| v.iter().map(|x| -x).collect::<Vec<_>>();
        let inv = random_energy_density(&spec, &g, &rho, &neg(&lam0), &[neg(&lam1)]).unwrap();
        assert_eq!(out.energy, inv.energy);
        assert_eq!(out.momentum, inv.momentum);
        let flat = vec![2.0; g.len()];
        let none = random_energy_density(&spec, &g, &rho, &flat, std::slice::from_ref(&lam1)).unwrap();
        assert!(none.momentum[0].iter().all(|p| *p == 0.0));
    }

    #[test]
    fn eigenstate_sector() {
        let (spec, g) = harmonic(801, 10.0, 1.0);
        let vac = vacuum_spectrum(&spec, &g, 2).unwrap();
        let psi: Vec<Complex64> = vac.psi[0].iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let run = space_independent_evolve(&spec, &g, &psi, 0.01, 50).unwrap();
        assert!(run.mean_energy_drift() < 1e-12);
        for eps in &run.energy_density {
            for (i, e) in eps.iter().enumerate() {
                if vac.psi[0][i] > 1e-4 {
                    assert!((e - vac.w[0]).abs() < 1e-9);
                }
            }
        }
        assert!(run.momentum_density.iter().flatten().all(|p| *p == 0.0));
        let hist = run.history();
        // the Cayley phase per step is 2 atan(w dt / 2f), not w dt
        for (hj, cont) in hist.residuals(&spec) {
            let worst = hj.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(worst < 1e-5, "{worst}");
            assert!(cont.iter().all(|x| x.abs() < 1e-8));
        }
    }

    #[test]
    fn superposition_sector() {
        let (spec, g) = harmonic(801, 10.0, 1.0);
        let vac = vacuum_spectrum(&spec, &g, 2).unwrap();
        let s = 0.5_f64.sqrt();
        let psi: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(s * (vac.psi[0][i] + vac.psi[1][i]), 0.0)).collect();
        let run = space_independent_evolve(&spec, &g, &psi, 0.01, 300).unwrap();
        assert!((run.mean_energy[0] - 0.5 * (vac.w[0] + vac.w[1])).abs() < 1e-10);
        assert!(run.mean_energy_drift() < 1e-8);
        let at = g.len() / 2 + 40;
        let series: Vec<f64> = run.energy_density.iter().map(|e| e[at]).collect();
        let spread = series.iter().cloned().fold(f64::MIN, f64::max) - series.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.1, "ε^Q should oscillate, spread {spread}");

        let hist = run.history();
        let fwd = hist.residuals(&spec);
        let back = hist.inverted().residuals(&spec);
        let n = fwd.len();
        for k in 0..n {
            let (hj, cont) = &fwd[k];
            let (hj_b, cont_b) = &back[n - 1 - k];
            for i in 0..hj.len() {
                assert!((hj[i] - hj_b[i]).abs() <= 1e-9 * (1.0 + hj[i].abs()));
                assert!((cont[i] + cont_b[i]).abs() <= 1e-12 * (1.0 + cont[i].abs()));
            }
        }
    }

    #[test]
    fn sector_rejects_unnormalized() {
        let (spec, g) = harmonic(101, 5.0, 1.0);
        let psi = vec![Complex64::new(1.0, 0.0); g.len()];
        assert!(matches!(space_independent_evolve(&spec, &g, &psi, 0.1, 1), Err(VarqError::InvalidState(_))));
    }

    fn confined_setup() -> (QFieldSpec, VacuumSpectrum) {
        let (spec, g) = harmonic(401, 10.0, 1.0);
        let vac = vacuum_spectrum(&spec, &g, DEFAULT_MODES).unwrap();
        (spec, vac)
    }

    #[test]
    fn vacuum_fixed_point() {
        let (spec, vac) = confined_setup();
        let opts = RadialOptions { r_max: 20.0, n_r: 60, ..Default::default() };
        let pair = confined_solve(&spec, &vac, &[1.0, 0.0, 0.0], &opts).unwrap();
        assert_eq!(pair.log.len(), 1);
        assert_eq!(pair.residual, 0.0);
        for j in 0..pair.r.len() {
            assert_eq!(pair.phi[j], vac.psi[0]);
            assert_eq!(pair.phi_tilde[j], vac.psi[0]);
        }
        assert!(pair.tail_integrals().iter().all(|t| *t == 0.0));
        assert!(matches!(confinement_report(&pair, &vac), Err(VarqError::FitWindowEmpty(_))));
    }

    #[test]
    fn small_confined_solution() {
        let (spec, vac) = confined_setup();
        let opts = RadialOptions { r_max: 20.0, n_r: 120, ..Default::default() };
        let pair = confined_solve(&spec, &vac, &[1.0, 0.1], &opts).unwrap();
        assert!(pair.residual < opts.tol);
        assert!(pair.log.windows(2).all(|w| w[1].residual < w[0].residual));
        for j in 0..pair.r.len() {
            assert!(pair.phi[j].iter().all(|x| *x >= 0.0));
            assert!(pair.phi_tilde[j].iter().all(|x| *x >= 0.0));
        }
        let last = pair.r.len() - 1;
        assert!((pair.log_a0[last] + pair.log_b0[last]).abs() < 1e-14);
        assert!(pair.log_a0[0].abs() < 1e-14);
        let lam = pair.lambda_hat(0);
        assert!(lam.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn confined_argument_checks() {
        let (spec, vac) = confined_setup();
        let opts = RadialOptions { r_max: 10.0, n_r: 40, ..Default::default() };
        assert!(matches!(confined_solve(&spec, &vac, &[0.5, 0.1], &opts), Err(VarqError::InvalidArgument(_))));
        assert!(matches!(
            confined_solve(&spec, &vac, &[1.0, 5.0], &opts),
            Err(VarqError::Diverged { iteration: 0, .. })
        ));
        let bad = RadialOptions { r_min: Some(20.0), ..opts.clone() };
        assert!(matches!(confined_solve(&spec, &vac, &[1.0], &bad), Err(VarqError::InvalidArgument(_))));
    }

    #[test]
    fn radius_follows_gap() {
        let (spec, vac) = confined_setup();
        let opts = RadialOptions { r_max: 30.0, n_r: 150, ..Default::default() };
        let pair = confined_solve(&spec, &vac, &[1.0, 0.1], &opts).unwrap();
        let (_, r1) = confinement_report(&pair, &vac).unwrap();
        assert_eq!(r1, 1.0 / vac.gap(1));
        // for the oscillator the gap grows with f as well, so the radius is f-independent
        let (s2, g2) = harmonic(401, 14.0, 2.0);
        let vac2 = vacuum_spectrum(&s2, &g2, DEFAULT_MODES).unwrap();
        let pair2 = confined_solve(&s2, &vac2, &[1.0, 0.1], &RadialOptions { r_max: 60.0, ..opts }).unwrap();
        let (_, r2) = confinement_report(&pair2, &vac2).unwrap();
        assert_eq!(r2, 2.0 / vac2.gap(1));
        assert!((r2 - r1).abs() < 1e-3, "{r1} {r2}");
    }
}
