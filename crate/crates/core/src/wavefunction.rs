//! Complex amplitudes: the canonical map between `(ρ, λ)` and `ψ`, and the
//! linear Schrödinger evolution.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, VarqError};
use crate::hydrodynamics::{density_mask, HydroState};
use crate::mechanics::NaturalSystemSpec;
use crate::numerics::{CayleyStepper, Grid1D, TridiagonalOperator};

/// Number of cells at each end watched for probability leaking out.
const EDGE_CELLS: usize = 5;
/// Largest probability tolerated in the edge cells.
pub const EDGE_MASS_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid1D,
    pub psi: Vec<Complex64>,
    pub a: f64,
}

/// Output of [`canonical_map_forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFields {
    pub rho: Vec<f64>,
    pub lam: Vec<f64>,
    pub mask: Vec<bool>,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, psi: Vec<Complex64>, a: f64) -> Result<Self> {
        check_a(a)?;
        if psi.len() != grid.len() {
            return Err(VarqError::InvalidState("amplitude length does not match the grid".into()));
        }
        let wf = WaveFunction { grid, psi, a };
        let norm = wf.norm_sqr();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(VarqError::InvalidState(format!("amplitude has norm² {norm}, expected 1")));
        }
        Ok(wf)
    }

    /// Rescale to unit norm.
    pub fn normalized(grid: Grid1D, mut psi: Vec<Complex64>, a: f64) -> Result<Self> {
        let n = grid.integrate(&psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(VarqError::InvalidState("amplitude has zero or non-finite norm".into()));
        }
        psi.iter_mut().for_each(|z| *z /= n);
        WaveFunction::new(grid, psi, a)
    }

    /// Gaussian packet with position standard deviation `sigma` and mean
    /// momentum `p0`.
    pub fn gaussian(grid: Grid1D, center: f64, sigma: f64, p0: f64, a: f64) -> Result<Self> {
        check_a(a)?;
        if !(sigma > 0.0) {
            return Err(VarqError::InvalidArgument(format!("width must be positive, got {sigma}")));
        }
        let psi = grid
            .nodes()
            .iter()
            .map(|&q| Complex64::from_polar((-(q - center).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * q / a))
            .collect();
        WaveFunction::normalized(grid, psi, a)
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate(&self.density())
    }

    pub fn mean_position(&self) -> f64 {
        let rho = self.density();
        self.grid.integrate(&rho.iter().enumerate().map(|(i, r)| self.grid.node(i) * r).collect::<Vec<_>>())
            / self.grid.integrate(&rho)
    }

    pub fn position_variance(&self) -> f64 {
        let rho = self.density();
        let norm = self.grid.integrate(&rho);
        let mean = self.mean_position();
        self.grid.integrate(&rho.iter().enumerate().map(|(i, r)| (self.grid.node(i) - mean).powi(2) * r).collect::<Vec<_>>())
            / norm
    }

    pub fn to_hydro(&self) -> Result<HydroState> {
        let f = canonical_map_forward(&self.psi, self.a);
        HydroState::new(self.grid, f.rho, f.lam)
    }

    pub fn from_hydro(state: &HydroState, a: f64) -> Result<Self> {
        let psi = canonical_map_inverse(&state.rho, &state.lam, a)?;
        WaveFunction::new(state.grid, psi, a)
    }

    /// Probability in the outermost cells at either end.
    pub fn edge_mass(&self) -> f64 {
        let n = self.psi.len();
        let k = EDGE_CELLS.min(n / 2);
        let s: f64 = self.psi[..k].iter().chain(&self.psi[n - k..]).map(|z| z.norm_sqr()).sum();
        s * self.grid.spacing()
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(VarqError::InvalidArgument(format!("action constant must be positive, got {a}")))
    }
}

/// `P = (u² + v²)/(2a)`, `Λ = a·arg(u + iv)`.
pub fn canonical_pair(u: f64, v: f64, a: f64) -> (f64, f64) {
    ((u * u + v * v) / (2.0 * a), a * v.atan2(u))
}

/// Central-difference Jacobian `∂(P, Λ)/∂(u, v)`.
pub fn canonical_jacobian(u: f64, v: f64, a: f64, eps: f64) -> f64 {
    let (pu1, lu1) = canonical_pair(u + eps, v, a);
    let (pu0, lu0) = canonical_pair(u - eps, v, a);
    let (pv1, lv1) = canonical_pair(u, v + eps, a);
    let (pv0, lv0) = canonical_pair(u, v - eps, a);
    let inv = 1.0 / (2.0 * eps);
    let (dp_du, dl_du) = ((pu1 - pu0) * inv, (lu1 - lu0) * inv);
    let (dp_dv, dl_dv) = ((pv1 - pv0) * inv, (lv1 - lv0) * inv);
    dp_du * dl_dv - dp_dv * dl_du
}

/// `ρ = |ψ|²` and `λ = a·arg ψ` on unmasked cells, unwrapped left to right.
/// The branch restarts after every masked gap; masked cells get `λ = 0`.
pub fn canonical_map_forward(psi: &[Complex64], a: f64) -> CanonicalFields {
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let mask = density_mask(&rho);
    let mut lam = vec![0.0; psi.len()];
    let mut prev: Option<f64> = None;
    for (i, z) in psi.iter().enumerate() {
        if !mask[i] {
            prev = None;
            continue;
        }
        let mut phase = z.arg();
        if let Some(p) = prev {
            phase += 2.0 * PI * ((p - phase) / (2.0 * PI)).round();
        }
        prev = Some(phase);
        lam[i] = a * phase;
    }
    CanonicalFields { rho, lam, mask }
}

/// `ψ = √ρ e^{iλ/a}`.
pub fn canonical_map_inverse(rho: &[f64], lam: &[f64], a: f64) -> Result<Vec<Complex64>> {
    check_a(a)?;
    if rho.len() != lam.len() {
        return Err(VarqError::InvalidArgument("density and phase lengths differ".into()));
    }
    rho.iter()
        .zip(lam)
        .enumerate()
        .map(|(i, (&r, &l))| {
            if !(r >= 0.0) {
                return Err(VarqError::InvalidState(format!("negative density at node {i}")));
            }
            Ok(Complex64::from_polar(r.sqrt(), if r > 0.0 { l / a } else { 0.0 }))
        })
        .collect()
}

/// `H = −(a²/2) ∂(m⁻¹ ∂) + V` on the grid of `wf`.
pub fn hamiltonian_operator(spec: &NaturalSystemSpec, grid: &Grid1D, a: f64) -> Result<TridiagonalOperator> {
    spec.validate_on(grid)?;
    let v = spec.potential.sample(&grid.nodes());
    TridiagonalOperator::kinetic_plus_potential(grid, a * a, |q| 1.0 / spec.mass.value(q), &v)
}

/// `⟨ψ|H|ψ⟩` with grid quadrature.
pub fn energy(spec: &NaturalSystemSpec, wf: &WaveFunction) -> Result<f64> {
    let op = hamiltonian_operator(spec, &wf.grid, wf.a)?;
    let hpsi = op.apply_complex(&wf.psi);
    Ok(wf.grid.spacing() * wf.psi.iter().zip(&hpsi).map(|(p, hp)| (p.conj() * hp).re).sum::<f64>())
}

/// Reusable fixed-step propagator for `i a ψ̇ = H ψ`.
#[derive(Debug, Clone)]
pub struct SchrodingerPropagator {
    stepper: CayleyStepper,
    grid: Grid1D,
    a: f64,
}

impl SchrodingerPropagator {
    pub fn new(spec: &NaturalSystemSpec, grid: &Grid1D, a: f64, dt: f64) -> Result<Self> {
        check_a(a)?;
        let op = hamiltonian_operator(spec, grid, a)?;
        Ok(SchrodingerPropagator { stepper: CayleyStepper::new(&op, dt, a)?, grid: *grid, a })
    }

    pub fn step(&self, wf: &WaveFunction) -> Result<WaveFunction> {
        if wf.grid != self.grid || wf.a != self.a {
            return Err(VarqError::InvalidArgument("propagator built for a different grid or constant".into()));
        }
        let next = WaveFunction { grid: wf.grid, psi: self.stepper.step(&wf.psi), a: wf.a };
        let edge = next.edge_mass();
        if edge > EDGE_MASS_LIMIT {
            return Err(VarqError::DomainEscape(format!("probability {edge:.3e} reached the grid edge")));
        }
        Ok(next)
    }
}

/// Advance `n_steps` Cayley steps.
pub fn schrodinger_evolve(spec: &NaturalSystemSpec, wf: &WaveFunction, dt: f64, n_steps: usize) -> Result<WaveFunction> {
    let edge = wf.edge_mass();
    if edge > EDGE_MASS_LIMIT {
        return Err(VarqError::DomainEscape(format!("initial state has probability {edge:.3e} at the grid edge")));
    }
    let prop = SchrodingerPropagator::new(spec, &wf.grid, wf.a, dt)?;
    let mut cur = wf.clone();
    for _ in 0..n_steps {
        cur = prop.step(&cur)?;
    }
    Ok(cur)
}
