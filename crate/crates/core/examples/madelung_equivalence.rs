//! Hydrodynamic (ρ, λ) evolution against the Schrödinger equation for a
//! displaced Gaussian in a harmonic trap.

use std::f64::consts::FRAC_1_SQRT_2;

use varq::hydrodynamics::{madelung_step, DiffusionSpec};
use varq::mechanics::NaturalSystemSpec;
use varq::numerics::build_grid;
use varq::wavefunction::{SchrodingerPropagator, WaveFunction};
use varq::Potential;

fn main() -> varq::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(401);
    let grid = build_grid(-5.0, 5.0, n)?;
    let h = grid.spacing();
    let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
    let wf = WaveFunction::gaussian(grid, 0.5, FRAC_1_SQRT_2, 0.0, 1.0)?;
    let d = DiffusionSpec::quantum(1.0)?;
    let dt = 0.4 * h * h;
    let steps = (1.0 / dt).round() as usize;
    let prop = SchrodingerPropagator::new(&spec, &grid, 1.0, dt)?;

    let mut hs = wf.to_hydro()?;
    let mut psi = wf;
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        hs = madelung_step(&spec, &d, &hs, dt)?;
        psi = prop.step(&psi)?;
        let gap = hs.rho.iter().zip(psi.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
        if k % (steps / 5) == 0 {
            println!("t = {:.3}  centroid {:.6} vs {:.6}  |Δρ|∞ = {gap:.3e}", k as f64 * dt, hs.centroid(), psi.mean_position());
        }
    }
    println!("n = {n}: worst density gap over t in [0, 1] = {worst:.3e}");
    Ok(())
}
