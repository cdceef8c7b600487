//! Space-independent sector: the random energy density of a superposition of
//! two invariant states oscillates while its mean stays fixed.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use varq::numerics::build_grid;
use varq::quantum_fields::{space_independent_evolve, vacuum_spectrum, QFieldSpec};
use varq::Potential;

fn main() -> varq::Result<()> {
    let spec = QFieldSpec::new(1.0, Potential::harmonic(1.0), 1.0)?;
    let grid = build_grid(-10.0, 10.0, 801)?;
    let vac = vacuum_spectrum(&spec, &grid, 2)?;
    let psi: Vec<Complex64> =
        (0..grid.len()).map(|i| Complex64::new(FRAC_1_SQRT_2 * (vac.psi[0][i] + vac.psi[1][i]), 0.0)).collect();
    let run = space_independent_evolve(&spec, &grid, &psi, 0.01, 700)?;
    let probe = grid.len() / 2 + 40;
    println!("probe at q = {:.3}", grid.node(probe));
    for (k, t) in run.times().iter().enumerate().step_by(70) {
        println!("t = {t:5.2}  ε(q) = {:9.5}  w̄ = {:.12}", run.energy_density[k][probe], run.mean_energy[k]);
    }
    println!("mean energy drift = {:.2e} (expected w̄ = {:.8})", run.mean_energy_drift(), 0.5 * (vac.w[0] + vac.w[1]));
    Ok(())
}
