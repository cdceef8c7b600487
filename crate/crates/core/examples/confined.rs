//! Static spherically symmetric excess density around the vacuum, with its
//! decay rate compared to the first spectral gap.

use varq::numerics::build_grid;
use varq::quantum_fields::{confined_solve, confinement_report, vacuum_spectrum, QFieldSpec, RadialOptions, DEFAULT_MODES};
use varq::Potential;

fn main() -> varq::Result<()> {
    let spec = QFieldSpec::new(1.0, Potential::harmonic(1.0), 1.0)?;
    let grid = build_grid(-10.0, 10.0, 401)?;
    let vac = vacuum_spectrum(&spec, &grid, DEFAULT_MODES)?;
    let opts = RadialOptions { r_max: 150.0, n_r: 600, ..Default::default() };
    let pair = confined_solve(&spec, &vac, &[1.0, 0.1], &opts)?;
    for it in &pair.log {
        println!("iteration {:2}  residual {:.3e}  step {:.3}", it.iteration, it.residual, it.step);
    }
    let tails = pair.tail_integrals();
    for j in (0..pair.r.len()).step_by(60) {
        println!("r = {:8.3}  ∫|ρ - ψ₀²| dq = {:.3e}", pair.r[j], tails[j]);
    }
    let (rate, radius) = confinement_report(&pair, &vac)?;
    println!("fitted rate {rate:.5}, (w1 - w0)/f = {:.5}, confinement radius {radius:.5}", vac.gap(1) / spec.f);
    Ok(())
}
