//! Invariant states of a harmonic and a quartic field potential.

use varq::numerics::build_grid;
use varq::quantum_fields::{field_fluctuations, invariant_state_tensor, vacuum_spectrum, QFieldSpec};
use varq::Potential;

fn main() -> varq::Result<()> {
    let grid = build_grid(-10.0, 10.0, 2001)?;
    let (eta, k, f) = (1.0, 1.0, 1.0);
    let spec = QFieldSpec::new(eta, Potential::harmonic(k), f)?;
    let vac = vacuum_spectrum(&spec, &grid, 4)?;
    for (r, w) in vac.w.iter().enumerate() {
        println!("w_{r} = {w:.8}  (oscillator {:.8})", f * (k / eta).sqrt() * (r as f64 + 0.5));
    }
    let (_, var) = field_fluctuations(&vac);
    println!("ground-state variance = {var:.8}  (f / 2√(kη) = {:.8})", f / (2.0 * (k * eta).sqrt()));
    println!("tensor of the ground state:\n{}", invariant_state_tensor(vac.w[0], 4));

    let quartic = QFieldSpec::new(1.0, Potential::quartic(1.0), 1.0)?;
    let vq = vacuum_spectrum(&quartic, &build_grid(-4.0, 4.0, 401)?, 3)?;
    println!("quartic levels: {:.8?}", vq.w);
    Ok(())
}
