//! Klein-Gordon plane waves in the De Donder-Weyl formulation: measured
//! dispersion and conservation of the energy-momentum totals.

use std::f64::consts::PI;

use varq::covariant_fields::{
    ddw_evolve_with, energy_momentum, mode_frequency, FieldLagrangianSpec, FieldState1p1, PeriodicGrid,
};

fn main() -> varq::Result<()> {
    let spec = FieldLagrangianSpec::klein_gordon(1.0, 1.0)?;
    let grid = PeriodicGrid::new(2.0 * PI, 256)?;
    for mode in 1..=4 {
        let st = FieldState1p1::plane_wave(&spec, grid, mode, 0.5, 1.0)?;
        let w = mode_frequency(&spec, &st, mode, 1e-3, 10_000)?;
        let k = grid.wavenumber(mode);
        println!("k = {k:.3}  ω = {w:.6}  √(k² + m²) = {:.6}", (k * k + 1.0).sqrt());
    }

    let mut st = FieldState1p1::plane_wave(&spec, grid, 2, 0.5, 1.0)?;
    let (e0, p0) = energy_momentum(&spec, &st).totals();
    let (mut de, mut dp): (f64, f64) = (0.0, 0.0);
    ddw_evolve_with(&spec, &mut st, 1e-3, 62_832, |s| {
        let (e, p) = energy_momentum(&spec, s).totals();
        de = de.max((e - e0).abs() / e0);
        dp = dp.max((p - p0).abs() / p0.abs());
    })?;
    println!("E = {e0:.6}, P = {p0:.6}; relative drift over ten crossings: {de:.2e}, {dp:.2e}");
    Ok(())
}
