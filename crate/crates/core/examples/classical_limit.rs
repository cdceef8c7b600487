//! A narrow ensemble in a harmonic well follows the Hamiltonian trajectory.
//!
//! ```text
//! cargo run --release --example classical_limit
//! ```

use std::f64::consts::PI;

use varq::mechanics::{hamilton_flow, transport_run, ClassicalEnsemble, NaturalSystemSpec, PhaseState};
use varq::numerics::build_grid;
use varq::Potential;

fn main() -> varq::Result<()> {
    let grid = build_grid(-2.5, 2.5, 501)?;
    let h = grid.spacing();
    let spec = NaturalSystemSpec::unit_mass(Potential::harmonic(1.0));
    let ens = ClassicalEnsemble::gaussian(grid, 1.0, 3.0 * h, 0.0)?;
    let dt = 0.3 * h;
    let n = (2.0 * PI / dt).round() as usize;

    let run = transport_run(&ens, &spec, dt, n, Some(0.5))?;
    let flow = hamilton_flow(&spec, PhaseState { q: 1.0, p: 0.0 }, dt, n, None)?;

    println!("{:>8} {:>12} {:>12}", "t", "centroid", "q(t)");
    for k in (0..=n).step_by(n / 12) {
        println!("{:>8.3} {:>12.6} {:>12.6}", k as f64 * dt, run.centroids[k], flow.states[k].q);
    }
    let worst = run.centroids.iter().zip(&flow.states).map(|(c, s)| (c - s.q).abs()).fold(0.0, f64::max);
    println!("max centroid error = {:.3} h, re-embeddings = {}", worst / h, run.re_embeddings);

    let z = hamilton_flow(&spec, PhaseState { q: 1.0, p: 0.0 }, 1e-3, 20_000, None)?.momentum_zero_crossings();
    println!("period from momentum sign changes = {:.10}", z[2] - z[0]);
    Ok(())
}
