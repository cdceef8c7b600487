//! The map between (ρ, λ) and the complex amplitude, and its unit Jacobian.

use num_complex::Complex64;
use varq::numerics::build_grid;
use varq::wavefunction::{canonical_jacobian, canonical_map_forward, canonical_map_inverse, canonical_pair, WaveFunction};

fn main() -> varq::Result<()> {
    for (u, v) in [(1.0, 0.0), (0.3, -1.2), (-2.0, 0.5)] {
        let (p, lam) = canonical_pair(u, v, 1.0);
        println!("(u, v) = ({u:5.2}, {v:5.2})  P = {p:.4}  Λ = {lam:.4}  J = {:.12}", canonical_jacobian(u, v, 1.0, 1e-5));
    }

    let grid = build_grid(-6.0, 6.0, 601)?;
    let wf = WaveFunction::gaussian(grid, 0.3, 1.0, 1.3, 1.0)?;
    let fields = canonical_map_forward(&wf.psi, 1.0);
    let back = canonical_map_inverse(&fields.rho, &fields.lam, 1.0)?;
    let err = wf.psi.iter().zip(&back).map(|(a, b): (&Complex64, &Complex64)| (a - b).norm()).fold(0.0, f64::max);
    let i = grid.len() / 2 + 50;
    let slope = (fields.lam[i + 1] - fields.lam[i - 1]) / (2.0 * grid.spacing());
    println!("∂λ at q = {:.2}: {slope:.9} (p0 = 1.3)", grid.node(i));
    println!("round trip error = {err:.3e}");
    Ok(())
}
