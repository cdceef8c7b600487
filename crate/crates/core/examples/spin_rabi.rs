//! Rabi oscillation of a two-level system, then the local (p, λ) form of a
//! three-level system compared against exact propagation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use varq::discrete::{local_form_step, propagate, SpinState, SpinSystemSpec};

fn main() -> varq::Result<()> {
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let two = SpinSystemSpec::new(sx, DMatrix::zeros(2, 2), 1.0, -1.0)?;
    let up = SpinState::basis(2, 0);
    for k in 0..=8 {
        let t = 0.25 * k as f64;
        let p = propagate(&two, &up, t)?.populations();
        println!("t = {t:.2}  p2 = {:.12}  sin²t = {:.12}", p[1], t.sin().powi(2));
    }

    let u = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.5, 1.0, 0.0, 0.3, 0.5, 0.3, 0.0]);
    let three = SpinSystemSpec::new(u, DMatrix::zeros(3, 3), 1.0, -1.0)?;
    let amps = [Complex64::new(0.8, 0.0), Complex64::new(0.3, 0.4), Complex64::new(0.2, -0.3)];
    let v = DVector::from_column_slice(&amps);
    let start = SpinState::new(v.clone() / Complex64::new(v.norm(), 0.0))?;
    let (mut p, mut lam) = start.to_local(1.0);
    let dt = 1e-3;
    for k in 1..=2000 {
        let (np, nl) = local_form_step(&three, &p, &lam, dt)?;
        p = np;
        lam = nl;
        if k % 500 == 0 {
            let exact = propagate(&three, &start, k as f64 * dt)?.populations();
            let gap = p.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("t = {:.1}  p = {p:.6?}  |p - exact|∞ = {gap:.2e}  Σp - 1 = {:.1e}", k as f64 * dt, p.iter().sum::<f64>() - 1.0);
        }
    }
    Ok(())
}
