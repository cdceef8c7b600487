//! Free spreading of a Gaussian packet with the Crank-Nicolson propagator.

use varq::mechanics::NaturalSystemSpec;
use varq::numerics::build_grid;
use varq::wavefunction::{SchrodingerPropagator, WaveFunction};
use varq::Potential;

fn main() -> varq::Result<()> {
    let grid = build_grid(-30.0, 30.0, 3001)?;
    let spec = NaturalSystemSpec::unit_mass(Potential::free());
    let dt = 0.005;
    let prop = SchrodingerPropagator::new(&spec, &grid, 1.0, dt)?;
    let mut wf = WaveFunction::gaussian(grid, 0.0, 1.0, 0.0, 1.0)?;

    println!("{:>6} {:>14} {:>14} {:>18}", "t", "variance", "exact", "norm - 1");
    for k in 0..=400 {
        if k % 50 == 0 {
            let t = k as f64 * dt;
            println!(
                "{:>6.2} {:>14.8} {:>14.8} {:>18.3e}",
                t,
                wf.position_variance(),
                1.0 + t * t / 4.0,
                wf.norm_sqr() - 1.0
            );
        }
        wf = prop.step(&wf)?;
    }
    Ok(())
}
