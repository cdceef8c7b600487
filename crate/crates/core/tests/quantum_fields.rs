use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use varq::numerics::build_grid;
use varq::quantum_fields::{
    confined_solve, confinement_report, first_correction, vacuum_spectrum, QFieldSpec, RadialOptions, DEFAULT_MODES,
};
use varq::Potential;

fn dense_lowest(spec: &QFieldSpec, grid: &varq::Grid1D) -> f64 {
    let n = grid.len();
    let h = grid.spacing();
    let k = spec.f * spec.f / (2.0 * spec.eta * h * h);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 * k + spec.potential.value(grid.node(i));
        if i + 1 < n {
            m[(i, i + 1)] = -k;
            m[(i + 1, i)] = -k;
        }
    }
    SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn quartic_ground_state_matches_dense_diagonalization() {
    let spec = QFieldSpec::new(1.0, Potential::quartic(1.0), 1.0).unwrap();
    let grid = build_grid(-4.0, 4.0, 401).unwrap();
    let vac = vacuum_spectrum(&spec, &grid, 2).unwrap();
    let dense = dense_lowest(&spec, &grid);
    assert!((vac.w[0] - dense).abs() < 1e-6, "{} vs {dense}", vac.w[0]);
    assert!(vac.w[0] > 0.0 && vac.w[1] > vac.w[0]);
}

fn oscillator() -> (QFieldSpec, varq::quantum_fields::VacuumSpectrum) {
    let spec = QFieldSpec::new(1.0, Potential::harmonic(1.0), 1.0).unwrap();
    let grid = build_grid(-10.0, 10.0, 401).unwrap();
    let vac = vacuum_spectrum(&spec, &grid, DEFAULT_MODES).unwrap();
    (spec, vac)
}

#[test]
fn confined_tail_decays_at_the_first_gap() {
    let (spec, vac) = oscillator();
    let start = Instant::now();
    let opts = RadialOptions { r_max: 150.0, n_r: 600, tol: 1e-10, ..Default::default() };
    let pair = confined_solve(&spec, &vac, &[1.0, 0.1], &opts).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(pair.log.windows(2).all(|w| w[1].residual < w[0].residual));
    assert!(pair.residual < 1e-8);
    let (rate, radius) = confinement_report(&pair, &vac).unwrap();
    let expected = vac.gap(1) / spec.f;
    assert!((rate / expected - 1.0).abs() < 0.02, "rate {rate} vs {expected}");
    assert!((radius - 1.0 / vac.gap(1)).abs() < 1e-15);
    assert!(elapsed < 60.0);
}

#[test]
fn second_mode_alone_decays_at_the_second_gap() {
    let (spec, vac) = oscillator();
    let opts = RadialOptions { r_max: 24.0, n_r: 300, ..Default::default() };
    let pair = confined_solve(&spec, &vac, &[1.0, 0.0, 0.1], &opts).unwrap();
    let (rate, _) = confinement_report(&pair, &vac).unwrap();
    let expected = vac.gap(2) / spec.f;
    assert!((rate / expected - 1.0).abs() < 0.05, "rate {rate} vs {expected}");
}

// least squares for A1/r + A2/r² + A3/r³
fn inverse_power_fit(r: &[f64], y: &[f64]) -> [f64; 3] {
    let mut ata = DMatrix::<f64>::zeros(3, 3);
    let mut aty = nalgebra::DVector::<f64>::zeros(3);
    for (ri, yi) in r.iter().zip(y) {
        let row = [1.0 / ri, 1.0 / (ri * ri), 1.0 / (ri * ri * ri)];
        for a in 0..3 {
            aty[a] += row[a] * yi;
            for b in 0..3 {
                ata[(a, b)] += row[a] * row[b];
            }
        }
    }
    let x = ata.lu().solve(&aty).unwrap();
    [x[0], x[1], x[2]]
}

#[test]
fn first_correction_has_the_expected_inverse_r_coefficient() {
    let (spec, vac) = oscillator();
    let c1 = 0.1;
    let r: Vec<f64> = (0..=5500).map(|j| 5.0 + 0.01 * j as f64).collect();
    let corr = first_correction(&spec, &vac, &[1.0, c1], &r).unwrap();
    let gap = vac.gap(1);
    let (mut rs, mut ys) = (Vec::new(), Vec::new());
    for (j, rj) in r.iter().enumerate() {
        if (8.0..=30.0).contains(rj) {
            rs.push(*rj);
            ys.push(corr[j][1] * (gap * rj / spec.f).exp());
        }
    }
    let [a1, a2, _] = inverse_power_fit(&rs, &ys);
    let want = c1 * spec.f / gap;
    assert!((a1 / want - 1.0).abs() < 0.05, "A1 = {a1}, expected {want}");
    let want2 = -c1 * spec.f * spec.f / (gap * gap);
    assert!((a2 / want2 - 1.0).abs() < 0.25, "A2 = {a2}, expected {want2}");
}
