//! One runner per regime. Each records scalars, invariant checks and series.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{MadelungMode, Regime, ScenarioConfig};
use super::{Recorder, ScenarioError, Series};
use crate::covariant_fields::{
    canonical_reduction, ddw_evolve_with, energy_momentum, mode_frequency, FieldLagrangianSpec, FieldState1p1, PeriodicGrid,
};
use crate::discrete::{local_form_step, propagate, SpinState, SpinSystemSpec};
use crate::hydrodynamics::{madelung_step, DiffusionSpec, HydroState};
use crate::mechanics::{hamilton_flow, transport_density, transport_run, ClassicalEnsemble, NaturalSystemSpec, PhaseState};
use crate::potential::MassProfile;
use crate::quantum_fields::{
    confined_solve, confinement_report, field_fluctuations, space_independent_evolve, vacuum_spectrum, QFieldSpec,
    RadialOptions,
};
use crate::wavefunction::{energy, SchrodingerPropagator, WaveFunction};

type Outcome = Result<(), ScenarioError>;

pub(super) fn run(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    match cfg.regime {
        Regime::Classical => classical(cfg, rec),
        Regime::Madelung => madelung(cfg, rec),
        Regime::Schrodinger => schrodinger(cfg, rec),
        Regime::Spin => spin(cfg, rec),
        Regime::Ddw => ddw(cfg, rec),
        Regime::Vacuum => vacuum(cfg, rec),
        Regime::SpaceIndependent => space_independent(cfg, rec),
        Regime::Confined => confined(cfg, rec),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn classical(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.classical.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = NaturalSystemSpec::new(MassProfile::Constant(c.mass), cfg.build_potential()?);
    let ens = ClassicalEnsemble::gaussian(grid, c.center, c.width, c.p0)?;
    let run = transport_run(&ens, &spec, c.dt, c.steps, c.curvature_limit)?;
    let start = PhaseState { q: ens.centroid(), p: c.p0 };
    let flow = hamilton_flow(&spec, start, c.dt, c.steps, Some((grid.q_min(), grid.q_max())))?;
    let mut series = Series::new("centroid", &["t", "centroid", "flow_q", "probability"]);
    let mut worst: f64 = 0.0;
    for (k, t) in run.times.iter().enumerate() {
        let fq = flow.states.get(k).map_or(f64::NAN, |s| s.q);
        if fq.is_finite() {
            worst = worst.max((run.centroids[k] - fq).abs());
        }
        series.push(vec![*t, run.centroids[k], fq, run.probability[k]]);
    }
    let p0 = run.probability[0];
    let drift = run.probability.iter().map(|p| (p - p0).abs()).fold(0.0, f64::max);
    rec.scalar("centroid_error", worst);
    rec.scalar("centroid_error_over_h", worst / grid.spacing());
    rec.scalar("re_embeddings", run.re_embeddings as f64);
    rec.scalar("final_centroid", *run.centroids.last().expect("nonempty"));
    rec.check("probability_drift", drift, 1e-12);
    rec.check("centroid_vs_flow", worst, 2.0 * grid.spacing());
    rec.series.push(series);
    Ok(())
}

fn madelung(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.madelung.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = NaturalSystemSpec::new(MassProfile::Constant(c.mass), cfg.build_potential()?);
    let mut series = Series::new("density_error", &["t", "linf_rho", "probability"]);
    let mut worst: f64 = 0.0;
    match c.mode {
        MadelungMode::Quantum => {
            let dspec = DiffusionSpec::quantum(c.a)?;
            let mut wf = WaveFunction::gaussian(grid, c.center, c.sigma, c.p0, c.a)?;
            let mut state = wf.to_hydro()?;
            let prop = SchrodingerPropagator::new(&spec, &grid, c.a, c.dt)?;
            series.push(vec![0.0, 0.0, state.total_probability()]);
            for k in 1..=c.steps {
                state = madelung_step(&spec, &dspec, &state, c.dt)?;
                wf = prop.step(&wf)?;
                let d = max_abs_diff(&state.rho, &wf.density());
                worst = worst.max(d);
                series.push(vec![k as f64 * c.dt, d, state.total_probability()]);
            }
            rec.check("schrodinger_cross_check", worst, c.cross_tol.unwrap_or(1e-3));
        }
        MadelungMode::Classical => {
            let dspec = DiffusionSpec::classical();
            let mut ens = ClassicalEnsemble::gaussian(grid, c.center, c.sigma, c.p0)?;
            let mut state = HydroState::new(grid, ens.rho.clone(), ens.s.clone())?;
            series.push(vec![0.0, 0.0, state.total_probability()]);
            for k in 1..=c.steps {
                state = madelung_step(&spec, &dspec, &state, c.dt)?;
                ens = transport_density(&ens, &spec, c.dt)?;
                let d = max_abs_diff(&state.rho, &ens.rho).max(max_abs_diff(&state.lam, &ens.s));
                worst = worst.max(d);
                series.push(vec![k as f64 * c.dt, d, state.total_probability()]);
            }
            rec.check("transport_cross_check", worst, c.cross_tol.unwrap_or(1e-12));
        }
    }
    rec.scalar("max_density_gap", worst);
    rec.series.push(series);
    Ok(())
}

fn schrodinger(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.schrodinger.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = NaturalSystemSpec::new(MassProfile::Constant(c.mass), cfg.build_potential()?);
    let mut wf = WaveFunction::gaussian(grid, c.center, c.sigma, c.p0, c.a)?;
    let prop = SchrodingerPropagator::new(&spec, &grid, c.a, c.dt)?;
    let e0 = energy(&spec, &wf)?;
    let mut series = Series::new("moments", &["t", "norm", "mean", "variance", "energy"]);
    series.push(vec![0.0, wf.norm_sqr(), wf.mean_position(), wf.position_variance(), e0]);
    let (mut step_drift, mut e_drift): (f64, f64) = (0.0, 0.0);
    for k in 1..=c.steps {
        let prev = wf.norm_sqr();
        wf = prop.step(&wf)?;
        let n = wf.norm_sqr();
        let e = energy(&spec, &wf)?;
        step_drift = step_drift.max((n - prev).abs());
        e_drift = e_drift.max((e - e0).abs() / e0.abs().max(1e-300));
        series.push(vec![k as f64 * c.dt, n, wf.mean_position(), wf.position_variance(), e]);
    }
    rec.scalar("final_mean", wf.mean_position());
    rec.scalar("final_variance", wf.position_variance());
    rec.scalar("energy", e0);
    rec.check("norm_drift_per_step", step_drift, 1e-12);
    rec.check("energy_drift", e_drift, 1e-10);
    rec.series.push(series);
    Ok(())
}

fn spin(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.spin.as_ref().expect("validated");
    let n = c.u.len();
    let u = DMatrix::from_fn(n, n, |i, j| c.u[i][j]);
    let theta = match &c.theta {
        Some(t) => DMatrix::from_fn(n, n, |i, j| t[i][j]),
        None => DMatrix::zeros(n, n),
    };
    let spec = SpinSystemSpec::new(u, theta, c.a, c.b)?;
    let amps: Vec<Complex64> = match &c.initial_re {
        Some(re) => {
            let im = c.initial_im.clone().unwrap_or_else(|| vec![0.0; n]);
            re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..n).map(|_| Complex64::from_polar(rng.random_range(0.5..1.0), rng.random_range(0.0..2.0 * PI))).collect()
        }
    };
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(ScenarioError::Config("spin.initial_re: initial state is zero".into()));
    }
    let psi0 = SpinState::new(DVector::from_iterator(n, amps.iter().map(|z| z / norm)))?;
    let (mut p, mut lam) = psi0.to_local(c.a);
    let total0: f64 = p.iter().sum();
    let mut cols: Vec<String> = vec!["t".into()];
    cols.extend((1..=n).map(|k| format!("p_{k}")));
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut series = Series::new("populations", &col_refs);
    let mut row = vec![0.0];
    row.extend(psi0.populations());
    series.push(row);
    let (mut gap, mut sum_drift): (f64, f64) = (0.0, 0.0);
    let mut local_alive = true;
    let mut compared = 0usize;
    for k in 1..=c.steps {
        let t = k as f64 * c.dt;
        let global = propagate(&spec, &psi0, t)?.populations();
        if local_alive {
            let (np, nl) = local_form_step(&spec, &p, &lam, c.dt)?;
            p = np;
            lam = nl;
            sum_drift = sum_drift.max((p.iter().sum::<f64>() - total0).abs());
            if p.iter().chain(&global).cloned().fold(f64::INFINITY, f64::min) > 1e-6 {
                gap = gap.max(max_abs_diff(&p, &global));
                compared = k;
            } else {
                local_alive = false;
            }
        }
        let mut row = vec![t];
        row.extend(global);
        series.push(row);
    }
    rec.scalar("seed", cfg.seed as f64);
    rec.scalar("local_steps_compared", compared as f64);
    rec.scalar("local_global_gap", gap);
    rec.check("local_vs_global", gap, 1e-4);
    rec.check("population_sum_drift", sum_drift, 1e-12);
    rec.series.push(series);
    Ok(())
}

fn ddw(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.ddw.as_ref().expect("validated");
    let spec = FieldLagrangianSpec::klein_gordon(c.eta, c.mass)?;
    let grid = PeriodicGrid::new(c.length, c.n)?;
    let st = FieldState1p1::plane_wave(&spec, grid, c.mode, c.amplitude, c.mass)?;
    let (e0, p0) = energy_momentum(&spec, &st).totals();
    let mut series = Series::new("energy", &["t", "energy", "momentum"]);
    series.push(vec![0.0, e0, p0]);
    let (mut de, mut dp, mut dh): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut cur = st.clone();
    ddw_evolve_with(&spec, &mut cur, c.dt, c.steps, |s| {
        let tm = energy_momentum(&spec, s);
        let (e, p) = tm.totals();
        de = de.max((e - e0).abs() / e0.abs());
        dp = dp.max((p - p0).abs() / e0.abs());
        let pi1 = s.pi1(&spec);
        for j in 0..s.q.len() {
            let hc = canonical_reduction(&spec, s.pi0[j], -pi1[j] / spec.eta, s.q[j]);
            dh = dh.max((hc - tm.t[j][0]).abs() / (1.0 + tm.t[j][0].abs()));
        }
        series.push(vec![s.t, e, p]);
    })?;
    let k = grid.wavenumber(c.mode);
    let omega = mode_frequency(&spec, &st, c.mode, c.dt, c.steps)?;
    let exact = (k * k + c.mass * c.mass / c.eta).sqrt();
    rec.scalar("omega", omega);
    rec.scalar("omega_exact", exact);
    rec.scalar("energy", e0);
    rec.check("energy_drift", de, 1e-6);
    rec.check("momentum_drift", dp, 1e-6);
    rec.check("dispersion", (omega * omega - exact * exact).abs() / (exact * exact), 1e-3);
    rec.check("energy_density_identity", dh, 1e-12);
    rec.series.push(series);
    Ok(())
}

fn field_spec(cfg: &ScenarioConfig, eta: f64, f: f64) -> Result<QFieldSpec, ScenarioError> {
    Ok(QFieldSpec::new(eta, cfg.build_potential()?, f)?)
}

fn vacuum(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.vacuum.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = field_spec(cfg, c.eta, c.f)?;
    let vac = vacuum_spectrum(&spec, &grid, c.modes)?;
    let mut spectrum = Series::new("spectrum", &["r", "w"]);
    for (r, w) in vac.w.iter().enumerate() {
        rec.scalar(format!("w_{r}"), *w);
        spectrum.push(vec![r as f64, *w]);
    }
    let mut cols: Vec<String> = vec!["q".into()];
    cols.extend((0..vac.len()).map(|r| format!("psi_{r}")));
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut funcs = Series::new("eigenfunctions", &col_refs);
    for i in 0..grid.len() {
        let mut row = vec![grid.node(i)];
        row.extend(vac.psi.iter().map(|p| p[i]));
        funcs.push(row);
    }
    let (mean, var) = field_fluctuations(&vac);
    rec.scalar("fluctuation_mean", mean);
    rec.scalar("fluctuation_variance", var);
    if vac.len() > 1 {
        rec.scalar("confinement_radius", c.f / vac.gap(1));
    }
    let mut ortho: f64 = 0.0;
    for i in 0..vac.len() {
        for j in 0..=i {
            ortho = ortho.max((vac.overlap(i, j) - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let disorder = vac.w.windows(2).filter(|w| !(w[1] > w[0])).count() as f64;
    rec.check("orthonormality", ortho, 1e-8);
    rec.check("ordering_violations", disorder + if vac.w[0] < 0.0 { 1.0 } else { 0.0 }, 0.0);
    rec.series.push(spectrum);
    rec.series.push(funcs);
    Ok(())
}

fn space_independent(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.space_independent.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = field_spec(cfg, c.eta, c.f)?;
    let top = *c.superpose.iter().max().expect("validated nonempty");
    let vac = vacuum_spectrum(&spec, &grid, top + 1)?;
    let mut modes = c.superpose.clone();
    modes.sort_unstable();
    modes.dedup();
    let s = 1.0 / (modes.len() as f64).sqrt();
    let psi0: Vec<Complex64> =
        (0..grid.len()).map(|i| Complex64::new(s * modes.iter().map(|&m| vac.psi[m][i]).sum::<f64>(), 0.0)).collect();
    let run = space_independent_evolve(&spec, &grid, &psi0, c.dt, c.steps)?;
    let mid = grid.len() / 2;
    let mut series = Series::new("mean_energy", &["t", "w_bar", "eps_mid"]);
    for (k, t) in run.times().iter().enumerate() {
        series.push(vec![*t, run.mean_energy[k], run.energy_density[k][mid]]);
    }
    let expected = modes.iter().map(|&m| vac.w[m]).sum::<f64>() / modes.len() as f64;
    let p_max = run.momentum_density.iter().flatten().fold(0.0_f64, |m, p| m.max(p.abs()));
    rec.scalar("w_bar", run.mean_energy[0]);
    rec.scalar("w_bar_expected", expected);
    rec.check("mean_energy_drift", run.mean_energy_drift(), 1e-8);
    rec.check("momentum_density", p_max, 0.0);
    rec.series.push(series);
    Ok(())
}

fn confined(cfg: &ScenarioConfig, rec: &mut Recorder) -> Outcome {
    let c = cfg.confined.as_ref().expect("validated");
    let grid = cfg.build_grid()?;
    let spec = field_spec(cfg, c.eta, c.f)?;
    let vac = vacuum_spectrum(&spec, &grid, c.modes)?;
    let opts = RadialOptions { r_min: c.r_min, r_max: c.r_max, n_r: c.n_r, tol: c.tol, max_iterations: c.max_iterations };
    let pair = confined_solve(&spec, &vac, &c.c, &opts)?;
    let tails = pair.tail_integrals();
    let mut tail = Series::new("tail", &["r", "tail_integral", "log_tail"]);
    for (r, t) in pair.r.iter().zip(&tails) {
        tail.push(vec![*r, *t, t.ln()]);
    }
    let mut iters = Series::new("iterations", &["iteration", "residual", "step"]);
    for l in &pair.log {
        iters.push(vec![l.iteration as f64, l.residual, l.step]);
    }
    let increases = pair.log.windows(2).filter(|w| !(w[1].residual < w[0].residual)).count();
    let negative = pair
        .phi
        .iter()
        .chain(&pair.phi_tilde)
        .flatten()
        .fold(0.0_f64, |m, x| m.max(-x));
    rec.scalar("iterations", (pair.log.len() - 1) as f64);
    rec.scalar("residual", pair.residual);
    rec.scalar("confinement_radius", c.f / vac.gap(1));
    rec.check("residual_increases", increases as f64, 0.0);
    rec.check("negative_phi", negative, 0.0);
    if let Some(lead) = c.c.iter().skip(1).position(|x| *x != 0.0).map(|i| i + 1) {
        let (rate, _) = confinement_report(&pair, &vac)?;
        let expected = vac.gap(lead) / c.f;
        rec.scalar("fitted_rate", rate);
        rec.scalar("expected_rate", expected);
        rec.check("rate_error", (rate / expected - 1.0).abs(), c.rate_tol.unwrap_or(0.05));
    }
    rec.series.push(tail);
    rec.series.push(iters);
    Ok(())
}
