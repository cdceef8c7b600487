//! Symmetric tridiagonal operators from second-order finite differences.

use num_complex::Complex64;

use super::grid::Grid1D;
use crate::error::{Result, VarqError};

/// Real symmetric tridiagonal matrix. `off[i]` couples nodes `i` and `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// A normalized eigenvector (`h Σ v² = 1`) and its eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(VarqError::InvalidArgument(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(TridiagonalOperator { diag, off })
    }

    /// `-(c/2) ∂(μ ∂ψ) + V ψ` with homogeneous Dirichlet data just outside
    /// both ends. `mu` is evaluated at cell faces.
    pub fn kinetic_plus_potential(
        grid: &Grid1D,
        c: f64,
        mu: impl Fn(f64) -> f64,
        potential: &[f64],
    ) -> Result<Self> {
        let n = grid.len();
        if potential.len() != n {
            return Err(VarqError::InvalidArgument(format!(
                "potential has {} samples for {} nodes",
                potential.len(),
                n
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(VarqError::InvalidArgument(format!("kinetic prefactor must be positive, got {c}")));
        }
        let h = grid.spacing();
        let k = 0.5 * c / (h * h);
        let face_mu = |i: isize| mu(grid.q_min() + (i as f64 + 0.5) * h);
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        for i in 0..n {
            let left = face_mu(i as isize - 1);
            let right = face_mu(i as isize);
            if !(left > 0.0 && right > 0.0 && left.is_finite() && right.is_finite()) {
                return Err(VarqError::InvalidArgument(format!(
                    "inverse mass must be positive and finite near node {i}"
                )));
            }
            diag.push(k * (left + right) + potential[i]);
            if i + 1 < n {
                off.push(-k * right);
            }
        }
        Ok(TridiagonalOperator { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn shifted(&self, s: f64) -> Self {
        TridiagonalOperator { diag: self.diag.iter().map(|d| d + s).collect(), off: self.off.clone() }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = v[i] * self.diag[i];
                if i > 0 {
                    s += v[i - 1] * self.off[i - 1];
                }
                if i + 1 < n {
                    s += v[i + 1] * self.off[i];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - e2 / d;
            if d.abs() < tiny {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

/// Solve a general tridiagonal system with partial pivoting.
/// `sub[i]` is entry (i+1, i), `sup[i]` is entry (i, i+1).
pub fn solve_tridiagonal_pivoted(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    // Upper factor has two superdiagonals after pivoting.
    let mut d = diag.to_vec();
    let mut u1 = sup.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut swapped = vec![false; n];
    let mut sub = sub.to_vec();
    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > d[i].abs() {
            swapped[i] = true;
            // swap rows i and i+1 over columns i, i+1, i+2
            std::mem::swap(&mut d[i], &mut sub[i]);
            let next_d = d[i + 1];
            d[i + 1] = u1[i];
            u1[i] = next_d;
            if i + 2 < n {
                u2[i] = u1[i + 1];
                u1[i + 1] = 0.0;
            }
        }
        if d[i] == 0.0 {
            return None;
        }
        let m = sub[i] / d[i];
        l[i] = m;
        d[i + 1] -= m * u1[i];
        if i + 2 < n {
            u1[i + 1] -= m * u2[i];
        }
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    let mut y = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            y.swap(i, i + 1);
        }
        y[i + 1] -= l[i] * y[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Some(x)
}

/// The `k` lowest eigenpairs of `op`, eigenvalues strictly increasing.
///
/// Eigenvalues come from Sturm bisection, vectors from inverse iteration.
/// Vectors are normalized with the grid quadrature of `grid`; the ground
/// state is made nonnegative and every other vector is signed so that its
/// rightmost significant component is positive.
pub fn eigensolve_lowest(op: &TridiagonalOperator, grid: &Grid1D, k: usize) -> Result<Vec<EigenPair>> {
    let n = op.len();
    if n != grid.len() {
        return Err(VarqError::InvalidArgument(format!(
            "operator has {n} rows but grid has {} nodes",
            grid.len()
        )));
    }
    if k == 0 || k > n {
        return Err(VarqError::InvalidArgument(format!("requested {k} eigenpairs from a {n}x{n} operator")));
    }
    if op.diag.iter().chain(op.off.iter()).any(|x| !x.is_finite()) {
        return Err(VarqError::InvalidArgument("operator has non-finite entries".into()));
    }
    let h = grid.spacing();
    let (glo, ghi) = op.gershgorin();
    let scale = glo.abs().max(ghi.abs()).max(1.0);

    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        let mut lo = glo - 1e-12 * scale;
        let mut hi = ghi + 1e-12 * scale;
        if let Some(&prev) = values.last() {
            lo = f64::max(lo, prev);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if op.count_below(mid) <= j {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
        }
        values.push(0.5 * (lo + hi));
    }

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    for (j, &w) in values.iter().enumerate() {
        let shift = w + 1e-10 * scale;
        let sub = op.off.clone();
        let diag: Vec<f64> = op.diag.iter().map(|d| d - shift).collect();
        // deterministic, non-symmetric start vector
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919 + 13) % 101) as f64 / 101.0).collect();
        for _ in 0..4 {
            let mut x = solve_tridiagonal_pivoted(&sub, &diag, &op.off, &v).ok_or_else(|| {
                VarqError::numerical("singular shifted operator in inverse iteration", vec![("eigenvalue".into(), w)])
            })?;
            for p in &pairs {
                let dot: f64 = h * x.iter().zip(&p.vector).map(|(a, b)| a * b).sum::<f64>();
                for (xi, pi) in x.iter_mut().zip(&p.vector) {
                    *xi -= dot * pi;
                }
            }
            let norm = (h * x.iter().map(|a| a * a).sum::<f64>()).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(VarqError::numerical(
                    "inverse iteration produced a degenerate vector",
                    vec![("eigenvalue".into(), w)],
                ));
            }
            x.iter_mut().for_each(|a| *a /= norm);
            v = x;
        }
        fix_sign(&mut v, j == 0);
        let r = op.apply(&v);
        let resid = r.iter().zip(&v).map(|(a, b)| (a - w * b).abs()).fold(0.0, f64::max);
        if resid > 1e-8 * (1.0 + w.abs()) {
            return Err(VarqError::numerical(
                "eigenvector residual above tolerance",
                vec![("index".into(), j as f64), ("eigenvalue".into(), w), ("residual".into(), resid)],
            ));
        }
        pairs.push(EigenPair { value: w, vector: v });
    }
    Ok(pairs)
}

fn fix_sign(v: &mut [f64], ground: bool) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if ground {
        let s: f64 = v.iter().sum();
        if s < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v.iter_mut().for_each(|x| *x = x.abs());
        return;
    }
    if let Some(x) = v.iter().rev().find(|x| x.abs() > 1e-3 * peak) {
        if *x < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Precomputed Cayley (Crank–Nicolson) propagator
/// `(1 + iτH)⁻¹ (1 − iτH)` with `τ = dt / (2a)`.
#[derive(Debug, Clone)]
pub struct CayleyStepper {
    op: TridiagonalOperator,
    tau: f64,
    // Thomas factors of (1 + iτH)
    inv_pivot: Vec<Complex64>,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl CayleyStepper {
    pub fn new(op: &TridiagonalOperator, dt: f64, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(VarqError::InvalidArgument(format!("quantization constant must be positive, got {a}")));
        }
        if !dt.is_finite() {
            return Err(VarqError::InvalidArgument(format!("time step must be finite, got {dt}")));
        }
        let tau = dt / (2.0 * a);
        let n = op.len();
        let i = Complex64::i();
        let mut inv_pivot = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        let mut prev_c = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let b = Complex64::new(1.0, 0.0) + i * (tau * op.diag[k]);
            let a_k = if k > 0 { i * (tau * op.off[k - 1]) } else { Complex64::new(0.0, 0.0) };
            let m = if k > 0 { a_k * prev_c } else { Complex64::new(0.0, 0.0) };
            let piv = b - m;
            if piv.norm() == 0.0 {
                return Err(VarqError::numerical("singular Cayley factor", vec![("row".into(), k as f64)]));
            }
            let ip = piv.inv();
            inv_pivot.push(ip);
            if k + 1 < n {
                let c = i * (tau * op.off[k]) * ip;
                upper.push(c);
                prev_c = c;
            }
            if k > 0 {
                lower.push(a_k);
            }
        }
        Ok(CayleyStepper { op: op.clone(), tau, inv_pivot, upper, lower })
    }

    pub fn step(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        let i = Complex64::i();
        let hpsi = self.op.apply_complex(psi);
        let mut y: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, hp)| p - i * self.tau * hp).collect();
        for k in 0..n {
            if k > 0 {
                let prev = y[k - 1];
                y[k] -= self.lower[k - 1] * prev;
            }
            y[k] *= self.inv_pivot[k];
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let next = y[k + 1];
            y[k] -= self.upper[k] * next;
        }
        y
    }
}

/// One Cayley step of `i a ψ̇ = H ψ`; preserves `Σ|ψ|²` to rounding.
pub fn unitary_step(op: &TridiagonalOperator, psi: &[Complex64], dt: f64, a: f64) -> Result<Vec<Complex64>> {
    if psi.len() != op.len() {
        return Err(VarqError::InvalidArgument(format!(
            "state has {} components for a {}-row operator",
            psi.len(),
            op.len()
        )));
    }
    Ok(CayleyStepper::new(op, dt, a)?.step(psi))
}
