use crate::error::{Result, VarqError};

/// Classical fourth-order Runge–Kutta step for `ẏ = f(y)`.
pub fn rk4_step<F>(f: F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let check = |k: &[f64], stage: usize| -> Result<()> {
        if let Some(i) = k.iter().position(|x| !x.is_finite()) {
            return Err(VarqError::numerical(
                "non-finite derivative",
                vec![("stage".into(), stage as f64), ("component".into(), i as f64)],
            ));
        }
        Ok(())
    };
    let axpy = |k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(y);
    check(&k1, 1)?;
    let k2 = f(&axpy(&k1, 0.5 * dt));
    check(&k2, 2)?;
    let k3 = f(&axpy(&k2, 0.5 * dt));
    check(&k3, 3)?;
    let k4 = f(&axpy(&k3, dt));
    check(&k4, 4)?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = rk4_step(|y| y.to_vec(), &[1.0], 0.1).unwrap();
        assert!((y[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn fourth_order() {
        let run = |dt: f64| {
            let mut y = vec![1.0, 0.0];
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                y = rk4_step(|y| vec![y[1], -y[0]], &y, dt).unwrap();
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn nan_derivative_is_reported() {
        let r = rk4_step(|y| vec![y[0] / 0.0 * 0.0], &[1.0], 0.1);
        assert!(matches!(r, Err(VarqError::NumericalFailure { .. })));
    }
}
