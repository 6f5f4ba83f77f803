//! Fixed-step classical Runge-Kutta.

use crate::error::Result;
use crate::scalar::Scalar;

/// One classical 4th-order Runge-Kutta step of size `h` for the autonomous
/// system `dx/dt = rhs(x)`.
pub fn rk4_step<T, F>(rhs: F, x: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let half = h / T::lit(2.0);
    let axpy = |base: &[T], k: &[T], s: T| -> Vec<T> { base.iter().zip(k).map(|(&b, &d)| b + s * d).collect() };

    let k1 = rhs(x)?;
    let k2 = rhs(&axpy(x, &k1, half))?;
    let k3 = rhs(&axpy(x, &k2, half))?;
    let k4 = rhs(&axpy(x, &k3, h))?;

    let two = T::lit(2.0);
    let sixth = h / T::lit(6.0);
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| xi + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        // dx/dt = -x, exact x(1) = e^-1
        let run = |h: f64| {
            let n = (1.0 / h).round() as usize;
            let mut x = vec![1.0];
            for _ in 0..n {
                x = rk4_step(|v: &[f64]| Ok(vec![-v[0]]), &x, h).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        assert!(e1 / e2 > 14.0 && e1 / e2 < 18.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn harmonic_oscillator_quarter_period() {
        // x'' = -x from (1, 0); after pi/2 the state is (0, -1)
        let n = 1000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let mut s = vec![1.0, 0.0];
        for _ in 0..n {
            s = rk4_step(|v: &[f64]| Ok(vec![v[1], -v[0]]), &s, h).unwrap();
        }
        assert!(s[0].abs() < 1e-12 && (s[1] + 1.0).abs() < 1e-12, "{s:?}");
    }
}
