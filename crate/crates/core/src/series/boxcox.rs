use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// λ grid {0, 0.05, ..., 1} searched by [`boxcox_lambda`].
pub const BOXCOX_LAMBDA_GRID: [f64; 21] = [
    0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8,
    0.85, 0.9, 0.95, 1.0,
];

pub fn boxcox<T: Scalar>(values: &[T], lambda: T) -> Result<Vec<T>> {
    if lambda <= T::zero() {
        if let Some(v) = values.iter().find(|v| **v <= T::zero()) {
            return Err(Error::InvalidInput(format!(
                "Box-Cox with lambda {lambda} requires positive values, found {v}"
            )));
        }
    }
    Ok(values.iter().map(|&y| boxcox_one(y, lambda)).collect())
}

#[inline]
pub(crate) fn boxcox_one<T: Scalar>(y: T, lambda: T) -> T {
    if lambda == T::zero() {
        y.ln()
    } else {
        (y.powf(lambda) - T::one()) / lambda
    }
}

pub fn inv_boxcox<T: Scalar>(values: &[T], lambda: T) -> Vec<T> {
    values.iter().map(|&z| inv_boxcox_one(z, lambda)).collect()
}

#[inline]
pub(crate) fn inv_boxcox_one<T: Scalar>(z: T, lambda: T) -> T {
    if lambda == T::zero() {
        z.exp()
    } else {
        // Outside the range of the forward map; clamp to the boundary value 0.
        let base = lambda * z + T::one();
        if base <= T::zero() {
            T::zero()
        } else {
            base.powf(T::one() / lambda)
        }
    }
}

/// Selects λ on [`BOXCOX_LAMBDA_GRID`] by maximising the profile log-likelihood
/// `-n/2 ln σ²(λ) + (λ - 1) Σ ln y`. Requires strictly positive values.
pub fn boxcox_lambda<T: Scalar>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::SeriesTooShort {
            what: "Box-Cox lambda selection",
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| *v <= T::zero()) {
        return Err(Error::InvalidInput(
            "Box-Cox lambda selection requires positive values".into(),
        ));
    }
    let n = T::from_usize_lossy(values.len());
    let log_sum: T = values.iter().map(|v| v.ln()).sum();
    let mut best = (T::neg_infinity(), T::one());
    for &lam in BOXCOX_LAMBDA_GRID.iter() {
        let lam = T::lit(lam);
        let z: Vec<T> = values.iter().map(|&y| boxcox_one(y, lam)).collect();
        let m = z.iter().copied().sum::<T>() / n;
        let var = z.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
        if var <= T::zero() {
            continue;
        }
        let ll = -n / T::lit(2.0) * var.ln() + (lam - T::one()) * log_sum;
        if ll > best.0 {
            best = (ll, lam);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_case() {
        let y = [0.5f64, 3.0, 10.0];
        let z = boxcox(&y, 1.0).unwrap();
        for (a, b) in z.iter().zip(y) {
            assert!((a - (b - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn log_case() {
        let z = boxcox(&[std::f64::consts::E], 0.0).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_examples() {
        let y = [0.5f64, 1.0, 100.0];
        let back = inv_boxcox(&boxcox(&y, 0.3).unwrap(), 0.3);
        for (a, b) in back.iter().zip(y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn nonpositive_rejected() {
        assert!(boxcox(&[1.0, 0.0], 0.0).is_err());
        assert!(boxcox(&[1.0, -1.0], -0.5).is_err());
        assert!(boxcox(&[1.0, 0.0], 0.5).is_ok());
    }

    #[test]
    fn lambda_prefers_log_for_exponential_growth() {
        let y: Vec<f64> = (0..60).map(|t| (0.08 * t as f64).exp()).collect();
        let lam = boxcox_lambda(&y).unwrap();
        assert!(lam <= 0.1, "lambda {lam}");
    }

    proptest! {
        #[test]
        fn inverse_recovers(y in 1e-3f64..1e4, lam in 0.0f64..1.0) {
            let z = boxcox(&[y], lam).unwrap();
            let back = inv_boxcox(&z, lam)[0];
            prop_assert!((back - y).abs() <= 1e-10 * y.max(1.0));
        }
    }
}
