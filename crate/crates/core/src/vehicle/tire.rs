use nalgebra::{DMatrix, DVector};

use super::TirePoly;
use crate::error::{Error, Result};

/// LPV stiffness `C(α)` in N/rad.
///
/// `C` is evaluated on `|α|` so that the force `C(α)·α` is odd like the
/// Pacejka curve it replaces; inside the saturation band the value is the
/// constant `saturation_value`.
pub fn tire_stiffness(alpha: f64, poly: &TirePoly) -> f64 {
    let a = alpha.abs();
    if a <= poly.saturation_band {
        return poly.saturation_value;
    }
    let n = poly.order();
    let mut c = 0.0;
    for &p in &poly.coefficients[..n] {
        c = c * a + p;
    }
    c + poly.coefficients[n] / (a + poly.epsilon)
}

/// Lateral force of the LPV tire model, `C(α)·α`.
pub fn lpv_tire_force(alpha: f64, poly: &TirePoly) -> f64 {
    tire_stiffness(alpha, poly) * alpha
}

/// Simplified Pacejka magic formula `scale · d · sin(c · atan(b α))`.
pub fn pacejka_force(alpha: f64, d: f64, c: f64, b: f64, scale: f64) -> f64 {
    scale * d * (c * (b * alpha).atan()).sin()
}

/// Least-squares fit of `F_y(α) = p₁αⁿ + … + p_n α + p_{n+1}` to samples.
///
/// The coefficients double as the stiffness polynomial: dividing by α
/// turns the constant term into `p_{n+1}/(α + ε)`. Since the stiffness is
/// evaluated on `|α|`, samples are folded onto `α ≥ 0` first, using the
/// oddness of the force (`(α, F) → (|α|, sign(α)·F)`).
pub fn fit_tire_poly(samples: &[(f64, f64)], n: usize, epsilon: f64) -> Result<TirePoly> {
    if samples.len() < n + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for order {n}, got {}",
            n + 2,
            samples.len()
        )));
    }
    // Column scaling keeps the Vandermonde matrix well conditioned for
    // slip angles of order 0.1.
    let scale = samples.iter().fold(0.0_f64, |m, s| m.max(s.0.abs())).max(f64::MIN_POSITIVE);
    let v = DMatrix::from_fn(samples.len(), n + 1, |i, j| (samples[i].0.abs() / scale).powi((n - j) as i32));
    let y = DVector::from_iterator(
        samples.len(),
        samples.iter().map(|s| if s.0 < 0.0 { -s.1 } else { s.1 }),
    );
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-12 * smax {
        return Err(Error::RankDeficient);
    }
    let coef = svd.solve(&y, 0.0).map_err(|_| Error::RankDeficient)?;
    let coefficients = (0..=n).map(|j| coef[j] / scale.powi((n - j) as i32)).collect();
    Ok(TirePoly {
        coefficients,
        epsilon,
        saturation_band: 0.0,
        saturation_value: 0.0,
    })
}

/// Evaluates the fitted force polynomial `F_y(α)` directly, extended to
/// negative slip as an odd function.
pub fn force_polynomial(alpha: f64, poly: &TirePoly) -> f64 {
    let f = poly.coefficients.iter().fold(0.0, |acc, &p| acc * alpha.abs() + p);
    f.copysign(alpha)
}
