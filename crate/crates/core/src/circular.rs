//! Angle wrapping and circular statistics in degrees.

/// Wraps an angle into `[0, 360)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let w = angle.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-180, 180]`.
pub fn wrap_signed_degrees(angle: f64) -> f64 {
    let w = wrap_degrees(angle);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Wraps radians into `(-pi, pi]`.
pub fn wrap_radians(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = angle.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Smallest absolute separation between two angles, in `[0, 180]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_signed_degrees(a - b).abs()
}

/// Weighted resultant of a set of angles.
///
/// Returns `(mean_deg, resultant_length)` where the resultant length is in
/// `[0, 1]`. `None` when the total weight is zero or the resultant vanishes.
pub fn weighted_resultant<I>(angles_and_weights: I) -> Option<(f64, f64)>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (mut c, mut s, mut total) = (0.0, 0.0, 0.0);
    for (angle, weight) in angles_and_weights {
        let r = angle.to_radians();
        c += weight * r.cos();
        s += weight * r.sin();
        total += weight;
    }
    if total <= 0.0 {
        return None;
    }
    let len = (c * c + s * s).sqrt() / total;
    if len < 1e-12 {
        return None;
    }
    Some((wrap_degrees(s.atan2(c).to_degrees()), len))
}

/// Circular mean of equally weighted angles.
pub fn circular_mean(angles: &[f64]) -> Option<f64> {
    weighted_resultant(angles.iter().map(|&a| (a, 1.0))).map(|(m, _)| m)
}

/// Circular standard deviation `sqrt(-2 ln R)` in degrees.
pub fn circular_std(angles: &[f64]) -> f64 {
    match weighted_resultant(angles.iter().map(|&a| (a, 1.0))) {
        Some((_, r)) => (-2.0 * r.min(1.0).ln()).sqrt().to_degrees(),
        None => f64::INFINITY,
    }
}
