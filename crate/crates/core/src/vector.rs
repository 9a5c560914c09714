//! Small fixed-size vector helpers over `[f64; D]`.

pub fn add<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|k| a[k] + b[k])
}

pub fn sub<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|k| a[k] - b[k])
}

pub fn scale<const D: usize>(a: &[f64; D], s: f64) -> [f64; D] {
    std::array::from_fn(|k| a[k] * s)
}

/// `a + s * b`
pub fn axpy<const D: usize>(a: &[f64; D], s: f64, b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|k| a[k] + s * b[k])
}

pub fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        s += a[k] * b[k];
    }
    s
}

pub fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    norm(&sub(a, b))
}

/// Unit vector along `a`, or `None` when `|a|` is below `tol`.
pub fn normalize<const D: usize>(a: &[f64; D], tol: f64) -> Option<[f64; D]> {
    let n = norm(a);
    if n < tol || !n.is_finite() {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn mean<const D: usize>(points: &[[f64; D]]) -> [f64; D] {
    let mut c = [0.0; D];
    for p in points {
        for k in 0..D {
            c[k] += p[k];
        }
    }
    scale(&c, 1.0 / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        assert_eq!(cross(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(normalize(&[0.0, 0.0], 1e-12).is_none());
        assert_eq!(normalize(&[0.0, 2.0], 1e-12), Some([0.0, 1.0]));
    }
}
