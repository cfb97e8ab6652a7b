//! Projections onto the complementarity set `𝒟` and the trace hyperplane `𝒮`.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Per-coordinate projection onto
/// `{(v⁺, v⁻) : v⁺ ≤ 0, v⁻ ≤ 0, v⁺·v⁻ = 0}`.
///
/// Each coordinate picks the cheaper of `(min(a, 0), 0)` and `(0, min(b, 0))`;
/// ties go to the first branch.
pub fn project_complementarity(
    a: &DVector<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut plus = DVector::zeros(a.len());
    let mut minus = DVector::zeros(a.len());
    for e in 0..a.len() {
        let (vp, vm) = project_pair(a[e], b[e]);
        plus[e] = vp;
        minus[e] = vm;
    }
    Ok((plus, minus))
}

#[inline]
pub(crate) fn project_pair(a: f64, b: f64) -> (f64, f64) {
    let first = a.min(0.0);
    let second = b.min(0.0);
    let cost_first = (first - a).powi(2) + b * b;
    let cost_second = a * a + (second - b).powi(2);
    if cost_first <= cost_second {
        (first, 0.0)
    } else {
        (0.0, second)
    }
}

/// Euclidean projection onto `{x : 1ᵀx = -B/2}`.
pub fn project_hyperplane(x: &DVector<f64>, nodes: usize) -> DVector<f64> {
    let mut out = x.clone();
    project_hyperplane_in_place(&mut out, nodes);
    out
}

pub(crate) fn project_hyperplane_in_place(x: &mut DVector<f64>, nodes: usize) {
    let p = x.len();
    if p == 0 {
        return;
    }
    let shift = (x.sum() + nodes as f64 / 2.0) / p as f64;
    x.add_scalar_mut(-shift);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn complementarity_examples() {
        assert_eq!(project_pair(1.0, 2.0), (0.0, 0.0));
        assert_eq!(project_pair(-1.0, -2.0), (0.0, -2.0));
        assert_eq!(project_pair(-3.0, -1.0), (-3.0, 0.0));
        assert_eq!(project_pair(-1.0, -1.0), (-1.0, 0.0));
        assert!(project_complementarity(&v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn hyperplane_examples() {
        let out = project_hyperplane(&DVector::zeros(6), 4);
        for x in out.iter() {
            assert!((x + 1.0 / 3.0).abs() < 1e-15);
        }
        let on = v(&[-1.0, -0.5, 0.0, 0.25, -0.75, 0.0]);
        assert!((on.sum() + 2.0).abs() < 1e-15);
        assert!((project_hyperplane(&on, 4) - &on).amax() < 1e-15);
    }
}
