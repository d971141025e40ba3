use serde::{Deserialize, Serialize};

use crate::error::{Result, SviError};

/// Closed convex set with nonempty interior and a unique Euclidean projection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum ConvexSetSpec {
    /// { x : x_i >= lower_i for all i }
    Halfline { lower: Vec<f64> },
    /// { x : lower_i <= x_i <= upper_i }
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// { x : |x - center| <= radius }
    Ball { center: Vec<f64>, radius: f64 },
    /// { x : x_{i+1} - x_i >= min_gap }, the closed ordered cone
    OrderedCone { dim: usize, min_gap: f64 },
}

impl ConvexSetSpec {
    pub fn dimension(&self) -> usize {
        match self {
            ConvexSetSpec::Halfline { lower } => lower.len(),
            ConvexSetSpec::Box { lower, .. } => lower.len(),
            ConvexSetSpec::Ball { center, .. } => center.len(),
            ConvexSetSpec::OrderedCone { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSetSpec::Halfline { lower } => {
                if lower.is_empty() {
                    return Err(SviError::InvalidSpec("halfline needs dimension >= 1".into()));
                }
            }
            ConvexSetSpec::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(SviError::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| l >= u) {
                    return Err(SviError::InvalidSpec(
                        "box needs lower < upper in every coordinate (nonempty interior)".into(),
                    ));
                }
            }
            ConvexSetSpec::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(SviError::NonPositive {
                        what: "ball radius",
                        value: *radius,
                    });
                }
            }
            ConvexSetSpec::OrderedCone { dim, min_gap } => {
                if *dim < 2 {
                    return Err(SviError::InvalidSpec("ordered cone needs dim >= 2".into()));
                }
                if *min_gap < 0.0 {
                    return Err(SviError::NonPositive {
                        what: "ordered cone min gap",
                        value: *min_gap,
                    });
                }
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the set. Total on valid specs.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexSetSpec::Halfline { lower } => {
                x.iter().zip(lower).map(|(xi, li)| xi.max(*li)).collect()
            }
            ConvexSetSpec::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (li, ui))| xi.max(*li).min(*ui))
                .collect(),
            ConvexSetSpec::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(xi, ci)| xi - ci).collect();
                let n = crate::linalg::norm(&d);
                if n <= *radius {
                    x.to_vec()
                } else {
                    let s = radius / n;
                    center.iter().zip(&d).map(|(ci, di)| ci + s * di).collect()
                }
            }
            ConvexSetSpec::OrderedCone { min_gap, .. } => {
                // shift to the isotone cone, pool adjacent violators, shift back
                let shifted: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, xi)| xi - (i as f64) * min_gap)
                    .collect();
                let iso = isotonic_projection(&shifted);
                iso.iter()
                    .enumerate()
                    .map(|(i, yi)| yi + (i as f64) * min_gap)
                    .collect()
            }
        }
    }

    /// Membership test with absolute slack `tol` on the defining inequalities
    /// (for the ball, on the distance to the center).
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexSetSpec::Halfline { lower } => {
                x.iter().zip(lower).all(|(xi, li)| *xi >= li - tol)
            }
            ConvexSetSpec::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (li, ui))| *xi >= li - tol && *xi <= ui + tol),
            ConvexSetSpec::Ball { center, radius } => {
                crate::linalg::dist(x, center) <= radius + tol
            }
            ConvexSetSpec::OrderedCone { min_gap, .. } => {
                x.windows(2).all(|w| w[1] - w[0] >= min_gap - tol)
            }
        }
    }

    /// Whether the origin lies in the interior of the set.
    pub fn origin_in_interior(&self) -> bool {
        match self {
            ConvexSetSpec::Halfline { lower } => lower.iter().all(|l| *l < 0.0),
            ConvexSetSpec::Box { lower, upper } => {
                lower.iter().all(|l| *l < 0.0) && upper.iter().all(|u| *u > 0.0)
            }
            ConvexSetSpec::Ball { center, radius } => crate::linalg::norm(center) < *radius,
            ConvexSetSpec::OrderedCone { .. } => false,
        }
    }

    /// Whether the origin lies in the closed set; the catalog requires at least
    /// this so that the indicator vanishes at zero.
    pub fn origin_in_closure(&self) -> bool {
        let x = vec![0.0; self.dimension()];
        self.contains(&x, 0.0)
    }
}

/// Exact Euclidean projection onto { y : y_1 <= y_2 <= ... <= y_n } by
/// pool-adjacent-violators. Ties are resolved by block averaging, which is the
/// exact minimizer.
pub fn isotonic_projection(x: &[f64]) -> Vec<f64> {
    // blocks of (mean, count)
    let mut means: Vec<f64> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for &v in x {
        means.push(v);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let (m1, c1) = (means.pop().unwrap(), counts.pop().unwrap());
            let c = c1 + c2;
            means.push((m1 * c1 as f64 + m2 * c2 as f64) / c as f64);
            counts.push(c);
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (m, c) in means.iter().zip(&counts) {
        out.extend(std::iter::repeat(*m).take(*c));
    }
    out
}
