//! Feasible sets with closed-form Euclidean projection.
//!
//! Both solvers minimize a spherical quadratic over the feasible set each
//! step, so the constrained arg-min is the projection of the unconstrained
//! minimizer. Only sets with closed-form projections are supported.

use crate::error::{Error, Result};
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
}

impl FeasibleSet {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            FeasibleSet::WholeSpace => Ok(()),
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: lower.len() });
                }
                if upper.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: upper.len() });
                }
                for i in 0..dim {
                    if lower[i] > upper[i] {
                        return Err(Error::config(format!(
                            "box bounds inverted at coordinate {i}: {} > {}",
                            lower[i], upper[i]
                        )));
                    }
                }
                Ok(())
            }
            FeasibleSet::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: center.len() });
                }
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::config(format!("ball radius must be >= 0, got {radius}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, FeasibleSet::WholeSpace)
    }

    /// Euclidean projection onto the set. Idempotent; nonexpansive.
    pub fn project(&self, point: &Vector) -> Vector {
        match self {
            FeasibleSet::WholeSpace => point.clone(),
            FeasibleSet::Box { lower, upper } => Vector::from_fn(point.len(), |i| {
                point[i].clamp(lower[i], upper[i])
            }),
            FeasibleSet::Ball { center, radius } => {
                let offset = point.sub(center);
                let dist = offset.norm();
                if dist <= *radius {
                    point.clone()
                } else {
                    // radial scaling back to the sphere
                    let mut out = center.clone();
                    out.add_scaled(radius / dist, &offset);
                    out
                }
            }
        }
    }

    pub fn contains(&self, point: &Vector, tol: f64) -> bool {
        self.project(point).dist(point) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn whole_space_is_identity() {
        let p = FeasibleSet::WholeSpace.project(&v(&[3.0, 4.0]));
        assert_eq!(p.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn ball_projects_radially() {
        let set = FeasibleSet::Ball { center: Vector::zeros(2), radius: 1.0 };
        let p = set.project(&v(&[3.0, 4.0]));
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);
        // interior points are untouched
        let q = set.project(&v(&[0.1, 0.2]));
        assert_eq!(q.as_slice(), &[0.1, 0.2]);
    }

    #[test]
    fn box_clamps() {
        let set = FeasibleSet::Box { lower: v(&[0.0, 0.0]), upper: v(&[1.0, 1.0]) };
        let p = set.project(&v(&[-0.5, 2.0]));
        assert_eq!(p.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn inverted_box_rejected() {
        let set = FeasibleSet::Box { lower: v(&[1.0]), upper: v(&[0.0]) };
        assert!(set.validate(1).is_err());
    }

    #[test]
    fn degenerate_box_is_a_point() {
        let set = FeasibleSet::Box { lower: v(&[0.5, 0.5]), upper: v(&[0.5, 0.5]) };
        set.validate(2).unwrap();
        assert_eq!(set.project(&v(&[9.0, -9.0])).as_slice(), &[0.5, 0.5]);
    }
}
