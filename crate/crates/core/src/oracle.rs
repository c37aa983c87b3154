//! Compact convex feasible sets with closed-form linear minimization, and the
//! conditional-gradient pull-back used after each Newton step.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// Relative tolerance for membership tests.
pub const FEAS_TOL: f64 = 1e-12;

/// Default inner iteration cap for [`condg`].
pub const DEFAULT_MAX_INNER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x : lower <= x <= upper}`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x >= 0 : sum(x) = radius}` in the dimension of the query vector.
    Simplex { radius: f64 },
    /// Closed Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidSet(format!("bound {i} is not finite")));
            }
            if l > u {
                return Err(Error::InvalidSet(format!(
                    "lower[{i}] = {l} > upper[{i}] = {u}"
                )));
            }
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn uniform_box(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new_box(vec![lower; n], vec![upper; n])
    }

    pub fn new_simplex(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!(
                "simplex radius {radius} must be positive"
            )));
        }
        Ok(Self::Simplex { radius })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!(
                "ball radius {radius} must be positive"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSet("ball center is not finite".into()));
        }
        Ok(Self::Ball { center, radius })
    }

    /// Fixed dimension of the set, if it has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Box { lower, .. } => Some(lower.len()),
            Self::Simplex { .. } => None,
            Self::Ball { center, .. } => Some(center.len()),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        match self.dim() {
            Some(expected) if expected != got => Err(Error::DimensionMismatch { expected, got }),
            _ => Ok(()),
        }
    }

    /// Scaled constraint violation of `x`; zero means exactly feasible.
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let v = match self {
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&xi, (&l, &u))| {
                    let scale = 1f64.max(l.abs()).max(u.abs());
                    (l - xi).max(xi - u).max(0.0) / scale
                })
                .fold(0.0, f64::max),
            Self::Simplex { radius } => {
                let scale = radius.max(1.0);
                let neg = x.iter().fold(0.0f64, |m, &xi| m.max(-xi));
                let sum: f64 = x.iter().sum();
                neg.max((sum - radius).abs()) / scale
            }
            Self::Ball { center, radius } => {
                let scale = radius.max(1.0).max(crate::linalg::norm_inf(center));
                let d = crate::linalg::dist2(x, center);
                (d - radius).max(0.0) / scale
            }
        };
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.violation(x).is_ok_and(|v| v <= FEAS_TOL)
    }

    /// Exact minimizer of `<c, u>` over the set.
    pub fn lmo(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(c.len())?;
        Ok(match self {
            Self::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&ci, (&l, &u))| if ci < 0.0 { u } else { l })
                .collect(),
            Self::Simplex { radius } => {
                let mut out = vec![0.0; c.len()];
                // First index wins ties.
                if let Some(j) =
                    (0..c.len()).reduce(|best, j| if c[j] < c[best] { j } else { best })
                {
                    out[j] = *radius;
                }
                out
            }
            Self::Ball { center, radius } => {
                let nc = norm2(c);
                if nc == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(c)
                        .map(|(&m, &ci)| m - radius * ci / nc)
                        .collect()
                }
            }
        })
    }

    /// Exact Euclidean projection onto the set.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        Ok(match self {
            Self::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&yi, (&l, &u))| yi.clamp(l, u))
                .collect(),
            Self::Simplex { radius } => project_simplex(y, *radius),
            Self::Ball { center, radius } => {
                let d = crate::linalg::dist2(y, center);
                if d <= *radius {
                    y.to_vec()
                } else {
                    center
                        .iter()
                        .zip(y)
                        .map(|(&m, &yi)| m + radius * (yi - m) / d)
                        .collect()
                }
            }
        })
    }
}

/// Sort-based projection onto `{x >= 0, sum x = r}`.
fn project_simplex(y: &[f64], r: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - r) / (k + 1) as f64;
        if v - candidate > 0.0 {
            tau = candidate;
        }
    }
    y.iter().map(|&v| (v - tau).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondGStatus {
    GapReached,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondGResult {
    pub point: Vec<f64>,
    pub inner_iterations: usize,
    /// Last Frank-Wolfe gap `min_u <z - y, u - z>`, which is nonpositive.
    pub final_gap: f64,
    pub status: CondGStatus,
}

/// Inexact conditional-gradient approximation of the projection of `y`
/// onto `set`, warm-started at the feasible point `x`.
///
/// Minimizes `0.5 ||z - y||^2` with Frank-Wolfe steps capped at 1 and stops
/// as soon as the gap `<z - y, u - z>` is at least `-eps`.
pub fn condg(
    y: &[f64],
    x: &[f64],
    eps: f64,
    set: &FeasibleSet,
    max_inner: usize,
) -> Result<CondGResult> {
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "CondG tolerance {eps} must be >= 0"
        )));
    }
    if max_inner == 0 {
        return Err(Error::InvalidConfig(
            "CondG needs at least one inner iteration".into(),
        ));
    }
    if !crate::linalg::all_finite(y) {
        return Err(Error::NonFinite);
    }
    let violation = set.violation(x)?;
    if violation > FEAS_TOL {
        return Err(Error::InfeasibleWarmStart { violation });
    }

    let n = x.len();
    let mut z = x.to_vec();
    let mut grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut gap = 0.0;

    for t in 1..=max_inner {
        for i in 0..n {
            grad[i] = z[i] - y[i];
        }
        let u = set.lmo(&grad)?;
        for i in 0..n {
            dir[i] = u[i] - z[i];
        }
        gap = dot(&grad, &dir);
        // The stop test precedes the step so that u == z never divides by zero.
        if gap >= -eps {
            return Ok(CondGResult {
                point: z,
                inner_iterations: t,
                final_gap: gap,
                status: CondGStatus::GapReached,
            });
        }
        let alpha = (-gap / dot(&dir, &dir)).min(1.0);
        if alpha == 1.0 {
            z = u;
        } else {
            for i in 0..n {
                z[i] += alpha * dir[i];
            }
        }
    }

    Ok(CondGResult {
        point: z,
        inner_iterations: max_inner,
        final_gap: gap,
        status: CondGStatus::IterationCap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_box(n: usize) -> FeasibleSet {
        FeasibleSet::uniform_box(n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn lmo_box_sign_rule() {
        let u = unit_box(3).lmo(&[1.0, -2.0, 0.0]).unwrap();
        assert_eq!(u, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn lmo_simplex_min_vertex() {
        let s = FeasibleSet::new_simplex(1.0).unwrap();
        assert_eq!(s.lmo(&[3.0, 1.0, 2.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        // tie goes to the first index
        assert_eq!(s.lmo(&[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn lmo_ball() {
        let b = FeasibleSet::new_ball(vec![0.0, 0.0], 2.0).unwrap();
        let u = b.lmo(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(u[0], -1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], -1.6, epsilon = 1e-15);
        assert_eq!(b.lmo(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lmo_dimension_mismatch() {
        assert!(matches!(
            unit_box(3).lmo(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn box_validation() {
        assert!(FeasibleSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::new_box(vec![0.0], vec![f64::INFINITY]).is_err());
        // Degenerate coordinate is allowed.
        let b = FeasibleSet::new_box(vec![0.5, 0.0], vec![0.5, 1.0]).unwrap();
        assert!(b.contains(&[0.5, 0.3]));
        assert!(!b.contains(&[0.5 + 1e-9, 0.3]));
    }

    #[test]
    fn condg_fixed_point() {
        for x in [[0.0, 0.0], [0.3, 1.0], [0.5, 0.5]] {
            let r = condg(&x, &x, 0.0, &unit_box(2), 300).unwrap();
            assert_eq!(r.point, x.to_vec());
            assert_eq!(r.inner_iterations, 1);
            assert_eq!(r.status, CondGStatus::GapReached);
        }
    }

    #[test]
    fn condg_hand_trace_corner() {
        let r = condg(&[2.0, 2.0], &[0.0, 0.0], 0.0, &unit_box(2), 300).unwrap();
        assert_eq!(r.point, vec![1.0, 1.0]);
        assert_eq!(r.inner_iterations, 2);
        assert_eq!(r.final_gap, 0.0);
        assert_eq!(r.point, unit_box(2).project(&[2.0, 2.0]).unwrap());
    }

    #[test]
    fn condg_interior_target() {
        // u = (1,1), g = -1, alpha = 1/2 lands exactly on y.
        let r = condg(&[0.5, 0.5], &[0.0, 0.0], 0.0, &unit_box(2), 300).unwrap();
        assert_eq!(r.status, CondGStatus::GapReached);
        assert_eq!(r.final_gap, 0.0);
        assert_abs_diff_eq!(crate::linalg::dist2(&r.point, &[0.5, 0.5]), 0.0);
    }

    #[test]
    fn condg_rejects_infeasible_start() {
        let err = condg(&[0.0, 0.0], &[2.0, 0.0], 0.0, &unit_box(2), 10).unwrap_err();
        assert!(matches!(err, Error::InfeasibleWarmStart { .. }));
    }

    #[test]
    fn condg_reports_cap() {
        let r = condg(&[0.3, 0.7], &[0.0, 0.0], 0.0, &unit_box(2), 1).unwrap();
        assert_eq!(r.status, CondGStatus::IterationCap);
        assert_eq!(r.inner_iterations, 1);
        assert!(r.final_gap < 0.0);
    }

    #[test]
    fn condg_on_ball_and_simplex() {
        let ball = FeasibleSet::new_ball(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let y = [3.0, -1.0, 2.0];
        let r = condg(&y, &[0.0, 0.0, 0.0], 1e-12, &ball, 10_000).unwrap();
        let p = ball.project(&y).unwrap();
        assert_eq!(r.status, CondGStatus::GapReached);
        assert!(crate::linalg::dist2(&r.point, &p) <= (2e-12f64).sqrt() + 1e-12);

        let simplex = FeasibleSet::new_simplex(2.0).unwrap();
        let y = [0.4, 1.5, -0.3, 0.9];
        let r = condg(&y, &[2.0, 0.0, 0.0, 0.0], 1e-12, &simplex, 10_000).unwrap();
        let p = simplex.project(&y).unwrap();
        assert!(simplex.contains(&r.point));
        assert!(crate::linalg::dist2(&r.point, &p) <= (2e-12f64).sqrt() + 1e-12);
    }

    #[test]
    fn simplex_projection_sums_to_radius() {
        let p = project_simplex(&[0.2, 0.9, -1.0], 1.0);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.85, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }
}
