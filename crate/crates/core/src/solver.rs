//! Newton conditional-gradient outer loop.
//!
//! Each iteration takes a full Newton step `y_k = x_k + s_k` with
//! `F'(x_k) s_k = -F(x_k)` and pulls `y_k` back into the feasible set with
//! [`condg`], warm-started at `x_k` and stopped at gap `theta_k ||s_k||^2`.
//! Local convergence theory asks for `theta_k <= lambda^2 / 2` with
//! `lambda < 1`; that bound is the caller's responsibility.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, fd_jacobian, lu_solve, norm2, norm_inf, Matrix};
use crate::oracle::{condg, CondGStatus, FeasibleSet, DEFAULT_MAX_INNER};

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianMap = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;
pub type DomainCheck = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A square system `F(x) = 0` with `F: R^n -> R^n`.
#[derive(Clone)]
pub struct NonlinearSystem {
    dim: usize,
    map: VectorMap,
    jacobian: Option<JacobianMap>,
    domain: Option<DomainCheck>,
}

impl fmt::Debug for NonlinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearSystem")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("domain_check", &self.domain.is_some())
            .finish()
    }
}

impl NonlinearSystem {
    pub fn new<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            map: Arc::new(map),
            jacobian: None,
            domain: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Restricts evaluation to points accepted by `domain`.
    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(domain));
        self
    }

    /// Same system, Jacobian approximated by finite differences.
    pub fn without_jacobian(&self) -> Self {
        Self {
            jacobian: None,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.domain.as_ref().is_none_or(|d| d(x))
    }

    /// Raw map evaluation without any checks.
    pub fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        if !self.in_domain(x) {
            return Err(Error::DomainViolation { coordinate: None });
        }
        let fx = (self.map)(x);
        self.check_len(fx.len())?;
        if !all_finite(&fx) {
            return Err(Error::NonFinite);
        }
        Ok(fx)
    }

    /// Analytic Jacobian when available, forward differences otherwise.
    pub fn jacobian(&self, x: &[f64], fx: Option<&[f64]>) -> Result<Matrix> {
        self.check_len(x.len())?;
        match &self.jacobian {
            Some(j) => {
                let m = j(x);
                if m.rows() != self.dim || m.cols() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: m.rows().max(m.cols()),
                    });
                }
                Ok(m)
            }
            None => fd_jacobian(|p| (self.map)(p), x, fx, |p| self.in_domain(p)),
        }
    }

    /// Finite-difference Jacobian regardless of an analytic one.
    pub fn fd_jacobian(&self, x: &[f64]) -> Result<Matrix> {
        fd_jacobian(|p| (self.map)(p), x, None, |p| self.in_domain(p))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}

/// Per-iteration CondG accuracy budget `theta_k`.
#[derive(Clone)]
pub enum ThetaSchedule {
    Constant(f64),
    /// `initial * ratio^k`.
    Geometric {
        initial: f64,
        ratio: f64,
    },
    /// Explicit values; the last one repeats.
    Table(Vec<f64>),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl ThetaSchedule {
    pub fn theta(&self, k: usize) -> f64 {
        match self {
            Self::Constant(t) => *t,
            Self::Geometric { initial, ratio } => {
                initial * ratio.powi(k.min(i32::MAX as usize) as i32)
            }
            Self::Table(v) => v.get(k).or(v.last()).copied().unwrap_or(0.0),
            Self::Custom(f) => f(k),
        }
    }
}

impl fmt::Debug for ThetaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(t) => write!(f, "Constant({t})"),
            Self::Geometric { initial, ratio } => write!(f, "Geometric({initial} * {ratio}^k)"),
            Self::Table(v) => write!(f, "Table({v:?})"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for ThetaSchedule {
    fn default() -> Self {
        Self::Constant(1e-5)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub theta: ThetaSchedule,
    /// Stop when `||F(x_k)||_inf <= residual_tol`.
    pub residual_tol: f64,
    pub max_outer: usize,
    pub condg_max_inner: usize,
    /// Lower bound on the tolerance handed to CondG.
    pub condg_eps_floor: f64,
    /// Abort the solve when CondG hits its cap instead of continuing.
    pub condg_cap_fatal: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: ThetaSchedule::default(),
            residual_tol: 1e-6,
            max_outer: 300,
            condg_max_inner: DEFAULT_MAX_INNER,
            condg_eps_floor: 0.0,
            condg_cap_fatal: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidConfig("residual_tol must be positive".into()));
        }
        if self.condg_max_inner == 0 {
            return Err(Error::InvalidConfig(
                "condg_max_inner must be at least 1".into(),
            ));
        }
        if !(self.condg_eps_floor >= 0.0) {
            return Err(Error::InvalidConfig("condg_eps_floor must be >= 0".into()));
        }
        match &self.theta {
            ThetaSchedule::Constant(t) if !(*t >= 0.0) => {
                Err(Error::InvalidConfig(format!("theta {t} must be >= 0")))
            }
            ThetaSchedule::Geometric { initial, ratio } if !(*initial >= 0.0 && *ratio >= 0.0) => {
                Err(Error::InvalidConfig(
                    "geometric theta needs nonnegative parameters".into(),
                ))
            }
            ThetaSchedule::Table(v) if v.iter().any(|t| !(*t >= 0.0)) => Err(Error::InvalidConfig(
                "theta table entries must be >= 0".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    SingularJacobian,
    CondGCapExceeded,
    DomainViolation,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "Converged",
            Self::MaxIterations => "MaxIterations",
            Self::SingularJacobian => "SingularJacobian",
            Self::CondGCapExceeded => "CondGCapExceeded",
            Self::DomainViolation => "DomainViolation",
        }
    }

    pub fn is_success(self) -> bool {
        self == Self::Converged
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Converged" => Self::Converged,
            "MaxIterations" => Self::MaxIterations,
            "SingularJacobian" => Self::SingularJacobian,
            "CondGCapExceeded" => Self::CondGCapExceeded,
            "DomainViolation" => Self::DomainViolation,
            other => return Err(Error::Csv(format!("unknown status `{other}`"))),
        })
    }
}

/// State at `x_k` and, unless the loop stopped there, the step taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub step_norm: Option<f64>,
    pub condg_eps: Option<f64>,
    pub condg_iterations: Option<usize>,
    pub condg_gap: Option<f64>,
    pub condg_capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Number of Newton steps taken.
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub final_residual_inf: f64,
    pub trace: Vec<IterationRecord>,
    /// Wall-clock seconds.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn condg_cap_hits(&self) -> usize {
        self.trace.iter().filter(|r| r.condg_capped).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

/// Full Newton step at `x`: `F'(x) s = -F(x)`, `y = x + s`.
pub fn newton_step(system: &NonlinearSystem, x: &[f64]) -> Result<NewtonStep> {
    let fx = system.eval(x)?;
    newton_step_with(system, x, &fx)
}

fn newton_step_with(system: &NonlinearSystem, x: &[f64], fx: &[f64]) -> Result<NewtonStep> {
    let jac = system.jacobian(x, Some(fx))?;
    let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
    let s = lu_solve(&jac, &rhs)?;
    if !all_finite(&s) {
        return Err(Error::NonFinite);
    }
    let y = x.iter().zip(&s).map(|(a, b)| a + b).collect();
    Ok(NewtonStep { s, y })
}

fn failure_status(err: &Error) -> Option<SolveStatus> {
    match err {
        Error::SingularMatrix { .. } => Some(SolveStatus::SingularJacobian),
        Error::DomainViolation { .. } | Error::NonFinite => Some(SolveStatus::DomainViolation),
        _ => None,
    }
}

/// Runs Newton-CondG from the feasible point `x0`.
///
/// Precondition failures (bad config, dimension mismatch, infeasible `x0`)
/// are returned as errors; breakdowns during the iteration end the run with
/// the corresponding [`SolveStatus`].
pub fn solve(
    system: &NonlinearSystem,
    set: &FeasibleSet,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    if x0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: x0.len(),
        });
    }
    let violation = set.violation(x0)?;
    if violation > crate::oracle::FEAS_TOL {
        return Err(Error::InfeasibleWarmStart { violation });
    }

    let start = Instant::now();
    let mut trace = Vec::new();
    let mut x = x0.to_vec();
    let mut k = 0;

    let finish = |status, x: Vec<f64>, residual, k, trace| SolveReport {
        status,
        iterations: k,
        final_point: x,
        final_residual_inf: residual,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    };

    loop {
        let fx = match system.eval(&x) {
            Ok(fx) => fx,
            Err(e) => {
                let status = failure_status(&e).ok_or(e)?;
                return Ok(finish(status, x, f64::NAN, k, trace));
            }
        };
        let residual = norm_inf(&fx);
        let mut record = IterationRecord {
            k,
            x: x.clone(),
            residual_inf: residual,
            step_norm: None,
            condg_eps: None,
            condg_iterations: None,
            condg_gap: None,
            condg_capped: false,
        };

        if residual <= config.residual_tol {
            trace.push(record);
            return Ok(finish(SolveStatus::Converged, x, residual, k, trace));
        }
        if k >= config.max_outer {
            trace.push(record);
            return Ok(finish(SolveStatus::MaxIterations, x, residual, k, trace));
        }

        let step = match newton_step_with(system, &x, &fx) {
            Ok(step) => step,
            Err(e) => {
                let status = failure_status(&e).ok_or(e)?;
                trace.push(record);
                return Ok(finish(status, x, residual, k, trace));
            }
        };
        let step_norm = norm2(&step.s);
        let eps = (config.theta.theta(k) * step_norm * step_norm).max(config.condg_eps_floor);
        let pulled = condg(&step.y, &x, eps, set, config.condg_max_inner)?;

        record.step_norm = Some(step_norm);
        record.condg_eps = Some(eps);
        record.condg_iterations = Some(pulled.inner_iterations);
        record.condg_gap = Some(pulled.final_gap);
        record.condg_capped = pulled.status == CondGStatus::IterationCap;
        let capped = record.condg_capped;
        trace.push(record);

        if capped && config.condg_cap_fatal {
            return Ok(finish(SolveStatus::CondGCapExceeded, x, residual, k, trace));
        }

        x = pulled.point;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn himmelblau() -> NonlinearSystem {
        NonlinearSystem::new(2, |x| {
            vec![x[0] * x[0] + x[1] - 11.0, x[0] + x[1] * x[1] - 7.0]
        })
    }

    #[test]
    fn newton_step_affine_identity() {
        let a = [1.5, -2.0, 0.25];
        let sys = NonlinearSystem::new(3, move |x| {
            x.iter().zip(&a).map(|(xi, ai)| xi - ai).collect()
        })
        .with_jacobian(|_| Matrix::identity(3));
        let x = [4.0, 0.0, -1.0];
        let step = newton_step(&sys, &x).unwrap();
        assert_eq!(step.y, a.to_vec());
        for i in 0..3 {
            assert_abs_diff_eq!(step.s[i], a[i] - x[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn newton_step_himmelblau_origin() {
        let step = newton_step(&himmelblau(), &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(step.s[0], 7.0, epsilon = 1e-6);
        assert_abs_diff_eq!(step.s[1], 11.0, epsilon = 1e-6);
        assert_eq!(step.s, step.y);
    }

    #[test]
    fn newton_step_singular() {
        let sys = NonlinearSystem::new(2, |x| vec![x[0] * x[0], x[1]])
            .with_jacobian(|x| Matrix::from_rows(&[[2.0 * x[0], 0.0], [0.0, 1.0]]).unwrap());
        assert!(matches!(
            newton_step(&sys, &[0.0, 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn solve_root_start_takes_no_steps() {
        let set = FeasibleSet::uniform_box(2, -5.0, 5.0).unwrap();
        let report = solve(&himmelblau(), &set, &[3.0, 2.0], &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.final_point, vec![3.0, 2.0]);
        assert_eq!(report.trace.len(), 1);
    }

    #[test]
    fn solve_affine_interior_root() {
        let sys = NonlinearSystem::new(2, |x| vec![x[0] - 0.5, x[1] - 0.5]);
        let set = FeasibleSet::uniform_box(2, 0.0, 1.0).unwrap();
        let config = SolverConfig {
            theta: ThetaSchedule::Constant(0.0),
            ..SolverConfig::default()
        };
        let report = solve(&sys, &set, &[0.0, 0.0], &config).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert_eq!(report.iterations, 1);
        assert_abs_diff_eq!(report.final_point[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(report.final_point[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn solve_himmelblau_midpoint() {
        let set = FeasibleSet::uniform_box(2, -5.0, 5.0).unwrap();
        let report = solve(&himmelblau(), &set, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert!(report.final_residual_inf <= 1e-6);
        assert!(set.contains(&report.final_point));
        assert!(report.trace.iter().all(|r| set.contains(&r.x)));
        assert_eq!(
            report.trace.last().unwrap().residual_inf,
            report.final_residual_inf
        );
    }

    #[test]
    fn solve_stops_at_outer_cap() {
        let set = FeasibleSet::uniform_box(2, -5.0, 5.0).unwrap();
        let config = SolverConfig {
            max_outer: 1,
            ..SolverConfig::default()
        };
        let report = solve(&himmelblau(), &set, &[0.0, 0.0], &config).unwrap();
        assert_eq!(report.status, SolveStatus::MaxIterations);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn solve_reports_singular_jacobian() {
        // F = (x1^2 - 1, x2 - 0.5) has a singular Jacobian at x1 = 0.
        let sys = NonlinearSystem::new(2, |x| vec![x[0] * x[0] - 1.0, x[1] - 0.5])
            .with_jacobian(|x| Matrix::from_rows(&[[2.0 * x[0], 0.0], [0.0, 1.0]]).unwrap());
        let set = FeasibleSet::uniform_box(2, -2.0, 2.0).unwrap();
        let report = solve(&sys, &set, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::SingularJacobian);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn solve_rejects_bad_inputs() {
        let set = FeasibleSet::uniform_box(2, -5.0, 5.0).unwrap();
        let sys = himmelblau();
        assert!(matches!(
            solve(&sys, &set, &[6.0, 0.0], &SolverConfig::default()),
            Err(Error::InfeasibleWarmStart { .. })
        ));
        assert!(matches!(
            solve(&sys, &set, &[0.0], &SolverConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = SolverConfig {
            residual_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve(&sys, &set, &[0.0, 0.0], &bad).is_err());
        let bad = SolverConfig {
            theta: ThetaSchedule::Constant(-1.0),
            ..SolverConfig::default()
        };
        assert!(solve(&sys, &set, &[0.0, 0.0], &bad).is_err());
    }

    #[test]
    fn fatal_condg_cap() {
        let set = FeasibleSet::uniform_box(2, -5.0, 5.0).unwrap();
        let config = SolverConfig {
            theta: ThetaSchedule::Constant(0.0),
            condg_max_inner: 1,
            condg_cap_fatal: true,
            ..SolverConfig::default()
        };
        let report = solve(&himmelblau(), &set, &[0.0, 0.0], &config).unwrap();
        assert_eq!(report.status, SolveStatus::CondGCapExceeded);
        assert!(report.trace.last().unwrap().condg_capped);
    }

    #[test]
    fn theta_schedules() {
        assert_eq!(ThetaSchedule::Constant(0.1).theta(7), 0.1);
        assert_eq!(
            ThetaSchedule::Geometric {
                initial: 1e-2,
                ratio: 0.25
            }
            .theta(2),
            1e-2 / 16.0
        );
        let t = ThetaSchedule::Table(vec![0.3, 0.2]);
        assert_eq!((t.theta(0), t.theta(1), t.theta(9)), (0.3, 0.2, 0.2));
    }
}
