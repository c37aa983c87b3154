//! Scalar majorant functions and the convergence radii derived from them.
//!
//! A majorant `f: [0, R) -> R` satisfies `f(0) = 0`, `f'(0) = -1` and has a
//! strictly increasing derivative. From it we get
//!
//! * `nu  = sup { t in [0, R) : f'(t) < 0 }`,
//! * the scalar Newton map `n_f(t) = t - f(t) / f'(t)` on `[0, nu)`,
//! * `rho(lambda) = sup { d in (0, nu) : (1 + lambda) |n_f(t)| / t + lambda < 1 on (0, d) }`,
//! * the ball radius `r = min(rho, kappa)`, where `kappa` describes how far
//!   the evaluation domain extends around the root and is supplied by the caller,
//! * the majorizing sequence `t_{k+1} = (1 + sqrt(2 theta_k)) |n_f(t_k)| + sqrt(2 theta_k) t_k`.
//!
//! The Hölder and Smale families have closed forms for `nu` and `rho`. Custom
//! models fall back to bisection, which assumes `t -> |n_f(t)| / t` is
//! increasing; that is checked on a finite grid only.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid size for the monotonicity spot checks.
pub const CHECK_GRID: usize = 1000;

const BISECT_RTOL: f64 = 1e-12;

#[derive(Clone)]
pub struct CustomMajorant {
    f: ScalarMap,
    f_prime: ScalarMap,
    bound: f64,
}

impl CustomMajorant {
    /// Builds a custom majorant on `[0, bound)`; `bound` may be `+inf`.
    ///
    /// `f(0) = 0` and `f'(0) = -1` are checked to `1e-12`, and `f'` is
    /// spot-checked for strict increase on a grid of the domain (on `[0, 10]`
    /// when the domain is unbounded).
    pub fn new<F, G>(f: F, f_prime: G, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(bound > 0.0) {
            return Err(Error::InvalidModel(format!(
                "domain bound {bound} must be positive"
            )));
        }
        if f(0.0).abs() > 1e-12 {
            return Err(Error::InvalidModel("f(0) must be 0".into()));
        }
        if (f_prime(0.0) + 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel("f'(0) must be -1".into()));
        }
        let upper = if bound.is_finite() { bound } else { 10.0 };
        let mut prev = f_prime(0.0);
        for i in 1..CHECK_GRID {
            let t = upper * i as f64 / CHECK_GRID as f64;
            let d = f_prime(t);
            if d.is_finite() && d <= prev {
                return Err(Error::InvalidModel(format!(
                    "f' is not strictly increasing near t = {t}"
                )));
            }
            prev = d;
        }
        Ok(Self {
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            bound,
        })
    }
}

#[derive(Clone)]
pub enum MajorantModel {
    /// `f(t) = K t^(p+1) / (p+1) - t`, for Jacobians with a Hölder-type
    /// condition of order `p` around the root.
    Holder {
        k: f64,
        p: f64,
    },
    /// `f(t) = t / (1 - gamma t) - 2t` on `[0, 1/gamma)`, for analytic maps
    /// with Smale constant `gamma`.
    Smale {
        gamma: f64,
    },
    Custom(CustomMajorant),
}

impl fmt::Debug for MajorantModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Holder { k, p } => write!(f, "Holder {{ k: {k}, p: {p} }}"),
            Self::Smale { gamma } => write!(f, "Smale {{ gamma: {gamma} }}"),
            Self::Custom(c) => write!(f, "Custom {{ bound: {} }}", c.bound),
        }
    }
}

impl MajorantModel {
    pub fn holder(k: f64, p: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidModel(format!("K = {k} must be positive")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidModel(format!("p = {p} must lie in (0, 1]")));
        }
        Ok(Self::Holder { k, p })
    }

    pub fn smale(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gamma = {gamma} must be positive"
            )));
        }
        Ok(Self::Smale { gamma })
    }

    pub fn custom<F, G>(f: F, f_prime: G, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CustomMajorant::new(f, f_prime, bound).map(Self::Custom)
    }

    /// Right end `R` of the domain `[0, R)`.
    pub fn domain_bound(&self) -> f64 {
        match self {
            Self::Holder { .. } => f64::INFINITY,
            Self::Smale { gamma } => 1.0 / gamma,
            Self::Custom(c) => c.bound,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            Self::Holder { k, p } => k * t.powf(p + 1.0) / (p + 1.0) - t,
            Self::Smale { gamma } => t / (1.0 - gamma * t) - 2.0 * t,
            Self::Custom(c) => (c.f)(t),
        }
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        match self {
            Self::Holder { k, p } => k * t.powf(*p) - 1.0,
            Self::Smale { gamma } => {
                let d = 1.0 - gamma * t;
                1.0 / (d * d) - 2.0
            }
            Self::Custom(c) => (c.f_prime)(t),
        }
    }

    /// `nu = sup { t in [0, R) : f'(t) < 0 }`.
    ///
    /// A custom model whose derivative stays negative on a bounded domain
    /// gets `nu = R`; on an unbounded domain that is
    /// [`Error::NoSignChange`].
    pub fn nu(&self) -> Result<f64> {
        match self {
            Self::Holder { k, p } => Ok((1.0 / k).powf(1.0 / p)),
            Self::Smale { gamma } => Ok((2f64.sqrt() - 1.0) / (2f64.sqrt() * gamma)),
            Self::Custom(c) => custom_nu(c),
        }
    }

    /// Scalar Newton map `n_f(t) = t - f(t) / f'(t)` on `[0, nu)`.
    pub fn newton_map(&self, t: f64) -> Result<f64> {
        let nu = self.nu()?;
        if !(t >= 0.0 && t < nu) {
            return Err(Error::OutOfDomain { t, nu });
        }
        Ok(self.newton_map_unchecked(t))
    }

    fn newton_map_unchecked(&self, t: f64) -> f64 {
        match self {
            // Closed form avoids cancellation in t - f/f' near t = 0.
            Self::Holder { k, p } => {
                let kt = k * t.powf(*p);
                -(p * kt * t) / ((p + 1.0) * (1.0 - kt))
            }
            Self::Smale { gamma } => {
                let d = 1.0 - gamma * t;
                -(gamma * t * t) / (2.0 * d * d - 1.0)
            }
            Self::Custom(_) => t - self.f(t) / self.f_prime(t),
        }
    }

    /// `(1 + lambda) |n_f(t)| / t + lambda - 1`, negative exactly on `(0, rho)`
    /// for models whose ratio `|n_f(t)|/t` is increasing.
    fn rho_gap(&self, lambda: f64, t: f64) -> f64 {
        let v = (1.0 + lambda) * self.newton_map_unchecked(t).abs() / t + lambda - 1.0;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Radius `rho(lambda)` inside which one inexact Newton step contracts.
    ///
    /// Custom models that violate monotonicity on the check grid return
    /// [`Error::H3Violated`] carrying the first crossing.
    pub fn rho(&self, lambda: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidModel(format!(
                "lambda = {lambda} must lie in [0, 1)"
            )));
        }
        match self {
            Self::Holder { k, p } => {
                Ok(((1.0 - lambda) * (p + 1.0) / (k * (2.0 * p + 1.0 - lambda))).powf(1.0 / p))
            }
            Self::Smale { gamma } => {
                let a = 5.0 - 3.0 * lambda;
                let b = 1.0 - lambda;
                Ok((a - (a * a - 8.0 * b * b).sqrt()) / (4.0 * b * gamma))
            }
            Self::Custom(_) => self.rho_by_bisection(lambda),
        }
    }

    /// Bisection route to `rho`, available for every model. Used directly
    /// for custom majorants and as a cross-check of the closed forms.
    pub fn rho_by_bisection(&self, lambda: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidModel(format!(
                "lambda = {lambda} must lie in [0, 1)"
            )));
        }
        let nu = self.nu()?;
        let grid: Vec<f64> = (1..CHECK_GRID)
            .map(|i| nu * i as f64 / CHECK_GRID as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.rho_gap(lambda, t)).collect();
        let monotone = values
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));

        let (mut lo, mut hi) = match values.iter().position(|&g| g >= 0.0) {
            Some(0) => (0.0, grid[0]),
            Some(i) => (grid[i - 1], grid[i]),
            // g blows up as t -> nu, so the crossing lies past the last grid point.
            None => (grid[grid.len() - 1], nu),
        };
        while hi - lo > BISECT_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.rho_gap(lambda, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        if monotone {
            Ok(rho)
        } else {
            Err(Error::H3Violated { rho })
        }
    }

    /// Radii for accuracy level `lambda` and domain radius `kappa`.
    pub fn radius(&self, lambda: f64, kappa: f64) -> Result<RadiusBundle> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidModel(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        let nu = self.nu()?;
        let rho = self.rho(lambda)?;
        Ok(RadiusBundle {
            nu,
            rho,
            r: rho.min(kappa),
            lambda,
            kappa,
        })
    }

    /// Majorizing sequence `[t_0, t_1, ...]`, one step per entry of `thetas`.
    ///
    /// Requires `sqrt(2 theta_k) < 1` for all `k` and `0 < t0 < rho(lambda)`
    /// with `lambda = max_k sqrt(2 theta_k)`. The sequence is cut short if a
    /// term underflows to zero.
    pub fn majorant_sequence(&self, t0: f64, thetas: &[f64]) -> Result<Vec<f64>> {
        let mut lambda = 0.0f64;
        for &theta in thetas {
            if !(theta >= 0.0) {
                return Err(Error::InvalidModel(format!("theta = {theta} must be >= 0")));
            }
            let l = (2.0 * theta).sqrt();
            if l >= 1.0 {
                return Err(Error::LambdaTooLarge { lambda: l });
            }
            lambda = lambda.max(l);
        }
        let rho = self.rho(lambda)?;
        if !(t0 > 0.0 && t0 < rho) {
            return Err(Error::T0OutOfRange { t0, rho });
        }
        let mut seq = Vec::with_capacity(thetas.len() + 1);
        seq.push(t0);
        let mut t = t0;
        for &theta in thetas {
            let l = (2.0 * theta).sqrt();
            t = (1.0 + l) * self.newton_map_unchecked(t).abs() + l * t;
            if !(t > 0.0) {
                break;
            }
            seq.push(t);
        }
        Ok(seq)
    }

    /// Checks that `t -> |n_f(t)| / t^(exponent+1)` is strictly increasing on
    /// a `CHECK_GRID`-point grid of `(0, nu)`.
    pub fn check_h3(&self, exponent: f64) -> Result<bool> {
        let nu = self.nu()?;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..CHECK_GRID {
            let t = nu * i as f64 / CHECK_GRID as f64;
            let v = self.newton_map_unchecked(t).abs() / t.powf(exponent + 1.0);
            if !(v > prev) {
                return Ok(false);
            }
            prev = v;
        }
        Ok(true)
    }
}

fn custom_nu(c: &CustomMajorant) -> Result<f64> {
    let fp = |t: f64| (c.f_prime)(t);
    // Non-finite derivative values count as "not negative".
    let negative = |t: f64| fp(t) < 0.0;

    let mut hi = if c.bound.is_finite() {
        let near = c.bound * (1.0 - f64::EPSILON);
        if negative(near) {
            return Ok(c.bound);
        }
        near
    } else {
        let mut probe = 1.0;
        while negative(probe) {
            probe *= 2.0;
            if probe > 1e300 {
                return Err(Error::NoSignChange);
            }
        }
        probe
    };
    let mut lo = 0.0;
    while hi - lo > BISECT_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if negative(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusBundle {
    pub nu: f64,
    pub rho: f64,
    pub r: f64,
    pub lambda: f64,
    pub kappa: f64,
}
