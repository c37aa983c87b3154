//! Catalog of box-constrained benchmark systems.
//!
//! Formulas and bounds are transcribed from the standard collections each
//! entry cites. Where a collection gives no box, the default is documented on
//! the constructor. Ids follow the usual `Pb<k>` numbering of the benchmark
//! table; slots 2, 3, 6, 7, 21 and 25 are not shipped.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::oracle::FeasibleSet;
use crate::solver::NonlinearSystem;

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub id: String,
    pub name: String,
    pub n: usize,
    pub system: NonlinearSystem,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub known_root: Option<Vec<f64>>,
    pub source: &'static str,
    /// `(requested, used)` pairs for the initial-point rule.
    pub gamma_overrides: Vec<(f64, f64)>,
}

impl ProblemSpec {
    pub fn feasible_set(&self) -> FeasibleSet {
        FeasibleSet::Box {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// The `gamma` actually used for a requested one.
    pub fn effective_gamma(&self, gamma: f64) -> f64 {
        self.gamma_overrides
            .iter()
            .find(|(requested, _)| *requested == gamma)
            .map_or(gamma, |&(_, used)| used)
    }

    /// `l + 0.25 gamma (u - l)`, inside the box for `0 <= gamma <= 4`.
    pub fn initial_point(&self, gamma: f64) -> Result<Vec<f64>> {
        initial_point(&self.lower, &self.upper, gamma)
    }
}

pub fn initial_point(lower: &[f64], upper: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..=4.0).contains(&gamma) {
        return Err(Error::OutOfBox { gamma });
    }
    Ok(lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| (l + 0.25 * gamma * (u - l)).clamp(l, u))
        .collect())
}

/// All shipped problems, in catalog order.
pub fn registry() -> &'static [ProblemSpec] {
    static REGISTRY: OnceLock<Vec<ProblemSpec>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

pub fn find(id: &str) -> Result<&'static ProblemSpec> {
    registry()
        .iter()
        .find(|p| p.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownProblem(id.to_string()))
}

/// Series-of-CSTRs parameters, in catalog order `Pb8..Pb20`.
pub const CSTR_RECYCLE: [f64; 13] = [
    0.935, 0.940, 0.945, 0.950, 0.955, 0.960, 0.965, 0.970, 0.975, 0.980, 0.985, 0.990, 0.995,
];

fn build_registry() -> Vec<ProblemSpec> {
    let mut out = vec![himmelblau(), ferraris_tronconi(), brown_almost_linear(5)];
    out.extend(
        CSTR_RECYCLE
            .iter()
            .enumerate()
            .map(|(i, &r)| cstr(8 + i, r)),
    );
    out.push(mildly_nonlinear_bvp(451));
    out.push(h_equation("Pb23", 0.99, 100));
    out.push(h_equation("Pb24", 0.9999, 100));
    out
}

/// `x1^2 + x2 - 11 = 0`, `x1 + x2^2 - 7 = 0` on `[-5, 5]^2`.
pub fn himmelblau() -> ProblemSpec {
    let system = NonlinearSystem::new(2, |x| {
        vec![x[0] * x[0] + x[1] - 11.0, x[0] + x[1] * x[1] - 7.0]
    })
    .with_jacobian(|x| Matrix::from_rows(&[[2.0 * x[0], 1.0], [1.0, 2.0 * x[1]]]).unwrap());
    ProblemSpec {
        id: "Pb1".into(),
        name: "Himmelblau function".into(),
        n: 2,
        system,
        lower: vec![-5.0; 2],
        upper: vec![5.0; 2],
        known_root: Some(vec![3.0, 2.0]),
        source: "Floudas et al. 1999, problem 14.1.1",
        gamma_overrides: vec![],
    }
}

/// Two-equation model on `[0.25, 1] x [1.5, 2 pi]` with root `(1/2, pi)`.
pub fn ferraris_tronconi() -> ProblemSpec {
    let a = 1.0 - 0.25 / PI;
    let system = NonlinearSystem::new(2, move |x| {
        vec![
            0.5 * (x[0] * x[1]).sin() - 0.25 * x[1] / PI - 0.5 * x[0],
            a * ((2.0 * x[0]).exp() - E) + E * x[1] / PI - 2.0 * E * x[0],
        ]
    })
    .with_jacobian(move |x| {
        let c = (x[0] * x[1]).cos();
        Matrix::from_rows(&[
            [0.5 * x[1] * c - 0.5, 0.5 * x[0] * c - 0.25 / PI],
            [2.0 * a * (2.0 * x[0]).exp() - 2.0 * E, E / PI],
        ])
        .unwrap()
    });
    ProblemSpec {
        id: "Pb4".into(),
        name: "Ferraris-Tronconi system".into(),
        n: 2,
        system,
        lower: vec![0.25, 1.5],
        upper: vec![1.0, 2.0 * PI],
        known_root: Some(vec![0.5, PI]),
        source: "Floudas et al. 1999, problem 14.1.4",
        gamma_overrides: vec![],
    }
}

/// Brown's almost-linear system on `[-2, 2]^n`:
/// `F_i = x_i + sum(x) - (n + 1)` for `i < n`, `F_n = prod(x) - 1`.
///
/// `gamma = 3` starts exactly at the root `(1, ..., 1)` and is replaced by
/// 2.5 in benchmark runs that honor overrides.
pub fn brown_almost_linear(n: usize) -> ProblemSpec {
    let system = NonlinearSystem::new(n, move |x| {
        let sum: f64 = x.iter().sum();
        let mut f: Vec<f64> = x[..n - 1]
            .iter()
            .map(|xi| xi + sum - (n as f64 + 1.0))
            .collect();
        f.push(x.iter().product::<f64>() - 1.0);
        f
    })
    .with_jacobian(move |x| {
        let mut j = Matrix::zeros(n, n);
        for i in 0..n - 1 {
            for k in 0..n {
                j[(i, k)] = if i == k { 2.0 } else { 1.0 };
            }
        }
        for k in 0..n {
            j[(n - 1, k)] = x
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, v)| v)
                .product();
        }
        j
    });
    ProblemSpec {
        id: "Pb5".into(),
        name: "Brown's almost linear system".into(),
        n,
        system,
        lower: vec![-2.0; n],
        upper: vec![2.0; n],
        known_root: Some(vec![1.0; n]),
        source: "Floudas et al. 1999, problem 14.1.5",
        gamma_overrides: vec![(3.0, 2.5)],
    }
}

/// Two continuous stirred-tank reactors in series with recycle ratio `r`
/// (`gamma = 1000`, `D = 22`, `beta1 = beta2 = 2`) on `[0, 1]^2`.
pub fn cstr(index: usize, r: f64) -> ProblemSpec {
    const ACTIVATION: f64 = 1000.0;
    const DAMKOHLER: f64 = 22.0;
    const BETA1: f64 = 2.0;
    const BETA2: f64 = 2.0;
    let arrhenius = |x: f64| (10.0 * x / (1.0 + 10.0 * x / ACTIVATION)).exp();
    let arrhenius_prime = move |x: f64| {
        let d = 1.0 + 10.0 * x / ACTIVATION;
        arrhenius(x) * 10.0 / (d * d)
    };
    let q = 1.0 - r;
    let feed1 = DAMKOHLER / (10.0 * (1.0 + BETA1));
    let feed2 = DAMKOHLER / 10.0;

    let system = NonlinearSystem::new(2, move |x| {
        vec![
            q * (feed1 - x[0]) * arrhenius(x[0]) - x[0],
            x[0] - (1.0 + BETA2) * x[1]
                + q * (feed2 - BETA1 * x[0] - (1.0 + BETA2) * x[1]) * arrhenius(x[1]),
        ]
    })
    .with_jacobian(move |x| {
        let (e1, e2) = (arrhenius(x[0]), arrhenius(x[1]));
        let c2 = feed2 - BETA1 * x[0] - (1.0 + BETA2) * x[1];
        Matrix::from_rows(&[
            [
                q * (-e1 + (feed1 - x[0]) * arrhenius_prime(x[0])) - 1.0,
                0.0,
            ],
            [
                1.0 - q * BETA1 * e2,
                -(1.0 + BETA2) + q * (-(1.0 + BETA2) * e2 + c2 * arrhenius_prime(x[1])),
            ],
        ])
        .unwrap()
    });
    ProblemSpec {
        id: format!("Pb{index}"),
        name: format!("Series of CSTRs, R = {r:.3}"),
        n: 2,
        system,
        lower: vec![0.0; 2],
        upper: vec![1.0; 2],
        known_root: None,
        source: "Floudas et al. 1999, problem 14.1.8",
        gamma_overrides: vec![],
    }
}

/// Central-difference discretization of `u'' = (u + t + 1)^3 / 2` on
/// `[0, 1]` with `u(0) = u(1) = 0` and `n` interior nodes:
/// `F_i = 2 x_i - x_{i-1} - x_{i+1} + h^2 (x_i + t_i + 1)^3 / 2`.
///
/// No box is given by the source; `[-1, 1]^n` contains the discrete solution
/// (which lies in `(-0.2, 0)`) with margin.
pub fn mildly_nonlinear_bvp(n: usize) -> ProblemSpec {
    let h = 1.0 / (n as f64 + 1.0);
    let system = NonlinearSystem::new(n, move |x| {
        (0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                let t = (i as f64 + 1.0) * h;
                2.0 * x[i] - left - right + 0.5 * h * h * (x[i] + t + 1.0).powi(3)
            })
            .collect()
    })
    .with_jacobian(move |x| {
        let mut j = Matrix::zeros(n, n);
        for i in 0..n {
            let t = (i as f64 + 1.0) * h;
            j[(i, i)] = 2.0 + 1.5 * h * h * (x[i] + t + 1.0).powi(2);
            if i > 0 {
                j[(i, i - 1)] = -1.0;
            }
            if i + 1 < n {
                j[(i, i + 1)] = -1.0;
            }
        }
        j
    });
    ProblemSpec {
        id: "Pb22".into(),
        name: "Mildly nonlinear BVP".into(),
        n,
        system,
        lower: vec![-1.0; n],
        upper: vec![1.0; n],
        known_root: None,
        source: "Moré, Garbow, Hillstrom 1981, discrete boundary value problem",
        gamma_overrides: vec![(2.0, 2.5)],
    }
}

/// Box for the H-equation problems. The solution of interest is positive and,
/// for `c < 1`, bounded by a small multiple of its value at `mu = 1`.
pub const H_EQUATION_LOWER: f64 = 0.0;
pub const H_EQUATION_UPPER: f64 = 5.0;

/// Chandrasekhar H-equation,
/// `F_i = x_i - (1 - c/(2n) sum_j mu_i x_j / (mu_i + mu_j))^-1` with
/// `mu_i = (i - 1/2) / n`, on `[0, H_EQUATION_UPPER]^n`.
pub fn h_equation(id: &str, c: f64, n: usize) -> ProblemSpec {
    let mu: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            weights[i * n + j] = c / (2.0 * n as f64) * mu[i] / (mu[i] + mu[j]);
        }
    }
    let weights = std::sync::Arc::new(weights);
    let w_map = weights.clone();
    let denominators = move |w: &[f64], x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - crate::linalg::dot(&w[i * n..(i + 1) * n], x))
            .collect()
    };
    let system = NonlinearSystem::new(n, move |x| {
        denominators(&w_map, x)
            .iter()
            .zip(x)
            .map(|(d, xi)| xi - 1.0 / d)
            .collect()
    })
    .with_jacobian(move |x| {
        let d = denominators(&weights, x);
        let mut j = Matrix::zeros(n, n);
        for i in 0..n {
            let inv2 = 1.0 / (d[i] * d[i]);
            for k in 0..n {
                j[(i, k)] = -weights[i * n + k] * inv2;
            }
            j[(i, i)] += 1.0;
        }
        j
    });
    ProblemSpec {
        id: id.into(),
        name: format!("H-equation, c = {c}"),
        n,
        system,
        lower: vec![H_EQUATION_LOWER; n],
        upper: vec![H_EQUATION_UPPER; n],
        known_root: None,
        source: "Moré 1990, A collection of nonlinear model problems, problem 4",
        gamma_overrides: vec![],
    }
}
