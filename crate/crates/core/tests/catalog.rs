use newton_condg::linalg::norm_inf;
use newton_condg::problems::{self, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box_point(p: &ProblemSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    p.lower
        .iter()
        .zip(&p.upper)
        .map(|(l, u)| rng.gen_range(*l..=*u))
        .collect()
}

#[test]
fn every_map_is_finite_on_its_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in problems::registry() {
        for _ in 0..10_000 {
            let x = random_box_point(p, &mut rng);
            let fx = p.system.eval(&x);
            assert!(fx.is_ok(), "{} not finite at {x:?}: {fx:?}", p.id);
        }
        // Corners are where exponentials and reciprocals peak.
        for x in [&p.lower, &p.upper] {
            assert!(p.system.eval(x).is_ok(), "{} fails at a box corner", p.id);
        }
    }
}

/// Forward differences err by about `h |F''| / 2 + 2 eps |F| / h` with
/// `h = sqrt(eps) max(1, |x_j|)`, where `|F|` stands for the size of the terms
/// that cancel inside `F_i`. That size is bounded by `|F_i| + ||J_i||_1 ||x||_inf`;
/// the scale of entry `(i, j)` combines it with the curvature along `e_j`.
#[test]
fn finite_differences_match_analytic_jacobians() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let tol = 10.0 * f64::EPSILON.sqrt();
    for p in problems::registry() {
        assert!(
            p.system.has_analytic_jacobian(),
            "{} ships no Jacobian",
            p.id
        );
        let set = p.feasible_set();
        for _ in 0..5 {
            let x = random_box_point(p, &mut rng);
            let exact = p.system.jacobian(&x, None).unwrap();
            let approx = p.system.fd_jacobian(&x).unwrap();
            let fx = p.system.eval(&x).unwrap();
            let xmax = norm_inf(&x);
            for j in 0..p.n {
                // Central second difference, kept inside the box.
                let step = 1e-4 * 1.0f64.max(x[j].abs());
                let mut lo = x.clone();
                let mut hi = x.clone();
                hi[j] = (x[j] + step).min(p.upper[j]);
                lo[j] = hi[j] - 2.0 * step;
                if lo[j] < p.lower[j] {
                    lo[j] = p.lower[j];
                    hi[j] = lo[j] + 2.0 * step;
                }
                let mut mid = lo.clone();
                mid[j] = lo[j] + step;
                assert!(set.contains(&lo) && set.contains(&hi));
                let (flo, fmid, fhi) = (
                    p.system.eval(&lo).unwrap(),
                    p.system.eval(&mid).unwrap(),
                    p.system.eval(&hi).unwrap(),
                );
                for i in 0..p.n {
                    let curvature = ((fhi[i] - 2.0 * fmid[i] + flo[i]) / (step * step)).abs();
                    let scale = 1.0f64
                        .max(fx[i].abs())
                        .max(exact.row(i).iter().map(|v| v.abs()).sum::<f64>() * xmax)
                        .max(curvature * 1.0f64.max(x[j].abs()));
                    let (a, b) = (exact[(i, j)], approx[(i, j)]);
                    assert!(
                        (a - b).abs() <= tol * scale,
                        "{} J[{i}][{j}] analytic {a} vs fd {b} (scale {scale}) at {x:?}",
                        p.id
                    );
                    let central = (fhi[i] - flo[i]) / (2.0 * step);
                    let slope_scale = 1.0f64.max(a.abs()).max(curvature);
                    assert!(
                        (a - central).abs() <= 1e-6 * slope_scale.max(1.0) + curvature * step,
                        "{} J[{i}][{j}] analytic {a} vs central {central}",
                        p.id
                    );
                }
            }
        }
    }
}

#[test]
fn known_roots_are_feasible_zeros() {
    let mut with_root = 0;
    for p in problems::registry() {
        let Some(root) = &p.known_root else { continue };
        with_root += 1;
        assert!(
            p.feasible_set().contains(root),
            "{} root outside its box",
            p.id
        );
        let r = norm_inf(&p.system.eval(root).unwrap());
        assert!(r <= 1e-8, "{} residual {r} at its known root", p.id);
    }
    assert!(with_root >= 3);
}

#[test]
fn initial_points_are_feasible_for_the_protocol_gammas() {
    for p in problems::registry() {
        let set = p.feasible_set();
        for gamma in [1.0, 2.0, 2.5, 3.0] {
            let x0 = p.initial_point(gamma).unwrap();
            assert!(set.contains(&x0), "{} gamma {gamma}", p.id);
        }
    }
}
