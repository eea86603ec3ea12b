use rand_distr::{Distribution, Normal};
use toricloc::scaling::{
    collapse_points, extrapolate_critical, intersection, BetaRule, Crossing, CurvePoint, Extrapolation,
    ScalingCurve,
};
use toricloc::{rng_from_seed, seed_derive};

const DELTA_C: f64 = 6.0;

fn noisy_curve(size: usize, slope: f64, sigma: f64, rng: &mut toricloc::Rng) -> ScalingCurve {
    let noise = Normal::new(0.0, sigma).unwrap();
    let points = (3..=10)
        .map(|d| {
            let d = d as f64;
            CurvePoint {
                delta: d,
                winding_sq: (-(d - DELTA_C) * slope).exp() + noise.sample(rng),
                stderr: sigma,
                realizations: 20,
            }
        })
        .collect();
    ScalingCurve::new(size, BetaRule::Linear, 0.25, points).unwrap()
}

#[test]
fn bootstrap_error_has_nominal_coverage() {
    let mut rng = rng_from_seed(21);
    let (mut covered, mut usable) = (0, 0);
    for trial in 0..500u64 {
        let a = noisy_curve(8, 0.3, 0.04, &mut rng);
        let b = noisy_curve(12, 0.6, 0.04, &mut rng);
        let Ok(c) = intersection(&a, &b, 300, seed_derive(5, trial)) else {
            continue;
        };
        usable += 1;
        if (c.delta - DELTA_C).abs() <= c.stderr {
            covered += 1;
        }
    }
    assert!(usable >= 480, "{usable}");
    let rate = covered as f64 / usable as f64;
    assert!((0.60..=0.76).contains(&rate), "coverage {rate}");
}

#[test]
fn linear_extrapolation_recovers_intercept() {
    let crossings: Vec<Crossing> = [(4, 8), (8, 16), (16, 24), (24, 32)]
        .into_iter()
        .map(|(a, b)| {
            let l = 0.5 * (a + b) as f64;
            Crossing {
                sizes: (a, b),
                delta: 5.0 + 3.0 / l,
                stderr: 0.1,
                failed_resamples: 0,
            }
        })
        .collect();
    let lin = extrapolate_critical(0.125, &crossings, Extrapolation::Linear, false).unwrap();
    assert!((lin.delta_c - 5.0).abs() < 1e-10);
    assert!(lin.chi2_dof < 1e-20);
    let cst = extrapolate_critical(0.125, &crossings, Extrapolation::Constant, false).unwrap();
    let mean = crossings.iter().map(|c| c.delta).sum::<f64>() / 4.0;
    assert!((cst.delta_c - mean).abs() < 1e-12);
    assert!((cst.stderr - 0.05).abs() < 1e-12);
    let dropped = extrapolate_critical(0.125, &crossings, Extrapolation::Constant, true).unwrap();
    assert_eq!(dropped.dropped_sizes, vec![4]);
    assert_eq!(dropped.intersections.len(), 3);
}

#[test]
fn collapse_is_consistent_across_beta_rules() {
    let nu = 1.0;
    let scaling_fn = |x: f64| 1.0 / (1.0 + x.exp());
    for rule in [BetaRule::Linear, BetaRule::Quadratic] {
        let curves: Vec<ScalingCurve> = [8usize, 16, 32]
            .into_iter()
            .map(|l| {
                let lf = l as f64;
                let beta = rule.beta(l);
                let points = (0..12)
                    .map(|k| {
                        let d = 2.0 + k as f64;
                        CurvePoint {
                            delta: d,
                            winding_sq: 2.0 * beta * scaling_fn((d - DELTA_C) * lf) / lf,
                            stderr: 1e-3,
                            realizations: 4,
                        }
                    })
                    .collect();
                ScalingCurve::new(l, rule, 0.5, points).unwrap()
            })
            .collect();
        for c in &curves {
            for (x, y, _) in collapse_points(c, DELTA_C, nu) {
                assert!((y - scaling_fn(x)).abs() < 1e-12, "{rule:?}");
            }
        }
    }
    assert_eq!(BetaRule::Linear.beta(12), 12.0);
    assert_eq!(BetaRule::Quadratic.beta(12), 9.0);
}
