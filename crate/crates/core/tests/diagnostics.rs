use modereg::diagnostics::*;
use modereg::distributions::{BetaModeDist, BoundedDistribution, GbpDist};
use modereg::links::{apply, LinkKind};
use modereg::numerics::{sample_normal, std_normal_quantile, RngStream};
use modereg::regression::*;
use modereg::simharness::{generate, ScenarioId};
use modereg::Error;
use proptest::prelude::*;

fn point_fit() -> FitOptions {
    FitOptions {
        covariance: false,
        ..FitOptions::default()
    }
}

#[test]
fn residuals_match_conditional_summary() {
    let sim = generate(ScenarioId::G1, 60, 10.0, RngStream::new(4, 0)).unwrap();
    let f = fit(&ModelSpec::new(Family::GbpMode, LinkKind::Logit), &sim.data, &point_fit()).unwrap();
    let r = abs_std_residuals(&f, &sim.data).unwrap();
    for i in 0..sim.data.n() {
        let s = conditional_summary(&f, sim.data.row(i)).unwrap();
        let oracle = (sim.data.y()[i] - s.mu).abs() / s.sigma2.sqrt();
        assert!((r[i] - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }
}

#[test]
fn residual_is_zero_at_the_mean() {
    let data = Dataset::new(vec![0.5, 0.3, 0.7], vec![vec![]; 3], vec![]).unwrap();
    let mut f = fit(&ModelSpec::new(Family::GbpMode, LinkKind::Logit), &data, &point_fit()).unwrap();
    f.params = Params::new(vec![0.0], 10f64.ln());
    assert_eq!(abs_std_residuals(&f, &data).unwrap()[0], 0.0);
}

#[test]
fn halfnormal_quantile_formula() {
    let q = halfnormal_quantiles(100);
    assert_eq!(q.len(), 100);
    assert_eq!(q[0], std_normal_quantile(100.875 / 200.5).unwrap());
    assert!((q[0] - 0.007_813_74).abs() < 1e-7);
    assert!((q[99] - 2.735_191).abs() < 1e-6);
    assert!(q.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn envelope_shape_and_determinism() {
    let sim = generate(ScenarioId::B1, 60, 80.0, RngStream::new(12, 0)).unwrap();
    let spec = ModelSpec::new(Family::BetaMode, LinkKind::Logit);
    let a = halfnormal_envelope(&spec, &sim.data, DEFAULT_ENVELOPE_SIMULATIONS, RngStream::new(12, 1)).unwrap();
    let b = halfnormal_envelope(&spec, &sim.data, DEFAULT_ENVELOPE_SIMULATIONS, RngStream::new(12, 1)).unwrap();
    assert_eq!(a, b);
    let n = sim.data.n();
    assert_eq!(a.k_simulations, 19);
    for v in [&a.quantiles, &a.residuals_sorted, &a.lower, &a.upper] {
        assert_eq!(v.len(), n);
    }
    assert!(a.lower.iter().zip(&a.upper).all(|(l, u)| l <= u));
    assert!(a.residuals_sorted.windows(2).all(|w| w[0] <= w[1]));
    assert!((0.0..=1.0).contains(&a.proportion_outside));
    let c = halfnormal_envelope(&spec, &sim.data, 5, RngStream::new(13, 1)).unwrap();
    assert_ne!(a.lower, c.lower);
    assert!(halfnormal_envelope(&spec, &sim.data, 0, RngStream::new(12, 1)).is_err());
}

#[test]
fn beta_score_formula_example() {
    let s = beta_score(0.5, 2.0, 0.5).unwrap();
    // 1 + mθ = 2, so ψ(4) − ψ(2) = 1/2 + 1/3
    assert!((s[0] - (0.5f64.ln() + 5.0 / 6.0)).abs() < 1e-12);
    assert!(beta_score(0.5, 2.0, 0.0).is_err());
    assert!(gbp_score(0.5, 2.0, 1.0).is_err());
}

#[test]
fn gbp_score_vanishes_at_the_mean() {
    assert_eq!(gbp_score(0.5, 10.0, 0.5).unwrap()[0], 0.0);
    let d = GbpDist::new(0.2, 4.0).unwrap();
    assert!(gbp_score(0.2, 4.0, d.mean()).unwrap()[0].abs() < 1e-15);
}

#[test]
fn score_vectors_use_the_link() {
    let params = Params::new(vec![0.3, -0.8], 20f64.ln());
    let x = [0.6];
    let theta = apply(LinkKind::Probit, 0.3 - 0.8 * 0.6);
    assert_eq!(
        score_vector_beta(LinkKind::Probit, &params, 0.4, &x).unwrap(),
        beta_score(theta, params.scale(), 0.4).unwrap()
    );
    assert_eq!(
        score_vector_gbp(LinkKind::Probit, &params, 0.4, &x).unwrap(),
        gbp_score(theta, params.scale(), 0.4).unwrap()
    );
}

/// Mean of each score component over `n` draws, with its standard error.
fn score_means(n: usize, draw: impl Fn(&mut modereg::numerics::StreamRng) -> [f64; 2]) -> [(f64, f64); 2] {
    let mut rng = RngStream::new(2024, 7).generator();
    let s: Vec<[f64; 2]> = (0..n).map(|_| draw(&mut rng)).collect();
    let mut out = [(0.0, 0.0); 2];
    for (c, o) in out.iter_mut().enumerate() {
        let mean = s.iter().map(|v| v[c]).sum::<f64>() / n as f64;
        let var = s.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        *o = (mean, (var / n as f64).sqrt());
    }
    out
}

#[test]
fn score_components_have_zero_mean_under_the_model() {
    for (theta, m) in [(0.73, 80.0), (0.3, 10.0), (0.5, 2.0)] {
        let beta = BetaModeDist::new(theta, m).unwrap();
        let gbp = GbpDist::new(theta, m).unwrap();
        let checks = [
            score_means(10_000, |r| beta_score(theta, m, beta.draw(r)).unwrap()),
            score_means(10_000, |r| gbp_score(theta, m, gbp.draw(r)).unwrap()),
        ];
        for comps in checks {
            for (mean, se) in comps {
                assert!(mean.abs() <= 3.0 * se, "theta={theta} m={m}: {mean} vs se {se}");
            }
        }
    }
}

#[test]
fn q_statistic_edge_cases() {
    let centred = [[1.0, 2.0], [-1.0, -2.5], [0.5, 1.0], [-0.5, -0.5]];
    assert_eq!(q_statistic(&centred).unwrap(), 0.0);
    let collinear: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
    assert!(matches!(q_statistic(&collinear), Err(Error::Degenerate(_))));
    assert!(matches!(q_statistic(&[[1.0, 1.0]; 6]), Err(Error::Degenerate(_))));
    assert!(q_statistic(&[[1.0, 0.0], [0.0, 1.0]]).is_err());
}

#[test]
fn q_statistic_null_mean_matches_f_distribution() {
    let n = 100;
    let reps = 10_000;
    let mut rng = RngStream::new(77, 0).generator();
    let qs: Vec<f64> = (0..reps)
        .map(|_| {
            let s: Vec<[f64; 2]> = (0..n)
                .map(|_| [sample_normal(&mut rng, 0.0, 1.0).unwrap(), sample_normal(&mut rng, 0.0, 1.0).unwrap()])
                .collect();
            q_statistic(&s).unwrap()
        })
        .collect();
    let mean = qs.iter().sum::<f64>() / reps as f64;
    let sd = (qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let expected = (n as f64 - 2.0) / (n as f64 - 4.0);
    assert!((mean - expected).abs() <= 3.0 * sd / (reps as f64).sqrt(), "{mean} vs {expected}");
    assert!(qs.iter().all(|q| *q >= 0.0));
}

proptest! {
    #[test]
    fn q_statistic_is_affine_invariant(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 5..40),
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
    ) {
        prop_assume!((a * d - b * c).abs() > 0.1);
        let s: Vec<[f64; 2]> = rows.iter().map(|r| [r.0 + 0.3, r.1 - 0.2]).collect();
        let t: Vec<[f64; 2]> = s.iter().map(|v| [a * v[0] + b * v[1], c * v[0] + d * v[1]]).collect();
        if let (Ok(q1), Ok(q2)) = (q_statistic(&s), q_statistic(&t)) {
            prop_assert!((q1 - q2).abs() <= 1e-8 * (1.0 + q1.abs()), "{q1} vs {q2}");
        }
    }
}

#[test]
fn p_value_counts_strict_exceedances() {
    assert_eq!(bootstrap_p_value(1.0, &[2.0]), 1.0);
    assert_eq!(bootstrap_p_value(1.0, &[1.0, 0.5, 3.0, 4.0]), 0.5);
    assert_eq!(bootstrap_p_value(10.0, &[1.0, 2.0]), 0.0);
}

#[test]
fn bootstrap_test_is_deterministic_with_lattice_p_value() {
    let sim = generate(ScenarioId::G1, 50, 10.0, RngStream::new(31, 0)).unwrap();
    let spec = ModelSpec::new(Family::GbpMode, LinkKind::Logit);
    let a = bootstrap_score_test(&spec, &sim.data, 20, RngStream::new(31, 1)).unwrap();
    let b = bootstrap_score_test(&spec, &sim.data, 20, RngStream::new(31, 1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.q_bootstrap.len(), 20);
    assert!(a.q_observed >= 0.0 && a.q_bootstrap.iter().all(|q| *q >= 0.0));
    let k = (a.p_value * 20.0).round();
    assert_eq!(a.p_value, k / 20.0);
    assert!((0.0..=1.0).contains(&a.f_reference_p_value));
}

#[test]
fn beta_mean_score_test_is_unsupported() {
    let sim = generate(ScenarioId::B1, 40, 80.0, RngStream::new(1, 0)).unwrap();
    let spec = ModelSpec::new(Family::BetaMean, LinkKind::Logit);
    assert!(matches!(
        bootstrap_score_test(&spec, &sim.data, 5, RngStream::new(1, 1)),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn f_reference_survival() {
    assert_eq!(f2_survival(0.0, 98.0), 1.0);
    // F(2, ν) upper 5% point for ν = 98 is about 3.0892
    assert!((f2_survival(3.089_203, 98.0) - 0.05).abs() < 1e-5);
}
