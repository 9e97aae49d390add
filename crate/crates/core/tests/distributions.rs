use modereg::distributions::{AnyDist, BetaMeanDist, BetaModeDist, BoundedDistribution, GbpDist};
use modereg::numerics::{integrate, RngStream};
use proptest::prelude::*;

const THETAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const SHAPES: [f64; 5] = [0.5, 2.0, 5.0, 10.0, 80.0];

fn mode_families(theta: f64, m: f64) -> [AnyDist; 2] {
    [
        AnyDist::BetaMode(BetaModeDist::new(theta, m).unwrap()),
        AnyDist::Gbp(GbpDist::new(theta, m).unwrap()),
    ]
}

/// `∫_0^1 h(v) pdf(v) dv`, split at the mode where the GBP density kinks.
fn expect(d: &AnyDist, theta: f64, h: impl Fn(f64) -> f64) -> f64 {
    let f = |v: f64| h(v) * d.density(v);
    integrate(f, 0.0, theta, 1e-13).unwrap() + integrate(f, theta, 1.0, 1e-13).unwrap()
}

#[test]
fn densities_integrate_to_one() {
    for &theta in &THETAS {
        for &m in &SHAPES {
            for d in mode_families(theta, m) {
                let total = expect(&d, theta, |_| 1.0);
                assert!((total - 1.0).abs() <= 1e-8, "{d:?}: {total}");
            }
        }
    }
}

#[test]
fn closed_form_moments_match_quadrature() {
    for &theta in &THETAS {
        for &m in &SHAPES {
            for d in mode_families(theta, m) {
                let mean = expect(&d, theta, |v| v);
                let var = expect(&d, theta, |v| (v - mean) * (v - mean));
                assert!((d.mean() - mean).abs() <= 1e-8 * mean, "{d:?}");
                assert!((d.variance() - var).abs() <= 1e-8 * var, "{d:?}");
            }
        }
    }
}

#[test]
fn density_peaks_at_theta() {
    let grid = 1_000_000usize;
    for &theta in &THETAS {
        for &m in &SHAPES {
            for d in mode_families(theta, m) {
                let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
                for k in 1..grid {
                    let v = k as f64 / grid as f64;
                    let lp = d.log_density(v);
                    if lp > best {
                        best = lp;
                        at = v;
                    }
                }
                assert!((at - theta).abs() <= 1.0 / grid as f64 + 1e-12, "{d:?}: {at}");
                assert_eq!(d.mode().unwrap(), theta);
            }
        }
    }
}

#[test]
fn gbp_mean_lies_toward_the_centre() {
    for &theta in &THETAS {
        for &m in &SHAPES {
            let mean = GbpDist::new(theta, m).unwrap().mean();
            if theta < 0.5 {
                assert!(mean > theta);
            } else if theta > 0.5 {
                assert!(mean < theta);
            } else {
                assert!((mean - 0.5).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn gbp_cdf_matches_quadrature() {
    for &theta in &[0.15, 0.5, 0.8] {
        for &m in &SHAPES {
            let g = GbpDist::new(theta, m).unwrap();
            for &v in &[0.05, 0.1, 0.33, 0.5, 0.72, 0.95] {
                let quad = if v <= theta {
                    integrate(|t| g.density(t), 0.0, v, 1e-13).unwrap()
                } else {
                    theta + integrate(|t| g.density(t), theta, v, 1e-13).unwrap()
                };
                assert!((g.cdf(v).unwrap() - quad).abs() <= 1e-10, "θ={theta} m={m} v={v}");
            }
            assert!((g.cdf(theta).unwrap() - theta).abs() <= 1e-15);
        }
    }
}

fn ks_statistic(d: &AnyDist, mut draws: Vec<f64>) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = d.cdf_unchecked(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn samplers_pass_kolmogorov_smirnov() {
    let critical = 1.628 / (1e4f64).sqrt();
    let dists = [
        AnyDist::Gbp(GbpDist::new(0.2, 10.0).unwrap()),
        AnyDist::Gbp(GbpDist::new(0.75, 0.8).unwrap()),
        AnyDist::BetaMode(BetaModeDist::new(0.3, 80.0).unwrap()),
        AnyDist::BetaMode(BetaModeDist::new(0.6, 2.0).unwrap()),
        AnyDist::BetaMean(BetaMeanDist::new(0.35, 4.0).unwrap()),
        AnyDist::BetaMean(BetaMeanDist::new(0.1, 1.5).unwrap()),
    ];
    for (k, d) in dists.iter().enumerate() {
        let draws = d.sample(&mut RngStream::new(2024, k as u64).generator(), 10_000).unwrap();
        let stat = ks_statistic(d, draws);
        assert!(stat < critical, "{d:?}: D = {stat}");
    }
}

#[test]
fn sampler_moment_examples() {
    let n = 100_000;
    let g = GbpDist::new(0.5, 10.0).unwrap();
    let xs = g.sample(&mut RngStream::new(1, 0).generator(), n).unwrap();
    let mean = xs.iter().sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() <= 3.0 * (g.variance() / n as f64).sqrt());

    let b = BetaModeDist::new(0.5, 2.0).unwrap();
    let xs = b.sample(&mut RngStream::new(1, 1).generator(), n).unwrap();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // Beta(2,2): fourth central moment 3/560
    let se = ((3.0 / 560.0 - 0.05f64 * 0.05) / n as f64).sqrt();
    assert!((var - 0.05).abs() <= 3.0 * se, "{var}");

    let g = GbpDist::new(0.2, 10.0).unwrap();
    let xs = g.sample(&mut RngStream::new(1, 2).generator(), n).unwrap();
    let below = xs.iter().filter(|&&v| v <= 0.2).count() as f64 / n as f64;
    assert!((below - 0.2).abs() <= 0.004, "{below}");
}

fn any_dist() -> impl Strategy<Value = AnyDist> {
    (0.01f64..0.99, 0.1f64..150.0, 0u8..3).prop_map(|(loc, scale, fam)| match fam {
        0 => AnyDist::BetaMode(BetaModeDist::new(loc, scale).unwrap()),
        1 => AnyDist::Gbp(GbpDist::new(loc, scale).unwrap()),
        _ => AnyDist::BetaMean(BetaMeanDist::new(loc, scale).unwrap()),
    })
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(d in any_dist(), p in 0.0f64..=1.0) {
        let q = d.quantile(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!((d.cdf(q).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn cdf_is_monotone(d in any_dist(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.cdf(lo).unwrap() <= d.cdf(hi).unwrap());
    }

    #[test]
    fn gbp_mirror_symmetry(theta in 0.01f64..0.99, m in 0.1f64..100.0, k in 0u32..=1024) {
        // dyadic points keep 1 − v exact
        let v = f64::from(k) / 1024.0;
        let a = GbpDist::new(theta, m).unwrap();
        let b = GbpDist::new(1.0 - theta, m).unwrap();
        let (x, y) = (a.pdf(v).unwrap(), b.pdf(1.0 - v).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn log_pdf_is_log_of_pdf(d in any_dist(), v in 0.001f64..0.999) {
        let (p, lp) = (d.pdf(v).unwrap(), d.log_pdf(v).unwrap());
        if p > 1e-300 {
            prop_assert!((lp - p.ln()).abs() <= 1e-9 * lp.abs().max(1.0));
        }
    }

    #[test]
    fn sampling_is_bit_reproducible(d in any_dist(), seed: u64, stream: u64) {
        let s = RngStream::new(seed, stream);
        let a = d.sample(&mut s.generator(), 20).unwrap();
        let b = d.sample(&mut s.generator(), 20).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|v| *v > 0.0 && *v < 1.0));
    }
}
