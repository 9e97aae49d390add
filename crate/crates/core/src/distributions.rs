//! Distributions on the unit interval.
//!
//! * [`BetaModeDist`]: beta with shapes `1 + mθ` and `1 + m(1−θ)`, so its
//!   unique mode is exactly `θ`.
//! * [`GbpDist`]: the generalized biparabolic distribution with mode `θ`
//!   and shape `m`, density `c·dᵐ(2 − dᵐ)` where `d` is the distance ratio
//!   to the nearer support endpoint and `c = (2m+1)(m+1)/(3m+1)`.
//! * [`BetaMeanDist`]: beta with shapes `μφ` and `(1−μ)φ`.
//!
//! Endpoint conventions: `pdf` at `v ∈ {0, 1}` returns the limiting value
//! and `log_pdf` its logarithm (−∞ wherever the limit is 0).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::rng::{sample_gamma, sample_uniform};
use crate::numerics::special::{inc_beta, ln_beta};

/// Common interface of the three families.
pub trait BoundedDistribution {
    /// Density at `v ∈ [0,1]`.
    fn pdf(&self, v: f64) -> Result<f64> {
        check_support(v)?;
        Ok(self.density(v))
    }

    /// `ln pdf(v)` for `v ∈ [0,1]`.
    fn log_pdf(&self, v: f64) -> Result<f64> {
        check_support(v)?;
        Ok(self.log_density(v))
    }

    fn cdf(&self, v: f64) -> Result<f64> {
        check_support(v)?;
        Ok(self.cdf_unchecked(v))
    }

    /// Generalized inverse `inf{v : F(v) ≥ p}`.
    fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("quantile requires p in [0,1], got {p}"));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    fn mode(&self) -> Result<f64>;

    /// Density without the support check; `v` must lie in `[0,1]`.
    fn density(&self, v: f64) -> f64;
    fn log_density(&self, v: f64) -> f64;
    fn cdf_unchecked(&self, v: f64) -> f64;

    fn quantile_unchecked(&self, p: f64) -> f64 {
        bisect_quantile(|v| self.cdf_unchecked(v), p, 0.0, 1.0)
    }

    /// One draw strictly inside `(0,1)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        if count == 0 {
            return domain("sample count must be at least 1");
        }
        Ok((0..count).map(|_| self.draw(rng)).collect())
    }
}

fn check_support(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        domain(format!("density argument must lie in [0,1], got {v}"))
    }
}

fn check_location(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0,1), got {value}"))
    }
}

fn check_scale(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite and > 0, got {value}"))
    }
}

/// Bisection for the generalized inverse of a nondecreasing CDF on `[lo, hi]`.
fn bisect_quantile(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Plain beta distribution with shapes `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Beta {
    a: f64,
    b: f64,
    ln_norm: f64,
}

impl Beta {
    fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            ln_norm: -ln_beta(a, b),
        }
    }

    fn edge(shape: f64, other: f64) -> f64 {
        if shape > 1.0 {
            0.0
        } else if shape < 1.0 {
            f64::INFINITY
        } else {
            // Γ(1+b)/Γ(b) = b
            other
        }
    }

    fn density(&self, v: f64) -> f64 {
        if v <= 0.0 {
            Self::edge(self.a, self.b)
        } else if v >= 1.0 {
            Self::edge(self.b, self.a)
        } else {
            self.log_density(v).exp()
        }
    }

    fn log_density(&self, v: f64) -> f64 {
        if v <= 0.0 || v >= 1.0 {
            return self.density(v).ln();
        }
        self.ln_norm + (self.a - 1.0) * v.ln() + (self.b - 1.0) * (-v).ln_1p()
    }

    fn cdf(&self, v: f64) -> f64 {
        inc_beta(self.a, self.b, v)
    }

    fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = sample_gamma(rng, self.a, 1.0).expect("validated shape");
            let y = sample_gamma(rng, self.b, 1.0).expect("validated shape");
            let v = x / (x + y);
            if v > 0.0 && v < 1.0 {
                return v;
            }
        }
    }
}

/// Beta distribution parameterized by its mode `theta` and concentration `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaModeDist {
    theta: f64,
    m: f64,
    inner: Beta,
}

impl BetaModeDist {
    pub fn new(theta: f64, m: f64) -> Result<Self> {
        check_location("theta", theta)?;
        check_scale("m", m)?;
        Ok(Self {
            theta,
            m,
            inner: Beta::new(1.0 + m * theta, 1.0 + m * (1.0 - theta)),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Implied shape parameters `(α1, α2)`.
    pub fn shapes(&self) -> (f64, f64) {
        (self.inner.a, self.inner.b)
    }
}

impl BoundedDistribution for BetaModeDist {
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn mode(&self) -> Result<f64> {
        Ok(self.theta)
    }

    fn density(&self, v: f64) -> f64 {
        self.inner.density(v)
    }

    fn log_density(&self, v: f64) -> f64 {
        self.inner.log_density(v)
    }

    fn cdf_unchecked(&self, v: f64) -> f64 {
        self.inner.cdf(v)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inner.draw(rng)
    }
}

/// Beta distribution parameterized by its mean `mu` and precision `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMeanDist {
    mu: f64,
    phi: f64,
    inner: Beta,
}

impl BetaMeanDist {
    pub fn new(mu: f64, phi: f64) -> Result<Self> {
        check_location("mu", mu)?;
        check_scale("phi", phi)?;
        Ok(Self {
            mu,
            phi,
            inner: Beta::new(mu * phi, (1.0 - mu) * phi),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn shapes(&self) -> (f64, f64) {
        (self.inner.a, self.inner.b)
    }
}

impl BoundedDistribution for BetaMeanDist {
    fn mean(&self) -> f64 {
        self.mu
    }

    fn variance(&self) -> f64 {
        self.mu * (1.0 - self.mu) / (1.0 + self.phi)
    }

    fn mode(&self) -> Result<f64> {
        let (a, b) = self.shapes();
        if a > 1.0 && b > 1.0 {
            Ok((a - 1.0) / (a + b - 2.0))
        } else {
            domain(format!("beta mode undefined for shapes ({a}, {b}); both must exceed 1"))
        }
    }

    fn density(&self, v: f64) -> f64 {
        self.inner.density(v)
    }

    fn log_density(&self, v: f64) -> f64 {
        self.inner.log_density(v)
    }

    fn cdf_unchecked(&self, v: f64) -> f64 {
        self.inner.cdf(v)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inner.draw(rng)
    }
}

/// Generalized biparabolic distribution on `[0,1]` with mode `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbpDist {
    theta: f64,
    m: f64,
    c: f64,
}

impl GbpDist {
    pub fn new(theta: f64, m: f64) -> Result<Self> {
        check_location("theta", theta)?;
        check_scale("m", m)?;
        Ok(Self {
            theta,
            m,
            c: gbp_normalizer(m),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Distance ratio to the nearer endpoint; 1 at the mode.
    #[inline]
    pub fn distance_ratio(&self, v: f64) -> f64 {
        if v <= self.theta {
            v / self.theta
        } else {
            (1.0 - v) / (1.0 - self.theta)
        }
    }

    /// `∫_0^d c (2tᵐ − t²ᵐ) dt`, the mass of one side up to ratio `d`.
    #[inline]
    fn side_mass(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let m = self.m;
        let dm = (m * d.ln()).exp();
        let dm1 = dm * d;
        self.c * (2.0 * dm1 / (m + 1.0) - dm1 * dm / (2.0 * m + 1.0))
    }
}

/// `(2m+1)(m+1)/(3m+1)`, the GBP density at its mode.
#[inline]
pub fn gbp_normalizer(m: f64) -> f64 {
    (2.0 * m + 1.0) * (m + 1.0) / (3.0 * m + 1.0)
}

/// Closed-form GBP mean `(6m²θ + 7m + 2)/(6m² + 14m + 4)`.
#[inline]
pub fn gbp_mean(theta: f64, m: f64) -> f64 {
    let m2 = m * m;
    (6.0 * m2 * theta + 7.0 * m + 2.0) / (6.0 * m2 + 14.0 * m + 4.0)
}

/// Closed-form GBP variance.
#[inline]
pub fn gbp_variance(theta: f64, m: f64) -> f64 {
    let m2 = m * m;
    let num = 4.0 * m2 * (37.0 * m2 + 61.0 * m + 10.0) * theta * (theta - 1.0)
        + 82.0 * m2 * m2
        + 247.0 * m2 * m
        + 247.0 * m2
        + 96.0 * m
        + 12.0;
    let den = 4.0
        * (3.0 * m + 1.0).powi(2)
        * (m + 2.0).powi(2)
        * (2.0 * m + 3.0)
        * (m + 3.0);
    num / den
}

impl BoundedDistribution for GbpDist {
    fn mean(&self) -> f64 {
        gbp_mean(self.theta, self.m)
    }

    fn variance(&self) -> f64 {
        gbp_variance(self.theta, self.m)
    }

    fn mode(&self) -> Result<f64> {
        Ok(self.theta)
    }

    fn density(&self, v: f64) -> f64 {
        let d = self.distance_ratio(v);
        if d <= 0.0 {
            return 0.0;
        }
        let dm = d.powf(self.m);
        self.c * dm * (2.0 - dm)
    }

    fn log_density(&self, v: f64) -> f64 {
        let d = self.distance_ratio(v);
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let ln_d = d.ln();
        self.c.ln() + self.m * ln_d + (2.0 - (self.m * ln_d).exp()).ln()
    }

    fn cdf_unchecked(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else if v >= 1.0 {
            1.0
        } else if v <= self.theta {
            (self.theta * self.side_mass(v / self.theta)).min(self.theta)
        } else {
            let upper = (1.0 - self.theta) * self.side_mass((1.0 - v) / (1.0 - self.theta));
            (1.0 - upper).max(self.theta)
        }
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        if p <= self.theta {
            bisect_quantile(|v| self.cdf_unchecked(v), p, 0.0, self.theta)
        } else {
            bisect_quantile(|v| self.cdf_unchecked(v), p, self.theta, 1.0)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = self.quantile_unchecked(sample_uniform(rng));
            if v > 0.0 && v < 1.0 {
                return v;
            }
        }
    }
}

/// Family-tagged distribution, as implied by a fitted regression at one
/// covariate value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConditionalDist {
    BetaMode { theta: f64, m: f64 },
    Gbp { theta: f64, m: f64 },
    BetaMean { mu: f64, phi: f64 },
}

/// Concrete distribution behind a [`ConditionalDist`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyDist {
    BetaMode(BetaModeDist),
    Gbp(GbpDist),
    BetaMean(BetaMeanDist),
}

impl ConditionalDist {
    pub fn build(&self) -> Result<AnyDist> {
        Ok(match *self {
            ConditionalDist::BetaMode { theta, m } => AnyDist::BetaMode(BetaModeDist::new(theta, m)?),
            ConditionalDist::Gbp { theta, m } => AnyDist::Gbp(GbpDist::new(theta, m)?),
            ConditionalDist::BetaMean { mu, phi } => AnyDist::BetaMean(BetaMeanDist::new(mu, phi)?),
        })
    }
}

macro_rules! delegate {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            AnyDist::BetaMode($d) => $e,
            AnyDist::Gbp($d) => $e,
            AnyDist::BetaMean($d) => $e,
        }
    };
}

impl BoundedDistribution for AnyDist {
    fn mean(&self) -> f64 {
        delegate!(self, d => d.mean())
    }

    fn variance(&self) -> f64 {
        delegate!(self, d => d.variance())
    }

    fn mode(&self) -> Result<f64> {
        delegate!(self, d => d.mode())
    }

    fn density(&self, v: f64) -> f64 {
        delegate!(self, d => d.density(v))
    }

    fn log_density(&self, v: f64) -> f64 {
        delegate!(self, d => d.log_density(v))
    }

    fn cdf_unchecked(&self, v: f64) -> f64 {
        delegate!(self, d => d.cdf_unchecked(v))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        delegate!(self, d => d.quantile_unchecked(p))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        delegate!(self, d => d.draw(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, RngStream};

    #[test]
    fn gbp_density_at_mode_and_example() {
        for &theta in &[0.1, 0.5, 0.93] {
            let g = GbpDist::new(theta, 5.0).unwrap();
            assert!((g.pdf(theta).unwrap() - 4.125).abs() < 1e-14);
        }
        let g = GbpDist::new(0.2, 5.0).unwrap();
        let want = 4.125 * 0.031_25 * 1.968_75;
        assert!((g.pdf(0.1).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.253_784).abs() < 1e-6);
    }

    #[test]
    fn beta_mode_reduces_to_beta22() {
        let b = BetaModeDist::new(0.5, 2.0).unwrap();
        assert_eq!(b.shapes(), (2.0, 2.0));
        assert!((b.pdf(0.5).unwrap() - 1.5).abs() < 1e-13);
        assert!((b.variance() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        let g = GbpDist::new(0.3, 2.0).unwrap();
        assert_eq!(g.pdf(0.0).unwrap(), 0.0);
        assert_eq!(g.pdf(1.0).unwrap(), 0.0);
        assert_eq!(g.log_pdf(0.0).unwrap(), f64::NEG_INFINITY);
        let b = BetaModeDist::new(0.3, 2.0).unwrap();
        assert_eq!(b.pdf(1.0).unwrap(), 0.0);
        assert_eq!(b.log_pdf(0.0).unwrap(), f64::NEG_INFINITY);
        let j = BetaMeanDist::new(0.2, 2.0).unwrap(); // shapes (0.4, 1.6)
        assert_eq!(j.pdf(0.0).unwrap(), f64::INFINITY);
        assert_eq!(j.pdf(1.0).unwrap(), 0.0);
        assert!(g.pdf(1.2).is_err());
        assert!(g.log_pdf(-0.1).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(GbpDist::new(0.0, 1.0).is_err());
        assert!(GbpDist::new(0.5, 0.0).is_err());
        assert!(BetaModeDist::new(1.0, 1.0).is_err());
        assert!(BetaMeanDist::new(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn gbp_cdf_at_mode_and_quadrature() {
        let g = GbpDist::new(0.3, 7.0).unwrap();
        assert!((g.cdf(0.3).unwrap() - 0.3).abs() < 1e-15);
        let g = GbpDist::new(0.5, 5.0).unwrap();
        let quad = integrate(|v| g.density(v), 0.0, 0.25, 1e-13).unwrap();
        assert!((g.cdf(0.25).unwrap() - quad).abs() < 1e-10);
    }

    #[test]
    fn quantile_edges_and_round_trip() {
        let dists = [
            AnyDist::Gbp(GbpDist::new(0.2, 10.0).unwrap()),
            AnyDist::BetaMode(BetaModeDist::new(0.7, 3.0).unwrap()),
            AnyDist::BetaMean(BetaMeanDist::new(0.4, 25.0).unwrap()),
        ];
        for d in &dists {
            assert_eq!(d.quantile(0.0).unwrap(), 0.0);
            assert_eq!(d.quantile(1.0).unwrap(), 1.0);
            for &p in &[1e-6, 0.01, 0.2, 0.5, 0.77, 0.999] {
                let q = d.quantile(p).unwrap();
                assert!((d.cdf(q).unwrap() - p).abs() <= 1e-12, "{d:?} p={p}");
            }
            assert!(d.quantile(1.5).is_err());
        }
    }

    #[test]
    fn gbp_means() {
        for &m in &[0.5, 3.0, 40.0] {
            assert!((GbpDist::new(0.5, m).unwrap().mean() - 0.5).abs() < 1e-15);
        }
        let g = GbpDist::new(0.2, 10.0).unwrap();
        assert!((g.mean() - 192.0 / 744.0).abs() < 1e-15);
        let quad = integrate(|v| v * g.density(v), 0.0, 0.2, 1e-13).unwrap()
            + integrate(|v| v * g.density(v), 0.2, 1.0, 1e-13).unwrap();
        assert!((quad - 0.258_064_5).abs() < 1e-7);
        assert!((quad - g.mean()).abs() < 1e-11);
    }

    #[test]
    fn beta_mean_mode() {
        let d = BetaMeanDist::new(0.25, 8.0).unwrap(); // shapes (2, 6)
        assert!((d.mode().unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(BetaMeanDist::new(0.25, 2.0).unwrap().mode().is_err());
    }

    #[test]
    fn gbp_symmetry() {
        for &(theta, m) in &[(0.2, 5.0), (0.65, 0.7), (0.5, 80.0)] {
            let a = GbpDist::new(theta, m).unwrap();
            let b = GbpDist::new(1.0 - theta, m).unwrap();
            for k in 1..64 {
                let v = k as f64 / 64.0;
                let (x, y) = (a.pdf(v).unwrap(), b.pdf(1.0 - v).unwrap());
                assert!((x - y).abs() <= 1e-13 * x.max(1.0), "θ={theta} v={v}");
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_and_inside() {
        let g = GbpDist::new(0.9, 30.0).unwrap();
        let s = RngStream::new(5, 1);
        let a = g.sample(&mut s.generator(), 500).unwrap();
        let b = g.sample(&mut s.generator(), 500).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(g.sample(&mut s.generator(), 0).is_err());
    }
}
