//! Kolmogorov-Smirnov tests with asymptotic p-values, and the Poisson CLT
//! check built on them.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const KOLMOGOROV_TERMS: u32 = 100;

/// Smallest sample accepted by [`ks_normal`].
pub const MIN_KS_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub effective_n: f64,
}

pub fn normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (2.0 * var).sqrt())
}

/// `P(K > λ)` for the Kolmogorov distribution, series truncated at 100 terms.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    // The alternating series is useless this close to zero, where the tail
    // is 1 to double precision.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("non-finite sample".into()));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample test of `samples` against `Normal(mean, var)`.
pub fn ks_normal(samples: &[f64], mean: f64, var: f64) -> Result<KsTest> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::Argument(format!("{} samples, need ≥ {MIN_KS_SAMPLES}", samples.len())));
    }
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Degenerate(format!("normal variance {var}")));
    }
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = normal_cdf(x, mean, var);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsTest {
        statistic: d,
        p_value: p_value(d, n),
        effective_n: n,
    })
}

/// Two-sample test; ties are handled by stepping both empirical CDFs past a
/// shared value before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("two-sample test needs non-empty samples".into()));
    }
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    Ok(KsTest {
        statistic: d,
        p_value: p_value(d, ne),
        effective_n: ne,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonClt {
    pub ks: KsTest,
    /// Sample mean of `Π(t)/t`.
    pub mean_ratio: f64,
}

/// Draws `(Π(t) - t)/√t` for a unit-rate Poisson count and tests it against
/// the standard normal. Meant for `t ≥ 10^3`; smaller `t` is allowed but the
/// skewness of the count can make the test reject.
pub fn poisson_clt_check<R: Rng + ?Sized>(t_large: f64, n_samples: usize, rng: &mut R) -> Result<PoissonClt> {
    if !(t_large > 0.0 && t_large.is_finite()) {
        return Err(Error::Domain {
            quantity: "t",
            value: t_large,
            domain: "(0, ∞)",
        });
    }
    if t_large < 1e3 {
        log::warn!("Poisson CLT check at t = {t_large} is below 1e3; rejection is expected");
    }
    let law = Poisson::new(t_large).map_err(|e| Error::Argument(e.to_string()))?;
    let sd = t_large.sqrt();
    let mut z = Vec::with_capacity(n_samples);
    let mut ratio = 0.0;
    for _ in 0..n_samples {
        let count: f64 = law.sample(rng);
        z.push((count - t_large) / sd);
        ratio += count / t_large;
    }
    Ok(PoissonClt {
        ks: ks_normal(&z, 0.0, 1.0)?,
        mean_ratio: ratio / n_samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_reference_points() {
        // Tabulated critical values of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(5.0) < 1e-20);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0, 0.0, 1.0), 0.5);
        assert!((normal_cdf(1.96, 0.0, 1.0) - 0.975).abs() < 1e-4);
        assert!((normal_cdf(3.0, 1.0, 4.0) - normal_cdf(1.0, 0.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn shifted_sample_is_rejected() {
        let mut rng = stream(7, 0);
        let v: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal) + 3.0).collect();
        assert!(ks_normal(&v, 0.0, 1.0).unwrap().p_value < 1e-6);
        assert!(ks_normal(&v, 3.0, 1.0).unwrap().p_value > 1e-3);
    }

    #[test]
    fn input_guards() {
        assert!(ks_normal(&[0.0; 99], 0.0, 1.0).is_err());
        assert!(matches!(ks_normal(&[0.0; 200], 0.0, 0.0), Err(Error::Degenerate(_))));
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let a: Vec<f64> = (0..500).map(|k| k as f64).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|v| v + 1000.0).collect();
        let far = ks_two_sample(&a, &b).unwrap();
        assert_eq!(far.statistic, 1.0);
        assert!(far.p_value < 1e-20);
    }

    #[test]
    fn poisson_lln() {
        let r = poisson_clt_check(1e4, 2000, &mut stream(9, 0)).unwrap();
        assert!((r.mean_ratio - 1.0).abs() < 0.02);
    }
}
