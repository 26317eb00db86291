//! Hurst exponent estimators on dyadic scales: Haar wavelet, detrended
//! fluctuation analysis, and rescaled range.
//!
//! All three take a sampled path. Scales are given as octaves: `j` means
//! blocks of `2^j` grid steps.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::series::GridSeries;

use super::weighted_ols;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HurstMethod {
    Wavelet,
    Dfa,
    RescaledRange,
}

impl fmt::Display for HurstMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HurstMethod::Wavelet => "wavelet",
            HurstMethod::Dfa => "dfa",
            HurstMethod::RescaledRange => "rescaled_range",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub method: HurstMethod,
    /// Raw estimate; not clamped to `(0, 1)`.
    pub h: f64,
    pub slope_stderr: f64,
    pub j_min: u32,
    pub j_max: u32,
    /// Number of increments in the input path.
    pub n: usize,
}

impl HurstEstimate {
    pub const CSV_HEADER: &'static str = "method,h,stderr,j_min,j_max,n";

    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.method, self.h, self.slope_stderr, self.j_min, self.j_max, self.n)
    }
}

fn floor_log2(n: usize) -> u32 {
    usize::BITS - 1 - n.leading_zeros()
}

fn check_octaves(n: usize, j_min: u32, j_max: u32, min_blocks_log2: u32) -> Result<()> {
    if j_min < 1 || j_min >= j_max {
        return Err(Error::Argument(format!("octave range [{j_min}, {j_max}] needs 1 ≤ j_min < j_max")));
    }
    let need = 1usize.checked_shl(j_max + min_blocks_log2).unwrap_or(usize::MAX);
    if n < need {
        return Err(Error::Argument(format!(
            "{n} increments are too few for octave {j_max} (need ≥ {need})"
        )));
    }
    Ok(())
}

/// Haar wavelet estimate over octaves `[j_min, j_max]`.
///
/// The detail at octave `j` is the difference of the path's two half-block
/// increments, scaled by `2^{-j/2}`. Log-variances, corrected for the bias of
/// the log of a chi-square mean, are regressed on `j` with weights equal to
/// the number of coefficients; the slope is `2H - 1`.
pub fn hurst_wavelet(series: &GridSeries, j_min: u32, j_max: u32) -> Result<HurstEstimate> {
    let p = series.values();
    let n = p.len().saturating_sub(1);
    check_octaves(n, j_min, j_max, 2)?;
    let mut js = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut first_var = None;
    for j in j_min..=j_max {
        let block = 1usize << j;
        let half = block / 2;
        let count = n / block;
        let norm = (block as f64).sqrt();
        let mut sum_sq = 0.0;
        for k in 0..count {
            let a = k * block;
            let d = ((p[a + half] - p[a]) - (p[a + block] - p[a + half])) / norm;
            sum_sq += d * d;
        }
        let var = sum_sq / count as f64;
        if !(var > 0.0) {
            return Err(Error::Degenerate(format!("zero wavelet energy at octave {j}")));
        }
        let half_count = count as f64 / 2.0;
        let bias = digamma(half_count) / LN_2 - half_count.log2();
        // Relative to the first octave, so a power-of-two rescaling of the
        // path leaves every ordinate bit-identical.
        let base = *first_var.get_or_insert(var);
        js.push(j as f64);
        ys.push((var / base).log2() - bias);
        ws.push(count as f64);
    }
    let fit = weighted_ols(&js, &ys, &ws)?;
    Ok(HurstEstimate {
        method: HurstMethod::Wavelet,
        h: (fit.slope + 1.0) / 2.0,
        slope_stderr: fit.slope_stderr,
        j_min,
        j_max,
        n,
    })
}

/// Octaves `[3, log2 n - 4]`.
pub fn hurst_wavelet_default(series: &GridSeries) -> Result<HurstEstimate> {
    let n = series.len().saturating_sub(1);
    if n < 256 {
        return Err(Error::Argument(format!("{n} increments are too few for the default octaves (need ≥ 256)")));
    }
    hurst_wavelet(series, 3, floor_log2(n) - 4)
}

/// Residual mean square of a least-squares line through `y` at abscissae
/// `0, 1, ...`.
fn detrended_mean_square(y: &[f64]) -> f64 {
    let s = y.len() as f64;
    let mx = (s - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / s;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        let dy = v - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ((syy - sxy * sxy / sxx) / s).max(0.0)
}

/// First-order DFA treating the path as the profile; windows of `2^j` points
/// for `j ∈ [j_min, j_max]` (defaults `[4, log2 n - 2]`). The slope of
/// `log2 F` against `log2` window size is `H`.
pub fn hurst_dfa(series: &GridSeries, range: Option<(u32, u32)>) -> Result<HurstEstimate> {
    let p = series.values();
    let n = p.len().saturating_sub(1);
    let (j_min, j_max) = match range {
        Some(r) => r,
        None if n >= 64 => (4, floor_log2(n) - 2),
        None => return Err(Error::Argument(format!("{n} increments are too few for DFA (need ≥ 64)"))),
    };
    check_octaves(n, j_min, j_max, 2)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in j_min..=j_max {
        let s = 1usize << j;
        let windows = p.len() / s;
        let ms = p.chunks_exact(s).map(detrended_mean_square).sum::<f64>() / windows as f64;
        if !(ms > 0.0) {
            return Err(Error::Degenerate(format!("zero detrended fluctuation at window {s}")));
        }
        xs.push(j as f64);
        ys.push(0.5 * ms.log2());
    }
    let fit = weighted_ols(&xs, &ys, &vec![1.0; xs.len()])?;
    Ok(HurstEstimate {
        method: HurstMethod::Dfa,
        h: fit.slope,
        slope_stderr: fit.slope_stderr,
        j_min,
        j_max,
        n,
    })
}

/// Anis-Lloyd expected `R/S` of `s` i.i.d. Gaussian values, with the
/// `(s - 1/2)/s` small-sample factor.
fn expected_rs(s: usize) -> f64 {
    let n = s as f64;
    let ratio = (ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0)).exp() / PI.sqrt();
    let sum: f64 = (1..s).map(|i| ((n - i as f64) / i as f64).sqrt()).sum();
    (n - 0.5) / n * ratio * sum
}

/// Rescaled range of the path's increments over blocks of `2^j` increments
/// for `j ∈ [j_min, j_max]` (defaults `[4, log2 n - 3]`). The log of the
/// observed `R/S` relative to its Anis-Lloyd expectation is regressed on the
/// log block size and `H = 1/2 + slope`.
pub fn hurst_rs(series: &GridSeries, range: Option<(u32, u32)>) -> Result<HurstEstimate> {
    let inc = series.increments();
    let n = inc.len();
    let (j_min, j_max) = match range {
        Some(r) => r,
        None if n >= 128 => (4, floor_log2(n) - 3),
        None => return Err(Error::Argument(format!("{n} increments are too few for R/S (need ≥ 128)"))),
    };
    check_octaves(n, j_min, j_max, 2)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in j_min..=j_max {
        let s = 1usize << j;
        let mut total = 0.0;
        let mut used = 0usize;
        for block in inc.chunks_exact(s) {
            let mean = block.iter().sum::<f64>() / s as f64;
            let (mut acc, mut lo, mut hi, mut ss) = (0.0, 0.0_f64, 0.0_f64, 0.0);
            for &v in block {
                acc += v - mean;
                lo = lo.min(acc);
                hi = hi.max(acc);
                ss += (v - mean) * (v - mean);
            }
            let sd = (ss / s as f64).sqrt();
            if sd > 0.0 {
                total += (hi - lo) / sd;
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::Degenerate(format!("constant increments in every block of {s}")));
        }
        xs.push(j as f64);
        ys.push((total / used as f64 / expected_rs(s)).log2());
    }
    let fit = weighted_ols(&xs, &ys, &vec![1.0; xs.len()])?;
    Ok(HurstEstimate {
        method: HurstMethod::RescaledRange,
        h: 0.5 + fit.slope,
        slope_stderr: fit.slope_stderr,
        j_min,
        j_max,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::generate_fbm;
    use crate::rng::stream;
    use crate::series::SeriesRole;
    use rand_distr::{Distribution, StandardNormal};

    fn white_noise_path(n: usize, seed: u64) -> GridSeries {
        let mut rng = stream(seed, 0);
        let mut acc = 0.0;
        let mut v = vec![0.0];
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += z;
            v.push(acc);
        }
        GridSeries::new(1.0, v, SeriesRole::Generic).unwrap()
    }

    #[test]
    fn white_noise_is_half() {
        let est = hurst_wavelet_default(&white_noise_path(1 << 16, 1)).unwrap();
        assert!((est.h - 0.5).abs() < 0.05, "{est:?}");
        assert_eq!((est.j_min, est.j_max), (3, 12));
    }

    #[test]
    fn fbm_estimates() {
        let p = generate_fbm(0.8, 1 << 16, 1.0, &mut stream(2, 0)).unwrap().to_series();
        let w = hurst_wavelet_default(&p).unwrap();
        assert!((0.72..=0.88).contains(&w.h), "{w:?}");
    }

    #[test]
    fn constant_path_is_degenerate() {
        let c = GridSeries::constant(1.0, 1024, 2.0, SeriesRole::Generic).unwrap();
        assert!(matches!(hurst_dfa(&c, None), Err(Error::Degenerate(_))));
        assert!(matches!(hurst_rs(&c, None), Err(Error::Degenerate(_))));
        assert!(matches!(hurst_wavelet_default(&c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn short_input_is_rejected() {
        let p = white_noise_path(100, 3);
        assert!(hurst_wavelet(&p, 3, 6).is_err());
        assert!(hurst_wavelet(&p, 4, 4).is_err());
        assert!(hurst_wavelet_default(&p).is_err());
    }

    #[test]
    fn expected_rs_approaches_sqrt_law() {
        let n = (1usize << 14) as f64;
        assert!((expected_rs(1 << 14) / (n * PI / 2.0).sqrt() - 1.0).abs() < 0.02);
        assert!(expected_rs(16) < expected_rs(32));
    }

    #[test]
    fn csv_row() {
        let e = HurstEstimate {
            method: HurstMethod::RescaledRange,
            h: 0.75,
            slope_stderr: 0.01,
            j_min: 3,
            j_max: 12,
            n: 65536,
        };
        assert_eq!(e.to_csv_row(), "rescaled_range,0.75,0.01,3,12,65536");
    }
}
