//! Wilson intervals, Kolmogorov-Smirnov tests and a few summary helpers.
//!
//! KS p-values use the asymptotic Kolmogorov distribution with Stephens'
//! effective-size correction.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{GrowthError, Result};

pub const KS_MIN_SAMPLE: usize = 10;

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

/// Two-sided critical value for a confidence level in (0, 1).
pub fn two_sided_z(confidence: f64) -> Result<f64> {
    check_confidence(confidence)?;
    Ok(normal_quantile(0.5 + confidence / 2.0))
}

fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(GrowthError::Parameter(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionInterval {
    pub successes: u64,
    pub trials: u64,
    pub confidence: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ProportionInterval {
    pub fn estimate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<ProportionInterval> {
    if trials == 0 || successes > trials {
        return Err(GrowthError::Parameter(format!(
            "need 0 ≤ successes ≤ trials and trials ≥ 1, got {successes}/{trials}"
        )));
    }
    let z = two_sided_z(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let (mut lower, mut upper) = (center - half, center + half);
    if successes == 0 {
        lower = 0.0;
    }
    if successes == trials {
        upper = 1.0;
    }
    Ok(ProportionInterval {
        successes,
        trials,
        confidence,
        lower: lower.clamp(0.0, p),
        upper: upper.clamp(p, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.27 {
        return 1.0;
    }
    if x < 1.0 {
        // small-argument form converges faster here
        let v = (-std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        let s = v + v.powi(9) + v.powi(25) + v.powi(49);
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += sign * term;
        if term < 1e-300 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_survival((s + 0.12 + 0.11 / s) * d)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.iter().any(|v| v.is_nan()) {
        return Err(GrowthError::Parameter("sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if sample.len() < KS_MIN_SAMPLE {
        return Err(GrowthError::Parameter(format!(
            "KS test needs at least {KS_MIN_SAMPLE} observations, got {}",
            sample.len()
        )));
    }
    let xs = sorted(sample)?;
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < KS_MIN_SAMPLE || b.len() < KS_MIN_SAMPLE {
        return Err(GrowthError::Parameter(format!(
            "KS test needs at least {KS_MIN_SAMPLE} observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (xa, xb) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let v = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] == v {
            i += 1;
        }
        while j < xb.len() && xb[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// Pearson chi-square goodness of fit; `fitted` parameters reduce the degrees
/// of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted: usize) -> Result<TestResult> {
    if observed.len() != expected.len() || observed.len() < fitted + 2 {
        return Err(GrowthError::Parameter(
            "chi-square needs matching bins and positive degrees of freedom".into(),
        ));
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return Err(GrowthError::Parameter("expected counts must be positive".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let df = (observed.len() - 1 - fitted) as f64;
    let chi = ChiSquared::new(df).map_err(|e| GrowthError::Parameter(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: chi.sf(stat),
    })
}

/// One-sided pooled two-proportion z test of `H1: p_a < p_b`.
pub fn two_proportion_less(a: u64, na: u64, b: u64, nb: u64) -> Result<TestResult> {
    if na == 0 || nb == 0 || a > na || b > nb {
        return Err(GrowthError::Parameter("invalid proportion counts".into()));
    }
    let (fa, fb) = (na as f64, nb as f64);
    let pooled = (a + b) as f64 / (fa + fb);
    let se = (pooled * (1.0 - pooled) * (1.0 / fa + 1.0 / fb)).sqrt();
    let diff = a as f64 / fa - b as f64 / fb;
    if se == 0.0 {
        let p = if diff < 0.0 { 0.0 } else { 1.0 };
        return Ok(TestResult {
            statistic: 0.0,
            p_value: p,
        });
    }
    let z = diff / se;
    Ok(TestResult {
        statistic: z,
        p_value: normal_cdf(z),
    })
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(sample: &[f64]) -> Self {
        let n = sample.len();
        if n == 0 {
            return MeanSe {
                n,
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = sample.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        MeanSe { n, mean, se }
    }

    /// Symmetric normal interval.
    pub fn interval(&self, confidence: f64) -> Result<(f64, f64)> {
        let z = two_sided_z(confidence)?;
        Ok((self.mean - z * self.se, self.mean + z * self.se))
    }
}

/// Batch-means estimate for a correlated series: the series is cut into
/// `batches` consecutive blocks and the block means are treated as i.i.d.
pub fn batch_means(series: &[f64], batches: usize) -> Result<MeanSe> {
    if batches < 2 || series.len() < batches {
        return Err(GrowthError::Parameter(
            "batch means needs at least two batches with one value each".into(),
        ));
    }
    let size = series.len() / batches;
    let means: Vec<f64> = series
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    Ok(MeanSe::of(&means))
}
