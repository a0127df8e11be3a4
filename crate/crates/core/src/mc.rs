//! Chunked Monte Carlo moment estimation.
//!
//! The sample index range is cut into `batches` contiguous chunks. Each chunk
//! regenerates its own samples from the counter-based stream, accumulates
//! Welford statistics sequentially, and the per-chunk statistics are merged in
//! chunk order. The result is therefore independent of the number of worker
//! threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianSample, RngSpec, SampleCursor, SampleLayout};

pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Total number of samples.
    pub samples: usize,
    /// Number of independently generated chunks.
    pub batches: usize,
    pub seed: u64,
    /// Multiplier applied to standard errors in agreement checks.
    pub confidence: f64,
    /// Fresh Gaussian draws used per sample to evaluate a pathwise gamma-norm
    /// of an operator-valued random variable in a non-Hilbert norm.
    pub inner_draws: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            batches: 16,
            seed: 0,
            confidence: 3.0,
            inner_draws: 16,
        }
    }
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        if self.batches < 2 || self.batches > self.samples {
            return Err(Error::InvalidArgument(format!(
                "batch count must lie in 2..=samples, got {}",
                self.batches
            )));
        }
        if self.inner_draws == 0 {
            return Err(Error::InvalidArgument("inner_draws must be >= 1".into()));
        }
        if !(self.confidence > 0.0) {
            return Err(Error::InvalidArgument("confidence multiplier must be positive".into()));
        }
        Ok(())
    }

    pub fn rng(&self, stream: u64) -> RngSpec {
        RngSpec::new(self.seed, stream)
    }

    /// `(start, len)` of every chunk.
    fn chunks(&self) -> Vec<(u64, usize)> {
        let base = self.samples / self.batches;
        let extra = self.samples % self.batches;
        let mut start = 0u64;
        (0..self.batches)
            .map(|b| {
                let len = base + usize::from(b < extra);
                let out = (start, len);
                start += len as u64;
                out
            })
            .collect()
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl EstimateResult {
    pub fn exact(value: f64, samples: usize, seed: u64) -> Self {
        Self {
            estimate: value,
            stderr: 0.0,
            samples,
            seed,
        }
    }

    /// `|self - other| <= k * sqrt(se_1^2 + se_2^2)`.
    pub fn agrees_with(&self, other: &EstimateResult, k: f64) -> bool {
        (self.estimate - other.estimate).abs() <= k * self.stderr.hypot(other.stderr)
    }

    /// `|self - value| <= k * se`.
    pub fn agrees_with_value(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.stderr
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        // equal means (e.g. constant data) must stay bit-exact
        if delta != 0.0 {
            self.mean += delta * other.count as f64 / n;
        }
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `eval` on every sample and returns one [`Welford`] per output slot.
///
/// `init` builds per-chunk scratch state; `eval` writes `width` values.
pub fn estimate_means<S, I, F>(
    layout: SampleLayout,
    rng: RngSpec,
    mc: &McConfig,
    width: usize,
    init: I,
    eval: F,
) -> Result<Vec<Welford>>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &GaussianSample, &mut [f64]) + Sync,
{
    mc.validate()?;
    let parts: Vec<Vec<Welford>> = mc
        .chunks()
        .into_par_iter()
        .map(|(start, len)| {
            let mut state = init();
            let mut acc = vec![Welford::default(); width];
            let mut out = vec![0.0; width];
            let mut cursor = SampleCursor::new(layout, rng, start, len);
            while let Some(s) = cursor.next_sample() {
                eval(&mut state, s, &mut out);
                for (a, &v) in acc.iter_mut().zip(&out) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); width];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Estimates `(E X_q^p)^{1/p}` for every quantity `q` produced by `eval` and
/// every exponent in `ps`. Output is indexed `[q][p]`.
pub fn estimate_lp_norms<S, I, F>(
    layout: SampleLayout,
    rng: RngSpec,
    mc: &McConfig,
    quantities: usize,
    ps: &[f64],
    init: I,
    eval: F,
) -> Result<Vec<Vec<EstimateResult>>>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &GaussianSample, &mut [f64]) + Sync,
{
    for &p in ps {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("moment order must be >= 1, got {p}")));
        }
    }
    let np = ps.len();
    let stats = estimate_means(
        layout,
        rng,
        mc,
        quantities * np,
        || (init(), vec![0.0; quantities]),
        |(state, norms), s, out| {
            eval(state, s, norms);
            for (q, &v) in norms.iter().enumerate() {
                for (k, &p) in ps.iter().enumerate() {
                    out[q * np + k] = pow_moment(v, p);
                }
            }
        },
    )?;
    Ok((0..quantities)
        .map(|q| {
            ps.iter()
                .enumerate()
                .map(|(k, &p)| lp_from_moment(&stats[q * np + k], p, mc))
                .collect()
        })
        .collect())
}

#[inline]
pub(crate) fn pow_moment(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else if p == 2.0 {
        v * v
    } else if p == 4.0 {
        let s = v * v;
        s * s
    } else {
        v.powf(p)
    }
}

/// `(mean)^{1/p}` with a delta-method standard error.
pub fn lp_from_moment(w: &Welford, p: f64, mc: &McConfig) -> EstimateResult {
    let mean = w.mean;
    if mean <= 0.0 {
        return EstimateResult::exact(0.0, mc.samples, mc.seed);
    }
    let estimate = if p == 1.0 {
        mean
    } else if p == 2.0 {
        mean.sqrt()
    } else {
        mean.powf(1.0 / p)
    };
    let stderr = estimate / (p * mean) * w.stderr();
    EstimateResult {
        estimate,
        stderr,
        samples: mc.samples,
        seed: mc.seed,
    }
}
