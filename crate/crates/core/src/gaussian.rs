//! Finite model of the isonormal process and reproducible Gaussian sampling.
//!
//! Draws are counter based: the generator is ChaCha8 keyed by the seed, with
//! the ChaCha stream id taken from [`RngSpec::stream`]. Sample number `k`
//! (0-based) of a given [`SampleLayout`] occupies a fixed block of the
//! keystream, so any range of samples can be regenerated independently and
//! concatenating chunked draws reproduces one sequential draw exactly.
//!
//! Each standard normal consumes one 64-bit word, mapped to a uniform in
//! `(0, 1)` from its top 53 bits and pushed through the inverse normal CDF.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{check_dim, Error, Result};

/// Seed plus substream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }
}

/// Sequential standard normals from a fixed position of a counter-based stream.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(spec: RngSpec) -> Self {
        Self::at(spec, 0)
    }

    /// Positions the stream at normal number `index`.
    pub fn at(spec: RngSpec, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(spec.stream);
        // 32-bit words; one normal uses two of them
        rng.set_word_pos(u128::from(index) * 2);
        Self { rng }
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let u = self.next_uniform();
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

/// The truncated Hilbert space `H = span(u_1..u_n)` with `W(u_j) = g_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGaussianModel {
    n: usize,
}

impl FiniteGaussianModel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("model dimension must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Shape of one sample: the base row, `copies` independent copies and
/// `tilde` auxiliary rows, each of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleLayout {
    pub n: usize,
    pub copies: usize,
    pub tilde: usize,
}

impl SampleLayout {
    pub fn new(n: usize, copies: usize, tilde: usize) -> Self {
        Self { n, copies, tilde }
    }

    pub fn rows(&self) -> usize {
        1 + self.copies + self.tilde
    }

    pub fn normals_per_sample(&self) -> usize {
        self.rows() * self.n
    }
}

/// One draw of the base sequence, its copies and any auxiliary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample {
    layout: SampleLayout,
    data: Vec<f64>,
}

impl GaussianSample {
    pub fn zeros(layout: SampleLayout) -> Self {
        Self {
            layout,
            data: vec![0.0; layout.normals_per_sample()],
        }
    }

    /// Builds a sample from explicit rows (base first).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::InvalidArgument("a sample needs at least the base row".into()))?;
        for r in rows {
            check_dim(n, r.len())?;
        }
        Ok(Self {
            layout: SampleLayout::new(n, rows.len() - 1, 0),
            data: rows.concat(),
        })
    }

    pub fn layout(&self) -> SampleLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.n
    }

    /// Row `k` counting the base as row 0 and auxiliary rows last.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.layout.n;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn checked_row(&self, k: usize) -> Result<&[f64]> {
        if k >= self.layout.rows() {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: self.layout.rows(),
            });
        }
        Ok(self.row(k))
    }

    pub fn base(&self) -> &[f64] {
        self.row(0)
    }

    /// Copy `k` in `1..=copies`.
    pub fn copy(&self, k: usize) -> &[f64] {
        debug_assert!(k >= 1 && k <= self.layout.copies);
        self.row(k)
    }

    /// Auxiliary row `t` in `0..tilde`.
    pub fn tilde(&self, t: usize) -> &[f64] {
        self.row(1 + self.layout.copies + t)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn refill(&mut self, stream: &mut NormalStream) {
        stream.fill(&mut self.data);
    }
}

/// Iterates samples `start..start + count` of a layout without allocating per sample.
pub struct SampleCursor {
    stream: NormalStream,
    sample: GaussianSample,
    remaining: usize,
}

impl SampleCursor {
    pub fn new(layout: SampleLayout, rng: RngSpec, start: u64, count: usize) -> Self {
        let per = layout.normals_per_sample() as u64;
        Self {
            stream: NormalStream::at(rng, start * per),
            sample: GaussianSample::zeros(layout),
            remaining: count,
        }
    }

    /// Advances to the next sample; `None` when exhausted.
    pub fn next_sample(&mut self) -> Option<&GaussianSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.sample.refill(&mut self.stream);
        Some(&self.sample)
    }
}

/// `count` samples with `k_max` copies, starting at sample 0 of the stream.
pub fn sample(
    model: &FiniteGaussianModel,
    k_max: usize,
    count: usize,
    rng: RngSpec,
) -> Result<Vec<GaussianSample>> {
    sample_range(SampleLayout::new(model.dim(), k_max, 0), 0, count, rng)
}

/// Samples `start..start + count` of the given layout.
pub fn sample_range(
    layout: SampleLayout,
    start: u64,
    count: usize,
    rng: RngSpec,
) -> Result<Vec<GaussianSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let mut cursor = SampleCursor::new(layout, rng, start, count);
    let mut out = Vec::with_capacity(count);
    while let Some(s) = cursor.next_sample() {
        out.push(s.clone());
    }
    Ok(out)
}

/// `W(h) = sum_j h_j g_j` evaluated on row `copy`.
pub fn wiener(h: &[f64], s: &GaussianSample, copy: usize) -> Result<f64> {
    check_dim(s.dim(), h.len())?;
    let row = s.checked_row(copy)?;
    Ok(h.iter().zip(row).map(|(a, b)| a * b).sum())
}
