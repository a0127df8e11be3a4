//! Numerical evaluation of `int_0^inf e^{-m s} dnu_t(s)` for the one-sided
//! 1/2-stable law `dnu_t(s) = t / (2 sqrt(pi s^3)) e^{-t^2/(4s)} ds`.
//!
//! With `s = t^2 / (4 v^2)` the measure becomes the half-normal law
//! `(2/sqrt(pi)) e^{-v^2} dv` and the integrand becomes `e^{-a^2/v^2}` with
//! `a = sqrt(m) t / 2`. The exponent `v^2 + a^2/v^2` peaks at `v = sqrt(a)`
//! with curvature 8 regardless of `a`, so panels of fixed width resolve it.
//! Below the peak the panels shrink geometrically toward `v = 0`.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Panelled Gauss-Legendre rule for the subordinated semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorQuad {
    nodes: usize,
    /// Largest allowed a-priori truncation error, relative to the integral.
    tolerance: f64,
    /// Exponent margin `K` used to place the truncation points.
    margin: f64,
    max_width: f64,
    gl: (Vec<f64>, Vec<f64>),
}

/// One evaluation together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// A-priori bound on the relative truncation error.
    pub truncation_bound: f64,
    /// Integration range in `s`; the upper end is always infinite.
    pub s_bounds: (f64, f64),
    /// `nu_t` mass of the range.
    pub mass_covered: f64,
    pub panels: usize,
}

impl Default for SubordinatorQuad {
    fn default() -> Self {
        Self::new(20).expect("20 nodes is valid")
    }
}

impl SubordinatorQuad {
    pub const SCHEME: &'static str = "gauss-legendre-panels";

    pub fn new(nodes: usize) -> Result<Self> {
        Self::with_tolerance(nodes, 1e-9)
    }

    pub fn with_tolerance(nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidArgument(format!("quadrature needs >= 8 nodes, got {nodes}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
        }
        Ok(Self {
            nodes,
            tolerance,
            margin: 45.0,
            max_width: 0.25,
            gl: gauss_legendre(nodes),
        })
    }

    /// Sets the exponent margin `K`; smaller values truncate earlier.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Gauss-Legendre on `[lo, hi]`, split into pieces no wider than `max_width`.
    fn panel(&self, lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> (f64, usize) {
        let pieces = ((hi - lo) / self.max_width).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        let (x, w) = &self.gl;
        let total = (0..pieces)
            .map(|p| {
                let half = 0.5 * step;
                let mid = lo + (p as f64 + 0.5) * step;
                half * x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>()
            })
            .sum();
        (total, pieces)
    }

    /// `int e^{-m s} dnu_t(s)`, whose exact value is `e^{-sqrt(m) t}`.
    pub fn integrate(&self, t: f64, m: usize) -> Result<QuadResult> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("subordination time must be positive, got {t}")));
        }
        let a = (m as f64).sqrt() * t / 2.0;
        let k = self.margin;
        let norm = 2.0 / std::f64::consts::PI.sqrt();
        // upper end: (V - a/V)^2 >= K, and V >= 6 so that the half-normal tail is negligible
        let y_hi = {
            let b = 2.0 * a + k;
            0.5 * (b + (b * b - 4.0 * a * a).max(0.0).sqrt())
        };
        let v_hi = y_hi.sqrt().max(6.0);
        let f = |v: f64| if v <= 0.0 { 0.0 } else { norm * (-v * v - a * a / (v * v)).exp() };

        let peak = a.sqrt();
        let mut total = 0.0;
        let mut panels = 0;
        let mut add = |(v, p): (f64, usize)| {
            total += v;
            panels += p;
        };
        let mut v_lo = 0.0;
        if a > 0.0 {
            // geometric panels below the peak
            let mut hi = peak.min(v_hi);
            loop {
                let lo = hi / 2.0;
                add(self.panel(lo, hi, &f));
                if a * a / (lo * lo) - 2.0 * a >= k || lo < 1e-300 {
                    // the rest of the range carries nu_t mass but a negligible integrand
                    add(self.panel(0.0, lo, &f));
                    v_lo = lo;
                    break;
                }
                hi = lo;
            }
        }
        let lo = if a > 0.0 { peak.min(v_hi) } else { 0.0 };
        add(self.panel(lo, v_hi, &f));

        let exact_scale = (-2.0 * a).exp();
        // error of the [0, v_lo] panel: integrand <= norm * e^{-a^2/v_lo^2}
        let lower_tail = if a > 0.0 { norm * v_lo * (-a * a / (v_lo * v_lo)).exp() } else { 0.0 };
        // [V, inf): bounded by erfc(V - a/V) relative to e^{-2a}
        let b = v_hi - a / v_hi;
        let upper_tail = statrs::function::erf::erfc(b) * exact_scale;
        let truncation_bound = (lower_tail + upper_tail) / exact_scale;
        let s_bounds = (t * t / (4.0 * v_hi * v_hi), f64::INFINITY);
        let mass_covered = statrs::function::erf::erf(v_hi);
        if truncation_bound > self.tolerance || mass_covered < 1.0 - 1e-6 {
            return Err(Error::Accuracy(format!(
                "subordinator quadrature truncation bound {truncation_bound:.3e} (mass {mass_covered}) \
                 exceeds tolerance {:.1e} for t={t}, m={m}",
                self.tolerance
            )));
        }
        Ok(QuadResult {
            value: total,
            truncation_bound,
            s_bounds,
            mass_covered,
            panels,
        })
    }
}
