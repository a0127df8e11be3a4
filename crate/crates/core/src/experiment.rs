//! Verification suites and Monte Carlo experiments behind the `chaoslab` binary.
//!
//! A run takes an [`ExperimentSpec`] and produces a [`Report`]: one or more
//! tables plus a list of pass/fail checks. Every random object of instance `k`
//! is drawn from seed `seed + k`, so a single CSV row can be reproduced from
//! its `seed` column alone.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::chaos::{phi_m, ChaosExpansion};
use crate::decoupling::{CaseTag, DecouplingInstance};
use crate::error::{Error, Result};
use crate::gaussian::{NormalStream, RngSpec};
use crate::hermite::hermite_coeffs;
use crate::malliavin::{
    derivative, derivative_monomial, derivative_n, divergence, ibp_check, ibp_check_vector, lp_norms_mc,
    sobolev_norm_operator, GammaMode, Observable,
};
use crate::mc::{EstimateResult, McConfig};
use crate::multiindex::{factorial_f64, CountVector};
use crate::ou::{
    apply_c, apply_l, apply_linv, apply_p, apply_q, apply_q_closed, commutation_check, dirichlet_check, represent,
    resolvent, rs_operators, tail_bound_check,
};
use crate::quadrature::SubordinatorQuad;
use crate::random::{
    instance_stream, random_chaos, random_masses, random_operator_valued, random_polynomial,
    random_symmetric_operator, random_tetra_function,
};
use crate::space::{BanachSpace, Norm};

/// RNG substream for pathwise norm estimates made by the suites.
pub const PROBE_STREAM: u64 = 0xc0de;

/// Relative tolerance of every exact identity.
pub const EXACT_TOL: f64 = 1e-10;

pub const MAX_M: usize = 6;
pub const MAX_N: usize = 16;
pub const MAX_D: usize = 8;
pub const MAX_DEGREE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    HermiteTable,
    Decoupling,
    WienerIto,
    Kahane,
    ItoIsometry,
    MalliavinIbp,
    Meyer,
    Subordination,
    Spectrum,
    Represent,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::HermiteTable,
        Suite::Decoupling,
        Suite::WienerIto,
        Suite::Kahane,
        Suite::ItoIsometry,
        Suite::MalliavinIbp,
        Suite::Meyer,
        Suite::Subordination,
        Suite::Spectrum,
        Suite::Represent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::HermiteTable => "hermite-table",
            Suite::Decoupling => "decoupling",
            Suite::WienerIto => "wiener-ito",
            Suite::Kahane => "kahane",
            Suite::ItoIsometry => "ito-isometry",
            Suite::MalliavinIbp => "malliavin-ibp",
            Suite::Meyer => "meyer",
            Suite::Subordination => "subordination",
            Suite::Spectrum => "spectrum",
            Suite::Represent => "represent",
        }
    }

    /// Whether the suite draws Monte Carlo samples.
    pub fn uses_mc(&self) -> bool {
        matches!(
            self,
            Suite::Decoupling | Suite::WienerIto | Suite::Kahane | Suite::ItoIsometry | Suite::MalliavinIbp | Suite::Meyer
        )
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            Error::Parse(format!("unknown suite {s:?} (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?} (expected csv or json)"))),
        }
    }
}

/// One experiment. Fields missing from a config file take the defaults below.
///
/// | field | default |
/// |---|---|
/// | `m` | 2 |
/// | `n` | 4 |
/// | `d` | 2 |
/// | `norm` | `l2` |
/// | `p` | `[1, 2, 4]` |
/// | `samples` | 100000 |
/// | `batches` | 16 |
/// | `seed` | 0 |
/// | `instances` | 10 |
/// | `inner_draws` | 16 |
/// | `case` | `symmetric` |
/// | `max_degree` | 6 |
/// | `lambda` | 2.5 |
/// | `t` | `[0.05, 0.1, 0.5, 1, 2, 5]` |
/// | `survival` | `[]` |
/// | `format` | `csv` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub suite: Suite,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::d")]
    pub d: usize,
    #[serde(default = "defaults::norm")]
    pub norm: Norm,
    #[serde(default = "defaults::p")]
    pub p: Vec<f64>,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default = "defaults::batches")]
    pub batches: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::instances")]
    pub instances: usize,
    #[serde(default = "defaults::inner_draws")]
    pub inner_draws: usize,
    #[serde(default = "defaults::case")]
    pub case: CaseTag,
    #[serde(default = "defaults::max_degree")]
    pub max_degree: usize,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    #[serde(default = "defaults::t")]
    pub t: Vec<f64>,
    /// Thresholds of the decoupling survival curve; empty disables it.
    #[serde(default)]
    pub survival: Vec<f64>,
    /// Output location; not part of the echoed spec.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

mod defaults {
    use super::*;

    pub fn m() -> usize {
        2
    }
    pub fn n() -> usize {
        4
    }
    pub fn d() -> usize {
        2
    }
    pub fn norm() -> Norm {
        Norm::L2
    }
    pub fn p() -> Vec<f64> {
        vec![1.0, 2.0, 4.0]
    }
    pub fn samples() -> usize {
        100_000
    }
    pub fn batches() -> usize {
        16
    }
    pub fn instances() -> usize {
        10
    }
    pub fn inner_draws() -> usize {
        16
    }
    pub fn case() -> CaseTag {
        CaseTag::Symmetric
    }
    pub fn max_degree() -> usize {
        6
    }
    pub fn lambda() -> f64 {
        2.5
    }
    pub fn t() -> Vec<f64> {
        vec![0.05, 0.1, 0.5, 1.0, 2.0, 5.0]
    }
}

impl ExperimentSpec {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            m: defaults::m(),
            n: defaults::n(),
            d: defaults::d(),
            norm: defaults::norm(),
            p: defaults::p(),
            samples: defaults::samples(),
            batches: defaults::batches(),
            seed: 0,
            instances: defaults::instances(),
            inner_draws: defaults::inner_draws(),
            case: defaults::case(),
            max_degree: defaults::max_degree(),
            lambda: defaults::lambda(),
            t: defaults::t(),
            survival: Vec::new(),
            out: None,
            format: Format::Csv,
        }
    }

    /// Parses a JSON config, then validates it.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Like [`Self::from_json_str`], with `overrides` replacing top-level fields first.
    pub fn from_json_with_overrides(s: &str, overrides: Map<String, Value>) -> Result<Self> {
        let mut value: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Parse("config must be a JSON object".into()))?;
        obj.extend(overrides);
        let spec: Self = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidArgument(format!("{field}: {msg}")));
        if !(1..=MAX_M).contains(&self.m) {
            return bad("m", format!("must lie in 1..={MAX_M}, got {}", self.m));
        }
        if !(1..=MAX_N).contains(&self.n) {
            return bad("n", format!("must lie in 1..={MAX_N}, got {}", self.n));
        }
        if !(1..=MAX_D).contains(&self.d) {
            return bad("d", format!("must lie in 1..={MAX_D}, got {}", self.d));
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p >= 1.0) || !p.is_finite()) {
            return bad("p", format!("needs finite moments >= 1, got {:?}", self.p));
        }
        if self.instances == 0 || self.instances > 10_000 {
            return bad("instances", format!("must lie in 1..=10000, got {}", self.instances));
        }
        if self.max_degree > MAX_DEGREE {
            return bad("max_degree", format!("must be <= {MAX_DEGREE}, got {}", self.max_degree));
        }
        if !self.lambda.is_finite() {
            return bad("lambda", "must be finite".into());
        }
        if self.t.is_empty() || self.t.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return bad("t", format!("needs positive finite times, got {:?}", self.t));
        }
        if self.survival.iter().any(|s| !s.is_finite()) {
            return bad("survival", "thresholds must be finite".into());
        }
        if self.suite.uses_mc() {
            self.mc(0).validate().map_err(|e| Error::InvalidArgument(format!("samples/batches: {e}")))?;
        }
        Ok(())
    }

    pub fn space(&self) -> BanachSpace {
        BanachSpace {
            dim: self.d,
            norm: self.norm.clone(),
        }
    }

    /// Monte Carlo settings of instance `k`.
    pub fn mc(&self, k: usize) -> McConfig {
        McConfig {
            samples: self.samples,
            batches: self.batches,
            seed: self.instance_seed(k),
            confidence: 3.0,
            inner_draws: self.inner_draws,
        }
    }

    pub fn instance_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }

    /// RNG of the `sub`-th random object of instance `k`.
    pub fn instance_rng(&self, k: usize, sub: u64) -> RngSpec {
        RngSpec::new(self.instance_seed(k), instance_stream(sub))
    }

    /// The effective spec as compact JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Num(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Str(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_num(*v),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::from(s.as_str()),
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or large values.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(name: &str, columns: &[S]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Position of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of one column.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r[k] {
                Cell::Num(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                Cell::Str(_) => None,
            })
            .collect()
    }
}

/// An acceptance contract evaluated inside a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Aggregates many individual comparisons into one [`Check`].
struct Tally {
    name: String,
    total: usize,
    failed: usize,
    worst: f64,
    what: &'static str,
}

impl Tally {
    fn new(name: impl Into<String>, what: &'static str) -> Self {
        Self {
            name: name.into(),
            total: 0,
            failed: 0,
            worst: f64::NAN,
            what,
        }
    }

    /// Records one comparison; `badness` is larger for worse outcomes.
    fn record(&mut self, ok: bool, badness: f64) {
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        if self.worst.is_nan() || badness > self.worst {
            self.worst = badness;
        }
    }

    fn finish(self) -> Option<Check> {
        (self.total > 0).then(|| Check {
            passed: self.failed == 0,
            detail: format!(
                "{}/{} passed, worst {} = {}",
                self.total - self.failed,
                self.total,
                self.what,
                fmt_num(self.worst)
            ),
            name: self.name,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// CSV of table `k`: spec and check comments, header, rows.
    pub fn to_csv(&self, k: usize) -> String {
        let t = &self.tables[k];
        let mut out = format!("# spec: {}\n", self.spec.to_json());
        if k == 0 {
            for c in &self.checks {
                out.push_str(&format!(
                    "# check {}: {} ({})\n",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.detail
                ));
            }
        }
        out.push_str(&t.columns.join(","));
        out.push('\n');
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// All tables, the checks and the effective `ExperimentSpec` in one JSON document.
    pub fn to_json(&self) -> String {
        let tables: Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(t.columns.iter().zip(r).map(|(c, v)| (c.clone(), v.json())).collect())
                    })
                    .collect();
                (t.name.clone(), Value::Array(rows))
            })
            .collect();
        let doc = serde_json::json!({
            "spec": serde_json::to_value(&self.spec).expect("spec serializes"),
            "passed": self.passed(),
            "checks": self.checks,
            "tables": tables,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let (tables, checks) = match spec.suite {
        Suite::HermiteTable => hermite_table(spec)?,
        Suite::Decoupling => decoupling(spec)?,
        Suite::WienerIto => wiener_ito(spec)?,
        Suite::Kahane => kahane(spec)?,
        Suite::ItoIsometry => ito_isometry(spec)?,
        Suite::MalliavinIbp => malliavin_ibp(spec)?,
        Suite::Meyer => meyer(spec)?,
        Suite::Subordination => subordination(spec)?,
        Suite::Spectrum => spectrum(spec)?,
        Suite::Represent => represent_suite(spec)?,
    };
    Ok(Report {
        spec: spec.clone(),
        tables,
        checks: checks.into_iter().flatten().collect(),
    })
}

type SuiteOutput = (Vec<Table>, Vec<Option<Check>>);

fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// `|a - b| <= EXACT_TOL * max(1, |a|, |b|)`, returning the scaled deviation too.
fn exact_close(a: f64, b: f64) -> (bool, f64) {
    let dev = (a - b).abs() / scale_of(&[a, b]);
    (dev <= EXACT_TOL, dev)
}

fn coeff_scale(f: &ChaosExpansion) -> f64 {
    f.terms().values().flatten().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Largest deviation from `[lo, hi]` in log scale; zero inside.
fn bracket_excess(r: f64, lo: f64, hi: f64) -> (bool, f64) {
    let ok = r >= lo && r <= hi;
    let excess = if r.is_nan() || r <= 0.0 {
        f64::INFINITY
    } else {
        (lo / r).max(r / hi).max(1.0).ln()
    };
    (ok, excess)
}

fn normal_vector(rng: RngSpec, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    NormalStream::new(rng).fill(&mut h);
    h
}

/// `E[Psi_c Psi_c']` by expanding both sides into monomials and applying the
/// Gaussian moments `E g^{2k} = (2k - 1)!!`; returns the largest deviation from
/// the identity over all count vectors of order `<= max_order` in `n` variables.
pub fn psi_gram_deviation(max_order: usize, n: usize) -> f64 {
    let moment = |k: usize| -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|j| j as f64).product()
        }
    };
    let h: Vec<Vec<f64>> = (0..=max_order).map(|k| hermite_coeffs(k).coeffs().to_vec()).collect();
    // univariate E[H_a H_b] from monomial coefficients
    let mut uni = vec![vec![0.0; max_order + 1]; max_order + 1];
    for a in 0..=max_order {
        for b in 0..=max_order {
            let mut s = 0.0;
            for (k, x) in h[a].iter().enumerate() {
                for (l, y) in h[b].iter().enumerate() {
                    s += x * y * moment(k + l);
                }
            }
            uni[a][b] = s;
        }
    }
    let keys = CountVector::all_up_to(max_order, n);
    let mut worst = 0.0f64;
    for c in &keys {
        for e in &keys {
            let mut v = (c.factorial_f64() * e.factorial_f64()).sqrt();
            for j in 1..=n {
                v *= uni[c.get(j)][e.get(j)];
            }
            let target = if c == e { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

fn hermite_table(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let deg = spec.max_degree;
    let names: Vec<String> = std::iter::once("degree".to_string())
        .chain((0..=deg).map(|k| format!("c{k}")))
        .collect();
    let mut table = Table::new("hermite", &names);
    let rows: Vec<Vec<f64>> = (0..=deg)
        .map(|k| {
            let mut c = hermite_coeffs(k).coeffs().to_vec();
            c.resize(deg + 1, 0.0);
            c
        })
        .collect();
    let mut rec = Tally::new("recurrence", "coefficient deviation");
    for k in 1..deg {
        // (k+1) H_{k+1} = x H_k - H_{k-1}
        for j in 0..=deg {
            let lhs = (k + 1) as f64 * rows[k + 1][j];
            let rhs = if j > 0 { rows[k][j - 1] } else { 0.0 } - rows[k - 1][j];
            let dev = (lhs - rhs).abs();
            rec.record(dev <= 1e-14, dev);
        }
    }
    for (k, c) in rows.into_iter().enumerate() {
        table.push(std::iter::once(Cell::from(k)).chain(c.into_iter().map(Cell::from)).collect());
    }
    let gram_order = deg.min(6);
    let gram = psi_gram_deviation(gram_order, 4.min(spec.n));
    let ortho = Check {
        name: "orthonormality".into(),
        passed: gram <= EXACT_TOL,
        detail: format!("max |E[Psi_c Psi_c'] - delta| = {} up to order {gram_order}", fmt_num(gram)),
    };
    Ok((vec![table], vec![rec.finish(), Some(ortho)]))
}

fn decoupling(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let hilbert = space.norm.is_hilbert();
    let mut table = Table::new(
        "decoupling",
        &[
            "case", "m", "n", "d", "norm", "p", "samples", "seed", "coupled", "coupled_se", "decoupled", "decoupled_se",
            "ratio",
        ],
    );
    let mut survival = Table::new("survival", &["case", "seed", "threshold", "coupled", "decoupled"]);
    let mut identity = Tally::new("exact_l2_identity", "relative deviation");
    let mut agree = Tally::new("p2_ratio_within_3se", "deviation in se");
    let mut bracket = Tally::new("ratio_bracket_[0.1,10]", "log excess");
    for k in 0..spec.instances {
        let inst = DecouplingInstance::random(spec.case, spec.m, spec.n, &space, spec.instance_rng(k, 0))?;
        let mc = spec.mc(k);
        if hilbert {
            let (a, b) = inst.exact_second_moments();
            let (ok, dev) = exact_close(a, b);
            identity.record(ok, dev);
        }
        for row in inst.ratios(&spec.p, &mc)? {
            table.push(vec![
                spec.case.to_string().into(),
                spec.m.into(),
                spec.n.into(),
                spec.d.into(),
                space.norm.tag().into(),
                row.p.into(),
                spec.samples.into(),
                mc.seed.into(),
                row.coupled.estimate.into(),
                row.coupled.stderr.into(),
                row.decoupled.estimate.into(),
                row.decoupled.stderr.into(),
                row.ratio.into(),
            ]);
            if hilbert && row.p == 2.0 {
                let se = row.coupled.stderr.hypot(row.decoupled.stderr);
                let dev = (row.coupled.estimate - row.decoupled.estimate).abs();
                agree.record(row.coupled.agrees_with(&row.decoupled, 3.0), if se > 0.0 { dev / se } else { dev });
            } else {
                let (ok, ex) = bracket_excess(row.ratio, 0.1, 10.0);
                bracket.record(ok, ex);
            }
        }
        if !spec.survival.is_empty() {
            for (th, pc, pd) in inst.survival(&spec.survival, &mc)? {
                survival.push(vec![
                    spec.case.to_string().into(),
                    mc.seed.into(),
                    th.into(),
                    pc.into(),
                    pd.into(),
                ]);
            }
        }
    }
    let mut tables = vec![table];
    if !spec.survival.is_empty() {
        tables.push(survival);
    }
    Ok((tables, vec![identity.finish(), agree.finish(), bracket.finish()]))
}

const COMPARISON_COLUMNS: [&str; 14] = [
    "instance", "quantity", "m", "n", "d", "norm", "p", "samples", "seed", "lhs", "lhs_se", "rhs", "rhs_se", "ratio",
];

/// Rows of the shared `lhs` versus `rhs` layout.
struct Comparisons<'a> {
    spec: &'a ExperimentSpec,
    table: Table,
}

impl<'a> Comparisons<'a> {
    fn new(spec: &'a ExperimentSpec, name: &str) -> Self {
        Self {
            spec,
            table: Table::new(name, &COMPARISON_COLUMNS),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, k: usize, quantity: &str, m: usize, p: f64, samples: usize, lhs: EstimateResult, rhs: EstimateResult) {
        let ratio = if lhs.estimate == 0.0 && rhs.estimate == 0.0 {
            1.0
        } else {
            lhs.estimate / rhs.estimate
        };
        self.table.push(vec![
            k.into(),
            quantity.into(),
            m.into(),
            self.spec.n.into(),
            self.spec.d.into(),
            self.spec.norm.tag().into(),
            p.into(),
            samples.into(),
            self.spec.instance_seed(k).into(),
            lhs.estimate.into(),
            lhs.stderr.into(),
            rhs.estimate.into(),
            rhs.stderr.into(),
            ratio.into(),
        ]);
    }

    fn exact(&mut self, k: usize, quantity: &str, m: usize, lhs: f64, rhs: f64) {
        let seed = self.spec.instance_seed(k);
        self.push(k, quantity, m, 2.0, 0, EstimateResult::exact(lhs, 0, seed), EstimateResult::exact(rhs, 0, seed));
    }
}

fn wiener_ito(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let hilbert = space.norm.is_hilbert();
    let mut rows = Comparisons::new(spec, "wiener-ito");
    let mut iso = Tally::new("l2_isometry", "relative deviation");
    let mut agree = Tally::new("p2_mc_within_3se", "deviation in se");
    let mut bracket = Tally::new("isometry_bracket_[0.1,10]", "log excess");
    for k in 0..spec.instances {
        let t = random_symmetric_operator(spec.m, spec.n, &space, spec.instance_rng(k, 0))?;
        let f = phi_m(&t, true)?;
        let mc = spec.mc(k);
        if hilbert {
            let (a, b) = (f.l2_norm_exact()?, t.gamma_norm_exact_hilbert()?);
            let (ok, dev) = exact_close(a, b);
            iso.record(ok, dev);
            rows.exact(k, "phi_norm_vs_gamma_exact", spec.m, a, b);
        }
        let lhs = lp_norms_mc(&[Observable::Chaos(&f)], &spec.p, &mc, PROBE_STREAM)?.remove(0);
        let rhs = t.gamma_norms_mc(&spec.p, &mc)?;
        for ((&p, l), r) in spec.p.iter().zip(lhs).zip(rhs) {
            rows.push(k, "phi_norm_vs_gamma_mc", spec.m, p, spec.samples, l, r);
            if hilbert && p == 2.0 {
                let se = l.stderr.hypot(r.stderr);
                agree.record(l.agrees_with(&r, 3.0), (l.estimate - r.estimate).abs() / se.max(f64::MIN_POSITIVE));
            } else {
                let (ok, ex) = bracket_excess(l.estimate / r.estimate, 0.1, 10.0);
                bracket.record(ok, ex);
            }
        }
    }
    Ok((vec![rows.table], vec![iso.finish(), agree.finish(), bracket.finish()]))
}

fn kahane(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let mut rows = Comparisons::new(spec, "kahane");
    let mut bracket = Tally::new("lp_over_l2_bracket", "log excess");
    let mut ps = spec.p.clone();
    if !ps.contains(&2.0) {
        ps.push(2.0);
    }
    let two = ps.iter().position(|&p| p == 2.0).expect("2 is present");
    for k in 0..spec.instances {
        let f = random_chaos(spec.n, &space, &[spec.m], spec.instance_rng(k, 0))?;
        let est = lp_norms_mc(&[Observable::Chaos(&f)], &ps, &spec.mc(k), PROBE_STREAM)?.remove(0);
        for &p in &spec.p {
            let i = ps.iter().position(|&q| q == p).expect("p is present");
            rows.push(k, "lp_over_l2", spec.m, p, spec.samples, est[i], est[two]);
            let r = est[i].estimate / est[two].estimate;
            // power means are monotone in p, also for the empirical measure
            let (lo, hi) = if p >= 2.0 { (1.0 - 1e-12, 3.0) } else { (1.0 / 3.0, 1.0 + 1e-12) };
            let (ok, ex) = bracket_excess(r, lo, hi);
            bracket.record(ok, ex);
        }
    }
    Ok((vec![rows.table], vec![bracket.finish()]))
}

fn ito_isometry(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let hilbert = space.norm.is_hilbert();
    let mut rows = Comparisons::new(spec, "ito-isometry");
    let mut iso = Tally::new("ito_isometry", "relative deviation");
    let mut sym = Tally::new("symmetrization_invariance", "coefficient deviation");
    let mut bracket = Tally::new("banach_isometry_bracket_[0.1,10]", "log excess");
    for k in 0..spec.instances {
        let masses = random_masses(spec.n, spec.instance_rng(k, 1))?;
        let f = random_tetra_function(spec.m, spec.n, &space, spec.instance_rng(k, 0))?;
        let fs = f.symmetrize();
        let i_f = f.integrate(&masses)?;
        let i_fs = fs.integrate(&masses)?;
        let dev = i_f.max_abs_diff(&i_fs) / coeff_scale(&i_f);
        sym.record(dev <= EXACT_TOL, dev);
        if hilbert {
            let lhs = i_f.l2_norm_squared();
            let rhs = factorial_f64(spec.m) * fs.l2_norm_squared(&masses)?;
            let (ok, dev) = exact_close(lhs, rhs);
            iso.record(ok, dev);
            rows.exact(k, "second_moment_vs_mfact_l2", spec.m, lhs, rhs);
        }
        let mc = spec.mc(k);
        let lhs = lp_norms_mc(&[Observable::Chaos(&i_f)], &spec.p, &mc, PROBE_STREAM)?.remove(0);
        let rhs = fs.to_operator(&masses)?.gamma_norms_mc(&spec.p, &mc)?;
        for ((&p, l), r) in spec.p.iter().zip(lhs).zip(rhs) {
            rows.push(k, "integral_norm_vs_gamma_mc", spec.m, p, spec.samples, l, r);
            if !hilbert {
                let (ok, ex) = bracket_excess(l.estimate / r.estimate, 0.1, 10.0);
                bracket.record(ok, ex);
            }
        }
    }
    Ok((vec![rows.table], vec![iso.finish(), sym.finish(), bracket.finish()]))
}

fn malliavin_ibp(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let hilbert = space.norm.is_hilbert();
    let n = spec.n;
    let m = spec.m;
    let mut rows = Comparisons::new(spec, "malliavin-ibp");
    let mut ibp = Tally::new("integration_by_parts", "relative deviation");
    let mut product = Tally::new("product_rule", "coefficient deviation");
    let mut routes = Tally::new("shift_vs_monomial_derivative", "coefficient deviation");
    let mut shift = Tally::new("order_shift", "misplaced orders");
    let mut number = Tally::new("number_operator", "coefficient deviation");
    let mut norm_eq = Tally::new("derivative_norm_sqrt_m", "relative deviation");
    let mut dirichlet = Tally::new("dirichlet_form", "relative deviation");
    let mut bracket = Tally::new("derivative_bracket", "log excess");
    let mut agree = Tally::new("derivative_p2_within_3se", "deviation in se");
    for k in 0..spec.instances {
        let f = random_polynomial(n, &space, m, spec.instance_rng(k, 0))?;
        let g = random_polynomial(n, &space, m, spec.instance_rng(k, 1))?;
        let phi = random_polynomial(n, &BanachSpace::scalar(), m, spec.instance_rng(k, 2))?;
        let h = normal_vector(spec.instance_rng(k, 3), n);

        let (a, b) = ibp_check(&f.component(0)?, &h)?;
        let (ok, dev) = exact_close(a, b);
        ibp.record(ok, dev);
        rows.exact(k, "ibp_scalar", m, a, b);
        let (a, b) = ibp_check_vector(&f, &g, &h)?;
        let (ok, dev) = exact_close(a, b);
        ibp.record(ok, dev);
        rows.exact(k, "ibp_vector", m, a, b);

        // D(phi F) = (D phi) F + phi DF, slot by slot
        let d_prod = derivative(&f.mul_scalar(&phi)?);
        let (d_phi, d_f) = (derivative(&phi), derivative(&f));
        let mut worst = 0.0f64;
        for j in 1..=n {
            let rhs = f.mul_scalar(&d_phi.slot(j)?)?.add(&d_f.slot(j)?.mul_scalar(&phi)?)?;
            worst = worst.max(d_prod.slot(j)?.max_abs_diff(&rhs));
        }
        let scale = coeff_scale(&f.mul_scalar(&phi)?);
        product.record(worst / scale <= EXACT_TOL, worst / scale);

        let dev = d_f.max_abs_diff(&derivative_monomial(&f)?) / coeff_scale(&f);
        routes.record(dev <= EXACT_TOL, dev);

        let (a, b) = dirichlet_check(&f, &g)?;
        let (ok, dev) = exact_close(a, b);
        dirichlet.record(ok, dev);
        rows.exact(k, "dirichlet", m, a, b);

        let fm = f.project(m);
        let dfm = derivative(&fm);
        let wrong = dfm.terms().keys().filter(|c| c.order() + 1 != m).count();
        shift.record(wrong == 0, wrong as f64);
        let dev = divergence(&dfm)?.max_abs_diff(&fm.scale(m as f64)) / coeff_scale(&fm);
        number.record(dev <= EXACT_TOL, dev);
        if hilbert {
            let (a, b) = (dfm.l2_norm_exact()?, (m as f64).sqrt() * fm.l2_norm_exact()?);
            let (ok, dev) = exact_close(a, b);
            norm_eq.record(ok, dev);
            rows.exact(k, "derivative_norm_vs_sqrt_m", m, a, b);
        }
        let est = lp_norms_mc(
            &[Observable::Operator(&dfm, GammaMode::InnerMean), Observable::Chaos(&fm)],
            &spec.p,
            &spec.mc(k),
            PROBE_STREAM,
        )?;
        let sm = (m as f64).sqrt();
        for (i, &p) in spec.p.iter().enumerate() {
            let (l, r) = (est[0][i], est[1][i]);
            rows.push(k, "derivative_norm_vs_norm_mc", m, p, spec.samples, l, r);
            if hilbert && p == 2.0 {
                // ||DF||_2 = sqrt(m) ||F||_2 holds for the exact norms; compare with sqrt(m) times the estimate
                let target = sm * r.estimate;
                let se = l.stderr.hypot(sm * r.stderr);
                agree.record((l.estimate - target).abs() <= 3.0 * se, (l.estimate - target).abs() / se);
            } else {
                let (ok, ex) = bracket_excess(l.estimate / r.estimate, sm / 10.0, 10.0 * sm);
                bracket.record(ok, ex);
            }
        }
    }
    Ok((
        vec![rows.table],
        vec![
            ibp.finish(),
            product.finish(),
            routes.finish(),
            shift.finish(),
            number.finish(),
            norm_eq.finish(),
            dirichlet.finish(),
            agree.finish(),
            bracket.finish(),
        ],
    ))
}

fn meyer(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let hilbert = space.norm.is_hilbert();
    let n = spec.n;
    let m = spec.m;
    let mut rows = Comparisons::new(spec, "meyer");
    let mut exact = Tally::new("c_vs_d_l2_equality", "relative deviation");
    let mut bracket = Tally::new("meyer_bracket_[0.05,20]", "log excess");
    let mut div = Tally::new("divergence_bound_20", "ratio");
    let mut chain = Tally::new("reduction_chain_bracket_[0.05,20]", "log excess");
    let orders: Vec<usize> = (1..=m).collect();
    for k in 0..spec.instances {
        let mc = spec.mc(k);
        let f = random_chaos(n, &space, &orders, spec.instance_rng(k, 0))?;
        if hilbert {
            let (a, b) = (apply_c(&f).l2_norm_exact()?, derivative(&f).l2_norm_exact()?);
            let (ok, dev) = exact_close(a, b);
            exact.record(ok, dev);
            rows.exact(k, "c_norm_vs_d_norm_l2", m, a, b);
        }
        // ||C^j F||_p against ||D^j F||_p for j = 1, 2
        let c1 = apply_c(&f);
        let c2 = apply_c(&c1);
        let d1 = derivative(&f);
        let mut items = vec![Observable::Chaos(&c1), Observable::Operator(&d1, GammaMode::InnerMean)];
        let d2;
        if m >= 2 {
            d2 = derivative_n(&f, 2)?;
            items.push(Observable::Chaos(&c2));
            items.push(Observable::Operator(&d2, GammaMode::InnerMean));
        }
        let est = lp_norms_mc(&items, &spec.p, &mc, PROBE_STREAM)?;
        for j in 0..items.len() / 2 {
            for (i, &p) in spec.p.iter().enumerate() {
                let (l, r) = (est[2 * j][i], est[2 * j + 1][i]);
                rows.push(k, &format!("c{}_vs_d{}", j + 1, j + 1), m, p, spec.samples, l, r);
                let (ok, ex) = bracket_excess(l.estimate / r.estimate, 0.05, 20.0);
                bracket.record(ok, ex);
            }
        }

        let u = random_operator_valued(n, &space, m.min(3), spec.instance_rng(k, 1))?;
        let du = divergence(&u)?;
        let lhs = lp_norms_mc(&[Observable::Chaos(&du)], &spec.p, &mc, PROBE_STREAM)?.remove(0);
        for (i, &p) in spec.p.iter().enumerate() {
            let rhs = sobolev_norm_operator(&u, p, &mc)?;
            rows.push(k, "divergence_vs_sobolev", m, p, spec.samples, lhs[i], rhs);
            let r = lhs[i].estimate / rhs.estimate;
            div.record(r <= 20.0, r);
        }

        let inst = DecouplingInstance::random(CaseTag::Symmetric, m, n, &space, spec.instance_rng(k, 2))?;
        let q = inst.meyer_chain(&spec.p, &mc)?;
        let dec = inst.coefficients().gamma_norms_mc(&spec.p, &mc)?;
        for (i, &p) in spec.p.iter().enumerate() {
            for (step, qk) in q.iter().enumerate() {
                rows.push(k, &format!("chain_q{step}_vs_decoupled"), m, p, spec.samples, qk[i], dec[i]);
                let (ok, ex) = bracket_excess(qk[i].estimate / dec[i].estimate, 0.05, 20.0);
                chain.record(ok, ex);
            }
        }
    }
    Ok((
        vec![rows.table],
        vec![exact.finish(), bracket.finish(), div.finish(), chain.finish()],
    ))
}

fn subordination(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let quad = SubordinatorQuad::default();
    let mut table = Table::new(
        "subordination",
        &["m", "t", "closed", "quadrature", "rel_error", "truncation_bound", "panels"],
    );
    let mut scalar = Tally::new("quadrature_rel_1e-6", "relative error");
    for m in 0..=64usize {
        for &t in &spec.t {
            let r = quad.integrate(t, m)?;
            let closed = (-(m as f64).sqrt() * t).exp();
            let rel = (r.value - closed).abs() / closed;
            scalar.record(rel <= 1e-6, rel);
            table.push(vec![
                m.into(),
                t.into(),
                closed.into(),
                r.value.into(),
                rel.into(),
                r.truncation_bound.into(),
                r.panels.into(),
            ]);
        }
    }
    let mut op = Tally::new("operator_closed_vs_numeric", "coefficient deviation");
    let mut law = Tally::new("semigroup_law", "coefficient deviation");
    let space = spec.space();
    for k in 0..spec.instances {
        let f = random_polynomial(spec.n, &space, spec.m, spec.instance_rng(k, 0))?;
        let scale = coeff_scale(&f);
        for &t in &spec.t {
            let (closed, numeric) = apply_q(t, &f, &quad)?;
            let dev = closed.max_abs_diff(&numeric) / scale;
            op.record(dev <= 1e-6, dev);
            let two = apply_q_closed(t, &apply_q_closed(0.5, &f)?)?;
            let dev = two.max_abs_diff(&apply_q_closed(t + 0.5, &f)?) / scale;
            law.record(dev <= EXACT_TOL, dev);
            let two = apply_p(t, &apply_p(0.5, &f)?)?;
            let dev = two.max_abs_diff(&apply_p(t + 0.5, &f)?) / scale;
            law.record(dev <= EXACT_TOL, dev);
        }
    }
    Ok((vec![table], vec![scalar.finish(), op.finish(), law.finish()]))
}

/// Rows of the shared residual layout.
fn residual_table(name: &str) -> Table {
    Table::new(name, &["instance", "seed", "check", "residual", "tolerance", "status"])
}

fn push_residual(table: &mut Table, tally: &mut Tally, k: usize, seed: u64, check: &str, residual: f64, tol: f64) {
    let ok = residual <= tol;
    tally.record(ok, residual / tol * EXACT_TOL);
    table.push(vec![
        k.into(),
        seed.into(),
        check.into(),
        residual.into(),
        tol.into(),
        if ok { "PASS" } else { "FAIL" }.into(),
    ]);
}

fn spectrum(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let lambda = spec.lambda;
    if lambda.fract() == 0.0 && lambda >= 0.0 && lambda <= spec.m as f64 {
        return Err(Error::InvalidArgument(format!(
            "lambda: {lambda} is an eigenvalue of -L on polynomials of order <= {}",
            spec.m
        )));
    }
    let space = spec.space();
    let mut table = residual_table("spectrum");
    let mut eig = Tally::new("eigen_relation", "scaled residual");
    let mut res = Tally::new("resolvent_identity", "scaled residual");
    let mut tail = Tally::new("tail_bound", "scaled residual");
    let mut comm = Tally::new("commutation", "scaled residual");
    let mut dir = Tally::new("dirichlet_form", "scaled residual");
    for k in 0..spec.instances {
        let seed = spec.instance_seed(k);
        let f = random_polynomial(spec.n, &space, spec.m, spec.instance_rng(k, 0))?;
        let tol = EXACT_TOL * coeff_scale(&f);
        for order in 0..=spec.m {
            let fm = f.project(order);
            let r = apply_l(&fm).add(&fm.scale(order as f64))?.max_abs_diff(&ChaosExpansion::zero(spec.n, space.clone()));
            push_residual(&mut table, &mut eig, k, seed, &format!("(m+L)J_mF, m={order}"), r, tol);
        }
        let rf = resolvent(lambda, &f)?;
        let r = rf.scale(lambda).add(&apply_l(&rf))?.max_abs_diff(&f);
        push_residual(&mut table, &mut res, k, seed, "(lambda+L)R_lambda F - F", r, tol);
        let lf = f.scale(lambda).add(&apply_l(&f))?;
        let r = resolvent(lambda, &lf)?.max_abs_diff(&f);
        push_residual(&mut table, &mut res, k, seed, "R_lambda(lambda+L)F - F", r, tol);

        let f0 = f.component(0)?;
        for &t in &spec.t {
            for order in 0..=spec.m + 1 {
                let (lhs, rhs) = tail_bound_check(t, order, &f0)?;
                let r = (lhs - rhs).max(0.0);
                push_residual(&mut table, &mut tail, k, seed, &format!("tail t={t} N={order}"), r, EXACT_TOL * rhs.max(1.0));
            }
        }
        let c = commutation_check(spec.t[0], &f)?;
        push_residual(&mut table, &mut comm, k, seed, "D vs OU commutation", c.max(), tol);
        let g = random_polynomial(spec.n, &space, spec.m, spec.instance_rng(k, 1))?;
        let (a, b) = dirichlet_check(&f, &g)?;
        push_residual(&mut table, &mut dir, k, seed, "E<(-L)F,G> - E[DF,DG]", (a - b).abs(), EXACT_TOL * scale_of(&[a, b]));
    }
    Ok((
        vec![table],
        vec![eig.finish(), res.finish(), tail.finish(), comm.finish(), dir.finish()],
    ))
}

fn represent_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let space = spec.space();
    let mut table = residual_table("represent");
    let mut rep = Tally::new("representation", "scaled residual");
    let mut rs = Tally::new("r_s_inverse", "scaled residual");
    let mut guard = Tally::new("nonzero_mean_rejected", "unexpected results");
    for k in 0..spec.instances {
        let seed = spec.instance_seed(k);
        let f = random_polynomial(spec.n, &space, spec.m, spec.instance_rng(k, 0))?;
        let tol = EXACT_TOL * coeff_scale(&f);
        let (mean, u) = represent(&f)?;
        let rebuilt = ChaosExpansion::constant(spec.n, space.clone(), mean)?.add(&divergence(&u)?)?;
        push_residual(&mut table, &mut rep, k, seed, "E F + delta(D(-L)^{-1}(F - E F)) - F", rebuilt.max_abs_diff(&f), tol);
        let centered = f.map_orders(|m| if m == 0 { 0.0 } else { 1.0 });
        let (_, recovered) = rs_operators(&f)?;
        push_residual(&mut table, &mut rs, k, seed, "S R F - (F - E F)", recovered.max_abs_diff(&centered), tol);
        let rejected = matches!(apply_linv(&f), Err(Error::NonZeroMean)) || f.project(0).is_zero();
        guard.record(rejected, if rejected { 0.0 } else { 1.0 });
    }
    Ok((vec![table], vec![rep.finish(), rs.finish(), guard.finish()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let s = ExperimentSpec::from_json_str(r#"{"suite": "spectrum"}"#).unwrap();
        assert_eq!(s, ExperimentSpec::new(Suite::Spectrum));
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentSpec::from_json_str(r#"{"suite": "kahane", "sampels": 5}"#).unwrap_err();
        assert!(e.to_string().contains("sampels"), "{e}");
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut o = Map::new();
        o.insert("seed".into(), Value::from(11));
        let s = ExperimentSpec::from_json_with_overrides(r#"{"suite": "kahane", "seed": 3}"#, o).unwrap();
        assert_eq!(s.seed, 11);
        assert!(s.to_json().contains("\"seed\":11"));
    }

    #[test]
    fn ranges_are_enforced() {
        let mut s = ExperimentSpec::new(Suite::Decoupling);
        s.m = 7;
        assert!(matches!(s.validate(), Err(Error::InvalidArgument(ref m)) if m.starts_with("m:")));
        s.m = 2;
        s.samples = 10;
        assert!(s.validate().is_err());
        s.suite = Suite::HermiteTable;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn hermite_table_rows() {
        let mut s = ExperimentSpec::new(Suite::HermiteTable);
        s.max_degree = 4;
        let r = run(&s).unwrap();
        assert!(r.passed());
        let t = &r.tables[0];
        assert_eq!(t.rows.len(), 5);
        assert_eq!(&t.rows[2][1..4], &[Cell::Num(-0.5), Cell::Num(0.0), Cell::Num(0.5)]);
        let csv = r.to_csv(0);
        assert!(csv.lines().any(|l| l == "2,-0.5,0,0.5,0,0"));
    }

    #[test]
    fn psi_gram_is_identity() {
        assert!(psi_gram_deviation(4, 3) < 1e-12);
    }

    #[test]
    fn exact_suites_pass() {
        for suite in [Suite::Spectrum, Suite::Represent, Suite::Subordination] {
            let mut s = ExperimentSpec::new(suite);
            s.instances = 3;
            s.m = 3;
            let r = run(&s).unwrap();
            assert!(r.passed(), "{suite}: {:?}", r.checks);
        }
    }

    #[test]
    fn eigenvalue_lambda_is_a_usage_error() {
        let mut s = ExperimentSpec::new(Suite::Spectrum);
        s.lambda = 2.0;
        assert!(matches!(run(&s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fmt_num_round_trips() {
        for v in [0.0, 1.0, -0.5, 1e-12, 3.25e20, 0.1 + 0.2] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
