//! `chaoslab`: runs one verification suite or experiment and writes CSV or JSON.
//!
//! Exit codes: 0 success, 2 usage error, 3 accuracy contract failed, 4 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{Map, Value};

use wiener_chaos::experiment::{run, ExperimentSpec, Format, Report};
use wiener_chaos::Error;

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "CHAOSLAB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "chaoslab", version, about = "Gaussian chaos verification suites and Monte Carlo experiments")]
struct Cli {
    /// Suite name (same as --suite).
    #[arg(value_name = "SUITE")]
    suite_pos: Option<String>,
    /// hermite-table, decoupling, wiener-ito, kahane, ito-isometry, malliavin-ibp,
    /// meyer, subordination, spectrum or represent.
    #[arg(long)]
    suite: Option<String>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// l1, l2 or linf.
    #[arg(long)]
    norm: Option<String>,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p: Option<Vec<f64>>,
    /// Sample count; scientific notation such as 1e6 is accepted.
    #[arg(long, value_parser = parse_count)]
    samples: Option<usize>,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    inner_draws: Option<usize>,
    /// symmetric or tetrahedral.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    t: Option<Vec<f64>>,
    /// Survival-curve thresholds for the decoupling suite, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    survival: Option<Vec<f64>>,
    /// Output file; defaults to $CHAOSLAB_OUT_DIR/<suite>.<ext>, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for Monte Carlo chunks; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if v >= 0.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as usize)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}

enum Failure {
    Usage(String),
    Accuracy(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Accuracy(_) => Failure::Accuracy(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl Cli {
    fn overrides(&self) -> Result<Map<String, Value>, Failure> {
        let mut o = Map::new();
        match (&self.suite_pos, &self.suite) {
            (Some(a), Some(b)) if a != b => {
                return Err(Failure::Usage(format!("conflicting suites {a:?} and {b:?}")));
            }
            (Some(s), _) | (None, Some(s)) => {
                o.insert("suite".into(), s.as_str().into());
            }
            (None, None) => {}
        }
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                o.insert(k.into(), v);
            }
        };
        put("m", self.m.map(Value::from));
        put("n", self.n.map(Value::from));
        put("d", self.d.map(Value::from));
        put("norm", self.norm.as_deref().map(Value::from));
        put("p", self.p.clone().map(Value::from));
        put("samples", self.samples.map(Value::from));
        put("batches", self.batches.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("instances", self.instances.map(Value::from));
        put("inner_draws", self.inner_draws.map(Value::from));
        put("case", self.case.as_deref().map(Value::from));
        put("max_degree", self.max_degree.map(Value::from));
        put("lambda", self.lambda.map(Value::from));
        put("t", self.t.clone().map(Value::from));
        put("survival", self.survival.clone().map(Value::from));
        put("out", self.out.as_ref().map(|p| Value::from(p.to_string_lossy().into_owned())));
        put("format", self.format.as_deref().map(Value::from));
        Ok(o)
    }

    fn spec(&self) -> Result<ExperimentSpec, Failure> {
        let overrides = self.overrides()?;
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?,
            None if !overrides.contains_key("suite") => {
                return Err(Failure::Usage("no suite given (use --suite, a positional name or --config)".into()));
            }
            None => "{}".to_string(),
        };
        ExperimentSpec::from_json_with_overrides(&text, overrides).map_err(|e| match &self.config {
            Some(path) => Failure::Usage(format!("{}: {e}", path.display())),
            None => Failure::Usage(e.to_string()),
        })
    }
}

fn output_path(spec: &ExperimentSpec) -> Option<PathBuf> {
    spec.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_VAR)
            .map(|dir| Path::new(&dir).join(format!("{}.{}", spec.suite, spec.format.extension())))
    })
}

/// `dir/stem.csv` becomes `dir/stem.<table>.csv`.
fn sibling(path: &Path, table: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{table}.{ext}"))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(report: &Report) -> Result<(), Failure> {
    let spec = &report.spec;
    let docs: Vec<(Option<&str>, String)> = match spec.format {
        Format::Json => vec![(None, report.to_json())],
        Format::Csv => (0..report.tables.len())
            .map(|k| ((k > 0).then_some(report.tables[k].name.as_str()), report.to_csv(k)))
            .collect(),
    };
    match output_path(spec) {
        Some(path) => {
            for (table, text) in &docs {
                let target = table.map_or_else(|| path.clone(), |t| sibling(&path, t));
                write_file(&target, text)?;
                eprintln!("wrote {}", target.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for (k, (_, text)) in docs.iter().enumerate() {
                if k > 0 {
                    writeln!(out).map_err(|e| Failure::Io(e.to_string()))?;
                }
                out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn main_inner(cli: &Cli) -> Result<(), Failure> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Usage("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let spec = cli.spec()?;
    let report = run(&spec)?;
    emit(&report)?;
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Accuracy(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Accuracy(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
    }
}
