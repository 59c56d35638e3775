//! Experiment driver: counting runs over `(n, T)` grids, verification
//! suites, CSV/JSON output and the command-line front end.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_fundamental, is_square};
use crate::bqf::{class_representatives, orbit_oracle, QuadForm};
use crate::classnum::ring_class_check;
use crate::pairs::{count_by_class, enumerate_pairs, enumerate_pairs_bruteforce, label_pairs, CountOptions, PairsError};
use crate::pell::{self, unit_mul};
use crate::theory::{consistency_detail, predict_class, predict_total, TheoryError, CONSISTENCY_TOLERANCE};
use crate::volumes::{arcsin_constant, definite_volume, indefinite_volume, reassemble_all};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Pairs(#[from] PairsError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Volumes,
    Oracle,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Identities => "identities",
            Suite::Volumes => "volumes",
            Suite::Oracle => "oracle",
        })
    }
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "identities" => Ok(Suite::Identities),
            "volumes" => Ok(Suite::Volumes),
            "oracle" => Ok(Suite::Oracle),
            other => Err(CliError::Config(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n_values: Vec<i64>,
    /// sorted ascending
    pub t_values: Vec<u64>,
    pub include_b_zero: bool,
    pub workers: usize,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub oracle: bool,
}

impl ExperimentConfig {
    pub fn new(n_values: Vec<i64>, mut t_values: Vec<u64>) -> Result<Self, CliError> {
        if n_values.contains(&0) {
            return Err(CliError::Config("n must be nonzero".into()));
        }
        if t_values.contains(&0) {
            return Err(CliError::Config("T must be positive".into()));
        }
        t_values.sort_unstable();
        t_values.dedup();
        Ok(ExperimentConfig {
            n_values,
            t_values,
            include_b_zero: true,
            workers: 1,
            output_format: OutputFormat::Csv,
            output_path: None,
            oracle: false,
        })
    }
}

/// One line of a counting report. `class` is the canonical form or `TOTAL`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: i64,
    #[serde(rename = "T")]
    pub t: u64,
    pub class: String,
    pub content: Option<u64>,
    pub regime: String,
    pub empirical: u64,
    pub predicted: f64,
    pub ratio: f64,
}

pub const CSV_HEADER: &str = "n,T,class,content,regime,empirical,predicted,ratio";

fn ratio(empirical: u64, predicted: f64) -> f64 {
    empirical as f64 / predicted
}

/// Counts pairs for every `(n, T)` and attaches predictions. Rows come in
/// order `(n, T, content, canonical form)` with each `TOTAL` row last.
pub fn run_count(config: &ExperimentConfig) -> Result<Vec<ReportRow>, CliError> {
    let options = CountOptions { include_b_zero: config.include_b_zero, workers: config.workers, oracle: config.oracle };
    let mut rows = Vec::new();
    for &n in &config.n_values {
        if n == 0 {
            return Err(CliError::Config("n must be nonzero".into()));
        }
        let inventory = class_representatives(n);
        let total_prediction = predict_total(n)?;
        for &t in &config.t_values {
            eprintln!("counting n = {n}, T = {t} ({} classes)", inventory.len());
            let table = count_by_class(n, t, &inventory, &options)?;
            let tf = t as f64;
            for (class, &count) in inventory.classes.iter().zip(&table.per_class) {
                let predicted = predict_class(n, class.content)?.value_at(tf);
                rows.push(ReportRow {
                    n,
                    t,
                    class: class.label.canonical.to_string(),
                    content: Some(class.content),
                    regime: class.label.regime.as_str().to_string(),
                    empirical: count,
                    predicted,
                    ratio: ratio(count, predicted),
                });
            }
            let predicted = total_prediction.value_at(tf);
            rows.push(ReportRow {
                n,
                t,
                class: "TOTAL".into(),
                content: None,
                regime: inventory.regime.as_str().to_string(),
                empirical: table.total,
                predicted,
                ratio: ratio(table.total, predicted),
            });
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[ReportRow], out: impl Write) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    if rows.is_empty() {
        writer.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv(input: impl io::Read) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_json(rows: &[ReportRow], mut out: impl Write) -> Result<(), serde_json::Error> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

pub fn write_rows(rows: &[ReportRow], format: OutputFormat, path: Option<&Path>) -> Result<(), CliError> {
    let label = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|source| CliError::Io { path: label.clone(), source })?),
        None => Box::new(io::stdout().lock()),
    };
    let sink = io::BufWriter::new(sink);
    match format {
        OutputFormat::Csv => write_csv(rows, sink).map_err(|source| CliError::Csv { path: label, source }),
        OutputFormat::Json => Ok(write_json(rows, sink)?),
    }
}

/// One measured check of a verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: measured {:e}, tolerance {:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, suite: Suite, name: impl Into<String>, measured: f64, tolerance: f64) {
        let passed = measured.abs() <= tolerance;
        self.checks.push(CheckResult { suite: suite.to_string(), name: name.into(), measured, tolerance, passed });
    }

    /// Records a boolean check as a count of failures against zero.
    fn push_failures(&mut self, suite: Suite, name: impl Into<String>, failures: usize) {
        self.push(suite, name, failures as f64, 0.0);
    }
}

fn verify_identities(report: &mut VerifyReport) -> Result<(), CliError> {
    let suite = Suite::Identities;
    let mut worst: f64 = 0.0;
    for n in (-200i64..=200).filter(|&n| n != 0) {
        worst = worst.max(consistency_detail(n)?.relative_error);
    }
    report.push(suite, "class coefficients sum to totals, 0 < |n| <= 200", worst, CONSISTENCY_TOLERANCE);

    let mut failures = 0;
    for d0 in (-60i64..=60).filter(|&d| is_fundamental(d)) {
        for f in 1..=8 {
            if !ring_class_check(d0, f).map_err(TheoryError::from)? {
                failures += 1;
            }
        }
    }
    report.push_failures(suite, "ring class number formula, |d0| <= 60, f <= 8", failures);

    let failures = (1..=10i64).filter(|&k| class_representatives(k * k).len() as i64 != 2 * k).count();
    report.push_failures(suite, "2k classes of discriminant (2k)^2, k <= 10", failures);

    let mut failures = 0;
    for d in (5..=500i64).filter(|&d| crate::arith::is_discriminant(d) && !is_square(d)) {
        let u = pell::fundamental_unit(d).map_err(TheoryError::from)?;
        let (x, y) = if u.kappa == 1 {
            unit_mul(d, (&u.eps_x, &u.eps_y), (&u.eps_x, &u.eps_y))
        } else {
            (u.eps_x.clone(), u.eps_y.clone())
        };
        if (x, y) != (u.t.clone(), u.s.clone()) {
            failures += 1;
        }
    }
    report.push_failures(suite, "(t + s sqrt d)/2 = eps^(2/kappa), d <= 500", failures);
    Ok(())
}

fn verify_volumes(report: &mut VerifyReport) -> Result<(), CliError> {
    let suite = Suite::Volumes;
    report.push(suite, "arcsin constant", arcsin_constant() - 1.0, 1e-9);
    for m in [1e2, 1e3, 1e4] {
        let bound = 10.0 / f64::sqrt(m);
        let measured = match definite_volume(m) {
            Ok(v) => v.ratio_to_leading - 1.0,
            Err(e) => {
                eprintln!("definite volume at M = {m}: {e}");
                f64::INFINITY
            }
        };
        report.push(suite, format!("definite volume ratio, M = {m}"), measured, bound);
        let measured = match indefinite_volume(m) {
            Ok(v) => v.ratio_to_leading - 1.0,
            Err(e) => {
                eprintln!("indefinite volume at M = {m}: {e}");
                f64::INFINITY
            }
        };
        report.push(suite, format!("indefinite volume ratio, M = {m}"), measured, bound);
    }
    let worst = reassemble_all(200)?.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    report.push(suite, "coefficient reassembly, |d'| <= 200", worst, 1e-9);
    Ok(())
}

fn verify_oracle(report: &mut VerifyReport) -> Result<(), CliError> {
    let suite = Suite::Oracle;
    let mut failures = 0;
    for n in (-12i64..=12).filter(|&n| n != 0) {
        for t in [10u64, 50, 200] {
            if enumerate_pairs(n, t) != enumerate_pairs_bruteforce(n, t)? {
                failures += 1;
            }
        }
    }
    report.push_failures(suite, "fast and brute-force enumerators agree, |n| <= 12, T <= 200", failures);

    let mut failures = 0;
    for n in (-8i64..=8).filter(|&n| n != 0) {
        let inventory = class_representatives(n);
        let orbits: Vec<_> = inventory.classes.iter().map(|c| orbit_oracle(&c.label.canonical, 150)).collect();
        for record in label_pairs(&enumerate_pairs(n, 50), &inventory)? {
            let form = QuadForm::new(record.a, record.b, record.c);
            let i = inventory.index_of_label(&record.class_label).expect("label from inventory");
            let hits = orbits.iter().filter(|o| o.contains(&form)).count();
            if hits != 1 || !orbits[i].contains(&form) {
                failures += 1;
            }
        }
    }
    report.push_failures(suite, "reduction labels agree with orbit search, |n| <= 8, T <= 50", failures);
    Ok(())
}

/// Runs the named suites; every check records its measured value and tolerance.
pub fn run_verify(suites: &[Suite]) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::default();
    for suite in suites {
        eprintln!("running {suite} suite");
        match suite {
            Suite::Identities => verify_identities(&mut report)?,
            Suite::Volumes => verify_volumes(&mut report)?,
            Suite::Oracle => verify_oracle(&mut report)?,
        }
    }
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "dpairs", version, about = "Count D(n)-pairs per proper class of binary quadratic forms")]
pub struct Args {
    /// Comma-separated nonzero values of n
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub n: Vec<i64>,
    /// Comma-separated box sizes T
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<u64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Exclude pairs with ac + n = 0
    #[arg(long)]
    pub no_b_zero: bool,
    /// Comma-separated verification suites to run instead of counting
    #[arg(long, value_enum, value_delimiter = ',')]
    pub verify: Vec<Suite>,
    /// Use the brute-force enumerator
    #[arg(long)]
    pub oracle: bool,
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Settings from a `key = value` file. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileConfig {
    pub n: Option<Vec<i64>>,
    pub t: Option<Vec<u64>>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub include_b_zero: Option<bool>,
    pub oracle: Option<bool>,
    pub verify: Option<Vec<Suite>>,
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| CliError::Config(format!("bad value {v:?} for {key}"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("bad value {value:?} for {key}")))
}

impl FromStr for FileConfig {
    type Err = CliError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut cfg = FileConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => cfg.n = Some(parse_list(key, value)?),
                "t" | "T" => cfg.t = Some(parse_list(key, value)?),
                "format" => cfg.format = Some(value.parse()?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "workers" => cfg.workers = Some(parse_one(key, value)?),
                "include_b_zero" => cfg.include_b_zero = Some(parse_one(key, value)?),
                "no_b_zero" => cfg.include_b_zero = Some(!parse_one::<bool>(key, value)?),
                "oracle" => cfg.oracle = Some(parse_one(key, value)?),
                "verify" => cfg.verify = Some(value.split(',').map(str::parse).collect::<Result<_, _>>()?),
                other => return Err(CliError::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        Ok(cfg)
    }
}

/// What the command line asks for after merging the config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Count(ExperimentConfig),
    Verify(Vec<Suite>),
}

pub fn resolve(args: Args) -> Result<Command, CliError> {
    let file = match &args.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.clone(), source })?
            .parse::<FileConfig>()?,
        None => FileConfig::default(),
    };
    let verify = if args.verify.is_empty() { file.verify.unwrap_or_default() } else { args.verify };
    if !verify.is_empty() {
        return Ok(Command::Verify(verify));
    }
    let n = if args.n.is_empty() { file.n.unwrap_or_default() } else { args.n };
    let t = if args.t.is_empty() { file.t.unwrap_or_default() } else { args.t };
    if n.is_empty() || t.is_empty() {
        return Err(CliError::Config("need --n and --t (or --verify)".into()));
    }
    let mut config = ExperimentConfig::new(n, t)?;
    config.include_b_zero = !args.no_b_zero && file.include_b_zero.unwrap_or(true);
    config.oracle = args.oracle || file.oracle.unwrap_or(false);
    config.workers = args.workers.or(file.workers).unwrap_or(1);
    if config.workers == 0 {
        return Err(CliError::Config("workers must be positive".into()));
    }
    config.output_format = args.format.or(file.format).unwrap_or_default();
    config.output_path = args.out.or(file.out);
    Ok(Command::Count(config))
}

fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Count(config) => {
            let rows = run_count(&config)?;
            write_rows(&rows, config.output_format, config.output_path.as_deref())?;
            Ok(true)
        }
        Command::Verify(suites) => {
            let report = run_verify(&suites)?;
            let mut stdout = io::stdout().lock();
            for check in &report.checks {
                writeln!(stdout, "{check}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
            }
            Ok(report.passed())
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match resolve(args).and_then(execute) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
