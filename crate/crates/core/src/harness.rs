//! Benchmark harness: seed K-Modes with an initializer, run it to
//! convergence, and report quality (SD), iteration count and timing.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalDataset;
use crate::engine::{kmodes_fit, ClusterModel, EngineConfig};
use crate::error::{Error, Result};
use crate::init::{initialize, InitMethod, MethodKind};

/// One concrete run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSpec {
    pub k: usize,
    pub method: InitMethod,
    pub engine: EngineConfig,
}

/// Cross product of methods, K values and random seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixSpec {
    pub methods: Vec<MethodKind>,
    pub ks: Vec<usize>,
    /// Seeds for the random method; deterministic methods run once per K.
    pub seeds: Vec<u64>,
    pub engine: EngineConfig,
}

impl MatrixSpec {
    /// Expands to runs ordered by (method, k, seed).
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        if self.ks.contains(&0) {
            return Err(Error::ZeroClusters);
        }
        if self.methods.contains(&MethodKind::Random) && self.seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "the random method needs at least one seed".into(),
            ));
        }
        let mut out = Vec::new();
        for &kind in &self.methods {
            for &k in &self.ks {
                let seeds: Vec<Option<u64>> = if kind == MethodKind::Random {
                    self.seeds.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                };
                for seed in seeds {
                    out.push(RunSpec {
                        k,
                        method: InitMethod::from_kind(kind, seed)?,
                        engine: self.engine.clone(),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// One row of a benchmark report. Timing is in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: MethodKind,
    pub k: usize,
    pub seed: Option<u64>,
    pub n: usize,
    pub total_distance: Option<u64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    #[serde(default)]
    pub init_time_s: f64,
    #[serde(default)]
    pub total_time_s: f64,
    #[serde(default)]
    pub error: Option<String>,
}

impl RunRecord {
    /// Mean distance of a row to its center: `total_distance / n`.
    pub fn sd(&self) -> Option<f64> {
        self.total_distance.map(|t| t as f64 / self.n as f64)
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    fn failure(
        spec: &RunSpec,
        n: usize,
        err: &Error,
        init_time: Duration,
        total: Duration,
    ) -> Self {
        RunRecord {
            method: spec.method.kind(),
            k: spec.k,
            seed: spec.method.seed(),
            n,
            total_distance: None,
            iterations: None,
            converged: None,
            init_time_s: init_time.as_secs_f64(),
            total_time_s: total.as_secs_f64(),
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<RunRecord>,
}

impl BenchmarkReport {
    pub fn any_failed(&self) -> bool {
        self.records.iter().any(RunRecord::failed)
    }
}

/// Runs one initializer followed by K-Modes.
///
/// `init_time_s` covers the initializer; `total_time_s` covers both phases.
/// Hitting the iteration cap is not an error: the record has `converged = false`.
pub fn run_once(dataset: &CategoricalDataset, spec: &RunSpec) -> Result<(RunRecord, ClusterModel)> {
    let start = Instant::now();
    let centers = initialize(dataset, spec.k, &spec.method, &spec.engine)?;
    let init_time = start.elapsed();
    let model = kmodes_fit(dataset, &centers, &spec.engine)?;
    let total = start.elapsed();
    let record = RunRecord {
        method: spec.method.kind(),
        k: spec.k,
        seed: spec.method.seed(),
        n: dataset.n(),
        total_distance: Some(model.total_distance),
        iterations: Some(model.iterations),
        converged: Some(model.converged),
        init_time_s: init_time.as_secs_f64(),
        total_time_s: total.as_secs_f64(),
        error: None,
    };
    Ok((record, model))
}

fn run_recorded(dataset: &CategoricalDataset, spec: &RunSpec) -> (RunRecord, Option<ClusterModel>) {
    let start = Instant::now();
    match run_once(dataset, spec) {
        Ok((rec, model)) => (rec, Some(model)),
        Err(e) => {
            let t = start.elapsed();
            (RunRecord::failure(spec, dataset.n(), &e, t, t), None)
        }
    }
}

/// Runs every spec and collects one record each, in spec order.
///
/// Failures are recorded in their row and do not stop the matrix. With
/// `parallel_runs > 1` independent runs execute concurrently; the report
/// order is still the spec order. `on_model` sees each finished model.
pub fn run_matrix_with(
    dataset: &CategoricalDataset,
    specs: &[RunSpec],
    parallel_runs: usize,
    on_model: &(dyn Fn(usize, &RunRecord, &ClusterModel) + Sync),
) -> BenchmarkReport {
    let workers = parallel_runs.max(1).min(specs.len().max(1));
    if workers == 1 {
        let records = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (rec, model) = run_recorded(dataset, s);
                if let Some(model) = &model {
                    on_model(i, &rec, model);
                }
                rec
            })
            .collect();
        return BenchmarkReport { records };
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; specs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let (rec, model) = run_recorded(dataset, &specs[i]);
                if let Some(model) = &model {
                    on_model(i, &rec, model);
                }
                slots.lock().unwrap()[i] = Some(rec);
            });
        }
    });
    BenchmarkReport {
        records: slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every slot is filled"))
            .collect(),
    }
}

pub fn run_matrix(
    dataset: &CategoricalDataset,
    specs: &[RunSpec],
    parallel_runs: usize,
) -> BenchmarkReport {
    run_matrix_with(dataset, specs, parallel_runs, &|_, _, _| {})
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    /// Per-method (K, SD) and (K, time) series, seeds averaged.
    Plot,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plot" => Ok(ReportFormat::Plot),
            _ => Err(Error::InvalidConfig(format!("unknown report format '{s}'"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Plot => "plot",
        })
    }
}

/// Collapsing of random-seed rows that share (method, k).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Aggregate {
    #[default]
    None,
    Mean,
    /// The row with the lowest SD.
    Min,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Aggregate::None),
            "mean" => Ok(Aggregate::Mean),
            "min" => Ok(Aggregate::Min),
            _ => Err(Error::InvalidConfig(format!("unknown aggregate '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReportOptions {
    /// Include the timing columns. Off for byte-for-byte comparisons.
    pub timing: bool,
    pub aggregate: Aggregate,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            timing: true,
            aggregate: Aggregate::None,
        }
    }
}

/// A (method, k) group after aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: MethodKind,
    pub k: usize,
    pub runs: usize,
    pub sd: f64,
    pub iterations: f64,
    pub init_time_s: f64,
    pub total_time_s: f64,
}

/// Groups successful records by (method, k), in first-appearance order.
pub fn summarize(report: &BenchmarkReport, how: Aggregate) -> Vec<SummaryRow> {
    let mut groups: Vec<((MethodKind, usize), Vec<&RunRecord>)> = Vec::new();
    for r in report.records.iter().filter(|r| !r.failed()) {
        match groups.iter_mut().find(|(key, _)| *key == (r.method, r.k)) {
            Some((_, v)) => v.push(r),
            None => groups.push(((r.method, r.k), vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((method, k), rs)| {
            let runs = rs.len();
            match how {
                Aggregate::Min => {
                    let best = rs
                        .iter()
                        .min_by(|a, b| a.total_distance.cmp(&b.total_distance))
                        .unwrap();
                    SummaryRow {
                        method,
                        k,
                        runs,
                        sd: best.sd().unwrap_or(0.0),
                        iterations: best.iterations.unwrap_or(0) as f64,
                        init_time_s: best.init_time_s,
                        total_time_s: best.total_time_s,
                    }
                }
                Aggregate::Mean | Aggregate::None => {
                    let mean = |f: &dyn Fn(&RunRecord) -> f64| {
                        rs.iter().map(|r| f(r)).sum::<f64>() / runs as f64
                    };
                    SummaryRow {
                        method,
                        k,
                        runs,
                        sd: mean(&|r| r.sd().unwrap_or(0.0)),
                        iterations: mean(&|r| r.iterations.unwrap_or(0) as f64),
                        init_time_s: mean(&|r| r.init_time_s),
                        total_time_s: mean(&|r| r.total_time_s),
                    }
                }
            }
        })
        .collect()
}

/// SD with two decimals, as printed in every report format.
pub fn format_sd(sd: f64) -> String {
    format!("{sd:.2}")
}

fn format_time(t: f64) -> String {
    format!("{t:.3}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

fn json_number(s: &str) -> serde_json::Value {
    serde_json::Value::from(s.parse::<f64>().expect("formatted number"))
}

/// Serializes a report.
///
/// Columns are fixed: `method,k,seed,sd,iterations,converged,total_distance,n`
/// then `init_time_s,total_time_s` when timing is on, then `error`.
/// Aggregated output uses `method,k,runs,sd,iterations` (+ timing).
pub fn emit_report(
    report: &BenchmarkReport,
    format: ReportFormat,
    opts: &ReportOptions,
) -> Vec<u8> {
    match format {
        ReportFormat::Plot => emit_plot(report, opts),
        _ if opts.aggregate != Aggregate::None => {
            emit_summary(&summarize(report, opts.aggregate), format, opts)
        }
        ReportFormat::Csv => {
            let mut header: Vec<String> = [
                "method",
                "k",
                "seed",
                "sd",
                "iterations",
                "converged",
                "total_distance",
                "n",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            if opts.timing {
                header.push("init_time_s".into());
                header.push("total_time_s".into());
            }
            header.push("error".into());
            let mut rows = vec![header];
            for r in &report.records {
                let mut row = vec![
                    r.method.to_string(),
                    r.k.to_string(),
                    opt(r.seed),
                    opt(r.sd().map(format_sd)),
                    opt(r.iterations),
                    opt(r.converged),
                    opt(r.total_distance),
                    r.n.to_string(),
                ];
                if opts.timing {
                    row.push(format_time(r.init_time_s));
                    row.push(format_time(r.total_time_s));
                }
                row.push(r.error.clone().unwrap_or_default());
                rows.push(row);
            }
            csv_bytes(rows)
        }
        ReportFormat::Json => {
            let records: Vec<serde_json::Value> = report
                .records
                .iter()
                .map(|r| {
                    let mut o = serde_json::Map::new();
                    o.insert("method".into(), r.method.name().into());
                    o.insert("k".into(), r.k.into());
                    o.insert("seed".into(), r.seed.into());
                    o.insert(
                        "sd".into(),
                        r.sd()
                            .map_or(serde_json::Value::Null, |s| json_number(&format_sd(s))),
                    );
                    o.insert("iterations".into(), r.iterations.into());
                    o.insert("converged".into(), r.converged.into());
                    o.insert("total_distance".into(), r.total_distance.into());
                    o.insert("n".into(), r.n.into());
                    if opts.timing {
                        o.insert(
                            "init_time_s".into(),
                            json_number(&format_time(r.init_time_s)),
                        );
                        o.insert(
                            "total_time_s".into(),
                            json_number(&format_time(r.total_time_s)),
                        );
                    }
                    o.insert("error".into(), r.error.clone().into());
                    serde_json::Value::Object(o)
                })
                .collect();
            let mut out = serde_json::to_vec_pretty(&serde_json::json!({ "records": records }))
                .expect("serializing JSON values");
            out.push(b'\n');
            out
        }
    }
}

fn emit_summary(rows: &[SummaryRow], format: ReportFormat, opts: &ReportOptions) -> Vec<u8> {
    let fields = |r: &SummaryRow| {
        let mut v = vec![
            ("method", r.method.to_string()),
            ("k", r.k.to_string()),
            ("runs", r.runs.to_string()),
            ("sd", format_sd(r.sd)),
            ("iterations", format!("{:.1}", r.iterations)),
        ];
        if opts.timing {
            v.push(("init_time_s", format_time(r.init_time_s)));
            v.push(("total_time_s", format_time(r.total_time_s)));
        }
        v
    };
    match format {
        ReportFormat::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let o: serde_json::Map<String, serde_json::Value> = fields(r)
                        .into_iter()
                        .map(|(k, v)| {
                            let val = if k == "method" {
                                v.into()
                            } else {
                                json_number(&v)
                            };
                            (k.to_string(), val)
                        })
                        .collect();
                    serde_json::Value::Object(o)
                })
                .collect();
            let mut out = serde_json::to_vec_pretty(&serde_json::json!({ "summary": rows }))
                .expect("serializing JSON values");
            out.push(b'\n');
            out
        }
        _ => {
            let mut header: Vec<String> = ["method", "k", "runs", "sd", "iterations"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            if opts.timing {
                header.push("init_time_s".into());
                header.push("total_time_s".into());
            }
            let mut out = vec![header];
            out.extend(
                rows.iter()
                    .map(|r| fields(r).into_iter().map(|(_, v)| v).collect()),
            );
            csv_bytes(out)
        }
    }
}

fn emit_plot(report: &BenchmarkReport, opts: &ReportOptions) -> Vec<u8> {
    let how = match opts.aggregate {
        Aggregate::None => Aggregate::Mean,
        other => other,
    };
    let mut summary = summarize(report, how);
    summary.sort_by_key(|a| (a.method, a.k));
    let mut rows = vec![vec![
        "series".to_string(),
        "method".into(),
        "k".into(),
        "value".into(),
    ]];
    for r in &summary {
        rows.push(vec![
            "sd".into(),
            r.method.to_string(),
            r.k.to_string(),
            format_sd(r.sd),
        ]);
    }
    if opts.timing {
        for r in &summary {
            rows.push(vec![
                "time".into(),
                r.method.to_string(),
                r.k.to_string(),
                format_time(r.total_time_s),
            ]);
        }
    }
    csv_bytes(rows)
}

/// Parses a JSON report written by [`emit_report`].
pub fn parse_json_report(bytes: &[u8]) -> Result<BenchmarkReport> {
    Ok(serde_json::from_slice(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CategoricalDataset;

    fn record(method: MethodKind, k: usize, seed: Option<u64>, total: u64) -> RunRecord {
        RunRecord {
            method,
            k,
            seed,
            n: 6,
            total_distance: Some(total),
            iterations: Some(3),
            converged: Some(true),
            init_time_s: 0.25,
            total_time_s: 1.5,
            error: None,
        }
    }

    #[test]
    fn matrix_expansion_counts() {
        let spec = MatrixSpec {
            methods: vec![MethodKind::Random, MethodKind::Cao, MethodKind::Bkmodes],
            ks: vec![4, 8],
            seeds: vec![1, 2, 3, 4, 5],
            engine: EngineConfig::default(),
        };
        let runs = spec.expand().unwrap();
        assert_eq!(runs.len(), 14);
        assert_eq!(runs[0].method, InitMethod::Random { seed: 1 });
        assert_eq!(runs[5].k, 8);
        assert_eq!(runs[10].method, InitMethod::Cao);
        let empty = MatrixSpec {
            methods: vec![],
            ..spec.clone()
        };
        assert!(empty.expand().unwrap().is_empty());
        let no_seeds = MatrixSpec {
            seeds: vec![],
            ..spec
        };
        assert!(no_seeds.expand().is_err());
    }

    #[test]
    fn csv_one_record() {
        let report = BenchmarkReport {
            records: vec![record(MethodKind::Bkmodes, 2, None, 5)],
        };
        let out = String::from_utf8(emit_report(
            &report,
            ReportFormat::Csv,
            &ReportOptions::default(),
        ))
        .unwrap();
        assert_eq!(
            out,
            "method,k,seed,sd,iterations,converged,total_distance,n,init_time_s,total_time_s,error\n\
             bkmodes,2,,0.83,3,true,5,6,0.250,1.500,\n"
        );
    }

    #[test]
    fn sd_rounding() {
        assert_eq!(format_sd(0.8166), "0.82");
        assert_eq!(format_sd(9.454), "9.45");
        assert_eq!(format_sd(0.0), "0.00");
    }

    #[test]
    fn json_round_trip_keeps_non_timing_fields() {
        let mut failed = record(MethodKind::Random, 3, Some(9), 0);
        failed.total_distance = None;
        failed.error = Some("k=3 exceeds the number of distinct rows (2)".into());
        let report = BenchmarkReport {
            records: vec![record(MethodKind::Cao, 2, None, 4), failed],
        };
        let opts = ReportOptions {
            timing: false,
            ..ReportOptions::default()
        };
        let bytes = emit_report(&report, ReportFormat::Json, &opts);
        let back = parse_json_report(&bytes).unwrap();
        assert_eq!(emit_report(&back, ReportFormat::Json, &opts), bytes);
        assert_eq!(back.records[0].total_distance, Some(4));
        assert!(back.any_failed());
    }

    #[test]
    fn plot_series_average_seeds() {
        let report = BenchmarkReport {
            records: vec![
                record(MethodKind::Random, 2, Some(1), 6),
                record(MethodKind::Random, 2, Some(2), 12),
                record(MethodKind::Bkmodes, 2, None, 3),
            ],
        };
        let out = String::from_utf8(emit_report(
            &report,
            ReportFormat::Plot,
            &ReportOptions::default(),
        ))
        .unwrap();
        assert_eq!(
            out,
            "series,method,k,value\nsd,random,2,1.50\nsd,bkmodes,2,0.50\n\
             time,random,2,1.500\ntime,bkmodes,2,1.500\n"
        );
        let min = summarize(&report, Aggregate::Min);
        assert_eq!(min[0].sd, 1.0);
    }

    #[test]
    fn run_once_bkmodes_k1() {
        let d =
            CategoricalDataset::from_rows(&[vec![0, 0], vec![0, 1], vec![1, 1], vec![0, 0]], None)
                .unwrap();
        let spec = RunSpec {
            k: 1,
            method: InitMethod::BkModes,
            engine: EngineConfig::default(),
        };
        let (rec, model) = run_once(&d, &spec).unwrap();
        // global mode [0,0]: distances 0,1,2,0
        assert_eq!(rec.total_distance, Some(3));
        assert_eq!(rec.sd(), Some(0.75));
        assert_eq!(rec.iterations, Some(1));
        assert!(rec.total_time_s >= rec.init_time_s);
        assert_eq!(model.k, 1);
    }

    #[test]
    fn matrix_records_failures_in_row() {
        let d = CategoricalDataset::from_rows(&[vec![0], vec![0], vec![1]], None).unwrap();
        let spec = MatrixSpec {
            methods: vec![MethodKind::Random, MethodKind::Cao],
            ks: vec![3],
            seeds: vec![1],
            engine: EngineConfig::default(),
        };
        let report = run_matrix(&d, &spec.expand().unwrap(), 2);
        assert_eq!(report.records.len(), 2);
        assert!(report.records[0].failed());
        assert!(!report.records[1].failed());
    }
}
