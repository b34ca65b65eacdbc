//! Sweeps over `eps`: concurrent cases, deterministic merge, slope fits
//! and report files.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::plot::plot_loglog;
use super::run::{run_case, stepper_config, CaseSource, CaseSpec, RunArtifact};
use super::{ExperimentPlan, HarnessError, MetricRecord};
use crate::diagnostics::{bound_monitor, loglog_slope, BoundLedger};
use crate::regime::validate_regime;
use crate::spectral::io::write_field;

/// Cases of a plan, regime-major, in the order of the `eps` list.
pub fn sweep_cases(plan: &ExperimentPlan) -> Vec<CaseSpec> {
    plan.regimes
        .iter()
        .flat_map(|&(m, n)| plan.eps.iter().map(move |&eps| CaseSpec { m, n, eps }))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStatus {
    pub spec: CaseSpec,
    pub error: Option<String>,
    pub dt: f64,
    pub steps: u64,
    pub stability_bound: f64,
}

/// One metric along the `eps` list of one regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub m: f64,
    pub n: f64,
    pub metric: String,
    /// decreasing
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// log-log slope against `eps`, from three or more positive values
    pub slope: Option<f64>,
    /// non-increasing as `eps` decreases
    pub monotone: bool,
    /// last value over first value
    pub ratio: f64,
}

pub struct SweepReport {
    pub records: Vec<MetricRecord>,
    pub cases: Vec<CaseStatus>,
    pub trends: Vec<Trend>,
    pub bounds: Vec<BoundLedger>,
    pub artifacts: Vec<RunArtifact>,
}

impl SweepReport {
    pub fn failures(&self) -> Vec<String> {
        self.cases
            .iter()
            .filter_map(|c| c.error.as_ref().map(|e| format!("{}: {e}", c.spec.label())))
            .collect()
    }

    pub fn trend(&self, m: f64, n: f64, metric: &str) -> Option<&Trend> {
        self.trends.iter().find(|t| t.m == m && t.n == n && t.metric == metric)
    }

    pub fn value(&self, m: f64, n: f64, eps: f64, metric: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.m == m && r.n == n && r.eps == eps && r.metric == metric)
            .map(|r| r.value)
    }
}

fn record_order(a: &MetricRecord, b: &MetricRecord) -> Ordering {
    a.m.total_cmp(&b.m)
        .then(a.n.total_cmp(&b.n))
        .then(b.eps.total_cmp(&a.eps))
        .then(a.metric.cmp(&b.metric))
}

type GroupKey = (u64, u64, String);

fn group_key(r: &MetricRecord) -> GroupKey {
    (r.m.to_bits(), r.n.to_bits(), r.metric.clone())
}

/// Sorts by regime, decreasing `eps` and metric name, and attaches the
/// log-log slope of every metric with three or more positive values.
pub fn merge_records(parts: Vec<Vec<MetricRecord>>) -> Vec<MetricRecord> {
    let mut all: Vec<MetricRecord> = parts.into_iter().flatten().collect();
    all.sort_by(record_order);
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &all {
        let g = groups.entry(group_key(r)).or_default();
        g.0.push(r.eps);
        g.1.push(r.value);
    }
    let slopes: BTreeMap<GroupKey, f64> = groups
        .into_iter()
        .filter(|(_, (xs, ys))| xs.len() >= 3 && ys.iter().all(|&y| y > 0.0 && y.is_finite()))
        .filter_map(|(k, (xs, ys))| loglog_slope(&xs, &ys).ok().map(|f| (k, f.slope)))
        .collect();
    for r in &mut all {
        r.slope = slopes.get(&group_key(r)).copied();
    }
    all
}

/// Per-regime trends of every metric present at two or more `eps` values.
pub fn trends(records: &[MetricRecord]) -> Vec<Trend> {
    let mut groups: BTreeMap<GroupKey, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(group_key(r)).or_default().push(r);
    }
    let mut out: Vec<Trend> = groups
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort_by(|a, b| b.eps.total_cmp(&a.eps));
            let values: Vec<f64> = g.iter().map(|r| r.value).collect();
            let first = values[0];
            let last = *values.last().expect("two or more values");
            Trend {
                m: g[0].m,
                n: g[0].n,
                metric: g[0].metric.clone(),
                eps: g.iter().map(|r| r.eps).collect(),
                monotone: values.windows(2).all(|w| w[1] <= w[0]),
                ratio: if first != 0.0 { last / first } else if last == 0.0 { 0.0 } else { f64::INFINITY },
                slope: g[0].slope,
                values,
            }
        })
        .collect();
    out.sort_by(|a, b| a.m.total_cmp(&b.m).then(a.n.total_cmp(&b.n)).then(a.metric.cmp(&b.metric)));
    out
}

/// Runs every case of the plan, independent cases concurrently on the
/// current rayon pool. Failed cases are reported, not fatal.
pub fn run_sweep(plan: &ExperimentPlan, source: CaseSource) -> Result<SweepReport, HarnessError> {
    plan.validate()?;
    let cases = sweep_cases(plan);
    let results: Vec<Result<RunArtifact, HarnessError>> =
        cases.par_iter().map(|&spec| run_case(plan, spec, source)).collect();

    let mut statuses = Vec::with_capacity(cases.len());
    let mut artifacts = Vec::new();
    for (spec, res) in cases.iter().zip(results) {
        match res {
            Ok(a) => {
                statuses.push(CaseStatus { spec: *spec, error: None, dt: a.dt, steps: a.steps, stability_bound: a.stability_bound });
                artifacts.push(a);
            }
            Err(e) => statuses.push(CaseStatus { spec: *spec, error: Some(e.to_string()), dt: 0.0, steps: 0, stability_bound: 0.0 }),
        }
    }
    let records = merge_records(artifacts.iter().map(|a| a.records.clone()).collect());
    let trends = trends(&records);
    let mut bounds = Vec::new();
    for &(m, n) in &plan.regimes {
        let rows: Vec<_> = artifacts
            .iter()
            .filter(|a| a.spec.m == m && a.spec.n == n)
            .filter_map(|a| a.bounds.clone())
            .collect();
        if rows.len() >= 2 {
            let regime = validate_regime(m, n, rows[0].eps)?;
            bounds.push(bound_monitor(rows, &regime)?);
        }
    }
    Ok(SweepReport { records, cases: statuses, trends, bounds, artifacts })
}

#[derive(Serialize)]
struct Manifest<'a> {
    plan: &'a ExperimentPlan,
    c_stab: f64,
    dt: f64,
    cases: &'a [CaseStatus],
    trends: &'a [Trend],
    bounds: &'a [BoundLedger],
}

fn csv_value(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Writes `metrics.csv`, `manifest.json`, `plots/*.png` and `fields/*.bin`.
pub fn write_outputs(dir: &Path, plan: &ExperimentPlan, report: &SweepReport) -> Result<(), HarnessError> {
    fs::create_dir_all(dir.join("plots"))?;
    fs::create_dir_all(dir.join("fields"))?;

    let mut csv = fs::File::create(dir.join("metrics.csv"))?;
    writeln!(csv, "m,n,eps,metric,value,slope")?;
    for r in &report.records {
        writeln!(csv, "{},{},{},{},{},{}", r.m, r.n, r.eps, r.metric, csv_value(Some(r.value)), csv_value(r.slope))?;
    }

    let manifest = Manifest {
        plan,
        c_stab: stepper_config(plan).c_stab,
        dt: plan.dt,
        cases: &report.cases,
        trends: &report.trends,
        bounds: &report.bounds,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Config(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;

    for t in &report.trends {
        if t.values.iter().all(|&v| v > 0.0) {
            let name = format!("m{}_n{}_{}.png", t.m, t.n, t.metric);
            plot_loglog(&dir.join("plots").join(name), &[(t.eps.clone(), t.values.clone())])?;
        }
    }

    for a in &report.artifacts {
        let label = a.spec.label();
        let fields = dir.join("fields");
        if let Some(s) = &a.final_state {
            write_field(&fields.join(format!("{label}_rho1.bin")), &s.rho1, "rho1", s.time)?;
            write_field(&fields.join(format!("{label}_momentum.bin")), &s.momentum, "momentum", s.time)?;
        }
        let lim = &a.final_limit;
        write_field(&fields.join(format!("{label}_limit_velocity.bin")), &lim.velocity, "limit_velocity", lim.time)?;
        if let Some(q) = &lim.q {
            write_field(&fields.join(format!("{label}_limit_q.bin")), q, "limit_q", lim.time)?;
        }
    }
    Ok(())
}
