//! Fixed-format CSV: shortest round-trip floats, `.` decimals, `\n` endings.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::metrics::ExperimentRecord;
use crate::error::{Error, Result};
use crate::tensor::RunningStats;
use crate::theory::{OptimalK, OptimalRule, TheoryRow};

pub const RECORD_HEADER: &str = "task,k,seed,trial,mse,psnr_db,residual,wall_ms";
pub const THEORY_HEADER: &str = "k,closed_form_mse,mc_mean,mc_std_error,optimal,selection";

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.task, r.k, r.seed, r.trial, r.mse, r.psnr_db, r.residual, r.wall_ms
        )
        .expect("writing to a String");
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RECORD_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "expected header `{RECORD_HEADER}`, found `{}`",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("line {}: malformed record `{line}`", i + 2));
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(ExperimentRecord {
                task: f[0].to_string(),
                k: f[1].parse().map_err(|_| bad())?,
                seed: f[2].parse().map_err(|_| bad())?,
                trial: f[3].parse().map_err(|_| bad())?,
                mse: num(f[4])?,
                psnr_db: num(f[5])?,
                residual: num(f[6])?,
                wall_ms: num(f[7])?,
            })
        })
        .collect()
}

pub fn theory_to_csv(rows: &[TheoryRow], opt: &OptimalK) -> String {
    let rule = match opt.rule {
        OptimalRule::Threshold => "threshold",
        OptimalRule::Exhaustive => "exhaustive",
    };
    let mut out = String::from(THEORY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.closed_form,
            r.mc.mean,
            r.mc.std_error,
            r.optimal,
            if r.optimal { rule } else { "" }
        )
        .expect("writing to a String");
    }
    out
}

/// Mean and standard deviation of one metric per `(task, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub task: String,
    pub k: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mse,
    PsnrDb,
    Residual,
}

impl Metric {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mse" => Ok(Metric::Mse),
            "psnr_db" => Ok(Metric::PsnrDb),
            "residual" => Ok(Metric::Residual),
            other => Err(Error::Config(format!("unknown metric `{other}` (mse, psnr_db, residual)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::PsnrDb => "psnr_db",
            Metric::Residual => "residual",
        }
    }

    pub fn of(self, r: &ExperimentRecord) -> f64 {
        match self {
            Metric::Mse => r.mse,
            Metric::PsnrDb => r.psnr_db,
            Metric::Residual => r.residual,
        }
    }
}

/// Summaries sorted by task name, then `k`.
pub fn summarize(records: &[ExperimentRecord], metric: Metric) -> Vec<MetricSummary> {
    let mut groups: BTreeMap<(String, usize), RunningStats> = BTreeMap::new();
    for r in records {
        groups.entry((r.task.clone(), r.k)).or_default().push(metric.of(r));
    }
    groups
        .into_iter()
        .map(|((task, k), s)| MetricSummary {
            task,
            k,
            mean: s.mean(),
            std_dev: if s.count() > 1 { s.std_dev() } else { 0.0 },
            count: s.count(),
        })
        .collect()
}

/// `k` with the lowest mean MSE for each task.
pub fn select_k(records: &[ExperimentRecord]) -> BTreeMap<String, usize> {
    let mut best: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for s in summarize(records, Metric::Mse) {
        let e = best.entry(s.task.clone()).or_insert((s.k, s.mean));
        if s.mean < e.1 {
            *e = (s.k, s.mean);
        }
    }
    best.into_iter().map(|(t, (k, _))| (t, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::psnr_from_mse;

    fn rec(k: usize, trial: usize, mse: f64) -> ExperimentRecord {
        ExperimentRecord {
            task: "t".into(),
            k,
            seed: 3,
            trial,
            mse,
            psnr_db: psnr_from_mse(mse, 1.0).db,
            residual: 0.5,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rs = vec![rec(1, 0, 0.1), rec(1, 1, 1.0 / 3.0), rec(2, 0, 7e-300)];
        let text = records_to_csv(&rs);
        assert!(text.starts_with("task,k,seed,trial,mse,psnr_db,residual,wall_ms\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(parse_records(&text).unwrap(), rs);
        assert!(text.contains("t,1,3,0,0.1,10,0.5,0\n"));
    }

    #[test]
    fn psnr_recomputes_from_mse() {
        let rs = vec![rec(1, 0, 0.0123), rec(2, 0, 4.5)];
        for r in parse_records(&records_to_csv(&rs)).unwrap() {
            assert!((psnr_from_mse(r.mse, 1.0).db - r.psnr_db).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_records("k,mse\n1,2\n").is_err());
        assert!(parse_records(&format!("{RECORD_HEADER}\nt,1,2\n")).is_err());
    }

    #[test]
    fn summary_and_selection() {
        let rs = vec![rec(1, 0, 1.0), rec(1, 1, 3.0), rec(2, 0, 0.5), rec(2, 1, 0.5)];
        let s = summarize(&rs, Metric::Mse);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].mean, 2.0);
        assert!((s[0].std_dev - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(select_k(&rs)["t"], 2);
    }
}
