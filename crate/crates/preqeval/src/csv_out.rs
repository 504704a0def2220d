//! Plot-data CSVs in one shared schema: `x,metric,value,task,seed` where x
//! is `examples_seen` for streaming series and `iteration` for curriculum
//! series, plus per-run aggregates with mean/min/max across seeds at each x.
//! Rendering is left to external tooling; these files are the figures.

use std::collections::BTreeMap;

use preqeval_core::{CodelengthReport, MetricSeries};

/// Quote a field iff it contains a delimiter, quote, or newline.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One series, one seed column value (the run seed, not whatever internal
/// label the series carries).
pub fn series_csv(series: &MetricSeries, x_name: &str, seed: u64) -> String {
    let mut out = format!("{x_name},metric,value,task,seed\n");
    for p in &series.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.examples_seen,
            field(&p.metric),
            p.value,
            field(&p.task),
            seed
        ));
    }
    out
}

/// Mean and min/max envelope across seeds at each (task, metric, x).
pub fn aggregate_csv(series_by_seed: &[MetricSeries], x_name: &str) -> String {
    let mut grouped: BTreeMap<(String, String, u64), Vec<f64>> = BTreeMap::new();
    for series in series_by_seed {
        for p in &series.points {
            grouped
                .entry((p.task.clone(), p.metric.clone(), p.examples_seen))
                .or_default()
                .push(p.value);
        }
    }
    let mut out = format!("{x_name},metric,task,mean,min,max,seeds\n");
    for ((task, metric, x), values) in grouped {
        let mean = preqeval_core::stats::kahan_sum(&values) / values.len() as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        out.push_str(&format!(
            "{x},{},{},{mean},{lo},{hi},{}\n",
            field(&metric),
            field(&task),
            values.len()
        ));
    }
    out
}

/// Blockwise codelength as plot data: cumulative bits and per-block stats
/// against examples seen.
pub fn blocks_csv(report: &CodelengthReport, seed: u64) -> String {
    let mut out = String::from("examples_seen,metric,value,task,seed\n");
    let task = field(&report.dataset_id);
    let mut cumulative = 0.0;
    for block in &report.blocks {
        cumulative += block.bits;
        for (metric, value) in [
            ("block_bits", block.bits),
            ("block_accuracy", block.accuracy),
            ("cumulative_bits", cumulative),
        ] {
            out.push_str(&format!("{},{metric},{value},{task},{seed}\n", block.end));
        }
    }
    out
}

/// Cross-variant accuracy matrix in long form.
pub fn matrix_csv(task_ids: &[String], scores: &[Vec<f64>], seed: u64) -> String {
    let mut out = String::from("train_task,eval_task,accuracy,seed\n");
    for (i, row) in scores.iter().enumerate() {
        for (j, value) in row.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{value},{seed}\n",
                field(&task_ids[i]),
                field(&task_ids[j])
            ));
        }
    }
    out
}

/// Mean/min/max of each matrix cell across seeds.
pub fn matrix_aggregate_csv(task_ids: &[String], per_seed: &[Vec<Vec<f64>>]) -> String {
    let mut out = String::from("train_task,eval_task,mean,min,max,seeds\n");
    if per_seed.is_empty() {
        return out;
    }
    for i in 0..task_ids.len() {
        for j in 0..task_ids.len() {
            let values: Vec<f64> = per_seed.iter().map(|m| m[i][j]).collect();
            let mean = preqeval_core::stats::kahan_sum(&values) / values.len() as f64;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in &values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            out.push_str(&format!(
                "{},{},{mean},{lo},{hi},{}\n",
                field(&task_ids[i]),
                field(&task_ids[j]),
                values.len()
            ));
        }
    }
    out
}
