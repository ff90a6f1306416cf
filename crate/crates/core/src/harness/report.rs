use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attacks::{LossSelector, Statistic};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::records::{write_records, Split};
use crate::target::TrainReport;

use super::experiment::{split_of, AttackResult, ExperimentOutcome};
use super::histogram::{csv_error, emit_histograms};

pub const MANIFEST: &str = "manifest.toml";
pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.json";

#[derive(Serialize)]
struct ResultRow<'a> {
    attack: &'a str,
    k: usize,
    success_rate: f64,
    tp: usize,
    tn: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    gap: f64,
    seed: u64,
}

pub fn write_results_csv(results: &[AttackResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in results {
        w.serialize(ResultRow {
            attack: &r.attack,
            k: r.k,
            success_rate: r.success_rate,
            tp: r.counts.tp,
            tn: r.counts.tn,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
            gap: r.gap,
            seed: r.seed,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Resolved config with a version/fingerprint header. It parses as a config, so
/// `--config manifest.toml` reruns the experiment.
pub fn manifest_text(config: &ExperimentConfig) -> String {
    format!(
        "# augmi {}\n# fingerprint {}\n{}",
        env!("CARGO_PKG_VERSION"),
        config.fingerprint(),
        config.canonical()
    )
}

pub fn write_manifest(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest_text(config))?;
    Ok(path)
}

#[derive(Serialize)]
struct CellSummary<'a> {
    k: usize,
    train: &'a TrainReport,
    results: &'a [AttackResult],
    overlap_single_loss: f64,
    overlap_mean: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'static str,
    fingerprint: String,
    seed: u64,
    cells: Vec<CellSummary<'a>>,
}

/// Writes manifest, results CSV, JSON summary, records and histograms for one
/// or more experiment cells (one per k).
pub fn write_outputs(config: &ExperimentConfig, outcomes: &[ExperimentOutcome], dir: &Path) -> Result<()> {
    write_manifest(config, dir)?;
    let results: Vec<AttackResult> = outcomes.iter().flat_map(|o| o.results.iter().cloned()).collect();
    write_results_csv(&results, &dir.join(RESULTS))?;
    let mut cells = Vec::new();
    for o in outcomes {
        let k = o.config.k;
        let eval = split_of(&o.records, Split::AttackEval);
        let bins = o.config.attack.bins;
        let single =
            emit_histograms(&eval, Statistic::SingleLoss(LossSelector::Element(0)), bins, &dir.join(format!("histogram_single_k{k}.csv")))?;
        let mean = emit_histograms(&eval, Statistic::MeanLoss, bins, &dir.join(format!("histogram_mean_k{k}.csv")))?;
        write_records(&o.records, &dir.join(format!("records_k{k}.jsonl")))?;
        cells.push(CellSummary {
            k,
            train: &o.train_report,
            results: &o.results,
            overlap_single_loss: single.overlap,
            overlap_mean: mean.overlap,
        });
    }
    let summary = Summary { version: env!("CARGO_PKG_VERSION"), fingerprint: config.fingerprint(), seed: config.seed, cells };
    fs::write(dir.join(SUMMARY), serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::Confusion;

    #[test]
    fn results_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = AttackResult {
            attack: "M_mean".into(),
            k: 4,
            success_rate: 0.625,
            counts: Confusion { tp: 3, tn: 2, fp: 1, fn_: 2 },
            gap: 0.5,
            seed: 7,
            detail: "mean".into(),
            fingerprint: "f".into(),
        };
        write_results_csv(&[r], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "attack,k,success_rate,tp,tn,fp,fn,gap,seed\nM_mean,4,0.625,3,2,1,2,0.5,7\n");
    }

    #[test]
    fn manifest_reparses_to_the_same_config() {
        let mut c = ExperimentConfig::default();
        c.seed = 99;
        c.pool.noise = Some(0.1);
        assert_eq!(ExperimentConfig::parse(&manifest_text(&c)).unwrap(), c);
    }
}
