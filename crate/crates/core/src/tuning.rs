//! Coarse-to-fine grid sweeps that pick the config with the lowest mean
//! training ATE.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::dataset::{Dataset, Sequence, SequenceEval};
use crate::error::{Error, Result};
use crate::extractor::ExtractorConfig;
use crate::metrics::KittiOptions;
use crate::odometry::IcpConfig;
use crate::table::{evaluate_checked, evaluate_config, TableRow};

/// How to refine around the coarse incumbent: for each swept parameter,
/// `step = coarse_step / divisor` at offsets `-offsets..=offsets`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineRule {
    pub enabled: bool,
    pub divisor: f64,
    pub offsets: usize,
}

impl Default for FineRule {
    fn default() -> Self {
        FineRule {
            enabled: true,
            divisor: 5.0,
            offsets: 4,
        }
    }
}

/// ```
/// use radex::tuning::SweepSpec;
/// let spec = SweepSpec::from_toml(r#"
///     extractor = "ca"
///     train = ["a"]
///     test = ["b"]
///     [coarse]
///     T = [15, 35, 55]
/// "#).unwrap();
/// assert_eq!(spec.coarse_combos().unwrap().len(), 3);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base config; parameters not swept keep the values given here.
    pub extractor: String,
    /// Values per parameter. Combos are the Cartesian product.
    #[serde(default)]
    pub coarse: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub fine: FineRule,
    pub train: Vec<String>,
    #[serde(default)]
    pub test: Vec<String>,
    #[serde(default)]
    pub kitti: KittiOptions,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// JSON when the extension is `.json`, TOML otherwise.
    pub fn from_path(path: impl AsRef<Path>) -> Result<SweepSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn base(&self) -> Result<ExtractorConfig> {
        self.extractor.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let base = self.base()?;
        for (key, grid) in &self.coarse {
            if grid.is_empty() {
                return Err(Error::InvalidParameter(format!("grid for '{key}' is empty")));
            }
            base.with_param(key, grid[0])?;
        }
        if self.train.is_empty() {
            return Err(Error::InvalidParameter("no training sequences".into()));
        }
        if let Some(shared) = self.train.iter().find(|t| self.test.contains(t)) {
            return Err(Error::InvalidParameter(format!("'{shared}' is in both train and test")));
        }
        let fine = &self.fine;
        if fine.enabled && !(fine.divisor >= 1.0 && fine.divisor.is_finite()) {
            return Err(Error::InvalidParameter(format!("fine divisor must be >= 1, got {}", fine.divisor)));
        }
        Ok(())
    }

    /// Every coarse combo as a validated config, in grid order.
    pub fn coarse_combos(&self) -> Result<Vec<ExtractorConfig>> {
        let base = self.base()?;
        let axes: Vec<(&String, Vec<f64>)> = self.coarse.iter().map(|(k, g)| (k, g.clone())).collect();
        let mut out = Vec::new();
        for combo in cartesian(&axes) {
            let mut cfg = base.clone();
            for (k, v) in combo {
                cfg = cfg.with_param(k, v)?;
            }
            out.push(cfg);
        }
        Ok(dedup(out))
    }

    /// Combos around `incumbent` for the fine stage. Values that fail
    /// validation (e.g. fractional counts) are dropped.
    pub fn fine_combos(&self, incumbent: &ExtractorConfig) -> Vec<ExtractorConfig> {
        if !self.fine.enabled {
            return Vec::new();
        }
        let current: BTreeMap<String, f64> = incumbent
            .params()
            .into_iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect();
        let mut axes = Vec::new();
        for (key, grid) in &self.coarse {
            let Some(&centre) = current.get(&key.to_ascii_lowercase()) else { continue };
            let mut values: Vec<f64> = grid.clone();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let gaps = values
                .windows(2)
                .filter(|w| w[0] <= centre && centre <= w[1])
                .map(|w| w[1] - w[0]);
            let Some(step) = gaps.reduce(f64::min) else { continue };
            let fine_step = step / self.fine.divisor;
            let n = self.fine.offsets as i64;
            axes.push((key, (-n..=n).map(|j| centre + j as f64 * fine_step).collect::<Vec<_>>()));
        }
        if axes.is_empty() {
            return Vec::new();
        }
        let combos = cartesian(&axes)
            .into_iter()
            .filter_map(|combo| {
                combo
                    .into_iter()
                    .try_fold(incumbent.clone(), |cfg, (k, v)| cfg.with_param(k, v))
                    .ok()
            })
            .collect();
        dedup(combos)
    }
}

fn cartesian<'a>(axes: &[(&'a String, Vec<f64>)]) -> Vec<Vec<(&'a str, f64)>> {
    axes.iter().fold(vec![Vec::new()], |acc, (key, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push((key.as_str(), v));
                    next
                })
            })
            .collect()
    })
}

fn dedup(configs: Vec<ExtractorConfig>) -> Vec<ExtractorConfig> {
    let mut seen = BTreeSet::new();
    configs.into_iter().filter(|c| seen.insert(c.to_string())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub stage: Stage,
    pub config: ExtractorConfig,
    /// Averages over the training sequences, absent when the combo failed.
    pub result: Option<TableRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Index into `rows`.
    pub incumbent: usize,
}

impl SweepResult {
    pub fn incumbent_config(&self) -> &ExtractorConfig {
        &self.rows[self.incumbent].config
    }

    pub fn incumbent_row(&self) -> &TableRow {
        self.rows[self.incumbent].result.as_ref().expect("incumbent succeeded")
    }

    /// One line per combo: stage, config, averages, then the error if any.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["stage", "config", "ate_percent", "are_mdeg_per_m", "points", "error"])?;
        for row in &self.rows {
            let stage = match row.stage {
                Stage::Coarse => "coarse",
                Stage::Fine => "fine",
            };
            let (ate, are, pts) = match &row.result {
                Some(r) => (
                    crate::io::nine_digits(r.ate_percent),
                    crate::io::nine_digits(r.are_mdeg_per_m),
                    format!("{:.1}", r.points),
                ),
                None => Default::default(),
            };
            w.write_record([stage, &row.config.to_string(), &ate, &are, &pts, row.error.as_deref().unwrap_or("")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Orders successful rows by mean ATE, then ARE, then point count. Runtime
/// is left out so that reruns pick the same incumbent.
fn better(a: &TableRow, b: &TableRow) -> Ordering {
    a.ate_percent
        .total_cmp(&b.ate_percent)
        .then(a.are_mdeg_per_m.total_cmp(&b.are_mdeg_per_m))
        .then(a.points.total_cmp(&b.points))
}

fn evaluate_stage(stage: Stage, configs: Vec<ExtractorConfig>, train: &[&Sequence], icp: &IcpConfig, kitti: &KittiOptions) -> Vec<SweepRow> {
    // One shard per (combo, sequence); results come back in shard order.
    let shards: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..train.len()).map(move |s| (c, s)))
        .collect();
    let results: Vec<Result<SequenceEval>> = shards
        .par_iter()
        .map(|&(c, s)| evaluate_checked(train[s], &configs[c], icp, kitti))
        .collect();
    let mut results = results.into_iter();
    configs
        .into_iter()
        .map(|config| {
            // Drain the whole chunk before looking for errors so later combos
            // stay aligned with their shards.
            let chunk: Vec<Result<SequenceEval>> = results.by_ref().take(train.len()).collect();
            let evals: Result<Vec<SequenceEval>> = chunk.into_iter().collect();
            match evals.and_then(|e| TableRow::from_evals(&config, e)) {
                Ok(row) => SweepRow {
                    stage,
                    config,
                    result: Some(row),
                    error: None,
                },
                Err(e) => SweepRow {
                    stage,
                    config,
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn argmin(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.result.as_ref().map(|t| (i, t)))
        .min_by(|a, b| better(a.1, b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

pub fn run_sweep(spec: &SweepSpec, dataset_dir: impl AsRef<Path>, icp: &IcpConfig) -> Result<SweepResult> {
    run_sweep_on(spec, &Dataset::open(dataset_dir)?, icp)
}

/// Evaluates every coarse combo on the training sequences, refines once
/// around the best, and returns all rows with the overall incumbent.
pub fn run_sweep_on(spec: &SweepSpec, dataset: &Dataset, icp: &IcpConfig) -> Result<SweepResult> {
    spec.validate()?;
    icp.validate()?;
    let train = dataset.select(&spec.train)?;
    let mut rows = evaluate_stage(Stage::Coarse, spec.coarse_combos()?, &train, icp, &spec.kitti);
    let coarse_best = argmin(&rows).ok_or_else(|| no_success(&rows))?;
    let done: BTreeSet<String> = rows.iter().map(|r| r.config.to_string()).collect();
    let fine: Vec<ExtractorConfig> = spec
        .fine_combos(&rows[coarse_best].config)
        .into_iter()
        .filter(|c| !done.contains(&c.to_string()))
        .collect();
    rows.extend(evaluate_stage(Stage::Fine, fine, &train, icp, &spec.kitti));
    let incumbent = argmin(&rows).expect("coarse stage had a success");
    Ok(SweepResult { rows, incumbent })
}

fn no_success(rows: &[SweepRow]) -> Error {
    let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
    Error::Precondition(format!("every combo failed; first error: {first}"))
}

/// Runs the chosen config on the held-out sequences.
pub fn evaluate_on_test(incumbent: &ExtractorConfig, spec: &SweepSpec, dataset: &Dataset, icp: &IcpConfig) -> Result<TableRow> {
    if spec.test.is_empty() {
        return Err(Error::Precondition("the sweep lists no test sequences".into()));
    }
    evaluate_config(incumbent, &dataset.select(&spec.test)?, icp, &spec.kitti)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> SweepSpec {
        SweepSpec::from_toml(text).unwrap()
    }

    #[test]
    fn spec_validation() {
        let ok = "extractor = \"ca\"\ntrain = [\"a\"]\n[coarse]\nT = [1, 2]\n";
        spec(ok);
        let bad = [
            "extractor = \"ca\"\ntrain = [\"a\"]\n[coarse]\nT = []\n",
            "extractor = \"ca\"\ntrain = []\n",
            "extractor = \"ca\"\ntrain = [\"a\"]\ntest = [\"a\"]\n",
            "extractor = \"ca\"\ntrain = [\"a\"]\n[coarse]\nK = [1]\n",
            "extractor = \"nope\"\ntrain = [\"a\"]\n",
            "extractor = \"ca\"\ntrain = [\"a\"]\nbogus = 1\n",
        ];
        for text in bad {
            assert!(SweepSpec::from_toml(text).is_err(), "{text}");
        }
        let json = r#"{"extractor": "os T=10", "train": ["a"], "coarse": {"quantile": [0.5, 0.75]}}"#;
        assert_eq!(SweepSpec::from_json(json).unwrap().coarse_combos().unwrap().len(), 2);
    }

    #[test]
    fn grids_multiply() {
        let s = spec("extractor = \"tm\"\ntrain = [\"a\"]\n[coarse]\nT = [10, 20, 30]\nN_T = [4, 8]\n");
        let combos = s.coarse_combos().unwrap();
        assert_eq!(combos.len(), 6);
        assert!(combos.iter().all(|c| c.name() == "tm"));
    }

    #[test]
    fn fine_grid_brackets_incumbent() {
        let s = spec("extractor = \"ca\"\ntrain = [\"a\"]\n[coarse]\nT = [15, 35, 55]\n");
        let inc = s.base().unwrap().with_param("T", 35.0).unwrap();
        let fine = s.fine_combos(&inc);
        let ts: Vec<f64> = fine.iter().map(|c| c.params()[0].1).collect();
        assert_eq!(ts, [19.0, 23.0, 27.0, 31.0, 35.0, 39.0, 43.0, 47.0, 51.0]);

        // At the grid edge the step comes from the one neighbouring gap, and
        // non-positive thresholds are dropped.
        let edge = s.fine_combos(&s.base().unwrap().with_param("T", 15.0).unwrap());
        assert_eq!(edge.first().unwrap().params()[0].1, 3.0);
        assert_eq!(edge.len(), 8);

        let single = spec("extractor = \"ca\"\ntrain = [\"a\"]\n[coarse]\nT = [15]\n");
        assert!(single.fine_combos(&inc).is_empty());
        let mut off = s.clone();
        off.fine.enabled = false;
        assert!(off.fine_combos(&inc).is_empty());
    }

    #[test]
    fn fine_drops_invalid_counts() {
        let s = spec("extractor = \"kstrongest\"\ntrain = [\"a\"]\n[coarse]\nK = [2, 4]\n");
        let inc = s.base().unwrap().with_param("K", 2.0).unwrap();
        let ks: Vec<f64> = s.fine_combos(&inc).iter().map(|c| c.params()[0].1).collect();
        // Step 0.4: only the integer offsets survive, and K=0 is invalid.
        assert_eq!(ks, [2.0]);
    }

    fn row(ate: f64, are: f64) -> SweepRow {
        let cfg: ExtractorConfig = "ca".parse().unwrap();
        SweepRow {
            stage: Stage::Coarse,
            config: cfg.clone(),
            result: Some(TableRow {
                extractor: String::new(),
                config: String::new(),
                ate_percent: ate,
                are_mdeg_per_m: are,
                runtime_ms: 0.0,
                points: 0.0,
                sequences: vec![],
            }),
            error: None,
        }
    }

    #[test]
    fn argmin_tie_breaks() {
        let failed = SweepRow {
            result: None,
            error: Some("x".into()),
            ..row(0.0, 0.0)
        };
        let rows = vec![failed.clone(), row(2.0, 1.0), row(1.0, 3.0), row(1.0, 2.0), row(1.0, 2.0)];
        assert_eq!(argmin(&rows), Some(3));
        assert_eq!(argmin(&[failed]), None);
    }
}
