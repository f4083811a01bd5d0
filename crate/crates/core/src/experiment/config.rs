use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::KernelKind;
use crate::tudataset::LabelSource;

/// One experiment: dataset, feature family and training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Dataset name (looked up under the data root) or a directory path.
    pub dataset: String,
    pub kernel: KernelKind,
    pub wl_iterations: usize,
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub att_hid: usize,
    pub nhid1: usize,
    pub nhid2: usize,
    /// Number of linear layers in the classifier: 2 or 3.
    pub mlp_depth: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub labels: LabelSource,
    /// `false` trains the classifier on frozen, uniformly weighted kernel rows.
    pub adaptive: bool,
}

/// Published per-dataset settings `(lr, epochs, wd, att_hid, nhid1, nhid2)`.
const PRESETS: &[(&[&str], f64, usize, f64, usize, usize, usize)] = &[
    (&["MUTAG"], 0.006, 500, 5e-8, 50, 150, 300),
    (&["PTC_MR", "PTC(MR)", "PTC"], 0.004, 500, 5e-8, 50, 50, 300),
    (&["PROTEINS"], 0.0004, 500, 5e-6, 50, 50, 300),
    (&["IMDB-BINARY", "IMDB-B"], 0.006, 500, 5e-8, 50, 150, 300),
    (&["IMDB-MULTI", "IMDB-M"], 0.006, 500, 5e-8, 50, 150, 300),
    (&["SHOCK"], 0.006, 500, 5e-8, 50, 50, 300),
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::for_dataset("MUTAG")
    }
}

impl ExperimentConfig {
    /// Defaults for `dataset`, using its published row when known and the
    /// MUTAG row otherwise.
    pub fn for_dataset(dataset: &str) -> Self {
        let key = Path::new(dataset)
            .file_name()
            .map(|s| s.to_string_lossy().to_ascii_uppercase())
            .unwrap_or_default();
        let row = PRESETS
            .iter()
            .find(|p| p.0.contains(&key.as_str()))
            .unwrap_or(&PRESETS[0]);
        ExperimentConfig {
            dataset: dataset.to_string(),
            kernel: KernelKind::Wl,
            wl_iterations: 1,
            lr: row.1,
            epochs: row.2,
            weight_decay: row.3,
            att_hid: row.4,
            nhid1: row.5,
            nhid2: row.6,
            mlp_depth: 3,
            folds: 10,
            repeats: 10,
            seed: 0,
            labels: LabelSource::File,
            adaptive: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Argument(m));
        if self.folds < 2 {
            return fail(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.repeats < 1 {
            return fail("repeats must be >= 1".into());
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        if self.att_hid < 1 || self.nhid1 < 1 || self.nhid2 < 1 {
            return fail("layer widths must be >= 1".into());
        }
        if !(2..=3).contains(&self.mlp_depth) {
            return fail(format!("mlp_depth must be 2 or 3, got {}", self.mlp_depth));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.weight_decay >= 0.0) {
            return fail("lr must be positive and weight_decay nonnegative".into());
        }
        Ok(())
    }

    /// Classifier hidden widths implied by `mlp_depth`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        match self.mlp_depth {
            2 => vec![self.nhid1],
            _ => vec![self.nhid1, self.nhid2],
        }
    }

    /// Sets one field from its textual key (`-` and `_` are interchangeable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Argument(format!("bad value {value:?} for {key}")))
        }
        match key.trim().replace('-', "_").as_str() {
            "dataset" => self.dataset = value.to_string(),
            "kernel" => self.kernel = value.parse()?,
            "wl_iterations" => self.wl_iterations = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "epochs" | "epoch" => self.epochs = parse(key, value)?,
            "weight_decay" | "wd" => self.weight_decay = parse(key, value)?,
            "att_hid" => self.att_hid = parse(key, value)?,
            "nhid1" => self.nhid1 = parse(key, value)?,
            "nhid2" => self.nhid2 = parse(key, value)?,
            "mlp_depth" => self.mlp_depth = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "labels" => self.labels = value.parse()?,
            "adaptive" => self.adaptive = parse(key, value)?,
            other => return Err(Error::Argument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::format(origin, i + 1, "expected key = value"));
            };
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::format(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Reads a config file. Defaults come from the file's `dataset` entry when
    /// present so per-dataset presets still apply.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dataset = text
            .lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .find(|(k, _)| k.trim() == "dataset")
            .map(|(_, v)| v.trim().to_string())
            .unwrap_or_else(|| "MUTAG".into());
        let mut cfg = ExperimentConfig::for_dataset(&dataset);
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "dataset = {}\nkernel = {}\nwl_iterations = {}\nlr = {}\nepochs = {}\nweight_decay = {}\natt_hid = {}\nnhid1 = {}\nnhid2 = {}\nmlp_depth = {}\nfolds = {}\nrepeats = {}\nseed = {}\nlabels = {}\nadaptive = {}\n",
            self.dataset,
            self.kernel,
            self.wl_iterations,
            self.lr,
            self.epochs,
            self.weight_decay,
            self.att_hid,
            self.nhid1,
            self.nhid2,
            self.mlp_depth,
            self.folds,
            self.repeats,
            self.seed,
            match self.labels {
                LabelSource::File => "file",
                LabelSource::Degree => "degree",
            },
            self.adaptive
        )
    }
}
