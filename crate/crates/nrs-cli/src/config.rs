//! Flat key = value run configuration.
//!
//! A config file is a sequence of `key = value` lines ('#' starts a
//! comment). Command-line flags carry the same keys (`--epochs 30`,
//! hyphens and underscores interchangeable) and win over the file. The
//! resolved config round-trips losslessly through `to_file_string`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nrs_core::net::ExpansionMode;
use nrs_core::optim::OptimKind;
use nrs_core::train::TrainOptions;
use nrs_core::Arch;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    // data
    pub train_path: String,
    pub test_path: String,
    pub format: String, // libsvm | csv
    pub label_column: usize,
    pub has_header: bool,
    pub delimiter: String,
    pub dim: usize, // 0 = infer from data
    pub standardize: bool,
    pub task: String, // classify | regress
    pub classes: usize, // used by count/gradcheck when no data is loaded
    // model
    pub arch: String, // nrs | mlp2 | mlp3
    pub n_mul: usize,
    pub n_per: usize,
    pub n_h: usize,
    pub hidden: usize, // 0 = min(1024, 2 C)
    pub expansion: String,
    // training
    pub optimizer: String, // adam | sgd
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_step_every: usize, // 0 = constant lr
    pub lr_step_factor: f64,
    pub val_fraction: f64,
    // seeds
    pub seed_data: u64,
    pub seed_model: u64,
    pub seed_shuffle: u64,
    // commands
    pub out_dir: String,
    pub checkpoint: String,
    pub sweep_param: String,
    pub sweep_values: String,
    pub repeats: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            train_path: String::new(),
            test_path: String::new(),
            format: "libsvm".into(),
            label_column: 0,
            has_header: false,
            delimiter: ",".into(),
            dim: 0,
            standardize: true,
            task: "classify".into(),
            classes: 3,
            arch: "nrs".into(),
            n_mul: 2,
            n_per: 1,
            n_h: 3,
            hidden: 0,
            expansion: "permute".into(),
            optimizer: "adam".into(),
            lr: 1e-4,
            momentum: 0.9,
            weight_decay: 0.0,
            epochs: 30,
            batch_size: 128,
            lr_step_every: 0,
            lr_step_factor: 0.1,
            val_fraction: 0.10,
            seed_data: 1,
            seed_model: 1,
            seed_shuffle: 1,
            out_dir: default_out_dir(),
            checkpoint: String::new(),
            sweep_param: String::new(),
            sweep_values: String::new(),
            repeats: 5,
        }
    }
}

/// Default output directory; overridable through `NRS_OUT_DIR`.
pub fn default_out_dir() -> String {
    std::env::var("NRS_OUT_DIR").unwrap_or_else(|_| "runs".into())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl Config {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Config::default();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    path.display(),
                    line_no + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), line_no + 1)))?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual form. Keys use underscores; hyphens are
    /// accepted as aliases.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.replace('-', "_");
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("invalid value '{value}' for {key}"))
        }
        match key.as_str() {
            "train_path" => self.train_path = value.into(),
            "test_path" => self.test_path = value.into(),
            "format" => self.format = value.into(),
            "label_column" => self.label_column = parse(&key, value)?,
            "has_header" => self.has_header = parse(&key, value)?,
            "delimiter" => self.delimiter = value.into(),
            "dim" => self.dim = parse(&key, value)?,
            "standardize" => self.standardize = parse(&key, value)?,
            "task" => self.task = value.into(),
            "classes" => self.classes = parse(&key, value)?,
            "arch" => self.arch = value.into(),
            "n_mul" | "nmul" => self.n_mul = parse(&key, value)?,
            "n_per" | "nper" => self.n_per = parse(&key, value)?,
            "n_h" | "nh" => self.n_h = parse(&key, value)?,
            "hidden" => self.hidden = parse(&key, value)?,
            "expansion" => self.expansion = value.into(),
            "optimizer" => self.optimizer = value.into(),
            "lr" => self.lr = parse(&key, value)?,
            "momentum" => self.momentum = parse(&key, value)?,
            "weight_decay" => self.weight_decay = parse(&key, value)?,
            "epochs" => self.epochs = parse(&key, value)?,
            "batch_size" => self.batch_size = parse(&key, value)?,
            "lr_step_every" => self.lr_step_every = parse(&key, value)?,
            "lr_step_factor" => self.lr_step_factor = parse(&key, value)?,
            "val_fraction" => self.val_fraction = parse(&key, value)?,
            "seed_data" => self.seed_data = parse(&key, value)?,
            "seed_model" => self.seed_model = parse(&key, value)?,
            "seed_shuffle" => self.seed_shuffle = parse(&key, value)?,
            "out_dir" => self.out_dir = value.into(),
            "checkpoint" => self.checkpoint = value.into(),
            "sweep_param" => self.sweep_param = value.into(),
            "sweep_values" => self.sweep_values = value.into(),
            "repeats" => self.repeats = parse(&key, value)?,
            other => return Err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// The full config in file form; parsing it back reproduces the config.
    pub fn to_file_string(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("train_path", self.train_path.clone());
        map.insert("test_path", self.test_path.clone());
        map.insert("format", self.format.clone());
        map.insert("label_column", self.label_column.to_string());
        map.insert("has_header", self.has_header.to_string());
        map.insert("delimiter", self.delimiter.clone());
        map.insert("dim", self.dim.to_string());
        map.insert("standardize", self.standardize.to_string());
        map.insert("task", self.task.clone());
        map.insert("classes", self.classes.to_string());
        map.insert("arch", self.arch.clone());
        map.insert("n_mul", self.n_mul.to_string());
        map.insert("n_per", self.n_per.to_string());
        map.insert("n_h", self.n_h.to_string());
        map.insert("hidden", self.hidden.to_string());
        map.insert("expansion", self.expansion.clone());
        map.insert("optimizer", self.optimizer.clone());
        map.insert("lr", self.lr.to_string());
        map.insert("momentum", self.momentum.to_string());
        map.insert("weight_decay", self.weight_decay.to_string());
        map.insert("epochs", self.epochs.to_string());
        map.insert("batch_size", self.batch_size.to_string());
        map.insert("lr_step_every", self.lr_step_every.to_string());
        map.insert("lr_step_factor", self.lr_step_factor.to_string());
        map.insert("val_fraction", self.val_fraction.to_string());
        map.insert("seed_data", self.seed_data.to_string());
        map.insert("seed_model", self.seed_model.to_string());
        map.insert("seed_shuffle", self.seed_shuffle.to_string());
        map.insert("out_dir", self.out_dir.clone());
        map.insert("checkpoint", self.checkpoint.clone());
        map.insert("sweep_param", self.sweep_param.clone());
        map.insert("sweep_values", self.sweep_values.clone());
        map.insert("repeats", self.repeats.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_mul < 1 || self.n_per < 1 || self.n_h < 1 {
            return Err(usage("n_mul, n_per and n_h must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(usage("batch_size must be >= 1"));
        }
        if !(0.0..=0.5).contains(&self.val_fraction) {
            return Err(usage("val_fraction must be in [0, 0.5]"));
        }
        if !matches!(self.format.as_str(), "libsvm" | "csv") {
            return Err(usage(format!("unknown format '{}'", self.format)));
        }
        if !matches!(self.task.as_str(), "classify" | "regress") {
            return Err(usage(format!("unknown task '{}'", self.task)));
        }
        if self.delimiter.len() != 1 {
            return Err(usage("delimiter must be a single character"));
        }
        Arch::parse(&self.arch).map_err(|e| usage(e.to_string()))?;
        ExpansionMode::parse(&self.expansion).map_err(|e| usage(e.to_string()))?;
        if !matches!(self.optimizer.as_str(), "adam" | "sgd") {
            return Err(usage(format!("unknown optimizer '{}'", self.optimizer)));
        }
        Ok(())
    }

    pub fn arch(&self) -> Arch {
        Arch::parse(&self.arch).expect("validated")
    }

    pub fn expansion(&self) -> ExpansionMode {
        ExpansionMode::parse(&self.expansion).expect("validated")
    }

    pub fn optim_kind(&self) -> OptimKind {
        match self.optimizer.as_str() {
            "adam" => OptimKind::adam_default(),
            _ => OptimKind::Sgd {
                momentum: self.momentum,
            },
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            optim: self.optim_kind(),
            lr: self.lr,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            shuffle_seed: self.seed_shuffle,
            lr_step: (self.lr_step_every > 0).then_some((self.lr_step_every, self.lr_step_factor)),
        }
    }
}
