//! Experiment configuration: a flat `key = value` file whose keys are all
//! mirrored by command-line flags. Flags are applied after the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use snnbound::bounds::BinaryReduction;
use snnbound::trainer::StopRule;
use snnbound::{Activation, RadConfig, TaskSpec, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FigureKind {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
}

impl FigureKind {
    pub const ALL: [FigureKind; 4] = [FigureKind::Fig1a, FigureKind::Fig1b, FigureKind::Fig2, FigureKind::Fig3];

    pub fn id(self) -> &'static str {
        match self {
            FigureKind::Fig1a => "1a",
            FigureKind::Fig1b => "1b",
            FigureKind::Fig2 => "2",
            FigureKind::Fig3 => "3",
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FigureKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.strip_prefix("fig").unwrap_or(s);
        FigureKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown figure {s:?}, expected 1a, 1b, 2 or 3"))
    }
}

/// Tiny synthetic instances for the Rademacher probe.
#[derive(Debug, Clone, PartialEq)]
pub struct RadSweep {
    pub n: usize,
    pub d: usize,
    pub widths: Vec<usize>,
    pub c: usize,
    /// `R_W − r0` values; `r0 = minⱼ ‖wⱼ⁰‖₂` of the sampled initialization.
    pub rw_offsets: Vec<f64>,
    pub rv: Vec<f64>,
    pub estimator: RadConfig,
}

impl Default for RadSweep {
    fn default() -> Self {
        RadSweep {
            n: 8,
            d: 4,
            widths: vec![1, 2, 4],
            c: 1,
            rw_offsets: vec![0.5, 1.0],
            rv: vec![0.5, 1.0],
            estimator: RadConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub mnist_dir: Option<PathBuf>,
    pub cifar_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Shared training settings; the seed is replaced per cell.
    pub train: TrainConfig,
    pub delta: f64,
    pub subsample: Option<usize>,
    pub subsample_seed: u64,
    pub figure: Option<FigureKind>,
    pub activation: Activation,
    pub reduction: BinaryReduction,
    pub rad: RadSweep,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskSpec::mnist_1_vs_7(),
            mnist_dir: None,
            cifar_dir: None,
            out: PathBuf::from("out"),
            widths: (6..=12).map(|k| 1usize << k).collect(),
            seeds: (0..5).collect(),
            train: TrainConfig::default(),
            delta: 0.01,
            subsample: None,
            subsample_seed: 0,
            figure: None,
            activation: Activation::Relu,
            reduction: BinaryReduction::default(),
            rad: RadSweep::default(),
        }
    }
}

/// Every recognized key with a one-line description, in manifest order.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "task as <source>_<pos>v<neg>, e.g. mnist_1v7 or cifar10_0v1"),
    ("mnist_dir", "directory holding the MNIST IDX files"),
    ("cifar_dir", "directory holding the CIFAR-10 binary batches"),
    ("out", "output directory"),
    ("widths", "comma-separated hidden widths, strictly increasing (2^k allowed)"),
    ("seeds", "comma-separated seeds"),
    ("delta", "confidence parameter of the bounds, in (0, 1)"),
    ("subsample", "keep this many training examples (empty for all)"),
    ("subsample_seed", "seed of the subsample"),
    ("figure", "figure to emit: 1a, 1b, 2 or 3 (empty for all)"),
    ("activation", "relu, tanh, sigmoid or identity"),
    ("reduction", "binary constant reduction: both, first or off"),
    ("batch_size", "SGD batch size"),
    ("momentum", "SGD momentum"),
    ("learning_rate", "SGD learning rate"),
    ("max_epochs", "epoch limit"),
    ("target_train_error", "stop once the training error is below this"),
    ("stop_rule", "zero_one or mean_loss"),
    ("rad_n", "samples in each Rademacher probe instance"),
    ("rad_d", "input dimension of the Rademacher probe"),
    ("rad_widths", "hidden widths of the Rademacher probe"),
    ("rad_c", "outputs of the Rademacher probe"),
    ("rad_rw_offsets", "values of R_W − r0 in the Rademacher probe"),
    ("rad_rv", "values of R_V in the Rademacher probe"),
    ("rad_samples", "sign vectors drawn when not enumerating"),
    ("rad_steps", "projected ascent steps"),
    ("rad_restarts", "projected ascent restarts"),
    ("rad_step_size", "initial ascent step as a fraction of R_W"),
    ("rad_seed", "seed of the Rademacher probe"),
    ("rad_exhaustive", "enumerate all sign vectors for n ≤ 10 and c = 1 (true/false)"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key} = {value:?}: {e}")))
}

fn parse_width(key: &str, item: &str) -> Result<usize> {
    match item.split_once('^') {
        Some(("2", k)) => {
            let k: u32 = parse(key, k)?;
            1usize
                .checked_shl(k)
                .filter(|_| k < usize::BITS)
                .ok_or_else(|| CliError::Config(format!("{key}: 2^{k} overflows")))
        }
        Some(_) => Err(CliError::Config(format!("{key}: only powers of two may use ^, got {item:?}"))),
        None => parse(key, item),
    }
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect()
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.task = parse(key, value)?,
            "mnist_dir" => self.mnist_dir = optional_path(value),
            "cifar_dir" => self.cifar_dir = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "widths" => self.widths = parse_list(key, value, parse_width)?,
            "seeds" => self.seeds = parse_list(key, value, parse)?,
            "delta" => self.delta = parse(key, value)?,
            "subsample" => {
                self.subsample = if value.is_empty() { None } else { Some(parse(key, value)?) }
            }
            "subsample_seed" => self.subsample_seed = parse(key, value)?,
            "figure" => {
                self.figure = if value.is_empty() { None } else { Some(parse(key, value)?) }
            }
            "activation" => self.activation = parse(key, value)?,
            "reduction" => self.reduction = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "momentum" => self.train.momentum = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "max_epochs" => self.train.max_epochs = parse(key, value)?,
            "target_train_error" => self.train.target_train_error = parse(key, value)?,
            "stop_rule" => self.train.stop_rule = parse::<StopRule>(key, value)?,
            "rad_n" => self.rad.n = parse(key, value)?,
            "rad_d" => self.rad.d = parse(key, value)?,
            "rad_widths" => self.rad.widths = parse_list(key, value, parse_width)?,
            "rad_c" => self.rad.c = parse(key, value)?,
            "rad_rw_offsets" => self.rad.rw_offsets = parse_list(key, value, parse)?,
            "rad_rv" => self.rad.rv = parse_list(key, value, parse)?,
            "rad_samples" => self.rad.estimator.sigma_samples = parse(key, value)?,
            "rad_steps" => self.rad.estimator.pga_steps = parse(key, value)?,
            "rad_restarts" => self.rad.estimator.pga_restarts = parse(key, value)?,
            "rad_step_size" => self.rad.estimator.step_size = parse(key, value)?,
            "rad_seed" => self.rad.estimator.seed = parse(key, value)?,
            "rad_exhaustive" => self.rad.estimator.exhaustive = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let r = &self.rad;
        Some(match key {
            "dataset" => self.task.name(),
            "mnist_dir" => path(&self.mnist_dir),
            "cifar_dir" => path(&self.cifar_dir),
            "out" => self.out.display().to_string(),
            "widths" => join(&self.widths),
            "seeds" => join(&self.seeds),
            "delta" => self.delta.to_string(),
            "subsample" => self.subsample.map(|n| n.to_string()).unwrap_or_default(),
            "subsample_seed" => self.subsample_seed.to_string(),
            "figure" => self.figure.map(|f| f.to_string()).unwrap_or_default(),
            "activation" => self.activation.to_string(),
            "reduction" => self.reduction.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "momentum" => self.train.momentum.to_string(),
            "learning_rate" => self.train.learning_rate.to_string(),
            "max_epochs" => self.train.max_epochs.to_string(),
            "target_train_error" => self.train.target_train_error.to_string(),
            "stop_rule" => self.train.stop_rule.to_string(),
            "rad_n" => r.n.to_string(),
            "rad_d" => r.d.to_string(),
            "rad_widths" => join(&r.widths),
            "rad_c" => r.c.to_string(),
            "rad_rw_offsets" => join(&r.rw_offsets),
            "rad_rv" => join(&r.rv),
            "rad_samples" => r.estimator.sigma_samples.to_string(),
            "rad_steps" => r.estimator.pga_steps.to_string(),
            "rad_restarts" => r.estimator.pga_restarts.to_string(),
            "rad_step_size" => r.estimator.step_size.to_string(),
            "rad_seed" => r.estimator.seed.to_string(),
            "rad_exhaustive" => r.estimator.exhaustive.to_string(),
            _ => return None,
        })
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.widths.is_empty() || self.widths.contains(&0) {
            return bad("widths must be a nonempty list of positive integers".into());
        }
        if self.widths.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("widths must be strictly increasing, got {}", join(&self.widths)));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad(format!("seeds must be distinct, got {}", join(&self.seeds)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.subsample == Some(0) {
            return bad("subsample must be positive".into());
        }
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let r = &self.rad;
        if r.n == 0 || r.d == 0 || r.c == 0 || r.widths.is_empty() || r.widths.contains(&0) {
            return bad("rad_n, rad_d, rad_c and rad_widths must be positive".into());
        }
        if r.rw_offsets.iter().chain(&r.rv).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("rad_rw_offsets and rad_rv must be finite and nonnegative".into());
        }
        r.estimator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Every key in `key = value` form; parses back to the same configuration.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|(k, _)| format!("{k} = {}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// The training settings of one `(seed, m)` cell.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.train.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.widths.first(), Some(&64));
        assert_eq!(c.widths.last(), Some(&4096));
        assert_eq!(c.seeds.len(), 5);
        assert_eq!((c.train.batch_size, c.train.momentum, c.train.learning_rate), (256, 0.9, 0.001));
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.apply_text("widths = 2^6, 2^7\nseeds=3\n# comment\n\nsubsample = 512\nfigure = fig3\ndelta=0.05\nrad_rv = 0.25,2")
            .unwrap();
        assert_eq!(c.widths, vec![64, 128]);
        assert_eq!(c.figure, Some(FigureKind::Fig3));
        let mut back = ExperimentConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        for (k, _) in KEYS {
            assert!(c.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn errors_name_the_line() {
        let mut c = ExperimentConfig::default();
        let err = c.apply_text("seeds = 1\nbogus = 3").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
        assert!(c.apply_text("widths 64").is_err());
        assert!(c.set("delta", "abc").is_err());
        assert!(c.set("widths", "3^4").is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        c.set("widths", "128,64").unwrap();
        assert!(c.validate().is_err());
        c.set("widths", "64").unwrap();
        c.set("seeds", "").unwrap();
        assert!(c.validate().is_err());
        c.set("seeds", "1,1").unwrap();
        assert!(c.validate().is_err());
        c.set("seeds", "1").unwrap();
        c.set("delta", "1").unwrap();
        assert!(c.validate().is_err());
    }
}
