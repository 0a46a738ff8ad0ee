//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Relative paths are resolved against the config file's directory.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `positions` | bundled Intel layout | `sensor_id,x,y` file |
//! | `root` | 16 | sensor wired to the sink |
//! | `exclude` | 5,15 | sensors dropped from positions and trace |
//! | `trace` | none (synthetic) | `timestamp_s,sensor_id,value` file |
//! | `epoch_seconds` | 30 | bucket width |
//! | `bucket_stat` | last | `last` or `mean` |
//! | `synth_epochs` | 2880 | synthetic trace length |
//! | `synth_correlation_length` | 10 | meters, `inf` allowed |
//! | `synth_noise` | 0.1 | white noise std |
//! | `synth_sources` | all | latent source count |
//! | `synth_amplitude` | 2 | source scale |
//! | `synth_smoothness` | 0.99 | AR(1) coefficient |
//! | `synth_offset` | 20 | constant level |
//! | `synth_seed` | 1 | generator seed |
//! | `range` | 10 | radio range, meters |
//! | `ranges` | 6,8,10,15,20,30,40,50 | sweep for the studies |
//! | `q` | 1 | components |
//! | `q_max` | 25 | longest retained-variance curve |
//! | `q_loads` | 15 | largest component count in load studies |
//! | `delta` | 0.001 | convergence threshold |
//! | `t_max` | 50 | iteration budget per component |
//! | `budgets` | 5,10,20,30,40,50 | budgets for the accuracy study |
//! | `folds` | 10 | cross-validation blocks |
//! | `fold` | 0 | training block for single-run commands |
//! | `method` | exact | `exact`, `pim` or `distributed` |
//! | `init` | diagonal | `diagonal` or `random` |
//! | `seed` | 1 | seed for random start vectors |
//! | `epsilon` | 0.5 | supervised compression bound |
//! | `out_dir` | out | output directory |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::synth::SynthSpec;
use crate::io::trace::BucketStat;
use crate::linalg::InitPolicy;
use crate::topology::{RoutingTree, SensorField, SensorId};

/// How a training covariance is turned into a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisMethod {
    /// Full eigendecomposition.
    #[default]
    Exact,
    /// Centralized power iteration with deflation.
    Pim,
    /// Simulated in-network power iteration on the masked covariance.
    Distributed,
}

impl FromStr for BasisMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(BasisMethod::Exact),
            "pim" => Ok(BasisMethod::Pim),
            "distributed" => Ok(BasisMethod::Distributed),
            _ => Err(Error::Config(format!("method must be exact, pim or distributed, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub positions: Option<PathBuf>,
    pub root: SensorId,
    pub exclude: Vec<SensorId>,
    pub trace: Option<PathBuf>,
    pub epoch_seconds: f64,
    pub bucket_stat: BucketStat,
    pub synth: SynthSpec,
    pub range: f64,
    pub ranges: Vec<f64>,
    pub q: usize,
    pub q_max: usize,
    pub q_loads: usize,
    pub delta: f64,
    pub t_max: usize,
    pub budgets: Vec<usize>,
    pub folds: usize,
    pub fold: usize,
    pub method: BasisMethod,
    pub random_init: bool,
    pub seed: u64,
    pub epsilon: f64,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            positions: None,
            root: SensorId(16),
            exclude: vec![SensorId(5), SensorId(15)],
            trace: None,
            epoch_seconds: 30.0,
            bucket_stat: BucketStat::Last,
            synth: SynthSpec::default(),
            range: 10.0,
            ranges: vec![6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
            q: 1,
            q_max: 25,
            q_loads: 15,
            delta: 1e-3,
            t_max: 50,
            budgets: vec![5, 10, 20, 30, 40, 50],
            folds: 10,
            fold: 0,
            method: BasisMethod::Exact,
            random_init: false,
            seed: 1,
            epsilon: 0.5,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl Config {
    pub fn init_policy(&self) -> InitPolicy {
        if self.random_init {
            InitPolicy::Random { seed: self.seed }
        } else {
            InitPolicy::Diagonal
        }
    }

    /// Sets one key; relative paths are joined onto `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let v = value.trim();
        let path = || {
            let p = PathBuf::from(v);
            if p.is_absolute() { p } else { base.join(p) }
        };
        match key.trim() {
            "positions" => self.positions = Some(path()),
            "root" => self.root = SensorId(parse_num(key, v)?),
            "exclude" => self.exclude = parse_list::<u32>(key, v)?.into_iter().map(SensorId).collect(),
            "trace" => self.trace = if v.is_empty() { None } else { Some(path()) },
            "epoch_seconds" => {
                self.epoch_seconds = parse_num(key, v)?;
                self.synth.epoch_seconds = self.epoch_seconds;
            }
            "bucket_stat" => self.bucket_stat = v.parse()?,
            "synth_epochs" => self.synth.epochs = parse_num(key, v)?,
            "synth_correlation_length" => self.synth.correlation_length = parse_num(key, v)?,
            "synth_noise" => self.synth.noise = parse_num(key, v)?,
            "synth_sources" => {
                self.synth.sources = if v == "all" { None } else { Some(parse_num(key, v)?) }
            }
            "synth_amplitude" => self.synth.amplitude = parse_num(key, v)?,
            "synth_smoothness" => self.synth.smoothness = parse_num(key, v)?,
            "synth_offset" => self.synth.offset = parse_num(key, v)?,
            "synth_seed" => self.synth.seed = parse_num(key, v)?,
            "range" => self.range = parse_num(key, v)?,
            "ranges" => self.ranges = parse_list(key, v)?,
            "q" => self.q = parse_num(key, v)?,
            "q_max" => self.q_max = parse_num(key, v)?,
            "q_loads" => self.q_loads = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "budgets" => self.budgets = parse_list(key, v)?,
            "folds" => self.folds = parse_num(key, v)?,
            "fold" => self.fold = parse_num(key, v)?,
            "method" => self.method = v.parse()?,
            "init" => {
                self.random_init = match v {
                    "diagonal" => false,
                    "random" => true,
                    _ => return Err(Error::Config(format!("init must be diagonal or random, got {v:?}"))),
                }
            }
            "seed" => self.seed = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "out_dir" => self.out_dir = path(),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value".into()))?;
            cfg.set(k, v, base).map_err(|e| bad(e.to_string()))?;
        }
        cfg.check_values()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Checks that do not depend on the data.
    pub fn check_values(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.epsilon >= 0.0) {
            return fail(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.delta > 0.0) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if self.t_max == 0 || self.budgets.contains(&0) {
            return fail("iteration budgets must be at least 1".into());
        }
        if self.q == 0 || self.q_max == 0 || self.q_loads == 0 {
            return fail("component counts must be at least 1".into());
        }
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.fold >= self.folds {
            return fail(format!("fold must be below {}, got {}", self.folds, self.fold));
        }
        if !(self.range > 0.0) || self.ranges.iter().any(|r| !(*r > 0.0)) {
            return fail("radio ranges must be positive".into());
        }
        if !(self.epoch_seconds > 0.0) {
            return fail("epoch_seconds must be positive".into());
        }
        Ok(())
    }

    /// Checks against the loaded field and trace length.
    pub fn validate(&self, field: &SensorField, epochs: usize) -> Result<()> {
        self.check_values()?;
        let p = field.len();
        for (name, q) in [("q", self.q), ("q_max", self.q_max), ("q_loads", self.q_loads)] {
            if q > p {
                return Err(Error::Config(format!("{name} = {q} exceeds the {p} sensors")));
            }
        }
        if self.folds > epochs {
            return Err(Error::Config(format!(
                "{} folds exceed the {epochs} epochs",
                self.folds
            )));
        }
        RoutingTree::build(field, self.range)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::positions::intel_field;

    #[test]
    fn parses_keys_comments_and_paths() {
        let text = "# run\nrange = 12.5\nq=3\nexclude = 5, 15, 7\ntrace = data/t.csv\nsynth_correlation_length = inf\nmethod = distributed\n";
        let c = Config::parse(text, Path::new("/cfg/run.conf")).unwrap();
        assert_eq!(c.range, 12.5);
        assert_eq!(c.q, 3);
        assert_eq!(c.exclude, vec![SensorId(5), SensorId(15), SensorId(7)]);
        assert_eq!(c.trace, Some(PathBuf::from("/cfg/data/t.csv")));
        assert!(c.synth.correlation_length.is_infinite());
        assert_eq!(c.method, BasisMethod::Distributed);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match Config::parse("q = 1\nbogus = 2\n", Path::new("c")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(Config::parse("q 1\n", Path::new("c")).is_err());
        assert!(Config::parse("epsilon = -0.1\n", Path::new("c")).is_err());
    }

    #[test]
    fn validation_against_data() {
        let f = intel_field();
        let mut c = Config::default();
        c.validate(&f, 100).unwrap();
        c.q = 53;
        assert!(c.validate(&f, 100).is_err());
        c.q = 1;
        assert!(c.validate(&f, 5).is_err());
        c.range = 3.0;
        assert!(matches!(c.validate(&f, 100), Err(Error::Disconnected(_))));
    }
}
