//! The plain-text model file: one `key = value` per line, `#` comments.
//!
//! Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `dim` | lattice dimension | `2` |
//! | `sides` | box sides, `64,64` or `64x64` | `64,64` |
//! | `beta`, `h` | inverse temperature, field | `1`, `0` |
//! | `k.<dx>.<dy>` | kernel weight at an offset; mirrors are filled in | `k.1.0 = k.0.1 = 1` |
//! | `bc` | `periodic`, `plus`, `minus` or `file:<grid>` | `plus` |
//! | `norm` | `sup` or `euclidean` | `sup` |
//! | `steps`, `burnin`, `thin`, `batches`, `chunk` | run settings | `1000`, `1000`, `1`, `20`, `1024` |
//!
//! A model file that sets any `k.*` key replaces the default kernel.
//! `bc = file:<grid>` reads a `+`/`-` grid covering the box plus a frame of
//! equal width on every side; relative paths are taken from the model
//! file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pcalab_core::grid::parse_grid;
use pcalab_core::model::{BoundaryCondition, CouplingKernel, LatticeBox, Norm, PcaParams, Site, Tau};
use pcalab_core::montecarlo::RunSettings;

const DEFAULTS: [(&str, &str); 14] = [
    ("dim", "2"),
    ("sides", "64,64"),
    ("beta", "1"),
    ("h", "0"),
    ("k.1.0", "1"),
    ("k.0.1", "1"),
    ("bc", "plus"),
    ("norm", "sup"),
    ("steps", "1000"),
    ("burnin", "1000"),
    ("thin", "1"),
    ("batches", "20"),
    ("chunk", "1024"),
    ("k.0.0", "0"),
];

const SCALAR_KEYS: [&str; 11] = [
    "dim", "sides", "beta", "h", "bc", "norm", "steps", "burnin", "thin", "batches", "chunk",
];

/// Error in the model file or an override; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(ConfigError(msg.into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            entries: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn valid_key(key: &str) -> bool {
    SCALAR_KEYS.contains(&key)
        || key
            .strip_prefix("k.")
            .is_some_and(|rest| rest.split('.').all(|c| c.parse::<i64>().is_ok()))
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read model file {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in model file {}", path.display()))?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        if pairs.iter().any(|(k, _)| k.starts_with("k.")) {
            cfg.entries.retain(|k, _| !k.starts_with("k."));
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !valid_key(key) {
            return Err(config_err(format!("unknown configuration key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config_err(format!("override '{o}' is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Resolved `(key, value)` pairs in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| config_err(format!("missing configuration key '{key}'")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| config_err(format!("'{key}' has an invalid value '{raw}'")))
    }

    pub fn dim(&self) -> Result<usize> {
        self.number("dim")
    }

    pub fn region(&self) -> Result<LatticeBox> {
        let sides: Vec<usize> = self
            .get("sides")?
            .split([',', 'x'])
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                config_err(format!(
                    "'sides' has an invalid value '{}'",
                    self.get("sides").unwrap_or("")
                ))
            })?;
        if sides.len() != self.dim()? {
            return Err(config_err(format!(
                "'sides' lists {} sides for dim = {}",
                sides.len(),
                self.dim()?
            )));
        }
        LatticeBox::new(&sides).map_err(|e| config_err(e.to_string()))
    }

    pub fn kernel(&self) -> Result<CouplingKernel> {
        let dim = self.dim()?;
        let mut entries = Vec::new();
        for (k, v) in &self.entries {
            let Some(rest) = k.strip_prefix("k.") else { continue };
            let offset: Vec<i64> = rest.split('.').map(|c| c.parse().expect("validated key")).collect();
            if offset.len() != dim {
                return Err(config_err(format!("kernel key '{k}' does not have {dim} coordinates")));
            }
            let w: f64 = v
                .parse()
                .map_err(|_| config_err(format!("'{k}' has an invalid value '{v}'")))?;
            if w != 0.0 {
                entries.push((offset, w));
            }
        }
        CouplingKernel::symmetric(dim, entries).map_err(|e| config_err(e.to_string()))
    }

    pub fn params(&self) -> Result<PcaParams> {
        let norm: Norm = self
            .get("norm")?
            .parse()
            .map_err(|e: pcalab_core::error::Error| config_err(e.to_string()))?;
        PcaParams::new(self.number("beta")?, self.number("h")?, self.kernel()?)
            .map(|p| p.with_norm(norm))
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn boundary(&self) -> Result<BoundaryCondition> {
        let raw = self.get("bc")?;
        match raw {
            "periodic" => Ok(BoundaryCondition::Periodic),
            "plus" => Ok(BoundaryCondition::plus()),
            "minus" => Ok(BoundaryCondition::minus()),
            other => match other.strip_prefix("file:") {
                Some(path) => self.boundary_from_file(&self.base_dir.join(path)),
                None => Err(config_err(format!("unknown boundary condition '{other}'"))),
            },
        }
    }

    fn boundary_from_file(&self, path: &Path) -> Result<BoundaryCondition> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read boundary grid {}: {e}", path.display())))?;
        let grid = parse_grid(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let region = self.region()?;
        if region.dim() != 2 {
            bail!(ConfigError("boundary grids need dim = 2".into()));
        }
        let (gw, gh) = (grid.region().sides()[0], grid.region().sides()[1]);
        let (w, h) = (region.sides()[0], region.sides()[1]);
        let even_frame = gw > w && (gw - w) % 2 == 0 && gh >= h && gw - w == gh - h;
        if !even_frame {
            return Err(config_err(format!(
                "{}: a {gw}x{gh} grid is not a {w}x{h} box with an equal frame on every side",
                path.display()
            )));
        }
        let width = ((gw - w) / 2) as i64;
        let tau = Tau::from_fn(&region, width as usize, |s| {
            let at = Site::new(vec![s.coords()[0] + width, s.coords()[1] + width]);
            grid.get(&at).expect("grid covers the frame")
        });
        Ok(BoundaryCondition::Fixed(tau))
    }

    pub fn run_settings(&self) -> Result<RunSettings> {
        let s = RunSettings {
            steps: self.number("steps")?,
            burnin: self.number("burnin")?,
            thin: self.number("thin")?,
            batches: self.number("batches")?,
            chunk: self.number("chunk")?,
        };
        if s.thin == 0 || s.chunk == 0 {
            return Err(config_err("'thin' and 'chunk' must be positive"));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_ferromagnet_on_64() {
        let c = ModelConfig::default();
        assert_eq!(c.region().unwrap().sides(), &[64, 64]);
        assert_eq!(c.kernel().unwrap().nearest_neighbor_weights(), Some((0.0, 1.0, 1.0)));
        assert_eq!(c.boundary().unwrap(), BoundaryCondition::plus());
        assert_eq!(c.run_settings().unwrap(), RunSettings::default());
    }

    #[test]
    fn file_kernel_replaces_default_and_overrides_edit_it() {
        let mut c = ModelConfig::parse("sides = 3x3\nk.0.0 = 0.5 # self\nk.1.0 = 2\n").unwrap();
        assert_eq!(c.kernel().unwrap().nearest_neighbor_weights(), Some((0.5, 2.0, 0.0)));
        assert_eq!(c.kernel().unwrap().weight(&[-1, 0]), 2.0);
        c.apply_overrides(&["k.0.1=1".into(), "beta=0.3".into()]).unwrap();
        assert_eq!(c.kernel().unwrap().nearest_neighbor_weights(), Some((0.5, 2.0, 1.0)));
        assert_eq!(c.params().unwrap().beta, 0.3);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(ModelConfig::parse("colour = red").is_err());
        assert!(ModelConfig::parse("beta").is_err());
        let c = ModelConfig::parse("beta = hot").unwrap();
        assert!(c.params().is_err());
        let c = ModelConfig::parse("sides = 3").unwrap();
        assert!(c.region().is_err());
        let c = ModelConfig::parse("bc = sideways").unwrap();
        assert!(c.boundary().is_err());
    }

    #[test]
    fn boundary_grid_file() {
        let dir = tempfile::tempdir().unwrap();
        // 2x2 box in a frame of width 1, minus on the left column
        fs::write(dir.path().join("tau.txt"), "-+++\n-+++\n-+++\n-+++\n").unwrap();
        let model = dir.path().join("model.txt");
        fs::write(&model, "sides = 2,2\nbc = file:tau.txt\n").unwrap();
        let c = ModelConfig::load(&model).unwrap();
        let BoundaryCondition::Fixed(tau) = c.boundary().unwrap() else {
            panic!()
        };
        assert_eq!(tau.get(&Site::from([-1, 0])), Some(pcalab_core::model::Spin::Down));
        assert_eq!(tau.get(&Site::from([2, 1])), Some(pcalab_core::model::Spin::Up));
        assert!(ModelConfig::load(&dir.path().join("absent.txt")).is_err());
    }
}
