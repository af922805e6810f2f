//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::align::{balanced_split, PenaltyRule, SolverSettings};
use crate::channelsynth::DirectMapParams;
use crate::error::{Error, Result};

/// Every recognized key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "tx_codebook",
        "",
        "TX codebook CSV (overrides the tx_* grid keys)",
    ),
    ("tx_start_deg", "-45", "first TX steering angle"),
    ("tx_stop_deg", "45", "last TX steering angle"),
    ("tx_step_deg", "5", "TX angle increment"),
    ("tx_elems", "16", "TX array elements"),
    (
        "rx_codebook",
        "",
        "RX codebook CSV (overrides the rx_* grid keys)",
    ),
    ("rx_start_deg", "-180", "first RX steering angle"),
    ("rx_stop_deg", "170", "last RX steering angle"),
    ("rx_step_deg", "10", "RX angle increment"),
    ("rx_elems", "16", "RX array elements"),
    ("map_source", "direct", "direct | raysum | grid"),
    (
        "grid_path",
        "",
        "measured power grid CSV (map_source = grid)",
    ),
    ("grid_db", "false", "grid values are dBm rather than linear"),
    ("n_clusters", "2", "clusters in the direct synthetic map"),
    (
        "dynamic_range_db",
        "10",
        "secondary cluster spread below the peak",
    ),
    ("floor_db", "-30", "uniform floor relative to the peak"),
    ("n_paths", "4", "paths in the ray-sum channel"),
    ("fractions", "0.25,0.37,0.47", "measurement fractions m/n"),
    (
        "pairs",
        "",
        "explicit m1xm2 list, e.g. 9x19,11x23 (overrides fractions)",
    ),
    ("trials", "200", "Monte Carlo trials per fraction"),
    (
        "noise_sigma",
        "0.01",
        "additive noise std on each power sample (linear)",
    ),
    (
        "kappa",
        "0.05",
        "penalty as a fraction of the null threshold",
    ),
    ("penalty", "", "fixed l1 weight (overrides kappa)"),
    ("max_iters", "5000", "solver iteration cap"),
    ("tol", "1e-8", "relative objective change for stopping"),
    ("dct", "separable", "separable | vector"),
    ("seed", "1", "base random seed"),
    (
        "heatmap_range_db",
        "40",
        "dB span mapped onto the heatmap gray scale",
    ),
    ("out", "out", "output directory"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum CodebookSource {
    Uniform {
        start_deg: f64,
        stop_deg: f64,
        step_deg: f64,
        n_elems: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Direct(DirectMapParams),
    RaySum { n_paths: usize },
    Grid { path: PathBuf, db: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tx: CodebookSource,
    pub rx: CodebookSource,
    pub map: MapSource,
    pub fractions: Vec<f64>,
    pub pairs: Option<Vec<(usize, usize)>>,
    pub trials: usize,
    pub noise_sigma: f64,
    pub solver: SolverSettings,
    pub seed: u64,
    pub heatmap_range_db: f64,
    pub out: PathBuf,
    /// Resolved key/value view, written to the manifest.
    entries: BTreeMap<String, String>,
}

/// Raw key/value settings before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut raw = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Load {
                path: origin.to_path_buf(),
                line: idx + 1,
                message: "expected key = value".into(),
            })?;
            raw.set(key.trim(), value.trim()).map_err(|e| Error::Load {
                path: origin.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::invalid(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| {
            KEYS.iter()
                .find(|(k, _, _)| *k == key)
                .map(|(_, d, _)| *d)
                .expect("key listed in KEYS")
        })
    }

    /// Interprets and validates every setting.
    pub fn resolve(&self) -> Result<RunConfig> {
        let entries: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, _, _)| (k.to_string(), self.get(k).to_string()))
            .collect();

        let tx = self.codebook("tx")?;
        let rx = self.codebook("rx")?;
        let map = match self.get("map_source") {
            "direct" => MapSource::Direct(DirectMapParams {
                // Sizes are filled in from the codebooks once they are built.
                p: 0,
                q: 0,
                n_clusters: self.num("n_clusters")?,
                dynamic_range_db: self.num("dynamic_range_db")?,
                floor_db: self.num("floor_db")?,
            }),
            "raysum" => MapSource::RaySum {
                n_paths: self.num("n_paths")?,
            },
            "grid" => {
                let path = PathBuf::from(self.get("grid_path"));
                if self.get("grid_path").is_empty() {
                    return Err(Error::invalid("map_source = grid requires grid_path"));
                }
                if !path.exists() {
                    return Err(Error::invalid(format!(
                        "grid file {} not found",
                        path.display()
                    )));
                }
                MapSource::Grid {
                    path,
                    db: self.num("grid_db")?,
                }
            }
            other => return Err(Error::invalid(format!("unknown map_source `{other}`"))),
        };

        let fractions = parse_list::<f64>(self.get("fractions"), "fractions")?;
        if fractions.is_empty() {
            return Err(Error::invalid("fractions must not be empty"));
        }
        if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::invalid(format!("fraction {f} outside (0, 1]")));
        }
        let pairs = match self.get("pairs") {
            "" => None,
            text => Some(parse_pairs(text)?),
        };

        let trials: usize = self.num("trials")?;
        if trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        let noise_sigma: f64 = self.num("noise_sigma")?;
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        let penalty = match self.get("penalty") {
            "" => PenaltyRule::Relative(self.num("kappa")?),
            _ => PenaltyRule::Fixed(self.num("penalty")?),
        };
        let (PenaltyRule::Relative(v) | PenaltyRule::Fixed(v)) = penalty;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid("kappa / penalty must be >= 0"));
        }
        let separable = match self.get("dct") {
            "separable" => true,
            "vector" => false,
            other => return Err(Error::invalid(format!("unknown dct mode `{other}`"))),
        };
        let solver = SolverSettings {
            penalty,
            max_iters: self.num("max_iters")?,
            tol: self.num("tol")?,
            separable,
        };
        if solver.max_iters == 0 || !(solver.tol > 0.0) {
            return Err(Error::invalid("max_iters must be >= 1 and tol > 0"));
        }
        let heatmap_range_db: f64 = self.num("heatmap_range_db")?;
        if !(heatmap_range_db > 0.0) {
            return Err(Error::invalid("heatmap_range_db must be positive"));
        }

        Ok(RunConfig {
            tx,
            rx,
            map,
            fractions,
            pairs,
            trials,
            noise_sigma,
            solver,
            seed: self.num("seed")?,
            heatmap_range_db,
            out: PathBuf::from(self.get("out")),
            entries,
        })
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key);
        raw.parse()
            .map_err(|_| Error::invalid(format!("cannot parse {key} = `{raw}`")))
    }

    fn codebook(&self, side: &str) -> Result<CodebookSource> {
        let file = self.get(&format!("{side}_codebook"));
        if !file.is_empty() {
            let path = PathBuf::from(file);
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "codebook {} not found",
                    path.display()
                )));
            }
            return Ok(CodebookSource::File(path));
        }
        Ok(CodebookSource::Uniform {
            start_deg: self.num(&format!("{side}_start_deg"))?,
            stop_deg: self.num(&format!("{side}_stop_deg"))?,
            step_deg: self.num(&format!("{side}_step_deg"))?,
            n_elems: self.num(&format!("{side}_elems"))?,
        })
    }
}

impl RunConfig {
    /// `(m1, m2)` for every requested point, given the codebook sizes.
    pub fn measurement_pairs(&self, p: usize, q: usize) -> Result<Vec<(usize, usize)>> {
        match &self.pairs {
            Some(pairs) => {
                for &(m1, m2) in pairs {
                    if m1 == 0 || m1 > p || m2 == 0 || m2 > q {
                        return Err(Error::invalid(format!(
                            "pair {m1}x{m2} does not fit a {q}x{p} map"
                        )));
                    }
                }
                Ok(pairs.clone())
            }
            None => self
                .fractions
                .iter()
                .map(|&f| balanced_split(p, q, f))
                .collect(),
        }
    }

    /// Resolved settings as sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, key: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::invalid(format!("bad entry `{s}` in {key}")))
        })
        .collect()
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once('x')
                .ok_or_else(|| Error::invalid(format!("pair `{s}` is not m1xm2")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("bad pair `{s}`")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

/// Text for `--help`: every key, its default, and what it does.
pub fn keys_help() -> String {
    let mut out = String::from("Config keys (key = value, one per line):\n");
    for (k, d, desc) in KEYS {
        let d = if d.is_empty() { "(unset)" } else { d };
        out.push_str(&format!("  {k:<18} {desc} [default: {d}]\n"));
    }
    out
}
