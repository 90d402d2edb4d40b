//! Flat plain-text configuration: one `key = value` per line, dotted section
//! prefixes, `#` comments. No structured-format dependency; fixtures diff
//! cleanly.

use nuspectral::models::{MaternSpec, ProcessModel, SpectralLine};
use nuspectral::sampling::Domain;
use nuspectral::weights::{Precond, SolveMethod, SolverConfig};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

/// Parsed key-value config with typed accessors.
#[derive(Debug, Clone)]
pub struct Config {
    map: BTreeMap<String, String>,
    /// Raw text, for hashing into the manifest.
    pub raw: String,
}

impl Config {
    pub fn parse(text: &str) -> CResult<Config> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value', got {line:?}", i + 1));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { map, raw: text.to_string() })
    }

    pub fn load(path: &Path) -> CResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> CResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("field {key}: not a number: {v:?}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str) -> CResult<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError(format!("field {key}: not a count: {v:?}"))),
        }
    }

    pub fn required(&self, key: &str) -> CResult<&str> {
        self.get(key).ok_or_else(|| ConfigError(format!("missing required field {key}")))
    }

    /// FNV-1a hash of the raw config text.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.raw.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn dim(&self) -> CResult<usize> {
        match self.usize("sampling.dim")? {
            None | Some(1) => Ok(1),
            Some(2) => Ok(2),
            Some(d) => err(format!("field sampling.dim: must be 1 or 2, got {d}")),
        }
    }

    /// Parse `a,b[;a2,b2...]` into a 1-d union, or a 2-d box from
    /// `sampling.domain_x` / `sampling.domain_y`.
    pub fn domain(&self) -> CResult<Domain> {
        if self.dim()? == 2 {
            let parse_pair = |key: &str| -> CResult<(f64, f64)> {
                let v = self.required(key)?;
                parse_interval(v).ok_or_else(|| ConfigError(format!("field {key}: expected 'a,b', got {v:?}")))
            };
            let x = parse_pair("sampling.domain_x")?;
            let y = parse_pair("sampling.domain_y")?;
            return Domain::box_2d(x, y).map_err(|e| ConfigError(format!("field sampling.domain_x/_y: {e}")));
        }
        let v = self.required("sampling.domain")?;
        let mut pieces = Vec::new();
        for part in v.split(';') {
            let Some(p) = parse_interval(part) else {
                return err(format!("field sampling.domain: bad piece {part:?}"));
            };
            pieces.push(p);
        }
        Domain::union_1d(&pieces).map_err(|e| ConfigError(format!("field sampling.domain: {e}")))
    }

    pub fn model(&self) -> CResult<ProcessModel> {
        let dim = self.dim()?;
        let matern = match self.f64("model.sigma")? {
            None => None,
            Some(sigma) => {
                let rho = self.f64_or("model.rho", 0.1)?;
                let nu = self.f64_or("model.nu", 0.75)?;
                let spec = MaternSpec::new(sigma, rho, nu, dim)
                    .map_err(|e| ConfigError(format!("field model.sigma/rho/nu: {e}")))?;
                let spec = match self.get("model.anisotropy") {
                    None => spec,
                    Some(v) => {
                        let vals: Vec<f64> = v
                            .split(',')
                            .map(|t| t.trim().parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| ConfigError(format!("field model.anisotropy: bad matrix {v:?}")))?;
                        spec.with_anisotropy(vals)
                            .map_err(|e| ConfigError(format!("field model.anisotropy: {e}")))?
                    }
                };
                Some(spec)
            }
        };
        let mut lines = Vec::new();
        if let Some(v) = self.get("model.lines") {
            for part in v.split(',') {
                let Some((f, p)) = part.split_once(':') else {
                    return err(format!("field model.lines: expected freq:power, got {part:?}"));
                };
                let freq = f.trim().parse::<f64>().map_err(|_| ConfigError(format!("field model.lines: bad frequency {f:?}")))?;
                let power = p.trim().parse::<f64>().map_err(|_| ConfigError(format!("field model.lines: bad power {p:?}")))?;
                lines.push(SpectralLine { freq, power });
            }
        }
        let nugget = self.f64_or("model.nugget", 0.0)?;
        ProcessModel::new(matern, lines, nugget).map_err(|e| ConfigError(format!("field model.*: {e}")))
    }

    pub fn solver(&self) -> CResult<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(m) = self.get("solver.method") {
            cfg.method = match m {
                "dense-qr" => SolveMethod::DenseQr,
                "low-rank" => SolveMethod::LowRank,
                "normal-krylov" => SolveMethod::NormalKrylov,
                other => return err(format!("field solver.method: unknown method {other:?}")),
            };
        }
        if let Some(p) = self.get("solver.precond") {
            cfg.precond = match p {
                "none" => Precond::None,
                "scaled-identity" => Precond::ScaledIdentity,
                "sparse-gaussian" => Precond::SparseGaussian,
                other => return err(format!("field solver.precond: unknown preconditioner {other:?}")),
            };
        }
        cfg.tol = self.f64_or("solver.tol", cfg.tol)?;
        cfg.delta = self.f64_or("solver.delta", cfg.delta)?;
        cfg.oversample = self.f64_or("solver.oversample", cfg.oversample)?;
        cfg.precond_bandwidth = self.f64_or("solver.precond_bandwidth", cfg.precond_bandwidth)?;
        if let Some(mi) = self.usize("solver.max_iter")? {
            cfg.max_iter = mi;
        }
        Ok(cfg)
    }

    /// Controlled band per axis, or `None` for guidance-based choice.
    pub fn omega(&self) -> CResult<Option<Vec<f64>>> {
        match self.get("solver.omega") {
            None => Ok(None),
            Some("auto") => Ok(None),
            Some(v) => {
                let vals: Vec<f64> = v
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ConfigError(format!("field solver.omega: bad value {v:?}")))?;
                Ok(Some(vals))
            }
        }
    }
}

fn parse_interval(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}
