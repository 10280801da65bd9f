//! Optional `key=value` configuration file; flags override its defaults.

use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct Config {
    pub n: Option<usize>,
    pub petviashvili_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub gamma: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&body)
    }

    pub fn parse(body: &str) -> Result<Self, String> {
        let mut cfg = Config::default();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |e: &dyn std::fmt::Display| format!("config line {}: {e}", lineno + 1);
            match key {
                "n" => cfg.n = Some(value.parse().map_err(|e| bad(&e))?),
                "petviashvili-tol" => {
                    cfg.petviashvili_tol = Some(value.parse().map_err(|e| bad(&e))?)
                }
                "newton-tol" => cfg.newton_tol = Some(value.parse().map_err(|e| bad(&e))?),
                "max-iter" => cfg.max_iter = Some(value.parse().map_err(|e| bad(&e))?),
                "gamma" => cfg.gamma = Some(value.parse().map_err(|e| bad(&e))?),
                other => return Err(format!("config line {}: unknown key `{other}`", lineno + 1)),
            }
        }
        Ok(cfg)
    }
}
