//! Artifact emission. JSON documents carry the config and its hash; CSV
//! files start with a `# config_hash=...` comment line followed by the
//! header. Floats in CSV use 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;

pub const OUT_DIR_ENV: &str = "CUSPDYN_OUT";

/// `--out` if given, else `$CUSPDYN_OUT`, else `./out`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Sink {
    pub dir: PathBuf,
    pub hash: String,
    pub config: ExperimentConfig,
    pub resume: bool,
}

impl Sink {
    pub fn new(dir: PathBuf, config: &ExperimentConfig, resume: bool) -> anyhow::Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, hash: config.hash(), config: config.clone(), resume })
    }

    fn path(&self, name: &str) -> anyhow::Result<PathBuf> {
        let p = self.dir.join(name);
        if self.resume && p.exists() {
            let found = existing_hash(&p)?;
            if found.as_deref() != Some(self.hash.as_str()) {
                bail!("refusing to resume: {} was written with a different config hash", p.display());
            }
        }
        Ok(p)
    }

    /// Writes `{config_hash, config, ...body}` with sorted keys.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> anyhow::Result<PathBuf> {
        let p = self.path(name)?;
        let mut doc = match serde_json::to_value(body)? {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        doc.insert("config_hash".into(), Value::String(self.hash.clone()));
        doc.insert("config".into(), serde_json::to_value(&self.config)?);
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn csv(&self, name: &str, header: &str, rows: &[Vec<String>]) -> anyhow::Result<PathBuf> {
        let p = self.path(name)?;
        let mut text = format!("# config_hash={} seed={}\n{header}\n", self.hash, self.config.seed);
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

fn existing_hash(p: &Path) -> anyhow::Result<Option<String>> {
    let text = fs::read_to_string(p)?;
    if let Some(rest) = text.strip_prefix("# config_hash=") {
        return Ok(rest.split_whitespace().next().map(str::to_owned));
    }
    let v: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    Ok(v.get("config_hash").and_then(Value::as_str).map(str::to_owned))
}
