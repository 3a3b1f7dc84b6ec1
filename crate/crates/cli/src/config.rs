//! Flat `key = value` configuration with `[section]` headers.
//!
//! Every key a command reads is marked; keys left unread after the command
//! has pulled its settings are reported as input errors, which catches typos.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nel_core::shapes::Family;
use nel_core::{KernelParams, Potential};

#[derive(Debug, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    used: RefCell<BTreeSet<(String, String)>>,
    /// Directory relative paths are resolved against.
    base: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            let prev = sections
                .entry(current.clone())
                .or_default()
                .insert(key.clone(), value.trim().to_string());
            if prev.is_some() {
                bail!("line {}: duplicate key '{key}'", lineno + 1);
            }
        }
        Ok(Self {
            sections,
            ..Default::default()
        })
    }

    pub fn section<'a>(&'a self, name: &'a str) -> Section<'a> {
        Section { cfg: self, name }
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Errors on any key no command asked for.
    pub fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        let unused: Vec<String> = self
            .sections
            .iter()
            .flat_map(|(s, kv)| kv.keys().map(move |k| (s.clone(), k.clone())))
            .filter(|key| !used.contains(key))
            .map(|(s, k)| {
                if s.is_empty() {
                    k
                } else {
                    format!("[{s}] {k}")
                }
            })
            .collect();
        if !unused.is_empty() {
            bail!("unknown config keys: {}", unused.join(", "));
        }
        Ok(())
    }

    /// Canonical echo of the keys that were read, in sorted order.
    pub fn echo(&self) -> String {
        let used = self.used.borrow();
        let mut out = String::new();
        for (s, kv) in &self.sections {
            let keys: Vec<_> = kv
                .iter()
                .filter(|(k, _)| used.contains(&(s.clone(), (*k).clone())))
                .collect();
            if keys.is_empty() {
                continue;
            }
            if !s.is_empty() {
                let _ = writeln!(out, "[{s}]");
            }
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

pub struct Section<'a> {
    cfg: &'a Config,
    name: &'a str,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.cfg.sections.get(self.name)?.get(key)?;
        self.cfg
            .used
            .borrow_mut()
            .insert((self.name.to_string(), key.to_string()));
        Some(v)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| anyhow!("[{}] {key} = {v}: {e}", self.name)),
        }
    }

    pub fn opt_str(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|e| anyhow!("[{}] {key}: '{s}': {e}", self.name))
                })
                .collect(),
        }
    }

    /// `count` log-spaced values between `<key>_min` and `<key>_max`, or an
    /// explicit list under `key`.
    pub fn log_range(&self, key: &str, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
        if self.raw(key).is_some() {
            return self.list(key, Vec::new());
        }
        let lo = self.get(&format!("{key}_min"), lo)?;
        let hi = self.get(&format!("{key}_max"), hi)?;
        let n = self.get(&format!("{key}_count"), count)?;
        if !(lo > 0.0 && hi > lo) || n < 2 {
            bail!("[{}] {key}: need 0 < min < max and count >= 2", self.name);
        }
        Ok((0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect())
    }

    pub fn kernel(&self) -> Result<KernelParams> {
        Ok(KernelParams::new(2, self.get("alpha", 0.5)?)?)
    }

    /// `potential = quadratic | power | table | nonexistence`.
    pub fn potential(&self, default: &str) -> Result<Potential> {
        let kind: String = self.get("potential", default.to_string())?;
        Ok(match kind.as_str() {
            "quadratic" => Potential::quadratic(),
            "power" => Potential::power(self.get("coeff", 1.0)?, self.get("degree", 2.0)?)?,
            "table" => Potential::table(
                self.list("radii", Vec::new())?,
                self.list("values", Vec::new())?,
            )?,
            "nonexistence" => Potential::Nonexistence,
            other => bail!("[{}] unknown potential '{other}'", self.name),
        })
    }

    pub fn families(&self) -> Result<Vec<Family>> {
        let names: Vec<String> = self.list(
            "families",
            Family::ALL.iter().map(|f| f.label().to_string()).collect(),
        )?;
        Ok(names
            .iter()
            .map(|n| Family::parse(n))
            .collect::<nel_core::Result<_>>()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let cfg = Config::parse("top = 1\n[a]\nx = 2.5  # note\nys = 1, 2,3\n").unwrap();
        assert_eq!(cfg.section("").get("top", 0usize).unwrap(), 1);
        assert_eq!(cfg.section("a").get("x", 0.0).unwrap(), 2.5);
        assert_eq!(
            cfg.section("a").list::<u32>("ys", vec![]).unwrap(),
            vec![1, 2, 3]
        );
        assert_eq!(cfg.section("a").get("missing", 7).unwrap(), 7);
        cfg.check_unused().unwrap();
        assert_eq!(cfg.echo(), "top = 1\n[a]\nx = 2.5\nys = 1, 2,3\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::parse("[a\n").is_err());
        assert!(Config::parse("novalue\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        let cfg = Config::parse("[s]\ntypo = 3\n").unwrap();
        assert!(cfg.check_unused().is_err());
        assert!(cfg.section("s").get::<f64>("typo", 0.0).is_ok());
        let cfg = Config::parse("[s]\nx = abc\n").unwrap();
        assert!(cfg.section("s").get::<f64>("x", 0.0).is_err());
    }

    #[test]
    fn log_range_defaults_and_explicit() {
        let cfg = Config::parse("[s]\neps = 0.1, 0.2\n").unwrap();
        assert_eq!(
            cfg.section("s").log_range("eps", 1.0, 2.0, 3).unwrap(),
            vec![0.1, 0.2]
        );
        let r = cfg.section("s").log_range("mass", 1.0, 100.0, 3).unwrap();
        assert!((r[1] - 10.0).abs() < 1e-12);
    }
}
