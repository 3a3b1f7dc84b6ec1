//! Output directory handling: CSV tables, SVG plots, verdicts and `run.log`.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::plot::Plot;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// State of one subcommand run.
pub struct Run {
    pub name: &'static str,
    pub seed: u64,
    out: PathBuf,
    notes: Vec<String>,
    verdicts: Vec<Verdict>,
}

impl Run {
    pub fn new(name: &'static str, out: &Path, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self {
            name,
            seed,
            out: out.to_path_buf(),
            notes: Vec::new(),
            verdicts: Vec::new(),
        })
    }

    pub fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{}{suffix}.{ext}", self.name))
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    /// Writes `<name><suffix>.csv` from serializable rows.
    pub fn write_csv<T: Serialize>(&self, suffix: &str, rows: &[T]) -> Result<()> {
        let path = self.path(suffix, "csv");
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_svg(&self, suffix: &str, plot: &Plot) -> Result<()> {
        let path = self.path(suffix, "svg");
        std::fs::write(&path, plot.render()).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `run.log` and returns whether every verdict passed.
    pub fn finish(self, config_echo: &str) -> Result<bool> {
        let mut log = String::new();
        let _ = writeln!(log, "nel {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(log, "subcommand {}", self.name);
        let _ = writeln!(log, "seed {}", self.seed);
        let _ = writeln!(log, "\n# config");
        log.push_str(config_echo);
        let _ = writeln!(log, "\n# results");
        for n in &self.notes {
            let _ = writeln!(log, "{n}");
        }
        let _ = writeln!(log, "\n# verdicts");
        for v in &self.verdicts {
            let _ = writeln!(
                log,
                "{} {}: {}",
                if v.pass { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            );
        }
        let path = self.out.join("run.log");
        std::fs::write(&path, log).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.verdicts.iter().all(|v| v.pass))
    }
}
