//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        Table { name, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

pub enum Artifact {
    Csv(Table),
    Text(&'static str, String),
}

impl Artifact {
    fn name(&self) -> &'static str {
        match self {
            Artifact::Csv(t) => t.name,
            Artifact::Text(name, _) => name,
        }
    }

    fn rows(&self) -> usize {
        match self {
            Artifact::Csv(t) => t.rows.len(),
            Artifact::Text(_, body) => body.lines().count(),
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        match self {
            Artifact::Csv(t) => t.write(dir).map(|_| ()),
            Artifact::Text(name, body) => {
                let path = dir.join(name);
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
            }
        }
    }
}

#[derive(Serialize, Default, Clone, Copy, Debug)]
pub struct PointSummary {
    pub total: usize,
    pub ok: usize,
    pub exceptional: usize,
    pub failed: usize,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    status: &'a str,
    exit_code: Option<i32>,
    argv: &'a [String],
    /// Resolved config in config-file layout; feeding this file back through
    /// `--config` repeats the run.
    config: &'a Value,
    workers: usize,
    seeds: &'a Value,
    started_unix_s: u64,
    wall_clock_s: Option<f64>,
    points: PointSummary,
    summary: &'a Value,
    files: Vec<FileEntry>,
}

pub struct Run {
    pub dir: PathBuf,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub workers: usize,
    pub seeds: Value,
    started: u64,
    clock: Instant,
}

pub const MANIFEST: &str = "manifest.json";

impl Run {
    pub fn start(dir: PathBuf, subcommand: &str, config: Value, workers: usize, seeds: Value) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let run = Run {
            dir,
            subcommand: subcommand.to_string(),
            argv: std::env::args().collect(),
            config,
            workers,
            seeds,
            started: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            clock: Instant::now(),
        };
        run.write_manifest("running", None, PointSummary::default(), &Value::Null, &[], false)?;
        Ok(run)
    }

    fn write_manifest(
        &self,
        status: &str,
        exit_code: Option<i32>,
        points: PointSummary,
        summary: &Value,
        tables: &[Artifact],
        done: bool,
    ) -> Result<()> {
        let m = Manifest {
            tool: "mqc",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            status,
            exit_code,
            argv: &self.argv,
            config: &self.config,
            workers: self.workers,
            seeds: &self.seeds,
            started_unix_s: self.started,
            wall_clock_s: done.then(|| self.clock.elapsed().as_secs_f64()),
            points,
            summary,
            files: tables.iter().map(|t| FileEntry { path: t.name().to_string(), rows: t.rows() }).collect(),
        };
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes every table, then the final manifest.
    pub fn finish(&self, tables: &[Artifact], points: PointSummary, summary: &Value, status: &str, code: i32) -> Result<()> {
        for t in tables {
            t.write(&self.dir)?;
        }
        self.write_manifest(status, Some(code), points, summary, tables, true)
    }
}
