//! Result files: `# key=value` provenance lines followed by the body.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

/// Some verification did not pass; reported with exit status 1.
#[derive(Debug)]
pub struct CheckFailure(pub String);

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailure {}

pub struct Report {
    header: Vec<(String, String)>,
    body: Vec<u8>,
    started: Instant,
}

impl Report {
    pub fn new() -> Self {
        Report {
            header: Vec::new(),
            body: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    pub fn body(&mut self) -> &mut Vec<u8> {
        &mut self.body
    }

    pub fn csv(&mut self) -> csv::Writer<&mut Vec<u8>> {
        csv::Writer::from_writer(&mut self.body)
    }

    /// Writes the header, the elapsed time and the body to `path` or stdout.
    pub fn finish(mut self, path: Option<&Path>) -> Result<()> {
        let elapsed = self.started.elapsed().as_secs_f64();
        self.meta("wall_clock_s", format!("{elapsed:.3}"));
        let mut text = Vec::new();
        for (k, v) in &self.header {
            writeln!(text, "# {k}={v}")?;
        }
        text.extend_from_slice(&self.body);
        match path {
            Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(&text)?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}
