use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Failure categories with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(cvgate::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(cvgate::Error::Domain(_) | cvgate::Error::Unreachable(_)) => 3,
            CliError::Lib(cvgate::Error::Truncation(_)) => 4,
            CliError::Lib(cvgate::Error::Degenerate(_)) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<cvgate::Error> for CliError {
    fn from(e: cvgate::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Destination for command output: a file, or stdout when no path is given.
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    fn emit(&self, bytes: &[u8]) -> CliResult<()> {
        match &self.0 {
            Some(p) => std::fs::write(p, bytes)?,
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.emit(s.as_bytes())
    }

    /// RFC 4180 table preceded by one `# config: {...}` line.
    pub fn csv<C: Serialize>(&self, config: &C, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let cfg = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
        let mut buf = format!("# config: {cfg}\r\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut buf);
            let csv_err = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(header).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        self.emit(&buf)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
