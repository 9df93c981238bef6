use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use serde_json::Value;

use crate::args::{Cli, Format};

/// Why a command stopped early. Bad input exits with 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Internal(String),
}

impl Failure {
    pub fn report(&self) -> ExitCode {
        match self {
            Failure::Usage(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Internal(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
        }
    }
}

impl From<lsym::Error> for Failure {
    fn from(e: lsym::Error) -> Self {
        use lsym::Error::*;
        match e {
            SizeGuard { .. } | NonFinite(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type CmdResult = Result<bool, Failure>;

/// Global flags after environment overrides.
pub struct Ctx {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
}

impl Ctx {
    pub fn new(cli: &Cli) -> Result<Self, Failure> {
        let threads = match std::env::var("LSYM_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("LSYM_THREADS must be a positive integer, got {v:?}")))?,
            ),
            _ => cli.threads,
        };
        if threads == Some(0) {
            return Err(Failure::Usage("thread count must be positive".into()));
        }
        if let Some(t) = cli.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::Usage("--tol must be positive".into()));
            }
        }
        Ok(Ctx {
            format: cli.format,
            out: cli.out.clone(),
            seed: cli.seed,
            tol: cli.tol,
            threads,
        })
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Writes `text` to `--out` when set, else to stdout.
    pub fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => std::fs::write(p, text)?,
            None => stdout(text),
        }
        Ok(())
    }

    /// Renders a report as JSON, CSV (scalar fields only) or the given text.
    pub fn render(&self, report: &Value, text: &str) -> String {
        match self.format {
            Some(Format::Json) => format!("{}\n", serde_json::to_string_pretty(report).expect("json value")),
            Some(Format::Csv) => scalar_csv(report),
            None => format!("{text}\n"),
        }
    }

    /// Like [`Ctx::render`] but always prints to stdout (for commands whose
    /// `--out` names a model file or directory).
    pub fn print(&self, report: &Value, text: &str) {
        stdout(&self.render(report, text));
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// One header row and one value row from the scalar fields of an object.
pub fn scalar_csv(v: &Value) -> String {
    let mut keys = Vec::new();
    let mut vals = Vec::new();
    if let Value::Object(map) = v {
        for (k, x) in map {
            let cell = match x {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Null => String::new(),
                _ => continue,
            };
            keys.push(k.clone());
            vals.push(cell);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "{}", keys.join(","));
    let _ = writeln!(s, "{}", vals.join(","));
    s
}
