//! CSV output. Floats carry 6 significant digits; rows end in `\n`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use evolsort::analysis::format_g6;
use evolsort::harness::TrajectoryRecord;

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "step,phase,mdev,dev,kendall,phi,psi,max_delta,sorts,mixes";

/// A CSV sink on a file or stdout that names the path in IO errors.
pub struct Sink {
    out: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(Some(p), e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { out, path: path.map(Path::to_path_buf) })
    }

    #[cfg(test)]
    pub fn from_writer(out: Box<dyn Write>) -> Self {
        Sink { out, path: None }
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line = fields.into_iter().map(|f| f.as_ref().to_string()).collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}").map_err(|e| io_err(self.path.as_deref(), e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| io_err(self.path.as_deref(), e))
    }
}

fn io_err(path: Option<&Path>, e: io::Error) -> CliError {
    match path {
        Some(p) => CliError::Runtime(format!("{}: {e}", p.display())),
        None => CliError::Runtime(format!("stdout: {e}")),
    }
}

pub fn float(x: f64) -> String {
    format_g6(x)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Header and one row per record; aux columns are empty when absent.
pub fn emit_trajectory(sink: &mut Sink, records: &[TrajectoryRecord]) -> Result<(), CliError> {
    sink.row([TRAJECTORY_HEADER])?;
    for r in records {
        sink.row([
            r.step.to_string(),
            r.phase.to_string(),
            r.mdev.to_string(),
            r.dev.to_string(),
            r.kendall.to_string(),
            opt(r.phi),
            opt(r.psi),
            opt(r.max_delta),
            r.sorts.to_string(),
            r.mixes.to_string(),
        ])?;
    }
    Ok(())
}
