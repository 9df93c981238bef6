use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Training pairs stored row-major: `inputs` is `n x d_in`, `targets` is `n x d_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d_in: usize,
    d_out: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(d_in: usize, d_out: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(invalid("dataset dimensions must be positive"));
        }
        if inputs.is_empty() || inputs.len() % d_in != 0 {
            return Err(invalid("input matrix is empty or ragged"));
        }
        let n = inputs.len() / d_in;
        if targets.len() != n * d_out {
            return Err(Error::DimensionMismatch {
                expected: n * d_out,
                got: targets.len(),
            });
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset entry".into()));
        }
        Ok(Dataset {
            d_in,
            d_out,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.d_in
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.d_in..(k + 1) * self.d_in]
    }

    pub fn target(&self, k: usize) -> &[f64] {
        &self.targets[k * self.d_out..(k + 1) * self.d_out]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Reads CSV with a header row, `d_in` input columns then target columns.
    pub fn read_csv<R: BufRead>(reader: R, d_in: usize) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let cols = header.split(',').count();
        if cols <= d_in {
            return Err(Error::Parse(format!(
                "header has {cols} columns, need more than d_in = {d_in}"
            )));
        }
        let d_out = cols - d_in;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != cols {
                return Err(Error::Parse(format!(
                    "line {}: expected {cols} columns, got {}",
                    lineno + 2,
                    vals.len()
                )));
            }
            inputs.extend_from_slice(&vals[..d_in]);
            targets.extend_from_slice(&vals[d_in..]);
        }
        Dataset::new(d_in, d_out, inputs, targets)
    }

    /// Header `x0,..,y0,..`; values in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.d_in)
            .map(|i| format!("x{i}"))
            .chain((0..self.d_out).map(|i| format!("y{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            let row: Vec<String> = self
                .input(k)
                .iter()
                .chain(self.target(k))
                .map(|v| format!("{v:?}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
