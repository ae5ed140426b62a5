use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BlockLayout, TimeSeriesSample, VarParameters};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// On-disk parameter file. `A[k]` is the row-major `A_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamFile {
    pub p: usize,
    pub dims: BlockLayout,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Gamma_diag")]
    pub gamma_diag: Vec<f64>,
}

impl ParamFile {
    pub fn from_params<T: Real>(params: &VarParameters<T>) -> Self {
        let a = params
            .coeffs()
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect())
            .collect();
        Self {
            p: params.order(),
            dims: params.layout_or_default(),
            a,
            gamma_diag: params.noise_diag().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn to_params<T: Real>(&self) -> Result<VarParameters<T>> {
        if self.a.len() != self.p {
            return Err(Error::Parse(format!("p = {} but {} matrices given", self.p, self.a.len())));
        }
        let d = self.dims.dim();
        let mut coeffs = Vec::with_capacity(self.p);
        for (k, rows) in self.a.iter().enumerate() {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::Parse(format!("A[{k}] is not {d}x{d}")));
            }
            coeffs.push(DMatrix::from_fn(d, d, |i, j| T::of(rows[i][j])));
        }
        let noise = DVector::from_iterator(self.gamma_diag.len(), self.gamma_diag.iter().map(|&g| T::of(g)));
        VarParameters::new(coeffs, noise, Some(self.dims))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter files always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Header `t,I1..,H1..,X1..,Y1..`, one row per time point, 17 significant digits.
pub fn write_sample_csv<T: Real, W: Write>(sample: &TimeSeriesSample<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(sample.layout().labels());
    w.write_record(&header).map_err(csv_err)?;
    for (k, col) in sample.data().column_iter().enumerate() {
        let mut row = vec![(k + 1).to_string()];
        row.extend(col.iter().map(|v| format!("{:.16e}", v.as_f64())));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Inverse of [`write_sample_csv`]; the layout is recovered from the header.
pub fn read_sample_csv<T: Real, R: Read>(input: R) -> Result<TimeSeriesSample<T>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse("first column must be t".into()));
    }
    let mut counts = [0usize; 4];
    let mut last_block = 0;
    for name in &header[1..] {
        let b = "IHXY"
            .find(name.chars().next().unwrap_or('?'))
            .ok_or_else(|| Error::Parse(format!("unknown column {name}")))?;
        if b < last_block {
            return Err(Error::Parse("columns must be ordered I, H, X, Y".into()));
        }
        last_block = b;
        counts[b] += 1;
    }
    let layout = BlockLayout::new(counts[0], counts[1], counts[2], counts[3]);
    let mut cols = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Parse("ragged row".into()));
        }
        for field in rec.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse(format!("not a number: {field}")))?;
            cols.push(T::of(v));
        }
    }
    let d = layout.dim();
    let len = if d == 0 { 0 } else { cols.len() / d };
    TimeSeriesSample::new(DMatrix::from_column_slice(d, len, &cols), layout)
}
