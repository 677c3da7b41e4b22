// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observed sequences and their CSV representation.
//!
//! Univariate files have the header `index,z`; regression files have
//! `index,y,x_1,...,x_p`. The `index` column is informational and ignored on
//! read.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Row-major `n x p` covariate matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl Design {
    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("design needs at least one column"));
        }
        if values.len() != n * p {
            return Err(Error::invalid(format!(
                "design buffer holds {} values, expected {n} x {p}",
                values.len()
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeriesData {
    Univariate(Vec<f64>),
    Regression { x: Design, y: Vec<f64> },
}

impl SeriesData {
    pub fn univariate(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::invalid("series must hold at least one observation"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("series contains non-finite values"));
        }
        Ok(Self::Univariate(z))
    }

    pub fn regression(x: Design, y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("series must hold at least one observation"));
        }
        if x.n() != y.len() {
            return Err(Error::invalid(format!(
                "design has {} rows but the response has {} entries",
                x.n(),
                y.len()
            )));
        }
        if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("series contains non-finite values"));
        }
        Ok(Self::Regression { x, y })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Univariate(z) => z.len(),
            Self::Regression { y, .. } => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Covariate dimension; `None` for univariate data.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Univariate(_) => None,
            Self::Regression { x, .. } => Some(x.p()),
        }
    }

    pub fn as_univariate(&self) -> Result<&[f64]> {
        match self {
            Self::Univariate(z) => Ok(z),
            Self::Regression { .. } => Err(Error::invalid("expected univariate data")),
        }
    }

    pub fn as_regression(&self) -> Result<(&Design, &[f64])> {
        match self {
            Self::Regression { x, y } => Ok((x, y)),
            Self::Univariate(_) => Err(Error::invalid("expected regression data")),
        }
    }

    pub(crate) fn check_interval(&self, iv: Interval) -> Result<()> {
        if iv.hi() > self.len() {
            return Err(Error::invalid(format!(
                "interval {iv} exceeds the series length {}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        match self {
            Self::Univariate(z) => {
                out.write_record(["index", "z"])?;
                for (i, v) in z.iter().enumerate() {
                    out.write_record([(i + 1).to_string(), v.to_string()])?;
                }
            }
            Self::Regression { x, y } => {
                let mut header = vec!["index".to_string(), "y".to_string()];
                header.extend((1..=x.p()).map(|j| format!("x_{j}")));
                out.write_record(&header)?;
                let mut row = Vec::with_capacity(x.p() + 2);
                for (i, yi) in y.iter().enumerate() {
                    row.clear();
                    row.push((i + 1).to_string());
                    row.push(yi.to_string());
                    row.extend(x.row(i).iter().map(|v| v.to_string()));
                    out.write_record(&row)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let header = input.headers()?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        let parse = |field: &str, line: usize| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::invalid(format!("line {line}: cannot parse {field:?} as a number"))
            })
        };
        match names.as_slice() {
            ["index", "z"] => {
                let mut z = Vec::new();
                for (line, rec) in input.records().enumerate() {
                    let rec = rec?;
                    z.push(parse(&rec[1], line + 2)?);
                }
                Self::univariate(z)
            }
            ["index", "y", covariates @ ..] if !covariates.is_empty() => {
                for (j, name) in covariates.iter().enumerate() {
                    if *name != format!("x_{}", j + 1) {
                        return Err(Error::invalid(format!(
                            "unexpected column {name:?}; expected x_{}",
                            j + 1
                        )));
                    }
                }
                let p = covariates.len();
                let mut y = Vec::new();
                let mut values = Vec::new();
                for (line, rec) in input.records().enumerate() {
                    let rec = rec?;
                    y.push(parse(&rec[1], line + 2)?);
                    for j in 0..p {
                        values.push(parse(&rec[j + 2], line + 2)?);
                    }
                }
                let x = Design::from_row_major(y.len(), p, values)?;
                Self::regression(x, y)
            }
            _ => Err(Error::invalid(format!(
                "unrecognised header {:?}; expected index,z or index,y,x_1,...",
                names
            ))),
        }
    }
}
