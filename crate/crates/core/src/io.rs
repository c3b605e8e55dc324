//! File formats: the JSON parameter file and headed CSV point sets.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EqeError, Result};
use crate::fit::{Feasibility, FitReport, FittedParams};
use crate::params::{EllipticalParams, RadialParams, RingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamForm {
    Radial,
    Ring,
}

/// Summary of a fit carried alongside the fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub model: String,
    pub iterations: usize,
    pub residual: [f64; 2],
    pub converged: bool,
    pub feasibility: Feasibility,
    pub c2: f64,
    pub c4: f64,
}

/// The JSON parameter document accepted and produced by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub dim: usize,
    pub param_form: ParamForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_report: Option<FitSummary>,
}

impl ParamsFile {
    /// Parses and fully validates a document.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ParamsFile =
            serde_json::from_str(text).map_err(|e| EqeError::Parse(format!("params file: {e}")))?;
        file.elliptical()?;
        Ok(file)
    }

    pub fn from_reader<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| EqeError::Parse(format!("reading params file: {e}")))?;
        Self::parse(&text)
    }

    pub fn from_radial(p: &RadialParams) -> Self {
        Self {
            dim: p.dim(),
            param_form: ParamForm::Radial,
            lambda1: Some(p.lambda1()),
            lambda2: Some(p.lambda2()),
            alpha: None,
            radius: None,
            mu: None,
            sigma: None,
            fit_report: None,
        }
    }

    pub fn from_elliptical(p: &EllipticalParams) -> Self {
        let sigma = p.sigma();
        let d = p.dim();
        Self {
            mu: Some(p.mu().iter().copied().collect()),
            sigma: Some(
                (0..d)
                    .map(|i| (0..d).map(|j| sigma[(i, j)]).collect())
                    .collect(),
            ),
            ..Self::from_radial(p.radial())
        }
    }

    pub fn from_fit(report: &FitReport) -> Self {
        let (mut file, model) = match &report.params {
            FittedParams::Radial(p) => (Self::from_radial(p), "spherical"),
            FittedParams::Elliptical(p) => (Self::from_elliptical(p), "elliptical"),
        };
        file.fit_report = Some(FitSummary {
            model: model.into(),
            iterations: report.iterations,
            residual: [report.residual.0, report.residual.1],
            converged: report.converged,
            feasibility: report.feasibility,
            c2: report.targets.c2(),
            c4: report.targets.c4(),
        });
        file
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params file serializes")
    }

    /// True when neither `mu` nor `sigma` is given.
    pub fn is_spherical(&self) -> bool {
        self.mu.is_none() && self.sigma.is_none()
    }

    pub fn radial(&self) -> Result<RadialParams> {
        match self.param_form {
            ParamForm::Radial => {
                if self.alpha.is_some() || self.radius.is_some() {
                    return Err(EqeError::Parse(
                        "radial form must not set alpha or R".into(),
                    ));
                }
                let (Some(l1), Some(l2)) = (self.lambda1, self.lambda2) else {
                    return Err(EqeError::Parse(
                        "radial form requires lambda1 and lambda2".into(),
                    ));
                };
                RadialParams::new(self.dim, l1, l2)
            }
            ParamForm::Ring => {
                if self.lambda1.is_some() || self.lambda2.is_some() {
                    return Err(EqeError::Parse(
                        "ring form must not set lambda1 or lambda2".into(),
                    ));
                }
                let (Some(alpha), Some(r)) = (self.alpha, self.radius) else {
                    return Err(EqeError::Parse("ring form requires alpha and R".into()));
                };
                Ok(RingParams::new(self.dim, alpha, r)?.to_radial())
            }
        }
    }

    /// Parameters with `mu` defaulting to 0 and `sigma` to the identity.
    pub fn elliptical(&self) -> Result<EllipticalParams> {
        let radial = self.radial()?;
        let d = self.dim;
        let mu = match &self.mu {
            Some(m) => DVector::from_column_slice(m),
            None => DVector::zeros(d),
        };
        match &self.sigma {
            None => {
                let id = DMatrix::identity(d, d);
                EllipticalParams::from_factor(mu, id, radial)
            }
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(EqeError::Parse(format!("sigma must be {d}x{d}")));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                EllipticalParams::from_sigma(mu, DMatrix::from_row_slice(d, d, &flat), radial)
            }
        }
    }
}

/// Reads a headed CSV of points, one row per point.
pub fn read_points_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| EqeError::Parse(format!("CSV header: {e}")))?
        .clone();
    let width = header.len();
    if width == 0 || header.iter().all(|h| h.is_empty()) {
        return Err(EqeError::Parse("CSV is empty".into()));
    }
    if header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(EqeError::Parse("CSV header row is missing".into()));
    }
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| EqeError::Parse(format!("CSV row {}: {e}", i + 2)))?;
        if rec.len() != width {
            return Err(EqeError::Parse(format!(
                "CSV row {} has {} fields, header has {width}",
                i + 2,
                rec.len()
            )));
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| {
                EqeError::Parse(format!("CSV row {}: '{field}' is not a number", i + 2))
            })?;
            if !v.is_finite() {
                return Err(EqeError::Parse(format!(
                    "CSV row {}: non-finite value",
                    i + 2
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(EqeError::Parse("CSV has no data rows".into()));
    }
    Ok(DMatrix::from_row_slice(rows, width, &values))
}

/// Formats with 17 significant digits so values round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header line and rows of numbers.
pub fn write_csv<W: Write, I, R>(writer: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| EqeError::Parse(format!("writing CSV: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|&v| fmt_f64(v)))
            .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| EqeError::Parse(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Writes points with header `x1,...,xD`.
pub fn write_points_csv<W: Write>(writer: W, points: &DMatrix<f64>) -> Result<()> {
    let names: Vec<String> = (1..=points.ncols()).map(|j| format!("x{j}")).collect();
    let header: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let rows = points
        .row_iter()
        .map(|r| r.iter().copied().collect::<Vec<f64>>());
    write_csv(writer, &header, rows)
}
