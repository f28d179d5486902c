//! Grids, functional samples, Gaussian-process simulation, and CSV ingestion.
//!
//! A [`FunctionalSample`] is a set of curves discretized on a shared
//! [`Grid`]; it is the universal input of every depth measure and test in
//! this crate. Curves are stored only at grid points: no smoothing or basis
//! representation is ever applied.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{standard_normal, RngSeed};

/// Ordered evaluation times `t_1 < ... < t_G` within an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Build a grid from explicit points.
    ///
    /// Points must be finite, strictly increasing, and at least two.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "grid points must be strictly increasing".into(),
            ));
        }
        Ok(Grid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor guarantees at least 2 points
    }

    /// Composite trapezoid-rule quadrature weights for this grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let g = self.points.len();
        let t = &self.points;
        let mut w = vec![0.0; g];
        w[0] = (t[1] - t[0]) / 2.0;
        w[g - 1] = (t[g - 1] - t[g - 2]) / 2.0;
        for j in 1..g - 1 {
            w[j] = (t[j + 1] - t[j - 1]) / 2.0;
        }
        w
    }

    /// Per-point comparison with tolerance, used when reconciling grids
    /// parsed from separate files.
    pub fn approx_eq(&self, other: &Grid, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .points
                .iter()
                .zip(other.points.iter())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Uniformly spaced grid of `count` points from `a` to `b` inclusive.
pub fn make_grid(a: f64, b: f64, count: usize) -> Result<Grid> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "invalid range: a={a}, b={b} (need a < b)"
        )));
    }
    if count < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {count}"
        )));
    }
    let step = (b - a) / (count - 1) as f64;
    let mut points: Vec<f64> = (0..count).map(|j| a + step * j as f64).collect();
    points[0] = a;
    points[count - 1] = b;
    Grid::new(points)
}

/// A set of curves observed on a shared grid, one row per curve.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalSample {
    grid: Grid,
    values: Vec<f64>, // row-major, len = n * grid.len()
    n: usize,
    labels: Option<Vec<String>>,
}

impl FunctionalSample {
    /// Build a sample from per-curve rows.
    pub fn new(grid: Grid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let g = grid.len();
        if rows.is_empty() {
            return Err(Error::InvalidArgument("sample needs at least 1 curve".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * g);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != g {
                return Err(Error::InvalidArgument(format!(
                    "curve {i} has {} values, grid has {g} points",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "curve {i} contains a non-finite value"
                )));
            }
            values.extend_from_slice(row);
        }
        let n = rows.len();
        Ok(FunctionalSample {
            grid,
            values,
            n,
            labels: None,
        })
    }

    /// Build a sample from a flat row-major buffer.
    pub fn from_flat(grid: Grid, values: Vec<f64>, n: usize) -> Result<Self> {
        let g = grid.len();
        if n == 0 {
            return Err(Error::InvalidArgument("sample needs at least 1 curve".into()));
        }
        if values.len() != n * g {
            return Err(Error::InvalidArgument(format!(
                "flat buffer has {} values, expected {} ({} curves x {} points)",
                values.len(),
                n * g,
                n,
                g
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in sample".into()));
        }
        Ok(FunctionalSample {
            grid,
            values,
            n,
            labels: None,
        })
    }

    /// Attach one label per curve.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} curves",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of curves.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of grid points per curve.
    pub fn num_points(&self) -> usize {
        self.grid.len()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[i * g..(i + 1) * g]
    }

    pub fn curves(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    /// All curve values at grid point `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Concatenate two samples on the same grid (`self`'s curves first).
    /// Labels are kept only when both sides carry them.
    pub fn pooled(&self, other: &FunctionalSample) -> Result<FunctionalSample> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => {
                let mut l = a.clone();
                l.extend_from_slice(b);
                Some(l)
            }
            _ => None,
        };
        Ok(FunctionalSample {
            grid: self.grid.clone(),
            values,
            n: self.n + other.n,
            labels,
        })
    }

    /// Copy of this sample with one extra curve appended (labels dropped).
    pub fn with_appended(&self, row: &[f64]) -> Result<FunctionalSample> {
        if row.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let mut values = self.values.clone();
        values.extend_from_slice(row);
        Ok(FunctionalSample {
            grid: self.grid.clone(),
            values,
            n: self.n + 1,
            labels: None,
        })
    }

    /// Same curves, rebound to `grid` (used after a tolerant grid match).
    pub fn with_grid(&self, grid: Grid) -> Result<FunctionalSample> {
        if grid.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(FunctionalSample {
            grid,
            values: self.values.clone(),
            n: self.n,
            labels: self.labels.clone(),
        })
    }
}

/// Named mean functions available to the simulation models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanFunction {
    /// `30 t^{3/2} (1 - t)`
    #[serde(rename = "peak32")]
    Peak32,
    /// `30 t (1 - t)^2`
    #[serde(rename = "peak12")]
    Peak12,
}

impl MeanFunction {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            MeanFunction::Peak32 => 30.0 * t.powf(1.5) * (1.0 - t),
            MeanFunction::Peak12 => 30.0 * t * (1.0 - t) * (1.0 - t),
        }
    }
}

/// Parameters of a simulation model: mean function, mean shift, and the
/// exponential covariance `amp * exp(-rate * |t - s|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mean: MeanFunction,
    /// Scalar shift added to the mean function.
    pub delta: f64,
    /// Covariance amplitude (variance at any fixed point).
    pub amp: f64,
    /// Covariance decay rate.
    pub rate: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amp > 0.0) || !self.amp.is_finite() {
            return Err(Error::InvalidArgument(format!("amp must be > 0, got {}", self.amp)));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rate must be > 0, got {}",
                self.rate
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidArgument("delta must be finite".into()));
        }
        Ok(())
    }

    /// Mean of the model at time `t`, including the shift.
    pub fn mean_at(&self, t: f64) -> f64 {
        self.mean.eval(t) + self.delta
    }
}

/// In-place lower-triangular Cholesky factorization of a symmetric matrix.
/// Returns false when a pivot is not strictly positive.
fn cholesky_in_place(a: &mut [f64], g: usize) -> bool {
    for j in 0..g {
        let mut d = a[j * g + j];
        for k in 0..j {
            d -= a[j * g + k] * a[j * g + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * g + j] = d;
        for i in (j + 1)..g {
            let mut s = a[i * g + j];
            for k in 0..j {
                s -= a[i * g + k] * a[j * g + k];
            }
            a[i * g + j] = s / d;
        }
    }
    // zero the strict upper triangle so the buffer is exactly L
    for j in 0..g {
        for i in 0..j {
            a[i * g + j] = 0.0;
        }
    }
    true
}

/// Lower Cholesky factor of the exponential covariance on `grid`.
///
/// A small diagonal jitter (`1e-10 * amp`) is added only if the plain
/// factorization fails: exponential-covariance matrices on fine grids are
/// near-singular.
fn covariance_factor(spec: &ModelSpec, grid: &Grid) -> Result<Vec<f64>> {
    let g = grid.len();
    let t = grid.points();
    let build = |jitter: f64| -> Vec<f64> {
        let mut a = vec![0.0; g * g];
        for j in 0..g {
            for l in 0..g {
                a[j * g + l] = spec.amp * (-spec.rate * (t[j] - t[l]).abs()).exp();
            }
            a[j * g + j] += jitter;
        }
        a
    };
    let mut a = build(0.0);
    if cholesky_in_place(&mut a, g) {
        return Ok(a);
    }
    let mut a = build(1e-10 * spec.amp);
    if cholesky_in_place(&mut a, g) {
        return Ok(a);
    }
    Err(Error::CovarianceFactorization)
}

/// Simulate `n` independent curves `mean(t) + delta + e(t)` where `e` is a
/// zero-mean Gaussian process with covariance `amp * exp(-rate * |t - s|)`.
///
/// Identical `(spec, n, grid, seed)` inputs give bit-identical outputs.
/// Curve `i` draws from substream `(seed, i)`, so growing `n` never
/// reshuffles earlier curves.
pub fn simulate_sample(
    spec: &ModelSpec,
    n: usize,
    grid: &Grid,
    seed: RngSeed,
) -> Result<FunctionalSample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let g = grid.len();
    let chol = covariance_factor(spec, grid)?;
    let mean: Vec<f64> = grid.points().iter().map(|&t| spec.mean_at(t)).collect();

    let mut values = vec![0.0; n * g];
    let mut z = vec![0.0; g];
    for i in 0..n {
        let mut rng = seed.stream_rng(i as u64);
        for zj in z.iter_mut() {
            *zj = standard_normal(&mut rng);
        }
        let row = &mut values[i * g..(i + 1) * g];
        for j in 0..g {
            let mut e = 0.0;
            for k in 0..=j {
                e += chol[j * g + k] * z[k];
            }
            row[j] = mean[j] + e;
        }
    }
    FunctionalSample::from_flat(grid.clone(), values, n)
}

/// Column layout of a curve CSV file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CsvLayout {
    /// Detect from the header: a first cell equal to `label` means labeled.
    #[default]
    Auto,
    /// Header is grid values only; every row is a bare curve.
    Plain,
    /// First column holds a per-curve label; the rest is the curve.
    Labeled,
}

/// Parse a curve CSV document.
///
/// The header row holds the grid values (optionally preceded by a `label`
/// column); each subsequent row is one curve. Ragged rows are rejected.
pub fn parse_sample_csv(text: &str, layout: CsvLayout) -> Result<FunctionalSample> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::CsvParse { line: 1, message: "empty file".into() })?;
    let header_cells: Vec<&str> = header.split(',').map(str::trim).collect();

    let labeled = match layout {
        CsvLayout::Labeled => true,
        CsvLayout::Plain => false,
        CsvLayout::Auto => header_cells.first().map(|c| *c == "label").unwrap_or(false),
    };
    let grid_cells = if labeled { &header_cells[1..] } else { &header_cells[..] };

    let mut grid_points = Vec::with_capacity(grid_cells.len());
    for (col, cell) in grid_cells.iter().enumerate() {
        let v: f64 = cell.parse().map_err(|_| Error::CsvParse {
            line: 1,
            message: format!("malformed grid value {cell:?} in column {}", col + 1),
        })?;
        grid_points.push(v);
    }
    let grid = Grid::new(grid_points)
        .map_err(|e| Error::CsvParse { line: 1, message: format!("bad grid header: {e}") })?;
    let g = grid.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = g + usize::from(labeled);
        if cells.len() != expected {
            return Err(Error::CsvShape {
                line: line_no,
                expected,
                found: cells.len(),
            });
        }
        let value_cells = if labeled {
            labels.push(cells[0].to_string());
            &cells[1..]
        } else {
            &cells[..]
        };
        let mut row = Vec::with_capacity(g);
        for cell in value_cells {
            let v: f64 = cell.parse().map_err(|_| Error::CsvParse {
                line: line_no,
                message: format!("malformed number {cell:?}"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::CsvParse {
            line: 2,
            message: "file contains a header but no curves".into(),
        });
    }
    let sample = FunctionalSample::new(grid, rows)?;
    if labeled {
        sample.with_labels(labels)
    } else {
        Ok(sample)
    }
}

/// Load a curve CSV file. See [`parse_sample_csv`] for the format.
pub fn load_sample_csv(path: impl AsRef<Path>, layout: CsvLayout) -> Result<FunctionalSample> {
    let text = std::fs::read_to_string(path)?;
    parse_sample_csv(&text, layout)
}

fn push_float(out: &mut String, v: f64) {
    // 17 significant digits: exact f64 round-trip
    let _ = write!(out, "{v:.16e}");
}

/// Render a sample in the curve CSV format (label column included when the
/// sample is labeled). Deterministic: row order preserved, 17 significant
/// digits per value.
pub fn sample_to_csv(sample: &FunctionalSample) -> String {
    let mut out = String::new();
    if sample.labels().is_some() {
        out.push_str("label");
        for &t in sample.grid().points() {
            out.push(',');
            push_float(&mut out, t);
        }
    } else {
        for (j, &t) in sample.grid().points().iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            push_float(&mut out, t);
        }
    }
    out.push('\n');
    for i in 0..sample.len() {
        if let Some(labels) = sample.labels() {
            out.push_str(&labels[i]);
            out.push(',');
        }
        for (j, &v) in sample.curve(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            push_float(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// Write a sample as CSV. Inverse of [`load_sample_csv`] on well-formed data.
pub fn write_sample_csv(sample: &FunctionalSample, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sample_to_csv(sample))?;
    Ok(())
}

/// Split a labeled sample into (curves matching `label`, the rest).
/// Both halves share the input grid and keep their labels.
pub fn split_by_label(
    sample: &FunctionalSample,
    label: &str,
) -> Result<(FunctionalSample, FunctionalSample)> {
    let labels = sample.labels().ok_or(Error::MissingLabels)?;
    let mut hit_rows = Vec::new();
    let mut hit_labels = Vec::new();
    let mut rest_rows = Vec::new();
    let mut rest_labels = Vec::new();
    for i in 0..sample.len() {
        if labels[i] == label {
            hit_rows.push(sample.curve(i).to_vec());
            hit_labels.push(labels[i].clone());
        } else {
            rest_rows.push(sample.curve(i).to_vec());
            rest_labels.push(labels[i].clone());
        }
    }
    if hit_rows.is_empty() || rest_rows.is_empty() {
        return Err(Error::EmptyGroup(label.to_string()));
    }
    let hit = FunctionalSample::new(sample.grid().clone(), hit_rows)?.with_labels(hit_labels)?;
    let rest = FunctionalSample::new(sample.grid().clone(), rest_rows)?.with_labels(rest_labels)?;
    Ok((hit, rest))
}
