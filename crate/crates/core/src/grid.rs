//! Grids on the truncated half-line and gridded density fields.

use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::interp::MonotoneCubic;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs at least 16 cells, got {0}")]
    TooFewCells(usize),
    #[error("grid edges must start at 0 and increase strictly")]
    BadEdges,
    #[error("stretching ratio must be >= 1, got {0}")]
    BadRatio(f64),
    #[error("field has {values} values but the grid has {cells} cells")]
    LengthMismatch { values: usize, cells: usize },
    #[error("time must be positive, got {0}")]
    BadTime(f64),
    #[error("field is already in {0:?} variables")]
    WrongVariables(Variables),
}

/// Cell edges `0 = x_0 < x_1 < … < x_n = x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    edges: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

pub const MIN_CELLS: usize = 16;

impl RadialGrid {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self, GridError> {
        if edges.len() < MIN_CELLS + 1 {
            return Err(GridError::TooFewCells(edges.len().saturating_sub(1)));
        }
        if edges[0] != 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) || !edges[edges.len() - 1].is_finite() {
            return Err(GridError::BadEdges);
        }
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { edges, centers, widths })
    }

    pub fn uniform(cells: usize, x_max: f64) -> Result<Self, GridError> {
        let h = x_max / cells as f64;
        Self::from_edges((0..=cells).map(|i| i as f64 * h).collect())
    }

    /// Cells grow by `ratio` starting from width `h0`; the last edge is clamped to `x_max`.
    pub fn geometric(h0: f64, ratio: f64, x_max: f64) -> Result<Self, GridError> {
        if !(ratio >= 1.0) {
            return Err(GridError::BadRatio(ratio));
        }
        let mut edges = Vec::new();
        edges.push(0.0);
        let mut h = h0;
        let mut x = 0.0;
        while x < x_max {
            x += h;
            h *= ratio;
            edges.push(x);
        }
        let n = edges.len();
        // Fold a sliver into its neighbour rather than leave a tiny last cell.
        if n > 2 && edges[n - 1] - x_max > 0.5 * (edges[n - 1] - edges[n - 2]) {
            edges.pop();
        }
        let last = edges.len() - 1;
        edges[last] = x_max;
        Self::from_edges(edges)
    }

    /// Geometric grid with exactly `cells` cells, first width `h0`, ending at `x_max`.
    pub fn geometric_cells(cells: usize, h0: f64, x_max: f64) -> Result<Self, GridError> {
        if cells < MIN_CELLS {
            return Err(GridError::TooFewCells(cells));
        }
        let n = cells as f64;
        let ratio = if h0 * n >= x_max {
            1.0
        } else {
            // Solve h0 (q^n - 1)/(q - 1) = x_max in log form by bisection.
            let g = |q: f64| h0.ln() + n * q.ln() - (x_max * (q - 1.0) + h0).ln();
            let (mut lo, mut hi) = (1.0 + 1e-15, 2.0);
            while g(hi) < 0.0 {
                hi = 1.0 + 2.0 * (hi - 1.0);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if ratio == 1.0 {
            return Self::uniform(cells, x_max);
        }
        let mut edges = Vec::with_capacity(cells + 1);
        edges.push(0.0);
        let mut h = h0;
        for _ in 0..cells {
            let x = edges[edges.len() - 1] + h;
            edges.push(x);
            h *= ratio;
        }
        edges[cells] = x_max;
        Self::from_edges(edges)
    }

    /// Splits every cell in two.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(self.x_max());
        Self::from_edges(edges).expect("refinement keeps a valid grid")
    }

    /// Edges divided by `factor` (used by the change of variables).
    pub fn scaled(&self, factor: f64) -> Self {
        let edges = self.edges.iter().map(|e| e * factor).collect();
        Self::from_edges(edges).expect("positive scaling keeps a valid grid")
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    pub fn x_max(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }
}

/// Which variables a field is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variables {
    /// `f(x, t)`.
    Physical,
    /// `F(y, τ)` with `y = x/t`, `τ = ln t`.
    SelfSimilar,
}

impl Variables {
    pub fn tag(&self) -> &'static str {
        match self {
            Variables::Physical => "physical",
            Variables::SelfSimilar => "selfsim",
        }
    }
}

/// `f(x) ≈ coeff (1 + slope·x)^{-exponent}` beyond the last edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coeff: f64,
    pub slope: f64,
    pub exponent: f64,
}

impl PowerTail {
    /// `∫_X^∞ f`.
    pub fn mass(&self, x: f64) -> f64 {
        let u = 1.0 + self.slope * x;
        self.coeff * u.powf(1.0 - self.exponent) / (self.slope * (self.exponent - 1.0))
    }

    /// `∫_X^∞ x f`.
    pub fn moment(&self, x: f64) -> f64 {
        let p = self.exponent;
        let u = 1.0 + self.slope * x;
        self.coeff / (self.slope * self.slope)
            * (u.powf(2.0 - p) / (p - 2.0) - u.powf(1.0 - p) / (p - 1.0))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeff * (1.0 + self.slope * x).powf(-self.exponent)
    }

    /// The self-similar tail of `F_s` read in the given variables at time `t`.
    pub fn self_similar(profile: &crate::SelfSimilarProfile, variables: Variables, t: f64) -> Option<Self> {
        let theta = profile.theta()?;
        if profile.gamma() <= 0.0 {
            return None;
        }
        Some(match variables {
            Variables::SelfSimilar => Self { coeff: profile.c_s(), slope: profile.gamma(), exponent: theta },
            Variables::Physical => Self {
                coeff: profile.c_s() * t.powf(-1.5),
                slope: profile.gamma() / t,
                exponent: theta,
            },
        })
    }
}

/// Cell averages of a density on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: RadialGrid,
    values: Vec<f64>,
    variables: Variables,
    time: f64,
    signed: bool,
    tail: Option<PowerTail>,
}

impl DensityField {
    pub fn new(grid: RadialGrid, values: Vec<f64>, variables: Variables, time: f64) -> Result<Self, GridError> {
        if values.len() != grid.cells() {
            return Err(GridError::LengthMismatch { values: values.len(), cells: grid.cells() });
        }
        Ok(Self { grid, values, variables, time, signed: false, tail: None })
    }

    pub fn zeros(grid: RadialGrid, variables: Variables, time: f64) -> Self {
        let n = grid.cells();
        Self { grid, values: alloc::vec![0.0; n], variables, time, signed: false, tail: None }
    }

    /// Samples `f` at cell centres.
    pub fn sample<F: Fn(f64) -> f64>(grid: RadialGrid, f: F, variables: Variables, time: f64) -> Self {
        let values = grid.centers().iter().map(|&x| f(x)).collect();
        Self { grid, values, variables, time, signed: false, tail: None }
    }

    /// Marks the field as a perturbation that may change sign.
    pub fn into_signed(mut self) -> Self {
        self.signed = true;
        self
    }

    pub fn with_tail(mut self, tail: Option<PowerTail>) -> Self {
        self.tail = tail;
        self
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn variables(&self) -> Variables {
        self.variables
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn tail(&self) -> Option<PowerTail> {
        self.tail
    }

    /// Values for output: unsigned fields have FV undershoot clipped to 0.
    pub fn output_values(&self) -> Vec<f64> {
        if self.signed {
            self.values.clone()
        } else {
            self.values.iter().map(|&v| v.max(0.0)).collect()
        }
    }

    /// Whether an unsigned field stays above `-1e-12·max|f|`.
    pub fn undershoot_ok(&self) -> bool {
        if self.signed {
            return true;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.values.iter().all(|&v| v >= -1e-12 * scale)
    }

    pub fn interpolant(&self) -> MonotoneCubic {
        MonotoneCubic::new(self.grid.centers().to_vec(), self.values.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `∫ x f dx` by the midpoint rule plus the analytic tail when one is attached.
pub fn first_moment(field: &DensityField) -> f64 {
    let body: f64 = field
        .grid
        .centers()
        .iter()
        .zip(field.grid.widths())
        .zip(&field.values)
        .map(|((x, h), v)| x * h * v)
        .sum();
    body + field.tail.map_or(0.0, |t| t.moment(field.grid.x_max()))
}

/// `∫ f dx` by the midpoint rule plus the analytic tail.
pub fn mass(field: &DensityField) -> f64 {
    let body: f64 = field.grid.widths().iter().zip(&field.values).map(|(h, v)| h * v).sum();
    body + field.tail.map_or(0.0, |t| t.mass(field.grid.x_max()))
}

/// `F(y) = t^{3/2} f(t y)` on the grid with edges divided by `t`.
pub fn to_selfsim(field: &DensityField, t: f64) -> Result<DensityField, GridError> {
    if !(t > 0.0) {
        return Err(GridError::BadTime(t));
    }
    if field.variables != Variables::Physical {
        return Err(GridError::WrongVariables(field.variables));
    }
    let factor = t.powf(1.5);
    Ok(DensityField {
        grid: field.grid.scaled(1.0 / t),
        values: field.values.iter().map(|v| v * factor).collect(),
        variables: Variables::SelfSimilar,
        time: t.ln(),
        signed: field.signed,
        tail: field.tail.map(|p| PowerTail { coeff: p.coeff * factor, slope: p.slope * t, exponent: p.exponent }),
    })
}

/// Inverse of [`to_selfsim`]; `t = e^τ` is taken from the field.
pub fn from_selfsim(field: &DensityField) -> Result<DensityField, GridError> {
    if field.variables != Variables::SelfSimilar {
        return Err(GridError::WrongVariables(field.variables));
    }
    let t = field.time.exp();
    let factor = t.powf(-1.5);
    Ok(DensityField {
        grid: field.grid.scaled(t),
        values: field.values.iter().map(|v| v * factor).collect(),
        variables: Variables::Physical,
        time: t,
        signed: field.signed,
        tail: field.tail.map(|p| PowerTail { coeff: p.coeff * factor, slope: p.slope / t, exponent: p.exponent }),
    })
}

/// A gridded field read as a function: monotone cubic through cell centres,
/// its attached tail (or zero) beyond the last edge.
pub struct FieldProfile {
    interp: MonotoneCubic,
    edges: Vec<f64>,
    values: Vec<f64>,
    x_max: f64,
    tail: Option<PowerTail>,
    cum_mass: Vec<f64>,
    cum_moment: Vec<f64>,
}

impl FieldProfile {
    pub fn new(field: &DensityField) -> Self {
        let n = field.grid.cells();
        // Suffix sums of cell contributions.
        let mut cum_mass = alloc::vec![0.0; n + 1];
        let mut cum_moment = alloc::vec![0.0; n + 1];
        for i in (0..n).rev() {
            let h = field.grid.widths()[i];
            cum_mass[i] = cum_mass[i + 1] + h * field.values[i];
            cum_moment[i] = cum_moment[i + 1] + h * field.grid.centers()[i] * field.values[i];
        }
        Self {
            interp: field.interpolant(),
            edges: field.grid.edges().to_vec(),
            values: field.values.clone(),
            x_max: field.grid.x_max(),
            tail: field.tail,
            cum_mass,
            cum_moment,
        }
    }

    fn cell_of(&self, r: f64) -> usize {
        match self.edges.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }
}

impl Profile for FieldProfile {
    fn value(&self, x: f64) -> f64 {
        if x > self.x_max {
            return self.tail.map_or(0.0, |t| t.value(x));
        }
        self.interp.eval(x)
    }

    fn tail_mass(&self, r: f64) -> f64 {
        let tail = self.tail.map_or(0.0, |t| t.mass(self.x_max.max(r)));
        if r >= self.x_max {
            return tail;
        }
        let r = r.max(0.0);
        let i = self.cell_of(r);
        // Piecewise-constant cell averages: partial first cell plus full suffix.
        let partial = (self.edges[i + 1] - r) * self.values[i];
        partial + self.cum_mass[i + 1] + tail
    }

    fn tail_moment(&self, r: f64) -> f64 {
        let tail = self.tail.map_or(0.0, |t| t.moment(self.x_max.max(r)));
        if r >= self.x_max {
            return tail;
        }
        let r = r.max(0.0);
        let i = self.cell_of(r);
        let right = self.edges[i + 1];
        let partial = 0.5 * (right * right - r * r) * self.values[i];
        partial + self.cum_moment[i + 1] + tail
    }
}
