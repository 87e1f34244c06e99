use crate::error::{Error, Result};

/// First positive knot of the geometric grids.
pub const FIRST_KNOT: f64 = 0.25;

/// Scale-time knots `0 = t_0 < t_1 < ... < t_M = T`.
///
/// Quadrature is cell-based: the weight of cell `k` is `t_{k+1} - t_k`, and
/// time-dependent integrands are represented by one value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    knots: Vec<f64>,
}

impl TimeGrid {
    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != 0.0 {
            return Err(Error::Invalid("time grid must start at 0 with at least one cell".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || !knots.iter().all(|t| t.is_finite()) {
            return Err(Error::Invalid("time knots must be finite and strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    /// `m` positive knots spaced geometrically from 1/4 to `t_end`.
    pub fn geometric(t_end: f64, m: usize) -> Result<Self> {
        if !(t_end > 0.0) || m == 0 {
            return Err(Error::Invalid("geometric grid needs T > 0 and M >= 1".into()));
        }
        if t_end <= FIRST_KNOT || m == 1 {
            return Self::uniform(t_end, m);
        }
        let r = t_end / FIRST_KNOT;
        let mut knots = vec![0.0];
        for k in 0..m {
            knots.push(FIRST_KNOT * r.powf(k as f64 / (m - 1) as f64));
        }
        *knots.last_mut().unwrap() = t_end;
        Self::from_knots(knots)
    }

    /// Knots `2^{j/p} / 4`; grids for `T` and `2T` share their common prefix.
    pub fn dyadic(t_end: f64, per_octave: usize) -> Result<Self> {
        if per_octave == 0 {
            return Err(Error::Invalid("per_octave must be >= 1".into()));
        }
        let steps = (t_end / FIRST_KNOT).log2() * per_octave as f64;
        let j = steps.round();
        if !(t_end > 0.0) || (steps - j).abs() > 1e-9 || j < 0.0 {
            return Err(Error::Invalid(format!(
                "T = {t_end} is not of the form 2^(j/{per_octave}) / 4"
            )));
        }
        let mut knots = vec![0.0];
        for k in 0..=(j as usize) {
            knots.push(FIRST_KNOT * 2f64.powf(k as f64 / per_octave as f64));
        }
        *knots.last_mut().unwrap() = t_end;
        Self::from_knots(knots)
    }

    pub fn uniform(t_end: f64, m: usize) -> Result<Self> {
        if !(t_end > 0.0) || m == 0 {
            return Err(Error::Invalid("uniform grid needs T > 0 and M >= 1".into()));
        }
        Self::from_knots((0..=m).map(|k| t_end * k as f64 / m as f64).collect())
    }

    /// Inserts the midpoint of every cell.
    pub fn refine(&self) -> Self {
        let mut knots = Vec::with_capacity(2 * self.knots.len());
        for w in self.knots.windows(2) {
            knots.push(w[0]);
            knots.push(0.5 * (w[0] + w[1]));
        }
        knots.push(self.end());
        Self { knots }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot(&self, k: usize) -> f64 {
        self.knots[k]
    }

    /// Number of cells `M`.
    pub fn cells(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Width of cell `k`.
    pub fn width(&self, k: usize) -> f64 {
        self.knots[k + 1] - self.knots[k]
    }

    /// Quadrature weights (cell widths), summing to `T`.
    pub fn weights(&self) -> Vec<f64> {
        self.knots.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
