use crate::dynamics::StateBox;
use crate::spec_lang::ConjunctiveClause;

use super::CertError;

/// Full Cartesian grid over a box, optionally filtered by a clause.
///
/// Axis `i` carries `points_per_axis[i]` evenly spaced values including both
/// endpoints; a single point sits at the axis midpoint.
#[derive(Clone, Debug)]
pub struct GridSampler {
    bounds: StateBox,
    points_per_axis: Vec<usize>,
    filter: Option<ConjunctiveClause>,
}

impl GridSampler {
    pub fn new(bounds: StateBox, points_per_axis: Vec<usize>) -> Result<Self, CertError> {
        if points_per_axis.len() != bounds.dim() {
            return Err(CertError::Config(format!(
                "grid has {} axes but the box has {}",
                points_per_axis.len(),
                bounds.dim()
            )));
        }
        if points_per_axis.contains(&0) {
            return Err(CertError::Config(
                "every axis needs at least one grid point".into(),
            ));
        }
        Ok(Self {
            bounds,
            points_per_axis,
            filter: None,
        })
    }

    pub fn with_filter(mut self, clause: ConjunctiveClause) -> Self {
        self.filter = Some(clause);
        self
    }

    pub fn bounds(&self) -> &StateBox {
        &self.bounds
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    /// Grid size before filtering.
    pub fn total(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    /// Point with mixed-radix index `index`, the last axis varying fastest.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let n = self.bounds.dim();
        let mut x = vec![0.0; n];
        for axis in (0..n).rev() {
            let count = self.points_per_axis[axis];
            let i = index % count;
            index /= count;
            x[axis] = self.coordinate(axis, i);
        }
        x
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = (self.bounds.lower[axis], self.bounds.upper[axis]);
        let count = self.points_per_axis[axis];
        if count == 1 {
            0.5 * (lo + hi)
        } else if i + 1 == count {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (count - 1) as f64
        }
    }

    /// Spacing between neighbouring points on each axis (zero for single-point axes).
    pub fn spacing(&self) -> Vec<f64> {
        (0..self.bounds.dim())
            .map(|a| match self.points_per_axis[a] {
                1 => 0.0,
                c => self.bounds.width(a) / (c - 1) as f64,
            })
            .collect()
    }

    pub fn accepts(&self, x: &[f64]) -> bool {
        self.filter.as_ref().is_none_or(|c| c.holds(x))
    }

    /// Filtered points in index order.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.total())
            .map(|i| self.point(i))
            .filter(|x| self.accepts(x))
    }
}
