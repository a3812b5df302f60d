//! Structured grid charts.
//!
//! A [`GridChart`] is a node-centered rectangular sample lattice in 2, 3, or 4
//! coordinates. Periodic axes identify index `0` with index `extent`
//! (wraparound arithmetic is exact); non-periodic axes use one-sided stencils
//! at the ends. Storage order is row-major with the last axis fastest.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridChart {
    dim: usize,
    extents: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
    origin: [f64; MAX_DIM],
    periodic: [bool; MAX_DIM],
}

impl GridChart {
    pub fn new(
        dim: usize,
        extents: &[usize],
        spacing: &[f64],
        origin: &[f64],
        periodic: &[bool],
    ) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidChart(format!("dim must be 2..=4, got {dim}")));
        }
        if extents.len() != dim || spacing.len() != dim || origin.len() != dim || periodic.len() != dim {
            return Err(Error::InvalidChart("per-axis slices must have length dim".into()));
        }
        let mut c = GridChart {
            dim,
            extents: [1; MAX_DIM],
            spacing: [1.0; MAX_DIM],
            origin: [0.0; MAX_DIM],
            periodic: [false; MAX_DIM],
        };
        for a in 0..dim {
            if extents[a] < 4 {
                return Err(Error::InvalidChart(format!(
                    "extent {} on axis {a} is below the stencil width 4",
                    extents[a]
                )));
            }
            if !(spacing[a] > 0.0) || !spacing[a].is_finite() {
                return Err(Error::InvalidChart(format!("spacing on axis {a} must be positive")));
            }
            c.extents[a] = extents[a];
            c.spacing[a] = spacing[a];
            c.origin[a] = origin[a];
            c.periodic[a] = periodic[a];
        }
        Ok(c)
    }

    /// Uniform non-periodic box.
    pub fn boxed(dim: usize, extent: usize, spacing: f64, origin: f64) -> Result<Self> {
        GridChart::new(
            dim,
            &vec![extent; dim],
            &vec![spacing; dim],
            &vec![origin; dim],
            &vec![false; dim],
        )
    }

    /// Uniform fully periodic torus covering `[0, 1)` per axis.
    pub fn torus(dim: usize, extent: usize) -> Result<Self> {
        GridChart::new(
            dim,
            &vec![extent; dim],
            &vec![1.0 / extent as f64; dim],
            &vec![0.0; dim],
            &vec![true; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extents[axis]
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn periodic_flags(&self) -> &[bool] {
        &self.periodic[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.extents[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat storage index of a multi-index, last axis fastest.
    pub fn index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in 0..self.dim {
            flat = flat * self.extents[a] + idx[a];
        }
        flat
    }

    /// Multi-index of a flat storage index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.extents[a];
            flat /= self.extents[a];
        }
        idx
    }

    /// Coordinates of a sample.
    pub fn coord(&self, idx: &[usize]) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.origin[a] + idx[a] as f64 * self.spacing[a];
        }
        x
    }

    /// Shift `idx` by `offset` steps along `axis`, with exact wraparound on
    /// periodic axes. Returns `None` when a non-periodic axis runs off the end.
    pub fn shift(&self, idx: &[usize], axis: usize, offset: isize) -> Option<[usize; MAX_DIM]> {
        let mut out = [0usize; MAX_DIM];
        out[..self.dim].copy_from_slice(&idx[..self.dim]);
        let n = self.extents[axis] as isize;
        let raw = idx[axis] as isize + offset;
        if self.periodic[axis] {
            out[axis] = raw.rem_euclid(n) as usize;
        } else if raw < 0 || raw >= n {
            return None;
        } else {
            out[axis] = raw as usize;
        }
        Some(out)
    }

    /// True when `idx` is at least `margin` cells away from every
    /// non-periodic boundary.
    pub fn is_interior(&self, idx: &[usize], margin: usize) -> bool {
        for a in 0..self.dim {
            if !self.periodic[a] {
                let n = self.extents[a];
                if idx[a] < margin || idx[a] + margin >= n {
                    return false;
                }
            }
        }
        true
    }

    /// Chart with every extent halved (used by refinement-ratio tests going
    /// coarse) or doubled. Spacing rescales so the covered box is unchanged.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let mut extents = Vec::with_capacity(self.dim);
        let mut spacing = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            if self.periodic[a] {
                extents.push(self.extents[a] * factor);
                spacing.push(self.spacing[a] / factor as f64);
            } else {
                // keep node endpoints aligned: n-1 intervals refine exactly
                extents.push((self.extents[a] - 1) * factor + 1);
                spacing.push(self.spacing[a] / factor as f64);
            }
        }
        GridChart::new(self.dim, &extents, &spacing, self.origin(), self.periodic_flags())
    }

    pub fn same_as(&self, other: &GridChart) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_extents_and_bad_spacing() {
        assert!(GridChart::new(3, &[4, 4, 3], &[0.1; 3], &[0.0; 3], &[false; 3]).is_err());
        assert!(GridChart::new(3, &[4, 4, 4], &[0.1, 0.1, 0.0], &[0.0; 3], &[false; 3]).is_err());
        assert!(GridChart::new(5, &[4; 5], &[0.1; 5], &[0.0; 5], &[false; 5]).is_err());
    }

    #[test]
    fn wraparound_is_exact() {
        let c = GridChart::torus(2, 8).unwrap();
        let idx = [0usize, 7];
        let left = c.shift(&idx, 0, -1).unwrap();
        assert_eq!(left[0], 7);
        let right = c.shift(&idx, 1, 1).unwrap();
        assert_eq!(right[1], 0);
        let far = c.shift(&idx, 1, 17).unwrap();
        assert_eq!(far[1], 0);
    }

    #[test]
    fn flat_index_round_trip() {
        let c = GridChart::new(3, &[4, 5, 6], &[0.1; 3], &[0.0; 3], &[false; 3]).unwrap();
        for flat in 0..c.len() {
            let m = c.multi_index(flat);
            assert_eq!(c.index(&m[..3]), flat);
        }
    }

    #[test]
    fn non_periodic_shift_clips() {
        let c = GridChart::boxed(2, 4, 1.0, 0.0).unwrap();
        assert!(c.shift(&[0, 0], 0, -1).is_none());
        assert!(c.shift(&[3, 0], 0, 1).is_none());
    }
}
