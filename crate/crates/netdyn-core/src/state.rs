//! Potential vectors and points on the post-spike section.

use crate::error::{NetError, Result};
use crate::params::NetworkParams;

/// Coordinates closer to zero than this are snapped onto the section slab.
const ZERO_SNAP: f64 = 1e-14;

/// A potential vector confined to the cube `[-theta, theta]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    v: Vec<f64>,
}

impl State {
    pub fn new(p: &NetworkParams, v: Vec<f64>) -> Result<Self> {
        if v.len() != p.n() {
            return Err(NetError::BadStateDimension {
                got: v.len(),
                expected: p.n(),
            });
        }
        let theta = p.theta();
        for (i, &x) in v.iter().enumerate() {
            if !(x >= -theta && x <= theta) {
                return Err(NetError::PotentialOutOfRange {
                    index: i,
                    value: x,
                    theta,
                });
            }
        }
        Ok(Self { v })
    }

    /// Builds without the range check; for values produced by operations
    /// that already guarantee containment in the cube.
    pub(crate) fn from_parts(v: Vec<f64>) -> Self {
        Self { v }
    }

    pub fn coords(&self) -> &[f64] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Max-norm distance between two states.
    pub fn max_norm_distance(&self, other: &State) -> f64 {
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.v[i]
    }
}

/// A state on the section: at least one coordinate sits exactly at the
/// reset level zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPoint {
    state: State,
    zero_set: Vec<usize>,
}

impl SectionPoint {
    /// Wraps a state lying on the section. Coordinates within `1e-14` of
    /// zero are snapped exactly onto the slab; fails if none qualifies.
    pub fn new(p: &NetworkParams, v: Vec<f64>) -> Result<Self> {
        let mut state = State::new(p, v)?;
        let mut zero_set = Vec::new();
        for i in 0..state.v.len() {
            if state.v[i].abs() <= ZERO_SNAP {
                state.v[i] = 0.0;
                zero_set.push(i);
            }
        }
        if zero_set.is_empty() {
            return Err(NetError::NotOnSection);
        }
        Ok(Self { state, zero_set })
    }

    /// For states produced by the reset rule, whose winner coordinates are
    /// exact zeros by construction.
    pub(crate) fn from_reset_state(state: State) -> Self {
        let zero_set = state
            .v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { state, zero_set }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn coords(&self) -> &[f64] {
        self.state.coords()
    }

    /// Indices of the coordinates at the reset level.
    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    /// The chart coordinate: smallest index in the zero set.
    pub fn slab(&self) -> usize {
        self.zero_set[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::NetworkParams;

    fn params() -> NetworkParams {
        NetworkParams::symmetric(2, 1.0, 1.0, 2.0, 0.2).unwrap()
    }

    #[test]
    fn state_rejects_out_of_cube() {
        let p = params();
        let err = State::new(&p, vec![0.0, 1.5]).unwrap_err();
        assert!(matches!(
            err,
            NetError::PotentialOutOfRange { index: 1, .. }
        ));
        assert!(State::new(&p, vec![-1.0, 1.0]).is_ok());
    }

    #[test]
    fn section_point_requires_a_zero_coordinate() {
        let p = params();
        assert!(matches!(
            SectionPoint::new(&p, vec![0.5, 0.25]).unwrap_err(),
            NetError::NotOnSection
        ));
        let s = SectionPoint::new(&p, vec![0.5, 1e-15]).unwrap();
        assert_eq!(s.zero_set(), &[1]);
        assert_eq!(s.coords()[1], 0.0);
        assert_eq!(s.slab(), 1);
    }

    #[test]
    fn max_norm_distance_is_coordinatewise_max() {
        let p = params();
        let a = State::new(&p, vec![0.1, -0.4]).unwrap();
        let b = State::new(&p, vec![0.3, 0.1]).unwrap();
        assert!((a.max_norm_distance(&b) - 0.5).abs() < 1e-15);
    }
}
