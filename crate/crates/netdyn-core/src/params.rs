//! Network parameters and their validation.

use crate::error::{NetError, Result};

/// Numerical tolerances used by the solvers and analyzers.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance for threshold-crossing roots (spike times and
    /// winner potentials at the spike instant).
    pub root: f64,
    /// Relative tolerance deciding simultaneous winners: every neuron with
    /// `t_i <= tbar * (1 + simultaneity)` spikes together with the first.
    pub simultaneity: f64,
    /// Distance tolerance for recurrence detection on orbits.
    pub recurrence: f64,
    /// Time-gap margin below which a section point is treated as lying on
    /// the discontinuity set of the return map.
    pub partition_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: 1e-12,
            simultaneity: 1e-12,
            recurrence: 1e-9,
            partition_band: 1e-10,
        }
    }
}

/// Parameters of an inhibitory pacemaker network with leaky-integrator flow.
///
/// Neuron `i` evolves by `dV_i/dt = -gamma[i] * (V_i - beta[i])` between
/// spikes, fires when `V_i` reaches `theta`, and on firing resets to zero
/// while subtracting `h[i][j]` from every other neuron `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    n: usize,
    theta: f64,
    gamma: Vec<f64>,
    beta: Vec<f64>,
    /// Row-major `n x n`; entry `(i, j)` is the inhibition applied to `j`
    /// when `i` spikes. The diagonal is unused.
    h: Vec<f64>,
    pub tol: Tolerances,
}

impl NetworkParams {
    /// Validates and builds a parameter set.
    ///
    /// The constraints keep the flow strictly increasing with strictly
    /// negative state-derivative on the whole cube (`gamma > 0`,
    /// `beta > theta`), the coupling inhibitory (`h > 0`), and the
    /// expansivity constant positive (`h != theta`).
    pub fn new(
        n: usize,
        theta: f64,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        h: Vec<f64>,
        tol: Tolerances,
    ) -> Result<Self> {
        if n < 2 {
            return Err(NetError::NeuronCountTooSmall(n));
        }
        if !(theta > 0.0) {
            return Err(NetError::NonPositiveTheta(theta));
        }
        if gamma.len() != n {
            return Err(NetError::BadVectorLength {
                name: "gamma",
                got: gamma.len(),
                expected: n,
            });
        }
        if beta.len() != n {
            return Err(NetError::BadVectorLength {
                name: "beta",
                got: beta.len(),
                expected: n,
            });
        }
        if h.len() != n * n {
            return Err(NetError::BadMatrixShape {
                got: h.len(),
                expected: n * n,
            });
        }
        for (i, &g) in gamma.iter().enumerate() {
            if !(g > 0.0) {
                return Err(NetError::NonPositiveGamma { index: i, value: g });
            }
        }
        for (i, &b) in beta.iter().enumerate() {
            if !(b > theta) {
                return Err(NetError::BetaNotAboveTheta {
                    index: i,
                    value: b,
                    theta,
                });
            }
        }
        let h_tol = theta * 1e-12;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = h[i * n + j];
                if !(v > 0.0) {
                    return Err(NetError::NonPositiveInhibition {
                        from: i,
                        to: j,
                        value: v,
                    });
                }
                if (v - theta).abs() <= h_tol {
                    return Err(NetError::InhibitionAtThreshold {
                        from: i,
                        to: j,
                        value: v,
                        theta,
                    });
                }
            }
        }
        Ok(Self {
            n,
            theta,
            gamma,
            beta,
            h,
            tol,
        })
    }

    /// Symmetric all-to-all network: identical neurons, one coupling value.
    pub fn symmetric(n: usize, theta: f64, gamma: f64, beta: f64, h: f64) -> Result<Self> {
        let mut mat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    mat[i * n + j] = h;
                }
            }
        }
        Self::new(
            n,
            theta,
            vec![gamma; n],
            vec![beta; n],
            mat,
            Tolerances::default(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Inhibition applied to `to` when `from` spikes.
    pub fn h(&self, from: usize, to: usize) -> f64 {
        self.h[from * self.n + to]
    }

    pub fn h_matrix(&self) -> &[f64] {
        &self.h
    }

    /// Smallest off-diagonal inhibition.
    pub fn min_inhibition(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.min(self.h[i * self.n + j]);
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> (usize, f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            2,
            1.0,
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![0.0, 0.2, 0.2, 0.0],
        )
    }

    #[test]
    fn accepts_valid_two_neuron_network() {
        let (n, theta, gamma, beta, h) = base();
        let p = NetworkParams::new(n, theta, gamma, beta, h, Tolerances::default()).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.h(0, 1), 0.2);
        assert_eq!(p.min_inhibition(), 0.2);
    }

    #[test]
    fn rejects_small_network() {
        let err = NetworkParams::new(
            1,
            1.0,
            vec![1.0],
            vec![2.0],
            vec![0.0],
            Tolerances::default(),
        )
        .unwrap_err();
        assert_eq!(err, NetError::NeuronCountTooSmall(1));
    }

    #[test]
    fn rejects_beta_not_above_theta() {
        let (n, theta, gamma, _, h) = base();
        let err = NetworkParams::new(n, theta, gamma, vec![1.0, 2.0], h, Tolerances::default())
            .unwrap_err();
        assert!(matches!(err, NetError::BetaNotAboveTheta { index: 0, .. }));
        assert!(err.to_string().contains("beta must exceed theta"));
    }

    #[test]
    fn rejects_inhibition_equal_to_theta() {
        let (n, theta, gamma, beta, _) = base();
        let err = NetworkParams::new(
            n,
            theta,
            gamma,
            beta,
            vec![0.0, 1.0, 0.2, 0.0],
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            NetError::InhibitionAtThreshold { from: 0, to: 1, .. }
        ));
        assert!(err.to_string().contains("h equals theta"));
    }

    #[test]
    fn rejects_nonpositive_gamma_and_inhibition() {
        let (n, theta, _, beta, h) = base();
        let err = NetworkParams::new(
            n,
            theta,
            vec![0.0, 1.0],
            beta.clone(),
            h,
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, NetError::NonPositiveGamma { index: 0, .. }));

        let err = NetworkParams::new(
            n,
            theta,
            vec![1.0, 1.0],
            beta,
            vec![0.0, -0.2, 0.2, 0.0],
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            NetError::NonPositiveInhibition { from: 0, to: 1, .. }
        ));
    }

    #[test]
    fn rejects_dimension_mismatches() {
        let err = NetworkParams::new(
            3,
            1.0,
            vec![1.0, 1.0],
            vec![2.0; 3],
            vec![0.1; 9],
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            NetError::BadVectorLength { name: "gamma", .. }
        ));

        let err = NetworkParams::new(
            2,
            1.0,
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![0.1; 3],
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, NetError::BadMatrixShape { got: 3, .. }));
    }
}
