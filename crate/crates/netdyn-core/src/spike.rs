//! Spike events: who fires next, when, and the reset/inhibition jump.

use crate::error::{NetError, Result};
use crate::flow::{flow_at, spike_time};
use crate::params::NetworkParams;
use crate::state::State;

/// The outcome of running the flow from a state until the first spike.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeOutcome {
    /// Time of the next spike.
    pub tbar: f64,
    /// Sorted indices of the neurons that reach threshold first
    /// (simultaneously, up to the simultaneity tolerance).
    pub winners: Vec<usize>,
    /// State at the spike instant, winners at threshold.
    pub pre_jump: State,
}

/// Finds the next spike from `v`: the minimum of the per-neuron crossing
/// times, its winner set, and the potentials at that instant.
///
/// Every coordinate must be strictly below threshold (post-jump states
/// always are).
pub fn first_spike(p: &NetworkParams, v: &State) -> Result<SpikeOutcome> {
    let n = p.n();
    let mut times = Vec::with_capacity(n);
    let mut tbar = f64::INFINITY;
    for i in 0..n {
        let t = spike_time(p, i, v[i])?;
        tbar = tbar.min(t);
        times.push(t);
    }
    let cutoff = tbar * (1.0 + p.tol.simultaneity);
    let winners: Vec<usize> = (0..n).filter(|&i| times[i] <= cutoff).collect();
    let mut pre_jump = flow_at(p, v, tbar)?;
    // The winners sit at theta up to the root tolerance; pin them exactly so
    // downstream checks are bitwise stable.
    let pre = pre_jump.coords().to_vec();
    let mut coords = pre;
    for &i in &winners {
        debug_assert!((coords[i] - p.theta()).abs() <= 1e-9 * p.theta().max(1.0));
        coords[i] = p.theta();
    }
    pre_jump = State::from_parts(coords);
    Ok(SpikeOutcome {
        tbar,
        winners,
        pre_jump,
    })
}

/// Applies the spike rule at the spike instant: winners reset to zero and
/// every other neuron loses the summed inhibition from the winners.
///
/// Inhibited potentials are clamped at `-theta` so the state stays in the
/// cube; the number of clamped coordinates is returned so callers can
/// detect when the clamp fired.
pub fn apply_spike(
    p: &NetworkParams,
    pre: &State,
    winners: &[usize],
) -> Result<(State, usize)> {
    if winners.is_empty() {
        return Err(NetError::EmptyWinnerSet);
    }
    let theta = p.theta();
    let at_threshold_tol = 1e-9 * theta.max(1.0);
    for &i in winners {
        if (pre[i] - theta).abs() > at_threshold_tol {
            return Err(NetError::WinnerNotAtThreshold {
                index: i,
                value: pre[i],
                theta,
            });
        }
    }
    let mut clamped = 0;
    let mut w = pre.coords().to_vec();
    for j in 0..p.n() {
        if winners.contains(&j) {
            w[j] = 0.0;
        } else {
            let drop: f64 = winners.iter().map(|&i| p.h(i, j)).sum();
            let mut x = w[j] - drop;
            if x < -theta {
                x = -theta;
                clamped += 1;
            }
            w[j] = x;
        }
    }
    Ok((State::from_parts(w), clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{NetworkParams, Tolerances};

    fn params() -> NetworkParams {
        NetworkParams::symmetric(2, 1.0, 1.0, 2.0, 0.2).unwrap()
    }

    #[test]
    fn first_spike_picks_highest_potential() {
        let p = params();
        let v = State::new(&p, vec![0.0, 0.5]).unwrap();
        let out = first_spike(&p, &v).unwrap();
        assert_eq!(out.winners, vec![1]);
        assert!((out.tbar - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(out.pre_jump[1], 1.0);
        assert!(out.pre_jump[0] < 1.0);
    }

    #[test]
    fn symmetric_tie_gives_two_winners() {
        let p = params();
        let v = State::new(&p, vec![0.5, 0.5]).unwrap();
        let out = first_spike(&p, &v).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
    }

    #[test]
    fn apply_spike_resets_and_inhibits() {
        let p = params();
        let pre = State::new(&p, vec![1.0, 0.5]).unwrap();
        let (w, clamped) = apply_spike(&p, &pre, &[0]).unwrap();
        assert_eq!(w.coords(), &[0.0, 0.3]);
        assert_eq!(clamped, 0);
    }

    #[test]
    fn apply_spike_clamps_at_lower_face() {
        let p = params();
        let pre = State::new(&p, vec![1.0, -0.95]).unwrap();
        let (w, clamped) = apply_spike(&p, &pre, &[0]).unwrap();
        assert_eq!(w.coords(), &[0.0, -1.0]);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn apply_spike_sums_inhibition_over_winners() {
        let p = NetworkParams::new(
            3,
            1.0,
            vec![1.0; 3],
            vec![2.0; 3],
            vec![
                0.0, 0.3, 0.3, //
                0.3, 0.0, 0.3, //
                0.3, 0.3, 0.0,
            ],
            Tolerances::default(),
        )
        .unwrap();
        let pre = State::new(&p, vec![1.0, 1.0, 0.9]).unwrap();
        let (w, _) = apply_spike(&p, &pre, &[0, 1]).unwrap();
        assert_eq!(w.coords()[0], 0.0);
        assert_eq!(w.coords()[1], 0.0);
        assert!((w.coords()[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn apply_spike_rejects_bad_winners() {
        let p = params();
        let pre = State::new(&p, vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            apply_spike(&p, &pre, &[]).unwrap_err(),
            NetError::EmptyWinnerSet
        ));
        assert!(matches!(
            apply_spike(&p, &pre, &[1]).unwrap_err(),
            NetError::WinnerNotAtThreshold { index: 1, .. }
        ));
    }
}
