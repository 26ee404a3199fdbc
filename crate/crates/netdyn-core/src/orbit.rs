//! Orbit iteration, recurrence detection, and limit-cycle refinement.

use crate::error::{NetError, Result};
use crate::params::NetworkParams;
use crate::poincare::{return_map, time_gap_margin, Itinerary};
use crate::state::SectionPoint;

/// A recorded forward orbit of the return map.
#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub start: SectionPoint,
    /// Visited section points; `states[0]` is the start and
    /// `states[k + 1]` is the image of `states[k]`.
    pub states: Vec<SectionPoint>,
    /// Winner sets of the recorded steps (one per transition).
    pub itinerary: Itinerary,
    /// Time-gap margin of each recorded state.
    pub margins: Vec<f64>,
    /// Inter-spike interval of each recorded step.
    pub isi: Vec<f64>,
    /// Total lower-clamp activations along the orbit.
    pub clamp_events: usize,
    /// True when iteration stopped because the margin fell into the
    /// partition band, i.e. the orbit numerically left the set of points
    /// with a well-defined infinite itinerary.
    pub boundary_halt: bool,
}

impl OrbitRecord {
    pub fn steps(&self) -> usize {
        self.itinerary.word.len()
    }
}

/// Iterates the return map from `v`, recording states, winner sets,
/// margins, and inter-spike intervals.
///
/// Stops after `max_steps` transitions, or earlier if a state lands within
/// the partition-band tolerance of the discontinuity set; the early halt is
/// recorded, not an error.
pub fn iterate_orbit(
    p: &NetworkParams,
    v: &SectionPoint,
    max_steps: usize,
) -> Result<OrbitRecord> {
    let mut states = Vec::with_capacity(max_steps.min(4096) + 1);
    let mut margins = Vec::with_capacity(states.capacity());
    let mut word = Vec::with_capacity(max_steps.min(4096));
    let mut isi = Vec::with_capacity(word.capacity());
    let mut clamp_events = 0;
    let mut boundary_halt = false;

    let mut current = v.clone();
    for _ in 0..max_steps {
        let margin = time_gap_margin(p, current.state())?;
        margins.push(margin);
        states.push(current.clone());
        if margin <= p.tol.partition_band {
            boundary_halt = true;
            break;
        }
        let step = return_map(p, &current)?;
        word.push(step.spike.winners.clone());
        isi.push(step.spike.tbar);
        clamp_events += step.clamped;
        current = step.point;
    }
    if !boundary_halt {
        margins.push(time_gap_margin(p, current.state())?);
        states.push(current);
    }
    let singleton_flag = word.iter().all(|w| w.len() == 1);
    Ok(OrbitRecord {
        start: v.clone(),
        states,
        itinerary: Itinerary {
            word,
            singleton_flag,
        },
        margins,
        isi,
        clamp_events,
        boundary_halt,
    })
}

/// A recurrence found on an orbit: a period and an anchor to refine from.
#[derive(Debug, Clone)]
pub struct CycleCandidate {
    pub period: usize,
    /// Index of the anchor in the orbit that produced the candidate.
    pub anchor_index: usize,
    pub anchor: SectionPoint,
    /// Winner sets over one period starting at the anchor.
    pub word: Vec<Vec<usize>>,
}

/// Scans an orbit for the smallest period `r` whose two latest length-`r`
/// windows agree: states within `tol` in the max norm and identical winner
/// sequences. Returns `None` when no recurrence fits the record.
pub fn detect_cycle(orbit: &OrbitRecord, tol: f64) -> Option<CycleCandidate> {
    detect_cycle_in(&orbit.states, &orbit.itinerary.word, tol)
}

pub(crate) fn detect_cycle_in(
    states: &[SectionPoint],
    word: &[Vec<usize>],
    tol: f64,
) -> Option<CycleCandidate> {
    let steps = word.len();
    for period in 1..=steps / 2 {
        let k = steps - 2 * period;
        let a = states[k].state();
        let b = states[k + period].state();
        if a.max_norm_distance(b) > tol {
            continue;
        }
        if word[k..k + period] != word[k + period..k + 2 * period] {
            continue;
        }
        return Some(CycleCandidate {
            period,
            anchor_index: k + period,
            anchor: states[k + period].clone(),
            word: word[k + period..k + 2 * period].to_vec(),
        });
    }
    None
}

/// A certified periodic orbit of the return map.
#[derive(Debug, Clone)]
pub struct Cycle {
    /// Minimal period.
    pub period: usize,
    /// The periodic states, `states[k + 1]` the image of `states[k]`.
    pub states: Vec<SectionPoint>,
    /// Winner of each step; one entry per state.
    pub word: Vec<Vec<usize>>,
    /// Fixed-point defect of the returned anchor under the period-fold map.
    pub residual: f64,
    /// Product over the cycle of the largest non-winner diagonal
    /// contraction factor `exp(-gamma_j * tbar)`; a per-period summary of
    /// the flow's own contraction, ignoring the spike-time cross terms.
    pub floquet_bound: f64,
}

impl Cycle {
    /// The word rotated to its lexicographically smallest phase; a
    /// rotation-invariant key for deduplication.
    pub fn canonical_word(&self) -> Vec<Vec<usize>> {
        let r = self.word.len();
        let mut best: Option<Vec<Vec<usize>>> = None;
        for s in 0..r {
            let rot: Vec<Vec<usize>> = (0..r).map(|k| self.word[(s + k) % r].clone()).collect();
            if best.as_ref().map_or(true, |b| rot < *b) {
                best = Some(rot);
            }
        }
        best.unwrap_or_default()
    }

    /// Smallest max-norm distance from `point` to any state of the cycle.
    pub fn distance_to(&self, point: &SectionPoint) -> f64 {
        self.states
            .iter()
            .map(|s| s.state().max_norm_distance(point.state()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether two cycles are the same orbit: equal canonical words and
    /// states matching under some rotation within `tol`.
    pub fn same_orbit(&self, other: &Cycle, tol: f64) -> bool {
        if self.period != other.period || self.canonical_word() != other.canonical_word() {
            return false;
        }
        let r = self.period;
        (0..r).any(|shift| {
            (0..r).all(|k| {
                self.states[k]
                    .state()
                    .max_norm_distance(other.states[(k + shift) % r].state())
                    <= tol
            })
        })
    }
}

const REFINE_STEP_TOL: f64 = 1e-13;
const REFINE_MAX_ROUNDS: usize = 10_000;

/// Contracts a candidate onto the exact periodic orbit by iterating the
/// period-fold map from the anchor until successive rounds agree to
/// `1e-13`, then reduces the period to its minimal divisor.
///
/// Rounds must reproduce the candidate word exactly; leaving the word means
/// the iteration crossed the discontinuity set and the candidate is
/// rejected. For single-winner words every visited state must also keep its
/// margin out of the partition band (exactly periodic simultaneous-winner
/// orbits, such as full synchrony, are exempt: their itinerary check alone
/// decides).
pub fn refine_cycle(p: &NetworkParams, candidate: &CycleCandidate) -> Result<Cycle> {
    let r = candidate.period;
    let singleton_word = candidate.word.iter().all(|w| w.len() == 1);
    let mut current = candidate.anchor.clone();
    let mut converged = false;
    for round in 0..REFINE_MAX_ROUNDS {
        let next = fold_once(p, &current, &candidate.word, singleton_word, round)?;
        let delta = next.state().max_norm_distance(current.state());
        current = next;
        if delta <= REFINE_STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        // Keep the last iterate; the residual below reports the defect
        // honestly.
    }

    // Collect the cycle states and the per-step contraction factors, then
    // measure the residual of one more full period.
    let mut states = Vec::with_capacity(r);
    let mut floquet_bound = 1.0;
    let mut walker = current.clone();
    for k in 0..r {
        states.push(walker.clone());
        let step = return_map(p, &walker)?;
        if step.spike.winners != candidate.word[k] {
            return Err(NetError::CandidateLeftWord { round: k });
        }
        let diag_max = (0..p.n())
            .filter(|j| !step.spike.winners.contains(j))
            .map(|j| (-p.gamma()[j] * step.spike.tbar).exp())
            .fold(0.0, f64::max);
        floquet_bound *= diag_max;
        walker = step.point;
    }
    let residual = walker.state().max_norm_distance(states[0].state());

    let mut cycle = Cycle {
        period: r,
        states,
        word: candidate.word.clone(),
        residual,
        floquet_bound,
    };
    reduce_to_minimal_period(&mut cycle);
    Ok(cycle)
}

/// One period-fold application, validating the word (and margins for
/// singleton words) along the way.
fn fold_once(
    p: &NetworkParams,
    anchor: &SectionPoint,
    word: &[Vec<usize>],
    singleton_word: bool,
    round: usize,
) -> Result<SectionPoint> {
    let mut current = anchor.clone();
    for expected in word {
        if singleton_word {
            let margin = time_gap_margin(p, current.state())?;
            if margin <= p.tol.partition_band {
                return Err(NetError::OnPartitionBoundary {
                    margin,
                    tolerance: p.tol.partition_band,
                });
            }
        }
        let step = return_map(p, &current)?;
        if &step.spike.winners != expected {
            return Err(NetError::CandidateLeftWord { round });
        }
        current = step.point;
    }
    Ok(current)
}

fn reduce_to_minimal_period(cycle: &mut Cycle) {
    let r = cycle.period;
    for d in 1..r {
        if r % d != 0 {
            continue;
        }
        let word_repeats = (0..r).all(|k| cycle.word[k] == cycle.word[k % d]);
        if !word_repeats {
            continue;
        }
        let states_repeat = (0..r).all(|k| {
            cycle.states[k]
                .state()
                .max_norm_distance(cycle.states[k % d].state())
                <= 1e-10
        });
        if states_repeat {
            cycle.states.truncate(d);
            cycle.word.truncate(d);
            cycle.period = d;
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::system_constants;

    fn params() -> NetworkParams {
        NetworkParams::symmetric(2, 1.0, 1.0, 2.0, 0.2).unwrap()
    }

    /// Anti-phase fixed coordinate of the symmetric two-neuron system: the
    /// positive root of `v^2 - 3.8 v + 1.6 = 0` inside the cube.
    fn antiphase_coordinate() -> f64 {
        1.9 - 2.01f64.sqrt()
    }

    #[test]
    fn orbit_alternates_and_isi_converges() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let orbit = iterate_orbit(&p, &v, 300).unwrap();
        assert_eq!(orbit.steps(), 300);
        assert!(!orbit.boundary_halt);
        assert_eq!(orbit.clamp_events, 0);
        for (k, w) in orbit.itinerary.word.iter().enumerate() {
            assert_eq!(w, &vec![1 - k % 2]);
        }
        // ISIs settle onto the cycle's common interval.
        let tail: Vec<f64> = orbit.isi[280..].to_vec();
        let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-12, "spread = {spread}");
        // Lower bound on inter-spike times holds past the first step.
        let t0 = system_constants(&p).t0;
        assert!(orbit.isi[1..].iter().all(|&t| t >= t0));
    }

    #[test]
    fn orbit_halts_on_partition_band() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.0]).unwrap();
        let orbit = iterate_orbit(&p, &v, 50).unwrap();
        assert!(orbit.boundary_halt);
        assert_eq!(orbit.steps(), 0);
        assert_eq!(orbit.states.len(), 1);
    }

    #[test]
    fn detects_the_antiphase_two_cycle() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let orbit = iterate_orbit(&p, &v, 400).unwrap();
        let cand = detect_cycle(&orbit, p.tol.recurrence).unwrap();
        assert_eq!(cand.period, 2);
        let cycle = refine_cycle(&p, &cand).unwrap();
        assert_eq!(cycle.period, 2);
        assert!(cycle.residual < 1e-12, "residual = {}", cycle.residual);
        let vstar = antiphase_coordinate();
        let d = cycle
            .states
            .iter()
            .map(|s| {
                let c = s.state().coords();
                (c[0] - vstar).abs().min(c[0].abs())
                    + (c[1] - vstar).abs().min(c[1].abs())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "cycle away from closed form: {d}");
        // Each cycle state has exactly one coordinate at zero.
        for s in &cycle.states {
            assert_eq!(s.zero_set().len(), 1);
        }
        assert!(cycle.floquet_bound > 0.0 && cycle.floquet_bound < 1.0);
    }

    #[test]
    fn no_candidate_from_boundary_orbit() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.0]).unwrap();
        let orbit = iterate_orbit(&p, &v, 100).unwrap();
        assert!(detect_cycle(&orbit, p.tol.recurrence).is_none());
    }

    #[test]
    fn synchrony_candidate_refines_to_exact_fixed_point() {
        let p = params();
        let anchor = SectionPoint::new(&p, vec![0.0, 0.0]).unwrap();
        let cand = CycleCandidate {
            period: 1,
            anchor_index: 0,
            anchor,
            word: vec![vec![0, 1]],
        };
        let cycle = refine_cycle(&p, &cand).unwrap();
        assert_eq!(cycle.period, 1);
        assert_eq!(cycle.residual, 0.0);
        assert_eq!(cycle.states[0].state().coords(), &[0.0, 0.0]);
    }

    #[test]
    fn refinement_rejects_wrong_word() {
        let p = params();
        let anchor = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let cand = CycleCandidate {
            period: 2,
            anchor_index: 0,
            anchor,
            word: vec![vec![0], vec![1]], // true word starts with winner 1
        };
        assert!(matches!(
            refine_cycle(&p, &cand).unwrap_err(),
            NetError::CandidateLeftWord { .. }
        ));
    }

    #[test]
    fn minimal_period_reduction() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let orbit = iterate_orbit(&p, &v, 400).unwrap();
        let two = detect_cycle(&orbit, p.tol.recurrence).unwrap();
        // Doubled candidate collapses back to the minimal period.
        let doubled = CycleCandidate {
            period: 4,
            anchor_index: two.anchor_index,
            anchor: two.anchor.clone(),
            word: [two.word.clone(), two.word.clone()].concat(),
        };
        let cycle = refine_cycle(&p, &doubled).unwrap();
        assert_eq!(cycle.period, 2);
    }

    #[test]
    fn residual_contracts_geometrically() {
        // Log residual of successive period-folds falls at least as fast
        // as the observed one-step rate squared, with slack.
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let orbit = iterate_orbit(&p, &v, 40).unwrap();
        let mut ratios = Vec::new();
        let mut prev: Option<f64> = None;
        for k in (4..36).step_by(2) {
            let d = orbit.states[k]
                .state()
                .max_norm_distance(orbit.states[k + 2].state());
            if let Some(pd) = prev {
                ratios.push(d / pd);
            }
            prev = Some(d);
        }
        let lambda = system_constants(&p).lambda;
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(
            max_ratio <= lambda * lambda + 0.05,
            "ratio {max_ratio} vs lambda^2 {}",
            lambda * lambda
        );
    }
}
