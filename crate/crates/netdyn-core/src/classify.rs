//! Stable/chaotic classification of section points and Monte-Carlo
//! estimation of the measures of the stable and chaotic sets.
//!
//! Membership in the stable set quantifies over all perturbations and
//! infinite horizons, so no finite procedure decides it. The classifier is
//! a documented surrogate. A point is reported `Stable` when its orbit
//! converges to a refined cycle, every post-transient state keeps its
//! time-gap margin above the threshold certifying `delta/2` clearance from
//! the discontinuity set, and axis probes of size `delta` track the orbit
//! without diverging. It is reported `Chaotic` when the orbit enters the
//! partition band (those points have no infinite itinerary numerically) or
//! a probe diverges by more than the expansivity constant. Everything else
//! stays `Undecided` and is never folded into either class.

use rayon::prelude::*;

use crate::error::{NetError, Result};
use crate::orbit::{detect_cycle_in, refine_cycle, Cycle};
use crate::params::NetworkParams;
use crate::poincare::{margin_threshold, return_map, system_constants, time_gap_margin};
use crate::sampling::{random_section_point, stream_rng};
use crate::state::SectionPoint;

/// Steps between recurrence scans while iterating a sample's orbit.
const DETECT_INTERVAL: usize = 64;
/// Cap on how long perturbation probes are tracked.
const PROBE_STEP_CAP: usize = 200;
/// Successive-state distance (in the period-fold sense) ending the
/// transient.
const TRANSIENT_TOL: f64 = 1e-9;

/// Classification of a single section point.
#[derive(Debug, Clone)]
pub enum VerdictKind {
    /// Orbit converges to this cycle with certified margin and quiet probes.
    Stable(Cycle),
    /// Orbit touched the partition band, or a probe diverged past the
    /// expansivity constant.
    Chaotic,
    /// Neither certificate reached within budget.
    Undecided,
}

/// Verdict plus the evidence that produced it.
#[derive(Debug, Clone)]
pub struct PointVerdict {
    pub kind: VerdictKind,
    /// Smallest time-gap margin seen along the raw orbit.
    pub min_margin: f64,
    /// First step with period-fold distance below the transient tolerance.
    pub convergence_step: Option<usize>,
    /// Residual of the refined cycle, when one was found.
    pub cycle_residual: Option<f64>,
    /// Whether the raw orbit entered the partition band.
    pub band_contact: bool,
    /// Largest base-versus-probe distance observed.
    pub max_probe_divergence: f64,
}

impl PointVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self.kind, VerdictKind::Stable(_))
    }

    pub fn is_chaotic(&self) -> bool {
        matches!(self.kind, VerdictKind::Chaotic)
    }
}

/// Classifies one section point with probes of scale `delta` (which must
/// stay below the expansivity constant) and an iteration budget.
pub fn classify_point(
    p: &NetworkParams,
    v: &SectionPoint,
    budget: usize,
    delta: f64,
) -> Result<PointVerdict> {
    let threshold = margin_threshold(p, delta);
    classify_with(p, v, budget, delta, threshold)
}

fn classify_with(
    p: &NetworkParams,
    v: &SectionPoint,
    budget: usize,
    delta: f64,
    threshold: f64,
) -> Result<PointVerdict> {
    let constants = system_constants(p);
    if delta >= constants.alpha {
        return Err(NetError::DeltaTooLarge {
            delta,
            alpha: constants.alpha,
        });
    }

    let mut states = vec![v.clone()];
    let mut word: Vec<Vec<usize>> = Vec::new();
    let mut margins = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut band_contact = false;
    let mut found: Option<Cycle> = None;

    let mut current = v.clone();
    let mut step = 0;
    while step < budget {
        let margin = time_gap_margin(p, current.state())?;
        min_margin = min_margin.min(margin);
        margins.push(margin);
        if margin <= p.tol.partition_band {
            band_contact = true;
            break;
        }
        let rm = return_map(p, &current)?;
        word.push(rm.spike.winners.clone());
        current = rm.point;
        states.push(current.clone());
        step += 1;

        if step % DETECT_INTERVAL == 0 || step == budget {
            if let Some(cand) = detect_cycle_in(&states, &word, p.tol.recurrence) {
                if let Ok(cycle) = refine_cycle(p, &cand) {
                    found = Some(cycle);
                    break;
                }
            }
        }
    }

    if band_contact {
        return Ok(PointVerdict {
            kind: VerdictKind::Chaotic,
            min_margin,
            convergence_step: None,
            cycle_residual: None,
            band_contact,
            max_probe_divergence: 0.0,
        });
    }

    let Some(cycle) = found else {
        return Ok(PointVerdict {
            kind: VerdictKind::Undecided,
            min_margin,
            convergence_step: None,
            cycle_residual: None,
            band_contact: false,
            max_probe_divergence: 0.0,
        });
    };

    let r = cycle.period;
    let convergence_step = (0..states.len().saturating_sub(r))
        .find(|&k| states[k].state().max_norm_distance(states[k + r].state()) < TRANSIENT_TOL);
    let post = convergence_step.unwrap_or(margins.len().saturating_sub(1));

    let mut certified_margin = margins[post.min(margins.len() - 1)..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    for s in &cycle.states {
        certified_margin = certified_margin.min(time_gap_margin(p, s.state())?);
    }

    let (diverged, max_probe_divergence) =
        run_probes(p, &cycle, budget, delta, constants.alpha)?;
    if diverged {
        return Ok(PointVerdict {
            kind: VerdictKind::Chaotic,
            min_margin,
            convergence_step,
            cycle_residual: Some(cycle.residual),
            band_contact: false,
            max_probe_divergence,
        });
    }

    if certified_margin > threshold {
        Ok(PointVerdict {
            kind: VerdictKind::Stable(cycle.clone()),
            min_margin,
            convergence_step,
            cycle_residual: Some(cycle.residual),
            band_contact: false,
            max_probe_divergence,
        })
    } else {
        Ok(PointVerdict {
            kind: VerdictKind::Undecided,
            min_margin,
            convergence_step,
            cycle_residual: Some(cycle.residual),
            band_contact: false,
            max_probe_divergence,
        })
    }
}

/// Axis-aligned perturbations of size `delta` at the post-transient state,
/// tracked against the unperturbed orbit. Returns whether any probe
/// diverged past `alpha` and the largest separation seen.
fn run_probes(
    p: &NetworkParams,
    cycle: &Cycle,
    budget: usize,
    delta: f64,
    alpha: f64,
) -> Result<(bool, f64)> {
    let anchor = &cycle.states[0];
    let horizon = budget.min(PROBE_STEP_CAP);
    let theta = p.theta();

    let mut base = Vec::with_capacity(horizon + 1);
    base.push(anchor.clone());
    for k in 0..horizon {
        let step = return_map(p, &base[k])?;
        base.push(step.point);
    }

    let mut max_div: f64 = 0.0;
    for axis in 0..p.n() {
        if anchor.zero_set().contains(&axis) {
            continue;
        }
        for &sign in &[1.0, -1.0] {
            let mut coords = anchor.coords().to_vec();
            coords[axis] =
                (coords[axis] + sign * delta).clamp(-theta, theta * (1.0 - 1e-12));
            let mut probe = SectionPoint::new(p, coords).expect("probe stays on the section");
            for k in 1..=horizon {
                let step = return_map(p, &probe)?;
                probe = step.point;
                let d = probe.state().max_norm_distance(base[k].state());
                max_div = max_div.max(d);
                if d > alpha {
                    return Ok((true, max_div));
                }
                if d < 1e-13 {
                    break;
                }
            }
        }
    }
    Ok((false, max_div))
}

/// How the sampled measures classify the whole system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemClass {
    /// No chaotic samples and almost no undecided ones.
    AeStable,
    /// No stable samples and almost no undecided ones.
    AeChaotic,
    /// Both classes present with positive fractions.
    Combined,
    /// Too much undecided mass to call.
    Indeterminate,
}

impl std::fmt::Display for SystemClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SystemClass::AeStable => "ae-stable",
            SystemClass::AeChaotic => "ae-chaotic",
            SystemClass::Combined => "combined",
            SystemClass::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// A deduplicated cycle with the number of samples attracted to it.
#[derive(Debug, Clone)]
pub struct CycleBasin {
    pub id: usize,
    pub cycle: Cycle,
    pub basin_samples: usize,
}

/// Aggregate Monte-Carlo measures over uniform section samples.
#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub samples: usize,
    pub frac_stable: f64,
    pub frac_chaotic: f64,
    pub frac_undecided: f64,
    /// Fraction of samples whose raw orbit ever entered the partition
    /// band; a witness that the boundary's preimages carry no mass.
    pub frac_band_contact: f64,
    pub cycles: Vec<CycleBasin>,
    pub system_class: SystemClass,
}

/// Per-sample outcome row, cycle identities resolved against the report.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub index: usize,
    pub point: SectionPoint,
    pub label: SampleLabel,
    pub min_margin: f64,
    pub convergence_step: Option<usize>,
    pub cycle_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleLabel {
    Stable { cycle_id: usize },
    Chaotic,
    Undecided,
}

/// Distance below which two cycles with equal words are the same orbit.
const CYCLE_DEDUP_TOL: f64 = 1e-8;

/// Probe scale used by the aggregate estimator: a tenth of the expansivity
/// constant, small enough that certified cycles sit several probe radii
/// away from the discontinuity set.
pub fn default_probe_delta(p: &NetworkParams) -> f64 {
    system_constants(p).alpha / 10.0
}

/// Samples the section uniformly (uniform slab, uniform coordinates),
/// classifies every sample, and tallies the measures.
///
/// Sample `i` draws from stream `i` of the seed, and aggregation runs in
/// sample order, so the report is identical for any worker count.
pub fn estimate_measures(
    p: &NetworkParams,
    n_samples: usize,
    seed: u64,
    budget: usize,
) -> Result<MeasureReport> {
    Ok(estimate_measures_detailed(p, n_samples, seed, budget)?.0)
}

/// As [`estimate_measures`], also returning the per-sample rows.
pub fn estimate_measures_detailed(
    p: &NetworkParams,
    n_samples: usize,
    seed: u64,
    budget: usize,
) -> Result<(MeasureReport, Vec<SampleOutcome>)> {
    estimate_measures_with(p, n_samples, seed, budget, default_probe_delta(p))
}

/// As [`estimate_measures_detailed`] with an explicit probe scale.
pub fn estimate_measures_with(
    p: &NetworkParams,
    n_samples: usize,
    seed: u64,
    budget: usize,
    delta: f64,
) -> Result<(MeasureReport, Vec<SampleOutcome>)> {
    if n_samples == 0 {
        return Err(NetError::SampleCountZero);
    }
    let threshold = margin_threshold(p, delta);

    let verdicts: Vec<(SectionPoint, PointVerdict)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let point = random_section_point(p, &mut rng);
            let verdict = classify_with(p, &point, budget, delta, threshold)?;
            Ok((point, verdict))
        })
        .collect::<Result<_>>()?;

    let mut cycles: Vec<CycleBasin> = Vec::new();
    let mut rows = Vec::with_capacity(n_samples);
    let mut stable = 0usize;
    let mut chaotic = 0usize;
    let mut undecided = 0usize;
    let mut band = 0usize;

    for (index, (point, verdict)) in verdicts.into_iter().enumerate() {
        if verdict.band_contact {
            band += 1;
        }
        let label = match &verdict.kind {
            VerdictKind::Stable(cycle) => {
                stable += 1;
                let id = match cycles
                    .iter_mut()
                    .find(|c| c.cycle.same_orbit(cycle, CYCLE_DEDUP_TOL))
                {
                    Some(basin) => {
                        basin.basin_samples += 1;
                        basin.id
                    }
                    None => {
                        let id = cycles.len();
                        cycles.push(CycleBasin {
                            id,
                            cycle: cycle.clone(),
                            basin_samples: 1,
                        });
                        id
                    }
                };
                SampleLabel::Stable { cycle_id: id }
            }
            VerdictKind::Chaotic => {
                chaotic += 1;
                SampleLabel::Chaotic
            }
            VerdictKind::Undecided => {
                undecided += 1;
                SampleLabel::Undecided
            }
        };
        rows.push(SampleOutcome {
            index,
            point,
            label,
            min_margin: verdict.min_margin,
            convergence_step: verdict.convergence_step,
            cycle_residual: verdict.cycle_residual,
        });
    }

    let total = n_samples as f64;
    let frac_stable = stable as f64 / total;
    let frac_chaotic = chaotic as f64 / total;
    let frac_undecided = undecided as f64 / total;
    let system_class = if frac_chaotic == 0.0 && frac_undecided < 0.01 {
        SystemClass::AeStable
    } else if frac_stable == 0.0 && frac_undecided < 0.01 {
        SystemClass::AeChaotic
    } else if frac_stable > 0.0 && frac_chaotic > 0.0 {
        SystemClass::Combined
    } else {
        SystemClass::Indeterminate
    };

    Ok((
        MeasureReport {
            samples: n_samples,
            frac_stable,
            frac_chaotic,
            frac_undecided,
            frac_band_contact: band as f64 / total,
            cycles,
            system_class,
        },
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> NetworkParams {
        NetworkParams::symmetric(2, 1.0, 1.0, 2.0, 0.2).unwrap()
    }

    #[test]
    fn boundary_point_is_chaotic() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.0]).unwrap();
        let verdict = classify_point(&p, &v, 1000, 0.01).unwrap();
        assert!(verdict.is_chaotic());
        assert!(verdict.band_contact);
        assert_eq!(verdict.min_margin, 0.0);
    }

    #[test]
    fn generic_start_is_stable_on_the_antiphase_cycle() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        let verdict = classify_point(&p, &v, 2000, 0.01).unwrap();
        let VerdictKind::Stable(cycle) = &verdict.kind else {
            panic!("expected stable, got {:?}", verdict.kind);
        };
        assert_eq!(cycle.period, 2);
        assert!(verdict.cycle_residual.unwrap() < 1e-12);
        assert!(verdict.convergence_step.is_some());
    }

    #[test]
    fn cycle_state_classifies_with_zero_transient() {
        let p = params();
        let first = classify_point(
            &p,
            &SectionPoint::new(&p, vec![0.0, 0.5]).unwrap(),
            2000,
            0.01,
        )
        .unwrap();
        let VerdictKind::Stable(cycle) = &first.kind else {
            panic!("setup failed");
        };
        let verdict = classify_point(&p, &cycle.states[0], 2000, 0.01).unwrap();
        assert!(verdict.is_stable());
        assert_eq!(verdict.convergence_step, Some(0));
    }

    #[test]
    fn delta_must_stay_below_alpha() {
        let p = params();
        let v = SectionPoint::new(&p, vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            classify_point(&p, &v, 100, 0.5).unwrap_err(),
            NetError::DeltaTooLarge { .. }
        ));
    }

    #[test]
    fn measures_are_deterministic_and_stable_dominates() {
        let p = params();
        let (report, rows) = estimate_measures_detailed(&p, 200, 42, 2000).unwrap();
        assert_eq!(report.samples, 200);
        assert!(report.frac_stable >= 0.99, "{}", report.frac_stable);
        assert_eq!(report.cycles.len(), 1);
        assert_eq!(report.cycles[0].cycle.period, 2);
        assert_eq!(report.system_class, SystemClass::AeStable);
        assert_eq!(rows.len(), 200);

        let (again, _) = estimate_measures_detailed(&p, 200, 42, 2000).unwrap();
        assert_eq!(report.frac_stable, again.frac_stable);
        assert_eq!(report.cycles.len(), again.cycles.len());
        for (a, b) in report.cycles.iter().zip(&again.cycles) {
            assert_eq!(
                a.cycle.states[0].state().coords(),
                b.cycle.states[0].state().coords()
            );
        }
    }

    #[test]
    fn estimate_rejects_zero_samples() {
        let p = params();
        assert!(matches!(
            estimate_measures(&p, 0, 1, 10).unwrap_err(),
            NetError::SampleCountZero
        ));
    }
}
