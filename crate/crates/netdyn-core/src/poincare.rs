//! The post-spike return map, its continuity partition, and the analytic
//! machinery around it: itineraries, the time-gap margin, the Jacobian,
//! and the system constants controlling expansion and contraction.

use crate::error::{NetError, Result};
use crate::flow::{FlowModel, LeakyFlow};
use crate::params::NetworkParams;
use crate::spike::{apply_spike, first_spike, SpikeOutcome};
use crate::state::{SectionPoint, State};

/// One application of the return map.
#[derive(Debug, Clone)]
pub struct ReturnStep {
    /// The post-spike state; its zero set contains the winners.
    pub point: SectionPoint,
    /// The spike event that produced it.
    pub spike: SpikeOutcome,
    /// Number of coordinates clamped at the lower face during the jump.
    pub clamped: usize,
}

/// Advances any cube state to the state immediately after its next spike.
///
/// The return map proper restricts this to the section; the probe machinery
/// uses it on off-section states as well.
pub fn step_from_state(p: &NetworkParams, v: &State) -> Result<ReturnStep> {
    let spike = first_spike(p, v)?;
    let (post, clamped) = apply_spike(p, &spike.pre_jump, &spike.winners)?;
    Ok(ReturnStep {
        point: SectionPoint::from_reset_state(post),
        spike,
        clamped,
    })
}

/// The return map: flows a section point to its next spike and applies the
/// reset/inhibition rule, landing back on the section.
pub fn return_map(p: &NetworkParams, v: &SectionPoint) -> Result<ReturnStep> {
    step_from_state(p, v.state())
}

/// A finite prefix of the firing order along an orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    /// Winner set of each step, in order.
    pub word: Vec<Vec<usize>>,
    /// True iff every sampled winner set is a singleton, i.e. the orbit
    /// stayed off the simultaneity boundary.
    pub singleton_flag: bool,
}

/// Winner sets of the first `steps` return-map iterates from `v`.
pub fn itinerary(p: &NetworkParams, v: &SectionPoint, steps: usize) -> Result<Itinerary> {
    let mut word = Vec::with_capacity(steps);
    let mut current = v.clone();
    for _ in 0..steps {
        let step = return_map(p, &current)?;
        word.push(step.spike.winners.clone());
        current = step.point;
    }
    let singleton_flag = word.iter().all(|w| w.len() == 1);
    Ok(Itinerary {
        word,
        singleton_flag,
    })
}

/// Gap between the two smallest per-neuron spike times from `v`.
///
/// Zero exactly when two or more neurons would fire simultaneously, so it
/// serves as a computable proximity indicator to the discontinuity set of
/// the return map.
pub fn time_gap_margin(p: &NetworkParams, v: &State) -> Result<f64> {
    let mut first = f64::INFINITY;
    let mut second = f64::INFINITY;
    for i in 0..p.n() {
        let t = crate::flow::spike_time(p, i, v[i])?;
        if t < first {
            second = first;
            first = t;
        } else if t < second {
            second = t;
        }
    }
    Ok(second - first)
}

/// Constants of the system derived from its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConstants {
    /// Expansivity constant: `min_{i != j} |theta - h_ij| / 4`. Jumps of
    /// the return map across the discontinuity set exceed three times this.
    pub alpha: f64,
    /// Smallest inhibition, a lower bound on how far below threshold every
    /// non-winner lands after a spike.
    pub eps0: f64,
    /// Lower bound on the inter-spike time from any post-spike state.
    pub t0: f64,
    /// Per-step contraction rate of the flow derivative: `exp(-gamma_min t0)`.
    pub lambda: f64,
    /// Smallest leak rate: the slowest per-coordinate contraction.
    pub gamma_min: f64,
    /// Largest drift anywhere in the cube: `max_i gamma_i (beta_i + theta)`.
    pub f_max: f64,
    /// Max-norm diameter of the section, `2 theta`.
    pub k_diam: f64,
}

/// Computes the system constants for a validated parameter set.
pub fn system_constants(p: &NetworkParams) -> SystemConstants {
    let theta = p.theta();
    let n = p.n();
    let mut alpha = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                alpha = alpha.min((theta - p.h(i, j)).abs());
            }
        }
    }
    alpha /= 4.0;
    let eps0 = p.min_inhibition();
    let f_max = (0..n)
        .map(|i| p.gamma()[i] * (p.beta()[i] + theta))
        .fold(0.0, f64::max);
    let gamma_min = p.gamma().iter().copied().fold(f64::INFINITY, f64::min);
    let t0 = eps0 / f_max;
    let lambda = (-gamma_min * t0).exp();
    SystemConstants {
        alpha,
        eps0,
        t0,
        lambda,
        gamma_min,
        f_max,
        k_diam: 2.0 * theta,
    }
}

/// A dense square matrix, row-major. Small and self-contained; the
/// Jacobians here are at most a few dozen entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = r;
                }
            }
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot * n + c);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f != 0.0 {
                    for c in col..n {
                        a[r * n + c] -= f * a[col * n + c];
                    }
                }
            }
        }
        det
    }
}

/// The derivative of the return map at an interior point of a continuity
/// piece with a single winner.
#[derive(Debug, Clone)]
pub struct Jacobian {
    /// The firing neuron; its output row is identically zero.
    pub winner: usize,
    /// Inter-spike time at the evaluation point.
    pub tbar: f64,
    /// Full `n x n` derivative, rows indexed by output coordinates.
    pub matrix: SquareMatrix,
}

impl Jacobian {
    /// Restriction to section charts: drops the winner's output row and the
    /// input chart coordinate's column, giving the `(n-1) x (n-1)`
    /// derivative between the slab charts.
    pub fn restricted(&self, chart: usize) -> SquareMatrix {
        let n = self.matrix.n();
        let mut out = SquareMatrix::zeros(n - 1);
        let mut rr = 0;
        for r in 0..n {
            if r == self.winner {
                continue;
            }
            let mut cc = 0;
            for c in 0..n {
                if c == chart {
                    continue;
                }
                out.set(rr, cc, self.matrix.get(r, c));
                cc += 1;
            }
            rr += 1;
        }
        out
    }
}

/// Analytic derivative of the return map at `v`.
///
/// Requires a single winner and a time-gap margin above the partition-band
/// tolerance; on or near the discontinuity set the map is not
/// differentiable. For the leaky flow the entries are, with winner `i` and
/// inter-spike time `tbar`:
/// diagonal `d rho_j / d v_j = exp(-gamma_j tbar)`, cross column
/// `d rho_j / d v_i = F_j(phi_j^tbar(v_j)) * dtbar/dv_i` with
/// `dtbar/dv_i = -1 / (gamma_i (beta_i - v_i))`, and zero winner row.
pub fn jacobian(p: &NetworkParams, v: &SectionPoint) -> Result<Jacobian> {
    let margin = time_gap_margin(p, v.state())?;
    if margin <= p.tol.partition_band {
        return Err(NetError::OnPartitionBoundary {
            margin,
            tolerance: p.tol.partition_band,
        });
    }
    let spike = first_spike(p, v.state())?;
    debug_assert_eq!(spike.winners.len(), 1);
    let winner = spike.winners[0];
    let tbar = spike.tbar;
    let flow = LeakyFlow::from_params(p);
    let n = p.n();
    let dtbar_dvi = -1.0 / (p.gamma()[winner] * (p.beta()[winner] - v.state()[winner]));
    let mut m = SquareMatrix::zeros(n);
    for j in 0..n {
        if j == winner {
            continue;
        }
        m.set(j, j, (-p.gamma()[j] * tbar).exp());
        let pre_j = flow.phi(j, v.state()[j], tbar);
        let rate_j = flow.rate(j, pre_j);
        m.set(j, winner, rate_j * dtbar_dvi);
    }
    Ok(Jacobian {
        winner,
        tbar,
        matrix: m,
    })
}

/// Locates a point of the discontinuity set on the segment between two
/// section states with different winner sets, by bisection on the winner
/// identity. Both endpoints must lie in the same slab so the whole segment
/// stays on the section. Returns `None` if the endpoints share a winner set.
pub fn locate_tie_on_segment(
    p: &NetworkParams,
    a: &State,
    b: &State,
    iterations: usize,
) -> Result<Option<State>> {
    let wa = first_spike(p, a)?.winners;
    let wb = first_spike(p, b)?.winners;
    if wa == wb {
        return Ok(None);
    }
    let n = p.n();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let at = |s: f64| -> State {
        let coords = (0..n).map(|i| a[i] + s * (b[i] - a[i])).collect();
        State::from_parts(coords)
    };
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let wm = first_spike(p, &at(mid))?.winners;
        if wm == wa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(at(0.5 * (lo + hi))))
}

/// Measures the jump of the return map across a near-tie point.
///
/// Probes pairs `(U, W) = (v + s d, v - s d)` along the coordinate axes at
/// scales `s in {delta, delta/2, delta/4}` and returns the largest max-norm
/// difference of their images over the pairs whose winner sets differ, i.e.
/// the pairs straddling the discontinuity. When `v` is interior to a
/// continuity piece no pair straddles and the largest same-piece difference
/// is returned instead (it vanishes with `delta`); failing to straddle is
/// an error only when `v` actually sits in the partition band.
pub fn discontinuity_jump_probe(p: &NetworkParams, v: &State, delta: f64) -> Result<f64> {
    let n = p.n();
    let theta = p.theta();
    let margin = time_gap_margin(p, v)?;
    let mut straddled = false;
    let mut best_straddle: f64 = 0.0;
    let mut best_same: f64 = 0.0;
    for axis in 0..n {
        for &scale in &[1.0, 0.5, 0.25] {
            let s = delta * scale;
            let mut up = v.coords().to_vec();
            let mut dn = v.coords().to_vec();
            up[axis] = (up[axis] + s).clamp(-theta, theta);
            dn[axis] = (dn[axis] - s).clamp(-theta, theta);
            let u = State::from_parts(up);
            let w = State::from_parts(dn);
            let su = step_from_state(p, &u)?;
            let sw = step_from_state(p, &w)?;
            let d = su.point.state().max_norm_distance(sw.point.state());
            if su.spike.winners != sw.spike.winners {
                straddled = true;
                best_straddle = best_straddle.max(d);
            } else {
                best_same = best_same.max(d);
            }
        }
    }
    if straddled {
        Ok(best_straddle)
    } else if margin <= p.tol.partition_band {
        Err(NetError::ProbeStraddleFailed)
    } else {
        Ok(best_same)
    }
}

/// Lipschitz bound of the time-gap margin in the max norm.
///
/// For the leaky flow each crossing time satisfies
/// `|dt_i/dv_i| = 1/(gamma_i (beta_i - v_i)) <= 1/(gamma_i (beta_i - theta))`,
/// and the margin is a difference of two crossing times, so twice the worst
/// single-neuron slope bounds it. Since the margin vanishes on the
/// discontinuity set, `margin(v) <= bound * dist(v, boundary)`.
pub fn margin_lipschitz_bound(p: &NetworkParams) -> f64 {
    let theta = p.theta();
    2.0 * (0..p.n())
        .map(|i| 1.0 / (p.gamma()[i] * (p.beta()[i] - theta)))
        .fold(0.0, f64::max)
}

/// Margin level certifying a potential-space clearance of `delta / 2` from
/// the discontinuity set: any state with a larger time-gap margin is at
/// least `delta / 2` away in the max norm.
pub fn margin_threshold(p: &NetworkParams, delta: f64) -> f64 {
    margin_lipschitz_bound(p) * delta / 2.0
}

/// Empirical margin-per-distance slope: probes random section points along
/// random in-slab rays, bisects to the nearest winner change, and returns
/// the largest observed ratio of margin to distance. A diagnostic
/// counterpart of [`margin_lipschitz_bound`], which must dominate it.
pub fn probe_margin_slope(p: &NetworkParams, seed: u64, probes: usize) -> Result<f64> {
    let theta = p.theta();
    let mut worst: f64 = 0.0;
    for stream in 0..probes {
        let mut rng = crate::sampling::stream_rng(seed, stream as u64);
        let v = crate::sampling::random_section_point(p, &mut rng);
        let margin = time_gap_margin(p, v.state())?;
        if margin <= p.tol.partition_band {
            continue;
        }
        let dir = crate::sampling::random_slab_direction(p, &v, &mut rng);
        // March outward until the winner changes or the ray leaves the cube.
        let base_winners = first_spike(p, v.state())?.winners;
        let mut reach = None;
        let mut s = margin / margin_lipschitz_bound(p);
        while s <= 2.0 * theta {
            let probe = offset_state(v.state(), &dir, s, theta);
            match first_spike(p, &probe) {
                Ok(out) if out.winners != base_winners => {
                    reach = Some((s, probe));
                    break;
                }
                Ok(_) => {}
                Err(_) => break,
            }
            s *= 1.5;
        }
        let Some((_, far)) = reach else { continue };
        if let Some(tie) = locate_tie_on_segment(p, v.state(), &far, 80)? {
            let dist = v.state().max_norm_distance(&tie);
            if dist > 0.0 {
                worst = worst.max(margin / dist);
            }
        }
    }
    Ok(worst)
}

fn offset_state(base: &State, dir: &[f64], scale: f64, theta: f64) -> State {
    let coords = base
        .coords()
        .iter()
        .zip(dir)
        .map(|(x, d)| (x + scale * d).clamp(-theta, theta * (1.0 - 1e-12)))
        .collect();
    State::from_parts(coords)
}

/// Estimates the norm-equivalence constant `K` between the max norm and the
/// adapted metric in which the return map contracts at rate `lambda`: the
/// largest observed one-step expansion over same-piece pairs, normalized so
/// `K^2 lambda` bounds the one-step max-norm ratio. Always at least 1.
pub fn norm_equivalence_probe(p: &NetworkParams, seed: u64, pairs: usize) -> Result<f64> {
    let lambda = system_constants(p).lambda;
    let mut worst_ratio: f64 = 0.0;
    let mut used = 0;
    let mut stream = 0u64;
    while used < pairs && stream < 20 * pairs as u64 {
        let mut rng = crate::sampling::stream_rng(seed, stream);
        stream += 1;
        // Land in the image of the section before pairing.
        let raw = crate::sampling::random_section_point(p, &mut rng);
        let Ok(step) = return_map(p, &raw) else {
            continue;
        };
        let v = step.point;
        if time_gap_margin(p, v.state())? <= p.tol.partition_band {
            continue;
        }
        let dir = crate::sampling::random_slab_direction(p, &v, &mut rng);
        let u = offset_state(v.state(), &dir, 1e-4 * p.theta(), p.theta());
        let sv = step_from_state(p, v.state())?;
        let su = step_from_state(p, &u)?;
        if sv.spike.winners != su.spike.winners {
            continue;
        }
        let before = v.state().max_norm_distance(&u);
        let after = sv.point.state().max_norm_distance(su.point.state());
        if before > 0.0 {
            worst_ratio = worst_ratio.max(after / before);
            used += 1;
        }
    }
    Ok((worst_ratio.max(lambda) / lambda).sqrt())
}

/// Number of iterations after which the map provably halves max-norm
/// distances within a shared itinerary: smallest `p0` with
/// `K^2 lambda^p0 <= 1/2`.
pub fn contraction_iterate_count(constants: &SystemConstants, k: f64) -> usize {
    let k = k.max(1.0);
    let p0 = ((0.5 / (k * k)).ln() / constants.lambda.ln()).ceil();
    (p0 as usize).max(1)
}
