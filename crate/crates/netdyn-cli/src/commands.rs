//! The analysis commands behind the CLI: each produces a set of output
//! files derived deterministically from (config, seed).

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use netdyn_core::{
    default_probe_delta, detect_cycle, estimate_measures_with, extract_chains,
    indivisibility_check, iterate_orbit, refine_cycle, sample_section, system_constants,
    AtomRefinement, Cycle, NetError, SampleLabel, SectionPoint,
};

use crate::config::{OutputFormat, RunConfig};
use crate::output::{fmt_f64, fmt_singleton_word, fmt_winners, fmt_word, Summary, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Simulate,
    Cycles,
    Classify,
    Atoms,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Simulate => "simulate",
            Command::Cycles => "cycles",
            Command::Classify => "classify",
            Command::Atoms => "atoms",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    /// Configuration-level problem discovered at dispatch time.
    #[error("{0}")]
    Usage(String),

    /// Numerical failure inside the analyses.
    #[error(transparent)]
    Numerics(#[from] NetError),
}

/// Output files, keyed by suffix (e.g. `orbit.tsv`), in a deterministic
/// order.
pub type OutputFiles = BTreeMap<&'static str, String>;

pub fn run(command: Command, cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    match command {
        Command::Constants => constants(cfg),
        Command::Simulate => simulate(cfg),
        Command::Cycles => cycles(cfg),
        Command::Classify => classify(cfg),
        Command::Atoms => atoms(cfg),
    }
}

fn need_seed(cfg: &RunConfig, command: Command) -> Result<u64, RunError> {
    cfg.seed.ok_or_else(|| {
        RunError::Usage(format!(
            "command `{}` samples the section and needs a seed (config key `seed` or --seed)",
            command.name()
        ))
    })
}

fn base_summary(cfg: &RunConfig, command: Command) -> Summary {
    let mut s = Summary::new();
    s.put("command", command.name());
    s.put("n", cfg.params.n().to_string());
    s.put("theta", fmt_f64(cfg.params.theta()));
    s
}

fn probe_delta(cfg: &RunConfig) -> f64 {
    cfg.delta.unwrap_or_else(|| default_probe_delta(&cfg.params))
}

fn constants(cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    let c = system_constants(&cfg.params);
    let mut s = base_summary(cfg, Command::Constants);
    s.put("alpha", fmt_f64(c.alpha));
    s.put("eps0", fmt_f64(c.eps0));
    s.put("t0", fmt_f64(c.t0));
    s.put("lambda", fmt_f64(c.lambda));
    s.put("gamma_min", fmt_f64(c.gamma_min));
    s.put("f_max", fmt_f64(c.f_max));
    s.put("k_diam", fmt_f64(c.k_diam));
    let mut out = OutputFiles::new();
    out.insert("summary.txt", s.finish());
    Ok(out)
}

fn orbit_columns(n: usize) -> Vec<&'static str> {
    let mut cols = vec!["step", "winners", "tbar", "margin"];
    cols.extend(state_columns(n));
    cols
}

/// Column labels `v1..v8`; networks are small, and capping the static
/// labels keeps headers simple.
fn state_columns(n: usize) -> Vec<&'static str> {
    const LABELS: [&str; 16] = [
        "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9", "v10", "v11", "v12", "v13", "v14",
        "v15", "v16",
    ];
    assert!(n <= LABELS.len(), "state columns capped at 16 neurons");
    LABELS[..n].to_vec()
}

fn push_state(cells: &mut Vec<String>, point: &SectionPoint) {
    for &x in point.coords() {
        cells.push(fmt_f64(x));
    }
}

fn simulate(cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    let p = &cfg.params;
    let start = match &cfg.start {
        Some(coords) => SectionPoint::new(p, coords.clone()).map_err(|e| {
            RunError::Usage(format!("config key `start` is not a section state: {e}"))
        })?,
        None => {
            let seed = need_seed(cfg, Command::Simulate)?;
            let mut rng = netdyn_core::sampling::stream_rng(seed, 0);
            netdyn_core::sampling::random_section_point(p, &mut rng)
        }
    };

    let orbit = iterate_orbit(p, &start, cfg.steps)?;
    let mut table = Table::new(cfg.format, orbit_columns(p.n()));
    for (k, point) in orbit.states.iter().enumerate() {
        let mut cells = vec![
            k.to_string(),
            orbit
                .itinerary
                .word
                .get(k)
                .map(|w| fmt_winners(w))
                .unwrap_or_else(|| "-".to_string()),
            orbit
                .isi
                .get(k)
                .map(|&t| fmt_f64(t))
                .unwrap_or_else(|| "-".to_string()),
            fmt_f64(orbit.margins[k]),
        ];
        push_state(&mut cells, point);
        table.row(&cells);
    }

    let mut s = base_summary(cfg, Command::Simulate);
    s.put("steps_requested", cfg.steps.to_string());
    s.put("steps_run", orbit.steps().to_string());
    s.put("boundary_halt", orbit.boundary_halt.to_string());
    s.put("clamp_events", orbit.clamp_events.to_string());
    s.put(
        "singleton_itinerary",
        orbit.itinerary.singleton_flag.to_string(),
    );

    let mut out = OutputFiles::new();
    out.insert("orbit.tsv", table.finish());
    out.insert("summary.txt", s.finish());
    Ok(out)
}

fn cycle_table(format: OutputFormat, n: usize, cycles: &[(usize, &Cycle, Option<usize>)]) -> String {
    let mut cols = vec![
        "cycle",
        "period",
        "word",
        "residual",
        "floquet_bound",
        "basin_samples",
        "state",
    ];
    cols.extend(state_columns(n));
    let mut table = Table::new(format, cols);
    for (id, cycle, basin) in cycles {
        for (k, point) in cycle.states.iter().enumerate() {
            let mut cells = vec![
                id.to_string(),
                cycle.period.to_string(),
                fmt_word(&cycle.word),
                fmt_f64(cycle.residual),
                fmt_f64(cycle.floquet_bound),
                basin.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                k.to_string(),
            ];
            push_state(&mut cells, point);
            table.row(&cells);
        }
    }
    table.finish()
}

fn cycles(cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    let p = &cfg.params;
    let seed = need_seed(cfg, Command::Cycles)?;

    let found: Vec<Option<Cycle>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = netdyn_core::sampling::stream_rng(seed, i as u64);
            let start = netdyn_core::sampling::random_section_point(p, &mut rng);
            let orbit = iterate_orbit(p, &start, cfg.steps)?;
            let Some(cand) = detect_cycle(&orbit, p.tol.recurrence) else {
                return Ok(None);
            };
            Ok(refine_cycle(p, &cand).ok())
        })
        .collect::<Result<_, NetError>>()?;

    let mut distinct: Vec<(Cycle, usize)> = Vec::new();
    let mut orbits_with_cycle = 0usize;
    for cycle in found.into_iter().flatten() {
        orbits_with_cycle += 1;
        match distinct.iter_mut().find(|(c, _)| c.same_orbit(&cycle, 1e-8)) {
            Some((_, count)) => *count += 1,
            None => distinct.push((cycle, 1)),
        }
    }

    let rows: Vec<(usize, &Cycle, Option<usize>)> = distinct
        .iter()
        .enumerate()
        .map(|(id, (c, count))| (id, c, Some(*count)))
        .collect();

    let mut s = base_summary(cfg, Command::Cycles);
    s.put("samples", cfg.samples.to_string());
    s.put("orbits_with_cycle", orbits_with_cycle.to_string());
    s.put("distinct_cycles", distinct.len().to_string());

    let mut out = OutputFiles::new();
    out.insert("cycles.tsv", cycle_table(cfg.format, p.n(), &rows));
    out.insert("summary.txt", s.finish());
    Ok(out)
}

fn classify(cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    let p = &cfg.params;
    let seed = need_seed(cfg, Command::Classify)?;
    let delta = probe_delta(cfg);
    let (report, rows) = estimate_measures_with(p, cfg.samples, seed, cfg.steps, delta)?;

    let mut cols = vec![
        "sample",
        "label",
        "cycle",
        "min_margin",
        "convergence_step",
        "residual",
    ];
    cols.extend(state_columns(p.n()));
    let mut table = Table::new(cfg.format, cols);
    for row in &rows {
        let (label, cycle) = match row.label {
            SampleLabel::Stable { cycle_id } => ("stable", cycle_id.to_string()),
            SampleLabel::Chaotic => ("chaotic", "-".to_string()),
            SampleLabel::Undecided => ("undecided", "-".to_string()),
        };
        let mut cells = vec![
            row.index.to_string(),
            label.to_string(),
            cycle,
            fmt_f64(row.min_margin),
            row.convergence_step
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into()),
            row.cycle_residual
                .map(fmt_f64)
                .unwrap_or_else(|| "-".into()),
        ];
        push_state(&mut cells, &row.point);
        table.row(&cells);
    }

    let cycle_rows: Vec<(usize, &Cycle, Option<usize>)> = report
        .cycles
        .iter()
        .map(|b| (b.id, &b.cycle, Some(b.basin_samples)))
        .collect();

    let mut s = base_summary(cfg, Command::Classify);
    s.put("samples", report.samples.to_string());
    s.put("budget", cfg.steps.to_string());
    s.put("delta", fmt_f64(delta));
    s.put("frac_stable", fmt_f64(report.frac_stable));
    s.put("frac_chaotic", fmt_f64(report.frac_chaotic));
    s.put("frac_undecided", fmt_f64(report.frac_undecided));
    s.put("frac_band_contact", fmt_f64(report.frac_band_contact));
    s.put("distinct_cycles", report.cycles.len().to_string());
    s.put("system_class", report.system_class.to_string());

    let mut out = OutputFiles::new();
    out.insert("classify.tsv", table.finish());
    out.insert("cycles.tsv", cycle_table(cfg.format, p.n(), &cycle_rows));
    out.insert("summary.txt", s.finish());
    Ok(out)
}

fn atoms(cfg: &RunConfig) -> Result<OutputFiles, RunError> {
    let p = &cfg.params;
    let seed = need_seed(cfg, Command::Atoms)?;
    let delta = probe_delta(cfg);

    let cloud = sample_section(p, cfg.samples, seed)?;
    let mut refinement = AtomRefinement::new(&cloud);

    let cols = vec![
        "generation",
        "word",
        "members",
        "diameter",
        "min_margin",
        "indivisible",
    ];
    let mut table = Table::new(cfg.format, cols);
    let mut final_atoms = Vec::new();
    for gen in 1..=cfg.generations {
        refinement.step(p)?;
        if refinement.alive_count() == 0 {
            return Err(NetError::AllSamplesDiscarded { generation: gen }.into());
        }
        let atoms = refinement.atoms(p)?;
        for atom in &atoms {
            table.row(&[
                gen.to_string(),
                fmt_singleton_word(&atom.word),
                atom.members.len().to_string(),
                fmt_f64(atom.diameter),
                fmt_f64(atom.min_margin),
                indivisibility_check(p, atom, delta)?.to_string(),
            ]);
        }
        if gen == cfg.generations {
            final_atoms = atoms;
        }
    }

    let all_indivisible = final_atoms
        .iter()
        .map(|a| indivisibility_check(p, a, delta))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .all(|ok| ok);

    let mut s = base_summary(cfg, Command::Atoms);
    s.put("cloud", cloud.len().to_string());
    s.put("generations", cfg.generations.to_string());
    s.put("delta", fmt_f64(delta));
    s.put("survivors", refinement.alive_count().to_string());
    s.put("discarded", refinement.discarded().to_string());
    s.put("final_atoms", final_atoms.len().to_string());
    s.put(
        "max_diameter",
        fmt_f64(
            final_atoms
                .iter()
                .map(|a| a.diameter)
                .fold(0.0, f64::max),
        ),
    );
    s.put("all_indivisible", all_indivisible.to_string());

    let mut out = OutputFiles::new();
    if all_indivisible {
        let extraction = extract_chains(p, &final_atoms)?;
        s.put("chains", extraction.chains.len().to_string());
        s.put("stray_members", extraction.stray_members.to_string());
        s.put("word_fallbacks", extraction.word_fallbacks.to_string());
        for (i, chain) in extraction.chains.iter().enumerate() {
            s.put(
                &format!("chain_{i}"),
                format!(
                    "loop_len:{} entry:{} first_word:{}",
                    chain.loop_len,
                    chain.entry,
                    fmt_singleton_word(&chain.words[0])
                ),
            );
        }
        let rows: Vec<(usize, &Cycle, Option<usize>)> = extraction
            .cycles
            .iter()
            .enumerate()
            .map(|(id, c)| (id, c, None))
            .collect();
        out.insert("cycles.tsv", cycle_table(cfg.format, p.n(), &rows));
    } else {
        s.put("chains", "skipped (atoms not all indivisible)".to_string());
    }

    out.insert("atoms.tsv", table.finish());
    out.insert("summary.txt", s.finish());
    Ok(out)
}
