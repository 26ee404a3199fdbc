use netdyn_core::sampling::{random_params, stream_rng};
use netdyn_core::{estimate_measures, system_constants};
use std::time::Instant;

fn main() {
    let mut rng = stream_rng(0xFEED, 0);
    for (idx, n) in [2usize, 3, 5, 3, 2].into_iter().enumerate() {
        let p = random_params(n, 1.0, &mut rng);
        let c = system_constants(&p);
        let t = Instant::now();
        let report = estimate_measures(&p, 1000, 7, 10_000).unwrap();
        println!(
            "system {idx} n={n}: stable={:.4} chaotic={:.4} undecided={:.4} band={:.4} cycles={} class={} alpha={:.3} lambda={:.4} [{:.1}s]",
            report.frac_stable,
            report.frac_chaotic,
            report.frac_undecided,
            report.frac_band_contact,
            report.cycles.len(),
            report.system_class,
            c.alpha,
            c.lambda,
            t.elapsed().as_secs_f64()
        );
        for b in &report.cycles {
            println!(
                "  cycle {}: period={} basin={} residual={:.2e}",
                b.id, b.cycle.period, b.basin_samples, b.cycle.residual
            );
        }
    }
}
