//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::Rng;

use vc_capacity::analytic::{conditional_capacity, ergodic_capacity, interference_exponent, Budget, Mark, Method};
use vc_capacity::montecarlo::{estimate_capacity, estimate_serving_los_probability, laplace_functional_mc, SimMode};
use vc_capacity::quadrature::{integrate_nested_ordered, integrate_semi_infinite, QuadSpec};
use vc_capacity::rng::{stream, Purpose};
use vc_capacity::sweep::{run_los_probability_sweep, run_sweep, LosSweepSpec, SweepSpec, SweptParameter};
use vc_capacity::{CapacityEstimate, FadingModel, OrderedDistances, Region, SystemParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn nakagami() -> FadingModel {
    FadingModel::Nakagami { n_los: 3.0, n_nlos: 2.0 }
}

fn rayleigh() -> FadingModel {
    FadingModel::Rayleigh { mu: 1.0 }
}

/// The three models in the order no fading, Nakagami, Rayleigh.
fn models() -> [FadingModel; 3] {
    [FadingModel::NoFading, nakagami(), rayleigh()]
}

fn nested(p: &SystemParams, model: &FadingModel) -> CapacityEstimate {
    ergodic_capacity(p, model, Method::AnalyticNested, &Budget::default()).expect("nested quadrature")
}

fn infinite() -> SystemParams {
    SystemParams::default().with_region(Region::Infinite)
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn model_collapse() -> Outcome {
    let mut rng = stream(2024, Purpose::Oracle, 0);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let lambda = 10f64.powf(rng.random_range(-4.0..-2.0));
        let k = 1 + (i % 2);
        let mut r: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..80.0)).collect();
        r.sort_by(f64::total_cmp);
        let region = if i < 5 { Region::Infinite } else { Region::Finite(100.0) };
        let p = SystemParams::default().with_lambda(lambda).with_k(k).with_region(region);
        let r = OrderedDistances::new(r).expect("ordered");
        let a = conditional_capacity(&r, &p, &FadingModel::Nakagami { n_los: 1.0, n_nlos: 1.0 })
            .map_err(|e| e.to_string())?
            .bits_per_hz;
        let b = conditional_capacity(&r, &p, &rayleigh()).map_err(|e| e.to_string())?.bits_per_hz;
        let rel = (a - b).abs() / b;
        worst = worst.max(rel);
        ensure(rel <= 1e-6, format!("r={:?} lambda={lambda:.3e}: {a} vs {b}", r.values()))?;
    }
    Ok(format!("10 configurations, max relative difference {worst:.2e}"))
}

fn fading_hardening() -> Outcome {
    let big = FadingModel::Nakagami { n_los: 1024.0, n_nlos: 1024.0 };
    let mut notes = Vec::new();
    for lambda in [1e-3, 2.5e-3] {
        let p = infinite().with_k(1).with_lambda(lambda);
        let a = nested(&p, &big).bits_per_hz;
        let b = nested(&p, &FadingModel::NoFading).bits_per_hz;
        let rel = (a - b).abs() / b;
        notes.push(format!("lambda={lambda}: {a:.5} vs {b:.5} ({:.3}%)", 100.0 * rel));
        ensure(rel < 0.01, notes.join("; "))?;
    }
    Ok(notes.join("; "))
}

fn analytic_vs_simulation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for k in [1, 2] {
        for model in models() {
            for lambda in [1e-3, 2.5e-3, 5e-3] {
                let p = SystemParams::default().with_k(k).with_lambda(lambda).with_region(Region::Finite(100.0));
                let t = Instant::now();
                let a = nested(&p, &model);
                let m = estimate_capacity(&p, &model, SimMode::Assumption, 10_000, 1).map_err(|e| e.to_string())?;
                let elapsed = t.elapsed();
                slowest = slowest.max(elapsed);
                let rel = (m.bits_per_hz - a.bits_per_hz).abs() / a.bits_per_hz;
                worst = worst.max(rel);
                if rel >= 0.05 || elapsed >= Duration::from_secs(300) {
                    failures.push(format!(
                        "K={k} {model} lambda={lambda}: analytic {:.4}, simulated {:.4}, {elapsed:?}",
                        a.bits_per_hz, m.bits_per_hz
                    ));
                }
            }
        }
    }
    ensure(failures.is_empty(), failures.join("; "))?;
    Ok(format!(
        "18 points, max relative gap {:.2}%, slowest point {:.1}s",
        100.0 * worst,
        slowest.as_secs_f64()
    ))
}

fn density_shape() -> Outcome {
    let grid = [5e-4, 1e-3, 2.5e-3, 5e-3];
    let table: Vec<Vec<CapacityEstimate>> = models()
        .iter()
        .map(|m| grid.iter().map(|&l| nested(&infinite().with_k(2).with_lambda(l), m)).collect())
        .collect();
    for (m, row) in models().iter().zip(&table) {
        for (i, w) in row.windows(2).enumerate() {
            ensure(
                w[0].bits_per_hz - w[0].half_width > w[1].bits_per_hz + w[1].half_width,
                format!("{m}: not decreasing between lambda={} and {}", grid[i], grid[i + 1]),
            )?;
        }
    }
    // models() is ordered no fading, Nakagami, Rayleigh.
    for j in 0..grid.len() {
        for i in 0..2 {
            let (hi, lo) = (&table[i][j], &table[i + 1][j]);
            ensure(
                hi.bits_per_hz + hi.half_width + lo.half_width >= lo.bits_per_hz,
                format!("lambda={}: {} below {}", grid[j], models()[i], models()[i + 1]),
            )?;
        }
    }
    let row = |i: usize| {
        table[i]
            .iter()
            .map(|c| format!("{:.3}", c.bits_per_hz))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(format!("none [{}] nakagami [{}] rayleigh [{}]", row(0), row(1), row(2)))
}

fn blockage_shape() -> Outcome {
    let mut notes = Vec::new();
    for model in models() {
        let p = infinite().with_k(1).with_lambda(2.5e-3);
        let low = nested(&p.clone().with_beta(0.0071), &model);
        let high = nested(&p.with_beta(0.02), &model);
        notes.push(format!("{model} {:.4} -> {:.4}", low.bits_per_hz, high.bits_per_hz));
        ensure(
            high.bits_per_hz - high.half_width > low.bits_per_hz + low.half_width,
            notes.join("; "),
        )?;
    }
    Ok(notes.join("; "))
}

fn cooperation_shape() -> Outcome {
    let mut notes = Vec::new();
    for model in models() {
        let gap = |lambda: f64| {
            let p = infinite().with_lambda(lambda);
            let one = nested(&p.clone().with_k(1), &model);
            let two = nested(&p.with_k(2), &model);
            (two.bits_per_hz - one.bits_per_hz, one.half_width + two.half_width)
        };
        let (sparse, e1) = gap(1e-3);
        let (dense, e2) = gap(5e-3);
        notes.push(format!("{model} gap {sparse:.4} at 1e-3, {dense:.4} at 5e-3"));
        ensure(sparse > e1 && sparse - e1 > dense + e2, notes.join("; "))?;
    }
    Ok(notes.join("; "))
}

fn los_probability_shape() -> Outcome {
    let lambdas = [1e-3, 2.5e-3, 5e-3, 1e-2];
    let spec = LosSweepSpec {
        lambdas: lambdas.to_vec(),
        ks: vec![1, 2, 3],
        trials: 10_000,
        master_seed: 17,
    };
    let base = SystemParams::default().with_region(Region::Finite(100.0));
    let table = run_los_probability_sweep(&spec, &base).map_err(|e| e.to_string())?;
    for &k in &spec.ks {
        for w in lambdas.windows(2) {
            let (a, b) = (table.get(w[0], k).unwrap().probability, table.get(w[1], k).unwrap().probability);
            ensure(
                b.probability + b.ci_half_width >= a.probability - a.ci_half_width,
                format!("K={k}: drops from {} to {} between lambda={} and {}", a.probability, b.probability, w[0], w[1]),
            )?;
        }
    }
    for &l in &lambdas {
        for w in spec.ks.windows(2) {
            let (a, b) = (table.get(l, w[0]).unwrap().probability, table.get(l, w[1]).unwrap().probability);
            ensure(b.probability <= a.probability, format!("lambda={l}: K={} above K={}", w[1], w[0]))?;
        }
    }
    let top = table.get(1e-2, 1).unwrap().probability;
    ensure(
        top.probability > 0.95,
        format!("lambda=1e-2, K=1: {}", top.probability),
    )?;
    // Cross-check one cell against a direct call.
    let direct = estimate_serving_los_probability(&base.with_lambda(1e-2), 1, 10_000, 17).map_err(|e| e.to_string())?;
    ensure(direct == top, "sweep and direct estimate differ".into())?;
    Ok(format!(
        "K=1 column {:?}, P(lambda=1e-2, K=1) = {} +- {:.4}",
        lambdas.map(|l| table.get(l, 1).unwrap().probability.probability),
        top.probability,
        top.ci_half_width
    ))
}

fn oracle_identities() -> Outcome {
    let spec = QuadSpec::default().with_tol(1e-12, 1e-14);
    for x in [0.1, 1.0, 10.0, 100.0] {
        let v = integrate_semi_infinite(
            |z: f64| if z <= 0.0 { x } else { -(-x * z).exp_m1() / z * (-z).exp() },
            0.0,
            &spec,
        )
        .map_err(|e| e.to_string())?
        .value;
        ensure(
            (v - x.ln_1p()).abs() <= 1e-8 * x.ln_1p(),
            format!("Hamdi identity at x={x}: {v} vs {}", x.ln_1p()),
        )?;
    }
    for k in [1, 2] {
        for lambda in [1e-4, 2.5e-3, 1e-2] {
            let mass = integrate_nested_ordered(|_| 1.0, lambda, k, &QuadSpec::default().with_tol(1e-9, 1e-12))
                .map_err(|e| e.to_string())?
                .value;
            ensure((mass - 1.0).abs() <= 1e-6, format!("density mass {mass} at K={k}, lambda={lambda}"))?;
        }
    }
    // Both sides truncate the interference field at 500 m.
    let p = SystemParams::default().with_region(Region::Finite(500.0));
    let points = [(1e8, 10.0, Mark::Los), (1e9, 30.0, Mark::Los), (1e12, 15.0, Mark::Nlos)];
    let mut worst: f64 = 0.0;
    for model in models() {
        for (i, &(s, r, mark)) in points.iter().enumerate() {
            let e = interference_exponent(s, r, mark, &p, &model).map_err(|e| e.to_string())?;
            let mc = laplace_functional_mc(s, r, mark, &p, &model, 20_000, 100 + i as u64).map_err(|e| e.to_string())?;
            let z = ((-e).exp() - mc.mean).abs() / mc.std_error;
            worst = worst.max(z);
            ensure(
                z <= 3.0,
                format!("{model} s={s:e} r_K={r} {mark:?}: exp(-E)={} vs {} +- {}", (-e).exp(), mc.mean, mc.std_error),
            )?;
        }
    }
    Ok(format!(
        "Hamdi and density mass within tolerance; 9 Laplace points, worst {worst:.2} SE"
    ))
}

fn sweep_csv(pool_threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(pool_threads).build().expect("thread pool");
    pool.install(|| {
        let mut spec = SweepSpec::new(SweptParameter::Lambda, vec![1e-3, 2.5e-3]);
        spec.methods = vec![Method::AnalyticSampled, Method::MonteCarlo];
        spec.samples = 60;
        spec.trials = 2000;
        spec.master_seed = 99;
        let mut out = Vec::new();
        run_sweep(&spec, &SystemParams::default())
            .expect("valid sweep")
            .write_csv(&mut out)
            .expect("in-memory write");
        out
    })
}

fn determinism() -> Outcome {
    let a = sweep_csv(1);
    let b = sweep_csv(4);
    let c = sweep_csv(4);
    ensure(a == b, "1 and 4 worker threads give different CSV".into())?;
    ensure(b == c, "two runs give different CSV".into())?;
    Ok(format!("{} bytes identical across runs and 1/4 threads", a.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("model-collapse identity", model_collapse),
        ("fading hardening", fading_hardening),
        ("analytic vs simulation", analytic_vs_simulation),
        ("capacity vs density", density_shape),
        ("capacity vs blockage", blockage_shape),
        ("cooperation gain vs density", cooperation_shape),
        ("LOS serving probability", los_probability_shape),
        ("oracle identities", oracle_identities),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {} {name}: PASS [{secs:.1}s] {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} {name}: FAIL [{secs:.1}s] {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
