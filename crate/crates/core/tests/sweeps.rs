//! Shape checks on sweeps through the public sweep API.

use vc_capacity::analytic::Method;
use vc_capacity::sweep::{run_los_probability_sweep, run_sweep, LosSweepSpec, SweepSpec, SweptParameter};
use vc_capacity::{FadingModel, SystemParams};

fn capacity(row: &vc_capacity::sweep::SweepRow) -> f64 {
    row.estimate().expect("point succeeded").bits_per_hz
}

#[test]
fn density_sweep_is_decreasing_within_each_method() {
    let mut spec = SweepSpec::new(SweptParameter::Lambda, vec![1e-3, 2.5e-3]);
    spec.models = vec![FadingModel::REFERENCE_RAYLEIGH];
    spec.methods = vec![Method::AnalyticSampled, Method::MonteCarlo];
    spec.samples = 400;
    spec.trials = 5000;
    spec.master_seed = 21;
    let res = run_sweep(&spec, &SystemParams::default().with_k(2)).unwrap();
    assert_eq!(res.rows.len(), 4);
    for method in spec.methods {
        let s = res.series(&FadingModel::REFERENCE_RAYLEIGH, method);
        assert_eq!(s.len(), 2);
        assert!(capacity(s[0]) > capacity(s[1]), "{method}");
    }
}

#[test]
fn cooperation_helps_at_low_density() {
    let mut spec = SweepSpec::new(SweptParameter::KServing, vec![1.0, 2.0]);
    spec.models = vec![FadingModel::NoFading];
    spec.methods = vec![Method::AnalyticNested];
    let res = run_sweep(&spec, &SystemParams::default().with_lambda(1e-3)).unwrap();
    assert!(capacity(&res.rows[1]) > capacity(&res.rows[0]));
}

#[test]
fn los_probability_table() {
    let spec = LosSweepSpec {
        lambdas: vec![1e-3, 2.5e-3, 5e-3, 1e-2],
        ks: vec![1, 3],
        trials: 5000,
        master_seed: 6,
    };
    let table = run_los_probability_sweep(&spec, &SystemParams::default()).unwrap();
    for k in [1, 3] {
        let col: Vec<_> = spec.lambdas.iter().map(|&l| table.get(l, k).unwrap().probability).collect();
        for w in col.windows(2) {
            assert!(w[1].probability + w[1].ci_half_width >= w[0].probability - w[0].ci_half_width);
        }
    }
    for &l in &spec.lambdas {
        // Every serving link LOS for K = 3 implies it for K = 1; common
        // random numbers make this hold draw by draw.
        assert!(table.get(l, 3).unwrap().probability.successes <= table.get(l, 1).unwrap().probability.successes);
    }
}
