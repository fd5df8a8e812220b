use std::sync::Arc;

use zsint::bv::{AcFormula, BVFunction};
use zsint::experiments::{rate_experiment, RateConfig};
use zsint::paths::{make_uniform_grid, read_csv, sample_path, write_csv, InterpRule, ProcessKind, ProcessSpec, SampledPath};
use zsint::report::to_json_string;
use zsint::zs::{zs_composite, zs_integral};

fn grid(cells: usize) -> Arc<zsint::paths::Grid> {
    Arc::new(make_uniform_grid(1.0, cells + 1).unwrap())
}

#[test]
fn zs_matches_classical_stieltjes_for_c1_paths() {
    // ∫_0^1 t^2 d sin(2πt) = -∫ 2t sin(2πt) dt = 1/π
    let g = grid(2048);
    let x = SampledPath::from_fn(g.clone(), |t| t * t);
    let y = SampledPath::from_fn(g, |t| (std::f64::consts::TAU * t).sin());
    for theta in [0.3, 0.5, 0.7] {
        let v = zs_integral(&x, &y, theta).unwrap().value;
        let want = 1.0 / std::f64::consts::PI;
        assert!(((v - want) / want).abs() < 1e-3, "theta {theta}: {v}");
    }
}

#[test]
fn indicator_of_deterministic_line() {
    let g = grid(4096);
    let x = SampledPath::from_fn(g, |t| t);
    let v = zs_composite(&BVFunction::indicator(0.5), &x, &x, 0.3).unwrap().value;
    assert!((v - 0.5).abs() < 1e-2, "{v}");
}

#[test]
fn sampled_path_survives_csv() {
    let spec = ProcessSpec {
        kind: ProcessKind::Fbm { hurst: 0.6 },
        seed: 99,
    };
    let x = sample_path(&spec, &grid(1000)).unwrap();
    let mut buf = Vec::new();
    write_csv(&x, &mut buf).unwrap();
    let back = read_csv(&buf[..], InterpRule::PiecewiseLinear).unwrap();
    assert_eq!(back.values(), x.values());
    assert_eq!(back.times(), x.times());
}

fn small_rate(f: BVFunction, replicates: usize) -> RateConfig {
    RateConfig::fbm(0.75, 0.75, f, [4, 9], replicates)
}

#[test]
fn smooth_integrand_converges_faster_than_the_jump_prediction() {
    let smooth = rate_experiment(&small_rate(BVFunction::smooth(AcFormula::Sine, 1.0), 12), 3).unwrap();
    let jump = small_rate(BVFunction::indicator(0.5), 12);
    let predicted = rate_experiment(&jump, 3).unwrap().summary_value("predicted_exponent_holder").unwrap();
    let slope = smooth.fitted_rate.unwrap();
    assert!(slope > predicted, "smooth slope {slope} vs jump prediction {predicted}");
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfg = small_rate(BVFunction::indicator(0.2), 8);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| to_json_string(&rate_experiment(&cfg, 17).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}
