//! Bound tables, sweeps and report plumbing.

use radiokey::config::RunConfig;
use radiokey::decay::DecayParams;
use radiokey::protocol::TimelineParams;
use radiokey::runner::{linear_grid, run_bounds, run_simulation, run_sweep, SweepParameter};

const GOLDEN_CSV: &str = include_str!("golden/mu_sweep.csv");

/// The worked example: defaults on a plate of 2400 pairs.
fn example() -> RunConfig {
    let mut c = RunConfig::default();
    c.plate.pair_count = 2400;
    c
}

fn with_ratios(x: f64, y: f64) -> RunConfig {
    let mut c = example();
    c.timeline =
        TimelineParams::from_ratios(x, y, DecayParams::from_mean_life(10.0).unwrap()).unwrap();
    c
}

#[test]
fn bounds_vanish_with_exposure() {
    let b = run_bounds(&with_ratios(0.0, 2.0)).unwrap();
    assert_eq!(b.p_translucent, 0.0);
    assert_eq!(b.p_intercept_bound, 0.0);
    assert_eq!(b.p_fraction, 0.0);
    assert_eq!(b.combined_bound, 0.0);

    let mut last = f64::INFINITY;
    for k in 1..=12 {
        let x = 0.5f64.powi(k);
        let b = run_bounds(&with_ratios(x, 2.0)).unwrap();
        assert!(b.combined_bound < last, "x = {x}");
        last = b.combined_bound;
    }
    // direct evaluation at x = 2^-12; the intercept term falls as sqrt(x)
    assert!((last - 0.005_320_721_883_309_35).abs() < 1e-14, "{last}");
}

#[test]
fn exposure_sweep_columns_are_monotone() {
    let c = example();
    let grid = linear_grid(0.0, 6.0, 61).unwrap();
    let t = run_sweep(&c, SweepParameter::TauT, &grid, false).unwrap();
    for col in [
        t.column(|r| r.p_intercept_bound),
        t.column(|r| r.p_intercept_approx),
        t.column(|r| r.p_fraction),
        t.column(|r| r.combined_bound),
    ] {
        assert!(col.windows(2).all(|w| w[1] >= w[0]), "{col:?}");
    }
    // x ranges over [0.05, 0.65], below the translucent maximum at ln 2
    let tr = t.column(|r| r.p_translucent);
    assert!(tr.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn fraction_falls_with_lifetime() {
    let mut c = RunConfig::default();
    c.timeline.production = 0.5;
    c.timeline.transport = 1.5;
    let grid = linear_grid(1.0, 100.0, 100).unwrap();
    let t = run_sweep(&c, SweepParameter::TauD, &grid, false).unwrap();
    let p = t.column(|r| r.p_fraction);
    assert!(p.windows(2).all(|w| w[1] < w[0]));
    assert!((p[0] - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    assert!((p[99] - (1.0 - (-0.02f64).exp())).abs() < 1e-15);
}

/// The maximum was located independently on a 0.001 grid at 30 digits:
/// mu = 1.529 with key rate 0.364835.
#[test]
fn key_rate_peaks_at_interior_mu() {
    let c = example();
    let grid: Vec<f64> = (1..=500).map(|i| i as f64 / 100.0).collect();
    let t = run_sweep(&c, SweepParameter::Mu, &grid, false).unwrap();
    let rate = t.column(|r| r.key_rate);
    let (i, best) = rate
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(i > 0 && i < grid.len() - 1);
    assert!((grid[i] - 1.53).abs() <= 0.011, "peak at {}", grid[i]);
    assert!((best - 0.364_835).abs() < 1e-5, "{best}");
    assert!(rate[0] < 0.01 && rate[499] < 0.1);
}

#[test]
fn standard_errors_shrink_as_root_trials() {
    let mut c = RunConfig::default();
    c.plate.pair_count = 1000;
    c.postprocess = None;
    c.seed = 7;
    let se: Vec<f64> = [100, 400, 1600]
        .into_iter()
        .map(|trials| {
            c.trials = trials;
            run_simulation(&c)
                .unwrap()
                .aggregate
                .raw_key_length
                .std_error
        })
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "{se:?}");
    }
}

#[test]
fn csv_matches_golden_file() {
    let c = example();
    let t = run_sweep(&c, SweepParameter::Mu, &[0.05, 0.1, 0.2], false).unwrap();
    assert_eq!(t.to_csv(), GOLDEN_CSV);
    assert_eq!(
        GOLDEN_CSV.lines().next().unwrap(),
        "parameter,value,p_translucent,p_intercept_bound,p_intercept_approx,p_fraction,\
         combined_bound,empirical_pre_arrival_fraction,empirical_raw_key_length,\
         empirical_error_rate,empirical_eve_knowledge,empirical_detection_pass_rate,key_rate"
    );
}

#[test]
fn simulated_sweep_fills_empirical_columns() {
    let c = RunConfig {
        trials: 4,
        postprocess: None,
        ..RunConfig::default()
    };
    let t = run_sweep(&c, SweepParameter::N, &[500.0, 1000.0], true).unwrap();
    for r in &t.rows {
        assert!(r.empirical_raw_key_length.is_some());
        assert!(r.empirical_pre_arrival_fraction.is_some());
    }
    let csv = t.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("N,500.0,"));
}

#[test]
fn config_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("radiokey-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    let mut c = with_ratios(0.3, 1.5);
    c.seed = 99;
    c.trials = 17;
    c.plate.background_rate = 0.001;
    std::fs::write(&path, c.to_json()).unwrap();
    let back = RunConfig::load(&path).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_json(), c.to_json());
    std::fs::remove_dir_all(&dir).unwrap();
}
