//! Browser bindings for the radiokey simulator. Each export takes plain
//! numbers, returns a JSON string and runs on a single thread.
//!
//! The computations live in ordinary functions so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only serialize.

use radiokey::adversary::{AutoBudget, Budget, Strategy};
use radiokey::decay::{
    sample_decay_time, sample_excited_count, CountDistribution, DecayParams, SourceParams,
};
use radiokey::protocol::TimelineParams;
use radiokey::runner::TrialSummary;
use radiokey::{run_bounds, run_simulation, RngSeed, RunConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Caps that keep a click responsive.
pub const MAX_POINTS: u32 = 2_000;
pub const MAX_DRAWS: u32 = 2_000_000;
pub const MAX_PAIRS: u32 = 200_000;

const MEAN_LIFE_DAYS: f64 = 10.0;

#[derive(Debug, Serialize)]
pub struct BoundsCurve {
    pub x: Vec<f64>,
    pub p_translucent: Vec<f64>,
    pub p_intercept_bound: Vec<f64>,
    pub p_fraction: Vec<f64>,
    pub combined_bound: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Histograms {
    pub draws: u32,
    /// `counts[k]` samples held `k` excited nuclei; the last bin is `>= k`.
    pub count_observed: Vec<u64>,
    pub count_expected: Vec<f64>,
    pub time_edges: Vec<f64>,
    pub time_observed: Vec<u64>,
    pub time_expected: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Exchange {
    pub trial: TrialSummary,
    pub combined_bound: f64,
    pub p_fraction: f64,
    pub analytic_raw_yield: f64,
}

fn config(mu: f64, x: f64, y: f64, pairs: u32) -> Result<RunConfig, String> {
    if !(1..=MAX_PAIRS).contains(&pairs) {
        return Err(format!("pairs must lie in 1..={MAX_PAIRS}"));
    }
    let decay = DecayParams::from_mean_life(MEAN_LIFE_DAYS).map_err(|e| e.to_string())?;
    let mut c = RunConfig {
        timeline: TimelineParams::from_ratios(x, y, decay).map_err(|e| e.to_string())?,
        ..RunConfig::default()
    };
    c.plate.pair_count = pairs as usize;
    c.plate.source = CountDistribution::poisson(mu).map_err(|e| e.to_string())?;
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

/// Bounds against the exposure ratio `x = (tau_P + tau_T) / tau_D` on
/// `[0, x_max]`.
pub fn bounds_curve(
    mu: f64,
    y: f64,
    pairs: u32,
    x_max: f64,
    points: u32,
) -> Result<BoundsCurve, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_POINTS}"));
    }
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(format!("x_max must be positive, got {x_max}"));
    }
    let mut curve = BoundsCurve {
        x: Vec::new(),
        p_translucent: Vec::new(),
        p_intercept_bound: Vec::new(),
        p_fraction: Vec::new(),
        combined_bound: Vec::new(),
    };
    for i in 0..points {
        let x = x_max * f64::from(i) / f64::from(points - 1);
        let b = run_bounds(&config(mu, x, y, pairs)?).map_err(|e| e.to_string())?;
        curve.x.push(x);
        curve.p_translucent.push(b.p_translucent);
        curve.p_intercept_bound.push(b.p_intercept_bound.min(1.0));
        curve.p_fraction.push(b.p_fraction);
        curve.combined_bound.push(b.combined_bound);
    }
    Ok(curve)
}

/// Draws `draws` sample counts at mean `mu` and `draws` decay times at the
/// demo lifetime, binned next to their exact expectations. Times are
/// binned on `[0, 5 tau_D]` with the overflow in the last bin.
pub fn histograms(mu: f64, draws: u32, bins: u32, seed: u32) -> Result<Histograms, String> {
    if !(1..=MAX_DRAWS).contains(&draws) {
        return Err(format!("draws must lie in 1..={MAX_DRAWS}"));
    }
    if !(1..=200).contains(&bins) {
        return Err("bins must lie in 1..=200".into());
    }
    let source = SourceParams::new(mu).map_err(|e| e.to_string())?;
    let decay = DecayParams::from_mean_life(MEAN_LIFE_DAYS).map_err(|e| e.to_string())?;
    let seed = RngSeed::new(u64::from(seed));
    let n = f64::from(draws);

    let top = (mu + 4.0 * mu.sqrt()).ceil().max(3.0) as usize;
    let mut count_observed = vec![0u64; top + 1];
    let mut rng = seed.stream("counts", 0);
    for _ in 0..draws {
        let k = sample_excited_count(&source, &mut rng) as usize;
        count_observed[k.min(top)] += 1;
    }
    let mut count_expected: Vec<f64> = (0..top).map(|k| n * source.pmf(k as u32)).collect();
    count_expected.push(n - count_expected.iter().sum::<f64>());

    let t_max = 5.0 * decay.mean_life();
    let width = t_max / f64::from(bins);
    let time_edges: Vec<f64> = (0..=bins).map(|i| width * f64::from(i)).collect();
    let mut time_observed = vec![0u64; bins as usize];
    let mut rng = seed.stream("times", 0);
    for _ in 0..draws {
        let t = sample_decay_time(&decay, &mut rng);
        let i = ((t / width) as usize).min(bins as usize - 1);
        time_observed[i] += 1;
    }
    let survival = |t: f64| (-t / decay.mean_life()).exp();
    let mut time_expected: Vec<f64> = time_edges
        .windows(2)
        .map(|w| n * (survival(w[0]) - survival(w[1])))
        .collect();
    *time_expected.last_mut().expect("bins >= 1") += n * survival(t_max);

    Ok(Histograms {
        draws,
        count_observed,
        count_expected,
        time_edges,
        time_observed,
        time_expected,
    })
}

/// One complete exchange. `strategy` is `none`, `translucent`, `opaque`
/// or `both`; opaque attacks use the automatic budget.
pub fn single_exchange(
    mu: f64,
    x: f64,
    y: f64,
    pairs: u32,
    strategy: &str,
    seed: u32,
) -> Result<Exchange, String> {
    let mut c = config(mu, x, y, pairs)?;
    c.seed = u64::from(seed);
    c.trials = 1;
    c.attack.strategy = match strategy {
        "none" => Strategy::None,
        "translucent" => Strategy::Translucent,
        "opaque" => Strategy::Opaque,
        "both" => Strategy::Both,
        other => return Err(format!("unknown strategy {other:?}")),
    };
    if c.attack.strategy.opaque() {
        c.attack.budget = Budget::Auto(AutoBudget::Auto);
    }
    let report = run_simulation(&c).map_err(|e| e.to_string())?;
    Ok(Exchange {
        trial: report.trials.into_iter().next().expect("one trial"),
        combined_bound: report.bounds.combined_bound,
        p_fraction: report.bounds.p_fraction,
        analytic_raw_yield: report.analytic_raw_yield,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = boundsCurve)]
pub fn bounds_curve_js(
    mu: f64,
    y: f64,
    pairs: u32,
    x_max: f64,
    points: u32,
) -> Result<String, JsError> {
    to_js(bounds_curve(mu, y, pairs, x_max, points))
}

#[wasm_bindgen(js_name = histograms)]
pub fn histograms_js(mu: f64, draws: u32, bins: u32, seed: u32) -> Result<String, JsError> {
    to_js(histograms(mu, draws, bins, seed))
}

#[wasm_bindgen(js_name = singleExchange)]
pub fn single_exchange_js(
    mu: f64,
    x: f64,
    y: f64,
    pairs: u32,
    strategy: &str,
    seed: u32,
) -> Result<String, JsError> {
    to_js(single_exchange(mu, x, y, pairs, strategy, seed))
}
