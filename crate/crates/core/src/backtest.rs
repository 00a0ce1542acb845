//! One-step-ahead forecasting backtest and report files.
//!
//! A run filters the whole series (so the training period warm-starts every
//! filter) and scores only the test period. Each record pairs the price
//! forecast from step `t-1` with the price observed at `t`, next to the
//! price fitted from the step-`t` estimate.
//!
//! Report files (all CSV, one header row, comma-delimited):
//!
//! | file                  | contents                                                        |
//! |-----------------------|-----------------------------------------------------------------|
//! | `table1_rmse.csv`     | strategy rows, `K<strike>_fit` / `K<strike>_forecast` columns    |
//! | `table2_frequency.csv`| label, strike, EKF, UKF, PF counts over the test period         |
//! | `decisions.csv`       | one [`DecisionRow`] per strategy, strike and test step          |
//! | `pcrlb_trace.csv`     | per-filter `J_t` and `J_t^{-1}` diagonals                       |
//! | `volatility.csv`      | annualized volatility estimate per strategy, strike and date    |
//!
//! Long-format files plot directly in gnuplot after filtering on the key
//! columns, e.g. `plot "< grep AAF volatility.csv" using 3:4`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::ContractSeries;
use crate::error::{Error, Result};
use crate::filters::FilterId;
use crate::ssm::{calibrate_variance_targeting, ExogenousInputs, ModelSpec, StateVector};
use crate::switching::{run_adaptive_estimation, EstimationRun, FrequencyTable, SwitchDecision, SwitchMode};

/// Rows of the RMSE table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Ekf,
    Ukf,
    Pf,
    Aaf,
    Abf,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::Ekf, Strategy::Ukf, Strategy::Pf, Strategy::Aaf, Strategy::Abf];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ekf => "EKF",
            Strategy::Ukf => "UKF",
            Strategy::Pf => "PF",
            Strategy::Aaf => "AAF",
            Strategy::Abf => "ABF",
        }
    }

    /// Filter set and switching mode. A single filter is a degenerate switch.
    pub fn bank(self) -> (Vec<FilterId>, SwitchMode) {
        match self {
            Strategy::Ekf => (vec![FilterId::Ekf], SwitchMode::Average),
            Strategy::Ukf => (vec![FilterId::Ukf], SwitchMode::Average),
            Strategy::Pf => (vec![FilterId::Pf], SwitchMode::Average),
            Strategy::Aaf => (FilterId::ALL.to_vec(), SwitchMode::Average),
            Strategy::Abf => (FilterId::ALL.to_vec(), SwitchMode::Best),
        }
    }

    pub fn is_switching(self) -> bool {
        matches!(self, Strategy::Aaf | Strategy::Abf)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}` (expected EKF, UKF, PF, AAF or ABF)")))
    }
}

/// Price at the next step from the switched estimate at this step: the state
/// mean goes through the noise-free transition with `u²` replaced by its
/// expectation `v`, the underlying moves along the GBM median path, and time
/// to expiry shrinks by one step. `t` labels the expiry error.
pub fn forecast_one_step(decision: &SwitchDecision, ex: &ExogenousInputs, model: &ModelSpec, t: usize) -> Result<f64> {
    let tau = ex.tau - model.dt;
    if tau < -1e-9 {
        return Err(Error::ContractExpired(t));
    }
    let x = StateVector::from(decision.estimate);
    let v = x.v.max(model.v_floor);
    let expected = ExogenousInputs { u: v.sqrt(), ..*ex };
    let next = model.transition(&x, &expected, &Vector2::zeros());
    let s = model.gbm_propagate(ex.s, x.r, v, model.dt, 0.0);
    let ex_next = ExogenousInputs { s, u: expected.u, tau: tau.max(0.0), strike: ex.strike };
    model.bs_price(&next, &ex_next)
}

/// `sqrt(mean(e²) / K)`.
pub fn rmse(observed: &[f64], forecast: &[f64], strike: f64) -> Result<f64> {
    if observed.len() != forecast.len() {
        return Err(Error::InvalidInput(format!(
            "rmse: {} observations but {} forecasts",
            observed.len(),
            forecast.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::InvalidInput("rmse: empty sequences".into()));
    }
    if !(strike > 0.0) {
        return Err(Error::InvalidInput(format!("rmse: strike must be positive, got {strike}")));
    }
    let sse: f64 = observed.iter().zip(forecast).map(|(o, f)| (o - f).powi(2)).sum();
    Ok((sse / observed.len() as f64 / strike).sqrt())
}

/// One test-period step of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRecord {
    pub t: usize,
    pub date: NaiveDate,
    pub decision: SwitchDecision,
    pub estimate: StateVector,
    pub fitted_price: f64,
    /// Forecast for this step made at `t-1`.
    pub forecast_price: f64,
    pub observed_price: f64,
    /// Trace of Φ per filter, `None` when absent or excluded.
    pub phi: [Option<f64>; 3],
    pub estimates: [Option<StateVector>; 3],
}

/// Dates bounding the training and test periods. The test period is
/// `(train_end, test_end]`; missing bounds are open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Split {
    pub train_end: Option<NaiveDate>,
    pub test_end: Option<NaiveDate>,
}

impl Split {
    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.train_end, self.test_end) {
            if b <= a {
                return Err(Error::InvalidInput(format!("test end {b} is not after train end {a}")));
            }
        }
        Ok(())
    }

    fn in_test(&self, d: NaiveDate) -> bool {
        self.train_end.map_or(true, |e| d > e) && self.test_end.map_or(true, |e| d <= e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub strike: f64,
    pub records: Vec<BacktestRecord>,
    pub run: EstimationRun,
    pub rmse_fit: f64,
    pub rmse_forecast: f64,
    /// The contract expired before the end of the test period.
    pub truncated: bool,
}

impl StrategyRun {
    /// Frequency of chosen filters over the test period.
    pub fn frequency(&self) -> FrequencyTable {
        let test_steps: Vec<_> = self.records.iter().map(|r| self.run.steps[r.t].clone()).collect();
        let sub = EstimationRun { mode: self.run.mode, steps: test_steps, fallbacks: 0 };
        sub.frequency(self.strategy.name(), ["Volatility", "Interest"])
    }
}

/// Log-returns over the training period, skipping the first point.
pub fn training_returns(series: &ContractSeries, split: &Split) -> Vec<f64> {
    series
        .points
        .iter()
        .skip(1)
        .filter(|p| split.train_end.map_or(true, |e| p.quote.quote_date <= e))
        .map(|p| p.ex.u)
        .collect()
}

/// Replaces the configured GARCH parameters with ones fitted on the
/// training returns when `garch.calibrate` is set.
pub fn calibrated_config(cfg: &Config, series: &ContractSeries, split: &Split) -> Result<Config> {
    let mut out = cfg.clone();
    if cfg.garch.calibrate {
        let returns = training_returns(series, split);
        let p = calibrate_variance_targeting(&returns, cfg.garch.demean)?;
        log::info!("calibrated GARCH on {} returns: omega={} alpha={} beta={}", returns.len(), p.omega, p.alpha, p.beta);
        out.garch.omega = p.omega;
        out.garch.alpha = p.alpha;
        out.garch.beta = p.beta;
    }
    Ok(out)
}

/// Filters the series with one strategy and scores the test period.
pub fn run_strategy(cfg: &Config, series: &ContractSeries, strategy: Strategy, split: &Split) -> Result<StrategyRun> {
    split.validate()?;
    let series = match split.test_end {
        Some(end) => series.truncated(end),
        None => series.clone(),
    };
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points before the test end", series.len())));
    }
    let model = cfg.model_spec(series.contract)?;
    let (filters, mode) = strategy.bank();
    let est = cfg.estimation_config(filters, mode);
    let obs = series.prices();
    let ex = series.exogenous();
    let run = run_adaptive_estimation(&obs, &ex, &model, &est)?;

    let mut records = Vec::new();
    let mut truncated = false;
    for t in 1..series.len() {
        let date = series.points[t].quote.quote_date;
        if !split.in_test(date) {
            continue;
        }
        let forecast_price = match forecast_one_step(&run.steps[t - 1].decision, &ex[t - 1], &model, t) {
            Ok(p) => p,
            Err(Error::ContractExpired(_)) => {
                log::warn!("{strategy} K={}: contract expired at step {t}, ending the test period", series.contract.strike);
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let step = &run.steps[t];
        let estimate = StateVector::from(step.decision.estimate);
        let mut phi = [None; 3];
        let mut estimates = [None; 3];
        for f in &step.filters {
            phi[f.filter as usize] = f.metric.map(|m| m.trace);
            estimates[f.filter as usize] = Some(StateVector::from(f.belief.mean));
        }
        records.push(BacktestRecord {
            t,
            date,
            decision: step.decision,
            estimate,
            fitted_price: model.bs_price(&estimate, &ex[t])?,
            forecast_price,
            observed_price: obs[t],
            phi,
            estimates,
        });
    }
    if records.is_empty() {
        return Err(Error::InsufficientData("no test-period steps".into()));
    }
    let observed: Vec<f64> = records.iter().map(|r| r.observed_price).collect();
    let fitted: Vec<f64> = records.iter().map(|r| r.fitted_price).collect();
    let forecast: Vec<f64> = records.iter().map(|r| r.forecast_price).collect();
    let strike = series.contract.strike;
    Ok(StrategyRun {
        strategy,
        strike,
        rmse_fit: rmse(&observed, &fitted, strike)?,
        rmse_forecast: rmse(&observed, &forecast, strike)?,
        records,
        run,
        truncated,
    })
}

/// Every strategy on every series, as independent concurrent jobs. Results
/// come back in series-major, strategy-minor order.
pub fn run_backtest(
    cfg: &Config,
    series: &[ContractSeries],
    strategies: &[Strategy],
    split: &Split,
) -> Result<Vec<StrategyRun>> {
    split.validate()?;
    if series.is_empty() || strategies.is_empty() {
        return Err(Error::InvalidInput("need at least one series and one strategy".into()));
    }
    let configs: Vec<Config> = series.iter().map(|s| calibrated_config(cfg, s, split)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, Strategy)> =
        (0..series.len()).flat_map(|i| strategies.iter().map(move |s| (i, *s))).collect();
    jobs.par_iter().map(|&(i, st)| run_strategy(&configs[i], &series[i], st, split)).collect()
}

/// One row of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub strategy: String,
    pub strike: f64,
    pub t: usize,
    pub date: NaiveDate,
    pub mode: String,
    pub chosen: String,
    pub phi_ekf: Option<f64>,
    pub phi_ukf: Option<f64>,
    pub phi_pf: Option<f64>,
    pub v: f64,
    pub r: f64,
    pub v_ekf: Option<f64>,
    pub v_ukf: Option<f64>,
    pub v_pf: Option<f64>,
    pub fitted: f64,
    pub forecast: f64,
    pub observed: f64,
}

impl DecisionRow {
    fn from_record(run: &StrategyRun, r: &BacktestRecord) -> Self {
        Self {
            strategy: run.strategy.name().into(),
            strike: run.strike,
            t: r.t,
            date: r.date,
            mode: r.decision.mode.to_string(),
            chosen: r.decision.chosen.label(),
            phi_ekf: r.phi[0],
            phi_ukf: r.phi[1],
            phi_pf: r.phi[2],
            v: r.estimate.v,
            r: r.estimate.r,
            v_ekf: r.estimates[0].map(|x| x.v),
            v_ukf: r.estimates[1].map(|x| x.v),
            v_pf: r.estimates[2].map(|x| x.v),
            fitted: r.fitted_price,
            forecast: r.forecast_price,
            observed: r.observed_price,
        }
    }
}

pub fn read_decision_log(path: &Path) -> Result<Vec<DecisionRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize()
        .map(|row| row.map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() }))
        .collect()
}

#[derive(Debug, Serialize)]
struct TraceRow {
    strategy: &'static str,
    strike: f64,
    t: usize,
    date: NaiveDate,
    filter: &'static str,
    j11: f64,
    j12: f64,
    j22: f64,
    jinv11: f64,
    jinv22: f64,
}

/// Table-1, Table-2 and trace files written by [`write_reports`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    /// `(strategy, strike, rmse_fit, rmse_forecast)`.
    pub rmse_table: Vec<(Strategy, f64, f64, f64)>,
    /// `(label, strike, counts in EKF, UKF, PF order)`.
    pub frequency_table: Vec<(String, f64, [usize; 3])>,
    /// `(strategy, strike, date, annualized volatility)`.
    pub volatility_series: Vec<(Strategy, f64, NaiveDate, f64)>,
    pub rmse_path: PathBuf,
    pub frequency_path: PathBuf,
    pub decision_log: PathBuf,
    pub pcrlb_trace: PathBuf,
    pub volatility_path: PathBuf,
}

impl ReportBundle {
    pub fn paths(&self) -> [&Path; 5] {
        [&self.rmse_path, &self.frequency_path, &self.decision_log, &self.pcrlb_trace, &self.volatility_path]
    }
}

/// Annualized volatility `sqrt(v * A)`.
pub fn annualized_vol(v: f64, annualization: f64) -> f64 {
    (v.max(0.0) * annualization).sqrt()
}

fn strike_key(k: f64) -> String {
    format!("K{k}")
}

pub fn write_reports(out_dir: &Path, runs: &[StrategyRun], annualization: f64) -> Result<ReportBundle> {
    fs::create_dir_all(out_dir)?;
    let rmse_table: Vec<_> = runs.iter().map(|r| (r.strategy, r.strike, r.rmse_fit, r.rmse_forecast)).collect();

    let mut strikes: Vec<f64> = runs.iter().map(|r| r.strike).collect();
    strikes.sort_by(f64::total_cmp);
    strikes.dedup();
    let mut strategies: Vec<Strategy> = runs.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();

    let rmse_path = out_dir.join("table1_rmse.csv");
    let mut w = csv::Writer::from_path(&rmse_path)?;
    let mut header = vec!["strategy".to_string()];
    for k in &strikes {
        header.push(format!("{}_fit", strike_key(*k)));
        header.push(format!("{}_forecast", strike_key(*k)));
    }
    w.write_record(&header)?;
    let lookup: BTreeMap<(Strategy, String), (f64, f64)> =
        rmse_table.iter().map(|(s, k, a, b)| ((*s, strike_key(*k)), (*a, *b))).collect();
    for st in &strategies {
        let mut row = vec![st.name().to_string()];
        for k in &strikes {
            match lookup.get(&(*st, strike_key(*k))) {
                Some((fit, fc)) => {
                    row.push(fit.to_string());
                    row.push(fc.to_string());
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let frequency_path = out_dir.join("table2_frequency.csv");
    let mut frequency_table = Vec::new();
    let mut w = csv::Writer::from_path(&frequency_path)?;
    w.write_record(["label", "strike", "EKF", "UKF", "PF"])?;
    for run in runs.iter().filter(|r| r.strategy.is_switching()) {
        for (label, counts) in run.frequency().rows {
            w.write_record([
                label.clone(),
                run.strike.to_string(),
                counts[0].to_string(),
                counts[1].to_string(),
                counts[2].to_string(),
            ])?;
            frequency_table.push((label, run.strike, counts));
        }
    }
    w.flush()?;

    let decision_log = out_dir.join("decisions.csv");
    let mut w = csv::Writer::from_path(&decision_log)?;
    for run in runs {
        for r in &run.records {
            w.serialize(DecisionRow::from_record(run, r))?;
        }
    }
    w.flush()?;

    let pcrlb_trace = out_dir.join("pcrlb_trace.csv");
    let mut w = csv::Writer::from_path(&pcrlb_trace)?;
    for run in runs {
        for r in &run.records {
            for f in &run.run.steps[r.t].filters {
                let (j, ji) = (f.fisher.j, f.fisher.j_inv);
                w.serialize(TraceRow {
                    strategy: run.strategy.name(),
                    strike: run.strike,
                    t: r.t,
                    date: r.date,
                    filter: f.filter.name(),
                    j11: j[(0, 0)],
                    j12: j[(0, 1)],
                    j22: j[(1, 1)],
                    jinv11: ji[(0, 0)],
                    jinv22: ji[(1, 1)],
                })?;
            }
        }
    }
    w.flush()?;

    let volatility_path = out_dir.join("volatility.csv");
    let mut volatility_series = Vec::new();
    let mut w = csv::Writer::from_path(&volatility_path)?;
    w.write_record(["strategy", "strike", "date", "volatility"])?;
    for run in runs {
        for r in &run.records {
            let vol = annualized_vol(r.estimate.v, annualization);
            w.write_record([run.strategy.name().to_string(), run.strike.to_string(), r.date.to_string(), vol.to_string()])?;
            volatility_series.push((run.strategy, run.strike, r.date, vol));
        }
    }
    w.flush()?;

    Ok(ReportBundle {
        rmse_table,
        frequency_table,
        volatility_series,
        rmse_path,
        frequency_path,
        decision_log,
        pcrlb_trace,
        volatility_path,
    })
}

/// Estimated volatility joined by date against external series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VolReport {
    pub series: Vec<(NaiveDate, f64)>,
    /// `(external name, date, estimate, external value)`.
    pub joined: Vec<(String, NaiveDate, f64, f64)>,
    /// `(external name, date, which side lacks the date)`.
    pub unmatched: Vec<(String, NaiveDate, &'static str)>,
}

/// Annualizes per-step variance estimates and joins them by date against
/// each named comparison series.
pub fn vol_report(
    estimates: &[(NaiveDate, f64)],
    comparisons: &[(String, Vec<(NaiveDate, f64)>)],
    annualization: f64,
) -> Result<VolReport> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("vol_report: no records".into()));
    }
    let series: Vec<(NaiveDate, f64)> = estimates.iter().map(|(d, v)| (*d, annualized_vol(*v, annualization))).collect();
    let ours: BTreeMap<NaiveDate, f64> = series.iter().copied().collect();
    let mut report = VolReport { series, ..Default::default() };
    for (name, ext) in comparisons {
        let theirs: BTreeMap<NaiveDate, f64> = ext.iter().copied().collect();
        let before = report.joined.len();
        for (d, vol) in &ours {
            match theirs.get(d) {
                Some(x) => report.joined.push((name.clone(), *d, *vol, *x)),
                None => report.unmatched.push((name.clone(), *d, "external")),
            }
        }
        for d in theirs.keys().filter(|d| !ours.contains_key(d)) {
            report.unmatched.push((name.clone(), *d, "estimate"));
        }
        if report.joined.len() == before {
            log::warn!("comparison series `{name}` shares no dates with the estimates");
        }
    }
    Ok(report)
}

/// Writes `vol_series.csv`, `vol_comparison.csv` and `vol_unmatched.csv`.
pub fn write_vol_report(out_dir: &Path, report: &VolReport) -> Result<[PathBuf; 3]> {
    fs::create_dir_all(out_dir)?;
    let paths = [out_dir.join("vol_series.csv"), out_dir.join("vol_comparison.csv"), out_dir.join("vol_unmatched.csv")];
    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record(["date", "volatility"])?;
    for (d, v) in &report.series {
        w.write_record([d.to_string(), v.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["series", "date", "estimate", "external"])?;
    for (n, d, a, b) in &report.joined {
        w.write_record([n.clone(), d.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["series", "date", "missing_from"])?;
    for (n, d, side) in &report.unmatched {
        w.write_record([n.clone(), d.to_string(), side.to_string()])?;
    }
    w.flush()?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::{ContractSpec, GarchParams, NoiseSpec, OptionSide};
    use crate::switching::Chosen;
    use nalgebra::Matrix2;

    fn model(expiry_step: usize) -> ModelSpec {
        ModelSpec::new(
            GarchParams::new(2e-6, 0.08, 0.9).unwrap(),
            ContractSpec::new(2500.0, expiry_step, OptionSide::Call).unwrap(),
            NoiseSpec::simulation(Matrix2::zeros(), 1.0),
            1.0 / 252.0,
        )
        .unwrap()
    }

    fn decision(v: f64, r: f64) -> SwitchDecision {
        SwitchDecision {
            mode: SwitchMode::Average,
            chosen: Chosen::Average(FilterId::Ekf),
            estimate: Vector2::new(v, r),
            cov: Matrix2::identity(),
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0], 7.0).unwrap(), 0.0);
        let e = 0.3;
        let k = 2500.0;
        let got = rmse(&[1.0, 2.0, 3.0], &[1.0 + e, 2.0 + e, 3.0 + e], k).unwrap();
        assert!((got - e / k.sqrt()).abs() < 1e-12);
        let got = rmse(&[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0], 100.0).unwrap();
        assert!((got - 0.03f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn forecast_at_fixed_point_decrements_tau() {
        let m = model(100);
        let v = m.garch.long_run_variance();
        // Zero median drift keeps the underlying static.
        let r = v * m.annualization() / 2.0;
        let ex = ExogenousInputs::new(2600.0, 0.0, 0.5).unwrap();
        let got = forecast_one_step(&decision(v, r), &ex, &m, 1).unwrap();
        let ex_next = ExogenousInputs::new(2600.0, 0.0, 0.5 - m.dt).unwrap();
        let want = m.bs_price(&StateVector::new(v, r), &ex_next).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn forecast_into_expiry_is_intrinsic() {
        let m = model(1);
        let ex = ExogenousInputs::new(2600.0, 0.0, m.dt).unwrap();
        let got = forecast_one_step(&decision(1e-4, 0.0), &ex, &m, 1).unwrap();
        let s = m.gbm_propagate(2600.0, 0.0, 1e-4, m.dt, 0.0);
        assert!((got - (s - 2500.0)).abs() < 1e-9);
        let ex = ExogenousInputs::new(2600.0, 0.0, 0.0).unwrap();
        assert!(matches!(forecast_one_step(&decision(1e-4, 0.0), &ex, &m, 3), Err(Error::ContractExpired(3))));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("XYZ".parse::<Strategy>().is_err());
    }

    #[test]
    fn vol_report_examples() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let est = vec![(d("2019-01-02"), 0.04 / 252.0), (d("2019-01-03"), 0.04 / 252.0)];
        let alone = vol_report(&est, &[], 252.0).unwrap();
        assert!(alone.joined.is_empty() && alone.unmatched.is_empty());
        assert!((alone.series[0].1 - 0.2).abs() < 1e-12);

        let disjoint = vec![("VIX".to_string(), vec![(d("2018-01-02"), 0.15)])];
        let rep = vol_report(&est, &disjoint, 252.0).unwrap();
        assert!(rep.joined.is_empty());
        assert_eq!(rep.unmatched.len(), 3);

        let overlap = vec![("VIX".to_string(), vec![(d("2019-01-03"), 0.15)])];
        let rep = vol_report(&est, &overlap, 252.0).unwrap();
        assert_eq!(rep.joined.len(), 1);
        assert_eq!(rep.unmatched, vec![("VIX".to_string(), d("2019-01-02"), "external")]);
    }
}
