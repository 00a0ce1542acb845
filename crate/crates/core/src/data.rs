//! Option-chain ingestion, contract-series construction, and synthetic
//! ground-truth generation.
//!
//! Chain files are comma-delimited UTF-8 with a header. Logical columns
//! (renamable through [`ColumnMap`]): `quote_date`, `expiry_date`, `strike`,
//! `side` (`C`/`P`), `bid`, `ask`, `last`, `volume`, `underlying_close`,
//! `implied_vol`. Dates are ISO-8601. `bid`/`ask`/`last` are individually
//! optional but a row needs either both quotes or a last trade;
//! `implied_vol` is optional.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{ColumnMap, PriceField};
use crate::error::{Error, Result};
use crate::linalg::psd_factor;
use crate::rng::{stream, Purpose};
use crate::ssm::{ContractSpec, ExogenousInputs, ModelSpec, OptionSide, StateVector};

/// Trading days per year for both `dt` and time to expiry.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub quote_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub strike: f64,
    pub side: OptionSide,
    pub price: f64,
    pub volume: u64,
    pub underlying_close: f64,
    pub implied_vol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainLoad {
    pub quotes: Vec<OptionQuote>,
    pub rejects: Vec<Reject>,
}

fn is_trading_day(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Weekdays in `(from, to]`; zero when `to <= from`.
pub fn trading_days_between(from: NaiveDate, to: NaiveDate) -> usize {
    if to <= from {
        return 0;
    }
    from.iter_days().skip(1).take_while(|d| *d <= to).filter(|d| is_trading_day(*d)).count()
}

/// The `n`-th trading day after `from`.
pub fn add_trading_days(from: NaiveDate, n: usize) -> NaiveDate {
    from.iter_days().skip(1).filter(|d| is_trading_day(*d)).nth(n.saturating_sub(1)).map_or(from, |d| d)
}

fn parse_side(s: &str) -> Option<OptionSide> {
    match s.trim().to_ascii_uppercase().as_str() {
        "C" | "CALL" => Some(OptionSide::Call),
        "P" | "PUT" => Some(OptionSide::Put),
        _ => None,
    }
}

struct Columns {
    quote_date: usize,
    expiry_date: usize,
    strike: usize,
    side: usize,
    volume: usize,
    underlying_close: usize,
    bid: Option<usize>,
    ask: Option<usize>,
    last: Option<usize>,
    implied_vol: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, map: &ColumnMap) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let need = |name: &str| find(name).ok_or_else(|| Error::Schema(name.to_string()));
        let cols = Columns {
            quote_date: need(&map.quote_date)?,
            expiry_date: need(&map.expiry_date)?,
            strike: need(&map.strike)?,
            side: need(&map.side)?,
            volume: need(&map.volume)?,
            underlying_close: need(&map.underlying_close)?,
            bid: find(&map.bid),
            ask: find(&map.ask),
            last: find(&map.last),
            implied_vol: find(&map.implied_vol),
        };
        if cols.last.is_none() && (cols.bid.is_none() || cols.ask.is_none()) {
            return Err(Error::Schema(format!("{} (or both {} and {})", map.last, map.bid, map.ask)));
        }
        Ok(cols)
    }
}

fn parse_row(rec: &csv::StringRecord, cols: &Columns, price_field: PriceField) -> std::result::Result<OptionQuote, String> {
    let field = |i: usize, name: &str| rec.get(i).map(str::trim).ok_or_else(|| format!("missing field {name}"));
    let opt_field = |i: Option<usize>| i.and_then(|i| rec.get(i)).map(str::trim).filter(|s| !s.is_empty());
    let num = |s: &str, name: &str| s.parse::<f64>().map_err(|_| format!("unparseable {name} `{s}`"));
    let date = |s: &str, name: &str| {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("unparseable {name} `{s}`"))
    };

    let quote_date = date(field(cols.quote_date, "quote_date")?, "quote_date")?;
    let expiry_date = date(field(cols.expiry_date, "expiry_date")?, "expiry_date")?;
    let strike = num(field(cols.strike, "strike")?, "strike")?;
    let side_raw = field(cols.side, "side")?;
    let side = parse_side(side_raw).ok_or_else(|| format!("unknown side `{side_raw}`"))?;
    let vol_raw = field(cols.volume, "volume")?;
    let volume_f = num(vol_raw, "volume")?;
    let underlying_close = num(field(cols.underlying_close, "underlying_close")?, "underlying_close")?;

    let bid = opt_field(cols.bid).map(|s| num(s, "bid")).transpose()?;
    let ask = opt_field(cols.ask).map(|s| num(s, "ask")).transpose()?;
    let last = opt_field(cols.last).map(|s| num(s, "last")).transpose()?;
    let price = match (price_field, bid, ask, last) {
        (PriceField::Mid, Some(b), Some(a), _) => 0.5 * (b + a),
        (_, _, _, Some(l)) => l,
        _ => return Err("no usable price".into()),
    };
    let implied_vol = opt_field(cols.implied_vol).map(|s| num(s, "implied_vol")).transpose()?;

    if !price.is_finite() {
        return Err("non-finite price".into());
    }
    if price < 0.0 {
        return Err("price < 0".into());
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err("strike <= 0".into());
    }
    if !(underlying_close > 0.0 && underlying_close.is_finite()) {
        return Err("underlying_close <= 0".into());
    }
    if expiry_date < quote_date {
        return Err("expiry_date before quote_date".into());
    }
    if !(volume_f >= 0.0 && volume_f.fract() == 0.0) {
        return Err(format!("volume `{vol_raw}` is not a non-negative integer"));
    }
    Ok(OptionQuote {
        quote_date,
        expiry_date,
        strike,
        side,
        price,
        volume: volume_f as u64,
        underlying_close,
        implied_vol,
    })
}

/// Parses a chain from any reader. `source` names the input in errors.
pub fn read_chain<R: Read>(reader: R, columns: &ColumnMap, price_field: PriceField, source: &Path) -> Result<ChainLoad> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let format_err = |e: csv::Error| Error::Format { path: source.to_path_buf(), reason: e.to_string() };
    let headers = rdr.headers().map_err(format_err)?.clone();
    let cols = Columns::resolve(&headers, columns)?;
    let mut out = ChainLoad::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(format_err)?;
        match parse_row(&rec, &cols, price_field) {
            Ok(q) => out.quotes.push(q),
            Err(reason) => out.rejects.push(Reject { line, reason }),
        }
    }
    Ok(out)
}

/// Loads a chain file. Every data row lands in either `quotes` or `rejects`.
pub fn load_chain(path: &Path, columns: &ColumnMap, price_field: PriceField) -> Result<ChainLoad> {
    let file = std::fs::File::open(path)?;
    read_chain(file, columns, price_field, path)
}

/// Writes quotes in the default chain schema; `price` goes to `last`.
pub fn write_chain<W: Write>(writer: W, quotes: &[OptionQuote]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "quote_date", "expiry_date", "strike", "side", "bid", "ask", "last", "volume", "underlying_close", "implied_vol",
    ])?;
    for q in quotes {
        w.write_record([
            q.quote_date.to_string(),
            q.expiry_date.to_string(),
            q.strike.to_string(),
            q.side.code().to_string(),
            String::new(),
            String::new(),
            q.price.to_string(),
            q.volume.to_string(),
            q.underlying_close.to_string(),
            q.implied_vol.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// How to pick one quote when a contract trades more than once per date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LiquidityRule {
    #[default]
    MaxVolume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub quote: OptionQuote,
    pub ex: ExogenousInputs,
}

/// Time-ordered observations of one contract with the inputs each step needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSeries {
    pub contract: ContractSpec,
    pub points: Vec<SeriesPoint>,
}

impl ContractSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.quote.quote_date).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quote.price).collect()
    }

    pub fn exogenous(&self) -> Vec<ExogenousInputs> {
        self.points.iter().map(|p| p.ex).collect()
    }

    /// Keeps points with `quote_date <= end`.
    pub fn truncated(&self, end: NaiveDate) -> Self {
        Self {
            contract: self.contract,
            points: self.points.iter().filter(|p| p.quote.quote_date <= end).cloned().collect(),
        }
    }
}

/// Latest underlying close strictly before `date` across every quote.
fn prior_close(all: &[OptionQuote], date: NaiveDate) -> Option<f64> {
    all.iter()
        .filter(|q| q.quote_date < date)
        .max_by_key(|q| q.quote_date)
        .map(|q| q.underlying_close)
}

fn assemble(picks: Vec<OptionQuote>, all: &[OptionQuote], contract: ContractSpec, per_step_strike: bool) -> Result<ContractSeries> {
    if picks.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "series for strike {} has {} dates, need at least 2",
            contract.strike,
            picks.len()
        )));
    }
    let mut points = Vec::with_capacity(picks.len());
    let mut prev_close = prior_close(all, picks[0].quote_date);
    for q in picks {
        if !is_trading_day(q.quote_date) {
            return Err(Error::InvalidInput(format!("quote on non-trading day {}", q.quote_date)));
        }
        let u = prev_close.map_or(0.0, |p| (q.underlying_close / p).ln());
        let tau = trading_days_between(q.quote_date, q.expiry_date) as f64 / TRADING_DAYS_PER_YEAR;
        let mut ex = ExogenousInputs::new(q.underlying_close, u, tau)?;
        if per_step_strike {
            ex = ex.with_strike(q.strike);
        }
        prev_close = Some(q.underlying_close);
        points.push(SeriesPoint { quote: q, ex });
    }
    Ok(ContractSeries { contract, points })
}

/// Series for one contract: one quote per date chosen by `rule`, with
/// log-returns and trading-day time to expiry. The first return uses the
/// latest earlier close in `quotes` when one exists, else 0.
pub fn build_series(
    quotes: &[OptionQuote],
    strike: f64,
    expiry: NaiveDate,
    side: OptionSide,
    rule: LiquidityRule,
) -> Result<ContractSeries> {
    if quotes.is_empty() {
        return Err(Error::InsufficientData("no quotes".into()));
    }
    let mut by_date: BTreeMap<NaiveDate, OptionQuote> = BTreeMap::new();
    for q in quotes
        .iter()
        .filter(|q| (q.strike - strike).abs() < 1e-9 && q.expiry_date == expiry && q.side == side)
    {
        match rule {
            LiquidityRule::MaxVolume => {
                let keep = by_date.get(&q.quote_date).map_or(true, |cur| q.volume > cur.volume);
                if keep {
                    by_date.insert(q.quote_date, q.clone());
                }
            }
        }
    }
    let first = by_date.keys().next().copied();
    let expiry_step = first.map_or(0, |d| trading_days_between(d, expiry));
    let contract = ContractSpec::new(strike, expiry_step, side)?;
    assemble(by_date.into_values().collect(), quotes, contract, false)
}

/// Per date, the call with the largest volume across all strikes and expiries
/// (ties: lower strike, then earlier expiry). The strike of each pick travels
/// in its exogenous inputs.
pub fn max_volume_series(quotes: &[OptionQuote]) -> Result<ContractSeries> {
    if quotes.is_empty() {
        return Err(Error::InsufficientData("no quotes".into()));
    }
    let mut by_date: BTreeMap<NaiveDate, OptionQuote> = BTreeMap::new();
    for q in quotes.iter().filter(|q| q.side == OptionSide::Call) {
        let better = match by_date.get(&q.quote_date) {
            None => true,
            Some(cur) => {
                (q.volume, std::cmp::Reverse(ordered(q.strike)), std::cmp::Reverse(q.expiry_date))
                    > (cur.volume, std::cmp::Reverse(ordered(cur.strike)), std::cmp::Reverse(cur.expiry_date))
            }
        };
        if better {
            by_date.insert(q.quote_date, q.clone());
        }
    }
    let first = by_date.values().next().cloned().ok_or_else(|| Error::InsufficientData("no call quotes".into()))?;
    let contract = ContractSpec::new(
        first.strike,
        trading_days_between(first.quote_date, first.expiry_date),
        OptionSide::Call,
    )?;
    assemble(by_date.into_values().collect(), quotes, contract, true)
}

/// Total order on finite strikes for tie-breaking.
fn ordered(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    quote_date: NaiveDate,
    expiry_date: NaiveDate,
    strike: f64,
    side: String,
    price: f64,
    volume: u64,
    underlying_close: f64,
    implied_vol: Option<f64>,
    s: f64,
    u: f64,
    tau: f64,
    step_strike: Option<f64>,
    expiry_step: usize,
}

/// Writes a series with its exogenous inputs so it reloads exactly.
pub fn write_series<W: Write>(writer: W, series: &ContractSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in &series.points {
        w.serialize(SeriesRow {
            quote_date: p.quote.quote_date,
            expiry_date: p.quote.expiry_date,
            strike: p.quote.strike,
            side: p.quote.side.code().into(),
            price: p.quote.price,
            volume: p.quote.volume,
            underlying_close: p.quote.underlying_close,
            implied_vol: p.quote.implied_vol,
            s: p.ex.s,
            u: p.ex.u,
            tau: p.ex.tau,
            step_strike: p.ex.strike,
            expiry_step: series.contract.expiry_step,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series<R: Read>(reader: R, source: &Path) -> Result<ContractSeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut points = Vec::new();
    let mut contract = None;
    for row in rdr.deserialize::<SeriesRow>() {
        let row = row.map_err(|e| Error::Format { path: source.to_path_buf(), reason: e.to_string() })?;
        let side = parse_side(&row.side).ok_or_else(|| Error::Format {
            path: source.to_path_buf(),
            reason: format!("unknown side `{}`", row.side),
        })?;
        if contract.is_none() {
            contract = Some(ContractSpec::new(row.strike, row.expiry_step, side)?);
        }
        let ex = ExogenousInputs { s: row.s, u: row.u, tau: row.tau, strike: row.step_strike };
        let quote = OptionQuote {
            quote_date: row.quote_date,
            expiry_date: row.expiry_date,
            strike: row.strike,
            side,
            price: row.price,
            volume: row.volume,
            underlying_close: row.underlying_close,
            implied_vol: row.implied_vol,
        };
        points.push(SeriesPoint { quote, ex });
    }
    let contract = contract.ok_or_else(|| Error::InsufficientData(format!("{} is empty", source.display())))?;
    Ok(ContractSeries { contract, points })
}

/// Two-column `date,value` series (VIX, historical or implied volatility, closes).
pub fn load_dated_series(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let file = std::fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let bad = |reason: String| Error::Format { path: path.to_path_buf(), reason: format!("line {}: {reason}", i + 2) };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| bad(format!("bad date `{}`", &rec[0])))?;
        let value: f64 = rec[1].parse().map_err(|_| bad(format!("bad value `{}`", &rec[1])))?;
        out.push((date, value));
    }
    Ok(out)
}

/// Ground truth for validation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    pub states: Vec<StateVector>,
    pub observations: Vec<f64>,
    pub exogenous: Vec<ExogenousInputs>,
    pub seed: u64,
}

/// Simulates `steps` steps: the underlying follows GBM with the previous
/// step's variance, the state follows the model transition with sampled
/// process noise, and each observation is the model price plus Gaussian
/// measurement noise. Zero noise is allowed.
pub fn generate_synthetic(model: &ModelSpec, x0: StateVector, steps: usize, s0: f64, seed: u64) -> Result<SyntheticTruth> {
    if steps < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 steps, got {steps}")));
    }
    if !(s0 > 0.0) {
        return Err(Error::InvalidInput(format!("initial price must be positive, got {s0}")));
    }
    let q_factor = psd_factor(&model.noise.q)?;
    let r_sd = model.noise.r_meas.max(0.0).sqrt();
    let mut rng = stream(seed, 0, 0, Purpose::Simulation);

    let mut states = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);
    let mut exogenous = Vec::with_capacity(steps);
    let (mut s, mut x) = (s0, x0);
    for t in 0..steps {
        let shock: f64 = rng.sample(StandardNormal);
        let s_next = model.gbm_propagate(s, x.r, x.v, model.dt, shock);
        let u = (s_next / s).ln();
        let tau = model.contract.expiry_step.saturating_sub(t + 1) as f64 * model.dt;
        let ex = ExogenousInputs::new(s_next, u, tau)?;
        let w = q_factor * Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        x = model.transition(&x, &ex, &w);
        let z: f64 = rng.sample(StandardNormal);
        observations.push(model.bs_price(&x, &ex)? + r_sd * z);
        states.push(x);
        exogenous.push(ex);
        s = s_next;
    }
    Ok(SyntheticTruth { states, observations, exogenous, seed })
}

impl SyntheticTruth {
    /// Chain rows for `model`'s contract along this path, dated on trading
    /// days after `start`. Prices are re-drawn with `model`'s measurement
    /// noise and floored at one tick.
    pub fn to_quotes(&self, model: &ModelSpec, start: NaiveDate, lane: u64) -> Result<Vec<OptionQuote>> {
        let mut rng = stream(self.seed, lane, 1, Purpose::Simulation);
        let r_sd = model.noise.r_meas.max(0.0).sqrt();
        let expiry_date = add_trading_days(start, model.contract.expiry_step);
        let mut out = Vec::with_capacity(self.states.len());
        for (t, (x, ex)) in self.states.iter().zip(&self.exogenous).enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let price = (model.bs_price(x, ex)? + r_sd * z).max(0.05);
            out.push(OptionQuote {
                quote_date: add_trading_days(start, t + 1),
                expiry_date,
                strike: model.contract.strike,
                side: model.contract.side,
                price: (price * 100.0).round() / 100.0,
                volume: rng.gen_range(50..5000),
                underlying_close: ex.s,
                implied_vol: Some((x.v * model.annualization()).sqrt()),
            });
        }
        Ok(out)
    }
}

/// A synthetic chain for every configured strike along one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticChain {
    pub truth: SyntheticTruth,
    pub dates: Vec<NaiveDate>,
    pub quotes: Vec<OptionQuote>,
}

/// Simulates the underlying and state once, then quotes a call at each
/// strike in `cfg.simulation` with that strike's measurement noise.
pub fn synthetic_chain(cfg: &crate::config::Config, steps: usize, seed: u64) -> Result<SyntheticChain> {
    let sim = &cfg.simulation;
    let strikes = &sim.strikes;
    if strikes.is_empty() {
        return Err(Error::Config("simulation.strikes is empty".into()));
    }
    let model_for = |k: f64| cfg.model_spec(ContractSpec::new(k, sim.expiry_step, OptionSide::Call)?);
    let x0 = StateVector::new(cfg.v0, cfg.r0);
    let truth = generate_synthetic(&model_for(strikes[0])?, x0, steps, sim.s0, seed)?;
    let mut quotes = Vec::with_capacity(steps * strikes.len());
    for (lane, k) in strikes.iter().enumerate() {
        quotes.extend(truth.to_quotes(&model_for(*k)?, sim.start_date, lane as u64)?);
    }
    quotes.sort_by(|a, b| a.quote_date.cmp(&b.quote_date).then(a.strike.total_cmp(&b.strike)));
    let dates = (1..=steps).map(|t| add_trading_days(sim.start_date, t)).collect();
    Ok(SyntheticChain { truth, dates, quotes })
}

/// Writes `date,s,v,r,volatility` rows for a simulated path.
pub fn write_truth<W: Write>(writer: W, chain: &SyntheticChain, annualization: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "s", "v", "r", "volatility"])?;
    for ((d, x), ex) in chain.dates.iter().zip(&chain.truth.states).zip(&chain.truth.exogenous) {
        w.write_record([
            d.to_string(),
            ex.s.to_string(),
            x.v.to_string(),
            x.r.to_string(),
            (x.v * annualization).sqrt().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::{GarchParams, NoiseSpec};
    use nalgebra::Matrix2;

    fn load(text: &str) -> Result<ChainLoad> {
        read_chain(text.as_bytes(), &ColumnMap::default(), PriceField::Mid, Path::new("test.csv"))
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn quote(date: &str, strike: f64, volume: u64, close: f64) -> OptionQuote {
        OptionQuote {
            quote_date: d(date),
            expiry_date: d("2020-12-18"),
            strike,
            side: OptionSide::Call,
            price: 100.0,
            volume,
            underlying_close: close,
            implied_vol: None,
        }
    }

    #[test]
    fn schema_echo() {
        let out = load(
            "quote_date,expiry_date,strike,side,last,volume,underlying_close\n\
             2019-03-01,2020-12-18,2500,C,210.35,812,2803.69\n",
        )
        .unwrap();
        assert!(out.rejects.is_empty());
        assert_eq!(
            out.quotes,
            vec![OptionQuote {
                quote_date: d("2019-03-01"),
                expiry_date: d("2020-12-18"),
                strike: 2500.0,
                side: OptionSide::Call,
                price: 210.35,
                volume: 812,
                underlying_close: 2803.69,
                implied_vol: None,
            }]
        );
    }

    #[test]
    fn negative_price_is_rejected_with_reason() {
        let out = load(
            "quote_date,expiry_date,strike,side,last,volume,underlying_close\n\
             2019-03-01,2020-12-18,2500,C,-1.0,812,2803.69\n",
        )
        .unwrap();
        assert!(out.quotes.is_empty());
        assert_eq!(out.rejects, vec![Reject { line: 2, reason: "price < 0".into() }]);
    }

    #[test]
    fn header_only_file_is_empty() {
        let out = load("quote_date,expiry_date,strike,side,bid,ask,last,volume,underlying_close,implied_vol\n").unwrap();
        assert!(out.quotes.is_empty() && out.rejects.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = load("quote_date,expiry_date,strike,side,last,underlying_close\n").unwrap_err();
        assert!(matches!(err, Error::Schema(c) if c == "volume"));
    }

    #[test]
    fn mid_preferred_over_last() {
        let out = load(
            "quote_date,expiry_date,strike,side,bid,ask,last,volume,underlying_close,implied_vol\n\
             2019-03-01,2020-12-18,2500,C,10,12,15,1,2800,0.2\n\
             2019-03-01,2020-12-18,2500,P,,,15,1,2800,\n",
        )
        .unwrap();
        assert_eq!(out.quotes[0].price, 11.0);
        assert_eq!(out.quotes[0].implied_vol, Some(0.2));
        assert_eq!(out.quotes[1].price, 15.0);
    }

    #[test]
    fn remapped_columns() {
        let mut map = ColumnMap::default();
        map.quote_date = "QuoteDate".into();
        map.last = "Close".into();
        let text = "QuoteDate,expiry_date,strike,side,Close,volume,underlying_close\n2019-03-01,2020-12-18,2500,C,1,1,2800\n";
        let out = read_chain(text.as_bytes(), &map, PriceField::Last, Path::new("x")).unwrap();
        assert_eq!(out.quotes.len(), 1);
    }

    #[test]
    fn max_volume_rule_keeps_liquid_quote() {
        let quotes = vec![
            quote("2019-03-01", 2500.0, 10, 100.0),
            quote("2019-03-01", 2500.0, 500, 100.0),
            quote("2019-03-04", 2500.0, 5, 101.0),
        ];
        let s = build_series(&quotes, 2500.0, d("2020-12-18"), OptionSide::Call, LiquidityRule::MaxVolume).unwrap();
        assert_eq!(s.points[0].quote.volume, 500);
        assert_eq!(s.points[0].ex.u, 0.0);
        assert!((s.points[1].ex.u - 1.01f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn first_return_uses_earlier_close() {
        let quotes = vec![
            quote("2019-02-28", 3000.0, 1, 99.0),
            quote("2019-03-01", 2500.0, 1, 100.0),
            quote("2019-03-04", 2500.0, 1, 101.0),
        ];
        let s = build_series(&quotes, 2500.0, d("2020-12-18"), OptionSide::Call, LiquidityRule::MaxVolume).unwrap();
        assert!((s.points[0].ex.u - (100.0f64 / 99.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn expiry_one_trading_year_out() {
        let start = d("2019-03-01");
        let expiry = add_trading_days(start, 252);
        assert_eq!(trading_days_between(start, expiry), 252);
        let mut q0 = quote("2019-03-01", 2500.0, 1, 100.0);
        let mut q1 = quote("2019-03-04", 2500.0, 1, 100.0);
        q0.expiry_date = expiry;
        q1.expiry_date = expiry;
        let s = build_series(&[q0, q1], 2500.0, expiry, OptionSide::Call, LiquidityRule::MaxVolume).unwrap();
        assert_eq!(s.points[0].ex.tau, 1.0);
        assert!(s.points[1].ex.tau < 1.0);
        assert_eq!(s.contract.expiry_step, 252);
    }

    #[test]
    fn single_date_is_insufficient() {
        let quotes = vec![quote("2019-03-01", 2500.0, 1, 100.0)];
        assert!(matches!(
            build_series(&quotes, 2500.0, d("2020-12-18"), OptionSide::Call, LiquidityRule::MaxVolume),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn max_volume_series_rules() {
        let mut put = quote("2019-03-01", 1000.0, 9999, 100.0);
        put.side = OptionSide::Put;
        let quotes = vec![
            put,
            quote("2019-03-01", 3000.0, 50, 100.0),
            quote("2019-03-01", 2500.0, 50, 100.0),
            quote("2019-03-04", 2000.0, 7, 101.0),
        ];
        let s = max_volume_series(&quotes).unwrap();
        assert_eq!(s.points[0].quote.strike, 2500.0);
        assert_eq!(s.points[0].ex.strike, Some(2500.0));
        assert_eq!(s.points[1].quote.strike, 2000.0);
    }

    #[test]
    fn synthetic_without_noise_is_exact() {
        let model = ModelSpec {
            noise: NoiseSpec::simulation(Matrix2::zeros(), 0.0),
            ..ModelSpec::new(
                GarchParams::new(2e-6, 0.08, 0.9).unwrap(),
                ContractSpec::new(2500.0, 200, OptionSide::Call).unwrap(),
                NoiseSpec::defaults_for_strike(2500.0),
                1.0 / 252.0,
            )
            .unwrap()
        };
        let x0 = StateVector::new(1e-4, 0.02);
        let truth = generate_synthetic(&model, x0, 30, 2800.0, 4).unwrap();
        let mut v = x0.v;
        for (t, ((x, ex), c)) in truth.states.iter().zip(&truth.exogenous).zip(&truth.observations).enumerate() {
            v = 2e-6 + 0.08 * ex.u * ex.u + 0.9 * v;
            assert!((x.v - v).abs() < 1e-18, "step {t}");
            assert_eq!(x.r, 0.02);
            assert_eq!(*c, model.bs_price(x, ex).unwrap());
        }
        assert_eq!(truth, generate_synthetic(&model, x0, 30, 2800.0, 4).unwrap());
    }
}
