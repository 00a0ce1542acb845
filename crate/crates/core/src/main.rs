use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_filter::backtest::{self, read_decision_log, run_backtest, write_reports, Split, Strategy};
use adaptive_filter::config::Config;
use adaptive_filter::data::{self, build_series, load_chain, load_dated_series, LiquidityRule};
use adaptive_filter::ssm::calibrate_variance_targeting;
use adaptive_filter::{Error, OptionSide, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

/// Adaptive EKF/UKF/PF filtering of option prices with bound-driven switching.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter option series and score one-step-ahead forecasts on the test period.
    Backtest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        chain: PathBuf,
        /// Strike to backtest; repeatable. Defaults to every call strike in the chain.
        #[arg(long)]
        strike: Vec<f64>,
        /// Expiry date. Defaults to the expiry with the most call quotes.
        #[arg(long)]
        expiry: Option<NaiveDate>,
        /// EKF, UKF, PF, AAF or ABF; repeatable. Defaults to all five.
        #[arg(long)]
        strategy: Vec<Strategy>,
        #[arg(long)]
        train_end: Option<NaiveDate>,
        #[arg(long)]
        test_end: Option<NaiveDate>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Write a synthetic option chain and its true states.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "simulated")]
        out_dir: PathBuf,
    },
    /// Annualized volatility from a decision log, joined against external series.
    VolReport {
        /// A `decisions.csv` written by `backtest`.
        #[arg(long)]
        records: PathBuf,
        /// `date,value` file, optionally as NAME=PATH; repeatable.
        #[arg(long)]
        compare: Vec<String>,
        /// Defaults to AAF when present, else the first strategy in the log.
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Defaults to the first strike of the chosen strategy.
        #[arg(long)]
        strike: Option<f64>,
        /// Supplies `dt`; defaults apply otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Fit GARCH(1,1) by variance-targeting likelihood on `date,close` prices.
    CalibrateGarch {
        #[arg(long)]
        underlying: PathBuf,
        /// Base configuration to update.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        config_out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

/// Runs the command; `Ok(true)` means it finished with logged fallbacks.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Backtest { config, chain, strike, expiry, strategy, train_end, test_end, seed, out_dir } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let split = Split { train_end, test_end };
            split.validate()?;
            let loaded = load_chain(&chain, &cfg.data.columns, cfg.data.price)?;
            for r in &loaded.rejects {
                log::warn!("{}:{}: rejected: {}", chain.display(), r.line, r.reason);
            }
            let calls: Vec<_> = loaded.quotes.iter().filter(|q| q.side == OptionSide::Call).collect();
            let expiry = match expiry {
                Some(e) => e,
                None => most_common(calls.iter().map(|q| q.expiry_date))
                    .ok_or_else(|| Error::InsufficientData(format!("{} has no call quotes", chain.display())))?,
            };
            let strikes = if strike.is_empty() {
                let mut ks: Vec<f64> = calls.iter().filter(|q| q.expiry_date == expiry).map(|q| q.strike).collect();
                ks.sort_by(f64::total_cmp);
                ks.dedup();
                ks
            } else {
                strike
            };
            let strategies = if strategy.is_empty() { Strategy::ALL.to_vec() } else { strategy };
            let series = strikes
                .iter()
                .map(|k| build_series(&loaded.quotes, *k, expiry, OptionSide::Call, LiquidityRule::MaxVolume))
                .collect::<Result<Vec<_>>>()?;
            let runs = run_backtest(&cfg, &series, &strategies, &split)?;
            let bundle = write_reports(&out_dir, &runs, 1.0 / cfg.dt)?;
            for (st, k, fit, fc) in &bundle.rmse_table {
                println!("{st:>4} K={k:<6} rmse_fit={fit:.6} rmse_forecast={fc:.6}");
            }
            for p in bundle.paths() {
                println!("wrote {}", p.display());
            }
            let fallbacks: usize = runs.iter().map(|r| r.run.fallbacks).sum();
            if fallbacks > 0 {
                log::warn!("run completed with {fallbacks} numerical fallbacks");
            }
            Ok(fallbacks > 0)
        }
        Command::Simulate { config, steps, seed, out_dir } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let steps = steps.unwrap_or(cfg.simulation.steps);
            let chain = data::synthetic_chain(&cfg, steps, cfg.seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let chain_path = out_dir.join("chain.csv");
            let truth_path = out_dir.join("truth.csv");
            data::write_chain(File::create(&chain_path)?, &chain.quotes)?;
            data::write_truth(File::create(&truth_path)?, &chain, 1.0 / cfg.dt)?;
            println!("wrote {}\nwrote {}", chain_path.display(), truth_path.display());
            Ok(false)
        }
        Command::VolReport { records, compare, strategy, strike, config, out_dir } => {
            let cfg = load_config(config.as_deref())?;
            let rows = read_decision_log(&records)?;
            let strategy = match strategy {
                Some(s) => s.name().to_string(),
                None => rows
                    .iter()
                    .find(|r| r.strategy == "AAF")
                    .or(rows.first())
                    .map(|r| r.strategy.clone())
                    .ok_or_else(|| Error::InsufficientData(format!("{} has no records", records.display())))?,
            };
            let strike = match strike {
                Some(k) => k,
                None => rows
                    .iter()
                    .find(|r| r.strategy == strategy)
                    .map(|r| r.strike)
                    .ok_or_else(|| Error::InsufficientData(format!("no {strategy} records")))?,
            };
            let estimates: Vec<(NaiveDate, f64)> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.strike == strike)
                .map(|r| (r.date, r.v))
                .collect();
            let comparisons = compare
                .iter()
                .map(|c| {
                    let (name, path) = match c.split_once('=') {
                        Some((n, p)) => (n.to_string(), PathBuf::from(p)),
                        None => {
                            let p = PathBuf::from(c);
                            let n = p.file_stem().map_or(c.clone(), |s| s.to_string_lossy().into_owned());
                            (n, p)
                        }
                    };
                    Ok((name, load_dated_series(&path)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = backtest::vol_report(&estimates, &comparisons, 1.0 / cfg.dt)?;
            for p in backtest::write_vol_report(&out_dir, &report)? {
                println!("wrote {}", p.display());
            }
            if !report.unmatched.is_empty() {
                log::warn!("{} dates did not join", report.unmatched.len());
            }
            Ok(false)
        }
        Command::CalibrateGarch { underlying, config, config_out } => {
            let mut cfg = load_config(config.as_deref())?;
            let closes = load_dated_series(&underlying)?;
            if let Some((d, _)) = closes.iter().find(|(_, c)| !(*c > 0.0)) {
                return Err(Error::Format { path: underlying, reason: format!("non-positive close on {d}") });
            }
            let returns: Vec<f64> = closes.windows(2).map(|w| (w[1].1 / w[0].1).ln()).collect();
            let p = calibrate_variance_targeting(&returns, cfg.garch.demean)?;
            cfg.garch.omega = p.omega;
            cfg.garch.alpha = p.alpha;
            cfg.garch.beta = p.beta;
            std::fs::write(&config_out, cfg.to_toml_string()?)?;
            println!("omega={} alpha={} beta={}\nwrote {}", p.omega, p.alpha, p.beta, config_out.display());
            Ok(false)
        }
    }
}

fn most_common<T: Ord + Copy>(items: impl Iterator<Item = T>) -> Option<T> {
    let mut counts = std::collections::BTreeMap::new();
    for x in items {
        *counts.entry(x).or_insert(0usize) += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(x, _)| x)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
