//! Performance scoring against the bound and the average-case / best-case
//! switching strategies, plus the per-step orchestration that runs every
//! filter, advances its bound, and picks the estimate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    ekf_update, pf_update, ukf_update, FilterId, GaussianBelief, ParticleCloud, SigmaPointParams,
    FALLBACK_INFLATION,
};
use crate::pcrlb::{pcrlb_step, seed_particles, FisherState};
use crate::rng::{stream, Purpose};
use crate::ssm::{ExogenousInputs, StateSpaceModel};

/// State dimension.
pub const STATE_DIM: usize = 2;

/// Slack on the theoretical `Φ(j,j) ≤ 1` bound before an exceedance is logged.
pub const PHI_SLACK: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitchMode {
    Average,
    Best,
}

impl fmt::Display for SwitchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwitchMode::Average => "average",
            SwitchMode::Best => "best",
        })
    }
}

impl FromStr for SwitchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(SwitchMode::Average),
            "best" => Ok(SwitchMode::Best),
            other => Err(Error::InvalidInput(format!("unknown switch mode `{other}`"))),
        }
    }
}

/// Diagonal performance matrix `Φ(j,j) = J⁻¹(j,j) / P(j,j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfMetric {
    pub phi: Matrix2<f64>,
    pub trace: f64,
    pub filter: FilterId,
}

impl PerfMetric {
    pub fn diag(&self, j: usize) -> f64 {
        self.phi[(j, j)]
    }
}

pub fn perf_metric(fisher: &FisherState, belief: &GaussianBelief) -> Result<PerfMetric> {
    let mut phi = Matrix2::zeros();
    for j in 0..STATE_DIM {
        let p = belief.cov[(j, j)];
        let bound = fisher.j_inv[(j, j)];
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::DegenerateCovariance(format!("{} (P[{j}][{j}] = {p})", fisher.filter)));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::DegenerateCovariance(format!("{} (J⁻¹[{j}][{j}] = {bound})", fisher.filter)));
        }
        phi[(j, j)] = bound / p;
        if phi[(j, j)] > PHI_SLACK {
            log::debug!("{}: Φ({j},{j}) = {:.3} exceeds the bound", fisher.filter, phi[(j, j)]);
        }
    }
    Ok(PerfMetric { phi, trace: phi.trace(), filter: fisher.filter })
}

/// Which filter supplied the estimate: one for the whole state, or one per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chosen {
    Average(FilterId),
    Best([FilterId; STATE_DIM]),
}

impl Chosen {
    pub fn per_component(&self) -> [FilterId; STATE_DIM] {
        match *self {
            Chosen::Average(f) => [f; STATE_DIM],
            Chosen::Best(fs) => fs,
        }
    }

    /// Every component came from this filter.
    pub fn is_only(&self, id: FilterId) -> bool {
        self.per_component().iter().all(|f| *f == id)
    }

    pub fn label(&self) -> String {
        match self {
            Chosen::Average(f) => f.to_string(),
            Chosen::Best([a, b]) => format!("{a}/{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchDecision {
    pub mode: SwitchMode,
    pub chosen: Chosen,
    pub estimate: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl SwitchDecision {
    pub fn belief(&self) -> GaussianBelief {
        GaussianBelief::new(self.estimate, self.cov)
    }
}

fn belief_of(beliefs: &[(FilterId, GaussianBelief)], id: FilterId) -> Result<&GaussianBelief> {
    beliefs
        .iter()
        .find(|(f, _)| *f == id)
        .map(|(_, b)| b)
        .ok_or_else(|| Error::InvalidInput(format!("no posterior supplied for {id}")))
}

/// Filter maximizing `score`; ties go to the earliest filter in declaration order.
fn argmax_by(metrics: &[PerfMetric], score: impl Fn(&PerfMetric) -> f64) -> Result<FilterId> {
    let mut sorted: Vec<&PerfMetric> = metrics.iter().collect();
    sorted.sort_by_key(|m| m.filter);
    let mut best: Option<(&PerfMetric, f64)> = None;
    for m in sorted {
        let s = score(m);
        if s.is_nan() {
            continue;
        }
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((m, s));
        }
    }
    best.map(|(m, _)| m.filter).ok_or(Error::NoFilter)
}

/// Average-case strategy: the filter with the largest `trace Φ` supplies the
/// full posterior.
pub fn select_average(metrics: &[PerfMetric], beliefs: &[(FilterId, GaussianBelief)]) -> Result<SwitchDecision> {
    let id = argmax_by(metrics, |m| m.trace)?;
    let b = belief_of(beliefs, id)?;
    Ok(SwitchDecision { mode: SwitchMode::Average, chosen: Chosen::Average(id), estimate: b.mean, cov: b.cov })
}

/// Best-case strategy: each state component comes from the filter with the
/// largest `Φ(j,j)`. The covariance is diagonal in the chosen marginal variances.
pub fn select_best(metrics: &[PerfMetric], beliefs: &[(FilterId, GaussianBelief)]) -> Result<SwitchDecision> {
    let mut chosen = [FilterId::Ekf; STATE_DIM];
    let mut estimate = Vector2::zeros();
    let mut cov = Matrix2::zeros();
    for j in 0..STATE_DIM {
        let id = argmax_by(metrics, |m| m.diag(j))?;
        let b = belief_of(beliefs, id)?;
        chosen[j] = id;
        estimate[j] = b.mean[j];
        cov[(j, j)] = b.cov[(j, j)];
    }
    Ok(SwitchDecision { mode: SwitchMode::Best, chosen: Chosen::Best(chosen), estimate, cov })
}

pub fn select(mode: SwitchMode, metrics: &[PerfMetric], beliefs: &[(FilterId, GaussianBelief)]) -> Result<SwitchDecision> {
    match mode {
        SwitchMode::Average => select_average(metrics, beliefs),
        SwitchMode::Best => select_best(metrics, beliefs),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    /// The filter set; order is irrelevant, duplicates are rejected.
    pub filters: Vec<FilterId>,
    pub mode: SwitchMode,
    pub x0: Vector2<f64>,
    pub p0: Matrix2<f64>,
    pub n_particles: usize,
    /// Resample only when ESS falls below this fraction of N; `None` resamples every step.
    pub ess_threshold: Option<f64>,
    pub sigma_points: SigmaPointParams,
    pub pcrlb_particles: usize,
    /// Each filter continues from its own posterior instead of the switched estimate.
    pub independent_chains: bool,
    pub seed: u64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            filters: FilterId::ALL.to_vec(),
            mode: SwitchMode::Average,
            x0: Vector2::new(1e-4, 0.02),
            p0: Matrix2::new(1e-9, 0.0, 0.0, 1e-4),
            n_particles: 2000,
            ess_threshold: None,
            sigma_points: SigmaPointParams::default(),
            pcrlb_particles: 1000,
            independent_chains: false,
            seed: 0,
        }
    }
}

/// One filter's contribution at a step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub filter: FilterId,
    pub belief: GaussianBelief,
    /// Bound `J_t` scored against `belief`.
    pub fisher: FisherState,
    /// `None` when the filter was excluded from this step's switch.
    pub metric: Option<PerfMetric>,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub decision: SwitchDecision,
    pub filters: Vec<FilterStep>,
    /// No filter was eligible and the previous decision was reused.
    pub carried_forward: bool,
}

impl StepRecord {
    pub fn filter(&self, id: FilterId) -> Option<&FilterStep> {
        self.filters.iter().find(|f| f.filter == id)
    }
}

/// Per-filter counts of how often each supplied the estimate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    /// Rows are labels ("AAF", "ABF Volatility", ...), counts in `FilterId::ALL` order.
    pub rows: Vec<(String, [usize; 3])>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRun {
    pub mode: SwitchMode,
    pub steps: Vec<StepRecord>,
    /// Filter fallbacks, bound carry-forwards and exclusions, summed.
    pub fallbacks: usize,
}

impl EstimationRun {
    pub fn estimates(&self) -> Vec<Vector2<f64>> {
        self.steps.iter().map(|s| s.decision.estimate).collect()
    }

    /// Counts of chosen filters: one row for the average mode, one row per
    /// state component for the best mode.
    pub fn frequency(&self, label: &str, component_names: [&str; STATE_DIM]) -> FrequencyTable {
        let tally = |component: usize| {
            let mut counts = [0usize; 3];
            for s in &self.steps {
                counts[s.decision.chosen.per_component()[component] as usize] += 1;
            }
            counts
        };
        let rows = match self.mode {
            SwitchMode::Average => vec![(label.to_string(), tally(0))],
            SwitchMode::Best => (0..STATE_DIM)
                .map(|j| (format!("{label} {}", component_names[j]), tally(j)))
                .collect(),
        };
        FrequencyTable { rows }
    }
}

struct Chain {
    id: FilterId,
    belief: GaussianBelief,
    cloud: Option<ParticleCloud>,
    fisher: FisherState,
}

struct ChainOutcome {
    step: FilterStep,
    next_fisher: FisherState,
    fallbacks: usize,
}

fn validate_inputs(obs: &[f64], ex: &[ExogenousInputs], cfg: &EstimationConfig) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::InvalidInput("empty observation sequence".into()));
    }
    if obs.len() != ex.len() {
        return Err(Error::InvalidInput(format!(
            "{} observations but {} exogenous inputs",
            obs.len(),
            ex.len()
        )));
    }
    if let Some(t) = obs.iter().position(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite observation at step {t}")));
    }
    if cfg.filters.is_empty() {
        return Err(Error::InvalidInput("filter set is empty".into()));
    }
    let mut ids = cfg.filters.clone();
    ids.sort();
    ids.dedup();
    if ids.len() != cfg.filters.len() {
        return Err(Error::InvalidInput("filter set contains duplicates".into()));
    }
    if cfg.n_particles < 2 || cfg.pcrlb_particles < 2 {
        return Err(Error::InvalidInput("particle counts must be at least 2".into()));
    }
    Ok(())
}

/// Runs every filter in the set over the observation sequence, scoring each
/// against its particle-approximated bound and switching every step.
pub fn run_adaptive_estimation<M: StateSpaceModel + ?Sized>(
    observations: &[f64],
    exogenous: &[ExogenousInputs],
    model: &M,
    cfg: &EstimationConfig,
) -> Result<EstimationRun> {
    validate_inputs(observations, exogenous, cfg)?;
    let horizon = observations.len();
    let initial = GaussianBelief::new(cfg.x0, cfg.p0);
    let mut ids = cfg.filters.clone();
    ids.sort();

    let mut fallbacks = 0usize;
    let mut chains = Vec::with_capacity(ids.len());
    for &id in &ids {
        let j0 = FisherState::from_prior(&cfg.p0, id)?;
        let mut rng = stream(cfg.seed, id.lane(), 0, Purpose::Pcrlb);
        let fisher = match pcrlb_step(&j0, &initial, observations[0], &exogenous[0], model, cfg.pcrlb_particles, &mut rng) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("{id}: initial bound step failed ({e}); keeping J₀");
                fallbacks += 1;
                j0
            }
        };
        let cloud = match id {
            FilterId::Pf => {
                let mut rng = stream(cfg.seed, id.lane(), 0, Purpose::Reseed);
                Some(seed_particles(&initial, cfg.n_particles, model, &mut rng)?)
            }
            _ => None,
        };
        chains.push(Chain { id, belief: initial, cloud, fisher });
    }

    let mut switched = SwitchDecision {
        mode: cfg.mode,
        chosen: match cfg.mode {
            SwitchMode::Average => Chosen::Average(ids[0]),
            SwitchMode::Best => Chosen::Best([ids[0]; STATE_DIM]),
        },
        estimate: cfg.x0,
        cov: cfg.p0,
    };
    let mut steps = Vec::with_capacity(horizon);

    for t in 0..horizon {
        let shared = switched.belief();
        let keep_pf_cloud = cfg.independent_chains || (t == 0) || switched.chosen.is_only(FilterId::Pf);
        let next_obs = observations.get(t + 1).map(|c| (*c, &exogenous[t + 1]));

        let outcomes: Vec<Result<ChainOutcome>> = chains
            .par_iter_mut()
            .map(|chain| {
                advance_chain(chain, &shared, keep_pf_cloud, observations[t], &exogenous[t], next_obs, model, cfg, t)
            })
            .collect();

        let mut filter_steps = Vec::with_capacity(chains.len());
        for (chain, outcome) in chains.iter_mut().zip(outcomes) {
            let outcome = outcome?;
            fallbacks += outcome.fallbacks;
            chain.belief = outcome.step.belief;
            chain.fisher = outcome.next_fisher;
            filter_steps.push(outcome.step);
        }

        let metrics: Vec<PerfMetric> = filter_steps.iter().filter_map(|s| s.metric).collect();
        let beliefs: Vec<(FilterId, GaussianBelief)> = filter_steps.iter().map(|s| (s.filter, s.belief)).collect();
        let carried_forward = match select(cfg.mode, &metrics, &beliefs) {
            Ok(decision) => {
                switched = decision;
                false
            }
            Err(Error::NoFilter) => {
                log::warn!("step {t}: no eligible filter, carrying the previous estimate forward");
                fallbacks += 1;
                true
            }
            Err(e) => return Err(e),
        };
        steps.push(StepRecord { t, decision: switched, filters: filter_steps, carried_forward });
    }

    Ok(EstimationRun { mode: cfg.mode, steps, fallbacks })
}

#[allow(clippy::too_many_arguments)]
fn advance_chain<M: StateSpaceModel + ?Sized>(
    chain: &mut Chain,
    shared: &GaussianBelief,
    keep_pf_cloud: bool,
    obs: f64,
    ex: &ExogenousInputs,
    next_obs: Option<(f64, &ExogenousInputs)>,
    model: &M,
    cfg: &EstimationConfig,
    t: usize,
) -> Result<ChainOutcome> {
    let id = chain.id;
    let lane = id.lane();
    let prior = if cfg.independent_chains { chain.belief } else { *shared };
    let mut fallbacks = 0;

    let updated = match id {
        FilterId::Ekf => ekf_update(&prior, obs, ex, model),
        FilterId::Ukf => ukf_update(&prior, obs, ex, model, &cfg.sigma_points),
        FilterId::Pf => {
            let cloud = match (&chain.cloud, keep_pf_cloud) {
                (Some(c), true) => c.clone(),
                _ => {
                    let mut rng = stream(cfg.seed, lane, t as u64 + 1, Purpose::Reseed);
                    seed_particles(&prior, cfg.n_particles, model, &mut rng)?
                }
            };
            let mut rng = stream(cfg.seed, lane, t as u64 + 1, Purpose::Filter);
            match pf_update(&cloud, obs, ex, model, cfg.ess_threshold, &mut rng) {
                Ok(out) => {
                    if out.recovered {
                        fallbacks += 1;
                    }
                    chain.cloud = Some(out.cloud);
                    Ok(out.summary)
                }
                Err(e) => {
                    chain.cloud = Some(cloud);
                    Err(e)
                }
            }
        }
    };
    let (belief, fell_back) = match updated {
        Ok(b) => (b, false),
        Err(e) => {
            log::warn!("step {t}: {id} update failed ({e}); reporting inflated prior");
            fallbacks += 1;
            (prior.inflated(FALLBACK_INFLATION), true)
        }
    };

    let fisher = chain.fisher;
    let metric = match perf_metric(&fisher, &belief) {
        Ok(m) => Some(m),
        Err(e) => {
            log::warn!("step {t}: {e}; excluded from switching");
            fallbacks += 1;
            None
        }
    };

    let next_fisher = match next_obs {
        Some((c, ex_next)) => {
            let mut rng = stream(cfg.seed, lane, t as u64 + 1, Purpose::Pcrlb);
            match pcrlb_step(&fisher, &belief, c, ex_next, model, cfg.pcrlb_particles, &mut rng) {
                Ok(f) => f,
                Err(e) => {
                    log::warn!("step {t}: {id} bound step failed ({e}); carrying J forward");
                    fallbacks += 1;
                    fisher
                }
            }
        }
        None => fisher,
    };

    Ok(ChainOutcome {
        step: FilterStep { filter: id, belief, fisher, metric, fell_back },
        next_fisher,
        fallbacks,
    })
}
