//! Cross-entropy search over Bernoulli-parameterized placements.
//!
//! Each iteration samples a population from the per-node inclusion
//! probabilities, repairs budget violations, ranks candidates by their
//! population-normalized aggregate, and refits the probabilities to the
//! elite fraction. The best-ever placement is tracked on a fixed reference
//! scale (the exact objective ranges over all feasible placements) so that
//! its score is comparable across iterations.

mod oracle;
mod sampling;

pub use oracle::{brute_force_oracle, enumeration_count, OracleResult, DEFAULT_ENUMERATION_CAP};
pub use sampling::{enforce_budget, sample_bernoulli, sample_population, substream};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{
    normalize_and_aggregate, Evaluator, ObjectiveBounds, ObjectiveBreakdown, Placement,
    RawObjectives, Weights,
};

/// Score used to rank a population when choosing elites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Min-max over the current population.
    #[default]
    Population,
    /// The run's fixed reference scale.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CEConfig {
    pub pop_size: usize,
    pub max_iters: usize,
    pub elite_frac: f64,
    pub stop_eps: f64,
    pub seed: u64,
    /// Blend of the elite estimate into the previous probabilities; 1.0
    /// replaces them outright.
    pub smoothing: f64,
    /// Initial inclusion probability; `None` uses `min(1, K / |N|)`.
    pub p_init: Option<f64>,
    pub ranking: Ranking,
    pub stop_rule: StopRule,
    /// Consecutive sub-`stop_eps` changes required to stop.
    pub patience: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    #[default]
    Incumbent,
    IterationBest,
}

impl Default for CEConfig {
    fn default() -> Self {
        Self {
            pop_size: 100,
            max_iters: 100,
            elite_frac: 0.1,
            stop_eps: 1e-5,
            seed: 0,
            smoothing: 0.3,
            p_init: None,
            ranking: Ranking::default(),
            stop_rule: StopRule::default(),
            patience: 5,
        }
    }
}

impl CEConfig {
    pub fn elite_count(&self) -> usize {
        // Guard against 0.29 * 100 = 28.999...
        (self.elite_frac * self.pop_size as f64 + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size == 0 {
            return Err(Error::validation("pop_size", "must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters", "must be at least 1"));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac < 1.0) {
            return Err(Error::validation("elite_frac", "must lie in (0, 1)"));
        }
        if self.elite_count() < 1 {
            return Err(Error::validation(
                "elite_frac",
                "elite_frac * pop_size must be at least 1",
            ));
        }
        if !(self.stop_eps > 0.0) {
            return Err(Error::validation("stop_eps", "must be positive"));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::validation("smoothing", "must lie in (0, 1]"));
        }
        if let Some(p) = self.p_init {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation("p_init", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub placement: Placement,
    pub raw: RawObjectives,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CEState {
    pub probs: Vec<f64>,
    pub gamma_ada: f64,
    pub incumbent: Option<Incumbent>,
    pub iteration: usize,
}

impl CEState {
    pub fn new(probs: Vec<f64>) -> Self {
        Self {
            probs,
            gamma_ada: f64::INFINITY,
            incumbent: None,
            iteration: 0,
        }
    }
}

/// One iteration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Inclusion probabilities after this iteration's update.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probs: Vec<f64>,
    pub gamma_ada: f64,
    /// Best-ever reference-scale aggregate; `None` until a non-empty
    /// placement has been sampled.
    pub incumbent_gamma: Option<f64>,
    /// Best reference-scale aggregate within this iteration.
    pub iteration_best_gamma: Option<f64>,
    pub pop_min: f64,
    pub pop_mean: f64,
    pub pop_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Copy with the probability snapshots dropped.
    pub fn without_probs(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.probs = Vec::new();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SolveStatus {
    Converged { iteration: usize },
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub best: Placement,
    /// Best placement scored on the reference scale.
    pub breakdown: ObjectiveBreakdown,
    pub reference: ObjectiveBounds,
    pub trace: RunTrace,
    pub status: SolveStatus,
}

/// Everything an observer can see after an iteration completes.
pub struct IterationView<'a> {
    pub population: &'a [Placement],
    /// Population-normalized scores, aligned with `population`.
    pub breakdowns: &'a [ObjectiveBreakdown],
    pub elites: &'a [usize],
    pub record: &'a IterationRecord,
}

pub trait SolveObserver {
    fn on_iteration(&mut self, view: &IterationView<'_>);
}

/// Observer that ignores every iteration.
pub struct NoObserver;

impl SolveObserver for NoObserver {
    fn on_iteration(&mut self, _view: &IterationView<'_>) {}
}

impl<F: FnMut(&IterationView<'_>)> SolveObserver for F {
    fn on_iteration(&mut self, view: &IterationView<'_>) {
        self(view)
    }
}

/// Indices of the `elite_count` lowest scores (ties by index) and the
/// worst elite score.
pub fn select_elites(gammas: &[f64], elite_count: usize) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..gammas.len()).collect();
    order.sort_by(|&a, &b| gammas[a].total_cmp(&gammas[b]).then(a.cmp(&b)));
    order.truncate(elite_count.max(1).min(gammas.len()));
    let gamma_ada = order
        .iter()
        .map(|&i| gammas[i])
        .fold(f64::NEG_INFINITY, f64::max);
    (order, gamma_ada)
}

/// Elite inclusion frequencies blended into `probs` with weight `smoothing`.
pub fn update_probabilities(probs: &[f64], elites: &[&Placement], smoothing: f64) -> Vec<f64> {
    assert!(!elites.is_empty(), "elite set must be non-empty");
    let share = 1.0 / elites.len() as f64;
    probs
        .iter()
        .enumerate()
        .map(|(n, &p)| {
            let hits = elites.iter().filter(|s| s.contains(n)).count();
            let estimate = hits as f64 * share;
            if smoothing == 1.0 {
                estimate
            } else {
                (smoothing * estimate + (1.0 - smoothing) * p).clamp(0.0, 1.0)
            }
        })
        .collect()
}

pub fn solve(eval: &Evaluator<'_>, w: &Weights, cfg: &CEConfig) -> Result<SolveOutcome> {
    solve_observed(eval, w, cfg, &mut NoObserver)
}

pub fn solve_observed(
    eval: &Evaluator<'_>,
    w: &Weights,
    cfg: &CEConfig,
    observer: &mut dyn SolveObserver,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let n = eval.network().len();
    let budget = eval.params().budget;
    let reference = eval.feasible_bounds(budget)?;
    let p_init = cfg
        .p_init
        .unwrap_or_else(|| (budget as f64 / n as f64).min(1.0));
    let mut state = CEState::new(vec![p_init; n]);
    let mut trace = RunTrace::default();
    let mut status = SolveStatus::MaxIterations;
    let mut calm = 0usize;

    for t in 1..=cfg.max_iters {
        state.iteration = t;
        let population = sample_population(&state.probs, cfg.pop_size, budget, cfg.seed, t);
        let raws: Vec<RawObjectives> = population
            .par_iter()
            .map(|s| eval.raw_unchecked(s))
            .collect();
        let breakdowns = normalize_and_aggregate(&raws, w)?;
        let reference_gammas: Vec<Option<f64>> = population
            .iter()
            .zip(&raws)
            .map(|(s, raw)| (s.count() > 0).then(|| reference.breakdown(raw, w).gamma))
            .collect();

        let ranking: Vec<f64> = match cfg.ranking {
            Ranking::Population => breakdowns.iter().map(|b| b.gamma).collect(),
            Ranking::Reference => reference_gammas
                .iter()
                .map(|g| g.unwrap_or(f64::INFINITY))
                .collect(),
        };
        let (elites, gamma_ada) = select_elites(&ranking, cfg.elite_count());
        state.gamma_ada = gamma_ada;

        let iteration_best = reference_gammas
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (i, g)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let previous = state.incumbent.as_ref().map(|inc| inc.gamma);
        let previous_best = trace.records.last().and_then(|r| r.iteration_best_gamma);
        if let Some((i, gamma)) = iteration_best {
            if previous.is_none_or(|best| gamma < best) {
                state.incumbent = Some(Incumbent {
                    placement: population[i].clone(),
                    raw: raws[i],
                    gamma,
                });
            }
        }

        let elite_refs: Vec<&Placement> = elites.iter().map(|&i| &population[i]).collect();
        state.probs = update_probabilities(&state.probs, &elite_refs, cfg.smoothing);

        let gammas = breakdowns.iter().map(|b| b.gamma);
        let record = IterationRecord {
            iteration: t,
            probs: state.probs.clone(),
            gamma_ada,
            incumbent_gamma: state.incumbent.as_ref().map(|inc| inc.gamma),
            iteration_best_gamma: iteration_best.map(|(_, g)| g),
            pop_min: gammas.clone().fold(f64::INFINITY, f64::min),
            pop_mean: gammas.clone().sum::<f64>() / breakdowns.len() as f64,
            pop_max: gammas.fold(f64::NEG_INFINITY, f64::max),
        };
        observer.on_iteration(&IterationView {
            population: &population,
            breakdowns: &breakdowns,
            elites: &elites,
            record: &record,
        });
        let current = match cfg.stop_rule {
            StopRule::Incumbent => record.incumbent_gamma,
            StopRule::IterationBest => record.iteration_best_gamma,
        };
        let before = match cfg.stop_rule {
            StopRule::Incumbent => previous,
            StopRule::IterationBest => previous_best,
        };
        trace.records.push(record);

        match (before, current) {
            (Some(before), Some(now)) if (now - before).abs() < cfg.stop_eps => calm += 1,
            _ => calm = 0,
        }
        if calm >= cfg.patience {
            status = SolveStatus::Converged { iteration: t };
            break;
        }
    }

    let incumbent = state.incumbent.ok_or_else(|| {
        Error::Argument("no non-empty placement was sampled; raise p_init".into())
    })?;
    Ok(SolveOutcome {
        breakdown: reference.breakdown(&incumbent.raw, w),
        best: incumbent.placement,
        reference,
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{synthesize_network, CoordSystem, TrafficNetwork, TrafficNode};
    use crate::objectives::EvalOptions;
    use crate::params::PlanningParams;

    #[test]
    fn elite_selection_examples() {
        let (elites, ada) = select_elites(&[0.5, 0.2, 0.9, 0.4, 0.3, 0.8, 0.6, 0.7, 1.0, 0.1], 1);
        assert_eq!(elites, vec![9]);
        assert_eq!(ada, 0.1);

        let gammas: Vec<f64> = (1..=10).rev().map(|i| i as f64 / 10.0).collect();
        let cfg = CEConfig {
            pop_size: 10,
            elite_frac: 0.3,
            ..CEConfig::default()
        };
        let (elites, ada) = select_elites(&gammas, cfg.elite_count());
        assert_eq!(elites, vec![9, 8, 7]);
        assert_eq!(ada, 0.3);

        let (elites, ada) = select_elites(&[0.4; 10], 3);
        assert_eq!(elites, vec![0, 1, 2]);
        assert_eq!(ada, 0.4);
    }

    #[test]
    fn probability_update_examples() {
        let inside = Placement::from_indices(3, &[0, 1]).unwrap();
        let other = Placement::from_indices(3, &[0]).unwrap();
        let updated = update_probabilities(&[0.3; 3], &[&inside, &other], 1.0);
        assert_eq!(updated, vec![1.0, 0.5, 0.0]);

        let ten: Vec<Placement> = (0..10)
            .map(|i| Placement::from_indices(2, if i < 3 { &[0] } else { &[1] }).unwrap())
            .collect();
        let refs: Vec<&Placement> = ten.iter().collect();
        let updated = update_probabilities(&[0.5, 0.5], &refs, 1.0);
        assert!((updated[0] - 0.3).abs() < 1e-15);

        let smoothed = update_probabilities(&[0.2, 0.2], &refs, 0.5);
        assert!((smoothed[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identical_elites_pin_probabilities() {
        let s = Placement::from_indices(5, &[1, 3]).unwrap();
        let refs = vec![&s; 4];
        let updated = update_probabilities(&[0.4; 5], &refs, 1.0);
        assert_eq!(updated, vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(CEConfig::default().validate().is_ok());
        assert_eq!(CEConfig::default().elite_count(), 10);
        let bad = CEConfig {
            pop_size: 5,
            elite_frac: 0.1,
            ..CEConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CEConfig {
            smoothing: 0.0,
            ..CEConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dominant_node_is_selected() {
        let nodes = (0..6)
            .map(|id| TrafficNode {
                id,
                x: id as f64,
                y: (id * id) as f64,
                region: id % 2,
                flow: if id == 4 { 1000.0 } else { 0.0 },
            })
            .collect();
        let net = TrafficNetwork::new(nodes, None, None, None, CoordSystem::Planar).unwrap();
        let params = PlanningParams {
            budget: 1,
            ..PlanningParams::default()
        };
        let eval = Evaluator::new(&net, None, &params, EvalOptions::default()).unwrap();
        let w = Weights::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let out = solve(&eval, &w, &CEConfig::default()).unwrap();
        assert_eq!(out.best.selected().collect::<Vec<_>>(), vec![4]);
        assert_eq!(out.breakdown.gamma, 0.0);
    }

    #[test]
    fn runs_are_deterministic_and_disciplined() {
        let net = synthesize_network(25, 4, 8).unwrap();
        let params = PlanningParams {
            budget: 5,
            ..PlanningParams::default()
        };
        let eval = Evaluator::new(&net, None, &params, EvalOptions::default()).unwrap();
        let cfg = CEConfig {
            seed: 77,
            ..CEConfig::default()
        };
        let mut sampled_ok = true;
        let first = solve_observed(&eval, &Weights::baseline(), &cfg, &mut |view: &IterationView<'_>| {
            sampled_ok &= view.population.iter().all(|s| s.count() <= 5);
        })
        .unwrap();
        let second = solve(&eval, &Weights::baseline(), &cfg).unwrap();
        assert!(sampled_ok);
        assert_eq!(first, second);
        assert!(first.best.count() <= 5 && first.best.count() >= 1);
        assert!(first.trace.len() <= cfg.max_iters);
        let incumbents: Vec<f64> = first
            .trace
            .records
            .iter()
            .filter_map(|r| r.incumbent_gamma)
            .collect();
        assert!(incumbents.windows(2).all(|w| w[1] <= w[0]));
        for r in &first.trace.records {
            assert!(r.probs.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(r.gamma_ada >= r.pop_min);
        }
        assert_eq!(first.breakdown.gamma, *incumbents.last().unwrap());
    }

    #[test]
    fn all_empty_sampling_is_reported() {
        let net = synthesize_network(6, 2, 1).unwrap();
        let params = PlanningParams {
            budget: 2,
            ..PlanningParams::default()
        };
        let eval = Evaluator::new(&net, None, &params, EvalOptions::default()).unwrap();
        let cfg = CEConfig {
            p_init: Some(0.0),
            max_iters: 3,
            ..CEConfig::default()
        };
        assert!(solve(&eval, &Weights::baseline(), &cfg).is_err());
    }
}
