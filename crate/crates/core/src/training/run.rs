use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{Phase, TrainConfig};
use super::sampler::BatchSampler;
use crate::autodiff::ParamSet;
use crate::optim::{clip_global_norm, AdamConfig, AdamState, StepOutcome};
use crate::synthworld::{derive_seed, Dataset};
use crate::{Error, Result};

const RUN_STREAM: u64 = 0x7261_6e00;
/// Consecutive non-finite steps tolerated before a skipping run gives up.
const MAX_NONFINITE_STREAK: usize = 20;

pub struct BatchResult {
    pub loss: f64,
    /// Aligned with the model's `ParamSet`; `None` for frozen entries.
    pub grads: Vec<Option<Vec<f64>>>,
}

/// One phase's loss, evaluation and parameter access.
pub trait Objective: Serialize + DeserializeOwned {
    type Model: Clone + Serialize + DeserializeOwned;
    const PHASE: Phase;
    /// Abort the run on a non-finite loss instead of skipping the step.
    const ABORT_ON_NONFINITE: bool;

    fn params(model: &Self::Model) -> &ParamSet;
    fn params_mut(model: &mut Self::Model) -> &mut ParamSet;
    /// The ids the batch sampler draws from.
    fn items(&self, ds: &Dataset) -> Result<Vec<usize>>;
    fn batch(
        &mut self,
        model: &Self::Model,
        ds: &Dataset,
        batch: &[usize],
        config: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<BatchResult>;
    /// Validation metrics; `score` is minimized.
    fn evaluate(&mut self, model: &Self::Model, ds: &Dataset, iteration: u64) -> Result<EvalRecord>;
    /// Checked after every update.
    fn check_invariants(&self) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: u64,
    pub score: f64,
    pub xent: Option<f64>,
    pub mean_rank: Option<f64>,
    pub recall_at_1: Option<f64>,
    pub recall_at_5: Option<f64>,
    pub diversity: Option<f64>,
    pub novelty: Option<f64>,
    pub avg_length: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub steps: Vec<LogRow>,
    pub evals: Vec<EvalRecord>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

impl RunLog {
    pub const CSV_HEADER: &'static str = "iteration,loss,grad_norm,skipped,val_score,val_xent,val_mean_rank,val_recall_1,val_recall_5,val_diversity,val_novelty,val_avg_length";

    /// One line per iteration (iteration 0 carries only the initial
    /// evaluation); evaluation columns are empty between evaluations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let mut evals = self.evals.iter().peekable();
        let emit = |out: &mut String, it: u64, step: Option<&LogRow>, e: Option<&EvalRecord>| {
            let (loss, gn, sk) = match step {
                Some(s) => (format!("{}", s.loss), format!("{}", s.grad_norm), format!("{}", s.skipped as u8)),
                None => Default::default(),
            };
            let cols = match e {
                Some(e) => format!(
                    "{},{},{},{},{},{},{},{}",
                    e.score,
                    opt(e.xent),
                    opt(e.mean_rank),
                    opt(e.recall_at_1),
                    opt(e.recall_at_5),
                    opt(e.diversity),
                    opt(e.novelty),
                    opt(e.avg_length)
                ),
                None => String::from(",,,,,,,"),
            };
            let _ = writeln!(out, "{it},{loss},{gn},{sk},{cols}");
        };
        if let Some(e) = evals.next_if(|e| e.iteration == 0) {
            emit(&mut out, 0, None, Some(e));
        }
        for s in &self.steps {
            let e = evals.next_if(|e| e.iteration == s.iteration);
            emit(&mut out, s.iteration, Some(s), e);
        }
        out
    }

    pub fn losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loss).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestModel {
    pub iteration: u64,
    pub score: f64,
    pub params: ParamSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    EarlyStopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Finished(StopReason),
    Paused,
}

pub enum RunEvent<'a> {
    Step(&'a LogRow),
    Eval(&'a EvalRecord),
}

#[derive(Default)]
pub struct RunControl<'a> {
    /// Pause after this many updates in the current call.
    pub stop_after: Option<u64>,
    pub observer: Option<&'a mut dyn FnMut(RunEvent<'_>)>,
}

impl RunControl<'_> {
    fn notify(&mut self, e: RunEvent<'_>) {
        if let Some(f) = self.observer.as_mut() {
            f(e);
        }
    }
}

/// Complete resumable state of one training run.
#[derive(Serialize, Deserialize)]
#[serde(bound = "O: Objective")]
pub struct RunState<O: Objective> {
    pub config: TrainConfig,
    pub objective: O,
    pub model: O::Model,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
    pub sampler: BatchSampler,
    pub iteration: u64,
    pub log: RunLog,
    pub best: Option<BestModel>,
    pub evals_since_best: usize,
    pub nonfinite_streak: usize,
    pub stop: Option<StopReason>,
}

impl<O: Objective> RunState<O> {
    pub fn new(config: TrainConfig, objective: O, model: O::Model, ds: &Dataset) -> Result<Self> {
        config.validate()?;
        if config.phase != O::PHASE {
            return Err(Error::Config(format!(
                "config is for phase {} but the objective is {}",
                config.phase,
                O::PHASE
            )));
        }
        let sampler = BatchSampler::new(objective.items(ds)?)?;
        let adam = AdamState::new(O::params(&model), AdamConfig::default());
        let rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, RUN_STREAM, O::PHASE as u64));
        Ok(Self {
            config,
            objective,
            model,
            adam,
            rng,
            sampler,
            iteration: 0,
            log: RunLog::default(),
            best: None,
            evals_since_best: 0,
            nonfinite_streak: 0,
            stop: None,
        })
    }

    /// The model with the best-scoring parameters seen so far.
    pub fn best_model(&self) -> O::Model {
        let mut m = self.model.clone();
        if let Some(b) = &self.best {
            *O::params_mut(&mut m) = b.params.clone();
        }
        m
    }

    fn evaluate(&mut self, ds: &Dataset, control: &mut RunControl<'_>) -> Result<()> {
        let rec = self.objective.evaluate(&self.model, ds, self.iteration)?;
        if !rec.score.is_finite() {
            return Err(Error::Diverged {
                iteration: self.iteration,
                detail: format!("validation score {}", rec.score),
            });
        }
        if self.best.as_ref().is_none_or(|b| rec.score < b.score) {
            self.best = Some(BestModel {
                iteration: self.iteration,
                score: rec.score,
                params: O::params(&self.model).clone(),
            });
            self.evals_since_best = 0;
        } else {
            self.evals_since_best += 1;
        }
        control.notify(RunEvent::Eval(&rec));
        self.log.evals.push(rec);
        Ok(())
    }

    /// Trains until a stop condition or until `control.stop_after` updates.
    pub fn run(&mut self, ds: &Dataset, control: &mut RunControl<'_>) -> Result<RunStatus> {
        if let Some(r) = self.stop {
            return Ok(RunStatus::Finished(r));
        }
        if self.log.evals.is_empty() {
            self.evaluate(ds, control)?;
        }
        let mut done = 0u64;
        while self.iteration < self.config.max_iterations {
            if control.stop_after.is_some_and(|n| done >= n) {
                return Ok(RunStatus::Paused);
            }
            let batch = self.sampler.next_batch(&mut self.rng, self.config.batch_size);
            let out = self
                .objective
                .batch(&self.model, ds, &batch, &self.config, &mut self.rng)?;
            let mut grads = out.grads;
            let finite = out.loss.is_finite();
            if !finite && O::ABORT_ON_NONFINITE {
                return Err(Error::Diverged {
                    iteration: self.iteration + 1,
                    detail: format!("{} loss {}", O::PHASE, out.loss),
                });
            }
            let grad_norm = match self.config.clip_norm {
                Some(c) => clip_global_norm(&mut grads, c),
                None => clip_global_norm(&mut grads, f64::INFINITY),
            };
            let skipped = !finite
                || self.adam.step(O::params_mut(&mut self.model), &grads, self.config.effective_lr())?
                    == StepOutcome::SkippedNonFinite;
            self.nonfinite_streak = if skipped { self.nonfinite_streak + 1 } else { 0 };
            if self.nonfinite_streak > MAX_NONFINITE_STREAK {
                return Err(Error::Diverged {
                    iteration: self.iteration + 1,
                    detail: format!("{} consecutive non-finite steps", self.nonfinite_streak),
                });
            }
            self.objective.check_invariants()?;
            self.iteration += 1;
            done += 1;
            let row = LogRow {
                iteration: self.iteration,
                loss: out.loss,
                grad_norm,
                skipped,
            };
            control.notify(RunEvent::Step(&row));
            self.log.steps.push(row);
            if self.iteration % self.config.eval_interval == 0 || self.iteration == self.config.max_iterations {
                self.evaluate(ds, control)?;
                if self.evals_since_best >= self.config.patience {
                    self.stop = Some(StopReason::EarlyStopped);
                    return Ok(RunStatus::Finished(StopReason::EarlyStopped));
                }
            }
        }
        self.stop = Some(StopReason::MaxIterations);
        Ok(RunStatus::Finished(StopReason::MaxIterations))
    }
}

/// Gradients of the named variables in `params` order; entries whose
/// variable carries no gradient come back as `None`.
pub(crate) fn collect_grads(g: &crate::autodiff::Graph, params: &ParamSet, named: &[(&str, crate::autodiff::Var)]) -> Vec<Option<Vec<f64>>> {
    params
        .iter()
        .map(|(name, _)| {
            named
                .iter()
                .find(|(n, _)| *n == name)
                .and_then(|&(_, v)| g.grad(v))
                .map(|gr| gr.to_vec())
        })
        .collect()
}
