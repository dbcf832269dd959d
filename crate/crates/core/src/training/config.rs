use alloc::format;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::captioner::{CaptionerConfig, SampleMode, TrainableSet};
use crate::retriever::{LossKind, RetrieverConfig};
use crate::synthworld::WorldConfig;
use crate::{Error, Result};

pub const PRESETS: [&str; 2] = ["desk", "paper-scale"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Mle,
    Nlu,
    Finetune,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Mle => "mle",
            Phase::Nlu => "nlu",
            Phase::Finetune => "finetune",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Phase::Mle, Phase::Nlu, Phase::Finetune]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown phase {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub phase: Phase,
    pub loss_kind: LossKind,
    pub learning_rate: f64,
    /// Overrides `learning_rate` for the DP and Cos losses when set.
    pub learning_rate_non_contrastive: Option<f64>,
    pub batch_size: usize,
    pub max_iterations: u64,
    pub eval_interval: u64,
    pub patience: usize,
    pub seed: u64,
    pub sample_mode: SampleMode,
    pub temperature: f64,
    pub trainable: TrainableSet,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl TrainConfig {
    pub fn desk(phase: Phase) -> Self {
        let (learning_rate, max_iterations, eval_interval, patience) = match phase {
            Phase::Mle => (5e-3, 3_000, 100, 30),
            Phase::Nlu => (1e-3, 1_000, 100, 5),
            Phase::Finetune => (1e-3, 600, 25, 8),
        };
        let finetune = phase == Phase::Finetune;
        Self {
            phase,
            loss_kind: LossKind::Ccos,
            learning_rate,
            learning_rate_non_contrastive: finetune.then_some(5e-4),
            batch_size: 16,
            max_iterations,
            eval_interval,
            patience,
            seed: 0,
            sample_mode: SampleMode::Sample,
            temperature: 1.0,
            trainable: TrainableSet::Full,
            clip_norm: finetune.then_some(5.0),
        }
    }

    /// Learning rates and batch size of the original COCO-scale setup.
    pub fn paper_scale(phase: Phase) -> Self {
        let mut c = Self::desk(phase);
        c.batch_size = 2;
        c.max_iterations = 250_000;
        c.eval_interval = 1000;
        c.patience = 5;
        if phase == Phase::Finetune {
            c.learning_rate = 1e-6;
            c.learning_rate_non_contrastive = Some(1e-7);
        }
        c
    }

    pub fn effective_lr(&self) -> f64 {
        match self.learning_rate_non_contrastive {
            Some(lr) if self.phase == Phase::Finetune && !self.loss_kind.is_contrastive() => lr,
            _ => self.learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Config(m));
        let lr_ok = |x: f64| x > 0.0 && x.is_finite();
        if !lr_ok(self.learning_rate) || !self.learning_rate_non_contrastive.is_none_or(lr_ok) {
            return bad(format!("{} learning rate must be positive and finite", self.phase));
        }
        if self.batch_size == 0 {
            return bad(format!("{} batch_size must be at least 1", self.phase));
        }
        if self.patience == 0 {
            return bad(format!("{} patience must be at least 1", self.phase));
        }
        if self.eval_interval == 0 {
            return bad(format!("{} eval_interval must be at least 1", self.phase));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("{} temperature must be positive", self.phase));
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad(format!("{} clip_norm must be positive", self.phase));
        }
        if self.phase == Phase::Finetune && self.sample_mode == SampleMode::Greedy {
            return bad("fine-tuning needs a sampling mode, not greedy".into());
        }
        Ok(())
    }
}

/// Everything one experiment depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub world: WorldConfig,
    pub captioner: CaptionerConfig,
    pub retriever: RetrieverConfig,
    pub mle: TrainConfig,
    pub nlu: TrainConfig,
    pub finetune: TrainConfig,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let train = match name {
            "desk" => TrainConfig::desk,
            "paper-scale" => TrainConfig::paper_scale,
            _ => return Err(Error::Config(format!("unknown preset {name:?}; known: {PRESETS:?}"))),
        };
        Ok(Self {
            seed: 0,
            world: WorldConfig::default(),
            captioner: CaptionerConfig::default(),
            retriever: RetrieverConfig::default(),
            mle: train(Phase::Mle),
            nlu: train(Phase::Nlu),
            finetune: train(Phase::Finetune),
        })
    }

    pub fn phase(&self, phase: Phase) -> &TrainConfig {
        match phase {
            Phase::Mle => &self.mle,
            Phase::Nlu => &self.nlu,
            Phase::Finetune => &self.finetune,
        }
    }

    /// Sets the experiment seed and every phase seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.mle.seed = seed;
        self.nlu.seed = seed;
        self.finetune.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        for (expected, c) in [(Phase::Mle, &self.mle), (Phase::Nlu, &self.nlu), (Phase::Finetune, &self.finetune)] {
            if c.phase != expected {
                return Err(Error::Config(format!("{expected} section declares phase {}", c.phase)));
            }
            c.validate()?;
        }
        if !(self.retriever.margin > 0.0) {
            return Err(Error::Config("retriever margin must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in PRESETS {
            ExperimentConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("huge").is_err());
    }

    #[test]
    fn paper_scale_lr_by_loss() {
        let mut c = TrainConfig::paper_scale(Phase::Finetune);
        assert_eq!(c.effective_lr(), 1e-6);
        c.loss_kind = LossKind::Cos;
        assert_eq!(c.effective_lr(), 1e-7);
        let mut d = TrainConfig::desk(Phase::Finetune);
        assert_eq!(d.effective_lr(), 1e-3);
        d.loss_kind = LossKind::Dp;
        assert_eq!(d.effective_lr(), 5e-4);
    }

    #[test]
    fn rejects_bad_values() {
        let base = TrainConfig::desk(Phase::Mle);
        let cases: [fn(&mut TrainConfig); 5] = [
            |c| c.learning_rate = 0.0,
            |c| c.batch_size = 0,
            |c| c.patience = 0,
            |c| c.temperature = -1.0,
            |c| c.learning_rate_non_contrastive = Some(f64::NAN),
        ];
        for f in cases {
            let mut c = base.clone();
            f(&mut c);
            assert!(c.validate().is_err());
        }
        let mut c = TrainConfig::desk(Phase::Finetune);
        c.sample_mode = SampleMode::Greedy;
        assert!(c.validate().is_err());
    }
}
