//! Versioned JSON checkpoint container.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use specap_core::captioner::CaptionerModel;
use specap_core::retriever::{LossKind, RetrieverModel};
use specap_core::training::{Objective, Phase, RunState};

use crate::error::{CliError, Result};
use crate::files::{read_json, write_json};

pub const CHECKPOINT_FORMAT: &str = "specap-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const CKPT_BEST: &str = "ckpt-best";
pub const CKPT_LAST: &str = "ckpt-last";

/// What a checkpoint was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub config_hash: String,
    pub data_hash: String,
    pub vocab_fingerprint: String,
}

/// A model plus the complete run state that produced it. `model` holds the
/// best parameters in `ckpt-best` and the latest ones in `ckpt-last`;
/// `run` always holds the latest resumable state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub phase: Phase,
    pub loss_kind: Option<LossKind>,
    pub lineage: Lineage,
    pub iteration: u64,
    pub model_iteration: u64,
    pub params_fingerprint: String,
    pub model: Value,
    pub run: Value,
}

fn ser<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(format!("serialization: {e}")))
}

impl Checkpoint {
    pub fn from_run<O: Objective>(state: &RunState<O>, best: bool, lineage: &Lineage) -> Result<Self> {
        let (model, model_iteration) = match (&state.best, best) {
            (Some(b), true) => (state.best_model(), b.iteration),
            _ => (state.model.clone(), state.iteration),
        };
        Ok(Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            phase: O::PHASE,
            loss_kind: (O::PHASE == Phase::Finetune).then_some(state.config.loss_kind),
            lineage: lineage.clone(),
            iteration: state.iteration,
            model_iteration,
            params_fingerprint: O::params(&model).fingerprint(),
            model: ser(&model)?,
            run: ser(state)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(CliError::Precondition(format!("checkpoint {} does not exist", path.display())));
        }
        let c: Checkpoint = read_json(path)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(CliError::Precondition(format!(
                "{} is a {} v{} file, expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}",
                path.display(),
                c.format,
                c.version
            )));
        }
        Ok(c)
    }

    fn decode<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T> {
        serde_json::from_value(v.clone()).map_err(|e| CliError::Precondition(format!("corrupt checkpoint {what}: {e}")))
    }

    pub fn run_state<O: Objective>(&self) -> Result<RunState<O>> {
        if self.phase != O::PHASE {
            return Err(CliError::Precondition(format!("checkpoint is from phase {}, not {}", self.phase, O::PHASE)));
        }
        Self::decode(&self.run, "run state")
    }

    pub fn captioner(&self) -> Result<CaptionerModel> {
        if self.phase == Phase::Nlu {
            return Err(CliError::Precondition("expected a captioner checkpoint, found a retriever (nlu) checkpoint".into()));
        }
        Self::decode(&self.model, "captioner")
    }

    pub fn retriever(&self) -> Result<RetrieverModel> {
        if self.phase != Phase::Nlu {
            return Err(CliError::Precondition(format!("expected a retriever (nlu) checkpoint, found phase {}", self.phase)));
        }
        Self::decode(&self.model, "retriever")
    }
}

/// A checkpoint path, or a run directory standing for its `ckpt-best`.
pub fn resolve_checkpoint(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(CKPT_BEST)
    } else {
        path.to_path_buf()
    }
}
