//! Experiment config files: a JSON object deep-merged over a named preset.
//!
//! ```json
//! { "preset": "desk", "seed": 3, "finetune": { "learning_rate": 0.0005 } }
//! ```
//!
//! `preset` defaults to `desk`. Every other key overrides the preset value at
//! the same path; unknown keys are rejected. A run manifest is also accepted
//! and resolves to the config it records.

use std::path::Path;

use serde_json::{Map, Value};
use specap_core::hash::sha256_hex;
use specap_core::training::ExperimentConfig;

use crate::error::{CliError, Result};

pub const DEFAULT_PRESET: &str = "desk";

/// Recursively overlays `overlay` onto `base`; objects merge key by key and
/// every other value replaces the base value.
pub fn deep_merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn is_manifest(obj: &Map<String, Value>) -> bool {
    obj.contains_key("command") && obj.get("config").is_some_and(Value::is_object)
}

pub fn resolve(raw: Value) -> Result<ExperimentConfig> {
    let Value::Object(mut obj) = raw else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };
    if is_manifest(&obj) {
        return resolve(obj.remove("config").unwrap_or_default());
    }
    let preset = match obj.remove("preset") {
        None => DEFAULT_PRESET.to_string(),
        Some(Value::String(s)) => s,
        Some(other) => return Err(CliError::Usage(format!("preset must be a string, got {other}"))),
    };
    let base_cfg = ExperimentConfig::preset(&preset)?;
    let mut merged = serde_json::to_value(&base_cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    deep_merge(&mut merged, Value::Object(obj));
    let cfg: ExperimentConfig =
        serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    resolve(raw)
}

/// SHA-256 of the canonical JSON encoding.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_object_is_the_desk_preset() {
        assert_eq!(resolve(json!({})).unwrap(), ExperimentConfig::preset("desk").unwrap());
    }

    #[test]
    fn nested_override_keeps_siblings() {
        let cfg = resolve(json!({"preset": "paper-scale", "finetune": {"patience": 2}, "world": {"num_images": 60}})).unwrap();
        let base = ExperimentConfig::preset("paper-scale").unwrap();
        assert_eq!(cfg.finetune.patience, 2);
        assert_eq!(cfg.finetune.learning_rate, base.finetune.learning_rate);
        assert_eq!(cfg.world.num_images, 60);
        assert_eq!(cfg.world.regions, base.world.regions);
    }

    #[test]
    fn rejects_unknown_keys_and_invalid_values() {
        assert!(matches!(resolve(json!({"mle": {"lr": 1.0}})), Err(CliError::Usage(_))));
        assert!(matches!(resolve(json!({"preset": "giant"})), Err(CliError::Usage(_))));
        assert!(matches!(resolve(json!({"nlu": {"batch_size": 0}})), Err(CliError::Usage(_))));
        assert!(matches!(resolve(json!([1])), Err(CliError::Usage(_))));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = resolve(json!({"seed": 4, "finetune": {"learning_rate_non_contrastive": null}})).unwrap();
        assert_eq!(cfg.finetune.learning_rate_non_contrastive, None);
        let again = resolve(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(config_hash(&cfg), config_hash(&again));
        let manifest = json!({"command": "train", "config": serde_json::to_value(&cfg).unwrap()});
        assert_eq!(resolve(manifest).unwrap(), cfg);
    }
}
