use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use specap_core::captioner::CaptionerModel;
use specap_core::metrics::MetricsReport;
use specap_core::retriever::{NeighborTable, RetrieverModel};
use specap_core::synthworld::{generate_dataset, Dataset, Split};
use specap_core::training::{
    evaluate_model, finetune_run, mle_run, nlu_run, ExperimentConfig, Objective, Phase, RunControl, RunEvent, RunState,
    RunStatus,
};
use specap_core::verify::{run_suite, Suite};

use crate::checkpoint::{resolve_checkpoint, Checkpoint, Lineage, CKPT_BEST, CKPT_LAST};
use crate::cli::{run_root, EvaluateArgs, GenDataArgs, ReportDiffArgs, TrainArgs, VerifyArgs};
use crate::config::{config_hash, load_config};
use crate::error::{CliError, Result};
use crate::files::{
    dataset_hash, file_sha256, is_non_empty_dir, load_dataset, read_json, save_dataset, write_atomic, write_json,
    write_jsonl, DATASET_FILES,
};
use crate::manifest::{RunManifest, MANIFEST};
use crate::report_diff::report_diff;

pub const CONFIG_JSON: &str = "config.json";
pub const RUNLOG_CSV: &str = "runlog.csv";
pub const REPORT_JSON: &str = "report.json";
pub const CAPTIONS_OUT: &str = "captions_out.jsonl";
pub const NEIGHBORS_JSON: &str = "neighbors.json";

pub fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Val => "val",
        Split::Test => "test",
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

fn print_config(cfg: &ExperimentConfig) {
    println!("resolved config:\n{}", serde_json::to_string_pretty(cfg).expect("config serializes"));
}

fn load_cli_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let cfg = load_config(path)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

pub fn gen_data(args: &GenDataArgs) -> Result<PathBuf> {
    let mut manifest = RunManifest::start("gen-data");
    let cfg = load_cli_config(&args.config, args.seed)?;
    let hash = config_hash(&cfg);
    print_config(&cfg);
    let out = args.out.clone().unwrap_or_else(|| run_root().join(format!("data-seed{}", cfg.seed)));
    if is_non_empty_dir(&out) && !args.force {
        return Err(CliError::Precondition(format!(
            "output directory {} is not empty (pass --force to overwrite)",
            out.display()
        )));
    }
    create_dir(&out)?;
    manifest.input(&args.config)?;
    let ds = generate_dataset(&cfg.world, cfg.seed)?;
    save_dataset(&out, &ds)?;
    write_json(&out.join(CONFIG_JSON), &cfg)?;
    let mut outputs: Vec<&str> = DATASET_FILES.to_vec();
    outputs.push(CONFIG_JSON);
    manifest.with_config(&cfg, &hash).finish(&out, &outputs, "complete")?;
    println!(
        "wrote {} images ({} train, {} val, {} test, vocabulary {}) to {}",
        ds.num_images(),
        ds.splits.train.len(),
        ds.splits.val.len(),
        ds.splits.test.len(),
        ds.vocab.len(),
        out.display()
    );
    Ok(out)
}

/// A dataset directory together with its fingerprints.
struct LoadedData {
    ds: Dataset,
    hash: String,
    manifest: RunManifest,
}

fn load_data(dir: &Path) -> Result<LoadedData> {
    if !dir.join(MANIFEST).is_file() {
        return Err(CliError::Precondition(format!(
            "{} is not a dataset directory (no {MANIFEST}; create one with gen-data)",
            dir.display()
        )));
    }
    let manifest = RunManifest::load(dir)?;
    let ds = load_dataset(dir)?;
    Ok(LoadedData { hash: dataset_hash(dir)?, ds, manifest })
}

fn check_lineage(what: &str, path: &Path, c: &Checkpoint, data: &LoadedData) -> Result<()> {
    if c.lineage.vocab_fingerprint != data.ds.vocab.fingerprint() {
        return Err(CliError::Precondition(format!(
            "{what} {} was trained with a different vocabulary than the dataset",
            path.display()
        )));
    }
    if c.lineage.data_hash != data.hash {
        return Err(CliError::Precondition(format!(
            "{what} {} was trained on a different dataset (data hash {} vs {})",
            path.display(),
            c.lineage.data_hash,
            data.hash
        )));
    }
    Ok(())
}

fn load_upstream(what: &str, flag: &str, path: Option<&PathBuf>, data: &LoadedData) -> Result<(PathBuf, Checkpoint)> {
    let path = path.ok_or_else(|| {
        CliError::Precondition(format!("fine-tuning needs a pretrained {what} checkpoint; pass {flag}"))
    })?;
    let file = resolve_checkpoint(path);
    if !file.is_file() {
        return Err(CliError::Precondition(format!("{what} checkpoint {} does not exist", file.display())));
    }
    let c = Checkpoint::load(&file)?;
    check_lineage(what, &file, &c, data)?;
    Ok((file, c))
}

#[derive(Serialize)]
struct NeighborFile<'a> {
    config_hash: &'a str,
    table: &'a NeighborTable,
}

#[derive(Serialize)]
struct CaptionOut<'a> {
    image_id: usize,
    caption: &'a str,
}

/// Outcome of one `train` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub out: PathBuf,
    pub status: String,
    pub iteration: u64,
}

struct TrainCtx<'a> {
    out: &'a Path,
    lineage: Lineage,
    cfg: &'a ExperimentConfig,
    pause_after: Option<u64>,
}

fn drive<O: Objective>(mut state: RunState<O>, data: &LoadedData, ctx: &TrainCtx<'_>) -> Result<(RunState<O>, String)> {
    let mut observer = |e: RunEvent<'_>| {
        if let RunEvent::Eval(r) = e {
            eprintln!("[{}] iteration {:>6} validation score {:.4}", O::PHASE, r.iteration, r.score);
        }
    };
    let mut control = RunControl {
        stop_after: ctx.pause_after,
        observer: Some(&mut observer),
    };
    let result = state.run(&data.ds, &mut control);
    Checkpoint::from_run(&state, false, &ctx.lineage)?.save(&ctx.out.join(CKPT_LAST))?;
    let status = match result? {
        RunStatus::Finished(r) => format!("finished ({})", serde_json::to_value(r).unwrap_or_default().as_str().unwrap_or("")),
        RunStatus::Paused => "paused".to_string(),
    };
    Checkpoint::from_run(&state, true, &ctx.lineage)?.save(&ctx.out.join(CKPT_BEST))?;
    write_atomic(&ctx.out.join(RUNLOG_CSV), state.log.to_csv().as_bytes())?;
    write_json(&ctx.out.join(CONFIG_JSON), ctx.cfg)?;
    Ok((state, status))
}

fn write_evaluation(out: &Path, captioner: &CaptionerModel, retriever: &RetrieverModel, ds: &Dataset, split: Split) -> Result<MetricsReport> {
    let ev = evaluate_model(captioner, retriever, ds, split)?;
    write_json(&out.join(REPORT_JSON), &ev.report)?;
    let lines: Vec<CaptionOut> =
        ev.captions.iter().map(|c| CaptionOut { image_id: c.image_id, caption: &c.text }).collect();
    write_jsonl(&out.join(CAPTIONS_OUT), &lines)?;
    Ok(ev.report)
}

pub fn train(args: &TrainArgs) -> Result<TrainOutcome> {
    let mut manifest = RunManifest::start("train");
    let mut cfg = load_cli_config(&args.config, args.seed)?;
    if let Some(loss) = args.loss {
        if args.phase != Phase::Finetune {
            return Err(CliError::Usage("--loss only applies to --phase finetune".into()));
        }
        cfg.finetune.loss_kind = loss;
    }
    let hash = config_hash(&cfg);
    print_config(&cfg);
    let data = load_data(&args.data)?;
    if data.manifest.config.as_ref().map(|c| &c.world) != Some(&cfg.world) {
        return Err(CliError::Precondition(format!(
            "dataset {} was generated with a different world config than {}",
            args.data.display(),
            args.config.display()
        )));
    }
    let out = args.out.clone().unwrap_or_else(|| {
        let name = match args.phase {
            Phase::Finetune => format!("finetune-{}-seed{}", cfg.finetune.loss_kind, cfg.seed),
            p => format!("{p}-seed{}", cfg.seed),
        };
        run_root().join(name)
    });
    let resume_from = if args.resume {
        let last = out.join(CKPT_LAST);
        let c = Checkpoint::load(&last)?;
        if c.lineage.config_hash != hash {
            return Err(CliError::Precondition(format!(
                "{} was written under a different config (hash {} vs {hash})",
                last.display(),
                c.lineage.config_hash
            )));
        }
        check_lineage("checkpoint", &last, &c, &data)?;
        Some(c)
    } else {
        if is_non_empty_dir(&out) && !args.force {
            return Err(CliError::Precondition(format!(
                "run directory {} is not empty (pass --resume to continue or --force to start over)",
                out.display()
            )));
        }
        None
    };
    create_dir(&out)?;
    manifest.input(&args.config)?;
    for f in DATASET_FILES {
        manifest.input(&args.data.join(f))?;
    }
    let ctx = TrainCtx {
        out: &out,
        lineage: Lineage {
            config_hash: hash.clone(),
            data_hash: data.hash.clone(),
            vocab_fingerprint: data.ds.vocab.fingerprint(),
        },
        cfg: &cfg,
        pause_after: args.pause_after,
    };
    let mut outputs = vec![CONFIG_JSON, CKPT_BEST, CKPT_LAST, RUNLOG_CSV];
    let (status, iteration) = match args.phase {
        Phase::Mle => {
            let state = match &resume_from {
                Some(c) => c.run_state()?,
                None => mle_run(&cfg, &data.ds)?,
            };
            let (s, status) = drive(state, &data, &ctx)?;
            (status, s.iteration)
        }
        Phase::Nlu => {
            let state = match &resume_from {
                Some(c) => c.run_state()?,
                None => nlu_run(&cfg, &data.ds)?,
            };
            let (s, status) = drive(state, &data, &ctx)?;
            (status, s.iteration)
        }
        Phase::Finetune => {
            let (cap_path, cap) = load_upstream("captioner", "--captioner", args.captioner.as_ref(), &data)?;
            let (ret_path, ret) = load_upstream("retriever", "--retriever", args.retriever.as_ref(), &data)?;
            let ret_hash = file_sha256(&ret_path)?;
            manifest.input(&cap_path)?;
            manifest.input(&ret_path)?;
            let retriever = ret.retriever()?;
            let state = match &resume_from {
                Some(c) => c.run_state()?,
                None => finetune_run(&cfg, cfg.finetune.loss_kind, cap.captioner()?, retriever.clone(), &data.ds)?,
            };
            if state.objective.retriever != retriever {
                return Err(CliError::Precondition(format!(
                    "{} does not hold the retriever this run was started with",
                    ret_path.display()
                )));
            }
            let (s, status) = drive(state, &data, &ctx)?;
            if file_sha256(&ret_path)? != ret_hash {
                return Err(CliError::Runtime(format!("retriever checkpoint {} changed during fine-tuning", ret_path.display())));
            }
            if let Some(table) = &s.objective.neighbors {
                write_json(&out.join(NEIGHBORS_JSON), &NeighborFile { config_hash: &hash, table })?;
                outputs.push(NEIGHBORS_JSON);
            }
            if status != "paused" {
                write_evaluation(&out, &s.best_model(), &s.objective.retriever, &data.ds, Split::Val)?;
                outputs.extend([REPORT_JSON, CAPTIONS_OUT]);
            }
            (status, s.iteration)
        }
    };
    manifest.with_config(&cfg, &hash).finish(&out, &outputs, &status)?;
    println!("{} run {status} at iteration {iteration}; outputs in {}", args.phase, out.display());
    Ok(TrainOutcome { out, status, iteration })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(PathBuf, MetricsReport)> {
    let mut manifest = RunManifest::start("evaluate");
    let data = load_data(&args.data)?;
    let cap_path = resolve_checkpoint(&args.ckpt);
    let ret_path = resolve_checkpoint(&args.retriever);
    let cap = Checkpoint::load(&cap_path)?;
    let ret = Checkpoint::load(&ret_path)?;
    check_lineage("captioner checkpoint", &cap_path, &cap, &data)?;
    check_lineage("retriever checkpoint", &ret_path, &ret, &data)?;
    let out = args.out.clone().unwrap_or_else(|| {
        let run = args.ckpt.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        run_root().join(format!("eval-{run}-{}", split_name(args.split)))
    });
    create_dir(&out)?;
    for p in [&cap_path, &ret_path] {
        manifest.input(p)?;
    }
    for f in DATASET_FILES {
        manifest.input(&args.data.join(f))?;
    }
    let report = write_evaluation(&out, &cap.captioner()?, &ret.retriever()?, &data.ds, args.split)?;
    manifest.seed = data.manifest.seed;
    manifest.finish(&out, &[REPORT_JSON, CAPTIONS_OUT], "complete")?;
    println!(
        "{} split: mean rank {:.2}, R@1 {:.1}, diversity {:.1}, novelty {:.1}, length {:.2}; report in {}",
        split_name(args.split),
        report.mean_rank,
        report.recall(1).unwrap_or(f64::NAN),
        report.diversity_pct,
        report.novelty_pct,
        report.avg_caption_length,
        out.display()
    );
    Ok((out, report))
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let suites: Vec<Suite> = match args.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let mut failed = Vec::new();
    for s in suites {
        let rep = run_suite(s)?;
        println!("{rep}");
        if !rep.passed() {
            failed.push(s.name());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("verification failed: {}", failed.join(", "))))
    }
}

pub fn report_diff_cmd(args: &ReportDiffArgs) -> Result<String> {
    let base: MetricsReport = read_json(&args.base)?;
    let other: MetricsReport = read_json(&args.other)?;
    let table = report_diff(&args.base.display().to_string(), &base, &args.other.display().to_string(), &other);
    print!("{table}");
    Ok(table)
}
