use std::fs::{self, File};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use cine_core::agent::{run_training, Checkpoint, RewardMode, StepLog, TrainConfig};
use cine_core::harness::{
    behavioral_probes, emit_table, evaluate, probe_scenes, EvalConfig, Policy, RunDir,
};
use cine_core::world::{generate, load_bundle, save_world, WorldGenConfig, WorldKind};
use cine_hitl::{spawn_server, HumanRater, RatingDesk};
use serde::{Deserialize, Serialize};

use crate::{EvalArgs, GenWorldArgs, ProbeArgs, TrainArgs};

/// Everything needed to reproduce a run; written as `config.json`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub world: String,
    pub route: String,
    pub reward: String,
    pub eval_routes: Vec<String>,
    pub eval_episodes: u32,
    pub world_gen: WorldGenConfig,
    pub train: TrainConfig,
}

fn read_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => serde_json::from_slice(
            &fs::read(p).with_context(|| format!("reading {}", p.display()))?,
        )
        .with_context(|| format!("parsing {}", p.display()))?,
        None => RunConfig::default(),
    };
    if cfg.eval_episodes == 0 {
        cfg.eval_episodes = EvalConfig::default().episodes;
    }
    cfg.world_gen.validate()?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs, human: bool) -> anyhow::Result<()> {
    let mut cfg = read_config(args.config.as_deref())?;
    cfg.world = args.world.clone();
    cfg.route = args.route.clone();
    let mode: RewardMode = if human { "human" } else { args.reward.as_str() }.parse()?;
    cfg.reward = mode.name().into();
    if let Some(n) = args.episodes {
        cfg.train.episodes = n;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(n) = args.eval_episodes {
        cfg.eval_episodes = n;
    }
    if !args.eval_routes.is_empty() {
        cfg.eval_routes = args.eval_routes.clone();
    }
    if cfg.eval_routes.is_empty() {
        cfg.eval_routes = vec![cfg.route.clone()];
    }
    cfg.train.validate()?;

    let bundle = load_bundle(&cfg.world, &cfg.route, &cfg.world_gen)?;
    let dir = RunDir::create(&args.out)?;
    dir.write_config(&cfg)?;
    let mut log = dir.episode_log()?;
    let mut on_step = |l: &StepLog| log.append(l);

    let outcome = if mode == RewardMode::Human {
        let ratings = File::create(dir.root().join("ratings.jsonl"))?;
        let timeout = Duration::from_secs(args.rating_timeout);
        let desk = Arc::new(RatingDesk::new(Some(timeout)).with_log_file(ratings));
        let server = spawn_server(desk.clone(), args.addr()?, args.ui_dir.clone())?;
        eprintln!("rating service at {}", server.url());
        let mut rater = HumanRater::new(desk.clone());
        let out = run_training(&bundle, &cfg.train, mode, Some(&mut rater), Some(&mut on_step));
        desk.finish();
        server.stop();
        out?
    } else {
        run_training(&bundle, &cfg.train, mode, None, Some(&mut on_step))?
    };
    log.flush()?;
    dir.write_checkpoint(&outcome.checkpoint)?;
    dir.write_curve(&outcome.curve())?;

    let trained = Policy::Trained(Box::new(outcome.checkpoint));
    let eval_cfg = EvalConfig {
        episodes: cfg.eval_episodes,
        seed: cfg.train.seed,
        env: cfg.train.env.clone(),
    };
    let mut reports = Vec::new();
    for route in &cfg.eval_routes {
        let b = load_bundle(&cfg.world, route, &cfg.world_gen)?;
        for policy in [&trained, &Policy::Random, &Policy::BackOnly] {
            reports.push(evaluate(policy, &b, &eval_cfg)?);
        }
    }
    let table = emit_table(&reports)?;
    dir.write_table(&table)?;
    print!("{}", table.to_text());
    Ok(())
}

fn load_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let cfg = read_config(args.config.as_deref())?;
    let ck = load_checkpoint(&args.checkpoint)?;
    let world = args.world.clone().unwrap_or_else(|| ck.info.world.clone());
    let routes = if args.routes.is_empty() {
        vec![ck.info.route.clone()]
    } else {
        args.routes.clone()
    };
    let mut policies = vec![Policy::Trained(Box::new(ck))];
    for b in args.baselines.iter().filter(|b| !b.is_empty()) {
        policies.push(Policy::baseline(b)?);
    }
    let eval_cfg = EvalConfig {
        episodes: args.episodes,
        seed: args.seed,
        env: cfg.train.env.clone(),
    };
    let mut reports = Vec::new();
    for route in &routes {
        let bundle = load_bundle(&world, route, &cfg.world_gen)?;
        for p in &policies {
            reports.push(evaluate(p, &bundle, &eval_cfg)?);
        }
    }
    let table = emit_table(&reports)?;
    if let Some(out) = &args.out {
        let dir = RunDir::with_log_dir(out, out)?;
        dir.write_table(&table)?;
        fs::write(out.join("eval.json"), serde_json::to_vec_pretty(&reports)?)?;
    }
    print!("{}", table.to_text());
    Ok(())
}

pub fn gen_world(args: &GenWorldArgs) -> anyhow::Result<()> {
    let cfg = read_config(args.config.as_deref())?;
    let kind: WorldKind = args.kind.parse()?;
    let world = generate(kind, args.seed, &cfg.world_gen)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_world(&world.map, &world.track, &args.out)?;
    println!(
        "{} {}x{} cells, route {:.1} m",
        args.out.display(),
        world.map.width(),
        world.map.height(),
        world.track.length()
    );
    Ok(())
}

pub fn probe(args: &ProbeArgs) -> anyhow::Result<()> {
    let cfg = read_config(args.config.as_deref())?;
    let policy = Policy::Trained(Box::new(load_checkpoint(&args.checkpoint)?));
    let scenes = probe_scenes(&cfg.train.env, &cfg.world_gen)?;
    let report = behavioral_probes(&policy, &scenes, &cfg.train.env, args.seed)?;
    for r in &report.results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_vec_pretty(&report)?)?;
    }
    if !report.all_passed() {
        bail!("{} of {} probes failed", report.results.iter().filter(|r| !r.passed).count(), report.results.len());
    }
    Ok(())
}
