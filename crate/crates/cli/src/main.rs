//! `cine-rl`: train, evaluate and probe shot-selection policies.

mod run;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cine-rl", version, about = "Shot selection for an aerial camera drone")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and evaluate it against baselines.
    Train(TrainArgs),
    /// Train with rewards from the rating service.
    Serve(TrainArgs),
    /// Evaluate a checkpoint and baselines on one or more routes.
    Eval(EvalArgs),
    /// Generate a world and save it as PGM plus JSON sidecar.
    GenWorld(GenWorldArgs),
    /// Run the behavioral probe suite on a checkpoint.
    Probe(ProbeArgs),
}

#[derive(Args, Clone)]
pub struct TrainArgs {
    /// blockworld, bigmap:<blocks|pillars|mountains> or a .pgm path.
    #[arg(long, default_value = "blockworld")]
    pub world: String,
    #[arg(long, default_value = "train")]
    pub route: String,
    #[arg(long)]
    pub episodes: Option<u32>,
    /// handcrafted or human.
    #[arg(long, default_value = "handcrafted")]
    pub reward: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Run config JSON (same layout as the config.json a run writes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Routes of the same world to evaluate on; defaults to the training route.
    #[arg(long, value_delimiter = ',')]
    pub eval_routes: Vec<String>,
    #[arg(long)]
    pub eval_episodes: Option<u32>,
    /// Rating service address in human mode.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Seconds before an unrated step pauses training.
    #[arg(long, default_value_t = 120)]
    pub rating_timeout: u64,
    /// Static files of the rating UI.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

impl TrainArgs {
    fn addr(&self) -> anyhow::Result<SocketAddr> {
        Ok(format!("{}:{}", self.host, self.port).parse()?)
    }
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the world the checkpoint was trained on.
    #[arg(long)]
    pub world: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub routes: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub episodes: u32,
    #[arg(long, value_delimiter = ',', default_value = "random,back")]
    pub baselines: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenWorldArgs {
    /// blockworld or bigmap:<blocks|pillars|mountains>.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Writes the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Train(args) => run::train(&args, false),
        Command::Serve(args) => run::train(&args, true),
        Command::Eval(args) => run::eval(&args),
        Command::GenWorld(args) => run::gen_world(&args),
        Command::Probe(args) => run::probe(&args),
    }
}
