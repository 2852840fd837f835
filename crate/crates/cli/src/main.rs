//! `transim`: score segment pairs, run paraphrase-identification benchmarks
//! and meta-evaluate measures against human judgments.

mod backends;
mod bench;
mod config;
mod measures;
mod metaeval;
mod output;
mod score;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{DirectionArg, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "transim", version, about = "Translation-based paraphrastic similarity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score pairs from a JSONL file ({id, text_a, text_b, lang_a, lang_b}).
    Score {
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tune, evaluate and significance-test measures on labelled datasets.
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Correlate measures with human adequacy judgments.
    Metaeval {
        /// Judged-sample JSONL; overrides `metaeval.judgments` in the config.
        input: Option<PathBuf>,
        /// Rating criteria averaged into adequacy.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<String>>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `toy` or the base URL of a model server.
    #[arg(long)]
    backend: Option<String>,
    /// Directory of the persistent translation/score cache.
    #[arg(long, env = "TRANSIM_CACHE_DIR")]
    cache: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap repetitions.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated measure ids.
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<String>>,
    #[arg(long)]
    normalize: Option<OnOff>,
    #[arg(long)]
    direction: Option<DirectionArg>,
    #[arg(long)]
    pivot_lang: Option<String>,
    #[arg(long)]
    tgt_lang: Option<String>,
    /// Language of segments without a language tag.
    #[arg(long)]
    lang: Option<String>,
    /// Extra measure variants (`normalize`).
    #[arg(long, value_delimiter = ',')]
    ablation: Option<Vec<String>>,
    /// Output file (score) or directory (benchmark, metaeval).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn load_config(&self) -> transim::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.backend {
            c.backend.endpoint = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.reps {
            c.repetitions = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = &self.measures {
            c.measures = v.clone();
        }
        if let Some(v) = self.normalize {
            c.nmt.normalize = matches!(v, OnOff::On);
        }
        if let Some(v) = self.direction {
            c.nmt.direction = v;
        }
        if let Some(v) = &self.pivot_lang {
            c.nmt.pivot_lang = Some(v.clone());
        }
        if let Some(v) = &self.tgt_lang {
            c.nmt.target_lang = Some(v.clone());
        }
        if let Some(v) = &self.lang {
            c.default_lang = Some(v.clone());
        }
        if let Some(v) = &self.ablation {
            c.ablation = v.clone();
        }
        c.validate()?;
        Ok(c)
    }

    fn init_threads(&self) {
        if let Some(jobs) = self.jobs {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score { input, common } => {
            common.init_threads();
            let config = common.load_config()?;
            score::run(&config, &input, common.cache.as_deref(), common.out.as_deref())
        }
        Command::Benchmark { common } => {
            common.init_threads();
            let config = common.load_config()?;
            bench::run(
                &config,
                common.config.as_deref(),
                common.cache.as_deref(),
                common.out.as_deref(),
            )
        }
        Command::Metaeval {
            input,
            criteria,
            common,
        } => {
            common.init_threads();
            let mut config = common.load_config()?;
            if let Some(c) = criteria {
                config.metaeval.criteria = c;
            }
            let base = if input.is_some() {
                None
            } else {
                common.config.as_deref()
            };
            let input = input.or_else(|| config.metaeval.judgments.clone()).ok_or_else(|| {
                transim::Error::Config("no judgments file given (argument or metaeval.judgments)".into())
            })?;
            let input = config::resolve(base, &input);
            metaeval::run(&config, &input, common.cache.as_deref(), common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = output::classify(&e);
            eprintln!(
                "{}",
                serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } })
            );
            ExitCode::from(code)
        }
    }
}
