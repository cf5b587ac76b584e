use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spotdiff::harness::{self, RenderMode, RunConfig};
use spotdiff::layout::SizePreset;
use spotdiff::mapping::Localization;
use spotdiff::som::ClassTaxonomy;
use spotdiff::Result;

#[derive(Parser)]
#[command(name = "spotdiff", version, about = "Explore outdated maps and measure the changes an agent discovers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize floors, manipulate layouts and write a dataset manifest.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of source floors.
        #[arg(long)]
        floors: Option<usize>,
        /// Alternative layouts per floor.
        #[arg(long)]
        variants: Option<usize>,
        /// World size: desk, small or large.
        #[arg(long)]
        preset: Option<SizePreset>,
        /// Taxonomy JSON; the desk taxonomy by default.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
    },
    /// Run one policy over the episodes of a manifest.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        episode: EpisodeArgs,
        /// Write belief frames every K steps.
        #[arg(long)]
        render: bool,
        #[arg(long, value_name = "K")]
        render_every: Option<usize>,
    },
    /// Run the strategy x localization matrix and summarize it.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        episode: EpisodeArgs,
        /// Comma-separated strategies, in table order.
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<String>>,
        /// Comma-separated localization modes.
        #[arg(long, value_delimiter = ',')]
        localizations: Option<Vec<Localization>>,
    },
    /// Render map files to a PPM image.
    Render {
        /// `map` for one map, `diff` for prior, truth and an optional belief map.
        #[arg(long, default_value = "diff")]
        mode: RenderMode,
        /// Taxonomy JSON used to collapse the maps.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long, default_value_t = spotdiff::som::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        maps: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Episode budget T.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// random, frontier, coverage, diff or combined.
    #[arg(long)]
    policy: Option<String>,
    /// oracle or noisy.
    #[arg(long)]
    localization: Option<Localization>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Use only the first N episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(b) = self.budget {
            cfg.budget = Some(b);
        }
        Ok(cfg)
    }
}

impl EpisodeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
        }
        if let Some(p) = &self.policy {
            cfg.policy = p.clone();
        }
        if let Some(l) = self.localization {
            cfg.localization = l;
        }
        if let Some(b) = self.beta1 {
            cfg.beta1 = b;
        }
        if let Some(b) = self.beta2 {
            cfg.beta2 = b;
        }
        if let Some(n) = self.episodes {
            cfg.episodes = Some(n);
        }
        if let Some(n) = self.workers {
            cfg.workers = Some(n);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            common,
            floors,
            variants,
            preset,
            taxonomy,
        } => {
            let mut cfg = common.config()?;
            if let Some(f) = floors {
                cfg.dataset.floors = f;
            }
            if let Some(v) = variants {
                cfg.dataset.variants_per_map = v;
            }
            if let Some(p) = preset {
                cfg.dataset.preset = p;
            }
            if let Some(b) = cfg.budget {
                cfg.dataset.budget_t = b;
            }
            if taxonomy.is_some() {
                cfg.taxonomy = taxonomy;
            }
            let episodes = harness::cmd_generate(&cfg)?;
            println!("wrote {} episodes to {}", episodes.len(), cfg.out.display());
        }
        Command::Run {
            common,
            episode,
            render,
            render_every,
        } => {
            let mut cfg = common.config()?;
            episode.apply(&mut cfg);
            cfg.render |= render;
            if let Some(k) = render_every {
                cfg.render_every = k;
            }
            let outcome = harness::cmd_run(&cfg)?;
            for r in &outcome.reports {
                println!(
                    "{} {} {} seen {:.1}% acc {:.3} iou {:.3}",
                    r.episode_id, r.strategy, r.localization, r.metrics.seen_pct, r.metrics.acc, r.metrics.iou
                );
            }
            if !outcome.failures.is_empty() {
                eprintln!("{} episode(s) failed; see {}", outcome.failures.len(), harness::FAILURES_JSON);
            }
        }
        Command::Bench {
            common,
            episode,
            policies,
            localizations,
        } => {
            let mut cfg = common.config()?;
            episode.apply(&mut cfg);
            if let Some(p) = policies {
                cfg.bench_policies = p;
            }
            if let Some(l) = localizations {
                cfg.bench_localizations = l;
            }
            let summary = harness::cmd_bench(&cfg)?;
            print!("{}", harness::format_table(&summary));
            if !summary.failures.is_empty() {
                eprintln!("{} run(s) failed; see {}", summary.failures.len(), harness::BENCH_JSON);
            }
        }
        Command::Render {
            mode,
            taxonomy,
            threshold,
            out,
            maps,
        } => {
            let taxonomy = match taxonomy {
                Some(p) => ClassTaxonomy::load(p)?,
                None => ClassTaxonomy::desk(),
            };
            harness::cmd_render(&maps, &taxonomy, mode, threshold, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
