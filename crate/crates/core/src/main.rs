use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperim::cli::{self, RunConfig, TrainPaths};
use hyperim::eval::DEFAULT_KS;
use hyperim::Result;

#[derive(Parser)]
#[command(
    name = "hyperim",
    version,
    about = "Hyperbolic interaction model for hierarchical multi-label classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::read(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(self.overrides.iter().map(String::as_str))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
            cfg.label_epochs = e;
            cfg.glove_epochs = e;
            cfg.hypernym_epochs = e;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Embed a label hierarchy in a product of Poincaré balls.
    EmbedLabels {
        hierarchy: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train hyperbolic GloVe word vectors.
    TrainWords {
        corpus: PathBuf,
        #[arg(long)]
        hypernyms: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the classifier and write a checkpoint.
    Train {
        dataset: PathBuf,
        hierarchy: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// hyperbolic or euclidean
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        label_embeddings: Option<PathBuf>,
        #[arg(long)]
        word_embeddings: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Report P@k and nDCG@k of a checkpoint on a corpus.
    Evaluate {
        checkpoint: PathBuf,
        dataset: PathBuf,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
        k: Vec<usize>,
        /// Print `metric<TAB>value` lines instead of a table.
        #[arg(long)]
        kv: bool,
    },
    /// Print the top labels for a document file.
    Predict {
        checkpoint: PathBuf,
        document: PathBuf,
        /// Defaults to the `top_k` config key.
        #[arg(long)]
        top_k: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a 2-D embedding file as SVG.
    Viz {
        embeddings: PathBuf,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        /// Draw every row as a label when no hierarchy is given.
        #[arg(long)]
        labels: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EmbedLabels { hierarchy, out, common } => {
            let t = cli::embed_labels(&hierarchy, &out, &common.load()?)?;
            eprintln!("wrote {} label embeddings to {}", t.len(), out.display());
        }
        Command::TrainWords {
            corpus,
            hypernyms,
            out,
            common,
        } => {
            let t = cli::train_words(&corpus, hypernyms.as_deref(), &out, &common.load()?)?;
            eprintln!("wrote {} word embeddings to {}", t.len(), out.display());
        }
        Command::Train {
            dataset,
            hierarchy,
            out,
            mode,
            validation,
            label_embeddings,
            word_embeddings,
            common,
        } => {
            let mut cfg = common.load()?;
            if let Some(m) = mode {
                cfg.set("mode", &m)?;
            }
            let paths = TrainPaths {
                dataset: &dataset,
                hierarchy: &hierarchy,
                out: &out,
                validation: validation.as_deref(),
                label_embeddings: label_embeddings.as_deref(),
                word_embeddings: word_embeddings.as_deref(),
            };
            let (_, history) = cli::train(paths, &cfg)?;
            for e in &history.epochs {
                let val = e.val_loss.map_or(String::new(), |v| {
                    format!("\tval_loss {v}\tval_p1 {}", e.val_p1.unwrap())
                });
                println!("epoch {}\ttrain_loss {}{val}", e.epoch, e.train_loss);
            }
            eprintln!("wrote checkpoint to {}", out.display());
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            k,
            kv,
        } => {
            let table = cli::evaluate(&checkpoint, &dataset, &k)?;
            print!("{}", if kv { table.key_values() } else { table.text_table() });
        }
        Command::Predict {
            checkpoint,
            document,
            top_k,
            common,
        } => {
            let k = top_k.unwrap_or(common.load()?.top_k);
            for (label, p) in cli::predict(&checkpoint, &document, k)? {
                println!("{label}\t{p}");
            }
        }
        Command::Viz {
            embeddings,
            hierarchy,
            labels,
            out,
        } => {
            let svg = cli::viz(&embeddings, hierarchy.as_deref(), labels)?;
            write_or_print(out.as_deref(), &svg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
