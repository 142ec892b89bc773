use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::harness::{aggregate, evaluate, run_pretrain_diagnostics, ExperimentConfig, Method, Report};
use kernel_pretrain::kernels::{gram_matrix, KernelKind, KernelSpec};
use kernel_pretrain::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Graph kernels, DGCNN and kernel-regression pre-training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Wl,
    Sp,
    Gl3,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a Gram matrix and write it in binary form.
    Gram {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "wl")]
        kernel: Kernel,
        #[arg(long, default_value_t = 2)]
        h: u32,
        #[arg(long)]
        normalize: bool,
        /// Keep only connected graphlets (gl3).
        #[arg(long)]
        connected_only: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write a CSV copy next to the binary file.
        #[arg(long)]
        csv: bool,
    },
    /// Pre-train a network and check it on held-out graph pairs.
    Pretrain {
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` settings applied after the config file.
        #[arg(long = "set")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 0.2)]
        held_out: f64,
        #[arg(long, default_value_t = 500)]
        pairs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run nested cross-validation for one method.
    Evaluate {
        dataset: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// One repetition instead of the configured number.
        #[arg(long)]
        fast: bool,
        /// Pre-train on every graph, test folds included.
        #[arg(long)]
        pretrain_on_all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate report directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write `comparison.txt` and `comparison.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, dataset: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.dataset = dataset.to_path_buf();
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gram {
            dataset,
            kernel,
            h,
            normalize,
            connected_only,
            workers,
            out,
            csv,
        } => {
            let data = load_tu_dataset(&dataset)?;
            let spec = match kernel {
                Kernel::Wl => KernelSpec::wl(h, normalize),
                Kernel::Sp => KernelSpec::shortest_path(normalize),
                Kernel::Gl3 => KernelSpec {
                    kind: KernelKind::Graphlet3 { connected_only },
                    normalize,
                },
            };
            let gram = gram_matrix(data.graphs(), &spec, workers)?;
            gram.write_binary(&out)?;
            if csv {
                gram.write_csv(out.with_extension("csv"))?;
            }
            println!(
                "{}: {} graphs, {spec}, written to {}",
                data.name(),
                gram.size(),
                out.display()
            );
        }
        Command::Pretrain {
            dataset,
            config,
            overrides,
            held_out,
            pairs,
            out,
        } => {
            let cfg = load_config(config.as_deref(), &dataset, &overrides)?;
            let data = load_tu_dataset(&cfg.dataset)?;
            let d = run_pretrain_diagnostics(&data, &cfg, held_out, pairs)?;
            for (epoch, loss) in d.report.loss_curve.iter().enumerate() {
                println!("epoch {:>3}  mse {loss:.6}", epoch + 1);
            }
            println!(
                "held-out pearson {:.4} over {} pairs",
                d.held_out_pearson, d.held_out_pairs
            );
            let out = out.unwrap_or_else(|| cfg.output.clone());
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            d.checkpoint.save(out.join("pretrained.ckpt"))?;
            let curve: String = d
                .report
                .loss_curve
                .iter()
                .enumerate()
                .map(|(e, l)| format!("{},{l:?}\n", e + 1))
                .collect();
            write(&out.join("loss_curve.csv"), &format!("epoch,mse\n{curve}"))?;
        }
        Command::Evaluate {
            dataset,
            method,
            config,
            overrides,
            seed,
            fast,
            pretrain_on_all,
            out,
        } => {
            let mut cfg = load_config(config.as_deref(), &dataset, &overrides)?;
            cfg.method = method.parse::<Method>()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if fast {
                cfg.repetitions = 1;
            }
            cfg.pretrain_on_all |= pretrain_on_all;
            if let Some(o) = out {
                cfg.output = o;
            }
            let report = evaluate(&cfg)?;
            report.write(&cfg.output)?;
            print!("{}", report.summary());
        }
        Command::Report { dirs, out } => {
            let reports = dirs.iter().map(Report::load).collect::<Result<Vec<_>>>()?;
            let table = aggregate(&reports)?;
            print!("{}", table.text());
            if let Some(out) = out {
                std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                    path: out.clone(),
                    source,
                })?;
                write(&out.join("comparison.txt"), &table.text())?;
                write(&out.join("comparison.csv"), &table.csv())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
