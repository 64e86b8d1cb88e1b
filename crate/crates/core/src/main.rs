use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use sdsm::io::write_manifest;
use sdsm::{
    diff_results, generate, load_dataset, mine, oracle_mine, run, write_dataset, write_reports,
    Error, GenConfig, LabeledDataset, MiningConfig, Mode,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Pruned mining.
    Mine,
    /// Exhaustive mining without pruning.
    Oracle,
    /// Run both and report any difference.
    Compare,
    /// Write a synthetic dataset.
    Gen,
    /// Empirical family-wise error rate over repeated null datasets.
    FwerSim,
}

/// Statistically discriminative sub-trajectory mining.
#[derive(Debug, Parser)]
#[command(name = "sdsm", version)]
struct Args {
    #[arg(long, value_enum, default_value_t = Command::Mine)]
    mode: Command,
    /// Trajectory CSV (`traj_id,seq,x,y`).
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Label CSV (`traj_id,label`).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Neighborhood radius.
    #[arg(long)]
    eps: Option<f64>,
    /// Minimum window length L, in points.
    #[arg(long, default_value_t = 5)]
    min_len: usize,
    /// Number of largest pointwise distances averaged, K.
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Number of label permutations B.
    #[arg(long, default_value_t = 1000)]
    perms: usize,
    /// Family-wise error rate.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SDSM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, default_value = "sdsm-out")]
    out: PathBuf,
    /// Also write discoveries.geojson.
    #[arg(long)]
    geojson: bool,

    #[arg(long, default_value_t = 20, help_heading = "Generator")]
    n_pos: usize,
    #[arg(long, default_value_t = 20, help_heading = "Generator")]
    n_neg: usize,
    #[arg(long, default_value_t = 20, help_heading = "Generator")]
    traj_len: usize,
    #[arg(long, default_value_t = 1.0, help_heading = "Generator")]
    step_sigma: f64,
    /// Corridor length; 0 gives a null dataset.
    #[arg(long, default_value_t = 0, help_heading = "Generator")]
    planted_len: usize,
    #[arg(long, default_value_t = 0.0, help_heading = "Generator")]
    planted_frac: f64,
    #[arg(long, default_value_t = 0.0, help_heading = "Generator")]
    noise_sigma: f64,

    /// Null datasets generated by fwer-sim, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 100, help_heading = "FWER simulation")]
    runs: usize,
}

enum Failure {
    Error(Error),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl Args {
    fn mining_config(&self, mode: Mode) -> Result<MiningConfig, Error> {
        let eps = self
            .eps
            .ok_or_else(|| Error::Config("--eps is required for this mode".into()))?;
        let config = MiningConfig {
            eps,
            min_len: self.min_len,
            top_k: self.top_k,
            perms: self.perms,
            alpha: self.alpha,
            seed: self.seed,
            threads: self.threads,
            mode,
            prefilter: true,
        };
        config.validate()?;
        Ok(config)
    }

    fn gen_config(&self, seed: u64) -> GenConfig {
        GenConfig {
            n_pos: self.n_pos,
            n_neg: self.n_neg,
            traj_len: self.traj_len,
            step_sigma: self.step_sigma,
            planted_len: self.planted_len,
            planted_frac: self.planted_frac,
            noise_sigma: self.noise_sigma,
            seed,
        }
    }

    fn dataset(&self) -> Result<LabeledDataset, Error> {
        match (&self.traj, &self.labels) {
            (Some(t), Some(l)) => load_dataset(t, l),
            _ => Err(Error::Config(
                "--traj and --labels are required for this mode".into(),
            )),
        }
    }
}

fn mine_mode(args: &Args, mode: Mode) -> Result<(), Failure> {
    let config = args.mining_config(mode)?;
    let dataset = args.dataset()?;
    let started = Instant::now();
    let result = run(&dataset, &config)?;
    let elapsed = started.elapsed().as_secs_f64();
    write_reports(&result, &dataset, &config, &args.out, elapsed, args.geojson)?;
    println!(
        "delta* = {:.5e}, {} discoveries, {} nodes visited, {} chains pruned, {:.3}s; reports in {}",
        result.delta_star,
        result.discoveries.len(),
        result.diagnostics.nodes_visited,
        result.diagnostics.chains_pruned,
        elapsed,
        args.out.display()
    );
    Ok(())
}

fn compare_mode(args: &Args) -> Result<(), Failure> {
    let config = args.mining_config(Mode::Sdsm)?;
    let dataset = args.dataset()?;
    let pruned = mine(&dataset, &config)?;
    let exhaustive = oracle_mine(&dataset, &config)?;
    let diffs = diff_results(&pruned, &exhaustive);
    if diffs.is_empty() {
        println!(
            "match: delta* = {:.5e}, {} discoveries; pruned run visited {} of {} nodes",
            pruned.delta_star,
            pruned.discoveries.len(),
            pruned.diagnostics.nodes_visited,
            exhaustive.diagnostics.nodes_visited
        );
        Ok(())
    } else {
        for d in &diffs {
            println!("mismatch: {d}");
        }
        Err(Failure::Mismatch)
    }
}

fn gen_mode(args: &Args) -> Result<(), Failure> {
    let (dataset, manifest) = generate(&args.gen_config(args.seed))?;
    let dir: &Path = &args.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_dataset(&dataset, dir.join("traj.csv"), dir.join("labels.csv"))?;
    write_manifest(&manifest.rows, dir.join("manifest.csv"))?;
    println!(
        "wrote {} trajectories ({} carriers) to {}",
        dataset.len(),
        manifest.rows.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct FwerReport {
    runs: usize,
    runs_with_discoveries: usize,
    empirical_fwer: f64,
    alpha: f64,
}

fn fwer_mode(args: &Args) -> Result<(), Failure> {
    let config = args.mining_config(Mode::Sdsm)?;
    if args.runs == 0 {
        return Err(Error::Config("--runs must be positive".into()).into());
    }
    let mut hits = 0;
    for r in 0..args.runs {
        let seed = args.seed.wrapping_add(r as u64);
        let (dataset, _) = generate(&GenConfig {
            planted_len: 0,
            ..args.gen_config(seed)
        })?;
        let result = mine(
            &dataset,
            &MiningConfig {
                seed,
                ..config.clone()
            },
        )?;
        if !result.discoveries.is_empty() {
            hits += 1;
        }
    }
    let report = FwerReport {
        runs: args.runs,
        runs_with_discoveries: hits,
        empirical_fwer: hits as f64 / args.runs as f64,
        alpha: config.alpha,
    };
    let dir: &Path = &args.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("fwer.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!(
        "{hits} of {} null runs reported a discovery (FWER {:.3}, alpha {})",
        args.runs, report.empirical_fwer, config.alpha
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = match args.mode {
        Command::Mine => mine_mode(&args, Mode::Sdsm),
        Command::Oracle => mine_mode(&args, Mode::Oracle),
        Command::Compare => compare_mode(&args),
        Command::Gen => gen_mode(&args),
        Command::FwerSim => fwer_mode(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(EXIT_MISMATCH),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_IO,
            })
        }
    }
}
