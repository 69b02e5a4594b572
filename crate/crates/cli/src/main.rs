use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ldp_sobolev::adaptive::{fit_collection, model_collection, select, SelectionConfig};
use ldp_sobolev::data::{read_points, write_points};
use ldp_sobolev::estimator::aggregate;
use ldp_sobolev::fourier::SobolevParams;
use ldp_sobolev::harness::{
    adaptive_rate_check, compare_mechanisms, fit_rate, read_summary, run, write_outputs, ExperimentSpec, RateFitResult,
};
use ldp_sobolev::mechanism::{verify_ldp, PrivatizedDataset};
use ldp_sobolev::rng::{purpose, StreamFactory};
use ldp_sobolev::schedule::{anisotropic_partition, dyadic_partition, BlockSchedule};
use ldp_sobolev::testbed::{Truth, TruthSpec};
use rand::Rng;

#[derive(Parser)]
#[command(name = "ldp-sobolev", version, about = "Locally private density estimation with Sobolev IPM losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a block schedule and print its blocks and budgets.
    Schedule {
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Write the schedule JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a dataset from a testbed truth.
    Sample {
        /// Truth spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        truth: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Sobolev radius of the truth class (default sqrt(2d)).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// CSV output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Privatize a dataset into JSON-lines private views.
    Privatize {
        /// CSV dataset with header x1,...,xd.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate private views into a coefficient table.
    Estimate {
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Privatize once per model and select J.
    Adapt {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        a_bound: f64,
        #[arg(long, default_value_t = 2.0)]
        kappa1: f64,
        #[arg(long, default_value_t = 2.0)]
        kappa2: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment.
    Simulate {
        /// ExperimentSpec JSON.
        #[arg(long)]
        config: PathBuf,
        /// Root seed; overrides the config.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        replications: Option<usize>,
        /// JSON summary path; the CSV goes next to it. Overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the rate exponent of a simulation summary.
    Fit {
        #[arg(long)]
        result: PathBuf,
        /// Use the log-corrected regressor of the adaptive estimator.
        #[arg(long)]
        adaptive: bool,
        /// Exit with status 1 when |slope - theoretical| exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact LDP audit of every block by channel enumeration.
    VerifyLdp {
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Number of random input points besides the corners.
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment under the block and the global mechanism.
    CompareMechanisms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScheduleArgs {
    /// Allocated schedule JSON; replaces the other schedule flags.
    #[arg(long, conflicts_with_all = ["j", "alpha", "global"])]
    schedule_file: Option<PathBuf>,
    #[arg(long)]
    j: Option<u64>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    alpha: Option<f64>,
    /// δ, one value or one per axis separated by commas.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    delta: Vec<f64>,
    /// β per axis, needed for anisotropic partitions.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Single block over all coefficients (comparator mechanism).
    #[arg(long)]
    global: bool,
}

fn axes(v: &[f64], d: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v.to_vec()),
        n => bail!(ldp_sobolev::Error::InvalidParameter(format!("{what} has {n} values for d = {d}"))),
    }
}

impl ScheduleArgs {
    fn build(&self) -> Result<Arc<BlockSchedule>> {
        if let Some(p) = &self.schedule_file {
            let s: BlockSchedule = serde_json::from_reader(BufReader::new(open(p)?))
                .map_err(ldp_sobolev::Error::from)
                .with_context(|| format!("reading schedule {}", p.display()))?;
            s.allocated()?;
            return Ok(Arc::new(s));
        }
        let (Some(j), Some(alpha)) = (self.j, self.alpha) else {
            bail!(ldp_sobolev::Error::InvalidParameter("--j and --alpha are required without --schedule-file".into()));
        };
        let delta = SobolevParams::new(axes(&self.delta, self.d, "--delta")?, 1.0)?;
        let raw = if self.global {
            BlockSchedule::global(j, self.d)?
        } else if self.beta.is_empty() || delta.is_isotropic() && self.beta.iter().all(|b| *b == self.beta[0]) {
            dyadic_partition(j, self.d)?
        } else {
            let beta = SobolevParams::new(axes(&self.beta, self.d, "--beta")?, 1.0)?;
            anisotropic_partition(j, &beta, &delta)?
        };
        Ok(Arc::new(raw.allocate_budget(alpha, &delta)?))
    }
}

fn open(p: &Path) -> Result<File> {
    File::open(p).map_err(ldp_sobolev::Error::from).with_context(|| format!("opening {}", p.display()))
}

fn output(p: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match p {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(ldp_sobolev::Error::from).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, p: &Option<PathBuf>) -> Result<()> {
    let mut w = output(p)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(ldp_sobolev::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_spec(p: &Path) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_reader(BufReader::new(open(p)?))
        .map_err(ldp_sobolev::Error::from)
        .with_context(|| format!("parsing {}", p.display()))?;
    Ok(spec)
}

fn print_fit(f: &RateFitResult) {
    eprintln!(
        "slope {:.4} (se {:.4}) on {}; theoretical {:.4}; |difference| {:.4}; regime {:?}",
        f.slope, f.slope_se, f.regressor, f.theoretical, f.deviation, f.regime
    );
    for a in &f.alternatives {
        eprintln!("  {}: slope {:.4} vs {:.4}", a.label, a.slope, a.theoretical);
    }
    for n in &f.notes {
        eprintln!("  note: {n}");
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Schedule { schedule, out } => {
            let s = schedule.build()?;
            eprint!("{}", s.summary_table());
            eprintln!("hash {}", s.hash());
            if out.is_some() {
                write_json(&*s, &out)?;
            }
        }
        Command::Sample {
            truth,
            d,
            beta,
            delta,
            radius,
            n,
            seed,
            out,
        } => {
            let text = if truth.trim_start().starts_with('{') {
                truth
            } else {
                std::fs::read_to_string(&truth).map_err(ldp_sobolev::Error::from).with_context(|| format!("reading {truth}"))?
            };
            let spec: TruthSpec = serde_json::from_str(&text).map_err(ldp_sobolev::Error::from)?;
            let r = radius.unwrap_or((2.0 * d as f64).sqrt());
            let t = Truth::resolve(
                &spec,
                &SobolevParams::isotropic(d, beta, r)?,
                &SobolevParams::isotropic(d, delta, 1.0)?,
            )?;
            let pts = t.sample(n, &StreamFactory::new(seed, &[purpose::DATA]))?;
            write_points(&pts, output(&out)?)?;
        }
        Command::Privatize {
            data,
            schedule,
            seed,
            out,
        } => {
            let pts = read_points(open(&data)?)?;
            let s = schedule.build()?;
            let ds = PrivatizedDataset::from_points(&pts, s, seed, &[purpose::PRIVATIZE])?;
            let mut w = output(&out)?;
            ds.write_jsonl(&mut w)?;
            w.flush()?;
            eprintln!("privatized {} records", ds.records.len());
        }
        Command::Estimate { views, out } => {
            let ds = PrivatizedDataset::read_jsonl(BufReader::new(open(&views)?))?;
            let est = aggregate(&ds)?;
            write_json(&est.to_file(), &out)?;
            eprintln!("n = {}, {} coefficients, schedule {}", est.n, est.coefficients.len(), est.schedule.hash());
        }
        Command::Adapt {
            data,
            alpha,
            delta,
            a_bound,
            kappa1,
            kappa2,
            seed,
            out,
        } => {
            let pts = read_points(open(&data)?)?;
            let d = pts[0].len();
            let coll = model_collection(pts.len() as u64, alpha)?;
            let dl = SobolevParams::isotropic(d, delta, 1.0)?;
            let ests = fit_collection(&pts, &coll, &dl, seed, &[])?;
            let sel = select(&ests, &SelectionConfig { a_bound, kappa1, kappa2 })?;
            eprint!("{}", sel.render_table());
            eprintln!("selected J = {}", sel.j_hat);
            eprintln!("warning: {}", sel.warning());
            write_json(&sel.to_file(), &out)?;
        }
        Command::Simulate {
            config,
            seed,
            replications,
            out,
        } => {
            let mut spec = read_spec(&config)?;
            spec.seed = seed;
            if let Some(r) = replications {
                spec.replications = r;
            }
            if out.is_some() {
                spec.output = out;
            }
            let res = run(&spec)?;
            eprintln!("{:>10} {:>8} {:>14} {:>12} {:>14}", "n", "J", "mean risk", "se", "head+tail");
            for p in &res.summary.points {
                let (lo, hi) = p.interval();
                eprintln!("{:>10} {:>8} {:>14.6e} {:>12.3e} {:>14.6e}", p.n, p.j, p.mean_risk, p.se, hi.max(lo));
            }
            for w in &res.summary.warnings {
                eprintln!("warning: {w}");
            }
            match &spec.output {
                Some(p) => {
                    let csv = write_outputs(&res, p)?;
                    eprintln!("wrote {} and {}", p.display(), csv.display());
                }
                None => write_json(&res.summary, &None)?,
            }
            if res.summary.points.len() >= 4 {
                print_fit(&fit_rate(&res.summary)?);
            }
        }
        Command::Fit {
            result,
            adaptive,
            tolerance,
            out,
        } => {
            let summary = read_summary(&result)?;
            let f = if adaptive { adaptive_rate_check(&summary)? } else { fit_rate(&summary)? };
            print_fit(&f);
            write_json(&f, &out)?;
            if let Some(t) = tolerance {
                if f.deviation > t {
                    eprintln!("FAIL: |slope - theoretical| = {:.4} > {t}", f.deviation);
                    return Ok(ExitCode::from(1));
                }
                eprintln!("PASS: |slope - theoretical| = {:.4} <= {t}", f.deviation);
            }
        }
        Command::VerifyLdp {
            schedule,
            points,
            seed,
            out,
        } => {
            let s = schedule.build()?;
            let d = s.dim();
            let mut rng = StreamFactory::new(seed, &[purpose::DATA]).stream(0, 0);
            // Corners of the cube and random points.
            let mut xs: Vec<Vec<f64>> = (0..1usize << d.min(10))
                .map(|c| (0..d).map(|m| ((c >> m) & 1) as f64 * 0.5).collect())
                .collect();
            xs.extend((0..points).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()));
            let rep = verify_ldp(&s, &xs)?;
            eprintln!("{:>16} {:>6} {:>14} {:>18} {:>6}", "block", "size", "budget", "max log-ratio", "ok");
            for b in &rep.blocks {
                eprintln!(
                    "{:>16} {:>6} {:>14.8} {:>18.12} {:>6}",
                    format!("{:?}", b.label),
                    b.size,
                    b.budget,
                    b.max_log_ratio,
                    b.pass
                );
            }
            eprintln!("total budget {} of alpha {}", rep.total_budget, rep.alpha);
            if out.is_some() {
                write_json(&rep, &out)?;
            }
            if !rep.pass {
                eprintln!("FAIL");
                return Ok(ExitCode::from(1));
            }
            eprintln!("PASS");
        }
        Command::CompareMechanisms {
            config,
            seed,
            replications,
            out,
        } => {
            let mut spec = read_spec(&config)?;
            spec.seed = seed;
            if let Some(r) = replications {
                spec.replications = r;
            }
            let (rep, _, _) = compare_mechanisms(&spec)?;
            eprintln!("{:>10} {:>6} {:>6} {:>14} {:>14} {:>8}", "n", "J blk", "J glb", "block risk", "global risk", "z");
            for p in &rep.points {
                eprintln!(
                    "{:>10} {:>6} {:>6} {:>14.6e} {:>14.6e} {:>8.2}",
                    p.n, p.j_block, p.j_global, p.block_risk, p.global_risk, p.z
                );
            }
            eprintln!("block:");
            print_fit(&rep.block_fit);
            eprintln!("global:");
            print_fit(&rep.global_fit);
            write_json(&rep, &out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn is_config(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<ldp_sobolev::Error>()
            .is_some_and(|e| e.is_config() || matches!(e, ldp_sobolev::Error::Io(_)))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            // Library errors already embed their source in Display.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            if is_config(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
