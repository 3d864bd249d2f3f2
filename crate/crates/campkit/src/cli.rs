//! Command-line front end: experiment subcommands, defaults layering, and
//! exit-code policy.
//!
//! Settings resolve in three layers: built-in defaults, then a `--config`
//! file (`key=value` lines, `#` comments), then explicit flags — later
//! layers win. Keys in the file use the flag names without the leading
//! dashes (`n-signal=1000`).
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 verification
//! failure (a deviation report with at least one failing row), 3 I/O error.
//! Tables go to `--out` when given, stdout otherwise; diverged trials are
//! listed in a `*.divergence.txt` sidecar (stderr when writing to stdout).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::amp::Algo;
use crate::denoise::{DenoiserKind, DenoiserSpec, Thresholds};
use crate::error::Error;
use crate::experiment::{
    emit_dat, render_dat, run_convergence_experiment, run_snr_sweep, DatTable, ExperimentConfig,
    SE_STREAM_BASE,
};
use crate::lift::{shrinkage_pair, verify_collapse_equivalence, verify_lift_identities, ReportRow,
    ALGEBRAIC_TOL};
use crate::mat::CPanel;
use crate::matrix_lift::{operator_product_deviation, row_shrink_map, verify_matrix_collapse};
use crate::problem::{
    sample_complex_gaussian, sample_complex_gaussian_matrix, stream_rng, GroupStructure,
    ProblemConfig,
};
use crate::state_evolution::{se_predict, SeConfig};
use crate::Result;

#[derive(Parser, Debug)]
#[command(
    name = "campkit",
    about = "Complex message-passing recovery experiments and verification reports",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compare memory-corrected and plain iterative recovery at one SNR
    Convergence(RunArgs),
    /// Sweep the four denoisers across an SNR grid
    SnrSweep(RunArgs),
    /// Print the predicted noise-level trajectory for a schedule
    SePredict(RunArgs),
    /// Check the real-lift transformation identities on a shrinkage orbit
    VerifyLift(VerifyArgs),
    /// Check the multi-feature lift against the complex matrix recursion
    VerifyMatrixLift(VerifyArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct RunArgs {
    /// Defaults file with key=value lines; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal dimension N
    #[arg(long)]
    n_signal: Option<usize>,
    /// Number of equal contiguous groups
    #[arg(long)]
    groups: Option<usize>,
    /// Undersampling ratio n/N
    #[arg(long)]
    delta: Option<f64>,
    /// Active fraction k/n
    #[arg(long)]
    rho: Option<f64>,
    /// Fraction of groups carrying the active entries
    #[arg(long)]
    r_ga: Option<f64>,
    /// SNR in dB; repeat for a sweep grid
    #[arg(long)]
    snr_db: Vec<f64>,
    /// Group-threshold scale
    #[arg(long)]
    alpha_g: Option<f64>,
    /// Element-threshold scale
    #[arg(long)]
    alpha_e: Option<f64>,
    /// Apply the group-aware denoiser every kappa iterations
    #[arg(long)]
    kappa: Option<usize>,
    /// Iteration budget
    #[arg(long)]
    iters: Option<usize>,
    /// Independent trials to average
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; every derived stream is a pure function of it
    #[arg(long)]
    seed: Option<u64>,
    /// Denoiser kind: lasso, gl, sgl, real-sgl
    #[arg(long)]
    denoiser: Option<String>,
    /// Algorithm: amp or ista
    #[arg(long)]
    algo: Option<String>,
    /// Monte-Carlo draws per prediction step
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default)]
struct VerifyArgs {
    /// Base seed for the random instance
    #[arg(long)]
    seed: Option<u64>,
    /// Report file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse a defaults file into (key, value) pairs. Blank lines and `#`
/// comments (whole-line or trailing) are ignored.
fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_into<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

impl RunArgs {
    /// Apply one config-file pair. Keys match the long flag names.
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n-signal" => self.n_signal = Some(parse_into(key, value)?),
            "groups" => self.groups = Some(parse_into(key, value)?),
            "delta" => self.delta = Some(parse_into(key, value)?),
            "rho" => self.rho = Some(parse_into(key, value)?),
            "r-ga" => self.r_ga = Some(parse_into(key, value)?),
            "snr-db" => {
                self.snr_db = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_into(key, s))
                    .collect::<Result<_>>()?;
            }
            "alpha-g" => self.alpha_g = Some(parse_into(key, value)?),
            "alpha-e" => self.alpha_e = Some(parse_into(key, value)?),
            "kappa" => self.kappa = Some(parse_into(key, value)?),
            "iters" => self.iters = Some(parse_into(key, value)?),
            "trials" => self.trials = Some(parse_into(key, value)?),
            "seed" => self.seed = Some(parse_into(key, value)?),
            "denoiser" => self.denoiser = Some(value.to_string()),
            "algo" => self.algo = Some(value.to_string()),
            "mc-samples" => self.mc_samples = Some(parse_into(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!("unknown config key: {other}")));
            }
        }
        Ok(())
    }

    /// Layer the `--config` file underneath the explicit flags.
    fn layered(self) -> Result<RunArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let mut base = RunArgs::default();
        for (key, value) in parse_config_file(&path)? {
            base.set(&key, &value)?;
        }
        Ok(RunArgs {
            config: self.config,
            n_signal: self.n_signal.or(base.n_signal),
            groups: self.groups.or(base.groups),
            delta: self.delta.or(base.delta),
            rho: self.rho.or(base.rho),
            r_ga: self.r_ga.or(base.r_ga),
            snr_db: if self.snr_db.is_empty() { base.snr_db } else { self.snr_db },
            alpha_g: self.alpha_g.or(base.alpha_g),
            alpha_e: self.alpha_e.or(base.alpha_e),
            kappa: self.kappa.or(base.kappa),
            iters: self.iters.or(base.iters),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            denoiser: self.denoiser.or(base.denoiser),
            algo: self.algo.or(base.algo),
            mc_samples: self.mc_samples.or(base.mc_samples),
            out: self.out.or(base.out),
        })
    }
}

/// Fully resolved run settings.
struct Resolved {
    cfg: ExperimentConfig,
    algo: Option<Algo>,
    denoiser_given: bool,
}

fn resolve(args: RunArgs, default_kappa: usize, default_grid: &[f64]) -> Result<Resolved> {
    let args = args.layered()?;
    let kind = match &args.denoiser {
        Some(s) => s.parse::<DenoiserKind>()?,
        None => DenoiserKind::SparseGroupLasso,
    };
    let spec = DenoiserSpec::new(
        kind,
        args.alpha_g.unwrap_or(0.2),
        args.alpha_e.unwrap_or(0.8),
        args.kappa.unwrap_or(default_kappa),
    );
    let snr_grid =
        if args.snr_db.is_empty() { default_grid.to_vec() } else { args.snr_db.clone() };
    let problem = ProblemConfig {
        n_signal: args.n_signal.unwrap_or(1000),
        groups: args.groups.unwrap_or(10),
        delta: args.delta.unwrap_or(0.6),
        rho: args.rho.unwrap_or(0.5),
        r_ga: args.r_ga.unwrap_or(0.6),
        snr_db: *snr_grid.first().expect("default grids are non-empty"),
        seed: args.seed.unwrap_or(1),
    };
    let mut cfg = ExperimentConfig::new(problem, spec);
    cfg.iters = args.iters.unwrap_or(200);
    cfg.trials = args.trials.unwrap_or(200);
    cfg.mc_samples = args.mc_samples.unwrap_or(100);
    cfg.snr_grid = snr_grid;
    cfg.out_path = args.out.clone();
    let algo = match &args.algo {
        Some(s) => Some(s.parse::<Algo>()?),
        None => None,
    };
    Ok(Resolved { cfg, algo, denoiser_given: args.denoiser.is_some() })
}

fn deliver_table(table: &DatTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_dat(table, path),
        None => {
            print!("{}", render_dat(table));
            Ok(())
        }
    }
}

/// Route divergence notes to a sidecar file next to the table (or stderr
/// when the table went to stdout).
fn deliver_sidecar(report: &[String], out: Option<&Path>) -> Result<()> {
    if report.is_empty() {
        return Ok(());
    }
    match out {
        Some(path) => {
            let side = path.with_extension("divergence.txt");
            let body = report.join("\n") + "\n";
            std::fs::write(&side, body).map_err(|e| Error::io(side.display().to_string(), e))?;
            eprintln!("{} diverged trial run(s); see {}", report.len(), side.display());
        }
        None => {
            for line in report {
                eprintln!("divergence: {line}");
            }
        }
    }
    Ok(())
}

fn cmd_convergence(args: RunArgs) -> Result<()> {
    let resolved = resolve(args, 1, &[30.0])?;
    if resolved.algo.is_some() {
        return Err(Error::Config(
            "the convergence run always compares both algorithms; drop --algo".into(),
        ));
    }
    let out = resolved.cfg.out_path.clone();
    let outcome = run_convergence_experiment(&resolved.cfg)?;
    deliver_table(&outcome.table, out.as_deref())?;
    deliver_sidecar(&outcome.divergence_report, out.as_deref())
}

fn cmd_snr_sweep(args: RunArgs) -> Result<()> {
    let resolved = resolve(args, 5, &[10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0])?;
    if resolved.denoiser_given {
        return Err(Error::Config(
            "the sweep always compares all four denoisers; drop --denoiser".into(),
        ));
    }
    if let Some(algo) = resolved.algo {
        if algo != Algo::Amp {
            return Err(Error::Config("the sweep runs the memory-corrected algorithm only".into()));
        }
    }
    let out = resolved.cfg.out_path.clone();
    let outcome = run_snr_sweep(&resolved.cfg)?;
    deliver_table(&outcome.table, out.as_deref())?;
    deliver_sidecar(&outcome.divergence_report, out.as_deref())
}

fn cmd_se_predict(args: RunArgs) -> Result<()> {
    let resolved = resolve(args, 1, &[30.0])?;
    if resolved.algo == Some(Algo::Ista) {
        return Err(Error::Config(
            "the noise-level recursion predicts the memory-corrected algorithm; \
             plain iteration does not follow it"
                .into(),
        ));
    }
    if resolved.cfg.snr_grid.len() > 1 {
        return Err(Error::Config("the prediction runs at a single SNR".into()));
    }
    let cfg = &resolved.cfg;
    let se_cfg = SeConfig {
        mc_samples: cfg.mc_samples,
        n_se: cfg.problem.n_signal,
        problem: cfg.problem.clone(),
        schedule: cfg.spec,
    };
    let mut rng = stream_rng(cfg.problem.seed, SE_STREAM_BASE);
    let traj = se_predict(&se_cfg, cfg.iters, &mut rng)?;
    let mut table = DatTable::new(&["iteration", "tau_sq", "nmse_pred"]);
    for t in 0..cfg.iters {
        table.push_row(vec![t as f64, traj.tau_sq[t + 1], traj.nmse_pred[t]]);
    }
    deliver_table(&table, cfg.out_path.as_deref())
}

fn deliver_report(rows: &[ReportRow], out: Option<&Path>) -> Result<()> {
    let mut text = String::from("check deviation tolerance status\n");
    for row in rows {
        text.push_str(&row.to_string());
        text.push('\n');
    }
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish_verification(rows: Vec<ReportRow>, out: Option<&Path>) -> Result<()> {
    deliver_report(&rows, out)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Error::Verification(format!("{failed} of {} checks failed", rows.len())));
    }
    Ok(())
}

/// Scalar-lift report at the reference verification scale (n=20, N=40,
/// T=10): transformation identities plus the two-orbit collapse comparison,
/// on a group-shrinkage orbit.
fn cmd_verify_lift(args: VerifyArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(1);
    let (n, big_n, big_t) = (20, 40, 10);
    let mut rng = stream_rng(seed, 0);
    let a = sample_complex_gaussian_matrix(n, big_n, 1.0 / n as f64, &mut rng)?;
    let u0: Vec<Complex64> = (0..big_n).map(|_| sample_complex_gaussian(1.0, &mut rng)).collect();
    let groups = GroupStructure::contiguous(big_n, 4)?;
    let pair = shrinkage_pair(groups, Thresholds::new(0.15, 0.1), n, 0.12);

    let mut rows = verify_lift_identities(&a, &pair, &u0, big_t)?;
    rows.extend(verify_collapse_equivalence(&a, &pair, &u0, big_t)?);
    finish_verification(rows, args.out.as_deref())
}

/// Multi-feature report at the reference scale (n=10, N=20, p=2, T=5) with
/// row-coupled shrinkage maps, plus the collapsed-product identity over 20
/// fresh instances.
fn cmd_verify_matrix_lift(args: VerifyArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(1);
    let (n, big_n, p, big_t) = (10, 20, 2, 5);
    let mut rng = stream_rng(seed, 0);
    let a = sample_complex_gaussian_matrix(n, big_n, 1.0 / n as f64, &mut rng)?;
    let u0 = CPanel::from_data(
        big_n,
        p,
        (0..big_n * p).map(|_| sample_complex_gaussian(1.0, &mut rng)).collect(),
    );
    let f = row_shrink_map(0.3);
    let g = row_shrink_map(0.2);
    let mut rows = verify_matrix_collapse(&a, &f, &g, &u0, big_t)?;

    let mut worst = 0.0f64;
    for instance in 0..20 {
        let mut rng = stream_rng(seed, 100 + instance);
        let a = sample_complex_gaussian_matrix(n, big_n, 1.0 / n as f64, &mut rng)?;
        let x = CPanel::from_data(
            big_n,
            p,
            (0..big_n * p).map(|_| sample_complex_gaussian(1.0, &mut rng)).collect(),
        );
        worst = worst.max(operator_product_deviation(&a, &x));
    }
    rows.push(ReportRow::new("operator_product_identity", worst, ALGEBRAIC_TOL));
    finish_verification(rows, args.out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Convergence(args) => cmd_convergence(args),
        Cmd::SnrSweep(args) => cmd_snr_sweep(args),
        Cmd::SePredict(args) => cmd_se_predict(args),
        Cmd::VerifyLift(args) => cmd_verify_lift(args),
        Cmd::VerifyMatrixLift(args) => cmd_verify_matrix_lift(args),
    }
}

/// Parse and run, returning the process exit code. Usage problems (including
/// no arguments at all) exit 1; `--help`/`--version` exit 0.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
