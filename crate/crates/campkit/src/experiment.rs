//! Experiment orchestration: multi-trial convergence and SNR-sweep runs,
//! plus the whitespace-column `.dat` emitter their results are written to.
//!
//! Trials fan out across worker threads, but every aggregate is summed in
//! trial-index order over a pre-sized result vector, so a run's output is a
//! pure function of its configuration — scheduling never changes a byte.
//! Each trial draws from its own generator stream (derived from the base
//! seed, the SNR grid position, and the trial index), which keeps trials
//! independent and lets a single trial be reproduced in isolation.
//!
//! A diverged trial does not abort the run: its remaining iterations are
//! `nan`, the column means inherit the `nan` (a poisoned cell is visible,
//! never silently dropped), and the event is listed in a sidecar report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::amp::{run_recovery, Algo, Trajectory};
use crate::denoise::{DenoiserKind, DenoiserSpec};
use crate::error::Error;
use crate::problem::{generate_instance, stream_rng, ProblemConfig};
use crate::state_evolution::{se_predict, SeConfig, SeTrajectory};
use crate::Result;

/// Generator stream layout: recovery trials and state-evolution runs must
/// never share a stream, and distinct (SNR, trial) cells must not collide.
const TRIAL_STREAM_BASE: u64 = 1 << 32;
pub(crate) const SE_STREAM_BASE: u64 = 2 << 32;

fn trial_stream(snr_idx: usize, trial: usize) -> u64 {
    TRIAL_STREAM_BASE + ((snr_idx as u64) << 20) + trial as u64
}

/// Full description of one experiment invocation.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub spec: DenoiserSpec,
    /// Algorithms a convergence run compares (must be both).
    pub algos: Vec<Algo>,
    /// Denoisers a sweep compares (must be all four).
    pub denoisers: Vec<DenoiserKind>,
    pub iters: usize,
    pub trials: usize,
    pub snr_grid: Vec<f64>,
    pub out_path: Option<PathBuf>,
    pub se_enabled: bool,
    pub mc_samples: usize,
}

impl ExperimentConfig {
    /// Defaults matching the reference experiments: 200 iterations, 200
    /// trials, both algorithms, all four denoisers, SE prediction on.
    pub fn new(problem: ProblemConfig, spec: DenoiserSpec) -> Self {
        ExperimentConfig {
            problem,
            spec,
            algos: vec![Algo::Amp, Algo::Ista],
            denoisers: vec![
                DenoiserKind::GroupLasso,
                DenoiserKind::RealSparseGroupLasso,
                DenoiserKind::Lasso,
                DenoiserKind::SparseGroupLasso,
            ],
            iters: 200,
            trials: 200,
            snr_grid: Vec::new(),
            out_path: None,
            se_enabled: true,
            mc_samples: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.iters == 0 {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        self.problem.validate()?;
        self.spec.validate()?;
        Ok(())
    }

    fn se_config(&self, problem: ProblemConfig, spec: DenoiserSpec) -> SeConfig {
        SeConfig { mc_samples: self.mc_samples, n_se: problem.n_signal, problem, schedule: spec }
    }
}

/// Column-oriented numeric table, the in-memory form of a `.dat` file.
/// `f64::NAN` is the poisoned-cell sentinel and renders as `nan`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DatTable {
    pub fn new(header: &[&str]) -> Self {
        DatTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Append a row; its length must match the header.
    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }
}

fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.5e}")
    } else {
        "nan".to_string()
    }
}

/// Render a table to `.dat` text: space-separated header line, one
/// space-separated row per line (6 significant digits), trailing newline.
pub fn render_dat(table: &DatTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", table.header.join(" "));
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Write a table to disk, surfacing I/O failures with the path attached.
pub fn emit_dat(table: &DatTable, path: &Path) -> Result<()> {
    std::fs::write(path, render_dat(table)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Mean over trials for each iteration, summed in trial-index order so the
/// result is independent of scheduling. `nan` entries poison their cell.
pub fn mean_by_iter(per_trial: &[Vec<f64>]) -> Vec<f64> {
    let trials = per_trial.len();
    if trials == 0 {
        return Vec::new();
    }
    let iters = per_trial[0].len();
    let mut means = vec![0.0; iters];
    for trial in per_trial {
        assert_eq!(trial.len(), iters, "ragged per-trial series");
        for (m, &v) in means.iter_mut().zip(trial) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= trials as f64;
    }
    means
}

/// Sample standard deviation over trials at one index (0 for a single trial).
fn std_over_trials(per_trial: &[Vec<f64>], idx: usize) -> f64 {
    let n = per_trial.len();
    if n < 2 {
        return 0.0;
    }
    let mean = per_trial.iter().map(|t| t[idx]).sum::<f64>() / n as f64;
    let ss = per_trial.iter().map(|t| (t[idx] - mean).powi(2)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

fn divergence_note(report: &mut Vec<String>, label: &str, trial: usize, traj: &Trajectory) {
    if let Some(it) = traj.diverged_at {
        report.push(format!("{label}: trial {trial} diverged at iteration {it}"));
    }
}

/// Convergence-run results: the emitted table plus the per-trial series the
/// table's means were built from, for downstream significance checks.
#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub table: DatTable,
    /// Per-trial NMSE series, `[trial][iteration]`.
    pub per_trial_amp: Vec<Vec<f64>>,
    pub per_trial_ista: Vec<Vec<f64>>,
    /// Predicted trajectory (present when SE is enabled).
    pub se: Option<SeTrajectory>,
    /// One line per diverged (trial, algorithm) pair.
    pub divergence_report: Vec<String>,
}

/// Run the AMP-vs-ISTA convergence experiment at a single SNR.
///
/// Columns: `iteration nmse_ista nmse_amp se_amp`, one row per iteration
/// starting at 0. The NMSE columns are trial means; `se_amp` is the
/// state-evolution prediction for the same schedule (a `nan` column when SE
/// is disabled).
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceOutcome> {
    cfg.validate()?;
    if !(cfg.algos.contains(&Algo::Amp) && cfg.algos.contains(&Algo::Ista)) {
        return Err(Error::Config(
            "the convergence experiment compares AMP and ISTA; both must be enabled".into(),
        ));
    }
    if cfg.snr_grid.len() > 1 {
        return Err(Error::Config(format!(
            "the convergence experiment runs at a single SNR, got a grid of {}",
            cfg.snr_grid.len()
        )));
    }
    let mut problem = cfg.problem.clone();
    if let Some(&snr) = cfg.snr_grid.first() {
        problem.snr_db = snr;
    }

    let pairs: Vec<(Trajectory, Trajectory)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(Trajectory, Trajectory)> {
            let mut rng = stream_rng(problem.seed, trial_stream(0, trial));
            let inst = generate_instance(&problem, &mut rng)?;
            let amp = run_recovery(&inst, Algo::Amp, &cfg.spec, cfg.iters)?;
            let ista = run_recovery(&inst, Algo::Ista, &cfg.spec, cfg.iters)?;
            Ok((amp, ista))
        })
        .collect::<Result<_>>()?;

    let mut per_trial_amp = Vec::with_capacity(cfg.trials);
    let mut per_trial_ista = Vec::with_capacity(cfg.trials);
    let mut divergence_report = Vec::new();
    for (trial, (amp, ista)) in pairs.iter().enumerate() {
        divergence_note(&mut divergence_report, "amp", trial, amp);
        divergence_note(&mut divergence_report, "ista", trial, ista);
        per_trial_amp.push(amp.nmse_per_iter.clone());
        per_trial_ista.push(ista.nmse_per_iter.clone());
    }
    let mean_amp = mean_by_iter(&per_trial_amp);
    let mean_ista = mean_by_iter(&per_trial_ista);

    let se = if cfg.se_enabled {
        let se_cfg = cfg.se_config(problem.clone(), cfg.spec);
        let mut rng = stream_rng(problem.seed, SE_STREAM_BASE);
        Some(se_predict(&se_cfg, cfg.iters, &mut rng)?)
    } else {
        None
    };

    let mut table = DatTable::new(&["iteration", "nmse_ista", "nmse_amp", "se_amp"]);
    for t in 0..cfg.iters {
        let se_amp = se.as_ref().map_or(f64::NAN, |s| s.nmse_pred[t]);
        table.push_row(vec![t as f64, mean_ista[t], mean_amp[t], se_amp]);
    }
    Ok(ConvergenceOutcome { table, per_trial_amp, per_trial_ista, se, divergence_report })
}

/// Sweep results: table plus per-point detail for significance checks.
#[derive(Debug)]
pub struct SweepOutcome {
    pub table: DatTable,
    /// Final-iteration NMSE per grid point, `[snr_idx][trial]`, for the
    /// group-aware sparse denoiser (the column carrying error bars).
    pub sgl_trial_finals: Vec<Vec<f64>>,
    /// MC standard error of the final `se_sgl` prediction per grid point.
    pub sgl_pred_se: Vec<f64>,
    pub divergence_report: Vec<String>,
}

/// Per-trial sweep cell: final NMSE under each of the four denoisers, in
/// [GL, REAL_SGL, LASSO, SGL] column order.
type SweepCell = [f64; 4];

const SWEEP_ORDER: [DenoiserKind; 4] = [
    DenoiserKind::GroupLasso,
    DenoiserKind::RealSparseGroupLasso,
    DenoiserKind::Lasso,
    DenoiserKind::SparseGroupLasso,
];

/// Run the four-denoiser SNR sweep with AMP.
///
/// Columns: `snr_db nmse_group_lasso nmse_real_sgl nmse_lasso nmse_sgl
/// std_sgl se_sgl`. Each NMSE is the final-iteration trial mean; all four
/// denoisers see the same instance within a trial, so the comparison is
/// paired. The configured schedule period applies to the group-aware sparse
/// kinds only (the plain kinds have no schedule to alternate with).
pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    for kind in SWEEP_ORDER {
        if !cfg.denoisers.contains(&kind) {
            return Err(Error::Config(format!(
                "the sweep compares all four denoisers; {} is missing",
                kind.name()
            )));
        }
    }
    if cfg.snr_grid.is_empty() {
        return Err(Error::Config("the sweep needs a non-empty SNR grid".into()));
    }

    let mut table = DatTable::new(&[
        "snr_db",
        "nmse_group_lasso",
        "nmse_real_sgl",
        "nmse_lasso",
        "nmse_sgl",
        "std_sgl",
        "se_sgl",
    ]);
    let mut sgl_trial_finals = Vec::with_capacity(cfg.snr_grid.len());
    let mut sgl_pred_se = Vec::with_capacity(cfg.snr_grid.len());
    let mut divergence_report = Vec::new();

    for (snr_idx, &snr_db) in cfg.snr_grid.iter().enumerate() {
        let problem = ProblemConfig { snr_db, ..cfg.problem.clone() };
        problem.validate()?;

        let cells: Vec<SweepCell> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<(SweepCell, Vec<String>)> {
                let mut rng = stream_rng(problem.seed, trial_stream(snr_idx, trial));
                let inst = generate_instance(&problem, &mut rng)?;
                let mut cell = [f64::NAN; 4];
                let mut notes = Vec::new();
                for (slot, kind) in SWEEP_ORDER.iter().enumerate() {
                    let spec = DenoiserSpec::new(
                        *kind,
                        cfg.spec.alpha_g,
                        cfg.spec.alpha_e,
                        cfg.spec.kappa,
                    );
                    let traj = run_recovery(&inst, Algo::Amp, &spec, cfg.iters)?;
                    if let Some(it) = traj.diverged_at {
                        notes.push(format!(
                            "snr {snr_db} dB, {}: trial {trial} diverged at iteration {it}",
                            kind.name()
                        ));
                    }
                    cell[slot] = traj.nmse_per_iter[cfg.iters - 1];
                }
                Ok((cell, notes))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(|(cell, notes)| {
                divergence_report.extend(notes);
                cell
            })
            .collect();

        let per_trial: Vec<Vec<f64>> = cells.iter().map(|c| c.to_vec()).collect();
        let means = mean_by_iter(&per_trial);
        let sgl_idx = 3;
        let std_sgl = std_over_trials(&per_trial, sgl_idx);

        let se_cfg = cfg.se_config(
            problem.clone(),
            DenoiserSpec::new(
                DenoiserKind::SparseGroupLasso,
                cfg.spec.alpha_g,
                cfg.spec.alpha_e,
                cfg.spec.kappa,
            ),
        );
        let mut rng = stream_rng(problem.seed, SE_STREAM_BASE + ((snr_idx as u64) << 20));
        let (se_sgl, pred_se) = if cfg.se_enabled {
            let traj = se_predict(&se_cfg, cfg.iters, &mut rng)?;
            (traj.nmse_pred[cfg.iters - 1], traj.nmse_pred_se[cfg.iters - 1])
        } else {
            (f64::NAN, f64::NAN)
        };

        table.push_row(vec![snr_db, means[0], means[1], means[2], means[3], std_sgl, se_sgl]);
        sgl_trial_finals.push(cells.iter().map(|c| c[sgl_idx]).collect());
        sgl_pred_se.push(pred_se);
    }

    Ok(SweepOutcome { table, sgl_trial_finals, sgl_pred_se, divergence_report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    /// Small but structurally valid configuration for fast tests.
    fn tiny_problem() -> ProblemConfig {
        ProblemConfig {
            n_signal: 40,
            groups: 4,
            delta: 0.5,
            rho: 0.2,
            r_ga: 0.5,
            snr_db: 30.0,
            seed: 11,
        }
    }

    fn tiny_config() -> ExperimentConfig {
        let spec = DenoiserSpec::new(DenoiserKind::SparseGroupLasso, 0.2, 0.8, 1);
        let mut cfg = ExperimentConfig::new(tiny_problem(), spec);
        cfg.iters = 3;
        cfg.trials = 2;
        cfg.mc_samples = 5;
        cfg
    }

    #[test]
    fn dat_rendering_is_fixed_format() {
        let mut table = DatTable::new(&["a", "b"]);
        table.push_row(vec![0.0, 0.3]);
        table.push_row(vec![1.0, f64::NAN]);
        assert_eq!(render_dat(&table), "a b\n0.00000e0 3.00000e-1\n1.00000e0 nan\n");
    }

    #[test]
    fn dat_values_round_trip_through_text() {
        let vals = [0.0, 1.5e-7, -3.25, 12345.678];
        for v in vals {
            let text = format_value(v);
            let back: f64 = text.parse().unwrap();
            assert!(
                (back - v).abs() <= 1e-5 * v.abs().max(1e-300),
                "{v} → {text} → {back}"
            );
        }
        assert_eq!(format_value(f64::INFINITY), "nan");
    }

    #[test]
    fn empty_table_emits_header_only() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.dat");
        let table = DatTable::new(&["x", "y"]);
        emit_dat(&table, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x y\n");
    }

    #[test]
    fn emit_surfaces_path_on_io_failure() {
        let table = DatTable::new(&["x"]);
        let err = emit_dat(&table, Path::new("/nonexistent-dir/out.dat")).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.contains("nonexistent-dir")),
            other => panic!("expected an I/O error, got {other}"),
        }
    }

    #[test]
    fn minimal_convergence_run_has_expected_shape() {
        let mut cfg = tiny_config();
        cfg.trials = 1;
        cfg.iters = 1;
        let out = run_convergence_experiment(&cfg).unwrap();
        assert_eq!(out.table.header, ["iteration", "nmse_ista", "nmse_amp", "se_amp"]);
        assert_eq!(out.table.rows.len(), 1);
        let row = &out.table.rows[0];
        assert_eq!(row[0], 0.0);
        assert!(row.iter().all(|v| v.is_finite()), "row = {row:?}");
        assert!(out.divergence_report.is_empty());
    }

    #[test]
    fn convergence_runs_are_reproducible() {
        let cfg = tiny_config();
        let a = run_convergence_experiment(&cfg).unwrap();
        let b = run_convergence_experiment(&cfg).unwrap();
        assert_eq!(render_dat(&a.table), render_dat(&b.table));
    }

    #[test]
    fn convergence_rejects_multi_point_grids_and_missing_algorithms() {
        let mut cfg = tiny_config();
        cfg.snr_grid = vec![10.0, 20.0];
        assert!(matches!(run_convergence_experiment(&cfg), Err(Error::Config(_))));

        let mut cfg = tiny_config();
        cfg.algos = vec![Algo::Amp];
        assert!(matches!(run_convergence_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_point_sweep_has_seven_columns() {
        let mut cfg = tiny_config();
        cfg.snr_grid = vec![30.0];
        cfg.spec = DenoiserSpec::new(DenoiserKind::SparseGroupLasso, 0.2, 0.8, 5);
        let out = run_snr_sweep(&cfg).unwrap();
        assert_eq!(
            out.table.header,
            [
                "snr_db",
                "nmse_group_lasso",
                "nmse_real_sgl",
                "nmse_lasso",
                "nmse_sgl",
                "std_sgl",
                "se_sgl"
            ]
        );
        assert_eq!(out.table.rows.len(), 1);
        assert_eq!(out.table.rows[0][0], 30.0);
        assert!(out.table.rows[0].iter().all(|v| v.is_finite()));
        assert_eq!(out.sgl_trial_finals[0].len(), cfg.trials);
    }

    #[test]
    fn sweep_requires_all_four_denoisers_and_a_grid() {
        let mut cfg = tiny_config();
        cfg.snr_grid = vec![30.0];
        cfg.denoisers = vec![DenoiserKind::SparseGroupLasso];
        assert!(matches!(run_snr_sweep(&cfg), Err(Error::Config(_))));

        let mut cfg = tiny_config();
        cfg.snr_grid.clear();
        assert!(matches!(run_snr_sweep(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn aggregation_is_invariant_to_trial_arrival_order() {
        let series = vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![10.0, 0.5]];
        let direct = mean_by_iter(&series);
        // Results arriving in any schedule order are still keyed by trial
        // index before summation, so a permuted arrival changes nothing.
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; series.len()];
        for &arrival in &[2usize, 0, 1] {
            slots[arrival] = Some(series[arrival].clone());
        }
        let reassembled: Vec<Vec<f64>> = slots.into_iter().map(Option::unwrap).collect();
        let permuted = mean_by_iter(&reassembled);
        for (a, b) in direct.iter().zip(&permuted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diverging_trial_poisons_cells_and_fills_the_sidecar() {
        // Zero thresholds make the denoiser the identity, whose unit mean
        // derivative turns the memory coefficient into 1/δ = 2: every
        // singular-mode block of the joint (x, z) dynamics then has
        // determinant 2, so some eigenvalue has modulus ≥ √2 and the
        // memory-corrected iterates overflow. The run must flag that trial,
        // not abort. The plain gradient path has no memory term and its
        // convergent step keeps it finite, so only the corrected column is
        // poisoned.
        let mut cfg = tiny_config();
        cfg.spec = DenoiserSpec::new(DenoiserKind::Lasso, 0.0, 0.0, 1);
        cfg.trials = 1;
        cfg.iters = 2000;
        cfg.se_enabled = false;
        let out = run_convergence_experiment(&cfg).unwrap();
        assert!(
            !out.divergence_report.is_empty(),
            "expected at least one divergence note"
        );
        let last = out.table.rows.last().unwrap();
        assert!(last[2].is_nan(), "final amp cell should be poisoned: {last:?}");
        assert!(last[1].is_finite(), "ista cell should stay finite: {last:?}");
    }
}
