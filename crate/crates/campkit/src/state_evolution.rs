//! Scalar state evolution: the τ² recursion evaluated by Monte Carlo.
//!
//! State evolution tracks the recovery loop through a single scalar: the
//! effective observation at iteration `t` behaves like `x₀ + τ_t·Z` with
//! `Z ~ 𝒞𝒩(0, I)`, so the next noise level is
//!
//! ```text
//! τ_{t+1}² = σ_w² + (1/δ)·E‖η^t(x₀ + τ_t·Z) − x₀‖²/N
//! ```
//!
//! with the same thresholds (`λ = α·τ_t`) and schedule the algorithm itself
//! uses at iteration `t`. The expectation is estimated by Monte Carlo with a
//! fresh structured-prior draw of `x₀` per sample. Predicted NMSE follows
//! from the error identity: the iteration-`t` estimate has mean squared
//! error `δ·(τ_{t+1}² − σ_w²)`, normalized here by the signal power `k/N`.
//!
//! [`relation_coefficient`] is the properness diagnostic: for the residual
//! vectors of a well-behaved complex run, `|E[z²]|` vanishes relative to
//! `E[|z|²]` — the empirical check that the complex recursion does not
//! secretly need the doubled real state.

use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;

use crate::denoise::{apply_denoiser, DenoiserSpec};
use crate::error::Error;
use crate::problem::{sample_complex_gaussian, sample_ground_truth, GroupStructure, ProblemConfig};
use crate::Result;

/// Monte-Carlo configuration for the τ² recursion.
#[derive(Clone, Debug)]
pub struct SeConfig {
    /// Draws per recursion step.
    pub mc_samples: usize,
    /// Signal dimension used for the MC draws (defaults to the experiment's
    /// own `N`; smaller values trade accuracy for speed).
    pub n_se: usize,
    pub problem: ProblemConfig,
    pub schedule: DenoiserSpec,
}

impl SeConfig {
    /// The problem configuration rescaled to the MC dimension, keeping all
    /// fractions (undersampling, sparsity, group counts) identical.
    fn scaled_problem(&self) -> Result<ProblemConfig> {
        let scaled = ProblemConfig { n_signal: self.n_se, ..self.problem.clone() };
        scaled.validate()?;
        Ok(scaled)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        self.problem.validate()?;
        self.schedule.validate()?;
        self.scaled_problem()?;
        Ok(())
    }
}

/// Predicted trajectory: `tau_sq[t]` for `t = 0..=T`, and per-iteration NMSE
/// predictions (`nmse_pred[t]` pairs with the estimate produced by iteration
/// `t`, i.e. with `tau_sq[t+1]`) together with their MC standard errors.
#[derive(Clone, Debug)]
pub struct SeTrajectory {
    pub tau_sq: Vec<f64>,
    pub nmse_pred: Vec<f64>,
    pub nmse_pred_se: Vec<f64>,
}

/// Exact starting level: with `x⁰ = 0` the full signal power passes through,
/// so `τ₀² = σ_w² + (1/δ)·(k/N)` — the unit-modulus prior makes `E‖x₀‖²/N`
/// exactly the active fraction, no sampling needed.
pub fn se_tau0(cfg: &SeConfig) -> f64 {
    let p = &cfg.problem;
    let signal_power = p.k_active() as f64 / p.n_signal as f64;
    p.sigma_w2() + signal_power / p.delta
}

/// One recursion step's result: the next τ² and the Monte-Carlo mean/standard
/// error of the normalized denoising MSE it was built from.
#[derive(Clone, Copy, Debug)]
pub struct SeStepOutcome {
    pub tau_sq_next: f64,
    /// MC mean of `‖η(x₀ + τZ) − x₀‖²/N_se`.
    pub mse_mean: f64,
    /// Standard error of that mean.
    pub mse_se: f64,
}

/// Advance the recursion one step at iteration `t` by Monte Carlo, drawing a
/// fresh structured `x₀` and `Z ~ 𝒞𝒩(0, I)` per sample.
pub fn se_step(
    tau_sq_t: f64,
    t: usize,
    cfg: &SeConfig,
    rng: &mut ChaCha12Rng,
) -> Result<SeStepOutcome> {
    if tau_sq_t.is_nan() || tau_sq_t < 0.0 {
        return Err(Error::Domain(format!("tau² = {tau_sq_t} must be nonnegative")));
    }
    let scaled = cfg.scaled_problem()?;
    let groups = GroupStructure::contiguous(scaled.n_signal, scaled.groups)?;
    let tau = tau_sq_t.sqrt();
    let th = cfg.schedule.thresholds(tau);
    let kind = cfg.schedule.kind_at(t);

    let mc = cfg.mc_samples;
    let mut draws = Vec::with_capacity(mc);
    let mut arg = vec![Complex64::new(0.0, 0.0); scaled.n_signal];
    for _ in 0..mc {
        let x0 = sample_ground_truth(&scaled, &groups, rng);
        for (slot, &x) in arg.iter_mut().zip(&x0) {
            *slot = x + tau * sample_complex_gaussian(1.0, rng);
        }
        let denoised = apply_denoiser(kind, &arg, &groups, th)?;
        let mse: f64 = denoised
            .iter()
            .zip(&x0)
            .map(|(d, x)| (d - x).norm_sqr())
            .sum::<f64>()
            / scaled.n_signal as f64;
        draws.push(mse);
    }
    let mean = draws.iter().sum::<f64>() / mc as f64;
    if !mean.is_finite() {
        return Err(Error::Divergence { iteration: t });
    }
    // Two-pass variance: the one-pass form cancels catastrophically when the
    // draws are (near-)constant, and a fixed point should report se = 0.
    let mse_se = if mc > 1 {
        let ss = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>();
        (ss / ((mc - 1) as f64 * mc as f64)).sqrt()
    } else {
        0.0
    };
    Ok(SeStepOutcome {
        tau_sq_next: cfg.problem.sigma_w2() + mean / cfg.problem.delta,
        mse_mean: mean,
        mse_se,
    })
}

/// Chain [`se_tau0`] and [`se_step`] for `T` iterations and derive the NMSE
/// predictions via the error identity.
pub fn se_predict(cfg: &SeConfig, big_t: usize, rng: &mut ChaCha12Rng) -> Result<SeTrajectory> {
    if big_t == 0 {
        return Err(Error::Config("prediction horizon must be at least 1".into()));
    }
    cfg.validate()?;
    let signal_power = cfg.problem.k_active() as f64 / cfg.problem.n_signal as f64;
    let mut tau_sq = Vec::with_capacity(big_t + 1);
    let mut nmse_pred = Vec::with_capacity(big_t);
    let mut nmse_pred_se = Vec::with_capacity(big_t);
    tau_sq.push(se_tau0(cfg));
    for t in 0..big_t {
        let outcome = se_step(tau_sq[t], t, cfg, rng)?;
        tau_sq.push(outcome.tau_sq_next);
        // NMSE identity: δ·(τ_{t+1}² − σ_w²)/(k/N) = mse_mean/(k/N).
        nmse_pred.push(outcome.mse_mean / signal_power);
        nmse_pred_se.push(outcome.mse_se / signal_power);
    }
    Ok(SeTrajectory { tau_sq, nmse_pred, nmse_pred_se })
}

/// Properness diagnostic `|mean(z²)| / mean(|z|²)`: near zero for proper
/// (circularly symmetric) samples, 1 for maximally improper ones.
pub fn relation_coefficient(samples: &[Complex64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 samples for the properness diagnostic, got {}",
            samples.len()
        )));
    }
    let m = samples.len() as f64;
    let pseudo: Complex64 = samples.iter().map(|z| z * z).sum::<Complex64>() / m;
    let power: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
    if power == 0.0 {
        return Err(Error::Domain("all-zero samples have no second moment".into()));
    }
    Ok(pseudo.norm() / power)
}
