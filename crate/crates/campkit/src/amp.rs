//! AMP and ISTA recovery loops, plus the centered two-function form.
//!
//! The main loop alternates a residual update with Onsager correction, an
//! effective observation `r = x + Aᴴz`, and a proximal denoising step whose
//! thresholds scale with the estimated residual level `τ̂ = ‖z‖₂/√n`. ISTA
//! is the same loop with the Onsager term removed — the memory term is the
//! entire difference between the two algorithms, which is what the
//! convergence experiment showcases.
//!
//! [`run_centered_amp`] implements the centered recursion driven by two
//! indexed function families with their Onsager-mean callbacks. It exists so
//! the lift/collapse verification can compare a real lifted system against
//! an orbit produced by the complex form, and so the change of variables
//! connecting the centered form back to the recovery loop can be tested
//! numerically.

use num_complex::Complex64;

use crate::denoise::{apply_denoiser, onsager_mean, DenoiserKind, DenoiserSpec, Thresholds};
use crate::error::Error;
use crate::mat::{vec_norm, CMat};
use crate::problem::{nmse, ProblemInstance};
use crate::Result;

/// Which recovery loop to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Amp,
    Ista,
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amp" => Ok(Algo::Amp),
            "ista" => Ok(Algo::Ista),
            other => Err(Error::Config(format!("unknown algorithm '{other}' (expected amp or ista)"))),
        }
    }
}

/// Iterate state shared by AMP and ISTA.
///
/// After `t` completed steps: `x` is the current estimate, `z` the residual
/// of the last step, `r_eff` the effective observation the last denoiser
/// saw, `tau_hat = ‖z‖₂/√n`, and `onsager_prev` the mean derivative of the
/// last applied denoiser (zero for ISTA, which carries no memory term).
#[derive(Clone, Debug)]
pub struct AmpState {
    pub x: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub r_eff: Vec<Complex64>,
    pub tau_hat: f64,
    pub onsager_prev: f64,
    pub t: usize,
}

impl AmpState {
    /// Fresh state: `x = 0`, so the starting residual is the observation
    /// itself and no Onsager memory exists yet.
    pub fn init(inst: &ProblemInstance) -> Self {
        let n = inst.y.len();
        AmpState {
            x: vec![Complex64::new(0.0, 0.0); inst.x0.len()],
            z: inst.y.clone(),
            r_eff: vec![Complex64::new(0.0, 0.0); inst.x0.len()],
            tau_hat: vec_norm(&inst.y) / (n as f64).sqrt(),
            onsager_prev: 0.0,
            t: 0,
        }
    }
}

/// What one step actually did: the residual level it measured, the denoiser
/// kind and thresholds it applied, and the Onsager mean it recorded.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    pub tau_hat: f64,
    pub kind: DenoiserKind,
    pub thresholds: Thresholds,
    pub onsager: f64,
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn check_dims(state: &AmpState, inst: &ProblemInstance) -> Result<()> {
    let (n, big_n) = (inst.a.rows(), inst.a.cols());
    if state.x.len() != big_n || state.z.len() != n || inst.y.len() != n || inst.x0.len() != big_n {
        return Err(Error::Domain(format!(
            "state/instance dimension mismatch: x:{} z:{} vs A:{n}×{big_n}",
            state.x.len(),
            state.z.len()
        )));
    }
    Ok(())
}

/// Shared body of [`amp_step`] and [`ista_step`]; `with_onsager` selects the
/// memory term.
fn step(
    state: &mut AmpState,
    inst: &ProblemInstance,
    spec: &DenoiserSpec,
    with_onsager: bool,
) -> Result<StepRecord> {
    check_dims(state, inst)?;
    let t = state.t;
    let n = inst.y.len();
    let delta = n as f64 / state.x.len() as f64;

    // Residual: z = y − A x (+ Onsager memory for AMP).
    let ax = inst.a.mul_vec(&state.x);
    let memory = if with_onsager { state.onsager_prev / delta } else { 0.0 };
    let z: Vec<Complex64> = inst
        .y
        .iter()
        .zip(&ax)
        .zip(&state.z)
        .map(|((&y, &axj), &zprev)| y - axj + memory * zprev)
        .collect();
    if !all_finite(&z) {
        return Err(Error::Divergence { iteration: t });
    }
    let tau_hat = vec_norm(&z) / (n as f64).sqrt();
    // Entries can still be finite while their squared norm overflows; a
    // non-finite residual level would corrupt the thresholds (0·inf = NaN),
    // so it counts as divergence too.
    if !tau_hat.is_finite() {
        return Err(Error::Divergence { iteration: t });
    }

    // Effective observation and denoising. The memory-corrected recursion
    // keeps the effective observation unbiased with a unit coefficient on
    // Aᴴz. Without the memory term this is plain proximal gradient descent,
    // whose step must stay below the reciprocal of ‖A‖²; for an i.i.d.
    // CN(0, 1/n) matrix that squared operator norm concentrates at the
    // Marchenko–Pastur upper edge (1 + √(N/n))², so the gradient path uses
    // its reciprocal — a safely convergent, dimension-only constant. The
    // proximal map of a step-scaled penalty shrinks by step·λ, which keeps
    // the fixed point (the λ-regularized solution) independent of the step.
    let step_size = if with_onsager {
        1.0
    } else {
        (1.0 + (1.0 / delta).sqrt()).powi(-2)
    };

    // Threshold rule from the current residual level, kind from the schedule.
    let rule = spec.thresholds(tau_hat);
    let th = Thresholds::new(step_size * rule.lambda_g, step_size * rule.lambda_e);
    let kind = spec.kind_at(t);

    let ahz = inst.a.adjoint_mul_vec(&z);
    let r: Vec<Complex64> =
        state.x.iter().zip(&ahz).map(|(&x, &c)| x + step_size * c).collect();
    let x_next = apply_denoiser(kind, &r, &inst.groups, th)?;
    if !all_finite(&x_next) {
        return Err(Error::Divergence { iteration: t });
    }
    let onsager = if with_onsager { onsager_mean(kind, &r, &inst.groups, th) } else { 0.0 };

    state.x = x_next;
    state.z = z;
    state.r_eff = r;
    state.tau_hat = tau_hat;
    state.onsager_prev = onsager;
    state.t = t + 1;
    Ok(StepRecord { tau_hat, kind, thresholds: th, onsager })
}

/// One AMP iteration: Onsager-corrected residual, effective observation,
/// denoise, and record the applied map's mean derivative for the next step.
pub fn amp_step(
    state: &mut AmpState,
    inst: &ProblemInstance,
    spec: &DenoiserSpec,
) -> Result<StepRecord> {
    step(state, inst, spec, true)
}

/// One ISTA iteration: plain gradient residual (no memory term) with a
/// fixed convergent step set by the measurement ensemble's spectral edge,
/// same thresholds and denoiser schedule as AMP.
pub fn ista_step(
    state: &mut AmpState,
    inst: &ProblemInstance,
    spec: &DenoiserSpec,
) -> Result<StepRecord> {
    step(state, inst, spec, false)
}

/// Per-iteration record of a recovery run.
///
/// Both lists always have exactly `iters` entries. If the iteration
/// diverged, computation stops at `diverged_at` and the remaining cells
/// hold NaN; `final_x` is then the last finite estimate.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub nmse_per_iter: Vec<f64>,
    pub tau_hat_per_iter: Vec<f64>,
    pub final_x: Vec<Complex64>,
    pub diverged_at: Option<usize>,
}

/// Run `iters` steps of the chosen algorithm from `x⁰ = 0`, recording NMSE
/// and `τ̂` per iteration. Divergence truncates computation and flags the
/// trajectory instead of failing the run.
pub fn run_recovery(
    inst: &ProblemInstance,
    algo: Algo,
    spec: &DenoiserSpec,
    iters: usize,
) -> Result<Trajectory> {
    if iters == 0 {
        return Err(Error::Config("iteration count must be at least 1".into()));
    }
    spec.validate()?;
    // Surface a degenerate truth before burning any iterations on it.
    if inst.x0.iter().map(|z| z.norm_sqr()).sum::<f64>() == 0.0 {
        return Err(Error::Domain("ground truth has zero norm; NMSE is undefined".into()));
    }
    let mut state = AmpState::init(inst);
    let mut nmse_per_iter = Vec::with_capacity(iters);
    let mut tau_hat_per_iter = Vec::with_capacity(iters);
    let mut diverged_at = None;
    for t in 0..iters {
        let stepped = match algo {
            Algo::Amp => amp_step(&mut state, inst, spec),
            Algo::Ista => ista_step(&mut state, inst, spec),
        };
        match stepped {
            Ok(record) => {
                let err = nmse(&state.x, &inst.x0)?;
                // An estimate whose error is no longer representable has
                // diverged even when every entry is still a finite float.
                if !err.is_finite() {
                    diverged_at = Some(t);
                    break;
                }
                nmse_per_iter.push(err);
                tau_hat_per_iter.push(record.tau_hat);
            }
            Err(Error::Divergence { iteration }) => {
                diverged_at = Some(iteration);
                break;
            }
            Err(other) => return Err(other),
        }
    }
    nmse_per_iter.resize(iters, f64::NAN);
    tau_hat_per_iter.resize(iters, f64::NAN);
    Ok(Trajectory { nmse_per_iter, tau_hat_per_iter, final_x: state.x, diverged_at })
}

/// Boxed indexed vector map `(k, input) → output`; see [`FunctionFamily`].
pub type IndexedMap<'a> = Box<dyn Fn(usize, &[Complex64]) -> Vec<Complex64> + Sync + 'a>;

/// Boxed indexed Onsager-mean callback `(k, input) → ⟨∂map_j/∂input_j⟩`.
pub type IndexedOnsager<'a> = Box<dyn Fn(usize, &[Complex64]) -> Complex64 + Sync + 'a>;

/// An indexed family of vector maps with its Onsager-mean callback.
///
/// `map(k, input)` evaluates the k-th member; `onsager(k, input)` returns
/// the plain mean Wirtinger derivative `⟨∂(map_j)/∂(input_j)⟩` — the engine
/// applies any dimensional scaling itself. The lifetime lets a family
/// borrow the state it wraps (e.g. per-iteration threshold records).
pub struct FunctionFamily<'a> {
    pub map: IndexedMap<'a>,
    pub onsager: IndexedOnsager<'a>,
}

impl<'a> FunctionFamily<'a> {
    pub fn new(
        map: impl Fn(usize, &[Complex64]) -> Vec<Complex64> + Sync + 'a,
        onsager: impl Fn(usize, &[Complex64]) -> Complex64 + Sync + 'a,
    ) -> Self {
        FunctionFamily { map: Box::new(map), onsager: Box::new(onsager) }
    }
}

/// Orbit of the centered two-function recursion: `u_seq[k] = u^k` and
/// `v_seq[k] = v^k` for `k = 0..=T`.
#[derive(Clone, Debug)]
pub struct CenteredIterates {
    pub u_seq: Vec<Vec<Complex64>>,
    pub v_seq: Vec<Vec<Complex64>>,
}

/// Run the centered recursion
/// `v^k = A f^k(u^k) − b^k g^{k−1}(v^{k−1})`,
/// `u^{k+1} = Aᴴ g^k(v^k) − c^k f^k(u^k)`,
/// with `g^{−1}(v^{−1}) = 0`, `b^k = (1/δ)·⟨(f^k)′(u^k)⟩`, and
/// `c^k = ⟨(g^k)′(v^k)⟩`, where `δ = rows/cols` of `A`.
pub fn run_centered_amp(
    a: &CMat,
    f: &FunctionFamily,
    g: &FunctionFamily,
    u0: &[Complex64],
    big_t: usize,
) -> Result<CenteredIterates> {
    let (n, big_n) = (a.rows(), a.cols());
    if u0.len() != big_n {
        return Err(Error::Domain(format!(
            "initial iterate length {} does not match matrix width {big_n}",
            u0.len()
        )));
    }
    let inv_delta = big_n as f64 / n as f64;
    let mut u_seq = vec![u0.to_vec()];
    let mut v_seq: Vec<Vec<Complex64>> = Vec::with_capacity(big_t + 1);
    let mut g_prev = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=big_t {
        let fu = (f.map)(k, &u_seq[k]);
        if fu.len() != big_n {
            return Err(Error::Domain(format!(
                "f^{k} returned length {} (expected {big_n})",
                fu.len()
            )));
        }
        let b = inv_delta * (f.onsager)(k, &u_seq[k]);
        let afu = a.mul_vec(&fu);
        let v: Vec<Complex64> =
            afu.iter().zip(&g_prev).map(|(&lhs, &gp)| lhs - b * gp).collect();
        if !all_finite(&v) {
            return Err(Error::Divergence { iteration: k });
        }
        v_seq.push(v);
        if k < big_t {
            let gv = (g.map)(k, &v_seq[k]);
            if gv.len() != n {
                return Err(Error::Domain(format!(
                    "g^{k} returned length {} (expected {n})",
                    gv.len()
                )));
            }
            let c = (g.onsager)(k, &v_seq[k]);
            let ahgv = a.adjoint_mul_vec(&gv);
            let u_next: Vec<Complex64> =
                ahgv.iter().zip(&fu).map(|(&lhs, &fj)| lhs - c * fj).collect();
            if !all_finite(&u_next) {
                return Err(Error::Divergence { iteration: k + 1 });
            }
            u_seq.push(u_next);
            g_prev = gv;
        }
    }
    Ok(CenteredIterates { u_seq, v_seq })
}
