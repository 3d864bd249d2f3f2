//! Problem configuration, seeded instance generation, and error metrics.
//!
//! An instance of the inverse problem is `y = A·x0 + w` with `A ∈ ℂ^{n×N}`
//! i.i.d. circular Gaussian of entry variance `1/n`, a ground truth `x0`
//! whose nonzero entries sit in a few active groups and have unit modulus,
//! and circular Gaussian noise `w` of per-entry variance `sigma_w2`.
//!
//! All randomness flows through [`stream_rng`]: one ChaCha12 generator per
//! (seed, stream) pair, so independent trials are independent sub-streams of
//! one named seed and any experiment is reproducible from its seed alone.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::io::Write;

use crate::error::Error;
use crate::mat::CMat;
use crate::Result;

/// Deterministic sub-stream generator: same `(seed, stream)` always yields
/// the same sequence, and distinct streams are statistically independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One `re`/`im` pair with independent `𝒩(0, variance/2)` parts, i.e. a
/// circular complex Gaussian of total variance `variance`.
pub fn sample_complex_gaussian(variance: f64, rng: &mut impl Rng) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Dimensions and statistical parameters of the inverse problem.
///
/// `n_signal` is the signal length `N`, `groups` the number of equal
/// contiguous groups `G`, `delta = n/N` the undersampling ratio, `rho = k/n`
/// the sparsity ratio, and `r_ga` the fraction of groups that carry actives.
/// Derived counts (`n`, `k`, group size, actives per group) are methods so
/// they cannot drift out of sync with the primary fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub n_signal: usize,
    pub groups: usize,
    pub delta: f64,
    pub rho: f64,
    pub r_ga: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl ProblemConfig {
    /// Measurement count `n = round(delta · N)`.
    pub fn n_measurements(&self) -> usize {
        (self.delta * self.n_signal as f64).round() as usize
    }

    /// Group size `S = N / G`.
    pub fn group_size(&self) -> usize {
        self.n_signal / self.groups
    }

    /// Active-element count `k = round(rho · n)`.
    pub fn k_active(&self) -> usize {
        (self.rho * self.n_measurements() as f64).round() as usize
    }

    /// Number of active groups `round(r_ga · G)`.
    pub fn active_groups(&self) -> usize {
        (self.r_ga * self.groups as f64).round() as usize
    }

    /// Actives per active group, `k / active_groups`.
    pub fn actives_per_group(&self) -> usize {
        if self.k_active() == 0 {
            0
        } else {
            self.k_active() / self.active_groups()
        }
    }

    /// Within-group active fraction `r_ea = k / (active_groups · S)`.
    pub fn r_ea(&self) -> f64 {
        if self.k_active() == 0 {
            0.0
        } else {
            self.k_active() as f64 / (self.active_groups() * self.group_size()) as f64
        }
    }

    /// Noise variance implied by `snr_db` (see [`snr_to_noise_variance`]).
    pub fn sigma_w2(&self) -> f64 {
        snr_to_noise_variance(self.snr_db, self)
    }

    /// Check all structural invariants, returning a configuration error
    /// naming the first violated one.
    pub fn validate(&self) -> Result<()> {
        if self.n_signal == 0 || self.groups == 0 {
            return Err(Error::Config("signal length and group count must be positive".into()));
        }
        if !self.n_signal.is_multiple_of(self.groups) {
            return Err(Error::Config(format!(
                "group count {} must divide signal length {}",
                self.groups, self.n_signal
            )));
        }
        if self.delta.is_nan() || self.delta <= 0.0 || self.n_measurements() == 0 {
            return Err(Error::Config(format!(
                "undersampling ratio {} must yield at least one measurement",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("sparsity ratio {} must lie in [0, 1]", self.rho)));
        }
        if !(self.r_ga > 0.0 && self.r_ga <= 1.0) {
            return Err(Error::Config(format!(
                "active-group fraction {} must lie in (0, 1]",
                self.r_ga
            )));
        }
        let k = self.k_active();
        if k > 0 {
            let ga = self.active_groups();
            if ga == 0 {
                return Err(Error::Config(
                    "active-group fraction rounds to zero groups while k > 0".into(),
                ));
            }
            if !k.is_multiple_of(ga) {
                return Err(Error::Config(format!(
                    "{} active elements cannot be split evenly among {} active groups",
                    k, ga
                )));
            }
            if k / ga > self.group_size() {
                return Err(Error::Config(format!(
                    "infeasible sparsity: {} actives per group exceed group size {}",
                    k / ga,
                    self.group_size()
                )));
            }
        }
        Ok(())
    }
}

/// Noise variance from an SNR in dB, under the per-measurement convention
/// `SNR = E‖A·x0‖² / E‖w‖² = rho / sigma_w2`, i.e.
/// `sigma_w2 = rho · 10^(−snr_db/10)`.
pub fn snr_to_noise_variance(snr_db: f64, cfg: &ProblemConfig) -> f64 {
    cfg.rho * 10f64.powf(-snr_db / 10.0)
}

/// Partition of signal indices into equal contiguous groups.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupStructure {
    /// Element index → group index.
    pub group_of: Vec<usize>,
    /// Group index → sorted member indices.
    pub members: Vec<Vec<usize>>,
}

impl GroupStructure {
    /// Contiguous blocks of size `n_signal / groups`.
    pub fn contiguous(n_signal: usize, groups: usize) -> Result<Self> {
        if groups == 0 || !n_signal.is_multiple_of(groups) {
            return Err(Error::Config(format!(
                "cannot split {} elements into {} equal groups",
                n_signal, groups
            )));
        }
        let size = n_signal / groups;
        let group_of = (0..n_signal).map(|j| j / size).collect();
        let members = (0..groups).map(|g| (g * size..(g + 1) * size).collect()).collect();
        Ok(GroupStructure { group_of, members })
    }

    /// Total number of elements covered.
    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }
}

/// A fully materialized inverse-problem instance.
///
/// `y` is computed once at construction (`y = A·x0 + w`) and stored, so the
/// identity holds bit-exactly for the instance's lifetime.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub a: CMat,
    pub x0: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub groups: GroupStructure,
    pub sigma_w2: f64,
    pub seed: u64,
}

/// Sample an i.i.d. circular complex Gaussian matrix with the given per-entry
/// variance. Entries are drawn in row-major order, so the output is a pure
/// function of the generator state.
pub fn sample_complex_gaussian_matrix(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut impl Rng,
) -> Result<CMat> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("matrix dimensions {rows}×{cols} must be positive")));
    }
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::Config(format!("entry variance {variance} must be positive")));
    }
    let entries: Vec<Complex64> =
        (0..rows * cols).map(|_| sample_complex_gaussian(variance, rng)).collect();
    Ok(CMat::from_entries(rows, cols, &entries))
}

/// Draw a ground-truth vector from the structured prior: `active_groups`
/// groups chosen uniformly, `k / active_groups` positions per chosen group,
/// each active entry `e^{iθ}` with `θ ~ Uniform[0, 2π)`.
pub fn sample_ground_truth(
    cfg: &ProblemConfig,
    groups: &GroupStructure,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let mut x0 = vec![Complex64::new(0.0, 0.0); cfg.n_signal];
    let k = cfg.k_active();
    if k == 0 {
        return x0;
    }
    let per_group = cfg.actives_per_group();
    let chosen = rand::seq::index::sample(rng, cfg.groups, cfg.active_groups());
    for g in chosen.iter() {
        let positions = rand::seq::index::sample(rng, cfg.group_size(), per_group);
        for p in positions.iter() {
            let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            x0[groups.members[g][p]] = Complex64::new(theta.cos(), theta.sin());
        }
    }
    x0
}

/// Generate a complete instance from a validated configuration.
///
/// Draw order is fixed (support → phases → `A` → `w`), so a given generator
/// state always produces the same instance.
pub fn generate_instance(cfg: &ProblemConfig, rng: &mut impl Rng) -> Result<ProblemInstance> {
    cfg.validate()?;
    let groups = GroupStructure::contiguous(cfg.n_signal, cfg.groups)?;
    let x0 = sample_ground_truth(cfg, &groups, rng);

    let n = cfg.n_measurements();
    let a = sample_complex_gaussian_matrix(n, cfg.n_signal, 1.0 / n as f64, rng)?;
    let sigma_w2 = cfg.sigma_w2();
    let w: Vec<Complex64> = (0..n)
        .map(|_| {
            if sigma_w2 > 0.0 {
                sample_complex_gaussian(sigma_w2, rng)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();

    let mut y = a.mul_vec(&x0);
    for (yi, wi) in y.iter_mut().zip(&w) {
        *yi += wi;
    }
    Ok(ProblemInstance { a, x0, w, y, groups, sigma_w2, seed: cfg.seed })
}

/// Normalized mean-squared error `‖estimate − truth‖² / ‖truth‖²`.
pub fn nmse(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Domain(format!(
            "estimate length {} does not match truth length {}",
            estimate.len(),
            truth.len()
        )));
    }
    let denom: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if denom <= 0.0 {
        return Err(Error::Domain("NMSE is undefined for a zero-norm truth".into()));
    }
    let num: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).norm_sqr()).sum();
    Ok(num / denom)
}

/// Plain-text debug dump: header `n N seed`, then one `re im` pair per line
/// for `A` (row-major), `x0`, `w`, and `y`, in that order.
pub fn write_debug_dump(inst: &ProblemInstance, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", inst.a.rows(), inst.a.cols(), inst.seed)?;
    for z in inst.a.entries() {
        writeln!(out, "{} {}", z.re, z.im)?;
    }
    for part in [&inst.x0, &inst.w, &inst.y] {
        for z in part {
            writeln!(out, "{} {}", z.re, z.im)?;
        }
    }
    Ok(())
}
