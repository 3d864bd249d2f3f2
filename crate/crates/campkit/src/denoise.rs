//! Proximal denoisers and their Onsager (Wirtinger-derivative) averages.
//!
//! The workhorse is the complex sparse group LASSO (SGL) proximal map: each
//! entry is soft-thresholded at `lambda_e`, then every group is shrunk
//! toward zero by a factor driven by the surviving group norm and
//! `lambda_g`. The map is non-separable — an entry's output depends on its
//! whole group — which is exactly why its Onsager average below involves
//! group-level terms and not just per-entry derivatives.
//!
//! LASSO and group LASSO are the `lambda_g = 0` / `lambda_e = 0`
//! specializations of the same code path, so the degeneracy chain holds by
//! construction. `REAL_SGL` is a baseline that runs the real SGL proximal
//! independently on the real and imaginary parts; it deliberately breaks
//! phase equivariance and exists to quantify what joint complex shrinkage
//! buys.
//!
//! Boundary convention: an entry exactly at `|r_j| = lambda_e`, or a group
//! exactly at `‖soft(r_g)‖ = lambda_g`, counts as inactive. These are
//! measure-zero events and the strict inequality keeps the Onsager average
//! well-defined there.

use num_complex::Complex64;

use crate::error::Error;
use crate::problem::GroupStructure;
use crate::Result;

/// Group-level and element-level shrinkage thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub lambda_g: f64,
    pub lambda_e: f64,
}

impl Thresholds {
    pub fn new(lambda_g: f64, lambda_e: f64) -> Self {
        Thresholds { lambda_g, lambda_e }
    }
}

/// Which proximal map to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DenoiserKind {
    /// Element-wise complex soft thresholding only (`lambda_g = 0`).
    Lasso,
    /// Group shrinkage only (`lambda_e = 0`).
    GroupLasso,
    /// Element-wise then group-wise shrinkage.
    SparseGroupLasso,
    /// Real SGL applied independently to real and imaginary parts.
    RealSparseGroupLasso,
}

impl DenoiserKind {
    /// Stable lowercase name used by the CLI and reports.
    pub fn name(&self) -> &'static str {
        match self {
            DenoiserKind::Lasso => "lasso",
            DenoiserKind::GroupLasso => "gl",
            DenoiserKind::SparseGroupLasso => "sgl",
            DenoiserKind::RealSparseGroupLasso => "real-sgl",
        }
    }

    /// Zero out the threshold a kind does not use.
    pub fn effective_thresholds(&self, th: Thresholds) -> Thresholds {
        match self {
            DenoiserKind::Lasso => Thresholds::new(0.0, th.lambda_e),
            DenoiserKind::GroupLasso => Thresholds::new(th.lambda_g, 0.0),
            _ => th,
        }
    }
}

impl std::str::FromStr for DenoiserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(DenoiserKind::Lasso),
            "gl" | "group-lasso" => Ok(DenoiserKind::GroupLasso),
            "sgl" => Ok(DenoiserKind::SparseGroupLasso),
            "real-sgl" | "real_sgl" => Ok(DenoiserKind::RealSparseGroupLasso),
            other => Err(Error::Config(format!(
                "unknown denoiser '{other}' (expected lasso, gl, sgl, or real-sgl)"
            ))),
        }
    }
}

/// Denoiser selection plus its threshold scaling and application schedule.
///
/// Per-iteration thresholds are `lambda_g = alpha_g·tau_hat` and
/// `lambda_e = alpha_e·tau_hat`. With `kappa > 1`, the group-aware kind runs
/// only at iterations `t ≡ 0 (mod kappa)`; the iterations in between fall
/// back to plain LASSO with the same `lambda_e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    pub alpha_g: f64,
    pub alpha_e: f64,
    pub kappa: usize,
}

impl DenoiserSpec {
    pub fn new(kind: DenoiserKind, alpha_g: f64, alpha_e: f64, kappa: usize) -> Self {
        DenoiserSpec { kind, alpha_g, alpha_e, kappa }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(Error::Config("application period kappa must be at least 1".into()));
        }
        if self.alpha_g < 0.0 || self.alpha_e < 0.0 {
            return Err(Error::Config("threshold scale factors must be nonnegative".into()));
        }
        Ok(())
    }

    /// Kind actually applied at iteration `t` under the kappa schedule.
    pub fn kind_at(&self, t: usize) -> DenoiserKind {
        match self.kind {
            DenoiserKind::SparseGroupLasso | DenoiserKind::RealSparseGroupLasso
                if self.kappa > 1 && !t.is_multiple_of(self.kappa) =>
            {
                DenoiserKind::Lasso
            }
            kind => kind,
        }
    }

    /// Thresholds at noise scale `tau_hat`.
    pub fn thresholds(&self, tau_hat: f64) -> Thresholds {
        Thresholds::new(self.alpha_g * tau_hat, self.alpha_e * tau_hat)
    }
}

/// Complex soft threshold of a single entry: shrink the modulus by
/// `lambda_e`, preserving phase; zero at or below the threshold.
#[inline]
pub fn soft_threshold_entry(r: Complex64, lambda_e: f64) -> Complex64 {
    let m = r.norm();
    if m <= lambda_e || m == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        r * ((m - lambda_e) / m)
    }
}

/// Element-wise complex soft thresholding.
pub fn soft_threshold(r: &[Complex64], lambda_e: f64) -> Vec<Complex64> {
    r.iter().map(|&z| soft_threshold_entry(z, lambda_e)).collect()
}

/// Soft-threshold a group and return the surviving norm alongside.
fn group_soft(r: &[Complex64], members: &[usize], lambda_e: f64) -> (Vec<Complex64>, f64) {
    let st: Vec<Complex64> = members.iter().map(|&j| soft_threshold_entry(r[j], lambda_e)).collect();
    let norm = st.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (st, norm)
}

/// SGL proximal map: element-wise soft threshold, then group shrinkage by
/// `(1 − lambda_g/‖soft(r_g)‖)₊`.
fn sgl_apply(r: &[Complex64], groups: &GroupStructure, th: Thresholds) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); r.len()];
    for members in &groups.members {
        let (st, norm) = group_soft(r, members, th.lambda_e);
        let factor = if norm > th.lambda_g { 1.0 - th.lambda_g / norm } else { 0.0 };
        if factor > 0.0 {
            for (&j, &s) in members.iter().zip(&st) {
                out[j] = factor * s;
            }
        }
    }
    out
}

/// Real scalar soft threshold.
#[inline]
fn soft_threshold_real(x: f64, lambda_e: f64) -> f64 {
    if x > lambda_e {
        x - lambda_e
    } else if x < -lambda_e {
        x + lambda_e
    } else {
        0.0
    }
}

/// Real SGL proximal map on one real plane.
fn real_sgl_plane(x: &[f64], groups: &GroupStructure, th: Thresholds) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for members in &groups.members {
        let st: Vec<f64> = members.iter().map(|&j| soft_threshold_real(x[j], th.lambda_e)).collect();
        let norm = st.iter().map(|v| v * v).sum::<f64>().sqrt();
        let factor = if norm > th.lambda_g { 1.0 - th.lambda_g / norm } else { 0.0 };
        if factor > 0.0 {
            for (&j, &s) in members.iter().zip(&st) {
                out[j] = factor * s;
            }
        }
    }
    out
}

/// Apply the selected proximal map to a full-length vector.
pub fn apply_denoiser(
    kind: DenoiserKind,
    r: &[Complex64],
    groups: &GroupStructure,
    th: Thresholds,
) -> Result<Vec<Complex64>> {
    if r.len() != groups.len() {
        return Err(Error::Domain(format!(
            "input length {} does not match group structure over {} elements",
            r.len(),
            groups.len()
        )));
    }
    match kind {
        DenoiserKind::RealSparseGroupLasso => {
            let re: Vec<f64> = r.iter().map(|z| z.re).collect();
            let im: Vec<f64> = r.iter().map(|z| z.im).collect();
            let out_re = real_sgl_plane(&re, groups, th);
            let out_im = real_sgl_plane(&im, groups, th);
            Ok(out_re.into_iter().zip(out_im).map(|(a, b)| Complex64::new(a, b)).collect())
        }
        _ => Ok(sgl_apply(r, groups, kind.effective_thresholds(th))),
    }
}

/// Mean Wirtinger derivative `⟨η′⟩` of the SGL map, evaluated analytically.
///
/// Per active group `g` (surviving norm `ν_g > lambda_g`, strictly):
///   `lambda_g/(2 ν_g) + (1 − lambda_g/ν_g) · Σ_{j ∈ S_g} (1 − lambda_e/(2|r_j|))`
/// where `S_g` collects the entries with `|r_j| > lambda_e` (strictly).
/// Inactive entries and groups contribute zero. The sum is divided by the
/// full vector length.
pub fn sgl_onsager_mean(r: &[Complex64], groups: &GroupStructure, th: Thresholds) -> f64 {
    let mut total = 0.0;
    for members in &groups.members {
        let (_, norm) = group_soft(r, members, th.lambda_e);
        if norm <= th.lambda_g || norm == 0.0 {
            continue;
        }
        let group_factor = 1.0 - th.lambda_g / norm;
        let mut element_sum = 0.0;
        for &j in members {
            let m = r[j].norm();
            if m > th.lambda_e {
                element_sum += 1.0 - th.lambda_e / (2.0 * m);
            }
        }
        total += th.lambda_g / (2.0 * norm) + group_factor * element_sum;
    }
    total / r.len() as f64
}

/// Derivative mean of the real SGL proximal on one plane:
/// `Σ_g [lambda_g/ν_g + (1 − lambda_g/ν_g)·|S_g|] / len`, active groups only.
fn real_sgl_plane_derivative_mean(x: &[f64], groups: &GroupStructure, th: Thresholds) -> f64 {
    let mut total = 0.0;
    for members in &groups.members {
        let st: Vec<f64> = members.iter().map(|&j| soft_threshold_real(x[j], th.lambda_e)).collect();
        let norm = st.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= th.lambda_g || norm == 0.0 {
            continue;
        }
        let active = members.iter().filter(|&&j| x[j].abs() > th.lambda_e).count();
        total += th.lambda_g / norm + (1.0 - th.lambda_g / norm) * active as f64;
    }
    total / x.len() as f64
}

/// Mean Wirtinger derivative of the real-decoupled SGL baseline.
///
/// The map sends `Re r` and `Im r` through independent real SGL proximals,
/// so its Wirtinger derivative at entry `j` is
/// `(∂Re η/∂Re r + ∂Im η/∂Im r)/2`; the mean is the same combination of the
/// two per-plane real derivative means.
pub fn real_sgl_onsager_mean(r: &[Complex64], groups: &GroupStructure, th: Thresholds) -> f64 {
    let re: Vec<f64> = r.iter().map(|z| z.re).collect();
    let im: Vec<f64> = r.iter().map(|z| z.im).collect();
    0.5 * (real_sgl_plane_derivative_mean(&re, groups, th)
        + real_sgl_plane_derivative_mean(&im, groups, th))
}

/// Mean Wirtinger derivative for whichever kind is applied.
pub fn onsager_mean(
    kind: DenoiserKind,
    r: &[Complex64],
    groups: &GroupStructure,
    th: Thresholds,
) -> f64 {
    match kind {
        DenoiserKind::RealSparseGroupLasso => real_sgl_onsager_mean(r, groups, th),
        _ => sgl_onsager_mean(r, groups, kind.effective_thresholds(th)),
    }
}

/// Distance from `r` to the nearest activation boundary of the given kind:
/// element moduli to `lambda_e` and surviving group norms to `lambda_g`
/// (per plane for the real-decoupled baseline). The finite-difference oracle
/// refuses to run closer than ten steps to a boundary.
pub fn boundary_distance(
    kind: DenoiserKind,
    r: &[Complex64],
    groups: &GroupStructure,
    th: Thresholds,
) -> f64 {
    let mut dist = f64::INFINITY;
    match kind {
        DenoiserKind::RealSparseGroupLasso => {
            for plane in [
                r.iter().map(|z| z.re).collect::<Vec<f64>>(),
                r.iter().map(|z| z.im).collect::<Vec<f64>>(),
            ] {
                for members in &groups.members {
                    let st: Vec<f64> =
                        members.iter().map(|&j| soft_threshold_real(plane[j], th.lambda_e)).collect();
                    let norm = st.iter().map(|v| v * v).sum::<f64>().sqrt();
                    dist = dist.min((norm - th.lambda_g).abs());
                    for &j in members {
                        dist = dist.min((plane[j].abs() - th.lambda_e).abs());
                    }
                }
            }
        }
        _ => {
            let eff = kind.effective_thresholds(th);
            for members in &groups.members {
                let (_, norm) = group_soft(r, members, eff.lambda_e);
                dist = dist.min((norm - eff.lambda_g).abs());
                for &j in members {
                    dist = dist.min((r[j].norm() - eff.lambda_e).abs());
                }
            }
        }
    }
    dist
}

/// Central-finite-difference Wirtinger derivative `∂η_j/∂r_j` of an opaque
/// vector denoiser: `(∂/∂Re − i·∂/∂Im)/2` with step `h` in each real
/// direction. `boundary_dist` is the caller-computed distance to the nearest
/// activation boundary (use [`boundary_distance`] for the built-in kinds, or
/// infinity for smooth maps); the estimate is refused within `10·h` of a
/// boundary, where central differences straddle a kink.
pub fn wirtinger_fd(
    denoiser: impl Fn(&[Complex64]) -> Vec<Complex64>,
    r: &[Complex64],
    j: usize,
    h: f64,
    boundary_dist: f64,
) -> Result<Complex64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(format!("finite-difference step {h} must be positive")));
    }
    if j >= r.len() {
        return Err(Error::Domain(format!("index {j} out of range for length {}", r.len())));
    }
    if boundary_dist < 10.0 * h {
        return Err(Error::Domain(format!(
            "finite-difference oracle unreliable: input is {boundary_dist:.3e} from a threshold boundary (needs ≥ {:.3e})",
            10.0 * h
        )));
    }
    let mut probe = r.to_vec();
    let mut eval = |delta: Complex64| -> Complex64 {
        probe[j] = r[j] + delta;
        let out = denoiser(&probe)[j];
        probe[j] = r[j];
        out
    };
    let d_re = (eval(Complex64::new(h, 0.0)) - eval(Complex64::new(-h, 0.0))) / (2.0 * h);
    let d_im = (eval(Complex64::new(0.0, h)) - eval(Complex64::new(0.0, -h))) / (2.0 * h);
    Ok(0.5 * (d_re - Complex64::i() * d_im))
}
