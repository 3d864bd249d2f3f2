//! Multi-feature (matrix-iterate) extension of the centered recursion and
//! its lift/collapse verification.
//!
//! Iterates are complex panels with `p` columns; the per-iteration Onsager
//! corrections become p×p right-multipliers built from averaged row-wise
//! Wirtinger Jacobians. The multiplier orientation follows the same rule as
//! the scalar lift: entry `[r][c]` averages `∂(output column c)/∂(input
//! column r)`, so the derivative (input) index runs over the rows of the
//! right factor. With `p = 1` everything reduces to the scalar centered
//! recursion.
//!
//! The verification mirrors the scalar one: lift the operator and the maps
//! to a real system with `2p` interleaved columns, run it with real
//! finite-difference multipliers, collapse, and compare orbits.

use num_complex::Complex64;

use crate::error::Error;
use crate::lift::{
    block_collapse, collapse_columns, interleave_columns, lift_matrix, run_lifted_amp, ReportRow,
    ALGEBRAIC_TOL,
};
use crate::mat::{panel_max_abs_diff, CMat, CPanel, RMat};
use crate::Result;

/// Tolerance for the multi-feature orbit collapse: finite differences drive
/// the multipliers on both paths and 2p components accumulate slightly more
/// FD noise than the scalar case, so the budget is one decade looser.
pub const MATRIX_COLLAPSE_TOL: f64 = 1e-9;

/// The matrix collapse operators `R_R = I_n ⊗ ρᵀ` (n×2n) and
/// `R_L = I_p ⊗ ρ` (2p×p).
pub fn matrix_collapse_operators(n: usize, p: usize) -> (CMat, CPanel) {
    let rho = crate::lift::rho();
    let r_r = CMat::from_fn(n, 2 * n, |i, j| {
        if j / 2 == i {
            rho[j % 2]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let r_l = CPanel::from_fn(2 * p, p, |i, j| {
        if i / 2 == j {
            rho[i % 2]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (r_r, r_l)
}

/// Boxed shape-preserving panel map; the closure form used by [`MatrixMap`].
pub type PanelMap = Box<dyn Fn(&CPanel) -> CPanel + Sync>;

/// A row-coupled complex panel map, optionally with an analytic
/// right-multiplier callback. Without one, the engine computes the
/// multiplier by Wirtinger finite differences.
pub struct MatrixMap {
    /// The map itself; must preserve the panel shape.
    pub map: PanelMap,
    /// Optional analytic multiplier: given the input panel, return the p×p
    /// matrix with entries `[r][c] = (1/n)·Σ_d ∂out_{d,c}/∂in_{d,r}`
    /// (Wirtinger; `n` is the measurement dimension for both maps).
    pub multiplier: Option<PanelMap>,
}

impl MatrixMap {
    pub fn new(map: impl Fn(&CPanel) -> CPanel + Sync + 'static) -> Self {
        MatrixMap { map: Box::new(map), multiplier: None }
    }

    pub fn with_multiplier(
        map: impl Fn(&CPanel) -> CPanel + Sync + 'static,
        multiplier: impl Fn(&CPanel) -> CPanel + Sync + 'static,
    ) -> Self {
        MatrixMap { map: Box::new(map), multiplier: Some(Box::new(multiplier)) }
    }
}

/// `panel · small` for a p×p (or k×c) right factor.
fn panel_mul(panel: &CPanel, small: &CPanel) -> CPanel {
    assert_eq!(panel.cols, small.rows, "inner dimensions must agree");
    CPanel::from_fn(panel.rows, small.cols, |d, c| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..panel.cols {
            acc += panel.get(d, r) * small.get(r, c);
        }
        acc
    })
}

/// Averaged row-wise Wirtinger Jacobian of a panel map by central finite
/// differences: `[r][c] = (1/normalizer)·Σ_d ½(∂/∂Re − i·∂/∂Im) out_{d,c}`
/// taken with respect to `in_{d,r}`. Four map evaluations per (row,
/// component); rows are perturbed one at a time because the maps may couple
/// entries within a row.
pub(crate) fn fd_wirtinger_multiplier(
    map: &dyn Fn(&CPanel) -> CPanel,
    input: &CPanel,
    normalizer: f64,
) -> Result<CPanel> {
    let p = input.cols;
    let mut mult = CPanel::zeros(p, p);
    let mut probe = input.clone();
    for d in 0..input.rows {
        for r in 0..p {
            let base = input.get(d, r);
            let h = 1e-6 * (1.0 + base.norm());
            probe.set(d, r, base + Complex64::new(h, 0.0));
            let re_plus = map(&probe);
            probe.set(d, r, base - Complex64::new(h, 0.0));
            let re_minus = map(&probe);
            probe.set(d, r, base + Complex64::new(0.0, h));
            let im_plus = map(&probe);
            probe.set(d, r, base - Complex64::new(0.0, h));
            let im_minus = map(&probe);
            probe.set(d, r, base);
            for c in 0..p {
                let d_re = (re_plus.get(d, c) - re_minus.get(d, c)) / (2.0 * h);
                let d_im = (im_plus.get(d, c) - im_minus.get(d, c)) / (2.0 * h);
                let deriv = 0.5 * (d_re - Complex64::i() * d_im);
                if !deriv.re.is_finite() || !deriv.im.is_finite() {
                    return Err(Error::Verification(format!(
                        "non-finite Wirtinger derivative at row {d}, component {r}"
                    )));
                }
                let cur = mult.get(r, c);
                mult.set(r, c, cur + deriv);
            }
        }
    }
    for v in &mut mult.data {
        *v /= normalizer;
    }
    Ok(mult)
}

fn panel_all_finite(p: &CPanel) -> bool {
    p.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Orbit of the multi-feature recursion, `k = 0..=T` in both sequences.
#[derive(Clone, Debug)]
pub struct MatrixOrbit {
    pub u_seq: Vec<CPanel>,
    pub v_seq: Vec<CPanel>,
}

/// Run the multi-feature centered recursion
/// `V^k = A·F^k − G^{k−1}·Λ_f`, `U^{k+1} = Aᴴ·G^k − F^k·Λ_g`
/// with `F^k = f(U^k)`, `G^k = g(V^k)`, `G^{−1} = 0`, and the p×p
/// right-multipliers `Λ` the averaged row-wise Wirtinger Jacobians
/// normalized by the measurement dimension `n` (the signal-side sum runs
/// over all `N` rows, which is where the `N/n` dimensional factor of the
/// scalar case comes from).
pub fn run_complex_matrix_amp(
    a: &CMat,
    f_mat: &MatrixMap,
    g_mat: &MatrixMap,
    u0: &CPanel,
    big_t: usize,
) -> Result<MatrixOrbit> {
    let (n, big_n) = (a.rows(), a.cols());
    if u0.rows != big_n {
        return Err(Error::Domain(format!(
            "initial panel has {} rows, matrix expects {big_n}",
            u0.rows
        )));
    }
    let p = u0.cols;
    let norm = n as f64;
    let mut u_seq = vec![u0.clone()];
    let mut v_seq: Vec<CPanel> = Vec::with_capacity(big_t + 1);
    let mut g_prev = CPanel::zeros(n, p);
    for k in 0..=big_t {
        let f_k = (f_mat.map)(&u_seq[k]);
        let lam_f = match &f_mat.multiplier {
            Some(cb) => cb(&u_seq[k]),
            None => fd_wirtinger_multiplier(f_mat.map.as_ref(), &u_seq[k], norm)?,
        };
        let af = CPanel::from_data(n, p, a.mul_panel(&f_k.data, p));
        let corr = panel_mul(&g_prev, &lam_f);
        let v_k = CPanel::from_fn(n, p, |i, j| af.get(i, j) - corr.get(i, j));
        if !panel_all_finite(&v_k) {
            return Err(Error::Divergence { iteration: k });
        }
        v_seq.push(v_k);
        if k < big_t {
            let g_k = (g_mat.map)(&v_seq[k]);
            let lam_g = match &g_mat.multiplier {
                Some(cb) => cb(&v_seq[k]),
                None => fd_wirtinger_multiplier(g_mat.map.as_ref(), &v_seq[k], norm)?,
            };
            let ahg = CPanel::from_data(big_n, p, a.adjoint_mul_panel(&g_k.data, p));
            let corr = panel_mul(&f_k, &lam_g);
            let u_next = CPanel::from_fn(big_n, p, |i, j| ahg.get(i, j) - corr.get(i, j));
            if !panel_all_finite(&u_next) {
                return Err(Error::Divergence { iteration: k + 1 });
            }
            u_seq.push(u_next);
            g_prev = g_k;
        }
    }
    Ok(MatrixOrbit { u_seq, v_seq })
}

/// Lift a complex panel map to interleaved real columns (signal side).
fn lift_signal_map<'a>(f: &'a MatrixMap) -> impl Fn(&RMat) -> RMat + 'a {
    move |h: &RMat| {
        let u = collapse_columns(h);
        interleave_columns(&(f.map)(&u))
    }
}

/// Lift a complex panel map to admissible 2×2 blocks (measurement side).
fn lift_measurement_map<'a>(g: &'a MatrixMap) -> impl Fn(&RMat) -> RMat + 'a {
    move |e: &RMat| {
        let v = block_collapse(e);
        let gv = (g.map)(&v);
        let mut q = RMat::zeros(e.rows, e.cols);
        for i in 0..gv.rows {
            for j in 0..gv.cols {
                let z = gv.get(i, j);
                q.set(2 * i, 2 * j, z.re);
                q.set(2 * i, 2 * j + 1, z.im);
                q.set(2 * i + 1, 2 * j, z.im);
                q.set(2 * i + 1, 2 * j + 1, -z.re);
            }
        }
        q
    }
}

/// Lift-and-collapse verification for the multi-feature recursion.
///
/// Runs the complex orbit and, independently, the real lifted system with
/// `2p` interleaved columns and real finite-difference multipliers, then
/// collapses and compares. Also checks the operator-level identities
/// `R_R·W = A`, `S·R_L = X`, and `R_R·(W·S)·R_L = A·X` on the initial panel.
pub fn verify_matrix_collapse(
    a: &CMat,
    f_mat: &MatrixMap,
    g_mat: &MatrixMap,
    u0: &CPanel,
    big_t: usize,
) -> Result<Vec<ReportRow>> {
    let (n, big_n) = (a.rows(), a.cols());
    let p = u0.cols;
    let orbit = run_complex_matrix_amp(a, f_mat, g_mat, u0, big_t)?;
    let sys = lift_matrix(a);
    let f_real = lift_signal_map(f_mat);
    let g_real = lift_measurement_map(g_mat);
    let h0 = interleave_columns(u0);
    let lifted = run_lifted_amp(&sys, &f_real, &g_real, &h0, big_t)?;

    let mut dev_u: f64 = 0.0;
    let mut dev_v: f64 = 0.0;
    for k in 0..=big_t {
        let u_collapsed = collapse_columns(&lifted.h_seq[k]);
        let scale = 1.0 + orbit.u_seq[k].max_abs();
        dev_u = dev_u.max(panel_max_abs_diff(&u_collapsed, &orbit.u_seq[k]) / scale);
        let v_collapsed = block_collapse(&lifted.e_seq[k]);
        let scale = 1.0 + orbit.v_seq[k].max_abs();
        dev_v = dev_v.max(panel_max_abs_diff(&v_collapsed, &orbit.v_seq[k]) / scale);
    }

    // Operator identities on this instance: R_R·W = A exactly, S·R_L = X
    // exactly, and the product collapse R_R·(W·S)·R_L = A·X to rounding.
    let (r_r, r_l) = matrix_collapse_operators(n, p);
    let w_complex: Vec<Complex64> =
        sys.w.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let rw = CPanel::from_data(n, big_n, r_r.mul_panel(&w_complex, big_n));
    let mut dev_rw: f64 = 0.0;
    for i in 0..n {
        for j in 0..big_n {
            dev_rw = dev_rw.max((rw.get(i, j) - a.entry(i, j)).norm());
        }
    }
    let s = interleave_columns(u0);
    let s_complex = CPanel::from_data(
        big_n,
        2 * p,
        s.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    );
    let dev_s = panel_max_abs_diff(&panel_mul(&s_complex, &r_l), u0);

    let ws = sys.w.mul(&s);
    let ws_complex = CPanel::from_data(
        2 * n,
        2 * p,
        ws.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    );
    let rws = CPanel::from_data(n, 2 * p, r_r.mul_panel(&ws_complex.data, 2 * p));
    let product = panel_mul(&rws, &r_l);
    let ax = CPanel::from_data(n, p, a.mul_panel(&u0.data, p));
    let dev_product = panel_max_abs_diff(&product, &ax);

    Ok(vec![
        ReportRow::new("matrix_estimate_collapse", dev_u, MATRIX_COLLAPSE_TOL),
        ReportRow::new("matrix_residual_collapse", dev_v, MATRIX_COLLAPSE_TOL),
        ReportRow::new("matrix_operator_reconstruction", dev_rw, ALGEBRAIC_TOL),
        ReportRow::new("signal_lift_collapse", dev_s, ALGEBRAIC_TOL),
        ReportRow::new("lifted_product_collapse", dev_product, ALGEBRAIC_TOL),
    ])
}

/// Row-wise joint shrinkage across the p features:
/// `out_{d,:} = (1 − λ/‖in_{d,:}‖₂)₊ · in_{d,:}`. Non-separable across
/// columns with a Hermitian (not symmetric) Jacobian, so it detects
/// transposition mistakes in the multiplier orientation.
pub fn row_shrink_map(lambda: f64) -> MatrixMap {
    MatrixMap::new(move |x: &CPanel| {
        CPanel::from_fn(x.rows, x.cols, |d, c| {
            let norm: f64 =
                (0..x.cols).map(|j| x.get(d, j).norm_sqr()).sum::<f64>().sqrt();
            if norm > lambda {
                (1.0 - lambda / norm) * x.get(d, c)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
}

/// Max per-entry deviation of the collapsed lifted product from the complex
/// one: `‖R_R·(W·S)·R_L − A·X‖_∞`, where `W` lifts `A` and `S` interleaves
/// `X`. Exactly zero in exact arithmetic for any shapes, so this is a pure
/// transcription check on the operator encodings.
pub fn operator_product_deviation(a: &CMat, x: &CPanel) -> f64 {
    let (n, p) = (a.rows(), x.cols);
    let sys = lift_matrix(a);
    let (r_r, r_l) = matrix_collapse_operators(n, p);
    let s = interleave_columns(x);
    let ws = sys.w.mul(&s);
    let ws_complex = CPanel::from_data(
        2 * n,
        2 * p,
        ws.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    );
    let rws = CPanel::from_data(n, 2 * p, r_r.mul_panel(&ws_complex.data, 2 * p));
    let product = panel_mul(&rws, &r_l);
    let ax = CPanel::from_data(n, p, a.mul_panel(&x.data, p));
    panel_max_abs_diff(&product, &ax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::{run_centered_amp, FunctionFamily};
    use crate::denoise::{apply_denoiser, sgl_onsager_mean, soft_threshold, DenoiserKind, Thresholds};
    use crate::problem::{sample_complex_gaussian, stream_rng, GroupStructure};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unit_matrix(n: usize, big_n: usize, seed: u64) -> CMat {
        let mut rng = stream_rng(seed, 910);
        let entries: Vec<Complex64> = (0..n * big_n)
            .map(|_| sample_complex_gaussian(1.0 / n as f64, &mut rng))
            .collect();
        CMat::from_entries(n, big_n, &entries)
    }

    fn random_panel(rows: usize, cols: usize, seed: u64) -> CPanel {
        let mut rng = stream_rng(seed, 911);
        CPanel::from_fn(rows, cols, |_, _| sample_complex_gaussian(1.0, &mut rng))
    }

    /// Linear panel map `X ↦ X·Θ` with its exact multiplier
    /// `(rows/n)·Θ` (rows = input row count).
    fn linear_map(theta: CPanel, rows: usize, n: usize) -> MatrixMap {
        let scale = rows as f64 / n as f64;
        let theta_mult = CPanel::from_fn(theta.rows, theta.cols, |i, j| scale * theta.get(i, j));
        let theta_map = theta.clone();
        MatrixMap::with_multiplier(
            move |x: &CPanel| panel_mul(x, &theta_map),
            move |_: &CPanel| theta_mult.clone(),
        )
    }

    #[test]
    fn collapse_operators_base_case() {
        let (r_r, r_l) = matrix_collapse_operators(1, 1);
        assert_eq!(r_r.entry(0, 0), c(1.0, 0.0));
        assert_eq!(r_r.entry(0, 1), c(0.0, 1.0));
        assert_eq!(r_l.get(0, 0), c(1.0, 0.0));
        assert_eq!(r_l.get(1, 0), c(0.0, 1.0));
    }

    #[test]
    fn operator_lift_products_are_exact() {
        let (n, big_n, p) = (4, 6, 2);
        let a = random_unit_matrix(n, big_n, 81);
        let x = random_panel(big_n, p, 82);
        let sys = lift_matrix(&a);
        let (r_r, r_l) = matrix_collapse_operators(n, p);

        // R_R·W = A exactly.
        let w_complex: Vec<Complex64> =
            sys.w.data.iter().map(|&v| c(v, 0.0)).collect();
        let rw = CPanel::from_data(n, big_n, r_r.mul_panel(&w_complex, big_n));
        for i in 0..n {
            for j in 0..big_n {
                assert_eq!(rw.get(i, j), a.entry(i, j));
            }
        }
        // S·R_L = X exactly.
        let s = interleave_columns(&x);
        let s_complex =
            CPanel::from_data(big_n, 2 * p, s.data.iter().map(|&v| c(v, 0.0)).collect());
        assert_eq!(panel_mul(&s_complex, &r_l), x);
        // R_R·(W·S)·R_L = A·X to rounding.
        let ws = sys.w.mul(&s);
        let ws_complex =
            CPanel::from_data(2 * n, 2 * p, ws.data.iter().map(|&v| c(v, 0.0)).collect());
        let rws = CPanel::from_data(n, 2 * p, r_r.mul_panel(&ws_complex.data, 2 * p));
        let product = panel_mul(&rws, &r_l);
        let ax = CPanel::from_data(n, p, a.mul_panel(&x.data, p));
        assert!(panel_max_abs_diff(&product, &ax) < 1e-12);
    }

    #[test]
    fn identity_map_multiplier_is_identity() {
        let input = random_panel(7, 2, 91);
        let id = |x: &CPanel| x.clone();
        let mult = fd_wirtinger_multiplier(&id, &input, 7.0).unwrap();
        for r in 0..2 {
            for cidx in 0..2 {
                let want = if r == cidx { 1.0 } else { 0.0 };
                assert!(
                    (mult.get(r, cidx) - c(want, 0.0)).norm() < 1e-9,
                    "multiplier[{r}][{cidx}] = {}",
                    mult.get(r, cidx)
                );
            }
        }
    }

    #[test]
    fn linear_map_multiplier_keeps_orientation() {
        // Θ is deliberately non-symmetric: a transposed multiplier would be
        // off by ~0.8 in the [0][1]/[1][0] cells.
        let theta = CPanel::from_data(2, 2, vec![c(0.5, 0.1), c(0.0, 0.8), c(0.2, 0.0), c(0.3, -0.4)]);
        let rows = 9;
        let input = random_panel(rows, 2, 92);
        let map = {
            let theta = theta.clone();
            move |x: &CPanel| panel_mul(x, &theta)
        };
        let n = 6.0;
        let mult = fd_wirtinger_multiplier(&map, &input, n).unwrap();
        for r in 0..2 {
            for cidx in 0..2 {
                let want = (rows as f64 / n) * theta.get(r, cidx);
                assert!(
                    (mult.get(r, cidx) - want).norm() < 1e-9,
                    "multiplier[{r}][{cidx}] = {} want {want}",
                    mult.get(r, cidx)
                );
            }
        }
    }

    #[test]
    fn single_feature_case_reduces_to_the_scalar_recursion() {
        let (n, big_n, big_t) = (10, 20, 5);
        let a = random_unit_matrix(n, big_n, 101);
        let groups = GroupStructure::contiguous(big_n, 4).unwrap();
        let th = Thresholds::new(0.15, 0.1);
        let lambda_obs = 0.12;
        let trivial = GroupStructure::contiguous(n, n).unwrap();

        // Matrix engine with analytic multipliers so both paths share the
        // same Onsager arithmetic and can agree to near machine precision.
        let f_mat = {
            let groups = groups.clone();
            let groups_m = groups.clone();
            MatrixMap::with_multiplier(
                move |x: &CPanel| {
                    CPanel::from_data(
                        x.rows,
                        1,
                        apply_denoiser(DenoiserKind::SparseGroupLasso, &x.data, &groups, th)
                            .unwrap(),
                    )
                },
                move |x: &CPanel| {
                    let b = (big_n as f64 / n as f64) * sgl_onsager_mean(&x.data, &groups_m, th);
                    CPanel::from_data(1, 1, vec![c(b, 0.0)])
                },
            )
        };
        let g_mat = {
            let trivial = trivial.clone();
            MatrixMap::with_multiplier(
                move |x: &CPanel| {
                    CPanel::from_data(x.rows, 1, soft_threshold(&x.data, lambda_obs))
                },
                move |x: &CPanel| {
                    let m = sgl_onsager_mean(
                        &x.data,
                        &trivial,
                        Thresholds::new(0.0, lambda_obs),
                    );
                    CPanel::from_data(1, 1, vec![c(m, 0.0)])
                },
            )
        };
        let u0 = random_panel(big_n, 1, 102);
        let matrix_orbit = run_complex_matrix_amp(&a, &f_mat, &g_mat, &u0, big_t).unwrap();

        let groups_f = GroupStructure::contiguous(big_n, 4).unwrap();
        let groups_o = groups_f.clone();
        let trivial_o = trivial.clone();
        let f_fam = FunctionFamily::new(
            move |_, u: &[Complex64]| {
                apply_denoiser(DenoiserKind::SparseGroupLasso, u, &groups_f, th).unwrap()
            },
            move |_, u: &[Complex64]| c(sgl_onsager_mean(u, &groups_o, th), 0.0),
        );
        let g_fam = FunctionFamily::new(
            move |_, v: &[Complex64]| soft_threshold(v, lambda_obs),
            move |_, v: &[Complex64]| {
                c(
                    sgl_onsager_mean(v, &trivial_o, Thresholds::new(0.0, lambda_obs)),
                    0.0,
                )
            },
        );
        let scalar_orbit = run_centered_amp(&a, &f_fam, &g_fam, &u0.data, big_t).unwrap();

        for k in 0..=big_t {
            let dev_u = crate::mat::max_abs_diff(&matrix_orbit.u_seq[k].data, &scalar_orbit.u_seq[k]);
            let dev_v = crate::mat::max_abs_diff(&matrix_orbit.v_seq[k].data, &scalar_orbit.v_seq[k]);
            assert!(dev_u < 1e-12, "u^{k} deviates by {dev_u}");
            assert!(dev_v < 1e-12, "v^{k} deviates by {dev_v}");
        }
    }

    #[test]
    fn matrix_collapse_verifies_on_row_shrink_maps() {
        let (n, big_n, p, big_t) = (10, 20, 2, 5);
        let a = random_unit_matrix(n, big_n, 111);
        let f = row_shrink_map(0.3);
        let g = row_shrink_map(0.2);
        let u0 = random_panel(big_n, p, 112);
        let rows = verify_matrix_collapse(&a, &f, &g, &u0, big_t).unwrap();
        assert_eq!(rows.len(), 5);
        for row in &rows {
            assert!(
                row.pass,
                "matrix collapse row '{}' deviates by {:.3e} (budget {:.3e})",
                row.name, row.deviation, row.tolerance
            );
        }
    }

    #[test]
    fn analytic_multiplier_path_matches_finite_differences() {
        let (n, big_n, p, big_t) = (6, 12, 2, 4);
        let a = random_unit_matrix(n, big_n, 121);
        let theta_f =
            CPanel::from_data(2, 2, vec![c(0.4, 0.0), c(0.1, 0.2), c(0.0, -0.3), c(0.5, 0.0)]);
        let theta_g =
            CPanel::from_data(2, 2, vec![c(0.3, 0.1), c(0.0, 0.0), c(0.2, 0.0), c(0.6, -0.1)]);
        let u0 = random_panel(big_n, p, 122);

        let with_cb = run_complex_matrix_amp(
            &a,
            &linear_map(theta_f.clone(), big_n, n),
            &linear_map(theta_g.clone(), n, n),
            &u0,
            big_t,
        )
        .unwrap();
        // Same maps without multiplier callbacks: FD path.
        let theta_f2 = theta_f.clone();
        let theta_g2 = theta_g.clone();
        let f_fd = MatrixMap::new(move |x: &CPanel| panel_mul(x, &theta_f2));
        let g_fd = MatrixMap::new(move |x: &CPanel| panel_mul(x, &theta_g2));
        let with_fd = run_complex_matrix_amp(&a, &f_fd, &g_fd, &u0, big_t).unwrap();

        for k in 0..=big_t {
            let dev = panel_max_abs_diff(&with_cb.u_seq[k], &with_fd.u_seq[k]);
            assert!(dev < 1e-9, "u^{k} callback-vs-FD deviation {dev}");
        }
    }
}
