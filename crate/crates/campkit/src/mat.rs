//! Dense matrix primitives for the recovery and verification loops.
//!
//! [`CMat`] is a complex dense matrix stored as separate real and imaginary
//! planes, with a conjugate-transposed copy built at construction time. The
//! recovery loop spends nearly all of its time in `A·x` and `Aᴴ·z` products,
//! and the split layout lets both directions run the same autovectorizable
//! kernel over contiguous rows instead of striding down columns.
//!
//! [`RMat`] is a plain row-major real matrix used by the lifted (real
//! augmented) systems, which only ever run at small verification scale.

use num_complex::Complex64;

/// Dense complex matrix with split re/im storage and a precomputed adjoint.
///
/// Memory cost is twice the matrix (the adjoint copy), which is the right
/// trade for iterative recovery: every iteration multiplies by both `A` and
/// `Aᴴ`, and the copy keeps both products row-contiguous.
#[derive(Clone, Debug)]
pub struct CMat {
    rows: usize,
    cols: usize,
    /// Row-major real parts, `rows × cols`.
    re: Vec<f64>,
    /// Row-major imaginary parts, `rows × cols`.
    im: Vec<f64>,
    /// Row-major real parts of `Aᴴ`, `cols × rows`.
    adj_re: Vec<f64>,
    /// Row-major imaginary parts of `Aᴴ` (i.e. negated `im`), `cols × rows`.
    adj_im: Vec<f64>,
}

impl CMat {
    /// Build from row-major complex entries.
    ///
    /// Panics if `entries.len() != rows * cols`; dimension validation against
    /// user input belongs to the callers that construct matrices from
    /// configuration.
    pub fn from_entries(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must match dimensions");
        let mut re = vec![0.0; rows * cols];
        let mut im = vec![0.0; rows * cols];
        for (k, e) in entries.iter().enumerate() {
            re[k] = e.re;
            im[k] = e.im;
        }
        let mut adj_re = vec![0.0; rows * cols];
        let mut adj_im = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                adj_re[j * rows + i] = re[i * cols + j];
                adj_im[j * rows + i] = -im[i * cols + j];
            }
        }
        CMat { rows, cols, re, im, adj_re, adj_im }
    }

    /// Build from a per-entry generator called in row-major order.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_entries(rows, cols, &entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry accessor; row-major, not meant for hot loops.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[i * self.cols + j], self.im[i * self.cols + j])
    }

    /// Row-major copy of all entries (debug dumps, tests).
    pub fn entries(&self) -> Vec<Complex64> {
        (0..self.rows * self.cols)
            .map(|k| Complex64::new(self.re[k], self.im[k]))
            .collect()
    }

    /// `self · x` for a complex vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "vector length must match matrix columns");
        let (x_re, x_im) = split(x);
        kernel(self.rows, self.cols, &self.re, &self.im, &x_re, &x_im)
    }

    /// `selfᴴ · y` for a complex vector `y` of length `rows`.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows, "vector length must match matrix rows");
        let (y_re, y_im) = split(y);
        kernel(self.cols, self.rows, &self.adj_re, &self.adj_im, &y_re, &y_im)
    }

    /// `self · X` for a row-major complex panel `X` of shape `cols × p`.
    pub fn mul_panel(&self, x: &[Complex64], p: usize) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols * p, "panel shape must be cols × p");
        panel_apply(x, p, self.cols, self.rows, |col| self.mul_vec(col))
    }

    /// `selfᴴ · Y` for a row-major complex panel `Y` of shape `rows × p`.
    pub fn adjoint_mul_panel(&self, y: &[Complex64], p: usize) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows * p, "panel shape must be rows × p");
        panel_apply(y, p, self.rows, self.cols, |col| self.adjoint_mul_vec(col))
    }
}

/// Split a complex slice into re/im planes.
fn split(v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(v.len());
    let mut im = Vec::with_capacity(v.len());
    for z in v {
        re.push(z.re);
        im.push(z.im);
    }
    (re, im)
}

/// Row-contiguous complex matvec over split planes.
fn kernel(rows: usize, cols: usize, a_re: &[f64], a_im: &[f64], x_re: &[f64], x_im: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let row_re = &a_re[i * cols..(i + 1) * cols];
        let row_im = &a_im[i * cols..(i + 1) * cols];
        let mut acc_re = 0.0;
        let mut acc_im = 0.0;
        for j in 0..cols {
            // (ar + i·ai)(xr + i·xi) accumulated as two real dot products.
            acc_re += row_re[j] * x_re[j] - row_im[j] * x_im[j];
            acc_im += row_re[j] * x_im[j] + row_im[j] * x_re[j];
        }
        out.push(Complex64::new(acc_re, acc_im));
    }
    out
}

/// Apply a vector operation column-by-column over a row-major panel.
fn panel_apply(
    x: &[Complex64],
    p: usize,
    in_rows: usize,
    out_rows: usize,
    op: impl Fn(&[Complex64]) -> Vec<Complex64>,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); out_rows * p];
    let mut col = vec![Complex64::new(0.0, 0.0); in_rows];
    for j in 0..p {
        for i in 0..in_rows {
            col[i] = x[i * p + j];
        }
        for (i, z) in op(&col).into_iter().enumerate() {
            out[i * p + j] = z;
        }
    }
    out
}

/// Plain row-major real matrix for the lifted verification systems.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RMat { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `self · other`; naive triple loop, verification scale only.
    pub fn mul(&self, other: &RMat) -> RMat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = RMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn transpose_mul(&self, other: &RMat) -> RMat {
        assert_eq!(self.rows, other.rows, "row counts must agree for ᵀ·");
        let mut out = RMat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `self · other` where `other` is complex; used to collapse real blocks.
    pub fn mul_complex_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "vector length must match matrix columns");
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &vj) in v.iter().enumerate() {
                    acc += self.get(i, j) * vj;
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Row-major complex panel (a thin N×p matrix of iterates).
///
/// Used by the multi-feature extension, where the iterates are matrices with
/// a handful of columns; `CMat` is reserved for the measurement operator,
/// whose precomputed adjoint would be wasted on iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct CPanel {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CPanel {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CPanel { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CPanel { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length must match dimensions");
        CPanel { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

/// Largest entry-wise modulus difference between two equal-shape panels.
pub fn panel_max_abs_diff(a: &CPanel, b: &CPanel) -> f64 {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols), "shape mismatch");
    max_abs_diff(&a.data, &b.data)
}

/// Euclidean norm of a complex slice.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Squared Euclidean norm of a complex slice.
pub fn vec_norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Largest entry-wise modulus difference between two complex slices.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Largest entry-wise modulus of a complex slice.
pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}
