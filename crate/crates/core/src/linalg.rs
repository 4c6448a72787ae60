//! Dense small-matrix kernel: log-volumes, coefficient solves against a basis,
//! orthogonal components and the exchange determinant.
//!
//! Everything is carried in the log domain. A zero volume is encoded as
//! [`LogVolume::ZERO`], whose value is `-inf`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Default relative rank tolerance.
pub const DEFAULT_EPS_RANK: f64 = 1e-10;

/// The input vectors `v_0 .. v_{n-1}` in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    dim: usize,
    columns: Vec<Vec<f64>>,
    scale: f64,
    eps_rank: f64,
}

impl VectorSet {
    pub fn new(dim: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        for (index, col) in columns.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: col.len(),
                });
            }
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(index));
            }
        }
        let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
        Ok(Self {
            dim,
            columns,
            scale,
            eps_rank: DEFAULT_EPS_RANK,
        })
    }

    /// Returns a copy using `eps` as the relative rank tolerance.
    pub fn with_eps_rank(mut self, eps: f64) -> Self {
        self.eps_rank = eps;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Largest column norm; the reference magnitude for rank decisions.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eps_rank(&self) -> f64 {
        self.eps_rank
    }

    /// Absolute threshold below which a norm counts as zero.
    pub fn zero_threshold(&self) -> f64 {
        self.eps_rank * self.scale
    }

    fn check_indices(&self, s: &[usize]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &i in s {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        Ok(())
    }
}

/// Log of a parallelepiped volume; `-inf` encodes zero volume.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogVolume(f64);

impl LogVolume {
    pub const ZERO: LogVolume = LogVolume(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogVolume(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Log of `self / base`. A zero numerator stays `-inf`; `base` must be nonzero.
    pub fn log_ratio(self, base: LogVolume) -> f64 {
        debug_assert!(!base.is_zero());
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.0 - base.0
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large entries
    let m = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin Householder QR of a `dim x k` matrix given by columns.
struct Qr {
    /// `k` orthonormal columns of length `dim`.
    q: Vec<Vec<f64>>,
    /// Upper-triangular `k x k`, row-major.
    r: Vec<Vec<f64>>,
}

impl Qr {
    fn new(dim: usize, cols: &[&[f64]]) -> Self {
        let k = cols.len();
        debug_assert!(k <= dim);
        let mut a: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
        let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
        for j in 0..k {
            let x = &a[j][j..];
            let xnorm = norm(x);
            if xnorm == 0.0 {
                reflectors.push(None);
                continue;
            }
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm = norm(&v);
            if vnorm == 0.0 {
                reflectors.push(None);
                continue;
            }
            v.iter_mut().for_each(|e| *e /= vnorm);
            for col in a.iter_mut().skip(j) {
                let p = 2.0 * dot(&v, &col[j..]);
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= p * vi;
                }
            }
            reflectors.push(Some(v));
        }
        let r = (0..k)
            .map(|i| (0..k).map(|j| if i <= j { a[j][i] } else { 0.0 }).collect())
            .collect();
        let mut q = Vec::with_capacity(k);
        for j in 0..k {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            for (i, refl) in reflectors.iter().enumerate().rev() {
                if let Some(v) = refl {
                    let p = 2.0 * dot(v, &e[i..]);
                    for (c, vi) in e[i..].iter_mut().zip(v) {
                        *c -= p * vi;
                    }
                }
            }
            q.push(e);
        }
        Qr { q, r }
    }

    fn k(&self) -> usize {
        self.r.len()
    }

    fn min_abs_diag(&self) -> f64 {
        (0..self.k())
            .map(|i| self.r[i][i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn log_abs_det(&self) -> f64 {
        (0..self.k()).map(|i| self.r[i][i].abs().ln()).sum()
    }

    /// Solves `R x = b` by back substitution.
    fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut x = b.to_vec();
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| self.r[i][j] * x[j]).sum();
            x[i] = (x[i] - s) / self.r[i][i];
        }
        x
    }
}

fn factor(vs: &VectorSet, s: &[usize]) -> Qr {
    let cols: Vec<&[f64]> = s.iter().map(|&i| vs.column(i)).collect();
    Qr::new(vs.dim(), &cols)
}

fn is_deficient(vs: &VectorSet, qr: &Qr) -> bool {
    qr.k() > 0 && qr.min_abs_diag() <= vs.zero_threshold()
}

/// `log vol(s)`: half the log-determinant of the Gram matrix of the selected
/// columns. Returns [`LogVolume::ZERO`] when they are rank-deficient.
pub fn log_volume(vs: &VectorSet, s: &[usize]) -> Result<LogVolume> {
    vs.check_indices(s)?;
    if s.len() > vs.dim() {
        return Err(Error::TooManyVectors {
            count: s.len(),
            dim: vs.dim(),
        });
    }
    let qr = factor(vs, s);
    if is_deficient(vs, &qr) {
        return Ok(LogVolume::ZERO);
    }
    Ok(LogVolume::new(qr.log_abs_det()))
}

/// True when the selected columns are linearly independent at the rank tolerance.
pub fn is_linearly_independent(vs: &VectorSet, s: &[usize]) -> Result<bool> {
    if s.len() > vs.dim() {
        vs.check_indices(s)?;
        return Ok(false);
    }
    Ok(!log_volume(vs, s)?.is_zero())
}

/// Coefficients of out-of-basis vectors against a basis, plus orthogonal parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub basis: Vec<usize>,
    pub others: Vec<usize>,
    /// `coefficients[i][j]` is the weight of `basis[j]` in `others[i]`.
    pub coefficients: Vec<Vec<f64>>,
    /// `‖u⊥‖` for each entry of `others`, measured against `span(basis)`.
    pub residual_norms: Vec<f64>,
    /// `‖v_j⊥‖` for each basis element, against the span of the rest of the basis.
    pub basis_orthonorms: Vec<f64>,
}

impl Decomposition {
    pub fn coefficient(&self, other_pos: usize, basis_pos: usize) -> f64 {
        self.coefficients[other_pos][basis_pos]
    }
}

/// Writes each vector of `others` as `Σ a_j v_j + u⊥` over the `basis`.
pub fn decompose(vs: &VectorSet, basis: &[usize], others: &[usize]) -> Result<Decomposition> {
    vs.check_indices(basis)?;
    if basis.len() > vs.dim() {
        return Err(Error::TooManyVectors {
            count: basis.len(),
            dim: vs.dim(),
        });
    }
    for &u in others {
        if u >= vs.len() {
            return Err(Error::IndexOutOfRange {
                index: u,
                len: vs.len(),
            });
        }
    }
    let qr = factor(vs, basis);
    if is_deficient(vs, &qr) {
        return Err(Error::RankDeficient);
    }
    let k = basis.len();

    let mut coefficients = Vec::with_capacity(others.len());
    let mut residual_norms = Vec::with_capacity(others.len());
    for &u in others {
        let col = vs.column(u);
        let proj: Vec<f64> = qr.q.iter().map(|qj| dot(qj, col)).collect();
        let mut residual = col.to_vec();
        for (qj, pj) in qr.q.iter().zip(&proj) {
            for (r, q) in residual.iter_mut().zip(qj) {
                *r -= pj * q;
            }
        }
        // second pass keeps the residual orthogonal when u is nearly in span
        for qj in &qr.q {
            let p = dot(qj, &residual);
            for (r, q) in residual.iter_mut().zip(qj) {
                *r -= p * q;
            }
        }
        coefficients.push(qr.solve_upper(&proj));
        residual_norms.push(norm(&residual));
    }

    // ‖v_j⊥‖ = 1 / ‖row j of R⁻¹‖
    let mut rinv_rows = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = qr.solve_upper(&e);
        for i in 0..k {
            rinv_rows[i][j] = col[i];
        }
    }
    let basis_orthonorms = rinv_rows.iter().map(|row| 1.0 / norm(row)).collect();

    Ok(Decomposition {
        basis: basis.to_vec(),
        others: others.to_vec(),
        coefficients,
        residual_norms,
        basis_orthonorms,
    })
}

fn swapped(s: &[usize], out: usize, in_: usize) -> Vec<usize> {
    s.iter().map(|&x| if x == out { in_ } else { x }).collect()
}

/// `log vol(s - out + in_) - log vol(s)`, evaluated from two direct volume
/// computations.
pub fn swap_log_ratio(vs: &VectorSet, s: &[usize], out: usize, in_: usize) -> Result<f64> {
    if !s.contains(&out) {
        return Err(Error::InvalidInstance(format!(
            "element {out} is not in the current set"
        )));
    }
    let base = log_volume(vs, s)?;
    if base.is_zero() {
        return Err(Error::RankDeficient);
    }
    let next = log_volume(vs, &swapped(s, out, in_))?;
    Ok(next.log_ratio(base))
}

/// `log sym_r(Σ_{i∈s} v_i v_iᵀ)` with `r = |s|`.
///
/// For `r` vectors the nonzero eigenvalues of the outer-product sum are those
/// of the Gram matrix, so this is twice the log-volume.
pub fn log_sym_r(vs: &VectorSet, s: &[usize]) -> Result<f64> {
    Ok(2.0 * log_volume(vs, s)?.value())
}

/// `log |det A_C|`, where `A_C` holds the coefficients of `cyc_in` over `s`
/// restricted to the columns of `cyc_out` (in the given orders).
pub fn exchange_determinant(
    vs: &VectorSet,
    s: &[usize],
    cyc_out: &[usize],
    cyc_in: &[usize],
) -> Result<f64> {
    if cyc_out.len() != cyc_in.len() {
        return Err(Error::InvalidInstance(
            "exchange sets differ in size".into(),
        ));
    }
    let positions = cyc_out
        .iter()
        .map(|v| {
            s.iter().position(|x| x == v).ok_or_else(|| {
                Error::InvalidInstance(format!("element {v} is not in the current set"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dec = decompose(vs, s, cyc_in)?;
    let a: Vec<Vec<f64>> = dec
        .coefficients
        .iter()
        .map(|row| positions.iter().map(|&p| row[p]).collect())
        .collect();
    Ok(log_abs_det(a))
}

/// `log |det m|` by LU with partial pivoting; `-inf` for an exactly singular matrix.
pub(crate) fn log_abs_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        if m[pivot][col] == 0.0 {
            return f64::NEG_INFINITY;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        acc += p.abs().ln();
        for row in (col + 1)..n {
            let factor = m[row][col] / p;
            if factor != 0.0 {
                for j in col..n {
                    m[row][j] -= factor * m[col][j];
                }
            }
        }
    }
    acc
}
