//! Dense complex linear algebra.
//!
//! All matrices are stored row-major in [`ComplexSquareMatrix`]. The general
//! eigensolver returns right and left eigenvectors paired into a biorthogonal
//! set, with exceptional points surfaced through [`EigenSystem::is_defective`]
//! instead of being silently repaired.

use std::ops::{Add, Index, IndexMut, Sub};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{MqcError, Result};

pub type C64 = Complex64;

/// Largest supported dimension.
pub const MAX_DIM: usize = 4096;
/// |<l|r>| of unit vectors at or below this is treated as self-orthogonal.
pub const EP_TOL: f64 = 1e-10;
/// Relative eigenvalue clustering tolerance used for left/right pairing.
pub const PAIRING_REL_TOL: f64 = 1e-9;
/// Relative tolerance on |A - A^dag|_F for Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

// A pair of eigenvalues counts as numerically coalesced when their distance is
// within the first-order perturbation bound eps*|H|/|<l|r>| (times this factor)
// and the overlap itself is this small.
const COALESCENCE_FACTOR: f64 = 16.0;
const COALESCENCE_OVERLAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexSquareMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(MqcError::InvalidMatrix("dimension must be at least 1".into()));
        }
        if dim > MAX_DIM {
            return Err(MqcError::DimensionTooLarge { dim, cap: MAX_DIM });
        }
        if data.len() != dim * dim {
            return Err(MqcError::InvalidMatrix(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MqcError::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::new(dim, data)
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    /// Builds a matrix from rows of real numbers.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(MqcError::InvalidMatrix("rows must form a square matrix".into()));
        }
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |A - A^dag|_F
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.data[i * d + j] - self.data[j * d + i].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (i..d).all(|j| self.data[i * d + j] == self.data[j * d + i].conj()))
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (i + 1..d).all(|j| self.data[i * d + j] == self.data[j * d + i]))
    }

    pub fn is_exactly_diagonal(&self) -> bool {
        let d = self.dim;
        self.data
            .iter()
            .enumerate()
            .all(|(k, z)| k / d == k % d || (z.re == 0.0 && z.im == 0.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(MqcError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let prod = &self.to_faer() * &other.to_faer();
        Ok(Self::from_faer(prod.as_ref()))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let (da, db) = (self.dim, other.dim);
        Self::from_fn(da * db, |i, j| self[(i / db, j / db)] * other[(i % db, j % db)])
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        let d = self.dim;
        Mat::from_fn(d, d, |i, j| self.data[i * d + j])
    }

    pub(crate) fn from_faer(m: MatRef<'_, C64>) -> Self {
        let d = m.nrows();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(m[(i, j)]);
            }
        }
        Self { dim: d, data }
    }
}

impl Index<(usize, usize)> for ComplexSquareMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexSquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexSquareMatrix {
    type Output = ComplexSquareMatrix;
    fn add(self, rhs: Self) -> ComplexSquareMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexSquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexSquareMatrix {
    type Output = ComplexSquareMatrix;
    fn sub(self, rhs: Self) -> ComplexSquareMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexSquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// <a|b> with the first argument conjugated.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// Normalizes `v` and rotates it so its largest-magnitude component is real positive.
pub(crate) fn fix_right_phase(v: &mut [C64]) {
    normalize(v);
    let mut best = 0;
    let mut best_mag = -1.0;
    for (k, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = k;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / v[best].norm();
        v.iter_mut().for_each(|z| *z *= phase);
        v[best] = C64::new(v[best].re, 0.0);
    }
}

/// Normalizes `l` and rotates it so that <l|r> is real and nonnegative.
pub(crate) fn fix_left_phase(l: &mut [C64], r: &[C64]) {
    normalize(l);
    let s = inner(l, r);
    if s.norm() > 0.0 {
        let phase = s / s.norm();
        l.iter_mut().for_each(|z| *z *= phase);
    }
}

pub(crate) fn canonical_cmp(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigen-decomposition with paired right/left eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    /// Sorted by ascending real part, then ascending imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Unit norm, largest component real positive.
    pub right_vectors: Vec<Vec<C64>>,
    /// Unit norm, <l|r> real and nonnegative for the paired right vector.
    pub left_vectors: Vec<Vec<C64>>,
    /// max over all pairs of the eigen-equation residuals, relative to |H|_F.
    pub residual_max: f64,
    pub is_defective: bool,
    pub defective_indices: Vec<usize>,
    /// Tolerance used for clustering and tie-breaking on this spectrum.
    pub pairing_tol: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// <l_k | r_k>
    pub fn overlap(&self, k: usize) -> C64 {
        inner(&self.left_vectors[k], &self.right_vectors[k])
    }

    pub fn is_index_defective(&self, k: usize) -> bool {
        self.defective_indices.binary_search(&k).is_ok()
    }

    /// Largest |<l_j|r_k>| over j != k.
    pub fn biorthogonality_error(&self) -> f64 {
        let d = self.dim();
        let r = Mat::from_fn(d, d, |i, k| self.right_vectors[k][i]);
        let l_adj = Mat::from_fn(d, d, |j, i| self.left_vectors[j][i].conj());
        let s = &l_adj * &r;
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for k in 0..d {
                if j != k {
                    worst = worst.max(s[(j, k)].norm());
                }
            }
        }
        worst
    }

    /// sum_k E_k |r_k><l_k| / <l_k|r_k>
    pub fn reconstruct(&self) -> ComplexSquareMatrix {
        let d = self.dim();
        let mut out = ComplexSquareMatrix::zeros(d);
        for k in 0..d {
            let w = self.eigenvalues[k] / self.overlap(k);
            let (r, l) = (&self.right_vectors[k], &self.left_vectors[k]);
            for i in 0..d {
                let ri = r[i] * w;
                for j in 0..d {
                    out[(i, j)] += ri * l[j].conj();
                }
            }
        }
        out
    }
}

pub(crate) fn pairing_tolerance(eigenvalues: &[C64], h_norm: f64) -> f64 {
    let scale = eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max);
    (PAIRING_REL_TOL * scale).max(64.0 * f64::EPSILON * h_norm)
}

fn columns(u: MatRef<'_, C64>) -> Vec<Vec<C64>> {
    (0..u.ncols()).map(|k| (0..u.nrows()).map(|i| u[(i, k)]).collect()).collect()
}

fn faer_eig(h: &ComplexSquareMatrix) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let evd = h.to_faer().eigen().map_err(|_| MqcError::NoConvergence)?;
    let s = evd.S().column_vector();
    let values = (0..h.dim()).map(|k| s[k]).collect();
    Ok((values, columns(evd.U())))
}

/// Groups indices of a (Re, Im)-sorted spectrum into clusters within `tol`.
fn cluster_spectrum(values: &[C64], tol: f64) -> Vec<usize> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if values[j].re - values[i].re > tol {
                break;
            }
            if (values[j] - values[i]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut ids = vec![0; n];
    let mut next = 0;
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = next;
            next += 1;
        }
        ids[i] = label[root];
    }
    ids
}

pub(crate) fn relative_residuals(
    h: &ComplexSquareMatrix,
    eigenvalues: &[C64],
    right: &[Vec<C64>],
    left: &[Vec<C64>],
) -> f64 {
    let h_norm = h.frobenius_norm();
    if h_norm == 0.0 {
        return 0.0;
    }
    let d = h.dim();
    let r = Mat::from_fn(d, d, |i, k| right[k][i]);
    let l = Mat::from_fn(d, d, |i, k| left[k][i]);
    let hr = &h.to_faer() * &r;
    let hl = &h.adjoint().to_faer() * &l;
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let (e, ec) = (eigenvalues[k], eigenvalues[k].conj());
        let mut rr = 0.0;
        let mut rl = 0.0;
        for i in 0..d {
            rr += (hr[(i, k)] - e * right[k][i]).norm_sqr();
            rl += (hl[(i, k)] - ec * left[k][i]).norm_sqr();
        }
        worst = worst.max(rr.sqrt()).max(rl.sqrt());
    }
    worst / h_norm
}

/// General (non-Hermitian) eigendecomposition with biorthogonal pairing.
///
/// Right vectors come from `H`, left vectors from the adjoint problem `H^dag`.
/// When `H` is exactly Hermitian or exactly complex symmetric the adjoint
/// problem is solved in closed form from the right vectors (`l = r` and
/// `l = conj(r)` respectively). Eigenvalue clusters are biorthogonalized as a
/// block; clusters whose overlap matrix is numerically singular, left
/// eigenvalues that cannot be matched within the pairing tolerance, and pairs
/// that coalesce within their own perturbation bound are all reported in
/// `defective_indices`.
pub fn eig_general(h: &ComplexSquareMatrix) -> Result<EigenSystem> {
    let d = h.dim();
    let h_norm = h.frobenius_norm();

    let (raw_values, raw_right) = faer_eig(h)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| canonical_cmp(&raw_values[a], &raw_values[b]));
    let eigenvalues: Vec<C64> = order.iter().map(|&k| raw_values[k]).collect();
    let mut right: Vec<Vec<C64>> = order.iter().map(|&k| raw_right[k].clone()).collect();
    right.iter_mut().for_each(|v| fix_right_phase(v));

    let tol = pairing_tolerance(&eigenvalues, h_norm);
    let cluster = cluster_spectrum(&eigenvalues, tol);
    let n_clusters = cluster.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (k, &c) in cluster.iter().enumerate() {
        members[c].push(k);
    }
    let mut bad_cluster = vec![false; n_clusters];

    // Left vectors grouped by the cluster they pair with.
    let mut left_by_cluster: Vec<Vec<Vec<C64>>> = vec![Vec::new(); n_clusters];
    if h.is_exactly_hermitian() {
        for (k, &c) in cluster.iter().enumerate() {
            left_by_cluster[c].push(right[k].clone());
        }
    } else if h.is_exactly_symmetric() {
        for (k, &c) in cluster.iter().enumerate() {
            left_by_cluster[c].push(right[k].iter().map(|z| z.conj()).collect());
        }
    } else {
        let (adj_values, adj_vectors) = faer_eig(&h.adjoint())?;
        for (mu, vec) in adj_values.iter().zip(adj_vectors) {
            let target = mu.conj();
            let (nearest, dist) = eigenvalues
                .iter()
                .enumerate()
                .map(|(i, e)| (i, (e - target).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty spectrum");
            let c = cluster[nearest];
            if dist > tol {
                bad_cluster[c] = true;
            }
            left_by_cluster[c].push(vec);
        }
    }

    let mut left: Vec<Vec<C64>> = vec![Vec::new(); d];
    for c in 0..n_clusters {
        let idx = &members[c];
        let mut lefts = std::mem::take(&mut left_by_cluster[c]);
        if lefts.len() != idx.len() {
            bad_cluster[c] = true;
        }
        lefts.iter_mut().for_each(|l| normalize(l));
        if !bad_cluster[c] {
            match biorthogonalize(idx, &right, &lefts) {
                Some(paired) => {
                    for (&k, l) in idx.iter().zip(paired) {
                        left[k] = l;
                    }
                    continue;
                }
                None => bad_cluster[c] = true,
            }
        }
        // Best effort for defective clusters: keep whatever left vectors exist.
        for (pos, &k) in idx.iter().enumerate() {
            let mut l = lefts.get(pos).cloned().unwrap_or_else(|| right[k].clone());
            fix_left_phase(&mut l, &right[k]);
            left[k] = l;
        }
    }

    let mut defective = vec![false; d];
    for (k, &c) in cluster.iter().enumerate() {
        defective[k] = bad_cluster[c];
    }

    let overlaps: Vec<f64> = (0..d).map(|k| inner(&left[k], &right[k]).norm()).collect();
    for k in 0..d {
        if overlaps[k] <= EP_TOL {
            defective[k] = true;
        }
    }
    let eps_h = COALESCENCE_FACTOR * f64::EPSILON * h_norm;
    for i in 0..d {
        if overlaps[i] >= COALESCENCE_OVERLAP {
            continue;
        }
        for j in 0..d {
            if i == j || cluster[i] == cluster[j] {
                continue;
            }
            let bound = eps_h * (1.0 / overlaps[i].max(f64::MIN_POSITIVE) + 1.0 / overlaps[j].max(f64::MIN_POSITIVE));
            if (eigenvalues[i] - eigenvalues[j]).norm() <= bound {
                defective[i] = true;
                defective[j] = true;
            }
        }
    }

    let defective_indices: Vec<usize> = (0..d).filter(|&k| defective[k]).collect();
    let residual_max = relative_residuals(h, &eigenvalues, &right, &left);
    Ok(EigenSystem {
        eigenvalues,
        right_vectors: right,
        left_vectors: left,
        residual_max,
        is_defective: !defective_indices.is_empty(),
        defective_indices,
        pairing_tol: tol,
    })
}

/// Rotates the left vectors of one cluster so that <l_a|r_b> = delta_ab, then
/// renormalizes. Returns `None` when the overlap matrix is numerically singular.
fn biorthogonalize(idx: &[usize], right: &[Vec<C64>], lefts: &[Vec<C64>]) -> Option<Vec<Vec<C64>>> {
    let k = idx.len();
    if k == 1 {
        let s = inner(&lefts[0], &right[idx[0]]);
        if s.norm() <= EP_TOL {
            return None;
        }
        let mut l = lefts[0].clone();
        fix_left_phase(&mut l, &right[idx[0]]);
        return Some(vec![l]);
    }
    let s = Mat::from_fn(k, k, |a, b| inner(&lefts[a], &right[idx[b]]));
    let sigma = s.singular_values().ok()?;
    let sigma_min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if !(sigma_min > EP_TOL) {
        return None;
    }
    let s_inv = s.partial_piv_lu().inverse();
    let d = right[idx[0]].len();
    let mut out = Vec::with_capacity(k);
    for a in 0..k {
        let mut l = vec![C64::new(0.0, 0.0); d];
        for (q, lq) in lefts.iter().enumerate() {
            let w = s_inv[(a, q)].conj();
            for (dst, src) in l.iter_mut().zip(lq) {
                *dst += w * src;
            }
        }
        fix_left_phase(&mut l, &right[idx[a]]);
        out.push(l);
    }
    Some(out)
}

/// Eigendecomposition of a Hermitian matrix: real ascending eigenvalues and an
/// orthonormal basis; left vectors equal right vectors.
pub fn eig_hermitian(a: &ComplexSquareMatrix) -> Result<EigenSystem> {
    let d = a.dim();
    let a_norm = a.frobenius_norm();
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * a_norm {
        return Err(MqcError::NotHermitian { asymmetry: defect / a_norm });
    }

    let (values, mut vectors): (Vec<f64>, Vec<Vec<C64>>) = if a.is_exactly_diagonal() {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = order
            .iter()
            .map(|&i| {
                let mut e = vec![C64::new(0.0, 0.0); d];
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        (values, vectors)
    } else {
        let half = C64::new(0.5, 0.0);
        let sym = (a + &a.adjoint()).scale(half);
        let evd = sym
            .to_faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| MqcError::NoConvergence)?;
        let s = evd.S().column_vector();
        let raw: Vec<f64> = (0..d).map(|k| s[k].re).collect();
        let cols = columns(evd.U());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
        (order.iter().map(|&k| raw[k]).collect(), order.iter().map(|&k| cols[k].clone()).collect())
    };
    vectors.iter_mut().for_each(|v| fix_right_phase(v));

    let eigenvalues: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
    let residual_max = relative_residuals(a, &eigenvalues, &vectors, &vectors);
    let pairing_tol = pairing_tolerance(&eigenvalues, a_norm);
    Ok(EigenSystem {
        eigenvalues,
        left_vectors: vectors.clone(),
        right_vectors: vectors,
        residual_max,
        is_defective: false,
        defective_indices: Vec::new(),
        pairing_tol,
    })
}

/// |XY - YX|_F
pub fn commutator_norm(x: &ComplexSquareMatrix, y: &ComplexSquareMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(MqcError::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    let (fx, fy) = (x.to_faer(), y.to_faer());
    let c = &fx * &fy - &fy * &fx;
    Ok(c.norm_l2())
}
