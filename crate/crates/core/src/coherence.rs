//! Coherence-order decomposition of rank-1 biorthogonal states.
//!
//! A state ρ = |r⟩⟨l| / n is expanded in the eigenbasis {|ψ_j⟩} of a Hermitian
//! reference observable A. The matrix element ρ_jl = ⟨ψ_j|ρ|ψ_l⟩ belongs to the
//! coherence order m = λ_j − λ_l, and the intensity of order m is
//! I_m = Σ |ρ_jl|² over those pairs.

use crate::error::{MqcError, Result};
use crate::linalg::{eig_hermitian, inner, norm, ComplexSquareMatrix, EigenSystem, C64, EP_TOL};

/// Relative tolerance of the sum-rule check.
pub const SUM_RULE_TOL: f64 = 1e-10;
const GAP_REL_TOL: f64 = 1e-9;
const GAP_ABS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// ρ = |r⟩⟨l| / ⟨l|r⟩
    #[default]
    TraceOne,
    /// ρ = |r⟩⟨l| with unit vectors
    UnitVectors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureBiorthState {
    right: Vec<C64>,
    left: Vec<C64>,
    normalization: Normalization,
    energy: C64,
}

impl PureBiorthState {
    pub fn new(right: Vec<C64>, left: Vec<C64>, normalization: Normalization, energy: C64) -> Result<Self> {
        if right.len() != left.len() {
            return Err(MqcError::DimensionMismatch { expected: right.len(), found: left.len() });
        }
        if right.is_empty() {
            return Err(MqcError::InvalidParameter("state vectors must be nonempty".into()));
        }
        let (nr, nl) = (norm(&right), norm(&left));
        if !(nr > 0.0 && nl > 0.0 && nr.is_finite() && nl.is_finite()) {
            return Err(MqcError::InvalidParameter("state vectors must be finite and nonzero".into()));
        }
        let (right, left) = match normalization {
            Normalization::TraceOne => {
                let overlap = inner(&left, &right).norm() / (nr * nl);
                if overlap <= EP_TOL {
                    return Err(MqcError::ExceptionalPoint { overlap });
                }
                (right, left)
            }
            Normalization::UnitVectors => (
                right.iter().map(|z| z / nr).collect(),
                left.iter().map(|z| z / nl).collect(),
            ),
        };
        Ok(Self { right, left, normalization, energy })
    }

    /// State built from the k-th eigenpair.
    pub fn from_eigensystem(es: &EigenSystem, k: usize, normalization: Normalization) -> Result<Self> {
        if es.is_index_defective(k) {
            return Err(MqcError::Defective { indices: es.defective_indices.clone() });
        }
        Self::new(es.right_vectors[k].clone(), es.left_vectors[k].clone(), normalization, es.eigenvalues[k])
    }

    pub fn right(&self) -> &[C64] {
        &self.right
    }

    pub fn left(&self) -> &[C64] {
        &self.left
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn energy(&self) -> C64 {
        self.energy
    }

    pub fn dim(&self) -> usize {
        self.right.len()
    }

    /// ⟨l|r⟩
    pub fn overlap(&self) -> C64 {
        inner(&self.left, &self.right)
    }

    /// The scalar n in ρ = |r⟩⟨l| / n.
    pub fn denominator(&self) -> C64 {
        match self.normalization {
            Normalization::TraceOne => self.overlap(),
            Normalization::UnitVectors => C64::new(1.0, 0.0),
        }
    }

    /// Tr(ρ†ρ)
    pub fn purity(&self) -> f64 {
        let (nr, nl) = (norm(&self.right), norm(&self.left));
        (nr * nr) * (nl * nl) / self.denominator().norm_sqr()
    }

    /// Same state with replaced vectors; normalization and energy kept.
    pub(crate) fn with_vectors(&self, right: Vec<C64>, left: Vec<C64>) -> Self {
        Self { right, left, normalization: self.normalization, energy: self.energy }
    }

    /// Tr(ρ† σ)
    pub fn hs_overlap(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(MqcError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let num = inner(&self.right, &other.right) * inner(&other.left, &self.left);
        Ok(num / (self.denominator().conj() * other.denominator()))
    }

    pub fn to_matrix(&self) -> ComplexSquareMatrix {
        let d = self.dim();
        let n = self.denominator();
        let mut m = ComplexSquareMatrix::zeros(d);
        for i in 0..d {
            let ri = self.right[i] / n;
            for j in 0..d {
                m[(i, j)] = ri * self.left[j].conj();
            }
        }
        m
    }
}

/// Eigenbasis of a Hermitian reference observable with clustered eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceBasis {
    vectors: Vec<Vec<C64>>,
    eigenvalues: Vec<f64>,
    cluster_labels: Vec<usize>,
    cluster_values: Vec<f64>,
    gap_labels: Vec<f64>,
    gap_tol: f64,
    // index into gap_labels for every ordered cluster pair (row-major)
    pair_label: Vec<usize>,
}

impl ReferenceBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn cluster_labels(&self) -> &[usize] {
        &self.cluster_labels
    }

    /// Cluster representatives (means), ascending.
    pub fn cluster_values(&self) -> &[f64] {
        &self.cluster_values
    }

    /// Distinct coherence orders, ascending and symmetric about 0.
    pub fn gap_labels(&self) -> &[f64] {
        &self.gap_labels
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol
    }

    /// Index into `gap_labels` of the order connecting clusters `a` and `b`.
    pub fn label_index(&self, a: usize, b: usize) -> usize {
        self.pair_label[a * self.cluster_values.len() + b]
    }

    pub fn max_abs_label(&self) -> f64 {
        self.gap_labels.last().copied().unwrap_or(0.0)
    }

    pub fn is_integer_spaced(&self) -> bool {
        self.gap_labels.iter().all(|m| m.fract() == 0.0)
    }

    /// Coordinates ⟨ψ_j|v⟩.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        self.vectors.iter().map(|psi| inner(psi, v)).collect()
    }

    fn check_dim(&self, rho: &PureBiorthState) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(MqcError::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(())
    }
}

/// Groups ascending values into runs whose consecutive gaps are ≤ tol.
fn runs(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn make_reference_basis(a: &ComplexSquareMatrix) -> Result<ReferenceBasis> {
    let es = eig_hermitian(a)?;
    let eigenvalues: Vec<f64> = es.eigenvalues.iter().map(|e| e.re).collect();
    let spread = eigenvalues.last().unwrap() - eigenvalues[0];
    let gap_tol = (GAP_REL_TOL * spread).max(GAP_ABS_TOL);

    let mut cluster_labels = vec![0; eigenvalues.len()];
    let mut cluster_values = Vec::new();
    for (c, (s, e)) in runs(&eigenvalues, gap_tol).into_iter().enumerate() {
        cluster_labels[s..e].iter_mut().for_each(|x| *x = c);
        cluster_values.push(mean(&eigenvalues[s..e]));
    }
    let nc = cluster_values.len();

    // Positive differences are clustered once; negative orders mirror them.
    let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(nc * nc.saturating_sub(1) / 2);
    for a in 0..nc {
        for b in 0..a {
            diffs.push((cluster_values[a] - cluster_values[b], a, b));
        }
    }
    diffs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let sorted: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let mut positive = Vec::new();
    let mut pos_index = vec![0; diffs.len()];
    for (s, e) in runs(&sorted, gap_tol) {
        let mut m = mean(&sorted[s..e]);
        if (m - m.round()).abs() <= gap_tol {
            m = m.round();
        }
        pos_index[s..e].iter_mut().for_each(|x| *x = positive.len());
        positive.push(m);
    }
    let np = positive.len();
    let mut gap_labels: Vec<f64> = positive.iter().rev().map(|m| -m).collect();
    gap_labels.push(0.0);
    gap_labels.extend(&positive);

    let mut pair_label = vec![np; nc * nc];
    for (k, &(_, a, b)) in diffs.iter().enumerate() {
        pair_label[a * nc + b] = np + 1 + pos_index[k];
        pair_label[b * nc + a] = np - 1 - pos_index[k];
    }

    Ok(ReferenceBasis {
        vectors: es.right_vectors,
        eigenvalues,
        cluster_labels,
        cluster_values,
        gap_labels,
        gap_tol,
        pair_label,
    })
}

/// ρ in reference-basis coordinates, split by coherence order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceBlocks {
    dim: usize,
    /// Coherence order of each block.
    pub labels: Vec<f64>,
    /// Nonzero-pattern entries (j, l, ρ_jl) of each block.
    pub entries: Vec<Vec<(usize, usize, C64)>>,
}

impl CoherenceBlocks {
    pub fn block(&self, k: usize) -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(self.dim);
        for &(j, l, v) in &self.entries[k] {
            m[(j, l)] = v;
        }
        m
    }

    /// Σ_m ρ_m
    pub fn reassemble(&self) -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(self.dim);
        for block in &self.entries {
            for &(j, l, v) in block {
                m[(j, l)] += v;
            }
        }
        m
    }
}

/// ⟨ψ_j|ρ|ψ_l⟩ for all j, l.
pub fn matrix_in_basis(rho: &PureBiorthState, basis: &ReferenceBasis) -> Result<ComplexSquareMatrix> {
    basis.check_dim(rho)?;
    let a = basis.coordinates(rho.right());
    let b = basis.coordinates(rho.left());
    let n = rho.denominator();
    let d = basis.dim();
    ComplexSquareMatrix::from_fn(d, |j, l| a[j] * b[l].conj() / n)
}

pub fn decompose(rho: &PureBiorthState, basis: &ReferenceBasis) -> Result<CoherenceBlocks> {
    let m = matrix_in_basis(rho, basis)?;
    let d = basis.dim();
    let mut entries = vec![Vec::new(); basis.gap_labels.len()];
    for j in 0..d {
        for l in 0..d {
            let k = basis.label_index(basis.cluster_labels[j], basis.cluster_labels[l]);
            entries[k].push((j, l, m[(j, l)]));
        }
    }
    Ok(CoherenceBlocks { dim: d, labels: basis.gap_labels.clone(), entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MQISpectrum {
    /// (m, I_m) ascending in m.
    pub entries: Vec<(f64, f64)>,
    pub second_moment: f64,
}

impl MQISpectrum {
    pub fn from_entries(entries: Vec<(f64, f64)>) -> Self {
        let second_moment = entries.iter().map(|(m, i)| m * m * i).sum::<f64>().sqrt();
        Self { entries, second_moment }
    }

    pub fn get(&self, m: f64) -> Option<f64> {
        self.entries.iter().find(|(k, _)| *k == m).map(|e| e.1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// max_m |I_m − I_{−m}|
    pub fn asymmetry(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(m, i)| self.get(-m).map_or(i, |j| (i - j).abs()))
            .fold(0.0, f64::max)
    }
}

/// Intensities from per-cluster weights; never materializes ρ.
pub fn mqi(rho: &PureBiorthState, basis: &ReferenceBasis) -> Result<MQISpectrum> {
    basis.check_dim(rho)?;
    let a = basis.coordinates(rho.right());
    let b = basis.coordinates(rho.left());
    let nc = basis.cluster_values.len();
    let mut p = vec![0.0; nc];
    let mut q = vec![0.0; nc];
    for (j, &c) in basis.cluster_labels.iter().enumerate() {
        p[c] += a[j].norm_sqr();
        q[c] += b[j].norm_sqr();
    }
    let scale = 1.0 / rho.denominator().norm_sqr();
    let mut intensity = vec![0.0; basis.gap_labels.len()];
    for c in 0..nc {
        for c2 in 0..nc {
            intensity[basis.label_index(c, c2)] += p[c] * q[c2] * scale;
        }
    }
    Ok(MQISpectrum::from_entries(basis.gap_labels.iter().copied().zip(intensity).collect()))
}

/// Σ_m I_m, checked against Tr(ρ†ρ).
pub fn sum_rule(rho: &PureBiorthState, basis: &ReferenceBasis) -> Result<f64> {
    let sum = mqi(rho, basis)?.total();
    let expected = rho.purity();
    if (sum - expected).abs() > SUM_RULE_TOL * expected {
        return Err(MqcError::SumRuleViolation { sum, expected });
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig_general;
    use crate::models::{
        build_collective_sz, build_hatano_nelson, build_ising, build_spin_observable, build_two_level,
        hermitian_split, HNParams, IsingParams, TwoLevelParams,
    };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus_x() -> PureBiorthState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![c(h, 0.0), c(h, 0.0)];
        PureBiorthState::new(v.clone(), v, Normalization::TraceOne, c(0.0, 0.0)).unwrap()
    }

    fn sz_half() -> ReferenceBasis {
        make_reference_basis(&build_spin_observable([0.0, 0.0, 1.0]).unwrap()).unwrap()
    }

    #[test]
    fn spin_chain_labels() {
        let b = make_reference_basis(&build_collective_sz(3).unwrap()).unwrap();
        assert_eq!(b.cluster_values(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(b.gap_labels(), &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert!(b.is_integer_spaced());
        assert_eq!(sz_half().gap_labels(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn hatano_nelson_labels_are_real_gaps() {
        let h = build_hatano_nelson(&HNParams::open(5, 1.0, 2.0)).unwrap();
        let (_, h2) = hermitian_split(&h);
        let b = make_reference_basis(&h2).unwrap();
        // H2 eigenvalues are (J_L - J_R) cos(lπ/6)... up to sign, with one zero mode.
        let mut want: Vec<f64> = (1..=5).map(|l| -(l as f64 * std::f64::consts::PI / 6.0).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (got, w) in b.cluster_values().iter().zip(&want) {
            assert!((got - w).abs() < 1e-12);
        }
        assert!(!b.is_integer_spaced());
        let labels = b.gap_labels();
        let n = labels.len();
        for k in 0..n {
            assert_eq!(labels[k], -labels[n - 1 - k]);
        }
    }

    #[test]
    fn plus_x_decomposition() {
        let blocks = decompose(&plus_x(), &sz_half()).unwrap();
        assert_eq!(blocks.labels, vec![-1.0, 0.0, 1.0]);
        // σz/2 eigenbasis: index 0 is spin down.
        let low = blocks.block(0);
        assert!((low[(0, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(blocks.entries[0].len(), 1);
        let mid = blocks.block(1);
        assert!((mid[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((mid[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(mid[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn plus_x_intensities() {
        let s = mqi(&plus_x(), &sz_half()).unwrap();
        assert!((s.get(1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((s.get(-1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((s.get(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.second_moment - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn diagonal_state_has_only_zero_order() {
        let v = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let rho = PureBiorthState::new(v.clone(), v, Normalization::TraceOne, c(0.0, 0.0)).unwrap();
        let blocks = decompose(&rho, &sz_half()).unwrap();
        for (k, label) in blocks.labels.iter().enumerate() {
            if *label != 0.0 {
                assert!(blocks.entries[k].iter().all(|e| e.2 == c(0.0, 0.0)));
            }
        }
        assert_eq!(mqi(&rho, &sz_half()).unwrap().second_moment, 0.0);
    }

    fn dimer_ground(g: f64, axis: [f64; 3]) -> (PureBiorthState, ReferenceBasis) {
        let p = TwoLevelParams::pt_dimer(1.0, g, axis).unwrap();
        let es = eig_general(&build_two_level(&p)).unwrap();
        let rho = PureBiorthState::from_eigensystem(&es, 0, Normalization::TraceOne).unwrap();
        (rho, make_reference_basis(&build_spin_observable(axis).unwrap()).unwrap())
    }

    #[test]
    fn dimer_second_moment_along_y() {
        let (rho, basis) = dimer_ground(0.5, [0.0, 1.0, 0.0]);
        let s = mqi(&rho, &basis).unwrap();
        assert!((s.second_moment - (1.25f64 / 1.5).sqrt()).abs() < 1e-12);
        let total = sum_rule(&rho, &basis).unwrap();
        assert!((total - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_dimer_sum_rule_is_one() {
        let (rho, basis) = dimer_ground(0.0, [0.0, 1.0, 0.0]);
        assert!((sum_rule(&rho, &basis).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_reference_gives_zero_moment() {
        // Ground state of σx measured against σx/2.
        let (rho, basis) = dimer_ground(0.0, [1.0, 0.0, 0.0]);
        assert!(mqi(&rho, &basis).unwrap().second_moment < 1e-12);
    }

    #[test]
    fn ising_blocks_reassemble_exactly() {
        let p = IsingParams { l: 5, j: 1.0, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.1 };
        let es = eig_general(&build_ising(&p).unwrap()).unwrap();
        let rho = PureBiorthState::from_eigensystem(&es, 0, Normalization::TraceOne).unwrap();
        let basis = make_reference_basis(&build_collective_sz(5).unwrap()).unwrap();
        let blocks = decompose(&rho, &basis).unwrap();
        assert_eq!(blocks.labels.len(), 11);
        assert_eq!(blocks.reassemble(), matrix_in_basis(&rho, &basis).unwrap());
        let s = mqi(&rho, &basis).unwrap();
        for (k, (_, i)) in s.entries.iter().enumerate() {
            let direct: f64 = blocks.entries[k].iter().map(|e| e.2.norm_sqr()).sum();
            assert!((direct - i).abs() <= 1e-12 * s.total());
        }
        assert!(s.asymmetry() <= 1e-12);
    }

    #[test]
    fn trace_one_rejects_self_orthogonal_pair() {
        let r = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let l = vec![c(1.0, 0.0), c(0.0, -1.0)];
        assert!(matches!(
            PureBiorthState::new(r.clone(), l.clone(), Normalization::TraceOne, c(0.0, 0.0)),
            Err(MqcError::ExceptionalPoint { .. })
        ));
        let rho = PureBiorthState::new(r, l, Normalization::UnitVectors, c(0.0, 0.0)).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sum_rule_flags_inconsistency() {
        let rho = plus_x();
        let mut basis = sz_half();
        basis.pair_label = vec![1; 4];
        basis.vectors[0][0] = c(2.0, 0.0);
        assert!(matches!(sum_rule(&rho, &basis), Err(MqcError::SumRuleViolation { .. })));
    }
}
