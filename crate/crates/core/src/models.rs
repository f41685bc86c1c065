//! Hamiltonians and observables as dense matrices.
//!
//! Spin chains use the computational basis with site `j` (0-based) stored at
//! bit `L - 1 - j` of the basis index, so that site 0 is the leftmost factor
//! of the Kronecker product. Bit value 0 is spin up (σz = +1).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{MqcError, Result};
use crate::linalg::{ComplexSquareMatrix, C64, MAX_DIM};

/// Largest supported spin-chain length.
pub const MAX_SITES: usize = 14;

const UNIT_TOL: f64 = 1e-12;

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MqcError::InvalidParameter(format!("{name} must be finite")))
    }
}

fn check_unit(n_hat: [f64; 3]) -> Result<()> {
    check_finite("n_hat", &n_hat)?;
    let norm = n_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(MqcError::InvalidParameter(format!("n_hat must be a unit vector, |n_hat| = {norm}")));
    }
    Ok(())
}

/// H = (u - i γ)·σ with reference axis n̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelParams {
    pub u: [f64; 3],
    pub gamma: [f64; 3],
    pub n_hat: [f64; 3],
}

impl TwoLevelParams {
    pub fn new(u: [f64; 3], gamma: [f64; 3], n_hat: [f64; 3]) -> Result<Self> {
        check_finite("u", &u)?;
        check_finite("gamma", &gamma)?;
        check_unit(n_hat)?;
        Ok(Self { u, gamma, n_hat })
    }

    /// J σx + i Γ σz, i.e. u = (J, 0, 0) and γ = (0, 0, -Γ).
    pub fn pt_dimer(j: f64, big_gamma: f64, n_hat: [f64; 3]) -> Result<Self> {
        Self::new([j, 0.0, 0.0], [0.0, 0.0, -big_gamma], n_hat)
    }
}

fn pauli(axis: usize) -> [[C64; 2]; 2] {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let i = C64::new(0.0, 1.0);
    match axis {
        0 => [[z, o], [o, z]],
        1 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

fn pauli_combination(coeffs: [C64; 3]) -> ComplexSquareMatrix {
    let mut m = ComplexSquareMatrix::zeros(2);
    for (axis, c) in coeffs.iter().enumerate() {
        let p = pauli(axis);
        for r in 0..2 {
            for s in 0..2 {
                m[(r, s)] += c * p[r][s];
            }
        }
    }
    m
}

pub fn build_two_level(p: &TwoLevelParams) -> ComplexSquareMatrix {
    let coeffs = std::array::from_fn(|k| C64::new(p.u[k], -p.gamma[k]));
    pauli_combination(coeffs)
}

/// (1/2) n̂·σ
pub fn build_spin_observable(n_hat: [f64; 3]) -> Result<ComplexSquareMatrix> {
    check_unit(n_hat)?;
    Ok(pauli_combination(std::array::from_fn(|k| C64::new(0.5 * n_hat[k], 0.0))))
}

fn check_sites(l: usize) -> Result<()> {
    if l == 0 {
        return Err(MqcError::InvalidParameter("chain needs at least one site".into()));
    }
    if l > MAX_SITES {
        return Err(MqcError::DimensionTooLarge { dim: 1 << l.min(63), cap: 1 << MAX_SITES });
    }
    Ok(())
}

#[inline]
fn site_bit(l: usize, site: usize) -> usize {
    1 << (l - 1 - site)
}

/// (1/2) Σ_j n̂·σ_j on `l` sites.
pub fn build_collective_spin(l: usize, n_hat: [f64; 3]) -> Result<ComplexSquareMatrix> {
    check_sites(l)?;
    check_unit(n_hat)?;
    let dim = 1usize << l;
    let mut m = ComplexSquareMatrix::zeros(dim);
    let flip = C64::new(0.5 * n_hat[0], 0.0);
    for s in 0..dim {
        for site in 0..l {
            let bit = site_bit(l, site);
            let up = s & bit == 0;
            // <s'|σ|s> for s' = s with this site flipped: σx gives 1, σy gives ±i.
            let sy = if up { C64::new(0.0, 0.5 * n_hat[1]) } else { C64::new(0.0, -0.5 * n_hat[1]) };
            m[(s ^ bit, s)] += flip + sy;
            m[(s, s)] += C64::new(if up { 0.5 } else { -0.5 } * n_hat[2], 0.0);
        }
    }
    Ok(m)
}

pub fn build_collective_sz(l: usize) -> Result<ComplexSquareMatrix> {
    build_collective_spin(l, [0.0, 0.0, 1.0])
}

/// Periodic transverse-field Ising chain with NN and NNN couplings and
/// imaginary longitudinal fields, H = H1 + i H2 with
/// H1 = -Σ (J σz_j σz_{j+1} + J2 σz_j σz_{j+2} + Γ σx_j) and
/// H2 = -Σ (h_z σz_j + h_y σy_j).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingParams {
    pub l: usize,
    pub j: f64,
    pub j2: f64,
    pub gamma: f64,
    pub h_y: f64,
    pub h_z: f64,
}

impl IsingParams {
    pub fn validate(&self) -> Result<()> {
        check_sites(self.l)?;
        check_finite("Ising couplings", &[self.j, self.j2, self.gamma, self.h_y, self.h_z])?;
        if self.l < 2 {
            return Err(MqcError::InvalidParameter("periodic Ising chain needs L >= 2".into()));
        }
        if self.l < 3 && self.j2 != 0.0 {
            return Err(MqcError::InvalidParameter("NNN coupling requires L >= 3".into()));
        }
        Ok(())
    }
}

pub fn build_ising(p: &IsingParams) -> Result<ComplexSquareMatrix> {
    p.validate()?;
    let l = p.l;
    let dim = 1usize << l;
    let mut h = ComplexSquareMatrix::zeros(dim);
    let z = |s: usize, site: usize| if s & site_bit(l, site % l) == 0 { 1.0 } else { -1.0 };
    for s in 0..dim {
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        for j in 0..l {
            h1 -= p.j * z(s, j) * z(s, j + 1) + p.j2 * z(s, j) * z(s, j + 2);
            h2 -= p.h_z * z(s, j);
        }
        h[(s, s)] = C64::new(h1, h2);
        for j in 0..l {
            let bit = site_bit(l, j);
            // -Γ σx contributes -Γ; i·(-h_y σy) contributes -i h_y (±i) = ±h_y.
            let y = if s & bit == 0 { p.h_y } else { -p.h_y };
            h[(s ^ bit, s)] += C64::new(-p.gamma + y, 0.0);
        }
    }
    Ok(h)
}

/// On-site potential of a Hatano-Nelson chain.
#[derive(Clone, Debug, PartialEq)]
pub enum Onsite {
    None,
    /// Uniform draws on [-W, W] keyed by (seed, realization).
    Random { w: f64, seed: u64, realization: u64 },
    Explicit(Vec<f64>),
}

/// Single-particle Hatano-Nelson chain with generalized boundary hoppings.
#[derive(Clone, Debug, PartialEq)]
pub struct HNParams {
    pub n: usize,
    pub j_l: f64,
    pub j_r: f64,
    pub delta_l: f64,
    pub delta_r: f64,
    pub onsite: Onsite,
}

impl HNParams {
    pub fn open(n: usize, j_l: f64, j_r: f64) -> Self {
        Self { n, j_l, j_r, delta_l: 0.0, delta_r: 0.0, onsite: Onsite::None }
    }

    pub fn ring(n: usize, j_l: f64, j_r: f64) -> Self {
        Self { n, j_l, j_r, delta_l: j_l, delta_r: j_r, onsite: Onsite::None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(MqcError::InvalidParameter("Hatano-Nelson chain needs N >= 2".into()));
        }
        if self.n > MAX_DIM {
            return Err(MqcError::DimensionTooLarge { dim: self.n, cap: MAX_DIM });
        }
        check_finite("hoppings", &[self.j_l, self.j_r, self.delta_l, self.delta_r])?;
        match &self.onsite {
            Onsite::None => Ok(()),
            Onsite::Random { w, .. } => {
                if w.is_finite() && *w >= 0.0 {
                    Ok(())
                } else {
                    Err(MqcError::InvalidParameter(format!("disorder strength must be >= 0, got {w}")))
                }
            }
            Onsite::Explicit(v) => {
                if v.len() != self.n {
                    return Err(MqcError::DimensionMismatch { expected: self.n, found: v.len() });
                }
                check_finite("on-site potential", v)
            }
        }
    }

    pub fn potential(&self) -> Vec<f64> {
        match &self.onsite {
            Onsite::None => vec![0.0; self.n],
            Onsite::Random { w, seed, realization } => sample_disorder(*w, self.n, *seed, *realization),
            Onsite::Explicit(v) => v.clone(),
        }
    }
}

pub fn build_hatano_nelson(p: &HNParams) -> Result<ComplexSquareMatrix> {
    p.validate()?;
    let n = p.n;
    let mut h = ComplexSquareMatrix::zeros(n);
    for (j, v) in p.potential().into_iter().enumerate() {
        h[(j, j)] = C64::new(v, 0.0);
    }
    for j in 0..n - 1 {
        h[(j, j + 1)] += C64::new(p.j_l, 0.0);
        h[(j + 1, j)] += C64::new(p.j_r, 0.0);
    }
    h[(0, n - 1)] += C64::new(p.delta_r, 0.0);
    h[(n - 1, 0)] += C64::new(p.delta_l, 0.0);
    Ok(h)
}

/// H1 = (H + H†)/2, H2 = (H - H†)/(2i).
pub fn hermitian_split(h: &ComplexSquareMatrix) -> (ComplexSquareMatrix, ComplexSquareMatrix) {
    let adj = h.adjoint();
    let h1 = (h + &adj).scale(C64::new(0.5, 0.0));
    let h2 = (h - &adj).scale(C64::new(0.0, -0.5));
    (h1, h2)
}

/// `n` uniform draws on [-W, W]. The stream is keyed by (seed, realization)
/// only, so any realization can be regenerated independently of the others.
pub fn sample_disorder(w: f64, n: usize, seed: u64, realization: u64) -> Vec<f64> {
    if w == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            w * (2.0 * u - 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator_norm, eig_general, eig_hermitian};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn kron_site(l: usize, site: usize, op: &ComplexSquareMatrix) -> ComplexSquareMatrix {
        let id = ComplexSquareMatrix::identity(2);
        let mut acc = if site == 0 { op.clone() } else { id.clone() };
        for k in 1..l {
            acc = acc.kron(if k == site { op } else { &id }).unwrap();
        }
        acc
    }

    fn pm(axis: usize) -> ComplexSquareMatrix {
        let p = pauli(axis);
        ComplexSquareMatrix::from_fn(2, |i, j| p[i][j]).unwrap()
    }

    #[test]
    fn two_level_examples() {
        let p = TwoLevelParams::new([1.0, 0.0, 0.0], [0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(build_two_level(&p), pm(0));

        let p = TwoLevelParams::pt_dimer(1.0, 0.5, [0.0, 0.0, 1.0]).unwrap();
        let h = build_two_level(&p);
        let want = ComplexSquareMatrix::new(2, vec![c(0.0, 0.5), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -0.5)]).unwrap();
        assert_eq!(h, want);
        let es = eig_general(&h).unwrap();
        assert!((es.eigenvalues[1].re - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spin_observables() {
        assert_eq!(build_spin_observable([0.0, 0.0, 1.0]).unwrap(), pm(2).scale(c(0.5, 0.0)));
        assert_eq!(build_spin_observable([0.0, 1.0, 0.0]).unwrap(), pm(1).scale(c(0.5, 0.0)));
        let s = 1.0 / 3f64.sqrt();
        let es = eig_hermitian(&build_spin_observable([s, s, s]).unwrap()).unwrap();
        assert!((es.eigenvalues[0].re + 0.5).abs() < 1e-14);
        assert!((es.eigenvalues[1].re - 0.5).abs() < 1e-14);
        assert!(build_spin_observable([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn collective_sz_spectra() {
        assert_eq!(build_collective_sz(1).unwrap(), pm(2).scale(c(0.5, 0.0)));
        let d: Vec<f64> = (0..4).map(|i| build_collective_sz(2).unwrap()[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, 0.0, 0.0, -1.0]);
        let es = eig_hermitian(&build_collective_sz(3).unwrap()).unwrap();
        let vals: Vec<f64> = es.eigenvalues.iter().map(|e| e.re).collect();
        assert_eq!(vals, vec![-1.5, -0.5, -0.5, -0.5, 0.5, 0.5, 0.5, 1.5]);
        assert!(build_collective_sz(MAX_SITES + 1).is_err());
    }

    #[test]
    fn collective_spin_matches_kron_lift() {
        let l = 3;
        let axis = [0.6, 0.0, 0.8];
        let single = build_spin_observable(axis).unwrap();
        let mut want = ComplexSquareMatrix::zeros(1 << l);
        for site in 0..l {
            want = &want + &kron_site(l, site, &single);
        }
        assert!(build_collective_spin(l, axis).unwrap().max_abs_diff(&want) < 1e-15);
        let yl = build_collective_spin(l, [0.0, 1.0, 0.0]).unwrap();
        let mut wy = ComplexSquareMatrix::zeros(1 << l);
        for site in 0..l {
            wy = &wy + &kron_site(l, site, &pm(1).scale(c(0.5, 0.0)));
        }
        assert!(yl.max_abs_diff(&wy) < 1e-15);
    }

    #[test]
    fn ising_matches_kron_construction() {
        let p = IsingParams { l: 4, j: 0.7, j2: 0.3, gamma: 1.1, h_y: 0.2, h_z: 0.15 };
        let l = p.l;
        let mut h1 = ComplexSquareMatrix::zeros(1 << l);
        let mut h2 = ComplexSquareMatrix::zeros(1 << l);
        let zz = |a: usize, b: usize| kron_site(l, a, &pm(2)).matmul(&kron_site(l, b, &pm(2))).unwrap();
        for j in 0..l {
            h1 = &h1 - &zz(j, (j + 1) % l).scale(c(p.j, 0.0));
            h1 = &h1 - &zz(j, (j + 2) % l).scale(c(p.j2, 0.0));
            h1 = &h1 - &kron_site(l, j, &pm(0)).scale(c(p.gamma, 0.0));
            h2 = &h2 - &kron_site(l, j, &pm(2)).scale(c(p.h_z, 0.0));
            h2 = &h2 - &kron_site(l, j, &pm(1)).scale(c(p.h_y, 0.0));
        }
        let want = &h1 + &h2.scale(c(0.0, 1.0));
        assert!(build_ising(&p).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn ising_examples() {
        let p = IsingParams { l: 3, j: 1.0, j2: 0.0, gamma: 0.0, h_y: 0.0, h_z: 0.0 };
        let h = build_ising(&p).unwrap();
        assert!(h.is_exactly_diagonal());
        let es = eig_hermitian(&h).unwrap();
        assert!((es.eigenvalues[0].re + 3.0).abs() < 1e-14);

        let p = IsingParams { l: 2, j: 0.0, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.0 };
        let es = eig_hermitian(&build_ising(&p).unwrap()).unwrap();
        assert!((es.eigenvalues[0].re + 2.0).abs() < 1e-14);

        let bad = IsingParams { l: 2, j2: 0.1, ..p };
        assert!(build_ising(&bad).is_err());
        let big = IsingParams { l: 15, ..p };
        assert!(build_ising(&big).is_err());
    }

    #[test]
    fn ising_symmetry_classes() {
        let base = IsingParams { l: 5, j: 0.4, j2: 0.1, gamma: 1.0, h_y: 0.0, h_z: 0.0 };
        let h = build_ising(&base).unwrap();
        assert!(h.hermitian_defect() <= 1e-14);
        let h = build_ising(&IsingParams { h_z: 0.13, ..base }).unwrap();
        assert!(h.is_exactly_symmetric());
        assert!(!h.is_exactly_hermitian());
        let classical = build_ising(&IsingParams { gamma: 0.0, h_z: 0.2, ..base }).unwrap();
        assert_eq!(commutator_norm(&classical, &build_collective_sz(5).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn hatano_nelson_examples() {
        let h = build_hatano_nelson(&HNParams::open(2, 1.0, 2.0)).unwrap();
        assert_eq!(h, ComplexSquareMatrix::from_real_rows(&[&[0.0, 1.0], &[2.0, 0.0]]).unwrap());
        let es = eig_general(&h).unwrap();
        assert!((es.eigenvalues[1].re - 2f64.sqrt()).abs() < 1e-14);

        let h = build_hatano_nelson(&HNParams::ring(4, 1.0, 1.0)).unwrap();
        let es = eig_hermitian(&h).unwrap();
        for (e, want) in es.eigenvalues.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((e.re - want).abs() < 1e-12);
        }
        assert!(build_hatano_nelson(&HNParams::open(1, 1.0, 1.0)).is_err());
        let p = HNParams { onsite: Onsite::Explicit(vec![0.0; 3]), ..HNParams::open(4, 1.0, 1.0) };
        assert!(build_hatano_nelson(&p).is_err());
    }

    #[test]
    fn split_examples() {
        let h = pm(0);
        let (h1, h2) = hermitian_split(&h);
        assert_eq!(h1, h);
        assert!(h2.frobenius_norm() == 0.0);

        let g = 0.7;
        let (h1, h2) = hermitian_split(&pm(2).scale(c(0.0, g)));
        assert_eq!(h1.frobenius_norm(), 0.0);
        assert!(h2.max_abs_diff(&pm(2).scale(c(g, 0.0))) < 1e-16);

        let (_, h2) = hermitian_split(&build_hatano_nelson(&HNParams::open(5, 1.0, 2.0)).unwrap());
        for j in 0..4 {
            assert!((h2[(j, j + 1)] - c(0.0, 0.5)).norm() < 1e-15, "{:?}", h2[(j, j + 1)]);
            assert!((h2[(j + 1, j)] - c(0.0, -0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn disorder_stream_properties() {
        assert_eq!(sample_disorder(0.0, 5, 1, 2), vec![0.0; 5]);
        assert_eq!(sample_disorder(3.0, 50, 9, 4), sample_disorder(3.0, 50, 9, 4));
        assert_ne!(sample_disorder(3.0, 50, 9, 4), sample_disorder(3.0, 50, 9, 5));
        let v = sample_disorder(1.0, 100_000, 42, 0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0 / 3.0).abs() < 0.01);
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
