//! Phase-encoding fidelity signal and Fourier retrieval of the intensities.
//!
//! The state is rotated as ρ_φ = e^{−iφA} ρ e^{iφA}, the overlap
//! f(φ) = Tr(ρ†ρ_φ) = Σ_m I_m e^{−imφ} is sampled on a uniform phase grid, and
//! the I_m are recovered by a discrete Fourier transform. Only references with
//! integer coherence orders are supported.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::coherence::{make_reference_basis, MQISpectrum, PureBiorthState, ReferenceBasis};
use crate::error::{MqcError, Result};
use crate::linalg::{ComplexSquareMatrix, C64};

/// Binomial sampling-noise model for each signal sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shots {
    pub count: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSignal {
    /// φ_k = 2πk/M
    pub phases: Vec<f64>,
    pub values: Vec<C64>,
    pub shots: Option<Shots>,
    /// Integer coherence orders of the reference.
    pub labels: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievedSpectrum {
    pub spectrum: MQISpectrum,
    /// |Im I_m| per label, in the order of `spectrum.entries`.
    pub imag_residuals: Vec<f64>,
}

impl RetrievedSpectrum {
    pub fn max_imag_residual(&self) -> f64 {
        self.imag_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Applies e^{−iφA} in A's eigenbasis to both vectors.
pub fn rotate_in_basis(rho: &PureBiorthState, basis: &ReferenceBasis, phi: f64) -> Result<PureBiorthState> {
    if rho.dim() != basis.dim() {
        return Err(MqcError::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
    }
    if !phi.is_finite() {
        return Err(MqcError::InvalidParameter("rotation angle must be finite".into()));
    }
    if phi == 0.0 {
        return Ok(rho.clone());
    }
    let apply = |v: &[C64]| -> Vec<C64> {
        let coords = basis.coordinates(v);
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for ((psi, c), lam) in basis.vectors().iter().zip(coords).zip(basis.eigenvalues()) {
            let w = c * C64::from_polar(1.0, -phi * lam);
            for (o, p) in out.iter_mut().zip(psi) {
                *o += w * p;
            }
        }
        out
    };
    Ok(rho.with_vectors(apply(rho.right()), apply(rho.left())))
}

pub fn rotate(rho: &PureBiorthState, a: &ComplexSquareMatrix, phi: f64) -> Result<PureBiorthState> {
    rotate_in_basis(rho, &make_reference_basis(a)?, phi)
}

fn integer_labels(basis: &ReferenceBasis) -> Result<Vec<i64>> {
    basis
        .gap_labels()
        .iter()
        .map(|&m| if m.fract() == 0.0 { Ok(m as i64) } else { Err(MqcError::NonIntegerSpectrum { label: m }) })
        .collect()
}

fn check_sampling(labels: &[i64], samples: usize) -> Result<()> {
    let m_max = labels.iter().map(|m| m.abs()).max().unwrap_or(0);
    let needed = 2 * m_max as usize + 1;
    if samples < needed {
        return Err(MqcError::Aliasing { m_max, needed, samples });
    }
    Ok(())
}

/// Smallest alias-free phase count, 2·max|m| + 1.
pub fn minimal_phase_count(basis: &ReferenceBasis) -> Result<usize> {
    let labels = integer_labels(basis)?;
    Ok(2 * labels.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0) as usize + 1)
}

fn noisy(value: C64, scale: f64, shots: Shots, index: u64) -> Result<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(shots.seed);
    rng.set_stream(index);
    let mut channel = |x: f64| -> Result<f64> {
        let p = (0.5 * (1.0 + x / scale)).clamp(0.0, 1.0);
        let dist = Binomial::new(shots.count, p).map_err(|e| MqcError::InvalidParameter(e.to_string()))?;
        let k = dist.sample(&mut rng) as f64;
        Ok(scale * (2.0 * k / shots.count as f64 - 1.0))
    };
    let re = channel(value.re)?;
    let im = channel(value.im)?;
    Ok(C64::new(re, im))
}

pub fn fidelity_signal_in_basis(
    rho: &PureBiorthState,
    basis: &ReferenceBasis,
    samples: usize,
    shots: Option<Shots>,
) -> Result<ProtocolSignal> {
    let labels = integer_labels(basis)?;
    check_sampling(&labels, samples)?;
    if shots.is_some_and(|s| s.count == 0) {
        return Err(MqcError::InvalidParameter("shot count must be positive".into()));
    }
    let phases: Vec<f64> = (0..samples).map(|k| TAU * k as f64 / samples as f64).collect();
    let exact = phases
        .iter()
        .map(|&phi| rho.hs_overlap(&rotate_in_basis(rho, basis, phi)?))
        .collect::<Result<Vec<C64>>>()?;
    let values = match shots {
        None => exact,
        Some(s) => {
            // f(0) = Tr ρ†ρ bounds |f| and sets the scale of each binary channel.
            let scale = exact[0].re;
            exact
                .iter()
                .enumerate()
                .map(|(k, &v)| noisy(v, scale, s, k as u64))
                .collect::<Result<Vec<C64>>>()?
        }
    };
    Ok(ProtocolSignal { phases, values, shots, labels })
}

pub fn fidelity_signal(
    rho: &PureBiorthState,
    a: &ComplexSquareMatrix,
    samples: usize,
    shots: Option<Shots>,
) -> Result<ProtocolSignal> {
    fidelity_signal_in_basis(rho, &make_reference_basis(a)?, samples, shots)
}

/// I_m = (1/M) Σ_k f(φ_k) e^{imφ_k}
pub fn retrieve_mqi(signal: &ProtocolSignal) -> Result<RetrievedSpectrum> {
    let m = signal.values.len();
    if signal.phases.len() != m {
        return Err(MqcError::DimensionMismatch { expected: m, found: signal.phases.len() });
    }
    check_sampling(&signal.labels, m)?;
    let mut entries = Vec::with_capacity(signal.labels.len());
    let mut imag_residuals = Vec::with_capacity(signal.labels.len());
    for &label in &signal.labels {
        let acc: C64 = signal
            .values
            .iter()
            .enumerate()
            .map(|(k, f)| f * C64::from_polar(1.0, TAU * (label * k as i64 % m as i64) as f64 / m as f64))
            .sum::<C64>()
            / m as f64;
        entries.push((label as f64, acc.re));
        imag_residuals.push(acc.im.abs());
    }
    Ok(RetrievedSpectrum { spectrum: MQISpectrum::from_entries(entries), imag_residuals })
}

/// |(1/M) Σ_k |f_k|² − Σ_m I_m²|
pub fn parseval_residual(signal: &ProtocolSignal, spectrum: &MQISpectrum) -> f64 {
    let power = signal.values.iter().map(|f| f.norm_sqr()).sum::<f64>() / signal.values.len() as f64;
    let sum_sq: f64 = spectrum.entries.iter().map(|(_, i)| i * i).sum();
    (power - sum_sq).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{mqi, Normalization};
    use crate::experiments::{select_state, StateSelector};
    use crate::linalg::{eig_general, inner};
    use crate::models::{build_collective_sz, build_ising, build_spin_observable, build_two_level, IsingParams, TwoLevelParams};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus_x() -> PureBiorthState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![c(h, 0.0), c(h, 0.0)];
        PureBiorthState::new(v.clone(), v, Normalization::TraceOne, c(0.0, 0.0)).unwrap()
    }

    fn ising_ground(l: usize) -> PureBiorthState {
        let p = IsingParams { l, j: 1.0, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.1 };
        let es = eig_general(&build_ising(&p).unwrap()).unwrap();
        select_state(&es, StateSelector::GroundState, Normalization::TraceOne).unwrap()
    }

    #[test]
    fn zero_and_full_turn_rotations() {
        let sz = build_collective_sz(4).unwrap();
        let rho = ising_ground(4);
        let same = rotate(&rho, &sz, 0.0).unwrap();
        assert_eq!(same.right(), rho.right());
        let basis = make_reference_basis(&sz).unwrap();
        let turned = rotate(&rho, &sz, TAU).unwrap();
        let (a, b) = (mqi(&rho, &basis).unwrap(), mqi(&turned, &basis).unwrap());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn half_turn_about_z_maps_plus_x_to_minus_x() {
        let rot = rotate(&plus_x(), &build_spin_observable([0.0, 0.0, 1.0]).unwrap(), std::f64::consts::PI).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = [c(h, 0.0), c(-h, 0.0)];
        assert!((inner(&minus, rot.right()).norm() - 1.0).abs() < 1e-14);
        assert!((inner(&minus, rot.left()).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_rejects_non_hermitian_generator() {
        let a = ComplexSquareMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(rotate(&plus_x(), &a, 0.3), Err(MqcError::NotHermitian { .. })));
    }

    #[test]
    fn diagonal_state_has_constant_signal() {
        let v = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let rho = PureBiorthState::new(v.clone(), v, Normalization::TraceOne, c(0.0, 0.0)).unwrap();
        let sig = fidelity_signal(&rho, &build_spin_observable([0.0, 0.0, 1.0]).unwrap(), 3, None).unwrap();
        assert!(sig.values.iter().all(|f| (f - c(1.0, 0.0)).norm() < 1e-15));
        let rec = retrieve_mqi(&sig).unwrap();
        assert!((rec.spectrum.get(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rec.spectrum.get(1.0).unwrap().abs() <= 1e-14);
    }

    #[test]
    fn dimer_signal_is_fourier_series_of_intensities() {
        let p = TwoLevelParams::pt_dimer(1.0, 0.5, [0.0, 1.0, 0.0]).unwrap();
        let es = eig_general(&build_two_level(&p)).unwrap();
        let rho = select_state(&es, StateSelector::GroundState, Normalization::TraceOne).unwrap();
        let sy = build_spin_observable([0.0, 1.0, 0.0]).unwrap();
        let direct = mqi(&rho, &make_reference_basis(&sy).unwrap()).unwrap();
        let sig = fidelity_signal(&rho, &sy, 5, None).unwrap();
        for (phi, f) in sig.phases.iter().zip(&sig.values) {
            let want: C64 = direct.entries.iter().map(|&(m, i)| C64::from_polar(i, -m * phi)).sum();
            assert!((f - want).norm() < 1e-12);
        }
    }

    #[test]
    fn aliasing_is_refused() {
        let sz = build_collective_sz(3).unwrap();
        let rho = ising_ground(3);
        assert!(matches!(fidelity_signal(&rho, &sz, 6, None), Err(MqcError::Aliasing { m_max: 3, needed: 7, .. })));
        let mut sig = fidelity_signal(&rho, &sz, 7, None).unwrap();
        sig.values.pop();
        sig.phases.pop();
        assert!(matches!(retrieve_mqi(&sig), Err(MqcError::Aliasing { .. })));
    }

    #[test]
    fn noiseless_round_trip_and_parseval() {
        let rho = ising_ground(6);
        let sz = build_collective_sz(6).unwrap();
        let basis = make_reference_basis(&sz).unwrap();
        assert_eq!(minimal_phase_count(&basis).unwrap(), 13);
        let direct = mqi(&rho, &basis).unwrap();
        let sig = fidelity_signal_in_basis(&rho, &basis, 13, None).unwrap();
        assert!((sig.values[0].re - direct.total()).abs() < 1e-12);
        assert!(sig.values.iter().all(|f| f.im.abs() < 1e-12));
        let rec = retrieve_mqi(&sig).unwrap();
        for (a, b) in rec.spectrum.entries.iter().zip(&direct.entries) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() <= 1e-10);
        }
        assert!(rec.max_imag_residual() <= 1e-10);
        assert!(parseval_residual(&sig, &direct) <= 1e-10);
    }

    #[test]
    fn shot_noise_is_small_and_seeded() {
        let p = TwoLevelParams::pt_dimer(1.0, 0.5, [0.0, 1.0, 0.0]).unwrap();
        let es = eig_general(&build_two_level(&p)).unwrap();
        let rho = select_state(&es, StateSelector::GroundState, Normalization::TraceOne).unwrap();
        let sy = build_spin_observable([0.0, 1.0, 0.0]).unwrap();
        let direct = mqi(&rho, &make_reference_basis(&sy).unwrap()).unwrap();
        let shots = Some(Shots { count: 1_000_000, seed: 5 });
        let a = fidelity_signal(&rho, &sy, 9, shots).unwrap();
        let b = fidelity_signal(&rho, &sy, 9, shots).unwrap();
        assert_eq!(a, b);
        let rec = retrieve_mqi(&a).unwrap();
        for (x, y) in rec.spectrum.entries.iter().zip(&direct.entries) {
            assert!((x.1 - y.1).abs() <= 5e-3, "m={}: {} vs {}", x.0, x.1, y.1);
        }
    }
}
