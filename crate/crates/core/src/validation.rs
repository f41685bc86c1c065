//! Invariant and oracle suites behind `mqc validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::coherence::{decompose, make_reference_basis, matrix_in_basis, mqi, Normalization, PureBiorthState, ReferenceBasis};
use crate::error::Result;
use crate::experiments::{select_state, StateSelector};
use crate::linalg::{commutator_norm, eig_general, ComplexSquareMatrix, C64};
use crate::models::{
    build_collective_sz, build_hatano_nelson, build_ising, build_spin_observable, build_two_level, hermitian_split,
    HNParams, IsingParams, TwoLevelParams,
};
use crate::oracles::{
    hn_obc_validity, hn_pbc_delta_identity, hn_pbc_validity, two_level_mqi_closed_form, ValidityReport,
};
use crate::protocol::rotate_in_basis;

/// Seed of the random two-level draws.
pub const VALIDATION_SEED: u64 = 20_240_601;
/// Number of random two-level draws compared with the closed form.
pub const TWO_LEVEL_DRAWS: usize = 50;
// Draws closer than this to an exceptional point are redrawn.
const MIN_DENOM: f64 = 0.1;

fn random_unit(rng: &mut ChaCha20Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 {
            return v.map(|x| x / n);
        }
    }
}

/// Random two-level parameter sets away from exceptional points.
pub fn random_two_level_draws(seed: u64, count: usize) -> Vec<TwoLevelParams> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let g = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = random_unit(&mut rng);
        let p = TwoLevelParams::new(u, g, n).expect("unit axis");
        if two_level_mqi_closed_form(&p).is_ok_and(|cf| cf.denom >= MIN_DENOM) {
            out.push(p);
        }
    }
    out
}

/// Selected state of `h` and its intensities relative to `basis`.
fn ground(h: &ComplexSquareMatrix) -> Result<PureBiorthState> {
    select_state(&eig_general(h)?, StateSelector::GroundState, Normalization::TraceOne)
}

/// Numeric ground-state pipeline against the closed-form intensities.
pub fn two_level_equivalence(seed: u64, count: usize) -> Result<ValidityReport> {
    let mut worst_f: f64 = 0.0;
    let mut worst_i: f64 = 0.0;
    for p in random_two_level_draws(seed, count) {
        let cf = two_level_mqi_closed_form(&p)?;
        let rho = ground(&build_two_level(&p))?;
        let s = mqi(&rho, &make_reference_basis(&build_spin_observable(p.n_hat)?)?)?;
        worst_f = worst_f.max((s.second_moment - cf.f).abs());
        for (m, i) in cf.spectrum().entries {
            worst_i = worst_i.max((s.get(m).unwrap_or(0.0) - i).abs());
        }
    }
    let mut r = ValidityReport::default();
    r.push(format!("two-level closed form vs pipeline, {count} draws: F"), worst_f, 1e-9, true);
    r.push(format!("two-level closed form vs pipeline, {count} draws: I_m"), worst_i, 1e-9, true);
    Ok(r)
}

/// States and references used by the structural invariants.
fn invariant_cases() -> Result<Vec<(String, PureBiorthState, ReferenceBasis)>> {
    let mut cases = Vec::new();
    for (k, p) in random_two_level_draws(VALIDATION_SEED ^ 1, 3).into_iter().enumerate() {
        let basis = make_reference_basis(&build_spin_observable(p.n_hat)?)?;
        cases.push((format!("two-level draw {k}"), ground(&build_two_level(&p))?, basis));
    }
    let ising = IsingParams { l: 5, j: 1.0, j2: 0.2, gamma: 1.0, h_y: 0.15, h_z: 0.1 };
    cases.push(("Ising L=5".into(), ground(&build_ising(&ising)?)?, make_reference_basis(&build_collective_sz(5)?)?));
    let h = build_hatano_nelson(&HNParams::open(6, 1.0, 2.0))?;
    let (_, h2) = hermitian_split(&h);
    cases.push(("open chain N=6".into(), ground(&h)?, make_reference_basis(&h2)?));
    Ok(cases)
}

fn max_mode_diff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.1 - y.1).abs()).fold(0.0, f64::max)
}

pub fn structural_invariants() -> Result<ValidityReport> {
    let mut r = ValidityReport::default();
    for (name, rho, basis) in invariant_cases()? {
        let blocks = decompose(&rho, &basis)?;
        let full = matrix_in_basis(&rho, &basis)?;
        r.push(format!("{name}: block completeness"), blocks.reassemble().max_abs_diff(&full), 0.0, true);

        let s = mqi(&rho, &basis)?;
        let min_i = s.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        r.push(format!("{name}: nonnegative intensities"), (-min_i).max(0.0), 0.0, true);

        let purity = rho.purity();
        r.push(format!("{name}: sum rule"), (s.total() - purity).abs() / purity, 1e-10, true);

        let mut worst_rot: f64 = 0.0;
        for phi in [0.3, 1.7, 4.1] {
            let rotated = mqi(&rotate_in_basis(&rho, &basis, phi)?, &basis)?;
            worst_rot = worst_rot.max(max_mode_diff(&rotated.entries, &s.entries));
        }
        r.push(format!("{name}: rotation covariance"), worst_rot, 1e-12, true);

        let gr = C64::from_polar(1.0, 0.7);
        let gl = C64::from_polar(1.0, -2.1);
        let gauged = PureBiorthState::new(
            rho.right().iter().map(|z| z * gr).collect(),
            rho.left().iter().map(|z| z * gl).collect(),
            Normalization::TraceOne,
            rho.energy(),
        )?;
        let g = mqi(&gauged, &basis)?;
        r.push(format!("{name}: phase-gauge invariance"), max_mode_diff(&g.entries, &s.entries), 1e-12, true);
    }

    let ising = IsingParams { l: 6, j: 1.0, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.2 };
    let s = mqi(&ground(&build_ising(&ising)?)?, &make_reference_basis(&build_collective_sz(6)?)?)?;
    r.push("Ising L=6, h_y=0: I_m = I_-m", s.asymmetry(), 1e-12, true);
    Ok(r)
}

pub fn hatano_nelson_identities() -> Result<ValidityReport> {
    let mut r = ValidityReport::default();
    for (n, j_l) in [(6, 0.25), (6, 4.0), (5, 4.0), (6, 1.0)] {
        r.extend(hn_obc_validity(n, j_l, 1.0)?);
    }
    r.extend(hn_obc_validity(8, 1.0, 2.0)?);
    r.extend(hn_pbc_validity(8, 2.0, 1.0)?);
    for n in [8, 9] {
        let d = hn_pbc_delta_identity(n, 1.0, 2.0)?;
        let worst = d.branches.iter().map(|b| b.worst_off_delta).fold(0.0, f64::max);
        let delta = d.branches.iter().map(|b| (b.delta_entry.norm() - 1.0).abs()).fold(0.0, f64::max);
        let f = d.branches.iter().map(|b| b.second_moment).fold(d.selected_second_moment, f64::max);
        r.push(format!("ring N={n}: off-delta density-matrix entries"), worst, d.tolerance, true);
        r.push(format!("ring N={n}: delta entry modulus"), delta, d.tolerance, true);
        r.push(format!("ring N={n}: F(rho, H2)"), f, d.tolerance, true);
    }
    // Equal bulk hoppings: the dashed line δ_L/J_L = δ_R/J_R keeps H Hermitian.
    for delta in [0.3, 0.6, 1.4] {
        let p = HNParams { delta_l: delta, delta_r: delta, ..HNParams::open(8, 1.0, 1.0) };
        let (h1, h2) = hermitian_split(&build_hatano_nelson(&p)?);
        r.push(format!("dashed line J_L=J_R=1, delta={delta}: [H1, H2]"), commutator_norm(&h1, &h2)?, 1e-12, true);
    }
    for sign in [1.0, -1.0] {
        let p = HNParams { delta_l: sign, delta_r: 2.0 * sign, ..HNParams::open(8, 1.0, 2.0) };
        let (h1, h2) = hermitian_split(&build_hatano_nelson(&p)?);
        r.push(format!("ring J_L=1 J_R=2, delta={sign}*J: [H1, H2]"), commutator_norm(&h1, &h2)?, 1e-12, true);
    }
    Ok(r)
}

/// Every suite; the report passes only if every applicable line does.
pub fn run_all() -> Result<ValidityReport> {
    let mut r = two_level_equivalence(VALIDATION_SEED, TWO_LEVEL_DRAWS)?;
    r.extend(structural_invariants()?);
    r.extend(hatano_nelson_identities()?);
    Ok(r)
}
