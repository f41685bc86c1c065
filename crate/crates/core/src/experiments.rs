//! Parameter sweeps, disorder ensembles and critical-point extraction.
//!
//! Every grid point and realization is a pure function of its inputs and is
//! evaluated on the current rayon pool; results are collected in index order,
//! so the worker count never changes the output.

use rayon::prelude::*;

use crate::coherence::{make_reference_basis, mqi, Normalization, PureBiorthState, ReferenceBasis};
use crate::error::{MqcError, Result};
use crate::linalg::{eig_general, ComplexSquareMatrix, EigenSystem, C64};
use crate::models::{
    build_collective_spin, build_hatano_nelson, build_ising, build_spin_observable, build_two_level,
    hermitian_split, HNParams, IsingParams, Onsite, TwoLevelParams,
};

/// |Im E| above this marks the broken (complex ground energy) phase.
pub const IMAG_ONSET_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StateSelector {
    /// Lowest Re E; ties within the pairing tolerance prefer Im E ≥ 0.
    #[default]
    GroundState,
    /// Index ⌊N/2⌋ of the (Re, Im)-sorted spectrum.
    MidSpectrum,
}

pub fn select_index(es: &EigenSystem, selector: StateSelector) -> usize {
    let n = es.dim();
    match selector {
        StateSelector::MidSpectrum => n / 2,
        StateSelector::GroundState => {
            let tol = es.pairing_tol;
            let min_re = es.eigenvalues.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
            let ties: Vec<usize> = (0..n).filter(|&k| es.eigenvalues[k].re <= min_re + tol).collect();
            ties.iter().copied().find(|&k| es.eigenvalues[k].im >= -tol).unwrap_or(ties[0])
        }
    }
}

pub fn select_state(es: &EigenSystem, selector: StateSelector, normalization: Normalization) -> Result<PureBiorthState> {
    let k = select_index(es, selector);
    PureBiorthState::from_eigensystem(es, k, normalization)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepModel {
    TwoLevel(TwoLevelParams),
    Ising(IsingParams),
    HnFree(HNParams),
    HnDisordered(HNParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    /// Γ in u·σ + iΓσz, i.e. γ_z = −Γ.
    TwoLevelGain,
    /// u_x
    TwoLevelCoupling,
    IsingHz,
    IsingHy,
    IsingJ,
    IsingJ2,
    IsingGamma,
    /// J_L/J_R with J_R held fixed.
    HnHoppingRatio,
    /// δ_L/J_L
    HnDeltaLRatio,
    /// δ_R/J_R
    HnDeltaRRatio,
    /// Disorder strength W.
    HnDisorder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    Sx,
    Sy,
    Sz,
    /// Anti-Hermitian part of H, (H − H†)/(2i).
    H2,
    /// Spin along an arbitrary unit axis.
    Axis([f64; 3]),
}

impl Reference {
    fn axis(&self) -> Option<[f64; 3]> {
        match self {
            Reference::Sx => Some([1.0, 0.0, 0.0]),
            Reference::Sy => Some([0.0, 1.0, 0.0]),
            Reference::Sz => Some([0.0, 0.0, 1.0]),
            Reference::Axis(a) => Some(*a),
            Reference::H2 => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub model: SweepModel,
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub reference: Reference,
    pub selector: StateSelector,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointStatus {
    Ok,
    /// Selected eigenpair is defective or self-orthogonal.
    ExceptionalPoint,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub second_moment: Option<f64>,
    /// (m, I_m) for integer-spaced (spin) references.
    pub intensities: Option<Vec<(f64, f64)>>,
    pub energy: Option<C64>,
    pub status: PointStatus,
}

impl SweepRow {
    pub fn ep_flag(&self) -> bool {
        self.status == PointStatus::ExceptionalPoint
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(MqcError::InvalidParameter("grid needs at least two points".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MqcError::InvalidParameter("grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

fn with_value(model: &SweepModel, parameter: SweepParameter, v: f64) -> Result<SweepModel> {
    use SweepParameter as P;
    let mismatch = || MqcError::InvalidParameter(format!("parameter {parameter:?} does not apply to this model"));
    Ok(match (model.clone(), parameter) {
        (SweepModel::TwoLevel(mut p), P::TwoLevelGain) => {
            p.gamma[2] = -v;
            SweepModel::TwoLevel(p)
        }
        (SweepModel::TwoLevel(mut p), P::TwoLevelCoupling) => {
            p.u[0] = v;
            SweepModel::TwoLevel(p)
        }
        (SweepModel::Ising(mut p), ip) => {
            match ip {
                P::IsingHz => p.h_z = v,
                P::IsingHy => p.h_y = v,
                P::IsingJ => p.j = v,
                P::IsingJ2 => p.j2 = v,
                P::IsingGamma => p.gamma = v,
                _ => return Err(mismatch()),
            }
            SweepModel::Ising(p)
        }
        (SweepModel::HnFree(p), hp) => SweepModel::HnFree(with_hn_value(p, hp, v).ok_or_else(mismatch)?),
        (SweepModel::HnDisordered(p), hp) => SweepModel::HnDisordered(with_hn_value(p, hp, v).ok_or_else(mismatch)?),
        _ => return Err(mismatch()),
    })
}

fn with_hn_value(mut p: HNParams, parameter: SweepParameter, v: f64) -> Option<HNParams> {
    match parameter {
        SweepParameter::HnHoppingRatio => {
            // Boundary hoppings keep their ratio to the bulk hoppings.
            let dl = if p.j_l != 0.0 { p.delta_l / p.j_l } else { 0.0 };
            p.j_l = v * p.j_r;
            p.delta_l = dl * p.j_l;
        }
        SweepParameter::HnDeltaLRatio => p.delta_l = v * p.j_l,
        SweepParameter::HnDeltaRRatio => p.delta_r = v * p.j_r,
        SweepParameter::HnDisorder => match &mut p.onsite {
            Onsite::Random { w, .. } => *w = v,
            _ => return None,
        },
        _ => return None,
    }
    Some(p)
}

fn hamiltonian(model: &SweepModel) -> Result<ComplexSquareMatrix> {
    match model {
        SweepModel::TwoLevel(p) => Ok(build_two_level(p)),
        SweepModel::Ising(p) => build_ising(p),
        SweepModel::HnFree(p) | SweepModel::HnDisordered(p) => build_hatano_nelson(p),
    }
}

/// Reference basis that does not depend on the swept parameter, if any.
fn fixed_basis(model: &SweepModel, reference: Reference) -> Result<Option<ReferenceBasis>> {
    let Some(axis) = reference.axis() else { return Ok(None) };
    let a = match model {
        SweepModel::TwoLevel(_) => build_spin_observable(axis)?,
        SweepModel::Ising(p) => build_collective_spin(p.l, axis)?,
        SweepModel::HnFree(_) | SweepModel::HnDisordered(_) => {
            return Err(MqcError::InvalidParameter("Hatano-Nelson sweeps use the H2 reference".into()))
        }
    };
    Ok(Some(make_reference_basis(&a)?))
}

/// Evaluates one prepared Hamiltonian into a row.
pub fn evaluate_point(
    value: f64,
    h: &ComplexSquareMatrix,
    basis: Option<&ReferenceBasis>,
    selector: StateSelector,
    normalization: Normalization,
) -> SweepRow {
    let failed = |e: MqcError, energy| SweepRow {
        value,
        second_moment: None,
        intensities: None,
        energy,
        status: if e.is_exceptional() { PointStatus::ExceptionalPoint } else { PointStatus::Failed(e.to_string()) },
    };
    let es = match eig_general(h) {
        Ok(es) => es,
        Err(e) => return failed(e, None),
    };
    let k = select_index(&es, selector);
    let energy = Some(es.eigenvalues[k]);
    let rho = match PureBiorthState::from_eigensystem(&es, k, normalization) {
        Ok(r) => r,
        Err(e) => return failed(e, energy),
    };
    let owned;
    let basis = match basis {
        Some(b) => b,
        None => {
            let (_, h2) = hermitian_split(h);
            match make_reference_basis(&h2) {
                Ok(b) => {
                    owned = b;
                    &owned
                }
                Err(e) => return failed(e, energy),
            }
        }
    };
    match mqi(&rho, basis) {
        Ok(s) => SweepRow {
            value,
            second_moment: Some(s.second_moment),
            intensities: basis.is_integer_spaced().then_some(s.entries),
            energy,
            status: PointStatus::Ok,
        },
        Err(e) => failed(e, energy),
    }
}

/// One row per grid point; per-point failures are recorded in the row.
pub fn sweep_1d(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    check_grid(&spec.grid)?;
    // Surface parameter/model mismatches before any work.
    let first = with_value(&spec.model, spec.parameter, spec.grid[0])?;
    // None means the H2 basis, rebuilt at every point.
    let basis = fixed_basis(&first, spec.reference)?;
    Ok(spec
        .grid
        .par_iter()
        .map(|&v| {
            let model = match with_value(&spec.model, spec.parameter, v) {
                Ok(m) => m,
                Err(e) => return failed_row(v, e),
            };
            match hamiltonian(&model) {
                Ok(h) => evaluate_point(v, &h, basis.as_ref(), spec.selector, spec.normalization),
                Err(e) => failed_row(v, e),
            }
        })
        .collect())
}

fn failed_row(value: f64, e: MqcError) -> SweepRow {
    SweepRow { value, second_moment: None, intensities: None, energy: None, status: PointStatus::Failed(e.to_string()) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram {
    /// δ_L/J_L values (rows).
    pub grid_l: Vec<f64>,
    /// δ_R/J_R values (columns).
    pub grid_r: Vec<f64>,
    pub cells: Vec<Vec<SweepRow>>,
}

/// F(ρ, H₂) of the clean ring ground state over generalized boundary hoppings.
pub fn phase_diagram_2d(
    n: usize,
    j_l: f64,
    j_r: f64,
    grid_l: &[f64],
    grid_r: &[f64],
    normalization: Normalization,
) -> Result<PhaseDiagram> {
    if !(j_l > 0.0 && j_r > 0.0) {
        return Err(MqcError::InvalidParameter("hoppings must be positive".into()));
    }
    if grid_l.is_empty() || grid_r.is_empty() {
        return Err(MqcError::InvalidParameter("phase-diagram grids must be nonempty".into()));
    }
    HNParams::open(n, j_l, j_r).validate()?;
    let cols = grid_r.len();
    let flat: Vec<SweepRow> = (0..grid_l.len() * cols)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (grid_l[idx / cols], grid_r[idx % cols]);
            let p = HNParams { delta_l: a * j_l, delta_r: b * j_r, ..HNParams::open(n, j_l, j_r) };
            match build_hatano_nelson(&p) {
                Ok(h) => evaluate_point(b, &h, None, StateSelector::GroundState, normalization),
                Err(e) => failed_row(b, e),
            }
        })
        .collect();
    let cells = flat.chunks(cols).map(<[SweepRow]>::to_vec).collect();
    Ok(PhaseDiagram { grid_l: grid_l.to_vec(), grid_r: grid_r.to_vec(), cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub j_l: f64,
    pub j_r: f64,
    pub w_grid: Vec<f64>,
    pub realizations: u64,
    pub master_seed: u64,
    pub selector: StateSelector,
    pub normalization: Normalization,
}

impl EnsembleSpec {
    /// Ring with δ_L = J_L, δ_R = J_R and mid-spectrum states.
    pub fn ring(n: usize, j_l: f64, j_r: f64, w_grid: Vec<f64>, realizations: u64, master_seed: u64) -> Self {
        Self {
            n,
            j_l,
            j_r,
            w_grid,
            realizations,
            master_seed,
            selector: StateSelector::MidSpectrum,
            normalization: Normalization::TraceOne,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub w: f64,
    pub mean: f64,
    /// Sample standard deviation (R − 1 denominator; 0 for a single realization).
    pub std: f64,
    /// Realizations that entered the statistics.
    pub realizations: u64,
    /// Defective or failed realizations left out.
    pub excluded: u64,
    pub master_seed: u64,
}

fn stats(w: f64, values: &[f64], excluded: u64, master_seed: u64) -> Result<EnsembleStats> {
    if values.is_empty() {
        return Err(MqcError::EnsembleFailed { strength: w, count: excluded as usize });
    }
    let r = values.len();
    let (mean, std) = if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        (values[0], 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / r as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (mean, if r > 1 { (ss / (r - 1) as f64).sqrt() } else { 0.0 })
    };
    Ok(EnsembleStats { w, mean, std, realizations: r as u64, excluded, master_seed })
}

/// Disorder-averaged F(ρ, H₂) for each W. Realization `k` at every W uses the
/// disorder stream keyed by (master_seed, k).
pub fn disorder_ensemble(spec: &EnsembleSpec) -> Result<Vec<Result<EnsembleStats>>> {
    if spec.realizations == 0 {
        return Err(MqcError::InvalidParameter("need at least one realization".into()));
    }
    if spec.w_grid.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(MqcError::InvalidParameter("disorder strengths must be finite and >= 0".into()));
    }
    HNParams::ring(spec.n, spec.j_l, spec.j_r).validate()?;
    let r = spec.realizations as usize;
    let values: Vec<Option<f64>> = (0..spec.w_grid.len() * r)
        .into_par_iter()
        .map(|idx| {
            let w = spec.w_grid[idx / r];
            let onsite = Onsite::Random { w, seed: spec.master_seed, realization: (idx % r) as u64 };
            let p = HNParams { onsite, ..HNParams::ring(spec.n, spec.j_l, spec.j_r) };
            let h = build_hatano_nelson(&p).ok()?;
            let row = evaluate_point(w, &h, None, spec.selector, spec.normalization);
            row.second_moment
        })
        .collect();
    Ok(spec
        .w_grid
        .iter()
        .zip(values.chunks(r))
        .map(|(&w, chunk)| {
            let ok: Vec<f64> = chunk.iter().flatten().copied().collect();
            stats(w, &ok, (chunk.len() - ok.len()) as u64, spec.master_seed)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementMethod {
    /// Vertex of the parabola through the grid maximum and its neighbours.
    Parabolic,
    /// Divergent point reported at the flagged grid cell.
    ExceptionalPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPointResult {
    pub value: f64,
    /// Largest sampled F (infinite at an exceptional point).
    pub peak: f64,
    pub method: RefinementMethod,
    /// Local grid spacing around the peak.
    pub resolution: f64,
}

fn parabola_vertex((x0, f0): (f64, f64), (x1, f1): (f64, f64), (x2, f2): (f64, f64)) -> f64 {
    let num = (x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0);
    let den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
    if den == 0.0 || !den.is_finite() {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}

pub fn extract_critical_point(rows: &[SweepRow]) -> Result<CriticalPointResult> {
    if rows.len() < 3 {
        return Err(MqcError::InvalidParameter("critical-point extraction needs at least 3 rows".into()));
    }
    let spacing = |i: usize| {
        let lo = rows[i.saturating_sub(1)].value;
        let hi = rows[(i + 1).min(rows.len() - 1)].value;
        (hi - lo) / ((i + 1).min(rows.len() - 1) - i.saturating_sub(1)) as f64
    };
    if let Some(i) = rows.iter().position(SweepRow::ep_flag) {
        return Ok(CriticalPointResult {
            value: rows[i].value,
            peak: f64::INFINITY,
            method: RefinementMethod::ExceptionalPoint,
            resolution: spacing(i),
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.second_moment.map(|f| (r.value, f))).collect();
    if pts.len() < 3 {
        return Err(MqcError::NoPeak);
    }
    let mut best = 0;
    for (k, p) in pts.iter().enumerate() {
        if p.1 > pts[best].1 {
            best = k;
        }
    }
    if best == 0 || best == pts.len() - 1 {
        return Err(MqcError::NoPeak);
    }
    let value = parabola_vertex(pts[best - 1], pts[best], pts[best + 1]);
    Ok(CriticalPointResult {
        value,
        peak: pts[best].1,
        method: RefinementMethod::Parabolic,
        resolution: (pts[best + 1].0 - pts[best - 1].0) / 2.0,
    })
}

/// First swept value whose selected energy has |Im E| > `tol`.
pub fn yang_lee_onset(rows: &[SweepRow], tol: f64) -> Option<f64> {
    rows.iter().find(|r| r.energy.is_some_and(|e| e.im.abs() > tol)).map(|r| r.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub l: usize,
    pub inverse_l: f64,
    pub critical: Result<CriticalPointResult>,
}

/// h_z sweep of the S_z second moment and its peak for each chain length.
pub fn finite_size_scan(ls: &[usize], base: IsingParams, hz_grid: &[f64], normalization: Normalization) -> Result<Vec<ScalingRow>> {
    check_grid(hz_grid)?;
    let mut out = Vec::with_capacity(ls.len());
    for &l in ls {
        let params = IsingParams { l, ..base };
        params.validate()?;
        let spec = SweepSpec {
            model: SweepModel::Ising(params),
            parameter: SweepParameter::IsingHz,
            grid: hz_grid.to_vec(),
            reference: Reference::Sz,
            selector: StateSelector::GroundState,
            normalization,
        };
        let rows = sweep_1d(&spec)?;
        out.push(ScalingRow { l, inverse_l: 1.0 / l as f64, critical: extract_critical_point(&rows) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer_spec(grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            model: SweepModel::TwoLevel(TwoLevelParams::pt_dimer(1.0, 0.0, [0.0, 1.0, 0.0]).unwrap()),
            parameter: SweepParameter::TwoLevelGain,
            grid,
            reference: Reference::Sy,
            selector: StateSelector::GroundState,
            normalization: Normalization::TraceOne,
        }
    }

    fn synthetic(values: &[f64], f: impl Fn(f64) -> f64) -> Vec<SweepRow> {
        values
            .iter()
            .map(|&x| SweepRow { value: x, second_moment: Some(f(x)), intensities: None, energy: None, status: PointStatus::Ok })
            .collect()
    }

    #[test]
    fn dimer_sweep_matches_formula_and_flags_ep() {
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1).collect();
        let rows = sweep_1d(&dimer_spec(grid)).unwrap();
        for row in &rows {
            let g: f64 = row.value;
            if (g - 1.0).abs() < 1e-12 {
                assert!(row.ep_flag(), "expected EP at {g}");
                assert!(row.second_moment.is_none());
                continue;
            }
            let want = ((1.0 + g * g) / (2.0 * (1.0 - g * g).abs())).sqrt();
            let f = row.second_moment.unwrap();
            assert!((f - want).abs() <= 1e-9 * want, "Γ={g}: {f} vs {want}");
        }
        let cp = extract_critical_point(&rows).unwrap();
        assert_eq!(cp.method, RefinementMethod::ExceptionalPoint);
        assert!((cp.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(sweep_1d(&dimer_spec(vec![0.5])).is_err());
        assert!(sweep_1d(&dimer_spec(vec![0.5, 0.4])).is_err());
        let mut spec = dimer_spec(vec![0.1, 0.2]);
        spec.parameter = SweepParameter::IsingHz;
        assert!(sweep_1d(&spec).is_err());
    }

    #[test]
    fn ground_state_prefers_positive_imaginary_branch() {
        let p = IsingParams { l: 5, j: 0.4, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.4 };
        let es = eig_general(&build_ising(&p).unwrap()).unwrap();
        let k = select_index(&es, StateSelector::GroundState);
        assert!(es.eigenvalues[k].im.abs() > 1e-6, "expected broken phase at h_z = 0.4");
        assert!(es.eigenvalues[k].im > 0.0);
    }

    #[test]
    fn mid_spectrum_index() {
        let h = ComplexSquareMatrix::from_diagonal(&[C64::new(3.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]).unwrap();
        let es = eig_general(&h).unwrap();
        assert_eq!(select_index(&es, StateSelector::MidSpectrum), 1);
        assert_eq!(es.eigenvalues[1].re, 2.0);
    }

    #[test]
    fn ising_sweep_symmetric_and_single_peaked() {
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.02).collect();
        let spec = SweepSpec {
            model: SweepModel::Ising(IsingParams { l: 7, j: 0.4, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.0 }),
            parameter: SweepParameter::IsingHz,
            grid,
            reference: Reference::Sz,
            selector: StateSelector::GroundState,
            normalization: Normalization::TraceOne,
        };
        let rows = sweep_1d(&spec).unwrap();
        for row in &rows {
            let s = crate::coherence::MQISpectrum::from_entries(row.intensities.clone().unwrap());
            assert!(s.asymmetry() <= 1e-12);
            assert_eq!(s.entries.len(), 15);
        }
        let cp = extract_critical_point(&rows).unwrap();
        assert!(cp.value > 0.0 && cp.value < 0.6);
        let onset = yang_lee_onset(&rows, IMAG_ONSET_TOL).unwrap();
        assert!((onset - cp.value).abs() <= 0.02 + 1e-12, "peak {} onset {onset}", cp.value);
    }

    #[test]
    fn hn_open_chain_vanishes_at_symmetric_hopping() {
        let spec = SweepSpec {
            model: SweepModel::HnFree(HNParams::open(10, 1.0, 1.0)),
            parameter: SweepParameter::HnHoppingRatio,
            grid: vec![0.5, 1.0, 2.0],
            reference: Reference::H2,
            selector: StateSelector::GroundState,
            normalization: Normalization::TraceOne,
        };
        let rows = sweep_1d(&spec).unwrap();
        assert!(rows[1].second_moment.unwrap() <= 1e-10);
        assert!(rows[0].second_moment.unwrap() > 1e-3);
        assert!(rows[2].second_moment.unwrap() > 1e-3);
        assert!(rows.iter().all(|r| r.intensities.is_none() || r.value == 1.0));
    }

    #[test]
    fn phase_diagram_dashed_line_and_golden_cell() {
        let pd = phase_diagram_2d(100, 1.0, 1.0, &[0.2, 0.6, 1.0], &[0.6, 1.0, 1.5], Normalization::TraceOne).unwrap();
        assert!(pd.cells[1][0].second_moment.unwrap() <= 1e-9);
        assert!(pd.cells[2][1].second_moment.unwrap() <= 1e-10);
        // Independent dense-solver reference value.
        let golden = 0.01518560226790222;
        let f = pd.cells[0][2].second_moment.unwrap();
        assert!((f - golden).abs() <= 1e-8 * golden, "{f}");
    }

    #[test]
    fn unequal_hoppings_cohere_off_the_ring_point() {
        // With J_L != J_R only δ = ±J keeps H normal; δ = J/2 does not.
        let pd = phase_diagram_2d(12, 1.0, 2.0, &[0.5, 1.0], &[0.5, 1.0], Normalization::TraceOne).unwrap();
        assert!(pd.cells[1][1].second_moment.unwrap() <= 1e-10);
        assert!(pd.cells[0][0].second_moment.unwrap() > 0.1);
    }

    #[test]
    fn ensemble_is_deterministic_and_clean_limit_vanishes() {
        let spec = EnsembleSpec::ring(20, 1.0, 2.0, vec![0.0, 3.0], 6, 1234);
        let a = disorder_ensemble(&spec).unwrap();
        let b = disorder_ensemble(&spec).unwrap();
        assert_eq!(a, b);
        let clean = a[0].as_ref().unwrap();
        assert_eq!(clean.std, 0.0);
        assert!(clean.mean <= 1e-10);
        let dirty = a[1].as_ref().unwrap();
        assert_eq!(dirty.realizations + dirty.excluded, 6);
        assert!(dirty.mean > 0.0);
    }

    #[test]
    fn ensemble_is_independent_of_worker_count() {
        let spec = EnsembleSpec::ring(16, 1.0, 2.0, vec![2.0, 5.0], 5, 7);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| disorder_ensemble(&spec).unwrap());
        let b = three.install(|| disorder_ensemble(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_gaussian_peak() {
        let x: Vec<f64> = (0..=60).map(|k| k as f64 * 0.01).collect();
        let rows = synthetic(&x, |x| (-(x - 0.3f64).powi(2) / 0.001).exp());
        let cp = extract_critical_point(&rows).unwrap();
        assert!((cp.value - 0.3).abs() <= 1e-3);
        assert_eq!(cp.method, RefinementMethod::Parabolic);

        let off: Vec<f64> = (0..=60).map(|k| k as f64 * 0.01 + 0.004).collect();
        let cp = extract_critical_point(&synthetic(&off, |x| (-(x - 0.3f64).powi(2) / 0.001).exp())).unwrap();
        assert!((cp.value - 0.3).abs() <= 1e-3, "{}", cp.value);
    }

    #[test]
    fn monotone_signal_has_no_peak() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_eq!(extract_critical_point(&synthetic(&x, |x| x)), Err(MqcError::NoPeak));
        assert!(extract_critical_point(&synthetic(&x[..2], |x| x)).is_err());
    }

    #[test]
    fn single_length_scan() {
        let base = IsingParams { l: 5, j: 0.4, j2: 0.0, gamma: 1.0, h_y: 0.0, h_z: 0.0 };
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.02).collect();
        let table = finite_size_scan(&[5], base, &grid, Normalization::TraceOne).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].inverse_l, 0.2);
        assert!(table[0].critical.is_ok());
    }
}
