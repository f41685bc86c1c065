//! Subcommand plans. Planning validates the resolved config and fails with a
//! config error; the returned job does the numerics.

use anyhow::{bail, Context, Result};
use mqc_core::coherence::{make_reference_basis, mqi, Normalization};
use mqc_core::experiments::{
    disorder_ensemble, extract_critical_point, phase_diagram_2d, select_state, sweep_1d, yang_lee_onset,
    CriticalPointResult, EnsembleSpec, PointStatus, RefinementMethod, Reference, StateSelector, SweepModel,
    SweepParameter, SweepRow, SweepSpec, IMAG_ONSET_TOL,
};
use mqc_core::linalg::{eig_general, ComplexSquareMatrix};
use mqc_core::models::{
    build_collective_spin, build_ising, build_spin_observable, build_two_level, HNParams, IsingParams, TwoLevelParams,
};
use mqc_core::protocol::{fidelity_signal, minimal_phase_count, parseval_residual, retrieve_mqi, Shots};
use mqc_core::validation::run_all;
use serde_json::{json, Value};

use crate::args::*;
use crate::grid::{parse_grid, parse_sizes};
use crate::output::{flag, num, opt, Artifact, PointSummary, Table};

pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub points: PointSummary,
    pub summary: Value,
    /// 0, 3 (numerical failure) or 4 (validation failure).
    pub code: i32,
    pub message: Option<String>,
}

impl Output {
    fn new(artifacts: Vec<Artifact>, points: PointSummary, summary: Value) -> Self {
        let (code, message) = if points.failed > 0 {
            (3, Some(format!("{} of {} points failed", points.failed, points.total)))
        } else {
            (0, None)
        };
        Output { artifacts, points, summary, code, message }
    }
}

pub type Job = Box<dyn FnOnce() -> Result<Output> + Send>;

pub struct Plan {
    pub job: Job,
    /// Seeds that enter the run, for the manifest.
    pub seeds: Value,
}

fn required<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().with_context(|| format!("missing required setting `{key}`"))
}

fn sweep_grid(spec: &str, key: &str) -> Result<Vec<f64>> {
    let g = parse_grid(spec).with_context(|| format!("bad `{key}`"))?;
    if g.len() < 2 {
        bail!("`{key}` needs at least two points");
    }
    Ok(g)
}

fn normalization(n: Option<Norm>) -> Normalization {
    match n.unwrap_or(Norm::TraceOne) {
        Norm::TraceOne => Normalization::TraceOne,
        Norm::UnitVectors => Normalization::UnitVectors,
    }
}

fn axis(r: SpinRef) -> ([f64; 3], Reference) {
    match r {
        SpinRef::Sx => ([1.0, 0.0, 0.0], Reference::Sx),
        SpinRef::Sy => ([0.0, 1.0, 0.0], Reference::Sy),
        SpinRef::Sz => ([0.0, 0.0, 1.0], Reference::Sz),
    }
}

fn count(rows: &[&SweepRow]) -> PointSummary {
    let mut p = PointSummary { total: rows.len(), ..Default::default() };
    for r in rows {
        match r.status {
            PointStatus::Ok => p.ok += 1,
            PointStatus::ExceptionalPoint => p.exceptional += 1,
            PointStatus::Failed(_) => p.failed += 1,
        }
    }
    p
}

fn energy_cols(r: &SweepRow) -> [String; 2] {
    [opt(r.energy.map(|e| e.re)), opt(r.energy.map(|e| e.im))]
}

fn intensity(r: &SweepRow, m: i64) -> String {
    match &r.intensities {
        Some(im) => num(im.iter().find(|e| e.0.round() as i64 == m).map_or(0.0, |e| e.1)),
        None => String::new(),
    }
}

fn method_name(m: RefinementMethod) -> &'static str {
    match m {
        RefinementMethod::Parabolic => "parabolic",
        RefinementMethod::ExceptionalPoint => "exceptional-point",
    }
}

pub fn two_level(a: &TwoLevelArgs) -> Result<Plan> {
    let grid = sweep_grid(&required(&a.gamma_grid, "gamma-grid")?, "gamma-grid")?;
    let (n_hat, reference) = axis(a.reference.unwrap_or(SpinRef::Sy));
    let spec = SweepSpec {
        model: SweepModel::TwoLevel(TwoLevelParams::pt_dimer(a.j.unwrap_or(1.0), 0.0, n_hat)?),
        parameter: SweepParameter::TwoLevelGain,
        grid,
        reference,
        selector: StateSelector::GroundState,
        normalization: normalization(a.normalization),
    };
    let job = move || {
        let rows = sweep_1d(&spec)?;
        let mut t = Table::new("two_level.csv", &["gamma", "F", "I_-1", "I_0", "I_1", "ep_flag"]);
        for r in &rows {
            t.push(vec![
                num(r.value),
                opt(r.second_moment),
                intensity(r, -1),
                intensity(r, 0),
                intensity(r, 1),
                flag(r.ep_flag()),
            ]);
        }
        let peak = extract_critical_point(&rows).ok().map(|c| json!({"gamma": c.value, "method": method_name(c.method)}));
        let points = count(&rows.iter().collect::<Vec<_>>());
        Ok(Output::new(vec![Artifact::Csv(t)], points, json!({ "peak": peak })))
    };
    Ok(Plan { job: Box::new(job), seeds: json!({}) })
}

fn ising_params(l: usize, j: f64, j2: f64, gamma: f64, hy: f64, hz: f64) -> Result<IsingParams> {
    let p = IsingParams { l, j, j2, gamma, h_y: hy, h_z: hz };
    p.validate()?;
    Ok(p)
}

fn critical_row(c: &CriticalPointResult) -> [String; 3] {
    [num(c.value), num(c.peak), method_name(c.method).to_string()]
}

pub fn ising_sweep(a: &IsingSweepArgs) -> Result<Plan> {
    let l = required(&a.l, "l")?;
    let grid = sweep_grid(&required(&a.hz_grid, "hz-grid")?, "hz-grid")?;
    let params = ising_params(l, a.j.unwrap_or(1.0), a.j2.unwrap_or(0.0), a.gamma.unwrap_or(1.0), a.hy.unwrap_or(0.0), 0.0)?;
    let spec = SweepSpec {
        model: SweepModel::Ising(params),
        parameter: SweepParameter::IsingHz,
        grid,
        reference: axis(a.reference.unwrap_or(SpinRef::Sz)).1,
        selector: StateSelector::GroundState,
        normalization: normalization(a.normalization),
    };
    let job = move || {
        let rows = sweep_1d(&spec)?;
        let ls = l as i64;
        let mut header = vec!["h_z".to_string(), "F".to_string()];
        header.extend((-ls..=ls).map(|m| format!("I_{m}")));
        header.extend(["re_E", "im_E", "ep_flag"].map(String::from));
        let mut t = Table { name: "ising_sweep.csv", header, rows: Vec::new() };
        for r in &rows {
            let mut row = vec![num(r.value), opt(r.second_moment)];
            row.extend((-ls..=ls).map(|m| intensity(r, m)));
            row.extend(energy_cols(r));
            row.push(flag(r.ep_flag()));
            t.push(row);
        }
        let onset = yang_lee_onset(&rows, IMAG_ONSET_TOL);
        let mut artifacts = vec![Artifact::Csv(t)];
        let summary = match extract_critical_point(&rows) {
            Ok(c) => {
                let mut cp = Table::new("critical_point.csv", &["h_z_c", "peak_F", "method", "resolution", "im_onset"]);
                let [v, p, m] = critical_row(&c);
                cp.push(vec![v, p, m, num(c.resolution), opt(onset)]);
                artifacts.push(Artifact::Csv(cp));
                println!("h_z^c = {:.4} ({}, grid step {}), |Im E| onset at {}", c.value, method_name(c.method), c.resolution, opt(onset));
                json!({"h_z_c": c.value, "peak_F": c.peak, "method": method_name(c.method), "im_onset": onset})
            }
            Err(e) => {
                println!("no interior peak: {e}");
                json!({"h_z_c": null, "error": e.to_string(), "im_onset": onset})
            }
        };
        let points = count(&rows.iter().collect::<Vec<_>>());
        Ok(Output::new(artifacts, points, summary))
    };
    Ok(Plan { job: Box::new(job), seeds: json!({}) })
}

pub fn ising_scaling(a: &IsingScalingArgs) -> Result<Plan> {
    let ls = parse_sizes(&required(&a.ls, "ls")?).context("bad `ls`")?;
    let grid = sweep_grid(&required(&a.hz_grid, "hz-grid")?, "hz-grid")?;
    let (j, j2, gamma, hy) = (a.j.unwrap_or(1.0), a.j2.unwrap_or(0.0), a.gamma.unwrap_or(1.0), a.hy.unwrap_or(0.0));
    for &l in &ls {
        ising_params(l, j, j2, gamma, hy, 0.0)?;
    }
    let norm = normalization(a.normalization);
    let job = move || {
        let mut t = Table::new("scaling.csv", &["L", "inv_L", "h_z_c", "peak_F", "method", "status"]);
        let mut summary = Vec::new();
        let mut points = PointSummary::default();
        for &l in &ls {
            let spec = SweepSpec {
                model: SweepModel::Ising(ising_params(l, j, j2, gamma, hy, 0.0)?),
                parameter: SweepParameter::IsingHz,
                grid: grid.clone(),
                reference: Reference::Sz,
                selector: StateSelector::GroundState,
                normalization: norm,
            };
            let rows = sweep_1d(&spec)?;
            let p = count(&rows.iter().collect::<Vec<_>>());
            points.total += p.total;
            points.ok += p.ok;
            points.exceptional += p.exceptional;
            points.failed += p.failed;
            match extract_critical_point(&rows) {
                Ok(c) => {
                    let [v, pk, m] = critical_row(&c);
                    t.push(vec![l.to_string(), num(1.0 / l as f64), v, pk, m, "ok".into()]);
                    println!("L={l}: h_z^c = {:.4}", c.value);
                    summary.push(json!({"L": l, "h_z_c": c.value}));
                }
                Err(e) => {
                    t.push(vec![l.to_string(), num(1.0 / l as f64), String::new(), String::new(), String::new(), e.to_string()]);
                    println!("L={l}: {e}");
                    summary.push(json!({"L": l, "h_z_c": null, "error": e.to_string()}));
                }
            }
        }
        Ok(Output::new(vec![Artifact::Csv(t)], points, json!({ "critical_points": summary })))
    };
    Ok(Plan { job: Box::new(job), seeds: json!({}) })
}

fn hoppings(j_l: f64, j_r: f64) -> Result<()> {
    if !(j_l > 0.0 && j_r > 0.0 && j_l.is_finite() && j_r.is_finite()) {
        bail!("hoppings must be positive and finite");
    }
    Ok(())
}

pub fn hn_phase(a: &HnPhaseArgs) -> Result<Plan> {
    let n = a.n.unwrap_or(100);
    let (j_l, j_r) = (a.j_l.unwrap_or(1.0), a.j_r.unwrap_or(1.0));
    hoppings(j_l, j_r)?;
    HNParams::ring(n, j_l, j_r).validate()?;
    let gl = parse_grid(&required(&a.delta_l_grid, "delta-l-grid")?).context("bad `delta-l-grid`")?;
    let gr = parse_grid(&required(&a.delta_r_grid, "delta-r-grid")?).context("bad `delta-r-grid`")?;
    let norm = normalization(a.normalization);
    let job = move || {
        let pd = phase_diagram_2d(n, j_l, j_r, &gl, &gr, norm)?;
        let mut t = Table::new("hn_phase.csv", &["delta_l_ratio", "delta_r_ratio", "F", "re_E", "im_E", "ep_flag"]);
        let mut all = Vec::new();
        for (dl, row) in pd.grid_l.iter().zip(&pd.cells) {
            for (dr, c) in pd.grid_r.iter().zip(row) {
                let [re, im] = energy_cols(c);
                t.push(vec![num(*dl), num(*dr), opt(c.second_moment), re, im, flag(c.ep_flag())]);
                all.push(c);
            }
        }
        Ok(Output::new(vec![Artifact::Csv(t)], count(&all), json!({})))
    };
    Ok(Plan { job: Box::new(job), seeds: json!({}) })
}

pub fn hn_obc(a: &HnObcArgs) -> Result<Plan> {
    let ns = parse_sizes(a.ns.as_deref().unwrap_or("10,20,30")).context("bad `ns`")?;
    let j_r = a.j_r.unwrap_or(1.0);
    let grid = sweep_grid(&required(&a.ratio_grid, "ratio-grid")?, "ratio-grid")?;
    if grid[0] <= 0.0 {
        bail!("`ratio-grid` must be positive");
    }
    hoppings(j_r, j_r)?;
    for &n in &ns {
        HNParams::open(n, j_r, j_r).validate()?;
    }
    let norm = normalization(a.normalization);
    let job = move || {
        let mut t = Table::new("hn_obc.csv", &["n", "ratio", "F", "re_E", "im_E", "ep_flag"]);
        let mut all = Vec::new();
        for &n in &ns {
            let spec = SweepSpec {
                model: SweepModel::HnFree(HNParams::open(n, j_r, j_r)),
                parameter: SweepParameter::HnHoppingRatio,
                grid: grid.clone(),
                reference: Reference::H2,
                selector: StateSelector::GroundState,
                normalization: norm,
            };
            for r in sweep_1d(&spec)? {
                let [re, im] = energy_cols(&r);
                t.push(vec![n.to_string(), num(r.value), opt(r.second_moment), re, im, flag(r.ep_flag())]);
                all.push(r);
            }
        }
        let points = count(&all.iter().collect::<Vec<_>>());
        Ok(Output::new(vec![Artifact::Csv(t)], points, json!({})))
    };
    Ok(Plan { job: Box::new(job), seeds: json!({}) })
}

pub fn hn_disorder(a: &HnDisorderArgs) -> Result<Plan> {
    let n = a.n.unwrap_or(100);
    let (j_l, j_r) = (a.j_l.unwrap_or(1.0), a.j_r.unwrap_or(2.0));
    hoppings(j_l, j_r)?;
    HNParams::ring(n, j_l, j_r).validate()?;
    let w_grid = parse_grid(&required(&a.w_grid, "w-grid")?).context("bad `w-grid`")?;
    if w_grid[0] < 0.0 {
        bail!("disorder strengths must be >= 0");
    }
    let realizations = a.realizations.unwrap_or(200);
    if realizations == 0 {
        bail!("`realizations` must be positive");
    }
    let seed = a.seed.unwrap_or(1);
    let mut spec = EnsembleSpec::ring(n, j_l, j_r, w_grid, realizations, seed);
    spec.selector = match a.selector.unwrap_or(Selector::Mid) {
        Selector::Ground => StateSelector::GroundState,
        Selector::Mid => StateSelector::MidSpectrum,
    };
    spec.normalization = normalization(a.normalization);
    let job = move || {
        let stats = disorder_ensemble(&spec)?;
        let mut t = Table::new("hn_disorder.csv", &["W", "mean_F", "std_F", "realizations", "excluded"]);
        let mut points = PointSummary::default();
        let mut failed_w = Vec::new();
        for (w, s) in spec.w_grid.iter().zip(&stats) {
            points.total += realizations as usize;
            match s {
                Ok(s) => {
                    points.ok += s.realizations as usize;
                    points.failed += s.excluded as usize;
                    t.push(vec![num(*w), num(s.mean), num(s.std), s.realizations.to_string(), s.excluded.to_string()]);
                }
                Err(_) => {
                    points.failed += realizations as usize;
                    failed_w.push(*w);
                    t.push(vec![num(*w), String::new(), String::new(), "0".into(), realizations.to_string()]);
                }
            }
        }
        let mut out = Output::new(vec![Artifact::Csv(t)], points, json!({}));
        // Excluded realizations are reported, not fatal; an empty ensemble is.
        out.code = if failed_w.is_empty() { 0 } else { 3 };
        out.message = (!failed_w.is_empty()).then(|| format!("no usable realization at W = {failed_w:?}"));
        Ok(out)
    };
    Ok(Plan { job: Box::new(job), seeds: json!({ "disorder_master_seed": seed }) })
}

pub fn protocol(a: &ProtocolArgs) -> Result<Plan> {
    let model = a.model.unwrap_or(ProtocolModel::Ising);
    let j = a.j.unwrap_or(1.0);
    let (h, reference): (ComplexSquareMatrix, ComplexSquareMatrix) = match model {
        ProtocolModel::Ising => {
            let (n_hat, _) = axis(a.reference.unwrap_or(SpinRef::Sz));
            let p = ising_params(
                a.l.unwrap_or(6),
                j,
                a.j2.unwrap_or(0.0),
                a.gamma.unwrap_or(1.0),
                a.hy.unwrap_or(0.0),
                a.hz.unwrap_or(0.1),
            )?;
            (build_ising(&p)?, build_collective_spin(p.l, n_hat)?)
        }
        ProtocolModel::TwoLevel => {
            let (n_hat, _) = axis(a.reference.unwrap_or(SpinRef::Sy));
            let p = TwoLevelParams::pt_dimer(j, a.gamma.unwrap_or(0.5), n_hat)?;
            (build_two_level(&p), build_spin_observable(n_hat)?)
        }
    };
    let basis = make_reference_basis(&reference)?;
    let minimal = minimal_phase_count(&basis)?;
    let samples = a.samples.unwrap_or(minimal);
    if samples < minimal {
        bail!("{samples} phase samples alias; need at least {minimal}");
    }
    let seed = a.seed.unwrap_or(1);
    let shots = match a.shots {
        Some(0) => bail!("`shots` must be positive"),
        Some(count) => Some(Shots { count, seed }),
        None => None,
    };
    let norm = normalization(a.normalization);
    let job = move || {
        let rho = select_state(&eig_general(&h)?, StateSelector::GroundState, norm)?;
        let direct = mqi(&rho, &basis)?;
        let signal = fidelity_signal(&rho, &reference, samples, shots)?;
        let got = retrieve_mqi(&signal)?;
        let mut st = Table::new("protocol_signal.csv", &["k", "phi", "re_f", "im_f"]);
        for (k, (phi, f)) in signal.phases.iter().zip(&signal.values).enumerate() {
            st.push(vec![k.to_string(), num(*phi), num(f.re), num(f.im)]);
        }
        let mut mt = Table::new("protocol_mqi.csv", &["m", "I_direct", "I_retrieved", "abs_err", "imag_residual"]);
        let mut worst: f64 = 0.0;
        for ((m, i_rec), res) in got.spectrum.entries.iter().zip(&got.imag_residuals) {
            let i_dir = direct.get(*m).unwrap_or(0.0);
            worst = worst.max((i_rec - i_dir).abs());
            mt.push(vec![num(*m), num(i_dir), num(*i_rec), num((i_rec - i_dir).abs()), num(*res)]);
        }
        let parseval = parseval_residual(&signal, &direct);
        println!("M = {samples}: max |I_m^retrieved - I_m^direct| = {worst:.3e}, Parseval residual {parseval:.3e}");
        let points = PointSummary { total: 1, ok: 1, ..Default::default() };
        let summary = json!({
            "samples": samples,
            "max_abs_err": worst,
            "parseval_residual": parseval,
            "max_imag_residual": got.max_imag_residual(),
        });
        Ok(Output::new(vec![Artifact::Csv(st), Artifact::Csv(mt)], points, summary))
    };
    let seeds = if a.shots.is_some() { json!({ "shot_seed": seed }) } else { json!({}) };
    Ok(Plan { job: Box::new(job), seeds })
}

pub fn validate(_: &ValidateArgs) -> Result<Plan> {
    let job = || {
        let report = run_all()?;
        let mut t = Table::new("validation.csv", &["check", "residual", "tolerance", "applicable", "passed"]);
        for l in &report.lines {
            t.push(vec![l.check.clone(), num(l.residual), num(l.tolerance), flag(l.applicable), flag(l.passed())]);
        }
        let text = report.to_string();
        print!("{text}");
        let failing = report.lines.iter().filter(|l| l.applicable && !l.passed()).count();
        let points = PointSummary { total: report.lines.len(), ok: report.lines.len() - failing, failed: failing, ..Default::default() };
        let artifacts = vec![Artifact::Csv(t), Artifact::Text("validation_report.txt", text)];
        let mut out = Output::new(artifacts, points, json!({ "checks": report.lines.len(), "failing": failing }));
        out.code = if failing == 0 { 0 } else { 4 };
        out.message = (failing > 0).then(|| format!("{failing} validation checks failed"));
        Ok(out)
    };
    Ok(Plan { job: Box::new(job), seeds: json!({ "validation_seed": mqc_core::validation::VALIDATION_SEED }) })
}
