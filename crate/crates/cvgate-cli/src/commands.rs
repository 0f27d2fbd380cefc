use cvgate::benchmarks::{self, InputState};
use cvgate::fock::{self, FockVector, State, TruncationGuard};
use cvgate::stateprep::{self, Parity, TargetKind, TargetState};
use cvgate::synthesis::{self, DecompositionPlan, PotentialSpec};
use cvgate::xgate::{self, AncillaModel, GateSpec, SharpBranches, Window};
use cvgate::{poly, C64};
use serde::Serialize;

use crate::output::{num, CliError, CliResult, Format, Sink};
use crate::{CatArgs, Common, CubicArgs, Fig2Args, Fig3Args, Fig4Args, GateArgs, PlanArgs};

/// Copy of the arguments with the output format filled in, so that the
/// embedded configuration is complete.
fn resolved<T: Clone>(a: &T, common: impl Fn(&mut T) -> &mut Common, default: Format) -> T {
    let mut a = a.clone();
    let c = common(&mut a);
    c.format = Some(c.format.unwrap_or(default));
    a
}

/// Rejects the configuration with `msg` when `bad` holds.
fn config(bad: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if bad {
        return Err(CliError::Config(msg()));
    }
    Ok(())
}

fn check_common(c: &Common) -> CliResult<()> {
    config(c.dim < 2, || format!("dimension {} below 2", c.dim))
}

fn guard(c: &Common, tail: f64) -> CliResult<()> {
    if !c.allow_truncation {
        TruncationGuard::default().check_tail(tail)?;
    }
    Ok(())
}

fn input_state(input: &InputState, c: &Common) -> CliResult<FockVector> {
    let s = input.state(c.dim)?;
    guard(c, s.truncation_tail())?;
    Ok(s)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StateOut {
    Pure { amplitudes: Vec<C64> },
    Mixed { density: Vec<Vec<C64>> },
}

impl StateOut {
    fn from_state(s: &State) -> Self {
        match s {
            State::Pure(v) => StateOut::Pure {
                amplitudes: v.amplitudes().iter().copied().collect(),
            },
            State::Mixed(rho) => StateOut::Mixed {
                density: (0..rho.nrows()).map(|i| rho.row(i).iter().copied().collect()).collect(),
            },
        }
    }

    fn rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        match self {
            StateOut::Pure { amplitudes } => (
                vec!["n", "re", "im"],
                amplitudes
                    .iter()
                    .enumerate()
                    .map(|(n, z)| vec![n.to_string(), num(z.re), num(z.im)])
                    .collect(),
            ),
            StateOut::Mixed { density } => (
                vec!["n", "m", "re", "im"],
                density
                    .iter()
                    .enumerate()
                    .flat_map(|(n, row)| {
                        row.iter()
                            .enumerate()
                            .map(move |(m, z)| vec![n.to_string(), m.to_string(), num(z.re), num(z.im)])
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Serialize)]
struct GateSummary<'a> {
    config: &'a GateArgs,
    spec: GateSpec,
    window: Option<Window>,
    fidelity: f64,
    success: f64,
    attenuation_t: f64,
    truncation_tail: f64,
    nodes: usize,
}

#[derive(Serialize)]
struct GateOutput<'a> {
    #[serde(flatten)]
    summary: GateSummary<'a>,
    state: StateOut,
}

pub fn gate(a: &GateArgs) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Json);
    check_common(&a.common)?;
    config(a.lm.norm() == 0.0 && a.lp.norm() == 0.0, || {
        "null gate: --lm and --lp are both zero".into()
    })?;
    config(a.nodes < 2, || "at least two window nodes are needed".into())?;
    let psi = input_state(&a.input, &a.common)?;
    let spec = xgate::resolve_gate_settings(a.lm, a.lp, a.t)?.with_corrected(!a.uncorrected);
    let target = benchmarks::gate_target(&psi, a.lm, a.lp)?;
    let (result, window) = match a.eps {
        Some(eps) => {
            let window = Window {
                x0: spec.homodyne_x()?,
                epsilon: eps,
                n_points: a.nodes,
            };
            let anc = AncillaModel::with_eta(a.eta)?;
            (xgate::apply_gate_windowed(&psi, &spec, &anc, &window, Some(&target))?, Some(window))
        }
        None => {
            let mut r = xgate::realistic_gate_density(&psi, &spec, a.eta)?;
            if a.eta == 1.0 {
                let br = SharpBranches::new(&psi, &spec)?;
                r.state = State::Pure(FockVector::new(br.one)?.normalized()?);
            }
            (r, None)
        }
    };
    guard(&a.common, result.truncation_tail)?;
    let fidelity = match result.fidelity {
        Some(f) => f,
        None => fock::fidelity(&result.state, &target)?,
    };
    let out = GateOutput {
        summary: GateSummary {
            config: a,
            spec,
            window,
            fidelity,
            success: result.success,
            attenuation_t: result.attenuation_t,
            truncation_tail: result.truncation_tail,
            nodes: result.nodes,
        },
        state: StateOut::from_state(&result.state),
    };
    let sink = Sink(a.common.out.clone());
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&out),
        Format::Csv => {
            let (header, rows) = out.state.rows();
            sink.csv(&out.summary, &header, &rows)
        }
    }
}

fn table_format(c: &Common) -> CliResult<()> {
    config(c.format == Some(Format::Json), || "figure tables are written as CSV".into())
}

/// Classical threshold, taking the widened re-scan when the first scan
/// ended on the boundary and the re-scan improved on it.
fn classical_value(psi: &FockVector, target: &FockVector) -> CliResult<f64> {
    let th = benchmarks::classical_threshold(psi, target)?;
    Ok(th.widened.as_ref().map_or(th.fidelity, |w| w.fidelity.max(th.fidelity)))
}

pub fn fig2(a: &Fig2Args) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Csv);
    check_common(&a.common)?;
    table_format(&a.common)?;
    config(!(a.t_step > 0.0) || a.t_min > a.t_max, || "empty transmission grid".into())?;
    let n = ((a.t_max - a.t_min) / a.t_step + 1e-9).floor() as usize + 1;
    let t_grid: Vec<f64> = (0..n).map(|i| round12(a.t_min + i as f64 * a.t_step)).collect();
    let lam = C64::new(a.lambda, 0.0);
    let mut rows = Vec::new();
    for input in &a.inputs {
        let psi = input_state(input, &a.common)?;
        let target = benchmarks::gate_target(&psi, lam, lam)?;
        let classical = classical_value(&psi, &target)?;
        let curve = benchmarks::fidelity_vs_t_sweep(&psi, lam, lam, &a.etas, &t_grid, a.common.dim)?;
        for p in &curve.points {
            rows.push(vec![input.to_string(), num(p.t), num(p.eta), num(p.fidelity), num(classical)]);
        }
    }
    Sink(a.common.out.clone()).csv(a, &["input", "T", "eta", "F", "classical_threshold"], &rows)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

pub fn fig3(a: &Fig3Args) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Csv);
    check_common(&a.common)?;
    table_format(&a.common)?;
    config(a.n_eps == 0, || "no window half-widths requested".into())?;
    let eps = benchmarks::log_grid(a.eps_min, a.eps_max, a.n_eps);
    let mut rows = Vec::new();
    for input in &a.inputs {
        let psi = input_state(input, &a.common)?;
        for &eta in &a.etas {
            for p in benchmarks::f_vs_p_curve(&psi, a.lambda, eta, &eps)? {
                rows.push(vec![
                    input.to_string(),
                    num(eta),
                    num(p.epsilon),
                    num(p.t),
                    num(p.x0),
                    num(p.fidelity),
                    num(p.success),
                    p.nodes.to_string(),
                ]);
            }
        }
    }
    Sink(a.common.out.clone()).csv(a, &["input", "eta", "epsilon", "T", "x0", "F", "P", "nodes"], &rows)
}

/// Smallest dimension allowed for a cat of amplitude `beta` cut at `n_max`.
fn cat_dim(beta: f64, n_max: usize, requested: usize) -> usize {
    let need = (n_max as f64 + 4.0 * beta * beta + 20.0).ceil() as usize;
    requested.max(need)
}

pub fn fig4(a: &Fig4Args) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Csv);
    check_common(&a.common)?;
    table_format(&a.common)?;
    let mut rows = Vec::new();
    for &beta in &a.betas {
        for &n_max in &a.n_maxes {
            let dim = cat_dim(beta, n_max, a.common.dim);
            let f = stateprep::cat_fidelity(beta, n_max, dim)?;
            rows.push(vec![num(beta), n_max.to_string(), num(f), dim.to_string()]);
        }
    }
    Sink(a.common.out.clone()).csv(a, &["beta", "n_max", "F", "dim"], &rows)
}

#[derive(Serialize)]
struct ScheduleOut {
    step_t: Vec<f64>,
    cumulative_t: f64,
    distance: f64,
}

fn schedule(plan: &DecompositionPlan, steps: &Option<Vec<f64>>, dim: usize) -> CliResult<Option<ScheduleOut>> {
    let Some(steps) = steps else { return Ok(None) };
    let s = synthesis::schedule_attenuation(plan, steps, dim)?;
    Ok(Some(ScheduleOut {
        step_t: steps.clone(),
        cumulative_t: steps.iter().product(),
        distance: s.distance,
    }))
}

fn json_only(c: &Common) -> CliResult<()> {
    config(c.format == Some(Format::Csv), || "plans and states are written as JSON".into())
}

#[derive(Serialize)]
struct CubicOutput<'a> {
    config: &'a CubicArgs,
    polynomial: Vec<C64>,
    roots: Vec<C64>,
    scale: C64,
    residual: f64,
    closed_form_roots: Vec<C64>,
    closed_form_distance: f64,
    radical_form_roots: Vec<C64>,
    radical_forms_distance: f64,
    vacuum_distance: f64,
    schedule: Option<ScheduleOut>,
}

pub fn cubic(a: &CubicArgs) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Json);
    check_common(&a.common)?;
    json_only(&a.common)?;
    config(a.common.dim < 8, || "the cubic check needs dimension at least 8".into())?;
    let check = synthesis::cubic_check(a.chi)?;
    let dim = a.common.dim;
    let vac = fock::number_state(0, dim)?;
    let x = fock::quadrature(0.0, dim);
    let poly_c = synthesis::cubic_polynomial(a.chi);
    let want = poly::apply_to_vector(&poly_c, &x, vac.amplitudes());
    let got = check.plan.operator(dim) * vac.amplitudes() * check.plan.scale;
    let out = CubicOutput {
        config: a,
        polynomial: poly_c,
        roots: check.plan.roots.clone(),
        scale: check.plan.scale,
        residual: check.plan.residual,
        closed_form_roots: synthesis::cubic_closed_form(a.chi),
        closed_form_distance: check.closed_form_distance,
        radical_form_roots: synthesis::cubic_radical_forms(a.chi),
        radical_forms_distance: check.radical_forms_distance,
        vacuum_distance: (got - want).norm(),
        schedule: schedule(&check.plan, &a.steps, dim)?,
    };
    eprintln!("residual {:e}", out.residual);
    Sink(a.common.out.clone()).json(&out)
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    config: &'a PlanArgs,
    polynomial: Vec<C64>,
    roots: Vec<C64>,
    scale: C64,
    residual: f64,
    schedule: Option<ScheduleOut>,
}

pub fn plan(a: &PlanArgs) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Json);
    check_common(&a.common)?;
    json_only(&a.common)?;
    let coeffs = match (&a.poly, &a.potential) {
        (Some(re), None) => {
            let im = a.poly_im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
            config(im.len() != re.len(), || "--poly and --poly-im lengths differ".into())?;
            re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect()
        }
        (None, Some(v)) => synthesis::taylor_unitary_coeffs(&PotentialSpec {
            coefficients: v.clone(),
            tau: a.tau,
            mean_x: a.mean_x,
            order: a.order,
        })?,
        _ => return Err(CliError::Config("give exactly one of --poly or --potential".into())),
    };
    let plan = synthesis::factor_poly(&coeffs)?;
    let out = PlanOutput {
        config: a,
        schedule: schedule(&plan, &a.steps, a.common.dim)?,
        polynomial: coeffs,
        roots: plan.roots,
        scale: plan.scale,
        residual: plan.residual,
    };
    eprintln!("residual {:e}", out.residual);
    Sink(a.common.out.clone()).json(&out)
}

#[derive(Serialize)]
struct SequenceOut {
    step_t: f64,
    roots: Vec<C64>,
    success: f64,
    cumulative_attenuation: f64,
    direct_distance: f64,
}

#[derive(Serialize)]
struct CatOutput<'a> {
    config: &'a CatArgs,
    dim: usize,
    fidelity: f64,
    polynomial: Vec<C64>,
    amplitudes: Vec<C64>,
    sequence: Option<SequenceOut>,
}

pub fn cat(a: &CatArgs) -> CliResult<()> {
    let a = &resolved(a, |c| &mut c.common, Format::Json);
    check_common(&a.common)?;
    json_only(&a.common)?;
    let dim = cat_dim(a.beta, a.nmax, a.common.dim);
    let parity = if a.odd { Parity::Odd } else { Parity::Even };
    let polynomial = stateprep::parity_cat_polynomial(a.beta, a.nmax, parity)?;
    let state = stateprep::apply_creation_polynomial(&polynomial, dim)?;
    let fidelity = match parity {
        Parity::Even => stateprep::cat_fidelity(a.beta, a.nmax, dim)?,
        Parity::Odd => {
            let t = TargetState::new(TargetKind::Cat { beta: a.beta, parity }, a.nmax, dim)?;
            fock::fidelity_pure(&state, &t.ideal()?)?
        }
    };
    let sequence = match a.sequence_t {
        None => None,
        Some(t) => {
            let steps = vec![t; poly::trim(&polynomial).len() - 1];
            let r = stateprep::prepare_via_gate_sequence(&polynomial, &steps, dim)?;
            Some(SequenceOut {
                step_t: t,
                roots: r.plan.roots,
                success: r.result.success,
                cumulative_attenuation: r.result.attenuation_t,
                direct_distance: r.direct_distance,
            })
        }
    };
    Sink(a.common.out.clone()).json(&CatOutput {
        config: a,
        dim,
        fidelity,
        polynomial,
        amplitudes: state.amplitudes().iter().copied().collect(),
        sequence,
    })
}
