//! Scenario orchestration. Every scenario computes all of its artifacts in
//! memory; nothing is written until the whole run has succeeded.

use fermi_landauer::oracle::{compare_with_perturbation, dt_halving, FieldState, OracleSystem};
use fermi_landauer::thermal::population_imbalance;
use fermi_landauer::{
    apply_thermal_channel, apply_vacuum_channel, closed_form_static, compute_coupling,
    compute_coupling_set, occupation_marginals, p_from_temperature, solve_modes, Amplitude,
    ChannelResult, CouplingSet, DetectorConfig, Mode, ResonanceSpec, SwitchingProfile,
    ThermalOccupancy, WorldlineKind,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{resolve, RunConfig, Scenario, Settings, SweepChannel};
use crate::emit::{summary_artifact, table_artifact, Artifact, Cell, Header, Table};
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let header = Header::new(cfg.describe());
    match cfg.scenario {
        Scenario::Modes => modes(cfg, &header),
        Scenario::Vacuum => vacuum(cfg, &header),
        Scenario::Thermal => thermal(cfg, &header),
        Scenario::Oracle => oracle(cfg, &header),
        Scenario::Sweep => sweep(cfg, &header),
    }
}

fn modes(cfg: &RunConfig, header: &Header) -> Result<Vec<Artifact>, CliError> {
    let mut table = Table::new(&["n", "k", "omega", "norm"]);
    for m in solve_modes(&cfg.cavity, cfg.n_max)? {
        table.push(vec![m.n.into(), m.k.into(), m.omega.into(), m.norm.into()]);
    }
    Ok(vec![table_artifact("modes", &table, header, cfg.format)])
}

/// Truncations reported by the convergence table: 5, 10, 20, ... and `n_max`.
pub fn convergence_steps(n_max: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = std::iter::successors(Some(5usize), |n| Some(n * 2))
        .take_while(|&n| n < n_max)
        .collect();
    steps.push(n_max);
    steps
}

fn vacuum(cfg: &RunConfig, header: &Header) -> Result<Vec<Artifact>, CliError> {
    let det = cfg.detector();
    let set = compute_coupling_set(&cfg.cavity, det, cfg.n_max, cfg.switching)?;
    let result = apply_vacuum_channel(&set, det)?;

    let p = det.excited_population;
    let l2 = det.coupling * det.coupling;
    let mut per_mode = Table::new(&["n", "abs_W2", "abs_V2", "dQ_n", "cum_dQ", "cum_delta_p"]);
    let (mut cum_dq, mut cum_dp) = (0.0, 0.0);
    for (i, contribution) in result.per_mode.iter().enumerate() {
        let (w2, v2) = (set.w[i].norm_sqr(), set.v[i].norm_sqr());
        cum_dq += contribution.heat;
        cum_dp += l2 * ((1.0 - p) * w2 - p * v2);
        per_mode.push(vec![
            contribution.n.into(),
            w2.into(),
            v2.into(),
            contribution.heat.into(),
            cum_dq.into(),
            cum_dp.into(),
        ]);
    }

    let mut convergence = Table::new(&["n_max", "dQ", "delta_p", "tail_estimate"]);
    for n in convergence_steps(cfg.n_max) {
        let truncated = set.truncated(n)?;
        let r = apply_vacuum_channel(&truncated, det)?;
        convergence.push(vec![
            n.into(),
            r.heat.into(),
            r.delta_p.into(),
            truncated.tail_estimate.into(),
        ]);
    }

    let mut fields = channel_fields(&result);
    fields.push(("n_max", set.n_max.into()));
    fields.push(("tail_estimate", set.tail_estimate.into()));
    if let Some(diag) = &result.field_diag {
        fields.push(("field_trace", diag.trace().into()));
    }
    Ok(vec![
        table_artifact("couplings", &coupling_table(&set), header, cfg.format),
        table_artifact("vacuum_modes", &per_mode, header, cfg.format),
        table_artifact("vacuum_convergence", &convergence, header, cfg.format),
        summary_artifact("vacuum_summary", fields, header),
    ])
}

fn coupling_table(set: &CouplingSet) -> Table {
    let mut table = Table::new(&["n", "re_W", "im_W", "re_V", "im_V", "abs_W2", "abs_V2"]);
    for ((mode, w), v) in set.modes.iter().zip(&set.w).zip(&set.v) {
        table.push(vec![
            mode.n.into(),
            w.re.into(),
            w.im.into(),
            v.re.into(),
            v.im.into(),
            w.norm_sqr().into(),
            v.norm_sqr().into(),
        ]);
    }
    table
}

fn channel_fields(result: &ChannelResult) -> Vec<(&'static str, Cell)> {
    vec![
        ("delta_p", result.delta_p.into()),
        ("dQ", result.heat.into()),
        ("dS_linear", result.entropy_linear.into()),
        ("dS_exact", result.entropy_exact.into()),
        ("landauer_margin", result.landauer_margin.into()),
    ]
}

/// Resonant mode and its amplitude `V_B` for a thermal run.
struct Resonance {
    mode: Mode,
    spec: ResonanceSpec,
    v_b: Complex64,
}

fn resonance(cfg: &RunConfig, det: &DetectorConfig) -> Result<Resonance, CliError> {
    let mode = solve_modes(&cfg.cavity, cfg.resonant_mode)?[cfg.resonant_mode - 1];
    let v_b = if det.worldline.kind() == WorldlineKind::Static
        && cfg.switching == SwitchingProfile::Sharp
    {
        closed_form_static(&mode, det, Amplitude::V)?
    } else {
        compute_coupling(&mode, det, Amplitude::V, cfg.switching)?
    };
    Ok(Resonance {
        mode,
        spec: ResonanceSpec::for_mode(&mode, det),
        v_b,
    })
}

struct ThermalPoint {
    field_temperature: f64,
    detector_temperature: Option<f64>,
    p: f64,
    occupancy: ThermalOccupancy,
    result: ChannelResult,
}

fn thermal_point(
    cfg: &RunConfig,
    res: &Resonance,
    field_temperature: f64,
    detector_temperature: Option<f64>,
    p: f64,
) -> Result<ThermalPoint, CliError> {
    let det = cfg.detector().with_population(p)?;
    let occupancy = occupation_marginals(field_temperature, res.mode.omega)?;
    let result = apply_thermal_channel(&occupancy, res.v_b, &det, &res.spec, cfg.allow_detuned)?;
    Ok(ThermalPoint {
        field_temperature,
        detector_temperature,
        p,
        occupancy,
        result,
    })
}

const THERMAL_COLUMNS: [&str; 11] = [
    "T_R",
    "T_D",
    "p",
    "P0",
    "P1",
    "P2",
    "X",
    "dQ",
    "dS_linear",
    "dS_exact",
    "landauer_margin",
];

fn thermal_row(point: &ThermalPoint) -> Vec<Cell> {
    let occ = &point.occupancy;
    vec![
        point.field_temperature.into(),
        point.detector_temperature.into(),
        point.p.into(),
        occ.p0.into(),
        occ.p1.into(),
        occ.p2.into(),
        population_imbalance(occ, point.p).into(),
        point.result.heat.into(),
        point.result.entropy_linear.into(),
        point.result.entropy_exact.into(),
        point.result.landauer_margin.into(),
    ]
}

/// `n` geometrically spaced points over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

fn thermal(cfg: &RunConfig, header: &Header) -> Result<Vec<Artifact>, CliError> {
    let det = cfg.detector();
    let res = resonance(cfg, det)?;
    let omega_b = res.mode.omega;

    let points: Vec<ThermalPoint> = match cfg.field_temperature {
        Some(t_r) => vec![thermal_point(
            cfg,
            &res,
            t_r,
            cfg.detector_temperature,
            det.excited_population,
        )?],
        None => {
            let temps = geometric_grid(0.1 * omega_b, 10.0 * omega_b, cfg.grid);
            let pairs: Vec<(f64, f64)> = temps
                .iter()
                .flat_map(|&t_r| temps.iter().map(move |&t_d| (t_r, t_d)))
                .collect();
            pairs
                .par_iter()
                .map(|&(t_r, t_d)| {
                    let p = p_from_temperature(t_d, det.gap, cfg.convention)?;
                    thermal_point(cfg, &res, t_r, Some(t_d), p)
                })
                .collect::<Result<_, CliError>>()?
        }
    };

    let mut table = Table::new(&THERMAL_COLUMNS);
    for point in &points {
        table.push(thermal_row(point));
    }
    let worst = points
        .iter()
        .min_by(|a, b| {
            a.result
                .landauer_margin
                .total_cmp(&b.result.landauer_margin)
        })
        .expect("at least one thermal point");
    let fields = vec![
        ("resonant_mode", res.mode.n.into()),
        ("omega_B", omega_b.into()),
        ("abs_VB2", res.v_b.norm_sqr().into()),
        ("detuning", res.spec.detuning.into()),
        ("points", points.len().into()),
        ("min_landauer_margin", worst.result.landauer_margin.into()),
        ("min_margin_T_R", worst.field_temperature.into()),
        ("min_margin_T_D", worst.detector_temperature.into()),
        ("min_margin_p", worst.p.into()),
    ];
    Ok(vec![
        table_artifact("thermal_sweep", &table, header, cfg.format),
        summary_artifact("thermal_summary", fields, header),
    ])
}

fn oracle(cfg: &RunConfig, header: &Header) -> Result<Vec<Artifact>, CliError> {
    let det = cfg.detector();
    let dt = cfg.oracle_dt(det);
    let system = OracleSystem::new(&cfg.cavity, det, cfg.switching, cfg.n_modes)?;
    let field = match cfg.field_temperature {
        Some(temperature) => FieldState::Thermal { temperature },
        None => FieldState::Vacuum,
    };
    let lambdas = [det.coupling, 0.5 * det.coupling];

    let (rows, (halving, integrity)) = rayon::join(
        || -> Result<_, CliError> {
            let rows = lambdas
                .par_iter()
                .map(|&l| compare_with_perturbation(&system, field, &[l], dt).map(|r| r[0]))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(rows)
        },
        || {
            rayon::join(
                || dt_halving(&system, field, dt),
                || -> Result<_, CliError> {
                    let initial = system.initial_state(field)?;
                    let evolved = system.evolve(&initial, dt)?;
                    Ok((initial, evolved))
                },
            )
        },
    );
    let rows = rows?;
    let halving = halving?;
    let (initial, evolved) = integrity?;

    let mut table = Table::new(&[
        "lambda",
        "dt",
        "delta_p_exact",
        "delta_p_pert",
        "dQ_exact",
        "dQ_pert",
        "dS_exact",
        "dS_pert",
        "rel_err_delta_p",
        "rel_err_dQ",
    ]);
    for r in &rows {
        table.push(vec![
            r.lambda.into(),
            r.dt.into(),
            r.delta_p_exact.into(),
            r.delta_p_pert.into(),
            r.heat_exact.into(),
            r.heat_pert.into(),
            r.entropy_exact.into(),
            r.entropy_pert.into(),
            r.rel_err_delta_p().into(),
            r.rel_err_heat().into(),
        ]);
    }
    let fields = vec![
        ("n_modes", cfg.n_modes.into()),
        ("steps", evolved.steps.into()),
        ("trace_drift", evolved.trace_drift.into()),
        ("hermiticity_drift", evolved.hermiticity_drift.into()),
        ("purity_initial", initial.purity().into()),
        ("purity_final", evolved.purity().into()),
        ("dt_halving_coarse", halving.coarse.into()),
        ("dt_halving_fine", halving.fine.into()),
        ("dt_contraction", halving.contraction().into()),
        (
            "rel_err_ratio_delta_p",
            (rows[0].rel_err_delta_p() / rows[1].rel_err_delta_p()).into(),
        ),
        (
            "rel_err_ratio_dQ",
            (rows[0].rel_err_heat() / rows[1].rel_err_heat()).into(),
        ),
    ];
    Ok(vec![
        table_artifact("oracle_comparison", &table, header, cfg.format),
        summary_artifact("oracle_summary", fields, header),
    ])
}

/// Settings of every sweep point, in output order.
fn sweep_points(cfg: &RunConfig) -> Vec<(Vec<f64>, Settings)> {
    let axes = &cfg.sweep_axes;
    let coordinates: Vec<Vec<f64>> = match cfg.samples {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..n)
                .map(|_| axes.iter().map(|a| a.at(rng.random::<f64>())).collect())
                .collect()
        }
        None => axes.iter().fold(vec![Vec::new()], |acc, axis| {
            acc.into_iter()
                .flat_map(|prefix| {
                    axis.points().into_iter().map(move |x| {
                        let mut next = prefix.clone();
                        next.push(x);
                        next
                    })
                })
                .collect()
        }),
    };
    let channel = match cfg.sweep_channel {
        SweepChannel::Vacuum => "vacuum",
        SweepChannel::Thermal => "thermal",
    };
    coordinates
        .into_iter()
        .map(|coords| {
            let mut settings = cfg.settings.clone();
            settings.insert("scenario".into(), channel.into());
            for (axis, x) in axes.iter().zip(&coords) {
                match axis.key {
                    "detector.p" => settings.remove("detector.T_D"),
                    "detector.T_D" => settings.remove("detector.p"),
                    _ => None,
                };
                settings.insert(axis.key.into(), x.to_string());
            }
            (coords, settings)
        })
        .collect()
}

fn sweep(cfg: &RunConfig, header: &Header) -> Result<Vec<Artifact>, CliError> {
    // Resolve every point first so configuration errors surface before any work.
    let points = sweep_points(cfg)
        .into_iter()
        .map(|(coords, settings)| Ok((coords, resolve(&settings)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let results = points
        .par_iter()
        .map(|(_, point)| match cfg.sweep_channel {
            SweepChannel::Vacuum => {
                let det = point.detector();
                let set = compute_coupling_set(&point.cavity, det, point.n_max, point.switching)?;
                Ok(apply_vacuum_channel(&set, det)?)
            }
            SweepChannel::Thermal => {
                let det = point.detector();
                let res = resonance(point, det)?;
                let t_r = point.field_temperature.expect("validated thermal sweep");
                Ok(thermal_point(
                    point,
                    &res,
                    t_r,
                    point.detector_temperature,
                    det.excited_population,
                )?
                .result)
            }
        })
        .collect::<Result<Vec<ChannelResult>, CliError>>()?;

    let mut columns: Vec<String> = cfg.sweep_axes.iter().map(|a| a.name.clone()).collect();
    columns.extend(["delta_p", "dQ", "dS_linear", "dS_exact", "landauer_margin"].map(String::from));
    let mut table = Table::new(&columns);
    for ((coords, _), result) in points.iter().zip(&results) {
        let mut row: Vec<Cell> = coords.iter().map(|&x| x.into()).collect();
        row.extend(channel_fields(result).into_iter().map(|(_, c)| c));
        table.push(row);
    }
    Ok(vec![table_artifact("sweep", &table, header, cfg.format)])
}
