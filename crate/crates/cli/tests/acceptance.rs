//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use fermi_landauer::oracle::{compare_with_perturbation, dt_halving, FieldState, OracleSystem};
use fermi_landauer::{
    apply_vacuum_channel, boundary_residual, closed_form_static, compute_coupling,
    compute_coupling_set, gram_matrix, smear_amplitude, solve_modes, Amplitude, CavityConfig,
    DetectorConfig, ReferenceSpinor, Species, SwitchingProfile, Worldline,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn static_detector(
    cavity: &CavityConfig,
    gap: f64,
    lambda: f64,
    t: f64,
    x0: f64,
    p: f64,
) -> DetectorConfig {
    DetectorConfig::new(
        gap,
        lambda,
        t,
        Worldline::fixed(x0, cavity).unwrap(),
        ReferenceSpinor::default(),
        p,
    )
    .unwrap()
}

fn spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst_residual: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for mass in [0.0, 0.1, 1.0, 10.0] {
        for length in [0.5, 1.0, 2.0] {
            let cavity = CavityConfig::new(length, mass).map_err(|e| e.to_string())?;
            for mode in solve_modes(&cavity, 50).map_err(|e| e.to_string())? {
                worst_residual = worst_residual.max(boundary_residual(mode.k, &cavity).abs());
                if mass > 0.0 {
                    let gap = (mode.omega * (mode.k * length).sin().abs() - mode.k).abs();
                    worst_identity = worst_identity.max(gap);
                }
            }
        }
    }
    let tiny = CavityConfig::new(1.0, 1e-8).map_err(|e| e.to_string())?;
    let worst_tiny = solve_modes(&tiny, 50)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|m| (m.k - (m.n as f64 - 0.5) * PI).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        worst_residual < 1e-12,
        format!("residual {worst_residual:e}"),
    )?;
    check(
        worst_identity < 1e-10,
        format!("ω|sin kL| - k = {worst_identity:e}"),
    )?;
    check(worst_tiny < 1e-6, format!("m=1e-8 offset {worst_tiny:e}"))?;
    check(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "max residual {worst_residual:.1e}, max |ω|sin kL|-k| {worst_identity:.1e}, m=1e-8 offset {worst_tiny:.1e}, {elapsed:.2?}"
    ))
}

fn orthonormality() -> Outcome {
    let start = Instant::now();
    let cavity = CavityConfig::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let modes = solve_modes(&cavity, 8).map_err(|e| e.to_string())?;
    let gram = gram_matrix(&modes, &cavity).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let dev = (gram - nalgebra::DMatrix::<f64>::identity(16, 16)).amax();
    check(dev < 1e-8, format!("max |G - I| = {dev:e}"))?;
    check(
        elapsed < Duration::from_secs(5),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("16x16 max |G - I| {dev:.1e}, {elapsed:.2?}"))
}

fn coupling_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mass = rng.random_range(0.0..5.0);
        let length = rng.random_range(0.5..2.0);
        let gap = rng.random_range(0.5..10.0);
        let t = rng.random_range(1.0..20.0);
        let x0 = rng.random_range(0.0..=length);
        let n = rng.random_range(1..=8);
        let cavity = CavityConfig::new(length, mass).map_err(|e| e.to_string())?;
        let det = static_detector(&cavity, gap, 0.01, t, x0, 0.0);
        let mode = solve_modes(&cavity, n).map_err(|e| e.to_string())?[n - 1];
        for kind in [Amplitude::W, Amplitude::V] {
            let exact = closed_form_static(&mode, &det, kind).map_err(|e| e.to_string())?;
            let quad = compute_coupling(&mode, &det, kind, SwitchingProfile::Sharp)
                .map_err(|e| e.to_string())?;
            if exact.norm() > 0.0 {
                worst = worst.max((quad - exact).norm() / exact.norm());
            }
        }
    }
    check(worst < 1e-9, format!("relative error {worst:e}"))?;
    Ok(format!("50 draws, max relative error {worst:.1e}"))
}

fn resonance_dominance() -> Outcome {
    let cavity = CavityConfig::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let modes = solve_modes(&cavity, 10).map_err(|e| e.to_string())?;
    let gap = modes[0].omega;
    let v_b = |t: f64| -> Result<f64, String> {
        let det = static_detector(&cavity, gap, 0.01, t, 0.3, 0.0);
        compute_coupling(&modes[0], &det, Amplitude::V, SwitchingProfile::Sharp)
            .map(|v| v.norm_sqr())
            .map_err(|e| e.to_string())
    };
    let ratio = v_b(20.0)? / v_b(10.0)?;
    check(
        (ratio - 4.0).abs() < 1e-6,
        format!("|V_B(2T)|²/|V_B(T)|² = {ratio}"),
    )?;

    let mut worst_share: f64 = 0.0;
    for t in [1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0] {
        let det = static_detector(&cavity, gap, 0.01, t, 0.3, 0.0);
        for mode in &modes[1..] {
            let v = compute_coupling(mode, &det, Amplitude::V, SwitchingProfile::Sharp)
                .map_err(|e| e.to_string())?;
            let amp = smear_amplitude(mode, Species::Antiparticle, 0.3, &det.eta)
                .map_err(|e| e.to_string())?;
            let cap = 4.0 * amp.norm_sqr() / (gap - mode.omega).powi(2);
            worst_share = worst_share.max(v.norm_sqr() / cap);
        }
    }
    check(
        worst_share <= 1.0 + 1e-9,
        format!("|V_n|² reaches {worst_share} of the cap"),
    )?;
    Ok(format!(
        "ratio {ratio:.10}, off-resonant |V_n|² at most {worst_share:.3} of 4|amp|²/(Ω-ω_n)²"
    ))
}

fn vacuum_channel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut min_heat = f64::INFINITY;
    let mut worst_trace: f64 = 0.0;
    for _ in 0..100 {
        let length = rng.random_range(0.5..2.0);
        let cavity =
            CavityConfig::new(length, rng.random_range(0.0..5.0)).map_err(|e| e.to_string())?;
        let det = static_detector(
            &cavity,
            rng.random_range(0.2..10.0),
            0.005,
            rng.random_range(0.5..20.0),
            rng.random_range(0.0..=length),
            rng.random_range(0.0..=1.0),
        );
        let set = compute_coupling_set(&cavity, &det, 40, SwitchingProfile::Sharp)
            .map_err(|e| e.to_string())?;
        let result = apply_vacuum_channel(&set, &det).map_err(|e| e.to_string())?;
        min_heat = min_heat.min(result.heat);
        let diag = result
            .field_diag
            .ok_or("vacuum channel without field diagonal")?;
        worst_trace = worst_trace.max((diag.trace() - 1.0).abs());
    }
    check(min_heat >= 0.0, format!("ΔQ = {min_heat:e}"))?;
    check(
        worst_trace < 1e-12,
        format!("trace deviation {worst_trace:e}"),
    )?;

    let cavity = CavityConfig::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let gap = solve_modes(&cavity, 1).map_err(|e| e.to_string())?[0].omega;
    let gap_of = |lambda: f64| -> Result<f64, String> {
        let det = static_detector(&cavity, gap, lambda, 10.0, 0.3, 0.3);
        let set = compute_coupling_set(&cavity, &det, 40, SwitchingProfile::Sharp)
            .map_err(|e| e.to_string())?;
        let r = apply_vacuum_channel(&set, &det).map_err(|e| e.to_string())?;
        let linear = r.entropy_linear.ok_or("no linear entropy at p=0.3")?;
        Ok((r.entropy_exact - linear).abs() / (lambda * lambda))
    };
    let factor = gap_of(0.02)? / gap_of(0.01)?;
    check(
        factor >= 3.0,
        format!("linearization gap shrinks by {factor}"),
    )?;
    Ok(format!(
        "100 draws min ΔQ {min_heat:.2e}, trace deviation {worst_trace:.1e}, |dS_exact-dS_linear|/λ² shrinks {factor:.3}x"
    ))
}

fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, f64>>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split(','))
                .map(|(h, v)| {
                    v.parse::<f64>()
                        .map(|x| (h.to_string(), x))
                        .map_err(|e| format!("{h}={v}: {e}"))
                })
                .collect()
        })
        .collect()
}

fn thermal_channel() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().ok_or("temp path")?;
    let base = [
        "fermi-landauer",
        "thermal",
        "--L",
        "1",
        "--mass",
        "1",
        "--lambda",
        "0.01",
        "--T",
        "20",
        "--x0",
        "0.3",
        "--output",
        out,
    ];
    fermi_landauer_cli::execute(base).map_err(|e| e.to_string())?;
    let rows = read_csv(&dir.path().join("thermal_sweep.csv"))?;
    check(rows.len() == 400, format!("{} grid points", rows.len()))?;
    let mut min_scaled_margin = f64::INFINITY;
    let mut worst_diag: f64 = 0.0;
    let mut sign_errors = 0;
    for r in &rows {
        let (t_r, t_d, dq) = (r["T_R"], r["T_D"], r["dQ"]);
        let margin = r["landauer_margin"];
        if margin < -1e-15 * dq.abs() {
            min_scaled_margin = min_scaled_margin.min(margin / dq.abs());
        }
        if t_r == t_d {
            worst_diag = worst_diag.max(dq.abs()).max(r["dS_linear"].abs());
        } else if dq.signum() != (t_d - t_r).signum() || dq == 0.0 {
            sign_errors += 1;
        }
    }
    check(
        min_scaled_margin.is_infinite(),
        format!("margin/|ΔQ| = {min_scaled_margin:e}"),
    )?;
    check(sign_errors == 0, format!("{sign_errors} sign mismatches"))?;
    check(
        worst_diag <= 1e-14,
        format!("diagonal |ΔQ|,|ΔS| up to {worst_diag:e}"),
    )?;

    let p = 0.3;
    let single = [&base[..], &["--t-field", "1e-8", "--p", "0.3"]].concat();
    fermi_landauer_cli::execute(single).map_err(|e| e.to_string())?;
    let cold = &read_csv(&dir.path().join("thermal_sweep.csv"))?[0];
    let cavity = CavityConfig::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let mode = solve_modes(&cavity, 1).map_err(|e| e.to_string())?[0];
    let det = static_detector(&cavity, mode.omega, 0.01, 20.0, 0.3, p);
    let v_b = closed_form_static(&mode, &det, Amplitude::V).map_err(|e| e.to_string())?;
    let resonant_vacuum = 0.01f64.powi(2) * p * v_b.norm_sqr() * mode.omega;
    let rel = ((cold["dQ"] - resonant_vacuum) / resonant_vacuum).abs();
    check(
        rel < 1e-10,
        format!("T_R=1e-8 differs from the vacuum term by {rel:e}"),
    )?;
    Ok(format!(
        "400 points: no margin violations, {sign_errors} sign errors, diagonal max {worst_diag:.1e}, T_R=1e-8 rel diff {rel:.1e}"
    ))
}

fn resonant_oracle(p: f64) -> Result<OracleSystem, String> {
    let cavity = CavityConfig::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let gap = solve_modes(&cavity, 1).map_err(|e| e.to_string())?[0].omega;
    let det = static_detector(&cavity, gap, 0.01, 20.0, 0.3, p);
    OracleSystem::new(&cavity, &det, SwitchingProfile::Sharp, 2).map_err(|e| e.to_string())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let dt = 20.0 / 4096.0;
    let mut notes = Vec::new();
    let vacuum = resonant_oracle(0.0)?;
    let t_r = vacuum.modes()[0].omega / LN_2;
    let cases = [
        ("vacuum p=0", vacuum, FieldState::Vacuum),
        (
            "thermal p=0.3",
            resonant_oracle(0.3)?,
            FieldState::Thermal { temperature: t_r },
        ),
    ];
    for (name, system, field) in cases {
        let rows = compare_with_perturbation(&system, field, &[0.01, 0.005], dt)
            .map_err(|e| e.to_string())?;
        let rp = rows[0].rel_err_delta_p() / rows[1].rel_err_delta_p();
        let rq = rows[0].rel_err_heat() / rows[1].rel_err_heat();
        check(
            (3.0..=5.0).contains(&rp),
            format!("{name}: δp error ratio {rp}"),
        )?;
        check(
            (3.0..=5.0).contains(&rq),
            format!("{name}: ΔQ error ratio {rq}"),
        )?;
        notes.push(format!("{name} δp {rp:.3} ΔQ {rq:.3}"));
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("error ratios: {}, {elapsed:.1?}", notes.join(", ")))
}

fn oracle_integrity() -> Outcome {
    let system = resonant_oracle(0.0)?;
    let dt = 20.0 / 4096.0;
    let initial = system
        .initial_state(FieldState::Vacuum)
        .map_err(|e| e.to_string())?;
    let evolved = system.evolve(&initial, dt).map_err(|e| e.to_string())?;
    let purity_drift = (evolved.purity() - initial.purity()).abs();
    let halving = dt_halving(&system, FieldState::Vacuum, dt).map_err(|e| e.to_string())?;
    let c = halving.contraction();
    check(
        evolved.trace_drift < 1e-10,
        format!("trace drift {:e}", evolved.trace_drift),
    )?;
    check(
        purity_drift < 1e-9,
        format!("purity drift {purity_drift:e}"),
    )?;
    check(
        (3.5..=4.5).contains(&c),
        format!("dt-halving contraction {c}"),
    )?;
    Ok(format!(
        "trace drift {:.1e}, purity drift {purity_drift:.1e}, dt-halving contraction {c:.4}",
        evolved.trace_drift
    ))
}

fn run_binary(
    args: &[&str],
    out: &Path,
    threads: &str,
) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fermi-landauer"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env("FERMI_LANDAUER_THREADS", threads)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), format!("{args:?} exited with {status}"))?;
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(out).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let common = [
        "--L", "1", "--mass", "1", "--T", "20", "--x0", "0.3", "--seed", "11",
    ];
    let scenarios: Vec<Vec<&str>> = vec![
        vec!["modes", "--n-max", "30"],
        vec![
            "vacuum", "--omega", "2.2618", "--lambda", "0.01", "--p", "0.2", "--n-max", "40",
        ],
        vec![
            "vacuum",
            "--omega",
            "3.1",
            "--lambda",
            "0.01",
            "--p",
            "0.2",
            "--n-max",
            "12",
            "--switching",
            "cosine:0.1",
            "--velocity",
            "0.01",
            "--format",
            "json",
        ],
        vec!["thermal", "--lambda", "0.01"],
        vec![
            "oracle",
            "--lambda",
            "0.01",
            "--p",
            "0.3",
            "--t-field",
            "3",
            "--dt",
            "0.01",
        ],
        vec![
            "sweep",
            "--omega",
            "2.5",
            "--n-max",
            "10",
            "--p",
            "0.4",
            "--sweep",
            "lambda=0.001:0.01:4",
            "--sweep",
            "x0=0.1:0.9:3",
            "--samples",
            "6",
        ],
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, scenario) in scenarios.iter().enumerate() {
        let args: Vec<&str> = scenario.iter().chain(common.iter()).copied().collect();
        let first = run_binary(&args, &dir.path().join(format!("{i}a")), "1")?;
        let second = run_binary(&args, &dir.path().join(format!("{i}b")), "4")?;
        check(!first.is_empty(), format!("{} wrote nothing", scenario[0]))?;
        check(
            first == second,
            format!("{} outputs differ between runs", scenario[0]),
        )?;
        files += first.len();
    }
    Ok(format!(
        "{} scenarios, {files} files byte-identical across runs on 1 and 4 threads",
        scenarios.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("spectrum correctness", spectrum),
        ("orthonormality", orthonormality),
        ("coupling oracle", coupling_oracle),
        ("resonance dominance", resonance_dominance),
        ("vacuum channel", vacuum_channel),
        ("thermal channel", thermal_channel),
        ("oracle equivalence", oracle_equivalence),
        ("oracle integrity", oracle_integrity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", criteria.len());
}
