//! Command line and config file handling.
//!
//! Both sources are flattened into one `key=value` table with dotted keys
//! (flags win over the file), which is then resolved into a [`RunConfig`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use fermi_landauer::{
    p_from_temperature, solve_modes, CavityConfig, DetectorConfig, ReferenceSpinor,
    SwitchingProfile, TemperatureConvention, Worldline,
};
use num_complex::Complex64;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Modes,
    Vacuum,
    Thermal,
    Oracle,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Modes => "modes",
            Scenario::Vacuum => "vacuum",
            Scenario::Thermal => "thermal",
            Scenario::Oracle => "oracle",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Gibbs,
    Paper,
}

/// Channel evaluated at each point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepChannel {
    Vacuum,
    Thermal,
}

#[derive(Debug, Parser)]
#[command(
    name = "fermi-landauer",
    version,
    about = "Detector-cavity heat and entropy exchange"
)]
pub struct Cli {
    /// Scenario to run; may also come from the config file.
    #[arg(value_enum)]
    pub scenario: Option<Scenario>,
    /// Flat key=value file with dotted keys, e.g. `cavity.L = 1`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cavity length.
    #[arg(long = "L", allow_hyphen_values = true)]
    pub length: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    /// Detector gap; thermal and oracle default to the resonant mode.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Interaction duration.
    #[arg(long = "T", allow_hyphen_values = true)]
    pub duration: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<f64>,
    /// Initial excited population.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "t_detector")]
    pub p: Option<f64>,
    /// Detector temperature, converted to `p` with `--convention`.
    #[arg(long, allow_hyphen_values = true)]
    pub t_detector: Option<f64>,
    /// Field temperature.
    #[arg(long, allow_hyphen_values = true)]
    pub t_field: Option<f64>,
    #[arg(long, visible_alias = "count")]
    pub n_max: Option<usize>,
    #[arg(long, value_enum)]
    pub convention: Option<Convention>,
    /// `sharp` or `cosine:r` with ramp fraction r in (0, 0.5).
    #[arg(long)]
    pub switching: Option<String>,
    /// Reference spinor as `re,im,re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
    /// Oracle time step; defaults to T/4096.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Oracle truncation (1 to 3 modes).
    #[arg(long)]
    pub n_modes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mode the thermal channel resonates with (1-based).
    #[arg(long)]
    pub resonant_mode: Option<usize>,
    /// Evaluate the thermal channel away from resonance or for moving detectors.
    #[arg(long)]
    pub allow_detuned: bool,
    /// Points per axis of the thermal temperature grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Worker threads; capped by FERMI_LANDAUER_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Sweep axis `NAME=start:stop:count[:log]`; repeat for a second axis.
    #[arg(long = "sweep")]
    pub sweep: Vec<String>,
    /// Draw this many seeded random points instead of the sweep grid.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub sweep_channel: Option<SweepChannel>,
}

/// Every key accepted in a config file.
pub const KEYS: &[&str] = &[
    "scenario",
    "cavity.L",
    "cavity.mass",
    "detector.omega",
    "detector.lambda",
    "detector.T",
    "detector.x0",
    "detector.velocity",
    "detector.p",
    "detector.T_D",
    "detector.eta",
    "detector.switching",
    "field.T_R",
    "run.n_max",
    "run.convention",
    "run.dt",
    "run.n_modes",
    "run.resonant_mode",
    "run.allow_detuned",
    "run.grid",
    "run.threads",
    "sweep.axes",
    "sweep.samples",
    "sweep.channel",
    "output.path",
    "output.format",
    "seed",
];

/// Keys a sweep axis may vary, by axis name.
pub const SWEEP_KEYS: &[(&str, &str)] = &[
    ("L", "cavity.L"),
    ("mass", "cavity.mass"),
    ("omega", "detector.omega"),
    ("lambda", "detector.lambda"),
    ("T", "detector.T"),
    ("x0", "detector.x0"),
    ("velocity", "detector.velocity"),
    ("p", "detector.p"),
    ("t_detector", "detector.T_D"),
    ("t_field", "field.T_R"),
];

/// Unresolved `key -> value` table.
pub type Settings = BTreeMap<String, String>;

pub fn parse_file(text: &str) -> Result<Settings, CliError> {
    let mut settings = Settings::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        settings.insert(key.to_string(), value.trim().to_string());
    }
    Ok(settings)
}

/// Parse arguments and the optional config file into a settings table.
pub fn parse_settings<I, T>(args: I) -> Result<(Settings, Option<usize>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::Clap)?;
    let mut settings = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_file(&text)?
        }
        None => Settings::new(),
    };
    let threads = cli.threads;
    overlay(&mut settings, cli);
    if let Some(t) = settings.remove("run.threads") {
        let from_file = parse_value::<usize>("run.threads", &t)?;
        return Ok((settings, threads.or(Some(from_file))));
    }
    Ok((settings, threads))
}

fn overlay(settings: &mut Settings, cli: Cli) {
    // p and T_D are alternatives; a flag for one displaces the other from the file.
    if cli.p.is_some() {
        settings.remove("detector.T_D");
    }
    if cli.t_detector.is_some() {
        settings.remove("detector.p");
    }
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            settings.insert(key.to_string(), v);
        }
    };
    let num = |v: Option<f64>| v.map(|x| x.to_string());
    let int = |v: Option<usize>| v.map(|x| x.to_string());
    set("scenario", cli.scenario.map(|s| s.name().to_string()));
    set("cavity.L", num(cli.length));
    set("cavity.mass", num(cli.mass));
    set("detector.omega", num(cli.omega));
    set("detector.lambda", num(cli.lambda));
    set("detector.T", num(cli.duration));
    set("detector.x0", num(cli.x0));
    set("detector.velocity", num(cli.velocity));
    set("detector.p", num(cli.p));
    set("detector.T_D", num(cli.t_detector));
    set("detector.eta", cli.eta);
    set("detector.switching", cli.switching);
    set("field.T_R", num(cli.t_field));
    set("run.n_max", int(cli.n_max));
    set("run.convention", cli.convention.map(enum_name));
    set("run.dt", num(cli.dt));
    set("run.n_modes", int(cli.n_modes));
    set("run.resonant_mode", int(cli.resonant_mode));
    set(
        "run.allow_detuned",
        cli.allow_detuned.then(|| "true".to_string()),
    );
    set("run.grid", int(cli.grid));
    set(
        "sweep.axes",
        (!cli.sweep.is_empty()).then(|| cli.sweep.join(",")),
    );
    set("sweep.samples", int(cli.samples));
    set("sweep.channel", cli.sweep_channel.map(enum_name));
    set("output.path", cli.output.map(|p| p.display().to_string()));
    set("output.format", cli.format.map(enum_name));
    set("seed", cli.seed.map(|s| s.to_string()));
}

fn enum_name<E: ValueEnum>(value: E) -> String {
    value
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{raw}`: {e}")))
}

fn parse_enum<E: ValueEnum>(key: &str, raw: &str) -> Result<E, CliError> {
    E::from_str(raw.trim(), true)
        .map_err(|_| CliError::Config(format!("`{key}`: unrecognized value `{raw}`")))
}

/// One axis of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub key: &'static str,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl SweepAxis {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("sweep axis `{spec}`: {why}"));
        let (name, range) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected NAME=start:stop:count[:log]"))?;
        let name = name.trim();
        let key = SWEEP_KEYS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, k)| *k)
            .ok_or_else(|| bad("unknown axis name"))?;
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let log = match parts.as_slice() {
            [_, _, _] => false,
            [_, _, _, "log"] => true,
            _ => return Err(bad("expected start:stop:count[:log]")),
        };
        let start: f64 = parse_value("sweep.axes", parts[0])?;
        let stop: f64 = parse_value("sweep.axes", parts[1])?;
        let count: usize = parse_value("sweep.axes", parts[2])?;
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(bad("count must be positive and bounds finite"));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(bad("log axes need positive bounds"));
        }
        Ok(SweepAxis {
            name: name.to_string(),
            key,
            start,
            stop,
            count,
            log,
        })
    }

    /// Value at fraction `s ∈ [0, 1]` of the range.
    pub fn at(&self, s: f64) -> f64 {
        if self.log {
            self.start * (self.stop / self.start).powf(s)
        } else {
            self.start + (self.stop - self.start) * s
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.at(i as f64 / (self.count - 1) as f64))
            .collect()
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={}:{}:{}",
            self.name, self.start, self.stop, self.count
        )?;
        if self.log {
            f.write_str(":log")?;
        }
        Ok(())
    }
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub cavity: CavityConfig,
    /// Absent only for the `modes` scenario.
    pub detector: Option<DetectorConfig>,
    pub n_max: usize,
    pub field_temperature: Option<f64>,
    pub detector_temperature: Option<f64>,
    pub convention: TemperatureConvention,
    pub switching: SwitchingProfile,
    pub dt: Option<f64>,
    pub n_modes: usize,
    pub resonant_mode: usize,
    pub allow_detuned: bool,
    pub grid: usize,
    pub sweep_axes: Vec<SweepAxis>,
    pub samples: Option<usize>,
    pub sweep_channel: SweepChannel,
    pub output: PathBuf,
    pub format: Format,
    pub seed: u64,
    /// Settings as given, used for per-point resolution in sweeps.
    pub settings: Settings,
}

struct Lookup<'a>(&'a Settings);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    fn require<T: FromStr>(&self, key: &str, scenario: Scenario) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| {
            CliError::Config(format!("scenario {} requires `{key}`", scenario.name()))
        })
    }
}

fn core_error(key: &str, err: fermi_landauer::Error) -> CliError {
    if err.is_numerical() {
        CliError::Numerical(err.to_string())
    } else {
        CliError::Config(format!("`{key}`: {err}"))
    }
}

pub fn parse_switching(raw: &str) -> Result<SwitchingProfile, CliError> {
    let raw = raw.trim();
    if raw == "sharp" {
        return Ok(SwitchingProfile::Sharp);
    }
    let fraction = raw
        .strip_prefix("cosine:")
        .ok_or_else(|| {
            CliError::Config(format!(
                "`detector.switching`: expected `sharp` or `cosine:r`, got `{raw}`"
            ))
        })
        .and_then(|r| parse_value::<f64>("detector.switching", r))?;
    SwitchingProfile::cosine_ramp(fraction).map_err(|e| core_error("detector.switching", e))
}

pub fn parse_eta(raw: &str) -> Result<ReferenceSpinor, CliError> {
    let parts = raw
        .split(',')
        .map(|s| parse_value::<f64>("detector.eta", s))
        .collect::<Result<Vec<_>, _>>()?;
    let [ur, ui, lr, li] = parts[..] else {
        return Err(CliError::Config(
            "`detector.eta`: expected four numbers re,im,re,im".into(),
        ));
    };
    ReferenceSpinor::new(Complex64::new(ur, ui), Complex64::new(lr, li))
        .map_err(|e| core_error("detector.eta", e))
}

fn switching_name(s: SwitchingProfile) -> String {
    match s {
        SwitchingProfile::Sharp => "sharp".into(),
        SwitchingProfile::CosineRamp { fraction } => format!("cosine:{fraction}"),
    }
}

/// Resolve a settings table into a validated configuration.
pub fn resolve(settings: &Settings) -> Result<RunConfig, CliError> {
    let look = Lookup(settings);
    let scenario: Scenario = match look.raw("scenario") {
        Some(raw) => parse_enum("scenario", raw)?,
        None => return Err(CliError::Config("no scenario given".into())),
    };
    let sweep_axes = look
        .raw("sweep.axes")
        .map(|raw| {
            raw.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(SweepAxis::parse)
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?
        .unwrap_or_default();
    let sweep_channel = look
        .raw("sweep.channel")
        .map(|raw| parse_enum("sweep.channel", raw))
        .transpose()?
        .unwrap_or(SweepChannel::Vacuum);

    if scenario == Scenario::Sweep {
        if sweep_axes.is_empty() || sweep_axes.len() > 2 {
            return Err(CliError::Config(
                "scenario sweep requires one or two `sweep.axes`".into(),
            ));
        }
        // Validate the base configuration at the first point of every axis.
        let mut probe = settings.clone();
        probe.insert(
            "scenario".into(),
            match sweep_channel {
                SweepChannel::Vacuum => "vacuum".into(),
                SweepChannel::Thermal => "thermal".into(),
            },
        );
        for axis in &sweep_axes {
            probe.insert(axis.key.to_string(), axis.start.to_string());
        }
        let mut cfg = resolve(&probe)?;
        if sweep_channel == SweepChannel::Thermal && cfg.field_temperature.is_none() {
            return Err(CliError::Config(
                "thermal sweeps need `field.T_R` and a detector population at every point".into(),
            ));
        }
        cfg.scenario = Scenario::Sweep;
        cfg.sweep_axes = sweep_axes;
        cfg.sweep_channel = sweep_channel;
        cfg.settings = settings.clone();
        return Ok(cfg);
    }

    let length: f64 = look.require("cavity.L", scenario)?;
    let mass: f64 = look.require("cavity.mass", scenario)?;
    let cavity = CavityConfig::new(length, mass).map_err(|e| core_error("cavity", e))?;

    let convention = match look.raw("run.convention") {
        Some(raw) => parse_enum::<Convention>("run.convention", raw)?,
        None => Convention::Gibbs,
    };
    let convention = match convention {
        Convention::Gibbs => TemperatureConvention::Gibbs,
        Convention::Paper => TemperatureConvention::Paper,
    };
    let switching = look
        .raw("detector.switching")
        .map(parse_switching)
        .transpose()?
        .unwrap_or_default();
    let eta = look
        .raw("detector.eta")
        .map(parse_eta)
        .transpose()?
        .unwrap_or_default();
    let resonant_mode: usize = look.get("run.resonant_mode")?.unwrap_or(1);
    if resonant_mode == 0 {
        return Err(CliError::Config("`run.resonant_mode` is 1-based".into()));
    }
    let n_modes: usize = look.get("run.n_modes")?.unwrap_or(2);
    let grid: usize = look.get("run.grid")?.unwrap_or(20);
    if grid < 2 {
        return Err(CliError::Config("`run.grid` must be at least 2".into()));
    }
    let field_temperature: Option<f64> = look.get("field.T_R")?;
    if let Some(t) = field_temperature {
        if t.is_nan() || t < 0.0 {
            return Err(CliError::Config(format!(
                "`field.T_R` = {t} lies outside [0, inf]"
            )));
        }
    }
    let detector_temperature: Option<f64> = look.get("detector.T_D")?;
    let given_p: Option<f64> = look.get("detector.p")?;
    if given_p.is_some() && detector_temperature.is_some() {
        return Err(CliError::Config(
            "give either `detector.p` or `detector.T_D`, not both".into(),
        ));
    }

    let n_max: usize = match scenario {
        Scenario::Modes => look.require("run.n_max", scenario)?,
        Scenario::Vacuum => look.require("run.n_max", scenario)?,
        _ => look.get("run.n_max")?.unwrap_or(0),
    };
    if n_max == 0 && matches!(scenario, Scenario::Modes | Scenario::Vacuum) {
        return Err(CliError::Config("`run.n_max` must be positive".into()));
    }

    let detector = match scenario {
        Scenario::Modes => None,
        _ => {
            let omega = match look.get::<f64>("detector.omega")? {
                Some(w) => w,
                None if scenario == Scenario::Vacuum => {
                    return Err(CliError::Config(
                        "scenario vacuum requires `detector.omega`".into(),
                    ))
                }
                None => {
                    solve_modes(&cavity, resonant_mode)
                        .map_err(|e| core_error("run.resonant_mode", e))?[resonant_mode - 1]
                        .omega
                }
            };
            let lambda: f64 = look.require("detector.lambda", scenario)?;
            let duration: f64 = look.require("detector.T", scenario)?;
            let x0: f64 = look.require("detector.x0", scenario)?;
            let velocity: f64 = look.get("detector.velocity")?.unwrap_or(0.0);
            let worldline = if velocity == 0.0 {
                Worldline::fixed(x0, &cavity)
            } else {
                Worldline::uniform(x0, velocity, &cavity, duration)
            }
            .map_err(|e| core_error("detector.x0", e))?;
            // Thermal grids choose p per grid point.
            let p = match (given_p, detector_temperature) {
                (Some(p), _) => p,
                (None, Some(t_d)) => p_from_temperature(t_d, omega, convention)
                    .map_err(|e| core_error("detector.T_D", e))?,
                (None, None) if scenario == Scenario::Thermal => 0.0,
                (None, None) => {
                    return Err(CliError::Config(format!(
                        "scenario {} requires `detector.p` or `detector.T_D`",
                        scenario.name()
                    )))
                }
            };
            Some(
                DetectorConfig::new(omega, lambda, duration, worldline, eta, p)
                    .map_err(|e| core_error("detector", e))?,
            )
        }
    };

    if scenario == Scenario::Thermal {
        let has_population = given_p.is_some() || detector_temperature.is_some();
        if field_temperature.is_some() != has_population {
            return Err(CliError::Config(
                "scenario thermal: give both `field.T_R` and a detector population for a single point, or neither for the grid".into(),
            ));
        }
    }

    let dt: Option<f64> = look.get("run.dt")?;
    if let Some(dt) = dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!(
                "`run.dt` = {dt} must be positive"
            )));
        }
    }
    if scenario == Scenario::Oracle {
        fermi_landauer::oracle::TruncatedSpace::new(n_modes)
            .map_err(|e| core_error("run.n_modes", e))?;
    }

    let samples: Option<usize> = look.get("sweep.samples")?;
    if samples == Some(0) {
        return Err(CliError::Config("`sweep.samples` must be positive".into()));
    }
    let format = look
        .raw("output.format")
        .map(|raw| parse_enum("output.format", raw))
        .transpose()?
        .unwrap_or(Format::Csv);
    let output = PathBuf::from(look.raw("output.path").unwrap_or("."));
    let seed: u64 = look.get("seed")?.unwrap_or(0);

    Ok(RunConfig {
        scenario,
        cavity,
        detector,
        n_max,
        field_temperature,
        detector_temperature,
        convention,
        switching,
        dt,
        n_modes,
        resonant_mode,
        allow_detuned: look.get("run.allow_detuned")?.unwrap_or(false),
        grid,
        sweep_axes,
        samples,
        sweep_channel,
        output,
        format,
        seed,
        settings: settings.clone(),
    })
}

impl RunConfig {
    pub fn detector(&self) -> &DetectorConfig {
        self.detector
            .as_ref()
            .expect("scenario resolved with a detector")
    }

    /// Resolved configuration as `key=value` pairs for file headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("scenario", self.scenario.name().into());
        push("cavity.L", num(self.cavity.length()));
        push("cavity.mass", num(self.cavity.mass()));
        if let Some(d) = &self.detector {
            push("detector.omega", num(d.gap));
            push("detector.lambda", num(d.coupling));
            push("detector.T", num(d.duration));
            push("detector.x0", num(d.worldline.x0()));
            push("detector.velocity", num(d.worldline.velocity()));
            let thermal_grid =
                self.scenario == Scenario::Thermal && self.field_temperature.is_none();
            if !thermal_grid {
                push("detector.p", num(d.excited_population));
            }
            let eta = d.eta.spinor();
            push(
                "detector.eta",
                [eta.upper.re, eta.upper.im, eta.lower.re, eta.lower.im]
                    .map(num)
                    .join(","),
            );
        }
        if let Some(t) = self.detector_temperature {
            push("detector.T_D", num(t));
        }
        push("detector.switching", switching_name(self.switching));
        if let Some(t) = self.field_temperature {
            push("field.T_R", num(t));
        }
        if matches!(self.scenario, Scenario::Modes | Scenario::Vacuum) {
            push("run.n_max", self.n_max.to_string());
        }
        push(
            "run.convention",
            match self.convention {
                TemperatureConvention::Gibbs => "gibbs".into(),
                TemperatureConvention::Paper => "paper".into(),
            },
        );
        match self.scenario {
            Scenario::Oracle => {
                push("run.n_modes", self.n_modes.to_string());
                if let Some(d) = &self.detector {
                    push("run.dt", num(self.oracle_dt(d)));
                }
            }
            Scenario::Thermal => {
                push("run.resonant_mode", self.resonant_mode.to_string());
                push("run.allow_detuned", self.allow_detuned.to_string());
                push("run.grid", self.grid.to_string());
            }
            Scenario::Sweep => {
                out.clear();
                out.push(("scenario".into(), "sweep".into()));
                out.push(("sweep.channel".into(), enum_name(self.sweep_channel)));
                for (k, v) in &self.settings {
                    let skip = matches!(
                        k.as_str(),
                        "scenario"
                            | "sweep.channel"
                            | "output.format"
                            | "output.path"
                            | "run.threads"
                            | "seed"
                    );
                    if !skip {
                        out.push((k.clone(), v.clone()));
                    }
                }
            }
            _ => {}
        }
        out.push(("output.format".into(), enum_name(self.format)));
        out.push(("seed".into(), self.seed.to_string()));
        out
    }

    pub fn oracle_dt(&self, detector: &DetectorConfig) -> f64 {
        self.dt.unwrap_or(detector.duration / 4096.0)
    }
}

fn num(x: f64) -> String {
    crate::emit::format_f64(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(args: &[&str]) -> Result<Settings, CliError> {
        let mut argv = vec!["fermi-landauer"];
        argv.extend_from_slice(args);
        parse_settings(argv).map(|(s, _)| s)
    }

    #[test]
    fn vacuum_example_resolves() {
        let s = settings(&[
            "vacuum", "--L", "1", "--mass", "1", "--omega", "2.2618", "--lambda", "0.01", "--T",
            "20", "--x0", "0.3", "--p", "0", "--n-max", "40",
        ])
        .unwrap();
        let cfg = resolve(&s).unwrap();
        assert_eq!(cfg.scenario, Scenario::Vacuum);
        assert_eq!(cfg.n_max, 40);
        assert_eq!(cfg.detector().gap, 2.2618);
    }

    #[test]
    fn missing_duration_is_named() {
        let s = settings(&[
            "vacuum", "--L", "1", "--mass", "1", "--omega", "2", "--lambda", "0.01", "--x0", "0.3",
            "--p", "0", "--n-max", "4",
        ])
        .unwrap();
        let err = resolve(&s).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("detector.T"), "{err}");
    }

    #[test]
    fn population_bound_is_cited() {
        let s = settings(&[
            "vacuum", "--L", "1", "--mass", "1", "--omega", "2", "--lambda", "0.01", "--T", "2",
            "--x0", "0.3", "--p", "1.5", "--n-max", "4",
        ])
        .unwrap();
        let err = resolve(&s).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("[0, 1]"), "{err}");
    }

    #[test]
    fn file_keys_are_checked_and_flags_win() {
        let file =
            "# cavity\ncavity.L = 2\ncavity.mass=0 # massless\nrun.n_max = 3\nscenario = modes\n";
        let s = parse_file(file).unwrap();
        assert_eq!(s["cavity.L"], "2");
        let err = parse_file("cavity.length = 1").unwrap_err();
        assert!(err.to_string().contains("cavity.length"));

        let mut merged = s.clone();
        merged.insert("cavity.L".into(), "1".into());
        assert_eq!(resolve(&merged).unwrap().cavity.length(), 1.0);
    }

    #[test]
    fn switching_and_eta_parse() {
        assert_eq!(parse_switching("sharp").unwrap(), SwitchingProfile::Sharp);
        assert_eq!(
            parse_switching("cosine:0.1").unwrap(),
            SwitchingProfile::CosineRamp { fraction: 0.1 }
        );
        assert!(parse_switching("cosine:0.7").is_err());
        assert!(parse_switching("smooth").is_err());
        let eta = parse_eta("0,0,2,0").unwrap();
        assert_eq!(eta.spinor().lower, Complex64::new(1.0, 0.0));
        assert!(parse_eta("1,0").is_err());
    }

    #[test]
    fn sweep_axes() {
        let axis = SweepAxis::parse("lambda=0.001:0.1:3:log").unwrap();
        let pts = axis.points();
        assert_eq!(pts.len(), 3);
        assert!((pts[1] - 0.01).abs() < 1e-15);
        assert!(SweepAxis::parse("zeta=0:1:3").is_err());
        assert!(SweepAxis::parse("T=0:1:3:log").is_err());
        assert_eq!(axis.to_string(), "lambda=0.001:0.1:3:log");
    }

    #[test]
    fn thermal_defaults_to_resonance() {
        let s = settings(&[
            "thermal", "--L", "1", "--mass", "1", "--lambda", "0.01", "--T", "20", "--x0", "0.3",
        ])
        .unwrap();
        let cfg = resolve(&s).unwrap();
        let omega_1 = solve_modes(&cfg.cavity, 1).unwrap()[0].omega;
        assert_eq!(cfg.detector().gap, omega_1);
        let partial = {
            let mut s = s.clone();
            s.insert("field.T_R".into(), "1".into());
            s
        };
        assert!(resolve(&partial).is_err());
    }
}
