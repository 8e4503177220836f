//! Batch front end: flat `key = value` configuration, one command per run,
//! JSON and CSV artifacts written to an output directory.
//!
//! Every JSON artifact carries the schema tag, the command, the seed and the
//! fully resolved configuration. Wall-clock time goes only into
//! `metadata.json`, so the other artifacts are byte-identical across runs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::{make_number_state, random_finite_state, LengthScale, StateVector, C64};
use crate::joint::{
    build_process, condition_on_region, error_vectors, worst_case_errors, JointSampling, MeasurementConfig,
    MeasurementProcess, Regime,
};
use crate::kernel::{
    density_deviation, gaussian_kernel, identity_delta, outcome_distribution, profile_line, retro_error,
    MeasurementKernel, Wavefunction1d,
};
use crate::phase_space::{
    characteristic_function, coherent_state, default_wavevectors, husimi_q, measure_equality_oracle, moment_table,
    p_mixture_density, profile_axes, CoherentLabel, OracleTolerances, PhaseSpaceGrid, Profile, Rect, SCHEMA,
};

#[derive(Debug, Parser)]
#[command(name = "phasemeter", version, about = "Joint position-momentum measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable, wins over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Sampling profile: default or fine.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the optimal two-pointer measurement; emit rho.csv, q.csv and report.json.
    SimulateJoint,
    /// Husimi function of the configured state; emit q.csv and husimi.json.
    Husimi,
    /// Measure-equality oracle on two grid files; emit compare.json.
    Compare { first: PathBuf, second: PathBuf },
    /// Worst-case retrodictive and predictive errors; emit errors.json.
    ErrorReport,
    /// Condition on a readout region; emit posterior.json.
    Posterior,
    /// Single-coordinate kernel measurement; emit outcome.csv and kernel.json.
    #[command(name = "simulate-1d")]
    Simulate1d,
    /// Moment table and characteristic samples of a grid (or of the
    /// configured state's Husimi function); emit oracle.json.
    Oracle { grid: Option<PathBuf> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateJoint => "simulate-joint",
            Command::Husimi => "husimi",
            Command::Compare { .. } => "compare",
            Command::ErrorReport => "error-report",
            Command::Posterior => "posterior",
            Command::Simulate1d => "simulate-1d",
            Command::Oracle { .. } => "oracle",
        }
    }
}

/// Recognised keys and their defaults; `None` marks keys with no default.
const KEYS: &[(&str, Option<&str>)] = &[
    ("state", Some("fock:0")),
    ("stateFile", None),
    ("lambdaTarget", Some("1")),
    ("coupling", Some("1")),
    ("pointerWidth1", Some("optimal")),
    ("pointerWidth2", Some("optimal")),
    ("pointerOffset1", Some("0")),
    ("pointerOffset2", Some("0")),
    ("dim", Some("48")),
    ("errorDim", Some("6")),
    ("centreGrid", Some("true")),
    ("axes", Some("phase-space")),
    ("region", Some("-0.5,0.5,-0.5,0.5")),
    ("posteriorDim", Some("40")),
    ("maxOrder", Some("6")),
    ("kernel", Some("delta")),
    ("kernelFile", None),
    ("packetCenter", Some("0")),
    ("packetWidth", Some("1")),
    ("packetMomentum", Some("0")),
    ("lineHalf", Some("12")),
    ("profile", Some("default")),
    ("seed", Some("0")),
];

/// Resolved configuration: defaults, then the file, then overrides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn parse_assignment(line: &str, origin: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("{origin}: expected KEY=VALUE, got `{line}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    pub fn defaults() -> Self {
        let values = KEYS
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string())))
            .collect();
        RunConfig { values }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = parse_assignment(line, &format!("{origin}:{}", n + 1))?;
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::invalid("config", format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn text(&self, key: &str) -> &str {
        self.get(key).unwrap_or("")
    }

    fn number(&self, key: &str) -> Result<f64> {
        let raw = self.text(key);
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::invalid(key, format!("expected a number, got `{raw}`")))?;
        if !v.is_finite() {
            return Err(Error::invalid(key, format!("must be finite, got {raw}")));
        }
        Ok(v)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.number(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::invalid(key, format!("must be positive, got {v}")))
        }
    }

    fn count(&self, key: &str, lo: usize, hi: usize) -> Result<usize> {
        let raw = self.text(key);
        let v: usize = raw
            .parse()
            .map_err(|_| Error::invalid(key, format!("expected a whole number, got `{raw}`")))?;
        if v < lo || v > hi {
            return Err(Error::invalid(key, format!("must lie in {lo}..={hi}, got {v}")));
        }
        Ok(v)
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.text(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(Error::invalid(key, format!("expected true or false, got `{other}`"))),
        }
    }

    pub fn profile(&self) -> Result<Profile> {
        Profile::parse(self.text("profile"))
    }

    pub fn seed(&self) -> Result<u64> {
        let raw = self.text("seed");
        raw.parse()
            .map_err(|_| Error::invalid("seed", format!("expected a whole number, got `{raw}`")))
    }

    pub fn lambda(&self) -> Result<LengthScale> {
        LengthScale::new(self.positive("lambdaTarget")?)
    }

    /// The system state named by `state_file` or `state`.
    pub fn state(&self) -> Result<StateVector> {
        let lam = self.lambda()?;
        let dim = self.count("dim", 2, 400)?;
        if let Some(path) = self.get("stateFile") {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return StateVector::from_json(&text, lam);
        }
        parse_state(self.text("state"), dim, lam, self.seed()?)
    }

    /// Measurement configuration; optimal unless both widths are numbers.
    pub fn measurement(&self) -> Result<MeasurementConfig> {
        let lam = self.positive("lambdaTarget")?;
        let sampling = JointSampling::for_profile(self.profile()?);
        let w1 = self.text("pointerWidth1");
        let w2 = self.text("pointerWidth2");
        let mut cfg = match (w1, w2) {
            ("optimal", "optimal") => MeasurementConfig::optimal(lam, self.positive("coupling")?, sampling)?,
            ("optimal", _) | (_, "optimal") => {
                return Err(Error::invalid(
                    if w1 == "optimal" { "pointerWidth1" } else { "pointerWidth2" },
                    "give both pointer widths or neither",
                ))
            }
            _ => MeasurementConfig::explicit(
                self.number("pointerWidth1")?,
                self.number("pointerWidth2")?,
                self.number("coupling")?,
                lam,
                sampling,
            )?,
        };
        let (o1, o2) = (self.number("pointerOffset1")?, self.number("pointerOffset2")?);
        if o1 != 0.0 || o2 != 0.0 {
            cfg = cfg.with_offsets(o1, o2)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn process_for(&self, psi: &StateVector) -> Result<MeasurementProcess> {
        let cfg = self.measurement()?;
        let cfg = if self.flag("centreGrid")? { cfg.for_state(psi)? } else { cfg };
        build_process(&cfg)
    }

    pub fn region(&self) -> Result<Rect> {
        let raw = self.text("region");
        let parts: Vec<f64> = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid("region", format!("expected x_min,x_max,p_min,p_max, got `{raw}`")))?;
        match parts[..] {
            [a, b, c, d] => Rect::new(a, b, c, d),
            _ => Err(Error::invalid("region", format!("expected four numbers, got `{raw}`"))),
        }
    }

    pub fn kernel(&self) -> Result<MeasurementKernel> {
        if let Some(path) = self.get("kernelFile") {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let k: MeasurementKernel = serde_json::from_str(&text)?;
            k.validate()?;
            return Ok(k);
        }
        parse_kernel(self.text("kernel"))
    }
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::invalid(what, format!("`{s}` is not a finite number")))
}

/// `fock:N`, `coherent:X,P`, `displaced:N,X,P`, `random:L` (drawn from the
/// seed) or `superposition:N:RE:IM;N:RE:IM;…` (normalised).
pub fn parse_state(spec: &str, dim: usize, lam: LengthScale, seed: u64) -> Result<StateVector> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let level = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid("state", format!("`{s}` is not a number level")))
    };
    let nums = |s: &str| -> Result<Vec<f64>> { s.split(',').map(|t| parse_number(t, "state")).collect() };
    match kind {
        "fock" => make_number_state(level(args)?, dim, lam),
        "coherent" => match nums(args)?[..] {
            [x, p] => {
                let label = CoherentLabel::new(x, p, lam)?;
                let psi = coherent_state(&label, dim);
                let lost = 1.0 - psi.norm().powi(2);
                if lost > 1e-10 {
                    return Err(Error::Truncation(format!(
                        "coherent state at ({x}, {p}) loses {lost:.2e} of its norm in {dim} levels; raise dim"
                    )));
                }
                Ok(psi)
            }
            _ => Err(Error::invalid("state", "coherent needs X,P")),
        },
        "displaced" => {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::invalid("state", "displaced needs N,X,P"));
            }
            let n = level(parts[0])?;
            let (x, p) = (parse_number(parts[1], "state")?, parse_number(parts[2], "state")?);
            displaced_number_state(n, x, p, dim, lam)
        }
        "random" => random_finite_state(seed, level(args)?, dim, lam),
        "superposition" => {
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            for term in args.split(';').filter(|t| !t.trim().is_empty()) {
                let f: Vec<&str> = term.split(':').collect();
                if f.len() != 3 {
                    return Err(Error::invalid("state", format!("superposition term `{term}` is not N:RE:IM")));
                }
                let n = level(f[0])?;
                if n >= dim {
                    return Err(Error::Truncation(format!("level {n} does not fit in dim = {dim}")));
                }
                amps[n] += C64::new(parse_number(f[1], "state")?, parse_number(f[2], "state")?);
            }
            if amps.iter().all(|a| a.norm() == 0.0) {
                return Err(Error::invalid("state", "superposition has no weight"));
            }
            StateVector::normalized_from(amps, lam)
        }
        other => Err(Error::invalid("state", format!("unknown state form `{other}`"))),
    }
}

/// `D(x, p)|n>`, built by raising the coherent state with `a† − z*`.
pub fn displaced_number_state(n: usize, x: f64, p: f64, dim: usize, lam: LengthScale) -> Result<StateVector> {
    let label = CoherentLabel::new(x, p, lam)?;
    let z = label.z();
    let mut v: Vec<C64> = coherent_state(&label, dim).amplitudes().iter().copied().collect();
    for _ in 0..n {
        let mut next: Vec<C64> = v.iter().map(|c| c * -z.conj()).collect();
        for k in 1..dim {
            next[k] += v[k - 1] * (k as f64).sqrt();
        }
        v = next;
    }
    let psi = StateVector::normalized_from(v, lam)?;
    if psi.amplitude(dim - 1).norm() > 1e-8 {
        return Err(Error::Truncation(format!("displaced state reaches level {dim}; raise dim")));
    }
    Ok(psi)
}

/// `delta`, `delta:SHIFT`, `gaussian:WIDTH` or `gaussian:WIDTH,SHIFT`.
pub fn parse_kernel(spec: &str) -> Result<MeasurementKernel> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums: Vec<f64> = if args.trim().is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|t| parse_number(t, "kernel")).collect::<Result<_>>()?
    };
    match (kind, &nums[..]) {
        ("delta", []) => identity_delta(0.0),
        ("delta", [s]) => identity_delta(*s),
        ("gaussian", [w]) => gaussian_kernel(*w, 0.0),
        ("gaussian", [w, s]) => gaussian_kernel(*w, *s),
        _ => Err(Error::invalid("kernel", format!("cannot read `{spec}`"))),
    }
}

fn read_grid(path: &Path) -> Result<PhaseSpaceGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if path.extension().is_some_and(|e| e == "json") {
        PhaseSpaceGrid::from_json(&text)
    } else {
        PhaseSpaceGrid::from_csv(&text)
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialise")
}

fn envelope(command: &str, cfg: &RunConfig, result: Value) -> Result<String> {
    let doc = json!({
        "schema": SCHEMA,
        "command": command,
        "seed": cfg.seed()?,
        "config": cfg.values(),
        "result": result,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn notes(command: &str, cfg: &RunConfig) -> Vec<String> {
    let mut out = vec![format!("command={command}")];
    out.extend(cfg.values().iter().map(|(k, v)| format!("{k}={v}")));
    out
}

fn grid_summary(g: &PhaseSpaceGrid) -> Value {
    json!({
        "x_axis": g.x_axis(),
        "p_axis": g.p_axis(),
        "lambda": g.lambda().get(),
        "mass": g.mass(),
    })
}

fn simulate_joint(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let psi = cfg.state()?;
    let process = cfg.process_for(&psi)?;
    let j = process.evolve(&psi)?;
    let rho = process.pointer_distribution(&j)?;
    drop(j);
    let (ax, ap) = process.readout_axes();
    let q = husimi_q(&psi, ax, ap)?;
    let lam = process.lambda_target().get();
    let retro = error_vectors(&process, &psi, Regime::Retrodictive)?;
    let retro_moments = retro.moments();
    let c = retro.annihilator_residual(lam);
    drop(retro);
    let pred = error_vectors(&process, &psi, Regime::Predictive)?;
    let pred_moments = pred.moments();
    let d = pred.annihilator_residual(lam);
    drop(pred);
    // worst case over number states needs a grid centred on the origin
    let origin = build_process(&cfg.measurement()?)?;
    let error_dim = cfg.count("errorDim", 3, 64)?;
    let result = json!({
        "rho": grid_summary(&rho),
        "l1_to_husimi": rho.l1_distance(&q)?,
        "certificate": process.certificate().map(to_value),
        "state_errors": {
            "retrodictive": to_value(&retro_moments),
            "predictive": to_value(&pred_moments),
            "c_residual": c,
            "d_residual": d,
        },
        "retrodictive": to_value(&worst_case_errors(&origin, Regime::Retrodictive, error_dim)?),
        "predictive": to_value(&worst_case_errors(&origin, Regime::Predictive, error_dim)?),
    });
    let n = notes("simulate-joint", cfg);
    out.write("rho.csv", &rho.to_csv_with_notes(&n))?;
    out.write("q.csv", &q.to_csv_with_notes(&n))?;
    out.write("report.json", &envelope("simulate-joint", cfg, result)?)
}

fn husimi(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let psi = cfg.state()?;
    let (ax, ap) = match cfg.text("axes") {
        "phase-space" => profile_axes(cfg.profile()?, psi.scale()),
        "joint" => cfg.process_for(&psi)?.readout_axes(),
        other => return Err(Error::invalid("axes", format!("expected phase-space or joint, got `{other}`"))),
    };
    let q = husimi_q(&psi, ax, ap)?;
    let result = json!({ "q": grid_summary(&q), "centroid": q.centroid() });
    out.write("q.csv", &q.to_csv_with_notes(&notes("husimi", cfg)))?;
    out.write("husimi.json", &envelope("husimi", cfg, result)?)
}

fn compare(cfg: &RunConfig, first: &Path, second: &Path, out: &mut Artifacts) -> Result<()> {
    let a = read_grid(first)?;
    let b = read_grid(second)?;
    let report = measure_equality_oracle(
        &a,
        &b,
        cfg.count("maxOrder", 1, 12)?,
        &default_wavevectors(a.lambda().get()),
        OracleTolerances::default(),
    )?;
    let result = json!({
        "first": first.display().to_string(),
        "second": second.display().to_string(),
        "report": to_value(&report),
    });
    out.write("compare.json", &envelope("compare", cfg, result)?)
}

fn error_report(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let process = build_process(&cfg.measurement()?)?;
    let dim = cfg.count("errorDim", 3, 64)?;
    let result = json!({
        "retrodictive": to_value(&worst_case_errors(&process, Regime::Retrodictive, dim)?),
        "predictive": to_value(&worst_case_errors(&process, Regime::Predictive, dim)?),
    });
    out.write("errors.json", &envelope("error-report", cfg, result)?)
}

fn posterior(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let psi = cfg.state()?;
    let process = cfg.process_for(&psi)?;
    let region = cfg.region()?;
    let dim = cfg.count("posteriorDim", 1, 400)?;
    let lam_f = process.lambda_target();
    let j = process.evolve(&psi)?;
    let post = condition_on_region(&process, &j, &region, lam_f, dim)?;
    let rho = process.pointer_distribution(&j)?;
    drop(j);
    let (cx, cp) = region.center();
    let centre = coherent_state(&CoherentLabel::new(cx, cp, lam_f)?, dim);
    let (inside, mass) = rho.restricted(&region);
    let mixture = p_mixture_density(&inside.rescaled(1.0 / mass)?, lam_f, dim)?;
    let result = json!({
        "region": to_value(&region),
        "p_region": post.p_region,
        "cells": post.cells,
        "fidelity_with_centre": post.density.fidelity_with(&centre)?,
        "trace_distance_to_mixture": post.density.trace_distance(&mixture)?,
        "density": to_value(&post.density.to_serializable()),
    });
    out.write("posterior.json", &envelope("posterior", cfg, result)?)
}

fn simulate_1d(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let axis = profile_line(cfg.profile()?, cfg.positive("lineHalf")?)?;
    let psi = Wavefunction1d::gaussian_packet(
        axis,
        cfg.number("packetCenter")?,
        cfg.positive("packetWidth")?,
        cfg.number("packetMomentum")?,
    )?;
    let kernel = cfg.kernel()?;
    let outcome = outcome_distribution(&kernel, &psi)?;
    let deviation = density_deviation(&outcome, &psi).ok();
    let mut csv = String::new();
    for n in notes("simulate-1d", cfg) {
        let _ = writeln!(csv, "# {n}");
    }
    csv.push_str("mu,density\n");
    for (mu, v) in outcome.axis.points().iter().zip(&outcome.density) {
        let _ = writeln!(csv, "{mu},{v}");
    }
    let result = json!({
        "outcome_axis": outcome.axis,
        "mass": outcome.mass(),
        "retro_error": retro_error(&kernel, &psi)?,
        "deviation_from_density": deviation,
    });
    out.write("outcome.csv", &csv)?;
    out.write("kernel.json", &envelope("simulate-1d", cfg, result)?)
}

fn oracle(cfg: &RunConfig, grid: Option<&Path>, out: &mut Artifacts) -> Result<()> {
    let g = match grid {
        Some(path) => read_grid(path)?,
        None => {
            let psi = cfg.state()?;
            let (ax, ap) = profile_axes(cfg.profile()?, psi.scale());
            husimi_q(&psi, ax, ap)?
        }
    };
    let table = moment_table(&g, cfg.count("maxOrder", 1, 12)?);
    let samples: Vec<Value> = default_wavevectors(g.lambda().get())
        .iter()
        .map(|&(kx, kp)| {
            let v = characteristic_function(&g, kx, kp);
            json!({ "k_x": kx, "k_p": kp, "re": v.re, "im": v.im })
        })
        .collect();
    let result = json!({
        "grid": grid_summary(&g),
        "moments": to_value(&table),
        "characteristic": samples,
    });
    out.write("oracle.json", &envelope("oracle", cfg, result)?)
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    for item in &cli.set {
        let (k, v) = parse_assignment(item, "--set")?;
        cfg.set(&k, &v)?;
    }
    if let Some(p) = &cli.profile {
        cfg.set("profile", p)?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string())?;
    }
    cfg.profile()?;
    cfg.seed()?;
    Ok(cfg)
}

/// Runs one parsed invocation, returning the artifact names.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    let cfg = resolve(cli)?;
    let mut out = Artifacts::new(&cli.out)?;
    match &cli.command {
        Command::SimulateJoint => simulate_joint(&cfg, &mut out)?,
        Command::Husimi => husimi(&cfg, &mut out)?,
        Command::Compare { first, second } => compare(&cfg, first, second, &mut out)?,
        Command::ErrorReport => error_report(&cfg, &mut out)?,
        Command::Posterior => posterior(&cfg, &mut out)?,
        Command::Simulate1d => simulate_1d(&cfg, &mut out)?,
        Command::Oracle { grid } => oracle(&cfg, grid.as_deref(), &mut out)?,
    }
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "schema": SCHEMA,
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "outputs": out.written,
    });
    let names = out.written.clone();
    out.write("metadata.json", &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    Ok(names)
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_layers_and_unknown_keys() {
        let mut cfg = RunConfig::defaults();
        cfg.apply_text("# comment\nlambdaTarget = 2 # trailing\n\nstate=fock:3\n", "t").unwrap();
        assert_eq!(cfg.get("lambdaTarget"), Some("2"));
        cfg.set("lambdaTarget", "0.5").unwrap();
        assert_eq!(cfg.get("lambdaTarget"), Some("0.5"));
        match cfg.set("sigma", "1") {
            Err(Error::InvalidParameter { name, reason }) => {
                assert_eq!(name, "config");
                assert!(reason.contains("sigma"));
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.apply_text("no equals sign", "t").is_err());
    }

    #[test]
    fn negative_width_names_the_key() {
        let mut cfg = RunConfig::defaults();
        cfg.set("pointerWidth1", "-1").unwrap();
        cfg.set("pointerWidth2", "0.5").unwrap();
        let e = cfg.measurement().unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("pointerWidth1"));
    }

    #[test]
    fn state_forms() {
        let lam = LengthScale::new(1.0).unwrap();
        let s = parse_state("superposition:0:1:0;2:0:1", 8, lam, 0).unwrap();
        assert!((s.amplitude(2) - C64::new(0.0, 1.0 / 2f64.sqrt())).norm() < 1e-15);
        assert_eq!(parse_state("fock:2", 8, lam, 0).unwrap().support_level(), 2);
        assert_eq!(parse_state("random:3", 8, lam, 5).unwrap(), parse_state("random:3", 8, lam, 5).unwrap());
        assert_ne!(parse_state("random:3", 8, lam, 5).unwrap(), parse_state("random:3", 8, lam, 6).unwrap());
        let d = parse_state("displaced:1,0.5,-0.5", 48, lam, 0).unwrap();
        assert!((d.norm() - 1.0).abs() < 1e-12);
        assert!(parse_state("coherent:9,9", 16, lam, 0).is_err());
        assert!(parse_state("squeezed:1", 8, lam, 0).is_err());
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let lam = LengthScale::new(0.8).unwrap();
        let d = displaced_number_state(0, 0.3, -0.7, 40, lam).unwrap();
        let c = coherent_state(&CoherentLabel::new(0.3, -0.7, lam).unwrap(), 40);
        assert!((d.inner(&c).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_forms() {
        assert_eq!(parse_kernel("delta").unwrap(), identity_delta(0.0).unwrap());
        assert_eq!(parse_kernel("gaussian:0.5,0.1").unwrap(), gaussian_kernel(0.5, 0.1).unwrap());
        assert!(parse_kernel("gaussian:-1").is_err());
        assert!(parse_kernel("lorentzian:1").is_err());
    }
}
