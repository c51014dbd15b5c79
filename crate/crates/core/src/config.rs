//! Experiment configuration files.
//!
//! The format is a flat, sectioned `key = value` text:
//!
//! ```text
//! # comment
//! [model]
//! kind = cbs
//! eps = 1
//! ```
//!
//! Numbers accept a fraction `p/q`; lists are comma separated; tuples inside
//! a list are colon separated. Every key must be consumed by the schema of
//! the chosen study, bottom profile and initial data, so misspelled or
//! irrelevant keys are rejected. See `docs/FORMATS.md` for the schema.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::bathymetry::{Bathymetry, Profile};
use crate::experiments::{
    ConvergenceProtocol, ExperimentConfig, InitialSpec, ReflectionRowSpec, Scenario, ScalingLayer,
    SolitarySize, Study, STANDARD_GRAVITY,
};
use crate::models::{Boundary, BoundaryConditions, ModelKind, ModelParams, VelocityProjection};
use crate::solitary::Geometry;
use crate::timestep::StepControl;
use crate::{FemError, Result};

/// Sections in canonical order with every key they may hold.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["name", "study"]),
    ("model", &["kind", "eps", "mu"]),
    ("domain", &["a", "b", "n", "order", "quad_points"]),
    (
        "bathymetry",
        &[
            "profile",
            "alpha",
            "x_b",
            "h1",
            "slope",
            "center",
            "half_width",
            "plateau_half",
            "bridge_half",
            "beta",
        ],
    ),
    (
        "initial",
        &[
            "kind",
            "projection",
            "speed",
            "amplitude",
            "matched_speed",
            "x0",
            "scale",
            "wave_eps",
            "wave_mu",
            "a0",
            "geometry",
            "slope",
            "depth",
            "wavenumber",
            "moving",
        ],
    ),
    ("boundary", &["left", "right", "sloped_absorbing"]),
    ("time", &["t_final", "courant", "steps", "observe_every", "snapshots"]),
    ("scaling", &["h0", "g"]),
    ("output", &["samples", "gauges", "references"]),
    (
        "study",
        &[
            "beta",
            "ns",
            "plateau_offset",
            "plateau_margin",
            "rows",
            "window",
            "speed_from",
            "x_start",
            "stop_ratio",
            "cases",
            "betas",
            "crest_fraction",
        ],
    ),
];

pub const DEFAULT_SAMPLES: usize = 1001;
pub const PROPAGATION_COURANT: f64 = 0.5;
pub const CONVERGENCE_COURANT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Line(usize),
    Override,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    text: String,
    origin: Origin,
}

/// Parsed but uninterpreted configuration with consumed-key tracking.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), Entry>,
    used: std::cell::RefCell<BTreeSet<(String, String)>>,
}

fn config_err(msg: impl Into<String>) -> FemError {
    FemError::Config(msg.into())
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(format!("line {ln}: unterminated section header")))?
                    .trim()
                    .to_ascii_lowercase();
                if !is_ident(&name) {
                    return Err(config_err(format!("line {ln}: bad section name '{name}'")));
                }
                section = Some(name);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {ln}: expected 'key = value'")))?;
            let key = k.trim().to_ascii_lowercase();
            if !is_ident(&key) {
                return Err(config_err(format!("line {ln}: bad key '{}'", k.trim())));
            }
            let sec = section
                .clone()
                .ok_or_else(|| config_err(format!("line {ln}: key '{key}' outside any section")))?;
            let slot = (sec.clone(), key.clone());
            if let Some(prev) = raw.entries.get(&slot) {
                if let Origin::Line(p) = prev.origin {
                    return Err(config_err(format!(
                        "line {ln}: {sec}.{key} already set on line {p}"
                    )));
                }
            }
            raw.entries.insert(
                slot,
                Entry {
                    text: v.trim().to_string(),
                    origin: Origin::Line(ln),
                },
            );
        }
        Ok(raw)
    }

    /// Applies `section.key=value`, or `key=value` when exactly one section
    /// of the schema has that key.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| config_err(format!("override '{spec}': expected key=value")))?;
        let k = k.trim().to_ascii_lowercase();
        let (sec, key) = match k.split_once('.') {
            Some((s, key)) => (s.to_string(), key.to_string()),
            None => {
                let owners: Vec<&str> = SCHEMA
                    .iter()
                    .filter(|(_, keys)| keys.contains(&k.as_str()))
                    .map(|(s, _)| *s)
                    .collect();
                match owners.as_slice() {
                    [one] => (one.to_string(), k.clone()),
                    [] => return Err(config_err(format!("override '{spec}': unknown key '{k}'"))),
                    many => {
                        return Err(config_err(format!(
                            "override '{spec}': '{k}' is ambiguous, qualify it with one of {}",
                            many.join(", ")
                        )))
                    }
                }
            }
        };
        let known = SCHEMA
            .iter()
            .any(|(s, keys)| *s == sec && keys.contains(&key.as_str()));
        if !known {
            return Err(config_err(format!("override '{spec}': unknown key {sec}.{key}")));
        }
        self.entries.insert(
            (sec, key),
            Entry {
                text: v.trim().to_string(),
                origin: Origin::Override,
            },
        );
        Ok(())
    }

    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        let slot = (sec.to_string(), key.to_string());
        let e = self.entries.get(&slot);
        if e.is_some() {
            self.used.borrow_mut().insert(slot);
        }
        e
    }

    fn has(&self, sec: &str, key: &str) -> bool {
        self.entries
            .contains_key(&(sec.to_string(), key.to_string()))
    }

    fn field_err(&self, sec: &str, key: &str, msg: impl std::fmt::Display) -> FemError {
        let at = match self.entries.get(&(sec.to_string(), key.to_string())) {
            Some(Entry {
                origin: Origin::Line(l),
                ..
            }) => format!(" (line {l})"),
            Some(Entry {
                origin: Origin::Override,
                ..
            }) => " (override)".to_string(),
            None => String::new(),
        };
        config_err(format!("{sec}.{key}{at}: {msg}"))
    }

    fn typed<T>(&self, sec: &str, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => f(&e.text)
                .map(Some)
                .ok_or_else(|| self.field_err(sec, key, format!("expected {what}, got '{}'", e.text))),
        }
    }

    pub fn opt_f64(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        self.typed(sec, key, "a number", parse_number)
    }

    pub fn f64_or(&self, sec: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(sec, key)?.unwrap_or(default))
    }

    pub fn req_f64(&self, sec: &str, key: &str) -> Result<f64> {
        self.opt_f64(sec, key)?
            .ok_or_else(|| self.field_err(sec, key, "required"))
    }

    pub fn opt_usize(&self, sec: &str, key: &str) -> Result<Option<usize>> {
        self.typed(sec, key, "a nonnegative integer", |s| s.parse::<usize>().ok())
    }

    pub fn opt_bool(&self, sec: &str, key: &str) -> Result<Option<bool>> {
        self.typed(sec, key, "true or false", |s| match s.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    pub fn opt_str(&self, sec: &str, key: &str) -> Option<String> {
        self.get(sec, key).map(|e| e.text.clone())
    }

    pub fn opt_parse<T: std::str::FromStr<Err = FemError>>(&self, sec: &str, key: &str) -> Result<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => e
                .text
                .parse::<T>()
                .map(Some)
                .map_err(|err| self.field_err(sec, key, err)),
        }
    }

    pub fn list_f64(&self, sec: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.typed(sec, key, "a comma-separated list of numbers", |s| {
            split_list(s).map(parse_number).collect()
        })
    }

    /// List of colon-separated tuples of exactly `arity` numbers.
    pub fn list_tuples(&self, sec: &str, key: &str, arity: usize) -> Result<Option<Vec<Vec<f64>>>> {
        self.typed(sec, key, &format!("a list of {arity}-tuples a:b:..."), |s| {
            split_list(s)
                .map(|item| {
                    let parts: Option<Vec<f64>> = item.split(':').map(|p| parse_number(p.trim())).collect();
                    parts.filter(|p| p.len() == arity)
                })
                .collect()
        })
    }

    /// Errors on the first key nobody consumed.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for slot in self.entries.keys() {
            if !used.contains(slot) {
                let (sec, key) = slot;
                let known = SCHEMA
                    .iter()
                    .any(|(s, keys)| s == sec && keys.contains(&key.as_str()));
                let msg = if known {
                    "not used by this study, profile or initial data"
                } else {
                    "unknown key"
                };
                return Err(self.field_err(sec, key, msg));
            }
        }
        Ok(())
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// A finite decimal number or a fraction `p/q`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (p.trim().parse::<f64>().ok()?, q.trim().parse::<f64>().ok()?);
            if q == 0.0 {
                return None;
            }
            p / q
        }
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Reads `path` and applies `overrides`.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FemError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text, overrides)?;
    if cfg.name.is_empty() {
        cfg.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(cfg)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    let cfg = interpret(&raw)?;
    raw.finish()?;
    Ok(cfg)
}

fn positive(raw: &RawConfig, sec: &str, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(raw.field_err(sec, key, format!("must be positive, got {v}")))
    }
}

fn interpret(raw: &RawConfig) -> Result<ExperimentConfig> {
    let name = raw.opt_str("experiment", "name").unwrap_or_default();
    let study_name = raw
        .opt_str("experiment", "study")
        .unwrap_or_else(|| "run".to_string())
        .to_ascii_lowercase();
    let kind: ModelKind = raw
        .opt_parse("model", "kind")?
        .ok_or_else(|| raw.field_err("model", "kind", "required"))?;
    let convergence = study_name == "convergence";
    let eps = raw.f64_or("model", "eps", 1.0)?;
    let default_mu = match (kind, convergence) {
        (ModelKind::Sw, _) => 0.0,
        (_, true) => 0.1,
        _ => 1.0,
    };
    let mu = raw.f64_or("model", "mu", default_mu)?;
    ModelParams::new(kind, eps, mu).map_err(|e| config_err(format!("model: {e}")))?;
    let quad_points = raw
        .opt_usize("domain", "quad_points")?
        .unwrap_or(crate::assembly::ASSEMBLY_POINTS);
    if !(1..=10).contains(&quad_points) {
        return Err(raw.field_err("domain", "quad_points", "must lie in 1..=10"));
    }
    let samples = raw.opt_usize("output", "samples")?.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(raw.field_err("output", "samples", "must be at least 2"));
    }

    if convergence {
        let proto = ConvergenceProtocol {
            kind,
            eps,
            mu,
            beta: raw.f64_or("study", "beta", 0.1)?,
            t_final: positive(raw, "time", "t_final", raw.f64_or("time", "t_final", 0.25)?)?,
            courant: positive(raw, "time", "courant", raw.f64_or("time", "courant", CONVERGENCE_COURANT)?)?,
            ns: match raw.list_f64("study", "ns")? {
                None => vec![64, 128, 256, 512],
                Some(v) => v
                    .iter()
                    .map(|&x| {
                        if x >= 1.0 && x.fract() == 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(raw.field_err("study", "ns", format!("{x} is not a mesh size")))
                        }
                    })
                    .collect::<Result<_>>()?,
            },
            velocity: raw
                .opt_parse("initial", "projection")?
                .unwrap_or(VelocityProjection::Elliptic),
            quad_points,
        };
        if proto.ns.is_empty() {
            return Err(raw.field_err("study", "ns", "needs at least one mesh size"));
        }
        if proto.beta.abs() >= 1.0 {
            return Err(raw.field_err("study", "beta", "|beta| >= 1 makes the depth vanish"));
        }
        return Ok(ExperimentConfig {
            name,
            study: Study::Convergence(proto),
            scenario: Scenario::default(),
            scaling: None,
            samples,
            references: Vec::new(),
        });
    }

    let a = raw.f64_or("domain", "a", 0.0)?;
    let b = raw.req_f64("domain", "b")?;
    if !(b > a) {
        return Err(raw.field_err("domain", "b", format!("must exceed a = {a}")));
    }
    let n = raw
        .opt_usize("domain", "n")?
        .ok_or_else(|| raw.field_err("domain", "n", "required"))?;
    if n == 0 {
        return Err(raw.field_err("domain", "n", "must be positive"));
    }
    let order = raw.opt_usize("domain", "order")?.unwrap_or(4);
    if !(2..=6).contains(&order) {
        return Err(raw.field_err("domain", "order", "must lie in 2..=6"));
    }

    let bathymetry = interpret_bathymetry(raw)?;
    let scaling = if raw.has("scaling", "h0") || raw.has("scaling", "g") {
        let h0 = raw.req_f64("scaling", "h0")?;
        let g = raw.f64_or("scaling", "g", STANDARD_GRAVITY)?;
        Some(ScalingLayer::new(h0, g).map_err(|e| config_err(format!("scaling: {e}")))?)
    } else {
        None
    };
    {
        let probe = Scenario {
            a,
            b,
            bathymetry: bathymetry.clone(),
            ..Scenario::default()
        };
        let nd = match &scaling {
            Some(s) => s.nondimensionalize(&probe),
            None => probe,
        };
        Bathymetry::new(nd.bathymetry.clone())
            .and_then(|bt| bt.validate_on(nd.a, nd.b))
            .map_err(|e| config_err(format!("bathymetry: {e}")))?;
    }

    let initial = interpret_initial(raw)?;
    let velocity = raw
        .opt_parse("initial", "projection")?
        .unwrap_or(VelocityProjection::L2);
    let bc = BoundaryConditions {
        left: raw.opt_parse::<Boundary>("boundary", "left")?.unwrap_or_default(),
        right: raw.opt_parse::<Boundary>("boundary", "right")?.unwrap_or_default(),
    };
    let sloped_absorbing = raw.opt_bool("boundary", "sloped_absorbing")?.unwrap_or(false);

    let t_final = positive(raw, "time", "t_final", raw.req_f64("time", "t_final")?)?;
    let step = match (raw.opt_f64("time", "courant")?, raw.opt_usize("time", "steps")?) {
        (Some(_), Some(_)) => {
            return Err(raw.field_err("time", "steps", "give either courant or steps, not both"))
        }
        (Some(c), None) => StepControl::Courant(positive(raw, "time", "courant", c)?),
        (None, Some(m)) => {
            if m == 0 {
                return Err(raw.field_err("time", "steps", "must be positive"));
            }
            StepControl::Steps(m)
        }
        (None, None) => StepControl::Courant(PROPAGATION_COURANT),
    };
    let observe_every = raw.opt_usize("time", "observe_every")?.unwrap_or(1).max(1);
    let snapshots = raw.list_f64("time", "snapshots")?.unwrap_or_default();
    if let Some(s) = snapshots.iter().find(|&&s| !(s > 0.0 && s <= t_final)) {
        return Err(raw.field_err("time", "snapshots", format!("{s} is outside (0, t_final]")));
    }
    if snapshots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(raw.field_err("time", "snapshots", "times must increase"));
    }
    let gauges = raw.list_f64("output", "gauges")?.unwrap_or_default();
    if let Some(g) = gauges.iter().find(|&&g| !(g >= a && g <= b)) {
        return Err(raw.field_err("output", "gauges", format!("{g} is outside [{a}, {b}]")));
    }
    let references = match raw.opt_str("output", "references") {
        None => Vec::new(),
        Some(s) => split_list(&s)
            .map(|item| {
                let (i, p) = item.split_once(':').ok_or_else(|| {
                    raw.field_err("output", "references", format!("'{item}' is not gauge:path"))
                })?;
                let i: usize = i.trim().parse().map_err(|_| {
                    raw.field_err("output", "references", format!("'{i}' is not a gauge index"))
                })?;
                if i >= gauges.len() {
                    return Err(raw.field_err(
                        "output",
                        "references",
                        format!("gauge {i} does not exist ({} gauges)", gauges.len()),
                    ));
                }
                Ok((i, p.trim().to_string()))
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let study = interpret_study(raw, &study_name, &bathymetry, &gauges)?;
    let scenario = Scenario {
        model: kind,
        eps,
        mu,
        a,
        b,
        n,
        order,
        quad_points,
        bathymetry,
        initial,
        bc,
        sloped_absorbing,
        velocity,
        t_final,
        step,
        observe_every,
        gauges,
        snapshots,
    };
    Ok(ExperimentConfig {
        name,
        study,
        scenario,
        scaling,
        samples,
        references,
    })
}

fn interpret_bathymetry(raw: &RawConfig) -> Result<Profile> {
    let s = "bathymetry";
    let profile = raw
        .opt_str(s, "profile")
        .unwrap_or_else(|| "flat".into())
        .to_ascii_lowercase();
    Ok(match profile.as_str() {
        "flat" => Profile::Flat,
        "uniform_slope" => Profile::UniformSlope {
            alpha: raw.req_f64(s, "alpha")?,
        },
        "shelf_ramp" => Profile::ShelfRamp {
            x_b: raw.req_f64(s, "x_b")?,
            alpha: raw.req_f64(s, "alpha")?,
            h1: raw.req_f64(s, "h1")?,
        },
        "beach_wall" => Profile::BeachWall {
            x_b: raw.req_f64(s, "x_b")?,
            slope: raw.req_f64(s, "slope")?,
        },
        "smooth_step" => Profile::SmoothStep {
            center: raw.req_f64(s, "center")?,
            half_width: raw.req_f64(s, "half_width")?,
            beta: raw.req_f64(s, "beta")?,
        },
        "hump" => Profile::Hump {
            center: raw.req_f64(s, "center")?,
            plateau_half: raw.req_f64(s, "plateau_half")?,
            bridge_half: raw.req_f64(s, "bridge_half")?,
            beta: raw.req_f64(s, "beta")?,
        },
        "sine" => Profile::SineBottom {
            beta: raw.req_f64(s, "beta")?,
        },
        other => {
            return Err(raw.field_err(
                s,
                "profile",
                format!(
                    "unknown profile '{other}' (flat, uniform_slope, shelf_ramp, beach_wall, smooth_step, hump, sine)"
                ),
            ))
        }
    })
}

fn interpret_initial(raw: &RawConfig) -> Result<InitialSpec> {
    let s = "initial";
    let kind = raw
        .opt_str(s, "kind")
        .unwrap_or_else(|| "rest".into())
        .to_ascii_lowercase();
    Ok(match kind.as_str() {
        "rest" => InitialSpec::Rest,
        "solitary" => {
            let sizes = [
                raw.opt_f64(s, "speed")?.map(SolitarySize::Speed),
                raw.opt_f64(s, "amplitude")?.map(SolitarySize::Amplitude),
                raw.opt_f64(s, "matched_speed")?.map(SolitarySize::MatchedUrsell),
            ];
            let given: Vec<SolitarySize> = sizes.into_iter().flatten().collect();
            let size = match given.as_slice() {
                [one] => *one,
                _ => {
                    return Err(raw.field_err(
                        s,
                        "kind",
                        "a solitary wave needs exactly one of speed, amplitude, matched_speed",
                    ))
                }
            };
            let wave_params = match (raw.opt_f64(s, "wave_eps")?, raw.opt_f64(s, "wave_mu")?) {
                (Some(e), Some(m)) => Some((e, m)),
                (None, None) => None,
                _ => return Err(raw.field_err(s, "wave_eps", "wave_eps and wave_mu go together")),
            };
            InitialSpec::Solitary {
                size,
                x0: raw.req_f64(s, "x0")?,
                scale: raw.f64_or(s, "scale", 1.0)?,
                wave_params,
            }
        }
        "kdv" => {
            let geometry = match raw
                .opt_str(s, "geometry")
                .unwrap_or_else(|| "flat".into())
                .to_ascii_lowercase()
                .as_str()
            {
                "slope" => Geometry::Slope(raw.req_f64(s, "slope")?),
                "flat" => Geometry::FlatDepth(raw.f64_or(s, "depth", 1.0)?),
                other => {
                    return Err(raw.field_err(s, "geometry", format!("unknown geometry '{other}' (slope, flat)")))
                }
            };
            InitialSpec::Kdv {
                a0: raw.req_f64(s, "a0")?,
                x0: raw.req_f64(s, "x0")?,
                geometry,
            }
        }
        "pulse" => InitialSpec::Pulse {
            amplitude: raw.req_f64(s, "amplitude")?,
            x0: raw.req_f64(s, "x0")?,
            wavenumber: raw.opt_f64(s, "wavenumber")?,
            moving: raw.opt_bool(s, "moving")?.unwrap_or(false),
        },
        other => {
            return Err(raw.field_err(s, "kind", format!("unknown initial data '{other}' (rest, solitary, kdv, pulse)")))
        }
    })
}

fn interpret_study(raw: &RawConfig, name: &str, bathy: &Profile, gauges: &[f64]) -> Result<Study> {
    let s = "study";
    let window = |key: &str| -> Result<Option<(f64, f64)>> {
        match raw.list_f64(s, key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[1] > v[0] => Ok(Some((v[0], v[1]))),
            Some(_) => Err(raw.field_err(s, key, "expected 'lo, hi' with lo < hi")),
        }
    };
    Ok(match name {
        "run" => Study::Run,
        "absorbing" => Study::AbsorbingResidual,
        "beach" => {
            let plateau = match (raw.opt_f64(s, "plateau_offset")?, raw.opt_f64(s, "plateau_margin")?) {
                (Some(o), Some(m)) => Some((o, m)),
                (None, None) => None,
                _ => return Err(raw.field_err(s, "plateau_offset", "plateau_offset and plateau_margin go together")),
            };
            Study::Beach { plateau }
        }
        "reflection" => {
            if !matches!(bathy, Profile::ShelfRamp { .. }) {
                return Err(raw.field_err("bathymetry", "profile", "the reflection study needs shelf_ramp"));
            }
            let rows = raw
                .list_tuples(s, "rows", 4)?
                .ok_or_else(|| raw.field_err(s, "rows", "required: alpha:a0:theta:time, ..."))?
                .into_iter()
                .map(|r| ReflectionRowSpec {
                    alpha: r[0],
                    a0: r[1],
                    theta: r[2],
                    time: r[3],
                })
                .collect::<Vec<_>>();
            if let Some(r) = rows.iter().find(|r| !(r.theta > 0.0 && r.theta < 1.0) || !(r.time > 0.0)) {
                return Err(raw.field_err(s, "rows", format!("bad row {r:?}: need 0 < theta < 1, time > 0")));
            }
            Study::Reflection {
                rows,
                window: window("window")?.ok_or_else(|| raw.field_err(s, "window", "required"))?,
            }
        }
        "shelf" => Study::Shelf {
            speed_from: raw.req_f64(s, "speed_from")?,
        },
        "shoaling" => {
            let cases = raw
                .list_tuples(s, "cases", 2)?
                .ok_or_else(|| raw.field_err(s, "cases", "required: alpha:a0, ..."))?
                .into_iter()
                .map(|c| (c[0], c[1]))
                .collect();
            Study::Shoaling {
                x_start: raw.req_f64(s, "x_start")?,
                stop_ratio: positive(raw, s, "stop_ratio", raw.req_f64(s, "stop_ratio")?)?,
                cases,
            }
        }
        "sweep" => {
            if !matches!(bathy, Profile::SmoothStep { .. } | Profile::Hump { .. }) {
                return Err(raw.field_err("bathymetry", "profile", "the sweep needs smooth_step or hump"));
            }
            Study::Sweep {
                betas: raw
                    .list_f64(s, "betas")?
                    .ok_or_else(|| raw.field_err(s, "betas", "required"))?,
                crest_fraction: raw.f64_or(s, "crest_fraction", 0.25)?,
            }
        }
        "wall" => {
            if gauges.is_empty() {
                return Err(raw.field_err("output", "gauges", "the wall study needs a gauge at the wall"));
            }
            Study::Wall
        }
        other => {
            return Err(raw.field_err(
                "experiment",
                "study",
                format!("unknown study '{other}' (run, convergence, absorbing, beach, reflection, shelf, shoaling, sweep, wall)"),
            ))
        }
    })
}

/// Shortest text that parses back to `v`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")
}

fn study_name(s: &Study) -> &'static str {
    match s {
        Study::Run => "run",
        Study::Convergence(_) => "convergence",
        Study::AbsorbingResidual => "absorbing",
        Study::Beach { .. } => "beach",
        Study::Reflection { .. } => "reflection",
        Study::Shelf { .. } => "shelf",
        Study::Shoaling { .. } => "shoaling",
        Study::Sweep { .. } => "sweep",
        Study::Wall => "wall",
    }
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Reflective => "reflective",
        Boundary::Absorbing => "absorbing",
    }
}

fn projection_name(p: VelocityProjection) -> &'static str {
    match p {
        VelocityProjection::L2 => "l2",
        VelocityProjection::Elliptic => "elliptic",
    }
}

/// Canonical text of a configuration with every default spelled out.
/// Parsing the echo yields the same configuration.
pub fn echo_config(cfg: &ExperimentConfig) -> String {
    let mut o = String::new();
    let kv = |o: &mut String, k: &str, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };
    o.push_str("[experiment]\n");
    kv(&mut o, "name", cfg.name.clone());
    kv(&mut o, "study", study_name(&cfg.study).into());

    if let Study::Convergence(p) = &cfg.study {
        o.push_str("\n[model]\n");
        kv(&mut o, "kind", p.kind.name().into());
        kv(&mut o, "eps", fmt_num(p.eps));
        kv(&mut o, "mu", fmt_num(p.mu));
        o.push_str("\n[domain]\n");
        kv(&mut o, "quad_points", p.quad_points.to_string());
        o.push_str("\n[initial]\n");
        kv(&mut o, "projection", projection_name(p.velocity).into());
        o.push_str("\n[time]\n");
        kv(&mut o, "t_final", fmt_num(p.t_final));
        kv(&mut o, "courant", fmt_num(p.courant));
        o.push_str("\n[output]\n");
        kv(&mut o, "samples", cfg.samples.to_string());
        o.push_str("\n[study]\n");
        kv(&mut o, "beta", fmt_num(p.beta));
        kv(
            &mut o,
            "ns",
            p.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
        );
        return o;
    }

    let sc = &cfg.scenario;
    o.push_str("\n[model]\n");
    kv(&mut o, "kind", sc.model.name().into());
    kv(&mut o, "eps", fmt_num(sc.eps));
    kv(&mut o, "mu", fmt_num(sc.mu));

    o.push_str("\n[domain]\n");
    kv(&mut o, "a", fmt_num(sc.a));
    kv(&mut o, "b", fmt_num(sc.b));
    kv(&mut o, "n", sc.n.to_string());
    kv(&mut o, "order", sc.order.to_string());
    kv(&mut o, "quad_points", sc.quad_points.to_string());

    o.push_str("\n[bathymetry]\n");
    match &sc.bathymetry {
        Profile::Flat => kv(&mut o, "profile", "flat".into()),
        Profile::UniformSlope { alpha } => {
            kv(&mut o, "profile", "uniform_slope".into());
            kv(&mut o, "alpha", fmt_num(*alpha));
        }
        Profile::ShelfRamp { x_b, alpha, h1 } => {
            kv(&mut o, "profile", "shelf_ramp".into());
            kv(&mut o, "x_b", fmt_num(*x_b));
            kv(&mut o, "alpha", fmt_num(*alpha));
            kv(&mut o, "h1", fmt_num(*h1));
        }
        Profile::BeachWall { x_b, slope } => {
            kv(&mut o, "profile", "beach_wall".into());
            kv(&mut o, "x_b", fmt_num(*x_b));
            kv(&mut o, "slope", fmt_num(*slope));
        }
        Profile::SmoothStep {
            center,
            half_width,
            beta,
        } => {
            kv(&mut o, "profile", "smooth_step".into());
            kv(&mut o, "center", fmt_num(*center));
            kv(&mut o, "half_width", fmt_num(*half_width));
            kv(&mut o, "beta", fmt_num(*beta));
        }
        Profile::Hump {
            center,
            plateau_half,
            bridge_half,
            beta,
        } => {
            kv(&mut o, "profile", "hump".into());
            kv(&mut o, "center", fmt_num(*center));
            kv(&mut o, "plateau_half", fmt_num(*plateau_half));
            kv(&mut o, "bridge_half", fmt_num(*bridge_half));
            kv(&mut o, "beta", fmt_num(*beta));
        }
        Profile::SineBottom { beta } => {
            kv(&mut o, "profile", "sine".into());
            kv(&mut o, "beta", fmt_num(*beta));
        }
    }

    o.push_str("\n[initial]\n");
    match sc.initial {
        InitialSpec::Rest => kv(&mut o, "kind", "rest".into()),
        InitialSpec::Solitary {
            size,
            x0,
            scale,
            wave_params,
        } => {
            kv(&mut o, "kind", "solitary".into());
            match size {
                SolitarySize::Speed(c) => kv(&mut o, "speed", fmt_num(c)),
                SolitarySize::Amplitude(a) => kv(&mut o, "amplitude", fmt_num(a)),
                SolitarySize::MatchedUrsell(c) => kv(&mut o, "matched_speed", fmt_num(c)),
            }
            kv(&mut o, "x0", fmt_num(x0));
            kv(&mut o, "scale", fmt_num(scale));
            if let Some((e, m)) = wave_params {
                kv(&mut o, "wave_eps", fmt_num(e));
                kv(&mut o, "wave_mu", fmt_num(m));
            }
        }
        InitialSpec::Kdv { a0, x0, geometry } => {
            kv(&mut o, "kind", "kdv".into());
            kv(&mut o, "a0", fmt_num(a0));
            kv(&mut o, "x0", fmt_num(x0));
            match geometry {
                Geometry::Slope(al) => {
                    kv(&mut o, "geometry", "slope".into());
                    kv(&mut o, "slope", fmt_num(al));
                }
                Geometry::FlatDepth(h) => {
                    kv(&mut o, "geometry", "flat".into());
                    kv(&mut o, "depth", fmt_num(h));
                }
            }
        }
        InitialSpec::Pulse {
            amplitude,
            x0,
            wavenumber,
            moving,
        } => {
            kv(&mut o, "kind", "pulse".into());
            kv(&mut o, "amplitude", fmt_num(amplitude));
            kv(&mut o, "x0", fmt_num(x0));
            if let Some(k) = wavenumber {
                kv(&mut o, "wavenumber", fmt_num(k));
            }
            kv(&mut o, "moving", moving.to_string());
        }
    }
    kv(&mut o, "projection", projection_name(sc.velocity).into());

    o.push_str("\n[boundary]\n");
    kv(&mut o, "left", boundary_name(sc.bc.left).into());
    kv(&mut o, "right", boundary_name(sc.bc.right).into());
    kv(&mut o, "sloped_absorbing", sc.sloped_absorbing.to_string());

    o.push_str("\n[time]\n");
    kv(&mut o, "t_final", fmt_num(sc.t_final));
    match sc.step {
        StepControl::Courant(c) => kv(&mut o, "courant", fmt_num(c)),
        StepControl::Steps(m) => kv(&mut o, "steps", m.to_string()),
    }
    kv(&mut o, "observe_every", sc.observe_every.to_string());
    if !sc.snapshots.is_empty() {
        kv(&mut o, "snapshots", fmt_list(&sc.snapshots));
    }

    if let Some(s) = &cfg.scaling {
        o.push_str("\n[scaling]\n");
        kv(&mut o, "h0", fmt_num(s.h0));
        kv(&mut o, "g", fmt_num(s.g));
    }

    o.push_str("\n[output]\n");
    kv(&mut o, "samples", cfg.samples.to_string());
    if !sc.gauges.is_empty() {
        kv(&mut o, "gauges", fmt_list(&sc.gauges));
    }
    if !cfg.references.is_empty() {
        let refs: Vec<String> = cfg.references.iter().map(|(i, p)| format!("{i}:{p}")).collect();
        kv(&mut o, "references", refs.join(", "));
    }

    let mut study = String::new();
    match &cfg.study {
        Study::Beach { plateau: Some((off, margin)) } => {
            kv(&mut study, "plateau_offset", fmt_num(*off));
            kv(&mut study, "plateau_margin", fmt_num(*margin));
        }
        Study::Reflection { rows, window } => {
            let rows: Vec<String> = rows
                .iter()
                .map(|r| format!("{}:{}:{}:{}", fmt_num(r.alpha), fmt_num(r.a0), fmt_num(r.theta), fmt_num(r.time)))
                .collect();
            kv(&mut study, "rows", rows.join(", "));
            kv(&mut study, "window", fmt_list(&[window.0, window.1]));
        }
        Study::Shelf { speed_from } => kv(&mut study, "speed_from", fmt_num(*speed_from)),
        Study::Shoaling {
            x_start,
            stop_ratio,
            cases,
        } => {
            kv(&mut study, "x_start", fmt_num(*x_start));
            kv(&mut study, "stop_ratio", fmt_num(*stop_ratio));
            let cases: Vec<String> = cases
                .iter()
                .map(|(a, b)| format!("{}:{}", fmt_num(*a), fmt_num(*b)))
                .collect();
            kv(&mut study, "cases", cases.join(", "));
        }
        Study::Sweep {
            betas,
            crest_fraction,
        } => {
            kv(&mut study, "betas", fmt_list(betas));
            kv(&mut study, "crest_fraction", fmt_num(*crest_fraction));
        }
        _ => {}
    }
    if !study.is_empty() {
        o.push_str("\n[study]\n");
        o.push_str(&study);
    }
    o
}

/// Every reference file named by the configuration exists.
pub fn check_files(cfg: &ExperimentConfig) -> Result<()> {
    for (i, p) in &cfg.references {
        if !Path::new(p).is_file() {
            return Err(config_err(format!("output.references: gauge {i} reference '{p}' does not exist")));
        }
    }
    Ok(())
}
