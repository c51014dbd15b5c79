//! Configured numerical studies: convergence, absorbing boundaries, shoaling
//! over beaches and shelves, reflection by topography, bottom steepness and
//! reflection at a wall.
//!
//! A [`Scenario`] describes one evolution in nondimensional variables; a
//! [`Study`] runs one or more scenarios and reduces them to a [`Report`] of
//! named metrics and tables.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::analysis::{
    conserved_mass, count_crests, crest_metrics, error_norms, fitted_rate,
    greens_law, mean_level, reflected_wave_metrics, reflection_estimate, ErrorTriple,
    GaugeSeries, ShoalingTracker,
};
use crate::bathymetry::{Bathymetry, Profile};
use crate::models::{
    Boundary, BoundaryConditions, ManufacturedSolution, ModelKind, ModelParams,
    SemidiscreteSystem, State, SystemOptions, VelocityProjection,
};
use crate::solitary::{amplitude_from_speed, Geometry, KdvInitialData, SolitaryWave};
use crate::spline::{EndCondition, Partition, SplineSpace};
use crate::timestep::{integrate, integrate_observed, Control, RunConfig, RunRecord, StepControl};
use crate::{FemError, Result};

/// Standard gravity in m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Conversion between dimensional laboratory units and nondimensional
/// variables in which the reference depth is 1: lengths and elevations scale
/// with `h0`, times with `sqrt(h0 / g)`, velocities with `sqrt(g h0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLayer {
    pub h0: f64,
    pub g: f64,
}

impl ScalingLayer {
    pub fn new(h0: f64, g: f64) -> Result<Self> {
        if !(h0 > 0.0 && g > 0.0) || !h0.is_finite() || !g.is_finite() {
            return Err(FemError::Params(format!("scaling needs h0, g > 0, got {h0}, {g}")));
        }
        Ok(Self { h0, g })
    }

    pub fn time_scale(&self) -> f64 {
        (self.h0 / self.g).sqrt()
    }

    pub fn velocity_scale(&self) -> f64 {
        (self.g * self.h0).sqrt()
    }

    pub fn length_to_nd(&self, x: f64) -> f64 {
        x / self.h0
    }

    pub fn length_to_dim(&self, x: f64) -> f64 {
        x * self.h0
    }

    pub fn time_to_nd(&self, t: f64) -> f64 {
        t / self.time_scale()
    }

    pub fn time_to_dim(&self, t: f64) -> f64 {
        t * self.time_scale()
    }

    pub fn velocity_to_dim(&self, u: f64) -> f64 {
        u * self.velocity_scale()
    }

    /// The same scenario with every length, elevation and time expressed in
    /// nondimensional units. Slopes are unchanged.
    pub fn nondimensionalize(&self, sc: &Scenario) -> Scenario {
        let l = |x: f64| self.length_to_nd(x);
        let t = |x: f64| self.time_to_nd(x);
        let mut out = sc.clone();
        out.a = l(sc.a);
        out.b = l(sc.b);
        out.bathymetry = match sc.bathymetry {
            Profile::ShelfRamp { x_b, alpha, h1 } => Profile::ShelfRamp {
                x_b: l(x_b),
                alpha,
                h1: l(h1),
            },
            Profile::BeachWall { x_b, slope } => Profile::BeachWall { x_b: l(x_b), slope },
            Profile::SmoothStep {
                center,
                half_width,
                beta,
            } => Profile::SmoothStep {
                center: l(center),
                half_width: l(half_width),
                beta,
            },
            Profile::Hump {
                center,
                plateau_half,
                bridge_half,
                beta,
            } => Profile::Hump {
                center: l(center),
                plateau_half: l(plateau_half),
                bridge_half: l(bridge_half),
                beta,
            },
            ref p => p.clone(),
        };
        out.initial = match sc.initial {
            InitialSpec::Rest => InitialSpec::Rest,
            InitialSpec::Solitary { size, x0, scale, wave_params } => InitialSpec::Solitary {
                size: match size {
                    SolitarySize::Amplitude(a) => SolitarySize::Amplitude(l(a)),
                    other => other,
                },
                x0: l(x0),
                scale,
                wave_params,
            },
            InitialSpec::Kdv { a0, x0, geometry } => InitialSpec::Kdv {
                a0: l(a0),
                x0: l(x0),
                geometry: match geometry {
                    Geometry::FlatDepth(h) => Geometry::FlatDepth(l(h)),
                    g => g,
                },
            },
            InitialSpec::Pulse {
                amplitude,
                x0,
                wavenumber,
                moving,
            } => InitialSpec::Pulse {
                amplitude: l(amplitude),
                x0: l(x0),
                wavenumber: wavenumber.map(|k| k * self.h0),
                moving,
            },
        };
        out.t_final = t(sc.t_final);
        out.gauges = sc.gauges.iter().map(|&x| l(x)).collect();
        out.snapshots = sc.snapshots.iter().map(|&x| t(x)).collect();
        out
    }
}

/// How the size of a solitary wave is prescribed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolitarySize {
    Speed(f64),
    /// Maximum of `zeta`.
    Amplitude(f64),
    /// The amplitude `A` with `eps A / mu` equal to the amplitude of the
    /// `eps = mu = 1` wave of this speed: the wave keeps its shape in
    /// scaled variables as `eps = mu` varies.
    MatchedUrsell(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpec {
    Rest,
    /// Exact solitary wave of the flat-bottom system, multiplied by `scale`.
    /// `wave_params` overrides the `(eps, mu)` of the profile equation.
    Solitary {
        size: SolitarySize,
        x0: f64,
        scale: f64,
        wave_params: Option<(f64, f64)>,
    },
    /// KdV pulse with the velocity of the continuity equation.
    Kdv { a0: f64, x0: f64, geometry: Geometry },
    /// `amplitude sech^2(k (x - x0))`, at rest or moving in the positive
    /// direction; `k` defaults to the KdV value `sqrt(3 |amplitude|) / 2`.
    Pulse {
        amplitude: f64,
        x0: f64,
        wavenumber: Option<f64>,
        moving: bool,
    },
}

type Field = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

impl InitialSpec {
    /// `zeta_0` and `u_0` as `(value, slope)` pairs.
    pub fn fields(&self, eps: f64, mu: f64) -> Result<(Field, Field)> {
        Ok(match *self {
            InitialSpec::Rest => (Box::new(|_| (0.0, 0.0)), Box::new(|_| (0.0, 0.0))),
            InitialSpec::Solitary {
                size,
                x0,
                scale,
                wave_params,
            } => {
                let (we, wm) = wave_params.unwrap_or((eps, mu));
                let w = Arc::new(solitary_wave(we, wm, size)?);
                let w2 = Arc::clone(&w);
                (
                    Box::new(move |x| {
                        let (z, dz) = w.zeta_jet(x - x0);
                        (scale * z, scale * dz)
                    }),
                    Box::new(move |x| {
                        let (u, du) = w2.u_jet(x - x0);
                        (scale * u, scale * du)
                    }),
                )
            }
            InitialSpec::Kdv { a0, x0, geometry } => {
                let d = KdvInitialData::new(a0, x0, geometry)?;
                (Box::new(move |x| d.zeta(x)), Box::new(move |x| d.u(x)))
            }
            InitialSpec::Pulse {
                amplitude,
                x0,
                wavenumber,
                moving,
            } => {
                let k = wavenumber.unwrap_or(0.5 * (3.0 * amplitude.abs()).sqrt());
                if !(k > 0.0) {
                    return Err(FemError::Params("pulse needs a nonzero amplitude".into()));
                }
                let zeta = move |x: f64| {
                    let arg = k * (x - x0);
                    let s2 = 1.0 / arg.cosh().powi(2);
                    (amplitude * s2, -2.0 * amplitude * k * s2 * arg.tanh())
                };
                let c = 1.0 + 0.5 * amplitude;
                let u = move |x: f64| {
                    if !moving {
                        return (0.0, 0.0);
                    }
                    let (z, dz) = zeta(x);
                    let den = 1.0 + z;
                    (c * z / den, c * dz / (den * den))
                };
                (Box::new(zeta), Box::new(u))
            }
        })
    }
}

/// Solitary wave of the given size.
pub fn solitary_wave(eps: f64, mu: f64, size: SolitarySize) -> Result<SolitaryWave> {
    match size {
        SolitarySize::Speed(c) => SolitaryWave::new(eps, mu, c),
        SolitarySize::Amplitude(a) => SolitaryWave::from_amplitude(eps, mu, a),
        SolitarySize::MatchedUrsell(c) => {
            let a = amplitude_from_speed(1.0, c)? * mu / eps;
            SolitaryWave::from_amplitude(eps, mu, a)
        }
    }
}

/// One evolution: model, mesh, bottom, boundary and initial data, and what
/// to record. Units are nondimensional unless a [`ScalingLayer`] is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: ModelKind,
    pub eps: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    /// Spline order (4 for cubics).
    pub order: usize,
    pub quad_points: usize,
    pub bathymetry: Profile,
    pub initial: InitialSpec,
    pub bc: BoundaryConditions,
    pub sloped_absorbing: bool,
    pub velocity: VelocityProjection,
    pub t_final: f64,
    pub step: StepControl,
    pub observe_every: usize,
    pub gauges: Vec<f64>,
    pub snapshots: Vec<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            model: ModelKind::Cbs,
            eps: 1.0,
            mu: 1.0,
            a: 0.0,
            b: 1.0,
            n: 100,
            order: 4,
            quad_points: crate::assembly::ASSEMBLY_POINTS,
            bathymetry: Profile::Flat,
            initial: InitialSpec::Rest,
            bc: BoundaryConditions::reflective(),
            sloped_absorbing: false,
            velocity: VelocityProjection::L2,
            t_final: 1.0,
            step: StepControl::Courant(0.5),
            observe_every: 1,
            gauges: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

/// A scenario ready to run.
pub struct Prepared {
    pub system: SemidiscreteSystem,
    pub initial: State,
    pub run: RunConfig,
}

impl Prepared {
    pub fn space(&self) -> &SplineSpace {
        self.system.space()
    }
}

impl Scenario {
    pub fn space(&self) -> Result<SplineSpace> {
        SplineSpace::smooth(Partition::new(self.a, self.b, self.n)?, self.order, EndCondition::Free)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model, self.eps, self.mu)
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let space = self.space()?;
        let bathy = Bathymetry::new(self.bathymetry.clone())?;
        let opts = SystemOptions {
            quad_points: self.quad_points,
            sloped_absorbing: self.sloped_absorbing,
        };
        let system =
            SemidiscreteSystem::with_options(&space, &bathy, self.params()?, self.bc, None, opts)?;
        let (zeta0, u0) = self.initial.fields(self.eps, self.mu)?;
        let initial = system.project_initial(|x| zeta0(x).0, |x| u0(x), self.velocity)?;
        let run = RunConfig {
            t_final: self.t_final,
            step: self.step,
            observe_every: self.observe_every,
            gauges: self.gauges.clone(),
            snapshot_times: self.snapshots.clone(),
        };
        run.validate()?;
        Ok(Prepared {
            system,
            initial,
            run,
        })
    }

    pub fn run(&self) -> Result<(Prepared, RunRecord)> {
        let p = self.prepare()?;
        let rec = integrate(&p.system, &p.initial, &p.run)?;
        Ok((p, rec))
    }
}

/// A named table of numbers written as CSV. `NaN` marks an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation; `NaN` becomes an empty cell.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

/// Outcome of a study.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub name: String,
    /// Ordered `key = value` results.
    pub metrics: Vec<(String, f64)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.push((key.into(), v));
    }

    pub fn write_metrics(&self, out: &mut impl Write) -> Result<()> {
        for (k, v) in &self.metrics {
            writeln!(out, "{k} = {}", format_number(*v))?;
        }
        Ok(())
    }

    /// Writes `metrics.txt` and one CSV per table into `dir`, each through a
    /// temporary file renamed into place.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut buf = Vec::new();
        self.write_metrics(&mut buf)?;
        written.push(write_atomic(&dir.join("metrics.txt"), &buf)?);
        for t in &self.tables {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            written.push(write_atomic(&dir.join(format!("{}.csv", t.name)), &buf)?);
        }
        Ok(written)
    }
}

/// Writes `bytes` to a sibling temporary file and renames it to `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<std::path::PathBuf> {
    let name = path
        .file_name()
        .ok_or_else(|| FemError::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(path.to_path_buf())
}

/// Tables of snapshots `(x, zeta, u, eta_b)`, gauges `(t, zeta, u)` and the
/// mass trace of a run, converted to dimensional units when `scaling` is
/// given.
pub fn run_tables(
    p: &Prepared,
    rec: &RunRecord,
    samples: usize,
    scaling: Option<&ScalingLayer>,
) -> Result<Vec<Table>> {
    let space = p.space();
    let bathy = p.system.bathymetry();
    let (lx, lt, lu) = match scaling {
        Some(s) => (s.h0, s.time_scale(), s.velocity_scale()),
        None => (1.0, 1.0, 1.0),
    };
    let mut tables = Vec::new();
    let mut states: Vec<&State> = rec.snapshots.iter().collect();
    states.push(&rec.final_state);
    let part = space.partition();
    for (i, s) in states.iter().enumerate() {
        let name = if i + 1 == states.len() {
            "final".to_string()
        } else {
            format!("snapshot_{i:03}")
        };
        let mut t = Table::new(name, &["x", "zeta", "u", "eta_b"]);
        for j in 0..samples {
            let x = part.a() + part.length() * j as f64 / (samples - 1).max(1) as f64;
            t.push(vec![
                x * lx,
                space.eval(&s.zc, x, 0)? * lx,
                space.eval(&s.uc, x, 0)? * lu,
                bathy.depth(x)[0] * lx,
            ]);
        }
        tables.push(t);
    }
    let mut times = Table::new("snapshot_times", &["index", "t"]);
    for (i, s) in rec.snapshots.iter().enumerate() {
        times.push(vec![i as f64, s.t * lt]);
    }
    tables.push(times);
    for (i, g) in rec.gauges.iter().enumerate() {
        let mut t = Table::new(format!("gauge_{i:02}"), &["t", "zeta", "u"]);
        for ((&tt, &z), &u) in g.times.iter().zip(&g.zeta).zip(&g.u) {
            t.push(vec![tt * lt, z * lx, u * lu]);
        }
        tables.push(t);
    }
    let mut m = Table::new("mass", &["t", "mass"]);
    for &(t, v) in &rec.mass {
        m.push(vec![t * lt, v * lx * lx]);
    }
    tables.push(m);
    Ok(tables)
}

// ---------------------------------------------------------------------------
// Convergence

/// Manufactured-solution convergence study on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceProtocol {
    pub kind: ModelKind,
    pub eps: f64,
    pub mu: f64,
    pub beta: f64,
    pub t_final: f64,
    pub courant: f64,
    pub ns: Vec<usize>,
    pub velocity: VelocityProjection,
    pub quad_points: usize,
}

impl ConvergenceProtocol {
    pub fn standard(kind: ModelKind) -> Self {
        Self {
            kind,
            eps: 1.0,
            mu: 0.1,
            beta: 0.1,
            t_final: 0.25,
            courant: 0.25,
            ns: vec![64, 128, 256, 512],
            velocity: VelocityProjection::Elliptic,
            quad_points: crate::assembly::ASSEMBLY_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: ModelKind,
    /// `(N, zeta errors, u errors)`.
    pub rows: Vec<(usize, ErrorTriple, ErrorTriple)>,
}

impl ConvergenceTable {
    /// Least-squares rates `[zeta L2, Linf, H1, u L2, Linf, H1]`.
    pub fn fitted_rates(&self) -> [f64; 6] {
        let mut out = [f64::NAN; 6];
        for k in 0..6 {
            let pts: Vec<(usize, f64)> = self
                .rows
                .iter()
                .map(|(n, z, u)| (*n, if k < 3 { z.as_array()[k] } else { u.as_array()[k - 3] }))
                .collect();
            out[k] = fitted_rate(&pts).unwrap_or(f64::NAN);
        }
        out
    }

    /// Rows `N, error, rate` for both variables; rates compare consecutive
    /// rows.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            "convergence",
            &[
                "N",
                "zeta_l2",
                "zeta_l2_rate",
                "zeta_linf",
                "zeta_linf_rate",
                "zeta_h1",
                "zeta_h1_rate",
                "u_l2",
                "u_l2_rate",
                "u_linf",
                "u_linf_rate",
                "u_h1",
                "u_h1_rate",
            ],
        );
        for (i, (n, z, u)) in self.rows.iter().enumerate() {
            let mut row = vec![*n as f64];
            let prev = if i > 0 { Some(&self.rows[i - 1]) } else { None };
            for (k, e) in z.as_array().into_iter().chain(u.as_array()).enumerate() {
                row.push(e);
                let rate = prev.map_or(f64::NAN, |(pn, pz, pu)| {
                    let pe = if k < 3 { pz.as_array()[k] } else { pu.as_array()[k - 3] };
                    (pe / e).ln() / (*n as f64 / *pn as f64).ln()
                });
                row.push(rate);
            }
            t.push(row);
        }
        t
    }
}

pub fn run_convergence(p: &ConvergenceProtocol) -> Result<ConvergenceTable> {
    let params = ModelParams::new(p.kind, p.eps, p.mu)?;
    let exact = ManufacturedSolution::new(params, p.beta)?;
    let bathy = exact.bathymetry()?;
    let mut rows = Vec::with_capacity(p.ns.len());
    for &n in &p.ns {
        let space = SplineSpace::cubic(Partition::new(0.0, 1.0, n)?, EndCondition::Free)?;
        let opts = SystemOptions {
            quad_points: p.quad_points,
            ..SystemOptions::default()
        };
        let sys = SemidiscreteSystem::with_options(
            &space,
            &bathy,
            params,
            BoundaryConditions::reflective(),
            Some(Arc::new(exact)),
            opts,
        )?;
        let init = sys.project_initial(
            |x| exact.zeta(x, 0.0)[0],
            |x| {
                let u = exact.u(x, 0.0);
                (u[0], u[1])
            },
            p.velocity,
        )?;
        let rec = integrate(&sys, &init, &RunConfig::new(p.t_final, p.courant))?;
        let f = &rec.final_state;
        let t = f.t;
        let ez = error_norms(&space, &f.zc, |x| {
            let z = exact.zeta(x, t);
            (z[0], z[1])
        })?;
        let eu = error_norms(&space, &f.uc, |x| {
            let u = exact.u(x, t);
            (u[0], u[1])
        })?;
        rows.push((n, ez, eu));
    }
    Ok(ConvergenceTable { kind: p.kind, rows })
}

// ---------------------------------------------------------------------------
// Protocol scenarios

/// Speed of the reference solitary wave of the absorbing-boundary tests.
pub const REFERENCE_SPEED: f64 = 1.18112;

/// Solitary wave leaving `[0, 50]` through absorbing ends, `h = 0.025`,
/// `k/h = 1/2`, `T = 50`. For `Sw` the `eps = mu = 1` wave of the reference
/// speed is scaled by 0.1; otherwise the wave is the `eps = mu` wave with
/// [`SolitarySize::MatchedUrsell`].
pub fn absorbing_scenario(kind: ModelKind, eps: f64, mu: f64) -> Scenario {
    let initial = if kind == ModelKind::Sw {
        InitialSpec::Solitary {
            size: SolitarySize::Speed(REFERENCE_SPEED),
            x0: 25.0,
            scale: 0.1,
            wave_params: Some((1.0, 1.0)),
        }
    } else {
        InitialSpec::Solitary {
            size: SolitarySize::MatchedUrsell(REFERENCE_SPEED),
            x0: 25.0,
            scale: 1.0,
            wave_params: None,
        }
    };
    Scenario {
        model: kind,
        eps,
        mu,
        a: 0.0,
        b: 50.0,
        n: 2000,
        bc: BoundaryConditions::absorbing(),
        initial,
        t_final: 50.0,
        step: StepControl::Courant(0.5),
        ..Scenario::default()
    }
}

/// KdV pulse on the beach `eta_b = alpha x` over `[0, 1/alpha + 20]`, centered
/// where the depth is 1, wall at the shoreline, absorbing far end,
/// `N = 2000`, `2N` steps up to `T = 25`.
pub fn beach_scenario(alpha: f64, a0: f64) -> Scenario {
    let x0 = 1.0 / alpha;
    Scenario {
        model: ModelKind::Cbs,
        eps: 1.0,
        mu: 1.0,
        a: 0.0,
        b: x0 + 20.0,
        n: 2000,
        bathymetry: Profile::UniformSlope { alpha },
        initial: InitialSpec::Kdv {
            a0,
            x0,
            geometry: Geometry::Slope(alpha),
        },
        bc: BoundaryConditions {
            left: Boundary::Reflective,
            right: Boundary::Absorbing,
        },
        sloped_absorbing: true,
        t_final: 25.0,
        step: StepControl::Steps(4000),
        ..Scenario::default()
    }
}

/// Solitary wave of amplitude `a0` centered at 30 on `[0, 150]`, climbing a
/// ramp of slope `alpha` from `x_b` onto a shelf of depth `h1`; `N = 3000`,
/// `k/h = 1/2`, absorbing ends.
pub fn shelf_scenario(x_b: f64, alpha: f64, h1: f64, a0: f64, t_final: f64) -> Scenario {
    Scenario {
        model: ModelKind::Cbs,
        eps: 1.0,
        mu: 1.0,
        a: 0.0,
        b: 150.0,
        n: 3000,
        bathymetry: Profile::ShelfRamp { x_b, alpha, h1 },
        initial: InitialSpec::Solitary {
            size: SolitarySize::Amplitude(a0),
            x0: 30.0,
            scale: 1.0,
            wave_params: None,
        },
        bc: BoundaryConditions::absorbing(),
        t_final,
        step: StepControl::Courant(0.5),
        ..Scenario::default()
    }
}

/// Solitary wave of amplitude 0.5 (`eps = mu = 0.05`) crossing the smooth
/// shelf of height `beta` centered at 70 on `[0, 140]`, `N = 2000`, `2N`
/// steps up to `T = 89`.
pub fn sweep_scenario(kind: ModelKind, beta: f64) -> Scenario {
    Scenario {
        model: kind,
        eps: 0.05,
        mu: 0.05,
        a: 0.0,
        b: 140.0,
        n: 2000,
        bathymetry: Profile::SmoothStep {
            center: 70.0,
            half_width: 1.5,
            beta,
        },
        initial: InitialSpec::Solitary {
            size: SolitarySize::Amplitude(0.5),
            x0: 30.0,
            scale: 1.0,
            wave_params: None,
        },
        bc: BoundaryConditions::absorbing(),
        t_final: 89.0,
        step: StepControl::Steps(4000),
        ..Scenario::default()
    }
}

/// Dimensional wall experiment: depth 0.7 m over `[0, 70]` m, slope 1:50
/// from 50 m to a wall at 70 m, KdV pulse of amplitude `a0` m at 20 m,
/// `N = 2000`, `k/h = 1/2`, `T = 30` s. Gauges at 50, 66.25, 67.75 and 70 m.
pub fn wall_scenario(a0: f64) -> (Scenario, ScalingLayer) {
    let sc = Scenario {
        model: ModelKind::Cbs,
        eps: 1.0,
        mu: 1.0,
        a: 0.0,
        b: 70.0,
        n: 2000,
        bathymetry: Profile::BeachWall {
            x_b: 50.0,
            slope: 1.0 / 50.0,
        },
        initial: InitialSpec::Kdv {
            a0,
            x0: 20.0,
            geometry: Geometry::FlatDepth(0.7),
        },
        bc: BoundaryConditions {
            left: Boundary::Absorbing,
            right: Boundary::Reflective,
        },
        t_final: 30.0,
        step: StepControl::Courant(0.5),
        gauges: vec![50.0, 66.25, 67.75, 70.0],
        ..Scenario::default()
    };
    (sc, ScalingLayer { h0: 0.7, g: STANDARD_GRAVITY })
}

// ---------------------------------------------------------------------------
// Studies

/// Row of the reflection-by-slope table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionRowSpec {
    pub alpha: f64,
    pub a0: f64,
    pub theta: f64,
    /// Time at which the reflected wave is measured.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    /// Plain run: snapshots, gauges, mass and final crest.
    Run,
    Convergence(ConvergenceProtocol),
    /// `max |zeta(., T)|` once the waves have left.
    AbsorbingResidual,
    /// Crest amplitude at `T`; with a window, also the mean elevation of the
    /// reflected flat wave over `[x_crest + offset, b - margin]`.
    Beach { plateau: Option<(f64, f64)> },
    /// Reflected-wave measures over `[lo, hi]` for each row; the scenario
    /// must be a ramp onto a shelf.
    Reflection {
        rows: Vec<ReflectionRowSpec>,
        window: (f64, f64),
    },
    /// Leading wave amplitude at `T` and crest speed over `[t0, T]`.
    Shelf { speed_from: f64 },
    /// `(eta_b, zeta_max / a0)` from the moment the crest passes `x_start`
    /// until `max zeta / eta_b` reaches `stop_ratio`, for each
    /// `(slope, amplitude)` case.
    Shoaling {
        x_start: f64,
        stop_ratio: f64,
        cases: Vec<(f64, f64)>,
    },
    /// CBw against CBs for each `beta`.
    Sweep { betas: Vec<f64>, crest_fraction: f64 },
    /// Maximal elevation at the last gauge, taken as the wall.
    Wall,
}

/// A complete study description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub study: Study,
    pub scenario: Scenario,
    /// When present, the scenario is in dimensional units.
    pub scaling: Option<ScalingLayer>,
    /// Points per snapshot table.
    pub samples: usize,
    /// Gauge series to compare with, `(gauge index, path)`.
    pub references: Vec<(usize, String)>,
}

/// Runs a configured study.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg.name.clone());
    let sc = match &cfg.scaling {
        Some(s) => s.nondimensionalize(&cfg.scenario),
        None => cfg.scenario.clone(),
    };
    match &cfg.study {
        Study::Run => {
            let (p, rec) = sc.run()?;
            summarize_run(&mut report, &p, &rec, cfg.scaling.as_ref())?;
            report
                .tables
                .extend(run_tables(&p, &rec, cfg.samples, cfg.scaling.as_ref())?);
            compare_gauges(&mut report, &rec.gauges, cfg)?;
        }
        Study::Convergence(proto) => {
            let table = run_convergence(proto)?;
            let names = ["zeta_l2", "zeta_linf", "zeta_h1", "u_l2", "u_linf", "u_h1"];
            for (name, r) in names.iter().zip(table.fitted_rates()) {
                report.put(format!("rate_{name}"), r);
            }
            for (n, z, u) in &table.rows {
                for (name, e) in names.iter().zip(z.as_array().into_iter().chain(u.as_array())) {
                    report.put(format!("{name}_n{n}"), e);
                }
            }
            report.tables.push(table.to_table());
        }
        Study::AbsorbingResidual => {
            let (p, rec) = sc.run()?;
            let residual = max_abs(p.space(), &rec.final_state.zc, 20001)?;
            report.put("residual", residual);
            report.put("t", rec.final_state.t);
            report.tables.extend(run_tables(&p, &rec, cfg.samples, None)?);
        }
        Study::Beach { plateau } => {
            let (p, rec) = sc.run()?;
            let (amp, xc) = crest_metrics(p.space(), &rec.final_state.zc)?;
            report.put("amplitude", amp);
            report.put("x_crest", xc);
            report.put("t", rec.final_state.t);
            if let Some((offset, margin)) = plateau {
                let (lo, hi) = (xc + offset, sc.b - margin);
                let level = mean_level(p.space(), &rec.final_state.zc, lo, hi)?;
                report.put("reflected_level", level);
                if let (Profile::UniformSlope { alpha }, InitialSpec::Kdv { a0, .. }) =
                    (&sc.bathymetry, &sc.initial)
                {
                    report.put("reflected_estimate", reflection_estimate(*alpha, *a0));
                }
            }
            report.tables.extend(run_tables(&p, &rec, cfg.samples, None)?);
        }
        Study::Reflection { rows, window } => {
            let mut t = Table::new(
                "reflection",
                &["alpha", "a0", "ramp_length", "estimate", "amplitude", "wavelength", "theta", "t"],
            );
            for (i, row) in rows.iter().enumerate() {
                let m = reflection_row(&sc, row, *window)?;
                let len = match sc.bathymetry {
                    Profile::ShelfRamp { h1, .. } => (1.0 - h1) / row.alpha,
                    _ => f64::NAN,
                };
                report.put(format!("row{}_amplitude", i + 1), m.mean_height);
                report.put(format!("row{}_wavelength", i + 1), m.half_max_width);
                report.put(format!("row{}_max", i + 1), m.amplitude);
                t.push(vec![
                    row.alpha,
                    row.a0,
                    len,
                    reflection_estimate(row.alpha, row.a0),
                    m.mean_height,
                    m.half_max_width,
                    row.theta,
                    row.time,
                ]);
            }
            report.tables.push(t);
        }
        Study::Shelf { speed_from } => {
            let r = run_shelf_tracking(&sc, *speed_from)?;
            report.put("leading_amplitude", r.amplitude);
            report.put("leading_speed", r.speed);
            report.put("x_crest", r.x_crest);
            report.put("t", r.t);
            let mut track = Table::new("crest_track", &["t", "x_crest", "amplitude"]);
            for &(t, x, a) in &r.track {
                track.push(vec![t, x, a]);
            }
            report.tables.push(track);
            report.tables.extend(r.tables);
        }
        Study::Shoaling {
            x_start,
            stop_ratio,
            cases,
        } => {
            for (i, &(alpha, a0)) in cases.iter().enumerate() {
                let curve = shoaling_curve(&sc, alpha, a0, *x_start, *stop_ratio)?;
                let first = curve.first().map_or(f64::NAN, |c| c.1);
                let above = curve
                    .iter()
                    .filter(|(h, r)| *h > 0.5 && *r > greens_law(*h))
                    .count();
                report.put(format!("case{}_initial_ratio", i + 1), first);
                report.put(format!("case{}_points_above_greens_law", i + 1), above as f64);
                let mut t = Table::new(format!("shoaling_{:02}", i + 1), &["eta_b", "ratio", "greens_law"]);
                for &(h, r) in &curve {
                    t.push(vec![h, r, greens_law(h)]);
                }
                report.tables.push(t);
            }
        }
        Study::Sweep {
            betas,
            crest_fraction,
        } => {
            let mut t = Table::new("sweep", &["beta", "linf_difference", "crests_cbw", "crests_cbs"]);
            for &beta in betas {
                let row = sweep_case(&sc, beta, *crest_fraction)?;
                report.put(format!("beta{beta}_linf_difference"), row.linf_difference);
                report.put(format!("beta{beta}_crests_cbw"), row.crests_cbw as f64);
                report.put(format!("beta{beta}_crests_cbs"), row.crests_cbs as f64);
                t.push(vec![
                    beta,
                    row.linf_difference,
                    row.crests_cbw as f64,
                    row.crests_cbs as f64,
                ]);
            }
            report.tables.push(t);
        }
        Study::Wall => {
            let (p, rec) = sc.run()?;
            let wall = rec
                .gauges
                .last()
                .ok_or_else(|| FemError::Config("wall study needs a gauge at the wall".into()))?;
            let lx = cfg.scaling.map_or(1.0, |s| s.h0);
            report.put("runup", wall.max_zeta() * lx);
            for (i, g) in rec.gauges.iter().enumerate() {
                report.put(format!("gauge{i}_max"), g.max_zeta() * lx);
            }
            report
                .tables
                .extend(run_tables(&p, &rec, cfg.samples, cfg.scaling.as_ref())?);
            compare_gauges(&mut report, &rec.gauges, cfg)?;
        }
    }
    Ok(report)
}

fn summarize_run(
    report: &mut Report,
    p: &Prepared,
    rec: &RunRecord,
    scaling: Option<&ScalingLayer>,
) -> Result<()> {
    let (lx, lt) = scaling.map_or((1.0, 1.0), |s| (s.h0, s.time_scale()));
    let (amp, xc) = crest_metrics(p.space(), &rec.final_state.zc)?;
    report.put("t", rec.final_state.t * lt);
    report.put("steps", rec.steps as f64);
    report.put("k", rec.k * lt);
    report.put("final_amplitude", amp * lx);
    report.put("final_x_crest", xc * lx);
    let m0 = conserved_mass(p.space(), &p.initial.zc);
    let m1 = conserved_mass(p.space(), &rec.final_state.zc);
    report.put("mass_initial", m0 * lx * lx);
    report.put("mass_change", (m1 - m0) * lx * lx);
    Ok(())
}

fn compare_gauges(report: &mut Report, gauges: &[GaugeSeries], cfg: &ExperimentConfig) -> Result<()> {
    let (lx, lt) = cfg.scaling.map_or((1.0, 1.0), |s| (s.h0, s.time_scale()));
    for (idx, path) in &cfg.references {
        let g = gauges.get(*idx).ok_or_else(|| {
            FemError::Config(format!("reference for gauge {idx}, but only {} gauges", gauges.len()))
        })?;
        let times: Vec<f64> = g.times.iter().map(|t| t * lt).collect();
        let zeta: Vec<f64> = g.zeta.iter().map(|z| z * lx).collect();
        let reference = load_series(Path::new(path))?;
        let d = compare_reference(&times, &zeta, &reference.0, &reference.1)?;
        report.put(format!("gauge{idx}_amplitude_ratio"), d.amplitude_ratio);
        report.put(format!("gauge{idx}_l2_deviation"), d.l2_deviation);
        report.put(format!("gauge{idx}_time_shift"), d.time_shift);
    }
    Ok(())
}

/// Largest `|v|` over `samples` uniform points.
pub fn max_abs(space: &SplineSpace, c: &[f64], samples: usize) -> Result<f64> {
    let (_, v) = space.sample(c, samples, 0)?;
    Ok(v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Reflected-wave measures for one row: the ramp slope and the initial
/// amplitude of `base` are replaced, and the run stops at `row.time`.
pub fn reflection_row(
    base: &Scenario,
    row: &ReflectionRowSpec,
    window: (f64, f64),
) -> Result<crate::analysis::ReflectionMetrics> {
    let mut sc = base.clone();
    match &mut sc.bathymetry {
        Profile::ShelfRamp { alpha, .. } => *alpha = row.alpha,
        _ => return Err(FemError::Config("reflection rows need a shelf_ramp bottom".into())),
    }
    set_amplitude(&mut sc.initial, row.a0)?;
    sc.t_final = row.time;
    sc.snapshots.clear();
    sc.gauges.clear();
    let (p, rec) = sc.run()?;
    reflected_wave_metrics(p.space(), &rec.final_state.zc, window, row.theta)
}

fn set_amplitude(init: &mut InitialSpec, a: f64) -> Result<()> {
    match init {
        InitialSpec::Solitary { size, .. } => *size = SolitarySize::Amplitude(a),
        InitialSpec::Kdv { a0, .. } => *a0 = a,
        InitialSpec::Pulse { amplitude, .. } => *amplitude = a,
        InitialSpec::Rest => return Err(FemError::Config("no initial wave to resize".into())),
    }
    Ok(())
}

/// Result of a shelf run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShelfResult {
    pub amplitude: f64,
    pub speed: f64,
    pub x_crest: f64,
    pub t: f64,
    /// `(t, x_crest, amplitude)` at every step from `speed_from` on.
    pub track: Vec<(f64, f64, f64)>,
    pub tables: Vec<Table>,
}

fn run_shelf_tracking(sc: &Scenario, speed_from: f64) -> Result<ShelfResult> {
    let p = sc.prepare()?;
    let space = p.space().clone();
    let mut track = Vec::new();
    let rec = integrate_observed(&p.system, &p.initial, &p.run, |_, s| {
        if s.t >= speed_from - 1e-9 {
            let (a, x) = crest_metrics(&space, &s.zc)?;
            track.push((s.t, x, a));
        }
        Ok(Control::Continue)
    })?;
    if track.len() < 2 {
        return Err(FemError::Analysis("speed window holds fewer than two steps".into()));
    }
    // least-squares crest speed
    let m = track.len() as f64;
    let mt = track.iter().map(|r| r.0).sum::<f64>() / m;
    let mx = track.iter().map(|r| r.1).sum::<f64>() / m;
    let stx: f64 = track.iter().map(|r| (r.0 - mt) * (r.1 - mx)).sum();
    let stt: f64 = track.iter().map(|r| (r.0 - mt).powi(2)).sum();
    let &(t, x_crest, amplitude) = track.last().expect("nonempty");
    let tables = run_tables(&p, &rec, 1501, None)?;
    Ok(ShelfResult {
        amplitude,
        speed: stx / stt,
        x_crest,
        t,
        track,
        tables,
    })
}

/// Leading-wave amplitude and speed on the shelf.
pub fn run_shelf(x_b: f64, alpha: f64, h1: f64, a0: f64) -> Result<ShelfResult> {
    run_shelf_tracking(&shelf_scenario(x_b, alpha, h1, a0, 125.0), 120.0)
}

/// Shoaling curve of one `(slope, amplitude)` case on the scenario's ramp
/// or beach.
pub fn shoaling_curve(
    base: &Scenario,
    alpha: f64,
    a0: f64,
    x_start: f64,
    stop_ratio: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut sc = base.clone();
    match &mut sc.bathymetry {
        Profile::ShelfRamp { alpha: a, .. } | Profile::UniformSlope { alpha: a } => *a = alpha,
        Profile::BeachWall { slope, .. } => *slope = alpha,
        _ => return Err(FemError::Config("shoaling needs a sloping bottom".into())),
    }
    if let InitialSpec::Kdv {
        geometry: Geometry::Slope(s),
        ..
    } = &mut sc.initial
    {
        *s = alpha;
    }
    set_amplitude(&mut sc.initial, a0)?;
    sc.snapshots.clear();
    let p = sc.prepare()?;
    let rightward = match sc.initial {
        InitialSpec::Kdv {
            geometry: Geometry::Slope(_),
            ..
        } => false,
        _ => true,
    };
    let mut tracker = ShoalingTracker::new(p.space(), p.system.bathymetry(), a0, x_start, stop_ratio, rightward)?;
    integrate_observed(&p.system, &p.initial, &p.run, |_, s| tracker.observe(s.t, &s.zc))?;
    Ok(tracker.curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub linf_difference: f64,
    pub crests_cbw: usize,
    pub crests_cbs: usize,
}

/// Points used to compare the two final states and count crests.
const SWEEP_SAMPLES: usize = 20001;

fn sweep_case(base: &Scenario, beta: f64, crest_fraction: f64) -> Result<SweepRow> {
    let mut finals = Vec::with_capacity(2);
    let mut counts = Vec::with_capacity(2);
    for kind in [ModelKind::Cbw, ModelKind::Cbs] {
        let mut sc = base.clone();
        sc.model = kind;
        match &mut sc.bathymetry {
            Profile::SmoothStep { beta: b, .. } | Profile::Hump { beta: b, .. } => *b = beta,
            _ => return Err(FemError::Config("sweep needs a smooth_step or hump bottom".into())),
        }
        let (p, rec) = sc.run()?;
        let space = p.space().clone();
        let (m, _) = crest_metrics(&space, &rec.final_state.zc)?;
        counts.push(count_crests(&space, &rec.final_state.zc, crest_fraction * m, SWEEP_SAMPLES)?);
        finals.push((space, rec.final_state));
    }
    let (sw, fw) = &finals[0];
    let (ss, fs) = &finals[1];
    let (_, vw) = sw.sample(&fw.zc, SWEEP_SAMPLES, 0)?;
    let (_, vs) = ss.sample(&fs.zc, SWEEP_SAMPLES, 0)?;
    let linf = vw.iter().zip(&vs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(SweepRow {
        beta,
        linf_difference: linf,
        crests_cbw: counts[0],
        crests_cbs: counts[1],
    })
}

/// CBw against CBs over the smooth shelf for each `beta`.
pub fn run_steepness_sweep(betas: &[f64]) -> Result<Vec<SweepRow>> {
    let base = sweep_scenario(ModelKind::Cbs, 0.0);
    betas.iter().map(|&b| sweep_case(&base, b, 0.25)).collect()
}

/// `max |zeta(., 50)|` of the absorbing-boundary test.
pub fn run_absorbing_residual(kind: ModelKind, eps: f64, mu: f64) -> Result<f64> {
    let (p, rec) = absorbing_scenario(kind, eps, mu).run()?;
    max_abs(p.space(), &rec.final_state.zc, 20001)
}

/// `(amplitude, x_crest)` of the beach run at `T = 25`.
pub fn run_beach(alpha: f64, a0: f64) -> Result<(f64, f64)> {
    let (p, rec) = beach_scenario(alpha, a0).run()?;
    crest_metrics(p.space(), &rec.final_state.zc)
}

/// Mean elevation of the reflected flat wave of the beach run, between 10
/// units behind the crest and 5 units before the far end.
pub fn run_beach_reflection(alpha: f64, a0: f64) -> Result<f64> {
    let sc = beach_scenario(alpha, a0);
    let (p, rec) = sc.run()?;
    let (_, xc) = crest_metrics(p.space(), &rec.final_state.zc)?;
    mean_level(p.space(), &rec.final_state.zc, xc + 10.0, sc.b - 5.0)
}

/// Runup at the wall and the maximal elevation at every gauge, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct WallResult {
    pub runup: f64,
    pub gauge_max: Vec<(f64, f64)>,
    pub gauges: Vec<GaugeSeries>,
}

pub fn run_wall(a0: f64) -> Result<WallResult> {
    let (sc, scaling) = wall_scenario(a0);
    let (_, rec) = scaling.nondimensionalize(&sc).run()?;
    let lx = scaling.h0;
    let wall = rec.gauges.last().expect("wall gauge");
    Ok(WallResult {
        runup: wall.max_zeta() * lx,
        gauge_max: rec
            .gauges
            .iter()
            .map(|g| (g.x * lx, g.max_zeta() * lx))
            .collect(),
        gauges: rec.gauges.clone(),
    })
}

/// Qualitative topographies: a solitary wave passing into deeper water, a
/// solitary wave over a hump, and a wave of depression moving into
/// shallower water.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topography {
    Deepening,
    Hump,
    Depression,
}

impl std::str::FromStr for Topography {
    type Err = FemError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deepening" => Ok(Self::Deepening),
            "hump" => Ok(Self::Hump),
            "depression" => Ok(Self::Depression),
            other => Err(FemError::Config(format!("unknown topography '{other}'"))),
        }
    }
}

pub fn topography_scenario(kind: Topography) -> Scenario {
    let (bathymetry, initial) = match kind {
        Topography::Deepening => (
            Profile::SmoothStep {
                center: 75.0,
                half_width: 5.0,
                beta: -0.5,
            },
            InitialSpec::Solitary {
                size: SolitarySize::Amplitude(0.12),
                x0: 40.0,
                scale: 1.0,
                wave_params: None,
            },
        ),
        Topography::Hump => (
            Profile::Hump {
                center: 75.0,
                plateau_half: 5.0,
                bridge_half: 5.0,
                beta: 0.5,
            },
            InitialSpec::Solitary {
                size: SolitarySize::Amplitude(0.12),
                x0: 40.0,
                scale: 1.0,
                wave_params: None,
            },
        ),
        Topography::Depression => (
            Profile::SmoothStep {
                center: 75.0,
                half_width: 5.0,
                beta: 0.5,
            },
            InitialSpec::Pulse {
                amplitude: -0.12,
                x0: 40.0,
                wavenumber: None,
                moving: true,
            },
        ),
    };
    Scenario {
        model: ModelKind::Cbs,
        a: 0.0,
        b: 150.0,
        n: 3000,
        bathymetry,
        initial,
        bc: BoundaryConditions::absorbing(),
        t_final: 75.0,
        step: StepControl::Courant(0.5),
        snapshots: vec![15.0, 30.0, 45.0, 60.0],
        ..Scenario::default()
    }
}

pub fn run_topography(kind: Topography) -> Result<(Prepared, RunRecord)> {
    topography_scenario(kind).run()
}

// ---------------------------------------------------------------------------
// Reference data

/// Deviation of a computed gauge series from a reference series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    /// `max zeta / max zeta_ref` over the common time range.
    pub amplitude_ratio: f64,
    /// Relative L2 distance after the best shift.
    pub l2_deviation: f64,
    /// Shift `s` minimizing the distance of `zeta(t)` and `zeta_ref(t - s)`.
    pub time_shift: f64,
}

fn interp(ts: &[f64], vs: &[f64], t: f64) -> Option<f64> {
    if ts.is_empty() || t < ts[0] || t > *ts.last()? {
        return None;
    }
    let i = ts.partition_point(|&x| x <= t);
    if i == 0 {
        return Some(vs[0]);
    }
    if i >= ts.len() {
        return Some(vs[ts.len() - 1]);
    }
    let (t0, t1) = (ts[i - 1], ts[i]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    Some(vs[i - 1] * (1.0 - w) + vs[i] * w)
}

/// Number of shifts tried on each side of zero, and the shift range as a
/// fraction of the overlap.
const SHIFT_STEPS: usize = 200;
const SHIFT_FRACTION: f64 = 0.1;

/// Compares `(t, zeta)` with `(t_ref, zeta_ref)` on the reference grid
/// restricted to the overlap, with linear interpolation in time.
pub fn compare_reference(t: &[f64], zeta: &[f64], t_ref: &[f64], zeta_ref: &[f64]) -> Result<Deviation> {
    if t.len() != zeta.len() || t_ref.len() != zeta_ref.len() || t.len() < 2 || t_ref.len() < 2 {
        return Err(FemError::Analysis("series need matching lengths >= 2".into()));
    }
    let (lo, hi) = (t[0].max(t_ref[0]), t[t.len() - 1].min(t_ref[t_ref.len() - 1]));
    if !(hi > lo) {
        return Err(FemError::Analysis("series do not overlap in time".into()));
    }
    let grid: Vec<f64> = t_ref.iter().copied().filter(|&s| s >= lo && s <= hi).collect();
    if grid.len() < 2 {
        return Err(FemError::Analysis("overlap holds fewer than two reference samples".into()));
    }
    let max_of = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::NEG_INFINITY, f64::max);
    let amp = max_of(&mut grid.iter().filter_map(|&s| interp(t, zeta, s)));
    let amp_ref = max_of(&mut grid.iter().filter_map(|&s| interp(t_ref, zeta_ref, s)));
    let distance = |shift: f64| -> f64 {
        let (mut num, mut den, mut cnt) = (0.0, 0.0, 0usize);
        for &s in &grid {
            if let (Some(a), Some(b)) = (interp(t, zeta, s + shift), interp(t_ref, zeta_ref, s)) {
                num += (a - b).powi(2);
                den += b * b;
                cnt += 1;
            }
        }
        if cnt == 0 || den == 0.0 {
            if num == 0.0 && cnt > 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (num / den).sqrt()
        }
    };
    let span = SHIFT_FRACTION * (hi - lo);
    let mut best = (distance(0.0), 0.0);
    for i in 1..=SHIFT_STEPS {
        for sgn in [-1.0, 1.0] {
            let s = sgn * span * i as f64 / SHIFT_STEPS as f64;
            let d = distance(s);
            if d < best.0 {
                best = (d, s);
            }
        }
    }
    Ok(Deviation {
        amplitude_ratio: amp / amp_ref,
        l2_deviation: best.0,
        time_shift: best.1,
    })
}

/// Reads a `t,zeta` CSV (header optional, `#` comments allowed).
pub fn load_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FemError::Io(format!("{}: {e}", path.display())))?;
    parse_series(&text).map_err(|e| FemError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_series(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut ts, mut zs) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() >= 2 => {
                if let Some(&last) = ts.last() {
                    if v[0] <= last {
                        return Err(FemError::Config(format!("line {}: times must increase", i + 1)));
                    }
                }
                ts.push(v[0]);
                zs.push(v[1]);
            }
            _ if ts.is_empty() && zs.is_empty() && i == 0 => {}
            _ => return Err(FemError::Config(format!("line {}: expected 't,zeta'", i + 1))),
        }
    }
    if ts.len() < 2 {
        return Err(FemError::Config("fewer than two samples".into()));
    }
    Ok((ts, zs))
}
