//! Semidiscrete Galerkin right-hand sides for the shallow water (SW), flat
//! Boussinesq (CB), weakly varying (CBw) and strongly varying (CBs) bottom
//! systems.
//!
//! `zeta_h` lives in the full spline space `S_h`. `u_h` is stored on the
//! same full basis; its two end coefficients are zero at reflecting walls
//! and slaved to the local characteristic relation at absorbing ends.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::assembly::{form_matrix, BandedMatrix, MassForm, ASSEMBLY_POINTS};
use crate::assembly::coercivity_check;
use crate::bathymetry::{Bathymetry, Profile};
use crate::error::{FemError, Result};
use crate::spline::{gauss_rule, EndCondition, QuadTable, SplineSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Sw,
    Cb,
    Cbw,
    Cbs,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Sw, ModelKind::Cb, ModelKind::Cbw, ModelKind::Cbs];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sw => "sw",
            ModelKind::Cb => "cb",
            ModelKind::Cbw => "cbw",
            ModelKind::Cbs => "cbs",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = FemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sw" => Ok(ModelKind::Sw),
            "cb" => Ok(ModelKind::Cb),
            "cbw" => Ok(ModelKind::Cbw),
            "cbs" | "peregrine" => Ok(ModelKind::Cbs),
            other => Err(FemError::Params(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub eps: f64,
    pub mu: f64,
    pub kind: ModelKind,
}

impl ModelParams {
    pub fn new(kind: ModelKind, eps: f64, mu: f64) -> Result<Self> {
        let p = Self { eps, mu, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(FemError::Params(format!("eps must be positive, got {}", self.eps)));
        }
        match self.kind {
            ModelKind::Sw => {
                if self.mu != 0.0 {
                    return Err(FemError::Params("the shallow water system has mu = 0".into()));
                }
            }
            _ => {
                if !(self.mu > 0.0) || !self.mu.is_finite() {
                    return Err(FemError::Params(format!(
                        "{} needs mu > 0, got {}",
                        self.kind, self.mu
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bilinear form of the velocity mass operator.
    pub fn mass_form(&self, bathy: &Bathymetry) -> MassForm {
        match self.kind {
            ModelKind::Sw => MassForm::L2,
            ModelKind::Cb | ModelKind::Cbw => MassForm::WeightedH1 { mu: self.mu },
            ModelKind::Cbs => MassForm::Topographic {
                mu: self.mu,
                bathy: bathy.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Wall: `u = 0`.
    #[default]
    Reflective,
    /// Characteristic outflow condition with an undisturbed far field.
    Absorbing,
}

impl std::str::FromStr for Boundary {
    type Err = FemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reflective" | "wall" => Ok(Boundary::Reflective),
            "absorbing" | "characteristic" => Ok(Boundary::Absorbing),
            other => Err(FemError::Params(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundaryConditions {
    pub left: Boundary,
    pub right: Boundary,
}

impl BoundaryConditions {
    pub fn reflective() -> Self {
        Self::default()
    }

    pub fn absorbing() -> Self {
        Self {
            left: Boundary::Absorbing,
            right: Boundary::Absorbing,
        }
    }

    pub fn side(&self, side: Side) -> Boundary {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

fn check_vacuum(depth: f64) -> Result<()> {
    if depth > 0.0 {
        Ok(())
    } else {
        Err(FemError::Vacuum(depth))
    }
}

/// Boundary velocity of the characteristic condition with far field
/// `zeta = u = 0` and unit depth.
pub fn absorbing_bc_values(eps: f64, zeta: f64, side: Side) -> Result<f64> {
    absorbing_bc_values_at_depth(eps, 1.0, zeta, side)
}

/// Characteristic condition over a locally flat bottom of depth `d`:
/// `eps u = -+ 2 (sqrt(d + eps zeta) - sqrt(d))`.
pub fn absorbing_bc_values_at_depth(eps: f64, d: f64, zeta: f64, side: Side) -> Result<f64> {
    let total = d + eps * zeta;
    check_vacuum(total)?;
    // difference of square roots without cancellation
    let rise = zeta / (total.sqrt() + d.sqrt());
    Ok(match side {
        Side::Left => -2.0 * rise,
        Side::Right => 2.0 * rise,
    })
}

/// Time derivative of [`absorbing_bc_values`].
pub fn absorbing_bc_rates(eps: f64, zeta: f64, zeta_dot: f64, side: Side) -> Result<f64> {
    absorbing_bc_rates_at_depth(eps, 1.0, zeta, zeta_dot, side)
}

pub fn absorbing_bc_rates_at_depth(
    eps: f64,
    d: f64,
    zeta: f64,
    zeta_dot: f64,
    side: Side,
) -> Result<f64> {
    let total = d + eps * zeta;
    check_vacuum(total)?;
    let r = zeta_dot / total.sqrt();
    Ok(match side {
        Side::Left => -r,
        Side::Right => r,
    })
}

/// Source terms `(f_zeta, f_u)` added to the two equations.
pub trait Forcing: Send + Sync + fmt::Debug {
    fn f_zeta(&self, x: f64, t: f64) -> f64;
    fn f_u(&self, x: f64, t: f64) -> f64;
}

/// Smooth exact solution on `[0, 1]` over `eta_b = 1 - beta sin(pi x)`:
/// `zeta = e^{2t}(cos pi x + x + 2)`, `u = e^{xt}(sin pi x + x^3 - x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub params: ModelParams,
    pub beta: f64,
}

impl ManufacturedSolution {
    pub fn new(params: ModelParams, beta: f64) -> Result<Self> {
        params.validate()?;
        if params.kind == ModelKind::Cb && beta != 0.0 {
            return Err(FemError::Params("cb is posed over a flat bottom".into()));
        }
        Ok(Self { params, beta })
    }

    pub fn bathymetry(&self) -> Result<Bathymetry> {
        if self.beta == 0.0 {
            Ok(Bathymetry::flat())
        } else {
            Bathymetry::new(Profile::SineBottom { beta: self.beta })
        }
    }

    fn eta_b(&self, x: f64) -> [f64; 3] {
        let (s, c) = (PI * x).sin_cos();
        [1.0 - self.beta * s, -self.beta * PI * c, self.beta * PI * PI * s]
    }

    /// `[zeta, zeta_x, zeta_t]`.
    pub fn zeta(&self, x: f64, t: f64) -> [f64; 3] {
        let e = (2.0 * t).exp();
        let (s, c) = (PI * x).sin_cos();
        let v = c + x + 2.0;
        [e * v, e * (1.0 - PI * s), 2.0 * e * v]
    }

    /// `s(x) = sin pi x + x^3 - x^2` and its first three derivatives.
    fn shape(x: f64) -> [f64; 4] {
        let (s, c) = (PI * x).sin_cos();
        [
            s + x.powi(3) - x * x,
            PI * c + 3.0 * x * x - 2.0 * x,
            -PI * PI * s + 6.0 * x - 2.0,
            -PI.powi(3) * c + 6.0,
        ]
    }

    /// `[u, u_x, u_t, u_tx, u_txx]`.
    pub fn u(&self, x: f64, t: f64) -> [f64; 5] {
        let e = (x * t).exp();
        let [s, s1, s2, _] = Self::shape(x);
        let xt = x * t;
        [
            e * s,
            e * (t * s + s1),
            e * x * s,
            e * ((1.0 + xt) * s + x * s1),
            e * (t * (1.0 + xt) * s + t * x * s1 + t * s + (2.0 + xt) * s1 + x * s2),
        ]
    }
}

impl Forcing for ManufacturedSolution {
    fn f_zeta(&self, x: f64, t: f64) -> f64 {
        let eps = self.params.eps;
        let [z, zx, zt] = self.zeta(x, t);
        let [u, ux, ..] = self.u(x, t);
        let [hb, hb1, _] = self.eta_b(x);
        zt + eps * (zx * u + z * ux) + hb1 * u + hb * ux
    }

    fn f_u(&self, x: f64, t: f64) -> f64 {
        let ModelParams { eps, mu, kind } = self.params;
        let [_, zx, _] = self.zeta(x, t);
        let [u, ux, ut, utx, utxx] = self.u(x, t);
        let flux = zx + eps * u * ux;
        match kind {
            ModelKind::Sw => ut + flux,
            ModelKind::Cb | ModelKind::Cbw => ut + flux - mu / 3.0 * utxx,
            ModelKind::Cbs => {
                // divided by eta_b: the weak load is (eta_b f_u, chi)
                let [hb, hb1, hb2] = self.eta_b(x);
                let lhs = (hb - 0.5 * mu * hb * hb * hb2) * ut
                    - mu / 3.0 * (3.0 * hb * hb * hb1 * utx + hb.powi(3) * utxx);
                lhs / hb + flux
            }
        }
    }
}

/// Coefficients of `zeta_h` and `u_h` on the full spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub zc: Vec<f64>,
    pub uc: Vec<f64>,
}

impl State {
    pub fn zeros(dim: usize) -> Self {
        Self {
            t: 0.0,
            zc: vec![0.0; dim],
            uc: vec![0.0; dim],
        }
    }
}

#[derive(Debug, Clone)]
struct EndData {
    kind: Boundary,
    /// Undisturbed depth at the endpoint.
    depth: f64,
}

/// Immutable semidiscrete system `M_zeta zeta' = F(zeta, u)`,
/// `M_u u' = G(zeta, u)`.
#[derive(Debug, Clone)]
pub struct SemidiscreteSystem {
    space: SplineSpace,
    space0: SplineSpace,
    bathy: Bathymetry,
    params: ModelParams,
    bc: BoundaryConditions,
    ends: [EndData; 2],
    forcing: Option<Arc<dyn Forcing>>,
    tab: QuadTable,
    /// `eta_b` at quadrature points.
    hb: Vec<f64>,
    zeta_gram: BandedMatrix,
    /// Interior block of the velocity mass, factored.
    u_mass: BandedMatrix,
    /// Columns of the full velocity mass coupling the interior rows to the
    /// two end coefficients: `(row, left, right)`.
    coupling: Vec<(usize, f64, f64)>,
    mass_form: MassForm,
}

/// Construction options of [`SemidiscreteSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemOptions {
    /// Gauss points per element.
    pub quad_points: usize,
    /// Accept absorbing ends over a sloping bottom, using the local depth in
    /// the characteristic relation.
    pub sloped_absorbing: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            quad_points: ASSEMBLY_POINTS,
            sloped_absorbing: false,
        }
    }
}

/// Width, in elements, of the endpoint strip that must be flat under an
/// absorbing condition.
const ABSORBING_FLAT_ELEMENTS: usize = 4;

impl SemidiscreteSystem {
    /// Builds the system with the default 3-point Gauss rule.
    pub fn new(
        space: &SplineSpace,
        bathy: &Bathymetry,
        params: ModelParams,
        bc: BoundaryConditions,
        forcing: Option<Arc<dyn Forcing>>,
    ) -> Result<Self> {
        Self::with_quadrature(space, bathy, params, bc, forcing, ASSEMBLY_POINTS)
    }

    pub fn with_quadrature(
        space: &SplineSpace,
        bathy: &Bathymetry,
        params: ModelParams,
        bc: BoundaryConditions,
        forcing: Option<Arc<dyn Forcing>>,
        quad_points: usize,
    ) -> Result<Self> {
        let opts = SystemOptions {
            quad_points,
            ..SystemOptions::default()
        };
        Self::with_options(space, bathy, params, bc, forcing, opts)
    }

    pub fn with_options(
        space: &SplineSpace,
        bathy: &Bathymetry,
        params: ModelParams,
        bc: BoundaryConditions,
        forcing: Option<Arc<dyn Forcing>>,
        opts: SystemOptions,
    ) -> Result<Self> {
        let quad_points = opts.quad_points;
        params.validate()?;
        let space = space.with_bc(EndCondition::Free)?;
        let space0 = space.with_bc(EndCondition::ZeroEndpoints)?;
        let part = space.partition().clone();
        let (a, b) = (part.a(), part.b());
        bathy.validate_on(a, b)?;
        if params.kind == ModelKind::Cb && !bathy.is_flat() {
            return Err(FemError::Params("cb is posed over a flat bottom".into()));
        }

        let mut ends = Vec::with_capacity(2);
        for (side, x) in [(Side::Left, a), (Side::Right, b)] {
            let kind = bc.side(side);
            let depth = bathy.depth(x)[0];
            if kind == Boundary::Absorbing && !opts.sloped_absorbing {
                let w = ABSORBING_FLAT_ELEMENTS as f64 * part.h();
                let (x0, x1) = match side {
                    Side::Left => (a, a + w),
                    Side::Right => (b - w, b),
                };
                if !bathy.is_flat_on(x0, x1) {
                    return Err(FemError::Params(format!(
                        "absorbing condition at x = {x} needs a flat bottom near the boundary"
                    )));
                }
            }
            if depth <= 0.0 && kind != Boundary::Reflective {
                return Err(FemError::Params(format!(
                    "dry endpoint x = {x} must be a wall"
                )));
            }
            ends.push(EndData { kind, depth });
        }
        let ends: [EndData; 2] = [ends[0].clone(), ends[1].clone()];

        if params.kind == ModelKind::Cbs {
            let rep = coercivity_check(bathy, params.mu, a, b, Some(part.len()));
            if !rep.satisfied {
                // a shoreline at a wall is admissible if the form is coercive inside
                let dry_ok = ends.iter().all(|e| e.depth > 0.0 || e.kind == Boundary::Reflective)
                    && ends.iter().any(|e| e.depth <= 0.0);
                let d = 1e-9 * (b - a);
                let inner = coercivity_check(bathy, params.mu, a + d, b - d, None);
                if !(dry_ok && inner.satisfied) {
                    return Err(FemError::Coercivity {
                        c1: rep.c1,
                        c2: rep.c2,
                    });
                }
            }
        }

        let rule = gauss_rule(quad_points)?;
        let tab = QuadTable::new(&space, &rule);
        let hb: Vec<f64> = tab.x.iter().map(|&x| bathy.depth(x)[0]).collect();

        let mut zeta_gram = form_matrix(&space, &MassForm::L2, &rule);
        zeta_gram.factor()?;

        let mass_form = params.mass_form(bathy);
        let full = form_matrix(&space, &mass_form, &rule);
        let n = space.dim();
        let mut u_mass = full.sub_block(1, n - 1);
        u_mass.factor()?;
        let p = space.degree();
        let mut coupling = Vec::new();
        for i in 1..(n - 1) {
            let (l, r) = (full.get(i, 0), full.get(i, n - 1));
            if i <= p || i + p >= n - 1 {
                coupling.push((i, l, r));
            }
        }

        Ok(Self {
            space,
            space0,
            bathy: bathy.clone(),
            params,
            bc,
            ends,
            forcing,
            tab,
            hb,
            zeta_gram,
            u_mass,
            coupling,
            mass_form,
        })
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn velocity_space(&self) -> &SplineSpace {
        &self.space0
    }

    pub fn bathymetry(&self) -> &Bathymetry {
        &self.bathy
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn boundary_conditions(&self) -> BoundaryConditions {
        self.bc
    }

    pub fn mass_form(&self) -> &MassForm {
        &self.mass_form
    }

    pub fn forcing(&self) -> Option<&Arc<dyn Forcing>> {
        self.forcing.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn has_absorbing(&self) -> bool {
        self.ends.iter().any(|e| e.kind == Boundary::Absorbing)
    }

    /// Embeds interior velocity coefficients into the full basis.
    pub fn embed_velocity(&self, interior: &[f64]) -> Result<Vec<f64>> {
        if interior.len() != self.space0.dim() {
            return Err(FemError::DimensionMismatch {
                expected: self.space0.dim(),
                got: interior.len(),
            });
        }
        let mut full = vec![0.0; self.dim()];
        full[1..self.dim() - 1].copy_from_slice(interior);
        Ok(full)
    }

    fn end_index(&self, side: Side) -> usize {
        match side {
            Side::Left => 0,
            Side::Right => self.dim() - 1,
        }
    }

    /// Overwrites the end coefficients of `u_h`: zero at walls, the
    /// characteristic value at absorbing ends. `zeta_h` at an end equals its
    /// end coefficient.
    pub fn enforce_boundary(&self, state: &mut State) -> Result<()> {
        for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
            let i = self.end_index(side);
            let end = &self.ends[k];
            state.uc[i] = match end.kind {
                Boundary::Reflective => 0.0,
                Boundary::Absorbing => {
                    absorbing_bc_values_at_depth(self.params.eps, end.depth, state.zc[i], side)?
                }
            };
        }
        Ok(())
    }

    fn check_dims(&self, state: &State) -> Result<()> {
        let n = self.dim();
        for len in [state.zc.len(), state.uc.len()] {
            if len != n {
                return Err(FemError::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    /// Load vectors of both equations, before any mass solve. The flux of
    /// the mass equation is tested against `phi'`:
    /// `(zeta_t, phi) = (eps zeta u + eta_b u, phi') - [(eps zeta u + eta_b u) phi] + (f, phi)`.
    pub fn loads(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dims(state)?;
        let ModelParams { eps, kind, .. } = self.params;
        let tab = &self.tab;
        let n = self.dim();
        let mut lz = vec![0.0; n];
        let mut lu = vec![0.0; n];
        let t = state.t;
        let weighted = kind == ModelKind::Cbs;
        for e in 0..tab.elements() {
            let f0 = tab.first[e];
            for q in 0..tab.npts {
                let g = e * tab.npts + q;
                let (z, zx) = tab.value_and_slope(&state.zc, e, g);
                let (u, ux) = tab.value_and_slope(&state.uc, e, g);
                let hb = self.hb[g];
                let x = tab.x[g];
                let depth = hb + eps * z;
                if !(depth > 0.0) {
                    return Err(FemError::DepthLoss { x, t, depth });
                }
                let flux = depth * u;
                let mut rz = 0.0;
                let mut ru = -(zx + eps * u * ux);
                if let Some(f) = &self.forcing {
                    rz = f.f_zeta(x, t);
                    ru += f.f_u(x, t);
                }
                if weighted {
                    ru *= hb;
                }
                let w = tab.w[g];
                let b0 = tab.basis(g, 0);
                let b1 = tab.basis(g, 1);
                for j in 0..tab.nb {
                    lz[f0 + j] += w * (flux * b1[j] + rz * b0[j]);
                    lu[f0 + j] += w * ru * b0[j];
                }
            }
        }
        // end coefficients are the end values of a clamped spline
        let (ua, ub) = (state.uc[0], state.uc[n - 1]);
        if ua != 0.0 {
            lz[0] += (self.ends[0].depth + eps * state.zc[0]) * ua;
        }
        if ub != 0.0 {
            lz[n - 1] -= (self.ends[1].depth + eps * state.zc[n - 1]) * ub;
        }
        Ok((lz, lu))
    }

    /// Time derivatives of the coefficient vectors. The end entries of the
    /// velocity rate are zero at walls and follow the characteristic
    /// relation at absorbing ends.
    pub fn rhs(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut lz, lu) = self.loads(state)?;
        self.zeta_gram.solve_in_place(&mut lz)?;
        let zdot = lz;
        let n = self.dim();
        let mut udot = vec![0.0; n];
        for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
            let end = &self.ends[k];
            if end.kind == Boundary::Absorbing {
                let i = self.end_index(side);
                udot[i] = absorbing_bc_rates_at_depth(
                    self.params.eps,
                    end.depth,
                    state.zc[i],
                    zdot[i],
                    side,
                )?;
            }
        }
        let mut interior = lu[1..n - 1].to_vec();
        if udot[0] != 0.0 || udot[n - 1] != 0.0 {
            for &(i, l, r) in &self.coupling {
                interior[i - 1] -= l * udot[0] + r * udot[n - 1];
            }
        }
        self.u_mass.solve_in_place(&mut interior)?;
        udot[1..n - 1].copy_from_slice(&interior);
        Ok((zdot, udot))
    }

    /// Initial state from the L2 projection of `zeta0` and either the L2 or
    /// the mass-form elliptic projection of `u0`. `u0` returns `(u, u_x)`.
    pub fn project_initial(
        &self,
        zeta0: impl Fn(f64) -> f64,
        u0: impl Fn(f64) -> (f64, f64),
        velocity: VelocityProjection,
    ) -> Result<State> {
        let zc = crate::assembly::l2_project(&self.space, zeta0)?;
        let mut state = State {
            t: 0.0,
            zc,
            uc: vec![0.0; self.dim()],
        };
        let form = match velocity {
            VelocityProjection::L2 => MassForm::L2,
            VelocityProjection::Elliptic => self.mass_form.clone(),
        };
        let any_absorbing = self.has_absorbing();
        if any_absorbing {
            // end values are slaved; project the remainder onto S_{h,0}
            self.enforce_boundary(&mut state)?;
            let n = self.dim();
            let (ul, ur) = (state.uc[0], state.uc[n - 1]);
            let part = self.space.partition();
            let (a, len) = (part.a(), part.length());
            let lift = move |x: f64| {
                let s = (x - a) / len;
                (ul * (1.0 - s) + ur * s, (ur - ul) / len)
            };
            let inner = crate::assembly::elliptic_project(&self.space0, &form, |x| {
                let (v, vx) = u0(x);
                let (l, lx) = lift(x);
                (v - l, vx - lx)
            })?;
            // the linear lift is in S_h with coefficients on the Greville line
            let greville = self.greville();
            for i in 1..n - 1 {
                state.uc[i] = inner[i - 1] + lift(greville[i]).0;
            }
        } else {
            let inner = crate::assembly::elliptic_project(&self.space0, &form, u0)?;
            state.uc = self.embed_velocity(&inner)?;
        }
        Ok(state)
    }

    /// Greville abscissae of the full basis.
    pub fn greville(&self) -> Vec<f64> {
        let knots = self.space.knots();
        let p = self.space.degree();
        (0..self.dim())
            .map(|i| knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Smallest water depth `eta_b + eps zeta_h` over the quadrature points.
    pub fn min_depth(&self, state: &State) -> (f64, f64) {
        let mut best = (f64::INFINITY, self.space.partition().a());
        for e in 0..self.tab.elements() {
            for q in 0..self.tab.npts {
                let g = e * self.tab.npts + q;
                let (z, _) = self.tab.value_and_slope(&state.zc, e, g);
                let d = self.hb[g] + self.params.eps * z;
                if d < best.0 {
                    best = (d, self.tab.x[g]);
                }
            }
        }
        best
    }
}

/// Projection used for the initial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityProjection {
    #[default]
    L2,
    /// Projection with respect to the model's velocity mass form.
    Elliptic,
}

impl std::str::FromStr for VelocityProjection {
    type Err = FemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Self::L2),
            "elliptic" => Ok(Self::Elliptic),
            other => Err(FemError::Params(format!("unknown projection '{other}'"))),
        }
    }
}

/// Builds a system; see [`SemidiscreteSystem::new`].
pub fn build_system(
    space: &SplineSpace,
    bathy: &Bathymetry,
    params: ModelParams,
    bc: BoundaryConditions,
    forcing: Option<Arc<dyn Forcing>>,
) -> Result<SemidiscreteSystem> {
    SemidiscreteSystem::new(space, bathy, params, bc, forcing)
}

/// `(zeta', u')` of `state`.
pub fn semidiscrete_rhs(sys: &SemidiscreteSystem, state: &State) -> Result<(Vec<f64>, Vec<f64>)> {
    sys.rhs(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::Partition;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cubic(a: f64, b: f64, n: usize) -> SplineSpace {
        SplineSpace::cubic(Partition::new(a, b, n).unwrap(), EndCondition::Free).unwrap()
    }

    fn params(kind: ModelKind) -> ModelParams {
        let mu = if kind == ModelKind::Sw { 0.0 } else { 0.1 };
        ModelParams::new(kind, 0.1, mu).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(ModelKind::Cbw, 0.0, 0.1).is_err());
        assert!(ModelParams::new(ModelKind::Cbw, 0.1, 0.0).is_err());
        assert!(ModelParams::new(ModelKind::Sw, 0.1, 0.1).is_err());
        assert!(ModelParams::new(ModelKind::Sw, 0.1, 0.0).is_ok());
        assert_eq!("CBs".parse::<ModelKind>().unwrap(), ModelKind::Cbs);
    }

    #[test]
    fn absorbing_values_examples() {
        for side in [Side::Left, Side::Right] {
            assert_eq!(absorbing_bc_values(0.1, 0.0, side).unwrap(), 0.0);
            assert_eq!(absorbing_bc_rates(0.1, 0.3, 0.0, side).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(absorbing_bc_values(1.0, 0.21, Side::Right).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(absorbing_bc_values(1.0, 0.21, Side::Left).unwrap(), -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(absorbing_bc_rates(1.0, 0.0, 0.5, Side::Right).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(absorbing_bc_values(1.0, -1.0, Side::Left), Err(FemError::Vacuum(_))));
        assert!(absorbing_bc_rates(0.5, -3.0, 1.0, Side::Right).is_err());
        let eps = 0.1;
        for i in 0..=200 {
            let z = -0.1 + 0.2 * i as f64 / 200.0;
            let l = absorbing_bc_values(eps, z, Side::Left).unwrap();
            let r = absorbing_bc_values(eps, z, Side::Right).unwrap();
            assert!((l + z).abs() <= eps * z * z + 1e-16);
            assert!((r - z).abs() <= eps * z * z + 1e-16);
        }
    }

    #[test]
    fn absorbing_rate_matches_finite_difference() {
        let eps = 0.3;
        let path = |t: f64| 0.2 * (3.0 * t).sin() + 0.05 * t;
        let dpath = |t: f64| 0.6 * (3.0 * t).cos() + 0.05;
        for side in [Side::Left, Side::Right] {
            let t = 0.7;
            let exact = absorbing_bc_rates(eps, path(t), dpath(t), side).unwrap();
            let fd = |dt: f64| {
                (absorbing_bc_values(eps, path(t + dt), side).unwrap()
                    - absorbing_bc_values(eps, path(t - dt), side).unwrap())
                    / (2.0 * dt)
            };
            let (e1, e2) = ((fd(1e-2) - exact).abs(), (fd(5e-3) - exact).abs());
            assert!(e1 < 1e-3);
            assert!((e1 / e2 - 4.0).abs() < 0.2, "ratio {}", e1 / e2);
        }
    }

    #[test]
    fn zero_and_constant_states() {
        let s = cubic(0.0, 1.0, 8);
        let sine = Bathymetry::new(Profile::SineBottom { beta: 0.1 }).unwrap();
        for kind in ModelKind::ALL {
            let bathy = if kind == ModelKind::Cb { Bathymetry::flat() } else { sine.clone() };
            let sys = SemidiscreteSystem::new(&s, &bathy, params(kind), BoundaryConditions::reflective(), None).unwrap();
            let (z, u) = sys.rhs(&State::zeros(sys.dim())).unwrap();
            assert!(z.iter().chain(&u).all(|&v| v == 0.0));
            let flat = SemidiscreteSystem::new(&s, &Bathymetry::flat(), params(kind), BoundaryConditions::reflective(), None).unwrap();
            let st = State {
                t: 0.0,
                zc: vec![0.4; flat.dim()],
                uc: vec![0.0; flat.dim()],
            };
            let (z, u) = flat.rhs(&st).unwrap();
            assert!(z.iter().chain(&u).all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn flat_bottom_equivalences() {
        let s = cubic(0.0, 1.0, 10);
        let bc = BoundaryConditions::reflective();
        let flat = Bathymetry::flat();
        let cb = SemidiscreteSystem::new(&s, &flat, params(ModelKind::Cb), bc, None).unwrap();
        let cbw = SemidiscreteSystem::new(&s, &flat, params(ModelKind::Cbw), bc, None).unwrap();
        let cbs = SemidiscreteSystem::new(&s, &flat, params(ModelKind::Cbs), bc, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut st = State::zeros(cb.dim());
        st.zc.iter_mut().for_each(|v| *v = rng.gen_range(-0.3..0.3));
        st.uc[1..cb.dim() - 1].iter_mut().for_each(|v| *v = rng.gen_range(-0.3..0.3));
        let (z1, u1) = cb.rhs(&st).unwrap();
        let (z2, u2) = cbw.rhs(&st).unwrap();
        let (z3, u3) = cbs.rhs(&st).unwrap();
        for i in 0..cb.dim() {
            assert_eq!(z1[i], z2[i]);
            assert_eq!(u1[i], u2[i]);
            assert_abs_diff_eq!(z1[i], z3[i], epsilon = 1e-13);
            assert_abs_diff_eq!(u1[i], u3[i], epsilon = 1e-13);
        }
        assert!(SemidiscreteSystem::new(
            &s,
            &Bathymetry::new(Profile::SineBottom { beta: 0.1 }).unwrap(),
            params(ModelKind::Cb),
            bc,
            None
        )
        .is_err());
    }

    #[test]
    fn build_rejections() {
        let s = cubic(0.0, 50.0, 100);
        let beach = Bathymetry::new(Profile::UniformSlope { alpha: 1.0 / 50.0 }).unwrap();
        let sys = SemidiscreteSystem::new(&s, &beach, params(ModelKind::Cbs), BoundaryConditions::reflective(), None);
        assert!(sys.is_ok(), "{sys:?}");
        let bc = BoundaryConditions {
            left: Boundary::Reflective,
            right: Boundary::Absorbing,
        };
        assert!(SemidiscreteSystem::new(&s, &beach, params(ModelKind::Cbs), bc, None).is_err());
        assert!(SemidiscreteSystem::new(&s, &beach, params(ModelKind::Cbs), BoundaryConditions::absorbing(), None).is_err());
        let steep = Bathymetry::sine_shelf(25.0, 0.99).unwrap();
        let sys = SemidiscreteSystem::new(&s, &steep, ModelParams::new(ModelKind::Cbs, 0.1, 50.0).unwrap(), BoundaryConditions::reflective(), None);
        assert!(matches!(sys, Err(FemError::Coercivity { .. })));
    }

    #[test]
    fn depth_loss_is_reported() {
        let s = cubic(0.0, 1.0, 8);
        let sys = SemidiscreteSystem::new(&s, &Bathymetry::flat(), params(ModelKind::Cbw), BoundaryConditions::reflective(), None).unwrap();
        let mut st = State::zeros(sys.dim());
        st.zc[4] = -20.0;
        assert!(matches!(sys.rhs(&st), Err(FemError::DepthLoss { .. })));
    }

    #[test]
    fn manufactured_fields() {
        let p = ModelParams::new(ModelKind::Cbw, 1.0, 0.1).unwrap();
        let m = ManufacturedSolution::new(p, 0.1).unwrap();
        for t in [0.0, 0.13, 0.25] {
            assert_abs_diff_eq!(m.u(0.0, t)[0], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(m.u(1.0, t)[0], 0.0, epsilon = 1e-15);
        }
        // central differences of the exact fields
        let d = 1e-4;
        for &(x, t) in &[(0.3, 0.1), (0.77, 0.2)] {
            let u = m.u(x, t);
            let ux = (m.u(x + d, t)[0] - m.u(x - d, t)[0]) / (2.0 * d);
            let ut = (m.u(x, t + d)[0] - m.u(x, t - d)[0]) / (2.0 * d);
            let utx = (m.u(x + d, t)[2] - m.u(x - d, t)[2]) / (2.0 * d);
            let utxx = (m.u(x + d, t)[3] - m.u(x - d, t)[3]) / (2.0 * d);
            assert_abs_diff_eq!(u[1], ux, epsilon = 1e-6);
            assert_abs_diff_eq!(u[2], ut, epsilon = 1e-6);
            assert_abs_diff_eq!(u[3], utx, epsilon = 1e-6);
            assert_abs_diff_eq!(u[4], utxx, epsilon = 1e-6);
            let z = m.zeta(x, t);
            assert_abs_diff_eq!(z[1], (m.zeta(x + d, t)[0] - m.zeta(x - d, t)[0]) / (2.0 * d), epsilon = 1e-6);
        }
    }

    #[test]
    fn manufactured_forcing_matches_finite_differences() {
        let beta = 0.1;
        let eta = |x: f64| 1.0 - beta * (PI * x).sin();
        let zeta = |x: f64, t: f64| (2.0 * t).exp() * ((PI * x).cos() + x + 2.0);
        let u = |x: f64, t: f64| (x * t).exp() * ((PI * x).sin() + x.powi(3) - x * x);
        let d = 1e-3;
        let dx = |f: &dyn Fn(f64) -> f64, x: f64| {
            (-f(x + 2.0 * d) + 8.0 * f(x + d) - 8.0 * f(x - d) + f(x - 2.0 * d)) / (12.0 * d)
        };
        let x = 0.5;
        for kind in [ModelKind::Cbw, ModelKind::Cbs] {
            let p = ModelParams::new(kind, 1.0, 0.1).unwrap();
            let m = ManufacturedSolution::new(p, beta).unwrap();
            for t in [0.0, 0.2] {
                let flux = |y: f64| (eta(y) + zeta(y, t)) * u(y, t);
                let zt = dx(&|s| zeta(x, s), t);
                assert_abs_diff_eq!(m.f_zeta(x, t), zt + dx(&flux, x), epsilon = 1e-8);
                let ut = |y: f64| dx(&|s| u(y, s), t);
                let utx = |y: f64| dx(&ut, y);
                let uux = dx(&|y| 0.5 * u(y, t) * u(y, t), x);
                let zx = dx(&|y| zeta(y, t), x);
                let expected = match kind {
                    ModelKind::Cbw => ut(x) + zx + uux - 0.1 / 3.0 * dx(&utx, x),
                    _ => {
                        let hb2 = beta * PI * PI * (PI * x).sin();
                        let h = eta(x);
                        let disp = dx(&|y| eta(y).powi(3) * utx(y), x);
                        ((h - 0.05 * h * h * hb2) * ut(x) - 0.1 / 3.0 * disp) / h + zx + uux
                    }
                };
                assert_abs_diff_eq!(m.f_u(x, t), expected, epsilon = 2e-6);
            }
        }
        let p = ModelParams::new(ModelKind::Cbw, 1.0, 0.1).unwrap();
        let m = ManufacturedSolution::new(p, beta).unwrap();
        let c = ((PI * x).cos() + x + 2.0, (PI * x).sin() + x.powi(3) - x * x);
        let closed = 2.0 * c.0 + dx(&|y| (eta(y) + (PI * y).cos() + y + 2.0) * ((PI * y).sin() + y.powi(3) - y * y), x);
        assert_abs_diff_eq!(m.f_zeta(x, 0.0), closed, epsilon = 1e-8);
    }

    #[test]
    fn absorbing_end_coefficients_are_slaved() {
        let s = cubic(0.0, 10.0, 40);
        let sys = SemidiscreteSystem::new(&s, &Bathymetry::flat(), params(ModelKind::Cb), BoundaryConditions::absorbing(), None).unwrap();
        let mut st = sys
            .project_initial(
                |x| 0.1 * (-(x - 9.0f64).powi(2)).exp(),
                |x| (0.1 * (-(x - 9.0f64).powi(2)).exp(), -0.2 * (x - 9.0) * (-(x - 9.0f64).powi(2)).exp()),
                VelocityProjection::L2,
            )
            .unwrap();
        let n = sys.dim();
        let want = absorbing_bc_values(0.1, st.zc[n - 1], Side::Right).unwrap();
        assert_abs_diff_eq!(st.uc[n - 1], want, epsilon = 1e-15);
        st.uc[n - 1] = 0.0;
        sys.enforce_boundary(&mut st).unwrap();
        assert_abs_diff_eq!(st.uc[n - 1], want, epsilon = 1e-15);
        let (zd, ud) = sys.rhs(&st).unwrap();
        let r = absorbing_bc_rates(0.1, st.zc[n - 1], zd[n - 1], Side::Right).unwrap();
        assert_abs_diff_eq!(ud[n - 1], r, epsilon = 1e-15);
    }
}
