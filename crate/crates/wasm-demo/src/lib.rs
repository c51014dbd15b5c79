//! Browser bindings: solitary-wave profiles, the cubic B-spline basis, and a
//! solitary wave stepped interactively up a beach or onto a shelf.

use cbfem::bathymetry::Profile;
use cbfem::experiments::{InitialSpec, Prepared, Scenario, SolitarySize};
use cbfem::models::{Boundary, BoundaryConditions, ModelKind, State};
use cbfem::solitary::{Geometry, SolitaryWave};
use cbfem::spline::{EndCondition, Partition, SplineSpace};
use cbfem::timestep::{rk4_step, StepControl};
use wasm_bindgen::prelude::*;

fn js_err(e: cbfem::FemError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Solitary wave of the `(eps, mu)` system with speed `c`.
#[wasm_bindgen]
pub struct Solitary {
    wave: SolitaryWave,
}

#[wasm_bindgen]
impl Solitary {
    #[wasm_bindgen(constructor)]
    pub fn new(eps: f64, mu: f64, c: f64) -> Result<Solitary, JsValue> {
        Ok(Self {
            wave: SolitaryWave::new(eps, mu, c).map_err(js_err)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn amplitude(&self) -> f64 {
        self.wave.amplitude
    }

    #[wasm_bindgen(getter)]
    pub fn u_amplitude(&self) -> f64 {
        self.wave.u_amplitude
    }

    #[wasm_bindgen(getter)]
    pub fn half_length(&self) -> f64 {
        self.wave.half_length
    }

    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.wave.first_integral_residual()
    }

    /// `n` samples on `[-width, width]`, flattened as `(xi, zeta, u)` triples.
    pub fn profile(&self, width: f64, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            let xi = -width + 2.0 * width * i as f64 / (n - 1) as f64;
            out.extend([xi, self.wave.zeta(xi), self.wave.u(xi)]);
        }
        out
    }
}

/// Values (`deriv` 0, 1 or 2) of every basis function of the smooth spline
/// space of the given order on `[0, 1]` with `elements` elements, sampled at
/// `n` points. Row-major: one row of `n` values per basis function.
#[wasm_bindgen]
pub fn spline_basis(elements: usize, order: usize, deriv: usize, n: usize) -> Result<Vec<f64>, JsValue> {
    let part = Partition::new(0.0, 1.0, elements).map_err(js_err)?;
    let space = SplineSpace::smooth(part, order, EndCondition::Free).map_err(js_err)?;
    let dim = space.dim();
    let mut out = Vec::with_capacity(dim * n);
    let mut c = vec![0.0; dim];
    for i in 0..dim {
        c[i] = 1.0;
        let (_, v) = space.sample(&c, n.max(2), deriv).map_err(js_err)?;
        out.extend(v);
        c[i] = 0.0;
    }
    Ok(out)
}

/// A CBs solitary wave of amplitude `a0` approaching a bottom change from
/// the left, advanced on request.
#[wasm_bindgen]
pub struct Simulation {
    prepared: Prepared,
    state: State,
    k: f64,
    samples: usize,
}

#[wasm_bindgen]
impl Simulation {
    /// Beach `eta_b = alpha x` with the KdV pulse at depth 1 and a wall at
    /// the shoreline.
    pub fn beach(alpha: f64, a0: f64, n: usize) -> Result<Simulation, JsValue> {
        let x0 = 1.0 / alpha;
        let sc = Scenario {
            model: ModelKind::Cbs,
            b: x0 + 20.0,
            n,
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
            ..Scenario::default()
        };
        Self::from_scenario(sc)
    }

    /// Ramp of slope `alpha` from `x = 60` onto a shelf of depth `h1`.
    pub fn shelf(alpha: f64, h1: f64, a0: f64, n: usize) -> Result<Simulation, JsValue> {
        let sc = Scenario {
            model: ModelKind::Cbs,
            b: 150.0,
            n,
            bathymetry: Profile::ShelfRamp { x_b: 60.0, alpha, h1 },
            initial: InitialSpec::Solitary {
                size: SolitarySize::Amplitude(a0),
                x0: 30.0,
                scale: 1.0,
                wave_params: None,
            },
            bc: BoundaryConditions::absorbing(),
            ..Scenario::default()
        };
        Self::from_scenario(sc)
    }

    fn from_scenario(sc: Scenario) -> Result<Simulation, JsValue> {
        let courant = match sc.step {
            StepControl::Courant(c) => c,
            StepControl::Steps(_) => 0.5,
        };
        let prepared = sc.prepare().map_err(js_err)?;
        let k = courant * prepared.space().partition().h();
        let state = prepared.initial.clone();
        Ok(Self {
            prepared,
            state,
            k,
            samples: (sc.n + 1).min(2001),
        })
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Advances `steps` RK4 steps.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsValue> {
        for _ in 0..steps {
            self.state = rk4_step(&self.prepared.system, &self.state, self.k).map_err(js_err)?;
        }
        Ok(())
    }

    pub fn x(&self) -> Result<Vec<f64>, JsValue> {
        let (x, _) = self
            .prepared
            .space()
            .sample(&self.state.zc, self.samples, 0)
            .map_err(js_err)?;
        Ok(x)
    }

    pub fn zeta(&self) -> Result<Vec<f64>, JsValue> {
        let (_, v) = self
            .prepared
            .space()
            .sample(&self.state.zc, self.samples, 0)
            .map_err(js_err)?;
        Ok(v)
    }

    /// `-eta_b` at the sample points.
    pub fn bottom(&self) -> Result<Vec<f64>, JsValue> {
        let bathy = self.prepared.system.bathymetry();
        Ok(self.x()?.into_iter().map(|x| -bathy.depth(x)[0]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_a_partition_of_unity() {
        let (elements, n) = (5, 41);
        let v = spline_basis(elements, 4, 0, n).unwrap();
        let dim = v.len() / n;
        assert_eq!(dim, elements + 3);
        for j in 0..n {
            let s: f64 = (0..dim).map(|i| v[i * n + j]).sum();
            assert!((s - 1.0).abs() < 1e-13, "{s}");
        }
    }

    #[test]
    fn profile_peaks_at_the_crest() {
        let w = Solitary::new(1.0, 1.0, 1.18112).unwrap();
        let p = w.profile(10.0, 201);
        assert_eq!(p.len(), 603);
        assert!((p[3 * 100 + 1] - w.amplitude()).abs() < 1e-12);
        assert!(w.residual() < 1e-10);
    }

    #[test]
    fn shelf_simulation_advances() {
        let mut s = Simulation::shelf(1.0 / 20.0, 0.5, 0.12, 300).unwrap();
        s.advance(4).unwrap();
        assert!((s.time() - 4.0 * 0.25).abs() < 1e-12);
        assert_eq!(s.zeta().unwrap().len(), s.bottom().unwrap().len());
    }
}
