//! Classical four-stage Runge-Kutta march with a fixed Courant ratio.

use crate::analysis::GaugeSeries;
use crate::error::{FemError, Result};
use crate::models::{SemidiscreteSystem, State};

/// A semidiscrete system `y' = F(y)` on [`State`] vectors.
pub trait Evolution {
    fn rates(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>)>;

    /// Restores algebraic constraints on a freshly formed stage state.
    fn enforce(&self, _state: &mut State) -> Result<()> {
        Ok(())
    }
}

impl Evolution for SemidiscreteSystem {
    fn rates(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>)> {
        self.rhs(state)
    }

    fn enforce(&self, state: &mut State) -> Result<()> {
        if self.has_absorbing() {
            self.enforce_boundary(state)
        } else {
            Ok(())
        }
    }
}

fn axpy(base: &State, k: f64, dz: &[f64], du: &[f64], t: f64) -> State {
    State {
        t,
        zc: base.zc.iter().zip(dz).map(|(y, d)| y + k * d).collect(),
        uc: base.uc.iter().zip(du).map(|(y, d)| y + k * d).collect(),
    }
}

/// One classical RK4 step of size `k`.
pub fn rk4_step<E: Evolution + ?Sized>(sys: &E, state: &State, k: f64) -> Result<State> {
    if !(k > 0.0) {
        return Err(FemError::Params(format!("time step must be positive, got {k}")));
    }
    let t = state.t;
    let (z1, u1) = sys.rates(state)?;
    let mut y = axpy(state, 0.5 * k, &z1, &u1, t + 0.5 * k);
    sys.enforce(&mut y)?;
    let (z2, u2) = sys.rates(&y)?;
    let mut y = axpy(state, 0.5 * k, &z2, &u2, t + 0.5 * k);
    sys.enforce(&mut y)?;
    let (z3, u3) = sys.rates(&y)?;
    let mut y = axpy(state, k, &z3, &u3, t + k);
    sys.enforce(&mut y)?;
    let (z4, u4) = sys.rates(&y)?;
    let c = k / 6.0;
    let mut out = State {
        t: t + k,
        zc: (0..state.zc.len())
            .map(|i| state.zc[i] + c * (z1[i] + 2.0 * z2[i] + 2.0 * z3[i] + z4[i]))
            .collect(),
        uc: (0..state.uc.len())
            .map(|i| state.uc[i] + c * (u1[i] + 2.0 * u2[i] + 2.0 * u3[i] + u4[i]))
            .collect(),
    };
    sys.enforce(&mut out)?;
    Ok(out)
}

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// `k <= courant * h`, shrunk so that the step count divides `T`.
    Courant(f64),
    /// Exactly this many steps.
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_final: f64,
    pub step: StepControl,
    /// Gauges and the mass trace are sampled every this many steps.
    pub observe_every: usize,
    pub gauges: Vec<f64>,
    pub snapshot_times: Vec<f64>,
}

impl RunConfig {
    pub fn new(t_final: f64, courant: f64) -> Self {
        Self {
            t_final,
            step: StepControl::Courant(courant),
            observe_every: 1,
            gauges: Vec::new(),
            snapshot_times: Vec::new(),
        }
    }

    pub fn with_steps(t_final: f64, steps: usize) -> Self {
        Self {
            step: StepControl::Steps(steps),
            ..Self::new(t_final, 0.25)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(FemError::Params(format!("final time must be >= 0, got {}", self.t_final)));
        }
        match self.step {
            StepControl::Courant(c) if !(c > 0.0 && c <= 0.5) => Err(FemError::Params(format!(
                "courant ratio must lie in (0, 1/2], got {c}"
            ))),
            StepControl::Steps(0) if self.t_final > 0.0 => {
                Err(FemError::Params("step count must be positive".into()))
            }
            _ if self.observe_every == 0 => Err(FemError::Params("observe_every must be >= 1".into())),
            _ => Ok(()),
        }
    }

    /// `(steps, k)` for mesh size `h`.
    pub fn steps_for(&self, h: f64) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, 0.0);
        }
        let m = match self.step {
            StepControl::Steps(m) => m,
            StepControl::Courant(c) => {
                let ratio = self.t_final / (c * h);
                // tolerate roundoff when T / (c h) is an integer
                let m = (ratio * (1.0 - 1e-12)).ceil();
                (m as usize).max(1)
            }
        };
        (m, self.t_final / m as f64)
    }
}

/// What a per-step observer asks the driver to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub final_state: State,
    pub steps: usize,
    pub k: f64,
    pub gauges: Vec<GaugeSeries>,
    pub snapshots: Vec<State>,
    /// `(t, integral of zeta_h)`.
    pub mass: Vec<(f64, f64)>,
    /// True if an observer ended the run before `T`.
    pub stopped_early: bool,
}

/// Marches `initial` to `cfg.t_final`.
pub fn integrate(sys: &SemidiscreteSystem, initial: &State, cfg: &RunConfig) -> Result<RunRecord> {
    integrate_observed(sys, initial, cfg, |_, _| Ok(Control::Continue))
}

/// As [`integrate`], calling `observer(step, state)` after the initial state
/// and after every step.
pub fn integrate_observed(
    sys: &SemidiscreteSystem,
    initial: &State,
    cfg: &RunConfig,
    mut observer: impl FnMut(usize, &State) -> Result<Control>,
) -> Result<RunRecord> {
    cfg.validate()?;
    let space = sys.space();
    if initial.zc.len() != sys.dim() || initial.uc.len() != sys.dim() {
        return Err(FemError::DimensionMismatch {
            expected: sys.dim(),
            got: initial.zc.len().min(initial.uc.len()),
        });
    }
    let (steps, k) = cfg.steps_for(space.partition().h());
    let integrals = space.basis_integrals();
    let mass_of = |s: &State| -> f64 { s.zc.iter().zip(&integrals).map(|(c, w)| c * w).sum() };
    let mut gauges: Vec<GaugeSeries> = cfg.gauges.iter().map(|&x| GaugeSeries::new(x)).collect();
    let mut basis = Vec::with_capacity(gauges.len());
    for g in &gauges {
        basis.push(space.basis_at(g.x)?);
    }
    let observe = |s: &State, gauges: &mut Vec<GaugeSeries>| {
        for (g, lb) in gauges.iter_mut().zip(&basis) {
            g.push(s.t, space.combine(&s.zc, lb, 0), space.combine(&s.uc, lb, 0));
        }
    };

    let t0 = initial.t;
    let mut snap_steps: Vec<(usize, usize)> = cfg
        .snapshot_times
        .iter()
        .enumerate()
        .map(|(i, &ts)| {
            let n = if k > 0.0 { ((ts - t0) / k).round().max(0.0) as usize } else { 0 };
            (n.min(steps), i)
        })
        .collect();
    snap_steps.sort();
    let mut snapshots = vec![None; cfg.snapshot_times.len()];
    let mut next_snap = 0;

    let mut state = initial.clone();
    sys.enforce(&mut state)?;
    let mut mass = vec![(state.t, mass_of(&state))];
    observe(&state, &mut gauges);
    let take = |n: usize, s: &State, next: &mut usize, snaps: &mut Vec<Option<State>>| {
        while *next < snap_steps.len() && snap_steps[*next].0 == n {
            snaps[snap_steps[*next].1] = Some(s.clone());
            *next += 1;
        }
    };
    take(0, &state, &mut next_snap, &mut snapshots);
    let mut stopped_early = observer(0, &state)? == Control::Stop;
    let mut done = 0;
    if !stopped_early {
        for n in 1..=steps {
            let mut next = rk4_step(sys, &state, k).map_err(|e| FemError::Aborted {
                step: n,
                t: state.t,
                source: Box::new(e),
            })?;
            // land exactly on the grid t0 + n k
            next.t = t0 + n as f64 * k;
            state = next;
            done = n;
            if n % cfg.observe_every == 0 || n == steps {
                mass.push((state.t, mass_of(&state)));
                observe(&state, &mut gauges);
            }
            take(n, &state, &mut next_snap, &mut snapshots);
            let ctl = observer(n, &state).map_err(|e| FemError::Aborted {
                step: n,
                t: state.t,
                source: Box::new(e),
            })?;
            if ctl == Control::Stop {
                stopped_early = n < steps;
                break;
            }
        }
    }
    let snapshots = snapshots.into_iter().flatten().collect();
    Ok(RunRecord {
        final_state: state,
        steps: done,
        k,
        gauges,
        snapshots,
        mass,
        stopped_early,
    })
}
