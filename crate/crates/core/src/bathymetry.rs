//! Closed-form bottom profiles.
//!
//! Profiles are stored through the undisturbed depth `eta_b(x)`. Profiles
//! with a bottom-variation scale `beta` also expose `b(x)` with
//! `eta_b = 1 - beta * b`; the unscaled laboratory profiles (uniform beach,
//! ramp onto a shelf, beach ending at a wall) give `eta_b` directly.

use std::f64::consts::PI;

use crate::error::{FemError, Result};

/// `(value, first derivative, second derivative)`.
pub type Jet = [f64; 3];

/// Smooth monotone transition from 0 to 1 over `[c - w, c + w]`:
/// `(1 + sin(pi (x - c) / (2 w))) / 2`. It is `C^1` at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineBridge {
    pub center: f64,
    pub half_width: f64,
}

impl SineBridge {
    pub fn jet(&self, x: f64) -> Jet {
        let (c, w) = (self.center, self.half_width);
        if x < c - w {
            [0.0, 0.0, 0.0]
        } else if x < c + w {
            let k = PI / (2.0 * w);
            let arg = k * (x - c);
            [
                0.5 * (1.0 + arg.sin()),
                0.5 * k * arg.cos(),
                -0.5 * k * k * arg.sin(),
            ]
        } else {
            [1.0, 0.0, 0.0]
        }
    }

    fn breakpoints(&self) -> [f64; 2] {
        [self.center - self.half_width, self.center + self.half_width]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `eta_b = 1`.
    Flat,
    /// `eta_b = alpha x`: a beach of uniform slope reaching depth 1 at `1/alpha`.
    UniformSlope { alpha: f64 },
    /// Depth 1 up to `x_b`, linear ramp of slope `alpha` up to depth `h1`,
    /// then a shelf of depth `h1`.
    ShelfRamp { x_b: f64, alpha: f64, h1: f64 },
    /// Depth 1 up to `x_b`, then a uniform slope to the end of the domain.
    BeachWall { x_b: f64, slope: f64 },
    /// `b` is a sine bridge from 0 to 1 centered at `center`; `eta_b = 1 - beta b`.
    /// Negative `beta` deepens the water.
    SmoothStep {
        center: f64,
        half_width: f64,
        beta: f64,
    },
    /// `b` rises over one bridge, holds a plateau, and falls over a second one.
    Hump {
        center: f64,
        plateau_half: f64,
        bridge_half: f64,
        beta: f64,
    },
    /// `eta_b = 1 - beta sin(pi x)`, the manufactured-solution bottom.
    SineBottom { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bathymetry {
    profile: Profile,
}

impl Bathymetry {
    pub fn new(profile: Profile) -> Result<Self> {
        let bad = |m: &str| Err(FemError::Bathymetry(m.to_string()));
        match &profile {
            Profile::Flat => {}
            Profile::UniformSlope { alpha } => {
                if !(*alpha > 0.0) {
                    return bad("slope alpha must be positive");
                }
            }
            Profile::ShelfRamp { alpha, h1, .. } => {
                if !(*alpha > 0.0) {
                    return bad("ramp slope must be positive");
                }
                if !(*h1 > 0.0 && *h1 <= 1.0) {
                    return bad("shelf depth h1 must lie in (0, 1]");
                }
            }
            Profile::BeachWall { slope, .. } => {
                if !(*slope > 0.0) {
                    return bad("beach slope must be positive");
                }
            }
            Profile::SmoothStep {
                half_width, beta, ..
            } => {
                if !(*half_width > 0.0) {
                    return bad("bridge half-width must be positive");
                }
                if *beta >= 1.0 {
                    return bad("beta >= 1 dries the shelf");
                }
            }
            Profile::Hump {
                plateau_half,
                bridge_half,
                beta,
                ..
            } => {
                if !(*bridge_half > 0.0 && *plateau_half >= 0.0) {
                    return bad("hump widths must be positive");
                }
                if *beta >= 1.0 {
                    return bad("beta >= 1 dries the hump");
                }
            }
            Profile::SineBottom { beta } => {
                if beta.abs() >= 1.0 {
                    return bad("|beta| >= 1 makes the depth vanish");
                }
            }
        }
        Ok(Self { profile })
    }

    pub fn flat() -> Self {
        Self {
            profile: Profile::Flat,
        }
    }

    /// The smooth shelf used for the bottom-steepness comparison: a sine
    /// bridge of half-width 3/2 centered at `l`.
    pub fn sine_shelf(l: f64, beta: f64) -> Result<Self> {
        Self::new(Profile::SmoothStep {
            center: l,
            half_width: 1.5,
            beta,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.profile, Profile::Flat)
            || matches!(self.profile, Profile::SmoothStep { beta, .. } | Profile::Hump { beta, .. } | Profile::SineBottom { beta } if beta == 0.0)
    }

    /// The bottom-variation scale, for profiles written as `1 - beta b`.
    pub fn beta(&self) -> Option<f64> {
        match self.profile {
            Profile::Flat => Some(0.0),
            Profile::SmoothStep { beta, .. }
            | Profile::Hump { beta, .. }
            | Profile::SineBottom { beta } => Some(beta),
            _ => None,
        }
    }

    /// `b` and its derivatives, for `beta`-scaled profiles.
    pub fn bottom(&self, x: f64) -> Option<Jet> {
        match self.profile {
            Profile::Flat => Some([0.0; 3]),
            Profile::SmoothStep {
                center, half_width, ..
            } => Some(
                SineBridge {
                    center,
                    half_width,
                }
                .jet(x),
            ),
            Profile::Hump {
                center,
                plateau_half,
                bridge_half,
                ..
            } => {
                let up = SineBridge {
                    center: center - plateau_half - bridge_half,
                    half_width: bridge_half,
                }
                .jet(x);
                let down = SineBridge {
                    center: center + plateau_half + bridge_half,
                    half_width: bridge_half,
                }
                .jet(x);
                Some([up[0] - down[0], up[1] - down[1], up[2] - down[2]])
            }
            Profile::SineBottom { .. } => {
                let (s, c) = (PI * x).sin_cos();
                Some([s, PI * c, -PI * PI * s])
            }
            _ => None,
        }
    }

    /// `eta_b` and its first two derivatives. At breakpoints the right-hand
    /// piece is used.
    pub fn depth(&self, x: f64) -> Jet {
        match self.profile {
            Profile::Flat => [1.0, 0.0, 0.0],
            Profile::UniformSlope { alpha } => [alpha * x, alpha, 0.0],
            Profile::ShelfRamp { x_b, alpha, h1 } => {
                let x_end = x_b + (1.0 - h1) / alpha;
                if x < x_b {
                    [1.0, 0.0, 0.0]
                } else if x < x_end {
                    [1.0 - alpha * (x - x_b), -alpha, 0.0]
                } else {
                    [h1, 0.0, 0.0]
                }
            }
            Profile::BeachWall { x_b, slope } => {
                if x < x_b {
                    [1.0, 0.0, 0.0]
                } else {
                    [1.0 - slope * (x - x_b), -slope, 0.0]
                }
            }
            _ => {
                let beta = self.beta().unwrap_or(0.0);
                let b = self.bottom(x).unwrap_or([0.0; 3]);
                [1.0 - beta * b[0], -beta * b[1], -beta * b[2]]
            }
        }
    }

    /// Evaluates `eta_b^{(deriv)}(x)`.
    pub fn eval_depth(&self, x: f64, deriv: usize) -> Result<f64> {
        if deriv > 2 {
            return Err(FemError::UnsupportedDerivative(deriv));
        }
        Ok(self.depth(x)[deriv])
    }

    /// Locations where the piecewise definition changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.profile {
            Profile::Flat | Profile::UniformSlope { .. } | Profile::SineBottom { .. } => vec![],
            Profile::ShelfRamp { x_b, alpha, h1 } => vec![x_b, x_b + (1.0 - h1) / alpha],
            Profile::BeachWall { x_b, .. } => vec![x_b],
            Profile::SmoothStep {
                center, half_width, ..
            } => SineBridge {
                center,
                half_width,
            }
            .breakpoints()
            .to_vec(),
            Profile::Hump {
                center,
                plateau_half,
                bridge_half,
                ..
            } => {
                let l = center - plateau_half - bridge_half;
                let r = center + plateau_half + bridge_half;
                vec![l - bridge_half, l + bridge_half, r - bridge_half, r + bridge_half]
            }
        }
    }

    /// Whether derivatives of `eta_b` are continuous at the breakpoints
    /// (piecewise-linear ramps are only `C^0`).
    pub fn is_c1(&self) -> bool {
        !matches!(
            self.profile,
            Profile::ShelfRamp { .. } | Profile::BeachWall { .. }
        )
    }

    /// Checks `eta_b > 0` on `[a, b]` over a dense grid plus breakpoints.
    /// A zero depth is tolerated exactly at an endpoint (a shoreline at a
    /// reflecting boundary), never inside.
    pub fn validate_on(&self, a: f64, b: f64) -> Result<()> {
        let n = 2000;
        let mut pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        pts.extend(self.breakpoints().into_iter().filter(|&x| x > a && x < b));
        for &x in &pts {
            let d = self.depth(x)[0];
            let at_end = x == a || x == b;
            if d < 0.0 || (d == 0.0 && !at_end) || !d.is_finite() {
                return Err(FemError::Bathymetry(format!(
                    "undisturbed depth {d} <= 0 at x = {x}"
                )));
            }
        }
        Ok(())
    }

    /// `|eta_b'|` and `|eta_b''|` vanish on `[x0, x1]` (sampled).
    pub fn is_flat_on(&self, x0: f64, x1: f64) -> bool {
        (0..=20).all(|i| {
            let x = x0 + (x1 - x0) * i as f64 / 20.0;
            let d = self.depth(x);
            d[1].abs() < 1e-14 && d[2].abs() < 1e-14
        })
    }
}
