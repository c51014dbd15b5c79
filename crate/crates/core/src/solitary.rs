//! Solitary waves of the flat-bottom classical Boussinesq system and
//! KdV-type approximate initial data.
//!
//! A wave of speed `c` satisfies `zeta = u / (c - eps u)` and
//! `(c mu / 3) u'' + (eps / 2) u^2 - c u + u / (c - eps u) = 0`, whose first
//! integral is `(c mu / 6) u'^2 = G(u)`. Profiles are built by integrating
//! the first integral from the crest in the variable `s = sqrt(B - u)`,
//! which removes the square-root singularity at the turning point.

use crate::spline::gauss_rule;
use crate::{FemError, Result};
use std::io::Write;

/// Below this `eps A` the speed relation is evaluated by its series.
const SMALL_AMPLITUDE: f64 = 0.1;

/// `S(a) = (1 + a) ln(1 + a) - a`, accurate for small `a`.
fn s_function(a: f64) -> f64 {
    if a.abs() < SMALL_AMPLITUDE {
        // sum_{n >= 2} (-1)^n a^n / (n (n - 1))
        let mut sum = 0.0;
        let mut pow = a * a;
        for n in 2..40 {
            let term = pow / (n * (n - 1)) as f64;
            sum += if n % 2 == 0 { term } else { -term };
            pow *= a;
        }
        sum
    } else {
        (1.0 + a) * a.ln_1p() - a
    }
}

/// Speed of the solitary wave of `zeta`-amplitude `amplitude`.
pub fn speed_from_amplitude(eps: f64, amplitude: f64) -> Result<f64> {
    let a = eps * amplitude;
    if !(a > 0.0) || !a.is_finite() {
        return Err(FemError::Solitary(format!(
            "eps * A must be positive, got {a}"
        )));
    }
    let ratio = (s_function(a) / (a * a)).sqrt();
    Ok(6f64.sqrt() * (1.0 + a) / (3.0 + 2.0 * a).sqrt() * ratio)
}

/// Inverse of [`speed_from_amplitude`] by bracketing and bisection.
pub fn amplitude_from_speed(eps: f64, c: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(FemError::Solitary(format!("eps must be positive, got {eps}")));
    }
    if !(c > 1.0) || !c.is_finite() {
        return Err(FemError::Solitary(format!("speed {c} <= 1 is subcritical")));
    }
    let f = |a: f64| speed_from_amplitude(1.0, a).map(|s| s - c);
    // c(a) > 1 + a/3 for a > 0 bounds the root by 3 (c - 1)
    let (mut lo, mut hi) = (0.0f64, 3.0 * (c - 1.0));
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(FemError::Solitary(format!("no amplitude for speed {c}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = if f(hi)?.abs() < f(lo.max(f64::MIN_POSITIVE))?.abs() {
        hi
    } else {
        lo.max(f64::MIN_POSITIVE)
    };
    Ok(a / eps)
}

/// `u`-amplitude `B` of the wave with `zeta`-amplitude `A`.
pub fn u_amplitude(eps: f64, c: f64, amplitude: f64) -> f64 {
    c * amplitude / (1.0 + eps * amplitude)
}

/// Residuals of the amplitude relations: `A - B / (c - eps B)` and the first
/// integral evaluated at the crest, scaled by `B^2`.
pub fn amplitude_residuals(eps: f64, c: f64, a: f64, b: f64) -> (f64, f64) {
    let r1 = a - b / (c - eps * b);
    (r1, g_reduced(eps, c, b))
}

/// `Phi(z) = sum_{n >= 3} z^(n - 2) / n`.
fn phi(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut sum = 0.0;
        let mut pow = z;
        for n in 3..80 {
            sum += pow / n as f64;
            pow *= z;
            if pow.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        (-(-z).ln_1p() - z - 0.5 * z * z) / (z * z)
    }
}

/// `Phi'(z) = sum_{n >= 3} (n - 2) z^(n - 3) / n`.
fn phi_prime(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut sum = 0.0;
        let mut pow = 1.0;
        for n in 3..80 {
            sum += (n - 2) as f64 * pow / n as f64;
            pow *= z;
            if pow.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        1.0 / (1.0 - z) - 2.0 * phi(z) / z
    }
}

/// `g(u) = G(u) / u^2`.
fn g_reduced(eps: f64, c: f64, u: f64) -> f64 {
    0.5 * c - 0.5 / c - eps * u / 6.0 - phi(eps * u / c) / c
}

/// Left side of the first integral, `(c mu / 6) u'^2 - G(u)` written in the
/// logarithmic form.
pub fn first_integral(eps: f64, mu: f64, c: f64, u: f64, du: f64) -> f64 {
    c * mu / 6.0 * du * du + eps / 6.0 * u.powi(3)
        - 0.5 * c * u * u
        - u / eps
        - c / (eps * eps) * (-eps * u / c).ln_1p()
}

/// Same quantity without cancellation for small `eps u`.
fn first_integral_stable(eps: f64, mu: f64, c: f64, u: f64, du: f64) -> f64 {
    c * mu / 6.0 * du * du - u * u * g_reduced(eps, c, u)
}

/// Residual of the profile equation `(c mu / 3) u'' + (eps/2) u^2 - c u + u/(c - eps u)`.
pub fn profile_residual(eps: f64, mu: f64, c: f64, u: f64, d2u: f64) -> f64 {
    c * mu / 3.0 * d2u + 0.5 * eps * u * u - c * u + u / (c - eps * u)
}

/// Decay rate `lambda` of the tails, `u ~ exp(-lambda |xi|)`.
pub fn decay_rate(mu: f64, c: f64) -> f64 {
    (3.0 * (c * c - 1.0) / (c * c * mu)).sqrt()
}

/// Sampled solitary-wave profile, even about `xi = 0`.
#[derive(Debug, Clone)]
pub struct SolitaryWave {
    pub eps: f64,
    pub mu: f64,
    pub speed: f64,
    /// Maximum of `zeta`.
    pub amplitude: f64,
    /// Maximum of `u`.
    pub u_amplitude: f64,
    /// The profile is zero for `|xi| >= half_length`.
    pub half_length: f64,
    step: f64,
    u: Vec<f64>,
    du: Vec<f64>,
}

/// Number of sampling intervals on `[0, half_length]`.
pub const PROFILE_INTERVALS: usize = 20000;

/// Tail factor: the profile is cut where `lambda xi = TAIL_DECAY`.
const TAIL_DECAY: f64 = 38.0;

impl SolitaryWave {
    /// Profile of the wave travelling at speed `c`.
    pub fn new(eps: f64, mu: f64, c: f64) -> Result<Self> {
        Self::with_resolution(eps, mu, c, PROFILE_INTERVALS)
    }

    /// Profile of the wave of `zeta`-amplitude `amplitude`.
    pub fn from_amplitude(eps: f64, mu: f64, amplitude: f64) -> Result<Self> {
        let c = speed_from_amplitude(eps, amplitude)?;
        Self::new(eps, mu, c)
    }

    pub fn with_resolution(eps: f64, mu: f64, c: f64, intervals: usize) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(FemError::Solitary(format!("mu must be positive, got {mu}")));
        }
        if intervals < 16 {
            return Err(FemError::Solitary("too few profile intervals".into()));
        }
        let amplitude = amplitude_from_speed(eps, c)?;
        let b = u_amplitude(eps, c, amplitude);
        let lambda = decay_rate(mu, c);
        let half_length = TAIL_DECAY / lambda;
        let step = half_length / intervals as f64;

        let rule = gauss_rule(10)?;
        let scale = (6.0 / (c * mu)).sqrt();
        // s' = (B - s^2) sqrt(6 q(s) / (c mu)) / 2 with q > 0
        let rate = |s: f64| {
            let s2 = s * s;
            let q = eps / 6.0
                + eps / (c * c)
                    * rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&t, &w)| w * phi_prime(eps * (b - t * s2) / c))
                        .sum::<f64>();
            0.5 * (b - s2) * scale * q.sqrt()
        };

        let mut u = Vec::with_capacity(intervals + 1);
        let mut du = Vec::with_capacity(intervals + 1);
        let mut s = 0.0f64;
        const SUBSTEPS: usize = 4;
        let k = step / SUBSTEPS as f64;
        for j in 0..=intervals {
            let sp = rate(s);
            u.push(b - s * s);
            du.push(-2.0 * s * sp);
            if j == intervals {
                break;
            }
            for _ in 0..SUBSTEPS {
                let k1 = rate(s);
                let k2 = rate(s + 0.5 * k * k1);
                let k3 = rate(s + 0.5 * k * k2);
                let k4 = rate(s + k * k3);
                s += k / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        Ok(Self {
            eps,
            mu,
            speed: c,
            amplitude,
            u_amplitude: b,
            half_length,
            step,
            u,
            du,
        })
    }

    /// `(u_s, u_s')` at `xi`, by cubic Hermite interpolation of the samples.
    pub fn u_jet(&self, xi: f64) -> (f64, f64) {
        let sign = if xi < 0.0 { -1.0 } else { 1.0 };
        let r = xi.abs();
        if r >= self.half_length {
            return (0.0, 0.0);
        }
        let t = r / self.step;
        let j = (t.floor() as usize).min(self.u.len() - 2);
        let th = t - j as f64;
        let h = self.step;
        let (u0, u1, d0, d1) = (self.u[j], self.u[j + 1], self.du[j] * h, self.du[j + 1] * h);
        let th2 = th * th;
        let th3 = th2 * th;
        let v = (2.0 * th3 - 3.0 * th2 + 1.0) * u0
            + (th3 - 2.0 * th2 + th) * d0
            + (-2.0 * th3 + 3.0 * th2) * u1
            + (th3 - th2) * d1;
        let dv = ((6.0 * th2 - 6.0 * th) * u0
            + (3.0 * th2 - 4.0 * th + 1.0) * d0
            + (-6.0 * th2 + 6.0 * th) * u1
            + (3.0 * th2 - 2.0 * th) * d1)
            / h;
        (v, sign * dv)
    }

    pub fn u(&self, xi: f64) -> f64 {
        self.u_jet(xi).0
    }

    /// `(zeta_s, zeta_s')` at `xi`.
    pub fn zeta_jet(&self, xi: f64) -> (f64, f64) {
        let (u, du) = self.u_jet(xi);
        let den = self.speed - self.eps * u;
        (u / den, self.speed * du / (den * den))
    }

    pub fn zeta(&self, xi: f64) -> f64 {
        self.zeta_jet(xi).0
    }

    /// Sample abscissae `xi_j >= 0` with the stored `(u, u')`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.u.len()).map(move |j| (j as f64 * self.step, self.u[j], self.du[j]))
    }

    /// Largest first-integral residual over the stored samples.
    pub fn first_integral_residual(&self) -> f64 {
        self.samples()
            .map(|(_, u, du)| first_integral_stable(self.eps, self.mu, self.speed, u, du).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|u(xi) - u(-xi)|` over the sample points.
    pub fn evenness_defect(&self) -> f64 {
        self.samples()
            .map(|(x, _, _)| (self.u(x) - self.u(-x)).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `xi,u,zeta` over `[-half_length, half_length]` every `stride`
    /// samples.
    pub fn write_csv(&self, out: &mut impl Write, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        writeln!(out, "xi,u,zeta")?;
        let n = self.u.len() - 1;
        let idx: Vec<i64> = (-(n as i64)..=n as i64).step_by(stride).collect();
        for j in idx {
            let xi = j as f64 * self.step;
            let u = self.u[j.unsigned_abs() as usize];
            let z = u / (self.speed - self.eps * u);
            writeln!(out, "{xi:e},{u:e},{z:e}")?;
        }
        Ok(())
    }
}

/// Profile on a uniform grid over `[0, half_length]` computed by
/// second-order central differences and damped Newton iteration.
#[derive(Debug, Clone)]
pub struct FdProfile {
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
}

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` without pivoting.
fn tridiagonal_solve(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for i in 0..n {
        let den = b[i] - if i > 0 { a[i] * cp[i - 1] } else { 0.0 };
        if den == 0.0 || !den.is_finite() {
            return Err(FemError::Newton(format!("singular jacobian at row {i}")));
        }
        cp[i] = c[i] / den;
        dp[i] = (d[i] - if i > 0 { a[i] * dp[i - 1] } else { 0.0 }) / den;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        dp[i] -= cp[i] * dp[i + 1];
    }
    Ok(dp)
}

/// Finite-difference solution of the profile equation with `u'(0) = 0` and
/// `u(half_length) = 0`, started from `B sech^2(lambda xi / 2)`.
///
/// The even extension removes the translation mode, which is otherwise
/// singular to within `exp(-lambda half_length)`.
pub fn solve_profile_fd(eps: f64, mu: f64, c: f64, half_length: f64, n: usize) -> Result<FdProfile> {
    if n < 8 {
        return Err(FemError::Solitary("too few grid intervals".into()));
    }
    let amplitude = amplitude_from_speed(eps, c)?;
    let b0 = u_amplitude(eps, c, amplitude);
    let lambda = decay_rate(mu, c);
    let h = half_length / n as f64;
    let xi: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    // unknowns u_0 .. u_{n-1}; u_n = 0
    let m = n;
    let d2 = c * mu / (3.0 * h * h);
    let neighbours = |v: &[f64], i: usize| -> (f64, f64) {
        let r = if i + 1 == m { 0.0 } else { v[i + 1] };
        let l = if i == 0 { r } else { v[i - 1] };
        (l, r)
    };
    let residual = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let (l, r) = neighbours(v, i);
                d2 * (l - 2.0 * v[i] + r) + 0.5 * eps * v[i] * v[i] - c * v[i]
                    + v[i] / (c - eps * v[i])
            })
            .collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut last_err = String::new();
    for scale in [1.0, 1.5, 0.75, 2.0] {
        let mut v: Vec<f64> = xi[..n]
            .iter()
            .map(|&x| scale * b0 / (0.5 * lambda * x).cosh().powi(2))
            .collect();
        let mut r = residual(&v);
        let mut ok = false;
        let mut iterations = 0;
        for it in 0..100 {
            iterations = it;
            let rn = norm(&r);
            if rn < 1e-10 * b0 {
                ok = true;
                break;
            }
            let mut lo = vec![d2; m];
            let mut up = vec![d2; m];
            up[0] = 2.0 * d2;
            lo[0] = 0.0;
            up[m - 1] = 0.0;
            let diag: Vec<f64> = v
                .iter()
                .map(|&vi| {
                    let den = c - eps * vi;
                    -2.0 * d2 + eps * vi - c + c / (den * den)
                })
                .collect();
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let delta = match tridiagonal_solve(&lo, &diag, &up, &rhs) {
                Ok(d) => d,
                Err(e) => {
                    last_err = e.to_string();
                    break;
                }
            };
            let mut lam = 1.0;
            let mut accepted = false;
            while lam > 1e-4 {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + lam * d).collect();
                if trial.iter().all(|&t| c - eps * t > 0.0) {
                    let rt = residual(&trial);
                    if norm(&rt) < (1.0 - 1e-4 * lam) * rn {
                        v = trial;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                last_err = format!("line search stalled at residual {rn:e}");
                break;
            }
            if norm(&delta) < 1e-14 * b0 {
                ok = true;
                break;
            }
        }
        if ok && norm(&v) > 1e-8 {
            let mut u = v;
            u.push(0.0);
            return Ok(FdProfile { xi, u, iterations });
        }
        if ok {
            last_err = "collapsed to the zero solution".into();
        }
    }
    Err(FemError::Newton(last_err))
}

/// Bottom geometry under approximate KdV initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// `eta_b = alpha x`; the pulse moves towards the shore at `x = 0`.
    Slope(f64),
    /// Constant depth `h0`; the pulse moves in the positive direction.
    FlatDepth(f64),
}

/// KdV solitary pulse `zeta_0 = a0 sech^2(k (x - x0))` and the velocity
/// obtained from the continuity equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvInitialData {
    pub a0: f64,
    pub x0: f64,
    pub geometry: Geometry,
}

impl KdvInitialData {
    pub fn new(a0: f64, x0: f64, geometry: Geometry) -> Result<Self> {
        if !(a0 > 0.0) {
            return Err(FemError::Solitary(format!("a0 must be positive, got {a0}")));
        }
        match geometry {
            Geometry::Slope(a) | Geometry::FlatDepth(a) if !(a > 0.0) => {
                return Err(FemError::Solitary("geometry parameter must be positive".into()))
            }
            _ => {}
        }
        Ok(Self { a0, x0, geometry })
    }

    fn depth(&self) -> f64 {
        match self.geometry {
            Geometry::Slope(_) => 1.0,
            Geometry::FlatDepth(h0) => h0,
        }
    }

    fn wavenumber(&self) -> f64 {
        0.5 * (3.0 * self.a0 / self.depth().powi(3)).sqrt()
    }

    /// `(zeta_0, zeta_0')`.
    pub fn zeta(&self, x: f64) -> (f64, f64) {
        let k = self.wavenumber();
        let arg = k * (x - self.x0);
        let sech2 = 1.0 / arg.cosh().powi(2);
        (self.a0 * sech2, -2.0 * self.a0 * k * sech2 * arg.tanh())
    }

    /// `(u_0, u_0')`.
    pub fn u(&self, x: f64) -> (f64, f64) {
        let (z, dz) = self.zeta(x);
        let (c, d, dd) = match self.geometry {
            Geometry::Slope(alpha) => (-(1.0 + 0.5 * self.a0), alpha * x, alpha),
            Geometry::FlatDepth(h0) => (h0.sqrt() * (1.0 + 0.5 * self.a0 / h0), h0, 0.0),
        };
        let den = d + z;
        (c * z / den, c * (dz * d - z * dd) / (den * den))
    }
}

/// Convenience form of [`KdvInitialData`] returning the two fields.
pub fn kdv_initial_data(
    a0: f64,
    x0: f64,
    geometry: Geometry,
) -> Result<(impl Fn(f64) -> f64, impl Fn(f64) -> f64)> {
    let d = KdvInitialData::new(a0, x0, geometry)?;
    Ok((move |x| d.zeta(x).0, move |x| d.u(x).0))
}
