//! Error norms, convergence rates and wave diagnostics.

use crate::assembly::NORM_POINTS;
use crate::bathymetry::Bathymetry;
use crate::error::{FemError, Result};
use crate::spline::{gauss_rule, SplineSpace};
use crate::timestep::Control;

/// Errors of an approximation: `L2`, `Linf` over the quadrature points,
/// and the `H1` seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorTriple {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

impl ErrorTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2, self.linf, self.h1]
    }
}

/// Errors of `coeffs` against `exact(x) = (v, v')`, using 5-point Gauss per
/// element.
pub fn error_norms(
    space: &SplineSpace,
    coeffs: &[f64],
    exact: impl Fn(f64) -> (f64, f64),
) -> Result<ErrorTriple> {
    if coeffs.len() != space.dim() {
        return Err(FemError::DimensionMismatch {
            expected: space.dim(),
            got: coeffs.len(),
        });
    }
    let rule = gauss_rule(NORM_POINTS)?;
    let part = space.partition();
    let (mut l2, mut linf, mut h1) = (0.0f64, 0.0f64, 0.0f64);
    for e in 0..part.len() {
        let (lo, hi) = (part.node(e), part.node(e + 1));
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = lo + (hi - lo) * t;
            let lb = space.local_basis(e, x);
            let (v, dv) = exact(x);
            let d0 = space.combine(coeffs, &lb, 0) - v;
            let d1 = space.combine(coeffs, &lb, 1) - dv;
            let wx = w * (hi - lo);
            l2 += wx * d0 * d0;
            h1 += wx * d1 * d1;
            linf = linf.max(d0.abs());
        }
    }
    Ok(ErrorTriple {
        l2: l2.sqrt(),
        linf,
        h1: h1.sqrt(),
    })
}

/// One row of a convergence table; `rates[i]` compares with the previous
/// (coarser) row and is `None` on the first row or for a zero error.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub errors: ErrorTriple,
    pub rates: [Option<f64>; 3],
}

/// `log2(e_N / e_2N)` for consecutive entries of a doubling sequence.
pub fn convergence_rates(errors: &[(usize, ErrorTriple)]) -> Result<Vec<RateRow>> {
    let mut rows = Vec::with_capacity(errors.len());
    for (i, &(n, e)) in errors.iter().enumerate() {
        let mut rates = [None; 3];
        if i > 0 {
            let (pn, pe) = errors[i - 1];
            if n != 2 * pn {
                return Err(FemError::Analysis(format!("N = {pn}, {n} is not a doubling")));
            }
            for (j, r) in rates.iter_mut().enumerate() {
                let (a, b) = (pe.as_array()[j], e.as_array()[j]);
                if a > 0.0 && b > 0.0 {
                    *r = Some((a / b).log2());
                }
            }
        }
        rows.push(RateRow { n, errors: e, rates });
    }
    Ok(rows)
}

/// Least-squares slope of `log e` against `log h` over the sequence.
pub fn fitted_rate(errors: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| (-(n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (f(x), x)
}

/// `(zeta_max, x_crest)` of a spline restricted to `[lo, hi]`: the leftmost
/// largest value over the 5-point Gauss points, refined by golden-section
/// search between the neighbouring sample points.
pub fn crest_metrics_in(space: &SplineSpace, zc: &[f64], lo: f64, hi: f64) -> Result<(f64, f64)> {
    let rule = gauss_rule(NORM_POINTS)?;
    let part = space.partition();
    let mut xs = Vec::new();
    for e in 0..part.len() {
        let (a, b) = (part.node(e), part.node(e + 1));
        if b < lo || a > hi {
            continue;
        }
        for t in &rule.nodes {
            let x = a + (b - a) * t;
            if x >= lo && x <= hi {
                xs.push(x);
            }
        }
    }
    if xs.is_empty() {
        return Err(FemError::Analysis(format!("window [{lo}, {hi}] holds no sample points")));
    }
    let mut best = (space.eval(zc, xs[0], 0)?, xs[0], 0usize);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        let v = space.eval(zc, x, 0)?;
        // values equal up to roundoff count as ties
        if v > best.0 + 4.0 * f64::EPSILON * best.0.abs() {
            best = (v, x, i);
        }
    }
    let (vmax, xmax, i) = best;
    let a = if i > 0 { xs[i - 1] } else { xs[i].max(lo) };
    let b = if i + 1 < xs.len() { xs[i + 1] } else { xs[i].min(hi) };
    if b > a {
        let (v, x) = golden_max(|x| space.eval(zc, x, 0).unwrap_or(f64::NEG_INFINITY), a, b);
        if v - vmax > 4.0 * f64::EPSILON * vmax.abs() {
            return Ok((v, x));
        }
    }
    Ok((vmax, xmax))
}

/// Crest over the whole domain; ties go to the leftmost point.
pub fn crest_metrics(space: &SplineSpace, zc: &[f64]) -> Result<(f64, f64)> {
    let p = space.partition();
    crest_metrics_in(space, zc, p.a(), p.b())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionMetrics {
    pub amplitude: f64,
    pub x_crest: f64,
    pub theta: f64,
    /// Measure of `I = {zeta > theta zeta_max}`.
    pub width: f64,
    /// `integral over I of zeta`.
    pub integral: f64,
    /// `(1/|I|) integral over I of zeta`.
    pub mean_height: f64,
    /// `(1/zeta_max) integral over I of zeta`.
    pub equivalent_length: f64,
    /// Measure of `{zeta > zeta_max / 2}` in the window.
    pub half_max_width: f64,
}

/// Points in the window used for superlevel-set measures.
pub const WINDOW_SAMPLES: usize = 2001;

/// Superlevel-set measures of a piecewise-linear sampling: `(|I|, integral
/// over I)` for `I = {f > tau}`.
pub fn superlevel(xs: &[f64], fs: &[f64], tau: f64) -> (f64, f64) {
    let (mut width, mut integral) = (0.0, 0.0);
    for i in 0..xs.len().saturating_sub(1) {
        let (x0, x1, f0, f1) = (xs[i], xs[i + 1], fs[i], fs[i + 1]);
        let (a0, a1) = (f0 > tau, f1 > tau);
        let (lo, hi, flo, fhi) = match (a0, a1) {
            (false, false) => continue,
            (true, true) => (x0, x1, f0, f1),
            (true, false) => {
                let xc = x0 + (tau - f0) / (f1 - f0) * (x1 - x0);
                (x0, xc, f0, tau)
            }
            (false, true) => {
                let xc = x0 + (tau - f0) / (f1 - f0) * (x1 - x0);
                (xc, x1, tau, f1)
            }
        };
        width += hi - lo;
        integral += 0.5 * (flo + fhi) * (hi - lo);
    }
    (width, integral)
}

/// Reflected-wave amplitude and length measures in `window`.
pub fn reflected_wave_metrics(
    space: &SplineSpace,
    zc: &[f64],
    window: (f64, f64),
    theta: f64,
) -> Result<ReflectionMetrics> {
    let (lo, hi) = window;
    if !(hi > lo) || !(theta > 0.0 && theta < 1.0) {
        return Err(FemError::Analysis(format!("bad window {window:?} or theta {theta}")));
    }
    let (amplitude, x_crest) = crest_metrics_in(space, zc, lo, hi)?;
    if !(amplitude > 0.0) {
        return Err(FemError::Analysis("no elevation wave in window".into()));
    }
    let xs: Vec<f64> = (0..WINDOW_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (WINDOW_SAMPLES - 1) as f64)
        .collect();
    let fs = xs.iter().map(|&x| space.eval(zc, x, 0)).collect::<Result<Vec<_>>>()?;
    let (width, integral) = superlevel(&xs, &fs, theta * amplitude);
    if !(width > 0.0) {
        return Err(FemError::Analysis("empty superlevel set".into()));
    }
    let (half_max_width, _) = superlevel(&xs, &fs, 0.5 * amplitude);
    Ok(ReflectionMetrics {
        amplitude,
        x_crest,
        theta,
        width,
        integral,
        mean_height: integral / width,
        equivalent_length: integral / amplitude,
        half_max_width,
    })
}

/// Mean of `zeta_h` over `[lo, hi]`.
pub fn mean_level(space: &SplineSpace, zc: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(FemError::Analysis(format!("empty interval [{lo}, {hi}]")));
    }
    let rule = gauss_rule(NORM_POINTS)?;
    let part = space.partition();
    let (e0, e1) = (part.element_of(lo)?, part.element_of(hi)?);
    let mut sum = 0.0;
    for e in e0..=e1 {
        let a = part.node(e).max(lo);
        let b = part.node(e + 1).min(hi);
        if b <= a {
            continue;
        }
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + (b - a) * t;
            sum += w * (b - a) * space.combine(zc, &space.local_basis(e, x), 0);
        }
    }
    Ok(sum / (hi - lo))
}

/// Linear-theory amplitude of the wave reflected by a slope:
/// `(alpha / 2) sqrt(a0 / 3)`.
pub fn reflection_estimate(alpha: f64, a0: f64) -> f64 {
    0.5 * alpha * (a0 / 3.0).sqrt()
}

/// Green's law `eta_b^{-1/4}`.
pub fn greens_law(eta_b: f64) -> f64 {
    eta_b.powf(-0.25)
}

/// `integral of zeta_h` by exact spline integration.
pub fn conserved_mass(space: &SplineSpace, zc: &[f64]) -> f64 {
    zc.iter().zip(space.basis_integrals()).map(|(c, w)| c * w).sum()
}

/// Time series of `zeta_h` (and `u_h`) at a fixed point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaugeSeries {
    pub x: f64,
    pub times: Vec<f64>,
    pub zeta: Vec<f64>,
    pub u: Vec<f64>,
}

impl GaugeSeries {
    pub fn new(x: f64) -> Self {
        Self {
            x,
            ..Default::default()
        }
    }

    pub fn push(&mut self, t: f64, zeta: f64, u: f64) {
        debug_assert!(self.times.last().is_none_or(|&l| t > l));
        self.times.push(t);
        self.zeta.push(zeta);
        self.u.push(u);
    }

    /// Largest recorded elevation, 0 for an empty series.
    pub fn max_zeta(&self) -> f64 {
        self.zeta.iter().copied().fold(0.0, f64::max)
    }
}

/// Maximal elevation recorded by a gauge at the wall.
pub fn runup_max(series: &GaugeSeries) -> f64 {
    series.max_zeta()
}

/// Fraction of the initial amplitude above which a point belongs to the wave.
pub const WAVE_BODY: f64 = 0.1;

/// Samples `(eta_b(x_crest), zeta_max / a0)` while a wave climbs a slope,
/// from the moment the crest passes `x_start` until `max zeta / eta_b`
/// reaches `stop_ratio`.
#[derive(Debug, Clone)]
pub struct ShoalingTracker {
    space: SplineSpace,
    bathy: Bathymetry,
    a0: f64,
    x_start: f64,
    stop_ratio: f64,
    /// Crests move in this direction (+1 right, -1 left).
    direction: f64,
    sample_x: Vec<f64>,
    sample_hb: Vec<f64>,
    pub curve: Vec<(f64, f64)>,
    pub crest_track: Vec<(f64, f64)>,
}

impl ShoalingTracker {
    pub fn new(
        space: &SplineSpace,
        bathy: &Bathymetry,
        a0: f64,
        x_start: f64,
        stop_ratio: f64,
        rightward: bool,
    ) -> Result<Self> {
        let rule = gauss_rule(NORM_POINTS)?;
        let part = space.partition();
        let mut sample_x = Vec::new();
        let mut sample_hb = Vec::new();
        for e in 0..part.len() {
            let (a, b) = (part.node(e), part.node(e + 1));
            for t in &rule.nodes {
                let x = a + (b - a) * t;
                let h = bathy.depth(x)[0];
                if h > 0.0 {
                    sample_x.push(x);
                    sample_hb.push(h);
                }
            }
        }
        Ok(Self {
            space: space.clone(),
            bathy: bathy.clone(),
            a0,
            x_start,
            stop_ratio,
            direction: if rightward { 1.0 } else { -1.0 },
            sample_x,
            sample_hb,
            curve: Vec::new(),
            crest_track: Vec::new(),
        })
    }

    /// `max zeta / eta_b` over the sample points where the wave is present,
    /// `zeta > WAVE_BODY * a0`. The restriction keeps far tails over a
    /// vanishing depth out of the ratio.
    pub fn nonlinearity(&self, zc: &[f64]) -> Result<f64> {
        let mut m = 0.0f64;
        for (&x, &h) in self.sample_x.iter().zip(&self.sample_hb) {
            let z = self.space.eval(zc, x, 0)?;
            if z > WAVE_BODY * self.a0 {
                m = m.max(z / h);
            }
        }
        Ok(m)
    }

    pub fn observe(&mut self, t: f64, zc: &[f64]) -> Result<Control> {
        if self.nonlinearity(zc)? >= self.stop_ratio {
            return Ok(Control::Stop);
        }
        let (zmax, xc) = crest_metrics(&self.space, zc)?;
        self.crest_track.push((t, xc));
        if (xc - self.x_start) * self.direction >= 0.0 {
            self.curve.push((self.bathy.depth(xc)[0], zmax / self.a0));
        }
        Ok(Control::Continue)
    }
}

/// Samples of `zeta_h`, `u_h` and `eta_b` at `n` uniform points.
pub fn sample_fields(
    space: &SplineSpace,
    zc: &[f64],
    uc: &[f64],
    bathy: &Bathymetry,
    n: usize,
) -> Result<Vec<[f64; 4]>> {
    let p = space.partition();
    (0..n)
        .map(|i| {
            let x = p.a() + p.length() * i as f64 / (n - 1).max(1) as f64;
            Ok([x, space.eval(zc, x, 0)?, space.eval(uc, x, 0)?, bathy.depth(x)[0]])
        })
        .collect()
}

/// Number of separate crests above `threshold`: local maxima of a dense
/// sampling whose value exceeds it.
pub fn count_crests(space: &SplineSpace, zc: &[f64], threshold: f64, samples: usize) -> Result<usize> {
    let p = space.partition();
    let xs: Vec<f64> = (0..samples)
        .map(|i| p.a() + p.length() * i as f64 / (samples - 1) as f64)
        .collect();
    let fs = xs.iter().map(|&x| space.eval(zc, x, 0)).collect::<Result<Vec<_>>>()?;
    let mut count = 0;
    for i in 1..fs.len() - 1 {
        if fs[i] > threshold && fs[i] > fs[i - 1] && fs[i] >= fs[i + 1] {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::l2_project;
    use crate::spline::{EndCondition, Partition};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cubic(a: f64, b: f64, n: usize) -> SplineSpace {
        SplineSpace::cubic(Partition::new(a, b, n).unwrap(), EndCondition::Free).unwrap()
    }

    #[test]
    fn norms_of_members_and_constants() {
        let s = cubic(0.0, 1.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = error_norms(&s, &c, |x| {
            let v = s.eval_all(&c, x).unwrap();
            (v[0], v[1])
        })
        .unwrap();
        assert!(e.l2 < 1e-13 && e.linf < 1e-13 && e.h1 < 1e-13);
        let e = error_norms(&s, &vec![0.0; s.dim()], |_| (1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e.l2, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.linf, 1.0, epsilon = 1e-14);
        assert_eq!(e.h1, 0.0);
    }

    #[test]
    fn rates_table() {
        let t = |v: f64| ErrorTriple { l2: v, linf: v, h1: v };
        let rows = convergence_rates(&[(8, t(1.0)), (16, t(1.0 / 16.0)), (32, t(0.0))]).unwrap();
        assert_eq!(rows[0].rates, [None; 3]);
        assert_abs_diff_eq!(rows[1].rates[0].unwrap(), 4.0, epsilon = 1e-14);
        assert_eq!(rows[2].rates[0], None);
        assert!(convergence_rates(&[(8, t(1.0)), (20, t(0.5))]).is_err());
    }

    #[test]
    fn crest_of_projected_pulse() {
        let s = cubic(0.0, 60.0, 1200);
        let k = 0.5 * (3.0f64 * 0.12).sqrt();
        let zc = l2_project(&s, |x| 0.12 / (k * (x - 30.0)).cosh().powi(2)).unwrap();
        let (m, x) = crest_metrics(&s, &zc).unwrap();
        assert_abs_diff_eq!(m, 0.12, epsilon = 1e-6);
        assert_abs_diff_eq!(x, 30.0, epsilon = 1e-4);
        let flat = vec![0.3; s.dim()];
        let (m, x) = crest_metrics(&s, &flat).unwrap();
        assert_abs_diff_eq!(m, 0.3, epsilon = 1e-15);
        let first = gauss_rule(NORM_POINTS).unwrap().nodes[0] * s.partition().h();
        assert_abs_diff_eq!(x, first, epsilon = 1e-14);
    }

    #[test]
    fn crest_matches_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let s = cubic(0.0, 1.0, 12);
            let c: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (m, _) = crest_metrics(&s, &c).unwrap();
            let coarse = {
                let r = gauss_rule(NORM_POINTS).unwrap();
                let mut best = f64::NEG_INFINITY;
                for e in 0..12 {
                    for t in &r.nodes {
                        best = best.max(s.eval(&c, (e as f64 + t) / 12.0, 0).unwrap());
                    }
                }
                best
            };
            assert!(m >= coarse);
            let dense = (0..=100_000)
                .map(|i| s.eval(&c, i as f64 / 1e5, 0).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((m - dense).abs() < 1e-8, "{m} vs {dense}");
        }
    }

    #[test]
    fn box_pulse_rule() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 100.0).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| if (3.0..=5.0).contains(&x) { 0.7 } else { 0.0 }).collect();
        let (w, i) = superlevel(&xs, &fs, 0.8 * 0.7);
        assert!((w - 2.0).abs() < 0.02);
        assert!((i / w - 0.7).abs() < 1e-3);
        let (w, _) = superlevel(&[0.0, 1.0], &[0.0, 1.0], 0.5);
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn reflected_metrics_on_spline() {
        let s = cubic(0.0, 100.0, 1000);
        let zc = l2_project(&s, |x| 0.005 * (-((x - 40.0) / 8.0f64).powi(2)).exp()).unwrap();
        let r = reflected_wave_metrics(&s, &zc, (0.0, 80.0), 0.8).unwrap();
        assert_abs_diff_eq!(r.amplitude, 0.005, epsilon = 1e-8);
        // Gaussian superlevel set at 0.8: |x| < 8 sqrt(ln 1.25)
        let half = 8.0 * 1.25f64.ln().sqrt();
        assert!((r.width - 2.0 * half).abs() < 0.05);
        assert!(r.mean_height > 0.8 * 0.005 && r.mean_height < 0.005);
        assert!(reflected_wave_metrics(&s, &vec![0.0; s.dim()], (0.0, 80.0), 0.8).is_err());
    }

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(reflection_estimate(1.0 / 20.0, 0.12), 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(reflection_estimate(1.0 / 40.0, 0.1), 0.0022822, epsilon = 1e-7);
        assert_abs_diff_eq!(reflection_estimate(1.0 / 40.0, 0.12), 0.0025, epsilon = 1e-15);
        assert_eq!(reflection_estimate(0.05, 0.0), 0.0);
        assert_abs_diff_eq!(reflection_estimate(1.0 / 20.0, 0.18), 6.124e-3, epsilon = 1e-6);
        assert_abs_diff_eq!(reflection_estimate(1.0 / 40.0, 0.18), 3.062e-3, epsilon = 1e-6);
        assert_eq!(greens_law(1.0), 1.0);
        assert_abs_diff_eq!(greens_law(0.5), 2f64.powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(greens_law(0.0625), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn mass_by_spline_integration() {
        let s = cubic(0.0, 1.0, 7);
        assert_abs_diff_eq!(conserved_mass(&s, &vec![1.0; s.dim()]), 1.0, epsilon = 1e-15);
        let s = cubic(0.0, 40.0, 200);
        let zc = l2_project(&s, |x| 0.1 / (0.3 * (x - 20.0)).cosh().powi(2)).unwrap();
        let g = gauss_rule(5).unwrap();
        let q: f64 = (0..200)
            .map(|e| g.integrate(e as f64 * 0.2, (e + 1) as f64 * 0.2, |x| s.eval(&zc, x, 0).unwrap()))
            .sum();
        assert_abs_diff_eq!(conserved_mass(&s, &zc), q, epsilon = 1e-12);
    }

    #[test]
    fn gauge_and_runup() {
        let mut g = GaugeSeries::new(1.0);
        assert_eq!(runup_max(&g), 0.0);
        g.push(0.0, 0.1, 0.0);
        g.push(0.5, 0.3, 0.0);
        g.push(1.0, -0.2, 0.0);
        assert_eq!(runup_max(&g), 0.3);
    }

    #[test]
    fn crest_counting() {
        let s = cubic(0.0, 100.0, 1000);
        let zc = l2_project(&s, |x| {
            0.5 / (0.5 * (x - 30.0)).cosh().powi(2) + 0.3 / (0.5 * (x - 60.0)).cosh().powi(2)
        })
        .unwrap();
        assert_eq!(count_crests(&s, &zc, 0.25 * 0.5, 4001).unwrap(), 2);
        assert_eq!(count_crests(&s, &zc, 0.4, 4001).unwrap(), 1);
    }
}
