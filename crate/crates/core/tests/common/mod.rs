//! Independent dense oracles shared by the integration tests.

#![allow(dead_code)]

use cbfem::bathymetry::Bathymetry;
use cbfem::models::{ModelKind, State};
use cbfem::spline::SplineSpace;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// `(x, w)` of an `n`-point rule on every element of the space.
pub fn element_rule(space: &SplineSpace, n: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(n);
    let part = space.partition();
    let mut out = Vec::with_capacity(part.len() * n);
    for e in 0..part.len() {
        let (a, b) = (part.node(e), part.node(e + 1));
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in xs.iter().zip(&ws) {
            out.push((m + r * x, r * w));
        }
    }
    out
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Values and slopes of every basis function at `x`.
pub fn basis_jets(space: &SplineSpace, x: f64) -> Vec<(f64, f64)> {
    let n = space.dim();
    let mut c = vec![0.0; n];
    (0..n)
        .map(|i| {
            c[i] = 1.0;
            let v = (space.eval(&c, x, 0).unwrap(), space.eval(&c, x, 1).unwrap());
            c[i] = 0.0;
            v
        })
        .collect()
}

/// Right-hand side of the semidiscrete system with walls at both ends,
/// assembled densely with an `n`-point rule per element:
/// `(zeta_t, phi) = ((eta_b + eps zeta) u, phi')` and
/// `A(u_t, psi) = (w (-zeta_x - eps u u_x), psi)` with `w = eta_b` for CBs.
pub fn dense_rhs(
    space: &SplineSpace,
    bathy: &Bathymetry,
    kind: ModelKind,
    eps: f64,
    mu: f64,
    state: &State,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dim = space.dim();
    let mut m = vec![vec![0.0; dim]; dim];
    let mut a = vec![vec![0.0; dim]; dim];
    let mut lz = vec![0.0; dim];
    let mut lu = vec![0.0; dim];
    for (x, w) in element_rule(space, n) {
        let jets = basis_jets(space, x);
        let d = bathy.depth(x);
        let (hb, hbxx) = (d[0], d[2]);
        let (c0, c1) = match kind {
            ModelKind::Sw => (1.0, 0.0),
            ModelKind::Cb | ModelKind::Cbw => (1.0, mu / 3.0),
            ModelKind::Cbs => (hb - 0.5 * mu * hb * hb * hbxx, mu / 3.0 * hb.powi(3)),
        };
        let weight = if kind == ModelKind::Cbs { hb } else { 1.0 };
        let (mut z, mut zx, mut u, mut ux) = (0.0, 0.0, 0.0, 0.0);
        for (j, &(v, s)) in jets.iter().enumerate() {
            z += state.zc[j] * v;
            zx += state.zc[j] * s;
            u += state.uc[j] * v;
            ux += state.uc[j] * s;
        }
        let flux = (hb + eps * z) * u;
        let ru = weight * (-zx - eps * u * ux);
        for i in 0..dim {
            let (vi, si) = jets[i];
            lz[i] += w * flux * si;
            lu[i] += w * ru * vi;
            for j in 0..dim {
                let (vj, sj) = jets[j];
                m[i][j] += w * vi * vj;
                a[i][j] += w * (c0 * vi * vj + c1 * si * sj);
            }
        }
    }
    let zdot = dense_solve(m, lz);
    let inner: Vec<Vec<f64>> = (1..dim - 1).map(|i| a[i][1..dim - 1].to_vec()).collect();
    let mut udot = vec![0.0; dim];
    udot[1..dim - 1].copy_from_slice(&dense_solve(inner, lu[1..dim - 1].to_vec()));
    (zdot, udot)
}
