//! Uniform partitions, clamped B-spline spaces and Gauss–Legendre rules.
//!
//! A [`SplineSpace`] of order `r` (degree `r - 1`) and smoothness `k` is built
//! on a clamped knot vector: the endpoint knots are repeated `r` times and
//! every interior node `r - 1 - k` times. With that choice only the first
//! (last) basis function is nonzero at the left (right) endpoint, so the
//! zero-endpoint subspace is obtained by dropping exactly those two.

use crate::error::{FemError, Result};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 7;
const MAXB: usize = MAX_DEGREE + 1;

/// Uniform partition `a = x_0 < x_1 < ... < x_N = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    a: f64,
    b: f64,
    n: usize,
}

impl Partition {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(FemError::InvalidPartition(format!(
                "need finite a < b, got [{a}, {b}]"
            )));
        }
        if n < 2 {
            return Err(FemError::InvalidPartition(format!(
                "need at least 2 elements, got {n}"
            )));
        }
        Ok(Self { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn node(&self, i: usize) -> f64 {
        if i >= self.n {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Element index of `x` using half-open elements `[x_i, x_{i+1})`, the
    /// last element closed.
    pub fn element_of(&self, x: f64) -> Result<usize> {
        if !self.contains(x) {
            return Err(FemError::OutOfDomain {
                x,
                a: self.a,
                b: self.b,
            });
        }
        let mut e = ((x - self.a) / self.h()).floor() as isize;
        e = e.clamp(0, self.n as isize - 1);
        let mut e = e as usize;
        // floor() can land one element off near a node
        while e > 0 && x < self.node(e) {
            e -= 1;
        }
        while e + 1 < self.n && x >= self.node(e + 1) {
            e += 1;
        }
        Ok(e)
    }
}

/// Boundary treatment of a spline space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndCondition {
    /// The full space `S_h`.
    Free,
    /// `S_{h,0}`: functions vanishing at both endpoints.
    ZeroEndpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    partition: Partition,
    degree: usize,
    smoothness: usize,
    bc: EndCondition,
    knots: Vec<f64>,
    full_dim: usize,
}

/// Values and first two derivatives of the `degree + 1` basis functions
/// that are nonzero on one element.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    /// Full-space index of the first nonzero function.
    pub first: usize,
    pub count: usize,
    pub ders: [[f64; MAXB]; 3],
}

impl SplineSpace {
    /// Builds the space of piecewise polynomials of order `r` (degree `r-1`)
    /// that are `C^k` at the interior nodes.
    pub fn new(partition: Partition, r: usize, k: usize, bc: EndCondition) -> Result<Self> {
        if r < 2 || r > MAX_DEGREE + 1 {
            return Err(FemError::InvalidSpace(format!(
                "order r = {r} outside 2..={}",
                MAX_DEGREE + 1
            )));
        }
        if k + 2 > r {
            return Err(FemError::InvalidSpace(format!(
                "smoothness k = {k} must satisfy k <= r - 2 = {}",
                r - 2
            )));
        }
        let p = r - 1;
        let mult = p - k;
        let n = partition.len();
        let mut knots = Vec::with_capacity(2 * (p + 1) + (n - 1) * mult);
        knots.extend(std::iter::repeat(partition.a()).take(p + 1));
        for i in 1..n {
            let xi = partition.node(i);
            knots.extend(std::iter::repeat(xi).take(mult));
        }
        knots.extend(std::iter::repeat(partition.b()).take(p + 1));
        let full_dim = knots.len() - p - 1;
        if bc == EndCondition::ZeroEndpoints && full_dim < 3 {
            return Err(FemError::InvalidSpace(format!(
                "N = {n} too small for a zero-endpoint space of order {r}"
            )));
        }
        Ok(Self {
            partition,
            degree: p,
            smoothness: k,
            bc,
            knots,
            full_dim,
        })
    }

    /// Maximally smooth splines of order `r` (`k = r - 2`).
    pub fn smooth(partition: Partition, r: usize, bc: EndCondition) -> Result<Self> {
        Self::new(partition, r, r.saturating_sub(2), bc)
    }

    /// Cubic splines, the workhorse of every experiment.
    pub fn cubic(partition: Partition, bc: EndCondition) -> Result<Self> {
        Self::smooth(partition, 4, bc)
    }

    /// The same partition and polynomial space with a different end condition.
    pub fn with_bc(&self, bc: EndCondition) -> Result<Self> {
        Self::new(self.partition, self.degree + 1, self.smoothness, bc)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.degree + 1
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn bc(&self) -> EndCondition {
        self.bc
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Dimension of the space (after dropping endpoint functions for
    /// [`EndCondition::ZeroEndpoints`]).
    pub fn dim(&self) -> usize {
        match self.bc {
            EndCondition::Free => self.full_dim,
            EndCondition::ZeroEndpoints => self.full_dim - 2,
        }
    }

    /// Dimension of the underlying unconstrained space.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    /// Maps a full-space basis index to this space's index.
    #[inline]
    pub fn local_index(&self, full: usize) -> Option<usize> {
        match self.bc {
            EndCondition::Free => Some(full),
            EndCondition::ZeroEndpoints => {
                if full == 0 || full + 1 == self.full_dim {
                    None
                } else {
                    Some(full - 1)
                }
            }
        }
    }

    #[inline]
    fn multiplicity(&self) -> usize {
        self.degree - self.smoothness
    }

    /// Knot span index of element `e`.
    #[inline]
    fn span(&self, e: usize) -> usize {
        self.degree + e * self.multiplicity()
    }

    /// Full-space index of the first function supported on element `e`.
    #[inline]
    pub fn first_basis(&self, e: usize) -> usize {
        e * self.multiplicity()
    }

    /// Basis values and derivatives (orders 0..=2) on element `e` at `x`.
    /// `x` is not required to lie inside the element; the polynomial piece of
    /// element `e` is evaluated.
    pub fn local_basis(&self, e: usize, x: f64) -> LocalBasis {
        let p = self.degree;
        let ders = ders_basis_funs(&self.knots, self.span(e), x, p);
        LocalBasis {
            first: self.first_basis(e),
            count: p + 1,
            ders,
        }
    }

    /// Basis data at `x`, locating the element with the half-open convention.
    pub fn basis_at(&self, x: f64) -> Result<LocalBasis> {
        let e = self.partition.element_of(x)?;
        Ok(self.local_basis(e, x))
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(FemError::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// `sum_i c_i phi_i^{(deriv)}(x)`.
    pub fn eval(&self, coeffs: &[f64], x: f64, deriv: usize) -> Result<f64> {
        if deriv > 2 {
            return Err(FemError::UnsupportedDerivative(deriv));
        }
        self.check_len(coeffs)?;
        let lb = self.basis_at(x)?;
        Ok(self.combine(coeffs, &lb, deriv))
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_all(&self, coeffs: &[f64], x: f64) -> Result<[f64; 3]> {
        self.check_len(coeffs)?;
        let lb = self.basis_at(x)?;
        Ok([
            self.combine(coeffs, &lb, 0),
            self.combine(coeffs, &lb, 1),
            self.combine(coeffs, &lb, 2),
        ])
    }

    #[inline]
    pub fn combine(&self, coeffs: &[f64], lb: &LocalBasis, deriv: usize) -> f64 {
        let mut s = 0.0;
        for j in 0..lb.count {
            if let Some(i) = self.local_index(lb.first + j) {
                s += coeffs[i] * lb.ders[deriv][j];
            }
        }
        s
    }

    /// Samples the function on `n` equispaced points covering `[a, b]`.
    pub fn sample(&self, coeffs: &[f64], n: usize, deriv: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (a, b) = (self.partition.a(), self.partition.b());
        let n = n.max(2);
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let ys = xs
            .iter()
            .map(|&x| self.eval(coeffs, x, deriv))
            .collect::<Result<Vec<_>>>()?;
        Ok((xs, ys))
    }

    /// Exact integrals of the basis functions, `(t_{i+p+1} - t_i) / (p + 1)`.
    pub fn basis_integrals(&self) -> Vec<f64> {
        let p = self.degree;
        let mut out = vec![0.0; self.dim()];
        for full in 0..self.full_dim {
            if let Some(i) = self.local_index(full) {
                out[i] = (self.knots[full + p + 1] - self.knots[full]) / (p + 1) as f64;
            }
        }
        out
    }

    /// Coefficient vector of this space padded to the full space (zeros at
    /// dropped endpoint functions).
    pub fn to_full(&self, coeffs: &[f64]) -> Vec<f64> {
        match self.bc {
            EndCondition::Free => coeffs.to_vec(),
            EndCondition::ZeroEndpoints => {
                let mut v = Vec::with_capacity(self.full_dim);
                v.push(0.0);
                v.extend_from_slice(coeffs);
                v.push(0.0);
                v
            }
        }
    }
}

/// Nonzero B-spline basis functions and their derivatives up to order 2 on
/// knot span `span` (Piegl–Tiller recurrence).
fn ders_basis_funs(knots: &[f64], span: usize, x: f64, p: usize) -> [[f64; MAXB]; 3] {
    let mut ndu = [[0.0f64; MAXB]; MAXB];
    let mut left = [0.0f64; MAXB];
    let mut right = [0.0f64; MAXB];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = [[0.0f64; MAXB]; 3];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = p.min(2);
    let mut a = [[0.0f64; MAXB]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            let mut j = j1;
            while j <= j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
                j += 1;
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd {
        for j in 0..=p {
            ders[k][j] *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

/// Gauss–Legendre rule mapped to the reference element `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let len = hi - lo;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(lo + len * t))
            .sum::<f64>()
            * len
    }
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`, exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=10).contains(&n) {
        return Err(FemError::UnsupportedQuadrature(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Basis data of a space tabulated at the quadrature points of every element.
#[derive(Debug, Clone)]
pub struct QuadTable {
    pub npts: usize,
    pub nb: usize,
    /// Physical abscissae, element-major.
    pub x: Vec<f64>,
    /// Weights scaled by the element length.
    pub w: Vec<f64>,
    /// Full-space index of the first active basis function per element.
    pub first: Vec<usize>,
    /// `ders[(point * 3 + d) * nb + j]`.
    ders: Vec<f64>,
}

impl QuadTable {
    pub fn new(space: &SplineSpace, rule: &QuadratureRule) -> Self {
        let part = space.partition();
        let n_el = part.len();
        let nq = rule.order();
        let nb = space.degree() + 1;
        let h = part.h();
        let mut x = Vec::with_capacity(n_el * nq);
        let mut w = Vec::with_capacity(n_el * nq);
        let mut first = Vec::with_capacity(n_el);
        let mut ders = Vec::with_capacity(n_el * nq * 3 * nb);
        for e in 0..n_el {
            let lo = part.node(e);
            let len = part.node(e + 1) - lo;
            first.push(space.first_basis(e));
            for q in 0..nq {
                let xq = lo + len * rule.nodes[q];
                x.push(xq);
                w.push(rule.weights[q] * len);
                let lb = space.local_basis(e, xq);
                for d in 0..3 {
                    ders.extend_from_slice(&lb.ders[d][..nb]);
                }
            }
        }
        debug_assert!(h > 0.0);
        Self {
            npts: nq,
            nb,
            x,
            w,
            first,
            ders,
        }
    }

    pub fn elements(&self) -> usize {
        self.first.len()
    }

    /// Derivative `d` of the local basis at global point index `g`.
    #[inline]
    pub fn basis(&self, g: usize, d: usize) -> &[f64] {
        let off = (g * 3 + d) * self.nb;
        &self.ders[off..off + self.nb]
    }

    /// Values `(v, v')` of a full-space coefficient vector at point `g` of
    /// element `e`.
    #[inline]
    pub fn value_and_slope(&self, full: &[f64], e: usize, g: usize) -> (f64, f64) {
        let f0 = self.first[e];
        let b0 = self.basis(g, 0);
        let b1 = self.basis(g, 1);
        let mut v = 0.0;
        let mut dv = 0.0;
        for j in 0..self.nb {
            let c = full[f0 + j];
            v += c * b0[j];
            dv += c * b1[j];
        }
        (v, dv)
    }
}
