//! Banded Gram and weighted-mass matrices, load vectors, and the L2 and
//! elliptic projections.

use crate::bathymetry::Bathymetry;
use crate::error::{FemError, Result};
use crate::spline::{gauss_rule, QuadTable, QuadratureRule, SplineSpace};

/// Quadrature points per element used for assembly.
pub const ASSEMBLY_POINTS: usize = 3;
/// Quadrature points per element used for norms and diagnostics.
pub const NORM_POINTS: usize = 5;

/// Square banded matrix in row-major band storage, factored in place by LU
/// without pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
            factored: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n || !self.in_band(i, j) {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(self.in_band(i, j));
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.factored {
            return Err(FemError::Analysis("matvec on a factored matrix".into()));
        }
        if x.len() != self.n {
            return Err(FemError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum();
        }
        Ok(y)
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..=(i + self.ku).min(self.n.saturating_sub(1)) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Sum of all entries.
    pub fn entry_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                s += self.get(i, j);
            }
        }
        s
    }

    /// In-place Doolittle LU without pivoting. A pivot that is not strictly
    /// positive is reported: every matrix factored here comes from a
    /// symmetric coercive form.
    pub fn factor(&mut self) -> Result<()> {
        if self.factored {
            return Ok(());
        }
        let n = self.n;
        for k in 0..n {
            let piv = self.data[self.idx(k, k)];
            if !(piv > 0.0) || !piv.is_finite() {
                return Err(FemError::NonPositivePivot { row: k, value: piv });
            }
            let imax = (k + self.kl).min(n - 1);
            let jmax = (k + self.ku).min(n - 1);
            for i in (k + 1)..=imax {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Pivots of a factored matrix.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.data[self.idx(k, k)]).collect()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        if !self.factored {
            return Err(FemError::NotFactored);
        }
        if b.len() != self.n {
            return Err(FemError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let mut s = b[i];
            for j in lo..i {
                s -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + self.ku).min(n - 1);
            let mut s = b[i];
            for j in (i + 1)..=hi {
                s -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Copy of the block of rows/columns `range`.
    pub fn sub_block(&self, lo: usize, hi: usize) -> Self {
        let mut m = Self::zeros(hi - lo, self.kl, self.ku);
        for i in lo..hi {
            let jlo = i.saturating_sub(self.kl).max(lo);
            let jhi = (i + self.ku).min(hi - 1);
            for j in jlo..=jhi {
                m.set(i - lo, j - lo, self.get(i, j));
            }
        }
        m
    }
}

/// Symmetric bilinear forms `(c0 v, w) + (c1 v', w')` used for the
/// velocity mass operators and elliptic projections.
#[derive(Debug, Clone, PartialEq)]
pub enum MassForm {
    /// `(v, w)`.
    L2,
    /// `a(v, w) = (v, w) + (mu/3)(v', w')`.
    WeightedH1 { mu: f64 },
    /// `A(v, w) = ((eta_b - (mu/2) eta_b^2 eta_b'') v, w) + (mu/3)(eta_b^3 v', w')`.
    Topographic { mu: f64, bathy: Bathymetry },
}

impl MassForm {
    /// Coefficients `(c0, c1)` at `x`.
    #[inline]
    pub fn coefficients(&self, x: f64) -> (f64, f64) {
        match self {
            MassForm::L2 => (1.0, 0.0),
            MassForm::WeightedH1 { mu } => (1.0, mu / 3.0),
            MassForm::Topographic { mu, bathy } => {
                let d = bathy.depth(x);
                (d[0] - 0.5 * mu * d[0] * d[0] * d[2], mu / 3.0 * d[0].powi(3))
            }
        }
    }

    /// `A(v, w)` of two functions given through value/slope callbacks, by
    /// per-element quadrature.
    pub fn apply(
        &self,
        space: &SplineSpace,
        rule: &QuadratureRule,
        v: impl Fn(f64) -> (f64, f64),
        w: impl Fn(f64) -> (f64, f64),
    ) -> f64 {
        let part = space.partition();
        let mut s = 0.0;
        for e in 0..part.len() {
            s += rule.integrate(part.node(e), part.node(e + 1), |x| {
                let (c0, c1) = self.coefficients(x);
                let (v0, v1) = v(x);
                let (w0, w1) = w(x);
                c0 * v0 * w0 + c1 * v1 * w1
            });
        }
        s
    }
}

fn band_of(space: &SplineSpace) -> usize {
    space.degree()
}

/// Matrix of `(c0 phi_j, phi_i) + (c1 phi_j', phi_i')` on `space`.
pub fn form_matrix(space: &SplineSpace, form: &MassForm, rule: &QuadratureRule) -> BandedMatrix {
    let tab = QuadTable::new(space, rule);
    form_matrix_with(space, &tab, |x| form.coefficients(x))
}

fn form_matrix_with(
    space: &SplineSpace,
    tab: &QuadTable,
    coef: impl Fn(f64) -> (f64, f64),
) -> BandedMatrix {
    let bw = band_of(space);
    let mut m = BandedMatrix::zeros(space.dim(), bw, bw);
    let nb = tab.nb;
    let mut loc = [None; crate::spline::MAX_DEGREE + 1];
    for e in 0..tab.elements() {
        for (j, l) in loc.iter_mut().enumerate().take(nb) {
            *l = space.local_index(tab.first[e] + j);
        }
        for q in 0..tab.npts {
            let g = e * tab.npts + q;
            let (c0, c1) = coef(tab.x[g]);
            let w = tab.w[g];
            let b0 = tab.basis(g, 0);
            let b1 = tab.basis(g, 1);
            for a in 0..nb {
                let Some(i) = loc[a] else { continue };
                for b in 0..nb {
                    let Some(j) = loc[b] else { continue };
                    m.add(i, j, w * (c0 * b0[a] * b0[b] + c1 * b1[a] * b1[b]));
                }
            }
        }
    }
    m
}

/// Weighted Gram matrix `M_ij = (w phi_j, phi_i)`, 3-point Gauss per element.
pub fn gram_matrix(space: &SplineSpace, weight: impl Fn(f64) -> f64) -> BandedMatrix {
    let rule = gauss_rule(ASSEMBLY_POINTS).expect("supported rule");
    gram_matrix_with_rule(space, weight, &rule)
}

pub fn gram_matrix_with_rule(
    space: &SplineSpace,
    weight: impl Fn(f64) -> f64,
    rule: &QuadratureRule,
) -> BandedMatrix {
    let tab = QuadTable::new(space, rule);
    form_matrix_with(space, &tab, |x| (weight(x), 0.0))
}

/// Stiffness matrix `(phi_j', phi_i')`.
pub fn stiffness_matrix(space: &SplineSpace) -> BandedMatrix {
    let rule = gauss_rule(ASSEMBLY_POINTS).expect("supported rule");
    let tab = QuadTable::new(space, &rule);
    form_matrix_with(space, &tab, |_| (0.0, 1.0))
}

/// Matrix of the topographic form `A` on the zero-endpoint space. Refuses
/// when the coercivity conditions fail.
pub fn weighted_mass_a(space0: &SplineSpace, bathy: &Bathymetry, mu: f64) -> Result<BandedMatrix> {
    let part = space0.partition();
    let report = coercivity_check(bathy, mu, part.a(), part.b(), Some(part.len()));
    if !report.satisfied {
        return Err(FemError::Coercivity {
            c1: report.c1,
            c2: report.c2,
        });
    }
    let rule = gauss_rule(ASSEMBLY_POINTS)?;
    Ok(form_matrix(
        space0,
        &MassForm::Topographic {
            mu,
            bathy: bathy.clone(),
        },
        &rule,
    ))
}

/// Load vector `(g, phi_i)` by per-element Gauss quadrature.
pub fn assemble_load(space: &SplineSpace, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = gauss_rule(ASSEMBLY_POINTS).expect("supported rule");
    assemble_load_with(space, &rule, |x| (g(x), 0.0))
}

/// Load vector `(g0, phi_i) + (g1, phi_i')`.
pub fn assemble_load_with(
    space: &SplineSpace,
    rule: &QuadratureRule,
    g: impl Fn(f64) -> (f64, f64),
) -> Vec<f64> {
    let tab = QuadTable::new(space, rule);
    let mut out = vec![0.0; space.dim()];
    for e in 0..tab.elements() {
        for q in 0..tab.npts {
            let gi = e * tab.npts + q;
            let (g0, g1) = g(tab.x[gi]);
            let w = tab.w[gi];
            let b0 = tab.basis(gi, 0);
            let b1 = tab.basis(gi, 1);
            for j in 0..tab.nb {
                if let Some(i) = space.local_index(tab.first[e] + j) {
                    out[i] += w * (g0 * b0[j] + g1 * b1[j]);
                }
            }
        }
    }
    out
}

/// L2 projection onto `space`.
pub fn l2_project(space: &SplineSpace, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mut m = gram_matrix(space, |_| 1.0);
    m.factor()?;
    let load = assemble_load(space, f);
    m.solve(&load)
}

/// Elliptic projection onto a zero-endpoint space with respect to `form`:
/// `form(R v, chi) = form(v, chi)` for every basis function `chi`. `v`
/// returns `(v(x), v'(x))`.
pub fn elliptic_project(
    space0: &SplineSpace,
    form: &MassForm,
    v: impl Fn(f64) -> (f64, f64),
) -> Result<Vec<f64>> {
    elliptic_project_with_rule(space0, form, v, &gauss_rule(ASSEMBLY_POINTS)?)
}

pub fn elliptic_project_with_rule(
    space0: &SplineSpace,
    form: &MassForm,
    v: impl Fn(f64) -> (f64, f64),
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    let rule = rule.clone();
    let mut m = form_matrix(space0, form, &rule);
    m.factor()?;
    let load = assemble_load_with(space0, &rule, |x| {
        let (c0, c1) = form.coefficients(x);
        let (v0, v1) = v(x);
        (c0 * v0, c1 * v1)
    });
    m.solve(&load)
}

/// Minima certifying that the topographic form is coercive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// `min eta_b`.
    pub c1: f64,
    /// `min (eta_b - (mu/2) eta_b^2 eta_b'')`.
    pub c2: f64,
    /// `min(c2, mu c1^3 / 3)`.
    pub c_mu: f64,
    pub satisfied: bool,
}

/// Samples 2001 points of `[a, b]` plus the element endpoints of an
/// `n_elements` partition and the profile breakpoints (both one-sided
/// limits).
pub fn coercivity_check(
    bathy: &Bathymetry,
    mu: f64,
    a: f64,
    b: f64,
    n_elements: Option<usize>,
) -> CoercivityReport {
    let mut pts: Vec<f64> = (0..=2000).map(|i| a + (b - a) * i as f64 / 2000.0).collect();
    if let Some(n) = n_elements {
        pts.extend((0..=n).map(|i| a + (b - a) * i as f64 / n as f64));
    }
    for bp in bathy.breakpoints() {
        if bp > a && bp < b {
            let d = 1e-12 * (1.0 + bp.abs());
            pts.push(bp - d);
            pts.push(bp);
        }
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::INFINITY;
    for x in pts {
        let d = bathy.depth(x);
        c1 = c1.min(d[0]);
        c2 = c2.min(d[0] - 0.5 * mu * d[0] * d[0] * d[2]);
    }
    let c_mu = c2.min(mu * c1.powi(3) / 3.0);
    CoercivityReport {
        c1,
        c2,
        c_mu,
        satisfied: c1 > 0.0 && c2 > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathymetry::Profile;
    use crate::spline::{EndCondition, Partition};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Partition {
        Partition::new(0.0, 1.0, n).unwrap()
    }

    fn sine_bottom() -> Bathymetry {
        Bathymetry::new(Profile::SineBottom { beta: 0.1 }).unwrap()
    }

    /// Dense oracle: 40 composite 5-point Gauss panels per element
    /// (200 points), evaluating the basis through `SplineSpace::eval`.
    fn dense_form(space: &SplineSpace, c: impl Fn(f64) -> (f64, f64)) -> Vec<Vec<f64>> {
        let n = space.dim();
        let g = gauss_rule(5).unwrap();
        let part = space.partition();
        let mut m = vec![vec![0.0; n]; n];
        let unitv = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let basis: Vec<Vec<f64>> = (0..n).map(unitv).collect();
        for e in 0..part.len() {
            let (lo, hi) = (part.node(e), part.node(e + 1));
            for p in 0..40 {
                let a = lo + (hi - lo) * p as f64 / 40.0;
                let b = lo + (hi - lo) * (p + 1) as f64 / 40.0;
                for (t, w) in g.nodes.iter().zip(&g.weights) {
                    let x = a + (b - a) * t;
                    let wx = w * (b - a);
                    let e_ = part.element_of(x).unwrap();
                    let lb = space.local_basis(e_, x);
                    let _ = e_;
                    let (c0, c1) = c(x);
                    let vals: Vec<(f64, f64)> = basis
                        .iter()
                        .map(|v| (space.combine(v, &lb, 0), space.combine(v, &lb, 1)))
                        .collect();
                    for i in 0..n {
                        if vals[i] == (0.0, 0.0) {
                            continue;
                        }
                        for j in 0..n {
                            m[i][j] += wx * (c0 * vals[i].0 * vals[j].0 + c1 * vals[i].1 * vals[j].1);
                        }
                    }
                }
            }
        }
        m
    }

    #[test]
    fn gram_entry_sums() {
        let l = SplineSpace::new(unit(4), 2, 0, EndCondition::Free).unwrap();
        let m = gram_matrix(&l, |_| 1.0);
        assert_abs_diff_eq!(m.entry_sum(), 1.0, epsilon = 1e-14);
        let integrals = l.basis_integrals();
        for i in 0..l.dim() {
            let row: f64 = (0..l.dim()).map(|j| m.get(i, j)).sum();
            assert_abs_diff_eq!(row, integrals[i], epsilon = 1e-15);
        }
        let c = SplineSpace::cubic(unit(9), EndCondition::Free).unwrap();
        assert_abs_diff_eq!(gram_matrix(&c, |_| 1.0).entry_sum(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn weighted_gram_matches_dense_oracle() {
        let s = SplineSpace::cubic(unit(8), EndCondition::Free).unwrap();
        // (1 + x) phi_i phi_j has degree 7: four points integrate it exactly
        let m = gram_matrix_with_rule(&s, |x| 1.0 + x, &gauss_rule(4).unwrap());
        let d = dense_form(&s, |x| (1.0 + x, 0.0));
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                assert_abs_diff_eq!(m.get(i, j), d[i][j], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn topographic_form_matches_dense_oracle() {
        let s0 = SplineSpace::cubic(unit(8), EndCondition::ZeroEndpoints).unwrap();
        let bathy = sine_bottom();
        let mu = 0.1;
        let m = weighted_mass_a(&s0, &bathy, mu).unwrap();
        let form = MassForm::Topographic {
            mu,
            bathy: bathy.clone(),
        };
        let d = dense_form(&s0, |x| form.coefficients(x));
        let fine = form_matrix(&s0, &form, &gauss_rule(10).unwrap());
        for i in 0..s0.dim() {
            for j in 0..s0.dim() {
                assert_abs_diff_eq!(fine.get(i, j), d[i][j], epsilon = 1e-13);
            }
        }
        assert!(m.asymmetry() < 1e-14);
        assert!(fine.asymmetry() < 1e-14);
    }

    #[test]
    fn quadrature_exactness_of_assembly() {
        // n points integrate degree 2n - 1: cubic Gram needs 4, the weight x adds 1
        let s = SplineSpace::cubic(unit(6), EndCondition::Free).unwrap();
        let fine = gram_matrix_with_rule(&s, |x| x, &gauss_rule(10).unwrap());
        let four = gram_matrix_with_rule(&s, |x| x, &gauss_rule(4).unwrap());
        let three = gram_matrix(&s, |x| x);
        let mut diff3: f64 = 0.0;
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                assert_abs_diff_eq!(four.get(i, j), fine.get(i, j), epsilon = 1e-15);
                diff3 = diff3.max((three.get(i, j) - fine.get(i, j)).abs());
            }
        }
        assert!(diff3 > 1e-8);
        // row sums only need degree 4
        let ones = vec![1.0; s.dim()];
        let r3 = gram_matrix(&s, |_| 1.0).matvec(&ones).unwrap();
        for (a, b) in r3.iter().zip(s.basis_integrals()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn flat_topographic_form_is_h1_form() {
        let s0 = SplineSpace::cubic(unit(10), EndCondition::ZeroEndpoints).unwrap();
        let mu = 0.1;
        let a = weighted_mass_a(&s0, &Bathymetry::flat(), mu).unwrap();
        let g = gram_matrix(&s0, |_| 1.0);
        let k = stiffness_matrix(&s0);
        for i in 0..s0.dim() {
            for j in 0..s0.dim() {
                assert_abs_diff_eq!(a.get(i, j), g.get(i, j) + mu / 3.0 * k.get(i, j), epsilon = 1e-15);
            }
        }
        let a0 = weighted_mass_a(&s0, &Bathymetry::flat(), 0.0).unwrap();
        for i in 0..s0.dim() {
            for j in 0..s0.dim() {
                assert_abs_diff_eq!(a0.get(i, j), g.get(i, j), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn load_vectors() {
        let s = SplineSpace::cubic(Partition::new(-1.0, 2.0, 7).unwrap(), EndCondition::Free).unwrap();
        assert!(assemble_load(&s, |_| 0.0).iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(assemble_load(&s, |_| 1.0).iter().sum::<f64>(), 3.0, epsilon = 1e-14);
        // degree-5 polynomial: sum of loads = its integral (partition of unity)
        let p = |x: f64| 1.0 - 2.0 * x + x.powi(3) - 0.5 * x.powi(5);
        let ip = |x: f64| x - x * x + x.powi(4) / 4.0 - x.powi(6) / 12.0;
        let total: f64 = assemble_load(&s, p).iter().sum();
        assert_abs_diff_eq!(total, ip(2.0) - ip(-1.0), epsilon = 1e-13);
        // x * phi_i with cubic phi is degree 4: exact first moments
        let l = SplineSpace::new(Partition::new(0.0, 1.0, 4).unwrap(), 2, 0, EndCondition::Free).unwrap();
        let load = assemble_load(&l, |x| x);
        assert_abs_diff_eq!(load[0], 0.25 * 0.25 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn banded_lu_identity_and_errors() {
        let mut id = BandedMatrix::identity(5);
        id.factor().unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(id.solve(&b).unwrap(), b);
        let m = BandedMatrix::identity(3);
        assert_eq!(m.solve(&[1.0, 2.0, 3.0]), Err(FemError::NotFactored));
        let mut bad = BandedMatrix::zeros(2, 1, 1);
        bad.set(0, 0, 1.0);
        bad.set(1, 1, -1.0);
        assert!(matches!(bad.factor(), Err(FemError::NonPositivePivot { row: 1, .. })));
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in (k + 1)..n {
                let l = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn random_spd_banded_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let bw = 3;
        let mut m = BandedMatrix::zeros(n, bw, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..(i + bw + 1).min(n) {
                let v: f64 = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                m.set(i, j, v);
                m.set(j, i, v);
                dense[i][j] = v;
                dense[j][i] = v;
            }
        }
        for i in 0..n {
            let d = 2.0 * bw as f64 + 1.0 + rng.gen_range(0.0..1.0);
            m.set(i, i, d);
            dense[i][i] = d;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let orig = m.clone();
        m.factor().unwrap();
        let x = m.solve(&rhs).unwrap();
        let y = dense_solve(dense, rhs.clone());
        let res = orig.matvec(&x).unwrap();
        let rn = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            assert!((res[i] - rhs[i]).abs() / rn < 1e-12);
            assert_abs_diff_eq!(x[i], y[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_of_members_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SplineSpace::cubic(unit(12), EndCondition::Free).unwrap();
        let c: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = l2_project(&s, |x| s.eval(&c, x, 0).unwrap()).unwrap();
        for (a, b) in p.iter().zip(&c) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let ones = l2_project(&s, |_| 1.0).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-13));

        let s0 = s.with_bc(EndCondition::ZeroEndpoints).unwrap();
        let c0: Vec<f64> = (0..s0.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let form = MassForm::Topographic {
            mu: 0.1,
            bathy: sine_bottom(),
        };
        let r = elliptic_project(&s0, &form, |x| {
            let v = s0.eval_all(&c0, x).unwrap();
            (v[0], v[1])
        })
        .unwrap();
        for (a, b) in r.iter().zip(&c0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    fn l2_error(space: &SplineSpace, c: &[f64], f: impl Fn(f64) -> (f64, f64)) -> (f64, f64) {
        let g = gauss_rule(NORM_POINTS).unwrap();
        let part = space.partition();
        let (mut e0, mut e1) = (0.0, 0.0);
        for e in 0..part.len() {
            e0 += g.integrate(part.node(e), part.node(e + 1), |x| {
                (space.eval(c, x, 0).unwrap() - f(x).0).powi(2)
            });
            e1 += g.integrate(part.node(e), part.node(e + 1), |x| {
                (space.eval(c, x, 1).unwrap() - f(x).1).powi(2)
            });
        }
        (e0.sqrt(), e1.sqrt())
    }

    fn fitted_rate(ns: &[usize], errs: &[f64]) -> f64 {
        // least squares slope of log e vs log h
        let xs: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn l2_projection_rate() {
        let ns = [8, 16, 32, 64];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let s = SplineSpace::cubic(unit(n), EndCondition::Free).unwrap();
                let f = |x: f64| (2.0 * PI * x).sin();
                let c = l2_project(&s, f).unwrap();
                l2_error(&s, &c, |x| (f(x), 0.0)).0
            })
            .collect();
        let r = fitted_rate(&ns, &errs);
        assert!((r - 4.0).abs() <= 0.15, "rate {r}");
    }

    #[test]
    fn best_approximation_rates_by_order() {
        for r in 2..=4 {
            let ns = [8, 16, 32, 64];
            let errs: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    let s = SplineSpace::smooth(unit(n), r, EndCondition::Free).unwrap();
                    let f = |x: f64| (3.0 * x).exp() * (2.0 * x).cos();
                    let c = l2_project(&s, f).unwrap();
                    l2_error(&s, &c, |x| (f(x), 0.0)).0
                })
                .collect();
            let rate = fitted_rate(&ns, &errs);
            assert!((rate - r as f64).abs() <= 0.15, "r={r} rate={rate}");
        }
    }

    #[test]
    fn elliptic_projection_rates_and_orthogonality() {
        let ns = [8, 16, 32, 64];
        let mu = 0.1;
        let v = |x: f64| ((PI * x).sin(), PI * (PI * x).cos());
        let mut e0s = vec![];
        let mut e1s = vec![];
        for &n in &ns {
            let s0 = SplineSpace::cubic(unit(n), EndCondition::ZeroEndpoints).unwrap();
            let form = MassForm::WeightedH1 { mu };
            let g5 = gauss_rule(5).unwrap();
            let c = elliptic_project_with_rule(&s0, &form, v, &g5).unwrap();
            let (e0, e1) = l2_error(&s0, &c, v);
            e0s.push(e0);
            e1s.push(e1);
            // Galerkin orthogonality with 5-point quadrature
            for i in 0..s0.dim() {
                let mut unit_i = vec![0.0; s0.dim()];
                unit_i[i] = 1.0;
                let res = form.apply(
                    &s0,
                    &g5,
                    |x| {
                        let a = s0.eval_all(&c, x).unwrap();
                        let (v0, v1) = v(x);
                        (a[0] - v0, a[1] - v1)
                    },
                    |x| {
                        let a = s0.eval_all(&unit_i, x).unwrap();
                        (a[0], a[1])
                    },
                );
                assert!(res.abs() < 1e-11, "n={n} i={i} res={res}");
            }
        }
        let r0 = fitted_rate(&ns, &e0s);
        let r1 = fitted_rate(&ns, &e1s);
        assert!((r0 - 4.0).abs() <= 0.15, "L2 rate {r0}");
        assert!((r1 - 3.0).abs() <= 0.15, "H1 rate {r1}");
    }

    #[test]
    fn coercivity_reports() {
        let flat = coercivity_check(&Bathymetry::flat(), 0.1, 0.0, 1.0, None);
        assert_eq!((flat.c1, flat.c2), (1.0, 1.0));
        assert!(flat.satisfied);
        let sine = Bathymetry::new(Profile::SineBottom { beta: 0.1 }).unwrap();
        let r = coercivity_check(&sine, 0.1, 0.0, 1.0, Some(8));
        assert_abs_diff_eq!(r.c1, 0.9, epsilon = 1e-12);
        assert!(r.c2 > 0.0 && r.satisfied);
        assert_abs_diff_eq!(r.c_mu, r.c2.min(0.1 * 0.9f64.powi(3) / 3.0), epsilon = 1e-15);

        // steep sine shelf: c1 = 1 - beta; c2 minimal where eta_b'' is largest
        let shelf = Bathymetry::sine_shelf(70.0, 0.99).unwrap();
        let r = coercivity_check(&shelf, 0.05, 0.0, 140.0, Some(2000));
        assert_abs_diff_eq!(r.c1, 0.01, epsilon = 1e-12);
        // closed-form oracle on the bridge: eta_b'' = beta (1/2)(pi/3)^2 sin(.)
        let k = PI / 3.0;
        let mut c2 = f64::INFINITY;
        for i in 0..=30000 {
            let t = -1.5 + 3.0 * i as f64 / 30000.0;
            let eta = 1.0 - 0.99 * 0.5 * (1.0 + (k * t).sin());
            let eta2 = 0.99 * 0.5 * k * k * (k * t).sin();
            c2 = c2.min(eta - 0.025 * eta * eta * eta2);
        }
        assert!((r.c2 - c2).abs() < 1e-6);
        assert_eq!(r.satisfied, c2 > 0.0);
    }

    #[test]
    fn topographic_form_coercive_on_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mu = 0.1;
        let bathy = sine_bottom();
        let s0 = SplineSpace::cubic(unit(16), EndCondition::ZeroEndpoints).unwrap();
        let a = weighted_mass_a(&s0, &bathy, mu).unwrap();
        let rep = coercivity_check(&bathy, mu, 0.0, 1.0, Some(16));
        let g5 = gauss_rule(5).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..s0.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let av = a.matvec(&v).unwrap();
            let q: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
            let part = s0.partition();
            let (mut n0, mut n1) = (0.0, 0.0);
            for e in 0..part.len() {
                n0 += g5.integrate(part.node(e), part.node(e + 1), |x| s0.eval(&v, x, 0).unwrap().powi(2));
                n1 += g5.integrate(part.node(e), part.node(e + 1), |x| s0.eval(&v, x, 1).unwrap().powi(2));
            }
            assert!(q >= rep.c_mu * (n0 + n1) - 1e-10);
        }
        let mut f = a.clone();
        f.factor().unwrap();
        assert!(f.pivots().iter().all(|&p| p > 0.0));
    }
}
