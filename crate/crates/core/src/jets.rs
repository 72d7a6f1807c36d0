//! Chart points, scalar/metric fields, and jet evaluation.
//!
//! A field is an immutable, deterministic closure from seeded chart
//! variables to a Taylor value; evaluating it at a point yields the value
//! and every partial derivative up to the requested order with no
//! truncation error. Finite differences exist only as a cross-check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::taylor::{seed_point, Space, Taylor};

/// Highest jet order the public jet types expose.
pub const PUBLIC_MAX_ORDER: usize = 4;

/// A point of a coordinate chart on ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<ChartPoint> {
        if coords.len() < 3 || coords.len() > crate::taylor::MAX_VARS {
            return Err(Error::domain(format!(
                "chart dimension {} outside supported range 3..=6",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite chart coordinate"));
        }
        Ok(ChartPoint { coords })
    }

    pub fn origin(dim: usize) -> ChartPoint {
        ChartPoint::new(vec![0.0; dim]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }
}

/// Value and partial derivatives of a scalar quantity at a point.
///
/// Partials are stored as Taylor coefficients over sorted multi-indices, so
/// symmetry under multi-index permutation is structural, not numerical.
#[derive(Clone)]
pub struct JetScalar {
    t: Taylor,
}

impl JetScalar {
    pub(crate) fn from_taylor(t: Taylor) -> JetScalar {
        JetScalar { t }
    }

    pub fn dim(&self) -> usize {
        self.t.n()
    }
    pub fn order(&self) -> usize {
        self.t.order()
    }
    pub fn value(&self) -> f64 {
        self.t.value()
    }

    /// ∂_{vars} value; `vars` lists differentiation variables with
    /// multiplicity and may come in any order.
    pub fn partial(&self, vars: &[usize]) -> Result<f64> {
        self.t.partial(vars)
    }

    pub(crate) fn taylor(&self) -> &Taylor {
        &self.t
    }

    /// Leibniz product of two jets at the same point.
    pub fn product(&self, other: &JetScalar) -> JetScalar {
        JetScalar {
            t: self.t.mul(&other.t),
        }
    }
}

type ScalarFn = dyn Fn(&[Taylor]) -> Result<Taylor> + Send + Sync;
type MetricFn = dyn Fn(&[Taylor]) -> Result<Vec<Taylor>> + Send + Sync;

/// An evaluable analytic scalar map on a chart.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    max_order: usize,
    f: Arc<ScalarFn>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn from_fn(
        dim: usize,
        max_order: usize,
        f: impl Fn(&[Taylor]) -> Result<Taylor> + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField {
            dim,
            max_order,
            f: Arc::new(f),
        }
    }

    pub fn constant(dim: usize, v: f64) -> ScalarField {
        ScalarField::from_fn(dim, crate::taylor::MAX_ORDER, move |vars| {
            Ok(Taylor::constant(vars[0].space(), v))
        })
    }

    /// A polynomial Σ c · Π x_i^{e_i}; exponents are per-variable.
    pub fn polynomial(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> ScalarField {
        ScalarField::from_fn(dim, crate::taylor::MAX_ORDER, move |vars| {
            let sp = vars[0].space();
            let mut acc = Taylor::zero(sp);
            for (c, exps) in &terms {
                let mut m = Taylor::constant(sp, *c);
                for (i, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        m = m.mul(&vars[i]);
                    }
                }
                acc = &acc + &m;
            }
            Ok(acc)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn product(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, other.dim);
        let (a, b) = (self.f.clone(), other.f.clone());
        ScalarField::from_fn(self.dim, self.max_order.min(other.max_order), move |vars| {
            Ok(a(vars)?.mul(&b(vars)?))
        })
    }

    pub fn sum(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, other.dim);
        let (a, b) = (self.f.clone(), other.f.clone());
        ScalarField::from_fn(self.dim, self.max_order.min(other.max_order), move |vars| {
            Ok(&a(vars)? + &b(vars)?)
        })
    }

    /// Evaluate the closure on already-seeded variables.
    pub(crate) fn eval_vars(&self, vars: &[Taylor]) -> Result<Taylor> {
        (self.f)(vars)
    }

    /// Evaluate the raw Taylor value at any internally supported order.
    pub(crate) fn eval_taylor(&self, p: &ChartPoint, order: usize) -> Result<Taylor> {
        if p.dim() != self.dim {
            return Err(Error::domain("point dimension does not match field"));
        }
        if order > self.max_order {
            return Err(Error::Capability {
                requested: order,
                max: self.max_order,
            });
        }
        let vars = seed_point(p.coords(), order);
        let t = (self.f)(&vars)?;
        if !t.is_finite() {
            return Err(Error::domain("field evaluation produced non-finite jet"));
        }
        Ok(t)
    }
}

/// An evaluable analytic metric on a chart. Closures fill the upper
/// triangle; the evaluator mirrors it, so symmetry in the metric indices is
/// bit-exact.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    max_order: usize,
    f: Arc<MetricFn>,
}

impl MetricField {
    /// `f` must return the n·n component jets row-major; entries below the
    /// diagonal are ignored and replaced by their mirror.
    pub fn from_fn(
        dim: usize,
        max_order: usize,
        f: impl Fn(&[Taylor]) -> Result<Vec<Taylor>> + Send + Sync + 'static,
    ) -> MetricField {
        MetricField {
            dim,
            max_order,
            f: Arc::new(f),
        }
    }

    pub fn flat(dim: usize) -> MetricField {
        MetricField::from_fn(dim, crate::taylor::MAX_ORDER, move |vars| {
            let sp = vars[0].space();
            let mut g = vec![Taylor::zero(sp); dim * dim];
            for i in 0..dim {
                g[i * dim + i] = Taylor::constant(sp, 1.0);
            }
            Ok(g)
        })
    }

    /// Conformally flat metric e^{2u} δ.
    pub fn conformally_flat(u: &ScalarField) -> MetricField {
        let dim = u.dim();
        let uf = u.f.clone();
        MetricField::from_fn(dim, u.max_order(), move |vars| {
            let sp = vars[0].space();
            let factor = uf(vars)?.scale(2.0).exp();
            let mut g = vec![Taylor::zero(sp); dim * dim];
            for i in 0..dim {
                g[i * dim + i] = factor.clone();
            }
            Ok(g)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub(crate) fn eval_components(&self, p: &ChartPoint, order: usize) -> Result<Vec<Taylor>> {
        if p.dim() != self.dim {
            return Err(Error::domain("point dimension does not match field"));
        }
        if order > self.max_order {
            return Err(Error::Capability {
                requested: order,
                max: self.max_order,
            });
        }
        let vars = seed_point(p.coords(), order);
        let mut g = (self.f)(&vars)?;
        if g.len() != self.dim * self.dim {
            return Err(Error::domain("metric closure returned wrong shape"));
        }
        for i in 0..self.dim {
            for j in 0..i {
                g[i * self.dim + j] = g[j * self.dim + i].clone();
            }
        }
        if g.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("metric evaluation produced non-finite jet"));
        }
        Ok(g)
    }

    pub(crate) fn raw_fn(&self) -> Arc<MetricFn> {
        self.f.clone()
    }
}

/// Metric components with partial derivatives and the inverse, at a point.
pub struct MetricJet {
    n: usize,
    order: usize,
    g: Vec<Taylor>,
    ginv: Vec<Taylor>,
}

impl MetricJet {
    pub(crate) fn from_components(g: Vec<Taylor>, n: usize, order: usize) -> Result<MetricJet> {
        // positive definiteness via Cholesky on the value matrix
        let vals: Vec<f64> = g.iter().map(|t| t.value()).collect();
        if cholesky(&vals, n).is_none() {
            return Err(Error::geometry("metric not positive definite at point"));
        }
        let ginv = invert_matrix_jets(&g, n);
        // ginv · g = id within 1e-12
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { -1.0 } else { 0.0 };
                for k in 0..n {
                    s += ginv[i * n + k].value() * vals[k * n + j];
                }
                worst = worst.max(s.abs());
            }
        }
        if worst > 1e-12 {
            return Err(Error::geometry(format!(
                "metric inverse residual {worst:.3e} exceeds 1e-12"
            )));
        }
        Ok(MetricJet { n, order, g, ginv })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub(crate) fn g_jet(&self, i: usize, j: usize) -> &Taylor {
        &self.g[i * self.n + j]
    }
    pub(crate) fn g_jets(&self) -> &[Taylor] {
        &self.g
    }
    pub(crate) fn ginv_jets(&self) -> &[Taylor] {
        &self.ginv
    }

    pub fn g(&self) -> Vec<f64> {
        self.g.iter().map(|t| t.value()).collect()
    }
    pub fn ginv(&self) -> Vec<f64> {
        self.ginv.iter().map(|t| t.value()).collect()
    }

    /// ∂_k g_ij
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        self.g_jet(i, j).partial(&[k]).unwrap()
    }
    /// ∂_k ∂_l g_ij
    pub fn d2g(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.g_jet(i, j).partial(&[k, l]).unwrap()
    }
    pub fn d3g(&self, k: usize, l: usize, m: usize, i: usize, j: usize) -> f64 {
        self.g_jet(i, j).partial(&[k, l, m]).unwrap()
    }
    pub fn d4g(&self, k: usize, l: usize, m: usize, q: usize, i: usize, j: usize) -> f64 {
        self.g_jet(i, j).partial(&[k, l, m, q]).unwrap()
    }
}

/// Cholesky factor of a symmetric matrix, or None if not positive definite.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Numeric inverse by Gauss-Jordan with partial pivoting.
pub(crate) fn invert_values(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
                inv.swap(col * n + c, piv * n + c);
            }
        }
        let d = m[col * n + col];
        for c in 0..n {
            m[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r * n + c] -= f * m[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Jet-level matrix inverse: Newton iteration X ← X(2I − GX) from the
/// numeric inverse of the value part, run at increasing truncation orders so
/// each step costs only what the already-correct degree requires.
pub(crate) fn invert_matrix_jets(g: &[Taylor], n: usize) -> Vec<Taylor> {
    let order = g[0].order();
    let vals: Vec<f64> = g.iter().map(|t| t.value()).collect();
    let x0 = invert_values(&vals, n).expect("value matrix invertible");
    let mut cur_order = 0usize;
    let sp0 = Space::get(g[0].n(), 0);
    let mut x: Vec<Taylor> = x0.iter().map(|&v| Taylor::constant(&sp0, v)).collect();
    while cur_order < order {
        let next = (2 * cur_order + 1).min(order);
        let sp = Space::get(g[0].n(), next);
        let gx: Vec<Taylor> = g.iter().map(|t| t.truncated(next)).collect();
        let xl: Vec<Taylor> = x.iter().map(|t| t.lifted(next)).collect();
        // t = 2I - G X
        let mut t = vec![Taylor::zero(&sp); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = if i == j {
                    Taylor::constant(&sp, 2.0)
                } else {
                    Taylor::zero(&sp)
                };
                for k in 0..n {
                    acc.mul_acc(&gx[i * n + k], &xl[k * n + j], -1.0);
                }
                t[i * n + j] = acc;
            }
        }
        let mut xn = vec![Taylor::zero(&sp); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Taylor::zero(&sp);
                for k in 0..n {
                    acc.mul_acc(&xl[i * n + k], &t[k * n + j], 1.0);
                }
                xn[i * n + j] = acc;
            }
        }
        x = xn;
        cur_order = next;
    }
    x
}

/// Evaluate a scalar field's jet at a point.
pub fn eval_scalar_jet(field: &ScalarField, p: &ChartPoint, order: usize) -> Result<JetScalar> {
    if order > PUBLIC_MAX_ORDER {
        return Err(Error::Capability {
            requested: order,
            max: PUBLIC_MAX_ORDER,
        });
    }
    Ok(JetScalar::from_taylor(field.eval_taylor(p, order)?))
}

/// Evaluate a metric field's jet at a point, checking positivity and the
/// inverse-residual invariant.
pub fn eval_metric_jet(field: &MetricField, p: &ChartPoint, order: usize) -> Result<MetricJet> {
    if order > PUBLIC_MAX_ORDER {
        return Err(Error::Capability {
            requested: order,
            max: PUBLIC_MAX_ORDER,
        });
    }
    let g = field.eval_components(p, order)?;
    MetricJet::from_components(g, field.dim(), order)
}

/// Max residual between jet partials and order-4 central finite differences.
pub struct FdReport {
    pub step: f64,
    /// (derivative order, max |jet − stencil|) for each order 1..=k
    pub per_order: Vec<(usize, f64)>,
}

impl FdReport {
    pub fn max_residual(&self) -> f64 {
        self.per_order.iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }
}

// Fourth-order-accurate central stencils, offsets ±1..±3.
const D1: [(i32, f64); 4] = [
    (-2, 1.0 / 12.0),
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (2, -1.0 / 12.0),
];
const D2: [(i32, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];
const D3: [(i32, f64); 6] = [
    (-3, 1.0 / 8.0),
    (-2, -1.0),
    (-1, 13.0 / 8.0),
    (1, -13.0 / 8.0),
    (2, 1.0),
    (3, -1.0 / 8.0),
];
const D4: [(i32, f64); 7] = [
    (-3, -1.0 / 6.0),
    (-2, 2.0),
    (-1, -13.0 / 2.0),
    (0, 28.0 / 3.0),
    (1, -13.0 / 2.0),
    (2, 2.0),
    (3, -1.0 / 6.0),
];

fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        1 => &D1,
        2 => &D2,
        3 => &D3,
        4 => &D4,
        _ => unreachable!(),
    }
}

/// Nested application of 1-d stencils for a mixed partial given as
/// per-variable derivative counts.
fn fd_estimate(field: &ScalarField, p: &[f64], counts: &[usize], step: f64) -> Result<f64> {
    let axis = counts.iter().position(|&c| c > 0);
    let Some(axis) = axis else {
        let cp = ChartPoint::new(p.to_vec())?;
        return Ok(field.eval_taylor(&cp, 0)?.value());
    };
    let k = counts[axis];
    let mut rest = counts.to_vec();
    rest[axis] = 0;
    let mut acc = 0.0;
    for &(off, w) in stencil(k) {
        let mut q = p.to_vec();
        q[axis] += off as f64 * step;
        acc += w * fd_estimate(field, &q, &rest, step)?;
    }
    Ok(acc / step.powi(k as i32))
}

/// All sorted multi-indices of the given order over `n` variables.
pub fn sorted_multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, order: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, order, v, cur, out);
            cur.pop();
        }
    }
    rec(n, order, 0, &mut cur, &mut out);
    out
}

/// Compare a jet against central differences of accuracy order 4.
/// Report-only: never fails on large residuals.
pub fn finite_difference_check(
    field: &ScalarField,
    p: &ChartPoint,
    order: usize,
    step: f64,
) -> Result<FdReport> {
    if step <= 0.0 {
        return Err(Error::precondition("finite-difference step must be > 0"));
    }
    if order > PUBLIC_MAX_ORDER {
        return Err(Error::Capability {
            requested: order,
            max: PUBLIC_MAX_ORDER,
        });
    }
    let jet = JetScalar::from_taylor(field.eval_taylor(p, order)?);
    let n = field.dim();
    let mut per_order = Vec::new();
    for k in 1..=order {
        let mut worst = 0.0f64;
        for mi in sorted_multi_indices(n, k) {
            let mut counts = vec![0usize; n];
            for &v in &mi {
                counts[v] += 1;
            }
            if counts.iter().any(|&c| c > 4) {
                continue;
            }
            let est = fd_estimate(field, p.coords(), &counts, step)?;
            let exact = jet.partial(&mi)?;
            worst = worst.max((exact - est).abs());
        }
        per_order.push((k, worst));
    }
    Ok(FdReport { step, per_order })
}
