//! The curvature chain at a chart point.
//!
//! Everything is computed in truncated Taylor arithmetic: the metric enters
//! as order-m jets and each derived tensor keeps the jet order it can
//! (Christoffel m−1, Riemann m−2, Cotton m−3, Bach m−4), so the covariant
//! derivatives needed by Cotton and Bach come from jets of Γ rather than
//! from differencing across points.
//!
//! Index conventions: R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z with
//! R^l_ijk ∂_l = R(∂_j, ∂_k)∂_i and R_ijkl = g_im R^m_jkl; the Ricci
//! contraction is R_ik = g^jl R_ijkl. Under this convention the round unit
//! sphere has scalar curvature n(n−1) > 0.

use crate::error::{Error, Result};
use crate::jets::{eval_metric_jet, ChartPoint, MetricField, MetricJet, ScalarField};
use crate::taylor::Taylor;

/// Γ^k_ij values; symmetric in the two lower indices.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    v: Vec<f64>,
}

impl Christoffel {
    pub fn n(&self) -> usize {
        self.n
    }
    /// Γ^k_ij
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.v[(k * self.n + i) * self.n + j]
    }
}

/// A symmetric 2-tensor (Ricci, Schouten, Bach, metric values).
#[derive(Clone, Debug)]
pub struct Sym2 {
    n: usize,
    v: Vec<f64>,
}

impl Sym2 {
    pub fn new(n: usize, v: Vec<f64>) -> Sym2 {
        assert_eq!(v.len(), n * n);
        Sym2 { n, v }
    }
    pub fn zero(n: usize) -> Sym2 {
        Sym2 {
            n,
            v: vec![0.0; n * n],
        }
    }
    pub fn identity(n: usize) -> Sym2 {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Sym2 { n, v }
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }
    pub fn components(&self) -> &[f64] {
        &self.v
    }
    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A tensor with the (0,4) Riemann symmetries.
#[derive(Clone, Debug)]
pub struct Riemann4 {
    n: usize,
    v: Vec<f64>,
}

/// The totally trace-free part of the curvature.
#[derive(Clone, Debug)]
pub struct Weyl4 {
    n: usize,
    v: Vec<f64>,
}

/// C_ijk, antisymmetric in the last two indices.
#[derive(Clone, Debug)]
pub struct Cotton3 {
    n: usize,
    v: Vec<f64>,
}

macro_rules! tensor4_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn new(n: usize, v: Vec<f64>) -> $ty {
                assert_eq!(v.len(), n * n * n * n);
                $ty { n, v }
            }
            pub fn zero(n: usize) -> $ty {
                $ty {
                    n,
                    v: vec![0.0; n * n * n * n],
                }
            }
            pub fn n(&self) -> usize {
                self.n
            }
            pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
                self.v[((i * self.n + j) * self.n + k) * self.n + l]
            }
            pub fn components(&self) -> &[f64] {
                &self.v
            }
            pub fn max_abs(&self) -> f64 {
                self.v.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    };
}

tensor4_impl!(Riemann4);
tensor4_impl!(Weyl4);

impl Cotton3 {
    pub fn new(n: usize, v: Vec<f64>) -> Cotton3 {
        assert_eq!(v.len(), n * n * n);
        Cotton3 { n, v }
    }
    pub fn zero(n: usize) -> Cotton3 {
        Cotton3 {
            n,
            v: vec![0.0; n * n * n],
        }
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.v[(i * self.n + j) * self.n + k]
    }
    pub fn components(&self) -> &[f64] {
        &self.v
    }
    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Anything that can be fully contracted against the metric.
pub trait CurvTensor {
    fn n(&self) -> usize;
    fn rank(&self) -> usize;
    fn components(&self) -> &[f64];
}

impl CurvTensor for Sym2 {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        2
    }
    fn components(&self) -> &[f64] {
        &self.v
    }
}
impl CurvTensor for Cotton3 {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        3
    }
    fn components(&self) -> &[f64] {
        &self.v
    }
}
impl CurvTensor for Riemann4 {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        4
    }
    fn components(&self) -> &[f64] {
        &self.v
    }
}
impl CurvTensor for Weyl4 {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        4
    }
    fn components(&self) -> &[f64] {
        &self.v
    }
}

// ---------------------------------------------------------------------------
// jet-level pipeline
// ---------------------------------------------------------------------------

fn values(t: &[Taylor]) -> Vec<f64> {
    t.iter().map(|x| x.value()).collect()
}

/// Γ^k_ij as jets of one order less than the metric.
pub(crate) fn christoffel_jets(mj: &MetricJet) -> Result<Vec<Taylor>> {
    if mj.order() < 1 {
        return Err(Error::Capability {
            requested: 1,
            max: mj.order(),
        });
    }
    let n = mj.n();
    let ord = mj.order() - 1;
    let ginv: Vec<Taylor> = mj.ginv_jets().iter().map(|t| t.truncated(ord)).collect();
    // dg[(k,i,j)] = ∂_k g_ij
    let mut dg = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                dg.push(mj.g_jet(i, j).derivative(k));
            }
        }
    }
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let mut gamma = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Taylor::zero(ginv[0].space());
                for p in 0..n {
                    let sym = &(&dg[idx(i, j, p)] + &dg[idx(j, i, p)]) - &dg[idx(p, i, j)];
                    acc.mul_acc(&ginv[k * n + p], &sym, 1.0);
                }
                gamma.push(acc.scale(0.5));
            }
        }
    }
    Ok(gamma)
}

/// Covariant derivative of an all-lower rank-r jet tensor; the derivative
/// index is appended last. Output order is one less than the input.
pub(crate) fn cov_deriv_jets(t: &[Taylor], rank: usize, n: usize, gamma: &[Taylor]) -> Vec<Taylor> {
    let t_ord = t[0].order();
    assert!(t_ord >= 1, "covariant derivative needs at least order 1");
    let out_ord = t_ord - 1;
    let gl: Vec<Taylor> = gamma.iter().map(|g| g.truncated(out_ord)).collect();
    let tt: Vec<Taylor> = t.iter().map(|x| x.truncated(out_ord)).collect();
    let mut strides = vec![1usize; rank];
    for s in (0..rank.saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * n;
    }
    let gidx = |up: usize, a: usize, b: usize| (up * n + a) * n + b;
    let mut out = Vec::with_capacity(t.len() * n);
    let mut digits = vec![0usize; rank];
    for idx in 0..t.len() {
        let mut rem = idx;
        for s in 0..rank {
            digits[s] = rem / strides[s];
            rem %= strides[s];
        }
        for k in 0..n {
            let mut acc = t[idx].derivative(k);
            for s in 0..rank {
                let i_s = digits[s];
                for p in 0..n {
                    let idx_p =
                        (idx as isize + (p as isize - i_s as isize) * strides[s] as isize) as usize;
                    acc.mul_acc(&gl[gidx(p, k, i_s)], &tt[idx_p], -1.0);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Full jet-level curvature data derived from one metric jet.
pub(crate) struct CurvatureJets {
    pub n: usize,
    pub metric_order: usize,
    pub ginv: Vec<Taylor>,
    pub gamma: Vec<Taylor>,
    /// R_ijkl, lowered.
    pub riem: Vec<Taylor>,
    pub ricci: Vec<Taylor>,
    pub scalar: Taylor,
    pub schouten: Vec<Taylor>,
    pub weyl: Vec<Taylor>,
    pub cotton: Option<Vec<Taylor>>,
    /// B_ij; present when metric order ≥ 4.
    pub bach: Option<Vec<Taylor>>,
}

impl CurvatureJets {
    pub fn compute(mj: &MetricJet) -> Result<CurvatureJets> {
        let n = mj.n();
        let m = mj.order();
        if m < 2 {
            return Err(Error::Capability {
                requested: 2,
                max: m,
            });
        }
        let gamma = christoffel_jets(mj)?;
        let ord2 = m - 2;
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;

        // R^m_jkl = ∂_k Γ^m_lj − ∂_l Γ^m_kj + Γ^p_lj Γ^m_kp − Γ^p_kj Γ^m_lp,
        // antisymmetric in (k,l).
        let gl: Vec<Taylor> = gamma.iter().map(|t| t.truncated(ord2)).collect();
        let sp2 = gl[0].space().clone();
        let mut riem_up = vec![Taylor::zero(&sp2); n * n * n * n];
        for mu in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in (k + 1)..n {
                        let mut acc =
                            &gamma[idx3(mu, l, j)].derivative(k) - &gamma[idx3(mu, k, j)].derivative(l);
                        for p in 0..n {
                            acc.mul_acc(&gl[idx3(p, l, j)], &gl[idx3(mu, k, p)], 1.0);
                            acc.mul_acc(&gl[idx3(p, k, j)], &gl[idx3(mu, l, p)], -1.0);
                        }
                        riem_up[idx4(mu, j, k, l)] = acc.clone();
                        riem_up[idx4(mu, j, l, k)] = -&acc;
                    }
                }
            }
        }
        // lower the first index
        let g2: Vec<Taylor> = mj.g_jets().iter().map(|t| t.truncated(ord2)).collect();
        let ginv2: Vec<Taylor> = mj.ginv_jets().iter().map(|t| t.truncated(ord2)).collect();
        let mut riem = vec![Taylor::zero(&sp2); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in (k + 1)..n {
                        let mut acc = Taylor::zero(&sp2);
                        for mu in 0..n {
                            acc.mul_acc(&g2[i * n + mu], &riem_up[idx4(mu, j, k, l)], 1.0);
                        }
                        riem[idx4(i, j, k, l)] = acc.clone();
                        riem[idx4(i, j, l, k)] = -&acc;
                    }
                }
            }
        }
        // Ricci and scalar
        let mut ricci = vec![Taylor::zero(&sp2); n * n];
        for i in 0..n {
            for k in 0..n {
                let mut acc = Taylor::zero(&sp2);
                for j in 0..n {
                    for l in 0..n {
                        acc.mul_acc(&ginv2[j * n + l], &riem[idx4(i, j, k, l)], 1.0);
                    }
                }
                ricci[i * n + k] = acc;
            }
        }
        let mut scalar = Taylor::zero(&sp2);
        for i in 0..n {
            for k in 0..n {
                scalar.mul_acc(&ginv2[i * n + k], &ricci[i * n + k], 1.0);
            }
        }
        // Schouten A = Ric − R g / (2(n−1))
        let cs = -1.0 / (2.0 * (n as f64 - 1.0));
        let mut schouten = vec![Taylor::zero(&sp2); n * n];
        for i in 0..n {
            for j in 0..n {
                schouten[i * n + j] =
                    &ricci[i * n + j] + &scalar.mul(&g2[i * n + j]).scale(cs);
            }
        }
        // Weyl
        let weyl = if n == 3 {
            vec![Taylor::zero(&sp2); n * n * n * n]
        } else {
            let c1 = 1.0 / (n as f64 - 2.0);
            let c2 = 1.0 / ((n as f64 - 1.0) * (n as f64 - 2.0));
            let mut w = vec![Taylor::zero(&sp2); n * n * n * n];
            let sg: Vec<Taylor> = g2.iter().map(|t| scalar.mul(t).scale(c2)).collect();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mut acc = riem[idx4(i, j, k, l)].clone();
                            acc.mul_acc(&ricci[i * n + k], &g2[j * n + l], -c1);
                            acc.mul_acc(&ricci[i * n + l], &g2[j * n + k], c1);
                            acc.mul_acc(&ricci[j * n + l], &g2[i * n + k], -c1);
                            acc.mul_acc(&ricci[j * n + k], &g2[i * n + l], c1);
                            acc.mul_acc(&sg[i * n + k], &g2[j * n + l], 1.0);
                            acc.mul_acc(&sg[i * n + l], &g2[j * n + k], -1.0);
                            w[idx4(i, j, k, l)] = acc;
                        }
                    }
                }
            }
            w
        };
        // Cotton: C_ijk = ∇_k A_ij − ∇_j A_ik
        let cotton = if m >= 3 {
            let cov_a = cov_deriv_jets(&schouten, 2, n, &gamma);
            let mut c = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        c.push(&cov_a[idx3(i, j, k)] - &cov_a[idx3(i, k, j)]);
                    }
                }
            }
            Some(c)
        } else {
            None
        };
        // Bach: B_ij = (1/(n−2)) (g^{ks} C_jik,s + g^{ks} g^{lt} R_kl W_isjt)
        let bach = if m >= 4 {
            let cotton_jets = cotton.as_ref().unwrap();
            let cov_c = cov_deriv_jets(cotton_jets, 3, n, &gamma);
            let ord4 = m - 4;
            let sp4 = cov_c[0].space().clone();
            let ginv4: Vec<Taylor> = mj.ginv_jets().iter().map(|t| t.truncated(ord4)).collect();
            let ric4: Vec<Taylor> = ricci.iter().map(|t| t.truncated(ord4)).collect();
            let weyl4: Vec<Taylor> = weyl.iter().map(|t| t.truncated(ord4)).collect();
            let cidx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            let mut b = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Taylor::zero(&sp4);
                    for k in 0..n {
                        for s in 0..n {
                            // ∇_s C_jik
                            acc = &acc + &ginv4[k * n + s].mul(&cov_c[cidx(j, i, k, s)]);
                        }
                    }
                    for k in 0..n {
                        for s in 0..n {
                            for l in 0..n {
                                for t in 0..n {
                                    let w = &weyl4[idx4(i, s, j, t)];
                                    acc = &acc
                                        + &ginv4[k * n + s]
                                            .mul(&ginv4[l * n + t])
                                            .mul(&ric4[k * n + l])
                                            .mul(w);
                                }
                            }
                        }
                    }
                    b.push(acc.scale(1.0 / (n as f64 - 2.0)));
                }
            }
            Some(b)
        } else {
            None
        };
        Ok(CurvatureJets {
            n,
            metric_order: m,
            ginv: mj.ginv_jets().to_vec(),
            gamma,
            riem,
            ricci,
            scalar,
            schouten,
            weyl,
            cotton,
            bach,
        })
    }

    /// (δW)_ijk = g^{ts} ∇_s W_tijk as jets; needs metric order ≥ 3, n ≥ 4.
    pub fn weyl_divergence_jets(&self) -> Result<Vec<Taylor>> {
        if self.n < 4 {
            return Err(Error::domain(
                "Weyl divergence needs n ≥ 4 (the identity has an n−3 denominator)",
            ));
        }
        if self.metric_order < 3 {
            return Err(Error::Capability {
                requested: 3,
                max: self.metric_order,
            });
        }
        let n = self.n;
        let cov_w = cov_deriv_jets(&self.weyl, 4, n, &self.gamma);
        let ord = cov_w[0].order();
        let ginv: Vec<Taylor> = self.ginv.iter().map(|t| t.truncated(ord)).collect();
        let sp = cov_w[0].space().clone();
        let widx =
            |a: usize, b: usize, c: usize, d: usize, e: usize| (((a * n + b) * n + c) * n + d) * n + e;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = Taylor::zero(&sp);
                    for t in 0..n {
                        for s in 0..n {
                            acc = &acc + &ginv[t * n + s].mul(&cov_w[widx(t, i, j, k, s)]);
                        }
                    }
                    out.push(acc);
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

pub fn christoffel(mj: &MetricJet) -> Result<Christoffel> {
    Ok(Christoffel {
        n: mj.n(),
        v: values(&christoffel_jets(mj)?),
    })
}

pub fn riemann(mj: &MetricJet) -> Result<Riemann4> {
    let jets = CurvatureJets::compute(mj)?;
    Ok(Riemann4 {
        n: mj.n(),
        v: values(&jets.riem),
    })
}

/// R_ik = g^{jl} R_ijkl and R = g^{ik} R_ik, from Riemann values.
pub fn ricci_scalar(rm: &Riemann4, mj: &MetricJet) -> (Sym2, f64) {
    let n = rm.n();
    let ginv = mj.ginv();
    let mut ric = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for l in 0..n {
                    acc += ginv[j * n + l] * rm.get(i, j, k, l);
                }
            }
            ric[i * n + k] = acc;
        }
    }
    let mut scal = 0.0;
    for i in 0..n {
        for k in 0..n {
            scal += ginv[i * n + k] * ric[i * n + k];
        }
    }
    (Sym2 { n, v: ric }, scal)
}

/// The trace decomposition of the curvature; identically zero when n = 3.
pub fn weyl(rm: &Riemann4, ric: &Sym2, scal: f64, mj: &MetricJet) -> Weyl4 {
    let n = rm.n();
    if n == 3 {
        return Weyl4::zero(n);
    }
    let g = mj.g();
    let c1 = 1.0 / (n as f64 - 2.0);
    let c2 = scal / ((n as f64 - 1.0) * (n as f64 - 2.0));
    let mut w = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let ricg = ric.get(i, k) * g[j * n + l] - ric.get(i, l) * g[j * n + k]
                        + ric.get(j, l) * g[i * n + k]
                        - ric.get(j, k) * g[i * n + l];
                    let gg = g[i * n + k] * g[j * n + l] - g[i * n + l] * g[j * n + k];
                    w[((i * n + j) * n + k) * n + l] =
                        rm.get(i, j, k, l) - c1 * ricg + c2 * gg;
                }
            }
        }
    }
    Weyl4 { n, v: w }
}

/// (a ∧̇ b)_ijkl = a_ik b_jl − a_il b_jk + a_jl b_ik − a_jk b_il.
pub fn kulkarni_nomizu(a: &Sym2, b: &Sym2) -> Riemann4 {
    let n = a.n();
    assert_eq!(n, b.n());
    let mut v = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    v[((i * n + j) * n + k) * n + l] = a.get(i, k) * b.get(j, l)
                        - a.get(i, l) * b.get(j, k)
                        + a.get(j, l) * b.get(i, k)
                        - a.get(j, k) * b.get(i, l);
                }
            }
        }
    }
    Riemann4 { n, v }
}

/// A = Ric − R g / (2(n−1)).
pub fn schouten(ric: &Sym2, scal: f64, mj: &MetricJet) -> Sym2 {
    let n = ric.n();
    let g = mj.g();
    let c = scal / (2.0 * (n as f64 - 1.0));
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = ric.get(i, j) - c * g[i * n + j];
        }
    }
    Sym2 { n, v }
}

/// C_ijk = A_ij,k − A_ik,j; needs third metric derivatives.
pub fn cotton(field: &MetricField, p: &ChartPoint) -> Result<Cotton3> {
    let mj = eval_metric_jet(field, p, 3)?;
    let jets = CurvatureJets::compute(&mj)?;
    Ok(Cotton3 {
        n: mj.n(),
        v: values(jets.cotton.as_ref().unwrap()),
    })
}

/// (δW)_ijk = g^{ts} ∇_s W_tijk; C = −((n−2)/(n−3)) δW for n ≥ 4.
pub fn weyl_divergence(field: &MetricField, p: &ChartPoint) -> Result<Vec<f64>> {
    if field.dim() == 3 {
        return Err(Error::domain(
            "Weyl divergence undefined for n = 3 (n−3 denominator)",
        ));
    }
    let mj = eval_metric_jet(field, p, 3)?;
    let jets = CurvatureJets::compute(&mj)?;
    Ok(values(&jets.weyl_divergence_jets()?))
}

/// B_ij = (1/(n−2))(g^{ks} C_jik,s + g^{ks} g^{lt} R_kl W_isjt); needs
/// fourth metric derivatives.
pub fn bach(field: &MetricField, p: &ChartPoint) -> Result<Sym2> {
    let mj = eval_metric_jet(field, p, 4)?;
    let jets = CurvatureJets::compute(&mj)?;
    Ok(Sym2 {
        n: mj.n(),
        v: values(jets.bach.as_ref().unwrap()),
    })
}

/// Pointwise e^{2u} g with jets composed to the shared order.
pub fn conformal_rescale(field: &MetricField, u: &ScalarField) -> MetricField {
    assert_eq!(field.dim(), u.dim());
    let dim = field.dim();
    let gf = field.raw_fn();
    let uf = u.clone();
    let max_order = field.max_order().min(u.max_order());
    MetricField::from_fn(dim, max_order, move |vars| {
        let g = gf(vars)?;
        let factor = uf.eval_vars(vars)?.scale(2.0).exp();
        Ok(g.iter().map(|c| c.mul(&factor)).collect())
    })
}

/// Full contraction with g^{··} on every index slot.
pub fn tensor_norm_sq<T: CurvTensor>(t: &T, mj: &MetricJet) -> f64 {
    tensor_norm_sq_raw(t.components(), t.rank(), t.n(), &mj.ginv())
}

pub(crate) fn tensor_norm_sq_raw(t: &[f64], rank: usize, n: usize, ginv: &[f64]) -> f64 {
    let mut raised = t.to_vec();
    let mut stride = vec![1usize; rank];
    for s in (0..rank.saturating_sub(1)).rev() {
        stride[s] = stride[s + 1] * n;
    }
    for pos in 0..rank {
        let mut out = vec![0.0; raised.len()];
        for idx in 0..raised.len() {
            let v = raised[idx];
            if v == 0.0 {
                continue;
            }
            let d = (idx / stride[pos]) % n;
            let base = idx - d * stride[pos];
            for e in 0..n {
                out[base + e * stride[pos]] += ginv[e * n + d] * v;
            }
        }
        raised = out;
    }
    t.iter().zip(&raised).map(|(a, b)| a * b).sum()
}

/// Full contraction at the jet level; every factor is truncated to the
/// shortest order among the inputs.
pub(crate) fn tensor_norm_sq_jets(
    t: &[Taylor],
    rank: usize,
    n: usize,
    ginv: &[Taylor],
) -> Taylor {
    let ord = t[0].order().min(ginv[0].order());
    let tt: Vec<Taylor> = t.iter().map(|x| x.truncated(ord)).collect();
    let gi: Vec<Taylor> = ginv.iter().map(|x| x.truncated(ord)).collect();
    let mut stride = vec![1usize; rank];
    for s in (0..rank.saturating_sub(1)).rev() {
        stride[s] = stride[s + 1] * n;
    }
    let sp = tt[0].space().clone();
    let mut raised = tt.clone();
    for pos in 0..rank {
        let mut out = vec![Taylor::zero(&sp); raised.len()];
        for (idx, v) in raised.iter().enumerate() {
            let d = (idx / stride[pos]) % n;
            let base = idx - d * stride[pos];
            for e in 0..n {
                out[base + e * stride[pos]] =
                    &out[base + e * stride[pos]] + &gi[e * n + d].mul(v);
            }
        }
        raised = out;
    }
    let mut acc = Taylor::zero(&sp);
    for (a, b) in tt.iter().zip(&raised) {
        acc = &acc + &a.mul(b);
    }
    acc
}

/// Divergence ∇^i B_ij via Richardson-extrapolated fourth-order central
/// differences of pointwise Bach evaluations. The pipeline itself stops at
/// fourth metric derivatives, so the fifth-order information this test needs
/// is reconstructed numerically.
pub fn bach_divergence_fd(field: &MetricField, p: &ChartPoint, h: f64) -> Result<Vec<f64>> {
    let n = field.dim();
    let bach_at = |q: &[f64]| -> Result<Sym2> {
        bach(field, &ChartPoint::new(q.to_vec())?)
    };
    // ∂_s B_ij at two step sizes, then Richardson on the h^4 error term
    let d1 = |step: f64| -> Result<Vec<f64>> {
        let mut out = vec![0.0; n * n * n];
        for s in 0..n {
            let mut parts: Vec<(f64, Sym2)> = Vec::new();
            for (off, w) in [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)] {
                let mut q = p.coords().to_vec();
                q[s] += off * step;
                parts.push((w, bach_at(&q)?));
            }
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (w, b) in &parts {
                        acc += w * b.get(i, j);
                    }
                    out[(s * n + i) * n + j] = acc / step;
                }
            }
        }
        Ok(out)
    };
    let coarse = d1(h)?;
    let fine = d1(h / 2.0)?;
    let mut db = vec![0.0; n * n * n];
    for k in 0..db.len() {
        db[k] = fine[k] + (fine[k] - coarse[k]) / 15.0;
    }
    let mj = eval_metric_jet(field, p, 4)?;
    let jets = CurvatureJets::compute(&mj)?;
    let gamma = values(&jets.gamma);
    let bval = values(jets.bach.as_ref().unwrap());
    let ginv = mj.ginv();
    let gidx = |up: usize, a: usize, b: usize| (up * n + a) * n + b;
    let mut div = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        for s in 0..n {
            for i in 0..n {
                // ∇_s B_ij = ∂_s B_ij − Γ^p_si B_pj − Γ^p_sj B_ip
                let mut cov = db[(s * n + i) * n + j];
                for q in 0..n {
                    cov -= gamma[gidx(q, s, i)] * bval[q * n + j];
                    cov -= gamma[gidx(q, s, j)] * bval[i * n + q];
                }
                acc += ginv[i * n + s] * cov;
            }
        }
        div[j] = acc;
    }
    Ok(div)
}

/// Every curvature quantity the pipeline can produce at one point.
pub struct CurvatureBundle {
    pub n: usize,
    pub order: usize,
    pub metric: Sym2,
    pub metric_inv: Sym2,
    pub christoffel: Christoffel,
    pub riemann: Riemann4,
    pub ricci: Sym2,
    pub scalar: f64,
    pub schouten: Sym2,
    pub weyl: Weyl4,
    pub cotton: Option<Cotton3>,
    /// ∂_k R, present from order 3.
    pub scalar_grad: Option<Vec<f64>>,
    /// ∇_k R_ij with the derivative index last, present from order 3.
    pub cov_ricci: Option<Vec<f64>>,
    /// ∇_m R_ijkl with the derivative index last, present from order 3.
    pub cov_riemann: Option<Vec<f64>>,
    pub weyl_div: Option<Vec<f64>>,
    pub bach: Option<Sym2>,
}

impl CurvatureBundle {
    pub fn compute(field: &MetricField, p: &ChartPoint, order: usize) -> Result<CurvatureBundle> {
        let mj = eval_metric_jet(field, p, order)?;
        let jets = CurvatureJets::compute(&mj)?;
        let n = mj.n();
        let (scalar_grad, cov_ricci, cov_riemann, weyl_div) = if order >= 3 {
            let sg: Vec<f64> = (0..n).map(|k| jets.scalar.derivative(k).value()).collect();
            let cov_ric = values(&cov_deriv_jets(&jets.ricci, 2, n, &jets.gamma));
            let cov_riem = values(&cov_deriv_jets(&jets.riem, 4, n, &jets.gamma));
            let wd = if n >= 4 {
                Some(values(&jets.weyl_divergence_jets()?))
            } else {
                None
            };
            (Some(sg), Some(cov_ric), Some(cov_riem), wd)
        } else {
            (None, None, None, None)
        };
        Ok(CurvatureBundle {
            n,
            order,
            metric: Sym2::new(n, mj.g()),
            metric_inv: Sym2::new(n, mj.ginv()),
            christoffel: Christoffel {
                n,
                v: values(&jets.gamma),
            },
            riemann: Riemann4 {
                n,
                v: values(&jets.riem),
            },
            ricci: Sym2 {
                n,
                v: values(&jets.ricci),
            },
            scalar: jets.scalar.value(),
            schouten: Sym2 {
                n,
                v: values(&jets.schouten),
            },
            weyl: Weyl4 {
                n,
                v: values(&jets.weyl),
            },
            cotton: jets.cotton.as_ref().map(|c| Cotton3 {
                n,
                v: values(c),
            }),
            scalar_grad,
            cov_ricci,
            cov_riemann,
            weyl_div,
            bach: jets.bach.as_ref().map(|b| Sym2 {
                n,
                v: values(b),
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{perturbed_flat_field, unit_sphere_field};
    use crate::jets::eval_metric_jet;

    fn flat4() -> MetricField {
        MetricField::flat(4)
    }

    fn perturbed_metric(n: usize, eps: f64) -> MetricField {
        perturbed_flat_field(n, eps, 7)
    }

    #[test]
    fn flat_chain_is_zero() {
        let p = ChartPoint::new(vec![0.4, -0.2, 0.7, 0.1]).unwrap();
        let b = CurvatureBundle::compute(&flat4(), &p, 4).unwrap();
        assert_eq!(b.riemann.max_abs(), 0.0);
        assert_eq!(b.ricci.max_abs(), 0.0);
        assert_eq!(b.scalar, 0.0);
        assert_eq!(b.weyl.max_abs(), 0.0);
        assert_eq!(b.cotton.as_ref().unwrap().max_abs(), 0.0);
        assert_eq!(b.bach.as_ref().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn conformal_christoffels_at_origin() {
        // u = x1: Γ¹₁₁ = 1, Γ¹₂₂ = −1, Γ²₁₂ = 1
        let u = ScalarField::polynomial(4, vec![(1.0, vec![1, 0, 0, 0])]);
        let g = MetricField::conformally_flat(&u);
        let mj = eval_metric_jet(&g, &ChartPoint::origin(4), 2).unwrap();
        let gamma = christoffel(&mj).unwrap();
        assert!((gamma.get(0, 0, 0) - 1.0).abs() < 1e-13);
        assert!((gamma.get(0, 1, 1) + 1.0).abs() < 1e-13);
        assert!((gamma.get(1, 0, 1) - 1.0).abs() < 1e-13);
        // lower-index symmetry
        assert_eq!(gamma.get(1, 0, 1), gamma.get(1, 1, 0));
    }

    #[test]
    fn sphere_scalar_curvature_is_twelve() {
        let g = unit_sphere_field(4);
        for p in [
            ChartPoint::origin(4),
            ChartPoint::new(vec![0.3, -0.1, 0.2, 0.5]).unwrap(),
        ] {
            let b = CurvatureBundle::compute(&g, &p, 4).unwrap();
            assert!(
                (b.scalar - 12.0).abs() < 1e-9,
                "scalar curvature {} at {:?}",
                b.scalar,
                p
            );
            assert!(b.weyl.max_abs() < 1e-9, "sphere Weyl {}", b.weyl.max_abs());
            assert!(
                b.cotton.as_ref().unwrap().max_abs() < 1e-9,
                "sphere Cotton {}",
                b.cotton.as_ref().unwrap().max_abs()
            );
            assert!(
                b.bach.as_ref().unwrap().max_abs() < 1e-8,
                "sphere Bach {}",
                b.bach.as_ref().unwrap().max_abs()
            );
        }
        // Einstein data at the chart center
        let b = CurvatureBundle::compute(&g, &ChartPoint::origin(4), 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 3.0 } else { 0.0 };
                assert!((b.ricci.get(i, j) - expect).abs() < 1e-10);
                let schouten_expect = if i == j { 1.0 } else { 0.0 };
                assert!((b.schouten.get(i, j) - schouten_expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let g = perturbed_metric(4, 1e-2);
        let p = ChartPoint::new(vec![0.2, 0.1, -0.3, 0.25]).unwrap();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let scale = rm.max_abs();
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = rm.get(i, j, k, l);
                        assert!((r + rm.get(j, i, k, l)).abs() <= 1e-9 * scale);
                        assert!((r + rm.get(i, j, l, k)).abs() <= 1e-9 * scale);
                        assert!((r - rm.get(k, l, i, j)).abs() <= 1e-9 * scale);
                        let bianchi =
                            r + rm.get(i, k, l, j) + rm.get(i, l, j, k);
                        assert!(bianchi.abs() <= 1e-9 * scale, "bianchi {bianchi}");
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_is_trace_free_and_reconstructs() {
        let g = perturbed_metric(4, 1e-2);
        let p = ChartPoint::new(vec![0.15, -0.2, 0.1, 0.3]).unwrap();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let (ric, scal) = ricci_scalar(&rm, &mj);
        let w = weyl(&rm, &ric, scal, &mj);
        let ginv = mj.ginv();
        let n = 4;
        let scale = w.max_abs().max(rm.max_abs());
        // every single contraction vanishes
        for a in 0..n {
            for b in 0..n {
                let mut t1 = 0.0;
                let mut t2 = 0.0;
                let mut t3 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        t1 += ginv[i * n + j] * w.get(i, a, j, b);
                        t2 += ginv[i * n + j] * w.get(i, j, a, b);
                        t3 += ginv[i * n + j] * w.get(a, i, b, j);
                    }
                }
                assert!(t1.abs() <= 1e-9 * scale);
                assert!(t2.abs() <= 1e-9 * scale);
                assert!(t3.abs() <= 1e-9 * scale);
            }
        }
        // Riem = W + (1/(n−2)) Ric ∧̇ g − (R/(2(n−1)(n−2))) g ∧̇ g
        let gm = Sym2::new(n, mj.g());
        let ric_kn = kulkarni_nomizu(&ric, &gm);
        let gg = kulkarni_nomizu(&gm, &gm);
        for idx in 0..n * n * n * n {
            let recon = w.components()[idx] + ric_kn.components()[idx] / (n as f64 - 2.0)
                - scal * gg.components()[idx]
                    / (2.0 * (n as f64 - 1.0) * (n as f64 - 2.0));
            assert!(
                (recon - rm.components()[idx]).abs() <= 1e-9 * scale,
                "reconstruction at {idx}"
            );
        }
    }

    #[test]
    fn kulkarni_identity_values() {
        let d = Sym2::identity(4);
        let r = kulkarni_nomizu(&d, &d);
        assert_eq!(r.get(0, 1, 0, 1), 2.0);
        // symmetry in the arguments
        let a = Sym2::new(
            4,
            (0..16).map(|k| 0.1 * k as f64).collect::<Vec<_>>(),
        );
        let ab = kulkarni_nomizu(&a, &d);
        let ba = kulkarni_nomizu(&d, &a);
        for (x, y) in ab.components().iter().zip(ba.components()) {
            assert!((x - y).abs() < 1e-14);
        }
        // |δ∧̇δ|² = 96 in flat n = 4 (brute-force oracle over all tuples)
        let mjf = eval_metric_jet(&MetricField::flat(4), &ChartPoint::origin(4), 1).unwrap();
        let mut brute = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        brute += r.get(i, j, k, l) * r.get(i, j, k, l);
                    }
                }
            }
        }
        assert_eq!(brute, 96.0);
        assert!((tensor_norm_sq(&r, &mjf) - 96.0).abs() < 1e-12);
    }

    #[test]
    fn cotton_weyl_divergence_identity() {
        for n in [4usize, 5] {
            let g = perturbed_metric(n, 1e-2);
            let p = ChartPoint::new((0..n).map(|k| 0.1 + 0.05 * k as f64).collect()).unwrap();
            let c = cotton(&g, &p).unwrap();
            let dw = weyl_divergence(&g, &p).unwrap();
            let factor = (n as f64 - 2.0) / (n as f64 - 3.0);
            let scale = c.max_abs().max(1e-30);
            for idx in 0..n * n * n {
                let resid = c.components()[idx] + factor * dw[idx];
                assert!(
                    resid.abs() <= 1e-8 * scale,
                    "n={n} idx={idx} resid={resid:.3e} scale={scale:.3e}"
                );
            }
        }
    }

    #[test]
    fn cotton_symmetries_and_traces() {
        let g = perturbed_metric(4, 1e-2);
        let p = ChartPoint::new(vec![0.22, -0.11, 0.17, 0.08]).unwrap();
        let c = cotton(&g, &p).unwrap();
        let mj = eval_metric_jet(&g, &p, 1).unwrap();
        let ginv = mj.ginv();
        let n = 4;
        let scale = c.max_abs();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert!((c.get(i, j, k) + c.get(i, k, j)).abs() <= 1e-9 * scale);
                    let cyc = c.get(i, j, k) + c.get(j, k, i) + c.get(k, i, j);
                    assert!(cyc.abs() <= 1e-9 * scale);
                }
            }
        }
        for k in 0..n {
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            let mut t3 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    t1 += ginv[i * n + j] * c.get(i, j, k);
                    t2 += ginv[i * n + j] * c.get(i, k, j);
                    t3 += ginv[i * n + j] * c.get(k, i, j);
                }
            }
            assert!(t1.abs() <= 1e-9 * scale);
            assert!(t2.abs() <= 1e-9 * scale);
            assert!(t3.abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn bach_symmetric_trace_free_divergence_free() {
        let g = perturbed_metric(4, 1e-2);
        let p = ChartPoint::new(vec![0.12, 0.21, -0.15, 0.18]).unwrap();
        let b = bach(&g, &p).unwrap();
        let mj = eval_metric_jet(&g, &p, 1).unwrap();
        let ginv = mj.ginv();
        let n = 4;
        let scale = b.max_abs();
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                assert!((b.get(i, j) - b.get(j, i)).abs() <= 1e-8 * scale);
                trace += ginv[i * n + j] * b.get(i, j);
            }
        }
        assert!(trace.abs() <= 1e-8 * scale, "trace {trace:.3e}");
        let div = bach_divergence_fd(&g, &p, 0.05).unwrap();
        // scale for the divergence: the cancelling budget is ~|B| / h
        let div_scale = scale / 0.05;
        for d in &div {
            assert!(
                d.abs() <= 1e-7 * div_scale,
                "divergence {d:.3e} vs scale {div_scale:.3e}"
            );
        }
    }

    #[test]
    fn conformal_rescale_and_weyl_weight() {
        let g = perturbed_metric(4, 1e-2);
        let u = ScalarField::polynomial(
            4,
            vec![
                (0.2, vec![1, 0, 0, 0]),
                (-0.1, vec![0, 1, 1, 0]),
                (0.05, vec![0, 0, 0, 2]),
            ],
        );
        let gt = conformal_rescale(&g, &u);
        let p = ChartPoint::new(vec![0.1, -0.2, 0.3, 0.15]).unwrap();
        // u = 0 leaves the jets untouched
        let zero = ScalarField::constant(4, 0.0);
        let same = conformal_rescale(&g, &zero);
        let mj0 = eval_metric_jet(&g, &p, 3).unwrap();
        let mj1 = eval_metric_jet(&same, &p, 3).unwrap();
        for (a, b) in mj0.g().iter().zip(mj1.g()) {
            assert!((a - b).abs() < 1e-15);
        }
        // |W̃|²_g̃ = e^{−4u} |W|²_g for the (0,4) Weyl
        let uval = u
            .eval_taylor(&p, 0)
            .unwrap()
            .value();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let (ric, scal) = ricci_scalar(&rm, &mj);
        let w = weyl(&rm, &ric, scal, &mj);
        let mjt = eval_metric_jet(&gt, &p, 2).unwrap();
        let rmt = riemann(&mjt).unwrap();
        let (rict, scalt) = ricci_scalar(&rmt, &mjt);
        let wt = weyl(&rmt, &rict, scalt, &mjt);
        let n0 = tensor_norm_sq(&w, &mj);
        let n1 = tensor_norm_sq(&wt, &mjt);
        assert!(
            (n1 - (-4.0 * uval).exp() * n0).abs() <= 1e-10 * n0.abs().max(1e-12),
            "weights: {n1} vs {}",
            (-4.0 * uval).exp() * n0
        );
    }

    #[test]
    fn weyl_dimension_three_is_zero() {
        let g = perturbed_metric(3, 1e-2);
        let p = ChartPoint::new(vec![0.2, 0.1, -0.1]).unwrap();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let (ric, scal) = ricci_scalar(&rm, &mj);
        let w = weyl(&rm, &ric, scal, &mj);
        assert_eq!(w.max_abs(), 0.0);
        assert!(weyl_divergence(&g, &p).is_err());
    }

    #[test]
    fn schouten_trace_identity() {
        let g = perturbed_metric(4, 1e-2);
        let p = ChartPoint::new(vec![0.2, 0.15, -0.12, 0.07]).unwrap();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let (ric, scal) = ricci_scalar(&rm, &mj);
        let a = schouten(&ric, scal, &mj);
        let ginv = mj.ginv();
        let n = 4;
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                trace += ginv[i * n + j] * a.get(i, j);
            }
        }
        let expect = scal * (n as f64 - 2.0) / (2.0 * (n as f64 - 1.0));
        assert!((trace - expect).abs() <= 1e-11 * scal.abs().max(1.0));
    }
}
