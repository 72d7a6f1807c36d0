//! Literal evaluation of the closed-form deformed Weyl and Cotton tensors.
//!
//! Both formulas are expressed in background quantities (curvature of g,
//! covariant derivatives of φ with respect to g) and are evaluated here
//! term by term, including the 1/w and 1/w² denominators. The pipeline
//! (curvature of g̃ = g + dφ⊗dφ computed from jets) is the independent
//! oracle these evaluators are cross-validated against.
//!
//! One term of the deformed-Weyl expression is printed with the factor
//! (g_it − φ_iφ_t) where symmetry suggests a plus sign; it is transcribed
//! as printed. The term carries a curvature factor, so on flat backgrounds
//! the cross-validation is unaffected and on curved backgrounds the
//! residual is reported diagnostically rather than asserted.

use crate::curvature::{christoffel_jets, cov_deriv_jets, Cotton3, CurvatureBundle, Weyl4};
use crate::error::{Error, Result};
use crate::jets::{JetScalar, MetricJet};
use crate::taylor::Taylor;

/// Covariant derivatives of φ at a point, with respect to the background.
pub(crate) struct PhiCov {
    pub n: usize,
    pub grad: Vec<f64>,
    pub grad_up: Vec<f64>,
    pub hess: Vec<f64>,
    /// φ^i_j at [i·n + j] (first index raised).
    pub hess_mixed: Vec<f64>,
    pub hess_up: Vec<f64>,
    /// ∇_k ∇_j ∇_i φ at [(i·n + j)·n + k]; requires a third-order φ jet.
    pub third: Option<Vec<f64>>,
    pub lap: f64,
    pub lap_grad: Option<Vec<f64>>,
    pub w: f64,
}

pub(crate) fn phi_cov(phi: &Taylor, mj: &MetricJet) -> Result<PhiCov> {
    let n = mj.n();
    if phi.n() != n {
        return Err(Error::domain("φ jet dimension does not match metric"));
    }
    if phi.order() < 2 {
        return Err(Error::Capability {
            requested: 2,
            max: phi.order(),
        });
    }
    // the covariant chain is limited by the Γ jets the metric provides
    let phi = &if phi.order() > mj.order() {
        phi.truncated(mj.order())
    } else {
        phi.clone()
    };
    if phi.order() < 2 {
        return Err(Error::Capability {
            requested: 2,
            max: phi.order(),
        });
    }
    let gamma = christoffel_jets(mj)?;
    let grad_jets: Vec<Taylor> = (0..n).map(|i| phi.derivative(i)).collect();
    let hess_jets = cov_deriv_jets(&grad_jets, 1, n, &gamma);
    let grad: Vec<f64> = grad_jets.iter().map(|t| t.value()).collect();
    let hess: Vec<f64> = hess_jets.iter().map(|t| t.value()).collect();
    let ginv = mj.ginv();
    let mut grad_up = vec![0.0; n];
    for i in 0..n {
        for p in 0..n {
            grad_up[i] += ginv[i * n + p] * grad[p];
        }
    }
    let mut hess_mixed = vec![0.0; n * n];
    let mut hess_up = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                hess_mixed[i * n + j] += ginv[i * n + p] * hess[p * n + j];
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                hess_up[i * n + j] += ginv[j * n + p] * hess_mixed[i * n + p];
            }
        }
    }
    let mut lap = 0.0;
    for i in 0..n {
        lap += hess_mixed[i * n + i];
    }
    let (third, lap_grad) = if phi.order() >= 3 && mj.order() >= 2 {
        let third_jets = cov_deriv_jets(&hess_jets, 2, n, &gamma);
        let third: Vec<f64> = third_jets.iter().map(|t| t.value()).collect();
        let ord = hess_jets[0].order();
        let ginv_jets: Vec<Taylor> = mj.ginv_jets().iter().map(|t| t.truncated(ord)).collect();
        let mut lap_jet = Taylor::zero(hess_jets[0].space());
        for i in 0..n {
            for j in 0..n {
                lap_jet = &lap_jet + &ginv_jets[i * n + j].mul(&hess_jets[i * n + j]);
            }
        }
        let lg: Vec<f64> = (0..n).map(|k| lap_jet.derivative(k).value()).collect();
        (Some(third), Some(lg))
    } else {
        (None, None)
    };
    let mut w = 1.0;
    for i in 0..n {
        w += grad_up[i] * grad[i];
    }
    Ok(PhiCov {
        n,
        grad,
        grad_up,
        hess,
        hess_mixed,
        hess_up,
        third,
        lap,
        lap_grad,
        w,
    })
}

/// Every line of the deformed-Weyl formula, evaluated literally.
pub fn deformed_weyl_closed_form(
    bundle: &CurvatureBundle,
    mj: &MetricJet,
    phi: &JetScalar,
) -> Result<Weyl4> {
    let n = bundle.n;
    let pc = phi_cov(phi.taylor(), mj)?;
    let nf = n as f64;
    let g = mj.g();
    let riem = bundle.riemann.components();
    let ric = bundle.ricci.components();
    let scal = bundle.scalar;
    let w = pc.w;
    let gu = &pc.grad_up;
    let gr = &pc.grad;
    let h = &pc.hess;
    let hm = &pc.hess_mixed;
    let hu = &pc.hess_up;
    let lap = pc.lap;
    let r4 = |a: usize, b: usize, c: usize, d: usize| riem[((a * n + b) * n + c) * n + d];
    // contractions shared by several lines
    let mut rpp = vec![0.0; n * n];
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n * n];
    let mut z = vec![0.0; n];
    let mut rphiphi = 0.0;
    let mut s_hess = 0.0;
    let mut hess_sq = 0.0;
    for a in 0..n {
        for p in 0..n {
            v[a] += h[a * n + p] * gu[p];
            z[a] += hu[a * n + p] * gr[p];
        }
    }
    for a in 0..n {
        for b in 0..n {
            rphiphi += ric[a * n + b] * gu[a] * gu[b];
            s_hess += gu[a] * gu[b] * h[a * n + b];
            hess_sq += h[a * n + b] * hu[a * n + b];
            for p in 0..n {
                q[a * n + b] += h[a * n + p] * hm[p * n + b];
            }
            for p in 0..n {
                for s in 0..n {
                    rpp[a * n + b] += gu[p] * gu[s] * r4(a, p, b, s);
                }
            }
        }
    }
    let mut lh = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            lh[a * n + b] = lap * h[a * n + b] - q[a * n + b];
        }
    }
    let mut t_big = lap * s_hess;
    for a in 0..n {
        t_big -= v[a] * z[a];
    }
    let bmat = |a: usize, b: usize| g[a * n + b] + gr[a] * gr[b];
    let c_w = 1.0 / (w * (nf - 2.0));
    let c_ww = 1.0 / (w * w * (nf - 2.0));
    let c_big = 1.0 / (w * (nf - 1.0) * (nf - 2.0));
    let c_big2 = 2.0 / (w * w * (nf - 1.0) * (nf - 2.0));
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for t in 0..n {
                    let gphi6 = g[i * n + k] * gr[j] * gr[t] - g[i * n + t] * gr[j] * gr[k]
                        + g[j * n + t] * gr[i] * gr[k]
                        - g[j * n + k] * gr[i] * gr[t];
                    let gg2 = g[i * n + k] * g[j * n + t] - g[i * n + t] * g[j * n + k];
                    let g6 = gg2 + gphi6;
                    let mut val = bundle.weyl.get(i, j, k, t);
                    val += (h[i * n + k] * h[j * n + t] - h[i * n + t] * h[j * n + k]) / w;
                    val += (ric[i * n + k] * gr[j] * gr[t] - ric[i * n + t] * gr[j] * gr[k]
                        + ric[j * n + t] * gr[i] * gr[k]
                        - ric[j * n + k] * gr[i] * gr[t])
                        / (nf - 2.0);
                    val += scal / ((nf - 1.0) * (nf - 2.0)) * gphi6;
                    val += c_w
                        * (rpp[i * n + k] * bmat(j, t) - rpp[i * n + t] * bmat(j, k)
                            + rpp[j * n + t] * bmat(i, k)
                            - rpp[j * n + k] * (g[i * n + t] - gr[i] * gr[t]));
                    val -= 2.0 * rphiphi * c_big * g6;
                    val -= c_w * (lh[i * n + k] * bmat(j, t) - lh[i * n + t] * bmat(j, k));
                    val -= c_w * (lh[j * n + t] * bmat(i, k) - lh[j * n + k] * bmat(i, t));
                    val += (lap * lap - hess_sq) * c_big * g6;
                    val += c_ww
                        * ((h[i * n + k] * s_hess - v[i] * v[k]) * bmat(j, t)
                            - (h[i * n + t] * s_hess - v[i] * v[t]) * bmat(j, k));
                    val += c_ww
                        * ((h[j * n + t] * s_hess - v[j] * v[t]) * bmat(i, k)
                            - (h[j * n + k] * s_hess - v[j] * v[k]) * bmat(i, t));
                    val -= c_big2 * t_big * gg2;
                    val -= c_big2 * t_big * gphi6;
                    out[((i * n + j) * n + k) * n + t] = val;
                }
            }
        }
    }
    Ok(Weyl4::new(n, out))
}

/// Every block of the deformed-Cotton formula, evaluated literally.
/// Needs a bundle of order ≥ 3 (for ∇Ric, ∇Riem, ∂R) and a φ jet of
/// order ≥ 3.
pub fn cotton_deformed_closed_form(
    bundle: &CurvatureBundle,
    mj: &MetricJet,
    phi: &JetScalar,
) -> Result<Cotton3> {
    let n = bundle.n;
    if phi.order() < 3 {
        return Err(Error::Capability {
            requested: 3,
            max: phi.order(),
        });
    }
    let (Some(cov_ric), Some(cov_riem), Some(sgrad), Some(cback)) = (
        bundle.cov_ricci.as_ref(),
        bundle.cov_riemann.as_ref(),
        bundle.scalar_grad.as_ref(),
        bundle.cotton.as_ref(),
    ) else {
        return Err(Error::Capability {
            requested: 3,
            max: bundle.order,
        });
    };
    let pc = phi_cov(phi.taylor(), mj)?;
    let third = pc.third.as_ref().expect("order-3 φ jet has third derivatives");
    let lapg = pc.lap_grad.as_ref().unwrap();
    let nf = n as f64;
    let g = mj.g();
    let riem = bundle.riemann.components();
    let ric = bundle.ricci.components();
    let w = pc.w;
    let gu = &pc.grad_up;
    let gr = &pc.grad;
    let h = &pc.hess;
    let hm = &pc.hess_mixed;
    let hu = &pc.hess_up;
    let lap = pc.lap;
    let r4 = |a: usize, b: usize, c: usize, d: usize| riem[((a * n + b) * n + c) * n + d];
    let t3 = |a: usize, b: usize, c: usize| third[(a * n + b) * n + c];
    let cr5 =
        |a: usize, b: usize, c: usize, d: usize, e: usize| cov_riem[(((a * n + b) * n + c) * n + d) * n + e];

    // shared contractions
    let mut v = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut rpp = vec![0.0; n * n];
    let mut q = vec![0.0; n * n];
    let mut rphiphi = 0.0;
    let mut s_hess = 0.0;
    let mut hess_sq = 0.0;
    for a in 0..n {
        for p in 0..n {
            v[a] += h[a * n + p] * gu[p];
            z[a] += hu[a * n + p] * gr[p];
        }
    }
    for a in 0..n {
        for b in 0..n {
            rphiphi += ric[a * n + b] * gu[a] * gu[b];
            s_hess += gu[a] * gu[b] * h[a * n + b];
            hess_sq += h[a * n + b] * hu[a * n + b];
            for p in 0..n {
                q[a * n + b] += h[a * n + p] * hm[p * n + b];
                for s in 0..n {
                    rpp[a * n + b] += gu[p] * gu[s] * r4(a, p, b, s);
                }
            }
        }
    }
    let mut lh = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            lh[a * n + b] = lap * h[a * n + b] - q[a * n + b];
        }
    }
    let mut v_up = vec![0.0; n];
    let ginv = mj.ginv();
    for s in 0..n {
        for p in 0..n {
            v_up[s] += ginv[s * n + p] * v[p];
        }
    }
    // m2[k] = φ^s_k v_s, w2[s] = v_q φ^{qs}, th3[k] = φ^tφ^s φ_tsk,
    // tv[i][k] = φ^t φ_itk
    let mut m2 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut th3 = vec![0.0; n];
    let mut tv = vec![0.0; n * n];
    for k in 0..n {
        for s in 0..n {
            m2[k] += hm[s * n + k] * v[s];
            w2[k] += v[s] * hu[s * n + k];
        }
        for t in 0..n {
            for s in 0..n {
                th3[k] += gu[t] * gu[s] * t3(t, s, k);
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            for t in 0..n {
                tv[i * n + k] += gu[t] * t3(i, t, k);
            }
        }
    }
    // rW1[i][j][k] = φ^r R_rijk, rW2[j][k] = φ^rφ^s R_rsjk
    let mut rw1 = vec![0.0; n * n * n];
    let mut rw2 = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            for r in 0..n {
                for i in 0..n {
                    rw1[(i * n + j) * n + k] += gu[r] * r4(r, i, j, k);
                }
                for s in 0..n {
                    rw2[j * n + k] += gu[r] * gu[s] * r4(r, s, j, k);
                }
            }
        }
    }
    // brace of the φ_ik φ^p {…} blocks, contracted against φ^p
    let mut bsum = vec![0.0; n];
    for j in 0..n {
        for p in 0..n {
            let brace = ric[j * n + p]
                - (rpp[p * n + j] + h[j * n + p] * s_hess
                    - v[p] * v[j]
                    - lap * h[j * n + p]
                    + q[p * n + j])
                    / w;
            bsum[j] += gu[p] * brace;
        }
    }
    // K[k] of the (n−1)-trace block
    let mut kk = vec![0.0; n];
    for k in 0..n {
        let mut acc = 2.0 * lap * lapg[k];
        for p in 0..n {
            for s in 0..n {
                acc += gu[p] * gu[s] * cov_ric[(p * n + s) * n + k];
                acc += 2.0 * ric[p * n + s] * gu[p] * hm[s * n + k];
                acc -= 2.0 * hu[p * n + s] * t3(p, s, k);
            }
        }
        kk[k] = acc;
    }
    // L[k] of the 1/w² trace block
    let mut vz = 0.0;
    for a in 0..n {
        vz += v[a] * z[a];
    }
    let inner13 = 2.0 * rphiphi - lap * lap + hess_sq + 4.0 / w * (lap * s_hess - vz);
    let mut ll = vec![0.0; n];
    for k in 0..n {
        let mut acc = 2.0 * v[k] * inner13;
        acc += lapg[k] * s_hess + lap * th3[k] + 2.0 * lap * m2[k];
        for s in 0..n {
            acc -= 2.0 * v_up[s] * tv[s * n + k];
            acc -= 2.0 * w2[s] * h[s * n + k];
        }
        ll[k] = acc;
    }
    // φ^tφ^s-contractions against one Hessian slot of the curvature:
    // rphi_h[a][b][c] = (φ_b^t φ^s + φ_b^s φ^t) R_atcs
    let mut rphi_h = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    for s in 0..n {
                        acc += (hm[t * n + b] * gu[s] + hm[s * n + b] * gu[t]) * r4(a, t, c, s);
                    }
                }
                rphi_h[(a * n + b) * n + c] = acc;
            }
        }
    }
    // rh[i][j][k] = φ_i^t φ^s R_stjk
    let mut rh = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    for s in 0..n {
                        acc += hm[t * n + i] * gu[s] * r4(s, t, j, k);
                    }
                }
                rh[(i * n + j) * n + k] = acc;
            }
        }
    }
    // thm[a][b][c] = φ_b^t φ_atc
    let mut thm = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    acc += hm[t * n + b] * t3(a, t, c);
                }
                thm[(a * n + b) * n + c] = acc;
            }
        }
    }
    // crphi[a][b][c] = φ^tφ^s R_atbs,c
    let mut crphi = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    for s in 0..n {
                        acc += gu[t] * gu[s] * cr5(a, t, b, s, c);
                    }
                }
                crphi[(a * n + b) * n + c] = acc;
            }
        }
    }
    let bmat = |a: usize, b: usize| g[a * n + b] + gr[a] * gr[b];
    let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut val = cback.get(i, j, k);
                val -= (rphi_h[i3(i, k, j)] - rphi_h[i3(i, j, k)]) / w;
                val -= gu_dot(&pc, i, k, &bsum, j) / w;
                val += gu_dot(&pc, i, j, &bsum, k) / w;
                val += (lapg[k] * h[i * n + j] - lapg[j] * h[i * n + k]
                    + lap * rw1[i3(i, j, k)]
                    - rh[i3(i, j, k)]
                    + thm[i3(i, k, j)]
                    - thm[i3(i, j, k)]
                    + crphi[i3(i, j, k)]
                    - crphi[i3(i, k, j)])
                    / w;
                val += 2.0 / (w * w)
                    * (v[k] * rpp[i * n + j] - v[j] * rpp[i * n + k] + v[j] * lh[i * n + k]
                        - v[k] * lh[i * n + j]);
                val -= (h[i * n + j] * m2[k] - v[j] * q[i * n + k] - h[i * n + k] * m2[j]
                    + v[k] * q[i * n + j])
                    / (w * w);
                val -= (h[i * n + j] * m2[k] - v[i] * q[j * n + k] - h[i * n + k] * m2[j]
                    + v[i] * q[k * n + j])
                    / (w * w);
                val -= (rw1[i3(i, j, k)] * s_hess - rw2[j * n + k] * v[i]
                    + h[i * n + j] * th3[k]
                    - h[i * n + k] * th3[j]
                    - v[j] * tv[i * n + k]
                    + v[k] * tv[i * n + j])
                    / (w * w);
                val -= 4.0 / (w * w * w)
                    * (v[k] * (h[i * n + j] * s_hess - v[i] * v[j])
                        - v[j] * (h[i * n + k] * s_hess - v[i] * v[k]));
                val -= kk[k] * bmat(i, j) / (2.0 * w * (nf - 1.0));
                val += kk[j] * bmat(i, k) / (2.0 * w * (nf - 1.0));
                val -= ll[k] * bmat(i, j) / (2.0 * w * w * (nf - 1.0));
                val += ll[j] * bmat(i, k) / (2.0 * w * w * (nf - 1.0));
                val -= 2.0 / (nf - 1.0) * (sgrad[k] * gr[i] * gr[j] - sgrad[j] * gr[i] * gr[k]);
                out[i3(i, j, k)] = val;
            }
        }
    }
    Ok(Cotton3::new(n, out))
}

/// φ_ik multiplied against the φ^p-contracted brace of the second and
/// third deformed-Cotton blocks.
fn gu_dot(pc: &PhiCov, i: usize, k: usize, bsum: &[f64], j: usize) -> f64 {
    pc.hess[i * pc.n + k] * bsum[j]
}
