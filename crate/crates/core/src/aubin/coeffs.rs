//! Exact-rational principal-part coefficients.
//!
//! Everything here is stored r-free over the rescaled coordinate ξ = x/r;
//! the per-family scale factors (λ², λ²/r, λ²/r²) are applied at evaluation
//! time. In that normalization the printed tables read, for
//! α = (1, 5/4, 3/2, 2):
//!   a₁₂ = 5/48 = a₃₄, a₁₃ = −1/48 = a₂₄, a₁₄ = −1/12 = a₂₃,
//!   a₁₂₃ = −15/8, a₂₁₄ = −1/2, a₁₂₄ = −5/4, a₂₁₃ = −9/8,
//!   a₁₃₄ = −3/4, a₃₁₂ = −5/8.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{rat, rat_int, Poly};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffFamily {
    Weyl,
    Cotton,
}

/// The a_ij, b_ij(ξ), a_ijk tables for one family.
#[derive(Clone)]
pub struct PrincipalCoeffs {
    pub family: CoeffFamily,
    pub n: usize,
    /// a_ij, zero on the diagonal (r²-cleared for the cotton family).
    a: Vec<BigRational>,
    /// b_ij as a quadratic form in ξ: coefficient of ξ_m² at [(i·n+j)·n+m].
    b: Vec<BigRational>,
    /// a_ijk (r²-cleared for weyl, r⁴-cleared for cotton).
    a3: Vec<BigRational>,
}

impl PrincipalCoeffs {
    pub fn a(&self, i: usize, j: usize) -> &BigRational {
        &self.a[i * self.n + j]
    }
    pub fn a3(&self, i: usize, j: usize, k: usize) -> &BigRational {
        &self.a3[(i * self.n + j) * self.n + k]
    }
    /// Coefficient of ξ_m² in b_ij.
    pub fn b_coeff(&self, i: usize, j: usize, m: usize) -> &BigRational {
        &self.b[(i * self.n + j) * self.n + m]
    }
    pub fn b_eval(&self, i: usize, j: usize, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, &x) in xi.iter().enumerate() {
            acc += crate::aubin::coeffs::to_f64(self.b_coeff(i, j, m)) * x * x;
        }
        acc
    }
    pub fn a_f64(&self, i: usize, j: usize) -> f64 {
        to_f64(self.a(i, j))
    }
    pub fn a3_f64(&self, i: usize, j: usize, k: usize) -> f64 {
        to_f64(self.a3(i, j, k))
    }

    /// Exact column sum Σ_{i≠j} a_ij (vanishes for the weyl family).
    pub fn a_column_sum(&self, j: usize) -> BigRational {
        let mut s = BigRational::zero();
        for i in 0..self.n {
            if i != j {
                s += self.a(i, j).clone();
            }
        }
        s
    }

    /// Exact column sum of the quadratic forms Σ_{i≠j} b_ij, per monomial.
    pub fn b_column_sum(&self, j: usize) -> Vec<BigRational> {
        let mut s = vec![BigRational::zero(); self.n];
        for i in 0..self.n {
            if i != j {
                for m in 0..self.n {
                    s[m] += self.b_coeff(i, j, m).clone();
                }
            }
        }
        s
    }

    pub fn any_a_zero(&self) -> bool {
        (0..self.n).any(|i| {
            (0..self.n).any(|j| i != j && self.a(i, j).is_zero())
        })
    }
    pub fn any_a3_zero(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k && self.a3(i, j, k).is_zero() {
                        return true;
                    }
                }
            }
        }
        false
    }
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational fits f64")
}

fn sum(alpha: &[BigRational]) -> BigRational {
    alpha.iter().cloned().sum()
}

fn sum_sq(alpha: &[BigRational]) -> BigRational {
    alpha.iter().map(|a| a.clone() * a.clone()).sum()
}

fn sum_pairs(alpha: &[BigRational]) -> BigRational {
    let mut s = BigRational::zero();
    for k in 0..alpha.len() {
        for l in (k + 1)..alpha.len() {
            s += alpha[k].clone() * alpha[l].clone();
        }
    }
    s
}

fn validate_alpha(alpha: &[BigRational], n: usize) -> Result<()> {
    if alpha.len() != n {
        return Err(Error::precondition(format!(
            "alpha length {} does not match n = {n}",
            alpha.len()
        )));
    }
    for a in alpha {
        if *a < rat_int(1) || *a > rat_int(2) {
            return Err(Error::precondition("alpha entries must lie in [1, 2]"));
        }
    }
    Ok(())
}

/// Coefficients of the deformed-Weyl principal part:
///   W̃_ijij − W_ijij = λ²[a_ij (f′)² + b_ij(ξ) f′f″],
///   W̃_ijik − W_ijik = λ² a_ijk ξ_j ξ_k f′f″.
pub fn weyl_coeffs(alpha: &[BigRational], n: usize) -> Result<PrincipalCoeffs> {
    if n < 4 {
        return Err(Error::precondition("weyl coefficients need n ≥ 4"));
    }
    validate_alpha(alpha, n)?;
    let nm1 = rat_int(n as i64 - 1);
    let nm2 = rat_int(n as i64 - 2);
    let nm3 = rat_int(n as i64 - 3);
    let nm4 = rat_int(n as i64 - 4);
    let total = sum(alpha);
    let pairs = sum_pairs(alpha);
    let mut a = vec![BigRational::zero(); n * n];
    let mut b = vec![BigRational::zero(); n * n * n];
    let mut a3 = vec![BigRational::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let others = total.clone() - alpha[i].clone() - alpha[j].clone();
            a[i * n + j] = (nm4.clone() * alpha[i].clone() * alpha[j].clone()
                - (alpha[i].clone() + alpha[j].clone()) * others.clone()
                + rat_int(2) / nm1.clone() * pairs.clone())
                / nm2.clone();
            for m in 0..n {
                let am2 = alpha[m].clone() * alpha[m].clone();
                let mut c = BigRational::zero();
                if m == i {
                    c += nm4.clone() * alpha[i].clone() * alpha[j].clone() * alpha[i].clone();
                    c -= alpha[i].clone() * alpha[i].clone() * others.clone();
                } else if m == j {
                    c += nm4.clone() * alpha[i].clone() * alpha[j].clone() * alpha[j].clone();
                    c -= alpha[j].clone() * alpha[j].clone() * others.clone();
                } else {
                    c -= (alpha[i].clone() + alpha[j].clone()) * am2.clone();
                }
                c += rat_int(2) / nm1.clone() * am2.clone() * (total.clone() - alpha[m].clone());
                b[(i * n + j) * n + m] = rat_int(2) * c / nm2.clone();
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let rest = total.clone() - alpha[i].clone() - alpha[j].clone() - alpha[k].clone();
                a3[(i * n + j) * n + k] = rat_int(2) * alpha[j].clone() * alpha[k].clone()
                    * (nm3.clone() * alpha[i].clone() - rest)
                    / nm2.clone();
            }
        }
    }
    let coeffs = PrincipalCoeffs {
        family: CoeffFamily::Weyl,
        n,
        a,
        b,
        a3,
    };
    // tracelessness of the deformed Weyl principal part, exact
    for j in 0..n {
        assert!(coeffs.a_column_sum(j).is_zero(), "weyl a-column sum");
        assert!(
            coeffs.b_column_sum(j).iter().all(|c| c.is_zero()),
            "weyl b-column sum"
        );
    }
    Ok(coeffs)
}

/// Coefficients of the deformed-Cotton principal part:
///   C̃_iji − C_iji = (λ²/r){a_ij A + b_ij(ξ) B} ξ_j,
///   C̃_ijk − C_ijk = (λ²/r) a_ijk ξ_i ξ_j ξ_k B,
/// with A = f′f″ and B = f′f‴ + (f″)².
pub fn cotton_coeffs(alpha: &[BigRational], n: usize) -> Result<PrincipalCoeffs> {
    if n < 4 {
        return Err(Error::precondition("cotton coefficients need n ≥ 4"));
    }
    validate_alpha(alpha, n)?;
    for i in 0..n {
        for j in (i + 1)..n {
            if alpha[i] == alpha[j] {
                return Err(Error::precondition(
                    "cotton coefficients need pairwise-distinct alpha",
                ));
            }
        }
    }
    let nm1 = rat_int(n as i64 - 1);
    let total = sum(alpha);
    let pairs = sum_pairs(alpha);
    let mut a = vec![BigRational::zero(); n * n];
    let mut b = vec![BigRational::zero(); n * n * n];
    let mut a3 = vec![BigRational::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let others = total.clone() - alpha[i].clone() - alpha[j].clone();
            a[i * n + j] = rat_int(2)
                * alpha[j].clone()
                * (rat_int(-4) * alpha[i].clone() * alpha[j].clone()
                    - alpha[i].clone() * others.clone()
                    + rat_int(2) / nm1.clone()
                        * (alpha[j].clone() * (total.clone() - alpha[j].clone())
                            + pairs.clone()));
            for m in 0..n {
                let am2 = alpha[m].clone() * alpha[m].clone();
                let mut c = BigRational::zero();
                if m == i {
                    c -= alpha[i].clone() * alpha[i].clone() * alpha[j].clone();
                } else {
                    c -= alpha[i].clone() * am2.clone();
                }
                c += am2.clone() * (total.clone() - alpha[m].clone()) / nm1.clone();
                b[(i * n + j) * n + m] = rat_int(4) * alpha[j].clone() * c;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                a3[(i * n + j) * n + k] = rat_int(4)
                    * alpha[i].clone()
                    * alpha[j].clone()
                    * alpha[k].clone()
                    * (alpha[k].clone() - alpha[j].clone());
            }
        }
    }
    Ok(PrincipalCoeffs {
        family: CoeffFamily::Cotton,
        n,
        a,
        b,
        a3,
    })
}

/// The reference quadruple (1, 5/4, 3/2, 2) used throughout dimension four.
pub fn reference_alpha() -> Vec<BigRational> {
    vec![rat_int(1), rat(5, 4), rat(3, 2), rat_int(2)]
}

/// Variable names for the Bach principal polynomials.
pub fn bach_vars(n: usize) -> Arc<Vec<String>> {
    let mut v: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    v.extend(["A".to_string(), "B".to_string(), "C".to_string()]);
    Arc::new(v)
}

/// B̃_ij − B_ij = (λ²/r²) P_ij(ξ; A, B, C) with P returned here, exact, for
/// all (i, j). A = f′f″, B = f′f‴ + (f″)², C = f′f⁗ + 3f″f‴.
pub fn bach_delta_polys(alpha: &[BigRational]) -> Result<Vec<Poly>> {
    let n = 4usize;
    validate_alpha(alpha, n)?;
    let vars = bach_vars(n);
    let x: Vec<Poly> = (0..n).map(|i| Poly::var(&vars, i)).collect();
    let pa = Poly::var(&vars, n);
    let pb = Poly::var(&vars, n + 1);
    let pc = Poly::var(&vars, n + 2);
    let s1 = sum(alpha);
    let s2 = sum_sq(alpha);
    let s3: BigRational = alpha.iter().map(|a| a.clone() * a.clone() * a.clone()).sum();
    // quadratic forms Σ α^p x², as polynomials
    let form = |pows: &dyn Fn(&BigRational) -> BigRational| -> Poly {
        let mut p = Poly::zero(&vars);
        for m in 0..n {
            p = p.add(&x[m].mul(&x[m]).scale(&pows(&alpha[m])));
        }
        p
    };
    let q2 = form(&|a| a.clone() * a.clone());
    let q3 = form(&|a| a.clone() * a.clone() * a.clone());
    let q4 = form(&|a| a.clone() * a.clone() * a.clone() * a.clone());

    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let ai = alpha[i].clone();
            let aj = alpha[j].clone();
            let mut p = Poly::zero(&vars);
            if i == j {
                // f′f″ coefficient
                let ka = (ai.clone()
                    * (rat_int(8) * s2.clone()
                        + rat_int(4) * s1.clone() * (s1.clone() - ai.clone())
                        - rat_int(8) * ai.clone() * ai.clone())
                    - s1.clone() * (s2.clone() + s1.clone() * s1.clone())
                    + rat_int(2) * s3.clone())
                    * rat(2, 3);
                p = p.add(&pa.scale(&ka));
                // f′f‴ + (f″)² quadratic form
                let kb_inner = q4
                    .scale(&rat_int(4))
                    .add(&q3.scale(&(rat_int(14) * ai.clone() - rat_int(3) * s1.clone())))
                    .add(&q2.scale(
                        &(ai.clone() * (rat_int(7) * s1.clone() - rat_int(6) * ai.clone())
                            + s2.clone()
                            - rat_int(2) * s1.clone() * s1.clone()),
                    ));
                p = p.add(&kb_inner.mul(&pb).scale(&rat(4, 3)));
                // f′f⁗ + 3f″f‴ quartic form
                let kc_inner = q2.mul(
                    &q3.add(&q2.scale(&(rat_int(3) * ai.clone() - s1.clone()))),
                );
                p = p.add(&kc_inner.mul(&pc).scale(&rat(8, 3)));
            }
            // terms carrying x_i x_j (present on the diagonal as x_i²)
            let xij = x[i].mul(&x[j]);
            let kb2 = rat_int(2) * s2.clone() + s1.clone() * s1.clone()
                - rat_int(2)
                    * (ai.clone() * ai.clone()
                        + aj.clone() * aj.clone()
                        + rat_int(6) * ai.clone() * aj.clone())
                - (ai.clone() + aj.clone()) * s1.clone();
            p = p.add(
                &xij.mul(&pb)
                    .scale(&(rat(4, 3) * ai.clone() * aj.clone() * kb2)),
            );
            let kc2_inner = q3.scale(&rat_int(2)).sub(&q2.scale(
                &(rat_int(3) * ai.clone() + rat_int(3) * aj.clone() - s1.clone()),
            ));
            p = p.add(
                &xij.mul(&kc2_inner)
                    .mul(&pc)
                    .scale(&(rat(8, 3) * ai.clone() * aj.clone())),
            );
            out.push(p);
        }
    }
    Ok(out)
}
