//! Hodge star on 2-forms in dimension four and the Weyl splitting.
//!
//! The 2-form basis order is fixed once: (12, 13, 14, 23, 24, 34) in
//! 1-based labels. Orientation +1 means the coordinate frame is positively
//! oriented; the flat star with orientation +1 maps e1∧e2 ↦ e3∧e4,
//! e1∧e3 ↦ −e2∧e4, e1∧e4 ↦ e2∧e3. Splitting projects with the star acting
//! on the first index pair; minus is defined as W − plus so the pair
//! reconstructs the input to a rounding error.

use crate::curvature::Weyl4;
use crate::error::{Error, Result};
use crate::jets::{cholesky, MetricJet};

/// Index pairs (0-based) of the fixed 2-form basis.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pair_index(i: usize, j: usize) -> usize {
    PAIRS
        .iter()
        .position(|&(a, b)| (a, b) == (i, j))
        .expect("ordered pair")
}

/// Permutation sign of (a, b, c, d) over {0,1,2,3}; 0 if repeated.
fn eps4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    let mut v = p;
    for i in 0..4 {
        while v[i] != i {
            let t = v[i];
            v.swap(i, t);
            sign = -sign;
        }
    }
    sign
}

/// The star on 2-forms as a 6×6 matrix over the fixed basis.
#[derive(Clone, Debug)]
pub struct StarOperator {
    orientation: i8,
    m: [f64; 36],
}

impl StarOperator {
    pub fn orientation(&self) -> i8 {
        self.orientation
    }
    pub fn matrix(&self) -> &[f64; 36] {
        &self.m
    }
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.m[a * 6 + b]
    }

    /// Apply to a 2-form given by its six independent components.
    pub fn apply(&self, omega: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for a in 0..6 {
            for b in 0..6 {
                out[a] += self.m[a * 6 + b] * omega[b];
            }
        }
        out
    }
}

/// (⋆ω)_kl = √det(g) ε_klab Σ_{p<q} (g^{ap} g^{bq} − g^{aq} g^{bp}) ω_pq.
pub fn hodge_star(mj: &MetricJet, orientation: i8) -> Result<StarOperator> {
    if mj.n() != 4 {
        return Err(Error::domain("Hodge star on 2-forms needs n = 4"));
    }
    if orientation != 1 && orientation != -1 {
        return Err(Error::domain("orientation must be ±1"));
    }
    let g = mj.g();
    let ginv = mj.ginv();
    let n = 4;
    let chol = cholesky(&g, n).ok_or_else(|| Error::geometry("metric not positive definite"))?;
    let mut det_sqrt = 1.0;
    for i in 0..n {
        det_sqrt *= chol[i * n + i];
    }
    let vol = det_sqrt * orientation as f64;
    let mut m = [0.0; 36];
    for (ai, &(k, l)) in PAIRS.iter().enumerate() {
        for (bi, &(p, q)) in PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for (a, b) in PAIRS {
                acc += eps4(k, l, a, b)
                    * (ginv[a * n + p] * ginv[b * n + q] - ginv[a * n + q] * ginv[b * n + p]);
            }
            m[ai * 6 + bi] = vol * acc;
        }
    }
    Ok(StarOperator { orientation, m })
}

/// Self-dual and anti-self-dual parts; `plus + minus` is the input exactly.
#[derive(Clone, Debug)]
pub struct WeylPair {
    pub plus: Weyl4,
    pub minus: Weyl4,
}

/// Read the six-by-six matrix of a (0,4) tensor over the pair basis.
pub(crate) fn to_pair_matrix(w: &Weyl4) -> [f64; 36] {
    let mut out = [0.0; 36];
    for (ai, &(i, j)) in PAIRS.iter().enumerate() {
        for (bi, &(k, l)) in PAIRS.iter().enumerate() {
            out[ai * 6 + bi] = w.get(i, j, k, l);
        }
    }
    out
}

/// Extend a pair-basis matrix back to a (0,4) tensor, antisymmetric in both
/// pairs.
pub(crate) fn from_pair_matrix(m: &[f64; 36]) -> Weyl4 {
    let n = 4;
    let mut v = vec![0.0; n * n * n * n];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    for (ai, &(i, j)) in PAIRS.iter().enumerate() {
        for (bi, &(k, l)) in PAIRS.iter().enumerate() {
            let val = m[ai * 6 + bi];
            v[idx(i, j, k, l)] = val;
            v[idx(j, i, k, l)] = -val;
            v[idx(i, j, l, k)] = -val;
            v[idx(j, i, l, k)] = val;
        }
    }
    Weyl4::new(n, v)
}

/// Project onto the ±1 eigenspaces of the star acting on the first pair.
pub fn split_weyl(w: &Weyl4, mj: &MetricJet, orientation: i8) -> Result<WeylPair> {
    if w.n() != 4 {
        return Err(Error::domain("Weyl splitting needs n = 4"));
    }
    let star = hodge_star(mj, orientation)?;
    let w6 = to_pair_matrix(w);
    let mut plus6 = [0.0; 36];
    for a in 0..6 {
        for b in 0..6 {
            let mut acc = w6[a * 6 + b];
            for c in 0..6 {
                acc += star.get(a, c) * w6[c * 6 + b];
            }
            plus6[a * 6 + b] = 0.5 * acc;
        }
    }
    let plus = from_pair_matrix(&plus6);
    let mut minus_v = w.components().to_vec();
    for (m, p) in minus_v.iter_mut().zip(plus.components()) {
        *m -= p;
    }
    Ok(WeylPair {
        plus,
        minus: Weyl4::new(4, minus_v),
    })
}

/// W⁺ + t·W⁻; t = 1 recovers W, t = 0 the self-dual part.
pub fn mixed_weyl(pair: &WeylPair, t: f64) -> Weyl4 {
    let mut v = pair.plus.components().to_vec();
    for (m, p) in v.iter_mut().zip(pair.minus.components()) {
        *m += t * p;
    }
    Weyl4::new(4, v)
}

/// For the component identity W±_ijik = ½(W_ijik ± W_jijl): the complement
/// pair of (i,k), the spectator index l, and the sign in front of W_jijl,
/// resolved by the fixed basis convention at g = δ with the given
/// orientation.
pub fn wijik_sign(i: usize, j: usize, k: usize, orientation: i8) -> (usize, f64) {
    assert!(i != j && j != k && i != k && i < 4 && j < 4 && k < 4);
    let l = (0..4).find(|&v| v != i && v != j && v != k).unwrap();
    // star image of the ordered pair (i,k) at the flat metric
    let (a, b, s_ik) = if i < k { (i, k, 1.0) } else { (k, i, -1.0) };
    let (ap, bp) = PAIRS[5 - pair_index(a, b)]; // complement pair in the fixed order
    let s_star = eps4(a, b, ap, bp) * orientation as f64;
    // (⋆W)_{ij,(ik)} = s_ik s_star W_{ij,(ap,bp)} with {ap,bp} = {j,l};
    // bring W_{ij,(ap,bp)} to the pattern W_{jijl}
    let s_rearrange = if ap == j {
        // W_{ij,jl} = −W_{jijl}
        -1.0
    } else {
        // W_{ij,lj} = +W_{jijl}
        1.0
    };
    (l, s_ik * s_star * s_rearrange)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{perturbed_flat_field, unit_sphere_field};
    use crate::curvature::{ricci_scalar, riemann, tensor_norm_sq, weyl, CurvatureBundle};
    use crate::jets::{eval_metric_jet, ChartPoint, MetricField, ScalarField};

    fn flat_star() -> StarOperator {
        let mj = eval_metric_jet(&MetricField::flat(4), &ChartPoint::origin(4), 1).unwrap();
        hodge_star(&mj, 1).unwrap()
    }

    #[test]
    fn flat_star_pattern() {
        let star = flat_star();
        // e12 ↦ e34, e13 ↦ −e24, e14 ↦ e23, and mirrored
        let expect = [
            (0, 5, 1.0),
            (1, 4, -1.0),
            (2, 3, 1.0),
            (3, 2, 1.0),
            (4, 1, -1.0),
            (5, 0, 1.0),
        ];
        for a in 0..6 {
            for b in 0..6 {
                let want = expect
                    .iter()
                    .find(|&&(x, y, _)| (x, y) == (a, b))
                    .map(|&(_, _, v)| v)
                    .unwrap_or(0.0);
                assert!(
                    (star.get(a, b) - want).abs() < 1e-14,
                    "star[{a}][{b}] = {}",
                    star.get(a, b)
                );
            }
        }
        let mj = eval_metric_jet(&MetricField::flat(4), &ChartPoint::origin(4), 1).unwrap();
        let rev = hodge_star(&mj, -1).unwrap();
        for a in 0..36 {
            assert_eq!(rev.matrix()[a], -star.matrix()[a]);
        }
    }

    #[test]
    fn star_squares_to_identity_and_is_conformally_invariant() {
        let u = ScalarField::polynomial(
            4,
            vec![(0.3, vec![1, 0, 0, 0]), (-0.2, vec![0, 1, 0, 1])],
        );
        let conf = MetricField::conformally_flat(&u);
        let p = ChartPoint::new(vec![0.2, -0.3, 0.5, 0.1]).unwrap();
        let mj = eval_metric_jet(&conf, &p, 1).unwrap();
        let star = hodge_star(&mj, 1).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let mut acc = 0.0;
                for c in 0..6 {
                    acc += star.get(a, c) * star.get(c, b);
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-10, "star² at ({a},{b}): {acc}");
            }
        }
        // conformal invariance on 2-forms
        let flat = flat_star();
        for a in 0..36 {
            assert!((star.matrix()[a] - flat.matrix()[a]).abs() < 1e-10);
        }
        // curved metric: still an involution
        let g = perturbed_flat_field(4, 1e-2, 3);
        let mjc = eval_metric_jet(&g, &p, 1).unwrap();
        let sc = hodge_star(&mjc, 1).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let mut acc = 0.0;
                for c in 0..6 {
                    acc += sc.get(a, c) * sc.get(c, b);
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn star_rejects_other_dimensions() {
        let mj = eval_metric_jet(&MetricField::flat(5), &ChartPoint::origin(5), 1).unwrap();
        assert!(hodge_star(&mj, 1).is_err());
    }

    fn weyl_of(field: &MetricField, p: &ChartPoint) -> (Weyl4, crate::jets::MetricJet) {
        let mj = eval_metric_jet(field, p, 2).unwrap();
        let rm = riemann(&mj).unwrap();
        let (ric, scal) = ricci_scalar(&rm, &mj);
        (weyl(&rm, &ric, scal, &mj), mj)
    }

    #[test]
    fn split_properties_on_random_weyl() {
        let g = perturbed_flat_field(4, 1e-2, 5);
        for (k, coords) in [
            vec![0.1, 0.2, -0.15, 0.05],
            vec![-0.2, 0.1, 0.3, -0.1],
            vec![0.25, -0.05, 0.1, 0.2],
        ]
        .into_iter()
        .enumerate()
        {
            let p = ChartPoint::new(coords).unwrap();
            let (w, mj) = weyl_of(&g, &p);
            let pair = split_weyl(&w, &mj, 1).unwrap();
            let wsq = tensor_norm_sq(&w, &mj);
            // reconstruction to rounding
            let ulp = 4.0 * f64::EPSILON * w.max_abs().max(1e-300);
            for ((a, b), c) in pair
                .plus
                .components()
                .iter()
                .zip(pair.minus.components())
                .zip(w.components())
            {
                assert!((a + b - *c).abs() <= ulp, "reconstruction at sample {k}");
            }
            // star eigenvalue action on each part
            let star = hodge_star(&mj, 1).unwrap();
            let p6 = to_pair_matrix(&pair.plus);
            let m6 = to_pair_matrix(&pair.minus);
            for a in 0..6 {
                for b in 0..6 {
                    let mut sp = 0.0;
                    let mut sm = 0.0;
                    for c in 0..6 {
                        sp += star.get(a, c) * p6[c * 6 + b];
                        sm += star.get(a, c) * m6[c * 6 + b];
                    }
                    assert!((sp - p6[a * 6 + b]).abs() <= 1e-9 * wsq.sqrt().max(1e-20));
                    assert!((sm + m6[a * 6 + b]).abs() <= 1e-9 * wsq.sqrt().max(1e-20));
                }
            }
            // each part stays totally trace-free
            let ginv = mj.ginv();
            for a in 0..4 {
                for b in 0..4 {
                    let mut tp = 0.0;
                    let mut tm = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            tp += ginv[i * 4 + j] * pair.plus.get(i, a, j, b);
                            tm += ginv[i * 4 + j] * pair.minus.get(i, a, j, b);
                        }
                    }
                    let scale = w.max_abs().max(1e-20);
                    assert!(tp.abs() <= 1e-9 * scale, "plus trace at ({a},{b})");
                    assert!(tm.abs() <= 1e-9 * scale, "minus trace at ({a},{b})");
                }
            }
            // orthogonality and Pythagoras
            let np = tensor_norm_sq(&pair.plus, &mj);
            let nm = tensor_norm_sq(&pair.minus, &mj);
            assert!((np + nm - wsq).abs() <= 1e-9 * wsq.max(1e-20));
            // ⟨W⁺, W⁻⟩ via polarization: |W|² − |W⁺|² − |W⁻|² = 2⟨W⁺,W⁻⟩
            let inner = 0.5 * (wsq - np - nm);
            assert!(inner.abs() <= 1e-9 * wsq.max(1e-20));
            // idempotence
            let again = split_weyl(&pair.plus, &mj, 1).unwrap();
            let scale = pair.plus.max_abs().max(1e-20);
            for (a, b) in again.plus.components().iter().zip(pair.plus.components()) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
            assert!(again.minus.max_abs() <= 1e-10 * scale);
            // orientation flip swaps the parts
            let flipped = split_weyl(&w, &mj, -1).unwrap();
            for (a, b) in flipped.plus.components().iter().zip(pair.minus.components()) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn split_zero_and_sphere() {
        let g = unit_sphere_field(4);
        let p = ChartPoint::new(vec![0.3, 0.1, -0.2, 0.4]).unwrap();
        let (w, mj) = weyl_of(&g, &p);
        assert!(w.max_abs() < 1e-9);
        let pair = split_weyl(&w, &mj, 1).unwrap();
        assert!(pair.plus.max_abs() < 1e-9);
        assert!(pair.minus.max_abs() < 1e-9);
    }

    #[test]
    fn mixed_weyl_endpoints_and_t_minus_one() {
        let g = perturbed_flat_field(4, 1e-2, 9);
        let p = ChartPoint::new(vec![0.12, -0.2, 0.18, 0.07]).unwrap();
        let (w, mj) = weyl_of(&g, &p);
        let pair = split_weyl(&w, &mj, 1).unwrap();
        let m1 = mixed_weyl(&pair, 1.0);
        let ulp = 4.0 * f64::EPSILON * w.max_abs().max(1e-300);
        for (a, b) in m1.components().iter().zip(w.components()) {
            assert!((a - b).abs() <= ulp);
        }
        let m0 = mixed_weyl(&pair, 0.0);
        for (a, b) in m0.components().iter().zip(pair.plus.components()) {
            assert_eq!(a, b);
        }
        // t = −1 gives ⋆W on the first pair; brute-force comparison
        let mdiff = mixed_weyl(&pair, -1.0);
        let star = hodge_star(&mj, 1).unwrap();
        let w6 = to_pair_matrix(&w);
        let scale = w.max_abs().max(1e-20);
        for a in 0..6 {
            for b in 0..6 {
                let mut sw = 0.0;
                for c in 0..6 {
                    sw += star.get(a, c) * w6[c * 6 + b];
                }
                let (i, j) = PAIRS[a];
                let (k, l) = PAIRS[b];
                assert!(
                    (mdiff.get(i, j, k, l) - sw).abs() <= 1e-9 * scale,
                    "⋆W mismatch at {a},{b}"
                );
            }
        }
    }

    #[test]
    fn mixed_identities_at_flat_center() {
        // At g = δ: (W⁺−W⁻)_ijij = W_iji'j' with (i'j') the complement pair.
        let g = perturbed_flat_field(4, 1e-2, 13);
        let p = ChartPoint::origin(4);
        let (w, mj) = weyl_of(&g, &p);
        let pair = split_weyl(&w, &mj, 1).unwrap();
        let d = mixed_weyl(&pair, -1.0);
        let scale = w.max_abs().max(1e-20);
        for (a, &(i, j)) in PAIRS.iter().enumerate() {
            let (ip, jp) = PAIRS[5 - a];
            let sign = eps4(i, j, ip, jp);
            assert!(
                (d.get(i, j, i, j) - sign * w.get(i, j, ip, jp)).abs() <= 1e-9 * scale,
                "identity ijij at pair {a}"
            );
            // (W⁺−W⁻)_ijkl = ±W_ijij with (k,l) the complement of (i,j)
            assert!(
                (d.get(i, j, ip, jp) - sign * w.get(i, j, i, j)).abs() <= 1e-9 * scale,
                "identity ijkl at pair {a}"
            );
        }
    }

    #[test]
    fn wijik_sign_table_matches_brute_force() {
        let g = perturbed_flat_field(4, 1e-2, 21);
        let p = ChartPoint::origin(4);
        let (w, mj) = weyl_of(&g, &p);
        let pair = split_weyl(&w, &mj, 1).unwrap();
        let scale = w.max_abs().max(1e-20);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let (l, sign) = wijik_sign(i, j, k, 1);
                    let lhs = pair.plus.get(i, j, i, k);
                    let rhs = 0.5 * (w.get(i, j, i, k) + sign * w.get(j, i, j, l));
                    assert!(
                        (lhs - rhs).abs() <= 1e-9 * scale,
                        "sign table at ({i},{j},{k}): {lhs} vs {rhs}"
                    );
                }
            }
        }
        // the three rows used by the self-dual obstruction system (1-based
        // (1,2,3), (1,2,4), (1,3,4)) carry signs +, −, +
        assert_eq!(wijik_sign(0, 1, 2, 1).1, 1.0);
        assert_eq!(wijik_sign(0, 1, 3, 1).1, -1.0);
        assert_eq!(wijik_sign(0, 2, 3, 1).1, 1.0);
    }

    #[test]
    fn splitting_einstein_product_sphere_has_selfdual_piece() {
        // S²×S² has W ≠ 0; both halves carry it
        let g = crate::catalog::product_sphere_field();
        let p = ChartPoint::origin(4);
        let b = CurvatureBundle::compute(&g, &p, 2).unwrap();
        let mj = eval_metric_jet(&g, &p, 2).unwrap();
        let pair = split_weyl(&b.weyl, &mj, 1).unwrap();
        assert!(tensor_norm_sq(&pair.plus, &mj) > 1e-3);
        assert!(tensor_norm_sq(&pair.minus, &mj) > 1e-3);
    }
}
