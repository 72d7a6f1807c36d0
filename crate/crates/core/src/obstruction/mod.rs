//! Infeasibility certificates for the polynomial obstruction systems.
//!
//! Three certifier strategies cover the case analyses:
//!  - exact sign-pattern enumeration (the product argument for the
//!    self-dual system: some equation has all terms of one strict sign
//!    under every sign assignment of the nonzero variables);
//!  - exact 2×2 minors for the single-nonzero-coordinate subcase;
//!  - interval branch-and-bound over the normalized shell, with the whole
//!    subdivision tree stored for replay.
//!
//! Budgets are hard: exhausting one yields `Inconclusive`, a first-class
//! outcome distinct from both verdicts.

pub mod interval;

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::aubin::coeffs::{bach_delta_polys, weyl_coeffs};
use crate::duality::wijik_sign;
use crate::error::{Error, Result};
use crate::poly::Poly;

use interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamSign {
    Negative,
    Positive,
    Free,
}

/// A polynomial system with exact rational coefficients, its parameter
/// sign constraints, and the strategy its certifier uses.
pub struct PolySystem {
    pub name: String,
    /// Over the x variables followed by the parameters.
    pub equations: Vec<Poly>,
    pub x_count: usize,
    pub params: Vec<(String, ParamSign)>,
    pub strategy: Strategy,
}

pub enum Strategy {
    /// All x variables are declared nonzero; enumerate their signs.
    SignPattern,
    /// Interval branch-and-bound over a normalized search region.
    BranchBound(SearchSpec),
    /// Exact 2×2 minor argument for two-parameter linear systems.
    ExactMinors(MinorsSpec),
}

/// Search region for branch-and-bound, possibly rewritten in squared
/// variables u = x².
pub struct SearchSpec {
    pub var_names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub equations: Vec<Poly>,
    /// (indices, lower bound): the region requires max over the indices of
    /// the variable value to reach the bound (the sup-norm shell; the rest
    /// of the box is outside the normalized region).
    pub shell: Option<(Vec<usize>, f64)>,
    /// Per-branch pinned variables realizing the parameter normalization.
    pub branches: Vec<Vec<(usize, f64)>>,
    /// The full system over all variables, for random spot checks and for
    /// midpoint probes when the search equations are a derived encoding
    /// (such as rank minors) rather than the system itself.
    pub probe: Option<ProbeSpec>,
}

/// The original system over coordinates and parameters.
pub struct ProbeSpec {
    pub var_names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub equations: Vec<Poly>,
    pub shell: Option<(Vec<usize>, f64)>,
    pub branches: Vec<Vec<(usize, f64)>>,
}

/// Rows (a_j, c_j) of the single-coordinate subcase: a_j F₁ + c_j u F₂ = 0
/// with F₁ > 0, F₂ < 0, u > 0.
pub struct MinorsSpec {
    pub row_labels: Vec<String>,
    pub rows: Vec<(BigRational, BigRational)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum CertNode {
    /// Split the current box along dimension `d`; the low child subtree
    /// precedes the high child subtree in preorder.
    Split { d: u8 },
    /// Interval evaluation of equation `e` excludes zero on this box.
    Eq { e: u16 },
    /// The box lies outside the normalized region.
    Out,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertBranch {
    pub pinned: Vec<(usize, f64)>,
    pub tree: Vec<CertNode>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SignPatternEntry {
    /// Signs of the nonzero variables, +1/−1.
    pub pattern: Vec<i8>,
    /// Index of the equation whose terms all share one strict sign.
    pub equation: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub system: String,
    pub method: String,
    pub region: String,
    /// Positive lower bound on the excluded-equation margin over all
    /// branch-and-bound leaves; exact methods carry no residual.
    pub residual_lower_bound: Option<f64>,
    pub subdivisions: u64,
    pub branches: Option<Vec<CertBranch>>,
    pub sign_patterns: Option<Vec<SignPatternEntry>>,
    /// Nonzero 2×2 minors, as exact rational strings.
    pub minors: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug)]
pub enum CertOutcome {
    Infeasible(InfeasibilityCertificate),
    Counterexample { point: Vec<f64>, residual: f64 },
    Inconclusive { processed: u64, budget: u64 },
}

impl CertOutcome {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, CertOutcome::Infeasible(_))
    }
}

// ---------------------------------------------------------------------------
// system builders
// ---------------------------------------------------------------------------

fn x_vars(n: usize) -> Arc<Vec<String>> {
    Arc::new((1..=n).map(|i| format!("x{i}")).collect())
}

/// The three self-dual off-diagonal equations
/// a_ijk ξ_j ξ_k ± a_jil ξ_i ξ_l = 0 for (i,j,k) = (1,2,3), (1,2,4), (1,3,4),
/// with the signs fixed by the 2-form basis convention.
pub fn wplus_system(alpha: &[BigRational]) -> Result<PolySystem> {
    let coeffs = weyl_coeffs(alpha, 4)?;
    if coeffs.any_a3_zero() {
        return Err(Error::precondition(
            "self-dual system needs all a_ijk nonzero",
        ));
    }
    let vars = x_vars(4);
    let x: Vec<Poly> = (0..4).map(|i| Poly::var(&vars, i)).collect();
    let mut equations = Vec::new();
    for (i, j, k) in [(0usize, 1usize, 2usize), (0, 1, 3), (0, 2, 3)] {
        let (l, sign) = wijik_sign(i, j, k, 1);
        let srat = BigRational::from_integer((sign as i64).into());
        let eq = x[j]
            .mul(&x[k])
            .scale(coeffs.a3(i, j, k))
            .add(&x[i].mul(&x[l]).scale(&(coeffs.a3(j, i, l).clone() * srat)));
        equations.push(eq);
    }
    Ok(PolySystem {
        name: "wplus".into(),
        equations,
        x_count: 4,
        params: Vec::new(),
        strategy: Strategy::SignPattern,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BachParamMode {
    /// A < 0, B > 0, C < 0, the signs the bump profile provides.
    SignConstrained,
    /// A, B, C free nonzero reals (the appendix variant).
    FreeNonzero,
}

/// The ten homogeneous equations B̃_ij = 0 (B_ij ≡ 0) of the Bach system,
/// with r normalized to 1, plus the branch-and-bound search encoding in
/// squared variables.
pub fn bach_system(alpha: &[BigRational], mode: BachParamMode) -> Result<PolySystem> {
    let polys = bach_delta_polys(alpha)?;
    let mut equations = Vec::new();
    let mut labels = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            equations.push(polys[i * 4 + j].clone());
            labels.push((i, j));
        }
    }
    // search encoding over u_m = x_m²: off-diagonal rows are multiplied by
    // x_i x_j once more, which preserves the real zero set
    let uvars: Arc<Vec<String>> = Arc::new(
        (1..=4)
            .map(|i| format!("u{i}"))
            .chain(["A".into(), "B".into(), "C".into()])
            .collect(),
    );
    let mut ueqs = Vec::new();
    for (eq, &(i, j)) in equations.iter().zip(&labels) {
        let mut out = Poly::zero(&uvars);
        for (e, c) in eq.terms() {
            let mut e2: Vec<u8> = e.clone();
            if i != j {
                e2[i] += 1;
                e2[j] += 1;
            }
            let mut eu = vec![0u8; 7];
            for m in 0..4 {
                assert!(e2[m] % 2 == 0, "non-even exponent in bach system");
                eu[m] = e2[m] / 2;
            }
            eu[4..7].copy_from_slice(&e2[4..7]);
            let mono = monomial(&uvars, &eu, c.clone());
            out = out.add(&mono);
        }
        ueqs.push(out);
    }
    // the system is linear and homogeneous in (A, B, C): a nonzero
    // parameter vector exists at u only if the 10×3 coefficient matrix
    // M(u) drops rank, so the search reduces to the four u variables with
    // the 3×3 minors of M(u) as exclusion equations
    let u4: Arc<Vec<String>> = Arc::new((1..=4).map(|i| format!("u{i}")).collect());
    let mut rows: Vec<[Poly; 3]> = Vec::new();
    for eq in &ueqs {
        let mut row = [Poly::zero(&u4), Poly::zero(&u4), Poly::zero(&u4)];
        for (e, c) in eq.terms() {
            let pidx = (4..7).find(|&k| e[k] == 1).expect("degree-1 parameter term");
            debug_assert!(e[4..7].iter().sum::<u8>() == 1);
            let mono = monomial(&u4, &e[0..4].to_vec(), c.clone());
            row[pidx - 4] = row[pidx - 4].add(&mono);
        }
        rows.push(row);
    }
    let mut minors = Vec::new();
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            for c in (b + 1)..rows.len() {
                let (ra, rb, rc) = (&rows[a], &rows[b], &rows[c]);
                let det = ra[0]
                    .mul(&rb[1].mul(&rc[2]).sub(&rb[2].mul(&rc[1])))
                    .sub(&ra[1].mul(&rb[0].mul(&rc[2]).sub(&rb[2].mul(&rc[0]))))
                    .add(&ra[2].mul(&rb[0].mul(&rc[1]).sub(&rb[1].mul(&rc[0]))));
                if !det.is_zero() {
                    minors.push(det);
                }
            }
        }
    }
    let (probe_bounds, probe_branches, params) = match mode {
        BachParamMode::SignConstrained => (
            vec![
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (-1.0, 0.0),
            ],
            vec![vec![(4, -1.0)], vec![(5, 1.0)], vec![(6, -1.0)]],
            vec![
                ("A".to_string(), ParamSign::Negative),
                ("B".to_string(), ParamSign::Positive),
                ("C".to_string(), ParamSign::Negative),
            ],
        ),
        BachParamMode::FreeNonzero => (
            vec![
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
            ],
            vec![
                vec![(4, -1.0)],
                vec![(4, 1.0)],
                vec![(5, -1.0)],
                vec![(5, 1.0)],
                vec![(6, -1.0)],
                vec![(6, 1.0)],
            ],
            vec![
                ("A".to_string(), ParamSign::Free),
                ("B".to_string(), ParamSign::Free),
                ("C".to_string(), ParamSign::Free),
            ],
        ),
    };
    Ok(PolySystem {
        name: match mode {
            BachParamMode::SignConstrained => "bach".into(),
            BachParamMode::FreeNonzero => "bach-free".into(),
        },
        equations,
        x_count: 4,
        params,
        strategy: Strategy::BranchBound(SearchSpec {
            var_names: u4.as_ref().clone(),
            bounds: vec![(0.0, 1.0); 4],
            equations: minors,
            shell: Some((vec![0, 1, 2, 3], 0.25)),
            branches: vec![vec![]],
            probe: Some(ProbeSpec {
                var_names: uvars.as_ref().clone(),
                bounds: probe_bounds,
                equations: ueqs,
                shell: Some((vec![0, 1, 2, 3], 0.25)),
                branches: probe_branches,
            }),
        }),
    })
}

fn monomial(vars: &Arc<Vec<String>>, exps: &[u8], coef: BigRational) -> Poly {
    let mut p = Poly::constant(vars, coef);
    for (idx, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            p = p.mul(&Poly::var(vars, idx));
        }
    }
    p
}

/// The Weyl single-nonzero-coordinate subcase at coordinate `i`:
/// a_ij (f′)² + c_ij u f′f″ = 0 for all j ≠ i, u = ξ_i² > 0, where c_ij is
/// the ξ_i² coefficient of b_ij.
pub fn weyl_single_coordinate_system(
    alpha: &[BigRational],
    n: usize,
    i: usize,
) -> Result<PolySystem> {
    let coeffs = weyl_coeffs(alpha, n)?;
    if i >= n {
        return Err(Error::precondition("coordinate index out of range"));
    }
    let vars: Arc<Vec<String>> = Arc::new(vec!["u".into(), "F1".into(), "F2".into()]);
    let u = Poly::var(&vars, 0);
    let f1 = Poly::var(&vars, 1);
    let f2 = Poly::var(&vars, 2);
    let mut equations = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for j in 0..n {
        if j == i {
            continue;
        }
        let a = coeffs.a(i, j).clone();
        let c = coeffs.b_coeff(i, j, i).clone();
        equations.push(f1.scale(&a).add(&u.mul(&f2).scale(&c)));
        rows.push((a, c));
        labels.push(format!("j={}", j + 1));
    }
    Ok(PolySystem {
        name: format!("weyl-single-x{}", i + 1),
        equations,
        x_count: 1,
        params: vec![
            ("F1".into(), ParamSign::Positive),
            ("F2".into(), ParamSign::Negative),
        ],
        strategy: Strategy::ExactMinors(MinorsSpec {
            row_labels: labels,
            rows,
        }),
    })
}

// ---------------------------------------------------------------------------
// certifier
// ---------------------------------------------------------------------------

/// Substitute a point (x variables then parameters) into every equation and
/// return the largest violation.
pub fn eval_max_violation(sys: &PolySystem, point: &[f64]) -> f64 {
    sys.equations
        .iter()
        .map(|e| e.eval_f64(point).abs())
        .fold(0.0, f64::max)
}

pub fn certify_no_nonzero_solution(sys: &PolySystem, budget: u64) -> Result<CertOutcome> {
    match &sys.strategy {
        Strategy::SignPattern => certify_sign_pattern(sys),
        Strategy::ExactMinors(spec) => certify_minors(sys, spec),
        Strategy::BranchBound(spec) => certify_branch_bound(sys, spec, budget),
    }
}

/// Sign of a polynomial term under a sign assignment; None when some term
/// could vanish (never happens with all variables declared nonzero).
fn term_sign(exps: &[u8], coef: &BigRational, pattern: &[i8]) -> i8 {
    let mut s: i8 = if coef.is_negative() { -1 } else { 1 };
    for (e, p) in exps.iter().zip(pattern) {
        if e % 2 == 1 && *p < 0 {
            s = -s;
        }
    }
    s
}

fn certify_sign_pattern(sys: &PolySystem) -> Result<CertOutcome> {
    let n = sys.x_count;
    if !sys.params.is_empty() {
        return Err(Error::precondition(
            "sign-pattern certification requires a parameter-free system",
        ));
    }
    let mut entries = Vec::new();
    for bits in 0..(1u32 << n) {
        let pattern: Vec<i8> = (0..n)
            .map(|v| if bits >> v & 1 == 1 { -1 } else { 1 })
            .collect();
        let mut excluding = None;
        'eqs: for (idx, eq) in sys.equations.iter().enumerate() {
            let mut sign = 0i8;
            for (e, c) in eq.terms() {
                let s = term_sign(e, c, &pattern);
                if sign == 0 {
                    sign = s;
                } else if s != sign {
                    continue 'eqs;
                }
            }
            if sign != 0 {
                excluding = Some(idx);
                break;
            }
        }
        match excluding {
            Some(idx) => entries.push(SignPatternEntry {
                pattern,
                equation: idx,
            }),
            None => {
                return Ok(CertOutcome::Inconclusive {
                    processed: bits as u64 + 1,
                    budget: 1 << n,
                })
            }
        }
    }
    Ok(CertOutcome::Infeasible(InfeasibilityCertificate {
        system: sys.name.clone(),
        method: "sign-product".into(),
        region: format!("all {} coordinates nonzero, any magnitudes", n),
        residual_lower_bound: None,
        subdivisions: 1 << n,
        branches: None,
        sign_patterns: Some(entries),
        minors: None,
    }))
}

fn certify_minors(sys: &PolySystem, spec: &MinorsSpec) -> Result<CertOutcome> {
    // a single row a F₁ + c u F₂ = 0 with F₁ > 0, u F₂ < 0 already fails
    // when a and −c share a sign (both terms then carry one strict sign);
    // this is the f′/f″ < 0 contradiction of the case analysis
    let mut evidence = Vec::new();
    for (label, (a, c)) in spec.row_labels.iter().zip(&spec.rows) {
        if !a.is_zero() && !c.is_zero() && (a.clone() * c.clone()).is_negative() {
            evidence.push((
                format!("row {label}: terms share one sign"),
                format!("a = {a}, c = {c}"),
            ));
        }
    }
    if evidence.is_empty() {
        // otherwise two rows with a nonzero 2×2 minor force F₁ = u F₂ = 0
        for a in 0..spec.rows.len() {
            for b in (a + 1)..spec.rows.len() {
                let m = spec.rows[a].0.clone() * spec.rows[b].1.clone()
                    - spec.rows[b].0.clone() * spec.rows[a].1.clone();
                if !m.is_zero() {
                    evidence.push((
                        format!("minor ({}, {})", spec.row_labels[a], spec.row_labels[b]),
                        m.to_string(),
                    ));
                }
            }
        }
        if evidence.is_empty() {
            return Ok(CertOutcome::Inconclusive {
                processed: (spec.rows.len() * (spec.rows.len() + 1) / 2) as u64,
                budget: 0,
            });
        }
    }
    Ok(CertOutcome::Infeasible(InfeasibilityCertificate {
        system: sys.name.clone(),
        method: "sign-product".into(),
        region: "one nonzero coordinate, F1 > 0, F2 < 0".into(),
        residual_lower_bound: None,
        subdivisions: evidence.len() as u64,
        branches: None,
        sign_patterns: None,
        minors: Some(evidence),
    }))
}

/// Interval term list of one polynomial plus its gradient term lists, for
/// mean-value-form evaluation.
struct CompiledEq {
    terms: Vec<(Interval, Vec<u8>)>,
    grads: Vec<Vec<(Interval, Vec<u8>)>>,
}

fn compile_eq(p: &Poly, nvars: usize) -> CompiledEq {
    let to_terms = |q: &Poly| -> Vec<(Interval, Vec<u8>)> {
        q.terms()
            .map(|(e, c)| (Interval::from_rational(c), e.clone()))
            .collect()
    };
    let mut grads = Vec::with_capacity(nvars);
    for v in 0..nvars {
        let mut dp_terms = Vec::new();
        for (e, c) in p.terms() {
            if e[v] > 0 {
                let mut e2 = e.clone();
                e2[v] -= 1;
                let coef = c.clone() * BigRational::from_integer((e[v] as i64).into());
                dp_terms.push((Interval::from_rational(&coef), e2));
            }
        }
        grads.push(dp_terms);
    }
    CompiledEq {
        terms: to_terms(p),
        grads,
    }
}

struct BbCtx<'a> {
    eqs: &'a [CompiledEq],
    shell: &'a Option<(Vec<usize>, f64)>,
    budget: &'a AtomicI64,
    eq_polys: &'a [Poly],
    /// When the exclusion equations are a derived encoding, a vanishing
    /// midpoint is not a counterexample of the original system.
    derived_encoding: bool,
}

enum BbResult {
    Done {
        tree: Vec<CertNode>,
        nodes: u64,
        min_margin: f64,
    },
    Budget,
    Feasible(Vec<f64>, f64),
}

fn eval_eq_interval(terms: &[(Interval, Vec<u8>)], boxv: &[Interval]) -> Interval {
    let mut acc = Interval::point(0.0);
    for (coef, exps) in terms {
        let mut t = *coef;
        for (idx, &e) in exps.iter().enumerate() {
            if e > 0 {
                t = t.mul(&boxv[idx].pow(e as u32));
            }
        }
        acc = acc.add(&t);
    }
    acc
}

/// Intersection of the plain enclosure with the mean-value form
/// f(mid) + Σ ∂f(box)·(box − mid); both are sound, so the intersection is.
/// Also accumulates the per-dimension impact |∂f|·width used to pick the
/// split direction.
fn eval_eq_tight(eq: &CompiledEq, boxv: &[Interval], mid: &[Interval], impact: &mut [f64]) -> Interval {
    let plain = eval_eq_interval(&eq.terms, boxv);
    if !plain.contains_zero() {
        return plain;
    }
    let mut mv = eval_eq_interval(&eq.terms, mid);
    for (v, grad) in eq.grads.iter().enumerate() {
        if grad.is_empty() {
            continue;
        }
        let half = 0.5 * boxv[v].width();
        if half == 0.0 {
            continue;
        }
        let d = eval_eq_interval(grad, boxv);
        let mag = d.lo.abs().max(d.hi.abs());
        impact[v] += mag * half;
        mv = mv.add(&d.mul(&Interval::new(-half, half)));
    }
    Interval::new(plain.lo.max(mv.lo), plain.hi.min(mv.hi))
}

fn bb_recurse(ctx: &BbCtx<'_>, boxv: &mut Vec<Interval>) -> BbResult {
    if ctx.budget.fetch_sub(1, Ordering::Relaxed) <= 0 {
        return BbResult::Budget;
    }
    // outside the shell entirely?
    if let Some((idxs, lb)) = ctx.shell {
        if idxs.iter().all(|&i| boxv[i].hi < *lb) {
            return BbResult::Done {
                tree: vec![CertNode::Out],
                nodes: 1,
                min_margin: f64::INFINITY,
            };
        }
    }
    // equation exclusion with mean-value tightening
    let mid_iv: Vec<Interval> = boxv.iter().map(|b| Interval::point(b.midpoint())).collect();
    let mut impact = vec![0.0; boxv.len()];
    for (e, eq) in ctx.eqs.iter().enumerate() {
        let iv = eval_eq_tight(eq, boxv, &mid_iv, &mut impact);
        if !iv.contains_zero() {
            return BbResult::Done {
                tree: vec![CertNode::Eq { e: e as u16 }],
                nodes: 1,
                min_margin: iv.zero_margin(),
            };
        }
    }
    // is the midpoint an admissible solution?
    let mid: Vec<f64> = boxv.iter().map(|b| b.midpoint()).collect();
    let in_shell = match ctx.shell {
        Some((idxs, lb)) => idxs.iter().any(|&i| mid[i] >= *lb),
        None => true,
    };
    if in_shell {
        let viol = ctx
            .eq_polys
            .iter()
            .map(|p| p.eval_f64(&mid).abs())
            .fold(0.0, f64::max);
        if viol <= 1e-12 {
            if ctx.derived_encoding {
                return BbResult::Budget;
            }
            return BbResult::Feasible(mid, viol);
        }
    }
    // split the dimension with the largest accumulated impact, falling
    // back to the widest
    let mut dim = 0;
    let mut score = -1.0;
    for (i, b) in boxv.iter().enumerate() {
        let s = if impact[i] > 0.0 {
            impact[i]
        } else {
            b.width() * 1e-9
        };
        if b.width() > 1e-14 && s > score {
            score = s;
            dim = i;
        }
    }
    if boxv[dim].width() <= 1e-14 {
        // degenerate box that cannot be excluded: treat as budget-style
        // failure rather than a false certificate
        return BbResult::Budget;
    }
    let save = boxv[dim];
    let mid_split = save.midpoint();
    let (lo_box, hi_box) = (
        Interval::new(save.lo, mid_split),
        Interval::new(mid_split, save.hi),
    );
    let mut left_box = boxv.clone();
    left_box[dim] = lo_box;
    let mut right_box = boxv.clone();
    right_box[dim] = hi_box;
    let (lres, rres) = rayon::join(
        || bb_recurse(ctx, &mut left_box.clone()),
        || bb_recurse(ctx, &mut right_box.clone()),
    );
    boxv[dim] = save;
    match (lres, rres) {
        (BbResult::Feasible(p, v), _) | (_, BbResult::Feasible(p, v)) => BbResult::Feasible(p, v),
        (BbResult::Budget, _) | (_, BbResult::Budget) => BbResult::Budget,
        (
            BbResult::Done {
                tree: lt,
                nodes: ln,
                min_margin: lm,
            },
            BbResult::Done {
                tree: rt,
                nodes: rn,
                min_margin: rm,
            },
        ) => {
            let mut tree = Vec::with_capacity(1 + lt.len() + rt.len());
            tree.push(CertNode::Split { d: dim as u8 });
            tree.extend(lt);
            tree.extend(rt);
            BbResult::Done {
                tree,
                nodes: ln + rn + 1,
                min_margin: lm.min(rm),
            }
        }
    }
}

fn certify_branch_bound(
    sys: &PolySystem,
    spec: &SearchSpec,
    budget: u64,
) -> Result<CertOutcome> {
    let budget_cell = AtomicI64::new(budget as i64);
    let mut branches_out = Vec::new();
    let mut total_nodes = 0u64;
    let mut min_margin = f64::INFINITY;
    let nvars = spec.bounds.len();
    let compiled: Vec<CompiledEq> = spec.equations.iter().map(|p| compile_eq(p, nvars)).collect();
    for pinned in &spec.branches {
        let mut boxv: Vec<Interval> = spec
            .bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect();
        for &(idx, v) in pinned {
            boxv[idx] = Interval::point(v);
        }
        let ctx = BbCtx {
            eqs: &compiled,
            shell: &spec.shell,
            budget: &budget_cell,
            eq_polys: &spec.equations,
            derived_encoding: spec.probe.is_some(),
        };
        match bb_recurse(&ctx, &mut boxv) {
            BbResult::Feasible(point, residual) => {
                return Ok(CertOutcome::Counterexample { point, residual })
            }
            BbResult::Budget => {
                let used = budget as i64 - budget_cell.load(Ordering::Relaxed);
                return Ok(CertOutcome::Inconclusive {
                    processed: used.max(0) as u64,
                    budget,
                });
            }
            BbResult::Done {
                tree,
                nodes,
                min_margin: m,
            } => {
                total_nodes += nodes;
                min_margin = min_margin.min(m);
                branches_out.push(CertBranch {
                    pinned: pinned.clone(),
                    tree,
                });
            }
        }
    }
    Ok(CertOutcome::Infeasible(InfeasibilityCertificate {
        system: sys.name.clone(),
        method: "interval-branch-and-bound".into(),
        region: bb_region_description(spec),
        residual_lower_bound: if min_margin.is_finite() {
            Some(min_margin)
        } else {
            None
        },
        subdivisions: total_nodes,
        branches: Some(branches_out),
        sign_patterns: None,
        minors: None,
    }))
}

fn bb_region_description(spec: &SearchSpec) -> String {
    let shell = match &spec.shell {
        Some((idxs, lb)) => format!(
            "sup-norm shell max({}) ≥ {lb}",
            idxs.iter()
                .map(|&i| spec.var_names[i].clone())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        None => "full box".into(),
    };
    if spec.probe.is_some() {
        format!(
            "{}; the parameter coefficient matrix keeps rank 3, so no nonzero              (A, B, C) solves the system regardless of signs",
            shell
        )
    } else {
        format!(
            "{} over {} branch(es), parameters normalized to sup-norm 1",
            shell,
            spec.branches.len()
        )
    }
}

/// Re-run a stored certificate against its system and confirm the verdict.
pub fn replay_certificate(sys: &PolySystem, cert: &InfeasibilityCertificate) -> Result<bool> {
    match (&sys.strategy, cert.method.as_str()) {
        (Strategy::SignPattern, "sign-product") => {
            let fresh = certify_sign_pattern(sys)?;
            match fresh {
                CertOutcome::Infeasible(f) => Ok(f.sign_patterns == cert.sign_patterns),
                _ => Ok(false),
            }
        }
        (Strategy::ExactMinors(spec), "sign-product") => {
            let fresh = certify_minors(sys, spec)?;
            match fresh {
                CertOutcome::Infeasible(f) => Ok(f.minors == cert.minors),
                _ => Ok(false),
            }
        }
        (Strategy::BranchBound(spec), "interval-branch-and-bound") => {
            let Some(branches) = &cert.branches else {
                return Ok(false);
            };
            if branches.len() != spec.branches.len() {
                return Ok(false);
            }
            let nvars = spec.bounds.len();
            let compiled: Vec<CompiledEq> =
                spec.equations.iter().map(|p| compile_eq(p, nvars)).collect();
            for (branch, pinned) in branches.iter().zip(&spec.branches) {
                if &branch.pinned != pinned {
                    return Ok(false);
                }
                let mut boxv: Vec<Interval> = spec
                    .bounds
                    .iter()
                    .map(|&(lo, hi)| Interval::new(lo, hi))
                    .collect();
                for &(idx, v) in pinned {
                    boxv[idx] = Interval::point(v);
                }
                let mut cursor = 0usize;
                if !replay_walk(&branch.tree, &mut cursor, &compiled, &spec.shell, &mut boxv) {
                    return Ok(false);
                }
                if cursor != branch.tree.len() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(false),
    }
}

fn replay_walk(
    tree: &[CertNode],
    cursor: &mut usize,
    eqs: &[CompiledEq],
    shell: &Option<(Vec<usize>, f64)>,
    boxv: &mut Vec<Interval>,
) -> bool {
    let Some(node) = tree.get(*cursor) else {
        return false;
    };
    *cursor += 1;
    match node {
        CertNode::Out => match shell {
            Some((idxs, lb)) => idxs.iter().all(|&i| boxv[i].hi < *lb),
            None => false,
        },
        CertNode::Eq { e } => {
            let Some(eq) = eqs.get(*e as usize) else {
                return false;
            };
            let mid: Vec<Interval> = boxv.iter().map(|b| Interval::point(b.midpoint())).collect();
            let mut impact = vec![0.0; boxv.len()];
            !eval_eq_tight(eq, boxv, &mid, &mut impact).contains_zero()
        }
        CertNode::Split { d } => {
            let d = *d as usize;
            if d >= boxv.len() {
                return false;
            }
            let save = boxv[d];
            let mid = save.midpoint();
            boxv[d] = Interval::new(save.lo, mid);
            let left = replay_walk(tree, cursor, eqs, shell, boxv);
            boxv[d] = Interval::new(mid, save.hi);
            let right = left && replay_walk(tree, cursor, eqs, shell, boxv);
            boxv[d] = save;
            right
        }
    }
}

/// Random-point soundness check: every admissible sample must violate some
/// equation by a strictly positive margin. Returns the smallest such margin
/// and the point attaining it.
pub struct SpotCheck {
    pub samples: usize,
    pub min_margin: f64,
    pub argmin: Vec<f64>,
}

pub fn spot_check(sys: &PolySystem, samples: usize, seed: u64) -> Result<SpotCheck> {
    use rand::Rng;
    use rand::SeedableRng;
    let Strategy::BranchBound(spec) = &sys.strategy else {
        return Err(Error::precondition(
            "spot check applies to branch-and-bound systems",
        ));
    };
    let (bounds, branches, shell, equations) = match &spec.probe {
        Some(probe) => (
            &probe.bounds,
            &probe.branches,
            &probe.shell,
            &probe.equations,
        ),
        None => (&spec.bounds, &spec.branches, &spec.shell, &spec.equations),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut accepted = 0usize;
    while accepted < samples {
        let branch = &branches[rng.random_range(0..branches.len())];
        let mut point: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        for &(idx, v) in branch {
            point[idx] = v;
        }
        if let Some((idxs, lb)) = shell {
            if !idxs.iter().any(|&i| point[i] >= *lb) {
                continue;
            }
        }
        accepted += 1;
        let margin = equations
            .iter()
            .map(|p| p.eval_f64(&point).abs())
            .fold(0.0, f64::max);
        if margin < min_margin {
            min_margin = margin;
            argmin = point;
        }
    }
    Ok(SpotCheck {
        samples,
        min_margin,
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aubin::reference_alpha;
    use crate::poly::{rat, rat_int};

    #[test]
    fn wplus_displayed_system() {
        let sys = wplus_system(&reference_alpha()).unwrap();
        assert_eq!(sys.equations.len(), 3);
        // primitive integer forms: 4x₁x₄ + 15x₂x₃, 9x₁x₃ − 10x₂x₄ (as
        // −9x₁x₃ + 10x₂x₄ after sign normalization), 5x₁x₂ + 6x₃x₄
        let p0 = sys.equations[0].primitive_integer_form();
        assert_eq!(p0.coefficient(&[1, 0, 0, 1]), rat_int(4));
        assert_eq!(p0.coefficient(&[0, 1, 1, 0]), rat_int(15));
        assert_eq!(p0.num_terms(), 2);
        let p1 = sys.equations[1].primitive_integer_form();
        let (c13, c24) = (
            p1.coefficient(&[1, 0, 1, 0]),
            p1.coefficient(&[0, 1, 0, 1]),
        );
        assert!(
            (c13 == rat_int(9) && c24 == rat_int(-10))
                || (c13 == rat_int(-9) && c24 == rat_int(10))
        );
        let p2 = sys.equations[2].primitive_integer_form();
        assert_eq!(p2.coefficient(&[1, 1, 0, 0]), rat_int(5));
        assert_eq!(p2.coefficient(&[0, 0, 1, 1]), rat_int(6));
        // x = 0 satisfies the system; (1,1,1,1) violates the first equation
        assert_eq!(eval_max_violation(&sys, &[0.0; 4]), 0.0);
        let v0 = sys.equations[0].eval_f64(&[1.0, 1.0, 1.0, 1.0]);
        assert!(v0.abs() > 0.1, "4 ≠ −15: {v0}");
    }

    #[test]
    fn wplus_sign_product_certificate() {
        let sys = wplus_system(&reference_alpha()).unwrap();
        let out = certify_no_nonzero_solution(&sys, 10).unwrap();
        let CertOutcome::Infeasible(cert) = out else {
            panic!("expected a certificate");
        };
        assert_eq!(cert.method, "sign-product");
        assert_eq!(cert.sign_patterns.as_ref().unwrap().len(), 16);
        assert!(replay_certificate(&sys, &cert).unwrap());
        // serialization round-trip keeps it replayable
        let json = serde_json::to_string(&cert).unwrap();
        let back: InfeasibilityCertificate = serde_json::from_str(&json).unwrap();
        assert!(replay_certificate(&sys, &back).unwrap());
    }

    #[test]
    fn single_coordinate_subcase() {
        for i in 0..4 {
            let sys = weyl_single_coordinate_system(&reference_alpha(), 4, i).unwrap();
            let out = certify_no_nonzero_solution(&sys, 10).unwrap();
            assert!(out.is_infeasible(), "coordinate {i}");
            if let CertOutcome::Infeasible(cert) = out {
                assert!(cert.minors.as_ref().unwrap().len() >= 1);
                assert!(replay_certificate(&sys, &cert).unwrap());
            }
        }
        // with a repeated alpha the rows become proportional and the
        // verdict rests on the per-row sign argument
        let alpha = vec![rat_int(1), rat(3, 2), rat(3, 2), rat_int(2)];
        let sys = weyl_single_coordinate_system(&alpha, 4, 0).unwrap();
        let out = certify_no_nonzero_solution(&sys, 10).unwrap();
        assert!(out.is_infeasible());
    }

    #[test]
    fn bach_system_coefficients_and_budget() {
        let sys = bach_system(&reference_alpha(), BachParamMode::SignConstrained).unwrap();
        assert_eq!(sys.equations.len(), 10);
        // the B coefficient of the (2,3) equation is (5/2)(19/4), and the
        // printed C quadratic (−1/2, 0, 9/8, 6) appears with weight (5/2)·2
        let e23 = &sys.equations[5]; // pairs in order: 00,01,02,03,11,12,...
        let mut exp = vec![0u8; 7];
        exp[1] = 1;
        exp[2] = 1;
        exp[5] = 1;
        assert_eq!(e23.coefficient(&exp), rat(5, 2) * rat(19, 4));
        let mut expc = vec![0u8; 7];
        expc[1] = 1;
        expc[2] = 1;
        expc[6] = 1;
        expc[0] = 2;
        assert_eq!(e23.coefficient(&expc), rat(5, 1) * rat(-1, 2));
        // trivial budget → inconclusive
        let out = certify_no_nonzero_solution(&sys, 1).unwrap();
        assert!(matches!(out, CertOutcome::Inconclusive { .. }));
    }

    #[test]
    fn bach_spot_check_strictly_positive() {
        let sys = bach_system(&reference_alpha(), BachParamMode::SignConstrained).unwrap();
        let sc = spot_check(&sys, 2000, 41).unwrap();
        assert!(sc.min_margin > 0.0, "margin {}", sc.min_margin);
    }
}
