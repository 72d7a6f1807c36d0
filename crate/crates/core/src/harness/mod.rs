//! Sampling, scan drivers, cross-validation, convergence studies, and the
//! suite orchestrator.

pub mod checks;
pub mod report;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aubin::{
    bach_principal, cotton_principal, deform_metric, norm_sq_at, phi, weyl_principal, BumpParams,
    CoeffFamily, NormKind,
};
use crate::curvature::{self, bach, cotton, riemann, ricci_scalar, weyl, CurvatureBundle};
use crate::error::{Error, Result};
use crate::jets::{eval_metric_jet, ChartPoint, MetricField, ScalarField};

pub use report::{CheckRecord, CheckStatus, Counts, SuiteConfig, SuiteReport, Tolerances};

/// Sampling keeps this relative margin from the support boundary so the
/// C∞-flat tail of the bump stays above f64 underflow in fourth powers.
pub const SAMPLE_RHO_MAX: f64 = 0.95;

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Acklam's rational approximation of the inverse normal CDF.
fn inv_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    let plow = 0.02425;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inv_normal_cdf(1.0 - p)
    }
}

const HALTON_BASES: [u64; 7] = [2, 3, 5, 7, 11, 13, 17];

/// Low-discrepancy points inside the ellipsoid Σ αᵢ(xᵢ−cᵢ)² < r²,
/// stratified into the bump center, the inner half-ball (ρ < 1/2), and the
/// annulus (1/2 ≤ ρ ≤ 0.95), plus the coordinate-axis points the case
/// analyses use.
pub fn sample_ball(
    center: &ChartPoint,
    r: f64,
    alpha: &[f64],
    count: usize,
    seed: u64,
) -> Vec<ChartPoint> {
    let n = center.dim();
    assert_eq!(alpha.len(), n);
    if count == 0 {
        return Vec::new();
    }
    let mut pts = Vec::with_capacity(count);
    let n_center = (count / 100).max(1).min(count);
    let remaining = count - n_center;
    let n_inner = remaining / 2;
    let n_annulus = remaining - n_inner;
    for _ in 0..n_center {
        pts.push(center.clone());
    }
    // deterministic axis points, counted inside their strata
    let mut axis_inner = Vec::new();
    let mut axis_annulus = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            for (rho, out) in [(0.3, &mut axis_inner), (0.7, &mut axis_annulus)] {
                let mut coords = center.coords().to_vec();
                coords[i] += sign * rho * r / alpha[i].sqrt();
                out.push(ChartPoint::new(coords).unwrap());
            }
        }
    }
    let offset = seed.wrapping_mul(7919) % 100_000;
    let mut emit = |band: (f64, f64), total: usize, axis: &[ChartPoint], stream: u64| {
        let take_axis = axis.len().min(total / 4);
        for p in axis.iter().take(take_axis) {
            pts.push(p.clone());
        }
        let m = total - take_axis;
        for k in 0..m {
            let idx = offset + stream * 1_000_000 + k as u64 + 1;
            // direction from probit-transformed Halton coordinates
            let mut v = [0.0f64; crate::taylor::MAX_VARS];
            for d in 0..n {
                v[d] = inv_normal_cdf(halton(idx, HALTON_BASES[d]));
            }
            let norm_alpha: f64 = (0..n).map(|d| alpha[d] * v[d] * v[d]).sum::<f64>().sqrt();
            // uniform-in-volume radius within the band
            let t = halton(idx, HALTON_BASES[n]);
            let (a, b) = band;
            let rho = (a.powi(n as i32) + t * (b.powi(n as i32) - a.powi(n as i32)))
                .powf(1.0 / n as f64);
            let mut coords = center.coords().to_vec();
            for d in 0..n {
                coords[d] += r * rho * v[d] / norm_alpha;
            }
            pts.push(ChartPoint::new(coords).unwrap());
        }
    };
    emit((0.0, 0.5), n_inner, &axis_inner, 1);
    emit((0.5, SAMPLE_RHO_MAX), n_annulus, &axis_annulus, 2);
    pts
}

// ---------------------------------------------------------------------------
// scans
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub norm_sq: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ScanResult {
    pub kind: String,
    pub count: usize,
    pub min: f64,
    pub argmin: Vec<f64>,
    /// (decade of norm², count); the decade of exactly zero is i32::MIN.
    pub histogram: Vec<(i32, usize)>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

/// Pointwise tensor-norm scan; pure given (field, kind, points).
pub fn min_norm_scan(
    field: &MetricField,
    kind: NormKind,
    points: &[ChartPoint],
) -> Result<ScanResult> {
    let values: Result<Vec<f64>> = points
        .par_iter()
        .map(|p| norm_sq_at(field, p, kind))
        .collect();
    let values = values?;
    let mut min = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut histogram = std::collections::BTreeMap::new();
    let mut rows = Vec::with_capacity(points.len());
    for (i, (p, &v)) in points.iter().zip(&values).enumerate() {
        if v < min {
            min = v;
            argmin = p.coords().to_vec();
        }
        let decade = if v == 0.0 {
            i32::MIN
        } else {
            v.log10().floor() as i32
        };
        *histogram.entry(decade).or_insert(0usize) += 1;
        rows.push(ScanRow {
            index: i,
            coords: p.coords().to_vec(),
            norm_sq: v,
        });
    }
    Ok(ScanResult {
        kind: kind.name().to_string(),
        count: points.len(),
        min,
        argmin,
        histogram: histogram.into_iter().collect(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// cross-validation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct CrossValidation {
    pub family: String,
    pub count: usize,
    pub max_residual: f64,
    pub median_residual: f64,
    pub worst_point: Vec<f64>,
}

/// Componentwise residual between the closed-form deformed tensor and the
/// pipeline tensor of g̃ = g + dφ⊗dφ.
pub fn cross_validate(
    background: &MetricField,
    params: &BumpParams,
    points: &[ChartPoint],
    family: CoeffFamily,
) -> Result<CrossValidation> {
    let deformed = deform_metric(background, params)?;
    let residuals: Result<Vec<(f64, Vec<f64>)>> = points
        .par_iter()
        .map(|p| {
            let order = match family {
                CoeffFamily::Weyl => 2,
                CoeffFamily::Cotton => 3,
            };
            let bundle = CurvatureBundle::compute(background, p, order)?;
            let mj = eval_metric_jet(background, p, order)?;
            let pj = phi(p, params)?;
            let resid = match family {
                CoeffFamily::Weyl => {
                    let closed = crate::aubin::deformed_weyl_closed_form(&bundle, &mj, &pj)?;
                    let mjt = eval_metric_jet(&deformed, p, 2)?;
                    let rm = riemann(&mjt)?;
                    let (ric, scal) = ricci_scalar(&rm, &mjt);
                    let pipe = weyl(&rm, &ric, scal, &mjt);
                    closed
                        .components()
                        .iter()
                        .zip(pipe.components())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                }
                CoeffFamily::Cotton => {
                    let closed = crate::aubin::cotton_deformed_closed_form(&bundle, &mj, &pj)?;
                    let pipe = cotton(&deformed, p)?;
                    closed
                        .components()
                        .iter()
                        .zip(pipe.components())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                }
            };
            Ok((resid, p.coords().to_vec()))
        })
        .collect();
    let mut residuals = residuals?;
    let (max_residual, worst_point) = residuals
        .iter()
        .cloned()
        .fold((0.0, Vec::new()), |acc, (r, p)| {
            if r > acc.0 {
                (r, p)
            } else {
                acc
            }
        });
    residuals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let median_residual = residuals[residuals.len() / 2].0;
    Ok(CrossValidation {
        family: match family {
            CoeffFamily::Weyl => "weyl".into(),
            CoeffFamily::Cotton => "cotton".into(),
        },
        count: points.len(),
        max_residual,
        median_residual,
        worst_point,
    })
}

// ---------------------------------------------------------------------------
// convergence studies
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrincipalFamily {
    Weyl,
    Cotton,
    Bach,
}

impl PrincipalFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PrincipalFamily::Weyl => "weyl",
            PrincipalFamily::Cotton => "cotton",
            PrincipalFamily::Bach => "bach",
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceStudy {
    pub family: String,
    pub radii: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub monotone: bool,
    /// All residuals at the rounding floor: the quantity is exact at this
    /// position and there is nothing left to converge.
    pub at_floor: bool,
}

/// Relative deviation of the pipeline from (background + principal part)
/// at a fixed rescaled position, for a sequence of bump radii. The
/// principal parts grow like 1/r (Cotton) and 1/r² (Bach), so the residual
/// is normalized by the principal scale before the log-log fit.
pub fn convergence_study(
    family: PrincipalFamily,
    lambda: f64,
    b: f64,
    radii: &[f64],
    xi: &[f64],
) -> Result<ConvergenceStudy> {
    if radii.len() < 2 {
        return Err(Error::precondition("need at least two radii"));
    }
    let flat = MetricField::flat(4);
    let mut residuals = Vec::with_capacity(radii.len());
    for &r in radii {
        let params = BumpParams::reference(lambda, r, b)?;
        let deformed = deform_metric(&flat, &params)?;
        let x = ChartPoint::new(xi.iter().map(|v| v * r).collect())?;
        let resid = match family {
            PrincipalFamily::Weyl => {
                let e = weyl_principal(&params, &x)?;
                let mjt = eval_metric_jet(&deformed, &x, 2)?;
                let rm = riemann(&mjt)?;
                let (ric, scal) = ricci_scalar(&rm, &mjt);
                let pipe = weyl(&rm, &ric, scal, &mjt);
                let comps = [
                    (pipe.get(0, 1, 0, 1), e.delta_ijij[1]),
                    (pipe.get(0, 1, 0, 2), e.delta_ijik[(0 * 4 + 1) * 4 + 2]),
                    (pipe.get(2, 3, 2, 3), e.delta_ijij[2 * 4 + 3]),
                    (pipe.get(0, 1, 2, 3), 0.0),
                ];
                relative_residual(&comps)
            }
            PrincipalFamily::Cotton => {
                let e = cotton_principal(&params, &x)?;
                let pipe = cotton(&deformed, &x)?;
                let comps = [
                    (pipe.get(0, 1, 0), e.delta_iji[1]),
                    (pipe.get(1, 2, 1), e.delta_iji[4 + 2]),
                    (pipe.get(0, 1, 2), e.delta_ijk[(0 * 4 + 1) * 4 + 2]),
                ];
                relative_residual(&comps)
            }
            PrincipalFamily::Bach => {
                let e = bach_principal(&params, &x)?;
                let pipe = bach(&deformed, &x)?;
                let comps = [
                    (pipe.get(0, 0), e.get(0, 0)),
                    (pipe.get(1, 1), e.get(1, 1)),
                    (pipe.get(3, 3), e.get(3, 3)),
                    (pipe.get(0, 1), e.get(0, 1)),
                ];
                relative_residual(&comps)
            }
        };
        residuals.push(resid);
    }
    // least-squares slope of ln(residual) against ln(r)
    let logs: Vec<(f64, f64)> = radii
        .iter()
        .zip(&residuals)
        .map(|(&r, &e)| (r.ln(), e.max(1e-300).ln()))
        .collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    let at_floor = residuals.iter().all(|&e| e <= 1e-12);
    Ok(ConvergenceStudy {
        family: family.name().to_string(),
        radii: radii.to_vec(),
        residuals,
        slope,
        monotone,
        at_floor,
    })
}

fn relative_residual(comps: &[(f64, f64)]) -> f64 {
    let scale = comps
        .iter()
        .map(|&(_, p)| p.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    comps
        .iter()
        .map(|&(pipe, principal)| (pipe - principal).abs())
        .fold(0.0, f64::max)
        / scale
}

// ---------------------------------------------------------------------------
// conformal covariance
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct CovarianceCheck {
    pub weight: f64,
    pub residual: f64,
    pub scale: f64,
    pub rejected_weight_residual: f64,
}

/// Determine the componentwise weight w ∈ {2, 4} minimizing
/// max |e^{wu} B̃_ij − B_ij| over the points, and measure the winner.
pub fn bach_covariance_check(
    field: &MetricField,
    u: &ScalarField,
    points: &[ChartPoint],
) -> Result<CovarianceCheck> {
    if field.dim() != 4 {
        return Err(Error::precondition("Bach covariance needs n = 4"));
    }
    let rescaled = curvature::conformal_rescale(field, u);
    let mut resid2 = 0.0f64;
    let mut resid4 = 0.0f64;
    let mut scale = 0.0f64;
    for p in points {
        let b0 = bach(field, p)?;
        let b1 = bach(&rescaled, p)?;
        let uval = crate::jets::eval_scalar_jet(u, p, 0)?.value();
        scale = scale.max(b0.max_abs());
        for i in 0..4 {
            for j in 0..4 {
                let d2 = ((2.0 * uval).exp() * b1.get(i, j) - b0.get(i, j)).abs();
                let d4 = ((4.0 * uval).exp() * b1.get(i, j) - b0.get(i, j)).abs();
                resid2 = resid2.max(d2);
                resid4 = resid4.max(d4);
            }
        }
    }
    let (weight, residual, rejected) = if resid2 <= resid4 {
        (2.0, resid2, resid4)
    } else {
        (4.0, resid4, resid2)
    };
    Ok(CovarianceCheck {
        weight,
        residual,
        scale,
        rejected_weight_residual: rejected,
    })
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

/// Run the named checks (all by default) and assemble the report.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let registry = checks::registry();
    let selected: Vec<&checks::Check> = match &config.checks {
        None => registry.iter().collect(),
        Some(names) => {
            let mut picked = Vec::new();
            for name in names {
                let found = registry
                    .iter()
                    .find(|c| c.name == name.as_str())
                    .ok_or_else(|| Error::usage(format!("unknown check '{name}'")))?;
                picked.push(found);
            }
            picked
        }
    };
    let records: Vec<CheckRecord> = selected
        .par_iter()
        .map(|check| checks::run_check(check, config))
        .collect();
    Ok(SuiteReport::new(config, records))
}

/// Deterministic RNG for a named check.
pub(crate) fn check_rng(config: &SuiteConfig, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.check_seed(name))
}

/// Random bump parameters with exact rational alphas (denominator 16) in
/// [1, 2], pairwise distinct.
pub(crate) fn random_bump_params(rng: &mut ChaCha8Rng, n: usize, r: f64) -> BumpParams {
    use crate::poly::rat;
    let lambda = rng.random_range(1.0..=2.0);
    loop {
        let mut nums: Vec<i64> = (0..n).map(|_| rng.random_range(16..=32)).collect();
        nums.sort_unstable();
        nums.dedup();
        if nums.len() != n {
            continue;
        }
        let alpha = nums.into_iter().map(|k| rat(k, 16)).collect();
        return BumpParams::new(lambda, r, 10.0, alpha, ChartPoint::origin(n)).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_contract() {
        let center = ChartPoint::origin(4);
        let alpha = [1.0, 1.25, 1.5, 2.0];
        assert!(sample_ball(&center, 0.1, &alpha, 0, 7).is_empty());
        let pts = sample_ball(&center, 0.1, &alpha, 10_000, 7);
        assert_eq!(pts.len(), 10_000);
        let mut n_center = 0;
        let mut n_inner = 0;
        let mut n_annulus = 0;
        for p in &pts {
            let q: f64 = p
                .coords()
                .iter()
                .zip(alpha)
                .map(|(x, a)| a * x * x)
                .sum();
            assert!(q < 0.1 * 0.1, "point outside the ellipsoid");
            let rho = q.sqrt() / 0.1;
            if rho == 0.0 {
                n_center += 1;
            } else if rho < 0.5 {
                n_inner += 1;
            } else {
                n_annulus += 1;
            }
        }
        // stratification within 5% of (ε, 1/2, 1/2)
        assert!((n_center as f64 / 10_000.0 - 0.01).abs() < 0.05);
        assert!((n_inner as f64 / 10_000.0 - 0.495).abs() < 0.05);
        assert!((n_annulus as f64 / 10_000.0 - 0.495).abs() < 0.05);
        // determinism
        let again = sample_ball(&center, 0.1, &alpha, 10_000, 7);
        for (a, b) in pts.iter().zip(&again) {
            assert_eq!(a.coords(), b.coords());
        }
        let other = sample_ball(&center, 0.1, &alpha, 100, 8);
        assert_ne!(pts[50].coords(), other[50].coords());
    }

    #[test]
    fn flat_metric_scans_are_zero() {
        let flat = MetricField::flat(4);
        let pts = sample_ball(&ChartPoint::origin(4), 0.1, &[1.0; 4], 50, 3);
        let scan = min_norm_scan(&flat, NormKind::Weyl, &pts).unwrap();
        assert_eq!(scan.min, 0.0);
        assert_eq!(scan.count, 50);
    }

    #[test]
    fn zero_bump_cross_validation_is_exact() {
        // bump supported away from the sampled region → both sides see g
        let flat = MetricField::flat(4);
        let params = BumpParams::new(
            1.5,
            0.01,
            10.0,
            crate::aubin::reference_alpha(),
            ChartPoint::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let pts = sample_ball(&ChartPoint::origin(4), 0.05, &[1.0; 4], 20, 5);
        let cv = cross_validate(&flat, &params, &pts, CoeffFamily::Weyl).unwrap();
        assert_eq!(cv.max_residual, 0.0);
    }

    #[test]
    fn suite_runs_subset_and_is_deterministic() {
        let mut config = SuiteConfig::default();
        config.checks = Some(vec![
            "coeff_weyl_table".into(),
            "bach_constant".into(),
            "exact_sum_rules".into(),
            "obstruction_wplus".into(),
        ]);
        let a = run_suite(&config).unwrap();
        assert!(a.verdict);
        let b = run_suite(&config).unwrap();
        assert_eq!(a.normalized_json(), b.normalized_json());
        // empty config is a trivial pass
        config.checks = Some(vec![]);
        let empty = run_suite(&config).unwrap();
        assert!(empty.verdict);
        assert!(empty.checks.is_empty());
        // unknown names are usage errors
        config.checks = Some(vec!["no_such_check".into()]);
        assert!(matches!(
            run_suite(&config),
            Err(crate::error::Error::Usage(_))
        ));
    }

    #[test]
    fn covariance_check_constant_factor() {
        let metric = crate::catalog::catalog_metric("perturbed4").unwrap();
        let u = ScalarField::constant(4, 0.4);
        let pts = vec![
            ChartPoint::new(vec![0.05, 0.1, -0.05, 0.1]).unwrap(),
            ChartPoint::new(vec![-0.1, 0.05, 0.1, -0.05]).unwrap(),
        ];
        let cov = bach_covariance_check(&metric.field, &u, &pts).unwrap();
        assert_eq!(cov.weight, 2.0);
        assert!(cov.residual <= 1e-10 * cov.scale);
        // u = 0: any weight fits exactly
        let z = ScalarField::constant(4, 0.0);
        let cov0 = bach_covariance_check(&metric.field, &z, &pts).unwrap();
        assert!(cov0.residual <= 1e-14 * cov0.scale.max(1e-30));
    }
}
