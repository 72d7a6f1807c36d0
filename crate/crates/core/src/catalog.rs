//! Named background metrics used by the harness and the CLI.
//!
//! Every chart is analytic on all of ℝⁿ; `safe_radius` bounds the region the
//! samplers use. Flags are verified by [`verify_flags`], not trusted.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::CurvatureBundle;
use crate::error::{Error, Result};
use crate::jets::{ChartPoint, MetricField, ScalarField};
use crate::taylor::{Taylor, MAX_ORDER};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CatalogFlags {
    pub flat: bool,
    pub conformally_flat: bool,
    pub einstein: bool,
    pub normalized_at_origin: bool,
}

pub struct CatalogMetric {
    pub name: &'static str,
    pub dim: usize,
    pub safe_radius: f64,
    pub field: MetricField,
    pub flags: CatalogFlags,
}

/// Rescaled stereographic chart of the round unit sphere: g = (1+|x|²/4)⁻² δ,
/// so g(0) = δ and dg(0) = 0.
pub fn unit_sphere_field(dim: usize) -> MetricField {
    MetricField::from_fn(dim, MAX_ORDER, move |vars| {
        let sp = vars[0].space();
        let mut q = Taylor::constant(sp, 1.0);
        for v in vars.iter() {
            q = &q + &v.mul(v).scale(0.25);
        }
        let factor = q.recip().mul(&q.recip());
        let mut g = vec![Taylor::zero(sp); dim * dim];
        for i in 0..dim {
            g[i * dim + i] = factor.clone();
        }
        Ok(g)
    })
}

/// S² × S² as a block-diagonal product of two rescaled stereographic
/// 2-sphere charts; Einstein with R = 4 and W ≠ 0.
pub fn product_sphere_field() -> MetricField {
    MetricField::from_fn(4, MAX_ORDER, move |vars| {
        let sp = vars[0].space();
        let mut g = vec![Taylor::zero(sp); 16];
        for block in 0..2 {
            let (a, b) = (2 * block, 2 * block + 1);
            let q = &(&Taylor::constant(sp, 1.0) + &vars[a].mul(&vars[a]).scale(0.25))
                + &vars[b].mul(&vars[b]).scale(0.25);
            let factor = q.recip().mul(&q.recip());
            g[a * 4 + a] = factor.clone();
            g[b * 4 + b] = factor;
        }
        Ok(g)
    })
}

/// e^{2u} δ with a fixed polynomial u satisfying u(0) = 0, du(0) = 0, so the
/// chart stays normalized at the origin.
pub fn conformally_flat_poly_field(dim: usize) -> MetricField {
    let mut terms = vec![(0.2, {
        let mut e = vec![0u32; dim];
        e[0] = 2;
        e
    })];
    let mut e1 = vec![0u32; dim];
    e1[1] = 1;
    e1[2] = 1;
    terms.push((-0.15, e1));
    if dim >= 4 {
        let mut e2 = vec![0u32; dim];
        e2[2] = 1;
        e2[3] = 1;
        terms.push((0.1, e2));
    }
    let u = ScalarField::polynomial(dim, terms);
    MetricField::conformally_flat(&u)
}

/// δ + ε h with h a polynomial symmetric 2-tensor, h(0) = 0, dh(0) = 0.
/// Coefficients are drawn deterministically from the seed.
pub fn perturbed_flat_field(dim: usize, eps: f64, seed: u64) -> MetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    // per (i ≤ j): a few quadratic and cubic monomials with fixed exponents
    let mut entries: Vec<(usize, usize, Vec<(f64, Vec<u32>)>)> = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let mut terms = Vec::new();
            for _ in 0..3 {
                let coef: f64 = rng.random_range(-1.0..1.0);
                let deg = if rng.random_bool(0.5) { 2 } else { 3 };
                let mut e = vec![0u32; dim];
                for _ in 0..deg {
                    e[rng.random_range(0..dim)] += 1;
                }
                terms.push((coef, e));
            }
            entries.push((i, j, terms));
        }
    }
    MetricField::from_fn(dim, MAX_ORDER, move |vars| {
        let sp = vars[0].space();
        let mut g = vec![Taylor::zero(sp); dim * dim];
        for i in 0..dim {
            g[i * dim + i] = Taylor::constant(sp, 1.0);
        }
        for (i, j, terms) in &entries {
            let mut h = Taylor::zero(sp);
            for (c, exps) in terms {
                let mut m = Taylor::constant(sp, *c);
                for (v, &e) in vars.iter().zip(exps.iter()) {
                    for _ in 0..e {
                        m = m.mul(v);
                    }
                }
                h = &h + &m;
            }
            g[i * dim + j] = &g[i * dim + j] + &h.scale(eps);
        }
        Ok(g)
    })
}

pub fn catalog() -> Vec<CatalogMetric> {
    vec![
        CatalogMetric {
            name: "flat4",
            dim: 4,
            safe_radius: 1.0,
            field: MetricField::flat(4),
            flags: CatalogFlags {
                flat: true,
                conformally_flat: true,
                einstein: true,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "flat5",
            dim: 5,
            safe_radius: 1.0,
            field: MetricField::flat(5),
            flags: CatalogFlags {
                flat: true,
                conformally_flat: true,
                einstein: true,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "sphere4",
            dim: 4,
            safe_radius: 1.0,
            field: unit_sphere_field(4),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: true,
                einstein: true,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "sphere5",
            dim: 5,
            safe_radius: 1.0,
            field: unit_sphere_field(5),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: true,
                einstein: true,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "confflat4",
            dim: 4,
            safe_radius: 0.8,
            field: conformally_flat_poly_field(4),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: true,
                einstein: false,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "s2xs2",
            dim: 4,
            safe_radius: 1.0,
            field: product_sphere_field(),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: false,
                einstein: true,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "perturbed4",
            dim: 4,
            safe_radius: 0.5,
            field: perturbed_flat_field(4, 1e-2, 11),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: false,
                einstein: false,
                normalized_at_origin: true,
            },
        },
        CatalogMetric {
            name: "perturbed5",
            dim: 5,
            safe_radius: 0.5,
            field: perturbed_flat_field(5, 1e-2, 12),
            flags: CatalogFlags {
                flat: false,
                conformally_flat: false,
                einstein: false,
                normalized_at_origin: true,
            },
        },
    ]
}

pub fn catalog_metric(name: &str) -> Result<CatalogMetric> {
    catalog()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::usage(format!("unknown catalog metric '{name}'")))
}

/// Check the declared flags against pipeline measurements at sampled points.
pub fn verify_flags(metric: &CatalogMetric, points: &[ChartPoint], tol: f64) -> Result<()> {
    // normalized: g(0) = δ, dg(0) = 0
    if metric.flags.normalized_at_origin {
        let mj = crate::jets::eval_metric_jet(&metric.field, &ChartPoint::origin(metric.dim), 1)?;
        let n = metric.dim;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (mj.g()[i * n + j] - expect).abs() > tol {
                    return Err(Error::geometry(format!(
                        "{}: g(0) deviates from identity",
                        metric.name
                    )));
                }
                for k in 0..n {
                    if mj.dg(k, i, j).abs() > tol {
                        return Err(Error::geometry(format!(
                            "{}: dg(0) non-zero",
                            metric.name
                        )));
                    }
                }
            }
        }
    }
    for p in points {
        let b = CurvatureBundle::compute(&metric.field, p, 2)?;
        let n = metric.dim;
        if metric.flags.flat && b.riemann.max_abs() > tol {
            return Err(Error::geometry(format!("{}: not flat at {p:?}", metric.name)));
        }
        if metric.flags.conformally_flat && metric.dim >= 4 && b.weyl.max_abs() > tol {
            return Err(Error::geometry(format!(
                "{}: Weyl does not vanish at {p:?}",
                metric.name
            )));
        }
        if metric.flags.einstein {
            let scale = b.ricci.max_abs().max(1.0);
            for i in 0..n {
                for j in 0..n {
                    let resid =
                        b.ricci.get(i, j) - b.scalar / n as f64 * b.metric.get(i, j);
                    if resid.abs() > 1e-8 * scale {
                        return Err(Error::geometry(format!(
                            "{}: Ricci deviates from (R/n) g at {p:?}",
                            metric.name
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::eval_metric_jet;
    use crate::taylor::MAX_ORDER;

    #[test]
    fn stereographic_sphere_chart_values() {
        // the unrescaled chart g = 4/(1+|x|²)² δ has g(0) = 4δ, dg(0) = 0
        let dim = 4;
        let g = MetricField::from_fn(dim, MAX_ORDER, move |vars| {
            let sp = vars[0].space();
            let mut q = Taylor::constant(sp, 1.0);
            for v in vars.iter() {
                q = &q + &v.mul(v);
            }
            let factor = q.recip().mul(&q.recip()).scale(4.0);
            let mut out = vec![Taylor::zero(sp); dim * dim];
            for i in 0..dim {
                out[i * dim + i] = factor.clone();
            }
            Ok(out)
        });
        let mj = eval_metric_jet(&g, &ChartPoint::origin(4), 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert_eq!(mj.g()[i * 4 + j], expect);
                for k in 0..4 {
                    assert_eq!(mj.dg(k, i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn rescaled_sphere_second_derivatives() {
        // g = (1+|x|²/4)⁻² δ: g(0) = δ, dg(0) = 0, ∂k∂l g_ij(0) = −δ_kl δ_ij
        let g = unit_sphere_field(4);
        let mj = eval_metric_jet(&g, &ChartPoint::origin(4), 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(mj.g()[i * 4 + j], if i == j { 1.0 } else { 0.0 });
                for k in 0..4 {
                    assert_eq!(mj.dg(k, i, j), 0.0);
                    for l in 0..4 {
                        let expect = if k == l && i == j { -1.0 } else { 0.0 };
                        assert!(
                            (mj.d2g(k, l, i, j) - expect).abs() < 1e-14,
                            "d2g({k},{l},{i},{j}) = {}",
                            mj.d2g(k, l, i, j)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_flags_hold_for_every_member() {
        for metric in catalog() {
            let pts = vec![
                ChartPoint::origin(metric.dim),
                ChartPoint::new(
                    (0..metric.dim)
                        .map(|k| 0.1 * metric.safe_radius * (k as f64 + 1.0) / metric.dim as f64)
                        .collect(),
                )
                .unwrap(),
            ];
            verify_flags(&metric, &pts, 1e-8).unwrap_or_else(|e| {
                panic!("{}: {e}", metric.name);
            });
        }
        assert!(catalog_metric("no_such_metric").is_err());
    }
}
