//! Built-in model manifolds with their soliton data and known curvature.
//!
//! | name | chart |
//! |------|-------|
//! | `euclidean:n` | `δ` on `[-1, 1]^n` |
//! | `sphere:n` | stereographic `4/(1+|x|²)² δ` on `[-2, 2]^n` |
//! | `hyperbolic:n` | Poincaré ball `4/(1-|x|²)² δ` on `[-a, a]^n`, `a = 0.8/√n` |
//! | `product_line_sphere:n` | `dt² + g_{S^n}`, total dimension `n + 1` |
//! | `example4:n` | `g_ii = cosh²(x_{i+1})` for even `i` (indices mod `n`), else 1 |
//! | `warped:<fiber>:<m>:<ξ>` | `dt² + ξ(t)² g_F`, `t = x1` on `[0.25, 2]` |
//!
//! Height functions pull back `⟨y, v⟩` through the inverse stereographic map
//! `y = (2x, |x|² - 1)/(1 + |x|²)` and the ball-to-hyperboloid map
//! `y = (1 + |x|², 2x)/(1 - |x|²)` (Lorentzian product, first slot negative).

use std::fmt;

use thiserror::Error;

use crate::curvature::{curvature_at, Domain, GeometryError, MetricChart};
use crate::expr::{parse, Expr, Func, ParseError};
use crate::sigma::{sigma_profile_unchecked, SigmaError};
use crate::tensor::TensorValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model '{0}'")]
    UnknownName(String),
    #[error("model {name} needs dimension >= {min}, got {n}")]
    Dimension {
        name: &'static str,
        n: usize,
        min: usize,
    },
    #[error("invalid warping function: {0}")]
    Warping(#[from] ParseError),
    #[error("warping function must depend on x1 only")]
    WarpingVariables,
    #[error("warping function is not positive at t = {t} (value {value})")]
    NonPositiveWarping { t: f64, value: f64 },
    #[error("indices (k, l) = ({k}, {l}) are invalid for {name}: {reason}")]
    Indices {
        name: String,
        k: usize,
        l: usize,
        reason: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Euclidean,
    Sphere { v: Vec<f64> },
    Hyperbolic { v: Vec<f64> },
    ProductLineSphere,
    Example4,
    Warped(WarpedProductSpec),
}

/// Quantity with a known value on a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    ScalarCurvature,
    /// σ_k at the point.
    Sigma(usize),
    /// `sup |Ric - c g|`.
    RicciDefect(f64),
    /// `sup |A - c g|`.
    SchoutenDefect(f64),
    /// `sup |L_X g|` for the bundled vector field.
    KillingDefect,
    /// `sup |Ric_formula - Ric_chart|` for warped products.
    WarpedFormulaDefect,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::ScalarCurvature => write!(f, "R"),
            Quantity::Sigma(k) => write!(f, "sigma_{k}"),
            Quantity::RicciDefect(c) => write!(f, "|Ric - ({c}) g|"),
            Quantity::SchoutenDefect(c) => write!(f, "|A - ({c}) g|"),
            Quantity::KillingDefect => write!(f, "|L_X g|"),
            Quantity::WarpedFormulaDefect => write!(f, "|Ric_formula - Ric|"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Golden {
    pub quantity: Quantity,
    pub expected: f64,
    /// Absolute tolerance scaled by `max(1, |expected|)`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenOutcome {
    pub golden: Golden,
    pub measured: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifold {
    pub name: String,
    pub kind: ModelKind,
    pub chart: MetricChart,
    pub potential: Option<Expr>,
    pub vector_field: Option<Vec<Expr>>,
    pub lambda: Option<Expr>,
    pub k: usize,
    pub l: usize,
    pub golden: Vec<Golden>,
}

/// `dt² + ξ(t)² g_F` with `t = x1` and fiber coordinates shifted by one.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProductSpec {
    pub fiber: Box<ModelManifold>,
    /// Expression in `x1`.
    pub xi: Expr,
    pub interval: (f64, f64),
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// σ_k of the round unit sphere: `C(n,k)/2^k`.
pub fn sphere_sigma(n: usize, k: usize) -> f64 {
    binomial(n, k) / 2f64.powi(k as i32)
}

/// σ_k of hyperbolic space: `(-1)^k C(n,k)/2^k`.
pub fn hyperbolic_sigma(n: usize, k: usize) -> f64 {
    (-1f64).powi(k as i32) * sphere_sigma(n, k)
}

/// σ_k of an Einstein metric with `Ric = -g`: `(-1)^k C(n,k)/(2^k (n-1)^k)`.
pub fn einstein_minus_one_sigma(n: usize, k: usize) -> f64 {
    hyperbolic_sigma(n, k) / ((n - 1) as f64).powi(k as i32)
}

fn diagonal(n: usize, entries: impl Fn(usize) -> Expr) -> Vec<Vec<Expr>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { entries(i) } else { Expr::num(0.0) })
                .collect()
        })
        .collect()
}

fn radius_squared(n: usize, offset: usize) -> Expr {
    (0..n)
        .map(|i| Expr::var(i + offset).pow(Expr::num(2.0)))
        .reduce(|a, b| a + b)
        .expect("n >= 1")
}

fn stereographic_factor(n: usize, offset: usize) -> Expr {
    Expr::num(4.0) / (Expr::num(1.0) + radius_squared(n, offset)).pow(Expr::num(2.0))
}

fn ball_factor(n: usize) -> Expr {
    Expr::num(4.0) / (Expr::num(1.0) - radius_squared(n, 0)).pow(Expr::num(2.0))
}

/// `⟨y(x), v⟩` for the inverse stereographic map, `v ∈ R^{n+1}`.
pub fn sphere_height(n: usize, v: &[f64]) -> Expr {
    let r2 = radius_squared(n, 0);
    let denom = Expr::num(1.0) + r2.clone();
    let mut h = Expr::num(v[n]) * (r2 - Expr::num(1.0));
    for (i, &vi) in v.iter().enumerate().take(n) {
        if vi != 0.0 {
            h = h + Expr::num(2.0 * vi) * Expr::var(i);
        }
    }
    h / denom
}

/// `⟨y(x), v⟩_0` for the ball-to-hyperboloid map, `v ∈ R^{n,1}`.
pub fn hyperbolic_height(n: usize, v: &[f64]) -> Expr {
    let r2 = radius_squared(n, 0);
    let denom = Expr::num(1.0) - r2.clone();
    let mut h = Expr::num(-v[0]) * (Expr::num(1.0) + r2);
    for (i, &vi) in v.iter().enumerate().skip(1) {
        if vi != 0.0 {
            h = h + Expr::num(2.0 * vi) * Expr::var(i - 1);
        }
    }
    h / denom
}

fn need(name: &'static str, n: usize, min: usize) -> Result<(), ModelError> {
    if n < min {
        return Err(ModelError::Dimension { name, n, min });
    }
    if n > crate::taylor::MAX_DIM {
        return Err(GeometryError::Dimension(n).into());
    }
    Ok(())
}

fn space_form_golden(n: usize, curvature: f64, sigma: impl Fn(usize) -> f64) -> Vec<Golden> {
    let nf = n as f64;
    let mut g = vec![
        Golden {
            quantity: Quantity::ScalarCurvature,
            expected: curvature * nf * (nf - 1.0),
            tolerance: 1e-8,
        },
        Golden {
            quantity: Quantity::RicciDefect(curvature * (nf - 1.0)),
            expected: 0.0,
            tolerance: 1e-8,
        },
    ];
    if n >= 3 {
        g.push(Golden {
            quantity: Quantity::SchoutenDefect(0.5 * curvature),
            expected: 0.0,
            tolerance: 1e-8,
        });
        g.extend((1..=n).map(|k| Golden {
            quantity: Quantity::Sigma(k),
            expected: sigma(k),
            tolerance: 1e-8,
        }));
    }
    g
}

pub fn euclidean(n: usize) -> Result<ModelManifold, ModelError> {
    need("euclidean", n, 2)?;
    let chart = MetricChart::new(diagonal(n, |_| Expr::num(1.0)), Domain::cube(n, -1.0, 1.0))?;
    Ok(ModelManifold {
        name: format!("euclidean:{n}"),
        kind: ModelKind::Euclidean,
        chart,
        potential: None,
        vector_field: None,
        lambda: None,
        k: 1,
        l: 1,
        golden: space_form_golden(n, 0.0, |_| 0.0),
    })
}

/// Round sphere with `f = h_v` and `λ = h_v + log(σ_k/σ_l)`, `v = e_1`.
pub fn sphere(n: usize) -> Result<ModelManifold, ModelError> {
    let mut v = vec![0.0; n + 1];
    v[0] = 1.0;
    sphere_with(n, &v, 2, 1)
}

pub fn sphere_with(n: usize, v: &[f64], k: usize, l: usize) -> Result<ModelManifold, ModelError> {
    need("sphere", n, 2)?;
    assert_eq!(v.len(), n + 1, "height vector lives in R^(n+1)");
    let chart = MetricChart::new(
        diagonal(n, |_| stereographic_factor(n, 0)),
        Domain::cube(n, -2.0, 2.0),
    )?;
    let h = sphere_height(n, v);
    let mut m = ModelManifold {
        name: format!("sphere:{n}"),
        kind: ModelKind::Sphere { v: v.to_vec() },
        chart,
        potential: Some(h),
        vector_field: None,
        lambda: None,
        k,
        l,
        golden: space_form_golden(n, 1.0, |k| sphere_sigma(n, k)),
    };
    if n >= 3 {
        m = m.with_indices(k, l)?;
    }
    Ok(m)
}

/// Poincaré ball with `f = h_v`, `λ = -h_v + log(σ_k/σ_l)`, `v = (cosh ½, sinh ½, 0, …)`.
pub fn hyperbolic(n: usize) -> Result<ModelManifold, ModelError> {
    need("hyperbolic", n, 2)?;
    let mut v = vec![0.0; n + 1];
    v[0] = 0.5f64.cosh();
    v[1] = 0.5f64.sinh();
    hyperbolic_with(n, &v, 3.min(n), 1)
}

pub fn hyperbolic_with(
    n: usize,
    v: &[f64],
    k: usize,
    l: usize,
) -> Result<ModelManifold, ModelError> {
    need("hyperbolic", n, 2)?;
    assert_eq!(v.len(), n + 1, "height vector lives in R^(n,1)");
    let a = 0.8 / (n as f64).sqrt();
    let chart = MetricChart::new(diagonal(n, |_| ball_factor(n)), Domain::cube(n, -a, a))?;
    let mut m = ModelManifold {
        name: format!("hyperbolic:{n}"),
        kind: ModelKind::Hyperbolic { v: v.to_vec() },
        chart,
        potential: Some(hyperbolic_height(n, v)),
        vector_field: None,
        lambda: None,
        k,
        l,
        golden: space_form_golden(n, -1.0, |k| hyperbolic_sigma(n, k)),
    };
    if n >= 3 {
        m = m.with_indices(k, l)?;
    }
    Ok(m)
}

/// `R × S^n` with `f = 0.7 t + 0.3`, `k = l = 1`, `λ = 0`. Total dimension `n + 1`.
pub fn product_line_sphere(n: usize) -> Result<ModelManifold, ModelError> {
    need("product_line_sphere", n, 2)?;
    let dim = n + 1;
    let s = stereographic_factor(n, 1);
    let rows = diagonal(dim, |i| if i == 0 { Expr::num(1.0) } else { s.clone() });
    let mut intervals = vec![(-2.0, 2.0); dim];
    intervals[0] = (-1.0, 1.0);
    let chart = MetricChart::new(rows, Domain::new(intervals, vec![false; dim])?)?;
    let nf = n as f64;
    Ok(ModelManifold {
        name: format!("product_line_sphere:{n}"),
        kind: ModelKind::ProductLineSphere,
        chart,
        potential: Some(Expr::num(0.7) * Expr::var(0) + Expr::num(0.3)),
        vector_field: None,
        lambda: Some(Expr::num(0.0)),
        k: 1,
        l: 1,
        golden: vec![
            Golden {
                quantity: Quantity::ScalarCurvature,
                expected: nf * (nf - 1.0),
                tolerance: 1e-8,
            },
            // -1/2 along the line, +1/2 on each sphere direction
            Golden {
                quantity: Quantity::Sigma(1),
                expected: (nf - 1.0) / 2.0,
                tolerance: 1e-8,
            },
        ],
    })
}

/// Diagonal metric `e^{2u_i}` with `u_i = log cosh(x_{τ(i)})` for even `i`,
/// `τ` the n-cycle, and the Killing field `X = (0, 1, 0, 1, …)`.
///
/// Even `n` gives a product of hyperbolic planes (`Ric = -g`); odd `n`
/// leaves `x1` as a flat factor, so the metric is not Einstein there.
pub fn example4(n: usize) -> Result<ModelManifold, ModelError> {
    need("example4", n, 4)?;
    let rows = diagonal(n, |i| {
        let one_based = i + 1;
        if one_based % 2 == 0 {
            let tau = one_based % n; // zero-based index of x_{τ(i)}
            let u = Expr::call(Func::Log, Expr::call(Func::Cosh, Expr::var(tau)));
            Expr::call(Func::Exp, Expr::num(2.0) * u)
        } else {
            Expr::num(1.0)
        }
    });
    let chart = MetricChart::new(rows, Domain::cube(n, -1.5, 1.5))?;
    let field = (0..n)
        .map(|i| Expr::num(if i % 2 == 1 { 1.0 } else { 0.0 }))
        .collect();
    let mut golden = vec![Golden {
        quantity: Quantity::KillingDefect,
        expected: 0.0,
        tolerance: 1e-8,
    }];
    if n % 2 == 0 {
        let nf = n as f64;
        golden.push(Golden {
            quantity: Quantity::ScalarCurvature,
            expected: -nf,
            tolerance: 1e-8,
        });
        golden.push(Golden {
            quantity: Quantity::RicciDefect(-1.0),
            expected: 0.0,
            tolerance: 1e-8,
        });
        golden.push(Golden {
            quantity: Quantity::SchoutenDefect(-1.0 / (2.0 * (nf - 1.0))),
            expected: 0.0,
            tolerance: 1e-8,
        });
        golden.extend((1..=n).map(|k| Golden {
            quantity: Quantity::Sigma(k),
            expected: einstein_minus_one_sigma(n, k),
            tolerance: 1e-8,
        }));
    } else {
        golden.push(Golden {
            quantity: Quantity::ScalarCurvature,
            expected: -((n - 1) as f64),
            tolerance: 1e-8,
        });
    }
    let m = ModelManifold {
        name: format!("example4:{n}"),
        kind: ModelKind::Example4,
        chart,
        potential: None,
        vector_field: Some(field),
        lambda: None,
        k: 0,
        l: 0,
        golden,
    };
    // First same-parity pair l < k satisfying the cone condition; (3, 1) for even n.
    let pack = curvature_at(&m.chart, &vec![0.0; n])?;
    let sigma = sigma_profile_unchecked(&pack, 1, 1)?.sigma;
    let (k, l) = (2..=n)
        .flat_map(|k| (1..k).map(move |l| (k, l)))
        .find(|&(k, l)| (k - l) % 2 == 0 && sigma[k] * sigma[l] > 0.0)
        .ok_or_else(|| ModelError::Indices {
            name: m.name.clone(),
            k: 0,
            l: 0,
            reason: "no admissible pair".into(),
        })?;
    m.with_indices(k, l)
}

/// Warped product over the `fiber` model with warping `ξ(x1)`.
pub fn warped(xi: Expr, fiber: ModelManifold) -> Result<ModelManifold, ModelError> {
    warped_on(xi, fiber, (0.25, 2.0))
}

pub fn warped_on(
    xi: Expr,
    fiber: ModelManifold,
    interval: (f64, f64),
) -> Result<ModelManifold, ModelError> {
    if xi.max_var().is_some_and(|v| v > 0) {
        return Err(ModelError::WarpingVariables);
    }
    let m = fiber.chart.dim();
    need("warped", m + 1, 3)?;
    for i in 0..=16 {
        let t = interval.0 + (interval.1 - interval.0) * i as f64 / 16.0;
        let value = xi.eval(&[t]).map_err(GeometryError::from)?;
        if !(value > 0.0) {
            return Err(ModelError::NonPositiveWarping { t, value });
        }
    }
    let xi2 = xi.clone().pow(Expr::num(2.0));
    let rows = (0..=m)
        .map(|i| {
            (0..=m)
                .map(|j| match (i, j) {
                    (0, 0) => Expr::num(1.0),
                    (0, _) | (_, 0) => Expr::num(0.0),
                    _ => xi2.clone() * fiber.chart.component(i - 1, j - 1).shift_vars(1),
                })
                .collect()
        })
        .collect();
    let mut intervals = vec![interval];
    intervals.extend_from_slice(fiber.chart.domain().intervals());
    let mut periodic = vec![false];
    periodic.extend_from_slice(fiber.chart.domain().periodic());
    let chart = MetricChart::new(rows, Domain::new(intervals, periodic)?)?;
    let name = format!("warped:{}:{}:{}", fiber_kind_name(&fiber), m, xi);
    Ok(ModelManifold {
        name,
        kind: ModelKind::Warped(WarpedProductSpec {
            fiber: Box::new(fiber),
            xi,
            interval,
        }),
        chart,
        potential: None,
        vector_field: None,
        lambda: None,
        k: 1,
        l: 1,
        golden: vec![Golden {
            quantity: Quantity::WarpedFormulaDefect,
            expected: 0.0,
            tolerance: 1e-7,
        }],
    })
}

fn fiber_kind_name(fiber: &ModelManifold) -> &'static str {
    match fiber.kind {
        ModelKind::Euclidean => "euclidean",
        ModelKind::Sphere { .. } => "sphere",
        ModelKind::Hyperbolic { .. } => "hyperbolic",
        ModelKind::ProductLineSphere => "product_line_sphere",
        ModelKind::Example4 => "example4",
        ModelKind::Warped(_) => "warped",
    }
}

/// Ricci tensor of a warped product assembled from the fiber's Ricci tensor:
/// `Ric(∂t,∂t) = -(n-1) ξ''/ξ`, mixed terms zero, and
/// `Ric|_F = Ric_F - (ξ ξ'' + (n-2) ξ'²) g_F`.
pub fn warped_ricci_formula(
    spec: &WarpedProductSpec,
    x: &[f64],
) -> Result<TensorValue, ModelError> {
    let m = spec.fiber.chart.dim();
    let n = m + 1;
    let t = x[0];
    let s = spec
        .xi
        .eval_taylor(&[t], &[0], 2)
        .map_err(GeometryError::from)?;
    let (xi, d1, d2) = (s.value(), s.partial(&[0]), s.partial(&[0, 0]));
    if !(xi > 0.0) {
        return Err(ModelError::NonPositiveWarping { t, value: xi });
    }
    let fiber = curvature_at(&spec.fiber.chart, &x[1..])?;
    let nf = n as f64;
    let mut out = TensorValue::covariant(n, 2, vec![0.0; n * n]);
    out.set(&[0, 0], -(nf - 1.0) * d2 / xi);
    let c = xi * d2 + (nf - 2.0) * d1 * d1;
    for i in 0..m {
        for j in 0..m {
            out.set(
                &[i + 1, j + 1],
                fiber.ricci.get(&[i, j]) - c * fiber.metric.get(&[i, j]),
            );
        }
    }
    Ok(out)
}

impl ModelManifold {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Replaces `(k, l)` and rebuilds `λ` where the model defines it.
    pub fn with_indices(mut self, k: usize, l: usize) -> Result<Self, ModelError> {
        let n = self.dim();
        let bad = |reason: &str| ModelError::Indices {
            name: self.name.clone(),
            k,
            l,
            reason: reason.into(),
        };
        if k > n || l > n {
            return Err(bad("index exceeds dimension"));
        }
        let quotient = |sk: f64, sl: f64| -> Result<f64, ModelError> {
            if sk * sl > 0.0 {
                Ok(sk.abs().ln() - sl.abs().ln())
            } else {
                Err(bad(&format!(
                    "cone condition fails: σ_k = {sk}, σ_l = {sl}"
                )))
            }
        };
        self.lambda = match &self.kind {
            ModelKind::Sphere { .. } => {
                let c = quotient(sphere_sigma(n, k), sphere_sigma(n, l))?;
                Some(self.potential.clone().expect("sphere potential") + Expr::num(c))
            }
            ModelKind::Hyperbolic { .. } => {
                let c = quotient(hyperbolic_sigma(n, k), hyperbolic_sigma(n, l))?;
                Some(Expr::num(c) - self.potential.clone().expect("hyperbolic potential"))
            }
            ModelKind::Example4 => {
                let pack = curvature_at(&self.chart, &vec![0.0; n])?;
                let sigma = sigma_profile_unchecked(&pack, 1, 1)?.sigma;
                Some(Expr::num(quotient(sigma[k], sigma[l])?))
            }
            ModelKind::ProductLineSphere if k != l => {
                return Err(bad("the product model is defined for k = l"))
            }
            _ => self.lambda.clone(),
        };
        self.k = k;
        self.l = l;
        Ok(self)
    }

    /// Whether the model carries a potential or vector field together with λ.
    pub fn has_soliton_data(&self) -> bool {
        (self.potential.is_some() || self.vector_field.is_some()) && self.lambda.is_some()
    }

    /// Evaluates every golden entry at `x`.
    pub fn check_golden(&self, x: &[f64]) -> Result<Vec<GoldenOutcome>, ModelError> {
        let pack = curvature_at(&self.chart, x)?;
        let sigma = if self.dim() >= 3 {
            Some(sigma_profile_unchecked(&pack, 1, 1)?.sigma)
        } else {
            None
        };
        self.golden
            .iter()
            .map(|g| {
                let measured = match g.quantity {
                    Quantity::ScalarCurvature => pack.scalar,
                    Quantity::Sigma(k) => sigma.as_ref().map_or(f64::NAN, |s| s[k]),
                    Quantity::RicciDefect(c) => pack.ricci_deviation(c),
                    Quantity::SchoutenDefect(c) => pack.schouten.as_ref().map_or(f64::NAN, |a| {
                        a.sub(&pack.metric.scale(c)).expect("same shape").sup_norm()
                    }),
                    Quantity::KillingDefect => match &self.vector_field {
                        Some(field) => crate::curvature::vector_derivatives(&self.chart, x, field)?
                            .lie_derivative
                            .sup_norm(),
                        None => f64::NAN,
                    },
                    Quantity::WarpedFormulaDefect => match &self.kind {
                        ModelKind::Warped(spec) => warped_ricci_formula(spec, x)?
                            .sub(&pack.ricci)
                            .expect("same shape")
                            .sup_norm(),
                        _ => f64::NAN,
                    },
                };
                let passed =
                    (measured - g.expected).abs() <= g.tolerance * g.expected.abs().max(1.0);
                Ok(GoldenOutcome {
                    golden: g.clone(),
                    measured,
                    passed,
                })
            })
            .collect()
    }
}

fn parse_dim(name: &str, s: &str) -> Result<usize, ModelError> {
    s.trim()
        .parse()
        .map_err(|_| ModelError::UnknownName(name.to_string()))
}

/// Resolves `name:n`, `name(n)` or `warped:<fiber>:<m>:<ξ in x1>`.
pub fn builtin(name: &str) -> Result<ModelManifold, ModelError> {
    let name = name.trim();
    if let Some(rest) = name.strip_prefix("warped:") {
        let mut parts = rest.splitn(3, ':');
        let (fiber, m, xi) = match (parts.next(), parts.next(), parts.next()) {
            (Some(f), Some(m), Some(xi)) => (f, m, xi),
            _ => return Err(ModelError::UnknownName(name.to_string())),
        };
        if fiber.starts_with("warped") {
            return Err(ModelError::UnknownName(name.to_string()));
        }
        let fiber = builtin(&format!("{fiber}:{m}"))?;
        return warped(parse(xi)?, fiber);
    }
    let (base, dim) = if let Some((b, d)) = name.split_once(':') {
        (b, d)
    } else if let (Some(open), true) = (name.find('('), name.ends_with(')')) {
        (&name[..open], &name[open + 1..name.len() - 1])
    } else {
        return Err(ModelError::UnknownName(name.to_string()));
    };
    let n = parse_dim(name, dim)?;
    if n > crate::taylor::MAX_DIM {
        return Err(GeometryError::Dimension(n).into());
    }
    match base.trim() {
        "euclidean" => euclidean(n),
        "sphere" => sphere(n),
        "hyperbolic" => hyperbolic(n),
        "product_line_sphere" => product_line_sphere(n),
        "example4" => example4(n),
        _ => Err(ModelError::UnknownName(name.to_string())),
    }
}
