//! Residuals of the quotient (almost) Yamabe soliton equation
//! `½ L_X g = (log σ_k/σ_l - λ) g`, the structural identities of gradient
//! solitons and soliton-type classification.
//!
//! Tensor residuals are measured in the metric norm, so `‖g‖ = √n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::curvature::{Domain, GeometryError, MetricChart, MetricJet};
use crate::expr::{EvalError, Expr};
use crate::models::ModelManifold;
use crate::sigma::{log_quotient_series, SigmaError};
use crate::taylor::TaylorScalar;

type Ts = TaylorScalar;

/// Default threshold for calling a soliton trivial.
pub const TRIVIAL_TOLERANCE: f64 = 1e-7;
/// Default probe seed.
pub const DEFAULT_SEED: u64 = 0x5eed_0f_51;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    #[error("cone condition fails at {point:?}: σ_{k} = {sigma_k}, σ_{l} = {sigma_l}")]
    Cone {
        point: Vec<f64>,
        k: usize,
        l: usize,
        sigma_k: f64,
        sigma_l: f64,
    },
    #[error("cannot evaluate soliton data at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("vector field has {found} components, chart has dimension {expected}")]
    FieldDimension { expected: usize, found: usize },
    #[error("operation needs a gradient soliton")]
    NotGradient,
    #[error("scalar curvature is not constant on the probes (spread {spread:e})")]
    NonConstantScalar { spread: f64 },
    #[error("empty probe set")]
    NoProbes,
    #[error("model '{0}' carries no soliton data")]
    NoSolitonData(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sigma(SigmaError),
}

impl From<SigmaError> for SolitonError {
    fn from(e: SigmaError) -> Self {
        match e {
            SigmaError::Cone {
                k,
                l,
                sigma_k,
                sigma_l,
                point,
            } => SolitonError::Cone {
                point,
                k,
                l,
                sigma_k,
                sigma_l,
            },
            SigmaError::Geometry(g) => SolitonError::Geometry(g),
            other => SolitonError::Sigma(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolitonField {
    /// `X = ∇f`.
    Gradient(Expr),
    /// Components `X^i`.
    Vector(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec {
    pub chart: MetricChart,
    pub field: SolitonField,
    pub lambda: Expr,
    pub k: usize,
    pub l: usize,
}

impl SolitonSpec {
    pub fn new(
        chart: MetricChart,
        field: SolitonField,
        lambda: Expr,
        k: usize,
        l: usize,
    ) -> Result<Self, SolitonError> {
        if let SolitonField::Vector(x) = &field {
            if x.len() != chart.dim() {
                return Err(SolitonError::FieldDimension {
                    expected: chart.dim(),
                    found: x.len(),
                });
            }
        }
        Ok(SolitonSpec {
            chart,
            field,
            lambda,
            k,
            l,
        })
    }

    /// Soliton data bundled with a model; the vector field wins over the potential.
    pub fn from_model(model: &ModelManifold) -> Result<Self, SolitonError> {
        let lambda = model
            .lambda
            .clone()
            .ok_or_else(|| SolitonError::NoSolitonData(model.name.clone()))?;
        let field = match (&model.vector_field, &model.potential) {
            (Some(x), _) => SolitonField::Vector(x.clone()),
            (None, Some(f)) => SolitonField::Gradient(f.clone()),
            (None, None) => return Err(SolitonError::NoSolitonData(model.name.clone())),
        };
        SolitonSpec::new(model.chart.clone(), field, lambda, model.k, model.l)
    }

    pub fn with_lambda(&self, lambda: Expr) -> Self {
        SolitonSpec {
            lambda,
            ..self.clone()
        }
    }

    /// `∇f` written out as component expressions, available when the metric
    /// is diagonal (`X^i = ∂_i f / g_ii`).
    pub fn gradient_as_vector_field(&self) -> Option<SolitonSpec> {
        let SolitonField::Gradient(f) = &self.field else {
            return None;
        };
        let n = self.chart.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.chart.component(i, j).is_zero_literal() {
                    return None;
                }
            }
        }
        let x = (0..n)
            .map(|i| f.derivative(i) / self.chart.component(i, i).clone())
            .collect();
        Some(SolitonSpec {
            field: SolitonField::Vector(x),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolitonType {
    Expanding,
    Steady,
    Shrinking,
    Indefinite,
}

impl std::fmt::Display for SolitonType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolitonType::Expanding => "expanding",
            SolitonType::Steady => "steady",
            SolitonType::Shrinking => "shrinking",
            SolitonType::Indefinite => "indefinite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub kind: SolitonType,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Steady if `|λ| <= tol` everywhere, expanding if `λ < -tol`, shrinking if
/// `λ > tol`, indefinite otherwise.
pub fn classify_values(lambda: &[f64], tol: f64) -> Classification {
    let lambda_min = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kind = if lambda_min >= -tol && lambda_max <= tol {
        SolitonType::Steady
    } else if lambda_max < -tol {
        SolitonType::Expanding
    } else if lambda_min > tol {
        SolitonType::Shrinking
    } else {
        SolitonType::Indefinite
    };
    Classification {
        kind,
        lambda_min,
        lambda_max,
    }
}

/// Classification by the values of `λ` at the probes.
pub fn classify(
    spec: &SolitonSpec,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<Classification, SolitonError> {
    if probes.is_empty() {
        return Err(SolitonError::NoProbes);
    }
    let values = probes
        .iter()
        .map(|x| {
            let x = spec.chart.domain().normalize(x)?;
            spec.lambda.eval(&x).map_err(|source| SolitonError::Eval {
                point: x.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(classify_values(&values, tol))
}

/// Sup and mean over probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub sup: f64,
    pub mean: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64>) -> Stat {
        let (mut sup, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        for v in values {
            sup = sup.max(v);
            sum += v;
            count += 1;
        }
        Stat {
            sup,
            mean: if count == 0 { 0.0 } else { sum / count as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub probes: usize,
    /// `‖½ L_X g - ψ g‖` with `ψ = log σ_k/σ_l - λ`.
    pub residual: Stat,
    /// `‖L_X g‖`.
    pub lie: Stat,
    /// `|ψ|`.
    pub psi: Stat,
    pub tolerance: f64,
    pub trivial: bool,
    pub classification: Classification,
}

impl ResidualReport {
    pub fn passes(&self) -> bool {
        self.residual.sup < self.tolerance
    }
}

/// Per-probe values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub residual: f64,
    pub lie: f64,
    pub psi: f64,
    pub lambda: f64,
}

fn eval_err(x: &[f64]) -> impl Fn(EvalError) -> SolitonError + '_ {
    move |source| SolitonError::Eval {
        point: x.to_vec(),
        source,
    }
}

fn expand(jet: &MetricJet, e: &Expr) -> Result<Ts, SolitonError> {
    e.eval_jet(jet.point(), jet.order())
        .map_err(eval_err(jet.point()))
}

/// `‖T‖_g` for a covariant 2-tensor given by point values.
fn metric_norm2(jet: &MetricJet, t: &[f64]) -> f64 {
    let n = jet.dim();
    let ginv: Vec<f64> = jet.inverse_metric().iter().map(Ts::value).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    acc += ginv[i * n + a] * ginv[j * n + b] * t[i * n + j] * t[a * n + b];
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// `½ L_X g` at the jet's point (the Hessian of `f` in the gradient case).
fn half_lie(spec: &SolitonSpec, jet: &MetricJet) -> Result<Vec<f64>, SolitonError> {
    Ok(match &spec.field {
        SolitonField::Gradient(f) => jet
            .hessian(&expand(jet, f)?)
            .iter()
            .map(Ts::value)
            .collect(),
        SolitonField::Vector(x) => {
            let xs = x
                .iter()
                .map(|c| expand(jet, c))
                .collect::<Result<Vec<_>, _>>()?;
            jet.lie_derivative_metric(&xs)
                .iter()
                .map(|s| 0.5 * s.value())
                .collect()
        }
    })
}

pub fn point_residual(spec: &SolitonSpec, x: &[f64]) -> Result<PointResidual, SolitonError> {
    let jet = spec.chart.jet(x, 2)?;
    let logq = log_quotient_series(&jet, spec.k, spec.l)?.value();
    let lambda = spec
        .lambda
        .eval(jet.point())
        .map_err(eval_err(jet.point()))?;
    let psi = logq - lambda;
    let half = half_lie(spec, &jet)?;
    let g: Vec<f64> = jet.metric().iter().map(Ts::value).collect();
    let res: Vec<f64> = half.iter().zip(&g).map(|(h, g)| h - psi * g).collect();
    let lie: Vec<f64> = half.iter().map(|h| 2.0 * h).collect();
    Ok(PointResidual {
        residual: metric_norm2(&jet, &res),
        lie: metric_norm2(&jet, &lie),
        psi: psi.abs(),
        lambda,
    })
}

fn map_probes<T: Send>(
    probes: &[Vec<f64>],
    f: impl Fn(&[f64]) -> Result<T, SolitonError> + Sync,
) -> Result<Vec<T>, SolitonError> {
    if probes.is_empty() {
        return Err(SolitonError::NoProbes);
    }
    probes
        .par_iter()
        .map(|x| f(x))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn soliton_residual(
    spec: &SolitonSpec,
    probes: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport, SolitonError> {
    let points = map_probes(probes, |x| point_residual(spec, x))?;
    let residual = Stat::of(points.iter().map(|p| p.residual));
    let lie = Stat::of(points.iter().map(|p| p.lie));
    let psi = Stat::of(points.iter().map(|p| p.psi));
    let lambdas: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    Ok(ResidualReport {
        probes: points.len(),
        residual,
        lie,
        psi,
        tolerance,
        trivial: lie.sup < tolerance && psi.sup < tolerance,
        classification: classify_values(&lambdas, tolerance),
    })
}

/// Sup over probes of the three structural identities of a gradient soliton:
/// (a) `Δf - nψ`, (b) `(n-1)∇ψ + Ric(∇f)`, (c) `(n-1)Δψ + ½⟨∇R, ∇f⟩ + ψR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaResiduals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn lemma_point(spec: &SolitonSpec, x: &[f64]) -> Result<LemmaResiduals, SolitonError> {
    let SolitonField::Gradient(f) = &spec.field else {
        return Err(SolitonError::NotGradient);
    };
    let jet = spec.chart.jet(x, 4)?;
    let n = jet.dim();
    let nf = n as f64;
    let f = expand(&jet, f)?;
    let psi = log_quotient_series(&jet, spec.k, spec.l)? - expand(&jet, &spec.lambda)?.truncate(2);

    let a = jet.laplacian(&f).value() - nf * psi.value();

    let grad_f = jet.gradient(&f);
    let ric = jet.ricci();
    let mut b = 0.0f64;
    for j in 0..n {
        let mut v = (nf - 1.0) * psi.partial(&[j]);
        for m in 0..n {
            v += ric[j * n + m].value() * grad_f[m].value();
        }
        b = b.max(v.abs());
    }

    let r = jet.scalar_curvature();
    let grad_r = jet.gradient(r);
    let grad_f1: Vec<Ts> = grad_f.iter().map(|s| s.truncate(1)).collect();
    let c = (nf - 1.0) * jet.laplacian(&psi).value()
        + 0.5 * jet.inner(&grad_r, &grad_f1).value()
        + psi.value() * r.value();
    Ok(LemmaResiduals {
        a: a.abs(),
        b,
        c: c.abs(),
    })
}

pub fn lemma_structural_check(
    spec: &SolitonSpec,
    probes: &[Vec<f64>],
) -> Result<LemmaResiduals, SolitonError> {
    let points = map_probes(probes, |x| lemma_point(spec, x))?;
    Ok(LemmaResiduals {
        a: Stat::of(points.iter().map(|p| p.a)).sup,
        b: Stat::of(points.iter().map(|p| p.b)).sup,
        c: Stat::of(points.iter().map(|p| p.c)).sup,
    })
}

/// Sup over probes of `‖∇²ψ + R/(n(n-1)) ψ g‖`, `ψ = log σ_k/σ_l - λ`.
/// Fails unless `R` is constant on the probes to within `r_tolerance`.
pub fn obata_check(
    spec: &SolitonSpec,
    probes: &[Vec<f64>],
    r_tolerance: f64,
) -> Result<f64, SolitonError> {
    if !matches!(spec.field, SolitonField::Gradient(_)) {
        return Err(SolitonError::NotGradient);
    }
    let points = map_probes(probes, |x| {
        let jet = spec.chart.jet(x, 4)?;
        let n = jet.dim() as f64;
        let psi =
            log_quotient_series(&jet, spec.k, spec.l)? - expand(&jet, &spec.lambda)?.truncate(2);
        let hess = jet.hessian(&psi);
        let r = jet.scalar_curvature().value();
        let c = r / (n * (n - 1.0)) * psi.value();
        let t: Vec<f64> = hess
            .iter()
            .zip(jet.metric())
            .map(|(h, g)| h.value() + c * g.value())
            .collect();
        Ok((r, metric_norm2(&jet, &t)))
    })?;
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let spread = points
        .iter()
        .map(|p| (p.0 - mean).abs())
        .fold(0.0, f64::max);
    if spread > r_tolerance * mean.abs().max(1.0) {
        return Err(SolitonError::NonConstantScalar { spread });
    }
    Ok(points.iter().map(|p| p.1).fold(0.0, f64::max))
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    let scale = inv;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv *= scale;
    }
    out
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Halton points with a seeded Cranley–Patterson rotation, mapped into the
/// middle 96% of each axis of the domain.
pub fn probe_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..domain.dim()).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            domain
                .intervals()
                .iter()
                .enumerate()
                .map(|(axis, &(lo, hi))| {
                    let u = (radical_inverse(i, PRIMES[axis]) + shift[axis]).fract();
                    lo + (hi - lo) * (0.02 + 0.96 * u)
                })
                .collect()
        })
        .collect()
}
