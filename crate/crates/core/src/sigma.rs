//! σ_k-curvatures of the Schouten endomorphism `E = g^{-1} A`, Newton
//! tensors and the conformal transformation laws of Schouten and Ricci.
//!
//! Point values come from the eigenvalues of `E` (Jacobi on the orthonormal
//! frame representative). Series values, used whenever σ_k has to be
//! differentiated, come from power traces of `E` and Newton's identities.

use thiserror::Error;

use crate::curvature::CurvaturePack;
use crate::curvature::{raise_first, GeometryError, MetricChart, MetricJet};
use crate::expr::Expr;
use crate::taylor::TaylorScalar;
use crate::tensor::{
    elementary_symmetric_all, sym_eigenvalues, SymmetricSpectrum, TensorError, TensorValue,
    Variance,
};

type Ts = TaylorScalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigmaError {
    #[error("σ_k curvature needs dimension >= 3, got {0}")]
    Dimension(usize),
    #[error("index {k} out of range for dimension {n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("cone condition fails at {point:?}: σ_{k} = {sigma_k}, σ_{l} = {sigma_l}")]
    Cone {
        k: usize,
        l: usize,
        sigma_k: f64,
        sigma_l: f64,
        point: Vec<f64>,
    },
    #[error("conformal factor {value} is not positive at {point:?}")]
    NonPositiveFactor { value: f64, point: Vec<f64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// All σ_j at a point together with the quotient data for `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaProfile {
    pub n: usize,
    /// Ascending eigenvalues of `g^{-1} A`.
    pub eigenvalues: Vec<f64>,
    /// `sigma[j] = σ_j`, `j = 0..=n`.
    pub sigma: Vec<f64>,
    pub k: usize,
    pub l: usize,
    /// `σ_k σ_l > 0`.
    pub cone: bool,
    /// `log σ_k - log σ_l`, present when the cone condition holds.
    pub log_quotient: Option<f64>,
}

impl SigmaProfile {
    pub fn sigma(&self, j: usize) -> f64 {
        self.sigma[j]
    }
}

fn check_indices(n: usize, k: usize, l: usize) -> Result<(), SigmaError> {
    if n < 3 {
        return Err(SigmaError::Dimension(n));
    }
    for j in [k, l] {
        if j > n {
            return Err(SigmaError::IndexOutOfRange { k: j, n });
        }
    }
    Ok(())
}

fn log_quotient(sk: f64, sl: f64) -> f64 {
    sk.abs().ln() - sl.abs().ln()
}

/// Eigenvalues of `g^{-1} A` and every σ_j at the pack's point.
pub fn sigma_values(pack: &CurvaturePack) -> Result<(SymmetricSpectrum, Vec<f64>), SigmaError> {
    let n = pack.dim();
    if n < 3 {
        return Err(SigmaError::Dimension(n));
    }
    let e = pack.schouten_endomorphism()?;
    let spectrum = sym_eigenvalues(&e, &pack.metric)?;
    let sigma = elementary_symmetric_all(spectrum.eigenvalues());
    Ok((spectrum, sigma))
}

/// σ-profile without failing on a cone violation (the flag records it).
pub fn sigma_profile_unchecked(
    pack: &CurvaturePack,
    k: usize,
    l: usize,
) -> Result<SigmaProfile, SigmaError> {
    let n = pack.dim();
    check_indices(n, k, l)?;
    let (spectrum, sigma) = sigma_values(pack)?;
    let cone = sigma[k] * sigma[l] > 0.0;
    Ok(SigmaProfile {
        n,
        eigenvalues: spectrum.eigenvalues().to_vec(),
        log_quotient: cone.then(|| log_quotient(sigma[k], sigma[l])),
        sigma,
        k,
        l,
        cone,
    })
}

/// σ-profile; a cone violation `σ_k σ_l <= 0` is an error.
pub fn sigma_profile(pack: &CurvaturePack, k: usize, l: usize) -> Result<SigmaProfile, SigmaError> {
    let p = sigma_profile_unchecked(pack, k, l)?;
    if !p.cone {
        return Err(SigmaError::Cone {
            k,
            l,
            sigma_k: p.sigma[k],
            sigma_l: p.sigma[l],
            point: pack.point.clone(),
        });
    }
    Ok(p)
}

/// Newton tensor `T_k = Σ_j (-1)^j σ_{k-j} E^j` as a (1,1) tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTensor {
    pub k: usize,
    pub value: TensorValue,
}

/// Horner form `T_0 = I`, `T_j = σ_j I - E T_{j-1}`.
pub fn newton_tensor(pack: &CurvaturePack, k: usize) -> Result<NewtonTensor, SigmaError> {
    let n = pack.dim();
    if n < 3 {
        return Err(SigmaError::Dimension(n));
    }
    if k >= n {
        return Err(SigmaError::IndexOutOfRange { k, n });
    }
    let e = pack.schouten_endomorphism()?;
    let (_, sigma) = sigma_values(pack)?;
    Ok(NewtonTensor {
        k,
        value: newton_from(&e, &sigma, k),
    })
}

pub(crate) fn newton_from(e: &TensorValue, sigma: &[f64], k: usize) -> TensorValue {
    let n = e.dim();
    let mut t = TensorValue::identity(n);
    for &s in sigma.iter().take(k + 1).skip(1) {
        t = TensorValue::identity(n)
            .scale(s)
            .sub(&e.compose(&t).expect("square"))
            .expect("same shape");
    }
    t
}

// ---------------------------------------------------------------------------
// Series route

fn series_mat_mul(n: usize, a: &[Ts], b: &[Ts]) -> Vec<Ts> {
    let order = a[0].order().min(b[0].order());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Ts::zero(a[0].dim(), order);
            for m in 0..n {
                acc += &(&a[i * n + m] * &b[m * n + j]);
            }
            out.push(acc);
        }
    }
    out
}

/// `σ_0..σ_n` of a Taylor-valued endomorphism via power traces and Newton's
/// identities `j e_j = Σ_{i=1}^j (-1)^{i-1} e_{j-i} p_i`.
pub fn sigma_series_of(n: usize, e: &[Ts]) -> Vec<Ts> {
    let dim = e[0].dim();
    let order = e[0].order();
    let trace = |m: &[Ts]| {
        let mut acc = Ts::zero(dim, order);
        for i in 0..n {
            acc += &m[i * n + i];
        }
        acc
    };
    let mut power = e.to_vec();
    let mut p = vec![trace(&power)];
    for _ in 1..n {
        power = series_mat_mul(n, &power, e);
        p.push(trace(&power));
    }
    let mut sigma = vec![Ts::constant(dim, order, 1.0)];
    for j in 1..=n {
        let mut acc = Ts::zero(dim, order);
        for i in 1..=j {
            let term = &sigma[j - i] * &p[i - 1];
            if i % 2 == 1 {
                acc += &term;
            } else {
                acc -= &term;
            }
        }
        sigma.push(acc.scale(1.0 / j as f64));
    }
    sigma
}

/// σ_j of the jet's metric as series of order `jet.order() - 2`.
pub fn sigma_series(jet: &MetricJet) -> Result<Vec<Ts>, SigmaError> {
    let n = jet.dim();
    if n < 3 {
        return Err(SigmaError::Dimension(n));
    }
    Ok(sigma_series_of(n, &jet.schouten_endomorphism()?))
}

/// `log σ_k - log σ_l` as a series; the cone condition is checked at the point.
pub fn log_quotient_series(jet: &MetricJet, k: usize, l: usize) -> Result<Ts, SigmaError> {
    check_indices(jet.dim(), k, l)?;
    let sigma = sigma_series(jet)?;
    let (sk, sl) = (&sigma[k], &sigma[l]);
    if sk.value() * sl.value() <= 0.0 {
        return Err(SigmaError::Cone {
            k,
            l,
            sigma_k: sk.value(),
            sigma_l: sl.value(),
            point: jet.point().to_vec(),
        });
    }
    Ok(sk.scale(sk.value().signum()).ln() - sl.scale(sl.value().signum()).ln())
}

/// Newton tensor series `T_k^i_j`.
pub fn newton_series(jet: &MetricJet, k: usize) -> Result<Vec<Ts>, SigmaError> {
    let n = jet.dim();
    if n < 3 {
        return Err(SigmaError::Dimension(n));
    }
    if k >= n {
        return Err(SigmaError::IndexOutOfRange { k, n });
    }
    let e = jet.schouten_endomorphism()?;
    let sigma = sigma_series_of(n, &e);
    let dim = e[0].dim();
    let order = e[0].order();
    let identity = |s: &Ts| -> Vec<Ts> {
        (0..n * n)
            .map(|ij| {
                if ij / n == ij % n {
                    s.clone()
                } else {
                    Ts::zero(dim, order)
                }
            })
            .collect()
    };
    let mut t = identity(&Ts::constant(dim, order, 1.0));
    for s in sigma.iter().take(k + 1).skip(1) {
        let et = series_mat_mul(n, &e, &t);
        t = identity(s).iter().zip(&et).map(|(a, b)| a - b).collect();
    }
    Ok(t)
}

/// `(div T_k)_j = ∇_i T_k^i_j` at `x`, from order-3 Taylor data.
pub fn divergence_newton(
    chart: &MetricChart,
    x: &[f64],
    k: usize,
) -> Result<TensorValue, SigmaError> {
    let jet = chart.jet(x, 3)?;
    let n = jet.dim();
    let t = newton_series(&jet, k)?;
    let gamma = jet.christoffel();
    let g = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j].value();
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            acc += t[i * n + j].partial(&[i]);
            for m in 0..n {
                acc += g(i, i, m) * t[m * n + j].value();
                acc -= g(m, i, j) * t[i * n + m].value();
            }
        }
        *o = acc;
    }
    Ok(TensorValue::new(n, vec![Variance::Covariant], out))
}

// ---------------------------------------------------------------------------
// Conformal laws for ĝ = φ^{-2} g

/// The metric `φ^{-2} g` as a chart over the same domain.
pub fn conformal_chart(base: &MetricChart, phi: &Expr) -> Result<MetricChart, GeometryError> {
    let n = base.dim();
    let factor = phi.clone().pow(Expr::num(-2.0));
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| factor.clone() * base.component(i, j).clone())
                .collect()
        })
        .collect();
    MetricChart::new(rows, base.domain().clone())
}

struct ConformalData {
    n: usize,
    phi: f64,
    hessian: Vec<f64>,
    grad_sq: f64,
    laplacian: f64,
    metric: Vec<f64>,
}

fn conformal_data(jet: &MetricJet, phi: &Expr) -> Result<ConformalData, SigmaError> {
    let f = jet.expand(phi)?;
    if f.value() <= 0.0 {
        return Err(SigmaError::NonPositiveFactor {
            value: f.value(),
            point: jet.point().to_vec(),
        });
    }
    let grad = jet.gradient(&f);
    let df: Vec<Ts> = (0..jet.dim()).map(|j| f.derivative(j)).collect();
    let grad_sq: f64 = grad
        .iter()
        .zip(&df)
        .map(|(a, b)| a.value() * b.value())
        .sum();
    let hess = jet.hessian(&f);
    Ok(ConformalData {
        n: jet.dim(),
        phi: f.value(),
        laplacian: jet.trace(&hess).value(),
        hessian: hess.iter().map(Ts::value).collect(),
        grad_sq,
        metric: jet.metric().iter().map(Ts::value).collect(),
    })
}

/// Schouten tensor of `φ^{-2} g` by `A_g + ∇²φ/φ - ½ |∇φ|²/φ² g`, with all
/// derivatives taken in `g`.
pub fn conformal_schouten(
    base: &MetricChart,
    x: &[f64],
    phi: &Expr,
) -> Result<TensorValue, SigmaError> {
    let jet = base.jet(x, 2)?;
    let a = jet.schouten()?;
    let d = conformal_data(&jet, phi)?;
    let comps = (0..d.n * d.n)
        .map(|ij| {
            a[ij].value() + d.hessian[ij] / d.phi - 0.5 * d.grad_sq / (d.phi * d.phi) * d.metric[ij]
        })
        .collect();
    Ok(TensorValue::covariant(d.n, 2, comps))
}

/// Ricci tensor of `φ^{-2} g` by
/// `Ric_g + (n-2) ∇²φ/φ + (Δφ/φ - (n-1)|∇φ|²/φ²) g`.
pub fn conformal_ricci(
    base: &MetricChart,
    x: &[f64],
    phi: &Expr,
) -> Result<TensorValue, SigmaError> {
    let jet = base.jet(x, 2)?;
    let ric = jet.ricci();
    let d = conformal_data(&jet, phi)?;
    let nf = d.n as f64;
    let c = d.laplacian / d.phi - (nf - 1.0) * d.grad_sq / (d.phi * d.phi);
    let comps = (0..d.n * d.n)
        .map(|ij| ric[ij].value() + (nf - 2.0) * d.hessian[ij] / d.phi + c * d.metric[ij])
        .collect();
    Ok(TensorValue::covariant(d.n, 2, comps))
}

/// `g^{-1} T` for Taylor-valued covariant 2-tensors.
pub fn raise_series(jet: &MetricJet, t: &[Ts]) -> Vec<Ts> {
    raise_first(jet.dim(), jet.inverse_metric(), t)
}
