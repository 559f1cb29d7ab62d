//! Pointwise curvature of coordinate-chart metrics.
//!
//! Every quantity is computed from the truncated Taylor expansion of the
//! metric components at the point. A [`MetricJet`] of order `d` carries the
//! metric to order `d`, Christoffel symbols to order `d - 1` and curvature to
//! order `d - 2`, so derivatives of curvature come from the same pipeline
//! instead of finite differences.
//!
//! Index conventions:
//!
//! * `Γ^k_ij` is stored as `christoffel[(k * n + i) * n + j]`.
//! * `R^m_jkl = ∂_k Γ^m_lj - ∂_l Γ^m_kj + Γ^m_kp Γ^p_lj - Γ^m_lp Γ^p_kj` and
//!   `R_ijkl = g_im R^m_jkl`, so a space form of curvature `K` has
//!   `R_ijkl = K (g_ik g_jl - g_il g_jk)`.
//! * `Ric_jl = R^m_jml`, `R = g^jl Ric_jl`.
//! * Schouten `A = (Ric - R g / (2(n-1))) / (n-2)`, Weyl `W = Rm - A ⊠ g`,
//!   Cotton `C_ijk = ∇_i A_jk - ∇_j A_ik`.

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::taylor::{TaylorScalar, MAX_DIM, MAX_ORDER};
use crate::tensor::{cholesky, kulkarni_nomizu, TensorValue, Variance};

type Ts = TaylorScalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coordinate {axis} = {value} lies outside [{lo}, {hi}]")]
    OutsideDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("point has {found} coordinates, chart has dimension {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("metric components ({i},{j}) and ({j},{i}) differ")]
    Asymmetric { i: usize, j: usize },
    #[error("unsupported chart dimension {0} (expected 2..=8)")]
    Dimension(usize),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("expression uses x{var} but the chart has dimension {dim}")]
    VariableOutOfRange { var: usize, dim: usize },
    #[error("quantity needs dimension >= 3, chart has dimension {0}")]
    NeedsDimensionThree(usize),
    #[error("series order {have} too low, {needed} required")]
    OrderTooLow { needed: usize, have: usize },
    #[error("non-finite value in curvature computation")]
    NonFinite,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Per-axis closed intervals; periodic axes wrap with period `hi - lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    intervals: Vec<(f64, f64)>,
    periodic: Vec<bool>,
}

impl Domain {
    pub fn new(intervals: Vec<(f64, f64)>, periodic: Vec<bool>) -> Result<Self, GeometryError> {
        if intervals.len() != periodic.len() {
            return Err(GeometryError::Domain(format!(
                "{} intervals but {} periodic flags",
                intervals.len(),
                periodic.len()
            )));
        }
        for (axis, (lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::Domain(format!(
                    "axis {axis}: [{lo}, {hi}] is not a proper interval"
                )));
            }
        }
        Ok(Domain {
            intervals,
            periodic,
        })
    }

    /// Same interval on every axis, none periodic.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain {
            intervals: vec![(lo, hi); dim],
            periodic: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    /// Wraps periodic coordinates into range and checks the rest.
    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::PointDimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        x.iter()
            .enumerate()
            .map(|(axis, &v)| {
                let (lo, hi) = self.intervals[axis];
                if self.periodic[axis] && v.is_finite() {
                    let period = hi - lo;
                    Ok(lo + (v - lo).rem_euclid(period))
                } else if v >= lo && v <= hi {
                    Ok(v)
                } else {
                    Err(GeometryError::OutsideDomain {
                        axis,
                        value: v,
                        lo,
                        hi,
                    })
                }
            })
            .collect()
    }
}

/// Riemannian metric on a coordinate box, given by component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricChart {
    dim: usize,
    components: Vec<Expr>,
    domain: Domain,
}

impl MetricChart {
    /// Validates symmetry (textual, or numeric agreement to 1e-12 at probe
    /// nodes) and positive definiteness on a 3-node-per-axis probe grid.
    pub fn new(components: Vec<Vec<Expr>>, domain: Domain) -> Result<Self, GeometryError> {
        let dim = components.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        if components.iter().any(|row| row.len() != dim) {
            return Err(GeometryError::Domain(
                "metric must be a square array".into(),
            ));
        }
        if domain.dim() != dim {
            return Err(GeometryError::PointDimension {
                expected: dim,
                found: domain.dim(),
            });
        }
        for row in &components {
            for e in row {
                if let Some(v) = e.max_var() {
                    if v >= dim {
                        return Err(GeometryError::VariableOutOfRange { var: v + 1, dim });
                    }
                }
            }
        }
        let probes = probe_grid(&domain);
        for i in 0..dim {
            for j in i + 1..dim {
                let (a, b) = (&components[i][j], &components[j][i]);
                if a == b || a.to_string() == b.to_string() {
                    continue;
                }
                for p in &probes {
                    let (va, vb) = (a.eval(p)?, b.eval(p)?);
                    if (va - vb).abs() > 1e-12 * va.abs().max(vb.abs()).max(1.0) {
                        return Err(GeometryError::Asymmetric { i, j });
                    }
                }
            }
        }
        let flat: Vec<Expr> = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| components[i.min(j)][i.max(j)].clone())
            .collect();
        let chart = MetricChart {
            dim,
            components: flat,
            domain,
        };
        for p in &probes {
            let g = chart.metric_values(p)?;
            if cholesky(dim, &g).is_err() {
                return Err(GeometryError::NotPositiveDefinite { point: p.clone() });
            }
        }
        Ok(chart)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim + j]
    }

    fn metric_values(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.dim;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.component(i, j).eval(x)?;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// Metric components at `x` as a (0,2) tensor.
    pub fn metric_at(&self, x: &[f64]) -> Result<TensorValue, GeometryError> {
        let x = self.domain.normalize(x)?;
        Ok(TensorValue::covariant(self.dim, 2, self.metric_values(&x)?))
    }

    /// Taylor data of the metric and its curvature at `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<MetricJet, GeometryError> {
        let x = self.domain.normalize(x)?;
        MetricJet::new(self, &x, order)
    }

    /// Expression for `c * g` (used to rescale model metrics).
    pub fn scaled(&self, factor: f64) -> MetricChart {
        MetricChart {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|e| Expr::num(factor) * e.clone())
                .collect(),
            domain: self.domain.clone(),
        }
    }

    /// Component expressions as a nested array.
    pub fn component_rows(&self) -> Vec<Vec<Expr>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.component(i, j).clone())
                    .collect()
            })
            .collect()
    }
}

fn probe_grid(domain: &Domain) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let mut out = Vec::with_capacity(3usize.pow(n as u32));
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let p = domain
            .intervals()
            .iter()
            .map(|&(lo, hi)| {
                let t = (c % 3) as f64 * 0.5;
                c /= 3;
                lo + t * (hi - lo)
            })
            .collect();
        out.push(p);
    }
    out
}

// ---------------------------------------------------------------------------
// Jet-level pipeline

fn check_finite(values: &[Ts]) -> Result<(), GeometryError> {
    if values.iter().all(Ts::is_finite) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

/// Inverse of a symmetric Taylor-valued matrix by Gauss–Jordan elimination.
/// Pivots are the (positive) diagonal entries of an SPD matrix.
fn invert_series_matrix(n: usize, m: &[Ts]) -> Vec<Ts> {
    let dim = m[0].dim();
    let order = m[0].order();
    let mut a = m.to_vec();
    let mut inv: Vec<Ts> = (0..n * n)
        .map(|k| Ts::constant(dim, order, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = a[col * n + col].recip();
        for j in 0..n {
            a[col * n + j] = &a[col * n + j] * &pivot;
            inv[col * n + j] = &inv[col * n + j] * &pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            if factor.coeffs().iter().all(|c| *c == 0.0) {
                continue;
            }
            for j in 0..n {
                let da = &factor * &a[col * n + j];
                a[row * n + j] -= &da;
                let di = &factor * &inv[col * n + j];
                inv[row * n + j] -= &di;
            }
        }
    }
    inv
}

/// Taylor expansion of the metric and its curvature at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    dim: usize,
    order: usize,
    point: Vec<f64>,
    g: Vec<Ts>,
    ginv: Vec<Ts>,
    christoffel: Vec<Ts>,
    riemann_mixed: Vec<Ts>,
    riemann: Vec<Ts>,
    ricci: Vec<Ts>,
    scalar: Ts,
    schouten: Option<Vec<Ts>>,
}

impl MetricJet {
    fn new(chart: &MetricChart, x: &[f64], order: usize) -> Result<Self, GeometryError> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(GeometryError::OrderTooLow {
                needed: 2,
                have: order,
            });
        }
        let n = chart.dim;
        let mut g = vec![Ts::zero(n, order); n * n];
        for i in 0..n {
            for j in i..n {
                let v = chart.component(i, j).eval_jet(x, order)?;
                g[j * n + i] = v.clone();
                g[i * n + j] = v;
            }
        }
        let g0: Vec<f64> = g.iter().map(Ts::value).collect();
        if cholesky(n, &g0).is_err() {
            return Err(GeometryError::NotPositiveDefinite { point: x.to_vec() });
        }
        Self::from_metric_series(x.to_vec(), g)
    }

    /// Builds the jet from metric components already expanded as series.
    pub fn from_metric_series(point: Vec<f64>, g: Vec<Ts>) -> Result<Self, GeometryError> {
        let dim = point.len();
        let n = dim;
        let order = g[0].order();
        if order < 2 {
            return Err(GeometryError::OrderTooLow {
                needed: 2,
                have: order,
            });
        }
        let ginv = invert_series_matrix(n, &g);
        check_finite(&ginv)?;

        // dg[(k * n + i) * n + j] = ∂_k g_ij
        let mut dg = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                dg.push(g[ij].derivative(k));
            }
        }
        let d = |k: usize, i: usize, j: usize| &dg[(k * n + i) * n + j];

        // First kind Γ_lij = (∂_i g_jl + ∂_j g_il - ∂_l g_ij) / 2, symmetric in ij.
        let mut first = vec![Ts::zero(dim, order - 1); n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = (d(i, j, l) + d(j, i, l) - d(l, i, j)) * 0.5;
                    first[(l * n + j) * n + i] = v.clone();
                    first[(l * n + i) * n + j] = v;
                }
            }
        }
        let ginv_low: Vec<Ts> = ginv.iter().map(|s| s.truncate(order - 1)).collect();
        let mut christoffel = vec![Ts::zero(dim, order - 1); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = Ts::zero(dim, order - 1);
                    for l in 0..n {
                        acc += &(&ginv_low[k * n + l] * &first[(l * n + i) * n + j]);
                    }
                    christoffel[(k * n + j) * n + i] = acc.clone();
                    christoffel[(k * n + i) * n + j] = acc;
                }
            }
        }
        check_finite(&christoffel)?;

        let ro = order - 2;
        let gam = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let gamma_low: Vec<Ts> = christoffel.iter().map(|s| s.truncate(ro)).collect();
        // dgamma[(a * n^3) + gam(k,i,j)] = ∂_a Γ^k_ij
        let mut dgamma = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for s in &christoffel {
                dgamma.push(s.derivative(a));
            }
        }
        let n3 = n * n * n;
        let mut riemann_mixed = vec![Ts::zero(dim, ro); n.pow(4)];
        let rm_idx = |m: usize, j: usize, k: usize, l: usize| ((m * n + j) * n + k) * n + l;
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in k + 1..n {
                        let mut v = &dgamma[k * n3 + gam(m, l, j)] - &dgamma[l * n3 + gam(m, k, j)];
                        for p in 0..n {
                            v += &(&gamma_low[gam(m, k, p)] * &gamma_low[gam(p, l, j)]);
                            v -= &(&gamma_low[gam(m, l, p)] * &gamma_low[gam(p, k, j)]);
                        }
                        riemann_mixed[rm_idx(m, j, l, k)] = -&v;
                        riemann_mixed[rm_idx(m, j, k, l)] = v;
                    }
                }
            }
        }
        let g_low: Vec<Ts> = g.iter().map(|s| s.truncate(ro)).collect();
        let mut riemann = vec![Ts::zero(dim, ro); n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in k + 1..n {
                        let mut acc = Ts::zero(dim, ro);
                        for m in 0..n {
                            acc += &(&g_low[i * n + m] * &riemann_mixed[rm_idx(m, j, k, l)]);
                        }
                        riemann[rm_idx(i, j, l, k)] = -&acc;
                        riemann[rm_idx(i, j, k, l)] = acc;
                    }
                }
            }
        }
        let mut ricci = vec![Ts::zero(dim, ro); n * n];
        for j in 0..n {
            for l in 0..n {
                let mut acc = Ts::zero(dim, ro);
                for m in 0..n {
                    acc += &riemann_mixed[rm_idx(m, j, m, l)];
                }
                ricci[j * n + l] = acc;
            }
        }
        // Symmetrize away roundoff; Ric is symmetric for a Levi-Civita connection.
        for j in 0..n {
            for l in j + 1..n {
                let s = (&ricci[j * n + l] + &ricci[l * n + j]) * 0.5;
                ricci[j * n + l] = s.clone();
                ricci[l * n + j] = s;
            }
        }
        let ginv_ro: Vec<Ts> = ginv.iter().map(|s| s.truncate(ro)).collect();
        let mut scalar = Ts::zero(dim, ro);
        for ij in 0..n * n {
            scalar += &(&ginv_ro[ij] * &ricci[ij]);
        }
        let schouten = (n >= 3).then(|| {
            let c = 1.0 / (2.0 * (n as f64 - 1.0));
            let inv = 1.0 / (n as f64 - 2.0);
            (0..n * n)
                .map(|ij| (&ricci[ij] - &(&scalar * &g_low[ij]) * c) * inv)
                .collect()
        });
        check_finite(&riemann)?;
        Ok(MetricJet {
            dim,
            order,
            point,
            g,
            ginv,
            christoffel,
            riemann_mixed,
            riemann,
            ricci,
            scalar,
            schouten,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation order of the metric series.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &[Ts] {
        &self.g
    }

    pub fn inverse_metric(&self) -> &[Ts] {
        &self.ginv
    }

    /// `Γ^k_ij` at `(k * n + i) * n + j`; order `d - 1`.
    pub fn christoffel(&self) -> &[Ts] {
        &self.christoffel
    }

    /// `R_ijkl`; order `d - 2`.
    pub fn riemann(&self) -> &[Ts] {
        &self.riemann
    }

    /// `R^m_jkl` at `((m * n + j) * n + k) * n + l`; order `d - 2`.
    pub fn riemann_mixed(&self) -> &[Ts] {
        &self.riemann_mixed
    }

    pub fn ricci(&self) -> &[Ts] {
        &self.ricci
    }

    pub fn scalar_curvature(&self) -> &Ts {
        &self.scalar
    }

    pub fn schouten(&self) -> Result<&[Ts], GeometryError> {
        self.schouten
            .as_deref()
            .ok_or(GeometryError::NeedsDimensionThree(self.dim))
    }

    /// `g^{-1} A` as a Taylor-valued matrix `E^i_j`.
    pub fn schouten_endomorphism(&self) -> Result<Vec<Ts>, GeometryError> {
        let a = self.schouten()?;
        Ok(raise_first(self.dim, &self.ginv, a))
    }

    /// Expands a scalar expression at the jet's point with the same order.
    pub fn expand(&self, e: &Expr) -> Result<Ts, GeometryError> {
        Ok(e.eval_jet(&self.point, self.order)?)
    }

    /// `∇_i T_jk` of a covariant 2-tensor series; index `(i * n + j) * n + k`.
    pub fn covariant_derivative_2(&self, t: &[Ts]) -> Result<Vec<Ts>, GeometryError> {
        let n = self.dim;
        let order = t[0].order();
        if order == 0 {
            return Err(GeometryError::OrderTooLow { needed: 1, have: 0 });
        }
        let out_order = order - 1;
        let gamma: Vec<Ts> = self
            .christoffel
            .iter()
            .map(|s| s.truncate(out_order))
            .collect();
        let t_low: Vec<Ts> = t.iter().map(|s| s.truncate(out_order)).collect();
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = t[j * n + k].derivative(i);
                    for m in 0..n {
                        v -= &(&gamma[(m * n + i) * n + j] * &t_low[m * n + k]);
                        v -= &(&gamma[(m * n + i) * n + k] * &t_low[j * n + m]);
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// Gradient vector `∇^i f = g^ij ∂_j f`, order `f.order() - 1`.
    pub fn gradient(&self, f: &Ts) -> Vec<Ts> {
        let n = self.dim;
        let df: Vec<Ts> = (0..n).map(|j| f.derivative(j)).collect();
        raise_vector(n, &self.ginv, &df)
    }

    /// `∇²f_ij = ∂_i ∂_j f - Γ^m_ij ∂_m f`, order `f.order() - 2`.
    pub fn hessian(&self, f: &Ts) -> Vec<Ts> {
        let n = self.dim;
        let df: Vec<Ts> = (0..n).map(|j| f.derivative(j)).collect();
        let out_order = f.order() - 2;
        let mut out = vec![Ts::zero(n, out_order); n * n];
        for i in 0..n {
            for j in i..n {
                let mut v = df[j].derivative(i);
                for m in 0..n {
                    v -= &(&self.christoffel[(m * n + i) * n + j].truncate(out_order)
                        * &df[m].truncate(out_order));
                }
                out[j * n + i] = v.clone();
                out[i * n + j] = v;
            }
        }
        out
    }

    /// `Δf = g^ij ∇²f_ij`.
    pub fn laplacian(&self, f: &Ts) -> Ts {
        self.trace(&self.hessian(f))
    }

    /// `g^ij T_ij` for a covariant 2-tensor.
    pub fn trace(&self, t: &[Ts]) -> Ts {
        let order = t[0].order();
        let mut acc = Ts::zero(self.dim, order);
        for (ginv, tij) in self.ginv.iter().zip(t) {
            acc += &(&ginv.truncate(order) * tij);
        }
        acc
    }

    /// `div X = ∂_i X^i + Γ^i_im X^m`.
    pub fn divergence(&self, x: &[Ts]) -> Ts {
        let n = self.dim;
        let out_order = x[0].order() - 1;
        let mut acc = Ts::zero(n, out_order);
        for i in 0..n {
            acc += &x[i].derivative(i);
            for m in 0..n {
                acc += &(&self.christoffel[(i * n + i) * n + m].truncate(out_order)
                    * &x[m].truncate(out_order));
            }
        }
        acc
    }

    /// `(L_X g)_ij = X^m ∂_m g_ij + g_mj ∂_i X^m + g_im ∂_j X^m`.
    pub fn lie_derivative_metric(&self, x: &[Ts]) -> Vec<Ts> {
        let n = self.dim;
        let out_order = (x[0].order().min(self.order)) - 1;
        let xl: Vec<Ts> = x.iter().map(|s| s.truncate(out_order)).collect();
        let gl: Vec<Ts> = self.g.iter().map(|s| s.truncate(out_order)).collect();
        let mut out = vec![Ts::zero(n, out_order); n * n];
        for i in 0..n {
            for j in i..n {
                let mut v = Ts::zero(n, out_order);
                for m in 0..n {
                    v += &(&xl[m] * &self.g[i * n + j].derivative(m).truncate(out_order));
                    v += &(&gl[m * n + j] * &x[m].derivative(i).truncate(out_order));
                    v += &(&gl[i * n + m] * &x[m].derivative(j).truncate(out_order));
                }
                out[j * n + i] = v.clone();
                out[i * n + j] = v;
            }
        }
        out
    }

    /// `⟨U, V⟩_g` for vector series.
    pub fn inner(&self, u: &[Ts], v: &[Ts]) -> Ts {
        let n = self.dim;
        let order = u[0].order().min(v[0].order());
        let mut acc = Ts::zero(n, order);
        for i in 0..n {
            for j in 0..n {
                acc += &(&(&self.g[i * n + j].truncate(order) * &u[i].truncate(order))
                    * &v[j].truncate(order));
            }
        }
        acc
    }

    /// Metric values at the point as a (0,2) tensor.
    pub fn metric_tensor(&self) -> TensorValue {
        values2(self.dim, &self.g)
    }

    pub fn inverse_metric_tensor(&self) -> TensorValue {
        TensorValue::new(
            self.dim,
            vec![Variance::Contravariant; 2],
            self.ginv.iter().map(Ts::value).collect(),
        )
    }

    /// Point values of every curvature tensor.
    pub fn pack(&self) -> Result<CurvaturePack, GeometryError> {
        let n = self.dim;
        let christoffel = TensorValue::new(
            n,
            vec![
                Variance::Contravariant,
                Variance::Covariant,
                Variance::Covariant,
            ],
            self.christoffel.iter().map(Ts::value).collect(),
        );
        let riemann = TensorValue::covariant(n, 4, self.riemann.iter().map(Ts::value).collect());
        let ricci = values2(n, &self.ricci);
        let metric = self.metric_tensor();
        let (schouten, weyl, cotton) = match &self.schouten {
            Some(a) => {
                let a_val = values2(n, a);
                let weyl = riemann
                    .sub(&kulkarni_nomizu(&a_val, &metric).expect("matching shapes"))
                    .expect("rank 4");
                let cotton = if self.order >= 3 {
                    let da = self.covariant_derivative_2(a)?;
                    let mut c = vec![0.0; n * n * n];
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                c[(i * n + j) * n + k] = da[(i * n + j) * n + k].value()
                                    - da[(j * n + i) * n + k].value();
                            }
                        }
                    }
                    Some(TensorValue::covariant(n, 3, c))
                } else {
                    None
                };
                (Some(a_val), Some(weyl), cotton)
            }
            None => (None, None, None),
        };
        let pack = CurvaturePack {
            point: self.point.clone(),
            metric,
            inverse_metric: self.inverse_metric_tensor(),
            christoffel,
            riemann,
            ricci,
            scalar: self.scalar.value(),
            schouten,
            weyl,
            cotton,
        };
        if !pack.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(pack)
    }
}

fn values2(n: usize, t: &[Ts]) -> TensorValue {
    TensorValue::covariant(n, 2, t.iter().map(Ts::value).collect())
}

/// `M^i_j = g^ik T_kj`.
pub(crate) fn raise_first(n: usize, ginv: &[Ts], t: &[Ts]) -> Vec<Ts> {
    let order = t[0].order();
    let ginv: Vec<Ts> = ginv.iter().map(|s| s.truncate(order)).collect();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Ts::zero(n, order);
            for k in 0..n {
                acc += &(&ginv[i * n + k] * &t[k * n + j]);
            }
            out.push(acc);
        }
    }
    out
}

fn raise_vector(n: usize, ginv: &[Ts], w: &[Ts]) -> Vec<Ts> {
    let order = w[0].order();
    (0..n)
        .map(|i| {
            let mut acc = Ts::zero(n, order);
            for j in 0..n {
                acc += &(&ginv[i * n + j].truncate(order) * &w[j]);
            }
            acc
        })
        .collect()
}

/// Curvature tensors at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePack {
    pub point: Vec<f64>,
    pub metric: TensorValue,
    pub inverse_metric: TensorValue,
    /// `Γ^k_ij`, slots (contravariant, covariant, covariant).
    pub christoffel: TensorValue,
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
    /// Absent for surfaces.
    pub schouten: Option<TensorValue>,
    pub weyl: Option<TensorValue>,
    pub cotton: Option<TensorValue>,
}

impl CurvaturePack {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn is_finite(&self) -> bool {
        self.christoffel.is_finite()
            && self.riemann.is_finite()
            && self.scalar.is_finite()
            && self.schouten.as_ref().map_or(true, TensorValue::is_finite)
            && self.cotton.as_ref().map_or(true, TensorValue::is_finite)
    }

    pub fn schouten(&self) -> Result<&TensorValue, GeometryError> {
        self.schouten
            .as_ref()
            .ok_or(GeometryError::NeedsDimensionThree(self.dim()))
    }

    /// `g^{-1} A` as a (1,1) tensor.
    pub fn schouten_endomorphism(&self) -> Result<TensorValue, GeometryError> {
        let a = self.schouten()?;
        Ok(a.raise(0, &self.inverse_metric).expect("shapes match"))
    }

    /// `sup |Ric - c g|` over components.
    pub fn ricci_deviation(&self, c: f64) -> f64 {
        self.ricci
            .sub(&self.metric.scale(c))
            .expect("same shape")
            .sup_norm()
    }

    /// `sup |Ric - (R/n) g|`, zero exactly for Einstein metrics.
    pub fn traceless_ricci_sup(&self) -> f64 {
        self.ricci_deviation(self.scalar / self.dim() as f64)
    }
}

/// Curvature tensors at `x`, computed from order-3 Taylor data (enough for Cotton).
pub fn curvature_at(chart: &MetricChart, x: &[f64]) -> Result<CurvaturePack, GeometryError> {
    chart.jet(x, 3)?.pack()
}

/// Derivatives of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDerivatives {
    pub value: f64,
    /// `∇f`, contravariant.
    pub gradient: TensorValue,
    pub hessian: TensorValue,
    pub laplacian: f64,
}

/// Derivatives of a vector field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDerivatives {
    pub divergence: f64,
    /// `L_X g`.
    pub lie_derivative: TensorValue,
}

/// Gradient, Hessian and Laplacian of `f` on `chart` at `x`.
pub fn scalar_derivatives(
    chart: &MetricChart,
    x: &[f64],
    f: &Expr,
) -> Result<ScalarDerivatives, GeometryError> {
    let jet = chart.jet(x, 2)?;
    let fj = jet.expand(f)?;
    let n = chart.dim();
    let grad = jet.gradient(&fj);
    let hess = jet.hessian(&fj);
    let out = ScalarDerivatives {
        value: fj.value(),
        gradient: TensorValue::new(
            n,
            vec![Variance::Contravariant],
            grad.iter().map(Ts::value).collect(),
        ),
        laplacian: jet.trace(&hess).value(),
        hessian: values2(n, &hess),
    };
    if !out.hessian.is_finite() || !out.laplacian.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    Ok(out)
}

/// Divergence and Lie derivative of the metric along `X` (components `X^i`).
pub fn vector_derivatives(
    chart: &MetricChart,
    x: &[f64],
    field: &[Expr],
) -> Result<VectorDerivatives, GeometryError> {
    let n = chart.dim();
    if field.len() != n {
        return Err(GeometryError::PointDimension {
            expected: n,
            found: field.len(),
        });
    }
    let jet = chart.jet(x, 2)?;
    let xs: Vec<Ts> = field
        .iter()
        .map(|e| jet.expand(e))
        .collect::<Result<_, _>>()?;
    let lie = jet.lie_derivative_metric(&xs);
    Ok(VectorDerivatives {
        divergence: jet.divergence(&xs).value(),
        lie_derivative: values2(n, &lie),
    })
}
