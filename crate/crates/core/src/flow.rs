//! The quotient flow `∂g/∂t = -(log σ_k/σ_l - log r_{k,l}) g` on rotationally
//! symmetric metrics `g = e^{-2u(θ)} g_{S^n}`, θ the polar angle.
//!
//! With `g = e^{-2u} g_S` the flow reads `∂u/∂t = ½ (log σ_k/σ_l - log r_{k,l})`
//! and `g^{-1} A_g` has eigenvalues
//!
//! * radial: `e^{2u} (½ + u'' + ½ u'²)`,
//! * tangential (multiplicity `n - 1`): `e^{2u} (½ + u' cot θ - ½ u'²)`,
//!   with `u' cot θ → u''` at the poles.
//!
//! Spatial derivatives use 4th-order central differences with ghost nodes
//! from the even reflection `u(-θ) = u(θ)`, `u(π + θ) = u(π - θ)`, which
//! enforces `u'(0) = u'(π) = 0`. Time integration is classical RK4.

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::tensor::elementary_symmetric_all;

/// `sup |u|` above which a run is aborted.
pub const BLOW_UP: f64 = 10.0;
/// Fewest latitude intervals accepted.
pub const MIN_GRID: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("flow needs n >= 3 and 0 <= l < k <= n, got n = {n}, k = {k}, l = {l}")]
    Indices { n: usize, k: usize, l: usize },
    #[error("grid needs at least {MIN_GRID} intervals, got {0}")]
    Grid(usize),
    #[error("cone condition fails at node {node} (θ = {theta}, t = {t}): σ_k = {sigma_k}, σ_l = {sigma_l}")]
    Cone {
        node: usize,
        theta: f64,
        t: f64,
        sigma_k: f64,
        sigma_l: f64,
    },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("blow-up at t = {t}: sup |u| = {sup}")]
    BlowUp { t: f64, sup: f64 },
    #[error("time step must be positive, got {0}")]
    Step(f64),
    #[error("initial data: {0}")]
    Initial(#[from] EvalError),
}

/// Nodal conformal factor on `θ_j = jπ/M`, `j = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

/// One diagnostics sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub t: f64,
    /// `E_l = ∫ σ_l dv`, NaN when `l = n/2`.
    pub e_l: f64,
    /// `E_j` for `j = 1..n-1`, NaN at `j = n/2`.
    pub e_all: Vec<f64>,
    pub log_r: f64,
    /// `sup_nodes |log σ_k/σ_l - log r_{k,l}|`.
    pub sup_dev: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub records: Vec<FlowRecord>,
    pub state: FlowState,
    pub steps: usize,
    /// Set when the run stopped before `t_end`.
    pub abort: Option<FlowError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// `dt = factor · h² / (1 + a)` re-estimated every step.
    Adaptive {
        factor: f64,
    },
    Fixed(f64),
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { factor: 0.5 }
    }
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while x + 1e-12 < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the round unit `m`-sphere.
pub fn sphere_volume(m: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf((m + 1) as f64 / 2.0) / gamma_half(m + 1)
}

/// Clenshaw–Curtis weights on `x_j = cos(jπ/m)`.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let mut w = vec![0.0; m + 1];
    let theta = |j: usize| j as f64 * std::f64::consts::PI / mf;
    let ends = if m % 2 == 0 {
        1.0 / (mf * mf - 1.0)
    } else {
        1.0 / (mf * mf)
    };
    w[0] = ends;
    w[m] = ends;
    for (j, wj) in w.iter_mut().enumerate().take(m).skip(1) {
        let mut v = 1.0;
        for q in 1..=(m - 1) / 2 {
            let qf = q as f64;
            v -= 2.0 * (2.0 * qf * theta(j)).cos() / (4.0 * qf * qf - 1.0);
        }
        if m % 2 == 0 {
            v -= (mf * theta(j)).cos() / (mf * mf - 1.0);
        }
        *wj = 2.0 * v / mf;
    }
    w
}

/// 4th-order first and second derivatives of an even-reflected nodal function.
pub fn reflected_derivatives(values: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let m = values.len() - 1;
    let at = |j: isize| -> f64 {
        let idx = if j < 0 {
            -j
        } else if j > m as isize {
            2 * m as isize - j
        } else {
            j
        };
        values[idx as usize]
    };
    let mut d1 = vec![0.0; m + 1];
    let mut d2 = vec![0.0; m + 1];
    for j in 0..=m {
        let i = j as isize;
        let (a, b, c, d, e) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
        d1[j] = (a - 8.0 * b + 8.0 * d - e) / (12.0 * h);
        d2[j] = (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h);
    }
    d1[0] = 0.0;
    d1[m] = 0.0;
    (d1, d2)
}

/// Radial and tangential eigenvalues of `g^{-1} A_g` for `g = e^{-2u} g_S`.
pub fn schouten_eigenvalues(u: f64, du: f64, d2u: f64, theta: f64, pole: bool) -> (f64, f64) {
    let scale = (2.0 * u).exp();
    let radial = scale * (0.5 + d2u + 0.5 * du * du);
    let cot_term = if pole {
        d2u
    } else {
        du * theta.cos() / theta.sin()
    };
    let tangential = scale * (0.5 + cot_term - 0.5 * du * du);
    (radial, tangential)
}

fn sigma_of(n: usize, radial: f64, tangential: f64) -> Vec<f64> {
    let mut ev = vec![tangential; n];
    ev[0] = radial;
    elementary_symmetric_all(&ev)
}

struct Nodal {
    sigma: Vec<Vec<f64>>,
    radial: Vec<f64>,
    tangential: Vec<f64>,
}

impl FlowState {
    pub fn new(
        n: usize,
        k: usize,
        l: usize,
        grid: usize,
        u0: impl Fn(f64) -> f64,
    ) -> Result<Self, FlowError> {
        if n < 3 || k > n || l >= k || n > crate::taylor::MAX_DIM {
            return Err(FlowError::Indices { n, k, l });
        }
        if grid < MIN_GRID {
            return Err(FlowError::Grid(grid));
        }
        let theta: Vec<f64> = (0..=grid)
            .map(|j| j as f64 * std::f64::consts::PI / grid as f64)
            .collect();
        let u = theta.iter().map(|&t| u0(t)).collect::<Vec<_>>();
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { t: 0.0 });
        }
        Ok(FlowState {
            n,
            k,
            l,
            theta,
            u,
            t: 0.0,
        })
    }

    /// Initial data from an expression in `x1 = θ`.
    pub fn from_expr(
        n: usize,
        k: usize,
        l: usize,
        grid: usize,
        u0: &Expr,
    ) -> Result<Self, FlowError> {
        let values = (0..=grid)
            .map(|j| u0.eval(&[j as f64 * std::f64::consts::PI / grid as f64]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, k, l, grid, |t| {
            values[(t * grid as f64 / std::f64::consts::PI).round() as usize]
        })
    }

    pub fn grid(&self) -> usize {
        self.u.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.grid() as f64
    }

    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        reflected_derivatives(&self.u, self.spacing())
    }

    fn nodal(&self) -> Nodal {
        let (d1, d2) = self.derivatives();
        let m = self.grid();
        let mut out = Nodal {
            sigma: Vec::with_capacity(m + 1),
            radial: vec![],
            tangential: vec![],
        };
        for j in 0..=m {
            let (r, t) =
                schouten_eigenvalues(self.u[j], d1[j], d2[j], self.theta[j], j == 0 || j == m);
            out.sigma.push(sigma_of(self.n, r, t));
            out.radial.push(r);
            out.tangential.push(t);
        }
        out
    }

    /// `σ_0..σ_n` at every node.
    pub fn sigma_nodes(&self) -> Vec<Vec<f64>> {
        self.nodal().sigma
    }

    /// `∫ f dv_g = ω_{n-1} ∫ f e^{-nu} sin^{n-1}θ dθ`.
    pub fn quadrature(&self, f: &[f64]) -> f64 {
        let n = self.n;
        let m = self.grid();
        let omega = sphere_volume(n - 1);
        let nf = n as f64;
        if n % 2 == 1 {
            // even, smooth, periodic integrand: trapezoid
            let h = self.spacing();
            let mut acc = 0.0;
            for j in 0..=m {
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += w * f[j] * (-nf * self.u[j]).exp() * self.theta[j].sin().powi(n as i32 - 1);
            }
            omega * h * acc
        } else {
            // ∫ G(θ) sin θ dθ = ∫_{-1}^{1} G dx with G = f e^{-nu} sin^{n-2}θ
            let w = clenshaw_curtis(m);
            let mut acc = 0.0;
            for j in 0..=m {
                acc +=
                    w[j] * f[j] * (-nf * self.u[j]).exp() * self.theta[j].sin().powi(n as i32 - 2);
            }
            omega * acc
        }
    }

    pub fn volume(&self) -> f64 {
        self.quadrature(&vec![1.0; self.u.len()])
    }

    /// `E_j = ∫ σ_j dv`.
    pub fn energy(&self, j: usize) -> f64 {
        let sigma = self.sigma_nodes();
        self.quadrature(&sigma.iter().map(|s| s[j]).collect::<Vec<_>>())
    }

    fn log_quotients(&self, nodal: &Nodal) -> Result<Vec<f64>, FlowError> {
        nodal
            .sigma
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let (sk, sl) = (s[self.k], s[self.l]);
                if !(sk * sl > 0.0) {
                    return Err(FlowError::Cone {
                        node: j,
                        theta: self.theta[j],
                        t: self.t,
                        sigma_k: sk,
                        sigma_l: sl,
                    });
                }
                Ok(sk.abs().ln() - sl.abs().ln())
            })
            .collect()
    }

    fn log_r_from(&self, nodal: &Nodal, logq: &[f64]) -> f64 {
        let sl: Vec<f64> = nodal.sigma.iter().map(|s| s[self.l]).collect();
        let weighted: Vec<f64> = sl.iter().zip(logq).map(|(a, b)| a * b).collect();
        self.quadrature(&weighted) / self.quadrature(&sl)
    }

    /// `log r_{k,l} = ∫ σ_l log(σ_k/σ_l) dv / ∫ σ_l dv`.
    pub fn log_r(&self) -> Result<f64, FlowError> {
        let nodal = self.nodal();
        let logq = self.log_quotients(&nodal)?;
        Ok(self.log_r_from(&nodal, &logq))
    }

    pub fn record(&self) -> Result<FlowRecord, FlowError> {
        let nodal = self.nodal();
        let logq = self.log_quotients(&nodal)?;
        let log_r = self.log_r_from(&nodal, &logq);
        let energy = |j: usize| {
            if 2 * j == self.n {
                f64::NAN
            } else {
                self.quadrature(&nodal.sigma.iter().map(|s| s[j]).collect::<Vec<_>>())
            }
        };
        let e_all: Vec<f64> = (1..self.n).map(energy).collect();
        let rec = FlowRecord {
            t: self.t,
            e_l: if self.l == 0 {
                self.volume()
            } else {
                energy(self.l)
            },
            e_all,
            log_r,
            sup_dev: logq.iter().map(|q| (q - log_r).abs()).fold(0.0, f64::max),
            volume: self.volume(),
        };
        if !(rec.log_r.is_finite() && rec.sup_dev.is_finite() && rec.volume.is_finite()) {
            return Err(FlowError::NonFinite { t: self.t });
        }
        Ok(rec)
    }

    /// Sup over nodes of the coefficient of `u''` in the right side, counting
    /// the radial slot and all tangential slots.
    fn diffusion_bound(&self, nodal: &Nodal) -> f64 {
        let n = self.n;
        let mut sup = 0.0f64;
        for j in 0..nodal.sigma.len() {
            // ∂σ_q/∂μ = σ_{q-1} of the remaining n-1 eigenvalues
            let rest = elementary_symmetric_all(&vec![nodal.tangential[j]; n - 1]);
            let slope = |q: usize| {
                if q == 0 {
                    0.0
                } else {
                    rest[q - 1] / nodal.sigma[j][q]
                }
            };
            let per_slot = 0.5 * (2.0 * self.u[j]).exp() * (slope(self.k) - slope(self.l)).abs();
            sup = sup.max(per_slot * n as f64);
        }
        sup
    }

    pub fn stable_dt(&self, factor: f64) -> f64 {
        let h = self.spacing();
        factor * h * h / (1.0 + self.diffusion_bound(&self.nodal()))
    }
}

/// Nodal `∂u/∂t = ½ (log σ_k/σ_l - log r_{k,l})`.
pub fn flow_rhs(state: &FlowState) -> Result<Vec<f64>, FlowError> {
    let nodal = state.nodal();
    let logq = state.log_quotients(&nodal)?;
    let log_r = state.log_r_from(&nodal, &logq);
    let rhs: Vec<f64> = logq.iter().map(|q| 0.5 * (q - log_r)).collect();
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::NonFinite { t: state.t });
    }
    Ok(rhs)
}

fn axpy(state: &FlowState, a: f64, k: &[f64]) -> FlowState {
    let mut s = state.clone();
    s.u.iter_mut().zip(k).for_each(|(u, d)| *u += a * d);
    s.t += a;
    s
}

/// One classical RK4 step.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    if !(dt > 0.0) {
        return Err(FlowError::Step(dt));
    }
    let k1 = flow_rhs(state)?;
    let k2 = flow_rhs(&axpy(state, 0.5 * dt, &k1))?;
    let k3 = flow_rhs(&axpy(state, 0.5 * dt, &k2))?;
    let k4 = flow_rhs(&axpy(state, dt, &k3))?;
    let mut next = state.clone();
    for j in 0..next.u.len() {
        next.u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    next.t += dt;
    let sup = next.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !sup.is_finite() {
        return Err(FlowError::NonFinite { t: next.t });
    }
    if sup > BLOW_UP {
        return Err(FlowError::BlowUp { t: next.t, sup });
    }
    Ok(next)
}

/// Integrates to `t_end`, sampling diagnostics every `cadence` (and at both
/// ends). Errors stop the run and are returned with the samples so far.
pub fn run(initial: FlowState, t_end: f64, cadence: f64, control: StepControl) -> FlowRun {
    let mut state = initial;
    let mut records = Vec::new();
    let mut steps = 0;
    match state.record() {
        Ok(r) => records.push(r),
        Err(e) => {
            return FlowRun {
                records,
                state,
                steps,
                abort: Some(e),
            }
        }
    }
    let cadence = if cadence > 0.0 {
        cadence
    } else {
        t_end.max(f64::MIN_POSITIVE)
    };
    let mut next_sample = cadence;
    let eps = 1e-12 * t_end.max(1.0);
    while state.t < t_end - eps {
        let dt = match control {
            StepControl::Fixed(dt) => dt,
            StepControl::Adaptive { factor } => state.stable_dt(factor),
        };
        let target = next_sample.min(t_end);
        let dt = dt.min(target - state.t);
        match step(&state, dt) {
            Ok(s) => state = s,
            Err(e) => {
                return FlowRun {
                    records,
                    state,
                    steps,
                    abort: Some(e),
                }
            }
        }
        steps += 1;
        if state.t >= target - eps {
            state.t = target;
            match state.record() {
                Ok(r) => records.push(r),
                Err(e) => {
                    return FlowRun {
                        records,
                        state,
                        steps,
                        abort: Some(e),
                    }
                }
            }
            next_sample += cadence;
        }
    }
    FlowRun {
        records,
        state,
        steps,
        abort: None,
    }
}

/// `∫ ⟨X, ∇σ_k⟩ dv_g` for the conformal field `X = -sin θ ∂_θ` (the
/// `g_S`-gradient of `cos θ`), with `scale = ∫ |⟨X, ∇σ_k⟩| dv_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldIntegral {
    pub value: f64,
    pub scale: f64,
}

pub fn conformal_field_integral(state: &FlowState, k: usize) -> Result<FieldIntegral, FlowError> {
    if k > state.n {
        return Err(FlowError::Indices {
            n: state.n,
            k,
            l: state.l,
        });
    }
    let sigma: Vec<f64> = state.sigma_nodes().iter().map(|s| s[k]).collect();
    let (ds, _) = reflected_derivatives(&sigma, state.spacing());
    let integrand: Vec<f64> = ds
        .iter()
        .zip(&state.theta)
        .map(|(d, t)| -t.sin() * d)
        .collect();
    let abs: Vec<f64> = integrand.iter().map(|v| v.abs()).collect();
    Ok(FieldIntegral {
        value: state.quadrature(&integrand),
        scale: state.quadrature(&abs),
    })
}
