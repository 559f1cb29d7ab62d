//! Hodge–de Rham splitting `X = ∇h + Y`, `div Y = 0`, of vector fields on
//! the flat torus `[0, 2π)^n`, `n ∈ {2, 3}`, by a spectral Poisson solve.
//!
//! In Fourier space `ĥ = -i (k·X̂)/|k|²` and `Ŷ = X̂ - k (k·X̂)/|k|²`, with the
//! zero mode of `h` set to zero. The Nyquist wavenumber is treated as 0, so
//! Nyquist content stays in `Y`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::expr::{EvalError, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HodgeError {
    #[error("torus dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("grid size must be a power of two >= 16, got {0}")]
    GridSize(usize),
    #[error("expected {expected} components of length {len}")]
    Shape { expected: usize, len: usize },
    #[error("non-finite sample in component {component}")]
    NonFinite { component: usize },
    #[error("cannot sample field: {0}")]
    Eval(#[from] EvalError),
}

/// Vector field sampled at `x_j = 2π j / N` on every axis; components are
/// stored row-major with `x1` the slowest axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    dim: usize,
    size: usize,
    components: Vec<Vec<f64>>,
}

fn check_grid(dim: usize, size: usize) -> Result<(), HodgeError> {
    if !(2..=3).contains(&dim) {
        return Err(HodgeError::Dimension(dim));
    }
    if size < 16 || !size.is_power_of_two() {
        return Err(HodgeError::GridSize(size));
    }
    Ok(())
}

/// Grid coordinates of flat index `idx`.
fn coords(dim: usize, size: usize, mut idx: usize) -> Vec<usize> {
    let mut c = vec![0; dim];
    for axis in (0..dim).rev() {
        c[axis] = idx % size;
        idx /= size;
    }
    c
}

fn wavenumber(j: usize, size: usize) -> f64 {
    if 2 * j < size {
        j as f64
    } else if 2 * j == size {
        0.0
    } else {
        j as f64 - size as f64
    }
}

impl TorusField {
    pub fn new(dim: usize, size: usize, components: Vec<Vec<f64>>) -> Result<Self, HodgeError> {
        check_grid(dim, size)?;
        let len = size.pow(dim as u32);
        if components.len() != dim || components.iter().any(|c| c.len() != len) {
            return Err(HodgeError::Shape { expected: dim, len });
        }
        if let Some(component) = components
            .iter()
            .position(|c| c.iter().any(|v| !v.is_finite()))
        {
            return Err(HodgeError::NonFinite { component });
        }
        Ok(TorusField {
            dim,
            size,
            components,
        })
    }

    /// Samples component expressions in `x1..x_dim`.
    pub fn from_exprs(dim: usize, size: usize, field: &[Expr]) -> Result<Self, HodgeError> {
        check_grid(dim, size)?;
        if field.len() != dim {
            return Err(HodgeError::Shape {
                expected: dim,
                len: size.pow(dim as u32),
            });
        }
        let components = field
            .iter()
            .map(|e| sample(dim, size, e))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dim, size, components)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &TorusField) -> TorusField {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        TorusField {
            dim: self.dim,
            size: self.size,
            components,
        }
    }

    pub fn add(&self, other: &TorusField) -> TorusField {
        self.sub(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> TorusField {
        let components = self
            .components
            .iter()
            .map(|a| a.iter().map(|x| c * x).collect())
            .collect();
        TorusField {
            dim: self.dim,
            size: self.size,
            components,
        }
    }

    /// `∫ ⟨X, Z⟩ dv` by the rectangle rule (exact for band-limited data).
    pub fn inner(&self, other: &TorusField) -> f64 {
        let cell = (2.0 * std::f64::consts::PI / self.size as f64).powi(self.dim as i32);
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        acc * cell
    }
}

/// Samples a scalar expression on the grid.
pub fn sample(dim: usize, size: usize, e: &Expr) -> Result<Vec<f64>, HodgeError> {
    check_grid(dim, size)?;
    let step = 2.0 * std::f64::consts::PI / size as f64;
    (0..size.pow(dim as u32))
        .map(|idx| {
            let x: Vec<f64> = coords(dim, size, idx)
                .iter()
                .map(|&j| j as f64 * step)
                .collect();
            Ok(e.eval(&x)?)
        })
        .collect()
}

struct Spectral {
    dim: usize,
    size: usize,
    planner: FftPlanner<f64>,
}

impl Spectral {
    fn new(dim: usize, size: usize) -> Self {
        Spectral {
            dim,
            size,
            planner: FftPlanner::new(),
        }
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let n = self.size;
        let fft = if inverse {
            self.planner.plan_fft_inverse(n)
        } else {
            self.planner.plan_fft_forward(n)
        };
        let total = data.len();
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            for start in 0..total {
                // first element of each line along `axis`
                if (start / stride) % n != 0 {
                    continue;
                }
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[start + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
        if inverse {
            let scale = 1.0 / total as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    fn inverse_real(&mut self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, true);
        data.iter().map(|v| v.re).collect()
    }

    fn wavevector(&self, idx: usize) -> Vec<f64> {
        coords(self.dim, self.size, idx)
            .iter()
            .map(|&j| wavenumber(j, self.size))
            .collect()
    }
}

/// Spectral divergence of a torus field.
pub fn divergence(x: &TorusField) -> Vec<f64> {
    let mut sp = Spectral::new(x.dim, x.size);
    let hats: Vec<Vec<Complex64>> = x.components.iter().map(|c| sp.forward(c)).collect();
    let len = hats[0].len();
    let div: Vec<Complex64> = (0..len)
        .map(|idx| {
            let k = sp.wavevector(idx);
            k.iter()
                .zip(&hats)
                .map(|(kc, hat)| Complex64::new(0.0, *kc) * hat[idx])
                .sum()
        })
        .collect();
    sp.inverse_real(div)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeDecomposition {
    /// Zero-mean potential.
    pub h: Vec<f64>,
    pub gradient: TorusField,
    /// Divergence-free remainder.
    pub y: TorusField,
}

pub fn hodge_decompose(x: &TorusField) -> HodgeDecomposition {
    let mut sp = Spectral::new(x.dim, x.size);
    let hats: Vec<Vec<Complex64>> = x.components.iter().map(|c| sp.forward(c)).collect();
    let len = hats[0].len();
    let mut h_hat = vec![Complex64::default(); len];
    let mut grad_hat = vec![vec![Complex64::default(); len]; x.dim];
    let mut y_hat = hats.clone();
    for idx in 0..len {
        let k = sp.wavevector(idx);
        let k2: f64 = k.iter().map(|v| v * v).sum();
        if k2 == 0.0 {
            continue;
        }
        let kx: Complex64 = k.iter().zip(&hats).map(|(kc, hat)| *kc * hat[idx]).sum();
        h_hat[idx] = Complex64::new(0.0, -1.0) * kx / k2;
        for c in 0..x.dim {
            let g = k[c] * kx / k2;
            grad_hat[c][idx] = g;
            y_hat[c][idx] -= g;
        }
    }
    let field = |hat: Vec<Vec<Complex64>>, sp: &mut Spectral| TorusField {
        dim: x.dim,
        size: x.size,
        components: hat.into_iter().map(|c| sp.inverse_real(c)).collect(),
    };
    HodgeDecomposition {
        h: sp.inverse_real(h_hat),
        gradient: field(grad_hat, &mut sp),
        y: field(y_hat, &mut sp),
    }
}

/// Quality measures of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodgeChecks {
    /// `sup |∇h + Y - X|`.
    pub reconstruction: f64,
    /// `sup |div Y|`.
    pub divergence: f64,
    /// `|∫⟨∇h, Y⟩| / ‖X‖²_{L²}`.
    pub orthogonality: f64,
    /// `sup |h'|` where `Y = ∇h' + Y'`.
    pub idempotence: f64,
}

pub fn checks(x: &TorusField, d: &HodgeDecomposition) -> HodgeChecks {
    let norm2 = x.inner(x).max(f64::MIN_POSITIVE);
    HodgeChecks {
        reconstruction: d.gradient.add(&d.y).sub(x).sup_norm(),
        divergence: divergence(&d.y).iter().fold(0.0, |m, v| m.max(v.abs())),
        orthogonality: d.gradient.inner(&d.y).abs() / norm2,
        idempotence: hodge_decompose(&d.y)
            .h
            .iter()
            .fold(0.0, |m, v| m.max(v.abs())),
    }
}
