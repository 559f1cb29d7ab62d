//! Dense pointwise tensors, index arithmetic and symmetric spectra.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("slot {slot} out of range for a rank-{rank} tensor")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("cannot contract slots {a} and {b}: both are {variance:?}")]
    VarianceMismatch {
        a: usize,
        b: usize,
        variance: Variance,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected a tensor of valence {expected:?}, found {found:?}")]
    Valence {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite tensor entries")]
    NonFinite,
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("index k = {k} outside 0..={n}")]
    IndexOutOfRange { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Contravariant,
    Covariant,
}

/// Dense tensor at a point. Components are stored row-major in slot order;
/// each slot carries its own variance.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    dim: usize,
    slots: Vec<Variance>,
    components: Vec<f64>,
}

impl TensorValue {
    pub fn new(dim: usize, slots: Vec<Variance>, components: Vec<f64>) -> Self {
        assert_eq!(
            components.len(),
            dim.pow(slots.len() as u32),
            "component count does not match shape"
        );
        TensorValue {
            dim,
            slots,
            components,
        }
    }

    pub fn zeros(dim: usize, slots: Vec<Variance>) -> Self {
        let len = dim.pow(slots.len() as u32);
        TensorValue {
            dim,
            slots,
            components: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        TensorValue {
            dim: 0,
            slots: Vec::new(),
            components: vec![value],
        }
    }

    /// All-covariant tensor of the given rank.
    pub fn covariant(dim: usize, rank: usize, components: Vec<f64>) -> Self {
        Self::new(dim, vec![Variance::Covariant; rank], components)
    }

    /// (1,1) tensor (endomorphism) from a row-major matrix `m[i][j] = T^i_j`.
    pub fn endomorphism(dim: usize, components: Vec<f64>) -> Self {
        Self::new(
            dim,
            vec![Variance::Contravariant, Variance::Covariant],
            components,
        )
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim, vec![Variance::Contravariant, Variance::Covariant]);
        for i in 0..dim {
            t.components[i * dim + i] = 1.0;
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    /// `(contravariant count, covariant count)`.
    pub fn valence(&self) -> (usize, usize) {
        let p = self
            .slots
            .iter()
            .filter(|v| **v == Variance::Contravariant)
            .count();
        (p, self.slots.len() - p)
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.slots.len());
        index.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.components[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.components[o] = value;
    }

    /// Value of a rank-0 tensor.
    pub fn as_scalar(&self) -> f64 {
        assert!(self.slots.is_empty());
        self.components[0]
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), TensorError> {
        if self.dim != other.dim {
            return Err(TensorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.slots != other.slots {
            return Err(TensorError::Valence {
                expected: self.valence(),
                found: other.valence(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TensorValue {
            dim: self.dim,
            slots: self.slots.clone(),
            components,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TensorValue {
            dim: self.dim,
            slots: self.slots.clone(),
            components,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        TensorValue {
            dim: self.dim,
            slots: self.slots.clone(),
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }

    /// Tensor product `self ⊗ other`.
    pub fn outer(&self, other: &Self) -> Result<Self, TensorError> {
        if self.rank() > 0 && other.rank() > 0 && self.dim != other.dim {
            return Err(TensorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let dim = self.dim.max(other.dim);
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            components.extend(other.components.iter().map(|b| a * b));
        }
        Ok(TensorValue {
            dim,
            slots,
            components,
        })
    }

    fn check_slot(&self, slot: usize) -> Result<(), TensorError> {
        if slot >= self.rank() {
            Err(TensorError::SlotOutOfRange {
                slot,
                rank: self.rank(),
            })
        } else {
            Ok(())
        }
    }

    /// Single contraction of a contravariant slot against a covariant one.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<Self, TensorError> {
        self.check_slot(slot_a)?;
        self.check_slot(slot_b)?;
        if slot_a == slot_b || self.slots[slot_a] == self.slots[slot_b] {
            return Err(TensorError::VarianceMismatch {
                a: slot_a,
                b: slot_b,
                variance: self.slots[slot_a],
            });
        }
        Ok(self.trace_pair(slot_a, slot_b, None))
    }

    /// Contraction of two slots of equal variance through a metric: `g^{ab}`
    /// for covariant pairs, `g_{ab}` for contravariant pairs. `metric` must be
    /// the matching (2,0) or (0,2) tensor.
    pub fn metric_contract(
        &self,
        slot_a: usize,
        slot_b: usize,
        metric: &TensorValue,
    ) -> Result<Self, TensorError> {
        self.check_slot(slot_a)?;
        self.check_slot(slot_b)?;
        if metric.dim != self.dim {
            return Err(TensorError::DimensionMismatch {
                left: self.dim,
                right: metric.dim,
            });
        }
        let va = self.slots[slot_a];
        if slot_a == slot_b || va != self.slots[slot_b] {
            return Err(TensorError::VarianceMismatch {
                a: slot_a,
                b: slot_b,
                variance: va,
            });
        }
        let needed = match va {
            Variance::Covariant => Variance::Contravariant,
            Variance::Contravariant => Variance::Covariant,
        };
        if metric.slots != [needed, needed] {
            return Err(TensorError::Valence {
                expected: if needed == Variance::Contravariant {
                    (2, 0)
                } else {
                    (0, 2)
                },
                found: metric.valence(),
            });
        }
        Ok(self.trace_pair(slot_a, slot_b, Some(metric)))
    }

    fn trace_pair(&self, slot_a: usize, slot_b: usize, metric: Option<&TensorValue>) -> Self {
        let n = self.dim;
        let rank = self.rank();
        let slots: Vec<Variance> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != slot_a && *s != slot_b)
            .map(|(_, v)| *v)
            .collect();
        let out_rank = rank - 2;
        let mut out = TensorValue::zeros(if out_rank == 0 { 0 } else { n }, slots);
        let mut full = vec![0; rank];
        for (o, value) in out.components.iter_mut().enumerate() {
            // Unpack the output multi-index into the remaining slots.
            let mut rest = o;
            for s in (0..rank).rev() {
                if s == slot_a || s == slot_b {
                    continue;
                }
                full[s] = rest % n;
                rest /= n;
            }
            let mut acc = 0.0;
            for i in 0..n {
                full[slot_a] = i;
                match metric {
                    None => {
                        full[slot_b] = i;
                        acc += self.get(&full);
                    }
                    Some(m) => {
                        for j in 0..n {
                            full[slot_b] = j;
                            acc += m.components[i * n + j] * self.get(&full);
                        }
                    }
                }
            }
            *value = acc;
        }
        out
    }

    /// Lowers `slot` with `metric` (0,2).
    pub fn lower(&self, slot: usize, metric: &TensorValue) -> Result<Self, TensorError> {
        self.move_index(slot, metric, Variance::Contravariant)
    }

    /// Raises `slot` with the inverse metric (2,0).
    pub fn raise(&self, slot: usize, inverse_metric: &TensorValue) -> Result<Self, TensorError> {
        self.move_index(slot, inverse_metric, Variance::Covariant)
    }

    fn move_index(
        &self,
        slot: usize,
        metric: &TensorValue,
        from: Variance,
    ) -> Result<Self, TensorError> {
        self.check_slot(slot)?;
        if metric.dim != self.dim {
            return Err(TensorError::DimensionMismatch {
                left: self.dim,
                right: metric.dim,
            });
        }
        if self.slots[slot] != from {
            return Err(TensorError::VarianceMismatch {
                a: slot,
                b: slot,
                variance: self.slots[slot],
            });
        }
        let to = match from {
            Variance::Covariant => Variance::Contravariant,
            Variance::Contravariant => Variance::Covariant,
        };
        if metric.slots != [to, to] {
            return Err(TensorError::Valence {
                expected: if to == Variance::Contravariant {
                    (2, 0)
                } else {
                    (0, 2)
                },
                found: metric.valence(),
            });
        }
        let n = self.dim;
        let mut out = self.clone();
        out.slots[slot] = to;
        let stride = n.pow((self.rank() - slot - 1) as u32);
        for (o, value) in out.components.iter_mut().enumerate() {
            let i = (o / stride) % n;
            let base = o - i * stride;
            *value = (0..n)
                .map(|j| metric.components[i * n + j] * self.components[base + j * stride])
                .sum();
        }
        Ok(out)
    }

    /// `(T + T^t) / 2` for a rank-2 tensor with matching slots.
    pub fn symmetrize(&self) -> Result<Self, TensorError> {
        if self.rank() != 2 || self.slots[0] != self.slots[1] {
            return Err(TensorError::Valence {
                expected: (0, 2),
                found: self.valence(),
            });
        }
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.components[i * n + j] =
                    0.5 * (self.components[i * n + j] + self.components[j * n + i]);
            }
        }
        Ok(out)
    }

    /// Norm induced by the metric, `sqrt(T_{a..} T_{b..} g^{ab} ...)`, for
    /// all-covariant tensors given the inverse metric.
    pub fn metric_norm(&self, inverse_metric: &TensorValue) -> Result<f64, TensorError> {
        let mut raised = self.clone();
        for slot in 0..self.rank() {
            raised = raised.raise(slot, inverse_metric)?;
        }
        let sq: f64 = raised
            .components
            .iter()
            .zip(&self.components)
            .map(|(a, b)| a * b)
            .sum();
        Ok(sq.max(0.0).sqrt())
    }

    /// Matrix product of two (1,1) tensors, `(A B)^i_j = A^i_k B^k_j`.
    pub fn compose(&self, other: &Self) -> Result<Self, TensorError> {
        let mixed = [Variance::Contravariant, Variance::Covariant];
        if self.slots != mixed {
            return Err(TensorError::Valence {
                expected: (1, 1),
                found: self.valence(),
            });
        }
        if other.slots != mixed {
            return Err(TensorError::Valence {
                expected: (1, 1),
                found: other.valence(),
            });
        }
        if self.dim != other.dim {
            return Err(TensorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(TensorValue::endomorphism(
            self.dim,
            mat_mul(self.dim, &self.components, &other.components),
        ))
    }

    /// Trace of a (1,1) tensor.
    pub fn trace(&self) -> Result<f64, TensorError> {
        Ok(self.contract(0, 1)?.as_scalar())
    }
}

/// Kulkarni–Nomizu product of symmetric (0,2) tensors:
/// `(a ⊠ b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il`.
pub fn kulkarni_nomizu(a: &TensorValue, b: &TensorValue) -> Result<TensorValue, TensorError> {
    for t in [a, b] {
        if t.slots != [Variance::Covariant, Variance::Covariant] {
            return Err(TensorError::Valence {
                expected: (0, 2),
                found: t.valence(),
            });
        }
    }
    if a.dim != b.dim {
        return Err(TensorError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    let n = a.dim;
    let (a, b) = (&a.components, &b.components);
    let mut out = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[((i * n + j) * n + k) * n + l] = a[i * n + k] * b[j * n + l]
                        + a[j * n + l] * b[i * n + k]
                        - a[i * n + l] * b[j * n + k]
                        - a[j * n + k] * b[i * n + l];
                }
            }
        }
    }
    Ok(TensorValue::covariant(n, 4, out))
}

// ---------------------------------------------------------------------------
// Small dense linear algebra on row-major square matrices.

pub(crate) fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(n: usize, m: &[f64]) -> Result<Vec<f64>, TensorError> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(TensorError::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
fn lower_inverse(n: usize, l: &[f64]) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[i * n + k] * inv[k * n + col];
            }
            inv[i * n + col] = s / l[i * n + i];
        }
    }
    inv
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(n: usize, m: &[f64]) -> Result<Vec<f64>, TensorError> {
    let l = cholesky(n, m)?;
    let li = lower_inverse(n, &l);
    // m^-1 = L^-T L^-1
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (i.max(j)..n).map(|k| li[k * n + i] * li[k * n + j]).sum();
        }
    }
    Ok(out)
}

/// Off-diagonal tolerance of the Jacobi sweeps, relative to the Frobenius norm.
const JACOBI_TOLERANCE: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(n: usize, m: &[f64]) -> Result<Vec<f64>, TensorError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(TensorError::NonFinite);
    }
    let mut a = m.to_vec();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = JACOBI_TOLERANCE * frob.max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// Ascending eigenvalues of a metric-self-adjoint endomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpectrum {
    eigenvalues: Vec<f64>,
}

impl SymmetricSpectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|x, y| x.total_cmp(y));
        SymmetricSpectrum { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Eigenvalues of the (1,1) tensor `m`, self-adjoint with respect to `metric`.
///
/// The matrix is brought to the metric-orthonormal frame `L^T m L^-T`
/// (`metric = L L^T`), symmetrized, and diagonalized by Jacobi rotations.
pub fn sym_eigenvalues(
    m: &TensorValue,
    metric: &TensorValue,
) -> Result<SymmetricSpectrum, TensorError> {
    if m.slots != [Variance::Contravariant, Variance::Covariant] {
        return Err(TensorError::Valence {
            expected: (1, 1),
            found: m.valence(),
        });
    }
    if metric.slots != [Variance::Covariant, Variance::Covariant] {
        return Err(TensorError::Valence {
            expected: (0, 2),
            found: metric.valence(),
        });
    }
    if !m.is_finite() || !metric.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let n = m.dim;
    let l = cholesky(n, &metric.components)?;
    let li = lower_inverse(n, &l);
    let mut lt = vec![0.0; n * n];
    let mut lit = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            lt[i * n + j] = l[j * n + i];
            lit[i * n + j] = li[j * n + i];
        }
    }
    let s = mat_mul(n, &mat_mul(n, &lt, &m.components), &lit);
    let mut sym = s.clone();
    for i in 0..n {
        for j in 0..n {
            sym[i * n + j] = 0.5 * (s[i * n + j] + s[j * n + i]);
        }
    }
    Ok(SymmetricSpectrum {
        eigenvalues: jacobi_eigenvalues(n, &sym)?,
    })
}

/// `σ_k` of the spectrum: the degree-`k` coefficient of `Π (1 + λ_i t)`.
pub fn elementary_symmetric(spectrum: &SymmetricSpectrum, k: usize) -> Result<f64, TensorError> {
    let n = spectrum.dim();
    if k > n {
        return Err(TensorError::IndexOutOfRange { k, n });
    }
    Ok(elementary_symmetric_all(spectrum.eigenvalues())[k])
}

/// `[σ_0, σ_1, ..., σ_n]` of the given values.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

/// Elementary symmetric functions from power sums `p_1..p_n` by Newton's
/// identities, `k e_k = Σ_{i=1}^k (-1)^{i-1} e_{k-i} p_i`.
pub fn elementary_from_power_sums(power_sums: &[f64]) -> Vec<f64> {
    let n = power_sums.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power_sums[i - 1];
        }
        e[k] = acc / k as f64;
    }
    e
}
