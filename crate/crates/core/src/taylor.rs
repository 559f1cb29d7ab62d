//! Truncated multivariate Taylor arithmetic.
//!
//! A [`TaylorScalar`] stores the Taylor polynomial of a smooth function around
//! a base point, truncated at total degree `order` (at most [`MAX_ORDER`]).
//! Coefficients use the plain Taylor convention
//!
//! ```text
//! f(x + d) = sum_{|a| <= order} c_a d^a,     c_a = (∂^a f)(x) / a!
//! ```
//!
//! so the partial derivative for multi-index `a` is `a! * c_a`
//! (see [`TaylorScalar::partial`]).
//!
//! Monomials are stored in graded order: all degree-0 terms, then degree 1,
//! and so on. Truncating to a lower order is therefore a prefix of the
//! coefficient vector, and differentiation lowers the order by one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Highest truncation order supported.
pub const MAX_ORDER: usize = 4;
/// Highest number of independent variables supported.
pub const MAX_DIM: usize = 8;

type Exponent = [u8; MAX_DIM];

struct MonomialTable {
    exponents: Vec<Exponent>,
    /// `count_upto[d]` = number of monomials of degree `<= d`.
    count_upto: [usize; MAX_ORDER + 1],
    lookup: HashMap<Exponent, usize>,
    /// `(a, b, c)` with `a <= b` and `exponents[a] + exponents[b] == exponents[c]`,
    /// sorted by the degree of `c`.
    products: Vec<(u32, u32, u32)>,
    products_upto: [usize; MAX_ORDER + 1],
    /// `shift[i][a]` = index of `exponents[a] + e_i`, for `deg(a) < MAX_ORDER`.
    shift: Vec<Vec<u32>>,
    factorial: Vec<f64>,
}

impl MonomialTable {
    fn build(dim: usize) -> Self {
        let mut exponents = Vec::new();
        let mut count_upto = [0; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut current = [0u8; MAX_DIM];
            push_degree(dim, 0, degree, &mut current, &mut exponents);
            count_upto[degree] = exponents.len();
        }
        let lookup: HashMap<Exponent, usize> =
            exponents.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut products = Vec::new();
        let mut products_upto = [0; MAX_ORDER + 1];
        let mut next = 0;
        for degree in 0..=MAX_ORDER {
            for (c, ec) in exponents
                .iter()
                .enumerate()
                .take(count_upto[degree])
                .skip(next)
            {
                for (a, ea) in exponents.iter().enumerate().take(c + 1) {
                    if (0..dim).all(|i| ea[i] <= ec[i]) {
                        let mut eb = [0u8; MAX_DIM];
                        for i in 0..dim {
                            eb[i] = ec[i] - ea[i];
                        }
                        let b = lookup[&eb];
                        if a <= b {
                            products.push((a as u32, b as u32, c as u32));
                        }
                    }
                }
            }
            next = count_upto[degree];
            products_upto[degree] = products.len();
        }

        let below_top = count_upto[MAX_ORDER - 1];
        let shift = (0..dim)
            .map(|i| {
                exponents[..below_top]
                    .iter()
                    .map(|e| {
                        let mut s = *e;
                        s[i] += 1;
                        lookup[&s] as u32
                    })
                    .collect()
            })
            .collect();

        let factorial = exponents
            .iter()
            .map(|e| e.iter().map(|&k| factorial(k as usize)).product())
            .collect();

        MonomialTable {
            exponents,
            count_upto,
            lookup,
            products,
            products_upto,
            shift,
            factorial,
        }
    }
}

fn push_degree(
    dim: usize,
    var: usize,
    remaining: usize,
    current: &mut Exponent,
    out: &mut Vec<Exponent>,
) {
    if var + 1 == dim {
        current[var] = remaining as u8;
        out.push(*current);
        current[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_degree(dim, var + 1, remaining - k, current, out);
    }
    current[var] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn table(dim: usize) -> &'static MonomialTable {
    static TABLES: [OnceLock<MonomialTable>; MAX_DIM] = [const { OnceLock::new() }; MAX_DIM];
    assert!(
        (1..=MAX_DIM).contains(&dim),
        "taylor dimension {dim} outside 1..={MAX_DIM}"
    );
    TABLES[dim - 1].get_or_init(|| MonomialTable::build(dim))
}

/// Number of stored coefficients for `dim` variables truncated at `order`.
pub fn coefficient_count(dim: usize, order: usize) -> usize {
    table(dim).count_upto[order]
}

/// Truncated multivariate Taylor polynomial.
#[derive(Clone, PartialEq)]
pub struct TaylorScalar {
    dim: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for TaylorScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaylorScalar")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl TaylorScalar {
    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER);
        let mut coeffs = vec![0.0; coefficient_count(dim, order)];
        coeffs[0] = value;
        TaylorScalar { dim, order, coeffs }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, 0.0)
    }

    /// The independent variable `var` expanded around `value`.
    pub fn variable(dim: usize, order: usize, var: usize, value: f64) -> Self {
        assert!(var < dim);
        let mut s = Self::constant(dim, order, value);
        if order >= 1 {
            // Degree-one monomials follow the constant, ordered e_0, e_1, ...
            s.coeffs[1 + var] = 1.0;
        }
        s
    }

    /// Builds a scalar from raw coefficients in graded order.
    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), coefficient_count(dim, order));
        TaylorScalar { dim, order, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Exponent vectors matching [`coeffs`](Self::coeffs), truncated to `dim` entries.
    pub fn exponents(&self) -> impl Iterator<Item = &[u8]> + '_ {
        let dim = self.dim;
        table(dim).exponents[..self.coeffs.len()]
            .iter()
            .map(move |e| &e[..dim])
    }

    /// Taylor coefficient for the given exponent vector, or 0 beyond the stored order.
    pub fn coeff(&self, exponent: &[u8]) -> f64 {
        assert_eq!(exponent.len(), self.dim);
        let mut key = [0u8; MAX_DIM];
        key[..self.dim].copy_from_slice(exponent);
        match table(self.dim).lookup.get(&key) {
            Some(&i) if i < self.coeffs.len() => self.coeffs[i],
            _ => 0.0,
        }
    }

    /// Mixed partial derivative `∂_{vars[0]} ∂_{vars[1]} ...` at the base point.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut exponent = [0u8; MAX_DIM];
        for &v in vars {
            assert!(v < self.dim);
            exponent[v] += 1;
        }
        if vars.len() > self.order {
            return 0.0;
        }
        let t = table(self.dim);
        let i = t.lookup[&exponent];
        self.coeffs[i] * t.factorial[i]
    }

    /// Gradient at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                if self.order >= 1 {
                    self.coeffs[1 + i]
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Partial derivative with respect to `var` as a new series of order `order - 1`.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 series");
        assert!(var < self.dim);
        let t = table(self.dim);
        let order = self.order - 1;
        let n = t.count_upto[order];
        let coeffs = (0..n)
            .map(|a| {
                let s = t.shift[var][a] as usize;
                (t.exponents[a][var] as f64 + 1.0) * self.coeffs[s]
            })
            .collect();
        TaylorScalar {
            dim: self.dim,
            order,
            coeffs,
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        TaylorScalar {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..coefficient_count(self.dim, order)].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, factor: f64) -> Self {
        TaylorScalar {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let order = self.order.min(other.order);
        let t = table(self.dim);
        let mut coeffs = vec![0.0; t.count_upto[order]];
        for &(a, b, c) in &t.products[..t.products_upto[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
            if a != b {
                coeffs[c as usize] += self.coeffs[b as usize] * other.coeffs[a as usize];
            }
        }
        TaylorScalar {
            dim: self.dim,
            order,
            coeffs,
        }
    }

    /// Evaluates `sum_m taylor[m] * (self - value)^m`, where `taylor[m]` is
    /// `f^(m)(value) / m!` for a univariate function `f`.
    fn compose(&self, derivs: [f64; MAX_ORDER + 1]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut result = TaylorScalar::constant(
            self.dim,
            self.order,
            derivs[self.order] / factorial(self.order),
        );
        for m in (0..self.order).rev() {
            result = result.mul_ref(&delta);
            result.coeffs[0] += derivs[m] / factorial(m);
        }
        result
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        self.compose([
            a.ln(),
            1.0 / a,
            -1.0 / (a * a),
            2.0 / (a * a * a),
            -6.0 / (a * a * a * a),
        ])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([s, c, s, c, s])
    }

    pub fn cosh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([c, s, c, s, c])
    }

    pub fn tanh(&self) -> Self {
        let t = self.value().tanh();
        let d1 = 1.0 - t * t;
        let d2 = -2.0 * t * d1;
        let d3 = -2.0 * (d1 * d1 + t * d2);
        let d4 = -2.0 * (3.0 * d1 * d2 + t * d3);
        self.compose([t, d1, d2, d3, d4])
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([
            r,
            -r * r,
            2.0 * r * r * r,
            -6.0 * r.powi(4),
            24.0 * r.powi(5),
        ])
    }

    /// Real power `self^p`; requires a positive value unless `p` is an integer.
    pub fn powf(&self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            let mut r = self.powi(p as i32);
            r.coeffs[0] = self.value().powf(p);
            return r;
        }
        let a = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (m, d) in derivs.iter_mut().enumerate() {
            *d = falling * a.powf(p - m as f64);
            falling *= p - m as f64;
        }
        self.compose(derivs)
    }

    pub fn powi(&self, n: i32) -> Self {
        let a = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (m, d) in derivs.iter_mut().enumerate() {
            *d = if falling == 0.0 {
                0.0
            } else {
                falling * a.powi(n - m as i32)
            };
            falling *= n as f64 - m as f64;
        }
        self.compose(derivs)
    }

    /// `self^exponent` as `exp(exponent * ln self)`, with the value taken from `f64::powf`.
    pub fn pow(&self, exponent: &Self) -> Self {
        let mut r = (exponent * &self.ln()).exp();
        r.coeffs[0] = self.value().powf(exponent.value());
        r
    }

    pub fn sqrt(&self) -> Self {
        let mut r = self.powf(0.5);
        r.coeffs[0] = self.value().sqrt();
        r
    }

    /// `|self|`, differentiable away from zero.
    pub fn abs(&self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self.clone()
        }
    }
}

impl Neg for &TaylorScalar {
    type Output = TaylorScalar;
    fn neg(self) -> TaylorScalar {
        self.scale(-1.0)
    }
}

impl Neg for TaylorScalar {
    type Output = TaylorScalar;
    fn neg(mut self) -> TaylorScalar {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl AddAssign<&TaylorScalar> for TaylorScalar {
    fn add_assign(&mut self, rhs: &TaylorScalar) {
        debug_assert_eq!(self.dim, rhs.dim);
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c += r;
        }
    }
}

impl SubAssign<&TaylorScalar> for TaylorScalar {
    fn sub_assign(&mut self, rhs: &TaylorScalar) {
        debug_assert_eq!(self.dim, rhs.dim);
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= r;
        }
    }
}

impl MulAssign<&TaylorScalar> for TaylorScalar {
    fn mul_assign(&mut self, rhs: &TaylorScalar) {
        *self = self.mul_ref(rhs);
    }
}

impl AddAssign<f64> for TaylorScalar {
    fn add_assign(&mut self, rhs: f64) {
        self.coeffs[0] += rhs;
    }
}

impl MulAssign<f64> for TaylorScalar {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

macro_rules! binary_ops {
    ($($lhs:ty, $rhs:ty);*) => {$(
        impl Add<$rhs> for $lhs {
            type Output = TaylorScalar;
            fn add(self, rhs: $rhs) -> TaylorScalar {
                let r: &TaylorScalar = &rhs;
                let mut out = self.clone();
                out += r;
                out
            }
        }
        impl Sub<$rhs> for $lhs {
            type Output = TaylorScalar;
            fn sub(self, rhs: $rhs) -> TaylorScalar {
                let r: &TaylorScalar = &rhs;
                let mut out = self.clone();
                out -= r;
                out
            }
        }
        impl Mul<$rhs> for $lhs {
            type Output = TaylorScalar;
            fn mul(self, rhs: $rhs) -> TaylorScalar {
                self.mul_ref(&rhs)
            }
        }
        impl Div<$rhs> for $lhs {
            type Output = TaylorScalar;
            fn div(self, rhs: $rhs) -> TaylorScalar {
                let mut q = self.mul_ref(&rhs.recip());
                // match plain f64 division exactly
                q.coeffs[0] = self.coeffs[0] / rhs.coeffs[0];
                q
            }
        }
    )*};
}

binary_ops!(&TaylorScalar, &TaylorScalar; TaylorScalar, TaylorScalar; TaylorScalar, &TaylorScalar; &TaylorScalar, TaylorScalar);

macro_rules! scalar_ops {
    ($($lhs:ty),*) => {$(
        impl Add<f64> for $lhs {
            type Output = TaylorScalar;
            fn add(self, rhs: f64) -> TaylorScalar {
                let mut out = self.clone();
                out.coeffs[0] += rhs;
                out
            }
        }
        impl Sub<f64> for $lhs {
            type Output = TaylorScalar;
            fn sub(self, rhs: f64) -> TaylorScalar {
                let mut out = self.clone();
                out.coeffs[0] -= rhs;
                out
            }
        }
        impl Mul<f64> for $lhs {
            type Output = TaylorScalar;
            fn mul(self, rhs: f64) -> TaylorScalar {
                self.scale(rhs)
            }
        }
        impl Div<f64> for $lhs {
            type Output = TaylorScalar;
            fn div(self, rhs: f64) -> TaylorScalar {
                self.scale(1.0 / rhs)
            }
        }
    )*};
}

scalar_ops!(&TaylorScalar, TaylorScalar);
