//! Prime-field scalars, dense matrices over the field, and the Vandermonde
//! solvers used for interpolation and reconstruction.
//!
//! The modulus is a runtime value carried by [`PrimeField`]. Elements and
//! matrices remember which field they live in; mixing moduli is a logic
//! error and panics.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand_core::RngCore;
use thiserror::Error;

use crate::powersets::PowerSet;

/// Mersenne prime 2^61 - 1, the default modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not a prime below 2^63")]
    NotPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("interpolation points are not distinct")]
    DuplicatePoints,
    #[error("generalized Vandermonde matrix on the requested support is singular")]
    SingularSupportMatrix,
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A prime field `F_p` with `p < 2^63`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PrimeField {
    modulus: u64,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.modulus)
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        Self::mersenne61()
    }
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if modulus >= 1 << 63 || !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self { modulus })
    }

    pub const fn mersenne61() -> Self {
        Self {
            modulus: MERSENNE_61,
        }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.modulus,
            field: *self,
        }
    }

    /// Reduces a signed integer into the field.
    pub fn from_i64(&self, value: i64) -> FieldElement {
        let p = self.modulus as i128;
        let v = (value as i128).rem_euclid(p) as u64;
        FieldElement {
            value: v,
            field: *self,
        }
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Uniform element by rejection sampling on the bit length of `p`.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            value: self.random_raw(rng),
            field: *self,
        }
    }

    pub(crate) fn random_raw<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        let bits = 64 - (self.modulus - 1).leading_zeros();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        loop {
            let candidate = rng.next_u64() & mask;
            if candidate < self.modulus {
                return candidate;
            }
        }
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub(crate) fn pow_raw(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        let mut b = base % self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, b);
            }
            b = self.mul_raw(b, b);
            exp >>= 1;
        }
        acc
    }

    pub(crate) fn inv_raw(&self, a: u64) -> Result<u64, FieldError> {
        if a.is_multiple_of(self.modulus) {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow_raw(a, self.modulus - 2))
    }
}

/// Deterministic Miller-Rabin for 64-bit inputs.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An element of a [`PrimeField`], always reduced into `[0, p)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn pow(&self, exp: u64) -> Self {
        Self {
            value: self.field.pow_raw(self.value, exp),
            field: self.field,
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inverse(&self) -> Result<Self, FieldError> {
        Ok(Self {
            value: self.field.inv_raw(self.value)?,
            field: self.field,
        })
    }

    #[inline]
    fn check(&self, other: &Self) {
        assert_eq!(self.field, other.field, "mixed field moduli");
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: self.field.add_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: self.field.sub_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: self.field.mul_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: self.field.sub_raw(0, self.value),
            field: self.field,
        }
    }
}

/// Dense row-major matrix over a prime field.
///
/// Used both for data blocks (`A_{i,j}`, shares, `H(α_n)`) and for scalar
/// systems such as Vandermonde inverses.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockMatrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<u64>,
}

impl fmt::Debug for BlockMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BlockMatrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl BlockMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            field,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.modulus();
        }
        m
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> u64,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c) % field.modulus());
            }
        }
        Self {
            rows,
            cols,
            field,
            data,
        }
    }

    /// Builds a matrix from row-major values, reducing each modulo `p`.
    pub fn from_values(
        field: PrimeField,
        rows: usize,
        cols: usize,
        values: &[u64],
    ) -> Result<Self, FieldError> {
        if values.len() != rows * cols {
            return Err(FieldError::LengthMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Ok(Self::from_fn(field, rows, cols, |r, c| values[r * cols + c]))
    }

    pub fn random<R: RngCore + ?Sized>(
        field: PrimeField,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..rows * cols).map(|_| field.random_raw(rng)).collect();
        Self {
            rows,
            cols,
            field,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of scalars stored in the matrix.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Raw row-major entries in `[0, p)`.
    #[inline]
    pub fn values(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> FieldElement {
        FieldElement {
            value: self.data[row * self.cols + col],
            field: self.field,
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: FieldElement) {
        assert_eq!(self.field, value.field, "mixed field moduli");
        self.data[row * self.cols + col] = value.value;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn shape_error(&self, other: &Self) -> FieldError {
        FieldError::ShapeMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    /// Schoolbook product; costs exactly `rows * inner * cols` scalar
    /// multiplications.
    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        assert_eq!(self.field, other.field, "mixed field moduli");
        if self.cols != other.rows {
            return Err(self.shape_error(other));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = f.add_raw(*d, f.mul_raw(a, b));
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), FieldError> {
        assert_eq!(self.field, other.field, "mixed field moduli");
        if self.shape() != other.shape() {
            return Err(self.shape_error(other));
        }
        let f = self.field;
        for (d, &b) in self.data.iter_mut().zip(&other.data) {
            *d = f.add_raw(*d, b);
        }
        Ok(())
    }

    /// `self += scalar * other`.
    pub fn add_scaled(&mut self, scalar: FieldElement, other: &Self) -> Result<(), FieldError> {
        assert_eq!(self.field, other.field, "mixed field moduli");
        if self.shape() != other.shape() {
            return Err(self.shape_error(other));
        }
        let f = self.field;
        let s = scalar.value;
        for (d, &b) in self.data.iter_mut().zip(&other.data) {
            *d = f.add_raw(*d, f.mul_raw(s, b));
        }
        Ok(())
    }

    pub fn scale(&self, scalar: FieldElement) -> Self {
        assert_eq!(self.field, scalar.field, "mixed field moduli");
        let f = self.field;
        Self {
            rows: self.rows,
            cols: self.cols,
            field: f,
            data: self.data.iter().map(|&v| f.mul_raw(v, scalar.value)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |r, c| {
            self.data[c * self.cols + r]
        })
    }

    /// Copies the `rows x cols` sub-block whose top-left corner is `(row0, col0)`.
    pub fn sub_block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        Self::from_fn(self.field, rows, cols, |r, c| {
            self.data[(row0 + r) * self.cols + col0 + c]
        })
    }

    /// Writes `block` with its top-left corner at `(row0, col0)`.
    pub fn put_block(&mut self, row0: usize, col0: usize, block: &Self) {
        assert!(row0 + block.rows <= self.rows && col0 + block.cols <= self.cols);
        for r in 0..block.rows {
            let dst = (row0 + r) * self.cols + col0;
            self.data[dst..dst + block.cols]
                .copy_from_slice(&block.data[r * block.cols..(r + 1) * block.cols]);
        }
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let f = self.field;
        let mut m = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            if pivot != rank {
                for c in 0..cols {
                    m.swap(pivot * cols + c, rank * cols + c);
                }
            }
            let inv = f.inv_raw(m[rank * cols + col]).expect("pivot is nonzero");
            for r in rank + 1..rows {
                let factor = f.mul_raw(m[r * cols + col], inv);
                if factor == 0 {
                    continue;
                }
                for c in col..cols {
                    let sub = f.mul_raw(factor, m[rank * cols + c]);
                    m[r * cols + c] = f.sub_raw(m[r * cols + c], sub);
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    /// Inverse by Gauss-Jordan elimination. Fails with
    /// [`FieldError::SingularSupportMatrix`] when no inverse exists.
    pub fn inverse(&self) -> Result<Self, FieldError> {
        if self.rows != self.cols {
            return Err(self.shape_error(self));
        }
        let n = self.rows;
        let f = self.field;
        let w = 2 * n;
        let mut aug = vec![0u64; n * w];
        for r in 0..n {
            aug[r * w..r * w + n].copy_from_slice(&self.data[r * n..(r + 1) * n]);
            aug[r * w + n + r] = 1 % f.modulus();
        }
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| aug[r * w + col] != 0)
                .ok_or(FieldError::SingularSupportMatrix)?;
            if pivot != col {
                for c in 0..w {
                    aug.swap(pivot * w + c, col * w + c);
                }
            }
            let inv = f.inv_raw(aug[col * w + col])?;
            for c in 0..w {
                aug[col * w + c] = f.mul_raw(aug[col * w + c], inv);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug[r * w + col];
                if factor == 0 {
                    continue;
                }
                for c in 0..w {
                    let sub = f.mul_raw(factor, aug[col * w + c]);
                    aug[r * w + c] = f.sub_raw(aug[r * w + c], sub);
                }
            }
        }
        Ok(Self::from_fn(f, n, n, |r, c| aug[r * w + n + c]))
    }
}

fn ensure_distinct(points: &[FieldElement]) -> Result<(), FieldError> {
    let mut seen: Vec<u64> = points.iter().map(|p| p.value).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(FieldError::DuplicatePoints);
    }
    Ok(())
}

/// Inverse of the dense Vandermonde matrix `V[i][j] = x_i^j`, built from the
/// Lagrange basis polynomials. Row `j` of the result maps point values to the
/// coefficient of `x^j`.
pub fn vandermonde_inverse(points: &[FieldElement]) -> Result<BlockMatrix, FieldError> {
    ensure_distinct(points)?;
    let k = points.len();
    if k == 0 {
        return Ok(BlockMatrix::zeros(PrimeField::default(), 0, 0));
    }
    let f = points[0].field;
    let xs: Vec<u64> = points.iter().map(|p| p.value).collect();

    // master(x) = prod (x - x_i), coefficients low to high
    let mut master = vec![0u64; k + 1];
    master[0] = 1 % f.modulus();
    for (deg, &x) in xs.iter().enumerate() {
        for j in (0..=deg + 1).rev() {
            let shifted = if j > 0 { master[j - 1] } else { 0 };
            let scaled = f.mul_raw(master[j], x);
            master[j] = f.sub_raw(shifted, scaled);
        }
    }

    let mut inv = BlockMatrix::zeros(f, k, k);
    let mut basis = vec![0u64; k];
    for (i, &xi) in xs.iter().enumerate() {
        // synthetic division master(x) / (x - x_i)
        let mut carry = master[k];
        for j in (0..k).rev() {
            basis[j] = carry;
            carry = f.add_raw(master[j], f.mul_raw(carry, xi));
        }
        let mut denom = 1 % f.modulus();
        for (j, &xj) in xs.iter().enumerate() {
            if j != i {
                denom = f.mul_raw(denom, f.sub_raw(xi, xj));
            }
        }
        let w = f.inv_raw(denom)?;
        for (j, &b) in basis.iter().enumerate() {
            inv.data[j * k + i] = f.mul_raw(b, w);
        }
    }
    Ok(inv)
}

/// Recovers the coefficients `c_0..c_{k-1}` of the block polynomial
/// `sum_j c_j x^j` passing through every `(points[i], values[i])`.
pub fn solve_vandermonde(
    points: &[FieldElement],
    values: &[BlockMatrix],
) -> Result<Vec<BlockMatrix>, FieldError> {
    if points.len() != values.len() {
        return Err(FieldError::LengthMismatch {
            expected: points.len(),
            actual: values.len(),
        });
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let inv = vandermonde_inverse(points)?;
    let (rows, cols) = values[0].shape();
    let f = values[0].field;
    for v in values {
        if v.shape() != (rows, cols) {
            return Err(values[0].shape_error(v));
        }
    }
    let k = points.len();
    (0..k)
        .map(|j| {
            let mut acc = BlockMatrix::zeros(f, rows, cols);
            for (i, v) in values.iter().enumerate() {
                acc.add_scaled(inv.get(j, i), v)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Generalized Vandermonde matrix `M[n][j] = points[n]^{support[j]}`.
pub fn generalized_vandermonde(points: &[FieldElement], support: &PowerSet) -> BlockMatrix {
    let f = points.first().map(|p| p.field).unwrap_or_default();
    let exps = support.as_slice();
    BlockMatrix::from_fn(f, points.len(), exps.len(), |n, j| {
        f.pow_raw(points[n].value, exps[j])
    })
}

/// Inverse of the generalized Vandermonde matrix on `support`. Row `j` of the
/// result yields the coefficients that extract the `support[j]`-th
/// coefficient of a polynomial from its evaluations at `points`.
pub fn invert_on_support(
    points: &[FieldElement],
    support: &PowerSet,
) -> Result<BlockMatrix, FieldError> {
    if points.len() != support.len() {
        return Err(FieldError::LengthMismatch {
            expected: support.len(),
            actual: points.len(),
        });
    }
    ensure_distinct(points)?;
    if points.iter().any(|p| p.is_zero()) {
        return Err(FieldError::SingularSupportMatrix);
    }
    generalized_vandermonde(points, support).inverse()
}
