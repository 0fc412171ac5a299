//! Exponent-set algebra for AGE codes.
//!
//! Everything here is integer arithmetic on sets of polynomial exponents:
//! the coded powers of `C_A` and `C_B`, the secret (mask) powers of `S_A`
//! and `S_B`, the important powers that carry `Y_{i,l}`, and the support of
//! the product `H(x) = F_A(x) F_B(x)` as the union of four sumsets.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("s = t = 1 is not a coded scheme")]
    NoPartitioning,
    #[error("partition counts must be positive (s = {s}, t = {t})")]
    ZeroPartition { s: u64, t: u64 },
    #[error("at least one colluding worker is required")]
    ZeroColluders,
    #[error("lambda = {lambda} must lie in [0, z = {z}]")]
    LambdaOutOfRange { lambda: u64, z: u64 },
    #[error("matrix dimension {m} is not divisible by s = {s} and t = {t}")]
    IndivisibleDimensions { m: u64, s: u64, t: u64 },
}

/// The tuple `(m, s, t, z, λ)` that parameterizes an AGE-CMPC run.
///
/// `m` is optional: worker counts depend only on `(s, t, z, λ)`, costs and
/// protocol runs need the matrix dimension too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PartitionScheme {
    m: Option<u64>,
    s: u64,
    t: u64,
    z: u64,
    lambda: u64,
}

impl PartitionScheme {
    pub fn new(s: u64, t: u64, z: u64, lambda: u64) -> Result<Self, SchemeError> {
        if s == 0 || t == 0 {
            return Err(SchemeError::ZeroPartition { s, t });
        }
        if s == 1 && t == 1 {
            return Err(SchemeError::NoPartitioning);
        }
        if z == 0 {
            return Err(SchemeError::ZeroColluders);
        }
        if lambda > z {
            return Err(SchemeError::LambdaOutOfRange { lambda, z });
        }
        Ok(Self {
            m: None,
            s,
            t,
            z,
            lambda,
        })
    }

    /// Attaches the matrix dimension; `s` and `t` must both divide it.
    pub fn with_m(mut self, m: u64) -> Result<Self, SchemeError> {
        if m == 0 || !m.is_multiple_of(self.s) || !m.is_multiple_of(self.t) {
            return Err(SchemeError::IndivisibleDimensions {
                m,
                s: self.s,
                t: self.t,
            });
        }
        self.m = Some(m);
        Ok(self)
    }

    /// Same scheme with a different gap parameter.
    pub fn with_lambda(self, lambda: u64) -> Result<Self, SchemeError> {
        if lambda > self.z {
            return Err(SchemeError::LambdaOutOfRange { lambda, z: self.z });
        }
        Ok(Self { lambda, ..self })
    }

    pub fn m(&self) -> Option<u64> {
        self.m
    }
    pub fn s(&self) -> u64 {
        self.s
    }
    pub fn t(&self) -> u64 {
        self.t
    }
    pub fn z(&self) -> u64 {
        self.z
    }
    pub fn lambda(&self) -> u64 {
        self.lambda
    }
    pub fn ts(&self) -> u64 {
        self.t * self.s
    }

    /// B-side exponent stride `θ = ts + λ`.
    pub fn theta(&self) -> u64 {
        self.ts() + self.lambda
    }

    /// Number of fully used gap intervals for the A-side masks,
    /// `min(⌊(z-1)/λ⌋, t-1)`, and `t-1` when `λ = 0`.
    pub fn q(&self) -> u64 {
        match (self.z - 1).checked_div(self.lambda) {
            Some(full) => core::cmp::min(full, self.t - 1),
            None => self.t - 1,
        }
    }

    /// Recovery threshold of the master, `t² + z`.
    pub fn recovery_threshold(&self) -> u64 {
        self.t * self.t + self.z
    }
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = self.m {
            write!(f, "m={m} ")?;
        }
        write!(
            f,
            "s={} t={} z={} lambda={}",
            self.s, self.t, self.z, self.lambda
        )
    }
}

/// Sorted, duplicate-free set of non-negative exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PowerSet(Vec<u64>);

impl fmt::Debug for PowerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (lo, hi)) in self.runs().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}..={hi}")?;
            }
        }
        f.write_str("}")
    }
}

impl FromIterator<u64> for PowerSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut v: Vec<u64> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl PowerSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `{lo, ..., hi}`; empty when `hi < lo`.
    pub fn interval(lo: u64, hi: u64) -> Self {
        if hi < lo {
            return Self::empty();
        }
        Self((lo..=hi).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    /// Position of `x` in ascending order.
    pub fn index_of(&self, x: u64) -> Option<usize> {
        self.0.binary_search(&x).ok()
    }

    pub fn min(&self) -> Option<u64> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            if a < b {
                out.push(a);
                i += 1;
            } else if b < a {
                out.push(b);
                j += 1;
            } else {
                out.push(a);
                i += 1;
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Self(out)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.iter().filter(|&x| other.contains(x)).collect()
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    /// Minkowski sum `{a + b : a ∈ self, b ∈ other}`.
    pub fn sumset(&self, other: &Self) -> Self {
        let (Some(ma), Some(mb)) = (self.max(), other.max()) else {
            return Self::empty();
        };
        let mut hit = vec![false; (ma + mb + 1) as usize];
        for a in self.iter() {
            for b in other.iter() {
                hit[(a + b) as usize] = true;
            }
        }
        Self(
            hit.iter()
                .enumerate()
                .filter_map(|(i, &h)| h.then_some(i as u64))
                .collect(),
        )
    }

    /// Maximal runs of consecutive exponents as inclusive `(lo, hi)` pairs.
    pub fn runs(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = Vec::new();
        for x in self.iter() {
            match out.last_mut() {
                Some((_, hi)) if *hi + 1 == x => *hi = x,
                _ => out.push((x, x)),
            }
        }
        out
    }
}

/// Exponents of `C_A(x)`: `{j + s·i}` which is `{0, …, ts-1}`.
pub fn powers_coded_a(scheme: &PartitionScheme) -> PowerSet {
    let (s, t) = (scheme.s(), scheme.t());
    (0..t)
        .flat_map(|i| (0..s).map(move |j| j + s * i))
        .collect()
}

/// Exponents of `C_B(x)`: `{(s-1-k) + l·θ}`.
pub fn powers_coded_b(scheme: &PartitionScheme) -> PowerSet {
    let (s, t, theta) = (scheme.s(), scheme.t(), scheme.theta());
    (0..s)
        .flat_map(|k| (0..t).map(move |l| (s - 1 - k) + l * theta))
        .collect()
}

/// Exponents of the A-side masks `S_A(x)`: the `z` smallest powers that keep
/// `S_A·C_B` off the important powers.
pub fn powers_secret_a(scheme: &PartitionScheme) -> PowerSet {
    let (s, t, z, lambda) = (scheme.s(), scheme.t(), scheme.z(), scheme.lambda());
    let ts = scheme.ts();
    let theta = scheme.theta();
    if t == 1 {
        return PowerSet::interval(s, s + z - 1);
    }
    if lambda == z {
        return PowerSet::interval(ts, ts + z - 1);
    }
    // 0 <= λ < z; λ = 0 makes the gap intervals empty with q = t-1
    let q = scheme.q();
    let mut out = Vec::with_capacity(z as usize);
    for l in 0..q {
        out.extend(ts + theta * l..(l + 1) * theta);
    }
    let start = ts + q * theta;
    out.extend(start..start + (z - q * lambda));
    PowerSet::from_iter(out)
}

/// Exponents of the B-side masks `S_B(x)`: `z` consecutive powers starting
/// one past the largest important power.
pub fn powers_secret_b(scheme: &PartitionScheme) -> PowerSet {
    let start = scheme.ts() + scheme.theta() * (scheme.t() - 1);
    PowerSet::interval(start, start + scheme.z() - 1)
}

/// Exponent of `H(x)` carrying `Y_{i,l}`: `(s-1) + s·i + θ·l`.
pub fn important_power(scheme: &PartitionScheme, i: u64, l: u64) -> u64 {
    (scheme.s() - 1) + scheme.s() * i + scheme.theta() * l
}

/// All important powers keyed by `(i, l)`.
pub fn important_powers(scheme: &PartitionScheme) -> BTreeMap<(u64, u64), u64> {
    let t = scheme.t();
    (0..t)
        .flat_map(|i| (0..t).map(move |l| (i, l)))
        .map(|(i, l)| ((i, l), important_power(scheme, i, l)))
        .collect()
}

pub fn important_power_set(scheme: &PartitionScheme) -> PowerSet {
    important_powers(scheme).into_values().collect()
}

/// The four sumsets whose union is the support of `H(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSupport {
    /// `P(C_A) + P(C_B)`
    pub d1: PowerSet,
    /// `P(C_A) + P(S_B)`
    pub d2: PowerSet,
    /// `P(S_A) + P(C_B)`
    pub d3: PowerSet,
    /// `P(S_A) + P(S_B)`
    pub d4: PowerSet,
}

impl ProductSupport {
    pub fn union(&self) -> PowerSet {
        self.d1.union(&self.d2).union(&self.d3).union(&self.d4)
    }

    /// Everything reachable through a mask: `D2 ∪ D3 ∪ D4`.
    pub fn masked(&self) -> PowerSet {
        self.d2.union(&self.d3).union(&self.d4)
    }
}

pub fn product_support_parts(scheme: &PartitionScheme) -> ProductSupport {
    let (ca, cb) = (powers_coded_a(scheme), powers_coded_b(scheme));
    let (sa, sb) = (powers_secret_a(scheme), powers_secret_b(scheme));
    ProductSupport {
        d1: ca.sumset(&cb),
        d2: ca.sumset(&sb),
        d3: sa.sumset(&cb),
        d4: sa.sumset(&sb),
    }
}

/// Exact support of `H(x)` by brute-force sumset enumeration. Its size is the
/// number of workers needed to interpolate `H`.
pub fn product_support(scheme: &PartitionScheme) -> PowerSet {
    product_support_parts(scheme).union()
}

/// Checks C1–C3 for explicitly given mask exponents: no important power may
/// land in `P(C_A)+P(S_B)`, `P(S_A)+P(C_B)` or `P(S_A)+P(S_B)`.
pub fn secret_conditions_hold(
    scheme: &PartitionScheme,
    secret_a: &PowerSet,
    secret_b: &PowerSet,
) -> bool {
    let important = important_power_set(scheme);
    let ca = powers_coded_a(scheme);
    let cb = powers_coded_b(scheme);
    important.is_disjoint(&ca.sumset(secret_b))
        && important.is_disjoint(&secret_a.sumset(&cb))
        && important.is_disjoint(&secret_a.sumset(secret_b))
}

pub fn check_secret_conditions(scheme: &PartitionScheme) -> bool {
    secret_conditions_hold(
        scheme,
        &powers_secret_a(scheme),
        &powers_secret_b(scheme),
    )
}

/// Exponents of the `j ≠ k` cross terms of `C_A(x)·C_B(x)`; empty when `s = 1`.
pub fn cross_term_powers(scheme: &PartitionScheme) -> PowerSet {
    let (s, t, theta) = (scheme.s(), scheme.t(), scheme.theta());
    let mut out = Vec::new();
    for i in 0..t {
        for l in 0..t {
            for j in 0..s {
                for k in 0..s {
                    if j != k {
                        out.push((s - 1 + j) - k + s * i + theta * l);
                    }
                }
            }
        }
    }
    PowerSet::from_iter(out)
}

/// Decodability of `Y = AᵀB` from `H(x)`: important powers pairwise
/// distinct, clear of the coded cross terms, and clear of every mask term.
pub fn check_decodability(scheme: &PartitionScheme) -> bool {
    let important = important_powers(scheme);
    let set: PowerSet = important.values().copied().collect();
    let t = scheme.t() as usize;
    set.len() == t * t
        && set.is_disjoint(&cross_term_powers(scheme))
        && check_secret_conditions(scheme)
}
