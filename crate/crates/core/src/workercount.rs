//! Closed-form worker counts for AGE-CMPC and the baseline schemes it is
//! compared against (Entangled-CMPC, SSMM, GCSA-NA, PolyDot-CMPC).

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::powersets::{PartitionScheme, SchemeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkerCountError {
    #[error("gamma is only defined for t >= 2")]
    SingleColumnPartition,
    #[error("no gamma case matches {0}")]
    NoCaseMatched(PartitionScheme),
    #[error("gamma cases {first} = {first_value} and {second} = {second_value} both match {scheme}")]
    ConflictingCases {
        scheme: PartitionScheme,
        first: GammaCase,
        first_value: u64,
        second: GammaCase,
        second_value: u64,
    },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Which closed-form branch `Υ1..Υ9` produced a Γ value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum GammaCase {
    U1,
    U2,
    U3,
    U4,
    U5,
    U6,
    U7,
    U8,
    U9,
}

impl fmt::Display for GammaCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as u8 + 1;
        write!(f, "U{n}")
    }
}

/// Evaluates every branch whose guard holds. Exposed so callers can inspect
/// guard overlap; [`gamma`] is the usual entry point.
pub fn gamma_candidates(scheme: &PartitionScheme) -> Vec<(GammaCase, u64)> {
    let s = scheme.s() as i64;
    let t = scheme.t() as i64;
    let z = scheme.z() as i64;
    let lambda = scheme.lambda() as i64;
    let ts = t * s;
    let theta = ts + lambda;
    let q = scheme.q() as i64;
    let inner = 0 < lambda && lambda < z;

    let mut out = Vec::new();
    let mut push = |case, value: i64| out.push((case, value as u64));

    if lambda == 0 && z > ts - s {
        push(GammaCase::U1, 2 * s * t * t + 2 * z - 1);
    }
    if lambda == 0 && z <= ts - s {
        push(
            GammaCase::U2,
            s * t * t + 3 * s * t - 2 * s + t * (z - 1) + 1,
        );
    }
    if lambda == z {
        push(GammaCase::U3, 2 * ts + (ts + z) * (t - 1) + 2 * z - 1);
    }
    if inner && z > ts {
        push(GammaCase::U4, (q + 2) * ts + theta * (t - 1) + 2 * z - 1);
    }
    if inner && z <= ts && ts < lambda + s - 1 {
        push(GammaCase::U5, 3 * ts + theta * (t - 1) + 2 * z - 1);
    }
    let upper = lambda + s - 1 < z && z <= ts;
    let lower = z < lambda + s && lambda + s - 1 <= ts;
    if inner && upper && q * lambda >= s {
        push(
            GammaCase::U6,
            2 * ts + theta * (t - 1) + (q + 2) * z - q - 1,
        );
    }
    if inner && upper && q * lambda < s {
        push(
            GammaCase::U7,
            theta * (t + 1) + q * (z - 1) - 2 * lambda + z + ts
                + core::cmp::min(0, z + s * (1 - t) - lambda * q - 1),
        );
    }
    if inner && lower && q * lambda >= s {
        push(
            GammaCase::U8,
            2 * ts + theta * (t - 1) + 3 * z + (lambda + s - 1) * q - lambda - s - 1,
        );
    }
    if inner && lower && q * lambda < s {
        push(
            GammaCase::U9,
            theta * (t + 1) + q * (s - 1) - 3 * lambda + 3 * z - 1
                + core::cmp::min(0, ts - z + 1 + lambda * q - s),
        );
    }
    out
}

/// Closed-form required worker count `Γ(λ)` for `t ≥ 2`, with the branch
/// that fired.
pub fn gamma(scheme: &PartitionScheme) -> Result<(u64, GammaCase), WorkerCountError> {
    if scheme.t() < 2 {
        return Err(WorkerCountError::SingleColumnPartition);
    }
    let cands = gamma_candidates(scheme);
    let Some(&(case, value)) = cands.first() else {
        return Err(WorkerCountError::NoCaseMatched(*scheme));
    };
    if let Some(&(other, other_value)) = cands.iter().find(|(_, v)| *v != value) {
        return Err(WorkerCountError::ConflictingCases {
            scheme: *scheme,
            first: case,
            first_value: value,
            second: other,
            second_value: other_value,
        });
    }
    Ok((value, case))
}

/// One row of the λ table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GammaEntry {
    pub lambda: u64,
    pub value: u64,
    pub case: GammaCase,
}

/// `Γ(λ)` for every `λ ∈ [0, z]`; empty when `t = 1`.
pub fn gamma_table(scheme: &PartitionScheme) -> Result<Vec<GammaEntry>, WorkerCountError> {
    if scheme.t() == 1 {
        return Ok(Vec::new());
    }
    (0..=scheme.z())
        .map(|lambda| {
            let (value, case) = gamma(&scheme.with_lambda(lambda)?)?;
            Ok(GammaEntry {
                lambda,
                value,
                case,
            })
        })
        .collect()
}

/// `N_AGE-CMPC` and the minimizing λ (smallest on ties); `λ*` is absent for
/// `t = 1`. The scheme's own λ is ignored.
pub fn n_age(scheme: &PartitionScheme) -> Result<(u64, Option<u64>), WorkerCountError> {
    if scheme.t() == 1 {
        return Ok((2 * scheme.s() + 2 * scheme.z() - 1, None));
    }
    let table = gamma_table(scheme)?;
    let best = table
        .iter()
        .min_by_key(|e| (e.value, e.lambda))
        .expect("λ range is never empty");
    Ok((best.value, Some(best.lambda)))
}

pub fn n_entangled(scheme: &PartitionScheme) -> u64 {
    let (s, t, z) = (scheme.s(), scheme.t(), scheme.z());
    if t == 1 {
        return 2 * s + 2 * z - 1;
    }
    if z > t * s - s {
        2 * s * t * t + 2 * z - 1
    } else {
        s * t * t + 3 * s * t - 2 * s + t * (z - 1) + 1
    }
}

pub fn n_ssmm(scheme: &PartitionScheme) -> u64 {
    let (s, t, z) = (scheme.s(), scheme.t(), scheme.z());
    if t == 1 {
        return 2 * s + 2 * z - 1;
    }
    (t + 1) * (t * s + z) - 1
}

/// GCSA-NA with batch size one.
pub fn n_gcsa_na(scheme: &PartitionScheme) -> u64 {
    let (s, t, z) = (scheme.s(), scheme.t(), scheme.z());
    if t == 1 {
        return 2 * s + 2 * z - 1;
    }
    2 * s * t * t + 2 * z - 1
}

/// PolyDot-CMPC worker count where a closed form is known; `None` in the
/// regions where only an inequality is available.
pub fn n_polydot(scheme: &PartitionScheme) -> Option<u64> {
    let (s, t, z) = (scheme.s(), scheme.t(), scheme.z());
    let ts = t * s;
    if t == 1 {
        return Some(2 * s + 2 * z - 1);
    }
    if z > ts {
        if s == 1 {
            return Some(2 * t * t + 2 * z - 1);
        }
        let q = core::cmp::min((z - 1) / (ts - t), t - 1);
        return Some((q + 2) * ts + (2 * ts - t) * (t - 1) + 2 * z - 1);
    }
    // (t-1)/(t-2) · (ts-t) < z <= ts, cross-multiplied; needs t >= 3
    if t >= 3 && z * (t - 2) > (t - 1) * (ts - t) {
        if s == 1 {
            return Some(t * t + 2 * t + t * z - 1);
        }
        return Some(2 * ts + (2 * ts - t) * (t - 1) + 3 * z - 1);
    }
    None
}

/// Outcome of the four `N_AGE ≤ N_baseline` comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LemmaChecks {
    pub entangled: bool,
    pub ssmm: bool,
    pub gcsa_na: bool,
    /// `None` when the PolyDot count is unavailable.
    pub polydot: Option<bool>,
}

impl LemmaChecks {
    pub fn all_hold(&self) -> bool {
        self.entangled && self.ssmm && self.gcsa_na && self.polydot.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WorkerCountReport {
    pub s: u64,
    pub t: u64,
    pub z: u64,
    pub n_age: u64,
    pub lambda_star: Option<u64>,
    pub gamma_table: Vec<GammaEntry>,
    pub n_entangled: u64,
    pub n_ssmm: u64,
    pub n_gcsa_na: u64,
    pub n_polydot: Option<u64>,
    pub lemma_checks: LemmaChecks,
}

pub fn compare(scheme: &PartitionScheme) -> Result<WorkerCountReport, WorkerCountError> {
    let (age, lambda_star) = n_age(scheme)?;
    let gamma_table = gamma_table(scheme)?;
    let entangled = n_entangled(scheme);
    let ssmm = n_ssmm(scheme);
    let gcsa = n_gcsa_na(scheme);
    let polydot = n_polydot(scheme);
    Ok(WorkerCountReport {
        s: scheme.s(),
        t: scheme.t(),
        z: scheme.z(),
        n_age: age,
        lambda_star,
        gamma_table,
        n_entangled: entangled,
        n_ssmm: ssmm,
        n_gcsa_na: gcsa,
        n_polydot: polydot,
        lemma_checks: LemmaChecks {
            entangled: age <= entangled,
            ssmm: age <= ssmm,
            gcsa_na: age <= gcsa,
            polydot: polydot.map(|p| age <= p),
        },
    })
}
