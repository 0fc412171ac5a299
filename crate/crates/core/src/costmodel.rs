//! Closed-form per-worker computation and storage, total worker-to-worker
//! communication, and reconciliation against simulator counters.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::powersets::{PartitionScheme, SchemeError};
use crate::protocol::Transcript;
use crate::workercount::{n_age, n_entangled, n_gcsa_na, n_polydot, n_ssmm, WorkerCountError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("scheme has no matrix dimension")]
    MissingDimension,
    #[error("matrix dimension {m} is not divisible by s = {s} and t = {t}")]
    IndivisibleDimensions { m: u64, s: u64, t: u64 },
    #[error("cost does not fit in 64 bits")]
    Overflow,
    #[error("transcript ({transcript}, N = {transcript_n}) does not match report ({report}, N = {report_n})")]
    SchemeMismatch {
        transcript: PartitionScheme,
        transcript_n: usize,
        report: PartitionScheme,
        report_n: u64,
    },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    WorkerCount(#[from] WorkerCountError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CostReport {
    pub scheme: PartitionScheme,
    pub n_workers: u64,
    /// Scalar multiplications per worker.
    pub xi: u64,
    /// Scalars stored per worker.
    pub sigma: u64,
    /// Scalars exchanged among all workers.
    pub zeta: u64,
}

/// `ξ`, `σ`, `ζ` for `n_workers` workers running `scheme`.
pub fn predicted_costs(scheme: &PartitionScheme, n_workers: u64) -> Result<CostReport, CostError> {
    let m = scheme.m().ok_or(CostError::MissingDimension)?;
    let (s, t, z) = (scheme.s(), scheme.t(), scheme.z());
    if m % s != 0 || m % t != 0 {
        return Err(CostError::IndivisibleDimensions { m, s, t });
    }
    let (m, s, t, z, n) = (m as u128, s as u128, t as u128, z as u128, n_workers as u128);
    let block = (m / t) * (m / t);
    let xi = m * m * m / (s * t * t) + m * m + n * (t * t + z - 1) * block;
    let sigma = (2 * n + z + 1) * block + 2 * (m / s) * (m / t) + t * t;
    let zeta = n * n.saturating_sub(1) * block;
    let fit = |v: u128| u64::try_from(v).map_err(|_| CostError::Overflow);
    Ok(CostReport {
        scheme: *scheme,
        n_workers,
        xi: fit(xi)?,
        sigma: fit(sigma)?,
        zeta: fit(zeta)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FieldDiff {
    pub predicted: u64,
    pub measured: u64,
    pub delta: i128,
}

impl FieldDiff {
    fn new(predicted: u64, measured: u64) -> Self {
        Self {
            predicted,
            measured,
            delta: measured as i128 - predicted as i128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CostDiff {
    pub xi: FieldDiff,
    pub sigma: FieldDiff,
    pub zeta: FieldDiff,
}

impl CostDiff {
    pub fn is_exact(&self) -> bool {
        self.xi.delta == 0 && self.sigma.delta == 0 && self.zeta.delta == 0
    }
}

/// Compares a report with measured counters. Per-worker figures take the
/// largest value over workers.
pub fn reconcile(transcript: &Transcript, report: &CostReport) -> Result<CostDiff, CostError> {
    if transcript.scheme != report.scheme || transcript.n_workers as u64 != report.n_workers {
        return Err(CostError::SchemeMismatch {
            transcript: transcript.scheme,
            transcript_n: transcript.n_workers,
            report: report.scheme,
            report_n: report.n_workers,
        });
    }
    let c = &transcript.counters;
    let xi = c.iter().map(|w| w.multiplications).max().unwrap_or(0);
    let sigma = c.iter().map(|w| w.stored).max().unwrap_or(0);
    let zeta = c.iter().map(|w| w.sent).sum();
    Ok(CostDiff {
        xi: FieldDiff::new(report.xi, xi),
        sigma: FieldDiff::new(report.sigma, sigma),
        zeta: FieldDiff::new(report.zeta, zeta),
    })
}

/// Schemes compared in planning and sweep output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SchemeKind {
    Age,
    Entangled,
    Ssmm,
    GcsaNa,
    PolyDot,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Age,
        SchemeKind::Entangled,
        SchemeKind::Ssmm,
        SchemeKind::GcsaNa,
        SchemeKind::PolyDot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Age => "AGE-CMPC",
            SchemeKind::Entangled => "Entangled-CMPC",
            SchemeKind::Ssmm => "SSMM",
            SchemeKind::GcsaNa => "GCSA-NA",
            SchemeKind::PolyDot => "PolyDot-CMPC",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonRow {
    pub kind: SchemeKind,
    /// Worker count, `None` where no closed form is available.
    pub n_workers: Option<u64>,
    /// Only set for AGE-CMPC with `t ≥ 2`.
    pub lambda_star: Option<u64>,
    pub costs: Option<CostReport>,
}

/// One row per scheme in [`SchemeKind::ALL`] order. Baseline costs reuse
/// the AGE formulas with the baseline worker count substituted, which is an
/// approximation for schemes whose block shapes differ.
pub fn compare_costs(scheme: &PartitionScheme) -> Result<Vec<ComparisonRow>, CostError> {
    let (age, lambda_star) = n_age(scheme)?;
    let at_star = scheme.with_lambda(lambda_star.unwrap_or(0))?;
    SchemeKind::ALL
        .iter()
        .map(|&kind| {
            let n = match kind {
                SchemeKind::Age => Some(age),
                SchemeKind::Entangled => Some(n_entangled(scheme)),
                SchemeKind::Ssmm => Some(n_ssmm(scheme)),
                SchemeKind::GcsaNa => Some(n_gcsa_na(scheme)),
                SchemeKind::PolyDot => n_polydot(scheme),
            };
            let costs = n.map(|n| predicted_costs(&at_star, n)).transpose()?;
            Ok(ComparisonRow {
                kind,
                n_workers: n,
                lambda_star: if kind == SchemeKind::Age { lambda_star } else { None },
                costs,
            })
        })
        .collect()
}
