//! Deterministic simulation of the three AGE-CMPC phases.
//!
//! Phase 1: sources A and B send `F_A(α_n)` and `F_B(α_n)` to every worker.
//! Phase 2: each worker forms `H(α_n)`, re-shares the important
//! coefficients through `G_n(x)`, and sums the received evaluations into
//! `I(α_n)`. Phase 3: the master interpolates `I(x)` from `t² + z`
//! responses and reads `Y = AᵀB` off its low coefficients.
//!
//! Accounting follows the per-worker conventions used by [`crate::costmodel`]:
//! block products cost `rows·inner·cols`, scaling `H(α_n)` by the `t²`
//! interpolation coefficients costs `m²`, each evaluation of `G_n` costs one
//! block per nonzero exponent, and scalar power updates are free. Storage
//! never frees anything.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coding::{build_masked_polynomials, BlockGrid, CodingError, Masking, MaskedPolynomial, SourceInput};
use crate::field::{invert_on_support, solve_vandermonde, BlockMatrix, FieldElement, FieldError, PrimeField};
use crate::powersets::{
    important_powers, powers_secret_a, powers_secret_b, product_support, PartitionScheme, PowerSet,
};

/// Fresh evaluation points are drawn from this stream when `α_n = n` fails.
pub const STREAM_POINTS: u64 = 3;
/// Worker `n` draws its `R_w` blocks from stream `STREAM_WORKER_BASE + n`.
pub const STREAM_WORKER_BASE: u64 = 1 << 32;
/// Resampling budget for singular support matrices.
pub const MAX_POINT_RETRIES: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("support matrix stayed singular after {attempts} point sets")]
    SingularSupportMatrix { attempts: u32 },
    #[error("need at least {needed} responders, got {got}")]
    InsufficientResponders { needed: usize, got: usize },
    #[error("responder points are not distinct")]
    DuplicatePoints,
    #[error("unknown worker id {0}")]
    UnknownWorker(usize),
    #[error("{got} colluders exceed the privacy threshold z = {max}")]
    TooManyColluders { max: u64, got: usize },
    #[error("field modulus {modulus} cannot host {workers} distinct nonzero points")]
    FieldTooSmall { modulus: u64, workers: usize },
    #[error("responses do not lie on one polynomial of degree {degree}")]
    InconsistentResponses { degree: usize },
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A participant on the simulated message bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Party {
    SourceA,
    SourceB,
    Worker(usize),
    Master,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MessageRecord {
    pub phase: u8,
    pub sender: Party,
    pub receiver: Party,
    pub scalars: u64,
    pub digest: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WorkerCounters {
    pub worker: usize,
    /// Scalar multiplications.
    pub multiplications: u64,
    /// Scalars held across all phases.
    pub stored: u64,
    /// Scalars sent to other workers in phase 2.
    pub sent: u64,
}

/// Everything worker `W_n` holds by the end of phase 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerState {
    pub id: usize,
    pub alpha: FieldElement,
    pub share_a: BlockMatrix,
    pub share_b: BlockMatrix,
    pub h: BlockMatrix,
    /// `r_n^{(i,l)}` keyed by `(i, l)`.
    pub rows: BTreeMap<(u64, u64), FieldElement>,
    /// `R_w^{(n)}` for `w` in `0..z`.
    pub masks: Vec<BlockMatrix>,
    /// `G_{n'}(α_n)` keyed by sender `n'`, including this worker's own term.
    pub inbox: BTreeMap<usize, BlockMatrix>,
    /// `I(α_n)`.
    pub outgoing: BlockMatrix,
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Transcript {
    pub scheme: PartitionScheme,
    pub seed: u64,
    pub modulus: u64,
    pub n_workers: usize,
    pub support: PowerSet,
    pub points: Vec<u64>,
    /// Point sets tried before the support matrix inverted (1 = defaults).
    pub point_attempts: u32,
    pub messages: Vec<MessageRecord>,
    pub counters: Vec<WorkerCounters>,
    pub responders: Vec<usize>,
    pub y_digest: String,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub workers: Vec<WorkerState>,
}

impl Transcript {
    /// Total scalars exchanged among workers in phase 2.
    pub fn phase2_traffic(&self) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.phase == 2)
            .map(|m| m.scalars)
            .sum()
    }

    pub fn point(&self, worker: usize) -> Option<FieldElement> {
        let f = PrimeField::new(self.modulus).ok()?;
        self.points.get(worker.checked_sub(1)?).map(|&v| f.element(v))
    }

    /// The `I(α_n)` values of the given workers, ready for
    /// [`phase3_reconstruct`].
    pub fn responses(&self, ids: &[usize]) -> Result<Vec<(FieldElement, BlockMatrix)>, ProtocolError> {
        ids.iter()
            .map(|&id| {
                let w = self
                    .workers
                    .get(id.wrapping_sub(1))
                    .ok_or(ProtocolError::UnknownWorker(id))?;
                Ok((w.alpha, w.outgoing.clone()))
            })
            .collect()
    }
}

/// Short hex digest of a block: SHA-256 over shape and entries, first 8 bytes.
pub fn block_digest(block: &BlockMatrix) -> String {
    let mut h = Sha256::new();
    h.update((block.rows() as u64).to_le_bytes());
    h.update((block.cols() as u64).to_le_bytes());
    for v in block.values() {
        h.update(v.to_le_bytes());
    }
    let out = h.finalize();
    let mut s = String::with_capacity(16);
    for b in out.iter().take(8) {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Picks evaluation points for `support` and inverts the support matrix.
///
/// Tries `α_n = n` first, then up to [`MAX_POINT_RETRIES`] seeded draws of
/// distinct nonzero points. Returns the points, the inverse, and the number
/// of attempts used.
pub fn select_evaluation_points(
    field: PrimeField,
    support: &PowerSet,
    seed: u64,
) -> Result<(Vec<FieldElement>, BlockMatrix, u32), ProtocolError> {
    let n = support.len();
    if (n as u64) >= field.modulus() {
        return Err(ProtocolError::FieldTooSmall {
            modulus: field.modulus(),
            workers: n,
        });
    }
    let defaults: Vec<_> = (1..=n as u64).map(|x| field.element(x)).collect();
    match invert_on_support(&defaults, support) {
        Ok(inv) => return Ok((defaults, inv, 1)),
        Err(FieldError::SingularSupportMatrix) => {}
        Err(e) => return Err(e.into()),
    }
    let mut rng = rng_for(seed, STREAM_POINTS);
    for attempt in 0..MAX_POINT_RETRIES {
        let mut chosen = BTreeSet::new();
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            let x = field.random(&mut rng);
            if !x.is_zero() && chosen.insert(x.value()) {
                points.push(x);
            }
        }
        match invert_on_support(&points, support) {
            Ok(inv) => return Ok((points, inv, attempt + 2)),
            Err(FieldError::SingularSupportMatrix) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(ProtocolError::SingularSupportMatrix {
        attempts: MAX_POINT_RETRIES + 1,
    })
}

/// Interpolation coefficients `r_n^{(i,l)}`: for each `(i, l)`, the weights
/// over workers that extract the coefficient of `H(x)` at the important
/// power `u(i, l)`.
pub fn phase2_interpolation_rows(
    scheme: &PartitionScheme,
    support: &PowerSet,
    points: &[FieldElement],
) -> Result<BTreeMap<(u64, u64), Vec<FieldElement>>, ProtocolError> {
    let inv = invert_on_support(points, support)?;
    Ok(rows_from_inverse(scheme, support, &inv))
}

fn rows_from_inverse(
    scheme: &PartitionScheme,
    support: &PowerSet,
    inv: &BlockMatrix,
) -> BTreeMap<(u64, u64), Vec<FieldElement>> {
    important_powers(scheme)
        .into_iter()
        .map(|(key, u)| {
            let j = support
                .index_of(u)
                .expect("important powers lie in the product support");
            (key, (0..inv.cols()).map(|n| inv.get(j, n)).collect())
        })
        .collect()
}

/// `G_n(x) = Σ r_n^{(i,l)} H(α_n) x^{i+tl} + Σ_w R_w^{(n)} x^{t²+w}`.
pub fn build_gn(worker: &WorkerState, scheme: &PartitionScheme) -> MaskedPolynomial {
    let t = scheme.t();
    let mut terms = BTreeMap::new();
    for (&(i, l), &r) in &worker.rows {
        terms.insert(i + t * l, worker.h.scale(r));
    }
    for (w, mask) in worker.masks.iter().enumerate() {
        terms.insert(t * t + w as u64, mask.clone());
    }
    MaskedPolynomial::from_terms(terms).expect("non-empty, uniform blocks")
}

/// Interpolates `I(x)` of degree `t² + z - 1` and returns the `t x t` grid of
/// `Y_{i,l}` blocks. Extra responses must agree with the interpolant.
pub fn phase3_reconstruct(
    responses: &[(FieldElement, BlockMatrix)],
    scheme: &PartitionScheme,
) -> Result<BlockGrid, ProtocolError> {
    let k = scheme.recovery_threshold() as usize;
    if responses.len() < k {
        return Err(ProtocolError::InsufficientResponders {
            needed: k,
            got: responses.len(),
        });
    }
    let mut seen = BTreeSet::new();
    if !responses.iter().all(|(x, _)| seen.insert(x.value())) {
        return Err(ProtocolError::DuplicatePoints);
    }
    let (points, values): (Vec<_>, Vec<_>) = responses[..k].iter().cloned().unzip();
    let coeffs = solve_vandermonde(&points, &values)?;
    for (x, v) in &responses[k..] {
        let mut acc = BlockMatrix::zeros(v.field(), v.rows(), v.cols());
        let mut pw = x.field().one();
        for c in &coeffs {
            acc.add_scaled(pw, c)?;
            pw *= *x;
        }
        if acc != *v {
            return Err(ProtocolError::InconsistentResponses { degree: k - 1 });
        }
    }
    let t = scheme.t() as usize;
    let mut blocks = Vec::with_capacity(t * t);
    for i in 0..t {
        for l in 0..t {
            blocks.push(coeffs[i + t * l].clone());
        }
    }
    Ok(BlockGrid::new(t, t, blocks))
}

/// Runs all three phases with `N = |P(H)|` workers.
///
/// Pass the scheme at its optimal λ to run with `N_AGE-CMPC` workers.
/// `responders` selects the phase-3 workers (1-based ids); the default is
/// workers `1..=t²+z`.
pub fn run_protocol(
    a: &SourceInput,
    b: &SourceInput,
    scheme: &PartitionScheme,
    seed: u64,
    responders: Option<&[usize]>,
) -> Result<(BlockMatrix, Transcript), ProtocolError> {
    let field = a.matrix().field();
    let (fa, fb) = build_masked_polynomials(a, b, scheme, Masking::Seeded(seed))?;
    let support = product_support(scheme);
    let n = support.len();
    let (points, inv, point_attempts) = select_evaluation_points(field, &support, seed)?;
    let rows = rows_from_inverse(scheme, &support, &inv);

    let t = scheme.t();
    let z = scheme.z() as usize;
    let m = a.dim();
    let y_block = m / t as usize;
    let y_len = (y_block * y_block) as u64;

    let responders: Vec<usize> = match responders {
        Some(ids) => ids.to_vec(),
        None => (1..=scheme.recovery_threshold() as usize).collect(),
    };
    if let Some(&bad) = responders.iter().find(|&&id| id == 0 || id > n) {
        return Err(ProtocolError::UnknownWorker(bad));
    }
    if responders.iter().collect::<BTreeSet<_>>().len() != responders.len() {
        return Err(ProtocolError::DuplicatePoints);
    }
    let needed = scheme.recovery_threshold() as usize;
    if responders.len() < needed {
        return Err(ProtocolError::InsufficientResponders {
            needed,
            got: responders.len(),
        });
    }

    let mut messages = Vec::new();
    let mut counters: Vec<WorkerCounters> = (1..=n)
        .map(|id| WorkerCounters {
            worker: id,
            ..Default::default()
        })
        .collect();

    // phase 1: shares
    let mut workers = Vec::with_capacity(n);
    for (idx, &alpha) in points.iter().enumerate() {
        let id = idx + 1;
        let share_a = fa.evaluate(alpha);
        let share_b = fb.evaluate(alpha);
        for (sender, share) in [(Party::SourceA, &share_a), (Party::SourceB, &share_b)] {
            messages.push(MessageRecord {
                phase: 1,
                sender,
                receiver: Party::Worker(id),
                scalars: share.len() as u64,
                digest: block_digest(share),
            });
        }
        let c = &mut counters[idx];
        c.stored += (share_a.len() + share_b.len()) as u64;

        // phase 2, local part: H(α_n), rows, masks
        let h = share_a.mul(&share_b)?;
        c.multiplications += (share_a.rows() * share_a.cols() * share_b.cols()) as u64;
        c.stored += h.len() as u64;

        let my_rows: BTreeMap<_, _> = rows.iter().map(|(&k, r)| (k, r[idx])).collect();
        let mut rng = rng_for(seed, STREAM_WORKER_BASE + id as u64);
        let masks: Vec<_> = (0..z)
            .map(|_| BlockMatrix::random(field, y_block, y_block, &mut rng))
            .collect();
        c.stored += my_rows.len() as u64 + z as u64 * y_len;

        workers.push(WorkerState {
            id,
            alpha,
            share_a,
            share_b,
            h,
            rows: my_rows,
            masks,
            inbox: BTreeMap::new(),
            outgoing: BlockMatrix::zeros(field, y_block, y_block),
        });
    }

    // phase 2, exchange: every worker evaluates G_n at every point
    let gns: Vec<MaskedPolynomial> = workers.iter().map(|w| build_gn(w, scheme)).collect();
    for (idx, gn) in gns.iter().enumerate() {
        let sender = idx + 1;
        let c = &mut counters[idx];
        c.multiplications += (t * t) * y_len;
        for (dest, &alpha) in points.iter().enumerate() {
            let (value, mults) = gn.evaluate_counted(alpha);
            c.multiplications += mults;
            c.stored += value.len() as u64;
            if dest != idx {
                c.sent += value.len() as u64;
                messages.push(MessageRecord {
                    phase: 2,
                    sender: Party::Worker(sender),
                    receiver: Party::Worker(dest + 1),
                    scalars: value.len() as u64,
                    digest: block_digest(&value),
                });
            }
            workers[dest].inbox.insert(sender, value);
        }
    }
    for (idx, w) in workers.iter_mut().enumerate() {
        let c = &mut counters[idx];
        c.stored += (w.inbox.len() as u64 - 1) * y_len;
        let mut acc = BlockMatrix::zeros(field, y_block, y_block);
        for v in w.inbox.values() {
            acc.add_assign(v)?;
        }
        c.stored += acc.len() as u64;
        w.outgoing = acc;
    }

    // phase 3
    let responses: Vec<_> = responders
        .iter()
        .map(|&id| {
            let w = &workers[id - 1];
            messages.push(MessageRecord {
                phase: 3,
                sender: Party::Worker(id),
                receiver: Party::Master,
                scalars: w.outgoing.len() as u64,
                digest: block_digest(&w.outgoing),
            });
            (w.alpha, w.outgoing.clone())
        })
        .collect();
    let y = phase3_reconstruct(&responses, scheme)?.assemble();

    messages.sort_by_key(|x| (x.phase, x.sender, x.receiver));
    let transcript = Transcript {
        scheme: *scheme,
        seed,
        modulus: field.modulus(),
        n_workers: n,
        support,
        points: points.iter().map(|p| p.value()).collect(),
        point_attempts,
        messages,
        counters,
        responders,
        y_digest: block_digest(&y),
        workers,
    };
    Ok((y, transcript))
}

/// What one colluding worker saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColluderView {
    pub worker: usize,
    pub alpha: FieldElement,
    pub share_a: BlockMatrix,
    pub share_b: BlockMatrix,
    /// `G_{n'}(α_n)` from every other worker.
    pub received: BTreeMap<usize, BlockMatrix>,
    pub messages: Vec<MessageRecord>,
}

/// Pooled view of up to `z` colluding workers.
pub fn adversary_view(
    transcript: &Transcript,
    colluders: &[usize],
) -> Result<Vec<ColluderView>, ProtocolError> {
    check_colluders(&transcript.scheme, colluders, transcript.n_workers)?;
    Ok(colluders
        .iter()
        .map(|&id| {
            let w = &transcript.workers[id - 1];
            ColluderView {
                worker: id,
                alpha: w.alpha,
                share_a: w.share_a.clone(),
                share_b: w.share_b.clone(),
                received: w
                    .inbox
                    .iter()
                    .filter(|(&k, _)| k != id)
                    .map(|(&k, v)| (k, v.clone()))
                    .collect(),
                messages: transcript
                    .messages
                    .iter()
                    .filter(|m| m.receiver == Party::Worker(id))
                    .cloned()
                    .collect(),
            }
        })
        .collect())
}

fn check_colluders(
    scheme: &PartitionScheme,
    colluders: &[usize],
    n_workers: usize,
) -> Result<(), ProtocolError> {
    if colluders.len() as u64 > scheme.z() {
        return Err(ProtocolError::TooManyColluders {
            max: scheme.z(),
            got: colluders.len(),
        });
    }
    if let Some(&bad) = colluders.iter().find(|&&id| id == 0 || id > n_workers) {
        return Err(ProtocolError::UnknownWorker(bad));
    }
    Ok(())
}

/// Structural privacy witness: for the colluders' points, the matrices
/// `[α_n^p]` over the A-mask powers, the B-mask powers, and the `G_n` mask
/// powers `{t², …, t²+z-1}` all have full row rank, so the masks hide the
/// data terms in every pooled view.
pub fn mask_rank_check(
    scheme: &PartitionScheme,
    colluders: &[usize],
    points: &[FieldElement],
) -> Result<bool, ProtocolError> {
    check_colluders(scheme, colluders, points.len())?;
    if colluders.is_empty() {
        return Ok(true);
    }
    let tt = scheme.t() * scheme.t();
    let g_masks = PowerSet::interval(tt, tt + scheme.z() - 1);
    let chosen: Vec<FieldElement> = colluders.iter().map(|&id| points[id - 1]).collect();
    let full = [powers_secret_a(scheme), powers_secret_b(scheme), g_masks]
        .iter()
        .all(|powers| {
            crate::field::generalized_vandermonde(&chosen, powers).rank() == chosen.len()
        });
    Ok(full)
}

/// Debug label for a scheme run, e.g. in CLI output.
pub fn describe(transcript: &Transcript) -> String {
    format!(
        "{} N={} responders={:?}",
        transcript.scheme, transcript.n_workers, transcript.responders
    )
}
