use std::collections::BTreeMap;
use std::io::Write;

use age_cmpc::coding::{Role, SourceInput};
use age_cmpc::costmodel::{compare_costs, predicted_costs, reconcile, ComparisonRow, CostDiff};
use age_cmpc::field::{BlockMatrix, PrimeField};
use age_cmpc::powersets::{check_decodability, product_support};
use age_cmpc::protocol::{phase3_reconstruct, run_protocol, Transcript, WorkerCounters};
use age_cmpc::workercount::{compare, gamma, GammaCase, WorkerCountError, WorkerCountReport};
use age_cmpc::PartitionScheme;
use anyhow::{bail, Context, Result};
use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::args::{OracleArgs, PlanArgs, RunArgs, SweepArgs};

pub const SCHEMA_VERSION: u32 = 1;

/// Stream for the random input matrices of `run`.
const INPUT_STREAM: u64 = 100;
/// Stream for choosing phase-3 responders and subset trials.
const SUBSET_STREAM: u64 = 101;

/// A command result that can be rendered as JSON or CSV.
pub trait Report: Serialize {
    /// Whether every internal check passed; drives the exit code.
    fn passed(&self) -> bool;
    fn write_csv(&self, out: &mut dyn Write) -> Result<()>;
}

/// One scheme's worker count and costs; the sweep CSV row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostRow {
    pub s: u64,
    pub t: u64,
    pub z: u64,
    pub m: Option<u64>,
    pub scheme_name: String,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    pub lambda_star: Option<u64>,
    pub xi: Option<u64>,
    pub sigma: Option<u64>,
    pub zeta: Option<u64>,
}

impl CostRow {
    fn from_comparison(scheme: &PartitionScheme, row: &ComparisonRow) -> Self {
        Self {
            s: scheme.s(),
            t: scheme.t(),
            z: scheme.z(),
            m: scheme.m(),
            scheme_name: row.kind.name().to_string(),
            n: row.n_workers,
            lambda_star: row.lambda_star,
            xi: row.costs.map(|c| c.xi),
            sigma: row.costs.map(|c| c.sigma),
            zeta: row.costs.map(|c| c.zeta),
        }
    }
}

fn write_rows<T: Serialize>(rows: &[T], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ChosenLambda {
    pub lambda: u64,
    pub gamma: Option<u64>,
    pub case: Option<GammaCase>,
    pub support_size: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub report: WorkerCountReport,
    /// Exact product-support size at the optimal λ.
    pub support_at_optimum: u64,
    pub chosen: Option<ChosenLambda>,
    pub costs: Vec<CostRow>,
    pub passed: bool,
}

impl Report for PlanOutput {
    fn passed(&self) -> bool {
        self.passed
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write_rows(&self.costs, out)
    }
}

pub fn plan(args: &PlanArgs) -> Result<PlanOutput> {
    let base = args.scheme.base()?;
    let report = compare(&base)?;
    let at_star = base.with_lambda(report.lambda_star.unwrap_or(0))?;
    let support_at_optimum = product_support(&at_star).len() as u64;
    let chosen = match args.scheme.lambda {
        Some(lambda) => {
            let g = if base.t() >= 2 { Some(gamma(&base)?) } else { None };
            Some(ChosenLambda {
                lambda,
                gamma: g.map(|g| g.0),
                case: g.map(|g| g.1),
                support_size: product_support(&base).len() as u64,
            })
        }
        None => None,
    };
    let sized = match args.m {
        Some(m) => base.with_m(m)?,
        None => base,
    };
    let costs = if args.m.is_some() {
        compare_costs(&sized)?
            .iter()
            .map(|r| CostRow::from_comparison(&sized, r))
            .collect()
    } else {
        comparison_without_costs(&report, &sized)
    };
    Ok(PlanOutput {
        schema_version: SCHEMA_VERSION,
        command: "plan",
        passed: report.lemma_checks.all_hold(),
        report,
        support_at_optimum,
        chosen,
        costs,
    })
}

fn comparison_without_costs(report: &WorkerCountReport, scheme: &PartitionScheme) -> Vec<CostRow> {
    let ns = [
        ("AGE-CMPC", Some(report.n_age), report.lambda_star),
        ("Entangled-CMPC", Some(report.n_entangled), None),
        ("SSMM", Some(report.n_ssmm), None),
        ("GCSA-NA", Some(report.n_gcsa_na), None),
        ("PolyDot-CMPC", report.n_polydot, None),
    ];
    ns.iter()
        .map(|&(name, n, lambda_star)| CostRow {
            s: scheme.s(),
            t: scheme.t(),
            z: scheme.z(),
            m: None,
            scheme_name: name.to_string(),
            n,
            lambda_star,
            xi: None,
            sigma: None,
            zeta: None,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub st: u64,
    pub z: u64,
    pub m: u64,
    pub rows: Vec<CostRow>,
    /// AGE-CMPC needs no more workers than any baseline in every row group.
    pub passed: bool,
}

impl Report for SweepOutput {
    fn passed(&self) -> bool {
        self.passed
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write_rows(&self.rows, out)
    }
}

/// `(s, st / s)` for every divisor `s` of `st`, ascending in `s`.
pub fn divisor_pairs(st: u64) -> Vec<(u64, u64)> {
    (1..=st).filter(|s| st.is_multiple_of(*s)).map(|s| (s, st / s)).collect()
}

pub fn sweep(args: &SweepArgs) -> Result<SweepOutput> {
    if args.st < 2 {
        bail!("--st must be at least 2");
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for (s, t) in divisor_pairs(args.st) {
        let sc = PartitionScheme::new(s, t, args.z, 0)?
            .with_m(args.m)
            .with_context(|| format!("m={} is not divisible by s={s} and t={t}", args.m))?;
        let cmp = compare_costs(&sc)?;
        let age = cmp[0].n_workers.expect("AGE count is always defined");
        passed &= cmp.iter().all(|r| r.n_workers.is_none_or(|n| age <= n));
        rows.extend(cmp.iter().map(|r| CostRow::from_comparison(&sc, r)));
    }
    Ok(SweepOutput {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        st: args.st,
        z: args.z,
        m: args.m,
        rows,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetSummary {
    pub subset_size: usize,
    pub trials: usize,
    pub recovered: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub scheme: PartitionScheme,
    pub modulus: u64,
    pub seed: u64,
    pub identity: bool,
    pub n_workers: usize,
    pub recovery_threshold: u64,
    pub responders: Vec<usize>,
    pub point_attempts: u32,
    pub correct: bool,
    pub y_digest: String,
    pub reconciliation: CostDiff,
    pub subsets: SubsetSummary,
    #[serde(skip)]
    pub counters: Vec<WorkerCounters>,
    #[serde(skip)]
    pub transcript: Transcript,
    pub passed: bool,
}

impl Report for RunOutput {
    fn passed(&self) -> bool {
        self.passed
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write_rows(&self.counters, out)
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn run(args: &RunArgs, field: PrimeField) -> Result<RunOutput> {
    let base = args.scheme.base()?.with_m(args.m)?;
    let scheme = match args.scheme.lambda {
        Some(_) => base,
        None => {
            let (_, star) = age_cmpc::n_age(&base)?;
            base.with_lambda(star.unwrap_or(0))?
        }
    };
    let m = args.m as usize;
    let (a, b) = if args.identity {
        (BlockMatrix::identity(field, m), BlockMatrix::identity(field, m))
    } else {
        let mut r = rng(args.seed, INPUT_STREAM);
        let a = BlockMatrix::random(field, m, m, &mut r);
        (a, BlockMatrix::random(field, m, m, &mut r))
    };
    let expected = a.transpose().mul(&b)?;
    let a = SourceInput::new(a, Role::A)?;
    let b = SourceInput::new(b, Role::B)?;

    let n = product_support(&scheme).len();
    let mut subset_rng = rng(args.seed, SUBSET_STREAM);
    let responders = match args.phase3_subset {
        Some(k) if k > n => bail!("--phase3-subset {k} exceeds the {n} workers"),
        Some(k) => {
            let mut ids: Vec<usize> = sample(&mut subset_rng, n, k).iter().map(|i| i + 1).collect();
            ids.sort_unstable();
            Some(ids)
        }
        None => None,
    };
    let (y, transcript) = run_protocol(&a, &b, &scheme, args.seed, responders.as_deref())?;
    let correct = y == expected;
    let report = predicted_costs(&scheme, transcript.n_workers as u64)?;
    let reconciliation = reconcile(&transcript, &report)?;

    let k = scheme.recovery_threshold() as usize;
    let mut recovered = 0;
    for _ in 0..args.subset_trials {
        let ids: Vec<usize> = sample(&mut subset_rng, n, k).iter().map(|i| i + 1).collect();
        let grid = phase3_reconstruct(&transcript.responses(&ids)?, &scheme)?;
        recovered += usize::from(grid.assemble() == expected);
    }

    Ok(RunOutput {
        schema_version: SCHEMA_VERSION,
        command: "run",
        scheme,
        modulus: field.modulus(),
        seed: args.seed,
        identity: args.identity,
        n_workers: transcript.n_workers,
        recovery_threshold: scheme.recovery_threshold(),
        responders: transcript.responders.clone(),
        point_attempts: transcript.point_attempts,
        correct,
        y_digest: transcript.y_digest.clone(),
        reconciliation,
        subsets: SubsetSummary {
            subset_size: k,
            trials: args.subset_trials,
            recovered,
        },
        counters: transcript.counters.clone(),
        passed: correct && reconciliation.is_exact() && recovered == args.subset_trials,
        transcript,
    })
}

/// Transcript file written by `run --transcript`.
#[derive(Debug, Serialize)]
pub struct TranscriptFile<'a> {
    pub schema_version: u32,
    pub transcript: &'a Transcript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub s: u64,
    pub t: u64,
    pub z: u64,
    pub lambda: u64,
}

/// One grid tuple: closed form against the exact support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleRow {
    pub s: u64,
    pub t: u64,
    pub z: u64,
    pub lambda: u64,
    pub gamma: Option<u64>,
    pub case: Option<String>,
    pub support: u64,
    pub matches: bool,
    pub decodable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub s_max: u64,
    pub t_max: u64,
    pub z_max: u64,
    pub tuples_checked: usize,
    pub gamma_mismatches: usize,
    pub mismatches_by_case: BTreeMap<String, usize>,
    pub first_counterexample: Option<OracleRow>,
    pub decodability_checked: usize,
    pub decodability_failures: usize,
    pub first_decodability_failure: Option<GridPoint>,
    /// `(s, t, z)` triples where the minimum of Γ over λ differs from the
    /// minimum exact support size.
    pub optimum_mismatches: usize,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<OracleRow>,
}

impl Report for OracleOutput {
    fn passed(&self) -> bool {
        self.passed
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write_rows(&self.rows, out)
    }
}

pub type GammaFn<'a> = dyn Fn(&PartitionScheme) -> Result<(u64, GammaCase), WorkerCountError> + 'a;

pub fn oracle(args: &OracleArgs) -> OracleOutput {
    oracle_with(args, &gamma)
}

/// Grid driver with an injectable closed form, so a deliberately broken
/// formula can be checked to be caught.
pub fn oracle_with(args: &OracleArgs, gamma_fn: &GammaFn<'_>) -> OracleOutput {
    let mut rows = Vec::new();
    let mut by_case = BTreeMap::new();
    let mut optimum_mismatches = 0;
    let mut decodability_checked = 0;
    let mut decodability_failures = 0;
    let mut first_decodability_failure = None;
    let mut note_decodable = |p: GridPoint, ok: bool| {
        decodability_checked += 1;
        if !ok {
            decodability_failures += 1;
            first_decodability_failure.get_or_insert(p);
        }
    };

    for s in 1..=args.s_max {
        for t in 2..=args.t_max {
            for z in 1..=args.z_max {
                let mut best_gamma: Option<u64> = None;
                let mut best_support = u64::MAX;
                for lambda in 0..=z {
                    let sc = PartitionScheme::new(s, t, z, lambda).expect("grid tuples are valid");
                    let support = product_support(&sc).len() as u64;
                    let g = gamma_fn(&sc).ok();
                    let matches = g.is_some_and(|(v, _)| v == support);
                    let decodable = check_decodability(&sc);
                    note_decodable(GridPoint { s, t, z, lambda }, decodable);
                    if !matches {
                        let label = g.map_or("none".to_string(), |(_, c)| c.to_string());
                        *by_case.entry(label).or_insert(0) += 1;
                    }
                    best_support = best_support.min(support);
                    if let Some((v, _)) = g {
                        best_gamma = Some(best_gamma.map_or(v, |b| b.min(v)));
                    }
                    rows.push(OracleRow {
                        s,
                        t,
                        z,
                        lambda,
                        gamma: g.map(|g| g.0),
                        case: g.map(|g| g.1.to_string()),
                        support,
                        matches,
                        decodable,
                    });
                }
                if best_gamma != Some(best_support) {
                    optimum_mismatches += 1;
                }
            }
        }
    }
    for s in 2..=args.s_max {
        for z in 1..=args.z_max {
            let sc = PartitionScheme::new(s, 1, z, 0).expect("grid tuples are valid");
            note_decodable(GridPoint { s, t: 1, z, lambda: 0 }, check_decodability(&sc));
        }
    }

    let gamma_mismatches = rows.iter().filter(|r| !r.matches).count();
    OracleOutput {
        schema_version: SCHEMA_VERSION,
        command: "oracle",
        s_max: args.s_max,
        t_max: args.t_max,
        z_max: args.z_max,
        tuples_checked: rows.len(),
        gamma_mismatches,
        mismatches_by_case: by_case,
        first_counterexample: rows.iter().find(|r| !r.matches).cloned(),
        decodability_checked,
        decodability_failures,
        first_decodability_failure,
        optimum_mismatches,
        passed: gamma_mismatches == 0 && decodability_failures == 0 && optimum_mismatches == 0,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::SchemeArgs;

    fn scheme_args(s: u64, t: u64, z: u64) -> SchemeArgs {
        SchemeArgs {
            s,
            t,
            z,
            lambda: None,
        }
    }

    #[test]
    fn divisor_pairs_of_36() {
        let pairs = divisor_pairs(36);
        assert_eq!(pairs.len(), 9);
        assert_eq!(pairs[0], (1, 36));
        assert_eq!(pairs[8], (36, 1));
    }

    #[test]
    fn plan_s2_t2_z2() {
        let out = plan(&PlanArgs {
            scheme: scheme_args(2, 2, 2),
            m: None,
        })
        .unwrap();
        assert_eq!((out.report.n_age, out.report.lambda_star), (17, Some(2)));
        assert_eq!(out.support_at_optimum, 17);
        let ns: Vec<_> = out.costs.iter().map(|r| r.n).collect();
        assert_eq!(ns, [Some(17), Some(19), Some(17), Some(19), None]);
        assert!(out.passed);
    }

    #[test]
    fn plan_with_lambda_reports_both_counts() {
        let mut a = scheme_args(2, 2, 2);
        a.lambda = Some(0);
        let out = plan(&PlanArgs { scheme: a, m: Some(4) }).unwrap();
        let c = out.chosen.unwrap();
        assert_eq!((c.gamma, c.support_size), (Some(19), 18));
        assert!(out.costs[0].xi.is_some());
    }

    #[test]
    fn plan_single_column() {
        let out = plan(&PlanArgs {
            scheme: scheme_args(2, 1, 3),
            m: None,
        })
        .unwrap();
        assert!(out.costs.iter().all(|r| r.n == Some(9)));
    }

    #[test]
    fn tiny_sweep() {
        let out = sweep(&SweepArgs { st: 4, z: 1, m: 4 }).unwrap();
        assert_eq!(out.rows.len(), 15);
        assert!(out.passed);
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,t,z,m,scheme_name,N,lambda_star,xi,sigma,zeta\n"));
        assert_eq!(text.lines().count(), 16);
    }

    #[test]
    fn run_identity() {
        let args = RunArgs {
            scheme: scheme_args(2, 2, 2),
            m: 4,
            seed: 0,
            phase3_subset: None,
            identity: true,
            subset_trials: 3,
            transcript: None,
        };
        let out = run(&args, PrimeField::mersenne61()).unwrap();
        assert!(out.correct && out.passed);
        assert_eq!(out.n_workers, 17);
    }

    #[test]
    fn run_too_few_responders_fails() {
        let args = RunArgs {
            scheme: scheme_args(2, 2, 2),
            m: 4,
            seed: 0,
            phase3_subset: Some(5),
            identity: false,
            subset_trials: 0,
            transcript: None,
        };
        assert!(run(&args, PrimeField::mersenne61()).is_err());
    }

    #[test]
    fn oracle_tiny_grid() {
        let out = oracle(&OracleArgs {
            s_max: 1,
            t_max: 2,
            z_max: 1,
        });
        assert_eq!(out.tuples_checked, 2);
        assert_eq!(out.rows.len(), 2);
    }
}
