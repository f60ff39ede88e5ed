use std::path::{Path, PathBuf};

use mindetect::construction::{build_b, lemma2_scan, prop1_check};
use mindetect::detector::{
    build_umd_detector, bundled_specs, detector_verifies_nonminimal, lemma3_check, lipschitz_sample_test,
};
use mindetect::metric::{fraction_string, parse_rational};
use mindetect::symbolic::{hit_positions, witness_check};
use mindetect::toeplitz::{block_recurrence_scan, v_enumeration};
use mindetect::{build_toy, build_x, FunctionSpec, LazySequence, Letter, UnitRational, Verdict};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::prefix::{finite_sequence, read_points, SeqChoice};
use crate::report::{write_output, RunReport};

fn check_length(length: u64, max_prefix: u64) -> CliResult<()> {
    if length == 0 {
        return Err(CliError::Usage("--length must be at least 1".into()));
    }
    if length > max_prefix {
        return Err(CliError::Usage(format!(
            "--length {length} exceeds the prefix cap {max_prefix} (TOEPLITZ_MAX_PREFIX)"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, epsilon: f64) -> CliResult<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {epsilon}")))
    }
}

pub fn gen_prefix(seq: SeqChoice, length: u64, out: Option<&Path>, max_prefix: u64) -> CliResult<()> {
    check_length(length, max_prefix)?;
    crate::prefix::write_prefix(seq, length, out)
}

pub fn check_lemma2(length: u64, max_prefix: u64) -> CliResult<RunReport> {
    check_length(length, max_prefix)?;
    let scan = lemma2_scan(length)?;
    let mut report = RunReport::new("check-lemma2", json!({ "length": length }));
    report
        .verdict("min_distance_at_least_one_eighth", scan.holds)
        .results(&scan);
    Ok(report)
}

pub fn check_lemma1(length: u64, block_len: usize, max_level: u32, max_prefix: u64) -> CliResult<RunReport> {
    check_length(length, max_prefix)?;
    if block_len == 0 || block_len as u64 > length {
        return Err(CliError::Usage(format!(
            "--block-len must lie in 1..={length}, got {block_len}"
        )));
    }
    let scan = block_recurrence_scan(&v_enumeration(), length, block_len, max_level)?;
    let mut report = RunReport::new(
        "check-lemma1",
        json!({ "length": length, "block_len": block_len, "max_level": max_level }),
    );
    report.verdict("no_violations", scan.violations == 0).results(&scan);
    Ok(report)
}

/// Reads a spec file, or a bundled spec written as `bundled:<name>`.
pub fn load_spec(spec: &str) -> CliResult<FunctionSpec> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return bundled_specs()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| CliError::Usage(format!("no bundled spec named {name:?}")));
    }
    let path = PathBuf::from(spec);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    FunctionSpec::from_json(&text).map_err(|e| CliError::input(&path, e.to_string()))
}

pub fn image_test(spec: &str, epsilon: f64, budget: u64, max_prefix: u64) -> CliResult<RunReport> {
    check_positive("--epsilon", epsilon)?;
    let function = load_spec(spec)?;
    let check = lemma3_check(&function, epsilon, budget, max_prefix)?;
    let mut report = RunReport::new(
        "image-test",
        json!({
            "spec": spec,
            "function": function,
            "epsilon": epsilon,
            "budget": budget,
            "max_prefix": max_prefix,
        }),
    );
    report
        .verdict("dbar_bound", check.bound_holds)
        .verdict("gap_bound", check.gap_bound_holds)
        .verdict("predicted_returns", check.predicted_returns_hold)
        .results(&check);
    Ok(report)
}

pub fn toy(c: &str, epsilon: f64, search_len: u64) -> CliResult<RunReport> {
    check_positive("--epsilon", epsilon)?;
    let c = parse_rational(c)
        .and_then(UnitRational::new)
        .map_err(|e| CliError::Usage(format!("--c: {e}")))?;
    let check = prop1_check(c, epsilon, search_len)?;
    let mut report = RunReport::new(
        "toy",
        json!({
            "c": fraction_string(&c.get()),
            "epsilon": epsilon,
            "search_len": search_len,
        }),
    );
    report.verdict("dbar_below_two_epsilon", check.pass).results(&check);
    Ok(report)
}

pub struct DetectArgs<'a> {
    pub prefix: &'a Path,
    pub witness_start: u64,
    pub witness_len: usize,
    pub epsilon: f64,
    pub pairs: u64,
    pub seed: u64,
}

pub fn detect(args: &DetectArgs, max_prefix: u64) -> CliResult<RunReport> {
    check_positive("--epsilon", args.epsilon)?;
    let points = read_points(args.prefix)?;
    let n = points.len() as u64;
    check_length(n, max_prefix)?;
    if args.witness_start == 0 || args.witness_len == 0 {
        return Err(CliError::Usage("witness start and length must be positive".into()));
    }
    if args.witness_start + args.witness_len as u64 > n {
        return Err(CliError::Usage(format!(
            "the prefix has {n} points; it must extend past the witness block"
        )));
    }
    let s = finite_sequence(points, &args.prefix.display().to_string());
    let witness = s.block_at(args.witness_start, args.witness_len)?;
    let window_len = n - args.witness_start;
    let domain = witness_check(&s, &witness, args.epsilon, args.witness_start + 1, window_len)?;
    let detector = build_umd_detector(&s, args.witness_start, args.witness_len)?;
    let image = detector_verifies_nonminimal(&detector, &s, args.witness_start, args.witness_len, n)?;
    let lipschitz = lipschitz_sample_test(&detector, args.pairs, args.seed);

    let mut report = RunReport::new(
        "detect",
        json!({
            "prefix_len": n,
            "witness_start": args.witness_start,
            "witness_len": args.witness_len,
            "epsilon": args.epsilon,
            "pairs": args.pairs,
            "seed": args.seed,
        }),
    );
    report
        .verdict("image_witness_found", image.report.verdict == Verdict::WitnessFound)
        .verdict("lipschitz_sample", lipschitz.violations == 0)
        .results(json!({
            "domain": domain,
            "detector": detector,
            "image": image,
            "lipschitz": lipschitz,
        }));
    Ok(report)
}

pub struct GapStatsArgs<'a> {
    pub seq: SeqChoice,
    pub block_len: u64,
    pub epsilon: f64,
    pub prefix_len: u64,
    pub targets: u64,
    pub out: Option<&'a Path>,
}

#[derive(Debug, Serialize)]
struct GapRow {
    target_start: u64,
    max_level: Option<u32>,
    hits: u64,
    first_hit: Option<u64>,
    max_gap: u64,
    bound: Option<u64>,
    within_bound: Option<bool>,
    hit_positions: String,
}

/// Writes one CSV row per target block; returns whether every bounded row
/// stayed within its bound.
pub fn gap_stats(args: &GapStatsArgs, max_prefix: u64) -> CliResult<bool> {
    check_length(args.prefix_len, max_prefix)?;
    if args.epsilon.is_nan() || args.epsilon < 0.0 {
        return Err(CliError::Usage(format!(
            "--epsilon must be non-negative, got {}",
            args.epsilon
        )));
    }
    if args.block_len == 0 || args.targets == 0 {
        return Err(CliError::Usage("--block-len and --targets must be positive".into()));
    }
    if args.block_len + args.targets - 1 > args.prefix_len {
        return Err(CliError::Usage(format!(
            "{} target blocks of length {} do not fit in a prefix of {}",
            args.targets, args.block_len, args.prefix_len
        )));
    }
    let rows = match args.seq {
        SeqChoice::X => gap_rows(args, build_x().sequence())?,
        SeqChoice::B => gap_rows(args, &build_b())?,
        SeqChoice::Toy(c) => gap_rows(args, build_toy(c).sequence())?,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).expect("in-memory csv");
    }
    let bytes = w.into_inner().expect("in-memory csv");
    write_output(args.out, &bytes)?;
    Ok(rows.iter().all(|r| r.within_bound != Some(false)))
}

fn gap_rows<L: Letter>(args: &GapStatsArgs, s: &LazySequence<L>) -> CliResult<Vec<GapRow>> {
    let last_start = args.prefix_len - args.block_len + 1;
    (1..=args.targets)
        .map(|t| {
            let target = s.block_at(t, args.block_len as usize)?;
            let hits = hit_positions(s, &target, args.epsilon, args.prefix_len);
            let max_gap = std::iter::once(0)
                .chain(hits.iter().copied())
                .chain(std::iter::once(last_start + 1))
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| w[1] - w[0])
                .max()
                .unwrap_or(0);
            let max_level = args.seq.block_level(t, args.block_len);
            let bound = max_level.and_then(|l| args.seq.level_period(l));
            Ok(GapRow {
                target_start: t,
                max_level,
                hits: hits.len() as u64,
                first_hit: hits.first().copied(),
                max_gap,
                bound,
                within_bound: bound.map(|b| max_gap <= b),
                hit_positions: hits.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            })
        })
        .collect()
}
