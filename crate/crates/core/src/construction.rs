//! The counterexample sequence over the square and the rational toy model.
//!
//! The counterexample starts with the three corners `(0,0), (1,0), (0,1)`
//! and continues with the 2-Toeplitz sequence of the triple enumeration `V`,
//! each triple contributing three letters. Two independent constructions are
//! provided: [`build_x`] indexes letters in closed form, [`build_x_pipeline`]
//! composes the generic concatenation and triple expansion. They must agree.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{Block, Letter, Point2, TailInterval, UnitRational};
use crate::symbolic::{dbar_truncated, witness_check, LazySequence, RecurrenceReport, TermRule, Verdict};
use crate::toeplitz::{enumerate_rationals, rationals, two_adic_level, v_enumeration, v_term, VTriple};

/// `head * tail`: the letters of `head` followed by `tail`.
pub fn concat<L: Letter>(head: &Block<L>, tail: &LazySequence<L>) -> LazySequence<L> {
    LazySequence::from_rule(
        format!("{} letters * {}", head.len(), tail.description()),
        ConcatRule {
            head: head.letters().to_vec(),
            tail: tail.clone(),
        },
    )
}

struct ConcatRule<L> {
    head: Vec<L>,
    tail: LazySequence<L>,
}

impl<L: Letter> TermRule<L> for ConcatRule<L> {
    fn term(&self, j: u64) -> L {
        let t = self.head.len() as u64;
        if j <= t {
            self.head[(j - 1) as usize].clone()
        } else {
            self.tail.term(j - t)
        }
    }

    fn term_big(&self, j: &BigUint) -> Option<L> {
        match j.to_u64() {
            Some(j) => Some(self.term(j)),
            None => self.tail.term_big(&(j - self.head.len())),
        }
    }
}

/// Reads a sequence of triples as a sequence of points, three per triple.
pub fn expand_triples(triples: &LazySequence<VTriple>) -> LazySequence<Point2> {
    LazySequence::from_rule(
        format!("{} expanded", triples.description()),
        ExpandRule(triples.clone()),
    )
}

struct ExpandRule(LazySequence<VTriple>);

impl TermRule<Point2> for ExpandRule {
    fn term(&self, j: u64) -> Point2 {
        self.0.term(j.div_ceil(3)).0[((j - 1) % 3) as usize]
    }

    fn term_big(&self, j: &BigUint) -> Option<Point2> {
        let (k, slot) = (j + 2u32).div_rem(&BigUint::from(3u32));
        let slot = slot.to_usize()?;
        // (j + 2) mod 3 == (j - 1) mod 3
        self.0.term_big(&k).map(|t| t.0[slot])
    }
}

/// Levels up to this are served from a precomputed table.
const CACHED_LEVELS: u64 = 64;

struct CounterexampleRule {
    v_cache: Vec<VTriple>,
}

impl CounterexampleRule {
    fn new() -> Self {
        CounterexampleRule {
            v_cache: (1..=CACHED_LEVELS).map(v_term).collect(),
        }
    }

    fn triple(&self, level: u64) -> VTriple {
        if level <= CACHED_LEVELS {
            self.v_cache[(level - 1) as usize]
        } else {
            v_term(level)
        }
    }
}

impl TermRule<Point2> for CounterexampleRule {
    fn term(&self, j: u64) -> Point2 {
        if j <= 3 {
            return VTriple::CORNERS.0[(j - 1) as usize];
        }
        let k = (j - 3).div_ceil(3);
        let slot = ((j - 4) % 3) as usize;
        let level = two_adic_level(k).expect("k >= 1");
        self.triple(u64::from(level)).0[slot]
    }

    fn term_big(&self, j: &BigUint) -> Option<Point2> {
        if let Some(j) = j.to_u64() {
            return Some(self.term(j));
        }
        let (k, rem) = (j - 1u32).div_rem(&BigUint::from(3u32));
        // j = 3k + rem + 1: b-position k, slot rem.
        let level = k.trailing_zeros()? + 1;
        Some(self.triple(level).0[rem.to_usize()?])
    }
}

/// The counterexample `x = ((0,0),(1,0),(0,1)) * b`, with `b` the
/// 2-Toeplitz sequence of `V`.
#[derive(Debug, Clone)]
pub struct CounterexampleSeq {
    seq: LazySequence<Point2>,
}

impl CounterexampleSeq {
    pub fn sequence(&self) -> &LazySequence<Point2> {
        &self.seq
    }

    pub fn term(&self, j: u64) -> Point2 {
        self.seq.term(j)
    }
}

/// Closed-form construction of the counterexample.
pub fn build_x() -> CounterexampleSeq {
    CounterexampleSeq {
        seq: LazySequence::from_rule("x (closed form)", CounterexampleRule::new()),
    }
}

/// The same sequence assembled from [`concat`] and [`expand_triples`].
pub fn build_x_pipeline() -> LazySequence<Point2> {
    let head = Block::new(VTriple::CORNERS.0.to_vec()).expect("three corners");
    concat(&head, &expand_triples(&build_b()))
}

/// `b`: the 2-Toeplitz sequence of `V`.
pub fn build_b() -> LazySequence<VTriple> {
    v_enumeration().toeplitz()
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    pub report: RecurrenceReport<Point2>,
    pub min_distance: f64,
    pub argmin: u64,
    pub holds: bool,
}

/// Minimum d-bar distance from the corner block to every later 3-block
/// `(x_i, x_{i+1}, x_{i+2})`, `2 <= i <= len - 2`.
pub fn lemma2_scan(len: u64) -> Result<Lemma2Report> {
    if len < 6 {
        return Err(Error::Precondition(format!(
            "lemma 2 scan needs length >= 6, got {len}"
        )));
    }
    let x = build_x();
    let target = x.seq.block_at(1, 3)?;
    let report = witness_check(&x.seq, &target, 1.0 / 8.0, 2, len - 1)?;
    let (argmin, min_distance) = report.closest.expect("at least one 3-block");
    Ok(Lemma2Report {
        holds: report.verdict == Verdict::WitnessFound,
        report,
        min_distance,
        argmin,
    })
}

/// `(c, a_1, a_2, ...)` with `a` the 2-Toeplitz sequence of the rationals.
#[derive(Debug, Clone)]
pub struct ToyModelSeq {
    head: UnitRational,
    seq: LazySequence<UnitRational>,
}

impl ToyModelSeq {
    pub fn head(&self) -> UnitRational {
        self.head
    }

    pub fn sequence(&self) -> &LazySequence<UnitRational> {
        &self.seq
    }

    pub fn term(&self, j: u64) -> UnitRational {
        self.seq.term(j)
    }
}

pub fn build_toy(c: UnitRational) -> ToyModelSeq {
    let head = Block::new(vec![c]).expect("one letter");
    ToyModelSeq {
        head: c,
        seq: concat(&head, &rationals().toeplitz()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Report {
    /// Enumeration index `r` of the letter `b_r` used as the ε-close term.
    pub enumeration_index: u64,
    /// Shift `n` applied to the toy sequence, as a decimal string.
    #[serde(serialize_with = "serialize_big")]
    pub shift_used: BigUint,
    /// Leading letters of the shifted sequence that agree with the toy
    /// sequence, counting the ε-close head.
    pub matched_len: u64,
    pub dbar_bound: TailInterval,
    pub candidates_examined: u64,
    pub pass: bool,
}

pub(crate) fn serialize_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

const PROP1_MAX_DEPTH: u32 = 64;

/// Searches for a shift `n` with `d(S^n(toy), toy) < 2ε`.
///
/// Candidates are the enumeration letters `b_r`, `r <= search_len`, within
/// ε of `c`. For each, the first index of `a` carrying `b_r` is located and
/// checked by evaluation; the run of agreeing letters after the head is
/// measured directly and sets the truncation depth.
pub fn prop1_check(c: UnitRational, epsilon: f64, search_len: u64) -> Result<Prop1Report> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let toy = build_toy(c);
    let a = rationals().toeplitz();
    let mut best: Option<Prop1Report> = None;
    let mut examined = 0;
    for r in 1..=search_len {
        let b_r = UnitRational::new(enumerate_rationals(r)).expect("in [0,1]");
        if (b_r.to_f64() - c.to_f64()).abs() >= epsilon {
            continue;
        }
        examined += 1;
        let q = BigUint::one() << (r - 1);
        if a.term_big(&q) != Some(b_r) {
            return Err(Error::Precondition(format!("index 2^{} does not carry b_{r}", r - 1)));
        }
        // toy term q + 1 is a_q
        let shifted = toy.seq.shift_big(&q);
        let mut matched = 1;
        while matched < u64::from(PROP1_MAX_DEPTH) && shifted.term(matched + 1) == toy.term(matched + 1) {
            matched += 1;
        }
        let depth = (matched as u32).min(PROP1_MAX_DEPTH);
        let bound = dbar_truncated(&shifted, &toy.seq, depth)?;
        let candidate = Prop1Report {
            enumeration_index: r,
            shift_used: q,
            matched_len: matched,
            dbar_bound: bound,
            candidates_examined: examined,
            pass: bound.hi < 2.0 * epsilon,
        };
        let done = candidate.pass;
        if best.as_ref().is_none_or(|b| candidate.dbar_bound.hi < b.dbar_bound.hi) {
            best = Some(candidate);
        }
        if done {
            break;
        }
    }
    let mut report = best.ok_or(Error::SearchExhausted(search_len))?;
    report.candidates_examined = examined;
    Ok(report)
}

/// Letters of the toy model's tail that recur exactly, for gap tables.
pub fn toy_tail() -> LazySequence<UnitRational> {
    rationals().toeplitz()
}

/// True when the two sequences agree letter for letter on `1..=len`.
pub fn agree_on_prefix<L: Letter>(a: &LazySequence<L>, b: &LazySequence<L>, len: u64) -> bool {
    (1..=len).all(|j| a.term(j) == b.term(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{dbar_block, Rational};
    use num_rational::Ratio;

    fn unit(p: i64, q: i64) -> UnitRational {
        UnitRational::new(Ratio::new(p, q)).unwrap()
    }

    #[test]
    fn concat_passes_head_then_tail() {
        let tail = toy_tail();
        let head = Block::new(vec![unit(1, 7), unit(2, 7)]).unwrap();
        let s = concat(&head, &tail);
        assert_eq!(s.term(1), unit(1, 7));
        assert_eq!(s.term(3), tail.term(1));
        assert_eq!(s.term(10), tail.term(8));
    }

    #[test]
    fn x_head_and_first_triples() {
        let x = build_x();
        assert_eq!(x.term(1), Point2::ORIGIN);
        assert_eq!(x.term(2), Point2::E1);
        assert_eq!(x.term(3), Point2::E2);
        let v1 = v_term(1);
        let v2 = v_term(2);
        assert_eq!(x.sequence().block_at(4, 3).unwrap().letters(), &v1.0);
        assert_eq!(x.sequence().block_at(7, 3).unwrap().letters(), &v2.0);
        assert_eq!(x.sequence().block_at(10, 3).unwrap().letters(), &v1.0);
    }

    #[test]
    fn closed_form_and_pipeline_agree() {
        assert!(agree_on_prefix(build_x().sequence(), &build_x_pipeline(), 3 << 12));
    }

    #[test]
    fn closed_form_and_pipeline_agree_at_huge_indices() {
        let x = build_x();
        let p = build_x_pipeline();
        for exp in [64u32, 65, 100, 333] {
            let base = BigUint::one() << exp;
            for off in 0u32..9 {
                let j = &base + off;
                assert_eq!(x.sequence().term_big(&j), p.term_big(&j), "index 2^{exp}+{off}");
            }
        }
    }

    #[test]
    fn big_index_matches_small_index_path() {
        let rule = CounterexampleRule::new();
        // Adding 3 * 2^70 moves the b-position by 2^70, which preserves the
        // level of every b-position below 2^70.
        let lift = (BigUint::one() << 70) * 3u32;
        for j in 4..2000u64 {
            assert_eq!(rule.term_big(&(&lift + j)), Some(rule.term(j)));
        }
    }

    #[test]
    fn lemma2_rejects_short_scans() {
        assert!(lemma2_scan(5).is_err());
        let r = lemma2_scan(6).unwrap();
        assert!(r.holds);
        assert!(r.min_distance >= 0.125 - 1e-9);
    }

    #[test]
    fn lemma2_self_distance_is_zero() {
        let x = build_x();
        let b = x.sequence().block_at(1, 3).unwrap();
        assert_eq!(dbar_block(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn toy_head_and_tail() {
        let toy = build_toy(unit(1, 3));
        assert_eq!(toy.term(1), unit(1, 3));
        assert_eq!(toy.term(2), unit(0, 1));
        assert_eq!(toy.term(3), unit(1, 1));
        assert_eq!(toy.term(4), unit(0, 1));
        assert_eq!(toy.term(5), unit(1, 2));
    }

    #[test]
    fn prop1_with_large_epsilon_passes_on_first_candidate() {
        let r = prop1_check(unit(1, 2), 2.0, 16).unwrap();
        assert!(r.pass);
        assert_eq!(r.enumeration_index, 1);
    }

    #[test]
    fn prop1_one_third() {
        let r = prop1_check(unit(1, 3), 0.01, 1 << 16).unwrap();
        assert!(r.pass);
        // 1/3 is the fourth rational, first placed at index 8 of a.
        assert_eq!(r.enumeration_index, 4);
        assert_eq!(r.shift_used, BigUint::from(8u32));
        assert_eq!(r.matched_len, 8);
        assert_eq!(r.dbar_bound.lo, 0.0);
        assert_eq!(r.dbar_bound.hi, 1.0 / 256.0);
    }

    #[test]
    fn prop1_exhausts_without_candidates() {
        let c = UnitRational::new(Rational::new(9, 10)).unwrap();
        assert!(matches!(prop1_check(c, 0.01, 10), Err(Error::SearchExhausted(10))));
    }
}
