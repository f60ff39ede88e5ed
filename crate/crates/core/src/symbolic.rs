//! Lazy infinite sequences, the left shift, and finite-prefix verifiers for
//! bounded-gap recurrence.
//!
//! A finite prefix can certify non-minimality (a long window that avoids a
//! block) but can only ever give evidence for minimality (bounded gaps so
//! far). [`Verdict`] keeps that asymmetry explicit.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{dbar_slices, is_close, Block, Letter, TailInterval};

/// Prefixes longer than this are streamed through a sliding window instead
/// of being materialized.
pub const MATERIALIZE_LIMIT: u64 = 1 << 20;

/// A deterministic rule producing the letter at each positive index.
pub trait TermRule<L>: Send + Sync {
    fn term(&self, j: u64) -> L;

    /// Letter at an index that may exceed `u64`. Rules with a closed form
    /// override this; the default only handles indices that fit.
    fn term_big(&self, j: &BigUint) -> Option<L> {
        j.to_u64().map(|j| self.term(j))
    }
}

struct FnRule<F>(F);

impl<L, F> TermRule<L> for FnRule<F>
where
    F: Fn(u64) -> L + Send + Sync,
{
    fn term(&self, j: u64) -> L {
        (self.0)(j)
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Offset {
    Small(u64),
    Big(BigUint),
}

impl Offset {
    fn add(&self, n: &BigUint) -> Offset {
        let total = match self {
            Offset::Small(o) => BigUint::from(*o) + n,
            Offset::Big(o) => o + n,
        };
        match total.to_u64() {
            Some(v) => Offset::Small(v),
            None => Offset::Big(total),
        }
    }

    fn to_biguint(&self) -> BigUint {
        match self {
            Offset::Small(o) => BigUint::from(*o),
            Offset::Big(o) => o.clone(),
        }
    }
}

/// An infinite sequence `(s_1, s_2, ...)` evaluated on demand.
///
/// Cloning is cheap; the rule is shared.
#[derive(Clone)]
pub struct LazySequence<L> {
    rule: Arc<dyn TermRule<L>>,
    offset: Offset,
    description: String,
}

impl<L: Letter> LazySequence<L> {
    pub fn from_rule(description: impl Into<String>, rule: impl TermRule<L> + 'static) -> Self {
        LazySequence {
            rule: Arc::new(rule),
            offset: Offset::Small(0),
            description: description.into(),
        }
    }

    pub fn from_fn(description: impl Into<String>, rule: impl Fn(u64) -> L + Send + Sync + 'static) -> Self {
        Self::from_rule(description, FnRule(rule))
    }

    pub fn constant(letter: L) -> Self {
        let desc = format!("constant {letter:?}");
        Self::from_fn(desc, move |_| letter.clone())
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The letter at 1-based index `j`.
    ///
    /// Panics if `j == 0`, or if the index leaves `u64` on a rule without a
    /// big-index form.
    pub fn term(&self, j: u64) -> L {
        assert!(j >= 1, "sequence indices are 1-based");
        match &self.offset {
            Offset::Small(o) => match o.checked_add(j) {
                Some(n) => self.rule.term(n),
                None => self.big_term(&(BigUint::from(*o) + j)),
            },
            Offset::Big(o) => self.big_term(&(o + j)),
        }
    }

    /// The letter at an arbitrarily large 1-based index.
    pub fn term_big(&self, j: &BigUint) -> Option<L> {
        if j.bits() == 0 {
            return None;
        }
        let n = self.offset.to_biguint() + j;
        match n.to_u64() {
            Some(n) => Some(self.rule.term(n)),
            None => self.rule.term_big(&n),
        }
    }

    fn big_term(&self, n: &BigUint) -> L {
        self.rule
            .term_big(n)
            .unwrap_or_else(|| panic!("{} has no closed form for index {n} (beyond u64)", self.description))
    }

    /// `S^n`: the sequence whose term `j` is this sequence's term `j + n`.
    pub fn shift(&self, n: u64) -> Self {
        self.shift_big(&BigUint::from(n))
    }

    pub fn shift_big(&self, n: &BigUint) -> Self {
        LazySequence {
            rule: Arc::clone(&self.rule),
            offset: self.offset.add(n),
            description: self.description.clone(),
        }
    }

    /// Total shift applied to the underlying rule.
    pub fn offset(&self) -> BigUint {
        self.offset.to_biguint()
    }

    /// `(s_start, ..., s_{start+len-1})`.
    pub fn block_at(&self, start: u64, len: usize) -> Result<Block<L>> {
        if start == 0 {
            return Err(Error::ZeroIndex);
        }
        Block::new((0..len as u64).map(|k| self.term(start + k)).collect())
    }

    pub fn prefix(&self, len: u64) -> Vec<L> {
        (1..=len).map(|j| self.term(j)).collect()
    }

    /// Termwise image under `f`.
    pub fn map<M: Letter>(
        &self,
        description: impl Into<String>,
        f: impl Fn(&L) -> M + Send + Sync + 'static,
    ) -> LazySequence<M> {
        LazySequence::from_rule(description, MapRule { inner: self.clone(), f })
    }
}

impl<L> fmt::Debug for LazySequence<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazySequence")
            .field("description", &self.description)
            .field("offset", &self.offset.to_biguint())
            .finish()
    }
}

struct MapRule<L, F> {
    inner: LazySequence<L>,
    f: F,
}

impl<L, M, F> TermRule<M> for MapRule<L, F>
where
    L: Letter,
    F: Fn(&L) -> M + Send + Sync,
{
    fn term(&self, j: u64) -> M {
        (self.f)(&self.inner.term(j))
    }

    fn term_big(&self, j: &BigUint) -> Option<M> {
        self.inner.term_big(j).map(|l| (self.f)(&l))
    }
}

/// `S^n(s)`.
pub fn shift<L: Letter>(s: &LazySequence<L>, n: u64) -> LazySequence<L> {
    s.shift(n)
}

pub fn block_at<L: Letter>(s: &LazySequence<L>, start: u64, len: usize) -> Result<Block<L>> {
    s.block_at(start, len)
}

/// Truncated d-bar distance of two sequences with a rigorous tail enclosure.
pub fn dbar_truncated<L: Letter>(s1: &LazySequence<L>, s2: &LazySequence<L>, depth: u32) -> Result<TailInterval> {
    if depth == 0 {
        return Err(Error::Precondition("truncation depth must be >= 1".into()));
    }
    let mut weight = 1.0;
    let mut lo = 0.0;
    for j in 1..=u64::from(depth) {
        weight *= 0.5;
        lo += s1.term(j).distance(&s2.term(j)) * weight;
    }
    Ok(TailInterval::from_partial_sum(lo, depth, L::SPACE.diameter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    GapBoundHolds,
    WitnessFound,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxGap {
    Gap(u64),
    UnboundedEvidence,
}

/// A window of letters `[start, start + len - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub start: u64,
    pub len: u64,
}

/// Outcome of a recurrence scan or a witness check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport<L> {
    #[serde(skip)]
    pub target: Block<L>,
    pub target_len: usize,
    pub epsilon: f64,
    /// Last letter index examined.
    pub prefix_len: u64,
    pub hits: u64,
    pub max_gap_found: MaxGap,
    pub first_violation_window: Option<Window>,
    /// Closest sub-block start and its distance to the target.
    pub closest: Option<(u64, f64)>,
    pub verdict: Verdict,
}

impl<L> RecurrenceReport<L> {
    /// Whether every boundary-inclusive gap is at most `bound`.
    pub fn gaps_within(&self, bound: u64) -> bool {
        matches!(self.max_gap_found, MaxGap::Gap(g) if g <= bound)
    }
}

/// Streams the distances of every length-`len` sub-block starting at
/// `first..=last` to `target`.
fn for_each_distance<L: Letter>(
    s: &LazySequence<L>,
    target: &[L],
    first: u64,
    last: u64,
    mut visit: impl FnMut(u64, f64),
) {
    if last < first {
        return;
    }
    let len = target.len() as u64;
    let end = last + len - 1;
    if end - first < MATERIALIZE_LIMIT {
        let letters: Vec<L> = (first..=end).map(|j| s.term(j)).collect();
        for (k, w) in letters.windows(target.len()).enumerate() {
            visit(first + k as u64, dbar_slices(w, target));
        }
        return;
    }
    let mut window: VecDeque<L> = (first..first + len).map(|j| s.term(j)).collect();
    let mut buf: Vec<L> = Vec::with_capacity(target.len());
    for pos in first..=last {
        buf.clear();
        buf.extend(window.iter().cloned());
        visit(pos, dbar_slices(&buf, target));
        if pos < last {
            window.pop_front();
            window.push_back(s.term(pos + len));
        }
    }
}

struct GapTracker {
    lower: u64,
    upper: u64,
    previous: u64,
    max_gap: u64,
    longest_empty: (u64, u64),
    hits: u64,
    closest: Option<(u64, f64)>,
}

impl GapTracker {
    /// Tracks hits among start positions `lower..=upper`; the virtual hits
    /// at `lower - 1` and `upper + 1` make the boundary gaps count.
    fn new(lower: u64, upper: u64) -> Self {
        GapTracker {
            lower,
            upper,
            previous: lower - 1,
            max_gap: 0,
            longest_empty: (0, 0),
            hits: 0,
            closest: None,
        }
    }

    fn visit(&mut self, pos: u64, distance: f64, hit: bool) {
        if self.closest.is_none_or(|(_, d)| distance < d) {
            self.closest = Some((pos, distance));
        }
        if hit {
            self.close_gap(pos);
            self.hits += 1;
        }
    }

    fn close_gap(&mut self, pos: u64) {
        let gap = pos - self.previous;
        if gap > self.max_gap {
            self.max_gap = gap;
        }
        if gap - 1 > self.longest_empty.1 - self.longest_empty.0 {
            self.longest_empty = (self.previous + 1, pos);
        }
        self.previous = pos;
    }

    fn finish(mut self) -> Self {
        let end = self.upper + 1;
        self.close_gap(end);
        self
    }

    /// Letter window spanned by the longest run of non-hit start positions.
    fn empty_window(&self, target_len: u64) -> Option<Window> {
        let (from, to) = self.longest_empty;
        if to <= from {
            return None;
        }
        let from = from.max(self.lower);
        let last_start = (to - 1).min(self.upper);
        Some(Window {
            start: from,
            len: last_start - from + target_len,
        })
    }
}

/// Scans start positions `1..=prefix_len - len(target) + 1` for sub-blocks
/// within `epsilon` of `target` and reports the largest boundary-inclusive
/// gap between hits.
pub fn recurrence_gap_scan<L: Letter>(
    s: &LazySequence<L>,
    target: &Block<L>,
    epsilon: f64,
    prefix_len: u64,
) -> Result<RecurrenceReport<L>> {
    let len = target.len() as u64;
    if prefix_len < len {
        return Err(Error::Precondition(format!(
            "prefix length {prefix_len} is shorter than the target ({len})"
        )));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Precondition("epsilon must be non-negative".into()));
    }
    let last = prefix_len - len + 1;
    let mut tracker = GapTracker::new(1, last);
    for_each_distance(s, target.letters(), 1, last, |pos, d| {
        tracker.visit(pos, d, is_close(d, epsilon))
    });
    let tracker = tracker.finish();
    let (verdict, window) = if tracker.hits >= 2 {
        (Verdict::GapBoundHolds, None)
    } else {
        (Verdict::Inconclusive, tracker.empty_window(len))
    };
    Ok(RecurrenceReport {
        target: target.clone(),
        target_len: target.len(),
        epsilon,
        prefix_len,
        hits: tracker.hits,
        max_gap_found: if tracker.hits == 0 {
            MaxGap::UnboundedEvidence
        } else {
            MaxGap::Gap(tracker.max_gap)
        },
        first_violation_window: window,
        closest: tracker.closest,
        verdict,
    })
}

/// Start positions in `1..=prefix_len - len(target) + 1` whose sub-block is
/// within `epsilon` of `target`.
pub fn hit_positions<L: Letter>(s: &LazySequence<L>, target: &Block<L>, epsilon: f64, prefix_len: u64) -> Vec<u64> {
    let len = target.len() as u64;
    let mut hits = Vec::new();
    if prefix_len >= len {
        for_each_distance(s, target.letters(), 1, prefix_len - len + 1, |pos, d| {
            if is_close(d, epsilon) {
                hits.push(pos)
            }
        });
    }
    hits
}

/// Checks that every sub-block of `target`'s length inside the window
/// `[window_start, window_start + window_len - 1]` stays at least `epsilon`
/// (less the slack) away from `target`.
pub fn witness_check<L: Letter>(
    s: &LazySequence<L>,
    target: &Block<L>,
    epsilon: f64,
    window_start: u64,
    window_len: u64,
) -> Result<RecurrenceReport<L>> {
    let len = target.len() as u64;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    if window_start == 0 {
        return Err(Error::ZeroIndex);
    }
    if window_len < len {
        return Err(Error::Precondition(format!(
            "window length {window_len} is shorter than the target ({len})"
        )));
    }
    let last = window_start + window_len - len;
    let mut tracker = GapTracker::new(window_start, last);
    for_each_distance(s, target.letters(), window_start, last, |pos, d| {
        tracker.visit(pos, d, is_close(d, epsilon))
    });
    let tracker = tracker.finish();
    let window = Window {
        start: window_start,
        len: window_len,
    };
    let found = tracker.hits == 0;
    Ok(RecurrenceReport {
        target: target.clone(),
        target_len: target.len(),
        epsilon,
        prefix_len: window_start + window_len - 1,
        hits: tracker.hits,
        max_gap_found: if found {
            MaxGap::UnboundedEvidence
        } else {
            MaxGap::Gap(tracker.max_gap)
        },
        first_violation_window: found.then_some(window),
        closest: tracker.closest,
        verdict: if found {
            Verdict::WitnessFound
        } else {
            Verdict::Inconclusive
        },
    })
}
