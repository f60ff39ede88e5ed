//! 2-Toeplitz sequences and the enumerations that seed them.
//!
//! The 2-Toeplitz sequence of `B = (b_1, b_2, ...)` places `b_p` at every
//! index `j` with `j ≡ 2^{p-1} (mod 2^p)`, i.e. at the indices whose 2-adic
//! level (trailing zero bits plus one) is `p`:
//!
//! ```text
//! b1 b2 b1 b3 b1 b2 b1 b4 b1 b2 b1 b3 b1 b2 b1 b5 ...
//! ```

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{d_euclid, Letter, Point2, Rational, Space};
use crate::symbolic::{LazySequence, TermRule};

/// `p` such that `2^{p-1} | j` and `2^p ∤ j`.
pub fn two_adic_level(j: u64) -> Result<u32> {
    if j == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok(j.trailing_zeros() + 1)
}

/// [`two_adic_level`] for indices beyond `u64`.
pub fn two_adic_level_big(j: &BigUint) -> Result<u64> {
    j.trailing_zeros().map(|z| z + 1).ok_or(Error::ZeroIndex)
}

/// `2^{max_level+1}`: any block whose letters all have level at most
/// `max_level` reappears inside every window of this many terms.
pub fn lemma1_gap_bound(max_level: u32) -> Result<u64> {
    if max_level == 0 {
        return Err(Error::Precondition("max_level must be >= 1".into()));
    }
    let exp = max_level + 1;
    1u64.checked_shl(exp).filter(|_| exp < 64).ok_or(Error::Overflow(exp))
}

/// An infinite enumeration `b_1, b_2, ...` of letters.
#[derive(Clone)]
pub struct Enumeration<L> {
    item: Arc<dyn Fn(u64) -> L + Send + Sync>,
    description: String,
}

impl<L: Letter> Enumeration<L> {
    pub fn new(description: impl Into<String>, item: impl Fn(u64) -> L + Send + Sync + 'static) -> Self {
        Enumeration {
            item: Arc::new(item),
            description: description.into(),
        }
    }

    /// `b_n`, 1-based.
    pub fn item(&self, n: u64) -> L {
        (self.item)(n)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The 2-Toeplitz sequence of this enumeration.
    pub fn toeplitz(&self) -> LazySequence<L> {
        LazySequence::from_rule(
            format!("2-Toeplitz of {}", self.description),
            ToeplitzRule(self.clone()),
        )
    }
}

impl<L> fmt::Debug for Enumeration<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Enumeration")
            .field("description", &self.description)
            .finish()
    }
}

struct ToeplitzRule<L>(Enumeration<L>);

impl<L: Letter> TermRule<L> for ToeplitzRule<L> {
    fn term(&self, j: u64) -> L {
        toeplitz_term(&self.0, j).expect("lazy sequences are 1-based")
    }

    fn term_big(&self, j: &BigUint) -> Option<L> {
        let level = two_adic_level_big(j).ok()?;
        Some(self.0.item(level))
    }
}

/// `b_{level(j)}`.
pub fn toeplitz_term<L: Letter>(b: &Enumeration<L>, j: u64) -> Result<L> {
    Ok(b.item(u64::from(two_adic_level(j)?)))
}

/// Largest denominator covered by the precomputed totient table.
const TABLE_DENOMINATOR: u64 = 1 << 16;

/// `cumulative[q]` = number of reduced fractions `p/q'` in (0,1) with
/// `2 <= q' <= q`.
fn cumulative_counts() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TABLE_DENOMINATOR as usize;
        let mut phi: Vec<u64> = (0..=n as u64).collect();
        for i in 2..=n {
            if phi[i] == i as u64 {
                for k in (i..=n).step_by(i) {
                    phi[k] -= phi[k] / i as u64;
                }
            }
        }
        let mut cumulative = vec![0u64; n + 1];
        for q in 2..=n {
            cumulative[q] = cumulative[q - 1] + phi[q];
        }
        cumulative
    })
}

fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// The `k`-th (1-based) reduced fraction of (0,1) in denominator-then-numerator
/// order: 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...
fn interior_rational(k: u64) -> Rational {
    debug_assert!(k >= 1);
    let table = cumulative_counts();
    let (q, before) = if k <= *table.last().unwrap() {
        let q = table.partition_point(|&c| c < k);
        (q as u64, table[q - 1])
    } else {
        let mut q = TABLE_DENOMINATOR;
        let mut before = table[q as usize];
        loop {
            q += 1;
            let here = totient(q);
            if before + here >= k {
                break (q, before);
            }
            before += here;
        }
    };
    let mut rank = k - before;
    let mut p = 0;
    while rank > 0 {
        p += 1;
        if p.gcd(&q) == 1 {
            rank -= 1;
        }
    }
    Ratio::new(p as i64, q as i64)
}

/// The `n`-th element of a fixed bijective enumeration of `Q ∩ [0,1]`:
/// 0, 1, then reduced `p/q` by denominator and then numerator.
pub fn enumerate_rationals(n: u64) -> Rational {
    match n {
        0 => panic!("enumerations are 1-based"),
        1 => Rational::zero(),
        2 => Rational::from_integer(1),
        _ => interior_rational(n - 2),
    }
}

/// One of the three triangle edges carrying a dense set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeId {
    /// Segment from (1,0) to (0,1).
    A1,
    /// Segment from (0,0) to (0,1).
    A2,
    /// Segment from (0,0) to (1,0).
    A3,
}

impl EdgeId {
    pub const ALL: [EdgeId; 3] = [EdgeId::A1, EdgeId::A2, EdgeId::A3];

    /// Position (0-based) of the triple component that lives on this edge.
    pub fn slot(self) -> usize {
        match self {
            EdgeId::A1 => 0,
            EdgeId::A2 => 1,
            EdgeId::A3 => 2,
        }
    }

    /// Index into `V` of the triple carrying the `m`-th point of this edge.
    pub fn v_index(self, m: u64) -> u64 {
        3 * m - 2 + self.slot() as u64
    }

    /// Point at parameter `t` along the edge, oriented as listed above.
    pub fn point_at(self, t: Rational) -> Point2 {
        let one = Rational::from_integer(1);
        let p = match self {
            EdgeId::A1 => Point2::new(one - t, t),
            EdgeId::A2 => Point2::new(Rational::zero(), t),
            EdgeId::A3 => Point2::new(t, Rational::zero()),
        };
        p.expect("edge parameters lie in [0,1]")
    }
}

/// The `n`-th point of the dense subset of edge `e`; never an endpoint.
pub fn edge_point(e: EdgeId, n: u64) -> Point2 {
    assert!(n >= 1, "enumerations are 1-based");
    e.point_at(interior_rational(n))
}

/// A triple of points of the square, read as one letter of `V ⊂ R^6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VTriple(pub [Point2; 3]);

impl VTriple {
    pub fn points(&self) -> &[Point2; 3] {
        &self.0
    }

    pub const CORNERS: VTriple = VTriple([Point2::ORIGIN, Point2::E1, Point2::E2]);

    /// The unique edge whose family this triple belongs to, if any: the
    /// triple must agree with the corner triple except in that edge's slot,
    /// where it holds an interior point of the edge.
    pub fn family(&self) -> Option<EdgeId> {
        let matches: Vec<EdgeId> = EdgeId::ALL
            .into_iter()
            .filter(|e| {
                let slot = e.slot();
                (0..3).all(|k| k == slot || self.0[k] == Self::CORNERS.0[k]) && on_edge_interior(*e, &self.0[slot])
            })
            .collect();
        match matches.as_slice() {
            [e] => Some(*e),
            _ => None,
        }
    }
}

fn on_edge_interior(e: EdgeId, p: &Point2) -> bool {
    let zero = Rational::zero();
    let one = Rational::from_integer(1);
    let (x, y) = (p.x(), p.y());
    match e {
        EdgeId::A1 => x + y == one && x > zero && y > zero,
        EdgeId::A2 => x == zero && y > zero && y < one,
        EdgeId::A3 => y == zero && x > zero && x < one,
    }
}

impl Letter for VTriple {
    const SPACE: Space = Space::SquareTriple;

    fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = d_euclid(a, b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `v_n`, interleaving the three edge families round-robin:
/// `v_{3m-2}` varies the first slot along A1, `v_{3m-1}` the second along A2
/// and `v_{3m}` the third along A3.
pub fn v_term(n: u64) -> VTriple {
    assert!(n >= 1, "enumerations are 1-based");
    let m = n.div_ceil(3);
    let edge = EdgeId::ALL[((n - 1) % 3) as usize];
    let mut triple = VTriple::CORNERS;
    triple.0[edge.slot()] = edge_point(edge, m);
    triple
}

/// `Q ∩ [0,1]` as an enumeration of interval letters.
pub fn rationals() -> Enumeration<crate::metric::UnitRational> {
    Enumeration::new("rationals in [0,1]", |n| {
        crate::metric::UnitRational::new(enumerate_rationals(n)).expect("enumeration stays in [0,1]")
    })
}

/// The enumeration `V` of triples.
pub fn v_enumeration() -> Enumeration<VTriple> {
    Enumeration::new("V", v_term)
}

/// Outcome of checking bounded recurrence for every block of a prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BlockRecurrenceReport {
    pub prefix_len: u64,
    pub max_block_len: usize,
    pub max_level: u32,
    /// Distinct blocks whose recurrence was checked.
    pub blocks_checked: u64,
    /// Occurrences of those blocks within the prefix.
    pub occurrences: u64,
    pub violations: u64,
    /// Per level `i`, the largest spacing `p_{t+1} - p_t` between consecutive
    /// starts of any checked block of that level (0 if only one occurrence).
    pub max_spacing_by_level: Vec<u64>,
}

struct Occurrences {
    level: u32,
    first: u64,
    last: u64,
    max_spacing: u64,
    count: u64,
}

/// Whether every window `[w, w + window - 1]` of `1..=prefix_len` holds a
/// full occurrence, given the first and last starts and the largest spacing
/// between consecutive starts.
fn covers_every_window(first: u64, last: u64, max_spacing: u64, len: u64, window: u64, prefix_len: u64) -> bool {
    let reach = window - len + 1;
    first <= reach && max_spacing <= reach && last + window > prefix_len
}

/// Checks on the first `prefix_len` letters of the 2-Toeplitz sequence of
/// `b` that every contiguous block of length at most `max_block_len` whose
/// highest letter level `i` is at most `max_level` has an occurrence inside
/// every window of `2^{i+1}` consecutive terms of the prefix.
///
/// Letters are compared by equality, so `b` should be injective for the
/// level of a letter to be well defined; the level recorded for a block is
/// that of its first occurrence.
pub fn block_recurrence_scan<L: Letter + Eq + std::hash::Hash>(
    b: &Enumeration<L>,
    prefix_len: u64,
    max_block_len: usize,
    max_level: u32,
) -> Result<BlockRecurrenceReport> {
    use std::collections::HashMap;

    if max_block_len == 0 || prefix_len < max_block_len as u64 {
        return Err(Error::Precondition(format!(
            "need 1 <= block length ({max_block_len}) <= prefix length ({prefix_len})"
        )));
    }
    let seq = b.toeplitz();
    let mut ids: HashMap<L, u32> = HashMap::new();
    let mut letters = Vec::with_capacity(prefix_len as usize);
    let mut levels = Vec::with_capacity(prefix_len as usize);
    for j in 1..=prefix_len {
        let next = ids.len() as u32;
        letters.push(*ids.entry(seq.term(j)).or_insert(next));
        levels.push(two_adic_level(j)?);
    }

    let mut report = BlockRecurrenceReport {
        prefix_len,
        max_block_len,
        max_level,
        max_spacing_by_level: vec![0; max_level as usize + 1],
        ..Default::default()
    };
    for len in 1..=max_block_len {
        let mut groups: HashMap<&[u32], Occurrences> = HashMap::new();
        for start in 0..=(prefix_len as usize - len) {
            let pos = start as u64 + 1;
            let key = &letters[start..start + len];
            groups
                .entry(key)
                .and_modify(|o| {
                    o.max_spacing = o.max_spacing.max(pos - o.last);
                    o.last = pos;
                    o.count += 1;
                })
                .or_insert_with(|| Occurrences {
                    level: *levels[start..start + len].iter().max().expect("len >= 1"),
                    first: pos,
                    last: pos,
                    max_spacing: 0,
                    count: 1,
                });
        }
        for occ in groups.values().filter(|o| o.level <= max_level) {
            let window = 1u64 << (occ.level + 1);
            report.blocks_checked += 1;
            report.occurrences += occ.count;
            let slot = &mut report.max_spacing_by_level[occ.level as usize];
            *slot = (*slot).max(occ.max_spacing);
            if window > prefix_len {
                continue;
            }
            if !covers_every_window(occ.first, occ.last, occ.max_spacing, len as u64, window, prefix_len) {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}
