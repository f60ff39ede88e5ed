//! Continuous images of sequences over the square.
//!
//! Two directions are covered. For maps into `[0,1]`, [`lemma3_check`]
//! verifies on the counterexample that the image returns close to its own
//! start with bounded gaps, using a point on a triangle edge whose value
//! matches the median corner value. For maps into `[0,1]^2`,
//! [`build_umd_detector`] builds the pair `(f, g)` that exposes a witness
//! block of a non-minimal sequence.

mod spec;

pub use spec::{bundled_specs, eval_f, FunctionKind, FunctionSpec, Monomial};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construction::{build_x, serialize_big};
use crate::error::{Error, Result};
use crate::metric::{
    d_euclid, dbar_block, is_close, Block, Point2, Space, TailInterval, UnitPair, UnitValue, BOUND_SLACK,
};
use crate::symbolic::{dbar_truncated, recurrence_gap_scan, witness_check, LazySequence, RecurrenceReport};
use crate::toeplitz::{edge_point, EdgeId, VTriple};

/// Default cap on letters materialized or streamed by a single scan.
pub const DEFAULT_FEASIBLE_PREFIX: u64 = 1 << 24;

/// `(f(s_1), f(s_2), ...)`.
pub fn image_seq(spec: &FunctionSpec, s: &LazySequence<Point2>) -> LazySequence<UnitValue> {
    let spec = spec.clone();
    s.map(format!("{} under {}", s.description(), spec.label()), move |p| {
        eval_f(&spec, p)
    })
}

/// The corners sorted by their value under `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertexOrder {
    pub lo: Point2,
    pub mid: Point2,
    pub hi: Point2,
    /// `f(lo), f(mid), f(hi)`.
    pub values: [f64; 3],
    /// Edge joining `lo` and `hi`; its triples replace `mid`.
    pub surrogate_edge: EdgeId,
}

impl VertexOrder {
    /// Position of the median corner within the corner block.
    pub fn mid_slot(&self) -> usize {
        self.surrogate_edge.slot()
    }
}

/// Sorts the corners by `f`, breaking ties by the order (0,0), (1,0), (0,1).
pub fn order_vertices(spec: &FunctionSpec) -> VertexOrder {
    let mut ranked: Vec<(usize, f64)> = VTriple::CORNERS
        .0
        .iter()
        .enumerate()
        .map(|(k, p)| (k, eval_f(spec, p).get()))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let corner = |k: usize| VTriple::CORNERS.0[ranked[k].0];
    VertexOrder {
        lo: corner(0),
        mid: corner(1),
        hi: corner(2),
        values: [ranked[0].1, ranked[1].1, ranked[2].1],
        surrogate_edge: EdgeId::ALL[ranked[1].0],
    }
}

/// A point on the surrogate edge whose value is close to the median corner
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Surrogate {
    pub a: Point2,
    pub edge: EdgeId,
    /// Index of `a` within the edge's dense set.
    pub m: u64,
    /// Index in `V` of the corner triple with the median corner replaced by `a`.
    pub v_index: u64,
    pub f_a: f64,
    pub f_mid: f64,
}

fn search_surrogate(spec: &FunctionSpec, order: &VertexOrder, tolerance: f64, budget: u64) -> Result<Surrogate> {
    let edge = order.surrogate_edge;
    let f_mid = order.values[1];
    (1..=budget)
        .map(|m| (m, edge_point(edge, m)))
        .map(|(m, a)| (m, a, eval_f(spec, &a).get()))
        .find(|(_, _, f_a)| (f_a - f_mid).abs() < tolerance)
        .map(|(m, a, f_a)| Surrogate {
            a,
            edge,
            m,
            v_index: edge.v_index(m),
            f_a,
            f_mid,
        })
        .ok_or(Error::SurrogateNotFound(budget))
}

/// First point `a` of the surrogate edge's dense set with `|f(a) - f(mid)| < ε`.
pub fn find_surrogate(spec: &FunctionSpec, epsilon: f64, budget: u64) -> Result<Surrogate> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    search_surrogate(spec, &order_vertices(spec), epsilon, budget)
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma3Report {
    pub order: VertexOrder,
    pub surrogate: Surrogate,
    /// Tolerance used for the surrogate search.
    pub search_tolerance: f64,
    pub i: u64,
    #[serde(serialize_with = "serialize_big")]
    pub shift: BigUint,
    pub lhs: TailInterval,
    /// `ε/4 + 1/(2^{3(2^{i-1}-1)} - 1)`; infinite when `i = 1`.
    pub rhs: f64,
    /// `ε/4 + 2^{-3·2^{i-1}}`, the bound obtained by summing the tail.
    pub tight_rhs: f64,
    pub bound_holds: bool,
    pub tight_bound_holds: bool,
    pub gap_bound: u64,
    pub scanned_prefix: u64,
    pub recurrence: RecurrenceReport<UnitValue>,
    pub gap_bound_holds: bool,
    /// Predicted returns at `3·2^{i-1}(2u+1) + 1`, checked by evaluation.
    pub predicted_returns_checked: u32,
    pub predicted_returns_hold: bool,
    pub pass: bool,
}

/// `3 * 2^{i-1} (2u + 1) + 1`: starts of the image letters carried by the
/// b-positions of level `i`.
fn return_position(i: u64, u: u32) -> BigUint {
    (BigUint::from(3u32) << (i - 1)) * (2 * u + 1) + 1u32
}

fn conservative_tail(i: u64) -> f64 {
    if i == 1 {
        return f64::INFINITY;
    }
    if i > 12 {
        return 0.0;
    }
    let exponent = 3.0 * ((1u64 << (i - 1)) - 1) as f64;
    1.0 / (exponent.exp2() - 1.0)
}

fn tight_tail(i: u64) -> f64 {
    if i > 12 {
        return 0.0;
    }
    (-(3.0 * (1u64 << (i - 1)) as f64)).exp2()
}

const RETURNS_CHECKED: u32 = 4;
const MAX_DEPTH: u64 = 64;

/// Verifies that the image of the counterexample under `spec` comes back
/// within `ε/4` plus a tail term after `3·2^{i-1}` letters, and that its
/// initial 3-block recurs with gaps at most `3·2^i`.
///
/// `i` is the `V`-index of the corner triple with its median corner replaced
/// by a surrogate point. When the median corner is the first letter its
/// weight is 1/2, so the surrogate is searched with tolerance `ε/2` to keep
/// its contribution below `ε/4`.
pub fn lemma3_check(spec: &FunctionSpec, epsilon: f64, budget: u64, feasible_prefix: u64) -> Result<Lemma3Report> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let order = order_vertices(spec);
    let tolerance = if order.mid_slot() == 0 { epsilon / 2.0 } else { epsilon };
    let surrogate = search_surrogate(spec, &order, tolerance, budget)?;
    let i = surrogate.v_index;
    let shift = BigUint::from(3u32) << (i - 1);

    let image = image_seq(spec, build_x().sequence());
    let returned = image.shift_big(&shift);
    let depth = if i <= 6 {
        (3u64 << (i - 1)).min(MAX_DEPTH)
    } else {
        MAX_DEPTH
    };
    let lhs = dbar_truncated(&returned, &image, depth as u32)?;
    let rhs = epsilon / 4.0 + conservative_tail(i);
    let tight_rhs = epsilon / 4.0 + tight_tail(i);

    let target = image.block_at(1, 3)?;
    let block_epsilon = epsilon / 4.0;
    let gap_bound = if i < 62 { 3u64 << i } else { u64::MAX };
    let wanted = if i < 60 { (3u64 << (i + 1)) + 3 } else { u64::MAX };
    let scanned_prefix = wanted.min(feasible_prefix).max(3);
    let recurrence = recurrence_gap_scan(&image, &target, block_epsilon, scanned_prefix)?;
    let gap_bound_holds = recurrence.gaps_within(gap_bound);

    let mut predicted_returns_hold = true;
    for u in 0..RETURNS_CHECKED {
        let start = return_position(i, u);
        let letters: Vec<UnitValue> = (0u32..3)
            .map(|k| image.term_big(&(&start + k)).expect("closed-form sequence"))
            .collect();
        let d = dbar_block(&Block::new(letters)?, &target)?;
        predicted_returns_hold &= is_close(d, block_epsilon);
    }

    let bound_holds = lhs.hi <= rhs + BOUND_SLACK;
    let tight_bound_holds = lhs.hi <= tight_rhs + BOUND_SLACK;
    Ok(Lemma3Report {
        order,
        surrogate,
        search_tolerance: tolerance,
        i,
        shift,
        lhs,
        rhs,
        tight_rhs,
        bound_holds,
        tight_bound_holds,
        gap_bound,
        scanned_prefix,
        recurrence,
        gap_bound_holds,
        predicted_returns_checked: RETURNS_CHECKED,
        predicted_returns_hold,
        pass: bound_holds && gap_bound_holds && predicted_returns_hold,
    })
}

/// Piecewise extension: `a_j` on the closed `δ`-ball of center `j`, ramping
/// linearly to 0 at radius `ρ`, and 0 off every `ρ`-ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpExtension {
    pub centers: Vec<Point2>,
    pub values: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl BumpExtension {
    pub fn eval(&self, p: &Point2) -> f64 {
        for (c, a) in self.centers.iter().zip(&self.values) {
            let d = d_euclid(p, c);
            if d <= self.inner_radius {
                return *a;
            }
            if d < self.outer_radius {
                return a * (self.outer_radius - d) / (self.outer_radius - self.inner_radius);
            }
        }
        0.0
    }

    pub fn lipschitz_constant(&self) -> f64 {
        let top = self.values.iter().cloned().fold(0.0, f64::max);
        top / (self.outer_radius - self.inner_radius)
    }
}

/// `min_j d(p, c_j) / diameter`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedDistance {
    pub centers: Vec<Point2>,
    pub diameter: f64,
}

impl NormalizedDistance {
    pub fn eval(&self, p: &Point2) -> f64 {
        let d = self
            .centers
            .iter()
            .map(|c| d_euclid(p, c))
            .fold(f64::INFINITY, f64::min);
        (d / self.diameter).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorPair {
    pub f_ext: BumpExtension,
    pub g_norm: NormalizedDistance,
}

const DEGENERATE_RADIUS: f64 = 0.1;

/// Builds `(f, g)` from the witness block `s_start .. s_{start+len-1}`.
///
/// Distinct witness letters become centers in first-occurrence order with
/// values `1/(k+1), ..., k/(k+1)`, so 0 is left for points far from every
/// center.
pub fn build_umd_detector(s: &LazySequence<Point2>, witness_start: u64, witness_len: usize) -> Result<DetectorPair> {
    let witness = s.block_at(witness_start, witness_len)?;
    let mut centers: Vec<Point2> = Vec::new();
    for p in witness.letters() {
        if !centers.contains(p) {
            centers.push(*p);
        }
    }
    let k = centers.len();
    let values = (1..=k).map(|r| r as f64 / (k + 1) as f64).collect();
    let min_pairwise = centers
        .iter()
        .enumerate()
        .flat_map(|(a, p)| centers[a + 1..].iter().map(move |q| d_euclid(p, q)))
        .fold(f64::INFINITY, f64::min);
    let (inner, outer) = if k == 1 {
        (DEGENERATE_RADIUS, 2.0 * DEGENERATE_RADIUS)
    } else {
        let delta = 0.45 * min_pairwise;
        (delta, (2.0 * delta).min(min_pairwise / 2.0))
    };
    Ok(DetectorPair {
        f_ext: BumpExtension {
            centers: centers.clone(),
            values,
            inner_radius: inner,
            outer_radius: outer,
        },
        g_norm: NormalizedDistance {
            centers,
            diameter: Space::Square.diameter(),
        },
    })
}

pub fn eval_detector(d: &DetectorPair, p: &Point2) -> UnitPair {
    UnitPair {
        f: d.f_ext.eval(p),
        g: d.g_norm.eval(p),
    }
}

impl DetectorPair {
    /// Separation `ε'` used to certify the image witness:
    /// `2^{-len} · min(δ/√2, smallest gap between distinct values) / 2`.
    pub fn image_epsilon(&self, witness_len: usize) -> f64 {
        let mut sorted = self.f_ext.values.clone();
        sorted.sort_by(f64::total_cmp);
        let value_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let margin = (self.f_ext.inner_radius / Space::Square.diameter()).min(value_gap);
        0.5f64.powi(witness_len as i32) * margin / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorReport {
    pub image_epsilon: f64,
    pub report: RecurrenceReport<UnitPair>,
}

/// Maps `s` through the detector and checks that the image of the witness
/// block is avoided by every later sub-block of the image up to `prefix_len`.
pub fn detector_verifies_nonminimal(
    d: &DetectorPair,
    s: &LazySequence<Point2>,
    witness_start: u64,
    witness_len: usize,
    prefix_len: u64,
) -> Result<DetectorReport> {
    let detector = d.clone();
    let image = s.map(format!("{} under detector", s.description()), move |p| {
        eval_detector(&detector, p)
    });
    let target = image.block_at(witness_start, witness_len)?;
    let image_epsilon = d.image_epsilon(witness_len);
    if prefix_len <= witness_start {
        return Err(Error::Precondition("prefix ends before the witness".into()));
    }
    let report = witness_check(
        &image,
        &target,
        image_epsilon,
        witness_start + 1,
        prefix_len - witness_start,
    )?;
    Ok(DetectorReport { image_epsilon, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub pairs: u64,
    pub lipschitz_constant: f64,
    pub violations: u64,
    pub max_ratio: f64,
}

const SAMPLE_DENOMINATOR: i64 = 1 << 20;

fn random_point(rng: &mut ChaCha8Rng) -> Point2 {
    let x = rng.gen_range(0..=SAMPLE_DENOMINATOR);
    let y = rng.gen_range(0..=SAMPLE_DENOMINATOR);
    Point2::from_fractions(x, SAMPLE_DENOMINATOR, y, SAMPLE_DENOMINATOR).expect("in the square")
}

fn nudge(rng: &mut ChaCha8Rng, p: &Point2, reach: i64) -> Point2 {
    let (x, y) = p.to_f64();
    let step = |v: f64, rng: &mut ChaCha8Rng| {
        let n = (v * SAMPLE_DENOMINATOR as f64).round() as i64 + rng.gen_range(-reach..=reach);
        n.clamp(0, SAMPLE_DENOMINATOR)
    };
    let nx = step(x, rng);
    let ny = step(y, rng);
    Point2::from_fractions(nx, SAMPLE_DENOMINATOR, ny, SAMPLE_DENOMINATOR).expect("in the square")
}

/// Samples `pairs` point pairs and checks `|f(p) - f(q)| <= L d(p,q) + 1e-9`
/// with `L = max(a) / (ρ - δ)`. Half the pairs are close together and
/// anchored near a random center, where the ramp is steepest.
pub fn lipschitz_sample_test(d: &DetectorPair, pairs: u64, seed: u64) -> LipschitzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lipschitz = d.f_ext.lipschitz_constant();
    let ring = (d.f_ext.outer_radius * SAMPLE_DENOMINATOR as f64) as i64 + 1;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for n in 0..pairs {
        let (p, q) = if n % 2 == 0 {
            (random_point(&mut rng), random_point(&mut rng))
        } else {
            let c = d.f_ext.centers[rng.gen_range(0..d.f_ext.centers.len())];
            let p = nudge(&mut rng, &c, ring);
            let q = nudge(&mut rng, &p, SAMPLE_DENOMINATOR / 64);
            (p, q)
        };
        let dist = d_euclid(&p, &q);
        let diff = (d.f_ext.eval(&p) - d.f_ext.eval(&q)).abs();
        if diff > lipschitz * dist + BOUND_SLACK {
            violations += 1;
        }
        if dist > 0.0 {
            max_ratio = max_ratio.max(diff / dist);
        }
    }
    LipschitzReport {
        pairs,
        lipschitz_constant: lipschitz,
        violations,
        max_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Rational;

    fn spec(kind: FunctionKind) -> FunctionSpec {
        FunctionSpec::new(kind, "").unwrap()
    }

    fn constant(v: f64) -> FunctionSpec {
        spec(FunctionKind::Polynomial {
            terms: vec![Monomial {
                coeff: v,
                x_pow: 0,
                y_pow: 0,
            }],
        })
    }

    #[test]
    fn image_of_x_under_projection() {
        let img = image_seq(&spec(FunctionKind::CoordinateX), build_x().sequence());
        let head: Vec<f64> = img.prefix(3).iter().map(|v| v.get()).collect();
        assert_eq!(head, vec![0.0, 1.0, 0.0]);
        let c = image_seq(&constant(0.3), build_x().sequence());
        assert!(c.prefix(50).iter().all(|v| v.get() == 0.3));
        assert_eq!(img.shift(7).prefix(20), img.prefix(27)[7..].to_vec());
    }

    #[test]
    fn vertex_order_examples() {
        let o = order_vertices(&spec(FunctionKind::CoordinateX));
        assert_eq!((o.lo, o.mid, o.hi), (Point2::ORIGIN, Point2::E2, Point2::E1));
        assert_eq!(o.surrogate_edge, EdgeId::A3);
        let o = order_vertices(&spec(FunctionKind::CoordinateY));
        assert_eq!(o.mid, Point2::E1);
        assert_eq!(o.surrogate_edge, EdgeId::A2);
        let o = order_vertices(&constant(0.4));
        assert_eq!((o.lo, o.mid, o.hi), (Point2::ORIGIN, Point2::E1, Point2::E2));
        assert_eq!(o.surrogate_edge, EdgeId::A2);
    }

    #[test]
    fn surrogate_for_constant_or_wide_epsilon_is_first_point() {
        let s = find_surrogate(&constant(0.6), 1e-6, 10).unwrap();
        assert_eq!(s.m, 1);
        let s = find_surrogate(&spec(FunctionKind::CoordinateX), 1.5, 10).unwrap();
        assert_eq!(s.m, 1);
        assert!(find_surrogate(&constant(0.6), 0.0, 10).is_err());
    }

    #[test]
    fn surrogate_budget_exhaustion() {
        let f = spec(FunctionKind::CoordinateY);
        assert_eq!(find_surrogate(&f, 0.01, 5), Err(Error::SurrogateNotFound(5)));
    }

    #[test]
    fn lemma3_on_constant_image() {
        let r = lemma3_check(&constant(0.25), 0.1, 100, 1 << 12).unwrap();
        assert_eq!(r.i, 2);
        assert_eq!(r.lhs.lo, 0.0);
        assert_eq!(r.lhs.hi, 1.0 / 64.0);
        assert!(r.pass);
    }

    #[test]
    fn detector_for_corner_witness() {
        let x = build_x();
        let d = build_umd_detector(x.sequence(), 1, 3).unwrap();
        assert_eq!(d.f_ext.values, vec![0.25, 0.5, 0.75]);
        assert!((d.f_ext.inner_radius - 0.45).abs() < 1e-15);
        assert!((d.f_ext.outer_radius - 0.5).abs() < 1e-15);
        assert_eq!(eval_detector(&d, &Point2::E1), UnitPair { f: 0.5, g: 0.0 });
        let far = Point2::from_fractions(1, 2, 1, 2).unwrap();
        let v = eval_detector(&d, &far);
        assert_eq!(v.f, 0.0);
        assert!((v.g - 0.5).abs() < 1e-15);
    }

    #[test]
    fn detector_on_inner_boundary() {
        let x = build_x();
        let d = build_umd_detector(x.sequence(), 1, 3).unwrap();
        // distance exactly 9/20 = δ from (0,0)
        let p = Point2::new(Rational::new(9, 20), Rational::new(0, 1)).unwrap();
        let v = eval_detector(&d, &p);
        assert_eq!(v.f, 0.25);
        assert!((v.g - 0.45 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn repeated_letters_give_a_degenerate_detector() {
        let s = LazySequence::constant(Point2::ORIGIN);
        let d = build_umd_detector(&s, 1, 2).unwrap();
        assert_eq!(d.f_ext.centers, vec![Point2::ORIGIN]);
        assert_eq!(d.f_ext.values, vec![0.5]);
        assert_eq!(d.f_ext.inner_radius, 0.1);
        let r = detector_verifies_nonminimal(&d, &s, 1, 2, 200).unwrap();
        assert_ne!(r.report.verdict, crate::symbolic::Verdict::WitnessFound);
    }

    #[test]
    fn lipschitz_sampling_is_deterministic() {
        let d = build_umd_detector(build_x().sequence(), 1, 3).unwrap();
        let a = lipschitz_sample_test(&d, 500, 7);
        let b = lipschitz_sample_test(&d, 500, 7);
        assert_eq!(a.max_ratio, b.max_ratio);
        assert_eq!(a.violations, 0);
    }

    #[test]
    fn return_positions_start_after_the_shift() {
        assert_eq!(return_position(1, 0), BigUint::from(4u32));
        assert_eq!(return_position(2, 1), BigUint::from(19u32));
    }
}
