//! Letters, blocks and the weighted d-bar metric.
//!
//! Letters of sequences over the square carry exact rational coordinates so
//! that equality is decidable; every distance is an `f64`. The d-bar distance
//! of two `n`-blocks is `sum_{i=1..n} d(x_i, y_i) / 2^i`, summed in ascending
//! index order.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedSub, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational coordinate.
pub type Rational = Ratio<i64>;

/// Slack applied on the favorable side of every inequality checked against
/// a claimed bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// The ambient space a letter lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// `[0,1]^2` with the Euclidean metric.
    Square,
    /// `[0,1]` with `|x - y|`.
    Interval,
    /// `([0,1]^2)^3` viewed inside `R^6`, Euclidean.
    SquareTriple,
}

impl Space {
    pub fn diameter(self) -> f64 {
        match self {
            Space::Square => std::f64::consts::SQRT_2,
            Space::Interval => 1.0,
            Space::SquareTriple => 6f64.sqrt(),
        }
    }
}

/// A letter of a sequence: an element of one of the supported compact spaces.
///
/// The space is part of the type, so two blocks or sequences over different
/// spaces cannot be compared at all.
pub trait Letter: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const SPACE: Space;

    fn distance(&self, other: &Self) -> f64;
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().expect("i64 ratio always converts")
}

/// Formats a rational as `p/q`, keeping the denominator even when it is 1.
pub fn fraction_string(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.707106781187`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let err = || Error::Parse(text.to_string());
    if let Some((int_part, frac_part)) = t.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = int_part.starts_with('-');
        let whole: i64 = if int_part.is_empty() || int_part == "-" {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let digits = u32::try_from(frac_part.len()).map_err(|_| err())?;
        let denom = 10i64.checked_pow(digits).ok_or_else(err)?;
        let frac: i64 = frac_part.parse().map_err(|_| err())?;
        let numer = whole
            .abs()
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        let numer = if negative { -numer } else { numer };
        return Ok(Ratio::new(numer, denom));
    }
    Rational::from_str(t).map_err(|_| err())
}

fn check_unit(q: &Rational) -> Result<()> {
    if *q < Rational::zero() || *q > Rational::one() {
        return Err(Error::OutOfUnitRange(fraction_string(q)));
    }
    Ok(())
}

/// A point of `[0,1]^2` with exact rational coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[String; 2]", into = "[String; 2]")]
pub struct Point2 {
    x: Rational,
    y: Rational,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2::from_ints(0, 0);
    pub const E1: Point2 = Point2::from_ints(1, 0);
    pub const E2: Point2 = Point2::from_ints(0, 1);

    const fn from_ints(x: i64, y: i64) -> Point2 {
        Point2 {
            x: Ratio::new_raw(x, 1),
            y: Ratio::new_raw(y, 1),
        }
    }

    pub fn new(x: Rational, y: Rational) -> Result<Point2> {
        check_unit(&x)?;
        check_unit(&y)?;
        Ok(Point2 { x, y })
    }

    /// Builds `(xn/xd, yn/yd)`; panics on a zero denominator.
    pub fn from_fractions(xn: i64, xd: i64, yn: i64, yd: i64) -> Result<Point2> {
        Point2::new(Ratio::new(xn, xd), Ratio::new(yn, yd))
    }

    pub fn x(&self) -> Rational {
        self.x
    }

    pub fn y(&self) -> Rational {
        self.y
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rational_to_f64(&self.x), rational_to_f64(&self.y))
    }
}

impl fmt::Debug for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl TryFrom<[String; 2]> for Point2 {
    type Error = Error;

    fn try_from(value: [String; 2]) -> Result<Point2> {
        Point2::new(parse_rational(&value[0])?, parse_rational(&value[1])?)
    }
}

impl From<Point2> for [String; 2] {
    fn from(p: Point2) -> [String; 2] {
        [fraction_string(&p.x), fraction_string(&p.y)]
    }
}

fn coordinate_gap(a: &Rational, b: &Rational) -> f64 {
    match a.checked_sub(b) {
        Some(d) => rational_to_f64(&d),
        None => rational_to_f64(a) - rational_to_f64(b),
    }
}

/// Euclidean distance on the square. Exactly zero iff the points are equal.
pub fn d_euclid(p: &Point2, q: &Point2) -> f64 {
    if p == q {
        return 0.0;
    }
    coordinate_gap(&p.x, &q.x).hypot(coordinate_gap(&p.y, &q.y))
}

impl Letter for Point2 {
    const SPACE: Space = Space::Square;

    fn distance(&self, other: &Self) -> f64 {
        d_euclid(self, other)
    }
}

/// A value in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitValue(f64);

impl UnitValue {
    pub fn new(v: f64) -> Result<UnitValue> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfUnitRange(v.to_string()));
        }
        Ok(UnitValue(v))
    }

    /// Clamps into `[0,1]`; NaN maps to 0.
    pub fn clamped(v: f64) -> UnitValue {
        if v.is_nan() {
            UnitValue(0.0)
        } else {
            UnitValue(v.clamp(0.0, 1.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Letter for UnitValue {
    const SPACE: Space = Space::Interval;

    fn distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).abs()
    }
}

/// An exact rational in `[0,1]`, used where interval letters must survive a
/// round trip through text (the toy model).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitRational(Rational);

impl UnitRational {
    pub fn new(q: Rational) -> Result<UnitRational> {
        check_unit(&q)?;
        Ok(UnitRational(q))
    }

    pub fn get(self) -> Rational {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl fmt::Debug for UnitRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Letter for UnitRational {
    const SPACE: Space = Space::Interval;

    fn distance(&self, other: &Self) -> f64 {
        if self == other {
            0.0
        } else {
            coordinate_gap(&self.0, &other.0).abs()
        }
    }
}

/// A point `(f, g)` of `[0,1]^2` with real coordinates: the letters of a
/// detector image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    pub f: f64,
    pub g: f64,
}

impl Letter for UnitPair {
    const SPACE: Space = Space::Square;

    fn distance(&self, other: &Self) -> f64 {
        (self.f - other.f).hypot(self.g - other.g)
    }
}

/// A finite, non-empty tuple of letters.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<L> {
    letters: Vec<L>,
}

impl<L: Letter> Block<L> {
    pub fn new(letters: Vec<L>) -> Result<Block<L>> {
        if letters.is_empty() {
            return Err(Error::EmptyBlock);
        }
        Ok(Block { letters })
    }

    pub fn letters(&self) -> &[L] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn space(&self) -> Space {
        L::SPACE
    }

    pub fn map<M: Letter>(&self, f: impl FnMut(&L) -> M) -> Block<M> {
        Block {
            letters: self.letters.iter().map(f).collect(),
        }
    }
}

/// d-bar distance of two letter slices of equal length.
pub(crate) fn dbar_slices<L: Letter>(a: &[L], b: &[L]) -> f64 {
    let mut weight = 1.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        weight *= 0.5;
        sum += x.distance(y) * weight;
    }
    sum
}

/// `sum_{i=1..n} d(b1_i, b2_i) / 2^i`.
pub fn dbar_block<L: Letter>(b1: &Block<L>, b2: &Block<L>) -> Result<f64> {
    if b1.len() != b2.len() {
        return Err(Error::LengthMismatch(b1.len(), b2.len()));
    }
    Ok(dbar_slices(&b1.letters, &b2.letters))
}

/// Rigorous enclosure `[lo, hi]` of an infinite d-bar sum truncated after
/// `depth` terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailInterval {
    pub lo: f64,
    pub hi: f64,
    pub depth: u32,
}

impl TailInterval {
    /// Encloses a partial sum of the first `depth` terms for a space of the
    /// given diameter.
    pub fn from_partial_sum(lo: f64, depth: u32, diameter: f64) -> TailInterval {
        TailInterval {
            lo,
            hi: lo + diameter * tail_weight(depth),
            depth,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, other: &TailInterval, slack: f64) -> bool {
        self.lo <= other.lo + slack && other.hi <= self.hi + slack
    }
}

/// `2^-depth`, the total weight of all terms past `depth`.
pub fn tail_weight(depth: u32) -> f64 {
    0.5f64.powi(depth.min(i32::MAX as u32) as i32)
}

/// True when `distance` is ε-close to a target, honoring [`BOUND_SLACK`]
/// in favor of "far". With `epsilon == 0` only exact matches count.
pub fn is_close(distance: f64, epsilon: f64) -> bool {
    if epsilon == 0.0 {
        distance == 0.0
    } else {
        distance < epsilon - BOUND_SLACK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(xn: i64, xd: i64, yn: i64, yd: i64) -> Point2 {
        Point2::from_fractions(xn, xd, yn, yd).unwrap()
    }

    #[test]
    fn euclid_examples() {
        assert_eq!(d_euclid(&Point2::ORIGIN, &Point2::ORIGIN), 0.0);
        assert_eq!(d_euclid(&Point2::ORIGIN, &Point2::E1), 1.0);
        assert!((d_euclid(&Point2::E1, &Point2::E2) - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn dbar_block_examples() {
        let b = |v: Vec<Point2>| Block::new(v).unwrap();
        let a = b(vec![Point2::ORIGIN, Point2::E2]);
        assert_eq!(dbar_block(&a, &a).unwrap(), 0.0);
        assert_eq!(dbar_block(&b(vec![Point2::ORIGIN]), &b(vec![Point2::E1])).unwrap(), 0.5);
        let c = b(vec![Point2::ORIGIN, Point2::E1]);
        let expected = 2f64.sqrt() / 4.0;
        assert!((dbar_block(&a, &c).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn dbar_block_rejects_length_mismatch() {
        let a = Block::new(vec![Point2::ORIGIN]).unwrap();
        let c = Block::new(vec![Point2::ORIGIN, Point2::E1]).unwrap();
        assert_eq!(dbar_block(&a, &c), Err(Error::LengthMismatch(1, 2)));
        assert_eq!(Block::<Point2>::new(vec![]), Err(Error::EmptyBlock));
    }

    #[test]
    fn points_outside_the_square_are_rejected() {
        assert!(Point2::from_fractions(3, 2, 0, 1).is_err());
        assert!(Point2::from_fractions(-1, 2, 0, 1).is_err());
        assert!(UnitValue::new(1.5).is_err());
        assert_eq!(UnitValue::clamped(1.7).get(), 1.0);
    }

    #[test]
    fn rationals_parse_from_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_rational("0.5").unwrap(), Ratio::new(1, 2));
        assert_eq!(
            parse_rational("0.707106781187").unwrap(),
            Ratio::new(707_106_781_187, 1_000_000_000_000)
        );
        assert_eq!(parse_rational("1").unwrap(), Ratio::new(1, 1));
        assert!(parse_rational("x/2").is_err());
        assert!(parse_rational("0.").is_err());
        assert_eq!(fraction_string(&Ratio::new(0, 1)), "0/1");
    }

    #[test]
    fn point_serializes_as_fraction_strings() {
        let q = p(1, 3, 2, 3);
        let text = serde_json::to_string(&q).unwrap();
        assert_eq!(text, r#"["1/3","2/3"]"#);
        let back: Point2 = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn tail_interval_width_is_the_tail_weight() {
        let t = TailInterval::from_partial_sum(0.25, 5, 2f64.sqrt());
        assert!((t.width() - 2f64.sqrt() / 32.0).abs() < 1e-15);
    }

    #[test]
    fn closeness_with_zero_epsilon_means_exact() {
        assert!(is_close(0.0, 0.0));
        assert!(!is_close(1e-300, 0.0));
        assert!(!is_close(0.125, 0.125));
        assert!(is_close(0.1, 0.125));
    }
}
