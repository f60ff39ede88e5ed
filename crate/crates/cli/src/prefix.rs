use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use mindetect::construction::build_b;
use mindetect::metric::{fraction_string, parse_rational};
use mindetect::toeplitz::two_adic_level;
use mindetect::{build_toy, build_x, LazySequence, Point2, UnitRational};

use crate::error::{CliError, CliResult};

/// Which built-in sequence to operate on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeqChoice {
    X,
    B,
    Toy(UnitRational),
}

impl FromStr for SeqChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(SeqChoice::X),
            "b" => Ok(SeqChoice::B),
            _ => {
                let c = s
                    .strip_prefix("toy:")
                    .ok_or_else(|| format!("unknown sequence {s:?}; expected x, b or toy:<c>"))?;
                let q = parse_rational(c).map_err(|e| e.to_string())?;
                UnitRational::new(q).map(SeqChoice::Toy).map_err(|e| e.to_string())
            }
        }
    }
}

impl fmt::Display for SeqChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqChoice::X => f.write_str("x"),
            SeqChoice::B => f.write_str("b"),
            SeqChoice::Toy(c) => write!(f, "toy:{}", fraction_string(&c.get())),
        }
    }
}

impl SeqChoice {
    /// Largest 2-adic level among the enumeration positions feeding the
    /// letters `start..start+len`, or `None` when the block touches a head
    /// letter that never recurs exactly.
    pub fn block_level(self, start: u64, len: u64) -> Option<u32> {
        let end = start + len - 1;
        let (first, last) = match self {
            SeqChoice::B => (start, end),
            SeqChoice::Toy(_) if start >= 2 => (start - 1, end - 1),
            SeqChoice::X if start >= 4 => ((start - 1) / 3, (end - 1) / 3),
            _ => return None,
        };
        (first..=last).map(|k| two_adic_level(k).expect("positive")).max()
    }

    /// Period of exact recurrence for a block of the given level.
    pub fn level_period(self, level: u32) -> Option<u64> {
        let base = 1u64.checked_shl(level + 1)?;
        match self {
            SeqChoice::X => base.checked_mul(3),
            _ => Some(base),
        }
    }
}

pub fn write_prefix(seq: SeqChoice, length: u64, out: Option<&Path>) -> CliResult<()> {
    let sink: Box<dyn std::io::Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| CliError::io(path, e))?),
        None => Box::new(std::io::stdout()),
    };
    let label = out.map_or_else(|| Path::new("<stdout>").to_path_buf(), Path::to_path_buf);
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| CliError::input(&label, e.to_string());
    match seq {
        SeqChoice::X => {
            w.write_record(["index", "x", "y"]).map_err(csv_err)?;
            let x = build_x();
            for j in 1..=length {
                let p = x.term(j);
                w.write_record([j.to_string(), fraction_string(&p.x()), fraction_string(&p.y())])
                    .map_err(csv_err)?;
            }
        }
        SeqChoice::B => {
            w.write_record(["index", "x1", "y1", "x2", "y2", "x3", "y3"])
                .map_err(csv_err)?;
            let b = build_b();
            for j in 1..=length {
                let mut row = vec![j.to_string()];
                for p in b.term(j).points() {
                    row.push(fraction_string(&p.x()));
                    row.push(fraction_string(&p.y()));
                }
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        SeqChoice::Toy(c) => {
            w.write_record(["index", "value"]).map_err(csv_err)?;
            let toy = build_toy(c);
            for j in 1..=length {
                w.write_record([j.to_string(), fraction_string(&toy.term(j).get())])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(&label, e))
}

/// Reads an `index,x,y` CSV with consecutive indices from 1.
pub fn read_points(path: &Path) -> CliResult<Vec<Point2>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut points = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::input(path, e.to_string()))?;
        let line = row + 2;
        if record.len() != 3 {
            return Err(CliError::input(
                path,
                format!("line {line}: expected 3 fields, found {}", record.len()),
            ));
        }
        let index: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| CliError::input(path, format!("line {line}: bad index {:?}", &record[0])))?;
        if index != row as u64 + 1 {
            return Err(CliError::input(
                path,
                format!("line {line}: expected index {}, found {index}", row + 1),
            ));
        }
        let coord =
            |field: &str| parse_rational(field.trim()).map_err(|e| CliError::input(path, format!("line {line}: {e}")));
        let p = Point2::new(coord(&record[1])?, coord(&record[2])?)
            .map_err(|e| CliError::input(path, format!("line {line}: {e}")))?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(CliError::input(path, "no points"));
    }
    Ok(points)
}

pub fn finite_sequence(points: Vec<Point2>, label: &str) -> LazySequence<Point2> {
    let points = Arc::new(points);
    let n = points.len();
    LazySequence::from_fn(format!("{label} ({n} points)"), move |j| {
        *points
            .get(j as usize - 1)
            .unwrap_or_else(|| panic!("index {j} beyond the {n}-point prefix"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sequence_choices() {
        assert_eq!("x".parse::<SeqChoice>().unwrap(), SeqChoice::X);
        assert_eq!("toy:0.5".parse::<SeqChoice>().unwrap().to_string(), "toy:1/2");
        assert!("toy:3/2".parse::<SeqChoice>().is_err());
        assert!("y".parse::<SeqChoice>().is_err());
    }

    #[test]
    fn block_levels() {
        // b_1 b_2 b_1 b_3
        assert_eq!(SeqChoice::B.block_level(1, 4), Some(3));
        assert_eq!(SeqChoice::X.block_level(1, 3), None);
        // x_4..x_6 is the triple at b-position 1
        assert_eq!(SeqChoice::X.block_level(4, 3), Some(1));
        assert_eq!(SeqChoice::X.block_level(6, 2), Some(2));
        let toy = SeqChoice::Toy(UnitRational::new(mindetect::Rational::new(1, 2)).unwrap());
        assert_eq!(toy.block_level(1, 2), None);
        assert_eq!(toy.block_level(2, 2), Some(2));
        assert_eq!(SeqChoice::X.level_period(1), Some(12));
    }
}
