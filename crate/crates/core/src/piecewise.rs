//! Continuous piecewise-affine functions of one rational variable on `[0, inf)`.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::rational::{fmt_q, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffinePiece {
    #[serde(serialize_with = "ser_q")]
    pub start: Q,
    #[serde(serialize_with = "ser_opt_q")]
    pub end: Option<Q>,
    #[serde(serialize_with = "ser_q")]
    pub slope: Q,
    #[serde(serialize_with = "ser_q")]
    pub intercept: Q,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_str(&fmt_q(x)),
        None => s.serialize_str("+inf"),
    }
}

impl AffinePiece {
    pub fn eval(&self, c: &Q) -> Q {
        &self.intercept + &self.slope * c
    }
}

/// Pieces are contiguous, start at `0`, and the last one is unbounded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiecewiseAffine {
    pieces: Vec<AffinePiece>,
}

impl PiecewiseAffine {
    pub fn line(slope: Q, intercept: Q) -> Self {
        PiecewiseAffine { pieces: vec![AffinePiece { start: Q::zero(), end: None, slope, intercept }] }
    }

    /// Exact lower envelope `min_k (a_k + b_k c)` of lines `(a_k, b_k)` on `c >= 0`.
    pub fn lower_envelope(lines: &[(Q, Q)]) -> Result<Self> {
        let first = lines
            .iter()
            .min_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)))
            .ok_or(Error::ZeroInput("valuation line of zero"))?;
        let mut pieces = Vec::new();
        let mut start = Q::zero();
        let (mut a, mut b) = first.clone();
        loop {
            // next line to take over: earliest crossing to the right, steepest descent on ties
            let mut next: Option<(Q, &(Q, Q))> = None;
            for line in lines {
                if line.1 >= b {
                    continue;
                }
                let cross = (&line.0 - &a) / (&b - &line.1);
                if cross < start {
                    continue;
                }
                let better = match &next {
                    None => true,
                    Some((c, l)) => cross < *c || (cross == *c && line.1 < l.1),
                };
                if better {
                    next = Some((cross, line));
                }
            }
            match next {
                Some((cross, line)) => {
                    if cross > start {
                        pieces.push(AffinePiece {
                            start: start.clone(),
                            end: Some(cross.clone()),
                            slope: b.clone(),
                            intercept: a.clone(),
                        });
                    }
                    start = cross;
                    a = line.0.clone();
                    b = line.1.clone();
                }
                None => {
                    pieces.push(AffinePiece { start, end: None, slope: b, intercept: a });
                    return Ok(PiecewiseAffine { pieces });
                }
            }
        }
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn eval(&self, c: &Q) -> Q {
        let piece = self
            .pieces
            .iter()
            .find(|pc| pc.end.as_ref().map_or(true, |e| c <= e))
            .unwrap_or_else(|| self.pieces.last().unwrap());
        piece.eval(c)
    }

    /// Behaviour as `c -> 0+`.
    pub fn germ(&self) -> Germ {
        let first = &self.pieces[0];
        Germ::new(first.intercept.clone(), first.slope.clone())
    }

    pub fn breakpoints(&self) -> Vec<Q> {
        self.pieces.iter().filter_map(|pc| pc.end.clone()).collect()
    }

    fn combine(&self, other: &Self, sign: i64) -> Self {
        let mut cuts: Vec<Q> = self.breakpoints();
        cuts.extend(other.breakpoints());
        cuts.sort();
        cuts.dedup();
        let mut pieces: Vec<AffinePiece> = Vec::new();
        let mut start = Q::zero();
        let bounds = cuts.into_iter().map(Some).chain(std::iter::once(None));
        for end in bounds {
            let probe = match &end {
                Some(e) => (&start + e) / Q::from_integer(2.into()),
                None => &start + Q::from_integer(1.into()),
            };
            let pa = self.piece_at(&probe);
            let pb = other.piece_at(&probe);
            let (slope, intercept) = if sign > 0 {
                (&pa.slope + &pb.slope, &pa.intercept + &pb.intercept)
            } else {
                (&pa.slope - &pb.slope, &pa.intercept - &pb.intercept)
            };
            match pieces.last_mut() {
                Some(last) if last.slope == slope && last.intercept == intercept => last.end = end.clone(),
                _ => pieces.push(AffinePiece { start: start.clone(), end: end.clone(), slope, intercept }),
            }
            if let Some(e) = end {
                start = e;
            }
        }
        PiecewiseAffine { pieces }
    }

    fn piece_at(&self, c: &Q) -> &AffinePiece {
        self.pieces
            .iter()
            .find(|pc| pc.end.as_ref().map_or(true, |e| c < e))
            .unwrap_or_else(|| self.pieces.last().unwrap())
    }

    pub fn sum(&self, other: &Self) -> Self {
        self.combine(other, 1)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, -1)
    }
}

impl fmt::Display for PiecewiseAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|pc| {
                let end = pc.end.as_ref().map_or("+inf".to_string(), fmt_q);
                format!("[{},{}]:{}*c+{}", fmt_q(&pc.start), end, fmt_q(&pc.slope), fmt_q(&pc.intercept))
            })
            .collect();
        f.write_str(&parts.join(";"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn two_line_envelope() {
        // t^-1 + p t^-3 at r = 1
        let pa = PiecewiseAffine::lower_envelope(&[(qi(0), qi(-1)), (qi(1), qi(-3))]).unwrap();
        assert_eq!(pa.pieces().len(), 2);
        assert_eq!(pa.breakpoints(), vec![q(1, 2)]);
        assert_eq!(pa.pieces()[0].slope, qi(-1));
        assert_eq!(pa.pieces()[1].slope, qi(-3));
        assert_eq!(pa.eval(&qi(1)), qi(-2));
    }

    #[test]
    fn constant_wins_at_zero() {
        let pa = PiecewiseAffine::lower_envelope(&[(qi(0), qi(0)), (qi(0), qi(1))]).unwrap();
        assert_eq!(pa.germ(), Germ::new(qi(0), qi(0)));
        assert_eq!(pa.pieces().len(), 1);
    }

    #[test]
    fn empty_is_error() {
        assert!(PiecewiseAffine::lower_envelope(&[]).is_err());
    }

    #[test]
    fn difference_merges_breakpoints() {
        let a = PiecewiseAffine::lower_envelope(&[(qi(0), qi(-1)), (qi(1), qi(-3))]).unwrap();
        let b = PiecewiseAffine::line(qi(-1), qi(0));
        let d = a.difference(&b);
        assert_eq!(d.eval(&qi(2)), a.eval(&qi(2)) - b.eval(&qi(2)));
        assert_eq!(d.eval(&q(1, 4)), a.eval(&q(1, 4)) - b.eval(&q(1, 4)));
    }
}
