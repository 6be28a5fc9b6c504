//! Lower convex hulls, slope multisets and the slope-to-scale reading.

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::germ::{Germ, HullValue};
use crate::laurent::WeightVector;
use crate::piecewise::PiecewiseAffine;
use crate::rational::{fmt_q, qi, Q};

/// Lower convex hull of points `(x, y)` with strictly increasing `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon<V> {
    vertices: Vec<(i64, V)>,
}

impl<V: HullValue> NewtonPolygon<V> {
    pub fn lower_hull(points: &[(i64, V)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut pts = points.to_vec();
        pts.sort_by_key(|(x, _)| *x);
        if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateAbscissa(w[0].0));
        }
        let mut hull: Vec<(i64, V)> = Vec::with_capacity(pts.len());
        for pt in pts {
            while hull.len() >= 2 {
                let a = &hull[hull.len() - 2];
                let b = &hull[hull.len() - 1];
                // drop b unless the chain turns strictly upward there
                if slope(a, b) >= slope(b, &pt) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        Ok(NewtonPolygon { vertices: hull })
    }

    pub fn vertices(&self) -> &[(i64, V)] {
        &self.vertices
    }

    pub fn width(&self) -> i64 {
        self.vertices.last().unwrap().0 - self.vertices[0].0
    }

    /// Segments as `(slope, horizontal length)`, slopes strictly increasing.
    pub fn segments(&self) -> Vec<(V, i64)> {
        self.vertices.windows(2).map(|w| (slope(&w[0], &w[1]), w[1].0 - w[0].0)).collect()
    }

    /// Each segment slope repeated by its horizontal length, ascending.
    pub fn slopes(&self) -> Vec<V> {
        self.segments()
            .into_iter()
            .flat_map(|(s, len)| std::iter::repeat(s).take(len as usize))
            .collect()
    }

    /// Splits off the least `k` slopes; `k` must land on a vertex.
    pub fn split_by_slope(&self, k: i64) -> Result<(Self, Self)> {
        if k <= 0 || k >= self.width() {
            return Err(Error::SplitInsideSegment(k));
        }
        let x = self.vertices[0].0 + k;
        let idx = self
            .vertices
            .iter()
            .position(|(vx, _)| *vx == x)
            .ok_or(Error::SplitInsideSegment(k))?;
        Ok((
            NewtonPolygon { vertices: self.vertices[..=idx].to_vec() },
            NewtonPolygon { vertices: self.vertices[idx..].to_vec() },
        ))
    }
}

fn slope<V: HullValue>(a: &(i64, V), b: &(i64, V)) -> V {
    b.1.minus(&a.1).div_int(b.0 - a.0)
}

impl NewtonPolygon<Q> {
    /// Vertex records `x,num/den`.
    pub fn to_records(&self) -> Vec<String> {
        self.vertices.iter().map(|(x, y)| format!("{x},{}", fmt_q(y))).collect()
    }
}

/// Log-scales read off a monic polygon, split by the masking window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleReading<V> {
    /// Readable log-scales, descending.
    pub visible: Vec<V>,
    /// Entries strictly below `floor` are not readable from this polygon.
    pub floor: V,
    pub masked: usize,
}

/// Each root valuation `w = -slope` gives the log-scale `max(0, sp_val - w)`.
/// Entries below `s_max / p` are masked.
pub fn scales_from_polygon<V: HullValue>(np: &NewtonPolygon<V>, sp_val: &V, p: u32) -> Result<ScaleReading<V>> {
    if np.vertices.last().unwrap().1 != V::neutral() {
        return Err(Error::NonMonic);
    }
    let zero = V::neutral();
    let mut scales: Vec<V> = np
        .slopes()
        .into_iter()
        .map(|s| {
            let v = sp_val.plus(&s);
            if v > zero {
                v
            } else {
                zero.clone()
            }
        })
        .collect();
    scales.sort_by(|a, b| b.cmp(a));
    let floor = scales.first().map_or(zero.clone(), |top| top.div_int(p as i64));
    let (visible, hidden): (Vec<V>, Vec<V>) = scales.into_iter().partition(|s| *s >= floor);
    Ok(ScaleReading { visible, floor, masked: hidden.len() })
}

/// Valuation profiles in `c` of the coefficients of a monic `T^d + sum a_i T^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedPolyProfile {
    degree: usize,
    /// `None` marks a zero coefficient; index `degree` is the leading one.
    coeffs: Vec<Option<PiecewiseAffine>>,
}

impl TwistedPolyProfile {
    /// `coeffs` lists `a_0..a_{d-1}`; the leading `1` is implicit.
    pub fn from_coefficients(coeffs: &[Frac], r: &WeightVector) -> Result<Self> {
        let mut profile = Vec::with_capacity(coeffs.len() + 1);
        for a in coeffs {
            profile.push(if a.is_zero() { None } else { Some(a.valuation_line(r)?) });
        }
        profile.push(Some(PiecewiseAffine::line(qi(0), qi(0))));
        Ok(TwistedPolyProfile { degree: coeffs.len(), coeffs: profile })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient_profiles(&self) -> &[Option<PiecewiseAffine>] {
        &self.coeffs
    }

    pub fn polygon_at(&self, c: &Q) -> Result<NewtonPolygon<Q>> {
        let pts: Vec<(i64, Q)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, pa)| pa.as_ref().map(|pa| (i as i64, pa.eval(c))))
            .collect();
        NewtonPolygon::lower_hull(&pts)
    }

    /// The polygon for all sufficiently small `c > 0`.
    pub fn polygon_germ(&self) -> Result<NewtonPolygon<Germ>> {
        let pts: Vec<(i64, Germ)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, pa)| pa.as_ref().map(|pa| (i as i64, pa.germ())))
            .collect();
        NewtonPolygon::lower_hull(&pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn pts(v: &[(i64, i64, i64)]) -> Vec<(i64, Q)> {
        v.iter().map(|&(x, n, d)| (x, q(n, d))).collect()
    }

    #[test]
    fn hull_example() {
        let np = NewtonPolygon::lower_hull(&pts(&[(0, 0, 1), (1, 2, 1), (2, 1, 1), (3, 3, 1)])).unwrap();
        assert_eq!(np.slopes(), vec![q(1, 2), q(1, 2), qi(2)]);
        assert_eq!(np.to_records(), vec!["0,0/1", "2,1/1", "3,3/1"]);
    }

    #[test]
    fn eisenstein() {
        let np = NewtonPolygon::lower_hull(&pts(&[(0, 1, 1), (1, 1, 1), (2, 0, 1)])).unwrap();
        assert_eq!(np.slopes(), vec![q(-1, 2), q(-1, 2)]);
    }

    #[test]
    fn degenerate_inputs() {
        let np = NewtonPolygon::lower_hull(&pts(&[(3, 1, 1)])).unwrap();
        assert!(np.slopes().is_empty());
        assert_eq!(NewtonPolygon::<Q>::lower_hull(&[]), Err(Error::EmptyInput));
        assert_eq!(NewtonPolygon::lower_hull(&pts(&[(1, 0, 1), (1, 1, 1)])), Err(Error::DuplicateAbscissa(1)));
    }

    #[test]
    fn splits() {
        let np = NewtonPolygon::lower_hull(&pts(&[(0, 0, 1), (2, 1, 1), (3, 3, 1)])).unwrap();
        let (a, b) = np.split_by_slope(2).unwrap();
        assert_eq!(a.slopes(), vec![q(1, 2), q(1, 2)]);
        assert_eq!(b.slopes(), vec![qi(2)]);
        let ones = NewtonPolygon::lower_hull(&pts(&[(0, 0, 1), (2, 2, 1)])).unwrap();
        assert_eq!(ones.split_by_slope(1), Err(Error::SplitInsideSegment(1)));
        let mixed = NewtonPolygon::lower_hull(&pts(&[(0, 0, 1), (1, 0, 1), (2, 3, 1)])).unwrap();
        let (a, b) = mixed.split_by_slope(1).unwrap();
        assert_eq!((a.slopes(), b.slopes()), (vec![qi(0)], vec![qi(3)]));
    }

    /// Monic polygon whose roots have the given valuations.
    fn monic_with_roots(roots: &[Q]) -> NewtonPolygon<Q> {
        let mut sorted = roots.to_vec();
        sorted.sort_by(|a, b| b.cmp(a));
        // slopes ascend, so the largest root valuation sits on the leftmost segment
        let d = sorted.len() as i64;
        let mut pts = vec![(d, qi(0))];
        let mut y = qi(0);
        for (k, w) in sorted.iter().rev().enumerate() {
            y += w;
            pts.push((d - 1 - k as i64, y.clone()));
        }
        NewtonPolygon::lower_hull(&pts).unwrap()
    }

    #[test]
    fn solvable_limit_reads_zero() {
        let np = monic_with_roots(&[qi(2), qi(3)]);
        let reading = scales_from_polygon(&np, &qi(1), 3).unwrap();
        assert_eq!(reading.visible, vec![qi(0), qi(0)]);
        assert_eq!(reading.floor, qi(0));
    }

    #[test]
    fn masking_window() {
        // sp = 0, log-scales {5c, 2c} at c = 1 and {7c, c}
        let both = scales_from_polygon(&monic_with_roots(&[qi(-5), qi(-2)]), &qi(0), 3).unwrap();
        assert_eq!(both.visible, vec![qi(5), qi(2)]);
        let one = scales_from_polygon(&monic_with_roots(&[qi(-7), qi(-1)]), &qi(0), 3).unwrap();
        assert_eq!(one.visible, vec![qi(7)]);
        assert_eq!(one.floor, q(7, 3));
        assert_eq!(one.masked, 1);
    }

    #[test]
    fn non_monic_rejected() {
        let np = NewtonPolygon::lower_hull(&pts(&[(0, 0, 1), (1, 1, 1)])).unwrap();
        assert_eq!(scales_from_polygon(&np, &qi(0), 3), Err(Error::NonMonic));
    }

    #[test]
    fn germ_polygon() {
        // T^2 + a T + b with v(a) = 1 - c, v(b) = 0 + c
        let a = Germ::new(qi(1), qi(-1));
        let b = Germ::new(qi(0), qi(1));
        let np = NewtonPolygon::lower_hull(&[(0, b), (1, a), (2, Germ::constant(qi(0)))]).unwrap();
        assert_eq!(np.slopes(), vec![Germ::new(qi(0), q(-1, 2)), Germ::new(qi(0), q(-1, 2))]);
    }

    fn point_set() -> impl Strategy<Value = Vec<(i64, Q)>> {
        prop::collection::btree_map(-5i64..6, (-20i64..20, 1i64..5), 1..8)
            .prop_map(|m| m.into_iter().map(|(x, (n, d))| (x, q(n, d))).collect())
    }

    proptest! {
        #[test]
        fn slope_sum_is_rise(points in point_set()) {
            let np = NewtonPolygon::lower_hull(&points).unwrap();
            let v = np.vertices();
            let total = np.slopes().into_iter().fold(qi(0), |acc, s| acc + s);
            prop_assert_eq!(total, &v.last().unwrap().1 - &v[0].1);
            prop_assert_eq!(np.slopes().len() as i64, np.width());
        }

        #[test]
        fn points_above_hull(points in point_set()) {
            let np = NewtonPolygon::lower_hull(&points).unwrap();
            let segs = np.vertices();
            for (x, y) in &points {
                let i = segs.iter().rposition(|(vx, _)| vx <= x).unwrap();
                if segs[i].0 == *x {
                    prop_assert!(*y >= segs[i].1);
                } else {
                    let s = slope(&segs[i], &segs[i + 1]);
                    prop_assert!(*y >= &segs[i].1 + s * qi(x - segs[i].0));
                }
            }
        }

        #[test]
        fn hull_idempotent(points in point_set()) {
            let np = NewtonPolygon::lower_hull(&points).unwrap();
            let again = NewtonPolygon::lower_hull(np.vertices()).unwrap();
            prop_assert_eq!(&again, &np);
            let segs = np.segments();
            for w in segs.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
            }
        }

        #[test]
        fn split_recovers_slopes(points in point_set()) {
            let np = NewtonPolygon::lower_hull(&points).unwrap();
            let x0 = np.vertices()[0].0;
            for (x, _) in np.vertices().iter().skip(1) {
                let k = x - x0;
                if k < np.width() {
                    let (a, b) = np.split_by_slope(k).unwrap();
                    let mut joined = a.slopes();
                    joined.extend(b.slopes());
                    prop_assert_eq!(joined, np.slopes());
                }
            }
        }
    }
}
