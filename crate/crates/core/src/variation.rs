//! Break multisets at Gauss weights and their variation over the simplex.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::WeightVector;
use crate::nabla::{NablaModule, PreparedModule};
use crate::polyhedral::{
    breakpoint_loci, check_convex, check_integral_polyhedral, fit_polyhedral, simplex_grid, Locus, PolyhedralFunction,
    Samples, Verdict,
};
use crate::rational::{factorial, fmt_q, fmt_q_list, Q};

/// Which valuation the breaks are measured against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// Divide by `v_r(t_1 ... t_n) = sum r_i`.
    Simplex,
    /// Rescale `r` to a primitive integer vector, so the value group is `Z`.
    Natural,
    /// Divide by `v_r(t_i) = r_i`.
    ByVariable(usize),
    /// Divide by `v_r(t^J)`.
    ByMonomial(Vec<i64>),
}

impl Normalization {
    /// The positive divisor turning raw breaks at `r` into normalized ones.
    pub fn divisor(&self, r: &WeightVector) -> Result<Q> {
        let d = match self {
            Normalization::Simplex => r.total(),
            Normalization::Natural => {
                let l = r.as_slice().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                let ints: Vec<BigInt> = r.as_slice().iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
                let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
                if g.is_zero() {
                    return Err(Error::InvalidWeights(r.to_string()));
                }
                Q::new(g, l)
            }
            Normalization::ByVariable(i) => {
                if *i >= r.len() {
                    return Err(Error::AxisOutOfRange { axis: *i, nvars: r.len() });
                }
                r.as_slice()[*i].clone()
            }
            Normalization::ByMonomial(j) => {
                if j.len() != r.len() {
                    return Err(Error::ArityMismatch(r.len(), j.len()));
                }
                r.dot(j)
            }
        };
        if !d.is_positive() {
            return Err(Error::InvalidWeights(format!("{} has nonpositive valuation {} under {}", r, fmt_q(&d), self)));
        }
        Ok(d)
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::Simplex => write!(f, "simplex"),
            Normalization::Natural => write!(f, "natural"),
            Normalization::ByVariable(i) => write!(f, "var{}", i + 1),
            Normalization::ByMonomial(j) => {
                let s: Vec<String> = j.iter().map(i64::to_string).collect();
                write!(f, "monomial({})", s.join(","))
            }
        }
    }
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

fn ser_q_vec<S: serde::Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(fmt_q))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BreakData {
    pub weights: WeightVector,
    /// Normalized breaks, descending.
    #[serde(serialize_with = "ser_q_vec")]
    pub breaks: Vec<Q>,
    #[serde(serialize_with = "ser_q")]
    pub swan: Q,
    /// Zero-based axes attaining each break.
    pub dominant: Vec<Vec<usize>>,
    pub normalization: Normalization,
}

impl BreakData {
    /// `b_1 + ... + b_i`.
    pub fn partial_sum(&self, i: usize) -> Q {
        self.breaks[..i].iter().fold(Q::zero(), |a, b| a + b)
    }
}

impl fmt::Display for BreakData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r = {} breaks {{{}}} swan {}", self.weights, fmt_q_list(&self.breaks), fmt_q(&self.swan))
    }
}

/// Small-radius breaks at weight `r`.
pub fn break_multiset(module: &PreparedModule, r: &WeightVector, norm: &Normalization) -> Result<BreakData> {
    module.check_weights(r)?;
    let div = norm.divisor(r)?;
    let mut entries: Vec<(Q, Vec<usize>)> = Vec::with_capacity(module.rank());
    for block in &module.blocks {
        for (g, axes) in block.germ_scales(r)? {
            entries.push((g.slope / &div, axes));
        }
    }
    entries.sort_by(|a, b| b.0.cmp(&a.0));
    let swan = entries.iter().fold(Q::zero(), |acc, (b, _)| acc + b);
    let (breaks, dominant) = entries.into_iter().unzip();
    Ok(BreakData { weights: r.clone(), breaks, swan, dominant, normalization: norm.clone() })
}

/// One fitted function of the surface with its verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceFit {
    /// `"d!*B_i"` or `"B_d"`.
    pub label: String,
    pub index: usize,
    pub fit: Option<PolyhedralFunction>,
    pub fit_error: Option<String>,
    pub convex: Verdict,
    /// Every fitted piece has integer coefficients.
    pub integral_pieces: bool,
    /// Every sample lies in `Z + sum Z r_j`.
    pub hasse_arf: Verdict,
    pub loci: Vec<Locus>,
}

impl SurfaceFit {
    pub fn passes(&self) -> bool {
        self.fit.is_some() && self.convex.ok && self.integral_pieces && self.hasse_arf.ok
    }
}

/// A grid point dropped from the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct Excluded {
    #[serde(serialize_with = "ser_q_vec")]
    pub r: Vec<Q>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BreakSurface {
    pub n: usize,
    pub rank: usize,
    pub grid: u32,
    /// Grid points in lexicographic order.
    pub table: Vec<BreakData>,
    pub excluded: Vec<Excluded>,
    pub fits: Vec<SurfaceFit>,
    /// Set when explicit connection matrices are present, whose small-radius
    /// reading depends on the cyclic-vector search rather than a closed form.
    pub resolution_limited: bool,
}

impl BreakSurface {
    /// Samples of `scale * B_i` over the table.
    pub fn samples(&self, i: usize, scale: &Q) -> Samples {
        self.table.iter().map(|e| (e.weights.as_slice().to_vec(), e.partial_sum(i) * scale)).collect()
    }

    pub fn fit(&self, label: &str) -> Option<&SurfaceFit> {
        self.fits.iter().find(|f| f.label == label)
    }

    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(SurfaceFit::passes)
    }

    /// CSV rows: `r_1..r_n, b_1..b_d, swan`, header first.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut header: Vec<String> = (1..=self.n).map(|i| format!("r_{i}")).collect();
        header.extend((1..=self.rank).map(|i| format!("b_{i}")));
        header.push("swan".into());
        let mut rows = vec![header];
        for e in &self.table {
            let mut row: Vec<String> = e.weights.as_slice().iter().map(fmt_q).collect();
            row.extend(e.breaks.iter().map(fmt_q));
            row.push(fmt_q(&e.swan));
            rows.push(row);
        }
        rows
    }
}

fn on_boundary(r: &[Q]) -> bool {
    r.iter().any(Zero::is_zero)
}

/// Breaks on `T cap (1/N) Z^n` and the fitted `d! B_i` and `B_d` surfaces.
///
/// Boundary points the module does not support are skipped and listed;
/// any failure at an interior point aborts.
pub fn sweep_simplex(module: &NablaModule, denom: u32) -> Result<BreakSurface> {
    if denom < 2 {
        return Err(Error::InvalidWeights(format!("grid denominator {denom} must be at least 2")));
    }
    let prepared = PreparedModule::new(module)?;
    let n = module.nvars();
    let d = module.rank();
    let grid = simplex_grid(n, denom);
    let results: Vec<Result<BreakData>> = grid
        .par_iter()
        .map(|x| break_multiset(&prepared, &WeightVector::new(x.clone()), &Normalization::Simplex))
        .collect();
    let mut table = Vec::new();
    let mut excluded = Vec::new();
    for (x, res) in grid.into_iter().zip(results) {
        match res {
            Ok(b) => table.push(b),
            Err(e) if on_boundary(&x) && e.is_unsupported_input() => excluded.push(Excluded { r: x, reason: e.to_string() }),
            Err(e) => return Err(Error::AtPoint(fmt_q_list(&x), Box::new(e))),
        }
    }
    let mut surface = BreakSurface {
        n,
        rank: d,
        grid: denom,
        table,
        excluded,
        fits: Vec::new(),
        resolution_limited: module.structure().has_explicit(),
    };
    if surface.table.is_empty() {
        return Ok(surface);
    }
    let names: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
    let dfact = Q::from_integer(factorial(d));
    let mut fits = Vec::with_capacity(d + 1);
    for i in 1..=d {
        fits.push(make_fit(format!("{d}!*B_{i}"), i, &surface.samples(i, &dfact), &names));
    }
    fits.push(make_fit(format!("B_{d}"), d, &surface.samples(d, &Q::one()), &names));
    surface.fits = fits;
    Ok(surface)
}

fn make_fit(label: String, index: usize, samples: &Samples, names: &[String]) -> SurfaceFit {
    let convex = check_convex(samples);
    let hasse_arf = check_integral_polyhedral(samples);
    let (fit, fit_error) = match fit_polyhedral(samples) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let integral_pieces = fit.as_ref().is_some_and(PolyhedralFunction::all_integral);
    let loci = fit.as_ref().map(|f| breakpoint_loci(f, names)).unwrap_or_default();
    SurfaceFit { label, index, fit, fit_error, convex, integral_pieces, hasse_arf, loci }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{mono, LaurentElement};
    use crate::padic::PadicScalar;
    use crate::polyhedral::AffineFunctional;
    use crate::rational::{q, qi};

    fn dw(p: u32, j: &[i64]) -> NablaModule {
        NablaModule::dwork(mono(p, j)).unwrap()
    }

    fn prep(m: &NablaModule) -> PreparedModule {
        PreparedModule::new(m).unwrap()
    }

    #[test]
    fn lxy_natural_and_by_w() {
        let m = prep(&dw(5, &[-1, -1]));
        let b = break_multiset(&m, &WeightVector::from_ints(&[2, 3]), &Normalization::Natural).unwrap();
        assert_eq!(fmt_q(&b.swan), "5/1");
        let b = break_multiset(&m, &WeightVector::from_ints(&[4, 6]), &Normalization::Natural).unwrap();
        assert_eq!(b.swan, qi(5));
        let r = q(3, 7);
        let w = WeightVector::new(vec![r.clone(), qi(1)]);
        let b = break_multiset(&m, &w, &Normalization::ByVariable(1)).unwrap();
        assert_eq!(b.swan, qi(1) + r);
    }

    #[test]
    fn trivial_module_has_zero_breaks() {
        let p = 3;
        let zero = NablaModule::explicit(vec![vec![vec![crate::frac::Frac::zero(p, 2)]]; 2]).unwrap();
        let b = break_multiset(&prep(&zero), &WeightVector::new(vec![q(1, 3), q(2, 3)]), &Normalization::Simplex).unwrap();
        assert_eq!(b.breaks, vec![qi(0)]);
        assert_eq!(b.swan, qi(0));
    }

    #[test]
    fn normalization_rejects_zero_divisor() {
        let m = prep(&dw(5, &[-1, -1]));
        let w = WeightVector::new(vec![qi(1), qi(0)]);
        assert!(break_multiset(&m, &w, &Normalization::ByVariable(1)).is_err());
        assert!(Normalization::ByMonomial(vec![1, -1]).divisor(&WeightVector::from_ints(&[1, 1])).is_err());
        assert_eq!(Normalization::Natural.divisor(&WeightVector::new(vec![q(1, 2), q(3, 4)])).unwrap(), q(1, 4));
    }

    #[test]
    fn lxy_sweep_is_constant_one() {
        let s = sweep_simplex(&dw(5, &[-1, -1]), 6).unwrap();
        assert!(s.excluded.is_empty());
        assert!(s.table.iter().all(|e| e.swan == qi(1)));
        let f = s.fit("1!*B_1").unwrap().fit.clone().unwrap();
        assert_eq!(f.pieces, vec![AffineFunctional::constant(2, qi(1))]);
        assert!(s.fit("1!*B_1").unwrap().loci.is_empty());
        assert!(s.all_pass());
    }

    #[test]
    fn two_leaf_sum_surface() {
        let p = 5;
        let m = NablaModule::direct_sum(&dw(p, &[-2, -1]), &dw(p, &[-1, -2])).unwrap();
        let s = sweep_simplex(&m, 12).unwrap();
        assert!(s.all_pass());
        for e in &s.table {
            let r = e.weights.as_slice();
            assert_eq!(e.breaks[0], qi(1) + r[0].clone().max(r[1].clone()));
            assert_eq!(e.swan, qi(3));
        }
        let b1 = s.fit("2!*B_1").unwrap().fit.clone().unwrap();
        let mut pieces: Vec<String> = b1.pieces.iter().map(AffineFunctional::to_record).collect();
        pieces.sort();
        assert_eq!(pieces, vec!["0/1,2/1;2/1".to_string(), "2/1,0/1;2/1".to_string()]);
        let loci = &s.fit("2!*B_1").unwrap().loci;
        assert_eq!(loci.len(), 1);
        assert_eq!(loci[0].offset, "0/1");
        let b2 = s.fit("B_2").unwrap().fit.clone().unwrap();
        assert_eq!(b2.pieces.len(), 1);
    }

    #[test]
    fn direct_sum_swan_is_additive_pointwise() {
        let p = 7;
        let a = dw(p, &[-3, 1]);
        let b = NablaModule::direct_sum(&dw(p, &[-1, -1]), &dw(p, &[-2, 0])).unwrap();
        let sum = NablaModule::direct_sum(&a, &b).unwrap();
        let (sa, sb, ss) = (sweep_simplex(&a, 6).unwrap(), sweep_simplex(&b, 6).unwrap(), sweep_simplex(&sum, 6).unwrap());
        for e in &ss.table {
            let fa = sa.table.iter().find(|x| x.weights == e.weights);
            let fb = sb.table.iter().find(|x| x.weights == e.weights);
            if let (Some(fa), Some(fb)) = (fa, fb) {
                assert_eq!(e.swan, &fa.swan + &fb.swan);
            }
        }
    }

    #[test]
    fn unsupported_boundary_points_are_excluded() {
        // x^5 / t is p-divisible in x; at r = (0, 1) only the t-part survives
        let p = 5;
        let f = LaurentElement::from_terms(p, 2, [(vec![-5, -1], PadicScalar::from_int(p, 1))]).unwrap();
        let s = sweep_simplex(&NablaModule::dwork(f).unwrap(), 4).unwrap();
        assert!(s.excluded.iter().all(|e| on_boundary(&e.r)));
        assert_eq!(s.table.len() + s.excluded.len(), 5);
    }

    #[test]
    fn interior_failure_reports_point() {
        let p = 5;
        let f = mono(p, &[-5, -5]);
        let err = sweep_simplex(&NablaModule::dwork(f).unwrap(), 3).unwrap_err();
        assert!(matches!(err, Error::AtPoint(_, _)));
        assert!(err.is_unsupported_input());
    }

    #[test]
    fn permuting_variables_permutes_the_surface() {
        let p = 5;
        let m = NablaModule::direct_sum(&dw(p, &[-2, -1, 0]), &dw(p, &[0, -1, -3])).unwrap();
        let sigma = [2, 0, 1];
        let mp = m.permute(&sigma).unwrap();
        let (s, sp) = (sweep_simplex(&m, 4).unwrap(), sweep_simplex(&mp, 4).unwrap());
        for e in &s.table {
            let moved = e.weights.permuted(&sigma);
            let other = sp.table.iter().find(|x| x.weights == moved).unwrap();
            assert_eq!(e.breaks, other.breaks);
        }
    }
}
