//! Differential modules over the Laurent fraction field.
//!
//! Matrices act by `d_i(f e_k) = d_i(f) e_k + f sum_j (N_i)[j][k] e_j`, so on
//! coordinate columns `D_i v = d_i v + N_i v`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::germ::{Germ, HullValue};
use crate::laurent::{LaurentElement, WeightVector};
use crate::newton::{scales_from_polygon, NewtonPolygon, TwistedPolyProfile};
use crate::padic::{PadicScalar, Valuation};
use crate::rational::{fmt_q, q, qi, vp_int, Q};

/// Square matrix `[row][col]` over the fraction field.
pub type FracMatrix = Vec<Vec<Frac>>;

pub const DEFAULT_CYCLIC_BOUND: usize = 8;

/// Integer-vector candidates tried before polynomial ones.
const MAX_INTEGER_CANDIDATES: usize = 81;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    Dwork(LaurentElement),
    Explicit(Vec<FracMatrix>),
    DirectSum(Box<Structure>, Box<Structure>),
    Tensor(Box<Structure>, Box<Structure>),
    Dual(Box<Structure>),
}

impl Structure {
    /// Dwork leaves in order, with duals folded into the sign.
    pub fn dwork_leaves(&self) -> Vec<LaurentElement> {
        match self {
            Structure::Dwork(f) => vec![f.clone()],
            Structure::Explicit(_) => vec![],
            Structure::DirectSum(a, b) | Structure::Tensor(a, b) => {
                let mut out = a.dwork_leaves();
                out.extend(b.dwork_leaves());
                out
            }
            Structure::Dual(a) => a.dwork_leaves().iter().map(|f| -f).collect(),
        }
    }

    pub fn has_explicit(&self) -> bool {
        match self {
            Structure::Dwork(_) => false,
            Structure::Explicit(_) => true,
            Structure::DirectSum(a, b) | Structure::Tensor(a, b) => a.has_explicit() || b.has_explicit(),
            Structure::Dual(a) => a.has_explicit(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NablaModule {
    prime: u32,
    nvars: usize,
    rank: usize,
    matrices: Vec<FracMatrix>,
    structure: Structure,
}

/// An indecomposable piece of the structure tree after flattening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Dwork(LaurentElement),
    Explicit(Vec<FracMatrix>),
}

impl Block {
    pub fn rank(&self) -> usize {
        match self {
            Block::Dwork(_) => 1,
            Block::Explicit(ms) => ms[0].len(),
        }
    }

    pub fn matrices(&self) -> Vec<FracMatrix> {
        match self {
            Block::Dwork(f) => dwork_matrices(f),
            Block::Explicit(ms) => ms.clone(),
        }
    }
}

fn dwork_matrices(f: &LaurentElement) -> Vec<FracMatrix> {
    let pi = PadicScalar::pi(f.prime());
    (0..f.nvars())
        .map(|i| vec![vec![Frac::from_laurent(f.derive(i).expect("axis in range").scale(&pi))]])
        .collect()
}

// ---- matrix helpers ----

pub fn identity(p: u32, n: usize, d: usize) -> FracMatrix {
    (0..d)
        .map(|r| (0..d).map(|c| if r == c { Frac::one(p, n) } else { Frac::zero(p, n) }).collect())
        .collect()
}

pub fn mat_mul(a: &FracMatrix, b: &FracMatrix) -> FracMatrix {
    let (rows, inner, cols) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let (p, n) = (a[0][0].prime(), a[0][0].nvars());
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    (0..inner).fold(Frac::zero(p, n), |acc, k| {
                        if a[r][k].is_zero() || b[k][c].is_zero() {
                            acc
                        } else {
                            acc.add(&a[r][k].mul(&b[k][c]))
                        }
                    })
                })
                .collect()
        })
        .collect()
}

pub fn mat_add(a: &FracMatrix, b: &FracMatrix) -> FracMatrix {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect()).collect()
}

pub fn mat_sub(a: &FracMatrix, b: &FracMatrix) -> FracMatrix {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.sub(y)).collect()).collect()
}

pub fn mat_derive(a: &FracMatrix, i: usize) -> Result<FracMatrix> {
    a.iter().map(|row| row.iter().map(|x| x.derive(i)).collect()).collect()
}

pub fn mat_is_zero(a: &FracMatrix) -> bool {
    a.iter().all(|row| row.iter().all(Frac::is_zero))
}

fn neg_transpose(a: &FracMatrix) -> FracMatrix {
    let d = a.len();
    (0..d).map(|r| (0..d).map(|c| a[c][r].neg()).collect()).collect()
}

fn kron_sum(a: &FracMatrix, b: &FracMatrix) -> FracMatrix {
    let (da, db) = (a.len(), b.len());
    let (p, n) = (a[0][0].prime(), a[0][0].nvars());
    let mut out = vec![vec![Frac::zero(p, n); da * db]; da * db];
    for i in 0..da {
        for j in 0..db {
            for k in 0..da {
                for l in 0..db {
                    let mut entry = Frac::zero(p, n);
                    if j == l {
                        entry = entry.add(&a[i][k]);
                    }
                    if i == k {
                        entry = entry.add(&b[j][l]);
                    }
                    out[i * db + j][k * db + l] = entry;
                }
            }
        }
    }
    out
}

fn block_diag(a: &FracMatrix, b: &FracMatrix) -> FracMatrix {
    let (da, db) = (a.len(), b.len());
    let (p, n) = (a[0][0].prime(), a[0][0].nvars());
    let mut out = vec![vec![Frac::zero(p, n); da + db]; da + db];
    for r in 0..da {
        out[r][..da].clone_from_slice(&a[r]);
    }
    for r in 0..db {
        out[da + r][da..].clone_from_slice(&b[r]);
    }
    out
}

fn sub_matrix(a: &FracMatrix, idx: &[usize]) -> FracMatrix {
    idx.iter().map(|&r| idx.iter().map(|&c| a[r][c].clone()).collect()).collect()
}

/// Partition of `0..d` into the connected components of the coupling graph.
fn components(ms: &[FracMatrix]) -> Vec<Vec<usize>> {
    let d = ms[0].len();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for m in ms {
        for r in 0..d {
            for c in 0..d {
                if r != c && !m[r][c].is_zero() {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for k in 0..d {
        let root = find(&mut parent, k);
        match roots.iter().position(|&r| r == root) {
            Some(g) => groups[g].push(k),
            None => {
                roots.push(root);
                groups.push(vec![k]);
            }
        }
    }
    groups
}

impl NablaModule {
    /// `Dwork(f)`: rank one with `N_i = pi * d_i f`.
    pub fn dwork(f: LaurentElement) -> Result<Self> {
        if f.is_zero() {
            return Err(Error::ZeroInput("Dwork leaf with f = 0"));
        }
        Ok(NablaModule {
            prime: f.prime(),
            nvars: f.nvars(),
            rank: 1,
            matrices: dwork_matrices(&f),
            structure: Structure::Dwork(f),
        })
    }

    /// Explicit connection matrices, one per variable; checked for integrability.
    pub fn explicit(matrices: Vec<FracMatrix>) -> Result<Self> {
        let first = matrices.first().ok_or(Error::ZeroInput("no connection matrices"))?;
        let d = first.len();
        if d == 0 {
            return Err(Error::ZeroInput("rank-0 module"));
        }
        let (p, n) = (first[0][0].prime(), first[0][0].nvars());
        if matrices.len() != n {
            return Err(Error::ArityMismatch(n, matrices.len()));
        }
        for m in &matrices {
            if m.len() != d || m.iter().any(|row| row.len() != d) {
                return Err(Error::Unsupported("connection matrices must be square of equal size".into()));
            }
            for x in m.iter().flatten() {
                if x.prime() != p {
                    return Err(Error::PrimeMismatch(p, x.prime()));
                }
                if x.nvars() != n {
                    return Err(Error::ArityMismatch(n, x.nvars()));
                }
            }
        }
        let module = NablaModule {
            prime: p,
            nvars: n,
            rank: d,
            matrices: matrices.clone(),
            structure: Structure::Explicit(matrices),
        };
        module.check_integrable()?;
        Ok(module)
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if self.nvars != other.nvars {
            return Err(Error::ArityMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn direct_sum(a: &Self, b: &Self) -> Result<Self> {
        a.check_pair(b)?;
        Ok(NablaModule {
            prime: a.prime,
            nvars: a.nvars,
            rank: a.rank + b.rank,
            matrices: a.matrices.iter().zip(&b.matrices).map(|(x, y)| block_diag(x, y)).collect(),
            structure: Structure::DirectSum(Box::new(a.structure.clone()), Box::new(b.structure.clone())),
        })
    }

    pub fn tensor(a: &Self, b: &Self) -> Result<Self> {
        a.check_pair(b)?;
        Ok(NablaModule {
            prime: a.prime,
            nvars: a.nvars,
            rank: a.rank * b.rank,
            matrices: a.matrices.iter().zip(&b.matrices).map(|(x, y)| kron_sum(x, y)).collect(),
            structure: Structure::Tensor(Box::new(a.structure.clone()), Box::new(b.structure.clone())),
        })
    }

    pub fn dual(a: &Self) -> Self {
        NablaModule {
            prime: a.prime,
            nvars: a.nvars,
            rank: a.rank,
            matrices: a.matrices.iter().map(neg_transpose).collect(),
            structure: Structure::Dual(Box::new(a.structure.clone())),
        }
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrices(&self) -> &[FracMatrix] {
        &self.matrices
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `d_i N_j - d_j N_i + [N_i, N_j] = 0` for all pairs.
    pub fn check_integrable(&self) -> Result<()> {
        for i in 0..self.nvars {
            for j in (i + 1)..self.nvars {
                let (ni, nj) = (&self.matrices[i], &self.matrices[j]);
                let lhs = mat_sub(&mat_derive(nj, i)?, &mat_derive(ni, j)?);
                let comm = mat_sub(&mat_mul(ni, nj), &mat_mul(nj, ni));
                if !mat_is_zero(&mat_add(&lhs, &comm)) {
                    return Err(Error::NotIntegrable(i, j));
                }
            }
        }
        Ok(())
    }

    /// Applies the monomial substitution to every entry and leaf.
    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        fn go(s: &Structure, sigma: &[usize]) -> Result<Structure> {
            Ok(match s {
                Structure::Dwork(f) => Structure::Dwork(f.permute(sigma)?),
                Structure::Explicit(ms) => {
                    let mut out = vec![Vec::new(); ms.len()];
                    for (i, m) in ms.iter().enumerate() {
                        out[sigma[i]] = m
                            .iter()
                            .map(|row| row.iter().map(|x| x.permute(sigma)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()?;
                    }
                    Structure::Explicit(out)
                }
                Structure::DirectSum(a, b) => Structure::DirectSum(Box::new(go(a, sigma)?), Box::new(go(b, sigma)?)),
                Structure::Tensor(a, b) => Structure::Tensor(Box::new(go(a, sigma)?), Box::new(go(b, sigma)?)),
                Structure::Dual(a) => Structure::Dual(Box::new(go(a, sigma)?)),
            })
        }
        Self::from_structure(&go(&self.structure, sigma)?)
    }

    /// Rebuilds a module from its expression tree.
    pub fn from_structure(s: &Structure) -> Result<Self> {
        match s {
            Structure::Dwork(f) => Self::dwork(f.clone()),
            Structure::Explicit(ms) => Self::explicit(ms.clone()),
            Structure::DirectSum(a, b) => Self::direct_sum(&Self::from_structure(a)?, &Self::from_structure(b)?),
            Structure::Tensor(a, b) => Self::tensor(&Self::from_structure(a)?, &Self::from_structure(b)?),
            Structure::Dual(a) => Ok(Self::dual(&Self::from_structure(a)?)),
        }
    }

    /// Indecomposable blocks: sums concatenate, tensors distribute over sums,
    /// Dwork leaves combine additively, explicit matrices split by coupling.
    pub fn blocks(&self) -> Vec<Block> {
        fn split(ms: Vec<FracMatrix>) -> Vec<Block> {
            components(&ms)
                .into_iter()
                .map(|idx| Block::Explicit(ms.iter().map(|m| sub_matrix(m, &idx)).collect()))
                .collect()
        }
        fn go(s: &Structure) -> Vec<Block> {
            match s {
                Structure::Dwork(f) => vec![Block::Dwork(f.clone())],
                Structure::Explicit(ms) => split(ms.clone()),
                Structure::DirectSum(a, b) => {
                    let mut out = go(a);
                    out.extend(go(b));
                    out
                }
                Structure::Dual(a) => go(a)
                    .into_iter()
                    .map(|blk| match blk {
                        Block::Dwork(f) => Block::Dwork(-&f),
                        Block::Explicit(ms) => Block::Explicit(ms.iter().map(neg_transpose).collect()),
                    })
                    .collect(),
                Structure::Tensor(a, b) => {
                    let (left, right) = (go(a), go(b));
                    let mut out = Vec::new();
                    for x in &left {
                        for y in &right {
                            match (x, y) {
                                (Block::Dwork(f), Block::Dwork(g)) => {
                                    let h = f + g;
                                    if h.is_zero() {
                                        out.push(Block::Explicit(dwork_matrices_zero(f)));
                                    } else {
                                        out.push(Block::Dwork(h));
                                    }
                                }
                                _ => {
                                    let ms: Vec<FracMatrix> = x
                                        .matrices()
                                        .iter()
                                        .zip(y.matrices())
                                        .map(|(m1, m2)| kron_sum(m1, &m2))
                                        .collect();
                                    out.extend(split(ms));
                                }
                            }
                        }
                    }
                    out
                }
            }
        }
        go(&self.structure)
    }
}

fn dwork_matrices_zero(f: &LaurentElement) -> Vec<FracMatrix> {
    (0..f.nvars()).map(|_| vec![vec![Frac::zero(f.prime(), f.nvars())]]).collect()
}

impl fmt::Display for NablaModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rank {} module over {} variables (p = {})", self.rank, self.nvars, self.prime)
    }
}

// ---- cyclic vectors ----

/// Solves `cols * x = rhs` over the fraction field; `cols[k]` is the k-th column.
fn frac_solve(cols: &[Vec<Frac>], rhs: &[Frac]) -> Option<Vec<Frac>> {
    let d = rhs.len();
    let mut a: Vec<Vec<Frac>> = (0..d)
        .map(|r| {
            let mut row: Vec<Frac> = cols.iter().map(|col| col[r].clone()).collect();
            row.push(rhs[r].clone());
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].inv().ok()?;
        for k in col..=d {
            a[col][k] = a[col][k].mul(&inv);
        }
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for k in col..=d {
                    let delta = factor.mul(&a[col][k]);
                    a[r][k] = a[r][k].sub(&delta);
                }
            }
        }
    }
    Some(a.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

fn apply_d(v: &[Frac], m: &FracMatrix, axis: usize) -> Vec<Frac> {
    (0..v.len())
        .map(|r| {
            let mut acc = v[r].derive(axis).expect("axis in range");
            for (k, vk) in v.iter().enumerate() {
                if !m[r][k].is_zero() && !vk.is_zero() {
                    acc = acc.add(&m[r][k].mul(vk));
                }
            }
            acc
        })
        .collect()
}

fn candidates(p: u32, n: usize, d: usize) -> Vec<Vec<Frac>> {
    let mut out: Vec<Vec<Frac>> = Vec::new();
    let int = |k: i64| Frac::scalar(n, PadicScalar::from_int(p, k));
    out.push(vec![int(1); d]);
    let mut digits = vec![0i64; d];
    'outer: loop {
        let mut pos = d;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < 3 {
                break;
            }
            digits[pos] = 0;
        }
        if out.len() >= MAX_INTEGER_CANDIDATES {
            break;
        }
        if digits.iter().all(|&x| x == 1) {
            continue;
        }
        out.push(digits.iter().map(|&x| int(x)).collect());
    }
    for axis in 0..n {
        for sign in [1i64, -1] {
            let power = |m: usize| {
                let mut j = vec![0; n];
                j[axis] = sign * m as i64;
                Frac::from_laurent(LaurentElement::term(p, Q::one(), j))
            };
            out.push((0..d).map(power).collect());
            out.push((0..d).map(|m| power(m).add(&int(1))).collect());
        }
    }
    out
}

/// Monic twisted polynomial `T^d + sum a_k T^k` annihilating a cyclic vector for `D_axis`.
/// Returns `a_0..a_{d-1}`.
pub fn twisted_polynomial(matrices: &[FracMatrix], axis: usize, bound: usize) -> Result<Vec<Frac>> {
    let m = matrices.get(axis).ok_or(Error::AxisOutOfRange { axis, nvars: matrices.len() })?;
    let d = m.len();
    if d == 0 {
        return Err(Error::ZeroInput("rank-0 module"));
    }
    if d > bound {
        return Err(Error::RankTooLarge { rank: d, bound });
    }
    if d == 1 {
        return Ok(vec![m[0][0].neg()]);
    }
    let (p, n) = (m[0][0].prime(), m[0][0].nvars());
    let cands = candidates(p, n, d);
    let count = cands.len();
    for e in cands {
        let mut iterates = vec![e];
        for _ in 0..d {
            let next = apply_d(iterates.last().unwrap(), m, axis);
            iterates.push(next);
        }
        let top = iterates.pop().unwrap();
        if let Some(b) = frac_solve(&iterates, &top) {
            return Ok(b.iter().map(Frac::neg).collect());
        }
    }
    Err(Error::CyclicVectorExhausted(count))
}

/// Cyclic-vector profile of `D_axis` at weight `r`.
pub fn cyclic_vector(module: &NablaModule, axis: usize, r: &WeightVector) -> Result<TwistedPolyProfile> {
    let coeffs = twisted_polynomial(&module.matrices, axis, DEFAULT_CYCLIC_BOUND)?;
    TwistedPolyProfile::from_coefficients(&coeffs, r)
}

// ---- scale readings ----

/// Valuation form `1/(p-1) - c r_i` of the spectral norm of `d_i` at radius parameter `c`.
pub fn spectral_term(p: u32, r_i: &Q) -> Germ {
    Germ::new(q(1, p as i64 - 1), -r_i)
}

/// Per-axis readings for one block, padded with zero roots up to the rank.
struct AxisReading<V> {
    scales: Vec<V>,
    floor: V,
    masked: usize,
}

fn read_axis<V: HullValue>(np: &NewtonPolygon<V>, rank: usize, sp: &V, p: u32) -> Result<AxisReading<V>> {
    let reading = scales_from_polygon(np, sp, p)?;
    let zeros = rank - np.width() as usize;
    let mut scales = reading.visible;
    let mut masked = reading.masked;
    if reading.floor > V::neutral() {
        masked += zeros;
    } else {
        scales.extend(std::iter::repeat(V::neutral()).take(zeros));
    }
    Ok(AxisReading { scales, floor: reading.floor, masked })
}

/// A block prepared for repeated evaluation: one twisted polynomial per axis.
#[derive(Clone, Debug)]
pub struct PreparedBlock {
    pub block: Block,
    pub polys: Vec<Vec<Frac>>,
}

impl PreparedBlock {
    pub fn new(block: Block, bound: usize) -> Result<Self> {
        let ms = block.matrices();
        let polys = (0..ms.len()).map(|i| twisted_polynomial(&ms, i, bound)).collect::<Result<Vec<_>>>()?;
        Ok(PreparedBlock { block, polys })
    }

    pub fn rank(&self) -> usize {
        self.block.rank()
    }

    fn prime(&self) -> u32 {
        self.polys[0][0].prime()
    }

    /// Log-scales for all small `c > 0`, with the axes attaining each entry.
    pub fn germ_scales(&self, r: &WeightVector) -> Result<Vec<(Germ, Vec<usize>)>> {
        let p = self.prime();
        let d = self.rank();
        if let Block::Dwork(f) = &self.block {
            check_support(f, r)?;
        }
        let mut per_axis = Vec::with_capacity(self.polys.len());
        for (i, poly) in self.polys.iter().enumerate() {
            let profile = TwistedPolyProfile::from_coefficients(poly, r)?;
            let np = profile.polygon_germ()?;
            let reading = read_axis(&np, d, &spectral_term(p, &r.as_slice()[i]), p)?;
            if reading.masked > 0 {
                return Err(Error::Unreadable(format!(
                    "{} log-scale(s) below the masking floor {} on axis {}",
                    reading.masked,
                    reading.floor,
                    i + 1
                )));
            }
            per_axis.push(reading.scales);
        }
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let best = per_axis.iter().map(|s| s[k].clone()).max().unwrap_or_else(Germ::neutral);
            let axes: Vec<usize> = (0..per_axis.len()).filter(|&i| per_axis[i][k] == best).collect();
            if best.value > Q::zero() {
                let msg = format!("{best}");
                return Err(if d == 1 { Error::NotSolvable(msg) } else { Error::Unreadable(msg) });
            }
            out.push((best, axes));
        }
        Ok(out)
    }

    /// Visible log-scales at a concrete radius parameter `c > 0`.
    pub fn scales_at(&self, r: &WeightVector, c: &Q) -> Result<ScaleMultiset> {
        let p = self.prime();
        let d = self.rank();
        let mut per_axis = Vec::with_capacity(self.polys.len());
        let mut floor = Q::zero();
        for (i, poly) in self.polys.iter().enumerate() {
            let profile = TwistedPolyProfile::from_coefficients(poly, r)?;
            let np = profile.polygon_at(c)?;
            let sp = spectral_term(p, &r.as_slice()[i]).eval(c);
            let reading = read_axis(&np, d, &sp, p)?;
            floor = floor.max(reading.floor);
            let mut scales = reading.scales;
            scales.resize(d, Q::zero());
            per_axis.push(scales);
        }
        let mut scales: Vec<Q> = (0..d).map(|k| per_axis.iter().map(|s| s[k].clone()).max().unwrap_or_else(Q::zero)).collect();
        scales.sort_by(|a, b| b.cmp(a));
        let before = scales.len();
        scales.retain(|s| *s >= floor);
        Ok(ScaleMultiset { masked: before - scales.len(), scales, floor })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleMultiset {
    /// Readable log-scales, descending.
    pub scales: Vec<Q>,
    pub floor: Q,
    pub masked: usize,
}

impl fmt::Display for ScaleMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.scales.iter().map(fmt_q).collect();
        write!(f, "{{{}}} floor {} masked {}", s.join(","), fmt_q(&self.floor), self.masked)
    }
}

/// A module split into prepared blocks.
#[derive(Clone, Debug)]
pub struct PreparedModule {
    pub prime: u32,
    pub nvars: usize,
    pub blocks: Vec<PreparedBlock>,
}

impl PreparedModule {
    pub fn new(module: &NablaModule) -> Result<Self> {
        Self::with_bound(module, DEFAULT_CYCLIC_BOUND)
    }

    pub fn with_bound(module: &NablaModule, bound: usize) -> Result<Self> {
        let blocks = module.blocks().into_iter().map(|b| PreparedBlock::new(b, bound)).collect::<Result<Vec<_>>>()?;
        Ok(PreparedModule { prime: module.prime(), nvars: module.nvars(), blocks })
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(PreparedBlock::rank).sum()
    }

    pub fn check_weights(&self, r: &WeightVector) -> Result<()> {
        if r.len() != self.nvars {
            return Err(Error::ArityMismatch(self.nvars, r.len()));
        }
        if r.as_slice().iter().any(Signed::is_negative) {
            return Err(Error::InvalidWeights(r.to_string()));
        }
        Ok(())
    }

    /// Union over blocks of the visible log-scales at radius parameter `c`.
    pub fn scale_multiset(&self, r: &WeightVector, c: &Q) -> Result<ScaleMultiset> {
        self.check_weights(r)?;
        if *c <= Q::zero() {
            return Err(Error::InvalidWeights(format!("radius parameter {} must be positive", fmt_q(c))));
        }
        let mut scales = Vec::new();
        let mut floor = Q::zero();
        let mut masked = 0;
        for b in &self.blocks {
            let s = b.scales_at(r, c)?;
            scales.extend(s.scales);
            floor = floor.max(s.floor);
            masked += s.masked;
        }
        scales.sort_by(|a, b| b.cmp(a));
        Ok(ScaleMultiset { scales, floor, masked })
    }
}

/// Scale multiset of `module` at weight `r` and radius parameter `c`.
pub fn scale_multiset(module: &NablaModule, r: &WeightVector, c: &Q) -> Result<ScaleMultiset> {
    PreparedModule::new(module)?.scale_multiset(r, c)
}

/// Estimates `max(0, sp - v(M_n)/n)` where `M_n` is the matrix of `D_axis^n`.
pub fn spectral_estimate(module: &NablaModule, axis: usize, r: &WeightVector, c: &Q, nmax: usize) -> Result<Vec<Q>> {
    if axis >= module.nvars {
        return Err(Error::AxisOutOfRange { axis, nvars: module.nvars });
    }
    let rc = r.scaled(c);
    let sp = spectral_term(module.prime, &r.as_slice()[axis]).eval(c);
    let n_i = &module.matrices[axis];
    let mut m = identity(module.prime, module.nvars, module.rank);
    let mut out = Vec::with_capacity(nmax);
    for k in 1..=nmax {
        m = mat_add(&mat_derive(&m, axis)?, &mat_mul(n_i, &m));
        let v = m.iter().flatten().map(|x| x.gauss_valuation(&rc)).min().unwrap_or(Valuation::Infinite);
        let est = match v {
            Valuation::Finite(v) => (&sp - v / qi(k as i64)).max(Q::zero()),
            Valuation::Infinite => Q::zero(),
        };
        out.push(est);
    }
    Ok(out)
}

// ---- rank-one oracle ----

fn prime_to_p(j: &[i64], p: u32) -> bool {
    j.iter().any(|&e| e != 0 && vp_int(&e.into(), p) == 0)
}

/// Rejects a Dwork leaf whose relevant unit monomials have only p-divisible
/// exponents. Returns the oracle value `max(0, max -<r, J>)`.
pub fn check_support(f: &LaurentElement, r: &WeightVector) -> Result<Q> {
    let p = f.prime();
    let mut best = Q::zero();
    let mut divisible: Vec<(Q, &Vec<i64>)> = Vec::new();
    for (j, c) in f.terms() {
        match c.valuation() {
            Valuation::Finite(v) if v < Q::zero() => return Err(Error::NotIntegral(c.to_string())),
            Valuation::Finite(v) if v.is_zero() => {
                let value = -r.dot(j);
                if prime_to_p(j, p) {
                    best = best.max(value);
                } else {
                    divisible.push((value, j));
                }
            }
            _ => {}
        }
    }
    if let Some((_, j)) = divisible.iter().find(|(v, _)| *v > best) {
        let exps: Vec<String> = j.iter().map(i64::to_string).collect();
        return Err(Error::PDivisibleSupport(format!("({})", exps.join(","))));
    }
    Ok(best)
}

/// Break of `Dwork(f)` along the Gauss weight `r`, unnormalized.
pub fn rank1_oracle_break(f: &LaurentElement, r: &WeightVector) -> Result<Q> {
    if r.len() != f.nvars() {
        return Err(Error::ArityMismatch(f.nvars(), r.len()));
    }
    if r.as_slice().iter().any(Signed::is_negative) {
        return Err(Error::InvalidWeights(r.to_string()));
    }
    check_support(f, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::mono;

    fn pi(p: u32) -> PadicScalar {
        PadicScalar::pi(p)
    }

    #[test]
    fn dwork_matrices_examples() {
        let m = NablaModule::dwork(mono(5, &[1, 1])).unwrap();
        let expect_x = LaurentElement::monomial(pi(5), vec![0, 1]);
        let expect_y = LaurentElement::monomial(pi(5), vec![1, 0]);
        assert_eq!(m.matrices()[0][0][0].as_laurent().unwrap(), &expect_x);
        assert_eq!(m.matrices()[1][0][0].as_laurent().unwrap(), &expect_y);

        let m = NablaModule::dwork(mono(5, &[1, -5])).unwrap();
        assert_eq!(m.matrices()[0][0][0].as_laurent().unwrap(), &LaurentElement::monomial(pi(5), vec![0, -5]));
        let nt = LaurentElement::monomial(pi(5).scale(&qi(-5)), vec![1, -6]);
        assert_eq!(m.matrices()[1][0][0].as_laurent().unwrap(), &nt);
        assert_eq!(NablaModule::dwork(LaurentElement::zero(5, 2)), Err(Error::ZeroInput("Dwork leaf with f = 0")));
    }

    #[test]
    fn combinators() {
        let f = &mono(5, &[1, 1]) + &mono(5, &[-1, 0]);
        let g = mono(5, &[0, -2]);
        let a = NablaModule::dwork(f.clone()).unwrap();
        let b = NablaModule::dwork(g.clone()).unwrap();
        let t = NablaModule::tensor(&a, &b).unwrap();
        let fg = NablaModule::dwork(&f + &g).unwrap();
        assert_eq!(t.matrices(), fg.matrices());
        let d = NablaModule::dual(&a);
        assert_eq!(d.matrices(), NablaModule::dwork(-&f).unwrap().matrices());
        let s = NablaModule::direct_sum(&a, &t).unwrap();
        assert_eq!(s.rank(), 2);
        for m in [&a, &t, &d, &s] {
            m.check_integrable().unwrap();
        }
        let other = NablaModule::dwork(mono(5, &[1])).unwrap();
        assert_eq!(NablaModule::direct_sum(&a, &other), Err(Error::ArityMismatch(2, 1)));
    }

    #[test]
    fn non_integrable_explicit_rejected() {
        // N_x = 0, N_y = x: d_x N_y = 1 != 0
        let x = Frac::from_laurent(mono(5, &[1, 0]));
        let zero = Frac::zero(5, 2);
        assert_eq!(NablaModule::explicit(vec![vec![vec![zero]], vec![vec![x]]]), Err(Error::NotIntegrable(0, 1)));
    }

    #[test]
    fn twisted_polynomial_of_sum() {
        let p = 7;
        let a = NablaModule::dwork(mono(p, &[1])).unwrap();
        let b = NablaModule::dwork(LaurentElement::term(p, qi(2), vec![1])).unwrap();
        let s = NablaModule::direct_sum(&a, &b).unwrap();
        let coeffs = twisted_polynomial(s.matrices(), 0, 8).unwrap();
        let pi = pi(p);
        let a0 = Frac::scalar(1, (&pi * &pi).scale(&qi(2)));
        let a1 = Frac::scalar(1, pi.scale(&qi(-3)));
        assert_eq!(coeffs, vec![a0, a1]);
    }

    #[test]
    fn rank_one_profile_is_line_of_g() {
        let f = mono(5, &[-1]);
        let m = NablaModule::dwork(f).unwrap();
        let r = WeightVector::from_ints(&[1]);
        let prof = cyclic_vector(&m, 0, &r).unwrap();
        assert_eq!(prof.degree(), 1);
        let g_line = m.matrices()[0][0][0].valuation_line(&r).unwrap();
        assert_eq!(prof.coefficient_profiles()[0].as_ref().unwrap(), &g_line);
    }

    #[test]
    fn rank_zero_and_bound_errors() {
        assert_eq!(twisted_polynomial(&[vec![]], 0, 8), Err(Error::ZeroInput("rank-0 module")));
        let m = identity(5, 1, 3);
        assert_eq!(twisted_polynomial(&[m], 0, 2), Err(Error::RankTooLarge { rank: 3, bound: 2 }));
    }

    #[test]
    fn trivial_module_scales_zero() {
        let zero = Frac::zero(5, 1);
        let m = NablaModule::explicit(vec![vec![vec![zero.clone(), zero.clone()], vec![zero.clone(), zero]]]).unwrap();
        let s = scale_multiset(&m, &WeightVector::from_ints(&[1]), &q(1, 3)).unwrap();
        assert_eq!(s.scales, vec![qi(0), qi(0)]);
        let est = spectral_estimate(&m, 0, &WeightVector::from_ints(&[1]), &q(1, 3), 4).unwrap();
        assert!(est.iter().all(Zero::is_zero));
    }

    #[test]
    fn dwork_inverse_t_reads_c() {
        let m = NablaModule::dwork(mono(5, &[-1])).unwrap();
        let c = q(1, 7);
        let s = scale_multiset(&m, &WeightVector::from_ints(&[1]), &c).unwrap();
        assert_eq!(s.scales, vec![c]);
    }

    #[test]
    fn sum_of_two_leaves_small_c() {
        let p = 5;
        let a = NablaModule::dwork(mono(p, &[-2, -1])).unwrap();
        let b = NablaModule::dwork(mono(p, &[-1, -2])).unwrap();
        let s = NablaModule::direct_sum(&a, &b).unwrap();
        let r = WeightVector::new(vec![q(1, 2), q(1, 2)]);
        let c = q(1, 100);
        let m = scale_multiset(&s, &r, &c).unwrap();
        assert_eq!(m.scales, vec![q(3, 200), q(3, 200)]);
    }

    #[test]
    fn oracle_examples() {
        let p = 5;
        let xy = mono(p, &[-1, -1]);
        assert_eq!(rank1_oracle_break(&xy, &WeightVector::from_ints(&[2, 3])).unwrap(), qi(5));
        let r = q(1, 3);
        let f = mono(p, &[1, -5]);
        assert_eq!(rank1_oracle_break(&f, &WeightVector::new(vec![r.clone(), qi(1)])).unwrap(), qi(5) - r);
        assert_eq!(rank1_oracle_break(&mono(p, &[1]), &WeightVector::from_ints(&[1])).unwrap(), qi(0));
        let bad = mono(p, &[-5, 0]);
        assert!(matches!(rank1_oracle_break(&bad, &WeightVector::from_ints(&[1, 1])), Err(Error::PDivisibleSupport(_))));
        // a p-divisible monomial below the winning one is harmless
        let ok = &mono(p, &[-5, 0]) + &mono(p, &[-6, -1]);
        assert_eq!(rank1_oracle_break(&ok, &WeightVector::from_ints(&[1, 1])).unwrap(), qi(7));
    }

    #[test]
    fn blocks_of_tensor_distribute() {
        let p = 5;
        let a = NablaModule::dwork(mono(p, &[-1, 0])).unwrap();
        let b = NablaModule::dwork(mono(p, &[0, -1])).unwrap();
        let s = NablaModule::direct_sum(&a, &b).unwrap();
        let t = NablaModule::tensor(&s, &s).unwrap();
        let blocks = t.blocks();
        assert_eq!(blocks.len(), 4);
        assert!(blocks.iter().all(|b| matches!(b, Block::Dwork(_))));
        let triv = NablaModule::tensor(&a, &NablaModule::dual(&a)).unwrap();
        assert!(matches!(triv.blocks()[0], Block::Explicit(_)));
    }
}
