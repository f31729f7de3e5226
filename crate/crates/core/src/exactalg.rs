//! Exact scalars over ℚ and GF(p), dense matrices, and the univariate
//! polynomials needed for spectral computations.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// The base field of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    Rationals,
    Prime(u32),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    /// GF(p); fails unless `p` is a prime below 2^31.
    pub fn prime(p: u64) -> Result<FieldSpec> {
        if p >= 1 << 31 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldSpec::Prime(p as u32))
    }

    /// Number of elements, `None` for ℚ.
    pub fn order(self) -> Option<u64> {
        match self {
            FieldSpec::Rationals => None,
            FieldSpec::Prime(p) => Some(p as u64),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, FieldSpec::Prime(_))
    }

    pub fn zero(self) -> Scalar {
        self.int(0)
    }

    pub fn one(self) -> Scalar {
        self.int(1)
    }

    /// Image of an integer in the field.
    pub fn int(self, n: i64) -> Scalar {
        match self {
            FieldSpec::Rationals => Scalar::Q(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::Prime(p) => Scalar::Fp {
                v: n.rem_euclid(p as i64) as u32,
                p,
            },
        }
    }

    /// Image of `n/d`; `None` if `d` vanishes in the field.
    pub fn ratio(self, n: i64, d: i64) -> Option<Scalar> {
        self.int(n).div(&self.int(d))
    }

    /// Number of distinct integers 1, 2, … available as distinct field elements.
    pub fn distinct_positive_integers(self) -> u64 {
        match self {
            FieldSpec::Rationals => u64::MAX,
            FieldSpec::Prime(p) => p as u64 - 1,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::Prime(p) => write!(f, "GF({p})"),
        }
    }
}

/// All elements 0, 1, …, p−1 of a prime field, in that order.
pub fn field_elements(f: FieldSpec) -> Result<impl Iterator<Item = Scalar> + Clone> {
    match f {
        FieldSpec::Rationals => Err(Error::InfiniteField),
        FieldSpec::Prime(p) => Ok((0..p).map(move |v| Scalar::Fp { v, p })),
    }
}

/// A field element in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    Fp { v: u32, p: u32 },
}

fn mismatch() -> ! {
    panic!("scalars from different fields mixed in one operation")
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i64) as u32
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Q(_) => FieldSpec::Rationals,
            Scalar::Fp { p, .. } => FieldSpec::Prime(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(x) => x.is_zero(),
            Scalar::Fp { v, .. } => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(x) => x.is_one(),
            Scalar::Fp { v, .. } => *v == 1,
        }
    }

    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Q(x) => Scalar::Q(x.recip()),
            Scalar::Fp { v, p } => Scalar::Fp {
                v: inv_mod(*v, *p),
                p: *p,
            },
        })
    }

    pub fn div(&self, other: &Scalar) -> Option<Scalar> {
        other.inv().map(|i| self * &i)
    }

    pub fn pow(&self, mut e: u64) -> Scalar {
        let mut base = self.clone();
        let mut acc = self.field().one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Total order used for canonical output: 0 < 1 < … < p−1 on GF(p),
    /// and (sign, magnitude) on ℚ.
    pub fn canonical_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Fp { v: a, .. }, Scalar::Fp { v: b, .. }) => a.cmp(b),
            (Scalar::Q(a), Scalar::Q(b)) => {
                let sa = signum(a);
                let sb = signum(b);
                sa.cmp(&sb).then_with(|| a.abs().cmp(&b.abs()))
            }
            _ => mismatch(),
        }
    }

    /// Parses `n` or `n/d` in the given field.
    pub fn parse(field: FieldSpec, s: &str) -> std::result::Result<Scalar, String> {
        let bad = || format!("invalid scalar `{s}`");
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let n: BigInt = num.parse().map_err(|_| bad())?;
        let d: BigInt = match den {
            Some(d) => d.parse().map_err(|_| bad())?,
            None => BigInt::one(),
        };
        match field {
            FieldSpec::Rationals => {
                if d.is_zero() {
                    return Err(format!("zero denominator in `{s}`"));
                }
                Ok(Scalar::Q(BigRational::new(n, d)))
            }
            FieldSpec::Prime(p) => {
                let pb = BigInt::from(p);
                let nv = n.mod_floor(&pb).to_u32().unwrap();
                let dv = d.mod_floor(&pb).to_u32().unwrap();
                if dv == 0 {
                    return Err(format!("denominator of `{s}` vanishes mod {p}"));
                }
                Ok(Scalar::Fp {
                    v: ((nv as u64 * inv_mod(dv, p) as u64) % p as u64) as u32,
                    p,
                })
            }
        }
    }

    /// Residue of a GF(p) element; panics on ℚ.
    pub fn residue(&self) -> u32 {
        match self {
            Scalar::Fp { v, .. } => *v,
            Scalar::Q(_) => panic!("residue of a rational scalar"),
        }
    }
}

fn signum(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Q(x) => {
                if x.denom().is_one() {
                    write!(f, "{}", x.numer())
                } else {
                    write!(f, "{}/{}", x.numer(), x.denom())
                }
            }
            Scalar::Fp { v, .. } => write!(f, "{v}"),
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) if p == q => Scalar::Fp {
                v: ((*a as u64 + *b as u64) % *p as u64) as u32,
                p: *p,
            },
            _ => mismatch(),
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self + &(-o)
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) if p == q => Scalar::Fp {
                v: ((*a as u64 * *b as u64) % *p as u64) as u32,
                p: *p,
            },
            _ => mismatch(),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(a) => Scalar::Q(-a),
            Scalar::Fp { v, p } => Scalar::Fp {
                v: if *v == 0 { 0 } else { p - v },
                p: *p,
            },
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

// ---------------------------------------------------------------------------
// Elimination engine, generic over a concrete element representation.

pub(crate) trait Kernel {
    type E: Clone + PartialEq;
    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn lift(&self, s: &Scalar) -> Self::E;
    fn to_scalar(&self, e: &Self::E) -> Scalar;
    /// `dst[j] += f * src[j]` for `j >= start`.
    fn axpy(&self, dst: &mut [Self::E], f: &Self::E, src: &[Self::E], start: usize);
    fn scale(&self, row: &mut [Self::E], f: &Self::E);
}

pub(crate) struct FpKernel {
    pub p: u32,
}

impl Kernel for FpKernel {
    type E = u32;
    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }
    fn neg(&self, a: &u32) -> u32 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn inv(&self, a: &u32) -> u32 {
        inv_mod(*a, self.p)
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 * *b as u64) % self.p as u64) as u32
    }
    fn lift(&self, s: &Scalar) -> u32 {
        match s {
            Scalar::Fp { v, p } if *p == self.p => *v,
            _ => mismatch(),
        }
    }
    fn to_scalar(&self, e: &u32) -> Scalar {
        Scalar::Fp { v: *e, p: self.p }
    }
    fn axpy(&self, dst: &mut [u32], f: &u32, src: &[u32], start: usize) {
        let p = self.p as u64;
        let f = *f as u64;
        if self.p == 2 {
            for (d, s) in dst[start..].iter_mut().zip(&src[start..]) {
                *d ^= s;
            }
            return;
        }
        for (d, s) in dst[start..].iter_mut().zip(&src[start..]) {
            if *s != 0 {
                *d = ((*d as u64 + f * *s as u64) % p) as u32;
            }
        }
    }
    fn scale(&self, row: &mut [u32], f: &u32) {
        for x in row.iter_mut() {
            *x = self.mul(x, f);
        }
    }
}

pub(crate) struct QKernel;

impl Kernel for QKernel {
    type E = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn lift(&self, s: &Scalar) -> BigRational {
        match s {
            Scalar::Q(x) => x.clone(),
            _ => mismatch(),
        }
    }
    fn to_scalar(&self, e: &BigRational) -> Scalar {
        Scalar::Q(e.clone())
    }
    fn axpy(&self, dst: &mut [BigRational], f: &BigRational, src: &[BigRational], start: usize) {
        for (d, s) in dst[start..].iter_mut().zip(&src[start..]) {
            if !s.is_zero() {
                *d += f * s;
            }
        }
    }
    fn scale(&self, row: &mut [BigRational], f: &BigRational) {
        for x in row.iter_mut() {
            *x *= f;
        }
    }
}

/// In-place reduced row echelon form; optionally applies the same row
/// operations to `track`. Returns pivot columns.
pub(crate) fn rref_rows<K: Kernel>(
    k: &K,
    rows: &mut [Vec<K::E>],
    ncols: usize,
    mut track: Option<&mut Vec<Vec<K::E>>>,
) -> Vec<usize> {
    let nrows = rows.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(i) = (r..nrows).find(|&i| !k.is_zero(&rows[i][c])) else {
            continue;
        };
        rows.swap(r, i);
        if let Some(t) = track.as_deref_mut() {
            t.swap(r, i);
        }
        let inv = k.inv(&rows[r][c]);
        k.scale(&mut rows[r][c..], &inv);
        if let Some(t) = track.as_deref_mut() {
            k.scale(&mut t[r], &inv);
        }
        let prow = rows[r].clone();
        let ptrack = track.as_deref().map(|t| t[r].clone());
        for i in 0..nrows {
            if i == r || k.is_zero(&rows[i][c]) {
                continue;
            }
            let f = k.neg(&rows[i][c]);
            k.axpy(&mut rows[i], &f, &prow, c);
            if let (Some(t), Some(pt)) = (track.as_deref_mut(), ptrack.as_ref()) {
                k.axpy(&mut t[i], &f, pt, 0);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Kernel basis of a row-reduced system: one vector per free column, ascending.
pub(crate) fn kernel_from_rref<K: Kernel>(
    k: &K,
    rows: &[Vec<K::E>],
    ncols: usize,
    pivots: &[usize],
) -> Vec<Vec<K::E>> {
    let mut is_pivot = vec![false; ncols];
    for &c in pivots {
        is_pivot[c] = true;
    }
    (0..ncols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![k.zero(); ncols];
            v[free] = k.one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = k.neg(&rows[r][free]);
            }
            v
        })
        .collect()
}

macro_rules! with_kernel {
    ($field:expr, $k:ident => $body:expr) => {
        match $field {
            FieldSpec::Rationals => {
                let $k = QKernel;
                $body
            }
            FieldSpec::Prime(p) => {
                let $k = FpKernel { p };
                $body
            }
        }
    };
}
pub(crate) use with_kernel;

// ---------------------------------------------------------------------------

/// Dense row-major matrix over a single field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    data: Vec<Scalar>,
}

/// Result of row reduction: `transform · M = r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub r: Mat,
    pub pivots: Vec<usize>,
    pub rank: usize,
    pub transform: Mat,
}

impl Mat {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            field,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Mat {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// `c·I_n`.
    pub fn scalar(n: usize, c: &Scalar) -> Mat {
        let mut m = Mat::zeros(c.field(), n, n);
        for i in 0..n {
            m.set(i, i, c.clone());
        }
        m
    }

    pub fn from_fn(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Scalar,
    ) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let s = f(i, j);
                assert_eq!(s.field(), field, "entry from a different field");
                data.push(s);
            }
        }
        Mat {
            rows,
            cols,
            field,
            data,
        }
    }

    /// Builds a matrix from integer entries in row-major order.
    pub fn from_ints(field: FieldSpec, rows: usize, cols: usize, entries: &[i64]) -> Mat {
        assert_eq!(entries.len(), rows * cols);
        Mat::from_fn(field, rows, cols, |i, j| field.int(entries[i * cols + j]))
    }

    pub fn from_rows(field: FieldSpec, rows: Vec<Vec<Scalar>>) -> Result<Mat> {
        let cols = rows.first().map_or(0, |r| r.len());
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            for s in r {
                if s.field() != field {
                    return Err(Error::FieldMismatch);
                }
                data.push(s);
            }
        }
        Ok(Mat {
            rows: nrows,
            cols,
            field,
            data,
        })
    }

    /// Column vector.
    pub fn column(field: FieldSpec, entries: Vec<Scalar>) -> Mat {
        let rows = entries.len();
        Mat {
            rows,
            cols: 1,
            field,
            data: entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Scalar) {
        assert_eq!(s.field(), self.field);
        self.data[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = self.get(i, j);
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.field, o.field, "field mismatch in product");
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        with_kernel!(self.field, k => {
            let a = self.to_rows(&k);
            let b = o.to_rows(&k);
            let mut out = vec![vec![k.zero(); o.cols]; self.rows];
            for i in 0..self.rows {
                for (l, bl) in b.iter().enumerate() {
                    if k.is_zero(&a[i][l]) {
                        continue;
                    }
                    k.axpy(&mut out[i], &a[i][l], bl, 0);
                }
            }
            Mat::from_kernel_rows(&k, self.field, self.rows, o.cols, out)
        })
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!(self.shape(), o.shape(), "shape mismatch in sum");
        Mat::from_fn(self.field, self.rows, self.cols, |i, j| self.get(i, j) + o.get(i, j))
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!(self.shape(), o.shape(), "shape mismatch in difference");
        Mat::from_fn(self.field, self.rows, self.cols, |i, j| self.get(i, j) - o.get(i, j))
    }

    pub fn scale(&self, c: &Scalar) -> Mat {
        Mat::from_fn(self.field, self.rows, self.cols, |i, j| self.get(i, j) * c)
    }

    pub fn neg(&self) -> Mat {
        Mat::from_fn(self.field, self.rows, self.cols, |i, j| -self.get(i, j))
    }

    pub fn trace(&self) -> Scalar {
        (0..self.rows.min(self.cols)).fold(self.field.zero(), |acc, i| acc + self.get(i, i))
    }

    /// Sub-block of height `h`, width `w` at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Mat {
        Mat::from_fn(self.field, h, w, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn hcat(&self, o: &Mat) -> Mat {
        assert_eq!(self.rows, o.rows);
        let mut m = Mat::zeros(self.field, self.rows, self.cols + o.cols);
        m.set_block(0, 0, self);
        m.set_block(0, self.cols, o);
        m
    }

    pub fn vcat(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.cols);
        let mut m = Mat::zeros(self.field, self.rows + o.rows, self.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, 0, o);
        m
    }

    pub fn direct_sum(&self, o: &Mat) -> Mat {
        let mut m = Mat::zeros(self.field, self.rows + o.rows, self.cols + o.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, o);
        m
    }

    /// Entries as a single row vector (row-major).
    pub fn flatten(&self) -> Vec<Scalar> {
        self.data.clone()
    }

    pub(crate) fn to_rows<K: Kernel>(&self, k: &K) -> Vec<Vec<K::E>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|s| k.lift(s)).collect())
            .collect()
    }

    pub(crate) fn from_kernel_rows<K: Kernel>(
        k: &K,
        field: FieldSpec,
        rows: usize,
        cols: usize,
        data: Vec<Vec<K::E>>,
    ) -> Mat {
        let mut out = Vec::with_capacity(rows * cols);
        for r in &data {
            for e in r {
                out.push(k.to_scalar(e));
            }
        }
        Mat {
            rows,
            cols,
            field,
            data: out,
        }
    }

    pub fn rref(&self) -> Rref {
        with_kernel!(self.field, k => {
            let mut rows = self.to_rows(&k);
            let mut t = Mat::identity(self.field, self.rows).to_rows(&k);
            let pivots = rref_rows(&k, &mut rows, self.cols, Some(&mut t));
            Rref {
                r: Mat::from_kernel_rows(&k, self.field, self.rows, self.cols, rows),
                rank: pivots.len(),
                pivots,
                transform: Mat::from_kernel_rows(&k, self.field, self.rows, self.rows, t),
            }
        })
    }

    pub fn rank(&self) -> usize {
        with_kernel!(self.field, k => {
            let mut rows = self.to_rows(&k);
            rref_rows(&k, &mut rows, self.cols, None).len()
        })
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn invert(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let r = self.rref();
        if r.rank < self.rows {
            return Err(Error::NotInvertible);
        }
        Ok(r.transform)
    }

    pub fn kernel_basis(&self) -> Vec<Mat> {
        with_kernel!(self.field, k => {
            let mut rows = self.to_rows(&k);
            let pivots = rref_rows(&k, &mut rows, self.cols, None);
            kernel_from_rref(&k, &rows, self.cols, &pivots)
                .into_iter()
                .map(|v| Mat::column(self.field, v.iter().map(|e| k.to_scalar(e)).collect()))
                .collect()
        })
    }

    /// Kernel basis as plain coordinate vectors.
    pub fn kernel_vectors(&self) -> Vec<Vec<Scalar>> {
        self.kernel_basis().into_iter().map(|m| m.data).collect()
    }

    pub fn det(&self) -> Result<Scalar> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = self.field.one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return Ok(self.field.zero());
            };
            if p != c {
                for j in 0..n {
                    let a = m.get(p, j).clone();
                    let b = m.get(c, j).clone();
                    m.set(p, j, b);
                    m.set(c, j, a);
                }
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = &det * &piv;
            let inv = piv.inv().unwrap();
            for i in c + 1..n {
                let f = m.get(i, c) * &inv;
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = m.get(i, j) - &(&f * m.get(c, j));
                    m.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Rank of the row space spanned by a list of equal-length vectors.
    pub fn rank_of_vectors(field: FieldSpec, width: usize, vecs: &[Vec<Scalar>]) -> usize {
        with_kernel!(field, k => {
            let mut rows: Vec<Vec<_>> = vecs
                .iter()
                .map(|v| v.iter().map(|s| k.lift(s)).collect())
                .collect();
            rref_rows(&k, &mut rows, width, None).len()
        })
    }
}

/// Indices of a maximal linearly independent subset of `vecs`, chosen
/// greedily in order, together with expressions of every vector in terms
/// of the chosen ones (`coeffs[i][t]` is the coefficient of chosen `t`).
pub fn greedy_row_basis(
    field: FieldSpec,
    width: usize,
    vecs: &[Vec<Scalar>],
) -> (Vec<usize>, Vec<Vec<Scalar>>) {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..vecs.len() {
        let mut cand: Vec<Vec<Scalar>> = chosen.iter().map(|&c| vecs[c].clone()).collect();
        cand.push(vecs[i].clone());
        if Mat::rank_of_vectors(field, width, &cand) == cand.len() {
            chosen.push(i);
        }
    }
    // Solve vecs[i] = Σ coeff_t · vecs[chosen[t]] via the transposed system.
    let k = chosen.len();
    let basis_t = Mat::from_fn(field, width, k, |r, c| vecs[chosen[c]][r].clone());
    let coeffs = vecs
        .iter()
        .map(|v| {
            let aug = basis_t.hcat(&Mat::column(field, v.clone()));
            let rr = aug.rref();
            let mut x = vec![field.zero(); k];
            for (row, &pc) in rr.pivots.iter().enumerate() {
                assert!(pc < k, "vector outside the span of the chosen basis");
                x[pc] = rr.r.get(row, k).clone();
            }
            x
        })
        .collect();
    (chosen, coeffs)
}

// ---------------------------------------------------------------------------
// Random sampling helpers.

/// Uniform element of GF(p), or an integer in `[-bound, bound]` over ℚ.
pub fn random_scalar(field: FieldSpec, rng: &mut impl Rng, bound: i64) -> Scalar {
    match field {
        FieldSpec::Rationals => field.int(rng.gen_range(-bound..=bound)),
        FieldSpec::Prime(p) => Scalar::Fp {
            v: rng.gen_range(0..p),
            p,
        },
    }
}

pub fn random_mat(field: FieldSpec, rows: usize, cols: usize, rng: &mut impl Rng, bound: i64) -> Mat {
    Mat::from_fn(field, rows, cols, |_, _| random_scalar(field, rng, bound))
}

pub fn random_invertible(field: FieldSpec, n: usize, rng: &mut impl Rng, bound: i64) -> Mat {
    loop {
        let m = random_mat(field, n, n, rng, bound);
        if m.is_invertible() {
            return m;
        }
    }
}

// ---------------------------------------------------------------------------

/// Univariate polynomial, coefficients from degree 0 upward, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    field: FieldSpec,
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<Scalar>) -> Poly {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Poly { field, coeffs }
    }

    pub fn zero(field: FieldSpec) -> Poly {
        Poly::new(field, vec![])
    }

    pub fn constant(c: Scalar) -> Poly {
        Poly::new(c.field(), vec![c])
    }

    /// `x − a`.
    pub fn linear_root(a: &Scalar) -> Poly {
        Poly::new(a.field(), vec![-a, a.field().one()])
    }

    /// `a + b·x`.
    pub fn linear(a: Scalar, b: Scalar) -> Poly {
        let f = a.field();
        Poly::new(f, vec![a, b])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs
            .iter()
            .rev()
            .fold(self.field.zero(), |acc, c| &(&acc * x) + c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = self.field.zero();
        Poly::new(
            self.field,
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + o.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.field, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(self.field, out)
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        Poly::new(self.field, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead_inv = d.lead().unwrap().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.field.zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let top = rem.len() - 1;
            let c = rem[top].clone();
            if c.is_zero() {
                rem.pop();
                continue;
            }
            let f = &c * &lead_inv;
            let shift = top - dd;
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[shift + j] = &rem[shift + j] - &(&f * dc);
            }
            quot[shift] = f;
            rem.pop();
        }
        (Poly::new(self.field, quot), Poly::new(self.field, rem))
    }

    /// Exact quotient; panics if the division leaves a remainder.
    pub fn exact_div(&self, d: &Poly) -> Poly {
        let (q, r) = self.divrem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn monic(&self) -> Poly {
        match self.lead() {
            None => self.clone(),
            Some(l) => self.scale(&l.inv().unwrap()),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.field,
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &self.field.int(i as i64))
                .collect(),
        )
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let t = match (i, c.is_one()) {
                (0, _) => c.to_string(),
                (1, true) => "x".to_string(),
                (1, false) => format!("{c}*x"),
                (_, true) => format!("x^{i}"),
                (_, false) => format!("{c}*x^{i}"),
            };
            terms.push(t);
        }
        write!(f, "{}", terms.join(" + "))
    }
}

/// Determinant of a square matrix of polynomials (fraction-free elimination).
pub fn poly_det(field: FieldSpec, mut m: Vec<Vec<Poly>>) -> Poly {
    let n = m.len();
    if n == 0 {
        return Poly::constant(field.one());
    }
    let mut prev = Poly::constant(field.one());
    let mut negate = false;
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return Poly::zero(field),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num.exact_div(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        d.neg()
    } else {
        d
    }
}

/// Characteristic polynomial det(x·I − M).
pub fn char_poly(m: &Mat) -> Result<Poly> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let f = m.field();
    let n = m.rows();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = -m.get(i, j);
                    if i == j {
                        Poly::linear(c, f.one())
                    } else {
                        Poly::constant(c)
                    }
                })
                .collect()
        })
        .collect();
    Ok(poly_det(f, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    fn q() -> FieldSpec {
        FieldSpec::Rationals
    }

    #[test]
    fn rref_examples() {
        let id = Mat::identity(q(), 2);
        let r = id.rref();
        assert_eq!((r.r.clone(), r.pivots.clone(), r.rank), (id.clone(), vec![0, 1], 2));
        let z = Mat::zeros(q(), 3, 2);
        let r = z.rref();
        assert_eq!((r.r, r.pivots, r.rank), (z, vec![], 0));
        let m = Mat::from_ints(q(), 2, 2, &[2, 4, 1, 2]);
        let r = m.rref();
        assert_eq!(r.r, Mat::from_ints(q(), 2, 2, &[1, 2, 0, 0]));
        assert_eq!(r.pivots, vec![0]);
        assert_eq!(r.rank, 1);
        assert_eq!(r.transform.mul(&m), r.r);
    }

    #[test]
    fn invert_examples() {
        let f2 = FieldSpec::Prime(2);
        assert_eq!(Mat::identity(q(), 3).invert().unwrap(), Mat::identity(q(), 3));
        let sw = Mat::from_ints(q(), 2, 2, &[0, 1, 1, 0]);
        assert_eq!(sw.invert().unwrap(), sw);
        let ones = Mat::from_ints(f2, 2, 2, &[1, 1, 1, 1]);
        assert_eq!(ones.invert(), Err(Error::NotInvertible));
        assert!(matches!(
            Mat::zeros(q(), 2, 3).invert(),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn kernel_examples() {
        let f2 = FieldSpec::Prime(2);
        assert!(Mat::identity(q(), 3).kernel_basis().is_empty());
        let k = Mat::zeros(q(), 1, 2).kernel_basis();
        assert_eq!(
            k,
            vec![Mat::from_ints(q(), 2, 1, &[1, 0]), Mat::from_ints(q(), 2, 1, &[0, 1])]
        );
        let k = Mat::from_ints(f2, 1, 2, &[1, 1]).kernel_basis();
        assert_eq!(k, vec![Mat::from_ints(f2, 2, 1, &[1, 1])]);
    }

    #[test]
    fn field_element_listing() {
        let v: Vec<u32> = field_elements(FieldSpec::Prime(5)).unwrap().map(|s| s.residue()).collect();
        assert_eq!(v, vec![0, 1, 2, 3, 4]);
        let v: Vec<u32> = field_elements(FieldSpec::Prime(2)).unwrap().map(|s| s.residue()).collect();
        assert_eq!(v, vec![0, 1]);
        assert!(matches!(field_elements(q()), Err(Error::InfiniteField)));
    }

    #[test]
    fn prime_check() {
        assert!(FieldSpec::prime(7).is_ok());
        assert_eq!(FieldSpec::prime(9), Err(Error::NotPrime(9)));
        assert_eq!(FieldSpec::prime(1), Err(Error::NotPrime(1)));
    }

    #[test]
    fn scalar_parse_and_order() {
        let a = Scalar::parse(q(), "-6/4").unwrap();
        assert_eq!(a.to_string(), "-3/2");
        let b = Scalar::parse(FieldSpec::Prime(7), "3/2").unwrap();
        assert_eq!(b.residue(), 5);
        let keys: Vec<Scalar> = ["-2", "-1", "0", "1/2", "3"].iter().map(|s| Scalar::parse(q(), s).unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|x, y| x.canonical_cmp(y));
        let shown: Vec<String> = sorted.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["-1", "-2", "0", "1/2", "3"]);
    }

    #[test]
    fn poly_arithmetic() {
        let f = FieldSpec::Prime(5);
        let p = Poly::linear_root(&f.int(2)).mul(&Poly::linear_root(&f.int(3)));
        assert_eq!(p.eval(&f.int(2)), f.zero());
        let (qq, r) = p.divrem(&Poly::linear_root(&f.int(3)));
        assert!(r.is_zero());
        assert_eq!(qq, Poly::linear_root(&f.int(2)));
        assert_eq!(p.gcd(&Poly::linear_root(&f.int(2))), Poly::linear_root(&f.int(2)));
    }

    #[test]
    fn det_and_char_poly_agree() {
        let mut rng = SplitMix64::seed_from_u64(3);
        for field in [q(), FieldSpec::Prime(2), FieldSpec::Prime(5)] {
            for n in 0..5 {
                let m = random_mat(field, n, n, &mut rng, 3);
                let cp = char_poly(&m).unwrap();
                let at_zero = cp.eval(&field.zero());
                let mut d = m.det().unwrap();
                if n % 2 == 1 {
                    d = -d;
                }
                assert_eq!(at_zero, d);
                assert_eq!(m.is_invertible(), !m.det().unwrap().is_zero());
            }
        }
    }

    #[test]
    fn greedy_basis_keeps_leading_independent_rows() {
        let f = q();
        let vecs = vec![
            vec![f.int(1), f.int(0)],
            vec![f.int(2), f.int(0)],
            vec![f.int(0), f.int(1)],
        ];
        let (chosen, coeffs) = greedy_row_basis(f, 2, &vecs);
        assert_eq!(chosen, vec![0, 2]);
        assert_eq!(coeffs[1], vec![f.int(2), f.int(0)]);
    }
}
