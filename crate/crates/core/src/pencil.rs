//! Kronecker canonical form of matrix pencils under `(A, B) ↦ (P·A·Q, P·B·Q)`.
//!
//! Invariants are read off kernel dimensions of block-Toeplitz matrices:
//! polynomial kernel vectors of bounded degree give the minimal indices,
//! and kernels of jet matrices at each spectral point give its Jordan
//! structure. The reducing transformation is then found as an invertible
//! intertwiner between the pencil and its reconstructed canonical form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::exactalg::{field_elements, poly_det, random_mat, FieldSpec, Mat, Poly, Scalar};
use crate::oracle::{rep_iso, LinearRep, SearchConfig, SearchOutcome};

/// A pair of equally shaped matrices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pencil {
    pub a: Mat,
    pub b: Mat,
}

impl Pencil {
    pub fn new(a: Mat, b: Mat) -> Result<Pencil> {
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch(format!(
                "pencil matrices {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if a.field() != b.field() {
            return Err(Error::FieldMismatch);
        }
        Ok(Pencil { a, b })
    }

    pub fn field(&self) -> FieldSpec {
        self.a.field()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.a.shape()
    }

    pub fn transform(&self, w: &EquivWitness2) -> Pencil {
        Pencil {
            a: w.p.mul(&self.a).mul(&w.q),
            b: w.p.mul(&self.b).mul(&w.q),
        }
    }

    pub fn direct_sum(&self, o: &Pencil) -> Pencil {
        Pencil {
            a: self.a.direct_sum(&o.a),
            b: self.b.direct_sum(&o.b),
        }
    }

    pub fn transpose(&self) -> Pencil {
        Pencil {
            a: self.a.transpose(),
            b: self.b.transpose(),
        }
    }
}

/// A point of the projective line over the base field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProjPoint {
    Finite(Scalar),
    Infinity,
}

impl Ord for ProjPoint {
    fn cmp(&self, o: &Self) -> Ordering {
        match (self, o) {
            (ProjPoint::Finite(a), ProjPoint::Finite(b)) => a.canonical_cmp(b),
            (ProjPoint::Finite(_), ProjPoint::Infinity) => Ordering::Less,
            (ProjPoint::Infinity, ProjPoint::Finite(_)) => Ordering::Greater,
            (ProjPoint::Infinity, ProjPoint::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for ProjPoint {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjPoint::Finite(s) => write!(f, "{s}"),
            ProjPoint::Infinity => write!(f, "inf"),
        }
    }
}

pub type EigenMap = BTreeMap<ProjPoint, Vec<usize>>;

/// Complete invariant of a pencil: minimal indices and Jordan data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KroneckerData {
    pub field: FieldSpec,
    pub m: usize,
    pub n: usize,
    pub right: Vec<usize>,
    pub left: Vec<usize>,
    pub eigen: EigenMap,
}

impl KroneckerData {
    /// Sorts the multisets and checks the size accounting.
    pub fn new(
        field: FieldSpec,
        mut right: Vec<usize>,
        mut left: Vec<usize>,
        mut eigen: EigenMap,
    ) -> Result<Self> {
        if right.iter().chain(&left).any(|&x| x == 0) {
            return Err(Error::StructureMismatch("minimal index blocks have size ≥ 1".into()));
        }
        right.sort_unstable();
        left.sort_unstable();
        eigen.retain(|_, v| !v.is_empty());
        for (pt, sizes) in eigen.iter_mut() {
            if let ProjPoint::Finite(s) = pt {
                if s.field() != field {
                    return Err(Error::FieldMismatch);
                }
            }
            if sizes.contains(&0) {
                return Err(Error::StructureMismatch("Jordan blocks have size ≥ 1".into()));
            }
            sizes.sort_unstable();
        }
        let l: usize = eigen.values().flatten().sum();
        let m = right.iter().map(|r| r - 1).sum::<usize>() + left.iter().sum::<usize>() + l;
        let n = right.iter().sum::<usize>() + left.iter().map(|s| s - 1).sum::<usize>() + l;
        Ok(KroneckerData {
            field,
            m,
            n,
            right,
            left,
            eigen,
        })
    }

    /// Multiset union (the invariant of a direct sum).
    pub fn union(&self, o: &KroneckerData) -> KroneckerData {
        let mut right = self.right.clone();
        right.extend(&o.right);
        let mut left = self.left.clone();
        left.extend(&o.left);
        let mut eigen = self.eigen.clone();
        for (k, v) in &o.eigen {
            eigen.entry(k.clone()).or_default().extend(v);
        }
        KroneckerData::new(self.field, right, left, eigen).expect("union of valid data")
    }

    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

fn braces(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

pub(crate) fn eigen_descriptor(e: &EigenMap) -> String {
    let parts: Vec<String> = e.iter().map(|(k, v)| format!("{k}:{}", braces(v))).collect();
    format!("eigen{{{}}}", parts.join("; "))
}

impl fmt::Display for KroneckerData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "right{} left{} {}",
            braces(&self.right),
            braces(&self.left),
            eigen_descriptor(&self.eigen)
        )
    }
}

/// `(P, Q)` carrying `(A, B)` to `(P·A·Q, P·B·Q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivWitness2 {
    pub p: Mat,
    pub q: Mat,
}

impl EquivWitness2 {
    pub fn identity(field: FieldSpec, m: usize, n: usize) -> Self {
        EquivWitness2 {
            p: Mat::identity(field, m),
            q: Mat::identity(field, n),
        }
    }
}

/// `J_l(λ)`: λ on the diagonal, ones directly below it.
pub fn jordan_block(l: usize, lambda: &Scalar) -> Mat {
    let f = lambda.field();
    let mut m = Mat::scalar(l, lambda);
    for i in 1..l {
        m.set(i, i - 1, f.one());
    }
    m
}

/// `F_r = [I_{r−1} | 0]`, `(r−1) × r`.
pub fn f_block(field: FieldSpec, r: usize) -> Mat {
    Mat::from_fn(field, r - 1, r, |i, j| if i == j { field.one() } else { field.zero() })
}

/// `G_r = [0 | I_{r−1}]`, `(r−1) × r`.
pub fn g_block(field: FieldSpec, r: usize) -> Mat {
    Mat::from_fn(field, r - 1, r, |i, j| if j == i + 1 { field.one() } else { field.zero() })
}

/// Block-diagonal canonical pencil: right indices, left indices, then
/// eigenvalue blocks by (point, size).
pub fn reconstruct_pencil(d: &KroneckerData) -> Pencil {
    let f = d.field;
    let mut blocks: Vec<(Mat, Mat)> = Vec::new();
    for &r in &d.right {
        blocks.push((f_block(f, r), g_block(f, r)));
    }
    for &s in &d.left {
        blocks.push((f_block(f, s).transpose(), g_block(f, s).transpose()));
    }
    for (pt, sizes) in &d.eigen {
        for &l in sizes {
            match pt {
                ProjPoint::Finite(lam) => blocks.push((Mat::identity(f, l), jordan_block(l, lam))),
                ProjPoint::Infinity => {
                    blocks.push((jordan_block(l, &f.zero()), Mat::identity(f, l)))
                }
            }
        }
    }
    let mut a = Mat::zeros(f, d.m, d.n);
    let mut b = Mat::zeros(f, d.m, d.n);
    let (mut r0, mut c0) = (0, 0);
    for (x, y) in blocks {
        a.set_block(r0, c0, &x);
        b.set_block(r0, c0, &y);
        r0 += x.rows();
        c0 += x.cols();
    }
    Pencil { a, b }
}

// ---------------------------------------------------------------------------

/// Dimension of `{(x_0..x_d) : A x_0 = 0, A x_j + B x_{j−1} = 0, B x_d = 0}`,
/// i.e. of polynomial kernel vectors of `A + λB` with degree ≤ d.
fn poly_kernel_dim(p: &Pencil, d: usize) -> usize {
    let (m, n) = p.shape();
    let mut t = Mat::zeros(p.field(), (d + 2) * m, (d + 1) * n);
    for j in 0..=d {
        t.set_block(j * m, j * n, &p.a);
        t.set_block((j + 1) * m, j * n, &p.b);
    }
    (d + 1) * n - t.rank()
}

/// Sizes `r = ε + 1` of the right minimal-index blocks.
fn right_indices(p: &Pencil) -> Vec<usize> {
    let (m, _) = p.shape();
    let mut counts = Vec::new();
    let mut prev_n = 0usize;
    let mut prev_c = 0usize;
    for d in 0..=m {
        let nd = poly_kernel_dim(p, d);
        let c = nd - prev_n;
        for _ in 0..c - prev_c {
            counts.push(d + 1);
        }
        prev_n = nd;
        prev_c = c;
    }
    counts
}

/// Dimension of the kernel of the k-jet matrix with diagonal `diag` and
/// subdiagonal `sub`.
fn jet_kernel_dim(diag: &Mat, sub: &Mat, k: usize) -> usize {
    let (m, n) = diag.shape();
    let mut t = Mat::zeros(diag.field(), k * m, k * n);
    for i in 0..k {
        t.set_block(i * m, i * n, diag);
        if i + 1 < k {
            t.set_block((i + 1) * m, i * n, sub);
        }
    }
    k * n - t.rank()
}

/// Jordan block sizes at one point, given the number of right blocks.
fn jordan_sizes(diag: &Mat, sub: &Mat, n_right: usize, cap: usize) -> Vec<usize> {
    let mut ge = vec![0usize];
    let mut prev_g = 0usize;
    for k in 1..=cap + 1 {
        let g = jet_kernel_dim(diag, sub, k) - k * n_right;
        let c = g - prev_g;
        if c == 0 {
            break;
        }
        ge.push(c);
        prev_g = g;
    }
    let mut sizes = Vec::new();
    for k in 1..ge.len() {
        let next = ge.get(k + 1).copied().unwrap_or(0);
        for _ in 0..ge[k] - next {
            sizes.push(k);
        }
    }
    sizes
}

fn point_matrix(p: &Pencil, mu: &Scalar) -> Mat {
    p.b.sub(&p.a.scale(mu))
}

/// Product of the finite elementary divisors: gcd of the maximal minors of
/// `B − λA`, obtained from random compressions until its degree reaches
/// `target`.
fn finite_divisor_product(p: &Pencil, normal_rank: usize, target: usize) -> Poly {
    let f = p.field();
    let (m, n) = p.shape();
    let mut rng = SplitMix64::seed_from_u64(0x5eed);
    let mut g = Poly::zero(f);
    for _ in 0..2000 {
        let u = random_mat(f, normal_rank, m, &mut rng, 5);
        let v = random_mat(f, n, normal_rank, &mut rng, 5);
        let ub = u.mul(&p.b).mul(&v);
        let ua = u.mul(&p.a).mul(&v);
        let rows = (0..normal_rank)
            .map(|i| {
                (0..normal_rank)
                    .map(|j| Poly::linear(ub.get(i, j).clone(), -ua.get(i, j)))
                    .collect()
            })
            .collect();
        let det = poly_det(f, rows);
        if det.is_zero() {
            continue;
        }
        g = if g.is_zero() { det.monic() } else { g.gcd(&det) };
        if g.degree() == Some(target) {
            break;
        }
    }
    g
}

fn is_probable_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if n < &two {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let p = BigInt::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let one = BigInt::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    // these bases are deterministic below 3.3·10^24 and a strong test above
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard–Brent: a nontrivial factor of a composite odd `n`.
fn pollard_factor(n: &BigInt) -> BigInt {
    let one = BigInt::one();
    for c in 1u32.. {
        let c = BigInt::from(c);
        let f = |x: &BigInt| (x * x + &c) % n;
        let (mut x, mut y) = (BigInt::from(2), BigInt::from(2));
        loop {
            x = f(&x);
            y = f(&f(&y));
            let g = (&x - &y).abs().gcd(n);
            if g == *n {
                break;
            }
            if g != one {
                return g;
            }
        }
    }
    unreachable!()
}

fn factor_into(n: BigInt, out: &mut Vec<BigInt>) {
    if n.is_one() {
        return;
    }
    let mut n = n;
    for p in 2u32..1000 {
        let bp = BigInt::from(p);
        while (&n % &bp).is_zero() {
            out.push(bp.clone());
            n /= &bp;
        }
    }
    if n.is_one() {
        return;
    }
    if is_probable_prime(&n) {
        out.push(n);
        return;
    }
    let d = pollard_factor(&n);
    let rest = &n / &d;
    factor_into(d, out);
    factor_into(rest, out);
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    if n.is_zero() {
        return vec![];
    }
    let mut primes = Vec::new();
    factor_into(n, &mut primes);
    primes.sort();
    let mut divs = vec![BigInt::one()];
    let mut i = 0;
    while i < primes.len() {
        let p = primes[i].clone();
        let mut e = 0;
        while i < primes.len() && primes[i] == p {
            e += 1;
            i += 1;
        }
        let cur = divs.clone();
        let mut pw = BigInt::one();
        for _ in 0..e {
            pw *= &p;
            divs.extend(cur.iter().map(|d| d * &pw));
        }
    }
    divs.sort();
    divs
}

/// Distinct rational roots of a nonzero polynomial over ℚ.
fn rational_roots(f: &Poly) -> Vec<Scalar> {
    let q = FieldSpec::Rationals;
    let mut sf = f.clone();
    let g = f.gcd(&f.derivative());
    if g.degree().unwrap_or(0) > 0 {
        sf = f.exact_div(&g);
    }
    let mut roots = Vec::new();
    while sf.coeffs().first().is_some_and(Scalar::is_zero) {
        roots.push(q.zero());
        sf = Poly::new(q, sf.coeffs()[1..].to_vec());
    }
    if sf.degree().unwrap_or(0) == 0 {
        return roots;
    }
    let rat = |s: &Scalar| match s {
        Scalar::Q(x) => x.clone(),
        _ => unreachable!(),
    };
    let lcm = sf.coeffs().iter().fold(BigInt::one(), |acc, c| acc.lcm(rat(c).denom()));
    let ints: Vec<BigInt> = sf.coeffs().iter().map(|c| (rat(c) * &lcm).to_integer()).collect();
    let a0 = ints.first().unwrap().clone();
    let an = ints.last().unwrap().clone();
    for qd in divisors(&an) {
        for pd in divisors(&a0) {
            if !pd.gcd(&qd).is_one() {
                continue;
            }
            for sign in [1, -1] {
                let cand = Scalar::Q(BigRational::new(&pd * sign, qd.clone()));
                if sf.eval(&cand).is_zero() {
                    roots.push(cand);
                }
            }
        }
    }
    roots
}

/// Invariants only (no witness).
pub fn kronecker_data(p: &Pencil) -> Result<KroneckerData> {
    let f = p.field();
    let (m, n) = p.shape();
    let right = right_indices(p);
    let left = right_indices(&p.transpose());
    let sum_right: usize = right.iter().sum();
    let sum_left: usize = left.iter().sum();
    let reg = m
        .checked_sub(sum_right - right.len() + sum_left)
        .ok_or_else(|| Error::Internal("inconsistent minimal indices".into()))?;
    if n != sum_right + sum_left - left.len() + reg {
        return Err(Error::Internal("inconsistent minimal indices".into()));
    }
    let n_right = right.len();
    let normal_rank = n - n_right;
    let mut eigen = EigenMap::new();
    let inf = jordan_sizes(&p.a, &p.b, n_right, reg);
    let inf_total: usize = inf.iter().sum();
    if !inf.is_empty() {
        eigen.insert(ProjPoint::Infinity, inf);
    }
    let finite_target = reg - inf_total;
    if finite_target > 0 {
        let candidates: Vec<Scalar> = match f {
            FieldSpec::Prime(q) if q <= 512 => field_elements(f)?
                .filter(|mu| point_matrix(p, mu).rank() < normal_rank)
                .collect(),
            FieldSpec::Prime(_) => {
                let d = finite_divisor_product(p, normal_rank, finite_target);
                field_elements(f)?.filter(|mu| d.eval(mu).is_zero()).collect()
            }
            FieldSpec::Rationals => {
                let d = finite_divisor_product(p, normal_rank, finite_target);
                rational_roots(&d)
            }
        };
        let mut found = 0;
        for mu in candidates {
            let sizes = jordan_sizes(&point_matrix(p, &mu), &p.a, n_right, reg);
            found += sizes.iter().sum::<usize>();
            if !sizes.is_empty() {
                eigen.insert(ProjPoint::Finite(mu), sizes);
            }
        }
        if found < finite_target {
            let mut d = finite_divisor_product(p, normal_rank, finite_target);
            for (pt, sizes) in &eigen {
                if let ProjPoint::Finite(mu) = pt {
                    for _ in 0..sizes.iter().sum::<usize>() {
                        d = d.exact_div(&Poly::linear_root(mu));
                    }
                }
            }
            return Err(Error::NonSplitSpectrum(d));
        }
    }
    let data = KroneckerData::new(f, right, left, eigen)?;
    if (data.m, data.n) != (m, n) {
        return Err(Error::Internal("size accounting failed".into()));
    }
    Ok(data)
}

/// Canonical data together with a witness `(P, Q)` such that
/// `reconstruct_pencil(data) = (P·A·Q, P·B·Q)`.
pub fn kronecker_decompose(p: &Pencil) -> Result<(KroneckerData, EquivWitness2)> {
    kronecker_decompose_with(p, &SearchConfig::default())
}

pub fn kronecker_decompose_with(
    p: &Pencil,
    cfg: &SearchConfig,
) -> Result<(KroneckerData, EquivWitness2)> {
    let data = kronecker_data(p)?;
    let canon = reconstruct_pencil(&data);
    let (m, n) = p.shape();
    let f = p.field();
    if &canon == p {
        return Ok((data, EquivWitness2::identity(f, m, n)));
    }
    let w = pencil_intertwine(p, &canon, cfg)?
        .ok_or_else(|| Error::Internal("no invertible intertwiner to the canonical form".into()))?;
    Ok((data, w))
}

/// Searches `(P, Q)` with `P·A·Q = A'`, `P·B·Q = B'`; `None` if certified
/// impossible. Over ℚ the search is repeated with fresh seeds since the
/// caller knows an isomorphism exists.
fn pencil_intertwine(x: &Pencil, y: &Pencil, cfg: &SearchConfig) -> Result<Option<EquivWitness2>> {
    let (m, n) = x.shape();
    let f = x.field();
    let rx = LinearRep::tuple(f, &[x.a.clone(), x.b.clone()], m, n)?;
    let ry = LinearRep::tuple(f, &[y.a.clone(), y.b.clone()], m, n)?;
    let attempts = if f.is_finite() { 1 } else { 16 };
    for k in 0..attempts {
        let c = SearchConfig {
            trials: cfg.trials.max(64),
            bound: if f.is_finite() { cfg.bound } else { 8 },
            seed: cfg.seed.wrapping_add(k),
            ..*cfg
        };
        match rep_iso(&rx, &ry, &c)? {
            SearchOutcome::Found(s) => {
                let w = EquivWitness2 {
                    p: s[1].clone(),
                    q: s[0].invert()?,
                };
                if &x.transform(&w) != y {
                    return Err(Error::Internal("pencil witness failed verification".into()));
                }
                return Ok(Some(w));
            }
            SearchOutcome::CertifiedNo => return Ok(None),
            SearchOutcome::Unknown { .. } => {}
        }
    }
    Err(Error::Internal("invertible intertwiner not found by sampling".into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PencilEquiv {
    Equivalent(EquivWitness2),
    NotEquivalent,
}

/// Decides simultaneous equivalence of two pencils.
pub fn pencil_equiv(x: &Pencil, y: &Pencil) -> Result<PencilEquiv> {
    pencil_equiv_with(x, y, &SearchConfig::default())
}

pub fn pencil_equiv_with(x: &Pencil, y: &Pencil, cfg: &SearchConfig) -> Result<PencilEquiv> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch("pencils of different shapes".into()));
    }
    if x.field() != y.field() {
        return Err(Error::FieldMismatch);
    }
    let (m, n) = x.shape();
    if x == y {
        return Ok(PencilEquiv::Equivalent(EquivWitness2::identity(x.field(), m, n)));
    }
    match (kronecker_decompose_with(x, cfg), kronecker_decompose_with(y, cfg)) {
        (Ok((dx, wx)), Ok((dy, wy))) => {
            if dx != dy {
                return Ok(PencilEquiv::NotEquivalent);
            }
            let w = EquivWitness2 {
                p: wy.p.invert()?.mul(&wx.p),
                q: wx.q.mul(&wy.q.invert()?),
            };
            if &x.transform(&w) != y {
                return Err(Error::Internal("composed pencil witness failed verification".into()));
            }
            Ok(PencilEquiv::Equivalent(w))
        }
        (Err(Error::NonSplitSpectrum(e)), _) | (_, Err(Error::NonSplitSpectrum(e))) => {
            if !x.field().is_finite() {
                return Err(Error::NonSplitSpectrum(e));
            }
            Ok(match pencil_intertwine(x, y, cfg)? {
                Some(w) => PencilEquiv::Equivalent(w),
                None => PencilEquiv::NotEquivalent,
            })
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::random_invertible;
    use crate::oracle::gl_enumerate;
    use proptest::prelude::*;

    fn q() -> FieldSpec {
        FieldSpec::Rationals
    }

    #[test]
    fn canonical_input_gets_identity_witness() {
        let f = q();
        let p = Pencil::new(Mat::identity(f, 2), jordan_block(2, &f.zero())).unwrap();
        let (d, w) = kronecker_decompose(&p).unwrap();
        assert_eq!(d.to_string(), "right{} left{} eigen{0:{2}}");
        assert_eq!(w, EquivWitness2::identity(f, 2, 2));
    }

    #[test]
    fn zero_by_one_pencil() {
        let f = FieldSpec::Prime(3);
        let p = Pencil::new(Mat::zeros(f, 0, 1), Mat::zeros(f, 0, 1)).unwrap();
        let (d, _) = kronecker_decompose(&p).unwrap();
        assert_eq!(d.right, vec![1]);
        assert!(d.left.is_empty() && d.eigen.is_empty());
    }

    #[test]
    fn swapped_row_pencil_is_f2_g2() {
        let f = q();
        let p = Pencil::new(Mat::from_ints(f, 1, 2, &[0, 1]), Mat::from_ints(f, 1, 2, &[1, 0])).unwrap();
        let (d, w) = kronecker_decompose(&p).unwrap();
        assert_eq!(d.right, vec![2]);
        let c = reconstruct_pencil(&d);
        assert_eq!(c.a, Mat::from_ints(f, 1, 2, &[1, 0]));
        assert_eq!(c.b, Mat::from_ints(f, 1, 2, &[0, 1]));
        assert_eq!(p.transform(&w), c);
    }

    #[test]
    fn reconstruct_examples() {
        let f = FieldSpec::Prime(5);
        let d = KroneckerData::new(f, vec![1], vec![], EigenMap::new()).unwrap();
        let p = reconstruct_pencil(&d);
        assert_eq!(p.shape(), (0, 1));
        let lam = f.int(3);
        let mut e = EigenMap::new();
        e.insert(ProjPoint::Finite(lam.clone()), vec![3]);
        let p = reconstruct_pencil(&KroneckerData::new(f, vec![], vec![], e).unwrap());
        assert_eq!(p.a, Mat::identity(f, 3));
        assert_eq!(p.b, Mat::from_ints(f, 3, 3, &[3, 0, 0, 1, 3, 0, 0, 1, 3]));
    }

    #[test]
    fn left_and_infinite_blocks_round_trip() {
        let f = q();
        let mut e = EigenMap::new();
        e.insert(ProjPoint::Infinity, vec![2]);
        e.insert(ProjPoint::Finite(f.ratio(-1, 2).unwrap()), vec![1, 2]);
        let d = KroneckerData::new(f, vec![1, 3], vec![2, 1], e).unwrap();
        let p = reconstruct_pencil(&d);
        assert_eq!(kronecker_data(&p).unwrap(), d);
    }

    #[test]
    fn distinct_scalars_are_inequivalent() {
        let f = FieldSpec::Prime(7);
        let x = Pencil::new(Mat::identity(f, 1), Mat::from_ints(f, 1, 1, &[2])).unwrap();
        let y = Pencil::new(Mat::identity(f, 1), Mat::from_ints(f, 1, 1, &[3])).unwrap();
        assert_eq!(pencil_equiv(&x, &y).unwrap(), PencilEquiv::NotEquivalent);
        match pencil_equiv(&x, &x).unwrap() {
            PencilEquiv::Equivalent(w) => assert_eq!(w, EquivWitness2::identity(f, 1, 1)),
            _ => panic!(),
        }
    }

    #[test]
    fn transformed_copy_is_equivalent_gf5() {
        let f = FieldSpec::Prime(5);
        let mut rng = SplitMix64::seed_from_u64(9);
        for _ in 0..20 {
            let x = Pencil::new(random_mat(f, 3, 4, &mut rng, 0), random_mat(f, 3, 4, &mut rng, 0)).unwrap();
            let g = EquivWitness2 {
                p: random_invertible(f, 3, &mut rng, 0),
                q: random_invertible(f, 4, &mut rng, 0),
            };
            let y = x.transform(&g);
            match pencil_equiv(&x, &y).unwrap() {
                PencilEquiv::Equivalent(w) => assert_eq!(x.transform(&w), y),
                PencilEquiv::NotEquivalent => panic!("transformed copy reported inequivalent"),
            }
        }
    }

    #[test]
    fn non_split_spectrum_over_q() {
        let f = q();
        // B = companion of x^2 + 1
        let p = Pencil::new(Mat::identity(f, 2), Mat::from_ints(f, 2, 2, &[0, -1, 1, 0])).unwrap();
        match kronecker_data(&p) {
            Err(Error::NonSplitSpectrum(poly)) => {
                assert_eq!(poly, Poly::new(f, vec![f.one(), f.zero(), f.one()]))
            }
            other => panic!("expected NonSplitSpectrum, got {other:?}"),
        }
    }

    #[test]
    fn non_split_over_gf2_falls_back_to_oracle() {
        let f = FieldSpec::Prime(2);
        // x^2 + x + 1 is irreducible over GF(2)
        let c = Mat::from_ints(f, 2, 2, &[0, 1, 1, 1]);
        let x = Pencil::new(Mat::identity(f, 2), c.clone()).unwrap();
        let s = Mat::from_ints(f, 2, 2, &[1, 1, 0, 1]);
        let y = Pencil::new(Mat::identity(f, 2), s.invert().unwrap().mul(&c).mul(&s)).unwrap();
        assert!(matches!(kronecker_data(&x), Err(Error::NonSplitSpectrum(_))));
        assert!(matches!(pencil_equiv(&x, &y).unwrap(), PencilEquiv::Equivalent(_)));
        let z = Pencil::new(Mat::identity(f, 2), Mat::identity(f, 2)).unwrap();
        assert_eq!(pencil_equiv(&x, &z).unwrap(), PencilEquiv::NotEquivalent);
    }

    /// Orbit of a pencil under GL(m) × GL(n), by direct enumeration.
    fn orbit(p: &Pencil, gm: &[Mat], gn: &[Mat]) -> Vec<Pencil> {
        let mut out: Vec<Pencil> = Vec::new();
        for a in gm {
            for b in gn {
                let t = p.transform(&EquivWitness2 { p: a.clone(), q: b.clone() });
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    #[test]
    fn data_separates_orbits_of_1x2_pencils_gf3() {
        let f = FieldSpec::Prime(3);
        let g1 = gl_enumerate(1, f, 1 << 20).unwrap();
        let g2 = gl_enumerate(2, f, 1 << 20).unwrap();
        let all: Vec<Pencil> = (0..81)
            .map(|c| {
                let d: Vec<i64> = (0..4).map(|i| (c / 3i64.pow(i)) % 3).collect();
                Pencil::new(Mat::from_ints(f, 1, 2, &d[..2]), Mat::from_ints(f, 1, 2, &d[2..])).unwrap()
            })
            .collect();
        let data: Vec<KroneckerData> = all.iter().map(|p| kronecker_data(p).unwrap()).collect();
        for (i, p) in all.iter().enumerate() {
            let orb = orbit(p, &g1, &g2);
            for (j, r) in all.iter().enumerate() {
                assert_eq!(orb.contains(r), data[i] == data[j], "{p:?} vs {r:?}");
            }
        }
    }

    #[test]
    fn rational_roots_found() {
        let f = q();
        let p = Poly::linear_root(&f.ratio(3, 2).unwrap())
            .mul(&Poly::linear_root(&f.int(-4)))
            .mul(&Poly::linear_root(&f.int(0)))
            .mul(&Poly::new(f, vec![f.int(2), f.zero(), f.one()]));
        let mut r = rational_roots(&p);
        r.sort_by(|a, b| a.canonical_cmp(b));
        let shown: Vec<String> = r.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["-4", "0", "3/2"]);
    }

    fn arb_data(field: FieldSpec) -> impl Strategy<Value = KroneckerData> {
        let pts = match field {
            FieldSpec::Prime(p) => p as i64,
            FieldSpec::Rationals => 5,
        };
        (
            proptest::collection::vec(1usize..3, 0..2),
            proptest::collection::vec(1usize..3, 0..2),
            proptest::collection::vec((0..pts + 1, 1usize..3), 0..3),
        )
            .prop_map(move |(r, l, e)| {
                let mut eigen = EigenMap::new();
                for (pt, size) in e {
                    let key = if pt == pts {
                        ProjPoint::Infinity
                    } else {
                        ProjPoint::Finite(field.int(pt - pts / 2))
                    };
                    eigen.entry(key).or_default().push(size);
                }
                KroneckerData::new(field, r, l, eigen).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn decomposition_recovers_scrambled_data(d in arb_data(FieldSpec::Prime(5)), seed in 0u64..1000) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let c = reconstruct_pencil(&d);
            let f = d.field;
            let g = EquivWitness2 { p: random_invertible(f, d.m, &mut rng, 0), q: random_invertible(f, d.n, &mut rng, 0) };
            let x = c.transform(&g);
            let (d2, w) = kronecker_decompose(&x).unwrap();
            prop_assert_eq!(&d2, &d);
            prop_assert_eq!(x.transform(&w), c);
        }

        #[test]
        fn krull_schmidt_union(d1 in arb_data(FieldSpec::Rationals), d2 in arb_data(FieldSpec::Rationals), seed in 0u64..1000) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let f = FieldSpec::Rationals;
            let scramble = |p: Pencil, rng: &mut SplitMix64| {
                let (m, n) = p.shape();
                p.transform(&EquivWitness2 { p: random_invertible(f, m, rng, 2), q: random_invertible(f, n, rng, 2) })
            };
            let x = scramble(reconstruct_pencil(&d1), &mut rng);
            let y = scramble(reconstruct_pencil(&d2), &mut rng);
            let sum = kronecker_data(&x.direct_sum(&y)).unwrap();
            prop_assert_eq!(sum, d1.union(&d2));
        }
    }
}
