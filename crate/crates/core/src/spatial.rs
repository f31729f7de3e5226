//! Spatial matrices (three-index arrays) under one invertible change of
//! basis per axis, their invariants, regular parts, and the complete
//! classification of `m × n × 2` spatial matrices.
//!
//! Indices are 0-based in code. The transformation convention is the
//! contravariant one: `a'_{i'j'k'} = Σ a_{ijk} r_{ii'} s_{jj'} t_{kk'}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::exactalg::{field_elements, greedy_row_basis, FieldSpec, Mat, Scalar};
use crate::oracle::{brute_force_spatial_equiv, mix_slices, SearchConfig, SearchOutcome};
use crate::pencil::{eigen_descriptor, kronecker_data, kronecker_decompose_with, EigenMap, Pencil, ProjPoint};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpatialMatrix {
    field: FieldSpec,
    m: usize,
    n: usize,
    q: usize,
    data: Vec<Scalar>,
}

impl SpatialMatrix {
    pub fn zeros(field: FieldSpec, m: usize, n: usize, q: usize) -> Self {
        SpatialMatrix {
            field,
            m,
            n,
            q,
            data: vec![field.zero(); m * n * q],
        }
    }

    pub fn from_fn(
        field: FieldSpec,
        (m, n, q): (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> Scalar,
    ) -> Self {
        let mut data = Vec::with_capacity(m * n * q);
        for i in 0..m {
            for j in 0..n {
                for k in 0..q {
                    data.push(f(i, j, k));
                }
            }
        }
        SpatialMatrix { field, m, n, q, data }
    }

    /// Builds from the axis-3 slices `A_k = [a_{ijk}]_{ij}`, all `m × n`.
    pub fn from_slices(field: FieldSpec, m: usize, n: usize, slices: &[Mat]) -> Result<Self> {
        for s in slices {
            if s.shape() != (m, n) {
                return Err(Error::ShapeMismatch(format!(
                    "slice {:?}, expected {:?}",
                    s.shape(),
                    (m, n)
                )));
            }
            if s.field() != field {
                return Err(Error::FieldMismatch);
            }
        }
        Ok(Self::from_fn(field, (m, n, slices.len()), |i, j, k| slices[k].get(i, j).clone()))
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.q)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Scalar {
        &self.data[(i * self.n + j) * self.q + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, s: Scalar) {
        let (n, q) = (self.n, self.q);
        self.data[(i * n + j) * q + k] = s;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// The sub-array on index ranges `[0, m') × [0, n') × [0, q')`.
    pub fn corner(&self, m: usize, n: usize, q: usize) -> SpatialMatrix {
        Self::from_fn(self.field, (m, n, q), |i, j, k| self.get(i, j, k).clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RankTriple {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

impl fmt::Display for RankTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.r1, self.r2, self.r3)
    }
}

/// `(R, S, T)`, indexed (old, new).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpatialWitness {
    pub r: Mat,
    pub s: Mat,
    pub t: Mat,
}

impl SpatialWitness {
    pub fn identity(field: FieldSpec, (m, n, q): (usize, usize, usize)) -> Self {
        SpatialWitness {
            r: Mat::identity(field, m),
            s: Mat::identity(field, n),
            t: Mat::identity(field, q),
        }
    }

    /// `self` followed by `o`.
    pub fn then(&self, o: &SpatialWitness) -> SpatialWitness {
        SpatialWitness {
            r: self.r.mul(&o.r),
            s: self.s.mul(&o.s),
            t: self.t.mul(&o.t),
        }
    }

    pub fn inverse(&self) -> Result<SpatialWitness> {
        Ok(SpatialWitness {
            r: self.r.invert()?,
            s: self.s.invert()?,
            t: self.t.invert()?,
        })
    }
}

/// Contracts axis `axis` (0, 1, 2) of `a` with `c`: new index `x'` gets
/// `Σ_x a[..x..] c[x][x']`.
fn contract(a: &SpatialMatrix, axis: usize, c: &Mat) -> SpatialMatrix {
    let (m, n, q) = a.shape();
    let mut dims = [m, n, q];
    dims[axis] = c.cols();
    let f = a.field;
    SpatialMatrix::from_fn(f, (dims[0], dims[1], dims[2]), |i, j, k| {
        let mut idx = [i, j, k];
        let new = idx[axis];
        let mut acc = f.zero();
        for x in 0..c.rows() {
            idx[axis] = x;
            let v = a.get(idx[0], idx[1], idx[2]);
            if !v.is_zero() {
                let cx = c.get(x, new);
                if !cx.is_zero() {
                    acc = acc + &(v * cx);
                }
            }
        }
        acc
    })
}

pub fn transform_spatial(a: &SpatialMatrix, w: &SpatialWitness) -> Result<SpatialMatrix> {
    let (m, n, q) = a.shape();
    for (mat, size, name) in [(&w.r, m, "R"), (&w.s, n, "S"), (&w.t, q, "T")] {
        if mat.shape() != (size, size) {
            return Err(Error::ShapeMismatch(format!("{name} is {:?}, expected {size}x{size}", mat.shape())));
        }
        if mat.field() != a.field {
            return Err(Error::FieldMismatch);
        }
        if !mat.is_invertible() {
            return Err(Error::NotInvertible);
        }
    }
    Ok(contract(&contract(&contract(a, 0, &w.r), 1, &w.s), 2, &w.t))
}

/// Axis 1 (`1..=3`): `m` matrices `[a_{ijk}]_{jk}`; axis 2: `n` matrices
/// `[a_{ijk}]_{ik}`; axis 3: `q` matrices `[a_{ijk}]_{ij}`.
pub fn slice_tuple(a: &SpatialMatrix, axis: usize) -> Vec<Mat> {
    let (m, n, q) = a.shape();
    let f = a.field;
    match axis {
        1 => (0..m).map(|i| Mat::from_fn(f, n, q, |j, k| a.get(i, j, k).clone())).collect(),
        2 => (0..n).map(|j| Mat::from_fn(f, m, q, |i, k| a.get(i, j, k).clone())).collect(),
        3 => (0..q).map(|k| Mat::from_fn(f, m, n, |i, j| a.get(i, j, k).clone())).collect(),
        _ => panic!("axis must be 1, 2 or 3"),
    }
}

fn slice_rank(a: &SpatialMatrix, axis: usize) -> usize {
    let sl = slice_tuple(a, axis);
    let Some(first) = sl.first() else { return 0 };
    let width = first.rows() * first.cols();
    let vecs: Vec<Vec<Scalar>> = sl.iter().map(Mat::flatten).collect();
    Mat::rank_of_vectors(a.field, width, &vecs)
}

pub fn rank_triple(a: &SpatialMatrix) -> RankTriple {
    RankTriple {
        r1: slice_rank(a, 1),
        r2: slice_rank(a, 2),
        r3: slice_rank(a, 3),
    }
}

/// Change of basis along one axis that keeps a greedy basis of the slices
/// first and turns every other slice into zero.
fn axis_reduction(a: &SpatialMatrix, axis: usize) -> (Mat, usize) {
    let sl = slice_tuple(a, axis);
    let f = a.field;
    let count = sl.len();
    let width = sl.first().map_or(0, |s| s.rows() * s.cols());
    let vecs: Vec<Vec<Scalar>> = sl.iter().map(Mat::flatten).collect();
    let (chosen, coeffs) = greedy_row_basis(f, width, &vecs);
    let mut c = Mat::zeros(f, count, count);
    let mut col = 0;
    for &i in &chosen {
        c.set(i, col, f.one());
        col += 1;
    }
    for i in (0..count).filter(|i| !chosen.contains(i)) {
        c.set(i, col, f.one());
        for (t, &ch) in chosen.iter().enumerate() {
            c.set(ch, col, -&coeffs[i][t]);
        }
        col += 1;
    }
    (c, chosen.len())
}

/// Reduces `A` to `A' ⊕ 𝕆` with `A'` of shape `rank_triple(A)`, axis by
/// axis in the order 1, 2, 3.
pub fn regular_part(a: &SpatialMatrix) -> (SpatialMatrix, SpatialWitness) {
    let (r, r1) = axis_reduction(a, 1);
    let a1 = contract(a, 0, &r);
    let (s, r2) = axis_reduction(&a1, 2);
    let a2 = contract(&a1, 1, &s);
    let (t, r3) = axis_reduction(&a2, 3);
    let a3 = contract(&a2, 2, &t);
    (a3.corner(r1, r2, r3), SpatialWitness { r, s, t })
}

pub fn direct_sum_spatial(a: &SpatialMatrix, b: &SpatialMatrix) -> Result<SpatialMatrix> {
    if a.field != b.field {
        return Err(Error::FieldMismatch);
    }
    let (m1, n1, q1) = a.shape();
    let (m2, n2, q2) = b.shape();
    let f = a.field;
    Ok(SpatialMatrix::from_fn(f, (m1 + m2, n1 + n2, q1 + q2), |i, j, k| {
        if i < m1 && j < n1 && k < q1 {
            a.get(i, j, k).clone()
        } else if i >= m1 && j >= n1 && k >= q1 {
            b.get(i - m1, j - n1, k - q1).clone()
        } else {
            f.zero()
        }
    }))
}

// ---------------------------------------------------------------------------
// Linear-fractional maps of the projective line.

/// `λ ↦ (a + bλ)/(c + dλ)`; realized on slice pairs by `T = [[c,a],[d,b]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoebiusMap {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
}

impl MoebiusMap {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<Self> {
        if (&(&a * &d) - &(&b * &c)).is_zero() {
            return Err(Error::NotInvertible);
        }
        Ok(MoebiusMap { a, b, c, d })
    }

    pub fn identity(f: FieldSpec) -> Self {
        MoebiusMap {
            a: f.zero(),
            b: f.one(),
            c: f.one(),
            d: f.zero(),
        }
    }

    /// Matrix acting on homogeneous coordinates `(x, y)` with `λ = x/y`.
    fn hom(&self) -> [[Scalar; 2]; 2] {
        [[self.b.clone(), self.a.clone()], [self.d.clone(), self.c.clone()]]
    }

    fn from_hom(h: [[Scalar; 2]; 2]) -> Self {
        let [[b, a], [d, c]] = h;
        MoebiusMap { a, b, c, d }
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        let (x, y) = homog(self.a.field(), p);
        let h = self.hom();
        let nx = &(&h[0][0] * &x) + &(&h[0][1] * &y);
        let ny = &(&h[1][0] * &x) + &(&h[1][1] * &y);
        dehomog(&nx, &ny)
    }

    /// `self` after `o`.
    pub fn compose(&self, o: &MoebiusMap) -> MoebiusMap {
        let (x, y) = (self.hom(), o.hom());
        let e = |i: usize, j: usize| &(&x[i][0] * &y[0][j]) + &(&x[i][1] * &y[1][j]);
        MoebiusMap::from_hom([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn inverse(&self) -> MoebiusMap {
        let [[p, q], [r, s]] = self.hom();
        MoebiusMap::from_hom([[s, -&q], [-&r, p]])
    }

    /// The slice-mixing matrix `T = [[c,a],[d,b]]`.
    pub fn slice_matrix(&self) -> Mat {
        Mat::from_rows(
            self.a.field(),
            vec![vec![self.c.clone(), self.a.clone()], vec![self.d.clone(), self.b.clone()]],
        )
        .expect("2x2")
    }

    pub fn apply_eigen(&self, e: &EigenMap) -> EigenMap {
        e.iter().map(|(p, v)| (self.apply(p), v.clone())).collect()
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ ↦ ({} + {}λ)/({} + {}λ)", self.a, self.b, self.c, self.d)
    }
}

fn homog(f: FieldSpec, p: &ProjPoint) -> (Scalar, Scalar) {
    match p {
        ProjPoint::Finite(l) => (l.clone(), f.one()),
        ProjPoint::Infinity => (f.one(), f.zero()),
    }
}

fn dehomog(x: &Scalar, y: &Scalar) -> ProjPoint {
    if y.is_zero() {
        ProjPoint::Infinity
    } else {
        ProjPoint::Finite(x.div(y).expect("nonzero"))
    }
}

/// The unique map sending `p1, p2, p3` to `0, 1, ∞`.
fn to_zero_one_inf(f: FieldSpec, p1: &ProjPoint, p2: &ProjPoint, p3: &ProjPoint) -> MoebiusMap {
    let v1 = homog(f, p1);
    let v2 = homog(f, p2);
    let v3 = homog(f, p3);
    // v2 = α v1 + β v3
    let det = &(&v1.0 * &v3.1) - &(&v3.0 * &v1.1);
    let alpha = (&(&v2.0 * &v3.1) - &(&v3.0 * &v2.1)).div(&det).expect("distinct points");
    let beta = (&(&v1.0 * &v2.1) - &(&v2.0 * &v1.1)).div(&det).expect("distinct points");
    // inverse map has columns β v3 and α v1
    let inv = MoebiusMap::from_hom([
        [&beta * &v3.0, &alpha * &v1.0],
        [&beta * &v3.1, &alpha * &v1.1],
    ]);
    inv.inverse()
}

/// A point of the projective line outside `avoid`, trying `∞, 0, 1, 2, …`.
fn spare_point(f: FieldSpec, avoid: &[&ProjPoint]) -> ProjPoint {
    std::iter::once(ProjPoint::Infinity)
        .chain((0..).map(|i| ProjPoint::Finite(f.int(i))))
        .find(|p| !avoid.contains(&p))
        .expect("projective line has at least three points")
}

fn eigen_key(e: &EigenMap) -> Vec<(ProjPoint, Vec<usize>)> {
    e.iter().map(|(p, v)| (p.clone(), v.clone())).collect()
}

/// The map bringing `e` to its canonical orbit representative.
fn canonical_moebius(f: FieldSpec, e: &EigenMap) -> MoebiusMap {
    let pts: Vec<(&ProjPoint, &Vec<usize>)> = e.iter().collect();
    let candidates: Vec<MoebiusMap> = match pts.len() {
        0 => vec![MoebiusMap::identity(f)],
        1 => {
            let p = pts[0].0;
            vec![to_zero_one_inf(f, p, &spare_point(f, &[p]), &spare_point(f, &[p, &spare_point(f, &[p])]))]
        }
        2 => {
            let mut order = pts.clone();
            order.sort_by(|x, y| y.1.cmp(x.1));
            let mut out = Vec::new();
            let tie = order[0].1 == order[1].1;
            for (x, y) in [(order[0].0, order[1].0), (order[1].0, order[0].0)]
                .into_iter()
                .take(if tie { 2 } else { 1 })
            {
                out.push(to_zero_one_inf(f, x, y, &spare_point(f, &[x, y])));
            }
            out
        }
        k => {
            let mut out = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    for l in 0..k {
                        if i != j && j != l && i != l {
                            out.push(to_zero_one_inf(f, pts[i].0, pts[j].0, pts[l].0));
                        }
                    }
                }
            }
            out
        }
    };
    let best = candidates
        .into_iter()
        .min_by(|x, y| eigen_key(&x.apply_eigen(e)).cmp(&eigen_key(&y.apply_eigen(e))))
        .expect("nonempty");
    let id = MoebiusMap::identity(f);
    if best.apply_eigen(e) == *e {
        id
    } else {
        best
    }
}

/// A Möbius map carrying the eigen data `e1` onto `e2`, if one exists.
pub fn moebius_match(f: FieldSpec, e1: &EigenMap, e2: &EigenMap) -> Option<MoebiusMap> {
    if e1.len() != e2.len() {
        return None;
    }
    let mut s1: Vec<&Vec<usize>> = e1.values().collect();
    let mut s2: Vec<&Vec<usize>> = e2.values().collect();
    s1.sort();
    s2.sort();
    if s1 != s2 {
        return None;
    }
    let p1: Vec<&ProjPoint> = e1.keys().collect();
    let p2: Vec<&ProjPoint> = e2.keys().collect();
    let check = |m: MoebiusMap| (m.apply_eigen(e1) == *e2).then_some(m);
    match p1.len() {
        0 => Some(MoebiusMap::identity(f)),
        1 | 2 => {
            let orders: &[[usize; 2]] = if p1.len() == 1 { &[[0, 0]] } else { &[[0, 1], [1, 0]] };
            orders.iter().find_map(|ord| {
                let mut src: Vec<ProjPoint> = p1.iter().map(|&p| p.clone()).collect();
                let mut dst: Vec<ProjPoint> = ord[..p1.len()].iter().map(|&i| p2[i].clone()).collect();
                while src.len() < 3 {
                    src.push(spare_point(f, &src.iter().collect::<Vec<_>>()));
                    dst.push(spare_point(f, &dst.iter().collect::<Vec<_>>()));
                }
                let a = to_zero_one_inf(f, &src[0], &src[1], &src[2]);
                let b = to_zero_one_inf(f, &dst[0], &dst[1], &dst[2]);
                check(b.inverse().compose(&a))
            })
        }
        k => {
            let a = to_zero_one_inf(f, p1[0], p1[1], p1[2]);
            for i in 0..k {
                for j in 0..k {
                    for l in 0..k {
                        if i == j || j == l || i == l {
                            continue;
                        }
                        let b = to_zero_one_inf(f, p2[i], p2[j], p2[l]);
                        if let Some(m) = check(b.inverse().compose(&a)) {
                            return Some(m);
                        }
                    }
                }
            }
            None
        }
    }
}

// ---------------------------------------------------------------------------

/// Complete invariant of an `m × n × 2` spatial matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spatial2Canon {
    pub m: usize,
    pub n: usize,
    pub right_indices: Vec<usize>,
    pub left_indices: Vec<usize>,
    pub eigen_canonical: EigenMap,
}

impl fmt::Display for Spatial2Canon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |v: &[usize]| {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", parts.join(","))
        };
        write!(
            f,
            "right{} left{} {}",
            b(&self.right_indices),
            b(&self.left_indices),
            eigen_descriptor(&self.eigen_canonical)
        )
    }
}

fn require_q2(a: &SpatialMatrix) -> Result<()> {
    if a.q != 2 {
        return Err(Error::ShapeMismatch(format!("expected q = 2, got q = {}", a.q)));
    }
    Ok(())
}

pub fn canon_spatial2(a: &SpatialMatrix) -> Result<(Spatial2Canon, SpatialWitness)> {
    canon_spatial2_with(a, &SearchConfig::default())
}

pub fn canon_spatial2_with(a: &SpatialMatrix, cfg: &SearchConfig) -> Result<(Spatial2Canon, SpatialWitness)> {
    require_q2(a)?;
    let f = a.field;
    let sl = slice_tuple(a, 3);
    let raw = kronecker_data(&Pencil::new(sl[0].clone(), sl[1].clone())?)?;
    let mob = canonical_moebius(f, &raw.eigen);
    let t = mob.slice_matrix();
    let mixed = mix_slices(&sl, &t);
    let (data, pw) = kronecker_decompose_with(&Pencil::new(mixed[0].clone(), mixed[1].clone())?, cfg)?;
    if data.eigen != mob.apply_eigen(&raw.eigen) || data.right != raw.right || data.left != raw.left {
        return Err(Error::Internal("slice mixing did not act on eigenvalues as expected".into()));
    }
    let canon = Spatial2Canon {
        m: a.m,
        n: a.n,
        right_indices: data.right.clone(),
        left_indices: data.left.clone(),
        eigen_canonical: data.eigen.clone(),
    };
    let w = SpatialWitness {
        r: pw.p.transpose(),
        s: pw.q,
        t,
    };
    let target = reconstruct_spatial2(f, &canon);
    if transform_spatial(a, &w)? != target {
        return Err(Error::Internal("spatial canonical witness failed verification".into()));
    }
    Ok((canon, w))
}

/// Block-diagonal spatial matrix whose two slices form the canonical pencil.
pub fn reconstruct_spatial2(f: FieldSpec, c: &Spatial2Canon) -> SpatialMatrix {
    let d = crate::pencil::KroneckerData::new(
        f,
        c.right_indices.clone(),
        c.left_indices.clone(),
        c.eigen_canonical.clone(),
    )
    .expect("valid canon");
    let p = crate::pencil::reconstruct_pencil(&d);
    SpatialMatrix::from_slices(f, c.m, c.n, &[p.a, p.b]).expect("shapes agree")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpatialEquiv {
    Equivalent(SpatialWitness),
    NotEquivalent,
}

pub fn spatial2_equiv(a: &SpatialMatrix, b: &SpatialMatrix) -> Result<SpatialEquiv> {
    spatial2_equiv_with(a, b, &SearchConfig::default())
}

pub fn spatial2_equiv_with(a: &SpatialMatrix, b: &SpatialMatrix, cfg: &SearchConfig) -> Result<SpatialEquiv> {
    require_q2(a)?;
    require_q2(b)?;
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("spatial matrices of different shapes".into()));
    }
    if a.field != b.field {
        return Err(Error::FieldMismatch);
    }
    match (canon_spatial2_with(a, cfg), canon_spatial2_with(b, cfg)) {
        (Ok((ca, wa)), Ok((cb, wb))) => {
            if ca != cb {
                return Ok(SpatialEquiv::NotEquivalent);
            }
            let w = wa.then(&wb.inverse()?);
            if &transform_spatial(a, &w)? != b {
                return Err(Error::Internal("composed spatial witness failed verification".into()));
            }
            Ok(SpatialEquiv::Equivalent(w))
        }
        (Err(Error::NonSplitSpectrum(e)), _) | (_, Err(Error::NonSplitSpectrum(e))) => {
            if !a.field.is_finite() {
                return Err(Error::NonSplitSpectrum(e));
            }
            match brute_force_spatial_equiv(a, b, cfg)? {
                SearchOutcome::Found(w) => Ok(SpatialEquiv::Equivalent(w)),
                SearchOutcome::CertifiedNo => Ok(SpatialEquiv::NotEquivalent),
                SearchOutcome::Unknown { .. } => Err(Error::Internal("finite-field search was not decisive".into())),
            }
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// All points of the projective line over a finite field.
pub fn projective_line(f: FieldSpec) -> Result<Vec<ProjPoint>> {
    let mut v: Vec<ProjPoint> = field_elements(f)?.map(ProjPoint::Finite).collect();
    v.push(ProjPoint::Infinity);
    Ok(v)
}

/// The two 3×3×2 spatial matrices with slices `(diag(1,0,1), diag(0,1,0))`
/// and `(diag(1,0,1), diag(0,1,1))`: equal rank triples, inequivalent.
pub fn rank_triple_counterexample(f: FieldSpec) -> (SpatialMatrix, SpatialMatrix) {
    let d = |x: [i64; 3]| Mat::from_ints(f, 3, 3, &[x[0], 0, 0, 0, x[1], 0, 0, 0, x[2]]);
    (
        SpatialMatrix::from_slices(f, 3, 3, &[d([1, 0, 1]), d([0, 1, 0])]).unwrap(),
        SpatialMatrix::from_slices(f, 3, 3, &[d([1, 0, 1]), d([0, 1, 1])]).unwrap(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{random_invertible, random_scalar};
    use crate::pencil::jordan_block;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    fn random_spatial(f: FieldSpec, dims: (usize, usize, usize), rng: &mut SplitMix64) -> SpatialMatrix {
        SpatialMatrix::from_fn(f, dims, |_, _, _| random_scalar(f, rng, 3))
    }

    fn random_witness(f: FieldSpec, (m, n, q): (usize, usize, usize), rng: &mut SplitMix64) -> SpatialWitness {
        SpatialWitness {
            r: random_invertible(f, m, rng, 2),
            s: random_invertible(f, n, rng, 2),
            t: random_invertible(f, q, rng, 2),
        }
    }

    #[test]
    fn transform_basics() {
        let f = FieldSpec::Prime(7);
        let mut rng = SplitMix64::seed_from_u64(1);
        let a = random_spatial(f, (2, 3, 2), &mut rng);
        assert_eq!(transform_spatial(&a, &SpatialWitness::identity(f, (2, 3, 2))).unwrap(), a);
        let mut w = SpatialWitness::identity(f, (2, 3, 2));
        w.t = Mat::scalar(2, &f.int(3));
        let scaled = transform_spatial(&a, &w).unwrap();
        assert!(a.data.iter().zip(&scaled.data).all(|(x, y)| &(x * &f.int(3)) == y));
        for _ in 0..50 {
            let w1 = random_witness(f, (2, 3, 2), &mut rng);
            let w2 = random_witness(f, (2, 3, 2), &mut rng);
            let lhs = transform_spatial(&transform_spatial(&a, &w1).unwrap(), &w2).unwrap();
            assert_eq!(lhs, transform_spatial(&a, &w1.then(&w2)).unwrap());
        }
    }

    #[test]
    fn transform_follows_old_new_indexing() {
        // R = [[1,1],[0,1]] (old,new) sends a_{0..} to both new rows.
        let f = FieldSpec::Rationals;
        let a = SpatialMatrix::from_fn(f, (2, 1, 1), |i, _, _| f.int(if i == 0 { 1 } else { 0 }));
        let mut w = SpatialWitness::identity(f, (2, 1, 1));
        w.r = Mat::from_ints(f, 2, 2, &[1, 1, 0, 1]);
        let b = transform_spatial(&a, &w).unwrap();
        assert_eq!((b.get(0, 0, 0).clone(), b.get(1, 0, 0).clone()), (f.one(), f.one()));
    }

    #[test]
    fn slices_and_ranks() {
        let f = FieldSpec::Prime(2);
        let z = SpatialMatrix::zeros(f, 2, 3, 4);
        let s = slice_tuple(&z, 3);
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| x.shape() == (2, 3) && x.is_zero()));
        assert_eq!(rank_triple(&z), RankTriple { r1: 0, r2: 0, r3: 0 });
        let (a, _) = rank_triple_counterexample(f);
        let s3 = slice_tuple(&a, 3);
        assert_eq!(s3[0], Mat::from_ints(f, 3, 3, &[1, 0, 0, 0, 0, 0, 0, 0, 1]));
        let s1 = slice_tuple(&a, 1);
        assert_eq!(s1.len(), 3);
        assert_eq!(s1[0], Mat::from_ints(f, 3, 2, &[1, 0, 0, 0, 0, 0]));
        assert_eq!(s1[1], Mat::from_ints(f, 3, 2, &[0, 0, 0, 1, 0, 0]));
        assert_eq!(rank_triple(&a), RankTriple { r1: 3, r2: 3, r3: 2 });
    }

    #[test]
    fn regular_part_examples() {
        let f = FieldSpec::Prime(3);
        let (rp, _) = regular_part(&SpatialMatrix::zeros(f, 2, 2, 2));
        assert_eq!(rp.shape(), (0, 0, 0));
        let (a, _) = rank_triple_counterexample(f);
        let padded = direct_sum_spatial(&a, &SpatialMatrix::zeros(f, 1, 2, 1)).unwrap();
        let (rp, w) = regular_part(&padded);
        assert_eq!(rp, a);
        assert_eq!(w, SpatialWitness::identity(f, (4, 5, 3)));
        let mut rng = SplitMix64::seed_from_u64(4);
        for _ in 0..30 {
            let x = random_spatial(f, (3, 2, 3), &mut rng);
            let (rp, w) = regular_part(&x);
            let t = rank_triple(&x);
            assert_eq!(rp.shape(), (t.r1, t.r2, t.r3));
            assert_eq!(rank_triple(&rp), t);
            let (m, n, q) = x.shape();
            let zero = SpatialMatrix::zeros(f, m - t.r1, n - t.r2, q - t.r3);
            assert_eq!(transform_spatial(&x, &w).unwrap(), direct_sum_spatial(&rp, &zero).unwrap());
        }
    }

    #[test]
    fn moebius_three_point_map() {
        let f = FieldSpec::Prime(5);
        let pts = [ProjPoint::Finite(f.int(2)), ProjPoint::Infinity, ProjPoint::Finite(f.int(4))];
        let m = to_zero_one_inf(f, &pts[0], &pts[1], &pts[2]);
        assert_eq!(m.apply(&pts[0]), ProjPoint::Finite(f.zero()));
        assert_eq!(m.apply(&pts[1]), ProjPoint::Finite(f.one()));
        assert_eq!(m.apply(&pts[2]), ProjPoint::Infinity);
    }

    #[test]
    fn moebius_match_examples() {
        let f = FieldSpec::Prime(7);
        let single = |p: ProjPoint, s: Vec<usize>| EigenMap::from([(p, s)]);
        let m = moebius_match(
            f,
            &single(ProjPoint::Finite(f.int(2)), vec![2]),
            &single(ProjPoint::Finite(f.int(5)), vec![2]),
        )
        .unwrap();
        assert_eq!(m.apply(&ProjPoint::Finite(f.int(2))), ProjPoint::Finite(f.int(5)));
        let (a, b) = rank_triple_counterexample(f);
        let ea = kronecker_data(&Pencil::new(slice_tuple(&a, 3)[0].clone(), slice_tuple(&a, 3)[1].clone()).unwrap())
            .unwrap()
            .eigen;
        let eb = kronecker_data(&Pencil::new(slice_tuple(&b, 3)[0].clone(), slice_tuple(&b, 3)[1].clone()).unwrap())
            .unwrap()
            .eigen;
        assert_eq!(eigen_descriptor(&ea), "eigen{0:{1,1}; inf:{1}}");
        assert_eq!(eigen_descriptor(&eb), "eigen{0:{1}; 1:{1}; inf:{1}}");
        assert!(moebius_match(f, &ea, &eb).is_none());
        // (1 + 2·1)/(3 + 1·1) = 3/4 = 6 over GF(7)
        let mm = MoebiusMap::new(f.int(1), f.int(2), f.int(3), f.int(1)).unwrap();
        let lam = ProjPoint::Finite(f.int(1));
        let img = mm.apply(&lam);
        let found = moebius_match(f, &single(lam.clone(), vec![1]), &single(img.clone(), vec![1])).unwrap();
        assert_eq!(found.apply(&lam), img);
    }

    #[test]
    fn canon_of_counterexample_pair() {
        let f = FieldSpec::Prime(2);
        let (a, b) = rank_triple_counterexample(f);
        let (ca, _) = canon_spatial2(&a).unwrap();
        let (cb, _) = canon_spatial2(&b).unwrap();
        assert!(ca.right_indices.is_empty() && ca.left_indices.is_empty());
        let mut sa: Vec<&Vec<usize>> = ca.eigen_canonical.values().collect();
        sa.sort();
        assert_eq!(sa, vec![&vec![1], &vec![1, 1]]);
        assert_eq!(cb.eigen_canonical.len(), 3);
        assert!(cb.eigen_canonical.values().all(|v| v == &vec![1]));
        assert_eq!(spatial2_equiv(&a, &b).unwrap(), SpatialEquiv::NotEquivalent);
    }

    #[test]
    fn moebius_law_on_jordan_blocks() {
        let f = FieldSpec::Prime(5);
        for l in 1..=3 {
            for lam in 0..5 {
                let lamv = f.int(lam);
                let base = SpatialMatrix::from_slices(f, l, l, &[Mat::identity(f, l), jordan_block(l, &lamv)]).unwrap();
                for (a, b, c, d) in [(1, 2, 3, 2), (0, 1, 1, 1), (2, 0, 1, 3), (4, 4, 1, 0)] {
                    let mm = MoebiusMap::new(f.int(a), f.int(b), f.int(c), f.int(d)).unwrap();
                    let mut w = SpatialWitness::identity(f, (l, l, 2));
                    w.t = mm.slice_matrix();
                    let moved = transform_spatial(&base, &w).unwrap();
                    let img = mm.apply(&ProjPoint::Finite(lamv.clone()));
                    let ProjPoint::Finite(mu) = img else { continue };
                    let target = SpatialMatrix::from_slices(f, l, l, &[Mat::identity(f, l), jordan_block(l, &mu)]).unwrap();
                    assert_eq!(canon_spatial2(&moved).unwrap().0, canon_spatial2(&target).unwrap().0);
                }
            }
        }
    }

    #[test]
    fn equiv_with_random_transform_gf7() {
        let f = FieldSpec::Prime(7);
        let mut rng = SplitMix64::seed_from_u64(77);
        for _ in 0..100 {
            let a = random_spatial(f, (2, 3, 2), &mut rng);
            let w = random_witness(f, (2, 3, 2), &mut rng);
            let b = transform_spatial(&a, &w).unwrap();
            let (ca, _) = canon_spatial2(&a).unwrap_or_else(|e| panic!("{e}"));
            match spatial2_equiv(&a, &b) {
                Ok(SpatialEquiv::Equivalent(w2)) => assert_eq!(transform_spatial(&a, &w2).unwrap(), b),
                other => panic!("{other:?}"),
            }
            assert_eq!(canon_spatial2(&b).unwrap().0, ca);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rank_triple_invariant(seed in 0u64..10_000) {
            let f = FieldSpec::Prime(3);
            let mut rng = SplitMix64::seed_from_u64(seed);
            let a = random_spatial(f, (2, 3, 2), &mut rng);
            let w = random_witness(f, (2, 3, 2), &mut rng);
            let b = transform_spatial(&a, &w).unwrap();
            prop_assert_eq!(rank_triple(&a), rank_triple(&b));
            prop_assert_eq!(regular_part(&a).0.shape(), regular_part(&b).0.shape());
        }

        #[test]
        fn direct_sum_adds_rank_triples(seed in 0u64..10_000) {
            let f = FieldSpec::Prime(3);
            let mut rng = SplitMix64::seed_from_u64(seed);
            let a = random_spatial(f, (2, 1, 2), &mut rng);
            let b = random_spatial(f, (1, 2, 2), &mut rng);
            let (ta, tb) = (rank_triple(&a), rank_triple(&b));
            let s = direct_sum_spatial(&a, &b).unwrap();
            prop_assert_eq!(rank_triple(&s), RankTriple { r1: ta.r1 + tb.r1, r2: ta.r2 + tb.r2, r3: ta.r3 + tb.r3 });
            let e = SpatialMatrix::zeros(f, 0, 0, 0);
            prop_assert_eq!(direct_sum_spatial(&a, &e).unwrap(), a);
        }

        #[test]
        fn canonicalization_idempotent(seed in 0u64..10_000) {
            let f = FieldSpec::Prime(5);
            let mut rng = SplitMix64::seed_from_u64(seed);
            let a = random_spatial(f, (3, 3, 2), &mut rng);
            if let Ok((c, _)) = canon_spatial2(&a) {
                let r = reconstruct_spatial2(f, &c);
                let (c2, w2) = canon_spatial2(&r).unwrap();
                prop_assert_eq!(c2, c);
                prop_assert_eq!(w2, SpatialWitness::identity(f, (3, 3, 2)));
            }
        }
    }
}
