//! Ground-truth equivalence deciders.
//!
//! Every equivalence question is linearized as a space of intertwiners
//! (a [`EquivProblem`]) that must contain an element whose designated
//! blocks are invertible. Representations of a quiver with optional zero
//! patterns ([`LinearRep`]) cover quivers, pencils, matrix pairs, tuples and
//! posets uniformly.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::exactalg::{
    kernel_from_rref, random_scalar, rref_rows, with_kernel, FieldSpec, FpKernel, Kernel, Mat,
    QKernel, Scalar,
};
use crate::summands::krull_schmidt_iso;
use crate::spatial::{slice_tuple, transform_spatial, SpatialMatrix, SpatialWitness};

pub const DEFAULT_BUDGET: u64 = 1 << 22;
pub const DEFAULT_TRIALS: usize = 32;
pub const DEFAULT_BOUND: i64 = 100;
const PROBE_SAMPLES: usize = 64;
const KRULL_SCHMIDT_ATTEMPTS: usize = 64;

/// Search knobs shared by every decider.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub budget: u64,
    pub trials: usize,
    pub bound: i64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: DEFAULT_BUDGET,
            trials: DEFAULT_TRIALS,
            bound: DEFAULT_BOUND,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exhaustive { budget: u64 },
    Probabilistic { trials: usize, bound: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome<W> {
    Found(W),
    CertifiedNo,
    Unknown { trials: usize },
}

impl<W> SearchOutcome<W> {
    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> SearchOutcome<V> {
        match self {
            SearchOutcome::Found(w) => SearchOutcome::Found(f(w)),
            SearchOutcome::CertifiedNo => SearchOutcome::CertifiedNo,
            SearchOutcome::Unknown { trials } => SearchOutcome::Unknown { trials },
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SearchOutcome::Found(_) => "Found",
            SearchOutcome::CertifiedNo => "CertifiedNo",
            SearchOutcome::Unknown { .. } => "Unknown",
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// One summand `coeff · left · U · right` of a linear matrix equation in
/// the unknown block `U`; a missing factor stands for the identity.
pub struct Term<'a> {
    pub coeff: Scalar,
    pub left: Option<&'a Mat>,
    pub block: usize,
    pub right: Option<&'a Mat>,
}

/// Homogeneous linear constraints on a tuple of unknown matrix blocks, plus
/// the blocks that must be invertible.
#[derive(Clone, Debug)]
pub struct EquivProblem {
    pub field: FieldSpec,
    pub blocks: Vec<BlockSpec>,
    offsets: Vec<usize>,
    equations: Vec<Vec<(usize, Scalar)>>,
    pub invertible: Vec<usize>,
}

impl EquivProblem {
    pub fn new(field: FieldSpec) -> Self {
        EquivProblem {
            field,
            blocks: Vec::new(),
            offsets: vec![0],
            equations: Vec::new(),
            invertible: Vec::new(),
        }
    }

    pub fn add_block(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            rows,
            cols,
        });
        let last = *self.offsets.last().unwrap();
        self.offsets.push(last + rows * cols);
        self.blocks.len() - 1
    }

    pub fn require_invertible(&mut self, block: usize) {
        assert_eq!(self.blocks[block].rows, self.blocks[block].cols);
        self.invertible.push(block);
    }

    pub fn nvars(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn var(&self, block: usize, i: usize, j: usize) -> usize {
        self.offsets[block] + i * self.blocks[block].cols + j
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn add_equation(&mut self, terms: Vec<(usize, Scalar)>) {
        self.equations.push(terms);
    }

    pub fn zero_entry(&mut self, block: usize, i: usize, j: usize) {
        let v = self.var(block, i, j);
        self.equations.push(vec![(v, self.field.one())]);
    }

    /// Adds the entrywise equations of `Σ coeff · left · U · right = 0`.
    pub fn add_matrix_equation(&mut self, terms: &[Term<'_>]) {
        let Some(first) = terms.first() else { return };
        let shape = |t: &Term<'_>| {
            let b = &self.blocks[t.block];
            (
                t.left.map_or(b.rows, |l| l.rows()),
                t.right.map_or(b.cols, |r| r.cols()),
            )
        };
        let (h, w) = shape(first);
        for t in terms {
            assert_eq!(shape(t), (h, w), "inconsistent term shapes");
        }
        for a in 0..h {
            for b in 0..w {
                let mut eq: Vec<(usize, Scalar)> = Vec::new();
                for t in terms {
                    let blk = &self.blocks[t.block];
                    let rows_i: Vec<(usize, Scalar)> = match t.left {
                        None => vec![(a, self.field.one())],
                        Some(l) => (0..blk.rows)
                            .filter(|&i| !l.get(a, i).is_zero())
                            .map(|i| (i, l.get(a, i).clone()))
                            .collect(),
                    };
                    let cols_j: Vec<(usize, Scalar)> = match t.right {
                        None => vec![(b, self.field.one())],
                        Some(r) => (0..blk.cols)
                            .filter(|&j| !r.get(j, b).is_zero())
                            .map(|j| (j, r.get(j, b).clone()))
                            .collect(),
                    };
                    for (i, li) in &rows_i {
                        let li = li * &t.coeff;
                        for (j, rj) in &cols_j {
                            eq.push((self.var(t.block, *i, *j), &li * rj));
                        }
                    }
                }
                if !eq.is_empty() {
                    self.equations.push(eq);
                }
            }
        }
    }

    fn split(&self, v: &[Scalar]) -> Vec<Mat> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, s)| {
                Mat::from_fn(self.field, s.rows, s.cols, |i, j| v[self.var(b, i, j)].clone())
            })
            .collect()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.rows, b.cols)).collect()
    }
}

/// Deterministic basis of the solution space (free columns ascending).
pub fn solve_intertwiner(p: &EquivProblem) -> Vec<Vec<Mat>> {
    let n = p.nvars();
    let vecs: Vec<Vec<Scalar>> = with_kernel!(p.field, k => {
        let mut rows: Vec<Vec<_>> = p
            .equations
            .iter()
            .map(|eq| {
                let mut row = vec![k.zero(); n];
                for (v, c) in eq {
                    let cur = k.to_scalar(&row[*v]);
                    row[*v] = k.lift(&(&cur + c));
                }
                row
            })
            .collect();
        let piv = rref_rows(&k, &mut rows, n, None);
        kernel_from_rref(&k, &rows, n, &piv)
            .into_iter()
            .map(|v| v.iter().map(|e| k.to_scalar(e)).collect())
            .collect()
    });
    vecs.iter().map(|v| p.split(v)).collect()
}

fn combine(field: FieldSpec, shapes: &[(usize, usize)], basis: &[Vec<Mat>], coeffs: &[Scalar]) -> Vec<Mat> {
    shapes
        .iter()
        .enumerate()
        .map(|(b, &(r, c))| {
            let mut m = Mat::zeros(field, r, c);
            for (e, x) in basis.iter().zip(coeffs) {
                if !x.is_zero() {
                    m = m.add(&e[b].scale(x));
                }
            }
            m
        })
        .collect()
}

fn u32_invertible(p: u32, mut a: Vec<u32>, n: usize) -> bool {
    let k = FpKernel { p };
    let mut rows: Vec<Vec<u32>> = a.chunks_mut(n.max(1)).take(n).map(|c| c.to_vec()).collect();
    rref_rows(&k, &mut rows, n, None).len() == n
}

/// Searches the span of `basis` for an element whose `required` blocks are
/// all invertible.
pub fn find_invertible(
    field: FieldSpec,
    shapes: &[(usize, usize)],
    basis: &[Vec<Mat>],
    required: &[usize],
    mode: Mode,
    seed: u64,
) -> Result<SearchOutcome<Vec<Mat>>> {
    let ok = |cand: &[Mat]| required.iter().all(|&b| cand[b].is_invertible());
    if basis.is_empty() {
        let zero: Vec<Mat> = shapes.iter().map(|&(r, c)| Mat::zeros(field, r, c)).collect();
        return Ok(if ok(&zero) {
            SearchOutcome::Found(zero)
        } else {
            SearchOutcome::CertifiedNo
        });
    }
    match mode {
        Mode::Probabilistic { trials, bound } => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            for _ in 0..trials {
                let coeffs: Vec<Scalar> =
                    basis.iter().map(|_| random_scalar(field, &mut rng, bound)).collect();
                let cand = combine(field, shapes, basis, &coeffs);
                if ok(&cand) {
                    return Ok(SearchOutcome::Found(cand));
                }
            }
            Ok(SearchOutcome::Unknown { trials })
        }
        Mode::Exhaustive { budget } => {
            let FieldSpec::Prime(p) = field else {
                return Err(Error::InfiniteField);
            };
            let d = basis.len();
            let needed = (p as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
            if needed > budget as u128 {
                return Err(Error::BudgetExceeded { needed, budget });
            }
            Ok(enumerate_span(p, shapes, basis, required)
                .map_or(SearchOutcome::CertifiedNo, SearchOutcome::Found))
        }
    }
}

/// Lexicographic enumeration of coordinate vectors (first coordinate most
/// significant); returns the first admissible element.
fn enumerate_span(
    p: u32,
    shapes: &[(usize, usize)],
    basis: &[Vec<Mat>],
    required: &[usize],
) -> Option<Vec<Mat>> {
    let field = FieldSpec::Prime(p);
    let flat: Vec<Vec<u32>> = basis
        .iter()
        .map(|e| e.iter().flat_map(|m| m.entries().iter().map(Scalar::residue)).collect())
        .collect();
    let mut offsets = vec![0];
    for &(r, c) in shapes {
        offsets.push(offsets.last().unwrap() + r * c);
    }
    let total = *offsets.last().unwrap();
    let d = basis.len();
    let mut digits = vec![0u32; d];
    let mut cur = vec![0u32; total];
    let check = |cur: &[u32]| {
        required.iter().all(|&b| {
            let n = shapes[b].0;
            u32_invertible(p, cur[offsets[b]..offsets[b + 1]].to_vec(), n)
        })
    };
    loop {
        if check(&cur) {
            let coeffs: Vec<Scalar> = digits.iter().map(|&v| Scalar::Fp { v, p }).collect();
            return Some(combine(field, shapes, basis, &coeffs));
        }
        // Odometer step: the last coordinate varies fastest.
        let mut i = d;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            digits[i] = (digits[i] + 1) % p;
            for (c, b) in cur.iter_mut().zip(&flat[i]) {
                *c = ((*c as u64 + *b as u64) % p as u64) as u32;
            }
            if digits[i] != 0 {
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arrow {
    pub src: usize,
    pub tgt: usize,
    pub mat: Mat,
}

/// A representation of a quiver: a space per vertex and a matrix per arrow
/// (`dims[tgt] × dims[src]`). Vertices may carry a zero pattern restricting
/// admissible base changes to a matrix algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRep {
    pub field: FieldSpec,
    pub dims: Vec<usize>,
    pub arrows: Vec<Arrow>,
    pub patterns: Vec<Option<Vec<bool>>>,
}

impl LinearRep {
    pub fn new(field: FieldSpec, dims: Vec<usize>, arrows: Vec<Arrow>) -> Result<Self> {
        for a in &arrows {
            if a.src >= dims.len() || a.tgt >= dims.len() {
                return Err(Error::StructureMismatch("arrow endpoint out of range".into()));
            }
            if a.mat.shape() != (dims[a.tgt], dims[a.src]) {
                return Err(Error::ShapeMismatch(format!(
                    "arrow matrix is {:?}, expected {:?}",
                    a.mat.shape(),
                    (dims[a.tgt], dims[a.src])
                )));
            }
            if a.mat.field() != field {
                return Err(Error::FieldMismatch);
            }
        }
        let patterns = vec![None; dims.len()];
        Ok(LinearRep {
            field,
            dims,
            arrows,
            patterns,
        })
    }

    /// Restricts base changes at `v` to matrices vanishing where `mask` is false.
    pub fn with_pattern(mut self, v: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), self.dims[v] * self.dims[v]);
        self.patterns[v] = Some(mask);
        self
    }

    /// The pencil `(A_1, …, A_q)` of `m × n` matrices as a representation of
    /// the generalized Kronecker quiver: vertex 0 is the column space,
    /// vertex 1 the row space.
    pub fn tuple(field: FieldSpec, mats: &[Mat], m: usize, n: usize) -> Result<Self> {
        let arrows = mats
            .iter()
            .map(|a| Arrow {
                src: 0,
                tgt: 1,
                mat: a.clone(),
            })
            .collect();
        LinearRep::new(field, vec![n, m], arrows)
    }

    /// Matrices acting on one space by simultaneous similarity.
    pub fn loops(field: FieldSpec, mats: &[Mat], n: usize) -> Result<Self> {
        let arrows = mats
            .iter()
            .map(|a| Arrow {
                src: 0,
                tgt: 0,
                mat: a.clone(),
            })
            .collect();
        LinearRep::new(field, vec![n], arrows)
    }

    fn same_shape(&self, o: &LinearRep) -> bool {
        self.field == o.field
            && self.dims.len() == o.dims.len()
            && self.arrows.len() == o.arrows.len()
            && self
                .arrows
                .iter()
                .zip(&o.arrows)
                .all(|(a, b)| a.src == b.src && a.tgt == b.tgt)
            && self.patterns == o.patterns
    }
}

/// The intertwiner problem `S_tgt · A_α = A'_α · S_src` for all arrows.
pub fn hom_problem(x: &LinearRep, y: &LinearRep) -> Result<EquivProblem> {
    if !x.same_shape(y) {
        return Err(Error::StructureMismatch("representations of different shapes".into()));
    }
    let mut p = EquivProblem::new(x.field);
    for v in 0..x.dims.len() {
        let b = p.add_block(&format!("S{}", v + 1), y.dims[v], x.dims[v]);
        if x.dims[v] == y.dims[v] {
            p.require_invertible(b);
        }
        if let Some(mask) = &x.patterns[v] {
            if x.dims[v] == y.dims[v] {
                let d = x.dims[v];
                for i in 0..d {
                    for j in 0..d {
                        if !mask[i * d + j] {
                            p.zero_entry(b, i, j);
                        }
                    }
                }
            }
        }
    }
    let one = x.field.one();
    let minus = -&one;
    for (a, b) in x.arrows.iter().zip(&y.arrows) {
        p.add_matrix_equation(&[
            Term {
                coeff: one.clone(),
                left: None,
                block: a.tgt,
                right: Some(&a.mat),
            },
            Term {
                coeff: minus.clone(),
                left: Some(&b.mat),
                block: a.src,
                right: None,
            },
        ]);
    }
    Ok(p)
}

pub fn hom_basis(x: &LinearRep, y: &LinearRep) -> Result<Vec<Vec<Mat>>> {
    Ok(solve_intertwiner(&hom_problem(x, y)?))
}

/// Checks that `s` is an isomorphism `x → y`.
pub fn verify_rep_iso(x: &LinearRep, y: &LinearRep, s: &[Mat]) -> bool {
    s.len() == x.dims.len()
        && s.iter().all(Mat::is_invertible)
        && s.iter().enumerate().all(|(v, m)| match &x.patterns[v] {
            None => true,
            Some(mask) => {
                let d = x.dims[v];
                (0..d).all(|i| (0..d).all(|j| mask[i * d + j] || m.get(i, j).is_zero()))
            }
        })
        && x
            .arrows
            .iter()
            .zip(&y.arrows)
            .all(|(a, b)| s[a.tgt].mul(&a.mat) == b.mat.mul(&s[a.src]))
}

fn compose(g: &[Mat], f: &[Mat]) -> Vec<Mat> {
    g.iter().zip(f).map(|(a, b)| a.mul(b)).collect()
}

fn flat(e: &[Mat]) -> Vec<Scalar> {
    e.iter().flat_map(|m| m.entries().iter().cloned()).collect()
}

/// Decides whether two representations are isomorphic.
///
/// Over a prime field the answer is decisive unless the search space exceeds
/// the budget: after a seeded random probe, Hom-dimension invariants may
/// certify a negative answer; otherwise the search runs over a complement of
/// the subspace `{f : g∘f ∈ J for all g: Y → X}` of Hom(X, Y), where `J` is a
/// verified nilpotent ideal of End(X). Invertibility is constant on cosets of
/// that subspace, so enumerating the complement is exhaustive. When that
/// complement is too large, unpatterned representations are matched summand
/// by summand instead.
pub fn rep_iso(x: &LinearRep, y: &LinearRep, cfg: &SearchConfig) -> Result<SearchOutcome<Vec<Mat>>> {
    if !x.same_shape(y) {
        return Err(Error::StructureMismatch("representations of different shapes".into()));
    }
    if x.dims != y.dims {
        return Ok(SearchOutcome::CertifiedNo);
    }
    let field = x.field;
    let prob = hom_problem(x, y)?;
    let shapes = prob.shapes();
    let all: Vec<usize> = (0..shapes.len()).collect();
    let h = solve_intertwiner(&prob);
    let verified = |out: SearchOutcome<Vec<Mat>>| -> Result<SearchOutcome<Vec<Mat>>> {
        if let SearchOutcome::Found(s) = &out {
            if !verify_rep_iso(x, y, s) {
                return Err(Error::Internal("isomorphism witness failed verification".into()));
            }
        }
        Ok(out)
    };
    let FieldSpec::Prime(p) = field else {
        let out = find_invertible(
            field,
            &shapes,
            &h,
            &all,
            Mode::Probabilistic {
                trials: cfg.trials,
                bound: cfg.bound,
            },
            cfg.seed,
        )?;
        return verified(out);
    };
    if h.is_empty() {
        return verified(find_invertible(field, &shapes, &h, &all, Mode::Exhaustive { budget: 1 }, 0)?);
    }
    let probe = find_invertible(
        field,
        &shapes,
        &h,
        &all,
        Mode::Probabilistic {
            trials: PROBE_SAMPLES,
            bound: 0,
        },
        cfg.seed,
    )?;
    if probe.is_found() {
        return verified(probe);
    }
    let e = hom_basis(x, x)?;
    let h_back = hom_basis(y, x)?;
    let e_y = hom_basis(y, y)?;
    if h.len() != e.len() || h_back.len() != e.len() || e_y.len() != e.len() {
        return Ok(SearchOutcome::CertifiedNo);
    }
    let j = radical(field, &e);
    let reduced = complement_mod_radical(field, &h, &h_back, &j);
    let d = reduced.len();
    let needed = (p as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if needed > cfg.budget as u128 {
        if let Some(out) = krull_schmidt_iso(x, y, cfg.seed, KRULL_SCHMIDT_ATTEMPTS)? {
            return verified(out);
        }
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.budget,
        });
    }
    verified(
        enumerate_span(p, &shapes, &reduced, &all)
            .map_or(SearchOutcome::CertifiedNo, SearchOutcome::Found),
    )
}

/// Basis elements of `h` spanning a complement of `{f ∈ span h : g∘f ∈ J ∀g}`.
fn complement_mod_radical(
    field: FieldSpec,
    h: &[Vec<Mat>],
    h_back: &[Vec<Mat>],
    j: &[Vec<Mat>],
) -> Vec<Vec<Mat>> {
    if j.is_empty() {
        // W = {f : g∘f = 0 ∀g}; still a valid coset space.
    }
    let ambient = flat(&compose(&h_back[0], &h[0])).len();
    let jm = Mat::from_fn(field, j.len(), ambient, |r, c| flat(&j[r])[c].clone());
    // Functionals vanishing exactly on span J.
    let funcs: Vec<Vec<Scalar>> = if j.is_empty() {
        (0..ambient)
            .map(|i| (0..ambient).map(|t| if t == i { field.one() } else { field.zero() }).collect())
            .collect()
    } else {
        jm.kernel_vectors()
    };
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let comps: Vec<Vec<Vec<Scalar>>> = h_back
        .iter()
        .map(|g| h.iter().map(|f| flat(&compose(g, f))).collect())
        .collect();
    for gi in &comps {
        for c in &funcs {
            rows.push(
                gi.iter()
                    .map(|v| v.iter().zip(c).fold(field.zero(), |acc, (a, b)| acc + &(a * b)))
                    .collect(),
            );
        }
    }
    let k = h.len();
    let w: Vec<Vec<Scalar>> = if rows.is_empty() {
        (0..k)
            .map(|i| (0..k).map(|t| if t == i { field.one() } else { field.zero() }).collect())
            .collect()
    } else {
        Mat::from_rows(field, rows).unwrap().kernel_vectors()
    };
    let mut span = w.clone();
    let mut chosen = Vec::new();
    for i in 0..k {
        let e: Vec<Scalar> = (0..k).map(|t| if t == i { field.one() } else { field.zero() }).collect();
        let mut cand = span.clone();
        cand.push(e);
        if Mat::rank_of_vectors(field, k, &cand) == cand.len() {
            span = cand;
            chosen.push(i);
        }
    }
    chosen.into_iter().map(|i| h[i].clone()).collect()
}

/// A nilpotent ideal of the algebra spanned by `e` (a basis of tuples of
/// square blocks, closed under blockwise product). Computed with the
/// trace-form iteration for prime fields and verified; returns the empty
/// basis if verification fails.
pub fn radical(field: FieldSpec, e: &[Vec<Mat>]) -> Vec<Vec<Mat>> {
    let FieldSpec::Prime(p) = field else {
        return Vec::new();
    };
    if e.is_empty() {
        return Vec::new();
    }
    let n: usize = e[0].iter().map(|m| m.rows()).sum();
    let mut l = 0u32;
    while (p as u64).pow(l + 1) <= n as u64 {
        l += 1;
    }
    let mut cur: Vec<Vec<Mat>> = e.to_vec();
    for i in 0..=l {
        if cur.is_empty() {
            break;
        }
        let modulus = (p as u64).pow(i + 1);
        let pi = (p as u64).pow(i);
        let mut rows = Vec::new();
        for b in e {
            let mut row = Vec::new();
            for a in &cur {
                let ab = compose(a, b);
                let t = trace_power_mod(&ab, pi, modulus);
                if !t.is_multiple_of(pi) {
                    return Vec::new();
                }
                row.push(field.int(((t / pi) % p as u64) as i64));
            }
            rows.push(row);
        }
        let ker = Mat::from_rows(field, rows).unwrap().kernel_vectors();
        cur = ker
            .iter()
            .map(|c| {
                let shapes: Vec<(usize, usize)> = cur[0].iter().map(|m| m.shape()).collect();
                combine(field, &shapes, &cur, c)
            })
            .collect();
    }
    if is_nilpotent_ideal(field, e, &cur) {
        cur
    } else {
        Vec::new()
    }
}

/// `tr(A^k) mod m` for a blockwise integer lift of `A`.
fn trace_power_mod(a: &[Mat], k: u64, m: u64) -> u64 {
    let mut total = 0u64;
    for blk in a {
        let n = blk.rows();
        let lift: Vec<u64> = blk.entries().iter().map(|s| s.residue() as u64 % m).collect();
        let mul = |x: &[u64], y: &[u64]| {
            let mut z = vec![0u64; n * n];
            for i in 0..n {
                for l in 0..n {
                    let xil = x[i * n + l];
                    if xil == 0 {
                        continue;
                    }
                    for j in 0..n {
                        z[i * n + j] = (z[i * n + j] + xil * y[l * n + j]) % m;
                    }
                }
            }
            z
        };
        let mut acc: Vec<u64> = (0..n * n).map(|t| u64::from(t / n == t % n) % m).collect();
        let mut base = lift;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(&acc, &base);
            }
            base = mul(&base, &base);
            e >>= 1;
        }
        total = (total + (0..n).map(|i| acc[i * n + i]).sum::<u64>()) % m;
    }
    total
}

fn is_nilpotent_ideal(field: FieldSpec, e: &[Vec<Mat>], j: &[Vec<Mat>]) -> bool {
    if j.is_empty() {
        return true;
    }
    let width = flat(&j[0]).len();
    let jv: Vec<Vec<Scalar>> = j.iter().map(|x| flat(x)).collect();
    let rank_j = Mat::rank_of_vectors(field, width, &jv);
    let in_span = |v: Vec<Scalar>| {
        let mut cand = jv.clone();
        cand.push(v);
        Mat::rank_of_vectors(field, width, &cand) == rank_j
    };
    for x in j {
        for a in e {
            if !in_span(flat(&compose(x, a))) || !in_span(flat(&compose(a, x))) {
                return false;
            }
        }
    }
    let n: usize = j[0].iter().map(|m| m.rows()).sum();
    let mut power: Vec<Vec<Mat>> = j.to_vec();
    for _ in 0..=n {
        let prods: Vec<Vec<Scalar>> = power
            .iter()
            .flat_map(|x| j.iter().map(move |y| flat(&compose(x, y))))
            .collect();
        let m = Mat::from_rows(field, prods).unwrap();
        let rr = m.rref();
        if rr.rank == 0 {
            return true;
        }
        let shapes: Vec<(usize, usize)> = j[0].iter().map(|b| b.shape()).collect();
        power = (0..rr.rank)
            .map(|r| {
                let v = rr.r.row(r).to_vec();
                let mut off = 0;
                shapes
                    .iter()
                    .map(|&(a, b)| {
                        let blk = Mat::from_fn(field, a, b, |i, jj| v[off + i * b + jj].clone());
                        off += a * b;
                        blk
                    })
                    .collect()
            })
            .collect();
    }
    false
}

// ---------------------------------------------------------------------------

/// All invertible n×n matrices over GF(p), lexicographic by row-major entries.
pub fn gl_enumerate(n: usize, field: FieldSpec, budget: u64) -> Result<Vec<Mat>> {
    let FieldSpec::Prime(p) = field else {
        return Err(Error::InfiniteField);
    };
    let cells = n * n;
    let needed = (p as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out = Vec::new();
    let mut digits = vec![0u32; cells];
    loop {
        if u32_invertible(p, digits.clone(), n) {
            out.push(Mat::from_fn(field, n, n, |i, j| Scalar::Fp {
                v: digits[i * n + j],
                p,
            }));
        }
        let mut i = cells;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] = (digits[i] + 1) % p;
            if digits[i] != 0 {
                break;
            }
        }
    }
}

/// |GL(n, p)|.
pub fn gl_order(n: usize, p: u64) -> u128 {
    let pn = (p as u128).pow(n as u32);
    (0..n).map(|i| pn - (p as u128).pow(i as u32)).product()
}

/// Exhaustive isomorphism test enumerating every tuple of invertible
/// (pattern-respecting) base changes; first hit in lexicographic order.
pub fn exhaustive_rep_iso(x: &LinearRep, y: &LinearRep, budget: u64) -> Result<SearchOutcome<Vec<Mat>>> {
    if !x.same_shape(y) {
        return Err(Error::StructureMismatch("representations of different shapes".into()));
    }
    if x.dims != y.dims {
        return Ok(SearchOutcome::CertifiedNo);
    }
    let mut sets = Vec::new();
    let mut total: u128 = 1;
    for (v, &d) in x.dims.iter().enumerate() {
        let mut g = gl_enumerate(d, x.field, budget)?;
        if let Some(mask) = &x.patterns[v] {
            g.retain(|m| (0..d).all(|i| (0..d).all(|j| mask[i * d + j] || m.get(i, j).is_zero())));
        }
        total = total.saturating_mul(g.len() as u128);
        sets.push(g);
    }
    if total > budget as u128 {
        return Err(Error::BudgetExceeded { needed: total, budget });
    }
    let mut idx = vec![0usize; sets.len()];
    loop {
        let cand: Vec<Mat> = idx.iter().zip(&sets).map(|(&i, s)| s[i].clone()).collect();
        if verify_rep_iso(x, y, &cand) {
            return Ok(SearchOutcome::Found(cand));
        }
        let mut v = sets.len();
        loop {
            if v == 0 {
                return Ok(SearchOutcome::CertifiedNo);
            }
            v -= 1;
            idx[v] += 1;
            if idx[v] < sets[v].len() {
                break;
            }
            idx[v] = 0;
        }
    }
}

// ---------------------------------------------------------------------------

/// Witness of simultaneous similarity: `S⁻¹·A_i·S = A'_i`.
pub fn sim_pairs(a: &[Mat; 2], b: &[Mat; 2], cfg: &SearchConfig) -> Result<SearchOutcome<Mat>> {
    let n = a[0].rows();
    for m in a.iter().chain(b) {
        if m.shape() != (n, n) {
            return Err(Error::ShapeMismatch("sim_pairs expects square matrices of one size".into()));
        }
    }
    let field = a[0].field();
    let x = LinearRep::loops(field, a, n)?;
    let y = LinearRep::loops(field, b, n)?;
    let out = rep_iso(&x, &y, cfg)?;
    let out = match out {
        SearchOutcome::Found(s) => SearchOutcome::Found(s[0].invert()?),
        SearchOutcome::CertifiedNo => SearchOutcome::CertifiedNo,
        SearchOutcome::Unknown { trials } => SearchOutcome::Unknown { trials },
    };
    if let SearchOutcome::Found(s) = &out {
        let si = s.invert()?;
        if (0..2).any(|i| si.mul(&a[i]).mul(s) != b[i]) {
            return Err(Error::Internal("sim_pairs witness failed verification".into()));
        }
    }
    Ok(out)
}

/// Witness `(P, Q, T)` with `P·(𝒜T)_i·Q = ℬ_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleWitness {
    pub p: Mat,
    pub q: Mat,
    pub t: Mat,
}

/// `(𝒜T)_j = Σ_i 𝒜_i t_ij`.
pub fn mix_slices(a: &[Mat], t: &Mat) -> Vec<Mat> {
    let (m, n) = a[0].shape();
    let field = a[0].field();
    (0..t.cols())
        .map(|j| {
            a.iter()
                .enumerate()
                .fold(Mat::zeros(field, m, n), |acc, (i, ai)| acc.add(&ai.scale(t.get(i, j))))
        })
        .collect()
}

fn all_vectors(p: u32, q: usize) -> Vec<Vec<Scalar>> {
    let count = (p as usize).pow(q as u32);
    (0..count)
        .map(|mut c| {
            let mut v = vec![Scalar::Fp { v: 0, p }; q];
            for x in v.iter_mut().rev() {
                *x = Scalar::Fp {
                    v: (c % p as usize) as u32,
                    p,
                };
                c /= p as usize;
            }
            v
        })
        .collect()
}

/// Rank of `Σ v_i A_i` for every coordinate vector `v`.
fn rank_profile(p: u32, a: &[Mat]) -> Vec<(Vec<Scalar>, usize)> {
    let field = FieldSpec::Prime(p);
    let (m, n) = a[0].shape();
    all_vectors(p, a.len())
        .into_iter()
        .map(|v| {
            let s = a
                .iter()
                .zip(&v)
                .fold(Mat::zeros(field, m, n), |acc, (ai, c)| acc.add(&ai.scale(c)));
            (v, s.rank())
        })
        .collect()
}

fn vec_index(p: u32, v: &[Scalar]) -> usize {
    v.iter().fold(0usize, |acc, x| acc * p as usize + x.residue() as usize)
}

/// Simultaneous equivalence of matrix tuples, optionally allowing the
/// slice-mixing transformation by `T ∈ GL(q)`.
pub fn tuple_equiv(
    a: &[Mat],
    b: &[Mat],
    allow_mixing: bool,
    cfg: &SearchConfig,
) -> Result<SearchOutcome<TupleWitness>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch("tuples of different lengths".into()));
    }
    let (m, n) = a[0].shape();
    if a.iter().chain(b).any(|x| x.shape() != (m, n)) {
        return Err(Error::ShapeMismatch("tuple entries of different shapes".into()));
    }
    let field = a[0].field();
    let q = a.len();
    let ts: Vec<Mat> = if allow_mixing {
        let FieldSpec::Prime(p) = field else {
            return Err(Error::InfiniteField);
        };
        let mut ts = gl_enumerate(q, field, cfg.budget)?;
        if (p as u64).pow(q as u32) <= 4096 {
            let pa = rank_profile(p, a);
            let pb = rank_profile(p, b);
            ts.retain(|t| {
                pb.iter().all(|(v, rb)| {
                    let tv: Vec<Scalar> = (0..q)
                        .map(|i| (0..q).fold(field.zero(), |acc, j| acc + &(t.get(i, j) * &v[j])))
                        .collect();
                    pa[vec_index(p, &tv)].1 == *rb
                })
            });
        }
        ts
    } else {
        vec![Mat::identity(field, q)]
    };
    let target = LinearRep::tuple(field, b, m, n)?;
    let mut unknown = None;
    for t in ts {
        let mixed = mix_slices(a, &t);
        let src = LinearRep::tuple(field, &mixed, m, n)?;
        match rep_iso(&src, &target, cfg)? {
            SearchOutcome::Found(s) => {
                let w = TupleWitness {
                    p: s[1].clone(),
                    q: s[0].invert()?,
                    t,
                };
                let check = mix_slices(a, &w.t);
                if check.iter().zip(b).any(|(x, y)| &w.p.mul(x).mul(&w.q) != y) {
                    return Err(Error::Internal("tuple witness failed verification".into()));
                }
                return Ok(SearchOutcome::Found(w));
            }
            SearchOutcome::CertifiedNo => {}
            SearchOutcome::Unknown { trials } => unknown = Some(trials),
        }
    }
    Ok(match unknown {
        Some(trials) => SearchOutcome::Unknown { trials },
        None => SearchOutcome::CertifiedNo,
    })
}

/// Spatial equivalence by enumerating `T ∈ GL(q)` and solving for `(R, S)`
/// linearly; decisive over finite fields.
pub fn brute_force_spatial_equiv(
    a: &SpatialMatrix,
    b: &SpatialMatrix,
    cfg: &SearchConfig,
) -> Result<SearchOutcome<SpatialWitness>> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("spatial matrices of different shapes".into()));
    }
    if a.field() != b.field() {
        return Err(Error::FieldMismatch);
    }
    let field = a.field();
    let (m, n, q) = a.shape();
    if !field.is_finite() {
        return Err(Error::InfiniteField);
    }
    if m == 0 || n == 0 || q == 0 {
        return Ok(SearchOutcome::Found(SpatialWitness::identity(field, (m, n, q))));
    }
    let out = tuple_equiv(&slice_tuple(a, 3), &slice_tuple(b, 3), true, cfg)?.map(|w| SpatialWitness {
        r: w.p.transpose(),
        s: w.q,
        t: w.t,
    });
    if let SearchOutcome::Found(w) = &out {
        if &transform_spatial(a, w)? != b {
            return Err(Error::Internal("spatial witness failed verification".into()));
        }
    }
    Ok(out)
}

/// Spatial equivalence by enumerating every `(R, S, T)`; only for tiny
/// shapes over tiny fields.
pub fn exhaustive_spatial_equiv(
    a: &SpatialMatrix,
    b: &SpatialMatrix,
    budget: u64,
) -> Result<SearchOutcome<SpatialWitness>> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("spatial matrices of different shapes".into()));
    }
    let field = a.field();
    let FieldSpec::Prime(p) = field else {
        return Err(Error::InfiniteField);
    };
    let (m, n, q) = a.shape();
    let needed = gl_order(m, p as u64) * gl_order(n, p as u64) * gl_order(q, p as u64);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let gm = gl_enumerate(m, field, budget)?;
    let gn = gl_enumerate(n, field, budget)?;
    let gq = gl_enumerate(q, field, budget)?;
    for r in &gm {
        for s in &gn {
            for t in &gq {
                let w = SpatialWitness {
                    r: r.clone(),
                    s: s.clone(),
                    t: t.clone(),
                };
                if &transform_spatial(a, &w)? == b {
                    return Ok(SearchOutcome::Found(w));
                }
            }
        }
    }
    Ok(SearchOutcome::CertifiedNo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Rationals
    }

    fn commutant(m: &Mat) -> Vec<Vec<Mat>> {
        let x = LinearRep::loops(m.field(), std::slice::from_ref(m), m.rows()).unwrap();
        hom_basis(&x, &x).unwrap()
    }

    #[test]
    fn commutant_dimensions() {
        assert_eq!(commutant(&Mat::from_ints(q(), 2, 2, &[1, 0, 0, 2])).len(), 2);
        assert_eq!(commutant(&Mat::identity(q(), 2)).len(), 4);
        let basis = commutant(&Mat::from_ints(q(), 2, 2, &[1, 0, 0, 2]));
        for b in &basis {
            assert!(b[0].get(0, 1).is_zero() && b[0].get(1, 0).is_zero());
        }
    }

    #[test]
    fn find_invertible_examples() {
        let f2 = FieldSpec::Prime(2);
        let shapes = [(2, 2)];
        let ex = Mode::Exhaustive { budget: DEFAULT_BUDGET };
        let id = vec![vec![Mat::identity(q(), 2)]];
        let out = find_invertible(q(), &shapes, &id, &[0], Mode::Probabilistic { trials: 32, bound: 100 }, 0).unwrap();
        match out {
            SearchOutcome::Found(w) => assert!(w[0].is_invertible()),
            _ => panic!("expected Found"),
        }
        let e12 = vec![vec![Mat::from_ints(f2, 2, 2, &[0, 1, 0, 0])]];
        assert_eq!(find_invertible(f2, &shapes, &e12, &[0], ex, 0).unwrap(), SearchOutcome::CertifiedNo);
        let f3 = FieldSpec::Prime(3);
        let j = Mat::from_ints(f3, 2, 2, &[0, 0, 1, 0]);
        let basis = commutant(&j);
        assert_eq!(basis.len(), 2);
        assert!(find_invertible(f3, &shapes, &basis, &[0], ex, 0).unwrap().is_found());
    }

    #[test]
    fn budget_is_enforced() {
        let f2 = FieldSpec::Prime(2);
        let basis: Vec<Vec<Mat>> = (0..4)
            .map(|i| {
                let mut m = Mat::zeros(f2, 2, 2);
                m.set(i / 2, i % 2, f2.one());
                vec![m]
            })
            .collect();
        let out = find_invertible(f2, &[(2, 2)], &basis, &[0], Mode::Exhaustive { budget: 8 }, 0);
        assert!(matches!(out, Err(Error::BudgetExceeded { needed: 16, budget: 8 })));
    }

    #[test]
    fn gl_counts() {
        let f2 = FieldSpec::Prime(2);
        let f3 = FieldSpec::Prime(3);
        assert_eq!(gl_enumerate(1, f2, DEFAULT_BUDGET).unwrap(), vec![Mat::identity(f2, 1)]);
        assert_eq!(gl_enumerate(2, f2, DEFAULT_BUDGET).unwrap().len(), 6);
        assert_eq!(gl_enumerate(2, f3, DEFAULT_BUDGET).unwrap().len(), 48);
        assert_eq!(gl_enumerate(3, f2, DEFAULT_BUDGET).unwrap().len(), 168);
        assert_eq!(gl_order(3, 2), 168);
        let g = gl_enumerate(2, f2, DEFAULT_BUDGET).unwrap();
        let keys: Vec<Vec<u32>> = g.iter().map(|m| m.entries().iter().map(Scalar::residue).collect()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn sim_pairs_examples() {
        let f = q();
        let cfg = SearchConfig::default();
        let a = [Mat::from_ints(f, 2, 2, &[1, 0, 0, 2]), Mat::zeros(f, 2, 2)];
        let b = [Mat::from_ints(f, 2, 2, &[2, 0, 0, 1]), Mat::zeros(f, 2, 2)];
        assert!(sim_pairs(&a, &b, &cfg).unwrap().is_found());
        let f2 = FieldSpec::Prime(2);
        let a = [Mat::from_ints(f2, 1, 1, &[1]), Mat::from_ints(f2, 1, 1, &[0])];
        let b = [Mat::from_ints(f2, 1, 1, &[1]), Mat::from_ints(f2, 1, 1, &[1])];
        assert_eq!(sim_pairs(&a, &b, &cfg).unwrap(), SearchOutcome::CertifiedNo);
        let out = tuple_equiv(&a, &b, true, &cfg).unwrap();
        match out {
            SearchOutcome::Found(w) => assert_eq!(w.t, Mat::from_ints(f2, 2, 2, &[1, 1, 0, 1])),
            other => panic!("expected Found, got {}", other.tag()),
        }
    }

    #[test]
    fn radical_of_upper_triangular_algebra() {
        for p in [2u32, 3, 5] {
            let f = FieldSpec::Prime(p);
            let n = 3;
            let basis: Vec<Vec<Mat>> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let mut m = Mat::zeros(f, n, n);
                    m.set(i, j, f.one());
                    vec![m]
                })
                .collect();
            let j = radical(f, &basis);
            assert_eq!(j.len(), 3, "p = {p}");
            for x in &j {
                for i in 0..n {
                    for c in 0..=i {
                        assert!(x[0].get(i, c).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn radical_of_full_matrix_algebra_is_zero() {
        let f = FieldSpec::Prime(2);
        let basis: Vec<Vec<Mat>> = (0..4)
            .map(|i| {
                let mut m = Mat::zeros(f, 2, 2);
                m.set(i / 2, i % 2, f.one());
                vec![m]
            })
            .collect();
        assert!(radical(f, &basis).is_empty());
    }

    #[test]
    fn rep_iso_agrees_with_exhaustive_on_small_loops() {
        use rand::SeedableRng;
        let f = FieldSpec::Prime(2);
        let mut rng = SplitMix64::seed_from_u64(11);
        let cfg = SearchConfig::default();
        for _ in 0..60 {
            let a = [crate::exactalg::random_mat(f, 2, 2, &mut rng, 0), crate::exactalg::random_mat(f, 2, 2, &mut rng, 0)];
            let b = [crate::exactalg::random_mat(f, 2, 2, &mut rng, 0), crate::exactalg::random_mat(f, 2, 2, &mut rng, 0)];
            let x = LinearRep::loops(f, &a, 2).unwrap();
            let y = LinearRep::loops(f, &b, 2).unwrap();
            let fast = rep_iso(&x, &y, &cfg).unwrap().is_found();
            let slow = exhaustive_rep_iso(&x, &y, DEFAULT_BUDGET).unwrap().is_found();
            assert_eq!(fast, slow);
        }
    }
}
