//! Quiver and poset representations: isomorphism tests, direct sums, the
//! canonical form for chains, and the tame/wild classification lists.
//!
//! Vertices, arrows and poset elements are 0-based.

use crate::error::{Error, Result};
use crate::exactalg::{char_poly, FieldSpec, Mat};
use crate::oracle::{rep_iso, Arrow, LinearRep, SearchConfig, SearchOutcome};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverArrow {
    pub id: String,
    pub src: usize,
    pub tgt: usize,
}

/// A directed multigraph; loops and parallel arrows are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quiver {
    pub vertices: usize,
    pub arrows: Vec<QuiverArrow>,
}

impl Quiver {
    pub fn new(vertices: usize, arrows: Vec<QuiverArrow>) -> Result<Self> {
        if arrows.iter().any(|a| a.src >= vertices || a.tgt >= vertices) {
            return Err(Error::StructureMismatch("arrow endpoint out of range".into()));
        }
        Ok(Quiver { vertices, arrows })
    }

    /// Builds from `(src, tgt)` pairs, naming arrows `a1, a2, …`.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let arrows = edges
            .iter()
            .enumerate()
            .map(|(k, &(src, tgt))| QuiverArrow {
                id: format!("a{}", k + 1),
                src,
                tgt,
            })
            .collect();
        Quiver::new(vertices, arrows)
    }

    /// Three vertices with a loop `α` at 1, arrows `β: 1→2`, `γ, δ: 1→3`,
    /// `ε: 2→3` and a loop `ζ` at 3.
    pub fn three_vertex_example() -> Quiver {
        let named = [("alpha", 0, 0), ("beta", 0, 1), ("gamma", 0, 2), ("delta", 0, 2), ("epsilon", 1, 2), ("zeta", 2, 2)];
        Quiver {
            vertices: 3,
            arrows: named
                .iter()
                .map(|&(id, src, tgt)| QuiverArrow {
                    id: id.into(),
                    src,
                    tgt,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverRep {
    pub field: FieldSpec,
    pub quiver: Quiver,
    pub dims: Vec<usize>,
    /// One `dims[tgt] × dims[src]` matrix per arrow.
    pub mats: Vec<Mat>,
}

impl QuiverRep {
    pub fn new(field: FieldSpec, quiver: Quiver, dims: Vec<usize>, mats: Vec<Mat>) -> Result<Self> {
        if dims.len() != quiver.vertices || mats.len() != quiver.arrows.len() {
            return Err(Error::StructureMismatch("dims or matrices do not match the quiver".into()));
        }
        for (a, m) in quiver.arrows.iter().zip(&mats) {
            if m.shape() != (dims[a.tgt], dims[a.src]) {
                return Err(Error::ShapeMismatch(format!(
                    "arrow {} has a {:?} matrix, expected {:?}",
                    a.id,
                    m.shape(),
                    (dims[a.tgt], dims[a.src])
                )));
            }
            if m.field() != field {
                return Err(Error::FieldMismatch);
            }
        }
        Ok(QuiverRep {
            field,
            quiver,
            dims,
            mats,
        })
    }

    pub fn zero(field: FieldSpec, quiver: Quiver, dims: Vec<usize>) -> Result<Self> {
        let mats = quiver
            .arrows
            .iter()
            .map(|a| Mat::zeros(field, dims[a.tgt], dims[a.src]))
            .collect();
        QuiverRep::new(field, quiver, dims, mats)
    }

    pub fn to_linear(&self) -> LinearRep {
        let arrows = self
            .quiver
            .arrows
            .iter()
            .zip(&self.mats)
            .map(|(a, m)| Arrow {
                src: a.src,
                tgt: a.tgt,
                mat: m.clone(),
            })
            .collect();
        LinearRep::new(self.field, self.dims.clone(), arrows).expect("validated on construction")
    }

    /// `A_α ↦ S_{t(α)} · A_α · S_{s(α)}⁻¹`.
    pub fn transform(&self, s: &[Mat]) -> Result<QuiverRep> {
        let mut mats = Vec::with_capacity(self.mats.len());
        for (a, m) in self.quiver.arrows.iter().zip(&self.mats) {
            mats.push(s[a.tgt].mul(m).mul(&s[a.src].invert()?));
        }
        QuiverRep::new(self.field, self.quiver.clone(), self.dims.clone(), mats)
    }
}

pub fn direct_sum_quiver(x: &QuiverRep, y: &QuiverRep) -> Result<QuiverRep> {
    if x.quiver != y.quiver {
        return Err(Error::StructureMismatch("different quivers".into()));
    }
    if x.field != y.field {
        return Err(Error::FieldMismatch);
    }
    let dims = x.dims.iter().zip(&y.dims).map(|(a, b)| a + b).collect();
    let mats = x.mats.iter().zip(&y.mats).map(|(a, b)| a.direct_sum(b)).collect();
    QuiverRep::new(x.field, x.quiver.clone(), dims, mats)
}

/// Searches `S_v` with `S_{t(α)} · A_α = A'_α · S_{s(α)}` for every arrow.
pub fn quiver_iso(x: &QuiverRep, y: &QuiverRep, cfg: &SearchConfig) -> Result<SearchOutcome<Vec<Mat>>> {
    if x.quiver != y.quiver {
        return Err(Error::StructureMismatch("different quivers".into()));
    }
    if x.field != y.field {
        return Err(Error::FieldMismatch);
    }
    if x.dims != y.dims {
        return Ok(SearchOutcome::CertifiedNo);
    }
    let out = rep_iso(&x.to_linear(), &y.to_linear(), cfg)?;
    if let SearchOutcome::Found(s) = &out {
        if &x.transform(s)? != y {
            return Err(Error::Internal("quiver witness failed verification".into()));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

/// A strict partial order on `0..t`, stored transitively closed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poset {
    t: usize,
    less: Vec<Vec<bool>>,
}

impl Poset {
    /// Transitive closure of the given pairs `i ≺ j`; rejects cycles.
    pub fn new(t: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut less = vec![vec![false; t]; t];
        for &(i, j) in pairs {
            if i >= t || j >= t {
                return Err(Error::InvalidPoset(format!("element out of range in ({i}, {j})")));
            }
            less[i][j] = true;
        }
        for k in 0..t {
            for i in 0..t {
                if less[i][k] {
                    let via = less[k].clone();
                    for (x, y) in less[i].iter_mut().zip(via) {
                        *x |= y;
                    }
                }
            }
        }
        if (0..t).any(|i| less[i][i]) {
            return Err(Error::InvalidPoset("relation has a cycle".into()));
        }
        Ok(Poset { t, less })
    }

    pub fn chain(t: usize) -> Poset {
        let pairs: Vec<(usize, usize)> = (1..t).map(|i| (i - 1, i)).collect();
        Poset::new(t, &pairs).expect("chain")
    }

    pub fn antichain(t: usize) -> Poset {
        Poset::new(t, &[]).expect("antichain")
    }

    /// Disjoint union of chains of the given lengths.
    pub fn chains(lengths: &[usize]) -> Poset {
        let mut pairs = Vec::new();
        let mut base = 0;
        for &l in lengths {
            pairs.extend((1..l).map(|i| (base + i - 1, base + i)));
            base += l;
        }
        Poset::new(base, &pairs).expect("chains")
    }

    /// Disjoint union of two posets.
    pub fn union(&self, o: &Poset) -> Poset {
        let mut pairs = self.pairs();
        pairs.extend(o.pairs().into_iter().map(|(i, j)| (i + self.t, j + self.t)));
        Poset::new(self.t + o.t, &pairs).expect("union")
    }

    pub fn size(&self) -> usize {
        self.t
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        self.less[i][j]
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        i == j || self.less[i][j]
    }

    /// All pairs `(i, j)` with `i ≺ j`, lexicographically.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..self.t {
            for j in 0..self.t {
                if self.less[i][j] {
                    v.push((i, j));
                }
            }
        }
        v
    }

    /// `i ≺ j ⇒ i < j`.
    pub fn is_compatible(&self) -> bool {
        self.pairs().iter().all(|&(i, j)| i < j)
    }

    pub fn is_chain(&self) -> bool {
        (0..self.t).all(|i| (i + 1..self.t).all(|j| self.less[i][j]))
    }

    /// Relabels along a linear extension so that `i ≺ j ⇒ i < j`;
    /// `perm[old] = new`.
    pub fn relabeled(&self) -> (Poset, Vec<usize>) {
        let mut order: Vec<usize> = Vec::with_capacity(self.t);
        let mut placed = vec![false; self.t];
        while order.len() < self.t {
            let next = (0..self.t)
                .find(|&j| !placed[j] && (0..self.t).all(|i| !self.less[i][j] || placed[i]))
                .expect("acyclic");
            placed[next] = true;
            order.push(next);
        }
        let mut perm = vec![0; self.t];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let pairs: Vec<(usize, usize)> = self.pairs().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        (Poset::new(self.t, &pairs).expect("relabel"), perm)
    }
}

/// A block matrix `[A_1 | … | A_t]` with strip widths `n_1, …, n_t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetRep {
    pub poset: Poset,
    pub widths: Vec<usize>,
    pub a: Mat,
}

impl PosetRep {
    pub fn new(poset: Poset, widths: Vec<usize>, a: Mat) -> Result<Self> {
        if !poset.is_compatible() {
            return Err(Error::InvalidPoset(
                "order must satisfy i ≺ j ⇒ i < j; relabel along a linear extension first".into(),
            ));
        }
        if widths.len() != poset.size() {
            return Err(Error::StructureMismatch("one width per poset element".into()));
        }
        if a.cols() != widths.iter().sum::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} columns, widths sum to {}",
                a.cols(),
                widths.iter().sum::<usize>()
            )));
        }
        Ok(PosetRep { poset, widths, a })
    }

    pub fn field(&self) -> FieldSpec {
        self.a.field()
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn strip_offset(&self, j: usize) -> usize {
        self.widths[..j].iter().sum()
    }

    pub fn strip(&self, j: usize) -> Mat {
        self.a.block(0, self.strip_offset(j), self.a.rows(), self.widths[j])
    }

    /// Strip index of every column.
    pub fn column_strips(&self) -> Vec<usize> {
        self.widths
            .iter()
            .enumerate()
            .flat_map(|(j, &w)| std::iter::repeat_n(j, w))
            .collect()
    }

    /// Column transforms allowed: block `(i, j)` nonzero only if `i ⪯ j`.
    pub fn column_pattern(&self) -> Vec<bool> {
        let cs = self.column_strips();
        let n = cs.len();
        let mut mask = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                mask.push(self.poset.le(cs[r], cs[c]));
            }
        }
        mask
    }

    /// Vertex 0 is the column space (restricted to the pattern algebra),
    /// vertex 1 the row space.
    pub fn to_linear(&self) -> LinearRep {
        LinearRep::tuple(self.field(), std::slice::from_ref(&self.a), self.a.rows(), self.a.cols())
            .expect("shape")
            .with_pattern(0, self.column_pattern())
    }
}

/// `R · A · C = A'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetWitness {
    pub r: Mat,
    pub c: Mat,
}

/// Strip `j` of the sum is `[A_j 0; 0 A'_j]`.
pub fn direct_sum_poset(x: &PosetRep, y: &PosetRep) -> Result<PosetRep> {
    if x.poset != y.poset {
        return Err(Error::StructureMismatch("different posets".into()));
    }
    if x.field() != y.field() {
        return Err(Error::FieldMismatch);
    }
    let f = x.field();
    let (m1, m2) = (x.rows(), y.rows());
    let widths: Vec<usize> = x.widths.iter().zip(&y.widths).map(|(a, b)| a + b).collect();
    let mut a = Mat::zeros(f, m1 + m2, widths.iter().sum());
    let mut col = 0;
    for (j, w) in widths.iter().enumerate() {
        a.set_block(0, col, &x.strip(j));
        a.set_block(m1, col + x.widths[j], &y.strip(j));
        col += w;
    }
    PosetRep::new(x.poset.clone(), widths, a)
}

fn pattern_ok(mask: &[bool], c: &Mat) -> bool {
    let n = c.rows();
    (0..n).all(|i| (0..n).all(|j| mask[i * n + j] || c.get(i, j).is_zero()))
}

pub fn poset_iso(x: &PosetRep, y: &PosetRep, cfg: &SearchConfig) -> Result<SearchOutcome<PosetWitness>> {
    if x.poset != y.poset || x.widths != y.widths {
        return Err(Error::StructureMismatch("different posets or widths".into()));
    }
    if x.field() != y.field() {
        return Err(Error::FieldMismatch);
    }
    if x.rows() != y.rows() {
        return Ok(SearchOutcome::CertifiedNo);
    }
    let out = rep_iso(&x.to_linear(), &y.to_linear(), cfg)?;
    Ok(match out {
        SearchOutcome::Found(s) => {
            let w = PosetWitness {
                r: s[1].clone(),
                c: s[0].invert()?,
            };
            if w.r.mul(&x.a).mul(&w.c) != y.a || !pattern_ok(&x.column_pattern(), &w.c) {
                return Err(Error::Internal("poset witness failed verification".into()));
            }
            SearchOutcome::Found(w)
        }
        SearchOutcome::CertifiedNo => SearchOutcome::CertifiedNo,
        SearchOutcome::Unknown { trials } => SearchOutcome::Unknown { trials },
    })
}

/// Staircase form of a representation of a chain: strip `k` carries
/// `I_{d_k}` in fresh rows, where `d_k` is the rank increment of
/// `[A_1 | … | A_k]`.
pub fn chain_poset_canon(x: &PosetRep) -> Result<PosetRep> {
    if !x.poset.is_chain() {
        return Err(Error::NotAChain);
    }
    let f = x.field();
    let mut a = Mat::zeros(f, x.rows(), x.a.cols());
    let mut prev = 0;
    let mut row = 0;
    for k in 0..x.widths.len() {
        let end = x.strip_offset(k) + x.widths[k];
        let rank = x.a.block(0, 0, x.rows(), end).rank();
        let d = rank - prev;
        a.set_block(row, x.strip_offset(k), &Mat::identity(f, d));
        row += d;
        prev = rank;
    }
    PosetRep::new(x.poset.clone(), x.widths.clone(), a)
}

// ---------------------------------------------------------------------------

/// Connected components of the underlying graph, as vertex lists.
fn components(q: &Quiver) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..q.vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for a in &q.arrows {
        let (x, y) = (find(&mut parent, a.src), find(&mut parent, a.tgt));
        parent[x] = y;
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; q.vertices];
    for v in 0..q.vertices {
        let r = find(&mut parent, v);
        match root_of[r] {
            Some(c) => comps[c].push(v),
            None => {
                root_of[r] = Some(comps.len());
                comps.push(vec![v]);
            }
        }
    }
    comps
}

/// Tame iff every component has a positive semidefinite `2I − M`, with `M`
/// the symmetric adjacency of the underlying multigraph (a loop adds 2 to
/// the diagonal).
pub fn quiver_is_tame(q: &Quiver) -> bool {
    let f = FieldSpec::Rationals;
    components(q).iter().all(|comp| {
        let k = comp.len();
        let idx = |v: usize| comp.iter().position(|&u| u == v);
        let mut b = vec![vec![0i64; k]; k];
        for (i, row) in b.iter_mut().enumerate() {
            row[i] = 2;
        }
        for a in &q.arrows {
            if let (Some(s), Some(t)) = (idx(a.src), idx(a.tgt)) {
                if s == t {
                    b[s][s] -= 2;
                } else {
                    b[s][t] -= 1;
                    b[t][s] -= 1;
                }
            }
        }
        let flat: Vec<i64> = b.into_iter().flatten().collect();
        let cp = char_poly(&Mat::from_ints(f, k, k, &flat)).expect("square");
        // a real-rooted polynomial has no negative roots iff its
        // coefficients alternate in sign
        cp.coeffs().iter().enumerate().all(|(i, c)| {
            let s = c.canonical_cmp(&f.zero());
            let want_nonneg = (k - i) % 2 == 0;
            match s {
                std::cmp::Ordering::Equal => true,
                std::cmp::Ordering::Greater => want_nonneg,
                std::cmp::Ordering::Less => !want_nonneg,
            }
        })
    })
}

/// The six minimal wild posets: `(1,1,1,1,1)`, `(1,1,1,2)`, `(2,2,3)`,
/// `(1,3,4)`, `(1,2,6)` and `(N,5)`.
pub fn critical_posets() -> Vec<(&'static str, Poset)> {
    let n = Poset::new(4, &[(0, 1), (2, 3), (2, 1)]).expect("N");
    vec![
        ("(1,1,1,1,1)", Poset::chains(&[1, 1, 1, 1, 1])),
        ("(1,1,1,2)", Poset::chains(&[1, 1, 1, 2])),
        ("(2,2,3)", Poset::chains(&[2, 2, 3])),
        ("(1,3,4)", Poset::chains(&[1, 3, 4])),
        ("(1,2,6)", Poset::chains(&[1, 2, 6])),
        ("(N,5)", n.union(&Poset::chain(5))),
    ]
}

/// Whether `small` embeds into `big` as an induced subposet.
pub fn contains_subposet(big: &Poset, small: &Poset) -> bool {
    fn extend(big: &Poset, small: &Poset, map: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let k = map.len();
        if k == small.size() {
            return true;
        }
        for c in 0..big.size() {
            if used[c] {
                continue;
            }
            let ok = (0..k).all(|i| small.lt(i, k) == big.lt(map[i], c) && small.lt(k, i) == big.lt(c, map[i]));
            if ok {
                used[c] = true;
                map.push(c);
                if extend(big, small, map, used) {
                    return true;
                }
                map.pop();
                used[c] = false;
            }
        }
        false
    }
    small.size() <= big.size() && extend(big, small, &mut Vec::new(), &mut vec![false; big.size()])
}

pub fn poset_is_wild(p: &Poset) -> bool {
    critical_posets().iter().any(|(_, c)| contains_subposet(p, c))
}
