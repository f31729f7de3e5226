//! Encoders that carry quiver, poset and spatial-matrix instances into
//! pairs of matrices, gadget spatial matrices and tensors, preserving and
//! reflecting equivalence.
//!
//! Indices are 0-based; scalar labels start at 1.

use std::fmt;

use crate::error::{Error, Result};
use crate::exactalg::{FieldSpec, Mat};
use crate::reps::{Poset, PosetRep, QuiverRep};
use crate::spatial::{transform_spatial, SpatialMatrix, SpatialWitness};

/// Two square matrices of equal size, up to simultaneous similarity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixPair {
    pub m: Mat,
    pub n: Mat,
}

impl MatrixPair {
    pub fn new(m: Mat, n: Mat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::NonSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if m.shape() != n.shape() {
            return Err(Error::ShapeMismatch(format!("pair of {:?} and {:?}", m.shape(), n.shape())));
        }
        if m.field() != n.field() {
            return Err(Error::FieldMismatch);
        }
        Ok(MatrixPair { m, n })
    }

    pub fn size(&self) -> usize {
        self.m.rows()
    }

    pub fn as_array(&self) -> [Mat; 2] {
        [self.m.clone(), self.n.clone()]
    }
}

fn check_scalars(f: FieldSpec, needed: usize) -> Result<()> {
    let available = f.distinct_positive_integers();
    if needed as u64 > available {
        return Err(Error::FieldTooSmall {
            needed: needed as u64,
            available,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Block structure of an encoded quiver representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverLayout {
    /// `(vertex, scalar)` per diagonal block of `M`; the first `v` are the
    /// base copies, the rest duplicates.
    pub blocks: Vec<(usize, u64)>,
    /// `(arrow, row block, column block)`.
    pub arrows: Vec<(usize, usize, usize)>,
    /// `(duplicate block, base block)` carrying an identity in `N`.
    pub ties: Vec<(usize, usize)>,
}

impl fmt::Display for QuiverLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, (v, c)) in self.blocks.iter().enumerate() {
            writeln!(f, "block {} vertex {} scalar {}", b + 1, v + 1, c)?;
        }
        for (a, r, c) in &self.arrows {
            writeln!(f, "arrow {} at ({}, {})", a + 1, r + 1, c + 1)?;
        }
        for (d, b) in &self.ties {
            writeln!(f, "tie I at ({}, {})", d + 1, b + 1)?;
        }
        Ok(())
    }
}

/// Plans the blocks: each arrow takes the first free position among target
/// copies (newest first) and source copies (oldest first); when none is
/// free the target vertex gets a fresh duplicate tied to its base copy.
pub fn quiver_layout(q: &crate::reps::Quiver) -> QuiverLayout {
    let v = q.vertices;
    let mut blocks: Vec<(usize, u64)> = (0..v).map(|i| (i, i as u64 + 1)).collect();
    let mut used = std::collections::BTreeSet::new();
    let mut arrows = Vec::new();
    let mut ties = Vec::new();
    for (k, a) in q.arrows.iter().enumerate() {
        let copies = |blocks: &[(usize, u64)], x: usize| -> Vec<usize> {
            (0..blocks.len()).filter(|&b| blocks[b].0 == x).collect()
        };
        let spot = {
            let tgts = copies(&blocks, a.tgt);
            let srcs = copies(&blocks, a.src);
            tgts.iter()
                .rev()
                .flat_map(|&t| srcs.iter().map(move |&s| (t, s)))
                .find(|p| !used.contains(p))
        };
        let (r, c) = match spot {
            Some(p) => p,
            None => {
                let d = blocks.len();
                blocks.push((a.tgt, d as u64 + 1));
                ties.push((d, a.tgt));
                used.insert((d, a.tgt));
                let c = copies(&blocks, a.src)
                    .into_iter()
                    .find(|&s| !used.contains(&(d, s)))
                    .expect("a fresh row has a free column");
                (d, c)
            }
        };
        used.insert((r, c));
        arrows.push((k, r, c));
    }
    QuiverLayout { blocks, arrows, ties }
}

/// `M` is diagonal with a distinct scalar per block; `N` carries each arrow
/// matrix in its own block and identity ties between copies of a vertex.
pub fn encode_quiver_pair(x: &QuiverRep) -> Result<(MatrixPair, QuiverLayout)> {
    let f = x.field;
    let layout = quiver_layout(&x.quiver);
    check_scalars(f, layout.blocks.len())?;
    let sizes: Vec<usize> = layout.blocks.iter().map(|&(v, _)| x.dims[v]).collect();
    let offs: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let mut m = Mat::zeros(f, total, total);
    for (b, &(_, c)) in layout.blocks.iter().enumerate() {
        m.set_block(offs[b], offs[b], &Mat::scalar(sizes[b], &f.int(c as i64)));
    }
    let mut n = Mat::zeros(f, total, total);
    for &(k, r, c) in &layout.arrows {
        n.set_block(offs[r], offs[c], &x.mats[k]);
    }
    for &(d, b) in &layout.ties {
        n.set_block(offs[d], offs[b], &Mat::identity(f, sizes[d]));
    }
    Ok((MatrixPair::new(m, n)?, layout))
}

// ---------------------------------------------------------------------------

/// One block `A_{lij}` and where it sits in `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPosition {
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub row: usize,
    pub rows: usize,
    pub col: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOneLayout {
    /// `heights[l][i]`: height of row strip `i` of `A_l`.
    pub heights: Vec<Vec<usize>>,
    pub widths: Vec<usize>,
    /// Scalar of `M_l`, `l = 1..=r+1`.
    pub scalars: Vec<u64>,
    /// First row of each `M_l`, plus the total size at the end.
    pub offsets: Vec<usize>,
    pub positions: Vec<BlockPosition>,
}

impl fmt::Display for StepOneLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, s) in self.scalars.iter().enumerate() {
            writeln!(
                f,
                "M{} scalar {} rows {}..{}",
                l + 1,
                s,
                self.offsets[l],
                self.offsets[l + 1]
            )?;
        }
        for p in &self.positions {
            writeln!(
                f,
                "A[{},{},{}] rows {}..{} cols {}..{}",
                p.l + 1,
                p.i + 1,
                p.j + 1,
                p.row,
                p.row + p.rows,
                p.col,
                p.col + p.cols
            )?;
        }
        Ok(())
    }
}

/// `J_1(cI_{h_1}) ⊕ J_2(cI_{h_2}) ⊕ …`, lower bidiagonal with identity
/// blocks below the diagonal; also returns the first row of each `J_i`.
fn jordan_sum(f: FieldSpec, c: u64, hs: &[usize]) -> (Mat, Vec<usize>) {
    let total: usize = hs.iter().enumerate().map(|(i, h)| (i + 1) * h).sum();
    let mut m = Mat::zeros(f, total, total);
    let mut starts = Vec::with_capacity(hs.len());
    let mut at = 0;
    for (i, &h) in hs.iter().enumerate() {
        starts.push(at);
        for u in 0..=i {
            m.set_block(at + u * h, at + u * h, &Mat::scalar(h, &f.int(c as i64)));
            if u > 0 {
                m.set_block(at + u * h, at + (u - 1) * h, &Mat::identity(f, h));
            }
        }
        at += (i + 1) * h;
    }
    (m, starts)
}

/// Encodes the stacked block matrix `[A_1; …; A_r]` (row strips of `A_l`
/// of heights `heights[l]`, column strips of widths `widths`) as a pair:
/// `M = M_1 ⊕ … ⊕ M_{r+1}` with `M_l = ⊕_i J_i(l I)`, and `A_{lij}` placed
/// in `N` at the last unit row of `J_i` in `M_l` and the first unit column
/// of `J_j` in `M_{r+1}`.
///
/// Admissible changes of `A` are then: arbitrary row operations inside each
/// strip, column operations inside each strip, column additions from a
/// strip to a later one, and (within each `A_l`) row additions from a strip
/// to a later one.
pub fn encode_step_one(
    f: FieldSpec,
    a: &[Mat],
    heights: &[Vec<usize>],
    widths: &[usize],
) -> Result<(MatrixPair, StepOneLayout)> {
    let r = a.len();
    let t = widths.len();
    if heights.len() != r || heights.iter().any(|h| h.len() != t) {
        return Err(Error::StructureMismatch("one height per strip of every A_l".into()));
    }
    for (l, al) in a.iter().enumerate() {
        if al.shape() != (heights[l].iter().sum(), widths.iter().sum()) {
            return Err(Error::ShapeMismatch(format!("A_{} has shape {:?}", l + 1, al.shape())));
        }
        if al.field() != f {
            return Err(Error::FieldMismatch);
        }
    }
    check_scalars(f, r + 1)?;

    let mut parts = Vec::with_capacity(r + 1);
    let mut starts = Vec::with_capacity(r + 1);
    for (l, hs) in heights.iter().chain(std::iter::once(&widths.to_vec())).enumerate() {
        let (m, s) = jordan_sum(f, l as u64 + 1, hs);
        parts.push(m);
        starts.push(s);
    }
    let mut offsets = vec![0];
    for p in &parts {
        offsets.push(offsets.last().unwrap() + p.rows());
    }
    let total = *offsets.last().unwrap();
    let mut m = Mat::zeros(f, total, total);
    for (l, p) in parts.iter().enumerate() {
        m.set_block(offsets[l], offsets[l], p);
    }

    let mut n = Mat::zeros(f, total, total);
    let mut positions = Vec::new();
    let col_offs: Vec<usize> = (0..t).map(|j| widths[..j].iter().sum()).collect();
    for l in 0..r {
        let row_offs: Vec<usize> = (0..t).map(|i| heights[l][..i].iter().sum()).collect();
        for i in 0..t {
            for j in 0..t {
                let (h, w) = (heights[l][i], widths[j]);
                let p = BlockPosition {
                    l,
                    i,
                    j,
                    row: offsets[l] + starts[l][i] + i * h,
                    rows: h,
                    col: offsets[r] + starts[r][j],
                    cols: w,
                };
                n.set_block(p.row, p.col, &a[l].block(row_offs[i], col_offs[j], h, w));
                positions.push(p);
            }
        }
    }
    let layout = StepOneLayout {
        heights: heights.to_vec(),
        widths: widths.to_vec(),
        scalars: (1..=r as u64 + 1).collect(),
        offsets,
        positions,
    };
    Ok((MatrixPair::new(m, n)?, layout))
}

/// One matrix of the simulation: the pair `(a, b)` it removes, the gathered
/// set, and for every row strip the column strip carrying its identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationStep {
    pub removed: (usize, usize),
    pub gathered: Vec<usize>,
    pub strip_columns: Vec<usize>,
    pub matrix: Mat,
}

impl SimulationStep {
    /// Row-strip heights: each strip is as tall as its identity is wide.
    pub fn heights(&self, widths: &[usize]) -> Vec<usize> {
        self.strip_columns.iter().map(|&c| widths[c]).collect()
    }
}

/// Block permutation matrix whose row strip `k` has an identity in column
/// strip `cols[k]`.
fn block_permutation(f: FieldSpec, cols: &[usize], widths: &[usize]) -> Mat {
    let n: usize = widths.iter().sum();
    let col_off = |j: usize| -> usize { widths[..j].iter().sum() };
    let mut m = Mat::zeros(f, n, n);
    let mut row = 0;
    for &c in cols {
        m.set_block(row, col_off(c), &Mat::identity(f, widths[c]));
        row += widths[c];
    }
    m
}

/// Starting from the total order, removes the lexicographically smallest
/// pair `(a, b)` not in `P` at each step: strips of the anti-diagonal that
/// meet columns `a..=b` are reordered so those meeting
/// `{i | a ≤ i < b, a ⪯ i}` come first.
pub fn simulate_poset_steps(f: FieldSpec, p: &Poset, widths: &[usize]) -> Result<Vec<SimulationStep>> {
    let t = p.size();
    if widths.len() != t {
        return Err(Error::StructureMismatch("one width per poset element".into()));
    }
    if !p.is_compatible() {
        return Err(Error::InvalidPoset("order must satisfy i ≺ j ⇒ i < j".into()));
    }
    let mut current: Vec<Vec<bool>> = (0..t).map(|i| (0..t).map(|j| i < j).collect()).collect();
    let mut steps = Vec::new();
    loop {
        let next = (0..t)
            .flat_map(|a| (a + 1..t).map(move |b| (a, b)))
            .find(|&(a, b)| current[a][b] && !p.lt(a, b));
        let Some((a, b)) = next else { break };
        let gathered: Vec<usize> = (a..b).filter(|&i| p.le(a, i)).collect();
        let others: Vec<usize> = (a..=b).filter(|i| !gathered.contains(i)).collect();
        for &u in &gathered {
            for &v in &others {
                if u < v {
                    current[u][v] = false;
                }
            }
        }
        // anti-diagonal: row strip k meets column t-1-k; the window rows
        // meet columns b, b-1, …, a
        let mut cols: Vec<usize> = (0..t).map(|k| t - 1 - k).collect();
        let window: Vec<usize> = (a..=b).rev().collect();
        let reordered: Vec<usize> = window
            .iter()
            .filter(|c| gathered.contains(c))
            .chain(window.iter().filter(|c| !gathered.contains(c)))
            .copied()
            .collect();
        cols[t - 1 - b..=t - 1 - a].copy_from_slice(&reordered);
        steps.push(SimulationStep {
            removed: (a, b),
            gathered,
            matrix: block_permutation(f, &cols, widths),
            strip_columns: cols,
        });
    }
    Ok(steps)
}

/// The matrices `A_2, …, A_r` simulating `P`.
pub fn simulate_poset_matrices(f: FieldSpec, p: &Poset, widths: &[usize]) -> Result<Vec<Mat>> {
    Ok(simulate_poset_steps(f, p, widths)?.into_iter().map(|s| s.matrix).collect())
}

/// `A_1` is the representation's matrix (all rows in the first strip),
/// `A_2, …` come from the simulation; then the pair construction above.
pub fn encode_poset_pair(x: &PosetRep) -> Result<(MatrixPair, StepOneLayout)> {
    let f = x.field();
    let t = x.widths.len();
    if t == 0 {
        return Err(Error::StructureMismatch("empty poset".into()));
    }
    let steps = simulate_poset_steps(f, &x.poset, &x.widths)?;
    let mut first = vec![0; t];
    first[0] = x.rows();
    let mut a = vec![x.a.clone()];
    let mut heights = vec![first];
    for s in steps {
        heights.push(s.heights(&x.widths));
        a.push(s.matrix);
    }
    encode_step_one(f, &a, &heights, &x.widths)
}

// ---------------------------------------------------------------------------

/// Block map of the gadget: `(name, first index, size)` along the diagonal.
pub fn gadget_layout(r: usize) -> Vec<(&'static str, usize, usize)> {
    vec![
        ("B", 0, 10 * r),
        ("I", 10 * r, r),
        ("C", 11 * r, 4 * r),
    ]
}

/// `15r × 15r × 3` spatial matrix with slices `B_k ⊕ I_r ⊕ C_k`, where the
/// `B_k` split `I_{10r}` into `6r, 2r, 2r`, `C_1 = I`, `C_2` is the block
/// shift and `C_3` carries `X` at block (3,1) and `Y` at (4,2).
pub fn wild_gadget(x: &Mat, y: &Mat) -> Result<SpatialMatrix> {
    let r = x.rows();
    if x.shape() != (r, r) || y.shape() != (r, r) {
        return Err(Error::ShapeMismatch("gadget needs two square matrices of equal size".into()));
    }
    if x.field() != y.field() {
        return Err(Error::FieldMismatch);
    }
    let f = x.field();
    let id = |n| Mat::identity(f, n);
    let z = |n| Mat::zeros(f, n, n);
    let b = [
        id(6 * r).direct_sum(&z(4 * r)),
        z(6 * r).direct_sum(&id(2 * r)).direct_sum(&z(2 * r)),
        z(8 * r).direct_sum(&id(2 * r)),
    ];
    let mut c2 = z(4 * r);
    for k in 1..4 {
        c2.set_block(k * r, (k - 1) * r, &id(r));
    }
    let mut c3 = z(4 * r);
    c3.set_block(2 * r, 0, x);
    c3.set_block(3 * r, r, y);
    let c = [id(4 * r), c2, c3];
    let slices: Vec<Mat> = (0..3).map(|k| b[k].direct_sum(&id(r)).direct_sum(&c[k])).collect();
    SpatialMatrix::from_slices(f, 15 * r, 15 * r, &slices)
}

/// Carries `wild_gadget(X, Y)` to `wild_gadget(S⁻¹XS, S⁻¹YS)`.
pub fn gadget_witness(s: &Mat) -> Result<SpatialWitness> {
    let f = s.field();
    let r = s.rows();
    let q = s.direct_sum(s).direct_sum(s).direct_sum(s);
    let qi = q.invert()?;
    Ok(SpatialWitness {
        r: Mat::identity(f, 11 * r).direct_sum(&qi.transpose()),
        s: Mat::identity(f, 11 * r).direct_sum(&q),
        t: Mat::identity(f, 3),
    })
}

// ---------------------------------------------------------------------------

/// Cube of side `m + n + q` holding `A` in block `(1, 2, 3)`.
pub fn tensor_embed(a: &SpatialMatrix) -> SpatialMatrix {
    let (m, n, q) = a.shape();
    let s = m + n + q;
    let mut h = SpatialMatrix::zeros(a.field(), s, s, s);
    for i in 0..m {
        for j in 0..n {
            for k in 0..q {
                h.set(i, m + j, m + n + k, a.get(i, j, k).clone());
            }
        }
    }
    h
}

/// The first `p` axes transform by `C`, the remaining ones by `(Cᵀ)⁻¹`.
pub fn tensor_transform(a: &SpatialMatrix, c: &Mat, p: usize) -> Result<SpatialMatrix> {
    let (m, n, q) = a.shape();
    if m != n || n != q {
        return Err(Error::NotCube);
    }
    if c.shape() != (m, m) {
        return Err(Error::ShapeMismatch(format!("transform is {:?}, cube side {m}", c.shape())));
    }
    if p > 3 {
        return Err(Error::StructureMismatch("tensor type p must be 0..=3".into()));
    }
    let dual = c.transpose().invert()?;
    let pick = |k: usize| if k < p { c.clone() } else { dual.clone() };
    transform_spatial(
        a,
        &SpatialWitness {
            r: pick(0),
            s: pick(1),
            t: pick(2),
        },
    )
}

/// The transform realizing an equivalence `(Q_1, Q_2, Q_3)` of the inputs
/// on their embeddings under type `p`.
pub fn tensor_embed_transform(w: &SpatialWitness, p: usize) -> Result<Mat> {
    let qs = [&w.r, &w.s, &w.t];
    let mut c: Option<Mat> = None;
    for (k, q) in qs.iter().enumerate() {
        let part = if k < p { (*q).clone() } else { q.transpose().invert()? };
        c = Some(match c {
            None => part,
            Some(acc) => acc.direct_sum(&part),
        });
    }
    Ok(c.expect("three parts"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{field_elements, random_invertible, random_mat};
    use crate::oracle::{sim_pairs, SearchConfig};
    use crate::reps::{poset_iso, quiver_iso, Quiver};
    use crate::spatial::rank_triple;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;

    fn three_vertex_rep(f: FieldSpec, dims: [usize; 3], rng: &mut SplitMix64) -> QuiverRep {
        let q = Quiver::three_vertex_example();
        let mats = q.arrows.iter().map(|a| random_mat(f, dims[a.tgt], dims[a.src], rng, 0)).collect();
        QuiverRep::new(f, q, dims.to_vec(), mats).unwrap()
    }

    /// The block pair written out by hand for the three-vertex quiver.
    fn displayed_pair(x: &QuiverRep) -> MatrixPair {
        let f = x.field;
        let [n1, n2, n3] = [x.dims[0], x.dims[1], x.dims[2]];
        let s = |c: i64, n| Mat::scalar(n, &f.int(c));
        let m = s(1, n1).direct_sum(&s(2, n2)).direct_sum(&s(3, n3)).direct_sum(&s(4, n3));
        let tot = n1 + n2 + 2 * n3;
        let mut n = Mat::zeros(f, tot, tot);
        let a = &x.mats;
        n.set_block(0, 0, &a[0]);
        n.set_block(n1, 0, &a[1]);
        n.set_block(n1 + n2, 0, &a[2]);
        let r4 = n1 + n2 + n3;
        n.set_block(r4, 0, &a[3]);
        n.set_block(r4, n1, &a[4]);
        n.set_block(r4, n1 + n2, &Mat::identity(f, n3));
        n.set_block(r4, r4, &a[5]);
        MatrixPair::new(m, n).unwrap()
    }

    #[test]
    fn three_vertex_pair_is_bit_exact() {
        let f = FieldSpec::Prime(7);
        let mut rng = SplitMix64::seed_from_u64(1);
        for n1 in 0..=3 {
            for n2 in 0..=3 {
                for n3 in 0..=3 {
                    let x = three_vertex_rep(f, [n1, n2, n3], &mut rng);
                    assert_eq!(encode_quiver_pair(&x).unwrap().0, displayed_pair(&x));
                }
            }
        }
        let z = QuiverRep::zero(f, Quiver::three_vertex_example(), vec![1, 1, 1]).unwrap();
        let (pair, _) = encode_quiver_pair(&z).unwrap();
        assert_eq!(pair.m, Mat::from_ints(f, 4, 4, &[1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 3, 0, 0, 0, 0, 4]));
        let mut n = Mat::zeros(f, 4, 4);
        n.set(3, 2, f.one());
        assert_eq!(pair.n, n);
    }

    #[test]
    fn quiver_encoding_needs_scalars() {
        let z = QuiverRep::zero(FieldSpec::Prime(3), Quiver::three_vertex_example(), vec![1, 1, 1]).unwrap();
        assert_eq!(
            encode_quiver_pair(&z).unwrap_err(),
            Error::FieldTooSmall {
                needed: 4,
                available: 2
            }
        );
    }

    #[test]
    fn quiver_encoding_reflects_iso_gf7() {
        let f = FieldSpec::Prime(7);
        let cfg = SearchConfig::default();
        let mut rng = SplitMix64::seed_from_u64(11);
        let mut positives = 0;
        for k in 0..16 {
            let dims = [rng.gen_range(0..=2), rng.gen_range(0..=1), rng.gen_range(0..=1)];
            let x = three_vertex_rep(f, dims, &mut rng);
            let y = if k % 2 == 0 {
                let s: Vec<Mat> = dims.iter().map(|&d| random_invertible(f, d, &mut rng, 0)).collect();
                x.transform(&s).unwrap()
            } else {
                three_vertex_rep(f, dims, &mut rng)
            };
            let iso = quiver_iso(&x, &y, &cfg).unwrap().is_found();
            let (px, _) = encode_quiver_pair(&x).unwrap();
            let (py, _) = encode_quiver_pair(&y).unwrap();
            let sim = sim_pairs(&px.as_array(), &py.as_array(), &cfg).unwrap().is_found();
            assert_eq!(iso, sim);
            positives += iso as usize;
        }
        assert!(positives >= 8);
    }

    #[test]
    fn parallel_arrows_get_duplicates() {
        let q = Quiver::from_edges(2, &[(0, 1), (0, 1), (0, 1), (1, 1), (1, 1)]).unwrap();
        let l = quiver_layout(&q);
        let mut seen = std::collections::BTreeSet::new();
        for &(_, r, c) in &l.arrows {
            assert!(seen.insert((r, c)));
            assert_eq!(l.blocks[r].0, 1);
            assert_eq!(l.blocks[c].0, q.arrows[l.arrows.iter().position(|a| a.1 == r && a.2 == c).unwrap()].src);
        }
        for t in &l.ties {
            assert!(!seen.contains(t));
        }
    }

    #[test]
    fn step_one_display() {
        let f = FieldSpec::Prime(7);
        let a = Mat::from_ints(f, 3, 3, &[1, 2, 3, 4, 5, 6, 1, 3, 5]);
        let (pair, layout) = encode_step_one(f, std::slice::from_ref(&a), &[vec![1, 1, 1]], &[1, 1, 1]).unwrap();
        let jordan = |c: i64| {
            Mat::from_ints(
                f,
                6,
                6,
                &[
                    c, 0, 0, 0, 0, 0, //
                    0, c, 0, 0, 0, 0, //
                    0, 1, c, 0, 0, 0, //
                    0, 0, 0, c, 0, 0, //
                    0, 0, 0, 1, c, 0, //
                    0, 0, 0, 0, 1, c,
                ],
            )
        };
        assert_eq!(pair.m, jordan(1).direct_sum(&jordan(2)));
        let mut n1 = Mat::zeros(f, 6, 6);
        for (i, &row) in [0, 2, 5].iter().enumerate() {
            for (j, &col) in [0, 1, 3].iter().enumerate() {
                n1.set(row, col, a.get(i, j).clone());
            }
        }
        let mut n = Mat::zeros(f, 12, 12);
        n.set_block(0, 6, &n1);
        assert_eq!(pair.n, n);
        assert_eq!(layout.positions.len(), 9);
        assert_eq!(layout.scalars, vec![1, 2]);
    }

    #[test]
    fn eight_strip_example() {
        let f = FieldSpec::Prime(2);
        // 3 ⪯ 5, 3 ⪯ 6 and 3, 7 incomparable (1-based)
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                let broken = i == 2 && (j == 3 || j == 6);
                if !broken && !(i == 4 && j == 6) && !(i == 5 && j == 6) && !(i == 3 && j == 6) {
                    pairs.push((i, j));
                }
            }
        }
        let p = Poset::new(8, &pairs).unwrap();
        let steps = simulate_poset_steps(f, &p, &[1; 8]).unwrap();
        let step = steps.iter().find(|s| s.removed == (2, 6)).expect("(3,7) removed");
        assert_eq!(step.gathered, vec![2, 4, 5]);
        let one_based: Vec<usize> = step.strip_columns.iter().map(|c| c + 1).collect();
        assert_eq!(one_based, vec![8, 6, 5, 3, 7, 4, 2, 1]);
    }

    #[test]
    fn chain_needs_no_simulation() {
        let f = FieldSpec::Prime(5);
        assert!(simulate_poset_matrices(f, &Poset::chain(4), &[1, 2, 0, 1]).unwrap().is_empty());
        let m = simulate_poset_matrices(f, &Poset::antichain(2), &[1, 1]).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn zero_poset_rep_gives_structure_only() {
        let f = FieldSpec::Prime(7);
        let x = PosetRep::new(Poset::antichain(2), vec![1, 1], Mat::zeros(f, 2, 2)).unwrap();
        let (pair, layout) = encode_poset_pair(&x).unwrap();
        // the only nonzero blocks of N are the simulation identities
        let mut expected = Mat::zeros(f, pair.size(), pair.size());
        for p in layout.positions.iter().filter(|p| p.l > 0) {
            let step = &simulate_poset_steps(f, &x.poset, &x.widths).unwrap()[p.l - 1];
            if step.strip_columns[p.i] == p.j {
                expected.set_block(p.row, p.col, &Mat::identity(f, p.rows));
            }
        }
        assert_eq!(pair.n, expected);
    }

    #[test]
    fn poset_encoding_reflects_iso() {
        let f = FieldSpec::Prime(7);
        let cfg = SearchConfig::default();
        let mut rng = SplitMix64::seed_from_u64(4);
        for p in [Poset::antichain(2), Poset::chain(2)] {
            for k in 0..8 {
                let x = PosetRep::new(p.clone(), vec![1, 1], random_mat(f, 2, 2, &mut rng, 0)).unwrap();
                let y_a = if k % 2 == 0 {
                    let r = random_invertible(f, 2, &mut rng, 0);
                    r.mul(&x.a)
                } else {
                    random_mat(f, 2, 2, &mut rng, 0)
                };
                let y = PosetRep::new(p.clone(), vec![1, 1], y_a).unwrap();
                let iso = poset_iso(&x, &y, &cfg).unwrap().is_found();
                let (px, _) = encode_poset_pair(&x).unwrap();
                let (py, _) = encode_poset_pair(&y).unwrap();
                let sim = sim_pairs(&px.as_array(), &py.as_array(), &cfg).unwrap().is_found();
                assert_eq!(iso, sim, "{p:?} {x:?} {y:?}");
            }
        }
    }

    #[test]
    fn gadget_shape_and_first_slice() {
        let f = FieldSpec::Prime(2);
        let g = wild_gadget(&Mat::from_ints(f, 1, 1, &[1]), &Mat::from_ints(f, 1, 1, &[0])).unwrap();
        assert_eq!(g.shape(), (15, 15, 3));
        let s1 = &crate::spatial::slice_tuple(&g, 3)[0];
        let diag: Vec<bool> = (0..15).map(|i| !s1.get(i, i).is_zero()).collect();
        let expect: Vec<bool> = (0..15).map(|i| !(6..10).contains(&i)).collect();
        assert_eq!(diag, expect);
        assert_eq!(s1.rank(), 11);
    }

    #[test]
    fn gadget_witness_conjugates() {
        let f = FieldSpec::Prime(5);
        let mut rng = SplitMix64::seed_from_u64(6);
        for r in 1..=2 {
            let (x, y) = (random_mat(f, r, r, &mut rng, 0), random_mat(f, r, r, &mut rng, 0));
            let s = random_invertible(f, r, &mut rng, 0);
            let si = s.invert().unwrap();
            let g = wild_gadget(&x, &y).unwrap();
            let h = wild_gadget(&si.mul(&x).mul(&s), &si.mul(&y).mul(&s)).unwrap();
            assert_eq!(transform_spatial(&g, &gadget_witness(&s).unwrap()).unwrap(), h);
        }
    }

    #[test]
    fn gadget_rank_chain() {
        let f = FieldSpec::Prime(5);
        let mut rng = SplitMix64::seed_from_u64(9);
        for _ in 0..50 {
            let r = rng.gen_range(1..=2);
            let g = wild_gadget(&random_mat(f, r, r, &mut rng, 0), &random_mat(f, r, r, &mut rng, 0)).unwrap();
            let a = crate::spatial::slice_tuple(&g, 3);
            let (r1, r2, r3) = (a[0].rank(), a[1].rank(), a[2].rank());
            assert!(r1 > r2 && r2 > r3);
            let els: Vec<_> = field_elements(f).unwrap().collect();
            for al in &els {
                for be in &els {
                    if al.is_zero() && be.is_zero() {
                        continue;
                    }
                    let s = a[0].add(&a[1].scale(al)).add(&a[2].scale(be));
                    assert!(s.rank() > r1);
                }
                if !al.is_zero() {
                    let s = a[1].add(&a[2].scale(al)).rank();
                    assert!(r1 > s && s > r2);
                }
            }
        }
    }

    #[test]
    fn tensor_embedding_shapes() {
        let f = FieldSpec::Prime(3);
        let mut one = SpatialMatrix::zeros(f, 1, 1, 1);
        one.set(0, 0, 0, f.int(2));
        let h = tensor_embed(&one);
        assert_eq!(h.shape(), (3, 3, 3));
        assert_eq!(h.get(0, 1, 2), &f.int(2));
        assert_eq!(rank_triple(&h).r1, 1);
        assert_eq!(tensor_embed(&SpatialMatrix::zeros(f, 2, 3, 4)).shape(), (9, 9, 9));
        assert_eq!(
            tensor_transform(&SpatialMatrix::zeros(f, 1, 2, 2), &Mat::identity(f, 1), 0),
            Err(Error::NotCube)
        );
    }

    #[test]
    fn tensor_transform_scaling() {
        let f = FieldSpec::Prime(7);
        let mut a = SpatialMatrix::zeros(f, 2, 2, 2);
        a.set(0, 0, 0, f.one());
        a.set(0, 1, 1, f.one());
        let c = Mat::from_ints(f, 2, 2, &[3, 0, 0, 1]);
        let b = tensor_transform(&a, &c, 1).unwrap();
        let third = f.int(3).inv().unwrap();
        // axis 1 scales by 3, axes 2 and 3 by 1/3
        assert_eq!(b.get(0, 0, 0), &(&(&f.int(3) * &third) * &third));
        assert_eq!(b.get(0, 1, 1), &f.int(3));
        let b3 = tensor_transform(&a, &c, 3).unwrap();
        assert_eq!(b3.get(0, 0, 0), &f.int(27));
        for p in 0..=3 {
            assert_eq!(tensor_transform(&a, &Mat::identity(f, 2), p).unwrap(), a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn embedded_equivalence_lifts(seed in 0u64..1000, p in 0usize..4) {
            let f = FieldSpec::Prime(5);
            let mut rng = SplitMix64::seed_from_u64(seed);
            let (m, n, q) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2));
            let a = SpatialMatrix::from_fn(f, (m, n, q), |_, _, _| f.int(rng.gen_range(0..5)));
            let w = SpatialWitness {
                r: random_invertible(f, m, &mut rng, 0),
                s: random_invertible(f, n, &mut rng, 0),
                t: random_invertible(f, q, &mut rng, 0),
            };
            let b = transform_spatial(&a, &w).unwrap();
            let c = tensor_embed_transform(&w, p).unwrap();
            prop_assert_eq!(tensor_transform(&tensor_embed(&a), &c, p).unwrap(), tensor_embed(&b));
        }

        #[test]
        fn simulation_yields_block_permutations(t in 1usize..7, seed in 0u64..1000) {
            let f = FieldSpec::Prime(2);
            let mut rng = SplitMix64::seed_from_u64(seed);
            let pairs: Vec<(usize, usize)> = (0..t)
                .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
                .filter(|_| rng.gen_bool(0.4))
                .collect();
            let p = Poset::new(t, &pairs).unwrap();
            let widths: Vec<usize> = (0..t).map(|_| rng.gen_range(0..=2)).collect();
            for s in simulate_poset_steps(f, &p, &widths).unwrap() {
                let mut sorted = s.strip_columns.clone();
                sorted.sort();
                prop_assert_eq!(sorted, (0..t).collect::<Vec<_>>());
                let (a, b) = s.removed;
                for k in 0..t {
                    let c = s.strip_columns[k];
                    if c < a || c > b {
                        prop_assert_eq!(c, t - 1 - k);
                    }
                }
                prop_assert!(s.matrix.is_invertible());
            }
        }
    }
}
