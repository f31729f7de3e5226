//! Decomposition of representations over prime fields into indecomposable
//! summands, and the isomorphism test it gives by Krull–Schmidt.
//!
//! Splitting uses Fitting's lemma on endomorphisms that are neither
//! nilpotent nor invertible. A summand `Z` is certified indecomposable when
//! some endomorphism has minimal polynomial `g^k`, `g` irreducible of degree
//! `dim End(Z) − dim J` for a verified nilpotent ideal `J`: then `End(Z)/J`
//! is a field and `End(Z)` is local.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::Result;
use crate::exactalg::{random_scalar, FieldSpec, Mat, Poly, Scalar};
use crate::oracle::{hom_basis, radical, verify_rep_iso, Arrow, LinearRep, SearchOutcome};

/// A summand together with its embedding into the ambient space at every
/// vertex (`dims[v] × rep.dims[v]`).
#[derive(Clone, Debug)]
pub struct Summand {
    pub rep: LinearRep,
    pub embed: Vec<Mat>,
}

fn total_dim(x: &LinearRep) -> usize {
    x.dims.iter().sum()
}

fn block_diag(e: &[Mat]) -> Mat {
    let f = e[0].field();
    e.iter().fold(Mat::zeros(f, 0, 0), |acc, m| acc.direct_sum(m))
}

fn eval_at(p: &Poly, e: &[Mat]) -> Vec<Mat> {
    e.iter()
        .map(|m| {
            let f = m.field();
            let n = m.rows();
            p.coeffs()
                .iter()
                .rev()
                .fold(Mat::zeros(f, n, n), |acc, c| acc.mul(m).add(&Mat::scalar(n, c)))
        })
        .collect()
}

/// Minimal polynomial of a square matrix.
pub fn min_poly(m: &Mat) -> Poly {
    let f = m.field();
    let n = m.rows();
    let mut powers: Vec<Vec<Scalar>> = vec![Mat::identity(f, n).flatten()];
    let mut cur = Mat::identity(f, n);
    loop {
        cur = cur.mul(m);
        powers.push(cur.flatten());
        let k = powers.len();
        let cols = Mat::from_fn(f, n * n, k, |r, c| powers[c][r].clone());
        if let Some(v) = cols.kernel_vectors().into_iter().next() {
            return Poly::new(f, v).monic();
        }
    }
}

fn mul_mod(a: &Poly, b: &Poly, m: &Poly) -> Poly {
    a.mul(b).divrem(m).1
}

fn pow_mod(base: &Poly, mut e: u64, m: &Poly) -> Poly {
    let f = m.field();
    let mut acc = Poly::constant(f.one()).divrem(m).1;
    let mut b = base.divrem(m).1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(&acc, &b, m);
        }
        b = mul_mod(&b, &b, m);
        e >>= 1;
    }
    acc
}

/// The product of the irreducible factors of lowest degree `i` of `m`,
/// with `i`.
fn lowest_degree_factors(m: &Poly, p: u64) -> Option<(Poly, usize)> {
    let f = m.field();
    let x = Poly::new(f, vec![f.zero(), f.one()]);
    let d = m.degree()?;
    let mut frob = x.divrem(m).1;
    for i in 1..=d {
        frob = pow_mod(&frob, p, m);
        let h = m.gcd(&frob.sub(&x));
        if h.degree().is_some_and(|k| k > 0) {
            return Some((h.monic(), i));
        }
    }
    None
}

fn is_power_of(m: &Poly, g: &Poly) -> bool {
    let mut r = m.clone();
    while r.degree().is_some_and(|k| k > 0) {
        let (q, rem) = r.divrem(g);
        if !rem.is_zero() {
            return false;
        }
        r = q;
    }
    true
}

enum Verdict {
    Indecomposable,
    Split(Vec<Mat>),
    Undecided,
}

fn examine(z: &LinearRep, rng: &mut SplitMix64, attempts: usize) -> Verdict {
    let FieldSpec::Prime(p) = z.field else {
        return Verdict::Undecided;
    };
    let f = z.field;
    let Ok(e) = hom_basis(z, z) else {
        return Verdict::Undecided;
    };
    let j = radical(f, &e);
    let quotient = e.len() - j.len();
    for _ in 0..attempts {
        let coeffs: Vec<Scalar> = (0..e.len()).map(|_| random_scalar(f, rng, 0)).collect();
        let a: Vec<Mat> = (0..z.dims.len())
            .map(|v| {
                e.iter().zip(&coeffs).fold(Mat::zeros(f, z.dims[v], z.dims[v]), |acc, (b, c)| {
                    acc.add(&b[v].scale(c))
                })
            })
            .collect();
        let m = min_poly(&block_diag(&a));
        let Some((h, i)) = lowest_degree_factors(&m, p as u64) else {
            continue;
        };
        if h.degree() == Some(i) {
            if !is_power_of(&m, &h) {
                return Verdict::Split(eval_at(&h, &a));
            }
            if i == quotient {
                return Verdict::Indecomposable;
            }
        } else if i == 1 && p <= 1 << 12 {
            // several linear factors: split along one root
            for c in 0..p {
                let c = f.int(c as i64);
                if h.eval(&c).is_zero() {
                    return Verdict::Split(eval_at(&Poly::linear_root(&c), &a));
                }
            }
        }
    }
    Verdict::Undecided
}

/// Columns forming a basis of the column space.
fn column_basis(m: &Mat) -> Mat {
    let f = m.field();
    let mut chosen: Vec<Vec<Scalar>> = Vec::new();
    for c in 0..m.cols() {
        let col: Vec<Scalar> = (0..m.rows()).map(|r| m.get(r, c).clone()).collect();
        let mut cand = chosen.clone();
        cand.push(col);
        if Mat::rank_of_vectors(f, m.rows(), &cand) == cand.len() {
            chosen = cand;
        }
    }
    Mat::from_fn(f, m.rows(), chosen.len(), |r, c| chosen[c][r].clone())
}

fn columns(f: FieldSpec, n: usize, vs: &[Mat]) -> Mat {
    vs.iter().fold(Mat::zeros(f, n, 0), |acc, v| acc.hcat(v))
}

/// Splits `z` by the Fitting decomposition of `b`: `ker b^N ⊕ im b^N`.
fn fitting_split(z: &Summand, b: &[Mat]) -> Result<(Summand, Summand)> {
    let f = z.rep.field;
    let n = *z.rep.dims.iter().max().unwrap_or(&0);
    let mut kers = Vec::new();
    let mut ims = Vec::new();
    for (v, bv) in b.iter().enumerate() {
        let d = z.rep.dims[v];
        let mut pw = Mat::identity(f, d);
        for _ in 0..n.max(1) {
            pw = pw.mul(bv);
        }
        kers.push(columns(f, d, &pw.kernel_basis()));
        ims.push(column_basis(&pw));
    }
    let q: Vec<Mat> = kers.iter().zip(&ims).map(|(k, i)| k.hcat(i)).collect();
    let qi: Vec<Mat> = q.iter().map(Mat::invert).collect::<Result<_>>()?;
    let part = |first: bool| -> Result<Summand> {
        let sizes: Vec<usize> = (0..q.len()).map(|v| if first { kers[v].cols() } else { ims[v].cols() }).collect();
        let off = |v: usize| if first { 0 } else { kers[v].cols() };
        let arrows = z
            .rep
            .arrows
            .iter()
            .map(|a| {
                let moved = qi[a.tgt].mul(&a.mat).mul(&q[a.src]);
                Arrow {
                    src: a.src,
                    tgt: a.tgt,
                    mat: moved.block(off(a.tgt), off(a.src), sizes[a.tgt], sizes[a.src]),
                }
            })
            .collect();
        let embed = (0..q.len())
            .map(|v| z.embed[v].mul(if first { &kers[v] } else { &ims[v] }))
            .collect();
        Ok(Summand {
            rep: LinearRep::new(f, sizes, arrows)?,
            embed,
        })
    };
    Ok((part(true)?, part(false)?))
}

/// Indecomposable summands of `x`, or `None` when some summand could not be
/// split or certified within `attempts` random endomorphisms. Patterned
/// representations are not supported.
pub fn decompose(x: &LinearRep, seed: u64, attempts: usize) -> Result<Option<Vec<Summand>>> {
    if x.patterns.iter().any(Option::is_some) || !x.field.is_finite() {
        return Ok(None);
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut todo = vec![Summand {
        rep: x.clone(),
        embed: x.dims.iter().map(|&d| Mat::identity(x.field, d)).collect(),
    }];
    let mut done = Vec::new();
    while let Some(z) = todo.pop() {
        if total_dim(&z.rep) == 0 {
            continue;
        }
        match examine(&z.rep, &mut rng, attempts) {
            Verdict::Indecomposable => done.push(z),
            Verdict::Split(b) => {
                let (k, i) = fitting_split(&z, &b)?;
                todo.push(k);
                todo.push(i);
            }
            Verdict::Undecided => return Ok(None),
        }
    }
    Ok(Some(done))
}

fn compose(g: &[Mat], f: &[Mat]) -> Vec<Mat> {
    g.iter().zip(f).map(|(a, b)| a.mul(b)).collect()
}

fn is_unit(e: &[Mat]) -> bool {
    e.iter().all(Mat::is_invertible)
}

/// An isomorphism between indecomposables, if any: in a local ring the
/// non-units form a subspace, so some product of basis homomorphisms is
/// invertible exactly when the summands are isomorphic.
fn indecomposable_iso(z: &LinearRep, w: &LinearRep) -> Result<Option<Vec<Mat>>> {
    if z.dims != w.dims {
        return Ok(None);
    }
    let there = hom_basis(z, w)?;
    let back = hom_basis(w, z)?;
    for fz in &there {
        for gw in &back {
            if is_unit(&compose(gw, fz)) {
                return Ok(Some(fz.clone()));
            }
        }
    }
    Ok(None)
}

/// Decisive isomorphism test by matching indecomposable summands; `None`
/// when a decomposition stays undecided.
pub fn krull_schmidt_iso(
    x: &LinearRep,
    y: &LinearRep,
    seed: u64,
    attempts: usize,
) -> Result<Option<SearchOutcome<Vec<Mat>>>> {
    if x.dims != y.dims {
        return Ok(Some(SearchOutcome::CertifiedNo));
    }
    let (Some(dx), Some(dy)) = (decompose(x, seed, attempts)?, decompose(y, seed ^ 1, attempts)?) else {
        return Ok(None);
    };
    if dx.len() != dy.len() {
        return Ok(Some(SearchOutcome::CertifiedNo));
    }
    let f = x.field;
    let mut used = vec![false; dy.len()];
    let mut s: Vec<Mat> = x.dims.iter().map(|&d| Mat::zeros(f, d, d)).collect();
    // rows of the inverse basis change pick out each summand's coordinates
    let px: Vec<Mat> = (0..x.dims.len())
        .map(|v| columns(f, x.dims[v], &dx.iter().map(|z| z.embed[v].clone()).collect::<Vec<_>>()))
        .map(|m| m.invert())
        .collect::<Result<_>>()?;
    let mut offs = vec![0usize; x.dims.len()];
    for z in &dx {
        let mut found = None;
        for (k, w) in dy.iter().enumerate() {
            if used[k] {
                continue;
            }
            if let Some(iso) = indecomposable_iso(&z.rep, &w.rep)? {
                found = Some((k, iso));
                break;
            }
        }
        let Some((k, iso)) = found else {
            return Ok(Some(SearchOutcome::CertifiedNo));
        };
        used[k] = true;
        for v in 0..x.dims.len() {
            let kv = z.rep.dims[v];
            let rows = px[v].block(offs[v], 0, kv, x.dims[v]);
            s[v] = s[v].add(&dy[k].embed[v].mul(&iso[v]).mul(&rows));
            offs[v] += kv;
        }
    }
    if !verify_rep_iso(x, y, &s) {
        return Err(crate::Error::Internal("summand matching produced an invalid isomorphism".into()));
    }
    Ok(Some(SearchOutcome::Found(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{random_invertible, random_mat};
    use crate::oracle::exhaustive_rep_iso;
    use crate::pencil::jordan_block;
    use rand::Rng;

    #[test]
    fn min_poly_of_jordan_sum() {
        let f = FieldSpec::Prime(5);
        let m = jordan_block(2, &f.int(1)).direct_sum(&jordan_block(1, &f.int(1)));
        let mp = min_poly(&m);
        assert_eq!(mp, Poly::linear_root(&f.int(1)).mul(&Poly::linear_root(&f.int(1))));
    }

    #[test]
    fn decomposes_into_jordan_blocks() {
        let f = FieldSpec::Prime(3);
        let a = jordan_block(2, &f.int(0))
            .direct_sum(&jordan_block(1, &f.int(1)))
            .direct_sum(&jordan_block(1, &f.int(1)));
        let mut rng = SplitMix64::seed_from_u64(1);
        let s = random_invertible(f, 4, &mut rng, 0);
        let x = LinearRep::loops(f, &[s.mul(&a).mul(&s.invert().unwrap())], 4).unwrap();
        let parts = decompose(&x, 0, 64).unwrap().expect("decided");
        let mut sizes: Vec<usize> = parts.iter().map(|z| z.rep.dims[0]).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 2]);
    }

    #[test]
    fn irreducible_block_is_indecomposable() {
        // companion matrix of x² + x + 1 over GF(2)
        let f = FieldSpec::Prime(2);
        let c = Mat::from_ints(f, 2, 2, &[0, 1, 1, 1]);
        let x = LinearRep::loops(f, &[c.direct_sum(&c)], 4).unwrap();
        let parts = decompose(&x, 0, 64).unwrap().expect("decided");
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn agrees_with_exhaustive_search() {
        let f = FieldSpec::Prime(2);
        let mut rng = SplitMix64::seed_from_u64(5);
        let mut decided = 0;
        for k in 0..80 {
            let n = rng.gen_range(1..=3);
            let a = [random_mat(f, n, n, &mut rng, 0), random_mat(f, n, n, &mut rng, 0)];
            let b = if k % 2 == 0 {
                let s = random_invertible(f, n, &mut rng, 0);
                let si = s.invert().unwrap();
                [si.mul(&a[0]).mul(&s), si.mul(&a[1]).mul(&s)]
            } else {
                [random_mat(f, n, n, &mut rng, 0), random_mat(f, n, n, &mut rng, 0)]
            };
            let x = LinearRep::loops(f, &a, n).unwrap();
            let y = LinearRep::loops(f, &b, n).unwrap();
            let truth = exhaustive_rep_iso(&x, &y, 1 << 20).unwrap().is_found();
            if let Some(out) = krull_schmidt_iso(&x, &y, k, 64).unwrap() {
                assert_eq!(out.is_found(), truth);
                decided += 1;
            }
        }
        assert!(decided >= 70);
    }
}
