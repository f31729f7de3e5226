//! The desk-scale acceptance suite: ten criteria, each an exact check with a
//! pinned time limit. Shared by the integration test and `wildred selftest`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::exactalg::{field_elements, random_invertible, random_mat, FieldSpec, Mat};
use crate::oracle::{
    brute_force_spatial_equiv, exhaustive_spatial_equiv, gl_enumerate, sim_pairs, tuple_equiv, SearchConfig,
    SearchOutcome,
};
use crate::pencil::{jordan_block, kronecker_data, reconstruct_pencil, EigenMap, EquivWitness2, KroneckerData, Pencil, ProjPoint};
use crate::reductions::{
    encode_poset_pair, encode_quiver_pair, encode_step_one, gadget_witness, simulate_poset_steps, tensor_embed,
    tensor_transform, wild_gadget, MatrixPair,
};
use crate::reps::{
    critical_posets, poset_is_wild, poset_iso, quiver_is_tame, quiver_iso, Poset, PosetRep, Quiver, QuiverRep,
};
use crate::spatial::{
    canon_spatial2, direct_sum_spatial, regular_part, slice_tuple, spatial2_equiv, transform_spatial, MoebiusMap,
    SpatialEquiv, SpatialMatrix, SpatialWitness, rank_triple_counterexample,
};

type Check = std::result::Result<String, String>;

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub limit: Duration,
    pub elapsed: Duration,
    pub outcome: Check,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok() && self.elapsed <= self.limit
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        let detail = match &self.outcome {
            Ok(d) => d.clone(),
            Err(e) => format!("error: {e}"),
        };
        write!(
            f,
            "[{tag}] C{:<2} {} | {} | exact, {:.1}s of {}s",
            self.id,
            self.name,
            detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

/// `(id, name, limit in seconds)`.
pub const CRITERIA: [(usize, &str, u64); 10] = [
    (1, "pencil canon orbit invariance", 60),
    (2, "pencil canon completeness over GF(2)", 30),
    (3, "m x n x 2 classification vs brute force, Moebius law", 300),
    (4, "quiver encoding iff", 180),
    (5, "poset encoding iff and displays", 300),
    (6, "wild gadget", 600),
    (7, "regular part lemma", 120),
    (8, "tensor embedding", 300),
    (9, "tame and wild lists", 60),
    (10, "rank-triple counterexample", 10),
];

pub fn run_criterion(id: usize, seed: u64) -> CriterionReport {
    let (_, name, secs) = CRITERIA[id - 1];
    let start = Instant::now();
    let outcome = match id {
        1 => c1_pencil_invariance(seed),
        2 => c2_pencil_completeness(),
        3 => c3_spatial2(seed),
        4 => c4_quiver(seed),
        5 => c5_poset(seed),
        6 => c6_gadget(seed),
        7 => c7_regular_part(seed),
        8 => c8_tensor(),
        9 => c9_lists(seed),
        10 => c10_counterexample(),
        _ => Err(format!("no criterion {id}")),
    };
    CriterionReport {
        id,
        name,
        limit: Duration::from_secs(secs),
        elapsed: start.elapsed(),
        outcome,
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    (1..=CRITERIA.len()).map(|id| run_criterion(id, seed)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------

fn random_pencil_data(f: FieldSpec, rng: &mut SplitMix64) -> KroneckerData {
    loop {
        let mut right = Vec::new();
        let mut left = Vec::new();
        let mut eigen = EigenMap::new();
        for _ in 0..rng.gen_range(1..=4) {
            match rng.gen_range(0..4) {
                0 => right.push(rng.gen_range(1..=3)),
                1 => left.push(rng.gen_range(1..=3)),
                2 => {
                    eigen.entry(ProjPoint::Infinity).or_default().push(rng.gen_range(1..=2));
                }
                _ => {
                    let lam = f.int(rng.gen_range(-3..=3));
                    eigen.entry(ProjPoint::Finite(lam)).or_default().push(rng.gen_range(1..=2));
                }
            }
        }
        let d = KroneckerData::new(f, right, left, eigen).expect("valid blocks");
        if d.m <= 6 && d.n <= 7 {
            return d;
        }
    }
}

fn random_equiv(f: FieldSpec, m: usize, n: usize, rng: &mut SplitMix64) -> EquivWitness2 {
    EquivWitness2 {
        p: random_invertible(f, m, rng, 3),
        q: random_invertible(f, n, rng, 3),
    }
}

fn c1_pencil_invariance(seed: u64) -> Check {
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC1);
    let mut dense = 0;
    let mut built = 0;
    for f in [FieldSpec::Prime(5), FieldSpec::Rationals] {
        let mut k = 0;
        while k < 100 {
            let (p, known) = if k % 2 == 0 {
                // dense: any shape over GF(5), wide or tall over Q so the
                // spectrum is empty and always splits
                let (m, n) = match f {
                    FieldSpec::Rationals => {
                        let m = rng.gen_range(0..=6);
                        let n = loop {
                            let n = rng.gen_range(0..=7);
                            if n != m {
                                break n;
                            }
                        };
                        (m, n)
                    }
                    _ => (rng.gen_range(0..=6), rng.gen_range(0..=7)),
                };
                let p = e2s(Pencil::new(random_mat(f, m, n, &mut rng, 3), random_mat(f, m, n, &mut rng, 3)))?;
                (p, None)
            } else {
                let d = random_pencil_data(f, &mut rng);
                let w = random_equiv(f, d.m, d.n, &mut rng);
                (reconstruct_pencil(&d).transform(&w), Some(d))
            };
            let c = match kronecker_data(&p) {
                Ok(c) => c,
                Err(crate::Error::NonSplitSpectrum(_)) if known.is_none() => continue,
                Err(e) => return Err(format!("canon failed on {:?}: {e}", p.shape())),
            };
            if let Some(d) = &known {
                ensure(&c == d, || format!("canon {c} differs from the built data {d}"))?;
            }
            let (m, n) = p.shape();
            let moved = p.transform(&random_equiv(f, m, n, &mut rng));
            let c2 = e2s(kronecker_data(&moved))?;
            ensure(c == c2, || format!("canon changed under equivalence: {c} vs {c2}"))?;
            if known.is_some() {
                built += 1;
            } else {
                dense += 1;
            }
            k += 1;
        }
    }
    Ok(format!("{} pencils ({dense} dense, {built} built from blocks), GF(5) and Q", dense + built))
}

fn all_pairs_2x2_gf2() -> Vec<Pencil> {
    let f = FieldSpec::Prime(2);
    (0u32..256)
        .map(|bits| {
            let e: Vec<i64> = (0..8).map(|i| ((bits >> i) & 1) as i64).collect();
            Pencil::new(Mat::from_ints(f, 2, 2, &e[..4]), Mat::from_ints(f, 2, 2, &e[4..])).unwrap()
        })
        .collect()
}

fn c2_pencil_completeness() -> Check {
    let f = FieldSpec::Prime(2);
    let all = all_pairs_2x2_gf2();
    let gl = e2s(gl_enumerate(2, f, 1 << 20))?;
    let index: BTreeMap<Vec<u32>, usize> = all
        .iter()
        .enumerate()
        .map(|(i, p)| (key(&[&p.a, &p.b]), i))
        .collect();
    let mut orbit = vec![usize::MAX; all.len()];
    let mut orbits = 0;
    for i in 0..all.len() {
        if orbit[i] != usize::MAX {
            continue;
        }
        for p in &gl {
            for q in &gl {
                let moved = all[i].transform(&EquivWitness2 {
                    p: p.clone(),
                    q: q.clone(),
                });
                orbit[index[&key(&[&moved.a, &moved.b])]] = orbits;
            }
        }
        orbits += 1;
    }
    let mut by_canon: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (i, p) in all.iter().enumerate() {
        let d = match kronecker_data(p) {
            Ok(d) => d.to_string(),
            Err(crate::Error::NonSplitSpectrum(r)) => format!("nonsplit {}", r),
            Err(e) => return Err(e.to_string()),
        };
        by_canon.entry(d).or_default().insert(orbit[i]);
    }
    let classes = by_canon.len();
    ensure(by_canon.values().all(|s| s.len() == 1) && classes == orbits, || {
        format!("{classes} canon classes vs {orbits} orbits")
    })?;
    Ok(format!("256 pencils, {orbits} orbits = {classes} canon classes"))
}

fn key(ms: &[&Mat]) -> Vec<u32> {
    ms.iter().flat_map(|m| m.entries().iter().map(|s| s.residue())).collect()
}

fn spatial_key(a: &SpatialMatrix) -> Vec<u32> {
    key(&slice_tuple(a, 3).iter().collect::<Vec<_>>())
}

fn all_spatial(f: FieldSpec, (m, n, q): (usize, usize, usize)) -> Vec<SpatialMatrix> {
    let els: Vec<_> = field_elements(f).unwrap().collect();
    let cells = m * n * q;
    let total = els.len().pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut a = SpatialMatrix::zeros(f, m, n, q);
            for i in 0..m {
                for j in 0..n {
                    for k in 0..q {
                        a.set(i, j, k, els[code % els.len()].clone());
                        code /= els.len();
                    }
                }
            }
            a
        })
        .collect()
}

fn equivalent(o: &SpatialEquiv) -> bool {
    matches!(o, SpatialEquiv::Equivalent(_))
}

fn c3_spatial2(seed: u64) -> Check {
    let cfg = SearchConfig::default();
    let f2 = FieldSpec::Prime(2);
    let mut exhaustive_checks = 0;
    for shape in [(1, 1, 2), (1, 2, 2), (2, 1, 2), (2, 2, 2)] {
        let all = all_spatial(f2, shape);
        let index: BTreeMap<Vec<u32>, usize> = all.iter().enumerate().map(|(i, a)| (spatial_key(a), i)).collect();
        let group: Vec<SpatialWitness> = {
            let (gm, gn, gq) = (
                e2s(gl_enumerate(shape.0, f2, 1 << 20))?,
                e2s(gl_enumerate(shape.1, f2, 1 << 20))?,
                e2s(gl_enumerate(shape.2, f2, 1 << 20))?,
            );
            let mut g = Vec::new();
            for r in &gm {
                for s in &gn {
                    for t in &gq {
                        g.push(SpatialWitness {
                            r: r.clone(),
                            s: s.clone(),
                            t: t.clone(),
                        });
                    }
                }
            }
            g
        };
        let mut rep = vec![usize::MAX; all.len()];
        let mut reps = Vec::new();
        for i in 0..all.len() {
            if rep[i] != usize::MAX {
                continue;
            }
            for w in &group {
                rep[index[&spatial_key(&e2s(transform_spatial(&all[i], w))?)]] = i;
            }
            reps.push(i);
        }
        for (i, a) in all.iter().enumerate() {
            let r = &all[rep[i]];
            let fast = e2s(spatial2_equiv(a, r))?;
            ensure(equivalent(&fast), || format!("{shape:?}: same orbit, classifier says no"))?;
            let slow = e2s(brute_force_spatial_equiv(a, r, &cfg))?;
            ensure(slow.is_found(), || format!("{shape:?}: same orbit, brute force says no"))?;
            exhaustive_checks += 1;
        }
        for (x, &i) in reps.iter().enumerate() {
            for &j in &reps[x + 1..] {
                let fast = e2s(spatial2_equiv(&all[i], &all[j]))?;
                let slow = e2s(brute_force_spatial_equiv(&all[i], &all[j], &cfg))?;
                ensure(!equivalent(&fast) && slow == SearchOutcome::CertifiedNo, || {
                    format!("{shape:?}: distinct orbits, classifier {} brute force {}", equivalent(&fast), slow.tag())
                })?;
                exhaustive_checks += 1;
            }
        }
    }

    let f3 = FieldSpec::Prime(3);
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC3);
    let mut positives = 0;
    for k in 0..500 {
        let shape = (rng.gen_range(1..=3), rng.gen_range(1..=3), 2);
        let a = SpatialMatrix::from_fn(f3, shape, |_, _, _| f3.int(rng.gen_range(0..3)));
        let b = if k % 2 == 0 {
            let w = SpatialWitness {
                r: random_invertible(f3, shape.0, &mut rng, 0),
                s: random_invertible(f3, shape.1, &mut rng, 0),
                t: random_invertible(f3, 2, &mut rng, 0),
            };
            e2s(transform_spatial(&a, &w))?
        } else {
            SpatialMatrix::from_fn(f3, shape, |_, _, _| f3.int(rng.gen_range(0..3)))
        };
        let fast = equivalent(&e2s(spatial2_equiv(&a, &b))?);
        let slow = e2s(brute_force_spatial_equiv(&a, &b, &cfg))?;
        ensure(!matches!(slow, SearchOutcome::Unknown { .. }), || "brute force undecided".into())?;
        ensure(fast == slow.is_found(), || format!("GF(3) disagreement on {shape:?}"))?;
        positives += fast as usize;
    }

    let f5 = FieldSpec::Prime(5);
    let mut laws = 0;
    for l in 1..=3 {
        for lam in 0..5 {
            let lamv = f5.int(lam);
            let base = e2s(SpatialMatrix::from_slices(f5, l, l, &[Mat::identity(f5, l), jordan_block(l, &lamv)]))?;
            for a in 0..5 {
                for b in 0..5 {
                    for c in 0..5 {
                        for d in 0..5 {
                            let Ok(mm) = MoebiusMap::new(f5.int(a), f5.int(b), f5.int(c), f5.int(d)) else {
                                continue;
                            };
                            let ProjPoint::Finite(mu) = mm.apply(&ProjPoint::Finite(lamv.clone())) else {
                                continue;
                            };
                            let mut w = SpatialWitness::identity(f5, (l, l, 2));
                            w.t = mm.slice_matrix();
                            let moved = e2s(transform_spatial(&base, &w))?;
                            let target =
                                e2s(SpatialMatrix::from_slices(f5, l, l, &[Mat::identity(f5, l), jordan_block(l, &mu)]))?;
                            let s = slice_tuple(&moved, 3);
                            let pencil = e2s(kronecker_data(&e2s(Pencil::new(s[0].clone(), s[1].clone()))?))?;
                            let want = e2s(kronecker_data(&e2s(Pencil::new(Mat::identity(f5, l), jordan_block(l, &mu)))?))?;
                            ensure(pencil == want, || format!("Moebius law: {pencil} vs {want}"))?;
                            ensure(e2s(canon_spatial2(&moved))?.0 == e2s(canon_spatial2(&target))?.0, || {
                                "Moebius law: spatial canon differs".into()
                            })?;
                            laws += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "GF(2) <= 2x2x2: {exhaustive_checks} orbit checks; GF(3): 500 pairs ({positives} equivalent); {laws} Moebius instances"
    ))
}

// ---------------------------------------------------------------------------

/// The hand-written block pair for the three-vertex quiver with two loops.
pub fn displayed_three_vertex_pair(x: &QuiverRep) -> MatrixPair {
    let f = x.field;
    let [n1, n2, n3] = [x.dims[0], x.dims[1], x.dims[2]];
    let s = |c: i64, n| Mat::scalar(n, &f.int(c));
    let m = s(1, n1).direct_sum(&s(2, n2)).direct_sum(&s(3, n3)).direct_sum(&s(4, n3));
    let tot = n1 + n2 + 2 * n3;
    let mut n = Mat::zeros(f, tot, tot);
    let a = &x.mats;
    let r4 = n1 + n2 + n3;
    n.set_block(0, 0, &a[0]);
    n.set_block(n1, 0, &a[1]);
    n.set_block(n1 + n2, 0, &a[2]);
    n.set_block(r4, 0, &a[3]);
    n.set_block(r4, n1, &a[4]);
    n.set_block(r4, n1 + n2, &Mat::identity(f, n3));
    n.set_block(r4, r4, &a[5]);
    MatrixPair::new(m, n).expect("square")
}

fn random_quiver_rep(f: FieldSpec, q: &Quiver, dims: &[usize], rng: &mut SplitMix64) -> QuiverRep {
    let mats = q.arrows.iter().map(|a| random_mat(f, dims[a.tgt], dims[a.src], rng, 0)).collect();
    QuiverRep::new(f, q.clone(), dims.to_vec(), mats).expect("shapes")
}

fn c4_quiver(seed: u64) -> Check {
    let f = FieldSpec::Prime(7);
    let q = Quiver::three_vertex_example();
    let cfg = SearchConfig::default();
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC4);
    let mut agree = [0usize; 2];
    for k in 0..50 {
        let dims: Vec<usize> = (0..3).map(|_| rng.gen_range(0..=2)).collect();
        let x = random_quiver_rep(f, &q, &dims, &mut rng);
        let y = if k < 25 {
            let s: Vec<Mat> = dims.iter().map(|&d| random_invertible(f, d, &mut rng, 0)).collect();
            e2s(x.transform(&s))?
        } else {
            random_quiver_rep(f, &q, &dims, &mut rng)
        };
        let (px, _) = e2s(encode_quiver_pair(&x))?;
        let (py, _) = e2s(encode_quiver_pair(&y))?;
        ensure(px == displayed_three_vertex_pair(&x), || format!("layout differs for dims {dims:?}"))?;
        let iso = e2s(quiver_iso(&x, &y, &cfg))?;
        let sim = e2s(sim_pairs(&px.as_array(), &py.as_array(), &cfg))?;
        ensure(iso.tag() == sim.tag(), || format!("pair {k}: quiver {} vs pairs {}", iso.tag(), sim.tag()))?;
        ensure(k >= 25 || iso.is_found(), || format!("pair {k}: conjugate not recognised"))?;
        agree[iso.is_found() as usize] += 1;
    }
    Ok(format!("50 pairs agree ({} isomorphic, {} not), layout bit-exact", agree[1], agree[0]))
}

/// A column transform in the pattern algebra of `p` for unit widths.
fn random_pattern_transform(f: FieldSpec, p: &Poset, rng: &mut SplitMix64) -> Mat {
    let t = p.size();
    loop {
        let c = Mat::from_fn(f, t, t, |i, j| {
            if p.le(i, j) {
                f.int(rng.gen_range(0..7))
            } else {
                f.zero()
            }
        });
        if c.is_invertible() {
            return c;
        }
    }
}

fn c5_poset(seed: u64) -> Check {
    let f = FieldSpec::Prime(7);
    let cfg = SearchConfig::default();
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC5);
    let posets = [
        ("chain(3)", Poset::chain(3)),
        ("antichain(2)", Poset::antichain(2)),
        ("1<3", Poset::new(3, &[(0, 2)]).expect("poset")),
    ];
    let mut summary = Vec::new();
    for (name, p) in &posets {
        let t = p.size();
        let widths = vec![1; t];
        let mut positives = 0;
        for k in 0..40 {
            let m = rng.gen_range(1..=2);
            let x = e2s(PosetRep::new(p.clone(), widths.clone(), random_mat(f, m, t, &mut rng, 0)))?;
            let ya = if k % 2 == 0 {
                let r = random_invertible(f, m, &mut rng, 0);
                r.mul(&x.a).mul(&random_pattern_transform(f, p, &mut rng))
            } else {
                random_mat(f, m, t, &mut rng, 0)
            };
            let y = e2s(PosetRep::new(p.clone(), widths.clone(), ya))?;
            let iso = e2s(poset_iso(&x, &y, &cfg))?;
            let (px, _) = e2s(encode_poset_pair(&x))?;
            let (py, _) = e2s(encode_poset_pair(&y))?;
            let sim = e2s(sim_pairs(&px.as_array(), &py.as_array(), &cfg))?;
            ensure(iso.tag() == sim.tag(), || format!("{name} pair {k}: poset {} vs pairs {}", iso.tag(), sim.tag()))?;
            ensure(k % 2 == 1 || iso.is_found(), || format!("{name} pair {k}: transform not recognised"))?;
            positives += iso.is_found() as usize;
        }
        summary.push(format!("{name} 40 ({positives} iso)"));
    }

    // the 3×3 instance with one row per strip
    let a = Mat::from_fn(f, 3, 3, |i, j| f.int((3 * i + j + 1) as i64));
    let (pair, _) = e2s(encode_step_one(f, std::slice::from_ref(&a), &[vec![1, 1, 1]], &[1, 1, 1]))?;
    let jordan = |c: i64| {
        Mat::from_ints(
            f,
            6,
            6,
            &[
                c, 0, 0, 0, 0, 0, 0, c, 0, 0, 0, 0, 0, 1, c, 0, 0, 0, 0, 0, 0, c, 0, 0, 0, 0, 0, 1, c, 0, 0, 0, 0, 0, 1, c,
            ],
        )
    };
    let mut n1 = Mat::zeros(f, 6, 6);
    for (i, &row) in [0, 2, 5].iter().enumerate() {
        for (j, &col) in [0, 1, 3].iter().enumerate() {
            n1.set(row, col, a.get(i, j).clone());
        }
    }
    let mut n = Mat::zeros(f, 12, 12);
    n.set_block(0, 6, &n1);
    ensure(pair.m == jordan(1).direct_sum(&jordan(2)) && pair.n == n, || "3x3 display differs".into())?;

    // eight strips, removing (3,7) with gathered set {3,5,6} (1-based)
    let mut pairs = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            if !matches!((i, j), (2, 3) | (2, 6) | (3, 6) | (4, 6) | (5, 6)) {
                pairs.push((i, j));
            }
        }
    }
    let p8 = e2s(Poset::new(8, &pairs))?;
    let steps = e2s(simulate_poset_steps(f, &p8, &[1; 8]))?;
    let step = steps
        .iter()
        .find(|s| s.removed == (2, 6))
        .ok_or_else(|| "pair (3,7) never removed".to_string())?;
    let cols: Vec<usize> = [8, 6, 5, 3, 7, 4, 2, 1].iter().map(|c| c - 1).collect();
    let shown = Mat::from_fn(f, 8, 8, |i, j| if cols[i] == j { f.one() } else { f.zero() });
    ensure(step.gathered == vec![2, 4, 5] && step.matrix == shown, || "8-strip display differs".into())?;
    Ok(format!("{}; 12x12 and 8-strip displays bit-exact", summary.join(", ")))
}

fn c6_gadget(seed: u64) -> Check {
    let f2 = FieldSpec::Prime(2);
    let cfg = SearchConfig::default();
    let scalars: Vec<(i64, i64)> = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
    let gadgets: Vec<SpatialMatrix> = scalars
        .iter()
        .map(|&(x, y)| wild_gadget(&Mat::from_ints(f2, 1, 1, &[x]), &Mat::from_ints(f2, 1, 1, &[y])))
        .collect::<crate::Result<_>>()
        .map_err(|e| e.to_string())?;
    for i in 0..4 {
        for j in 0..4 {
            let out = e2s(brute_force_spatial_equiv(&gadgets[i], &gadgets[j], &cfg))?;
            ensure(!matches!(out, SearchOutcome::Unknown { .. }), || "undecided".into())?;
            ensure(out.is_found() == (i == j), || {
                format!("gadgets {:?} vs {:?}: {}", scalars[i], scalars[j], out.tag())
            })?;
        }
    }
    let f3 = FieldSpec::Prime(3);
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC6);
    for _ in 0..5 {
        let (x, y) = (random_mat(f3, 2, 2, &mut rng, 0), random_mat(f3, 2, 2, &mut rng, 0));
        let s = random_invertible(f3, 2, &mut rng, 0);
        let si = e2s(s.invert())?;
        let g = e2s(wild_gadget(&x, &y))?;
        let h = e2s(wild_gadget(&si.mul(&x).mul(&s), &si.mul(&y).mul(&s)))?;
        ensure(e2s(transform_spatial(&g, &e2s(gadget_witness(&s))?))? == h, || "witness fails".into())?;
    }
    Ok("16 scalar pairs over GF(2) decided exactly; 5 witnessed 2x2 pairs over GF(3)".into())
}

fn random_spatial(f: FieldSpec, shape: (usize, usize, usize), rng: &mut SplitMix64) -> SpatialMatrix {
    let p = match f {
        FieldSpec::Prime(p) => p as i64,
        FieldSpec::Rationals => 3,
    };
    SpatialMatrix::from_fn(f, shape, |_, _, _| f.int(rng.gen_range(0..p)))
}

fn c7_regular_part(seed: u64) -> Check {
    let cfg = SearchConfig::default();
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC7);
    let mut positives = 0;
    for k in 0..100 {
        let f = if k % 2 == 0 { FieldSpec::Prime(2) } else { FieldSpec::Prime(3) };
        let core = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2));
        let pad = (rng.gen_range(0..=1), rng.gen_range(0..=1), rng.gen_range(0..=1));
        let outer = (core.0 + pad.0, core.1 + pad.1, core.2 + pad.2);
        let padded = |a: &SpatialMatrix| direct_sum_spatial(a, &SpatialMatrix::zeros(f, pad.0, pad.1, pad.2));
        let scramble = |a: &SpatialMatrix, rng: &mut SplitMix64| {
            let w = SpatialWitness {
                r: random_invertible(f, outer.0, rng, 0),
                s: random_invertible(f, outer.1, rng, 0),
                t: random_invertible(f, outer.2, rng, 0),
            };
            transform_spatial(a, &w)
        };
        let a = e2s(scramble(&e2s(padded(&random_spatial(f, core, &mut rng)))?, &mut rng))?;
        let b = if k % 4 < 2 {
            e2s(scramble(&a, &mut rng))?
        } else {
            e2s(scramble(&e2s(padded(&random_spatial(f, core, &mut rng)))?, &mut rng))?
        };
        let whole = e2s(brute_force_spatial_equiv(&a, &b, &cfg))?;
        let (ra, rb) = (regular_part(&a).0, regular_part(&b).0);
        let parts = if ra.shape() != rb.shape() {
            false
        } else {
            e2s(exhaustive_spatial_equiv(&ra, &rb, 1 << 22))?.is_found()
        };
        ensure(whole.is_found() == parts, || {
            format!("instance {k}: whole {} vs regular parts {parts}", whole.tag())
        })?;
        positives += parts as usize;
    }
    Ok(format!("100 padded pairs over GF(2)/GF(3) agree ({positives} equivalent)"))
}

fn c8_tensor() -> Check {
    let f = FieldSpec::Prime(2);
    let mut checked = 0;
    for shape in [(1, 1, 1), (1, 1, 2)] {
        let inputs = all_spatial(f, shape);
        let side = shape.0 + shape.1 + shape.2;
        let gl = e2s(gl_enumerate(side, f, 1 << 22))?;
        let embedded: Vec<SpatialMatrix> = inputs.iter().map(tensor_embed).collect();
        for p in 0..=3 {
            for (i, a) in inputs.iter().enumerate() {
                let mut orbit = BTreeSet::new();
                for c in &gl {
                    orbit.insert(spatial_key(&e2s(tensor_transform(&embedded[i], c, p))?));
                }
                for (j, b) in inputs.iter().enumerate() {
                    let tensor = orbit.contains(&spatial_key(&embedded[j]));
                    let spatial = e2s(exhaustive_spatial_equiv(a, b, 1 << 22))?.is_found();
                    ensure(tensor == spatial, || format!("{shape:?} p={p}: inputs {i},{j} disagree"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (pair, p) checks under GL(3,2) and GL(4,2)"))
}

// ---------------------------------------------------------------------------

/// `(name, vertex count, edges)`.
pub type Diagram = (String, usize, Vec<(usize, usize)>);

/// Edge lists of the extended Dynkin diagrams.
pub fn euclidean_diagrams() -> Vec<Diagram> {
    let mut out = vec![("A~0".to_string(), 1, vec![(0, 0)])];
    for n in [1, 4, 7] {
        let edges = (0..=n).map(|i| (i, (i + 1) % (n + 1))).collect();
        out.push((format!("A~{n}"), n + 1, edges));
    }
    for n in [4, 5, 7] {
        // path 2..n-2 with two leaves at each end
        let mut edges = vec![(0, 2), (1, 2), (n - 2, n - 1), (n - 2, n)];
        edges.extend((2..n - 2).map(|i| (i, i + 1)));
        out.push((format!("D~{n}"), n + 1, edges));
    }
    let star = |arms: &[usize]| {
        let mut edges = Vec::new();
        let mut next = 1;
        for &len in arms {
            let mut prev = 0;
            for _ in 0..len {
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        (next, edges)
    };
    for (name, arms) in [("E~6", [2, 2, 2]), ("E~7", [3, 3, 1]), ("E~8", [5, 2, 1])] {
        let (v, e) = star(&arms);
        out.push((name.to_string(), v, e));
    }
    out
}

fn orient(v: usize, edges: &[(usize, usize)], rng: &mut SplitMix64) -> Quiver {
    let e: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| if rng.gen_bool(0.5) { (a, b) } else { (b, a) })
        .collect();
    Quiver::from_edges(v, &e).expect("endpoints in range")
}

fn all_posets(t: usize) -> Vec<Poset> {
    let cells: Vec<(usize, usize)> = (0..t).flat_map(|i| (0..t).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << cells.len()) {
        let pairs: Vec<(usize, usize)> = (0..cells.len()).filter(|b| mask >> b & 1 == 1).map(|b| cells[b]).collect();
        if let Ok(p) = Poset::new(t, &pairs) {
            if p.pairs().len() == pairs.len() {
                out.push(p);
            }
        }
    }
    out
}

fn c9_lists(seed: u64) -> Check {
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0xC9);
    let diagrams = euclidean_diagrams();
    for (name, v, edges) in &diagrams {
        for _ in 0..3 {
            let q = orient(*v, edges, &mut rng);
            ensure(quiver_is_tame(&q), || format!("{name} reported wild"))?;
            let mut more = edges.clone();
            more.push((rng.gen_range(0..*v), rng.gen_range(0..*v)));
            ensure(!quiver_is_tame(&orient(*v, &more, &mut rng)), || format!("{name} plus an edge reported tame"))?;
        }
    }
    let two_loops = e2s(Quiver::from_edges(1, &[(0, 0), (0, 0)]))?;
    let star = e2s(Quiver::from_edges(6, &[(1, 0), (2, 0), (3, 0), (4, 0), (5, 0)]))?;
    ensure(!quiver_is_tame(&two_loops) && !quiver_is_tame(&star), || "pairs or 5-star reported tame".into())?;
    for (name, p) in critical_posets() {
        ensure(poset_is_wild(&p), || format!("critical poset {name} not wild"))?;
    }
    let four = all_posets(4);
    ensure(four.iter().all(|p| !poset_is_wild(p)), || "a 4-element poset reported wild".into())?;
    Ok(format!(
        "{} Euclidean diagrams x 3 orientations (+1 edge each), 6 critical posets, {} posets on 4 elements",
        diagrams.len(),
        four.len()
    ))
}

fn c10_counterexample() -> Check {
    let f = FieldSpec::Prime(2);
    let cfg = SearchConfig::default();
    let (a, b) = rank_triple_counterexample(f);
    ensure(crate::spatial::rank_triple(&a) == crate::spatial::rank_triple(&b), || "rank triples differ".into())?;
    let fast = e2s(spatial2_equiv(&a, &b))?;
    ensure(!equivalent(&fast), || "classifier reports equivalent".into())?;
    let slow = e2s(exhaustive_spatial_equiv(&a, &b, 1 << 22))?;
    ensure(slow == SearchOutcome::CertifiedNo, || format!("exhaustive oracle: {}", slow.tag()))?;
    let one = Mat::from_ints(f, 1, 1, &[1]);
    let zero = Mat::from_ints(f, 1, 1, &[0]);
    let mixed = e2s(tuple_equiv(&[one.clone(), zero.clone()], &[one.clone(), one.clone()], true, &cfg))?;
    ensure(mixed.is_found(), || "([1],[0]) and ([1],[1]) not mixing-equivalent".into())?;
    let sim = e2s(sim_pairs(&[one.clone(), zero], &[one.clone(), one], &cfg))?;
    ensure(sim == SearchOutcome::CertifiedNo, || "([1],[0]) and ([1],[1]) similar".into())?;
    Ok("NotEquivalent by classifier and exhaustive oracle; slice pairs mixing-equivalent, not similar".into())
}
