//! Plain-text file formats.
//!
//! Every file opens with `field Q` or `field GF(p)`; blank lines and lines
//! starting with `#` are ignored. Vertex, element and arrow endpoints are
//! 1-based in files.

use std::fmt::Write as _;

use wildred_core::exactalg::{FieldSpec, Mat, Scalar};
use wildred_core::pencil::Pencil;
use wildred_core::reps::{Poset, PosetRep, Quiver, QuiverArrow, QuiverRep};
use wildred_core::spatial::{slice_tuple, SpatialMatrix};
use wildred_core::{Error, Result};

/// Parses `Q`, `GF(p)` or a bare prime `p`.
pub fn parse_field(s: &str) -> std::result::Result<FieldSpec, String> {
    if s == "Q" {
        return Ok(FieldSpec::Rationals);
    }
    let inner = s.strip_prefix("GF(").and_then(|t| t.strip_suffix(')')).unwrap_or(s);
    let p: u64 = inner.parse().map_err(|_| format!("invalid field `{s}`"))?;
    FieldSpec::prime(p).map_err(|e| e.to_string())
}

#[derive(Clone, Copy)]
struct Token<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

impl Token<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn usize(&self) -> Result<usize> {
        self.text
            .parse()
            .map_err(|_| self.err(format!("expected a nonnegative integer, found `{}`", self.text)))
    }

    fn index(&self, n: usize) -> Result<usize> {
        let i = self.usize()?;
        if i == 0 || i > n {
            return Err(self.err(format!("index {i} outside 1..={n}")));
        }
        Ok(i - 1)
    }
}

/// Significant lines split into tokens, with a cursor.
struct Reader<'a> {
    lines: Vec<Vec<Token<'a>>>,
    pos: usize,
    last_line: usize,
    field: FieldSpec,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let mut lines = Vec::new();
        let mut last_line = 0;
        for (ln, raw) in text.lines().enumerate() {
            last_line = ln + 1;
            let trimmed = raw.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut toks = Vec::new();
            let mut start = None;
            for (i, ch) in raw.char_indices().chain(std::iter::once((raw.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(i),
                    (true, Some(s)) => {
                        toks.push(Token {
                            line: ln + 1,
                            col: raw[..s].chars().count() + 1,
                            text: &raw[s..i],
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
            lines.push(toks);
        }
        Reader {
            lines,
            pos: 0,
            last_line,
            field: FieldSpec::Rationals,
        }
    }

    fn eof_err(&self, msg: &str) -> Error {
        Error::Parse {
            line: self.last_line + 1,
            col: 1,
            msg: format!("unexpected end of input, expected {msg}"),
        }
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l[0].text)
    }

    fn next_line(&mut self, what: &str) -> Result<Vec<Token<'a>>> {
        let l = self.lines.get(self.pos).cloned().ok_or_else(|| self.eof_err(what))?;
        self.pos += 1;
        Ok(l)
    }

    /// Reads `keyword a b …` with exactly `arity` arguments.
    fn keyword(&mut self, kw: &str, arity: usize) -> Result<Vec<Token<'a>>> {
        let l = self.next_line(&format!("`{kw}`"))?;
        if l[0].text != kw {
            return Err(l[0].err(format!("expected `{kw}`, found `{}`", l[0].text)));
        }
        if l.len() != arity + 1 {
            let at = l.get(arity + 1).unwrap_or(&l[l.len() - 1]);
            return Err(at.err(format!("`{kw}` takes {arity} argument(s), found {}", l.len() - 1)));
        }
        Ok(l[1..].to_vec())
    }

    fn header(&mut self, field: Option<FieldSpec>) -> Result<()> {
        let t = self.keyword("field", 1)?;
        let parsed = parse_field(t[0].text).map_err(|m| t[0].err(m))?;
        self.field = field.unwrap_or(parsed);
        Ok(())
    }

    fn rows(&mut self, rows: usize, cols: usize) -> Result<Vec<Vec<Scalar>>> {
        if cols == 0 {
            return Ok(vec![Vec::new(); rows]);
        }
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            let l = self.next_line(&format!("a row of {cols} entries"))?;
            if l.len() != cols {
                let at = l.get(cols).unwrap_or(&l[l.len() - 1]);
                return Err(at.err(format!("expected {cols} entries, found {}", l.len())));
            }
            let mut row = Vec::with_capacity(cols);
            for t in &l {
                row.push(Scalar::parse(self.field, t.text).map_err(|m| t.err(m))?);
            }
            out.push(row);
        }
        Ok(out)
    }

    fn matrix(&mut self) -> Result<Mat> {
        let t = self.keyword("matrix", 2)?;
        let (r, c) = (t[0].usize()?, t[1].usize()?);
        let rows = self.rows(r, c)?;
        Ok(Mat::from_fn(self.field, r, c, |i, j| rows[i][j].clone()))
    }

    fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some(l) => Err(l[0].err(format!("unexpected trailing `{}`", l[0].text))),
            None => Ok(()),
        }
    }
}

fn wrap<T>(e: Error, at: &Token<'_>) -> Result<T> {
    Err(at.err(e.to_string()))
}

pub fn parse_mat(text: &str, field: Option<FieldSpec>) -> Result<Mat> {
    let mut r = Reader::new(text);
    r.header(field)?;
    let m = r.matrix()?;
    r.finish()?;
    Ok(m)
}

/// Two `matrix` blocks of equal shape.
pub fn parse_pair(text: &str, field: Option<FieldSpec>) -> Result<[Mat; 2]> {
    let mut r = Reader::new(text);
    r.header(field)?;
    let a = r.matrix()?;
    let b = r.matrix()?;
    r.finish()?;
    Ok([a, b])
}

pub fn parse_pencil(text: &str, field: Option<FieldSpec>) -> Result<Pencil> {
    let [a, b] = parse_pair(text, field)?;
    Pencil::new(a, b).map_err(|e| Error::Parse {
        line: 1,
        col: 1,
        msg: e.to_string(),
    })
}

pub fn parse_spatial(text: &str, field: Option<FieldSpec>) -> Result<SpatialMatrix> {
    let mut r = Reader::new(text);
    r.header(field)?;
    let t = r.keyword("spatial", 3)?;
    let (m, n, q) = (t[0].usize()?, t[1].usize()?, t[2].usize()?);
    let mut slices = Vec::with_capacity(q);
    for _ in 0..q {
        let rows = r.rows(m, n)?;
        slices.push(Mat::from_fn(r.field, m, n, |i, j| rows[i][j].clone()));
    }
    r.finish()?;
    SpatialMatrix::from_slices(r.field, m, n, &slices).or_else(|e| wrap(e, &t[0]))
}

fn read_quiver(r: &mut Reader<'_>) -> Result<Quiver> {
    let t = r.keyword("quiver", 1)?;
    let v = t[0].usize()?;
    let mut arrows = Vec::new();
    while r.peek_keyword() == Some("arrow") {
        let a = r.keyword("arrow", 3)?;
        arrows.push(QuiverArrow {
            id: a[0].text.to_string(),
            src: a[1].index(v)?,
            tgt: a[2].index(v)?,
        });
    }
    Quiver::new(v, arrows).or_else(|e| wrap(e, &t[0]))
}

/// A bare quiver; a leading `field` line is allowed and ignored.
pub fn parse_quiver(text: &str) -> Result<Quiver> {
    let mut r = Reader::new(text);
    if r.peek_keyword() == Some("field") {
        r.header(None)?;
    }
    let q = read_quiver(&mut r)?;
    r.finish()?;
    Ok(q)
}

pub fn parse_quiver_rep(text: &str, field: Option<FieldSpec>) -> Result<QuiverRep> {
    let mut r = Reader::new(text);
    r.header(field)?;
    let q = read_quiver(&mut r)?;
    let d = r.keyword("dims", q.vertices)?;
    let dims = d.iter().map(|t| t.usize()).collect::<Result<Vec<_>>>()?;
    let mut mats = Vec::with_capacity(q.arrows.len());
    for a in &q.arrows {
        let at = r.lines.get(r.pos).map(|l| l[0]);
        let m = r.matrix()?;
        if m.shape() != (dims[a.tgt], dims[a.src]) {
            let at = at.expect("matrix was read");
            return Err(at.err(format!(
                "arrow `{}` needs a {}x{} matrix, found {}x{}",
                a.id,
                dims[a.tgt],
                dims[a.src],
                m.rows(),
                m.cols()
            )));
        }
        mats.push(m);
    }
    r.finish()?;
    QuiverRep::new(r.field, q, dims, mats).or_else(|e| wrap(e, &d[0]))
}

fn read_poset(r: &mut Reader<'_>) -> Result<Poset> {
    let t = r.keyword("poset", 1)?;
    let n = t[0].usize()?;
    let mut pairs = Vec::new();
    while r.peek_keyword() == Some("rel") {
        let a = r.keyword("rel", 2)?;
        pairs.push((a[0].index(n)?, a[1].index(n)?));
    }
    Poset::new(n, &pairs).or_else(|e| wrap(e, &t[0]))
}

/// A bare poset; a leading `field` line is allowed and ignored.
pub fn parse_poset(text: &str) -> Result<Poset> {
    let mut r = Reader::new(text);
    if r.peek_keyword() == Some("field") {
        r.header(None)?;
    }
    let p = read_poset(&mut r)?;
    r.finish()?;
    Ok(p)
}

pub fn parse_poset_rep(text: &str, field: Option<FieldSpec>) -> Result<PosetRep> {
    let mut r = Reader::new(text);
    r.header(field)?;
    let p = read_poset(&mut r)?;
    let w = r.keyword("widths", p.size())?;
    let widths = w.iter().map(|t| t.usize()).collect::<Result<Vec<_>>>()?;
    let a = r.matrix()?;
    r.finish()?;
    PosetRep::new(p, widths, a).or_else(|e| wrap(e, &w[0]))
}

// ---------------------------------------------------------------------------

fn push_rows(out: &mut String, m: &Mat) {
    if m.cols() == 0 {
        return;
    }
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|s| s.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// `matrix R C` and its rows, without a field line.
pub fn matrix_block(m: &Mat) -> String {
    let mut out = format!("matrix {} {}\n", m.rows(), m.cols());
    push_rows(&mut out, m);
    out
}

pub fn print_mat(m: &Mat) -> String {
    format!("field {}\n{}", m.field(), matrix_block(m))
}

pub fn print_pair(a: &Mat, b: &Mat) -> String {
    format!("field {}\n{}{}", a.field(), matrix_block(a), matrix_block(b))
}

pub fn print_pencil(p: &Pencil) -> String {
    print_pair(&p.a, &p.b)
}

pub fn print_spatial(a: &SpatialMatrix) -> String {
    let (m, n, q) = a.shape();
    let mut out = format!("field {}\nspatial {m} {n} {q}\n", a.field());
    for (k, s) in slice_tuple(a, 3).iter().enumerate() {
        if k > 0 && m > 0 && n > 0 {
            out.push('\n');
        }
        push_rows(&mut out, s);
    }
    out
}

fn push_quiver(out: &mut String, q: &Quiver) {
    writeln!(out, "quiver {}", q.vertices).unwrap();
    for a in &q.arrows {
        writeln!(out, "arrow {} {} {}", a.id, a.src + 1, a.tgt + 1).unwrap();
    }
}

pub fn print_quiver(q: &Quiver) -> String {
    let mut out = String::new();
    push_quiver(&mut out, q);
    out
}

pub fn print_quiver_rep(x: &QuiverRep) -> String {
    let mut out = format!("field {}\n", x.field);
    push_quiver(&mut out, &x.quiver);
    let dims: Vec<String> = x.dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims {}", dims.join(" ")).unwrap();
    for m in &x.mats {
        out.push_str(&matrix_block(m));
    }
    out
}

fn push_poset(out: &mut String, p: &Poset) {
    writeln!(out, "poset {}", p.size()).unwrap();
    for (i, j) in p.pairs() {
        writeln!(out, "rel {} {}", i + 1, j + 1).unwrap();
    }
}

pub fn print_poset(p: &Poset) -> String {
    let mut out = String::new();
    push_poset(&mut out, p);
    out
}

pub fn print_poset_rep(x: &PosetRep) -> String {
    let mut out = format!("field {}\n", x.field());
    push_poset(&mut out, &x.poset);
    let w: Vec<String> = x.widths.iter().map(|d| d.to_string()).collect();
    writeln!(out, "widths {}", w.join(" ")).unwrap();
    out.push_str(&matrix_block(&x.a));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;
    use wildred_core::exactalg::random_mat;

    #[test]
    fn minimal_matrix() {
        let m = parse_mat("field GF(2)\nmatrix 1 1\n1\n", None).unwrap();
        assert_eq!(m, Mat::from_ints(FieldSpec::Prime(2), 1, 1, &[1]));
    }

    #[test]
    fn malformed_dimension_line() {
        let e = parse_mat("field GF(2)\nmatrix 1\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_mat("field GF(2)\nmatrix x 1\n1\n", None).unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                col: 8,
                msg: "expected a nonnegative integer, found `x`".into()
            }
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_mat("field GF(4)\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, col: 7, .. }), "{e}");
        let e = parse_mat("field Q\nmatrix 2 2\n1 2\n3 1/0\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, col: 3, .. }), "{e}");
        let e = parse_mat("field Q\nmatrix 2 2\n1 2\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, col: 1, .. }), "{e}");
        let e = parse_mat("field Q\nmatrix 1 2\n1 2 3\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, col: 5, .. }), "{e}");
        let e = parse_mat("field Q\nmatrix 1 1\n1\nmatrix 1 1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, col: 1, .. }), "{e}");
    }

    #[test]
    fn rationals_and_override() {
        let text = "field Q\n# comment\n\nmatrix 1 3\n  1/2 -3 4/6\n";
        let m = parse_mat(text, None).unwrap();
        assert_eq!(print_mat(&m), "field Q\nmatrix 1 3\n1/2 -3 2/3\n");
        let m = parse_mat(text, Some(FieldSpec::Prime(5))).unwrap();
        assert_eq!(print_mat(&m), "field GF(5)\nmatrix 1 3\n3 2 4\n");
    }

    #[test]
    fn quiver_rep_round_trip() {
        let text = "field GF(7)\nquiver 2\narrow a 1 2\narrow b 2 2\ndims 1 2\nmatrix 2 1\n1\n3\nmatrix 2 2\n0 1\n0 0\n";
        let x = parse_quiver_rep(text, None).unwrap();
        assert_eq!(x.quiver.arrows[0].tgt, 1);
        assert_eq!(print_quiver_rep(&x), text);
        let e = parse_quiver_rep(&text.replace("matrix 2 1\n1\n3\n", "matrix 1 2\n1 3\n"), None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 6, .. }), "{e}");
        let e = parse_quiver("quiver 2\narrow a 1 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, col: 11, .. }), "{e}");
    }

    #[test]
    fn poset_rep_round_trip() {
        let text = "field GF(3)\nposet 3\nrel 1 2\nrel 2 3\nwidths 1 1 1\nmatrix 2 3\n1 0 2\n0 1 1\n";
        let x = parse_poset_rep(text, None).unwrap();
        // relations are printed transitively closed
        let closed = text.replace("rel 2 3\n", "rel 1 3\nrel 2 3\n");
        assert_eq!(print_poset_rep(&x), closed);
        assert_eq!(parse_poset_rep(&closed, None).unwrap(), x);
        let e = parse_poset("poset 2\nrel 1 2\nrel 2 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn spatial_format() {
        let text = "field GF(2)\nspatial 2 1 2\n1\n0\n\n0\n1\n";
        let a = parse_spatial(text, None).unwrap();
        assert_eq!(a.shape(), (2, 1, 2));
        assert_eq!(a.get(1, 0, 1), &Scalar::Fp { v: 1, p: 2 });
        assert_eq!(print_spatial(&a), text);
    }

    #[test]
    fn empty_shapes() {
        let m = Mat::zeros(FieldSpec::Prime(3), 2, 0);
        assert_eq!(parse_mat(&print_mat(&m), None).unwrap(), m);
        let p = Pencil::new(Mat::zeros(FieldSpec::Rationals, 0, 3), Mat::zeros(FieldSpec::Rationals, 0, 3)).unwrap();
        assert_eq!(parse_pencil(&print_pencil(&p), None).unwrap(), p);
    }

    fn field_strategy() -> impl Strategy<Value = FieldSpec> {
        prop_oneof![
            Just(FieldSpec::Rationals),
            Just(FieldSpec::Prime(2)),
            Just(FieldSpec::Prime(3)),
            Just(FieldSpec::Prime(101))
        ]
    }

    proptest! {
        #[test]
        fn spatial_round_trip(f in field_strategy(), m in 0usize..4, n in 0usize..4, q in 0usize..4, seed in any::<u64>()) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let slices: Vec<Mat> = (0..q).map(|_| random_mat(f, m, n, &mut rng, 9)).collect();
            let a = SpatialMatrix::from_slices(f, m, n, &slices).unwrap();
            let text = print_spatial(&a);
            let b = parse_spatial(&text, None).unwrap();
            prop_assert_eq!(&b, &a);
            prop_assert_eq!(print_spatial(&b), text);
        }

        #[test]
        fn pencil_round_trip(f in field_strategy(), m in 0usize..5, n in 0usize..5, seed in any::<u64>()) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let p = Pencil::new(random_mat(f, m, n, &mut rng, 50), random_mat(f, m, n, &mut rng, 50)).unwrap();
            let text = print_pencil(&p);
            prop_assert_eq!(parse_pencil(&text, None).unwrap(), p);
        }
    }
}
