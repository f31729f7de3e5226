//! Command-line front end: argument handling, verb dispatch and exit codes.
//!
//! Exit codes: 0 success, 1 negative answer, 2 usage or input error,
//! 3 computational error.

pub mod formats;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use wildred_core::acceptance::{run_all, run_criterion, CRITERIA};
use wildred_core::exactalg::{FieldSpec, Mat};
use wildred_core::oracle::{
    brute_force_spatial_equiv, sim_pairs, verify_rep_iso, SearchConfig, SearchOutcome, DEFAULT_BOUND,
    DEFAULT_TRIALS,
};
use wildred_core::pencil::{kronecker_data, pencil_equiv_with, PencilEquiv};
use wildred_core::reductions::{
    encode_poset_pair, encode_quiver_pair, gadget_layout, tensor_embed, wild_gadget,
};
use wildred_core::reps::{contains_subposet, critical_posets, poset_iso, quiver_is_tame, quiver_iso};
use wildred_core::spatial::{
    canon_spatial2_with, rank_triple, regular_part, spatial2_equiv_with, transform_spatial, SpatialEquiv,
    SpatialWitness,
};
use wildred_core::Error;

use formats::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "wildred", version, about = "Exact canonical forms, wildness encoders and equivalence oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Reinterpret input entries over this field (`Q`, `GF(p)` or `p`).
    #[arg(long, global = true, value_parser = parse_field)]
    field: Option<FieldSpec>,
    /// Enumeration budget for exhaustive searches.
    #[arg(long, global = true, env = "WILDRED_BUDGET")]
    budget: Option<u64>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sampling trials for probabilistic searches.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Sampling bound for random integers over Q.
    #[arg(long, global = true, default_value_t = DEFAULT_BOUND)]
    bound: i64,
    /// Print block layout tables and witnesses to stderr.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kronecker invariants of a pencil file.
    CanonPencil { file: PathBuf },
    /// Complete invariant of an m×n×2 spatial matrix.
    CanonSpatial2 { file: PathBuf },
    /// Rank triple of a spatial matrix.
    Rank { file: PathBuf },
    /// Regular part of a spatial matrix.
    RegularPart { file: PathBuf },
    /// Matrix pair encoding a quiver representation.
    EncodeQuiver { file: PathBuf },
    /// Matrix pair encoding a poset representation.
    EncodePoset { file: PathBuf },
    /// 15r×15r×3 spatial matrix encoding a pair (X, Y) given as a pencil file.
    EncodeGadget { file: PathBuf },
    /// Cubic tensor embedding of a spatial matrix.
    EncodeTensor { file: PathBuf },
    /// Decide equivalence of two objects of the given kind.
    Equiv {
        #[arg(long, value_enum)]
        kind: Kind,
        a: PathBuf,
        b: PathBuf,
    },
    /// Is the quiver of a quiver file tame? Exit 1 if not.
    TameCheck { file: PathBuf },
    /// Does the poset of a poset file contain a critical subposet? Exit 1 if not.
    WildCheck { file: PathBuf },
    /// Run the acceptance suite.
    Selftest {
        #[arg(long, value_enum, default_value_t = Level::Desk)]
        level: Level,
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Pencil,
    Spatial,
    Quiver,
    Poset,
    Pairs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Level {
    Desk,
}

enum Failure {
    Input(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Input(e.to_string()),
            e => Failure::Compute(e),
        }
    }
}

/// Text for stdout, text for stderr, exit code.
struct Report {
    out: String,
    trace: String,
    code: i32,
}

impl Report {
    fn ok(out: String) -> Self {
        Report {
            out,
            trace: String::new(),
            code: EXIT_OK,
        }
    }
}

type Outcome = std::result::Result<Report, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match dispatch(&cli) {
        Ok(r) => {
            let _ = out.write_all(r.out.as_bytes());
            if cli.trace {
                let _ = err.write_all(r.trace.as_bytes());
            }
            r.code
        }
        Err(Failure::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_COMPUTE
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Attaches the file name to parse errors.
fn parsed<T>(path: &Path, r: wildred_core::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Parse { .. } => Failure::Input(format!("{}: {e}", path.display())),
        e => Failure::Compute(e),
    })
}

fn config(cli: &Cli) -> SearchConfig {
    SearchConfig {
        budget: cli.budget.unwrap_or(SearchConfig::default().budget),
        trials: cli.trials,
        bound: cli.bound,
        seed: cli.seed,
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let f = cli.field;
    let cfg = config(cli);
    match &cli.command {
        Command::CanonPencil { file } => {
            let p = parsed(file, parse_pencil(&read(file)?, f))?;
            Ok(Report::ok(format!("{}\n", kronecker_data(&p)?)))
        }
        Command::CanonSpatial2 { file } => {
            let a = parsed(file, parse_spatial(&read(file)?, f))?;
            let (c, w) = canon_spatial2_with(&a, &cfg)?;
            let mut r = Report::ok(format!("{c}\n"));
            r.trace = witness_text(&["R", "S", "T"], &[&w.r, &w.s, &w.t]);
            Ok(r)
        }
        Command::Rank { file } => {
            let a = parsed(file, parse_spatial(&read(file)?, f))?;
            Ok(Report::ok(format!("{}\n", rank_triple(&a))))
        }
        Command::RegularPart { file } => {
            let a = parsed(file, parse_spatial(&read(file)?, f))?;
            let (reg, w) = regular_part(&a);
            let mut r = Report::ok(print_spatial(&reg));
            r.trace = witness_text(&["R", "S", "T"], &[&w.r, &w.s, &w.t]);
            Ok(r)
        }
        Command::EncodeQuiver { file } => {
            let x = parsed(file, parse_quiver_rep(&read(file)?, f))?;
            let (pair, layout) = encode_quiver_pair(&x)?;
            let mut r = Report::ok(print_pair(&pair.m, &pair.n));
            r.trace = layout.to_string();
            Ok(r)
        }
        Command::EncodePoset { file } => {
            let x = parsed(file, parse_poset_rep(&read(file)?, f))?;
            let (pair, layout) = encode_poset_pair(&x)?;
            let mut r = Report::ok(print_pair(&pair.m, &pair.n));
            r.trace = layout.to_string();
            Ok(r)
        }
        Command::EncodeGadget { file } => {
            let [x, y] = parsed(file, parse_pair(&read(file)?, f))?;
            let g = wild_gadget(&x, &y)?;
            let mut r = Report::ok(print_spatial(&g));
            for (name, start, size) in gadget_layout(x.rows()) {
                writeln!(r.trace, "block {name} rows {}..{}", start + 1, start + size).unwrap();
            }
            Ok(r)
        }
        Command::EncodeTensor { file } => {
            let a = parsed(file, parse_spatial(&read(file)?, f))?;
            Ok(Report::ok(print_spatial(&tensor_embed(&a))))
        }
        Command::Equiv { kind, a, b } => equiv(*kind, a, b, f, &cfg),
        Command::TameCheck { file } => {
            let q = parsed(file, parse_quiver(&read(file)?))?;
            Ok(if quiver_is_tame(&q) {
                Report::ok("tame\n".into())
            } else {
                Report {
                    out: "not tame\n".into(),
                    trace: String::new(),
                    code: EXIT_NEGATIVE,
                }
            })
        }
        Command::WildCheck { file } => {
            let p = parsed(file, parse_poset(&read(file)?))?;
            let hit = critical_posets().into_iter().find(|(_, c)| contains_subposet(&p, c));
            Ok(match hit {
                Some((name, _)) => Report::ok(format!("wild (contains {name})\n")),
                None => Report {
                    out: "not wild\n".into(),
                    trace: String::new(),
                    code: EXIT_NEGATIVE,
                },
            })
        }
        Command::Selftest { level: Level::Desk, criterion } => {
            let reports = match criterion {
                Some(id) if (1..=CRITERIA.len()).contains(id) => vec![run_criterion(*id, cli.seed)],
                Some(id) => return Err(Failure::Input(format!("no criterion {id}; expected 1..={}", CRITERIA.len()))),
                None => run_all(cli.seed),
            };
            let mut out = String::new();
            for r in &reports {
                writeln!(out, "{r}").unwrap();
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            writeln!(out, "{} passed, {failed} failed", reports.len() - failed).unwrap();
            Ok(Report {
                out,
                trace: String::new(),
                code: if failed == 0 { EXIT_OK } else { EXIT_COMPUTE },
            })
        }
    }
}

fn witness_text(names: &[&str], mats: &[&Mat]) -> String {
    let mut s = String::new();
    for (n, m) in names.iter().zip(mats) {
        writeln!(s, "witness {n}").unwrap();
        s.push_str(&matrix_block(m));
    }
    s
}

/// Outcome line, witness blocks and a replay line.
fn verdict(tag: &str, field: FieldSpec, witness: Option<(String, String)>, negative: bool) -> Report {
    let mut out = format!("outcome {tag}\n");
    let code = match witness {
        Some((w, replay)) => {
            writeln!(out, "field {field}").unwrap();
            out.push_str(&w);
            writeln!(out, "replay {replay}: ok").unwrap();
            EXIT_OK
        }
        None if negative => EXIT_NEGATIVE,
        None => EXIT_COMPUTE,
    };
    Report {
        out,
        trace: String::new(),
        code,
    }
}

fn search_verdict<W>(
    out: SearchOutcome<W>,
    field: FieldSpec,
    show: impl FnOnce(W) -> wildred_core::Result<(String, String)>,
) -> Outcome {
    let tag = out.tag();
    Ok(match out {
        SearchOutcome::Found(w) => verdict(tag, field, Some(show(w)?), false),
        SearchOutcome::CertifiedNo => verdict(tag, field, None, true),
        SearchOutcome::Unknown { trials } => {
            let mut r = verdict(tag, field, None, false);
            writeln!(r.out, "no invertible intertwiner in {trials} samples").unwrap();
            r
        }
    })
}

fn replay_failed(what: &str) -> Error {
    Error::Internal(format!("{what} witness failed replay"))
}

fn check_spatial_witness(
    a: &wildred_core::spatial::SpatialMatrix,
    b: &wildred_core::spatial::SpatialMatrix,
    w: &SpatialWitness,
) -> wildred_core::Result<(String, String)> {
    if &transform_spatial(a, w)? != b {
        return Err(replay_failed("spatial"));
    }
    Ok((
        witness_text(&["R", "S", "T"], &[&w.r, &w.s, &w.t]),
        "a'_{i'j'k'} = sum a_ijk r_ii' s_jj' t_kk'".into(),
    ))
}

fn equiv(kind: Kind, pa: &Path, pb: &Path, f: Option<FieldSpec>, cfg: &SearchConfig) -> Outcome {
    let (ta, tb) = (read(pa)?, read(pb)?);
    match kind {
        Kind::Pencil => {
            let x = parsed(pa, parse_pencil(&ta, f))?;
            let y = parsed(pb, parse_pencil(&tb, f))?;
            Ok(match pencil_equiv_with(&x, &y, cfg)? {
                PencilEquiv::Equivalent(w) => {
                    if x.transform(&w) != y {
                        return Err(replay_failed("pencil").into());
                    }
                    let text = witness_text(&["P", "Q"], &[&w.p, &w.q]);
                    verdict("Equivalent", x.field(), Some((text, "P*A*Q = A', P*B*Q = B'".into())), false)
                }
                PencilEquiv::NotEquivalent => verdict("NotEquivalent", x.field(), None, true),
            })
        }
        Kind::Spatial => {
            let a = parsed(pa, parse_spatial(&ta, f))?;
            let b = parsed(pb, parse_spatial(&tb, f))?;
            if a.shape().2 == 2 && b.shape().2 == 2 {
                Ok(match spatial2_equiv_with(&a, &b, cfg)? {
                    SpatialEquiv::Equivalent(w) => {
                        verdict("Equivalent", a.field(), Some(check_spatial_witness(&a, &b, &w)?), false)
                    }
                    SpatialEquiv::NotEquivalent => verdict("NotEquivalent", a.field(), None, true),
                })
            } else {
                let out = brute_force_spatial_equiv(&a, &b, cfg)?;
                search_verdict(out, a.field(), |w| check_spatial_witness(&a, &b, &w))
            }
        }
        Kind::Quiver => {
            let x = parsed(pa, parse_quiver_rep(&ta, f))?;
            let y = parsed(pb, parse_quiver_rep(&tb, f))?;
            let out = quiver_iso(&x, &y, cfg)?;
            search_verdict(out, x.field, |s| {
                if !verify_rep_iso(&x.to_linear(), &y.to_linear(), &s) {
                    return Err(replay_failed("quiver"));
                }
                let names: Vec<String> = (1..=s.len()).map(|v| format!("S{v}")).collect();
                let names: Vec<&str> = names.iter().map(|n| n.as_str()).collect();
                let mats: Vec<&Mat> = s.iter().collect();
                Ok((witness_text(&names, &mats), "S_tgt*A = A'*S_src for every arrow".into()))
            })
        }
        Kind::Poset => {
            let x = parsed(pa, parse_poset_rep(&ta, f))?;
            let y = parsed(pb, parse_poset_rep(&tb, f))?;
            let out = poset_iso(&x, &y, cfg)?;
            search_verdict(out, x.field(), |w| {
                if w.r.mul(&x.a).mul(&w.c) != y.a {
                    return Err(replay_failed("poset"));
                }
                Ok((witness_text(&["R", "C"], &[&w.r, &w.c]), "R*A*C = A'".into()))
            })
        }
        Kind::Pairs => {
            let x = parsed(pa, parse_pair(&ta, f))?;
            let y = parsed(pb, parse_pair(&tb, f))?;
            let out = sim_pairs(&x, &y, cfg)?;
            search_verdict(out, x[0].field(), |s| {
                let si = s.invert()?;
                if (0..2).any(|i| si.mul(&x[i]).mul(&s) != y[i]) {
                    return Err(replay_failed("pair"));
                }
                Ok((witness_text(&["S"], &[&s]), "S^-1*M*S = M', S^-1*N*S = N'".into()))
            })
        }
    }
}
