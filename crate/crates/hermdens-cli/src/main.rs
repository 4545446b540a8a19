//! `hermdens`: tables, single values, verification suites and oracle counts.
//!
//! Exit status: 0 when every requested check passes, 1 when a check fails or
//! routes disagree, 2 on an error (reported as JSON on stderr).

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hermdens::cy::{
    cy_d, cy_d_gated, fourier_pden_primitive, horizontal_counts, horizontal_ratio, pden_lattice, pden_primitive_at,
    DensityValue, Route,
};
use hermdens::error::{Error, DEFAULT_BUDGET};
use hermdens::lattice_enum::{coset_mu_lambda, mu_closed, MuKind};
use hermdens::oracle::{density, density_poly, herm_count, CountJob, CountMode};
use hermdens::padic::{GramMatrix, HermLattice, Invariants, Profile};
use hermdens::suites::{run_suite, Suite, SuiteConfig};
use hermdens::QRat;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "hermdens", version, about = "Exact hermitian local densities and their checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// Value of q for numeric evaluation and residue characteristic for enumeration.
    #[arg(long, global = true)]
    q0: Option<u64>,
    /// Limit on enumeration work.
    #[arg(long, global = true)]
    budget: Option<u128>,
    #[arg(long, global = true, value_enum)]
    output: Option<Output>,
    /// Recorded in the output for reproducibility.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key=value file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    ClosedForm,
    StratumSum,
    Enumeration,
    All,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// D_{n,h} for a profile or an invariant tuple.
    Cy {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        h: i64,
        /// `a,b,c`
        #[arg(long, conflicts_with = "lam")]
        profile: Option<String>,
        /// nonincreasing invariants
        #[arg(long)]
        lam: Option<String>,
        /// skip the parity gate for an invariant tuple
        #[arg(long)]
        unchecked: bool,
    },
    /// Sum of D over integral overlattices of A_lambda.
    Pden {
        #[arg(long)]
        lam: String,
        #[arg(long)]
        h: i64,
    },
    /// Primitive sum at L♭ = A_lambda and val(x,x) = xval >= 0.
    PdenPrim {
        #[arg(long)]
        lam: String,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        h: i64,
        #[arg(long, allow_hyphen_values = true)]
        xval: i64,
    },
    /// Fourier transform of the primitive density at xval < 0.
    Fourier {
        #[arg(long)]
        lam: String,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        h: i64,
        #[arg(long, allow_hyphen_values = true)]
        xval: i64,
        #[arg(long, value_enum, default_value = "all")]
        route: RouteArg,
    },
    /// mu, mu_plus or mu_plusplus of A_lambda.
    Mu {
        #[arg(long)]
        lam: String,
        #[arg(long, default_value = "mu")]
        kind: String,
    },
    /// Horizontal count ratio, closed form against overlattice counts.
    Ratio {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        lam: i64,
    },
    /// Brute-force hermitian counts and densities.
    Oracle {
        /// invariants of the target M
        #[arg(long)]
        m: String,
        /// invariants of the source L
        #[arg(long)]
        l: String,
        /// raw count at this precision instead of a density
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, default_value = "all")]
        mode: String,
        /// fit the density polynomial through k = 0..=kmax
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Run named verification suites.
    Verify {
        /// suite name, repeatable; `all` runs every suite
        #[arg(long = "suite", required = true)]
        suites: Vec<String>,
        /// size bound passed to each suite
        #[arg(long)]
        nmax: Option<i64>,
    },
    /// Emit tables.
    Table {
        /// regenerate the D and Fourier tables of the small-rank examples
        #[arg(long, alias = "paper-sec")]
        section: Option<u32>,
        /// all D_{n,h}(a,b,c) with n <= this bound
        #[arg(long)]
        nmax: Option<i64>,
    },
}

struct Ctx {
    q0: u64,
    budget: u128,
    output: Output,
    seed: u64,
}

impl Ctx {
    fn resolve(g: &Global) -> Result<Ctx, Error> {
        let file = match &g.config {
            Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?)?,
            None => BTreeMap::new(),
        };
        let from_file = |k: &str| file.get(k).cloned();
        let num = |k: &str| -> Result<Option<u128>, Error> {
            from_file(k).map(|v| v.parse::<u128>().map_err(|e| Error::Parse(format!("{k}={v}: {e}")))).transpose()
        };
        let q0 = g.q0.or(num("q0")?.map(|v| v as u64)).unwrap_or(3);
        let budget = g.budget.or(num("budget")?).unwrap_or(DEFAULT_BUDGET);
        let seed = g.seed.or(num("seed")?.map(|v| v as u64)).unwrap_or(0);
        let output = match (g.output, from_file("output").as_deref()) {
            (Some(o), _) => o,
            (None, Some("csv")) => Output::Csv,
            (None, Some("json")) | (None, None) => Output::Json,
            (None, Some(o)) => return Err(Error::Parse(format!("output={o}"))),
        };
        if q0 < 2 {
            return Err(Error::InvalidPrime(q0));
        }
        Ok(Ctx { q0, budget, output, seed })
    }

    fn eval(&self, x: &QRat) -> Result<String, Error> {
        Ok(x.eval(self.q0 as i64)?.to_string())
    }
}

fn parse_config(s: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for (i, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("config line {}: {line}", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Rows written either as one JSON document or as CSV.
struct Report {
    kind: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    extra: serde_json::Map<String, Value>,
    ok: bool,
}

impl Report {
    fn new(kind: &'static str, columns: &[&'static str]) -> Self {
        Report { kind, columns: columns.to_vec(), rows: Vec::new(), extra: serde_json::Map::new(), ok: true }
    }

    fn row(&mut self, r: Vec<String>) {
        debug_assert_eq!(r.len(), self.columns.len());
        self.rows.push(r);
    }

    fn print(&self, ctx: &Ctx) -> Result<(), Error> {
        match ctx.output {
            Output::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: serde_json::Map<String, Value> =
                            self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), Value::String(v.clone()))).collect();
                        Value::Object(m)
                    })
                    .collect();
                let mut doc = serde_json::Map::new();
                doc.insert("schema".into(), json!(1));
                doc.insert("kind".into(), json!(self.kind));
                doc.insert("q0".into(), json!(ctx.q0));
                doc.insert("seed".into(), json!(ctx.seed));
                doc.insert("ok".into(), json!(self.ok));
                doc.insert("rows".into(), Value::Array(rows));
                for (k, v) in &self.extra {
                    doc.insert(k.clone(), v.clone());
                }
                println!("{}", serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable"));
            }
            Output::Csv => {
                let mut w = csv::Writer::from_writer(std::io::stdout());
                let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
                w.write_record(&self.columns).map_err(io)?;
                for r in &self.rows {
                    w.write_record(r).map_err(io)?;
                }
                w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))?;
            }
        }
        Ok(())
    }
}

fn lam_arg(s: &str) -> Result<Invariants, Error> {
    let inv = Invariants::parse(s)?;
    let given: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
        .collect::<Result<_, _>>()?;
    if given != inv.vals {
        return Err(Error::InvalidInvariants(format!("{s} is not nonincreasing")));
    }
    Ok(inv)
}

fn value_row(ctx: &Ctx, v: &DensityValue) -> Result<Vec<String>, Error> {
    Ok(vec![v.key.clone(), v.route.to_string(), v.value.to_string(), ctx.eval(&v.value)?])
}

const VALUE_COLS: [&str; 4] = ["key", "route", "value", "at_q0"];

const ENUM_NOTE: &str = "values built from enumerated counts are exact at q = q0 only";

fn run(cli: Cli) -> Result<bool, Error> {
    let ctx = Ctx::resolve(&cli.global)?;
    let (q0, budget) = (ctx.q0, ctx.budget);
    let report = match cli.cmd {
        Cmd::Cy { n, h, profile, lam, unchecked } => {
            let mut r = Report::new("cy", &["n", "h", "profile", "value", "at_q0"]);
            let (p, v) = match (profile, lam) {
                (Some(p), _) => {
                    let p = Profile::parse(&p)?;
                    (p, cy_d(n, h, p)?)
                }
                (None, Some(l)) => {
                    let inv = lam_arg(&l)?;
                    if inv.rank() as i64 != n {
                        return Err(Error::InvalidInvariants(format!("{inv} does not have rank {n}")));
                    }
                    let p = inv.profile()?;
                    (p, cy_d_gated(n, h, p, inv.val(), unchecked)?)
                }
                (None, None) => return Err(Error::Parse("give --profile or --lam".into())),
            };
            r.row(vec![n.to_string(), h.to_string(), p.to_string(), v.to_string(), ctx.eval(&v)?]);
            r
        }
        Cmd::Pden { lam, h } => {
            let inv = lam_arg(&lam)?;
            let v = pden_lattice(&HermLattice::diag(q0, &inv.vals)?, h, budget)?;
            let mut r = Report::new("pden", &VALUE_COLS);
            r.row(value_row(&ctx, &v)?);
            r
        }
        Cmd::PdenPrim { lam, n, h, xval } => {
            let inv = lam_arg(&lam)?;
            if inv.rank() as i64 + 1 != n {
                return Err(Error::InvalidInvariants(format!("{inv} must have rank {}", n - 1)));
            }
            let v = pden_primitive_at(&inv, h, xval, q0, budget)?;
            let mut r = Report::new("pden-prim", &VALUE_COLS);
            r.extra.insert("note".into(), json!(ENUM_NOTE));
            r.row(value_row(&ctx, &v)?);
            r
        }
        Cmd::Fourier { lam, n, h, xval, route } => {
            let inv = lam_arg(&lam)?;
            let routes = match route {
                RouteArg::ClosedForm => vec![Route::ClosedForm],
                RouteArg::StratumSum => vec![Route::StratumSum],
                RouteArg::Enumeration => vec![Route::Enumeration],
                RouteArg::All => vec![Route::ClosedForm, Route::StratumSum, Route::Enumeration],
            };
            let mut r = Report::new("fourier", &VALUE_COLS);
            let mut at = Vec::new();
            for rt in routes {
                let v = fourier_pden_primitive(n, h, &inv, xval, rt, q0, budget)?;
                at.push(ctx.eval(&v.value)?);
                r.row(value_row(&ctx, &v)?);
            }
            if route == RouteArg::Enumeration || route == RouteArg::All {
                r.extra.insert("note".into(), json!(ENUM_NOTE));
            }
            let agree = at.windows(2).all(|w| w[0] == w[1]);
            r.extra.insert("agree".into(), json!(agree));
            r.ok = agree;
            r
        }
        Cmd::Mu { lam, kind } => {
            let inv = lam_arg(&lam)?;
            let k = MuKind::parse(&kind)?;
            let counted = coset_mu_lambda(&inv, k, q0, budget)?;
            let mut r = Report::new("mu", &["lam", "kind", "closed", "closed_at_q0", "enumerated"]);
            let (closed, at) = if k == MuKind::Mu {
                let c = mu_closed(&inv)?;
                (c.to_string(), ctx.eval(&c)?)
            } else {
                (String::new(), String::new())
            };
            if k == MuKind::Mu {
                r.ok = at == counted.to_string();
            }
            r.row(vec![inv.to_string(), kind, closed, at, counted.to_string()]);
            r
        }
        Cmd::Ratio { n, lam } => {
            let closed = horizontal_ratio(n, lam)?;
            let (a, b) = horizontal_counts(n, lam, q0, budget)?;
            let counted = num_rational::BigRational::new(a.into(), b.into());
            let mut r = Report::new("ratio", &["n", "lam", "closed", "closed_at_q0", "counted"]);
            r.ok = closed.eval(q0 as i64)? == counted;
            r.row(vec![n.to_string(), lam.to_string(), closed.to_string(), ctx.eval(&closed)?, counted.to_string()]);
            r
        }
        Cmd::Oracle { m, l, d, mode, kmax } => {
            let (mi, li) = (lam_arg(&m)?, lam_arg(&l)?);
            let (gm, gl) = (GramMatrix::diag(q0, &mi.vals)?, GramMatrix::diag(q0, &li.vals)?);
            let mode = CountMode::parse(&mode)?;
            let mut r = Report::new("oracle", &["m", "l", "count", "d", "normalized", "stabilized"]);
            if let Some(d) = d {
                let c = herm_count(&CountJob { m_gram: gm, l_gram: gl, p: q0, d, mode }, budget)?;
                r.row(vec![mi.to_string(), li.to_string(), c.to_string(), d.to_string(), String::new(), String::new()]);
            } else if let Some(k) = kmax {
                let poly = density_poly(&gm, &gl, q0, k, budget)?;
                r.columns = vec!["k", "x", "density"];
                for (k, x, y) in &poly.points {
                    r.row(vec![k.to_string(), x.to_string(), y.to_string()]);
                }
                r.extra.insert("coefficients".into(), json!(poly.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
                r.extra.insert("derivative".into(), json!(poly.derivative.to_string()));
                r.extra.insert("extra_point_checked".into(), json!(poly.extra_checked));
            } else {
                let rep = density(&gm, &gl, q0, mode, budget)?;
                r.row(vec![
                    mi.to_string(),
                    li.to_string(),
                    rep.counts[0].clone(),
                    rep.d.to_string(),
                    rep.normalized.to_string(),
                    rep.stabilized.to_string(),
                ]);
            }
            r
        }
        Cmd::Verify { suites, nmax } => {
            let list: Vec<Suite> = if suites.iter().any(|s| s.eq_ignore_ascii_case("all")) {
                Suite::ALL.to_vec()
            } else {
                suites.iter().map(|s| Suite::parse(s)).collect::<Result<_, _>>()?
            };
            let mut r = Report::new("verify", &["suite", "passed", "failed", "ok"]);
            let mut details = Vec::new();
            for s in list {
                let rep = run_suite(s, &SuiteConfig { size: nmax, p: q0, budget });
                r.ok &= rep.ok();
                r.row(vec![rep.suite.clone(), rep.passed.to_string(), rep.failed.to_string(), rep.ok().to_string()]);
                details.push(json!({"suite": rep.suite, "failures": rep.failures, "notes": rep.notes}));
            }
            r.extra.insert("details".into(), Value::Array(details));
            r
        }
        Cmd::Table { section, nmax } => match (section, nmax) {
            (Some(4), _) => small_rank_tables(&ctx)?,
            (Some(s), _) => return Err(Error::UnsupportedKind(format!("no table for section {s}"))),
            (None, Some(nmax)) => cy_table(&ctx, nmax)?,
            (None, None) => return Err(Error::Parse("give --section 4 or --nmax".into())),
        },
    };
    report.print(&ctx)?;
    Ok(report.ok)
}

fn cy_table(ctx: &Ctx, nmax: i64) -> Result<Report, Error> {
    let mut r = Report::new("cy-table", &["n", "h", "a", "b", "c", "parity", "D", "D_at_q0"]);
    for n in 1..=nmax {
        for h in 0..=n {
            for a in 0..=n {
                for b in 0..=n - a {
                    let c = n - a - b;
                    let v = cy_d(n, h, Profile::try_new(a, b, c)?)?;
                    let parity = if (h + 1) % 2 == 0 { "even" } else { "odd" };
                    r.row(vec![
                        n.to_string(),
                        h.to_string(),
                        a.to_string(),
                        b.to_string(),
                        c.to_string(),
                        parity.to_string(),
                        v.to_string(),
                        ctx.eval(&v)?,
                    ]);
                }
            }
        }
    }
    Ok(r)
}

/// D_{3,1} on the four rank-3 examples, the primitive sums for (n,h) = (4,2)
/// and the Fourier transform at val(x,x) = -1.
fn small_rank_tables(ctx: &Ctx) -> Result<Report, Error> {
    let mut r = Report::new("small-rank", &["table", "lam", "param", "value", "at_q0"]);
    r.extra.insert("note".into(), json!(ENUM_NOTE));
    let d31 = [[4, 4, 4], [4, 3, 1], [4, 4, 0], [3, 1, 0]];
    for lam in d31 {
        let inv = Invariants::new(lam.to_vec());
        let v = hermdens::cy::cy_d_lambda(3, 1, &inv)?;
        r.row(vec!["D_3,1".into(), inv.to_string(), String::new(), v.to_string(), ctx.eval(&v)?]);
    }
    for lam in [[1, 0, 0], [2, 1, 0], [3, 0, 0], [2, 2, 1]] {
        let inv = Invariants::new(lam.to_vec());
        for a in [2, 4] {
            let v = pden_primitive_at(&inv, 2, a, ctx.q0, ctx.budget)?;
            r.row(vec!["pden-prim_4,2".into(), inv.to_string(), format!("xval={a}"), v.value.to_string(), ctx.eval(&v.value)?]);
        }
    }
    for lam in d31 {
        let inv = Invariants::new(lam.to_vec());
        let v = fourier_pden_primitive(4, 2, &inv, -1, Route::ClosedForm, ctx.q0, ctx.budget)?;
        r.row(vec!["fourier_4,2".into(), inv.to_string(), "xval=-1".into(), v.value.to_string(), ctx.eval(&v.value)?]);
    }
    Ok(r)
}

fn error_name(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let doc = json!({"schema": 1, "error": error_name(&e), "message": e.to_string()});
            eprintln!("{doc}");
            ExitCode::from(2)
        }
    }
}
