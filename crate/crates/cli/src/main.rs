//! Command-line front end: stage orchestration, JSON artifacts with
//! hash-chained provenance, and the verification commands.
//!
//! Every artifact records the hash of the setup it was derived from; a
//! stage refuses to consume an artifact whose hash does not match the
//! current flags. All errors leave as machine-readable JSON on stdout with
//! a nonzero exit status.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dlog_core::cosets::{enumerate_cosets, CosetSet};
use dlog_core::descent::{full_dlog, trap_check, DescentCtx};
use dlog_core::error::Error;
use dlog_core::field::FieldTower;
use dlog_core::linlog::{check_heuristic1, DlogTable};
use dlog_core::oracle;
use dlog_core::pipeline::build_table;
use dlog_core::poly::FqsPoly;
use dlog_core::relations::collect_relations;
use dlog_core::setup::{classify_setup, search_setup, SetupConstraints, SetupInstance};

#[derive(Parser)]
#[command(name = "dlog", about = "small-characteristic discrete-log pipeline", version)]
struct Cli {
    #[command(flatten)]
    g: Globals,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Globals {
    /// field characteristic p
    #[arg(long, global = true, default_value_t = 2)]
    p: u32,
    /// extension degree n with q = p^n
    #[arg(long, global = true, default_value_t = 1)]
    n: u32,
    /// target extension degree k (field F_{q^{2k}})
    #[arg(long, global = true, default_value_t = 3)]
    k: u32,
    /// seed for all randomized stages
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// artifact directory
    #[arg(long, global = true, default_value = "artifacts")]
    out_dir: PathBuf,
    /// candidate budget for setup search
    #[arg(long, global = true, default_value_t = 1 << 24)]
    budget: u64,
    /// maximum setups the pipeline may iterate before giving up
    #[arg(long, global = true, default_value_t = 2048)]
    max_setups: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// search a constrained setup and write setup.json
    Setup,
    /// enumerate coset representatives and write cosets.json
    Cosets,
    /// collect factor-base relations and write relations.json
    Relations,
    /// solve the factor-base log table and write dlogs.json
    Linlog,
    /// run one descent and write descent-trace.json
    Descent {
        #[arg(long)]
        target: String,
    },
    /// full discrete log of a target polynomial (end-to-end, cached)
    Dlog {
        #[arg(long)]
        target: String,
    },
    /// verification reports
    Verify {
        #[command(subcommand)]
        what: VerifyCmd,
    },
    /// stage timing summary
    Bench,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// invariant-factor shape of the relation lattice
    Heuristic1,
    /// coset row-lattice certificates
    Theorem4,
    /// exhaustive factor-base surjectivity (tiny q)
    Psi2,
    /// kernel-lattice quotient structure (tiny q)
    Quotient {
        /// use a setup that deliberately violates gcd(k_i, k) = 1
        #[arg(long)]
        violate_gcd: bool,
    },
    /// linear-trap demonstration
    Trap,
}

/// On-disk setup artifact; raw coefficient indices keep it exact.
#[derive(Serialize, Deserialize)]
struct SetupArtifact {
    p: u32,
    n: u32,
    k: u32,
    seed: u64,
    h0: Vec<u16>,
    h1: Vec<u16>,
    h0_display: String,
    h1_display: String,
    f_display: String,
    setup_index: usize,
    setup_hash: String,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("cannot create {dir:?}: {e}")))?;
    let path = dir.join(name);
    let s = serde_json::to_string_pretty(v).expect("serialize");
    fs::write(&path, s).map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}")))?;
    Ok(())
}

fn read_json<T: for<'d> Deserialize<'d>>(dir: &Path, name: &str) -> Option<T> {
    let s = fs::read_to_string(dir.join(name)).ok()?;
    serde_json::from_str(&s).ok()
}

struct Ctx {
    g: Globals,
    t: FieldTower,
}

impl Ctx {
    fn new(g: &Globals) -> Result<Ctx, Error> {
        let t = FieldTower::build(g.p, g.n, g.k, g.seed)?;
        Ok(Ctx { g: g.clone(), t })
    }

    fn constraints(&self) -> SetupConstraints {
        let mut c = SetupConstraints::default();
        // at k = 1 every monic linear has the excluded binomial shape, so
        // the non-Kummer requirement is vacuously unsatisfiable there
        if self.g.k == 1 {
            c.require_nonkummer = false;
        }
        c
    }

    fn setup_from_artifact(&self, a: &SetupArtifact) -> Result<SetupInstance, Error> {
        if (a.p, a.n, a.k, a.seed) != (self.g.p, self.g.n, self.g.k, self.g.seed) {
            return Err(Error::StaleArtifact(
                "setup.json was produced with different parameters; \
                 delete the artifact directory or restore the original flags"
                    .into(),
            ));
        }
        let h0 = FqsPoly::from_coeffs(a.h0.iter().map(|&i| dlog_core::Fq2Elt(i)).collect());
        let h1 = FqsPoly::from_coeffs(a.h1.iter().map(|&i| dlog_core::Fq2Elt(i)).collect());
        let s = dlog_core::setup::instantiate(&self.t, h0, h1, &self.constraints())?;
        if s.hash(&self.t) != a.setup_hash {
            return Err(Error::StaleArtifact("setup hash mismatch".into()));
        }
        Ok(s)
    }

    fn artifact_from_setup(&self, s: &SetupInstance, index: usize) -> SetupArtifact {
        SetupArtifact {
            p: self.g.p,
            n: self.g.n,
            k: self.g.k,
            seed: self.g.seed,
            h0: s.h0.0.iter().map(|c| c.0).collect(),
            h1: s.h1.0.iter().map(|c| c.0).collect(),
            h0_display: self.t.poly_string(&s.h0),
            h1_display: self.t.poly_string(&s.h1),
            f_display: self.t.poly_string(&s.f),
            setup_index: index,
            setup_hash: s.hash(&self.t),
        }
    }

    fn cached_setup(&self) -> Result<Option<SetupInstance>, Error> {
        match read_json::<SetupArtifact>(&self.g.out_dir, "setup.json") {
            Some(a) => Ok(Some(self.setup_from_artifact(&a)?)),
            None => Ok(None),
        }
    }

    fn cosets(&self) -> CosetSet {
        enumerate_cosets(&self.t)
    }

    /// The solved pipeline (setup + relations + table), from cache when the
    /// hashes line up, otherwise rebuilt and persisted.
    fn ensure_table(&self) -> Result<(SetupInstance, CosetSet, DlogTable), Error> {
        let cs = self.cosets();
        if let Some(s) = self.cached_setup()? {
            if let Some(d) = read_json::<Value>(&self.g.out_dir, "dlogs.json") {
                if d["setup_hash"].as_str() == Some(&s.hash(&self.t)) {
                    if let Ok(table) = serde_json::from_value::<DlogTable>(d["table"].clone()) {
                        return Ok((s, cs, table));
                    }
                }
            }
        }
        let out = build_table(
            &self.t,
            &self.constraints(),
            &cs,
            self.g.budget,
            self.g.max_setups,
            self.g.jobs,
        )?;
        let art = self.artifact_from_setup(&out.setup, out.setup_index);
        write_json(&self.g.out_dir, "setup.json", &art)?;
        write_json(
            &self.g.out_dir,
            "relations.json",
            &json!({
                "setup_hash": art.setup_hash,
                "width": out.relations.width,
                "sampled": out.relations.sampled().count(),
                "rows": out.relations.rows,
            }),
        )?;
        write_json(
            &self.g.out_dir,
            "dlogs.json",
            &json!({
                "setup_hash": art.setup_hash,
                "setups_tried": out.setups_tried,
                "shape": out.shape,
                "table": out.table,
            }),
        )?;
        Ok((out.setup, cs, out.table))
    }
}

fn run(cli: Cli) -> Result<Value, Error> {
    let ctx = Ctx::new(&cli.g)?;
    let g = &ctx.g;
    let t = &ctx.t;
    match cli.cmd {
        Cmd::Setup => {
            let s = match ctx.cached_setup()? {
                Some(s) => s,
                None => {
                    let s = search_setup(t, &ctx.constraints(), g.budget)?;
                    write_json(&g.out_dir, "setup.json", &ctx.artifact_from_setup(&s, 0))?;
                    s
                }
            };
            let report = classify_setup(t, &s);
            Ok(json!({
                "h0": t.poly_string(&s.h0),
                "h1": t.poly_string(&s.h1),
                "f": t.poly_string(&s.f),
                "ring_poly": t.poly_string(&s.ring_poly),
                "setup_hash": s.hash(t),
                "classify": report,
            }))
        }
        Cmd::Cosets => {
            let cs = ctx.cosets();
            write_json(
                &g.out_dir,
                "cosets.json",
                &json!({ "q": t.q, "count": cs.reps.len(), "reps": cs.reps }),
            )?;
            Ok(json!({ "q": t.q, "count": cs.reps.len(), "expected": t.q as u64 * (t.q as u64 * t.q as u64 + 1) }))
        }
        Cmd::Relations => {
            let s = match ctx.cached_setup()? {
                Some(s) => s,
                None => search_setup(t, &ctx.constraints(), g.budget)?,
            };
            let art = ctx.artifact_from_setup(&s, 0);
            write_json(&g.out_dir, "setup.json", &art)?;
            let cs = ctx.cosets();
            let rels = collect_relations(t, &s, &cs, g.jobs, false)?;
            let sampled = rels.sampled().count();
            write_json(
                &g.out_dir,
                "relations.json",
                &json!({
                    "setup_hash": art.setup_hash,
                    "width": rels.width,
                    "sampled": sampled,
                    "rows": rels.rows,
                }),
            )?;
            Ok(json!({ "setup_hash": art.setup_hash, "sampled": sampled, "width": rels.width }))
        }
        Cmd::Linlog => {
            let (s, _cs, table) = ctx.ensure_table()?;
            Ok(json!({
                "setup_hash": s.hash(t),
                "base": t.poly_string(&FqsPoly::linear(table.base)),
                "log_lambda": table.log_lambda,
                "order": table.order,
                "corrections": table.corrections,
            }))
        }
        Cmd::Descent { target } => {
            let (s, cs, table) = ctx.ensure_table()?;
            let w = t.parse_poly(&target)?;
            let wm = t.pmonic(&t.pmod(&w, &s.f));
            if wm.degree() < 1 {
                return Err(Error::DegreeOutOfRange(wm.degree().max(0) as usize));
            }
            let status = trap_check(t, &wm, &s)?;
            let mut dctx = DescentCtx::new(t, &s, &cs, &table);
            let mut trace = Vec::new();
            let log = dctx.poly_log(&wm, &mut trace)?;
            write_json(
                &g.out_dir,
                "descent-trace.json",
                &json!({
                    "setup_hash": s.hash(t),
                    "target": t.poly_string(&wm),
                    "status": status,
                    "log": log,
                    "trace": trace,
                }),
            )?;
            Ok(json!({ "target": t.poly_string(&wm), "status": status, "log": log }))
        }
        Cmd::Dlog { target } => {
            let (s, cs, table) = ctx.ensure_table()?;
            let w = t.parse_poly(&target)?;
            let (log, trace) = full_dlog(t, &s, &table, &cs, &w)?;
            write_json(
                &g.out_dir,
                "descent-trace.json",
                &json!({
                    "setup_hash": s.hash(t),
                    "target": t.poly_string(&w),
                    "log": log,
                    "trace": trace,
                }),
            )?;
            // full_dlog returns only after its own exponentiation check
            Ok(json!({
                "target": t.poly_string(&w),
                "base": t.poly_string(&FqsPoly::linear(table.base)),
                "log": log,
                "order": table.order,
                "verified": true,
            }))
        }
        Cmd::Verify { what } => {
            let report = match what {
                VerifyCmd::Heuristic1 => {
                    let (s, cs, _table) = ctx.ensure_table()?;
                    let rels = collect_relations(t, &s, &cs, g.jobs, false)?;
                    let rep = check_heuristic1(t, &rels);
                    json!({ "setup_hash": s.hash(t), "heuristic1": rep })
                }
                VerifyCmd::Theorem4 => {
                    let cs = ctx.cosets();
                    let cert = dlog_core::cosets::verify_theorem4(t, &cs)?;
                    json!({ "theorem4": cert, "pass": true })
                }
                VerifyCmd::Psi2 => {
                    let s = match ctx.cached_setup()? {
                        Some(s) => s,
                        None => search_setup(t, &ctx.constraints(), g.budget)?,
                    };
                    let rep = oracle::verify_psi2_surjective(t, &s)?;
                    json!({ "psi2": rep })
                }
                VerifyCmd::Quotient { violate_gcd } => {
                    let s = if violate_gcd {
                        let mut c = ctx.constraints();
                        c.require_gcd_one = false;
                        dlog_core::setup::search_setups(t, &c, g.budget, 256)?
                            .into_iter()
                            .find(|s| {
                                s.cofactors
                                    .iter()
                                    .any(|&(_, _, ki)| dlog_core::numint::gcd(ki as u64, t.k as u64) > 1)
                            })
                            .ok_or(Error::SearchExhausted { tried: 256, closest_miss: None })?
                    } else {
                        match ctx.cached_setup()? {
                            Some(s) => s,
                            None => search_setup(t, &ctx.constraints(), g.budget)?,
                        }
                    };
                    let rep = oracle::quotient_structure_check(t, &s)?;
                    json!({ "quotient": rep })
                }
                VerifyCmd::Trap => {
                    let rep = oracle::demonstrate_linear_trap(t, g.budget)?;
                    json!({ "trap": rep })
                }
            };
            write_json(&g.out_dir, "report.json", &report)?;
            Ok(report)
        }
        Cmd::Bench => {
            let t0 = Instant::now();
            let cs = ctx.cosets();
            let t_cosets = t0.elapsed();
            let t0 = Instant::now();
            let out = build_table(t, &ctx.constraints(), &cs, g.budget, g.max_setups, g.jobs)?;
            let t_table = t0.elapsed();
            let base = FqsPoly::linear(out.table.base);
            let target = t.ppowmod(&base, 0xBEEF % out.table.order, &out.setup.f);
            let t0 = Instant::now();
            let (log, _) = full_dlog(t, &out.setup, &out.table, &cs, &target)?;
            let t_dlog = t0.elapsed();
            let report = json!({
                "q": t.q, "k": t.k,
                "cosets_ms": t_cosets.as_secs_f64() * 1e3,
                "table_ms": t_table.as_secs_f64() * 1e3,
                "dlog_ms": t_dlog.as_secs_f64() * 1e3,
                "setups_tried": out.setups_tried,
                "sample_log": log,
            });
            write_json(&g.out_dir, "report.json", &report)?;
            Ok(report)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => println!("{}", serde_json::to_string_pretty(&v).unwrap()),
        Err(e) => {
            let dbg = format!("{e:?}");
            let kind: String = dbg
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            let out = json!({ "error": { "kind": kind, "message": e.to_string() } });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            std::process::exit(1);
        }
    }
}
