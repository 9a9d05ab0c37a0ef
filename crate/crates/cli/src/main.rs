//! `zs`: command-line front end. Every command prints one JSON document with
//! `"schema": 1`. Exit status is 0 when the property holds or the object is
//! found, 1 when it is refuted or not found, and 2 on any operational error.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use zerosum::digraph::{
    bounds_row, extremal_local_search, f_exhaustive_with, find_zero_sum_cycle_bounded, lower_bound_construction,
    verify_cycle, Checkpoint, CycleCertificateJson, FSearchOptions, FVerdict, WeightedDigraph,
    DEFAULT_MAX_VERTICES,
};
use zerosum::gadget::{
    default_level_count, extract_useful_families, level_predicate_violations, recursion_step_report,
    solve_by_gadgets,
};
use zerosum::matroid::{
    additive_basis_threshold, additive_basis_union_test, pack_disjoint_bases, packing_condition_bruteforce,
    BasePacking, DEFAULT_PACKING_BUDGET,
};
use zerosum::reduced::{
    equipartition_coefficient, full_sumset_by_coefficient, h_exact, h_lower_bound,
    refute_reduced_dim2, RefutationCertificate,
};
use zerosum::{is_reduced, reduce, stabilizer, sumset, Error, Multiset};

const DEFAULT_H_BUDGET: u64 = 1_000_000_000;

#[derive(Parser)]
#[command(name = "zs", version, about = "Zero-sum cycles in Z_p^k-weighted complete digraphs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Search budget; overrides each command's default.
    #[arg(long, global = true, env = "ZS_BUDGET")]
    budget: Option<u64>,
    /// Also write the output document to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Group {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    k: u32,
}

#[derive(Args)]
struct Input {
    /// JSON input file, or `-` for stdin.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sumset, reducedness, a reduction and the stabilizer of a multiset.
    Sumset(Input),
    /// Exact h_p(k) with bounds and a witness.
    H(Group),
    /// Pack t disjoint bases out of a multiset.
    Pack {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        t: usize,
        /// Also evaluate the counting condition by enumeration.
        #[arg(long)]
        check: bool,
    },
    /// Random unions of l bases: how often is the sumset everything?
    BasisTest {
        #[command(flatten)]
        group: Group,
        /// Number of bases per union (default: the additive-basis threshold).
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Brute-force zero-sum cycle search in a weighting.
    Cycle(Input),
    /// Do all weightings on n vertices have a zero-sum cycle?
    F {
        #[command(flatten)]
        group: Group,
        #[arg(long)]
        n: usize,
        /// Write progress to this checkpoint file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue from the checkpoint file.
        #[arg(long, requires = "checkpoint")]
        resume: bool,
        /// Weightings per checkpoint.
        #[arg(long, default_value_t = 1 << 16)]
        block: u64,
    },
    /// The zero-sum-free weighting on (p-1)k vertices.
    Construct(Group),
    /// Hill-climb towards a zero-sum-free weighting.
    Extremal {
        #[command(flatten)]
        group: Group,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
    },
    /// Gadget-based zero-sum cycle solver (sound, incomplete).
    GadgetSolve(Input),
    /// Gadget levels plus one dimension-reduction step.
    RecursionReport {
        #[command(flatten)]
        input: Input,
        /// Number of levels to extract.
        #[arg(long)]
        t: Option<usize>,
    },
    /// Balanced polynomial coefficient of a multiset of vectors.
    Coeff {
        #[command(flatten)]
        input: Input,
        /// Comma-separated exponents (default: p-1 in every coordinate).
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
    },
    /// Refute reducedness of a planar multiset of size ceil(5(p-1)/2).
    RefuteDim2(Input),
    /// Evaluate the asymptotic bounds at (p, k).
    Bounds(Group),
    /// Replay a certificate document produced by another command.
    Verify(Input),
}

struct Outcome {
    doc: Value,
    code: u8,
}

fn outcome(code: u8, doc: Value) -> Result<Outcome, String> {
    Ok(Outcome { doc, code })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).map_err(|e| e.to_string())?;
    } else {
        text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Accepts a bare weighting or any output document that embeds one.
fn read_weighting(path: &Path) -> Result<WeightedDigraph, String> {
    let v: Value = read_json(path)?;
    let inner = v.get("weighting").cloned().unwrap_or(v);
    WeightedDigraph::deserialize(inner).map_err(|e| format!("{}: {e}", path.display()))
}

fn err(e: Error) -> String {
    e.to_string()
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn run(cli: &Cli) -> Result<Outcome, String> {
    let budget = cli.budget;
    match &cli.cmd {
        Cmd::Sumset(input) => {
            let s: Multiset = read_json(&input.input)?;
            let img = sumset(&s);
            let stab = stabilizer(&img).map_err(err)?;
            outcome(
                0,
                json!({
                    "sumset": img,
                    "size": img.size(),
                    "is_full": img.is_full(),
                    "is_reduced": is_reduced(&s),
                    "reduced": reduce(&s),
                    "stabilizer": stab,
                }),
            )
        }
        Cmd::H(Group { p, k }) => {
            let b = budget.unwrap_or(DEFAULT_H_BUDGET);
            let r = h_exact(*p, *k, b).map_err(err)?;
            let mut doc = to_value(&r);
            match r.exact {
                Some(_) => {
                    doc["kind"] = json!("reduced_witness");
                    outcome(0, doc)
                }
                None => {
                    doc["verdict"] = json!("BUDGET_EXCEEDED");
                    outcome(2, doc)
                }
            }
        }
        Cmd::Pack { input, t, check } => {
            let s: Multiset = read_json(&input.input)?;
            let packing = pack_disjoint_bases(&s, *t).map_err(err)?;
            let mut doc = json!({ "input": s, "t": t, "found": packing.is_some() });
            if *check {
                let b = budget.map_or(DEFAULT_PACKING_BUDGET, u128::from);
                doc["condition_holds"] = json!(packing_condition_bruteforce(&s, *t, b).map_err(err)?);
            }
            match packing {
                Some(bp) => {
                    doc["kind"] = json!("packing");
                    doc["bases"] = to_value(&bp.bases);
                    doc["leftover"] = to_value(&bp.leftover);
                    outcome(0, doc)
                }
                None => outcome(1, doc),
            }
        }
        Cmd::BasisTest { group, l, trials, seed } => {
            let l = l.unwrap_or_else(|| additive_basis_threshold(group.p, group.k).max(1));
            let r = additive_basis_union_test(group.p, group.k, l, *trials, *seed).map_err(err)?;
            outcome(if r.failures.is_empty() { 0 } else { 1 }, to_value(&r))
        }
        Cmd::Cycle(input) => {
            let g = read_weighting(&input.input)?;
            let limit = budget.map_or(DEFAULT_MAX_VERTICES, |b| b as usize);
            match find_zero_sum_cycle_bounded(&g, limit).map_err(err)? {
                Some(cert) => outcome(
                    0,
                    json!({ "kind": "cycle", "verdict": "FOUND", "weighting": g, "certificate": cert }),
                ),
                None => outcome(1, json!({ "kind": "zero_sum_free", "verdict": "NONE", "weighting": g })),
            }
        }
        Cmd::F { group, n, checkpoint, resume, block } => {
            let mut opts = FSearchOptions { block: *block, ..Default::default() };
            if let Some(b) = budget {
                opts.budget = b;
            }
            if *resume {
                let path = checkpoint.as_ref().expect("clap enforces --checkpoint");
                let c: Checkpoint = read_json(path)?;
                if (c.p, c.k, c.n) != (group.p, group.k, *n) {
                    return Err("checkpoint belongs to a different (p, k, n)".into());
                }
                if c.verdict_so_far == "ALL_HAVE_CYCLE" {
                    opts.resume_from = c.range_done[1];
                }
            }
            let mut write_error = None;
            let v = f_exhaustive_with(group.p, group.k, *n, &opts, |c| {
                if let Some(path) = checkpoint {
                    if let Err(e) = fs::write(path, to_value(c).to_string()) {
                        write_error = Some(format!("{}: {e}", path.display()));
                    }
                }
            })
            .map_err(err)?;
            if let Some(e) = write_error {
                return Err(e);
            }
            let mut doc = to_value(&v);
            doc["p"] = json!(group.p);
            doc["k"] = json!(group.k);
            doc["n"] = json!(n);
            match v {
                FVerdict::AllHaveCycle { .. } => outcome(0, doc),
                FVerdict::Counterexample { .. } => {
                    doc["kind"] = json!("zero_sum_free");
                    outcome(1, doc)
                }
                FVerdict::BudgetExceeded { .. } => outcome(2, doc),
            }
        }
        Cmd::Construct(Group { p, k }) => {
            let g = lower_bound_construction(*p, *k).map_err(err)?;
            let checked = (g.n() <= DEFAULT_MAX_VERTICES)
                .then(|| find_zero_sum_cycle_bounded(&g, DEFAULT_MAX_VERTICES).map(|c| c.is_none()))
                .transpose()
                .map_err(err)?;
            let doc = json!({
                "kind": "zero_sum_free",
                "n": g.n(),
                "verified": checked,
                "weighting": g,
            });
            outcome(if checked == Some(false) { 1 } else { 0 }, doc)
        }
        Cmd::Extremal { group, n, seed, iters } => {
            let r = extremal_local_search(group.p, group.k, *n, *seed, *iters).map_err(err)?;
            let found = r.weighting.is_some();
            let mut doc = to_value(&r);
            if found {
                doc["kind"] = json!("zero_sum_free");
            }
            outcome(if found { 0 } else { 1 }, doc)
        }
        Cmd::GadgetSolve(input) => {
            let g = read_weighting(&input.input)?;
            match solve_by_gadgets(&g).map_err(err)? {
                Some(cert) => outcome(
                    0,
                    json!({ "kind": "cycle", "verdict": "FOUND", "weighting": g, "certificate": cert }),
                ),
                None => outcome(1, json!({ "verdict": "NONE" })),
            }
        }
        Cmd::RecursionReport { input, t } => {
            let g = read_weighting(&input.input)?;
            let t = t.unwrap_or_else(|| default_level_count(g.spec().k()));
            let fam = extract_useful_families(&g, t).map_err(err)?;
            let violations = level_predicate_violations(&g, &fam).map_err(err)?;
            let levels_ok = violations.iter().all(Vec::is_empty);
            let mut doc = json!({ "levels": fam, "level_predicate_violations": violations });
            let mut ok = levels_ok;
            doc["step"] = Value::Null;
            if fam.levels.len() >= 3 {
                match recursion_step_report(&g, &fam) {
                    Ok(r) => {
                        ok &= r.inclusions_hold && r.size_bounds_hold && r.z_bound_holds;
                        doc["step"] = to_value(&r);
                    }
                    // No admissible m: the step's hypotheses fail on these levels.
                    Err(Error::Precondition(msg)) => {
                        ok = false;
                        doc["step_error"] = json!(msg);
                    }
                    Err(e) => return Err(err(e)),
                }
            }
            outcome(if ok { 0 } else { 1 }, doc)
        }
        Cmd::Coeff { input, degrees } => {
            let s: Multiset = read_json(&input.input)?;
            let spec = *s.spec();
            let degrees = degrees.clone().unwrap_or_else(|| vec![spec.p() as usize - 1; spec.dim()]);
            let c = equipartition_coefficient(&spec, s.elements(), &degrees).map_err(err)?;
            let mut doc = json!({ "kind": "coefficient", "vectors": s, "degrees": degrees, "coefficient": c });
            if s.len() == h_lower_bound(spec.p(), spec.k()) {
                doc["full_sumset_certified"] = json!(full_sumset_by_coefficient(&s).map_err(err)?);
            }
            outcome(if c != 0 { 0 } else { 1 }, doc)
        }
        Cmd::RefuteDim2(input) => {
            let s: Multiset = read_json(&input.input)?;
            let run = refute_reduced_dim2(&s).map_err(err)?;
            let found = run.certificate.is_some();
            let mut doc = to_value(&run);
            if found {
                doc["kind"] = json!("refutation");
            }
            outcome(if found { 0 } else { 1 }, doc)
        }
        Cmd::Bounds(Group { p, k }) => outcome(0, to_value(&bounds_row(*p, *k).map_err(err)?)),
        Cmd::Verify(input) => {
            let doc: Value = read_json(&input.input)?;
            let valid = verify_document(&doc, budget)?;
            outcome(
                if valid { 0 } else { 1 },
                json!({ "kind": doc.get("kind"), "valid": valid }),
            )
        }
    }
}

fn field<T: for<'de> Deserialize<'de>>(doc: &Value, name: &str) -> Result<T, String> {
    let v = doc.get(name).ok_or_else(|| format!("missing field `{name}`"))?;
    T::deserialize(v).map_err(|e| format!("field `{name}`: {e}"))
}

fn verify_document(doc: &Value, budget: Option<u64>) -> Result<bool, String> {
    let kind: String = field(doc, "kind")?;
    match kind.as_str() {
        "cycle" => {
            let g: WeightedDigraph = field(doc, "weighting")?;
            let raw: CycleCertificateJson = field(doc, "certificate")?;
            let cert = raw.into_certificate(g.spec()).map_err(err)?;
            verify_cycle(&g, &cert).map_err(err)
        }
        "zero_sum_free" => {
            let g: WeightedDigraph = field(doc, "weighting")?;
            let limit = budget.map_or(DEFAULT_MAX_VERTICES, |b| b as usize);
            Ok(find_zero_sum_cycle_bounded(&g, limit).map_err(err)?.is_none())
        }
        "refutation" => {
            let cert: RefutationCertificate = field(doc, "certificate")?;
            Ok(cert.verify())
        }
        "packing" => {
            let input: Multiset = field(doc, "input")?;
            let t: usize = field(doc, "t")?;
            let packing = BasePacking { bases: field(doc, "bases")?, leftover: field(doc, "leftover")? };
            Ok(packing.bases.len() == t && packing.verify(&input))
        }
        "reduced_witness" => {
            let w: Multiset = field(doc, "witness")?;
            let exact: usize = field(doc, "exact")?;
            Ok(w.len() == exact && is_reduced(&w))
        }
        "coefficient" => {
            let s: Multiset = field(doc, "vectors")?;
            let degrees: Vec<usize> = field(doc, "degrees")?;
            let claimed: u32 = field(doc, "coefficient")?;
            Ok(equipartition_coefficient(s.spec(), s.elements(), &degrees).map_err(err)? == claimed)
        }
        other => Err(format!("unknown certificate kind `{other}`")),
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Sumset(_) => "sumset",
        Cmd::H(_) => "h",
        Cmd::Pack { .. } => "pack",
        Cmd::BasisTest { .. } => "basis-test",
        Cmd::Cycle(_) => "cycle",
        Cmd::F { .. } => "f",
        Cmd::Construct(_) => "construct",
        Cmd::Extremal { .. } => "extremal",
        Cmd::GadgetSolve(_) => "gadget-solve",
        Cmd::RecursionReport { .. } => "recursion-report",
        Cmd::Coeff { .. } => "coeff",
        Cmd::RefuteDim2(_) => "refute-dim2",
        Cmd::Bounds(_) => "bounds",
        Cmd::Verify(_) => "verify",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    }
    let (code, mut doc) = match run(&cli) {
        Ok(Outcome { doc, code }) => (code, doc),
        Err(msg) => (2, json!({ "error": msg })),
    };
    let obj = doc.as_object_mut().expect("documents are objects");
    obj.insert("schema".into(), json!(1));
    obj.insert("command".into(), json!(command_name(&cli.cmd)));
    let text = if cli.pretty { serde_json::to_string_pretty(&doc) } else { serde_json::to_string(&doc) }
        .expect("serializable");
    // A closed pipe downstream is not our failure.
    let _ = writeln!(std::io::stdout(), "{text}");
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, &text) {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
