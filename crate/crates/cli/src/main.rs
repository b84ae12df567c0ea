use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use polyexp_core::audit::{self, Mode, PropertyConstants, PsiFamily};
use polyexp_core::closed_forms::{self, Family};
use polyexp_core::exact::{self, format_rational as fr, parse_rational};
use polyexp_core::model::{self, MeasureTable, MuHatSampler};
use polyexp_core::polymer::{self, PolymerRecord, PolymerSystem};
use polyexp_core::{cluster, BipartiteGraph, Budget, Error, ModelParams, Rational, Result, Side};

#[derive(Parser)]
#[command(name = "polyexp", version, about = "Exact polymer-model computations on regular bipartite graphs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest vertex count accepted.
    #[arg(long, env = "POLYEXP_MAX_N", global = true)]
    max_n: Option<usize>,
    /// Largest vertex count for a sweep over all subsets.
    #[arg(long, env = "POLYEXP_MAX_SWEEP_N", global = true)]
    max_sweep_n: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GraphArg {
    /// Builder spec (hypercube:d, cycle:m, torus:m,t, kss:s, midlayer:d,
    /// product:a+b), a graph JSON file, or "-" for stdin.
    #[arg(long)]
    graph: String,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "1/1")]
    lambda: String,
    #[arg(long, default_value = "1/1")]
    p: String,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::parse(&self.lambda, &self.p)
    }
}

#[derive(Args)]
struct RhoArg {
    /// Closure cutoff as a fraction of a side.
    #[arg(long, default_value = "3/4")]
    rho: String,
}

impl RhoArg {
    fn rho(&self) -> Result<Rational> {
        let r = parse_rational(&self.rho)?;
        model::check_rho(&r)?;
        Ok(r)
    }
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long, default_value = "2")]
    c1: String,
    #[arg(long, default_value = "10")]
    c2: String,
    #[arg(long, default_value = "4")]
    c3: String,
    #[arg(long, default_value = "1")]
    c4: String,
    #[arg(long, default_value = "1/2")]
    c5: String,
}

impl ConstantArgs {
    fn constants(&self) -> Result<PropertyConstants> {
        PropertyConstants::new(
            parse_rational(&self.c1)?,
            parse_rational(&self.c2)?,
            parse_rational(&self.c3)?,
            parse_rational(&self.c4)?,
            parse_rational(&self.c5)?,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and print or save its canonical JSON.
    Gen {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact partition function.
    Zexact {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Number of independent sets.
    Isets {
        #[command(flatten)]
        graph: GraphArg,
    },
    /// Expected hard-core partition function of the percolated graph, exactly.
    PercolateExact {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Seeded Monte Carlo estimate of the same expectation.
    PercolateMc {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List polymers with their weights.
    Polymers {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
        #[arg(long)]
        side: Option<Side>,
        #[arg(long)]
        size_max: Option<usize>,
    },
    /// Polymer partition functions of each side and their combination.
    Xi {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
    },
    /// Cluster expansion terms.
    Clusters {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
        #[arg(long, default_value = "O")]
        side: Side,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        /// Also compare partial sums with the exact logarithm.
        #[arg(long)]
        truncation: bool,
    },
    /// Evaluate a closed form, optionally against the cluster expansion.
    ClosedForm(ClosedFormArgs),
    /// Total variation distance between the model and its polymer approximation.
    Tv {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
    },
    /// Draw from the defect-side measure.
    SampleMuhat {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every draw instead of a summary.
        #[arg(long)]
        draws: bool,
    },
    /// Vertex-isoperimetry checks.
    AuditIso {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value_t = Property::I)]
        property: Property,
        #[arg(long, default_value_t = 4)]
        size_cap: usize,
        /// Sample this many sets instead of sweeping all of them.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Kotecký–Preiss check with linear functions and the tail bound, or the
    /// per-vertex sum audit with `--vertex-sums`.
    AuditKp {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
        #[arg(long, default_value = "O")]
        side: Side,
        #[arg(long, default_value = "1/10")]
        a: String,
        #[arg(long, default_value = "1/10")]
        b: String,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long)]
        vertex_sums: bool,
        #[arg(long, default_value_t = 3)]
        size_max: usize,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Bounds on Z(Ψ) for a family of coordinate sets.
    AuditZ {
        #[arg(long)]
        d: usize,
        /// Subsets of 1..=d separated by ';', coordinates by ','.
        #[arg(long, conflicts_with = "singletons")]
        psi: Option<String>,
        #[arg(long)]
        singletons: bool,
        /// Split point parameter; without it the unsplit bound at ℓ_Ψ/2 is checked.
        #[arg(long)]
        ell: Option<String>,
        #[arg(long, default_value = "1")]
        c: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Total weight of G_D(a, b).
    AuditContainer {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "O")]
        side: Side,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
    },
    /// Weight of configurations that are polymer configurations on neither side.
    AuditNonpolymer {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rho: RhoArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    I,
    Ii,
    Product,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaFamily {
    Torus,
    Midlayer,
    Kss,
    Hypercube,
    L1,
    CountEstimate,
    Galvin,
    Threshold,
}

#[derive(Args)]
struct ClosedFormArgs {
    #[arg(long, value_enum)]
    family: FormulaFamily,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ell: Option<String>,
    /// Graph for the L1 family.
    #[arg(long)]
    graph: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rho: RhoArg,
    /// Compare with the cluster expansion.
    #[arg(long)]
    verify: bool,
}

/// What a subcommand produced and whether an audited inequality failed.
struct Outcome {
    output: Output,
    mismatch: bool,
}

enum Output {
    One(Value),
    Many(Vec<Value>),
    Raw(String),
}

impl Outcome {
    fn one(v: Value) -> Self {
        Outcome { output: Output::One(v), mismatch: false }
    }

    fn failing_if(mut self, bad: bool) -> Self {
        self.mismatch = bad;
        self
    }
}

fn need<T>(x: Option<T>, name: &str) -> Result<T> {
    x.ok_or_else(|| Error::Precondition(format!("--{name} is required for this family")))
}

fn load_graph(source: &str, budget: &Budget) -> Result<BipartiteGraph> {
    if source == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        return BipartiteGraph::from_json(&text, budget);
    }
    if Path::new(source).is_file() {
        return BipartiteGraph::from_json(&fs::read_to_string(source)?, budget);
    }
    BipartiteGraph::from_spec(source, budget)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn parse_psi(d: usize, text: &str) -> Result<PsiFamily> {
    let subsets = text
        .split(';')
        .map(|part| {
            part.split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(|c| c.parse::<usize>().map_err(|_| Error::Parse(format!("coordinate '{c}'"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PsiFamily::new(d, subsets)
}

fn closed_form(args: &ClosedFormArgs, budget: &Budget) -> Result<Outcome> {
    let p = parse_rational(&args.model.p)?;
    let l2_family = match args.family {
        FormulaFamily::Torus => Some(Family::Torus { m: need(args.m, "m")?, t: need(args.t, "t")? }),
        FormulaFamily::Midlayer => Some(Family::Midlayer { d: need(args.d, "d")? }),
        FormulaFamily::Kss => Some(Family::Kss { s: need(args.s, "s")?, t: need(args.t, "t")? }),
        FormulaFamily::Hypercube => Some(Family::Hypercube { t: need(args.t, "t")? }),
        _ => None,
    };
    if let Some(family) = l2_family {
        let rho = args.rho.rho()?;
        let params = to_value(&family)?;
        if args.verify {
            let c = closed_forms::verify_l2(family, &p, &rho, budget)?;
            let bad = c.regime_ok && !c.agrees();
            return Ok(Outcome::one(json!({
                "family": params["family"],
                "params": { "p": fr(&p), "shape": params },
                "formula_value": fr(&c.formula_value),
                "oracle_value": fr(&c.oracle_value),
                "oracle_value_other_side": fr(&c.oracle_value_even),
                "regime_ok": c.regime_ok,
            }))
            .failing_if(bad));
        }
        let value = family.l2(&p)?;
        let regime_ok = match family.graph(budget) {
            Ok(g) => Value::Bool(closed_forms::l2_regime_ok(&g, &rho)?),
            Err(_) => Value::Null,
        };
        return Ok(Outcome::one(json!({
            "family": params["family"],
            "params": { "p": fr(&p), "shape": params },
            "formula_value": fr(&value),
            "regime_ok": regime_ok,
        })));
    }
    match args.family {
        FormulaFamily::L1 => {
            let g = load_graph(&need(args.graph.clone(), "graph")?, budget)?;
            let params = args.model.params()?;
            let rho = args.rho.rho()?;
            let value = closed_forms::l1_closed(g.n(), g.d(), params.lambda(), params.p());
            let singletons = polymer::enumerate_polymers(&g, Side::Odd, &rho, 1)?.len()
                + polymer::enumerate_polymers(&g, Side::Even, &rho, 1)?.len();
            let regime_ok = singletons == g.n();
            let mut record = json!({
                "family": "l1",
                "params": { "n": g.n(), "d": g.d(), "lambda": fr(params.lambda()), "p": fr(params.p()) },
                "formula_value": fr(&value),
                "regime_ok": regime_ok,
            });
            let mut bad = false;
            if args.verify {
                let oracle = cluster::l_k(&g, Side::Odd, &params, &rho, 1, budget)?;
                bad = regime_ok && oracle != value;
                record["oracle_value"] = json!(fr(&oracle));
            }
            Ok(Outcome::one(record).failing_if(bad))
        }
        FormulaFamily::CountEstimate => {
            let (n, d) = (need(args.n, "n")?, need(args.d, "d")?);
            let value = closed_forms::expected_count_estimate(n, d, &p)?;
            Ok(Outcome::one(json!({
                "family": "count-estimate",
                "params": { "n": n, "d": d, "p": fr(&p) },
                "formula_value": exact::format_real(&value),
                "regime_ok": true,
            })))
        }
        FormulaFamily::Galvin => {
            let d = need(args.d, "d")?;
            let lambda = parse_rational(&args.model.lambda)?;
            let value = closed_forms::galvin_estimate(d, &lambda)?;
            Ok(Outcome::one(json!({
                "family": "galvin",
                "params": { "d": d, "lambda": fr(&lambda) },
                "formula_value": exact::format_real(&value),
                "regime_ok": true,
            })))
        }
        FormulaFamily::Threshold => {
            let k = need(args.k, "k")?;
            let ell = parse_rational(&need(args.ell.clone(), "ell")?)?;
            let value = closed_forms::percolation_threshold(k, &ell)?;
            Ok(Outcome::one(json!({
                "family": "threshold",
                "params": { "k": k, "ell": fr(&ell) },
                "formula_value": exact::format_real(&value),
                "regime_ok": true,
            })))
        }
        _ => unreachable!("L2 families handled above"),
    }
}

fn run(command: &Command, budget: &Budget) -> Result<Outcome> {
    let graph = |g: &GraphArg| load_graph(&g.graph, budget);
    Ok(match command {
        Command::Gen { graph: src, out } => {
            let g = graph(src)?;
            let text = g.to_json();
            match out {
                Some(path) => {
                    fs::write(path, &text)?;
                    Outcome::one(json!({
                        "path": path.display().to_string(),
                        "n": g.n(),
                        "d": g.d(),
                        "edges": g.edge_count(),
                    }))
                }
                None => Outcome { output: Output::Raw(text), mismatch: false },
            }
        }
        Command::Zexact { graph: src, model: m } => {
            let (g, params) = (graph(src)?, m.params()?);
            let z = model::exact_z(&g, &params, budget)?;
            Outcome::one(json!({
                "graph": src.graph, "lambda": fr(params.lambda()), "p": fr(params.p()), "value": fr(&z),
            }))
        }
        Command::Isets { graph: src } => {
            let count = model::count_independent_sets(&graph(src)?, budget)?;
            Outcome::one(json!({ "graph": src.graph, "count": count.to_string() }))
        }
        Command::PercolateExact { graph: src, model: m } => {
            let (g, params) = (graph(src)?, m.params()?);
            let value = model::percolation_expectation_exact(&g, &params, budget)?;
            let z = model::exact_z(&g, &params, budget)?;
            let equal = value == z;
            Outcome::one(json!({
                "graph": src.graph, "lambda": fr(params.lambda()), "p": fr(params.p()),
                "value": fr(&value), "exact_z": fr(&z), "equal": equal,
            }))
            .failing_if(!equal)
        }
        Command::PercolateMc { graph: src, model: m, samples, seed } => {
            let (g, params) = (graph(src)?, m.params()?);
            let est = model::percolation_mc(&g, &params, *samples, *seed, budget)?;
            let mut v = to_value(&est)?;
            v["graph"] = json!(src.graph);
            Outcome::one(v)
        }
        Command::Polymers { graph: src, model: m, rho, side, size_max } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            let sides = side.map(|s| vec![s]).unwrap_or_else(|| Side::BOTH.to_vec());
            let mut records = Vec::new();
            for s in sides {
                for p in polymer::enumerate_polymers(&g, s, &rho, size_max.unwrap_or(g.n() / 2))? {
                    let w = polymer::polymer_weight(&g, &params, &p);
                    records.push(to_value(&PolymerRecord::new(&p, w))?);
                }
            }
            Outcome { output: Output::Many(records), mismatch: false }
        }
        Command::Xi { graph: src, model: m, rho } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            let mut records = Vec::new();
            for s in Side::BOTH {
                let system = PolymerSystem::build(&g, s, &params, &rho, g.n() / 2, budget)?;
                records.push(json!({ "side": s.tag(), "polymers": system.len(), "xi": fr(&system.xi()?) }));
            }
            let z_hat = polymer::z_hat_from_polymers(&g, &params, &rho, budget)?;
            records.push(json!({ "side": "both", "z_hat": fr(&z_hat) }));
            Outcome { output: Output::Many(records), mismatch: false }
        }
        Command::Clusters { graph: src, model: m, rho, side, k_max, truncation } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            if *truncation {
                let report = cluster::log_xi_truncation_report(&g, *side, &params, &rho, *k_max, budget)?;
                let rows = report.rows.iter().map(to_value).collect::<Result<Vec<_>>>()?;
                Outcome { output: Output::Many(rows), mismatch: false }
            } else {
                let system = PolymerSystem::build(&g, *side, &params, &rho, *k_max, budget)?;
                let clusters = cluster::enumerate_clusters(&system, *k_max)?;
                let terms = cluster::l_terms(&clusters, *k_max);
                let rows = (1..=*k_max)
                    .map(|k| {
                        json!({
                            "side": side.tag(),
                            "k": k,
                            "clusters": clusters.iter().filter(|c| c.size == k).count(),
                            "L_k": fr(&terms[k]),
                        })
                    })
                    .collect();
                Outcome { output: Output::Many(rows), mismatch: false }
            }
        }
        Command::ClosedForm(args) => closed_form(args, budget)?,
        Command::Tv { graph: src, model: m, rho } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            let mu = model::mu_table(&g, &params, budget)?;
            let hat = model::mu_hat_table(&g, &params, &rho, budget)?;
            let tv = model::tv_distance(&mu, &hat)?;
            Outcome::one(json!({ "graph": src.graph, "tv": fr(&tv), "tv_decimal": exact::rational_to_f64(&tv) }))
        }
        Command::SampleMuhat { graph: src, model: m, rho, samples, seed, draws } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            let sampler = MuHatSampler::new(&g, &params, &rho, budget)?;
            let drawn = sampler.sample_many(*seed, *samples);
            if *draws {
                let rows = drawn
                    .iter()
                    .enumerate()
                    .map(|(k, (i, s))| json!({ "index": k, "side": s.tag(), "vertices": i.to_vec() }))
                    .collect();
                Outcome { output: Output::Many(rows), mismatch: false }
            } else {
                let star = model::mu_hat_star_table(&g, &params, &rho, budget)?;
                let empirical = MeasureTable::empirical(&star, drawn)?;
                let tv = model::tv_distance(&star, &empirical)?;
                Outcome::one(json!({
                    "graph": src.graph, "samples": samples, "seed": seed,
                    "outcomes": star.len(), "empirical_tv": fr(&tv),
                    "empirical_tv_decimal": exact::rational_to_f64(&tv),
                }))
            }
        }
        Command::AuditIso { graph: src, property, size_cap, samples, seed, constants } => {
            let g = graph(src)?;
            let mode = match samples {
                Some(samples) => Mode::Sampled { samples: *samples, seed: *seed },
                None => Mode::Exhaustive,
            };
            match property {
                Property::I | Property::Ii => {
                    let c = constants.constants()?;
                    let report = if matches!(property, Property::I) {
                        audit::check_property_i(&g, &c, *size_cap, mode)?
                    } else {
                        audit::check_property_ii(&g, &c, *size_cap, mode)?
                    };
                    let bad = report.conditions.iter().any(|c| !c.holds);
                    Outcome::one(to_value(&report)?).failing_if(bad)
                }
                Property::Product => {
                    let report = audit::check_product_iso(&g, *size_cap, mode)?;
                    let bad = !report.codegree_holds || !report.expansion.holds;
                    Outcome::one(to_value(&report)?).failing_if(bad)
                }
            }
        }
        Command::AuditKp { graph: src, model: m, rho, side, a, b, k_max, vertex_sums, size_max, constants } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            if *vertex_sums {
                let report =
                    cluster::vertex_kp_sum_audit(&g, *side, &params, &rho, &constants.constants()?, *size_max, *k_max, budget)?;
                Outcome::one(to_value(&report)?)
            } else {
                let (a, b) = (parse_rational(a)?, parse_rational(b)?);
                let report = cluster::kp_tail_report(&g, *side, &params, &rho, &a, &b, *k_max, budget)?;
                let mut v = to_value(&report)?;
                v["verified"] = json!(report.verified());
                Outcome::one(v).failing_if(!report.verified())
            }
        }
        Command::AuditZ { d, psi, singletons, ell, c, model: m } => {
            let params = m.params()?;
            let family = match (psi, singletons) {
                (Some(text), _) => parse_psi(*d, text)?,
                (None, true) => PsiFamily::singletons(*d),
                (None, false) => return Err(Error::Precondition("give --psi or --singletons".into())),
            };
            let c = parse_rational(c)?;
            match ell {
                Some(ell) => {
                    let report = audit::split_bound_audit(&family, &parse_rational(ell)?, &params, &c)?;
                    let bad = report.verdict == Some(false);
                    Outcome::one(to_value(&report)?).failing_if(bad)
                }
                None => {
                    let report = audit::family_bound_audit(&family, &params, &c)?;
                    let bad = report.split.verdict == Some(false);
                    Outcome::one(to_value(&report)?).failing_if(bad)
                }
            }
        }
        Command::AuditContainer { graph: src, model: m, side, a, b } => {
            let (g, params) = (graph(src)?, m.params()?);
            Outcome::one(to_value(&audit::container_sum_report(&g, *side, *a, *b, &params)?)?)
        }
        Command::AuditNonpolymer { graph: src, model: m, rho } => {
            let (g, params, rho) = (graph(src)?, m.params()?, rho.rho()?);
            Outcome::one(to_value(&audit::nonpolymer_weight_report(&g, &params, &rho, budget)?)?)
        }
    })
}

/// Flatten nested objects into dotted keys; arrays become JSON text.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn emit(output: &Output, format: Format) -> Result<()> {
    let records: Vec<&Value> = match output {
        Output::Raw(text) => {
            println!("{text}");
            return Ok(());
        }
        Output::One(v) => vec![v],
        Output::Many(vs) => vs.iter().collect(),
    };
    match format {
        Format::Json => match output {
            Output::One(v) => println!("{}", serde_json::to_string(v)?),
            _ => println!("{}", serde_json::to_string(&records)?),
        },
        Format::Csv => {
            let rows: Vec<Vec<(String, String)>> = records
                .iter()
                .map(|r| {
                    let mut row = Vec::new();
                    flatten("", r, &mut row);
                    row
                })
                .collect();
            let mut header: Vec<String> = Vec::new();
            for row in &rows {
                for (k, _) in row {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
            let mut w = csv::Writer::from_writer(io::stdout());
            let to_io = |e: csv::Error| Error::Io(io::Error::other(e));
            w.write_record(&header).map_err(to_io)?;
            for row in &rows {
                let cells = header.iter().map(|h| {
                    row.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or("")
                });
                w.write_record(cells).map_err(to_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut budget = Budget::default();
    if let Some(n) = cli.max_n {
        budget.max_vertices = n;
    }
    if let Some(n) = cli.max_sweep_n {
        budget.max_sweep_vertices = n;
    }
    match run(&cli.command, &budget).and_then(|o| emit(&o.output, cli.format).map(|_| o.mismatch)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
