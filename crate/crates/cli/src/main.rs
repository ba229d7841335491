//! Command-line driver: correspondence tables, the verification suites, and
//! filtration reports for reduced standard modules.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phigamma::cyclic::{filtration_to_cyclics, CyclicModule};
use phigamma::field::{Elt, FiniteField};
use phigamma::galois::{self, params_from_cyclic, GaloisParam};
use phigamma::halftree;
use phigamma::hecke::{Case, Realization, ReducedStandard, TorusChar};
use phigamma::report::Report;
use phigamma::sl2;
use phigamma::weyl::{
    admissible_filtration, all_perms, sigma_one_filtration, verify_admissible, Filtration, Perm,
    SigmaMap,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phigamma", version, about = "Hecke modules, etale (phi,Gamma)-modules and their Galois parameters over F_q", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum CaseArg {
    A,
    B,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// write to a file instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// The supersingular correspondence table for one (p, d, b)
    Table {
        #[arg(long)]
        p: u64,
        /// extension degree of the coefficient field
        #[arg(long, default_value = "1")]
        q_deg: usize,
        #[arg(long)]
        d: usize,
        /// the scalar b as a field element index
        #[arg(long, default_value = "1")]
        b: u16,
        #[arg(long, value_enum, default_value = "a")]
        case: CaseArg,
        /// keep only rows with this h
        #[arg(long)]
        filter_h: Option<u128>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a verification suite; exit 0 iff every identity holds
    Check {
        #[command(subcommand)]
        suite: CheckCommand,
    },
    /// Filtration report for a reduced standard module
    Filtration {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value = "a")]
        case: CaseArg,
        /// constant sign assignment when no input file is given
        #[arg(long, default_value = "one")]
        sigma: String,
        /// torus character exponents, comma separated
        #[arg(long)]
        theta: Option<String>,
        /// read theta/sigma/eps from a file
        #[arg(long)]
        input: Option<std::path::PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// rank-one identities and flatness sequences
    Sl2 {
        #[arg(long)]
        p: u64,
    },
    /// digit-embedding matrix identities
    Embedding {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m_max: Option<u64>,
    },
    /// truncated homology against the closed-form cyclic presentation
    Homology {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: usize,
        /// truncation depth; defaults to 2(d+2)
        #[arg(long)]
        depth: Option<usize>,
        /// number of sampled modules (exhaustive when omitted and d = 1)
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "17")]
        seed: u64,
    },
    /// the supersingular-to-parameters bijection over every b
    Bijection {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: usize,
    },
    /// admissible filtrations: exhaustive signs for d = 2 plus closed forms
    Filtration {
        #[arg(long, default_value = "2")]
        d: usize,
    },
    /// etale module identities and irreducibility against brute force
    Cyclic {
        #[arg(long, default_value = "5")]
        seed: u64,
    },
}

fn parse_perm(d: usize, s: &str) -> Result<Perm> {
    let vals: Vec<u8> = s
        .split_whitespace()
        .map(|t| t.parse::<u8>().context("bad permutation entry"))
        .collect::<Result<_>>()?;
    if vals.len() != d + 1 {
        bail!("permutation word must have {} entries", d + 1);
    }
    let mut seen = vec![false; d + 1];
    for &v in &vals {
        if v as usize > d || seen[v as usize] {
            bail!("not a permutation of 0..{d}");
        }
        seen[v as usize] = true;
    }
    Ok(Perm(vals))
}

struct ModuleSpec {
    theta: Vec<u64>,
    sigma: BTreeMap<Perm, i8>,
    eps: BTreeMap<Perm, u16>,
}

/// Input format, one directive per line:
///   theta: 0 1 3
///   sigma: 0 2 1 = 1
///   eps: 1 0 2 = 2
fn parse_module_spec(d: usize, text: &str) -> Result<ModuleSpec> {
    let mut theta = None;
    let mut sigma = BTreeMap::new();
    let mut eps = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| anyhow!("line {}: expected 'key: ...'", lineno + 1))?;
        match key.trim() {
            "theta" => {
                let exps: Vec<u64> = rest
                    .split_whitespace()
                    .map(|t| t.parse::<u64>().context("bad exponent"))
                    .collect::<Result<_>>()?;
                if exps.len() != d + 1 {
                    bail!("theta needs {} exponents", d + 1);
                }
                theta = Some(exps);
            }
            "sigma" => {
                let (word, val) = rest
                    .split_once('=')
                    .ok_or_else(|| anyhow!("line {}: expected '= value'", lineno + 1))?;
                let w = parse_perm(d, word.trim())?;
                let v: i8 = val.trim().parse().context("sigma value")?;
                sigma.insert(w, v);
            }
            "eps" => {
                let (word, val) = rest
                    .split_once('=')
                    .ok_or_else(|| anyhow!("line {}: expected '= value'", lineno + 1))?;
                let w = parse_perm(d, word.trim())?;
                let v: u16 = val.trim().parse().context("eps value")?;
                eps.insert(w, v);
            }
            other => bail!("line {}: unknown directive '{}'", lineno + 1, other),
        }
    }
    Ok(ModuleSpec {
        theta: theta.ok_or_else(|| anyhow!("missing theta"))?,
        sigma,
        eps,
    })
}

fn print_report(report: &Report, output: &OutputArgs) -> Result<bool> {
    let pass = report.all_pass();
    match output.format {
        Format::Json => emit(output, &serde_json::to_string_pretty(report)?)?,
        _ => {
            let mut text = String::new();
            for item in &report.items {
                text.push_str(&format!(
                    "{} {} [{}]{}\n",
                    if item.pass { "PASS" } else { "FAIL" },
                    item.identity,
                    item.params,
                    item.witness.as_deref().map(|w| format!(" witness: {w}")).unwrap_or_default(),
                ));
            }
            text.push_str(&format!("{}\n", report.summary()));
            emit(output, &text)?;
        }
    }
    Ok(pass)
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn default_output() -> OutputArgs {
    OutputArgs { format: Format::Text, out: None }
}

fn cmd_table(
    p: u64,
    q_deg: usize,
    d: usize,
    b: u16,
    case: Case,
    filter_h: Option<u128>,
    output: &OutputArgs,
) -> Result<bool> {
    let f = FiniteField::new(p, q_deg).map_err(|e| anyhow!("{e}"))?;
    if b == 0 || b as u64 >= f.q {
        bail!("b must be a unit index in 1..{}", f.q);
    }
    let real = Realization::new(p, d, case);
    let mut rows = galois::table_rows(&f, &real, Elt(b)).map_err(|e| anyhow!("{e}"))?;
    if let Some(h) = filter_h {
        rows.retain(|r| r.h == h);
    }
    match output.format {
        Format::Json => emit(output, &serde_json::to_string_pretty(&rows)?)?,
        Format::Csv => {
            let mut text =
                String::from("lambda;jset;b;k;w;delta;h;s;beta_power;primitive;inertia\n");
            for r in &rows {
                text.push_str(&format!(
                    "{:?};{:?};{};{:?};{:?};{};{};{};{};{};{:?}\n",
                    r.lambda, r.jset, r.b, r.k, r.w, r.delta, r.h, r.s, r.beta_power,
                    r.primitive, r.inertia
                ));
            }
            emit(output, &text)?;
        }
        Format::Text => {
            let mut text = format!("supersingular classes p={p} q={} d={d} b={b}\n", f.q);
            for r in &rows {
                text.push_str(&format!(
                    "lambda={:?} J={:?} -> k={:?} w={:?} delta={} h={} s={} beta^{}={} primitive={} inertia={:?}\n",
                    r.lambda, r.jset, r.k, r.w, r.delta, r.h, r.s, d + 1, r.beta_power,
                    r.primitive, r.inertia
                ));
            }
            text.push_str(&format!("{} classes\n", rows.len()));
            emit(output, &text)?;
        }
    }
    Ok(true)
}

fn cmd_check_sl2(p: u64) -> Result<bool> {
    let f = FiniteField::new(p, 1).map_err(|e| anyhow!("{e}"))?;
    let mut report = Report::new(format!("sl2 suite p={p}"));
    for variant in [sl2::Variant::Sl, sl2::Variant::Psl] {
        report.merge(sl2::check_section2_identities(&f, variant));
        report.merge(sl2::check_flatness_sequences(&f, variant));
    }
    print_report(&report, &default_output())
}

fn cmd_check_embedding(p: u64, d: usize, m_max: Option<u64>) -> Result<bool> {
    let m_max = m_max.unwrap_or(p.pow(4));
    let mut report = Report::new(format!("embedding p={p} d={d}"));
    for case in [Case::A, Case::B] {
        report.merge(halftree::verify_embedding(p, d, case, m_max));
    }
    print_report(&report, &default_output())
}

fn cmd_check_homology(
    p: u64,
    d: usize,
    depth: Option<usize>,
    samples: Option<usize>,
    seed: u64,
) -> Result<bool> {
    let default_depth = 2 * (d + 2);
    let depth = depth.unwrap_or(default_depth);
    if depth < default_depth {
        eprintln!(
            "warning: depth {depth} is below the identity-visibility threshold {default_depth}"
        );
    }
    let f = FiniteField::new(p, 1).map_err(|e| anyhow!("{e}"))?;
    let real = Realization::new(p, d, Case::A);
    let mut modules = Vec::new();
    for b in f.units().take((f.p - 1) as usize) {
        for m in phigamma::hecke::all_valid_pairs(&f, &real, b) {
            modules.push(m);
        }
    }
    if let Some(n) = samples {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        modules.shuffle(&mut rng);
        modules.truncate(n);
    }
    let mut report = Report::new(format!("homology p={p} d={d} depth={depth}"));
    for m in &modules {
        let r = halftree::crosscheck_supersingular(&f, &real, m, depth, true)
            .map_err(|e| anyhow!("{e}"))?;
        report.merge(r);
    }
    print_report(&report, &default_output())
}

fn cmd_check_bijection(p: u64, d: usize) -> Result<bool> {
    let f = FiniteField::new(p, 1).map_err(|e| anyhow!("{e}"))?;
    let real = Realization::new(p, d, Case::A);
    let (_, report) = galois::bijection_all_b(&f, &real);
    print_report(&report, &default_output())
}

fn cmd_check_filtration(d: usize) -> Result<bool> {
    let mut report = Report::new(format!("filtration suite d={d}"));
    for (i, sigma) in SigmaMap::enumerate(d).into_iter().enumerate() {
        match admissible_filtration(&sigma) {
            Ok(filt) => {
                report.record(
                    "constructed filtration is admissible",
                    format!("sigma #{i}"),
                    verify_admissible(&sigma, &filt),
                );
            }
            Err(e) => report.record_witness(
                "constructed filtration is admissible",
                format!("sigma #{i}"),
                false,
                format!("{e}"),
            ),
        }
    }
    for dd in [d, d + 1] {
        if dd >= 2 {
            let closed = sigma_one_filtration(dd).map_err(|e| anyhow!("{e}"))?;
            let sigma = SigmaMap::constant(dd, 1);
            let built = admissible_filtration(&sigma).map_err(|e| anyhow!("{e}"))?;
            report.record(
                "closed form matches constructed filtration",
                format!("d={dd}"),
                phigamma::weyl::same_filtration(&closed, &built),
            );
        }
    }
    print_report(&report, &default_output())
}

fn cmd_check_cyclic(seed: u64) -> Result<bool> {
    let mut report = Report::new("cyclic module suite");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for (p, deg) in [(3u64, 1usize), (5, 1), (7, 1), (3, 2)] {
        let f = FiniteField::new(p, deg).map_err(|e| anyhow!("{e}"))?;
        for perim in 1..=3usize {
            let instances = phigamma::acceptance_instances(&f, perim, 4, &mut rng);
            for m in instances {
                let params = format!("q={} k={:?}", f.q, m.k);
                report.record(
                    "criterion matches brute force (no Gamma)",
                    &params,
                    m.is_irreducible(false) == m.brute_force_irreducible(&f, false),
                );
                report.record(
                    "criterion matches brute force (Gamma)",
                    &params,
                    m.is_irreducible(true) == m.brute_force_irreducible(&f, true),
                );
                if m.k.iter().any(|&k| k > 0) {
                    let prec = ((p * p) as usize).max(m.h_parts(&f)[perim] as usize + 2);
                    let et = m.dual_etale(&f, prec).map_err(|e| anyhow!("{e}"))?;
                    report.record("psi phi = id", &params, et.check_psi_phi_identity(&f));
                    report.record("etale partition of unity", &params, et.check_etale_partition(&f));
                    report.record("phi recoverable from psi", &params, et.check_phi_from_psi(&f));
                    report.record("dual round trip", &params, et.check_dual_roundtrip(&f, &m));
                    report.record(
                        "psi surjective, kernel has no submodule",
                        &params,
                        et.check_psi_surjective_nondegenerate(&f),
                    );
                }
            }
        }
    }
    print_report(&report, &default_output())
}

#[derive(Serialize)]
struct OrbitReport {
    level: usize,
    orbit: Vec<Vec<u8>>,
    k: Vec<u64>,
    rho_dlog: Vec<u64>,
    eta: Vec<u64>,
    galois_dim: usize,
    galois: Option<(usize, u128, u64, u64)>,
}

fn cmd_filtration(
    p: u64,
    d: usize,
    case: Case,
    sigma_arg: &str,
    theta_arg: Option<&str>,
    input: Option<&std::path::Path>,
    output: &OutputArgs,
) -> Result<bool> {
    let f = FiniteField::new(p, 1).map_err(|e| anyhow!("{e}"))?;
    let real = Realization::new(p, d, case);
    let (theta, sigma, eps) = if let Some(path) = input {
        let text = std::fs::read_to_string(path)?;
        let spec = parse_module_spec(d, &text)?;
        let sigma = SigmaMap::new(d, spec.sigma).map_err(|e| anyhow!("{e}"))?;
        let eps: BTreeMap<Perm, Elt> = all_perms(d)
            .into_iter()
            .map(|w| {
                let v = spec.eps.get(&w).copied().unwrap_or(1);
                (w, Elt(v))
            })
            .collect();
        (TorusChar::new(p, spec.theta), sigma, eps)
    } else {
        let sigma = match sigma_arg {
            "one" => SigmaMap::constant(d, 1),
            "zero" => SigmaMap::constant(d, 0),
            "minus" => SigmaMap::constant(d, -1),
            other => bail!("unknown sigma '{other}'; use one|zero|minus or --input"),
        };
        let exps: Vec<u64> = match theta_arg {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<u64>().context("theta exponent"))
                .collect::<Result<_>>()?,
            // a generic-leaning default: pairwise distinct when possible
            None => (0..=d as u64).map(|i| i % (p - 1)).collect(),
        };
        if exps.len() != d + 1 {
            bail!("theta needs {} exponents", d + 1);
        }
        let eps: BTreeMap<Perm, Elt> = all_perms(d).into_iter().map(|w| (w, f.one())).collect();
        (TorusChar::new(p, exps), sigma, eps)
    };

    let module = ReducedStandard::new(&f, &real, theta, sigma.clone(), eps)
        .map_err(|e| anyhow!("{e}"))?;
    let filt: Filtration = admissible_filtration(&sigma).map_err(|e| anyhow!("{e}"))?;
    let cyclics = filtration_to_cyclics(&f, &real, &module, &filt).map_err(|e| anyhow!("{e}"))?;

    let mut orbits = Vec::new();
    let mut total_dim = 0usize;
    for fc in &cyclics {
        let cm: &CyclicModule = &fc.module;
        let galois_dim = if cm.k.iter().all(|&k| k == 0) { 0 } else { cm.perimeter() };
        total_dim += galois_dim;
        let galois = match params_from_cyclic(&f, cm).map_err(|e| anyhow!("{e}"))? {
            GaloisParam::Zero => None,
            GaloisParam::Param { level, h, s, beta_power } => {
                Some((level, h, s, beta_power.0 as u64))
            }
        };
        let (_, _, k, rho_dlog, eta) = cm.record(&f);
        orbits.push(OrbitReport {
            level: fc.level,
            orbit: fc.orbit.iter().map(|w| w.0.clone()).collect(),
            k,
            rho_dlog,
            eta,
            galois_dim,
            galois,
        });
    }

    match output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct FullReport {
                p: u64,
                d: usize,
                dim_module: usize,
                total_galois_dim: usize,
                orbits: Vec<OrbitReport>,
            }
            let full = FullReport {
                p,
                d,
                dim_module: module.dim(),
                total_galois_dim: total_dim,
                orbits,
            };
            emit(output, &serde_json::to_string_pretty(&full)?)?;
        }
        _ => {
            let mut text = format!(
                "reduced standard module p={p} d={d}: dim = {}\n",
                module.dim()
            );
            for o in &orbits {
                text.push_str(&format!(
                    "level {} orbit {:?}: k={:?} rho_dlog={:?} eta={:?} galois_dim={}",
                    o.level, o.orbit, o.k, o.rho_dlog, o.eta, o.galois_dim
                ));
                if let Some((level, h, s, bp)) = &o.galois {
                    text.push_str(&format!(" params=(level {level}, h={h}, s={s}, beta^={bp})"));
                }
                text.push('\n');
            }
            text.push_str(&format!("total galois dimension = {total_dim}\n"));
            emit(output, &text)?;
        }
    }
    Ok(true)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Table { p, q_deg, d, b, case, filter_h, output } => {
            cmd_table(p, q_deg, d, b, case.into(), filter_h, &output)
        }
        Command::Check { suite } => match suite {
            CheckCommand::Sl2 { p } => cmd_check_sl2(p),
            CheckCommand::Embedding { p, d, m_max } => cmd_check_embedding(p, d, m_max),
            CheckCommand::Homology { p, d, depth, samples, seed } => {
                cmd_check_homology(p, d, depth, samples, seed)
            }
            CheckCommand::Bijection { p, d } => cmd_check_bijection(p, d),
            CheckCommand::Filtration { d } => cmd_check_filtration(d),
            CheckCommand::Cyclic { seed } => cmd_check_cyclic(seed),
        },
        Command::Filtration { p, d, case, sigma, theta, input, output } => cmd_filtration(
            p,
            d,
            case.into(),
            &sigma,
            theta.as_deref(),
            input.as_deref(),
            &output,
        ),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
