use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use ramified::chains::{certificate_amplitude, find_cycle, CycleCertificate};
use ramified::decomposition::{
    better_decompose, extract_good_decomposition, is_better, precc_check,
    verify_good_decomposition, CurveMeasure,
};
use ramified::generate::{random_forest, Masses};
use ramified::io::{
    emit_document, matrix_to_csv, parse_document, parse_matrix_csv, to_dot, to_dot_with_parts,
    Document,
};
use ramified::rational::format_rational;
use ramified::splitting::{
    split_map_plan, split_single_target, split_two_maps, verify_compatibility, CompatibilityReport,
    MapDirection, SplitPart, TransportMap,
};
use ramified::stairshape::{
    blockwise_stairify, detect_blocks, is_stair_shaped, rescale_measure, stairify,
};
use ramified::{fixtures, Error, Matrix, Result, TransportNetwork};

mod report;

use report::{Format, Report};

#[derive(Parser)]
#[command(
    name = "ramified",
    version,
    about = "Decompose and split transport paths between atomic measures"
)]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check weights, geometry and the boundary balance.
    Validate { file: String },
    /// Print a cycle certificate, or report that the network is cycle-free.
    Cycles { file: String },
    /// Extract or verify a good decomposition.
    Good {
        #[command(subcommand)]
        action: GoodAction,
    },
    /// Improve a good decomposition until every candidate set is empty.
    Better {
        file: String,
        /// Print the resulting document instead of a summary.
        #[arg(long)]
        emit: bool,
    },
    /// Stairify a matrix given as CSV or inside a document.
    Stairify {
        file: String,
        /// Stairify each positive block separately.
        #[arg(long)]
        blockwise: bool,
    },
    /// Split the network into compatible parts.
    Split {
        kind: SplitKind,
        file: String,
        /// Print the parts as a DOT graph instead of a summary.
        #[arg(long)]
        dot: bool,
    },
    /// Total alpha-mass of the network.
    Cost {
        file: String,
        #[arg(long)]
        alpha: f64,
    },
    /// Check the network against a transport plan.
    Compat {
        #[command(subcommand)]
        action: CompatAction,
    },
    /// Write the network in another format.
    #[command(group(ArgGroup::new("target").required(true).args(["dot", "document"])))]
    Export {
        file: String,
        /// Graphviz DOT.
        #[arg(long)]
        dot: bool,
        /// Canonical document.
        #[arg(long)]
        document: bool,
        /// Colour the DOT output by the parts of this split.
        #[arg(long, value_enum, requires = "dot")]
        split: Option<SplitKind>,
    },
    /// Random cycle-free instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        sources: usize,
        #[arg(long)]
        targets: usize,
        /// Draw integer masses in 1..=K instead of rationals.
        #[arg(long, value_name = "K")]
        integer_masses: Option<i64>,
    },
}

#[derive(Subcommand)]
enum GoodAction {
    /// Strip curves off the network and print them as a document.
    Extract { file: String },
    /// Check the document's curves (or its matrix) against the network.
    Verify { file: String },
}

#[derive(Subcommand)]
enum CompatAction {
    /// Exit 0 when the network is compatible with the plan.
    Verify {
        file: String,
        /// Plan as CSV; defaults to the document's matrix.
        #[arg(long)]
        plan: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitKind {
    SingleTarget,
    MapPlan,
    TwoMaps,
}

enum Input {
    Document(Document),
    Matrix(Matrix),
}

fn io_error(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{path}: {e}"),
    ))
}

/// Reads `path`, else `path.toml`, else the embedded fixture of that file
/// name. The flag tells whether the text is CSV.
fn read_text(path: &str) -> Result<(String, bool)> {
    let p = Path::new(path);
    let is_csv = |name: &str| name.ends_with(".csv");
    if p.is_file() {
        return Ok((
            fs::read_to_string(p).map_err(|e| io_error(path, e))?,
            is_csv(path),
        ));
    }
    let with_ext = format!("{path}.toml");
    if Path::new(&with_ext).is_file() {
        return Ok((
            fs::read_to_string(&with_ext).map_err(|e| io_error(&with_ext, e))?,
            false,
        ));
    }
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or(path);
    match fixtures::lookup(name) {
        Some(text) => Ok((text.to_string(), is_csv(name) || name.ends_with("_A"))),
        None => Err(io_error(path, "no such file or fixture")),
    }
}

fn load(path: &str) -> Result<Input> {
    let (text, csv) = read_text(path)?;
    if csv {
        Ok(Input::Matrix(parse_matrix_csv(&text)?))
    } else {
        Ok(Input::Document(parse_document(&text)?))
    }
}

fn load_document(path: &str) -> Result<Document> {
    match load(path)? {
        Input::Document(doc) => Ok(doc),
        Input::Matrix(_) => Err(Error::Precondition(format!(
            "{path} holds a bare matrix, not a network"
        ))),
    }
}

/// The document's curves, else curves built from its matrix, else an
/// extracted decomposition.
fn measure_of(doc: &Document) -> Result<(CurveMeasure, &'static str)> {
    if let Some(curves) = &doc.curves {
        return Ok((curves.clone(), "document curves"));
    }
    if let Some(a) = &doc.matrix {
        return Ok((
            CurveMeasure::from_matrix(&doc.network, a)?,
            "document matrix",
        ));
    }
    Ok((extract_good_decomposition(&doc.network)?, "extracted"))
}

fn edge_name(network: &TransportNetwork, e: usize) -> String {
    let edge = &network.edges()[e];
    format!(
        "e{e}({}->{})",
        network.label(edge.tail),
        network.label(edge.head)
    )
}

fn cell_name(network: &TransportNetwork, (i, j): (usize, usize)) -> String {
    format!("({},{})", network.source_label(i), network.target_label(j))
}

fn validate(file: &str, r: &mut Report) -> Result<bool> {
    let t = load_document(file)?.network;
    let violations = t.validate();
    r.field("vertices", t.vertices().len());
    r.field("edges", t.edges().len());
    r.field("source_mass", format_rational(&t.source().total()));
    r.field("target_mass", format_rational(&t.target().total()));
    r.field("valid", violations.is_empty());
    for v in &violations {
        r.field("violation", v);
    }
    Ok(violations.is_empty())
}

fn cycles(file: &str, r: &mut Report) -> Result<bool> {
    let t = load_document(file)?.network;
    match find_cycle(&t)? {
        CycleCertificate::CycleFree => {
            r.field("status", "cycle-free");
            Ok(true)
        }
        CycleCertificate::Cycle(c) => {
            r.field("status", "cycle");
            r.field("amplitude", format_rational(&certificate_amplitude(&c)));
            let terms: Vec<String> = c
                .support()
                .into_iter()
                .map(|e| format!("{}:{}", edge_name(&t, e), format_rational(c.get(e))))
                .collect();
            r.list("certificate", &terms);
            Ok(false)
        }
    }
}

fn good_extract(file: &str, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    let eta = extract_good_decomposition(&doc.network)?;
    let matrix = eta.representing_matrix(&doc.network)?;
    r.raw(&emit_document(&Document {
        network: doc.network,
        curves: Some(eta),
        matrix: Some(matrix),
    }));
    Ok(true)
}

fn good_verify(file: &str, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    let (eta, origin) = measure_of(&doc)?;
    let t = &doc.network;
    let report = verify_good_decomposition(t, &eta);
    r.field("measure", origin);
    r.field("good", report.is_good());
    for m in &report.edge_mismatches {
        r.field(
            "edge_mismatch",
            format!(
                "{} expected {} found {}",
                edge_name(t, m.edge),
                format_rational(&m.expected),
                format_rational(&m.found)
            ),
        );
    }
    for (side, list) in [
        ("source", &report.source_mismatches),
        ("target", &report.target_mismatches),
    ] {
        for m in list {
            r.field(
                &format!("{side}_mismatch"),
                format!(
                    "{} expected {} found {}",
                    t.label(m.vertex),
                    format_rational(&m.expected),
                    format_rational(&m.found)
                ),
            );
        }
    }
    if !report.stray_curves.is_empty() {
        r.list("stray_curves", &report.stray_curves);
    }
    r.field("boundary_mass", format_rational(&report.boundary_mass));
    r.field(
        "twice_total_weight",
        format_rational(&report.twice_total_weight),
    );
    Ok(report.is_good())
}

fn better(file: &str, emit: bool, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    let (eta, origin) = measure_of(&doc)?;
    let t = &doc.network;
    let out = better_decompose(t, &eta)?;
    let matrix = out.measure.representing_matrix(t)?;
    if emit {
        r.raw(&emit_document(&Document {
            network: doc.network.clone(),
            curves: Some(out.measure),
            matrix: Some(matrix),
        }));
        return Ok(true);
    }
    r.field("measure", origin);
    r.matrix("input", &eta.representing_matrix(t)?);
    r.matrix("better", &matrix);
    for p in &out.pivots {
        r.field(
            "pivot",
            format!(
                "{} with {} by {}",
                cell_name(t, p.base),
                cell_name(t, p.partner),
                format_rational(&p.amount)
            ),
        );
    }
    r.field("good", verify_good_decomposition(t, &out.measure).is_good());
    r.field("candidate_sets_empty", is_better(t, &out.measure)?);
    r.field("precedes_input", precc_check(t, &out.measure, &eta)?);
    Ok(true)
}

fn stairify_cmd(file: &str, blockwise: bool, r: &mut Report) -> Result<bool> {
    let a = match load(file)? {
        Input::Matrix(a) => a,
        Input::Document(doc) => match doc.matrix {
            Some(a) => a,
            None => measure_of(&doc)?.0.representing_matrix(&doc.network)?,
        },
    };
    let b = if blockwise {
        let (b, blocks) = blockwise_stairify(&a)?;
        let names: Vec<String> = blocks.iter().map(ToString::to_string).collect();
        for name in names {
            r.field("block", name);
        }
        b
    } else {
        stairify(&a)?
    };
    if r.is_machine() {
        r.matrix("stairified", &b);
    } else {
        r.note("stairified:");
        r.raw(&matrix_to_csv(&b));
    }
    match is_stair_shaped(&b) {
        Ok(profile) => r.field("staircase", profile),
        Err(bad) => r.field(
            "staircase",
            format!("none (entry ({},{}))", bad.row + 1, bad.col + 1),
        ),
    }
    Ok(true)
}

/// Brings the measure into the form the split needs: better for the first two
/// kinds, stair-shaped for two maps (blockwise when blocks are found, whole
/// matrix otherwise).
fn prepare(
    t: &TransportNetwork,
    eta: CurveMeasure,
    kind: SplitKind,
    r: &mut Report,
) -> Result<CurveMeasure> {
    match kind {
        SplitKind::SingleTarget | SplitKind::MapPlan => {
            if is_better(t, &eta)? {
                Ok(eta)
            } else {
                r.note("measure improved to a better decomposition first");
                Ok(better_decompose(t, &eta)?.measure)
            }
        }
        SplitKind::TwoMaps => {
            let a = eta.representing_matrix(t)?;
            if is_stair_shaped(&a).is_ok() {
                return Ok(eta);
            }
            let b = if detect_blocks(&a).is_some() {
                r.note("measure rescaled to the blockwise stairified matrix first");
                blockwise_stairify(&a)?.0
            } else {
                r.note("measure rescaled to the stairified matrix first");
                stairify(&a)?
            };
            rescale_measure(t, &eta, &b)
        }
    }
}

fn part_fields(t: &TransportNetwork, part: &SplitPart, r: &mut Report) {
    let key = |s: &str| format!("{}.{s}", part.label);
    let masses = |m: &ramified::AtomicMeasure| -> Vec<String> {
        m.atoms()
            .iter()
            .map(|a| format!("{}:{}", t.label(a.vertex), format_rational(&a.mass)))
            .collect()
    };
    r.list(&key("source"), &masses(&part.source));
    r.list(&key("target"), &masses(&part.target));
    let edges: Vec<String> = part
        .chain
        .support()
        .into_iter()
        .map(|e| format!("{}:{}", edge_name(t, e), format_rational(part.chain.get(e))))
        .collect();
    r.list(&key("chain"), &edges);
}

fn map_fields(t: &TransportNetwork, key: &str, map: &TransportMap, r: &mut Report) {
    let items: Vec<String> = map
        .assignment
        .iter()
        .map(|(&d, (img, _))| match map.direction {
            MapDirection::Forward => format!("{}->{}", t.source_label(d), t.target_label(*img)),
            MapDirection::Reverse => format!("{}->{}", t.target_label(d), t.source_label(*img)),
        })
        .collect();
    r.list(key, &items);
}

fn compat_fields(t: &TransportNetwork, key: &str, c: &CompatibilityReport, r: &mut Report) {
    r.field(key, c.is_compatible());
    if !c.missing_curves.is_empty() {
        let cells: Vec<String> = c
            .missing_curves
            .iter()
            .map(|&cell| cell_name(t, cell))
            .collect();
        r.list(&format!("{key}.missing_curves"), &cells);
    }
}

fn split_cmd(kind: SplitKind, file: &str, dot: bool, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    let t = &doc.network;
    let (eta, origin) = measure_of(&doc)?;
    if !dot {
        r.field("measure", origin);
    }
    let mut notes = Report::new(r.format());
    let eta = prepare(t, eta, kind, &mut notes)?;
    if !dot {
        r.append(notes.finish());
    }
    let (parts, ok) = split_parts(t, &eta, kind, r, dot)?;
    if dot {
        let chains: Vec<(String, _)> = parts
            .iter()
            .map(|p| (p.label.clone(), p.chain.clone()))
            .collect();
        r.raw(&to_dot_with_parts(t, file_stem(file), &chains));
        return Ok(ok);
    }
    for p in &parts {
        part_fields(t, p, r);
    }
    Ok(ok)
}

/// Runs the split; fills `r` with the summary unless only the parts are
/// wanted.
fn split_parts(
    t: &TransportNetwork,
    eta: &CurveMeasure,
    kind: SplitKind,
    r: &mut Report,
    parts_only: bool,
) -> Result<(Vec<SplitPart>, bool)> {
    let mut summary = Report::new(r.format());
    let out = match kind {
        SplitKind::SingleTarget => {
            let s = split_single_target(t, eta)?;
            summary.matrix("matrix", &s.matrix);
            let b0: Vec<String> = s.b0.iter().map(|&i| t.source_label(i)).collect();
            summary.list("B0", &b0);
            for (j, bj) in s.bj.iter().enumerate() {
                let names: Vec<String> = bj.iter().map(|&i| t.source_label(i)).collect();
                summary.list(&format!("B{}", j + 1), &names);
            }
            (s.parts, true)
        }
        SplitKind::MapPlan => {
            let s = split_map_plan(t, eta)?;
            map_fields(t, "map", &s.map, &mut summary);
            summary.matrix("plan", &s.plan);
            compat_fields(t, "map_compatible", &s.map_report, &mut summary);
            compat_fields(t, "plan_compatible", &s.plan_report, &mut summary);
            let ok = s.map_report.is_compatible() && s.plan_report.is_compatible();
            (vec![s.map_part, s.plan_part], ok)
        }
        SplitKind::TwoMaps => {
            let s = split_two_maps(t, eta)?;
            summary.matrix("B", &s.b);
            summary.matrix("B1", &s.b1);
            summary.matrix("B2", &s.b2);
            map_fields(t, "phi", &s.phi, &mut summary);
            map_fields(t, "psi", &s.psi, &mut summary);
            compat_fields(t, "phi_compatible", &s.phi_report, &mut summary);
            compat_fields(t, "psi_compatible", &s.psi_report, &mut summary);
            let ok = s.phi_report.is_compatible() && s.psi_report.is_compatible();
            (vec![s.t1, s.t2], ok)
        }
    };
    if !parts_only {
        r.append(summary.finish());
    }
    Ok(out)
}

fn file_stem(path: &str) -> &str {
    Path::new(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("network")
}

fn cost(file: &str, alpha: f64, r: &mut Report) -> Result<bool> {
    let t = load_document(file)?.network;
    let c = t.cost_alpha(alpha)?;
    r.field("alpha", alpha);
    r.field("cost", c);
    Ok(true)
}

fn compat_verify(file: &str, plan: Option<&str>, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    let t = &doc.network;
    let plan = match plan {
        Some(path) => match load(path)? {
            Input::Matrix(m) => m,
            Input::Document(d) => d
                .matrix
                .ok_or_else(|| Error::Precondition(format!("{path} has no matrix")))?,
        },
        None => doc.matrix.clone().ok_or_else(|| {
            Error::Precondition("no plan: document has no matrix and --plan is absent".into())
        })?,
    };
    let report = verify_compatibility(t, &t.chain(), doc.curves.as_ref(), &plan)?;
    r.field("compatible", report.is_compatible());
    r.field("support_cycle_free", report.support_cycle_free);
    r.field(
        "witness",
        if report.witness_synthesized {
            "synthesized"
        } else {
            "document curves"
        },
    );
    if !report.chain_mismatches.is_empty() {
        let names: Vec<String> = report
            .chain_mismatches
            .iter()
            .map(|&e| edge_name(t, e))
            .collect();
        r.list("chain_mismatches", &names);
    }
    if !report.plan_mismatches.is_empty() {
        let cells: Vec<String> = report
            .plan_mismatches
            .iter()
            .map(|&c| cell_name(t, c))
            .collect();
        r.list("plan_mismatches", &cells);
    }
    if !report.missing_curves.is_empty() {
        let cells: Vec<String> = report
            .missing_curves
            .iter()
            .map(|&c| cell_name(t, c))
            .collect();
        r.list("missing_curves", &cells);
    }
    Ok(report.is_compatible())
}

fn export(file: &str, dot: bool, split: Option<SplitKind>, r: &mut Report) -> Result<bool> {
    let doc = load_document(file)?;
    if !dot {
        r.raw(&emit_document(&doc));
        return Ok(true);
    }
    let t = &doc.network;
    match split {
        None => r.raw(&to_dot(t, file_stem(file))),
        Some(kind) => {
            let mut scratch = Report::new(Format::Machine);
            let eta = prepare(t, measure_of(&doc)?.0, kind, &mut scratch)?;
            let (parts, _) = split_parts(t, &eta, kind, &mut scratch, true)?;
            let chains: Vec<(String, _)> = parts
                .iter()
                .map(|p| (p.label.clone(), p.chain.clone()))
                .collect();
            r.raw(&to_dot_with_parts(t, file_stem(file), &chains));
        }
    }
    Ok(true)
}

fn gen(
    seed: u64,
    sources: usize,
    targets: usize,
    integer: Option<i64>,
    r: &mut Report,
) -> Result<bool> {
    let masses = match integer {
        Some(max) => Masses::Integer { max },
        None => Masses::Rational,
    };
    let network = random_forest(seed, sources, targets, masses)?;
    r.raw(&emit_document(&Document {
        network,
        curves: None,
        matrix: None,
    }));
    Ok(true)
}

fn run(cli: &Cli, r: &mut Report) -> Result<bool> {
    match &cli.command {
        Command::Validate { file } => validate(file, r),
        Command::Cycles { file } => cycles(file, r),
        Command::Good { action } => match action {
            GoodAction::Extract { file } => good_extract(file, r),
            GoodAction::Verify { file } => good_verify(file, r),
        },
        Command::Better { file, emit } => better(file, *emit, r),
        Command::Stairify { file, blockwise } => stairify_cmd(file, *blockwise, r),
        Command::Split { kind, file, dot } => split_cmd(*kind, file, *dot, r),
        Command::Cost { file, alpha } => cost(file, *alpha, r),
        Command::Compat { action } => match action {
            CompatAction::Verify { file, plan } => compat_verify(file, plan.as_deref(), r),
        },
        Command::Export {
            file,
            dot,
            document: _,
            split,
        } => export(file, *dot, *split, r),
        Command::Gen {
            seed,
            sources,
            targets,
            integer_masses,
        } => gen(*seed, *sources, *targets, *integer_masses, r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut r = Report::new(cli.format);
    match run(&cli, &mut r) {
        Ok(ok) => {
            print!("{}", r.finish());
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
