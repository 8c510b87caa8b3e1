//! Batch experiment runner: compactness reports, decompositions, index
//! computation, topology diagnostics, gallery reproduction and scaling
//! studies, emitted as JSON or CSV.
//!
//! Every CLI path is a thin composition of library operations. Reports are
//! byte-identical across runs for a fixed configuration and seed; the seed
//! is recorded in every report header.
//!
//! Exit codes: 0 on success, 1 on a verdict-level failure (an accepted
//! input on which the requested construction fails, or a gallery run that
//! does not reproduce its documented verdicts), 2 on input errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use noether_calc::a_operator::AOperator;
use noether_calc::base_space::{make_sequence_space, SequentialSpace};
use noether_calc::compactness::{
    is_adjointable_compact, is_compact, scaling_study, tail_norm_profile, DEFAULT_EPS,
};
use noether_calc::error::Error as CoreError;
use noether_calc::fredholm::{decompose_fredholm, decompose_id_plus_k, index, DEFAULT_MARGIN};
use noether_calc::gallery;
use noether_calc::topologies::{family_continuity, Topology};

const SCHEMA: &str = "noether-calc/1";

#[derive(Parser)]
#[command(
    name = "noether-calc",
    version,
    about = "operator calculus over C(X) at finite truncation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Recorded in the report header; randomized batteries are internally
    /// seeded, so reports are reproducible for a fixed configuration.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Tail-norm profile and compactness verdict of an operator.
    Compactness {
        #[arg(long)]
        family: Option<String>,
        /// Named operator (id, zero, shift1, shiftm1, shift2, shiftm2,
        /// eq50, eqAA) or @path to an operator JSON file.
        #[arg(long)]
        op: Option<String>,
        /// Space JSON file for @file operators without an embedded space.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long = "M", default_value_t = 8)]
        truncation: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        m_max: Option<usize>,
        /// Test the adjointable subclass (decay of |K q_m|) instead.
        #[arg(long)]
        adjointable: bool,
    },
    /// Noether decomposition: of id + K for a single operator, or of a
    /// parametrix pair when --parametrix is given.
    Decompose {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        parametrix: Option<String>,
        #[arg(long = "M", default_value_t = 8)]
        truncation: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Index of a Fredholm operator given a parametrix; prints both the
    /// [N2]-[N1] convention and the classical sign.
    Index {
        #[arg(long)]
        op: String,
        #[arg(long)]
        parametrix: String,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long = "M", default_value_t = 8)]
        truncation: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Family-continuity diagnostics along the nets of the space.
    Topology {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long = "M", default_value_t = 8)]
        truncation: usize,
        #[arg(long)]
        topology: TopologyArg,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Diagnose the shifted family id + K(x) instead of K(x).
        #[arg(long)]
        shifted: bool,
    },
    /// Reproduce a named family's documented verdicts, run the pair
    /// comparison experiment (--family fredprime), or list the manifest.
    Gallery {
        #[arg(long)]
        family: Option<String>,
        #[arg(long = "M", default_value_t = 8)]
        truncation: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Tail-norm grid of a named family across truncation levels.
    Scaling {
        #[arg(long)]
        family: String,
        /// Comma-separated increasing truncation levels.
        #[arg(long, default_value = "8,16,32,64")]
        levels: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Uniform,
    Strong,
    F,
    Im,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Topology {
        match t {
            TopologyArg::Uniform => Topology::Uniform,
            TopologyArg::Strong => Topology::Strong,
            TopologyArg::F => Topology::F,
            TopologyArg::Im => Topology::Im,
        }
    }
}

enum RunError {
    /// Bad input: unreadable files, unknown names, malformed JSON.
    Input(String),
    /// The computation itself rejected the input.
    Verdict(String),
    /// A verdict-level failure with a full report to emit anyway.
    VerdictReport(String),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InputParse(m) => RunError::Input(m),
            other => RunError::Verdict(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let header = json!({
        "schema": SCHEMA,
        "seed": cli.seed,
    });
    let result = run(&cli.command, cli.format, header);
    match result {
        Ok(body) => {
            if let Err(e) = emit(&cli.output, &body) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Verdict(msg)) => {
            let report = json!({"schema": SCHEMA, "seed": cli.seed, "error": msg});
            let _ = emit(&cli.output, &format!("{report:#}\n"));
            ExitCode::from(1)
        }
        Err(RunError::VerdictReport(body)) => {
            let _ = emit(&cli.output, &body);
            ExitCode::from(1)
        }
        Err(RunError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(output: &Option<PathBuf>, body: &str) -> std::io::Result<()> {
    match output {
        Some(path) => fs::write(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn merge(header: Value, body: Value) -> String {
    let mut obj = header.as_object().cloned().unwrap_or_default();
    if let Value::Object(extra) = body {
        for (k, v) in extra {
            obj.insert(k, v);
        }
    }
    format!("{:#}\n", Value::Object(obj))
}

fn validate_tolerances(eps: f64, margin: Option<f64>) -> Result<(), RunError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(RunError::Input("eps must be positive".into()));
    }
    if let Some(m) = margin {
        if m.is_nan() || m <= 0.0 || m >= 1.0 {
            return Err(RunError::Input("margin must lie strictly in (0, 1)".into()));
        }
    }
    Ok(())
}

/// Resolves a family/operator specification to a space and operator.
fn resolve_operator(
    family: &Option<String>,
    op: &Option<String>,
    space_file: &Option<PathBuf>,
    truncation: usize,
) -> Result<(Arc<SequentialSpace>, AOperator, String), RunError> {
    if truncation < 1 {
        return Err(RunError::Input("M must be at least 1".into()));
    }
    match (family, op) {
        (Some(f), None) => {
            let fam = gallery::by_name(f, truncation)?;
            Ok((fam.space.clone(), fam.operator, format!("family:{f}")))
        }
        (None, Some(spec)) => {
            let (space, label) = match space_file {
                Some(path) => (load_space(path)?, format!("op:{spec}")),
                None => (make_sequence_space(truncation), format!("op:{spec}")),
            };
            let operator = named_operator(spec, &space)?;
            Ok((space, operator, label))
        }
        _ => Err(RunError::Input(
            "exactly one of --family or --op is required".into(),
        )),
    }
}

fn load_space(path: &PathBuf) -> Result<Arc<SequentialSpace>, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    Ok(SequentialSpace::from_json(&v)?)
}

fn named_operator(spec: &str, space: &Arc<SequentialSpace>) -> Result<AOperator, RunError> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Input(format!("cannot read {path}: {e}")))?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| RunError::Input(format!("{path}: {e}")))?;
        // operator files may embed their space under "space"
        let space = if v.get("space").is_some() {
            SequentialSpace::from_json(&v["space"])?
        } else {
            space.clone()
        };
        return Ok(AOperator::from_json(space, &v)?);
    }
    let n = space.len().saturating_sub(1).max(1);
    Ok(match spec {
        "id" => AOperator::identity(space.clone()),
        "zero" => AOperator::zero(space.clone()),
        "shift1" => AOperator::shift(space.clone(), 1),
        "shiftm1" => AOperator::shift(space.clone(), -1),
        "shift2" => AOperator::shift(space.clone(), 2),
        "shiftm2" => AOperator::shift(space.clone(), -2),
        "eq50" => rebuild_family("eq50", n, space)?,
        "eqAA" => rebuild_family("eqAA", n, space)?,
        other => {
            return Err(RunError::Input(format!(
                "unknown operator {other:?}; use id, zero, shift1, shiftm1, shift2, shiftm2, eq50, eqAA or @file"
            )))
        }
    })
}

fn rebuild_family(
    name: &str,
    truncation: usize,
    space: &Arc<SequentialSpace>,
) -> Result<AOperator, RunError> {
    let fam = gallery::by_name(name, truncation)?;
    if fam.space != *space {
        return Err(RunError::Input(format!(
            "family {name} lives on the canonical sequence space; do not pass --space with it"
        )));
    }
    Ok(fam.operator)
}

fn run(command: &Command, format: Format, header: Value) -> Result<String, RunError> {
    match command {
        Command::Compactness {
            family,
            op,
            space,
            truncation,
            eps,
            m_max,
            adjointable,
        } => {
            validate_tolerances(*eps, None)?;
            let (_, operator, label) = resolve_operator(family, op, space, *truncation)?;
            let m_max = m_max.unwrap_or(operator.support() + 4);
            let verdict = if *adjointable {
                is_adjointable_compact(&operator, *eps, m_max)
            } else {
                is_compact(&operator, *eps, m_max)
            };
            let profile = tail_norm_profile(&operator, m_max);
            match format {
                Format::Json => Ok(merge(
                    header,
                    json!({
                        "command": "compactness",
                        "input": label,
                        "M": truncation,
                        "eps": eps,
                        "m_max": m_max,
                        "adjointable": adjointable,
                        "verdict": verdict.to_json()["verdict"],
                        "profile": profile.to_json(),
                    }),
                )),
                Format::Csv => {
                    let mut out = String::from("m,qk_lo,qk_hi,qkq_lo,qkq_hi,kq_lo,kq_hi\n");
                    for (i, m) in profile.m_values.iter().enumerate() {
                        out.push_str(&format!(
                            "{m},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                            profile.qk_norms[i].lo,
                            profile.qk_norms[i].hi,
                            profile.qkq_norms[i].lo,
                            profile.qkq_norms[i].hi,
                            profile.kq_norms[i].lo,
                            profile.kq_norms[i].hi,
                        ));
                    }
                    Ok(out)
                }
            }
        }
        Command::Decompose {
            family,
            op,
            space,
            parametrix,
            truncation,
            margin,
            eps,
        } => {
            validate_tolerances(*eps, Some(*margin))?;
            let (sp, operator, label) = resolve_operator(family, op, space, *truncation)?;
            let dec = match parametrix {
                Some(g_spec) => {
                    let g = named_operator(g_spec, &sp)?;
                    decompose_fredholm(&operator, &g, *margin, *eps)?
                }
                None => decompose_id_plus_k(&operator, *margin)?,
            };
            if format == Format::Csv {
                return Err(RunError::Input("decompose reports are JSON only".into()));
            }
            Ok(merge(
                header,
                json!({
                    "command": "decompose",
                    "input": label,
                    "M": truncation,
                    "margin": margin,
                    "summary": dec.summary_json(),
                }),
            ))
        }
        Command::Index {
            op,
            parametrix,
            space,
            truncation,
            margin,
            eps,
        } => {
            validate_tolerances(*eps, Some(*margin))?;
            let (sp, operator, label) =
                resolve_operator(&None, &Some(op.clone()), space, *truncation)?;
            let g = named_operator(parametrix, &sp)?;
            let dec = decompose_fredholm(&operator, &g, *margin, *eps)?;
            let ix = index(&dec)?;
            match format {
                Format::Json => {
                    let classical: serde_json::Map<String, Value> = sp
                        .points()
                        .iter()
                        .zip(ix.values())
                        .map(|(p, v)| (p.clone(), json!(-v)))
                        .collect();
                    Ok(merge(
                        header,
                        json!({
                            "command": "index",
                            "input": label,
                            "parametrix": parametrix,
                            "M": truncation,
                            "index": ix.to_json(),
                            "classical_index": classical,
                        }),
                    ))
                }
                Format::Csv => {
                    let mut out = String::from("point,index,classical_index\n");
                    for (p, v) in sp.points().iter().zip(ix.values()) {
                        out.push_str(&format!("{p},{v},{}\n", -v));
                    }
                    Ok(out)
                }
            }
        }
        Command::Topology {
            family,
            op,
            space,
            truncation,
            topology,
            eps,
            shifted,
        } => {
            validate_tolerances(*eps, None)?;
            let (sp, operator, label) = resolve_operator(family, op, space, *truncation)?;
            let subject = if *shifted {
                AOperator::identity(sp.clone()).add(&operator)?
            } else {
                operator
            };
            let dim = (subject.support() + subject.offset().unsigned_abs() as usize).max(1);
            let fam = subject.to_family(dim)?;
            let diag = family_continuity(&fam, (*topology).into(), *eps)?;
            match format {
                Format::Json => Ok(merge(
                    header,
                    json!({
                        "command": "topology",
                        "input": label,
                        "M": truncation,
                        "shifted": shifted,
                        "diagnostic": diag.to_json(),
                    }),
                )),
                Format::Csv => Ok(diag.trace_csv()),
            }
        }
        Command::Gallery {
            family,
            truncation,
            eps,
        } => {
            validate_tolerances(*eps, None)?;
            if format == Format::Csv {
                return Err(RunError::Input("gallery reports are JSON only".into()));
            }
            match family.as_deref() {
                None => Ok(merge(
                    header,
                    json!({"command": "gallery", "manifest": gallery::manifest(*truncation)}),
                )),
                Some("fredprime") => {
                    let report = gallery::fredprime_compare(*truncation, *eps)?;
                    let sp = make_sequence_space(*truncation);
                    Ok(merge(
                        header,
                        json!({
                            "command": "gallery",
                            "family": "fredprime",
                            "report": report.to_json(&sp),
                        }),
                    ))
                }
                Some(name) => {
                    let fam = gallery::by_name(name, *truncation)?;
                    let report = fam.verify(*eps)?;
                    let body = merge(
                        header,
                        json!({
                            "command": "gallery",
                            "family": name,
                            "M": truncation,
                            "report": report.to_json(&fam.expected),
                        }),
                    );
                    if !report.matches_expected {
                        return Err(RunError::VerdictReport(body));
                    }
                    Ok(body)
                }
            }
        }
        Command::Scaling {
            family,
            levels,
            eps,
        } => {
            validate_tolerances(*eps, None)?;
            let levels: Vec<usize> = levels
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| RunError::Input(format!("bad level {s:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            // validate the family name before the study enters the closure
            gallery::by_name(family, levels.first().copied().unwrap_or(1))?;
            let name = family.clone();
            let study = scaling_study(
                move |m| {
                    gallery::by_name(&name, m)
                        .expect("validated family name")
                        .operator
                },
                &levels,
                *eps,
            )?;
            match format {
                Format::Json => Ok(merge(
                    header,
                    json!({
                        "command": "scaling",
                        "family": family,
                        "study": study.to_json(),
                    }),
                )),
                Format::Csv => Ok(study.to_csv()),
            }
        }
    }
}
