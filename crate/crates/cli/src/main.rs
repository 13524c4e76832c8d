use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use qchan::algebra::md_chain;
use qchan::analysis::{
    block_decompose, classify_asymptotic, densify, generate, separability_index, verify_report, FamilySpec,
    IndexOutcome, MdChainExport, Report, DEFAULT_CAP,
};
use qchan::channel::Channel;
use qchan::error::Error;
use qchan::io::{matrix_from_rows, ChannelFile, ChoiFile, MatrixRows};
use qchan::linalg::Tolerance;
use qchan::separability::{eb_verdict, is_ppt};
use qchan::spectral::spectrum;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "qchan", version, about = "Analyze iterated quantum channels: PPT, entanglement breaking, multiplicative domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input channel JSON, or `-` for stdin.
    #[arg(long = "in", global = true, default_value = "-", value_name = "PATH")]
    input: String,

    /// Output path, or `-` for stdout.
    #[arg(long, global = true, default_value = "-", value_name = "PATH")]
    out: String,

    #[arg(long, global = true, default_value_t = 1e-8, value_parser = positive_f64)]
    tol: f64,

    /// Largest power tried by `index`.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    cap: u64,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Build the input from a named family instead of reading `--in`.
    #[arg(long, global = true, value_enum)]
    family: Option<Family>,

    #[arg(long, global = true)]
    d: Option<usize>,

    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Depolarizing weight for `densify`.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Number of Kraus operators for `random_unital`.
    #[arg(long, global = true)]
    m: Option<usize>,

    /// Depolarizing probability for the `depolarizing` family.
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Matrix JSON (nested `[re, im]` rows) for the `schur` and `unitary` families.
    #[arg(long, global = true, value_name = "PATH")]
    matrix: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check complete positivity, trace preservation and unitality.
    Verify,
    /// Print the Choi matrix.
    Choi,
    /// Partial-transpose test.
    Ppt,
    /// Entanglement-breaking verdict with certificate or witness.
    Eb,
    /// Chain of multiplicative domains of the powers.
    MdChain,
    /// Superoperator spectrum with peripheral eigenvalues marked.
    Spectrum,
    /// First power with an entanglement-breaking certificate.
    Index,
    /// Direct-sum decomposition of a power into primitive blocks.
    Decompose,
    /// Asymptotic entanglement-breaking classification.
    Classify,
    /// Mix with the completely depolarizing channel (needs --delta).
    Densify,
    /// Emit a channel from --family.
    Generate,
    /// Re-validate the evidence in a report read from --in.
    VerifyReport,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Choi => "choi",
            Command::Ppt => "ppt",
            Command::Eb => "eb",
            Command::MdChain => "md-chain",
            Command::Spectrum => "spectrum",
            Command::Index => "index",
            Command::Decompose => "decompose",
            Command::Classify => "classify",
            Command::Densify => "densify",
            Command::Generate => "generate",
            Command::VerifyReport => "verify-report",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Schur,
    Unitary,
    Example51,
    #[value(name = "schur_lambda", alias = "schur-lambda")]
    SchurLambda,
    Omega,
    Identity,
    Depolarizing,
    #[value(name = "random_unital", alias = "random-unital")]
    RandomUnital,
    #[value(name = "random_ppt_unital", alias = "random-ppt-unital")]
    RandomPptUnital,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive finite number, got {s}"))
    }
}

enum Failure {
    Usage(String),
    Invalid(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(Error::from(e).to_string())
    }
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--family {family} requires --{flag}")))
}

fn read_source(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Io(format!("reading stdin: {e}")))?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("reading {path}: {e}")))
    }
}

fn family_spec(cli: &Cli, family: Family) -> Result<FamilySpec, Failure> {
    let matrix = |name: &str| -> Result<_, Failure> {
        let path = need(cli.matrix.as_deref(), "matrix", name)?;
        let rows: MatrixRows = serde_json::from_str(&read_source(path)?)?;
        Ok(matrix_from_rows(&rows)?)
    };
    Ok(match family {
        Family::Schur => FamilySpec::Schur { b: matrix("schur")? },
        Family::Unitary => FamilySpec::Unitary { u: matrix("unitary")? },
        Family::Example51 => FamilySpec::Example51 { d: need(cli.d, "d", "example51")? },
        Family::SchurLambda => FamilySpec::SchurLambda { lambda: need(cli.lambda, "lambda", "schur_lambda")? },
        Family::Omega => FamilySpec::Omega { d: need(cli.d, "d", "omega")? },
        Family::Identity => FamilySpec::Identity { d: need(cli.d, "d", "identity")? },
        Family::Depolarizing => FamilySpec::Depolarizing {
            d: need(cli.d, "d", "depolarizing")?,
            p: need(cli.p, "p", "depolarizing")?,
        },
        Family::RandomUnital => FamilySpec::RandomUnital {
            d: need(cli.d, "d", "random_unital")?,
            m: need(cli.m, "m", "random_unital")?,
            seed: cli.seed,
        },
        Family::RandomPptUnital => FamilySpec::RandomPptUnital {
            d: need(cli.d, "d", "random_ppt_unital")?,
            seed: cli.seed,
        },
    })
}

/// Channel JSON, or a Choi-matrix import recognized by its `matrix` field.
fn parse_channel(text: &str, tol: Tolerance) -> Result<Channel, Failure> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("matrix").is_some() {
        let file: ChoiFile = serde_json::from_value(value)?;
        return Ok(Channel::from_choi(&file.into_choi()?, tol)?);
    }
    let file: ChannelFile = serde_json::from_value(value)?;
    Ok(file.into_channel()?)
}

fn load_channel(cli: &Cli, tol: Tolerance) -> Result<Channel, Failure> {
    match cli.family {
        Some(family) => Ok(generate(&family_spec(cli, family)?)?),
        None => parse_channel(&read_source(&cli.input)?, tol),
    }
}

fn require_channel(e: &Channel, tol: Tolerance) -> Result<(), Failure> {
    if !e.is_tp(tol) {
        return Err(Failure::Invalid("input is not trace preserving, so it is not a channel".into()));
    }
    Ok(())
}

enum Output {
    Report(Box<Report>),
    Channel(ChannelFile),
    Check(qchan::analysis::ReportCheck),
}

fn execute(cli: &Cli) -> Result<(Output, bool), Failure> {
    let tol = Tolerance::new(cli.tol)?;
    let cmd = cli.command;
    if cmd == Command::VerifyReport {
        let report: Report = serde_json::from_str(&read_source(&cli.input)?)?;
        let check = verify_report(&report, tol)?;
        let ok = check.ok();
        return Ok((Output::Check(check), ok));
    }
    if cmd == Command::Generate {
        let Some(family) = cli.family else {
            return Err(Failure::Usage("generate requires --family".into()));
        };
        let e = generate(&family_spec(cli, family)?)?;
        return Ok((Output::Channel(ChannelFile::from_channel(&e)), true));
    }

    let e = load_channel(cli, tol)?;
    let mut report = Report::new(cmd.name(), &e);
    if cmd == Command::Verify {
        let flags = e.verify(tol);
        let ok = flags.tp == Some(true) && flags.cp == Some(true);
        report.flags = Some(flags);
        return Ok((Output::Report(Box::new(report)), ok));
    }
    require_channel(&e, tol)?;
    report.flags = Some(e.verify(tol));
    match cmd {
        Command::Choi => report.choi = Some(ChoiFile::from_choi(&e.choi_of())),
        Command::Ppt => report.ppt = Some(is_ppt(&e, tol)),
        Command::Eb => {
            report.ppt = Some(is_ppt(&e, tol));
            report.verdict = Some(eb_verdict(&e, tol)?);
        }
        Command::MdChain => {
            let chain = md_chain(&e, None, tol)?;
            report.md_chain = Some(MdChainExport {
                dims: chain.dims(),
                kappa: chain.kappa,
                stabilized_abelian: chain.stabilized.is_abelian(tol),
            });
        }
        Command::Spectrum => report.spectrum = Some(spectrum(&e).export()),
        Command::Index => {
            report.ppt = Some(is_ppt(&e, tol));
            report.index = Some(separability_index(&e, cli.cap as usize, tol)?);
        }
        Command::Decompose => {
            let dec = block_decompose(&e, tol)?;
            let power = e.power(dec.n)?;
            report.md_chain = Some(MdChainExport {
                dims: md_chain(&e, None, tol)?.dims(),
                kappa: dec.kappa,
                stabilized_abelian: true,
            });
            report.decomposition = Some(dec.export(&power)?);
        }
        Command::Classify => {
            let chain = md_chain(&e, None, tol)?;
            let class = classify_asymptotic(&e, tol)?;
            report.md_chain = Some(MdChainExport {
                dims: chain.dims(),
                kappa: chain.kappa,
                stabilized_abelian: class.abelian,
            });
            report.asymptotic = Some(class.export());
        }
        Command::Densify => {
            let Some(delta) = cli.delta else {
                return Err(Failure::Usage("densify requires --delta".into()));
            };
            report.densify = Some(densify(&e, delta, tol)?.export());
        }
        Command::Verify | Command::Generate | Command::VerifyReport => unreachable!("handled above"),
    }
    Ok((Output::Report(Box::new(report)), true))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn row(out: &mut String, key: &str, value: impl std::fmt::Display) {
    out.push_str(&format!("{key:<22}{value}\n"));
}

fn status_line(v: &qchan::separability::SeparabilityVerdict) -> String {
    let evidence = v
        .certificate
        .as_ref()
        .map(|c| c.kind())
        .or_else(|| v.witness.as_ref().map(|w| w.kind()))
        .unwrap_or("none");
    format!("{:?} ({evidence})", v.status)
}

fn render_text(output: &Output) -> String {
    let mut out = String::new();
    match output {
        Output::Channel(file) => {
            row(&mut out, "d", file.d);
            row(&mut out, "kraus operators", file.kraus.len());
        }
        Output::Check(check) => {
            for item in &check.passed {
                row(&mut out, item, "ok");
            }
            for item in &check.failed {
                row(&mut out, item, "FAILED");
            }
        }
        Output::Report(r) => {
            row(&mut out, "command", &r.command);
            if let Some(file) = &r.channel {
                row(&mut out, "d", file.d);
                row(&mut out, "kraus operators", file.kraus.len());
            }
            if let Some(f) = &r.flags {
                let show = |b: Option<bool>| b.map_or("?", |b| if b { "yes" } else { "no" });
                row(&mut out, "cp / tp / unital", format!("{} / {} / {}", show(f.cp), show(f.tp), show(f.unital)));
            }
            if let Some(choi) = &r.choi {
                row(&mut out, "choi size", format!("{0}x{0}", choi.d_in * choi.d_out));
            }
            if let Some(p) = &r.ppt {
                row(&mut out, "ppt", format!("{} (min PT eigenvalue {:.6e})", p.ppt, p.min_eigenvalue));
            }
            if let Some(v) = &r.verdict {
                row(&mut out, "status", status_line(v));
            }
            if let Some(m) = &r.md_chain {
                row(&mut out, "md chain dims", format!("{:?}", m.dims));
                row(&mut out, "kappa", m.kappa);
            }
            if let Some(s) = &r.spectrum {
                let k = s.peripheral.iter().filter(|&&p| p).count();
                row(&mut out, "eigenvalues", s.eigenvalues.len());
                row(&mut out, "peripheral", k);
                for (z, p) in s.eigenvalues.iter().zip(&s.peripheral) {
                    let modulus = z[0].hypot(z[1]);
                    out.push_str(&format!("  {:>12.8} {:>+12.8}i  |{modulus:.8}|{}\n", z[0], z[1], if *p { " *" } else { "" }));
                }
            }
            if let Some(idx) = &r.index {
                match &idx.outcome {
                    IndexOutcome::Found { n, certificate } => {
                        row(&mut out, "index", format!("Found({n}) via {}", certificate.kind()))
                    }
                    IndexOutcome::UnknownUpTo { cap } => row(&mut out, "index", format!("UnknownUpTo({cap})")),
                }
                let log: Vec<String> = idx.per_power_log.iter().map(|s| format!("{}:{:?}", s.n, s.status)).collect();
                row(&mut out, "powers", log.join(" "));
            }
            if let Some(dec) = &r.decomposition {
                row(&mut out, "kappa / m / n", format!("{} / {} / {}", dec.kappa, dec.m, dec.n));
                row(&mut out, "sigma", format!("{:?}", dec.sigma));
                row(&mut out, "block dims", format!("{:?}", dec.block_dims));
                row(&mut out, "residual", format!("{:.3e}", dec.residual));
                row(&mut out, "reconstruction", format!("{:.3e}", dec.reconstruction_distance));
            }
            if let Some(a) = &r.asymptotic {
                row(&mut out, "asymptotically eb", a.asymptotically_eb);
                row(&mut out, "stabilized dim", a.stabilized_dim);
                row(&mut out, "projection status", status_line(&a.peripheral_projection_verdict));
            }
            if let Some(dn) = &r.densify {
                row(&mut out, "delta / a", format!("{} / {}", dn.delta, dn.a));
                row(&mut out, "predicted n", dn.predicted_n);
                row(&mut out, "distance", format!("{:.6e}", dn.distance));
            }
        }
    }
    out
}

fn write_output(path: &str, text: &str) -> Result<(), Failure> {
    if path == "-" {
        io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("writing stdout: {e}")))
    } else {
        fs::write(path, text).map_err(|e| Failure::Io(format!("writing {path}: {e}")))
    }
}

fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|(output, ok)| {
        let text = match cli.format {
            Format::Json => match &output {
                Output::Report(r) => to_json(r),
                Output::Channel(c) => to_json(c),
                Output::Check(c) => to_json(c),
            },
            Format::Text => render_text(&output),
        };
        write_output(&cli.out, &text)?;
        Ok(ok)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: validation failed");
            2
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Invalid(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run())
}
