//! The `eetc` command line.
//!
//! Exit codes: 0 when the checked property holds, 1 when it fails (a
//! witness, if any, goes to standard output), 2 for usage, parse and
//! configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{self, AnalysisError, CheckReport, LooseMode};
use crate::dsl::{parse, parse_trace_log, resolve};
use crate::model::{Document, EetExpr, Trace};
use crate::monitor;
use crate::oracle;
use crate::render::{self, Format, RenderOptions};
use crate::semantics::compile;

#[derive(Debug, Parser)]
#[command(name = "eetc", version, about = "Check, monitor and draw extended event traces")]
pub struct Cli {
    /// Print reports as JSON objects.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MemberMode {
    Exact,
    Embed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConsistencyMode {
    Segment,
    Embed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Svg,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a document.
    Check { file: PathBuf },
    /// List the traces of an EET up to a length, shortest first.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        eet: String,
        #[arg(long)]
        max_len: usize,
        /// Use the brute-force enumerator instead of the automaton.
        #[arg(long)]
        oracle: bool,
    },
    /// Is a logged trace a word of an EET?
    Member {
        file: PathBuf,
        #[arg(long)]
        eet: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: MemberMode,
    },
    /// Is every trace of the concrete EET a trace of the abstract one?
    Refine {
        file: PathBuf,
        #[arg(long = "abstract")]
        abstract_: String,
        #[arg(long)]
        concrete: String,
    },
    /// Does a scenario share a trace with a complete description?
    Consistent {
        file: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        complete: String,
        #[arg(long, value_enum, default_value = "segment")]
        mode: ConsistencyMode,
    },
    /// Do the EETs share a trace?
    Conjoin {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eets: Vec<String>,
    },
    /// Replay a log against an EET and print one verdict per event.
    Monitor {
        file: PathBuf,
        #[arg(long)]
        eet: String,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Draw an EET, or a logged trace, as a sequence diagram.
    Render {
        file: PathBuf,
        #[arg(long, required_unless_present = "trace")]
        eet: Option<String>,
        /// Draw this trace instead of an EET.
        #[arg(long, conflicts_with = "eet")]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "svg")]
        format: RenderFormat,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Column order, comma separated.
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
        #[arg(long)]
        hide_params: bool,
        #[arg(long, default_value_t = 40)]
        px_per_row: u32,
    },
}

/// A failure that maps to exit code 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            let _ = writeln!(err, "eetc: {}", msg.trim_end());
            2
        }
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Document, Fatal> {
    let source = read(path)?;
    parse(&source).map_err(|errors| {
        let lines: Vec<String> = errors
            .iter()
            .map(|e| format!("{}:{e}", path.display()))
            .collect();
        Fatal(lines.join("\n"))
    })
}

fn load_trace(path: &Path) -> Result<Trace, Fatal> {
    parse_trace_log(&read(path)?).map_err(|e| Fatal(format!("{}:{e}", path.display())))
}

fn eet(doc: &Document, name: &str) -> Result<EetExpr, Fatal> {
    Ok(resolve(doc, name)?)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, Fatal> {
    match &cli.command {
        Command::Check { file } => {
            let doc = load(file)?;
            if cli.json {
                let v = serde_json::json!({
                    "domains": doc.domains.len(),
                    "components": doc.components,
                    "messages": doc.messages.len(),
                    "eets": doc.eets.keys().collect::<Vec<_>>(),
                });
                writeln!(out, "{v}")?;
            } else {
                writeln!(
                    out,
                    "ok: {} domains, {} components, {} messages, {} eets",
                    doc.domains.len(),
                    doc.components.len(),
                    doc.messages.len(),
                    doc.eets.len()
                )?;
            }
            Ok(0)
        }
        Command::Enumerate {
            file,
            eet: name,
            max_len,
            oracle: use_oracle,
        } => {
            let doc = load(file)?;
            let e = eet(&doc, name)?;
            let words = if *use_oracle {
                oracle::denote(&e, &doc, *max_len)?.traces
            } else {
                compile(&e, &doc)?.words_up_to(*max_len)
            };
            let mut words: Vec<Trace> = words.into_iter().collect();
            words.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
            if cli.json {
                writeln!(out, "{}", serde_json::to_string(&words)?)?;
            } else {
                for (k, w) in words.iter().enumerate() {
                    if k > 0 {
                        writeln!(out)?;
                    }
                    writeln!(out, "# trace {} ({} events)", k + 1, w.len())?;
                    write!(out, "{w}")?;
                }
            }
            Ok(0)
        }
        Command::Member {
            file,
            eet: name,
            trace,
            mode,
        } => {
            let doc = load(file)?;
            let e = eet(&doc, name)?;
            let t = load_trace(trace)?;
            let report = match mode {
                MemberMode::Exact => analysis::member(&t, &e, &doc),
                MemberMode::Embed => analysis::member_embedded(&t, &e, &doc),
            };
            report_out(cli, out, report)
        }
        Command::Refine {
            file,
            abstract_,
            concrete,
        } => {
            let doc = load(file)?;
            let (a, c) = (eet(&doc, abstract_)?, eet(&doc, concrete)?);
            report_out(cli, out, analysis::refines(&c, &a, &doc))
        }
        Command::Consistent {
            file,
            scenario,
            complete,
            mode,
        } => {
            let doc = load(file)?;
            let (s, c) = (eet(&doc, scenario)?, eet(&doc, complete)?);
            let mode = match mode {
                ConsistencyMode::Segment => LooseMode::Segment,
                ConsistencyMode::Embed => LooseMode::Embed,
            };
            report_out(cli, out, analysis::loose_consistent(&s, &c, mode, &doc))
        }
        Command::Conjoin { file, eets } => {
            let doc = load(file)?;
            let es = eets
                .iter()
                .map(|n| eet(&doc, n))
                .collect::<Result<Vec<_>, _>>()?;
            report_out(cli, out, analysis::conjoin_nonempty(&es, &doc))
        }
        Command::Monitor {
            file,
            eet: name,
            trace,
        } => {
            let doc = load(file)?;
            let e = eet(&doc, name)?;
            let t = load_trace(trace)?;
            let (end, records) = monitor::run_log(&e, &doc, &t)?;
            for r in &records {
                writeln!(out, "{}", r.to_json())?;
            }
            Ok(if end.in_language() { 0 } else { 1 })
        }
        Command::Render {
            file,
            eet: name,
            trace,
            format,
            output,
            columns,
            hide_params,
            px_per_row,
        } => {
            let doc = load(file)?;
            let opts = RenderOptions {
                format: match format {
                    RenderFormat::Svg => Format::Svg,
                    RenderFormat::Text => Format::Text,
                },
                column_order: columns.clone(),
                show_params: !hide_params,
                px_per_row: *px_per_row,
            };
            let bytes = match (name, trace) {
                (_, Some(path)) => render::render_trace(&load_trace(path)?, &doc, &opts)?,
                (Some(name), None) => {
                    let e = doc.eet(name)?;
                    render::render_eet(e, &doc, &opts)?
                }
                (None, None) => return Err(Fatal("render needs --eet or --trace".into())),
            };
            match output {
                Some(path) => {
                    fs::write(path, bytes).map_err(|e| Fatal(format!("{}: {e}", path.display())))?
                }
                None => out.write_all(&bytes)?,
            }
            Ok(0)
        }
    }
}

fn report_out(
    cli: &Cli,
    out: &mut dyn Write,
    report: Result<CheckReport, AnalysisError>,
) -> Result<i32, Fatal> {
    let report = report?;
    if cli.json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        let verdict = if report.holds { "holds" } else { "fails" };
        writeln!(out, "{:?}: {verdict}", report.question)?;
        if let Some(w) = &report.witness {
            writeln!(out, "# witness ({} events)", w.len())?;
            write!(out, "{w}")?;
        }
    }
    Ok(if report.holds { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["eetc".to_string()];
        argv.extend(args.iter().map(|a| {
            if a.ends_with(".eet") || a.ends_with(".log") {
                fixture(a)
            } else {
                a.to_string()
            }
        }));
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn refine_holds() {
        let (code, out, _) = call(&[
            "refine",
            "car_rental.eet",
            "--abstract",
            "CarReservation",
            "--concrete",
            "SuccessfulReservation",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "Refines: holds\n");
    }

    #[test]
    fn refine_fails_with_witness() {
        let (code, out, _) = call(&[
            "--json",
            "refine",
            "car_rental.eet",
            "--abstract",
            "SuccessfulReservation",
            "--concrete",
            "CarReservation",
        ]);
        assert_eq!(code, 1);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["holds"], false);
        assert_eq!(v["witness"], serde_json::json!([]));
    }

    #[test]
    fn empty_log_is_a_member() {
        let (code, out, _) = call(&[
            "member",
            "car_rental.eet",
            "--eet",
            "CarReservation",
            "--trace",
            "empty.log",
        ]);
        assert_eq!(code, 0, "{out}");
    }

    #[test]
    fn cyclic_refs_are_configuration_errors() {
        let (code, out, err) = call(&["check", "cyclic.eet"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("CyclicRef"), "{err}");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["member", "car_rental.eet", "--eet", "CarReservation"]).0, 2);
        let (code, _, err) = call(&["check", "missing.eet"]);
        assert_eq!(code, 2);
        assert!(err.contains("missing.eet"));
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("refine"));
    }

    #[test]
    fn unknown_eet() {
        let (code, _, err) = call(&[
            "enumerate",
            "car_rental.eet",
            "--eet",
            "Nope",
            "--max-len",
            "3",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("Nope"));
    }

    #[test]
    fn enumerate_engine_matches_oracle() {
        let base = ["enumerate", "car_rental.eet", "--eet", "CarReservation", "--max-len", "5"];
        let (code, a, _) = call(&base);
        assert_eq!(code, 0);
        let mut with_oracle = base.to_vec();
        with_oracle.push("--oracle");
        let (_, b, _) = call(&with_oracle);
        assert_eq!(a, b);
        assert_eq!(a.matches("# trace").count(), 41);
        assert!(a.starts_with("# trace 1 (0 events)\n"));
    }

    #[test]
    fn monitor_stream() {
        let (code, out, _) = call(&[
            "monitor",
            "car_rental.eet",
            "--eet",
            "CarReservation",
            "--trace",
            "reservation.log",
        ]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[4].ends_with(r#""verdict":"ACCEPTED-FINAL"}"#));
    }

    #[test]
    fn render_text_to_stdout() {
        let (code, out, _) = call(&[
            "render",
            "car_rental.eet",
            "--eet",
            "SuccessfulReservation",
            "--format",
            "text",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.matches('>').count() + out.matches('<').count(), 5);
    }
}
