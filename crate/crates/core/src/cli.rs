//! Command-line front end: `list`, `verify`, `eval` and `table`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::numkern::{working_digits, BigReal, Digits};
use crate::registry::verify::{eval_numeric, sides_at};
use crate::registry::{
    builtin_corpus, parse_corpus, parse_eval_input, verify_all, IdentityRecord, PointSpec, RecordKind, Status,
    VerificationReport, VerifyOptions,
};

/// Extra working digits used by `table` beyond the requested digits.
pub const TABLE_EXTRA_DIGITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableName {
    #[value(name = "5.4")]
    Psi,
    #[value(name = "5.5")]
    Phi,
    #[value(name = "5.6")]
    V,
    #[value(name = "sec1")]
    Sec1,
}

impl TableName {
    fn prefix(self) -> &'static str {
        match self {
            TableName::Psi => "T-5.4-",
            TableName::Phi => "T-5.5-",
            TableName::V => "T-5.6-",
            TableName::Sec1 => "N-S1-",
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// List the records of the corpus.
    List,
    /// Verify records and print one report per record.
    Verify,
    /// Evaluate `EXPR` or `EXPR at q=VALUE`.
    Eval { expr: String },
    /// Compare tabulated explicit values with independent evaluations.
    Table { which: TableName },
}

#[derive(Debug, Clone, Parser)]
#[command(name = "cubiccf", version, about = "Exact and high-precision checks of cubic continued fraction identities")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Series order; overrides the order declared by each record.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(10..=400))]
    pub order: Option<u32>,
    /// Decimal digits; overrides the digits declared by each record.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(15..=200))]
    pub digits: Option<u32>,
    /// Comma-separated record ids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
    #[arg(long, global = true, value_enum, default_value = "markdown")]
    pub format: Format,
    /// Read the corpus from a file instead of the built-in one.
    #[arg(long = "corpus", global = true)]
    pub corpus_path: Option<PathBuf>,
    /// Verify records concurrently.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Report elapsed_ms as 0.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;

const DEFAULT_DIGITS: u32 = 40;

fn load_corpus(cfg: &CliConfig, err: &mut dyn Write) -> Option<Vec<IdentityRecord>> {
    let Some(path) = &cfg.corpus_path else {
        return Some(builtin_corpus());
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match parse_corpus(&text) {
        Ok(r) => Some(r),
        Err(e) => {
            let _ = writeln!(err, "error: {}:{e}", path.display());
            None
        }
    }
}

fn select(cfg: &CliConfig, records: Vec<IdentityRecord>, err: &mut dyn Write) -> Option<Vec<IdentityRecord>> {
    let Some(ids) = &cfg.ids else {
        return Some(records);
    };
    let mut out = Vec::new();
    for id in ids {
        match records.iter().find(|r| &r.id == id) {
            Some(r) => out.push(r.clone()),
            None => {
                let _ = writeln!(err, "error: unknown identity id {id}");
                return None;
            }
        }
    }
    Some(out)
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

#[derive(Serialize)]
struct ListEntry<'a> {
    id: &'a str,
    kind: &'a str,
    reference: &'a str,
    corrected: bool,
}

fn cmd_list(cfg: &CliConfig, records: &[IdentityRecord], out: &mut dyn Write) -> std::io::Result<i32> {
    match cfg.format {
        Format::Json => {
            let entries: Vec<_> = records
                .iter()
                .map(|r| ListEntry {
                    id: &r.id,
                    kind: r.kind.label(),
                    reference: &r.reference,
                    corrected: r.is_corrected(),
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&entries).expect("plain data serializes"))?;
        }
        Format::Markdown => {
            writeln!(out, "| id | kind | reference | corrected |")?;
            writeln!(out, "|---|---|---|---|")?;
            for r in records {
                writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    r.id,
                    r.kind.label(),
                    md_escape(&r.reference),
                    if r.is_corrected() { "yes" } else { "" }
                )?;
            }
        }
    }
    Ok(EXIT_PASS)
}

/// Exit status for a batch of reports: engine errors win over failures.
pub fn exit_status(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Error) {
        EXIT_ENGINE
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}

/// Reports as JSON (pretty, stable field order) or a markdown table.
pub fn render_reports(reports: &[VerificationReport], format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(reports).expect("plain data serializes") + "\n",
        Format::Markdown => {
            let mut s = String::from("| id | kind | status | detail | elapsed_ms |\n|---|---|---|---|---|\n");
            for r in reports {
                s += &format!(
                    "| {} | {} | {} | {} | {} |\n",
                    r.id,
                    r.kind,
                    r.status.label(),
                    md_escape(&r.detail),
                    r.elapsed_ms
                );
            }
            let pass = reports.iter().filter(|r| r.status == Status::Pass).count();
            s += &format!("\n{pass}/{} passed\n", reports.len());
            s
        }
    }
}

fn cmd_verify(cfg: &CliConfig, records: &[IdentityRecord], out: &mut dyn Write) -> std::io::Result<i32> {
    let opts = VerifyOptions {
        order: cfg.order,
        digits: cfg.digits,
        no_timing: cfg.no_timing,
    };
    let reports = verify_all(records, &opts, cfg.parallel);
    out.write_all(render_reports(&reports, cfg.format).as_bytes())?;
    Ok(exit_status(&reports))
}

/// Value of `EXPR [at q=VALUE]` rounded to `digits` significant digits.
pub fn eval_text(text: &str, digits: u32) -> Result<String, String> {
    let d = Digits::new(digits).map_err(|e| e.to_string())?;
    let (expr, point) = parse_eval_input(text).map_err(|e| e.to_string())?;
    let w = working_digits(d, expr.size());
    let value = match point {
        None => {
            let cf = expr
                .to_closed_form()
                .ok_or_else(|| "expression needs a point: append 'at q=VALUE'".to_string())?;
            cf.eval(w).map_err(|e| e.to_string())?
        }
        Some(v) => {
            let q = eval_numeric(&v, None, w).map_err(|e| e.to_string())?;
            eval_numeric(&expr, Some(&q), w).map_err(|e| e.to_string())?
        }
    };
    Ok(value.to_decimal_string(digits))
}

fn cmd_eval(cfg: &CliConfig, text: &str, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<i32> {
    let digits = cfg.digits.unwrap_or(DEFAULT_DIGITS);
    match eval_text(text, digits) {
        Ok(v) => {
            writeln!(out, "{v}  [{digits} digits]")?;
            Ok(EXIT_PASS)
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(EXIT_USAGE)
        }
    }
}

/// One row of an explicit-value table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub id: String,
    pub closed_form: String,
    pub closed_form_value: String,
    pub numeric_value: String,
    pub difference: String,
    pub status: Status,
}

/// Rows for the records whose id starts with the table's prefix. Each
/// closed form is evaluated on its own and compared with the other side
/// evaluated from its theta or continued-fraction definition, both at
/// `digits + TABLE_EXTRA_DIGITS`; a row passes when the relative
/// difference is at most `10^-digits`.
pub fn table_rows(records: &[IdentityRecord], which: TableName, digits: u32) -> Result<Vec<TableRow>, String> {
    let d = Digits::new(digits).map_err(|e| e.to_string())?;
    let w = d.plus(TABLE_EXTRA_DIGITS);
    let mut rows = Vec::new();
    for rec in records.iter().filter(|r| r.id.starts_with(which.prefix())) {
        let RecordKind::Numeric { points, .. } = &rec.kind else {
            continue;
        };
        let Some(p @ PointSpec::Q(_)) = points.first() else {
            return Err(format!("{}: table entries need a q= point", rec.id));
        };
        let cf = rec
            .rhs
            .to_closed_form()
            .ok_or_else(|| format!("{}: right side is not a closed form", rec.id))?;
        let c = cf.eval(w).map_err(|e| format!("{}: {e}", rec.id))?;
        let (n, _) = sides_at(rec, p, w).map_err(|e| format!("{}: {e}", rec.id))?;
        let diff = (&n - &c).abs();
        let one = BigReal::one(w);
        let scale = if c.abs() > one { c.abs() } else { one };
        let pass = diff <= &BigReal::pow10(-(digits as i32), w) * &scale;
        let shown = digits.min(50);
        rows.push(TableRow {
            id: rec.id.clone(),
            closed_form: rec.rhs.to_string(),
            closed_form_value: c.to_decimal_string(shown),
            numeric_value: n.to_decimal_string(shown),
            difference: if diff.is_zero() { "0".into() } else { diff.to_sci_string(3) },
            status: if pass { Status::Pass } else { Status::Fail },
        });
    }
    Ok(rows)
}

fn cmd_table(
    cfg: &CliConfig,
    records: &[IdentityRecord],
    which: TableName,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let digits = cfg.digits.unwrap_or(DEFAULT_DIGITS);
    let rows = match table_rows(records, which, digits) {
        Ok(r) => r,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_ENGINE);
        }
    };
    match cfg.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("plain data serializes"))?,
        Format::Markdown => {
            writeln!(out, "| id | closed form | closed-form value | numeric value | difference | status |")?;
            writeln!(out, "|---|---|---|---|---|---|")?;
            for r in &rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} |",
                    r.id,
                    md_escape(&r.closed_form),
                    r.closed_form_value,
                    r.numeric_value,
                    r.difference,
                    r.status.label()
                )?;
            }
        }
    }
    Ok(if rows.iter().all(|r| r.status == Status::Pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

/// Run a parsed configuration, writing results to `out` and diagnostics
/// to `err`; returns the process exit status.
pub fn execute(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cfg.command {
        Command::Eval { expr } => cmd_eval(cfg, expr, out, err),
        command => {
            let Some(records) = load_corpus(cfg, err) else {
                return EXIT_USAGE;
            };
            let Some(records) = select(cfg, records, err) else {
                return EXIT_USAGE;
            };
            match command {
                Command::List => cmd_list(cfg, &records, out),
                Command::Verify => cmd_verify(cfg, &records, out),
                Command::Table { which } => cmd_table(cfg, &records, *which, out, err),
                Command::Eval { .. } => unreachable!(),
            }
        }
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_ENGINE
    })
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute(&cfg, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let cfg = CliConfig::try_parse_from(std::iter::once("cubiccf").chain(args.iter().copied())).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = execute(&cfg, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ranges_are_enforced() {
        assert!(CliConfig::try_parse_from(["cubiccf", "verify", "--order", "5"]).is_err());
        assert!(CliConfig::try_parse_from(["cubiccf", "verify", "--digits", "201"]).is_err());
        assert!(CliConfig::try_parse_from(["cubiccf", "table", "5.7"]).is_err());
    }

    #[test]
    fn unknown_id_is_a_usage_error() {
        let (code, _, err) = run_capture(&["verify", "--ids", "S-9.9"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("S-9.9"));
    }

    #[test]
    fn verify_one_series_record() {
        let (code, out, _) = run_capture(&["verify", "--ids", "S-2.8", "--order", "40", "--format", "json", "--no-timing"]);
        assert_eq!(code, EXIT_PASS);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v[0]["status"], "pass");
        assert_eq!(v[0]["elapsed_ms"], 0);
    }

    #[test]
    fn report_field_order() {
        let rep = VerificationReport {
            id: "X".into(),
            kind: "series".into(),
            status: Status::Fail,
            detail: "d".into(),
            elapsed_ms: 3,
        };
        let s = serde_json::to_string(&rep).unwrap();
        assert_eq!(s, r#"{"id":"X","kind":"series","status":"fail","detail":"d","elapsed_ms":3}"#);
    }

    #[test]
    fn exit_precedence() {
        let mk = |status| VerificationReport {
            id: String::new(),
            kind: String::new(),
            status,
            detail: String::new(),
            elapsed_ms: 0,
        };
        assert_eq!(exit_status(&[mk(Status::Pass)]), EXIT_PASS);
        assert_eq!(exit_status(&[mk(Status::Pass), mk(Status::Fail)]), EXIT_FAIL);
        assert_eq!(exit_status(&[mk(Status::Fail), mk(Status::Error)]), EXIT_ENGINE);
    }

    #[test]
    fn eval_examples() {
        assert!(eval_text("phi(q) at q=0", 20).unwrap().starts_with('1'));
        let a = eval_text("V(-q) at q=exp(-pi)", 40).unwrap();
        let b = eval_text("(1-sqrt(3))/2", 40).unwrap();
        assert_eq!(a, b);
        assert!(eval_text("phi(q)", 20).is_err());
        assert!(eval_text("rho(q) at q=0.1", 20).is_err());
    }

    #[test]
    fn eval_errors_exit_2() {
        let (code, _, err) = run_capture(&["eval", "phi(q) +"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn list_json_is_valid() {
        let (code, out, _) = run_capture(&["list", "--format", "json"]);
        assert_eq!(code, EXIT_PASS);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 62);
    }
}
