//! Command-line entry point: one analysis per invocation.
//!
//! Exit codes: 0 for a completed analysis (findings and unresolved
//! dependencies are output, not failures), 1 for operational errors with a
//! machine-greppable `error: <code>: <detail>` line on stderr, 2 for usage
//! errors. No environment variables are read: the analyzer must not be
//! influenced by `LD_*` settings.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::closure::{analyze, AnalyzeError, DEFAULT_MAX_DEPTH};
use crate::report::{derive_findings, render_json, render_text};
use crate::resolver::standard_dirs_for;
use so_surface_core::elf::parse_header;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Static shared-object hijack surface analyzer for ELF binaries.
///
/// Parses loader-relevant metadata straight from file bytes, resolves
/// dependencies under a sysroot with embedded-path precedence, and reports
/// the two-level dependency tree with hijack-surface findings. Never
/// executes or loads the analyzed objects.
#[derive(Debug, Parser)]
#[command(name = "so-surface", version, max_term_width = 100)]
pub struct CliOptions {
    /// ELF executable or shared object to analyze.
    pub input: PathBuf,

    /// Directory treated as the filesystem root during resolution
    /// (host `/`, or an extracted firmware rootfs).
    #[arg(long, default_value = "/")]
    pub sysroot: PathBuf,

    /// Dependency levels to expand below the root.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: u32,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Runs one analysis; returns the process exit status.
pub fn run(options: &CliOptions) -> i32 {
    match try_run(options) {
        Ok(()) => 0,
        Err(CliError { code, detail }) => {
            eprintln!("error: {code}: {detail}");
            1
        }
    }
}

struct CliError {
    code: &'static str,
    detail: String,
}

fn fail(code: &'static str, detail: impl ToString) -> CliError {
    CliError { code, detail: detail.to_string() }
}

fn try_run(options: &CliOptions) -> Result<(), CliError> {
    // The machine code steers which arch-specific standard dirs exist, so
    // the root's header is read up front.
    let root_bytes = fs::read(&options.input)
        .map_err(|e| fail("io", format!("{}: {e}", options.input.display())))?;
    let header = parse_header(&root_bytes)
        .map_err(|e| fail("not-elf", format!("{}: {e}", options.input.display())))?;
    drop(root_bytes);

    let config = standard_dirs_for(header.machine, &options.sysroot)
        .map_err(|e| fail("sysroot-missing", e))?;

    let report = analyze(&options.input, &config, options.max_depth).map_err(|e| match e {
        AnalyzeError::RootNotElf { .. } => fail("not-elf", e),
        AnalyzeError::SysrootMissing(_) => fail("sysroot-missing", e),
        AnalyzeError::Io { .. } => fail("io", e),
    })?;
    let findings = derive_findings(&report);

    for warning in &report.warnings {
        eprintln!("warning: {}", crate::report::warning_line(warning, &report));
    }

    let rendered: Vec<u8> = match options.format {
        Format::Text => render_text(&report, &findings).into_bytes(),
        Format::Json => render_json(&report, &findings),
    };
    match &options.output {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| fail("io", format!("{}: {e}", path.display())))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&rendered).map_err(|e| fail("io", e))?;
        }
    }
    Ok(())
}

/// clap maps usage errors to exit code 2 via its own error handling.
pub fn main_entry() -> i32 {
    let options = CliOptions::parse();
    run(&options)
}
