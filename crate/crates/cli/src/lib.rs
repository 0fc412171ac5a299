//! Command-line front end for AGE-CMPC planning, sweeps, protocol runs and
//! grid validation.

pub mod args;
pub mod commands;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use crate::args::{Cli, Command, Format};
use crate::commands::{Report, TranscriptFile, SCHEMA_VERSION};

fn render(report: &dyn ErasedReport, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Json => {
            report.write_json(out)?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(out)?,
    }
    Ok(())
}

/// Object-safe view of [`Report`].
trait ErasedReport {
    fn write_json(&self, out: &mut dyn Write) -> Result<()>;
    fn write_csv(&self, out: &mut dyn Write) -> Result<()>;
    fn passed(&self) -> bool;
}

impl<T: Report> ErasedReport for T {
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        Report::write_csv(self, out)
    }
    fn passed(&self) -> bool {
        Report::passed(self)
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Runs one parsed invocation; `Ok(false)` means a check failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let field = cli.field()?;
    let (report, default_format): (Box<dyn ErasedReport>, Format) = match &cli.command {
        Command::Plan(a) => (Box::new(commands::plan(a)?), Format::Json),
        Command::Sweep(a) => (Box::new(commands::sweep(a)?), Format::Csv),
        Command::Oracle(a) => (Box::new(commands::oracle(a)), Format::Json),
        Command::Run(a) => {
            let out = commands::run(a, field)?;
            if let Some(path) = &a.transcript {
                let mut w = open(Some(path))?;
                let file = TranscriptFile {
                    schema_version: SCHEMA_VERSION,
                    transcript: &out.transcript,
                };
                serde_json::to_writer_pretty(&mut w, &file)?;
                w.flush()?;
            }
            (Box::new(out), Format::Json)
        }
    };
    let mut w = open(cli.out.as_deref())?;
    render(report.as_ref(), cli.format.unwrap_or(default_format), &mut w)?;
    w.flush()?;
    Ok(report.passed())
}
