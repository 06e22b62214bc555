use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use wavekahler_cli::args::{Cli, Format};
use wavekahler_cli::{run, CliError, Outcome, RunConfig, EXIT_BREACH, EXIT_ERROR};

fn emit(cfg: &RunConfig, out: &Outcome) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(e.to_string());
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    if let Some(text) = &out.text {
        return sink.write_all(text.as_bytes()).map_err(io_err);
    }
    match (cfg.format, &out.table) {
        (Format::Csv, Some(table)) => {
            table.write(&mut sink).map_err(|e| CliError::Io(e.to_string()))?;
            // The table took the main stream; summaries go to stderr.
            for r in &out.reports {
                eprintln!("{} {}: max {:.3e} (tol {:.1e}) {}", r.structure, r.check, r.max_residual, r.tolerance, if r.pass { "pass" } else { "FAIL" });
            }
        }
        (Format::Csv, None) => {
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(["check", "structure", "point", "residual", "value"]).map_err(|e| CliError::Io(e.to_string()))?;
            for r in &out.reports {
                for (i, rec) in r.per_point.iter().flatten().enumerate() {
                    for (k, v) in &rec.residuals {
                        w.write_record([r.check.clone(), r.structure.clone(), i.to_string(), k.clone(), format!("{v:e}")])
                            .map_err(|e| CliError::Io(e.to_string()))?;
                    }
                }
            }
            w.flush().map_err(io_err)?;
        }
        (Format::Json, _) => sink.write_all(out.json().as_bytes()).map_err(io_err)?,
    }
    if !out.pass() && cfg.format == Format::Json && cfg.out.is_some() {
        eprint!("{}", out.json());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::from_cli(&cli).and_then(|cfg| {
        let out = run(&cfg)?;
        emit(&cfg, &out)?;
        Ok(out.pass())
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_BREACH as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
