use std::process::ExitCode;

use collapse_lab::io::{parse_config, run, CliError};

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("COLLAPSE_LAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::InvalidValue {
                field: "COLLAPSE_LAB_THREADS".into(),
                message: format!("expected a positive integer, got `{v}`"),
            }),
        },
    }
}

fn main_inner() -> Result<(), CliError> {
    let parsed = parse_config(std::env::args_os().skip(1))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::InvalidValue { field: "COLLAPSE_LAB_THREADS".into(), message: e.to_string() })?;
    let stdout = std::io::stdout();
    let summary = pool.install(|| run(&parsed.config, &mut stdout.lock()))?;
    for note in &summary.notes {
        eprintln!("{note}");
    }
    for file in &summary.files {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
