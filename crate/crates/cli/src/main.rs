//! `parfee`: sweep publish-and-read fee schedules from scenario files.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parfee_cli::scenario::{self, CliError, Scenario};
use parfee_cli::{table, verify};
use parfee_core::ModelError;

#[derive(Parser)]
#[command(
    name = "parfee",
    version,
    about = "Publish-and-read fee schedules, their slopes, and the budget-split market \
             built on them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the volume where the fee switches pricing regime
    Threshold(CommonArgs),
    /// Sweep the fee schedule and its slope to CSV
    FeeCurve(CommonArgs),
    /// Sweep profit and marginal profit to CSV
    ProfitCurve(CommonArgs),
    /// Sweep the budget-implied competitor fee across market splits to CSV
    Duopoly(CommonArgs),
    /// Run the scenario's self-check battery
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario TOML file
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,

    /// Override the sweep grid as LO:HI:STEPS
    #[arg(long, value_name = "LO:HI:STEPS")]
    grid: Option<String>,

    /// Override the root-solve residual tolerance
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,

    /// Write output to a file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let (kind, args) = match cli.command {
        Command::Threshold(a) => (Kind::Threshold, a),
        Command::FeeCurve(a) => (Kind::Curve, a),
        Command::ProfitCurve(a) => (Kind::Curve, a),
        Command::Duopoly(a) => (Kind::Duopoly, a),
        Command::Verify(a) => (Kind::Verify, a),
    };

    let mut scn = scenario::load_scenario(&args.scenario)?;
    if let Some(spec) = &args.grid {
        let (lo, hi, steps) = parse_grid_spec(spec)?;
        scn.apply_grid(lo, hi, steps)?;
    }
    if let Some(tol) = args.tol {
        scn.apply_root_tol(tol)?;
    }

    let (text, code) = match kind {
        Kind::Threshold => cmd_threshold(&scn)?,
        Kind::Curve => cmd_curve(&scn)?,
        Kind::Duopoly => cmd_duopoly(&scn)?,
        Kind::Verify => cmd_verify(&scn),
    };
    write_output(&args.out, &text)?;
    Ok(code)
}

enum Kind {
    Threshold,
    Curve,
    Duopoly,
    Verify,
}

fn cmd_threshold(scn: &Scenario) -> Result<(String, ExitCode), CliError> {
    let (lo, hi) = scn.volume_range();
    match scn.ta.threshold(lo, hi, scn.root_tol) {
        Ok(t) => {
            let mut text = format!("N_tilde = {:.6}\n", t.n_tilde);
            text.push_str(&format!(
                "residual = {:.6e} (tol {:.1e})\n",
                t.residual, t.tolerance
            ));
            text.push_str(&format!("bracket = [{}, {}]\n", t.bracket.0, t.bracket.1));
            text.push_str(&format!("iterations = {}\n", t.iterations));
            Ok((text, ExitCode::SUCCESS))
        }
        Err(ModelError::NoRegimeSwitch { lo, hi, alpha }) => Ok((
            format!("no regime switch in [{lo}, {hi}]; alpha = {alpha} throughout\n"),
            ExitCode::SUCCESS,
        )),
        Err(e) => Err(CliError::Config(format!("threshold solve failed: {e}"))),
    }
}

/// The fee and profit sweeps share one table: every column of interest is
/// cheap once the row's fee is composed, so both commands emit all of them.
fn cmd_curve(scn: &Scenario) -> Result<(String, ExitCode), CliError> {
    let grid = scn.volume_grid();
    let tbl = table::curve_table(&scn.ta, &grid);
    let mut buf = Vec::new();
    let skipped = table::write_curve_csv(&mut buf, &tbl).expect("writing to memory cannot fail");
    warn_skipped(skipped);
    Ok((into_text(buf), ExitCode::SUCCESS))
}

fn cmd_duopoly(scn: &Scenario) -> Result<(String, ExitCode), CliError> {
    let market = scn.market.as_ref().ok_or_else(|| {
        CliError::Config(format!(
            "scenario `{}` has no [oa]/[market] sections; the duopoly command needs both",
            scn.name
        ))
    })?;
    let tbl = market
        .shift_sweep(&scn.grid, scn.near_zero_band)
        .map_err(|e| CliError::Config(format!("sweep failed: {e}")))?;
    let mut buf = Vec::new();
    let skipped = table::write_shift_csv(&mut buf, &tbl).expect("writing to memory cannot fail");
    warn_skipped(skipped);
    Ok((into_text(buf), ExitCode::SUCCESS))
}

fn cmd_verify(scn: &Scenario) -> (String, ExitCode) {
    let report = verify::run_battery(scn);
    let mut buf = Vec::new();
    verify::write_report(&mut buf, &report).expect("writing to memory cannot fail");
    let code = if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    };
    (into_text(buf), code)
}

fn into_text(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("output is ASCII")
}

fn warn_skipped(skipped: usize) {
    if skipped > 0 {
        eprintln!("warning: {skipped} rows skipped (evaluation failed)");
    }
}

fn parse_grid_spec(spec: &str) -> Result<(f64, f64, usize), CliError> {
    let bad = || CliError::Config(format!("--grid expects LO:HI:STEPS (got `{spec}`)"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok((lo, hi, steps))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        None => match io::stdout().write_all(text.as_bytes()) {
            // The reader closed the pipe (e.g. `| head`); nothing left to do.
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
        },
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
    }
}
