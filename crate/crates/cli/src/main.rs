//! `comove`: daily rates to weekly spreads, unit-root pretests, model fit
//! and co-movement plots.

mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use comove::correlation::{lower_triangle_csv, ComovementSeries};
use comove::data::{self, MissingDayPolicy, SpreadPanel, SPREAD_LABELS};
use comove::estimation::{fit, FitConfig};
use comove::kv::KvFile;
use comove::likelihood;
use comove::report;
use comove::simulation::{self, simulate};
use comove::stationarity::{pretest, UnitRootReport};
use comove::Error;

#[derive(Parser)]
#[command(name = "comove", version, about = "Weekly money-market spread co-movements (AR(1)-DCC-GARCH)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the weekly spread panel from a daily rate CSV.
    Spreads {
        daily: PathBuf,
        /// Output panel CSV (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Average each series over its own available days instead of
        /// dropping incomplete days.
        #[arg(long)]
        per_series: bool,
    },
    /// ADF and Phillips-Perron tests on each spread.
    Test {
        panel: PathBuf,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Pretest, fit the model and write fit.out, comovements.csv and comovements.svg.
    Fit {
        panel: PathBuf,
        /// Fit configuration (`name = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write the full lower triangle of every R_t to correlations.csv.
        #[arg(long)]
        dump_correlations: bool,
    },
    /// Simulate a panel from a spec file, or write the bundled fixture.
    Simulate {
        /// Simulation spec (`name = value` lines).
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        spec: Option<PathBuf>,
        /// Directory to write fixture_daily.csv and fixture_panel.csv into.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Output panel CSV for --spec (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-render the parameter table and plot from a fit.out.
    Report {
        fit_out: PathBuf,
        /// Where to write the plot (default: comovements.svg next to fit.out).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Input problems exit with 2, model and numerical failures with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Ingest { .. } | Error::Schema { .. } | Error::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("comove: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> comove::Result<()> {
    match command {
        Command::Spreads {
            daily,
            output,
            per_series,
        } => spreads(&daily, output.as_deref(), per_series),
        Command::Test { panel, csv } => test(&panel, csv),
        Command::Fit {
            panel,
            config,
            out_dir,
            dump_correlations,
        } => fit_command(&panel, config.as_deref(), &out_dir, dump_correlations),
        Command::Simulate { spec, fixture, output } => match (spec, fixture) {
            (_, Some(dir)) => write_fixture(&dir),
            (Some(spec), None) => simulate_command(&spec, output.as_deref()),
            (None, None) => Err(Error::Config("simulate needs --spec or --fixture".into())),
        },
        Command::Report { fit_out, svg } => report_command(&fit_out, svg.as_deref()),
    }
}

fn write_text(path: &Path, text: &str) -> comove::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(output: Option<&Path>, text: &str) -> comove::Result<()> {
    match output {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn spreads(daily: &Path, output: Option<&Path>, per_series: bool) -> comove::Result<()> {
    let table = data::load_daily(daily)?;
    let policy = if per_series {
        MissingDayPolicy::PerSeries
    } else {
        MissingDayPolicy::DropIncomplete
    };
    let panel = data::build_spreads(&data::weekly_average_with(&table, policy))?;
    emit(output, &data::panel_to_csv(&panel))?;
    eprintln!("{} daily rows -> {} weeks", table.len(), panel.len());
    Ok(())
}

fn unit_root_reports(panel: &SpreadPanel) -> comove::Result<Vec<UnitRootReport>> {
    let mut out = Vec::new();
    for (i, label) in SPREAD_LABELS.iter().enumerate() {
        out.extend(pretest(label, &panel.series(i))?);
    }
    Ok(out)
}

fn warn_non_rejections(reports: &[UnitRootReport]) {
    for r in reports.iter().filter(|r| !r.reject_at_5pct) {
        eprintln!(
            "warning: {} does not reject a unit root at 5% for {} (statistic {:.3}, critical value {:.3})",
            r.test, r.series_label, r.statistic, r.critical_values[1]
        );
    }
}

fn unit_root_table(reports: &[UnitRootReport]) -> String {
    let mut s = format!(
        "{:<10} {:<4} {:>10} {:>5} {:>9} {:>9} {:>9} {:>7}\n",
        "series", "test", "statistic", "lag", "cv 1%", "cv 5%", "cv 10%", "reject"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<10} {:<4} {:>10.4} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>7}",
            r.series_label,
            r.test.to_string(),
            r.statistic,
            r.lags_or_bandwidth,
            r.critical_values[0],
            r.critical_values[1],
            r.critical_values[2],
            if r.reject_at_5pct { "yes" } else { "no" }
        );
    }
    s
}

fn unit_root_csv(reports: &[UnitRootReport]) -> String {
    let mut s = String::from("series,test,statistic,lag_or_bandwidth,nobs,cv_1pct,cv_5pct,cv_10pct,reject_5pct\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.series_label,
            r.test,
            r.statistic,
            r.lags_or_bandwidth,
            r.nobs,
            r.critical_values[0],
            r.critical_values[1],
            r.critical_values[2],
            r.reject_at_5pct
        );
    }
    s
}

fn test(panel: &Path, csv: bool) -> comove::Result<()> {
    let panel = data::load_panel(panel)?;
    let reports = unit_root_reports(&panel)?;
    if csv {
        print!("{}", unit_root_csv(&reports));
    } else {
        print!("{}", unit_root_table(&reports));
    }
    warn_non_rejections(&reports);
    Ok(())
}

fn load_config(path: Option<&Path>) -> comove::Result<FitConfig> {
    let mut config = match path {
        Some(p) => report::fit_config_from_kv(&KvFile::load(p)?)?,
        None => FitConfig::default(),
    };
    if let Ok(v) = std::env::var("COMOVE_THREADS") {
        config.threads = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("COMOVE_THREADS must be a non-negative integer, got `{v}`")))?;
    }
    Ok(config)
}

fn fit_command(panel_path: &Path, config: Option<&Path>, out_dir: &Path, dump: bool) -> comove::Result<()> {
    let config = load_config(config)?;
    let panel = data::load_panel(panel_path)?;
    if panel.len() < comove::estimation::MIN_WEEKS {
        return Err(Error::TooShort {
            required: comove::estimation::MIN_WEEKS,
            actual: panel.len(),
        });
    }

    // The spread levels enter the model directly, so pretest them first.
    let reports = unit_root_reports(&panel)?;
    eprint!("{}", unit_root_table(&reports));
    warn_non_rejections(&reports);

    let fitted = fit(&panel, &config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    write_text(&out_dir.join("fit.out"), &report::fit_report_text(&fitted, "comovements.csv"))?;
    write_text(&out_dir.join("comovements.csv"), &fitted.comovements.to_csv())?;
    write_text(&out_dir.join("comovements.svg"), &svg::render(&fitted.comovements))?;
    if dump {
        let state = likelihood::filter(&panel, &fitted.params, &config.filter_config())?;
        write_text(
            &out_dir.join("correlations.csv"),
            &lower_triangle_csv(&state.path, &panel.dates()[1..]),
        )?;
    }

    print!("{}", report::parameter_table(&fitted.params, fitted.std_errors.as_ref()));
    println!(
        "log-likelihood {:.4} ({} weeks), {} after {} iterations, gradient norm {:.2e}",
        fitted.loglik,
        fitted.weeks,
        if fitted.converged { "converged" } else { "NOT converged" },
        fitted.iterations,
        fitted.gradient_norm
    );
    if let Some(note) = &fitted.std_error_note {
        eprintln!("warning: no standard errors: {note}");
    }
    if !fitted.converged {
        eprintln!("warning: optimizer stopped with {:?}", fitted.termination);
    }
    Ok(())
}

fn simulate_command(spec: &Path, output: Option<&Path>) -> comove::Result<()> {
    let spec = report::sim_spec_from_kv(&KvFile::load(spec)?)?;
    let sim = simulate(&spec)?;
    emit(output, &data::panel_to_csv(&sim.panel))
}

fn write_fixture(dir: &Path) -> comove::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let daily_path = dir.join("fixture_daily.csv");
    let info = simulation::make_fixture(&daily_path)?;
    let panel = data::build_spreads(&data::weekly_average(&data::load_daily(&daily_path)?))?;
    data::write_panel(&panel, dir.join("fixture_panel.csv"))?;
    eprintln!("fixture seed {}: {} days, {} weeks", info.seed, info.days, info.weeks);
    Ok(())
}

fn report_command(fit_out: &Path, svg_path: Option<&Path>) -> comove::Result<()> {
    let text = std::fs::read_to_string(fit_out).map_err(|e| Error::Io {
        path: fit_out.to_path_buf(),
        source: e,
    })?;
    let saved = report::parse_fit_report(&text)?;
    print!("{}", report::parameter_table(&saved.params, saved.std_errors.as_ref()));
    println!(
        "log-likelihood {:.4} ({} weeks), {} after {} iterations",
        saved.loglik,
        saved.weeks,
        if saved.converged { "converged" } else { "NOT converged" },
        saved.iterations
    );
    let base = fit_out.parent().unwrap_or(Path::new("."));
    let Some(csv_name) = saved.comovements_csv else {
        return Ok(());
    };
    let csv_path = base.join(csv_name);
    let csv = std::fs::read_to_string(&csv_path).map_err(|e| Error::Io { path: csv_path, source: e })?;
    let series = ComovementSeries::from_csv(&csv)?;
    let target = svg_path.map_or_else(|| base.join("comovements.svg"), Path::to_path_buf);
    write_text(&target, &svg::render(&series))?;
    eprintln!("wrote {}", target.display());
    Ok(())
}
