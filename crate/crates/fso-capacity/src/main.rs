//! Command-line front end: evaluate, sweep, optimize, validate, pdf.
//!
//! All numeric output goes through the deterministic CSV writer; failures
//! exit nonzero with a single `error: ...` line on stderr.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fso_capacity::capacity::{evaluate, noise_variance, snr_scale};
use fso_capacity::channel::{derive_constants, outage_convergence, ChannelPdf};
use fso_capacity::config::{parse_in_unit, ConfigBuilder, Scenario};
use fso_capacity::error::{Error, Result};
use fso_capacity::output::{format_value, OutputTable};
use fso_capacity::sweep::{argmax_1d, grid_sweep, CapacityPath, SweepSpec, SweptParameter};
use fso_capacity::validation;

#[derive(Parser)]
#[command(
    name = "fso-capacity",
    version,
    about = "Ergodic capacity of a hovering UAV-to-UAV free-space optical link",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Configuration file of `key = value unit` lines
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set P_t=10dBm (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output CSV path; stdout when omitted
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity at one operating point along all four computation paths
    Eval {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Capacity along a uniform grid of one parameter
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Grid: parameter=lo:hi:n, bounds may carry units (w_z=0.5:4:15,
        /// P_t=1mW:1W:10, sigma_theta=2mrad:10mrad:9, theta_fov=...)
        #[arg(long, value_name = "PARAM=LO:HI:N")]
        sweep: String,
        /// Comma-separated computation paths: exact, oracle, closed, largefov
        #[arg(long, value_name = "PATHS", default_value = "closed")]
        paths: String,
    },
    /// Capacity-maximizing value of one parameter (coarse grid plus
    /// golden-section refinement)
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Search grid: parameter=lo:hi:n, bounds may carry units
        #[arg(long, value_name = "PARAM=LO:HI:N")]
        sweep: String,
        /// Computation path used as the objective
        #[arg(long, value_name = "PATH", default_value = "closed")]
        paths: String,
        /// Skip the golden-section refinement stage
        #[arg(long)]
        coarse_only: bool,
    },
    /// Closed form vs quadrature-oracle validation suite; exits nonzero on
    /// any failure that is not a documented deviation
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Channel density samples and outage mass over an intensity grid
    Pdf {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of intensity grid points
        #[arg(long, value_name = "N", default_value_t = 200)]
        points: usize,
    },
}

/// Build the scenario from defaults, the optional config file and overrides.
/// `default_power_dbm` supplies P_t for subcommands where it is optional.
fn build_scenario(args: &ScenarioArgs, default_power_dbm: Option<f64>) -> Result<Scenario> {
    let mut b = ConfigBuilder::new();
    if let Some(dbm) = default_power_dbm {
        b.apply_override(&format!("P_t={dbm}dBm"))?;
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        b.apply_file(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    for assignment in &args.set {
        b.apply_override(assignment)?;
    }
    b.build()
}

fn echo_into(table: &mut OutputTable, scenario: &Scenario) {
    for (k, v) in scenario.echo() {
        table.meta(&k, v);
    }
}

fn parse_paths(raw: &str) -> Result<Vec<CapacityPath>> {
    let mut out = Vec::new();
    for name in raw.split(',') {
        let path = CapacityPath::from_name(name.trim())?;
        if !out.contains(&path) {
            out.push(path);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no capacity paths requested".into()));
    }
    Ok(out)
}

/// Parse `param=lo:hi:n` into a sweep spec over `scenario`.
fn parse_sweep(raw: &str, scenario: Scenario, paths: Vec<CapacityPath>) -> Result<SweepSpec> {
    let Some((key, rest)) = raw.split_once('=') else {
        return Err(Error::Config(format!(
            "expected parameter=lo:hi:n in `--sweep {raw}`"
        )));
    };
    let parameter = SweptParameter::from_key(key.trim())?;
    let parts: Vec<&str> = rest.split(':').collect();
    let [lo_raw, hi_raw, n_raw] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "expected lo:hi:n after `{key}=`, got `{rest}`"
        )));
    };
    let lo = parse_in_unit(key.trim(), lo_raw)?;
    let hi = parse_in_unit(key.trim(), hi_raw)?;
    let count: usize = n_raw.trim().parse().map_err(|_| {
        Error::Config(format!("grid size must be a positive integer, got `{n_raw}`"))
    })?;
    let spec = SweepSpec {
        parameter,
        lo,
        hi,
        count,
        scenario,
        paths,
    };
    spec.validate()?;
    Ok(spec)
}

fn cmd_eval(args: &ScenarioArgs) -> Result<()> {
    let scenario = build_scenario(args, None)?;
    let n = scenario.noise_model()?;
    let report = evaluate(&scenario.link, &n)?;
    let constants = derive_constants(&scenario.link)?;

    let mut t = OutputTable::new(&["path", "capacity_nats", "capacity_bits"]);
    echo_into(&mut t, &scenario);
    t.meta("gamma_sq", format_value(constants.gamma_sq));
    t.meta("a0", format_value(constants.a0));
    t.meta(
        "noise_variance",
        format_value(noise_variance(&n, scenario.link.fov_angle)?),
    );
    t.meta(
        "snr_scale",
        format_value(snr_scale(&n, scenario.link.fov_angle)?),
    );
    t.meta(
        "outage_series_rel_change",
        format_value(outage_convergence(&scenario.link)?),
    );
    for (k, v) in [
        ("i11", report.i_terms.i11),
        ("i12", report.i_terms.i12),
        ("i21", report.i_terms.i21),
        ("i22", report.i_terms.i22),
    ] {
        t.meta(k, format_value(v));
    }
    for (k, v) in [
        ("delta_closed_vs_exact", report.delta_closed_vs_exact),
        ("delta_closed_vs_oracle", report.delta_closed_vs_oracle),
        ("delta_oracle_vs_exact", report.delta_oracle_vs_exact),
        ("delta_largefov_vs_closed", report.delta_largefov_vs_closed),
    ] {
        t.meta(k, format_value(v));
    }
    if let Some(w) = &report.guard_warning {
        t.meta("warning", w.clone());
    }
    for (name, nats, bits) in [
        ("exact", report.exact_nats, report.exact_bits),
        (
            "oracle",
            report.highsnr_oracle_nats,
            report.highsnr_oracle_bits,
        ),
        ("closed", report.closed_form_nats, report.closed_form_bits),
        ("largefov", report.large_fov_nats, report.large_fov_bits),
    ] {
        t.row(vec![name.into(), format_value(nats), format_value(bits)]);
    }
    t.write(args.out.as_deref())
}

/// When the sweep varies P_t itself, the scenario's own P_t is a placeholder
/// that every grid point overwrites, so it need not be configured.
fn sweeps_power(sweep: &str) -> bool {
    sweep.split_once('=').is_some_and(|(k, _)| k.trim() == "P_t")
}

fn cmd_sweep(args: &ScenarioArgs, sweep: &str, paths: &str) -> Result<()> {
    let scenario = build_scenario(args, sweeps_power(sweep).then_some(10.0))?;
    let paths = parse_paths(paths)?;
    let spec = parse_sweep(sweep, scenario.clone(), paths.clone())?;
    let result = grid_sweep(&spec)?;

    let mut header: Vec<String> = vec![spec.parameter.key().to_string()];
    for p in &paths {
        header.push(format!("{}_bits", p.name()));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = OutputTable::new(&header_refs);
    t.meta("sweep_parameter", spec.parameter.key());
    echo_into(&mut t, &scenario);
    for row in &result.rows {
        let mut cells = vec![format_value(row.value)];
        for r in &row.results {
            cells.push(match r.bits {
                Some(b) => format_value(b),
                None => "nan".into(),
            });
            if let Some(e) = &r.error {
                t.meta(
                    &format!("error[{}={:e},{}]", spec.parameter.key(), row.value, r.path.name()),
                    e.clone(),
                );
            }
            if let Some(w) = &r.warning {
                t.meta(
                    &format!("warning[{}={:e},{}]", spec.parameter.key(), row.value, r.path.name()),
                    w.clone(),
                );
            }
        }
        t.row(cells);
    }
    t.write(args.out.as_deref())
}

fn cmd_optimize(args: &ScenarioArgs, sweep: &str, paths: &str, coarse_only: bool) -> Result<()> {
    let scenario = build_scenario(args, sweeps_power(sweep).then_some(10.0))?;
    let paths = parse_paths(paths)?;
    if paths.len() != 1 {
        return Err(Error::Config(
            "optimize takes exactly one capacity path as its objective".into(),
        ));
    }
    let spec = parse_sweep(sweep, scenario.clone(), paths.clone())?;
    let r = argmax_1d(&spec, !coarse_only)?;

    let mut t = OutputTable::new(&["parameter", "optimum", "capacity_bits", "on_boundary"]);
    t.meta("objective_path", paths[0].name());
    t.meta(
        "search_range",
        format!("[{}, {}] n={}", format_value(spec.lo), format_value(spec.hi), spec.count),
    );
    t.meta("refined", (!coarse_only && !r.boundary).to_string());
    echo_into(&mut t, &scenario);
    if r.boundary {
        t.meta(
            "warning",
            "maximum sits on the search boundary; no interior optimum bracketed",
        );
    }
    t.row(vec![
        spec.parameter.key().into(),
        format_value(r.parameter),
        format_value(r.bits),
        r.boundary.to_string(),
    ]);
    t.write(args.out.as_deref())
}

fn cmd_validate(args: &ScenarioArgs) -> Result<()> {
    if args.config.is_some() || !args.set.is_empty() {
        return Err(Error::Config(
            "validate runs on its fixed reference grids and takes no \
             configuration overrides"
                .into(),
        ));
    }
    let checks = validation::run_suite()?;
    let mut failed = 0usize;
    let mut warned = 0usize;
    for c in &checks {
        println!("[{}] {}: {}", c.status(), c.name, c.detail);
        match c.status() {
            "FAIL" => failed += 1,
            "WARN" => warned += 1,
            _ => {}
        }
    }
    println!(
        "validate: {} checks, {} passed, {} known deviations, {} failed",
        checks.len(),
        checks.len() - failed - warned,
        warned,
        failed
    );
    if failed > 0 {
        return Err(Error::Config(format!(
            "{failed} validation check(s) failed"
        )));
    }
    Ok(())
}

fn cmd_pdf(args: &ScenarioArgs, points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::Config("pdf needs at least 2 grid points".into()));
    }
    // P_t does not enter the channel density; default it so `pdf` works
    // from a bare parameter set.
    let scenario = build_scenario(args, Some(10.0))?;
    let pdf = ChannelPdf::new(&scenario.link)?;
    let (lo, hi) = fso_capacity::channel::hbar_bounds(&pdf.constants, &scenario.link);

    let mut t = OutputTable::new(&["h", "pdf"]);
    echo_into(&mut t, &scenario);
    t.meta("outage_mass", format_value(pdf.outage_mass));
    t.meta("continuous_mass", format_value(1.0 - pdf.outage_mass));
    t.meta("normalization", format_value(pdf.normalization()?));
    // log-spaced intensity grid across the support of the density
    for j in 0..points {
        let hbar = lo + (hi - lo) * j as f64 / (points - 1) as f64;
        let h = hbar.exp();
        t.row(vec![format_value(h), format_value(pdf.pdf_continuous(h)?)]);
    }
    t.write(args.out.as_deref())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Eval { scenario } => cmd_eval(scenario),
        Command::Sweep {
            scenario,
            sweep,
            paths,
        } => cmd_sweep(scenario, sweep, paths),
        Command::Optimize {
            scenario,
            sweep,
            paths,
            coarse_only,
        } => cmd_optimize(scenario, sweep, paths, *coarse_only),
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Pdf { scenario, points } => cmd_pdf(scenario, *points),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // single-line, machine-parsable failure reason
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
