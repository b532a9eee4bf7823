use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nematic::energy::breakdown;
use nematic::fem::{assemble_stiffness, check_angles_2d, check_weak_acuteness};
use nematic::quad::rule_for_dim;

use nematic_cli::{config, io, CliError, CliResult};

/// Minimize the one-constant Ericksen liquid-crystal energy on built-in
/// defect experiments and write VTK frames, an energy history, and a
/// reloadable state.
#[derive(Parser)]
#[command(name = "nematic-cli", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the gradient flow for a scenario and write its artifacts.
    Run(RunArgs),
    /// Build a scenario's mesh and report whether it is weakly acute.
    MeshCheck(SelectArgs),
    /// Recompute the energy breakdown of a saved state file.
    EnergyReport(ReportArgs),
}

#[derive(Args)]
struct SelectArgs {
    /// Scenario preset: point2d, plane3d, fluting, propeller, floating.
    #[arg(long)]
    preset: Option<String>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SelectArgs {
    fn overrides(&self) -> config::Overrides {
        config::Overrides {
            preset: self.preset.clone(),
            config: self.config.clone(),
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Output directory (default: out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep budget.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Sweeps between VTK frames (default: 10).
    #[arg(long)]
    stride: Option<usize>,
    /// Stop tolerance factor on the stationarity measure.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// State file written by `run` (state.txt).
    state: PathBuf,
    #[command(flatten)]
    select: SelectArgs,
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let ov = config::Overrides {
        preset: args.select.preset,
        config: args.select.config,
        out: args.out,
        max_steps: args.max_steps,
        stride: args.stride,
        tol: args.tol,
    };
    let settings = config::resolve(&ov)?;
    let outcome = nematic_cli::run(&settings)?;
    let rec = outcome.final_record;
    println!(
        "{}: {} sweeps, converged = {}, total energy {:.6}, min s {:.6}",
        settings.scenario.name, outcome.steps, outcome.converged, rec.total, rec.min_s
    );
    println!("artifacts in {}", outcome.out_dir.display());
    Ok(())
}

/// Returns whether the mesh passed, so the caller can map FAIL to exit 2.
fn cmd_mesh_check(args: SelectArgs) -> CliResult<bool> {
    let settings = config::resolve(&args.overrides())?;
    let mesh = settings.scenario.build_mesh()?;
    let graph = assemble_stiffness(&mesh)?;
    let report = check_weak_acuteness(&graph);

    println!(
        "mesh for {}: {}d, {} nodes, {} cells",
        settings.scenario.name,
        mesh.dim,
        mesh.node_count(),
        mesh.cell_count()
    );
    println!("min off-diagonal stiffness: {:.6e}", report.min_offdiag);
    if mesh.dim == 2 {
        let angles = check_angles_2d(&mesh)?;
        println!(
            "max opposite-angle sum over interior edges: {:.6} (pi = {:.6})",
            angles.max_interior_sum,
            std::f64::consts::PI
        );
    }
    if report.pass() {
        println!("verdict: weakly acute");
        Ok(true)
    } else {
        println!("verdict: FAIL ({} negative off-diagonal pairs)", report.violations.len());
        Ok(false)
    }
}

fn cmd_energy_report(args: ReportArgs) -> CliResult<()> {
    let (dim, s, n) = io::read_state(&args.state)?;
    let settings = config::resolve(&args.select.overrides())?;
    let sc = &settings.scenario;
    let mesh = sc.build_mesh()?;
    if mesh.dim != dim {
        return Err(CliError::Config(format!(
            "state is {dim}d but scenario {} builds a {}d mesh",
            sc.name, mesh.dim
        )));
    }
    if mesh.node_count() != s.len() {
        return Err(CliError::Config(format!(
            "state has {} nodes but the {} mesh has {}; \
             match the mesh settings used for the run",
            s.len(),
            sc.name,
            mesh.node_count()
        )));
    }

    let graph = assemble_stiffness(&mesh)?;
    let rule = rule_for_dim(mesh.dim);
    let pot = sc.potential();
    let b = breakdown(&mesh, &graph, &rule, &pot, sc.kappa, &s, &n)?;
    let min_s = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = b.e1 - b.e1_tilde - 0.25 * b.c1;

    println!("state: {}d, {} nodes, scenario {}", dim, s.len(), sc.name);
    println!("e1 = {:.16e}", b.e1);
    println!("e2 = {:.16e}", b.e2);
    println!("total = {:.16e}", b.total);
    println!("e1_tilde = {:.16e}", b.e1_tilde);
    println!("c1 = {:.16e}", b.c1);
    println!("identity residual = {residual:.16e}");
    println!("min s = {min_s:.16e}");
    println!("max unit residual = {:.16e}", n.max_unit_residual());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and succeed; real
            // parse errors go to stderr and count as configuration errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::MeshCheck(args) => match cmd_mesh_check(args) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Cmd::EnergyReport(args) => cmd_energy_report(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
