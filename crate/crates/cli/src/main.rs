use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anosov_limits::pipeline::{cmd_boundary, cmd_classify, cmd_enumerate, cmd_limit_cone, Context, RunReport};
use anosov_limits::{load_scenario, verify, CliError, Scenario};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "anosov-limits", version, about = "Limit sets of discrete subgroups of SL(3,R)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides ball.radius.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Overrides seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// With verify: print the criteria and exit.
    #[arg(long, global = true)]
    list: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Enumerate the word ball and write its cache.
    Enumerate,
    /// Write the limit-cone samples and summary.
    LimitCone,
    /// Write the boundary curve, its SVG and the oppositeness report.
    Boundary,
    /// Classify attracting chambers against cone directions.
    Classify,
    /// Run the acceptance suite.
    Verify,
}

fn scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let mut s = match &cli.config {
        Some(p) => load_scenario(p)?,
        None if matches!(cli.command, Command::Verify) => {
            anosov_limits::parse_scenario("preset.name = reflection\n").map_err(CliError::from)?
        }
        None => {
            return Err(anosov_limits::ConfigError {
                line: 0,
                field: "--config".into(),
                message: "a scenario file is required".into(),
            }
            .into())
        }
    };
    if let Some(r) = cli.radius {
        s.set_radius(r)?;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.list && matches!(cli.command, Command::Verify) {
        print!("{}", verify::list());
        return Ok(());
    }
    let s = scenario(cli)?;
    let cache = std::env::var_os("ANOSOV_LIMITS_CACHE").map(PathBuf::from);
    let ctx = Context::new(s.clone(), cli.out.clone(), cache.clone());
    let start = Instant::now();
    match cli.command {
        Command::Enumerate => {
            let o = cmd_enumerate(&ctx)?;
            println!("element_count={} cache={}", o.element_count, o.cache_path.display());
            let mut r = RunReport::new("enumerate", &s);
            r.element_count = Some(o.element_count);
            r.files.push(o.cache_path);
            r.finish(&ctx, start)?;
        }
        Command::LimitCone => {
            let o = cmd_limit_cone(&ctx)?;
            let c = &o.summary;
            println!(
                "interval=[{}, {}] width={} max_gap={} iota_asymmetry={} samples={}",
                c.interval.0, c.interval.1, c.width, c.max_gap, c.iota_asymmetry, c.sample_count
            );
            let mut r = RunReport::new("limit-cone", &s);
            r.element_count = Some(anosov_limits::pipeline::load_ball(&ctx)?.elements.len());
            r.cone = Some(o.summary);
            r.files = o.files;
            r.finish(&ctx, start)?;
        }
        Command::Boundary => {
            let o = cmd_boundary(&ctx)?;
            let b = &o.report;
            println!(
                "vertices={} conic_residual={:e} min_opposite_score={:e} violations={} tangent_max_angle={:e}",
                b.vertex_count,
                b.conic_residual,
                b.oppositeness.min_score,
                b.oppositeness.violations,
                b.tangent_max_angle
            );
            let mut r = RunReport::new("boundary", &s);
            r.boundary = Some(o.report);
            r.files = o.files;
            r.finish(&ctx, start)?;
        }
        Command::Classify => {
            let o = cmd_classify(&ctx)?;
            for d in &o.digests {
                println!(
                    "chamber [{}] jordan_angle={:.4} best={:.4} radial_cells={} horospherical={}/{}",
                    d.chamber, d.jordan_angle, d.best_direction, d.radial_cells, d.horospherical, d.targets
                );
            }
            let mut r = RunReport::new("classify", &s);
            r.classification = Some(o.digests);
            r.files = o.files;
            r.finish(&ctx, start)?;
        }
        Command::Verify => {
            let report = verify::run(&s, &cli.out.join("verify"), cache);
            print!("{}", report.table());
            let path = cli.out.join("verify.json");
            std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(e.to_string()))?;
            std::fs::write(&path, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
                .map_err(|e| CliError::Io(e.to_string()))?;
            if !report.all_passed() {
                return Err(CliError::Acceptance(report.failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(anosov_limits::EXIT_CONFIG as u8);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
