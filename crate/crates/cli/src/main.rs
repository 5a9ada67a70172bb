mod config;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dce::analysis::{coupling_scan, exact_coupling_mass, mass_sweep, DEFAULT_STRONG_THRESHOLD};
use dce::bogoliubov::{diagonal_defects, is_period_aligned, particle_numbers};
use dce::model::{omega_static, Cavity3DSpec, SimulationConfig};
use dce::{evolve_with, Method, Overrides, Preset};

use config::{pick, FileConfig};
use output::{manifest_path, num, write_row, Manifest};

#[derive(Parser, Debug)]
#[command(
    name = "dce",
    version,
    about = "Particle creation in a cavity with an oscillating wall"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for columns and sweep points.
    #[arg(long, global = true, env = "DCE_JOBS")]
    jobs: Option<usize>,

    /// Flat key = value file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration and write the particle spectrum over time.
    Simulate(SimulateArgs),
    /// Particle number of the resonant mode over a grid of masses.
    Sweep(SweepArgs),
    /// List resonant intermode couplings reachable from the driven mode.
    Couplings(CouplingArgs),
    /// Run the checks attached to a preset and report pass/fail.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone, Default)]
#[group(multiple = false)]
struct MassSource {
    /// Mass parameter M.
    #[arg(long)]
    mass: Option<f64>,
    /// Transverse cavity geometry ly,lz,ny,nz.
    #[arg(long, value_parser = parse_cavity)]
    cavity: Option<Cavity3DSpec>,
    /// Mass at which 3 Omega_n = Omega_k, given as n,k.
    #[arg(long, value_parser = parse_pair)]
    mass_exact_coupling: Option<(usize, usize)>,
}

#[derive(Args, Debug, Clone, Default)]
struct Physics {
    /// Relative wall amplitude.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Mode cutoff K.
    #[arg(long)]
    kmax: Option<usize>,
    /// Wall rest position.
    #[arg(long)]
    l0: Option<f64>,
    /// Integrator tolerance, applied as both relative and absolute.
    #[arg(long)]
    err: Option<f64>,
    /// rkf45 or dop853.
    #[arg(long)]
    method: Option<Method>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    mass: MassSource,
    #[command(flatten)]
    physics: Physics,
    /// Drive at omega = 2 Omega_n^0.
    #[arg(long, conflicts_with = "omega")]
    resonant_n: Option<usize>,
    /// Wall frequency.
    #[arg(long)]
    omega: Option<f64>,
    /// Final time.
    #[arg(long)]
    tmax: Option<f64>,
    /// Spacing of the output rows.
    #[arg(long)]
    sample_dt: Option<f64>,
    /// Output CSV; the manifest goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    physics: Physics,
    /// start:stop:step or a comma-separated list.
    #[arg(long)]
    mass_grid: Option<String>,
    #[arg(long)]
    resonant_n: Option<usize>,
    /// Time at which N_n is read.
    #[arg(long)]
    t_eval: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CouplingArgs {
    #[command(flatten)]
    mass: MassSource,
    #[arg(long)]
    l0: Option<f64>,
    #[arg(long, conflicts_with = "omega")]
    resonant_n: Option<usize>,
    /// Wall frequency; defaults to 2 Omega_n^0 of the resonant mode.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    max_mode: Option<usize>,
    /// Largest detuning |l - l~| / l counted as strong.
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the rows as CSV (plus manifest) instead of printing a table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// fig1, fig5, fig9, fig13, fig15 or oracle.
    #[arg(long)]
    preset: Option<Preset>,
    /// Override the preset's integrator tolerance.
    #[arg(long)]
    err: Option<f64>,
    /// Override the preset's cutoff.
    #[arg(long)]
    kmax: Option<usize>,
    /// Override the preset's evaluation time.
    #[arg(long)]
    t_eval: Option<f64>,
}

/// Bad flags or configuration; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_cavity(s: &str) -> Result<Cavity3DSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [ly, lz, ny, nz] = parts[..] else {
        return Err("expected ly,lz,ny,nz".into());
    };
    let spec = Cavity3DSpec {
        ly: ly.parse().map_err(|e| format!("ly: {e}"))?,
        lz: lz.parse().map_err(|e| format!("lz: {e}"))?,
        ny: ny.parse().map_err(|e| format!("ny: {e}"))?,
        nz: nz.parse().map_err(|e| format!("nz: {e}"))?,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected n,k")?;
    Ok((
        a.trim().parse().map_err(|e| format!("n: {e}"))?,
        b.trim().parse().map_err(|e| format!("k: {e}"))?,
    ))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let grid = match parts[..] {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (start.parse()?, stop.parse()?, step.parse()?);
            if !(step > 0.0 && stop >= start) {
                bail!("grid needs step > 0 and stop >= start");
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| start + i as f64 * step).collect()
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()?,
        _ => bail!("expected start:stop:step or a comma-separated list"),
    };
    if grid.is_empty() || grid.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        bail!("masses must be finite and >= 0");
    }
    Ok(grid)
}

/// Mass from whichever source was given, falling back to the file.
fn resolve_mass(
    src: &MassSource,
    file: &FileConfig,
    l0: f64,
) -> Result<(f64, Option<Cavity3DSpec>)> {
    let from_file = || -> Result<MassSource> {
        let given = ["mass", "cavity", "mass-exact-coupling"]
            .iter()
            .filter(|k| file.contains(k))
            .count();
        if given > 1 {
            bail!("config file sets more than one of mass, cavity, mass-exact-coupling");
        }
        Ok(MassSource {
            mass: file.get("mass")?,
            cavity: file
                .get::<String>("cavity")?
                .map(|s| parse_cavity(&s))
                .transpose()
                .map_err(|e| anyhow!(e))?,
            mass_exact_coupling: file
                .get::<String>("mass-exact-coupling")?
                .map(|s| parse_pair(&s))
                .transpose()
                .map_err(|e| anyhow!(e))?,
        })
    };
    let src = if src.mass.is_some() || src.cavity.is_some() || src.mass_exact_coupling.is_some() {
        src.clone()
    } else {
        from_file().map_err(|e| usage(e.to_string()))?
    };
    if let Some(m) = src.mass {
        return Ok((m, None));
    }
    if let Some(c) = src.cavity {
        return Ok((c.mass(l0), Some(c)));
    }
    if let Some((n, k)) = src.mass_exact_coupling {
        let m = exact_coupling_mass(n, k).map_err(|e| usage(e.to_string()))?;
        return Ok((m, None));
    }
    Ok((0.0, None))
}

fn resolve_physics(p: &Physics, file: &FileConfig) -> Result<SimulationConfig> {
    let d = SimulationConfig::default();
    Ok(SimulationConfig {
        epsilon: pick(p.epsilon, file, "epsilon")?.unwrap_or(d.epsilon),
        cutoff: pick(p.kmax, file, "kmax")?.unwrap_or(d.cutoff),
        l0: pick(p.l0, file, "l0")?.unwrap_or(d.l0),
        err: pick(p.err, file, "err")?.unwrap_or(d.err),
        method: pick(p.method, file, "method")?.unwrap_or(d.method),
        ..d
    })
}

fn resolve_omega(
    cfg: &SimulationConfig,
    resonant_n: Option<usize>,
    omega: Option<f64>,
    file: &FileConfig,
) -> Result<(f64, Option<usize>)> {
    if let Some(w) = omega {
        return Ok((w, None));
    }
    let n = match resonant_n {
        Some(n) => Some(n),
        None => match file.get::<f64>("omega")? {
            Some(w) => return Ok((w, None)),
            None => file.get("resonant-n")?,
        },
    };
    let n = n.unwrap_or(1);
    if n == 0 {
        return Err(usage("--resonant-n starts at 1"));
    }
    Ok((2.0 * omega_static(n, cfg), Some(n)))
}

fn echo_config(m: &mut Manifest, cfg: &SimulationConfig, cavity: Option<&Cavity3DSpec>) {
    m.set("l0", num(cfg.l0));
    m.set("epsilon", num(cfg.epsilon));
    m.set("omega", num(cfg.omega));
    m.set("mass", num(cfg.mass));
    m.set("kmax", cfg.cutoff);
    m.set("err", num(cfg.err));
    m.set("tmax", num(cfg.t_max));
    m.set("sample-dt", num(cfg.sample_dt));
    m.set("integrator", cfg.method.name());
    if let Some(c) = cavity {
        m.set(
            "cavity",
            format!("{},{},{},{}", num(c.ly), num(c.lz), c.ny, c.nz),
        );
    }
}

fn check_keys(file: &FileConfig, known: &[&str]) -> Result<()> {
    let unknown = file.unknown_keys(known);
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(usage(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )))
    }
}

const PHYSICS_KEYS: [&str; 5] = ["epsilon", "kmax", "l0", "err", "method"];
const MASS_KEYS: [&str; 3] = ["mass", "cavity", "mass-exact-coupling"];

fn out_path(flag: Option<PathBuf>, file: &FileConfig, default: &str) -> Result<PathBuf> {
    Ok(pick(flag, file, "out")?.unwrap_or_else(|| PathBuf::from(default)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn simulate(args: SimulateArgs, file: &FileConfig) -> Result<ExitCode> {
    let known: Vec<&str> = PHYSICS_KEYS
        .iter()
        .chain(&MASS_KEYS)
        .chain(&["resonant-n", "omega", "tmax", "sample-dt", "out"])
        .copied()
        .collect();
    check_keys(file, &known)?;
    let mut cfg = resolve_physics(&args.physics, file)?;
    let (mass, cavity) = resolve_mass(&args.mass, file, cfg.l0)?;
    cfg.mass = mass;
    cfg.omega = resolve_omega(&cfg, args.resonant_n, args.omega, file)?.0;
    cfg.t_max = pick(args.tmax, file, "tmax")?.unwrap_or(cfg.t_max);
    cfg.sample_dt = pick(args.sample_dt, file, "sample-dt")?.unwrap_or(cfg.sample_dt);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let out = out_path(args.out, file, "spectrum.csv")?;

    let k = cfg.cutoff;
    let mut csv = create(&out)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|n| format!("N_{n}")));
    header.push("N_total".into());
    header.extend((1..=k).map(|n| format!("d_{n}")));
    header.push("period_aligned".into());
    write_row(&mut csv, &header)?;

    let mut manifest = Manifest::new("simulate");
    echo_config(&mut manifest, &cfg, cavity.as_ref());
    let started = Instant::now();
    let period = cfg.period();
    let tail = k.saturating_sub(4).max(1);
    let (mut head_defect, mut tail_defect) = (0.0f64, 0.0f64);
    let mut rows = 0usize;
    let mut failure: Option<anyhow::Error> = None;
    let result = evolve_with(&cfg, |t, states| {
        if failure.is_some() {
            return;
        }
        let row = (|| -> Result<Vec<String>> {
            let numbers = particle_numbers(states, &cfg, t)?;
            let defects = diagonal_defects(states, &cfg)?;
            for (i, d) in defects.iter().enumerate() {
                if i < 5 {
                    head_defect = head_defect.max(d.abs());
                }
                if i + 1 >= tail {
                    tail_defect = tail_defect.max(d.abs());
                }
            }
            let aligned = period.is_some_and(|p| is_period_aligned(t, p, cfg.sample_dt));
            let mut row = Vec::with_capacity(2 * k + 3);
            row.push(num(t));
            row.extend(numbers.iter().map(|&x| num(x)));
            row.push(num(numbers.iter().sum()));
            row.extend(defects.iter().map(|&x| num(x)));
            row.push(if aligned { "1" } else { "0" }.to_string());
            Ok(row)
        })();
        match row.and_then(|r| write_row(&mut csv, &r).map_err(Into::into)) {
            Ok(()) => rows += 1,
            Err(e) => failure = Some(e),
        }
    });
    csv.flush()?;
    drop(csv);

    manifest.set(
        "wall-clock-seconds",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    manifest.set("rows", rows);
    manifest.set("max-abs-defect-first-5", num(head_defect));
    manifest.set("max-abs-defect-last-5", num(tail_defect));
    let code = match (result, failure) {
        (_, Some(e)) => {
            manifest.set("status", "failed");
            manifest.set("failure", &e);
            manifest.write(&manifest_path(&out))?;
            return Err(e);
        }
        (Err(e), None) => {
            manifest.set("status", "failed");
            manifest.set("failure", &e);
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        (Ok(stats), None) => {
            manifest.set("status", "ok");
            manifest.set("steps-accepted", stats.accepted);
            manifest.set("steps-rejected", stats.rejected);
            manifest.set("rhs-evaluations", stats.evaluations);
            ExitCode::SUCCESS
        }
    };
    manifest.write(&manifest_path(&out))?;
    Ok(code)
}

fn sweep(args: SweepArgs, file: &FileConfig) -> Result<ExitCode> {
    let known: Vec<&str> = PHYSICS_KEYS
        .iter()
        .chain(&["mass-grid", "resonant-n", "t-eval", "out"])
        .copied()
        .collect();
    check_keys(file, &known)?;
    let template = resolve_physics(&args.physics, file)?;
    let grid =
        pick(args.mass_grid, file, "mass-grid")?.ok_or_else(|| usage("--mass-grid is required"))?;
    let masses = parse_grid(&grid).map_err(|e| usage(format!("--mass-grid: {e}")))?;
    let n = pick(args.resonant_n, file, "resonant-n")?.unwrap_or(1);
    let t_eval = pick(args.t_eval, file, "t-eval")?.unwrap_or(2000.0);
    let out = out_path(args.out, file, "sweep.csv")?;

    let started = Instant::now();
    let result = mass_sweep(&template, &masses, n, t_eval).map_err(|e| usage(e.to_string()))?;

    let mut csv = create(&out)?;
    write_row(
        &mut csv,
        &[
            "M",
            "N_resonant",
            "sinh_prediction",
            "exact_coupling_flag",
            "coupled_partner",
        ]
        .map(String::from),
    )?;
    for p in &result.points {
        write_row(
            &mut csv,
            &[
                num(p.mass),
                num(p.n_resonant),
                num(p.sinh_prediction),
                u8::from(p.exact_coupling).to_string(),
                p.coupled_partner.map_or(String::new(), |k| k.to_string()),
            ],
        )?;
    }
    csv.flush()?;

    let mut manifest = Manifest::new("sweep");
    let mut echo = template.clone();
    echo.t_max = t_eval;
    echo.sample_dt = t_eval;
    echo_config(&mut manifest, &echo, None);
    manifest.set("mass", "per row");
    manifest.set("omega", format!("2 Omega_{n}(M) per row"));
    manifest.set("mass-grid", &grid);
    manifest.set("resonant-n", n);
    manifest.set("t-eval", num(t_eval));
    manifest.set(
        "wall-clock-seconds",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    manifest.set("points", result.points.len());
    manifest.set("failed-points", result.failures());
    for (i, p) in result.points.iter().enumerate() {
        if let Some(e) = &p.failure {
            manifest.set(&format!("failure-{i}"), format!("M={}: {e}", num(p.mass)));
        }
    }
    let ok = result.points.len() - result.failures();
    let passed = 10 * ok >= 9 * result.points.len();
    manifest.set("status", if passed { "ok" } else { "failed" });
    manifest.write(&manifest_path(&out))?;
    if !passed {
        eprintln!(
            "error: only {ok} of {} sweep points succeeded",
            result.points.len()
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn couplings(args: CouplingArgs, file: &FileConfig) -> Result<ExitCode> {
    let known: Vec<&str> = MASS_KEYS
        .iter()
        .chain(&["l0", "resonant-n", "omega", "max-mode", "threshold", "out"])
        .copied()
        .collect();
    check_keys(file, &known)?;
    let mut cfg = SimulationConfig {
        l0: pick(args.l0, file, "l0")?.unwrap_or(1.0),
        ..SimulationConfig::default()
    };
    let (mass, cavity) = resolve_mass(&args.mass, file, cfg.l0)?;
    cfg.mass = mass;
    let (omega, n) = resolve_omega(&cfg, args.resonant_n, args.omega, file)?;
    cfg.omega = omega;
    let n = n.unwrap_or(1);
    let max_mode = pick(args.max_mode, file, "max-mode")?.unwrap_or(50);
    let threshold = pick(args.threshold, file, "threshold")?.unwrap_or(DEFAULT_STRONG_THRESHOLD);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let graph = coupling_scan(&cfg, n, max_mode, threshold).map_err(|e| usage(e.to_string()))?;

    let rows: Vec<[String; 6]> = graph
        .entries
        .iter()
        .map(|e| {
            [
                e.k.to_string(),
                e.branch.sign().to_string(),
                num(e.l_tilde),
                e.l.to_string(),
                num(e.detuning),
                e.class.to_string(),
            ]
        })
        .collect();
    match pick(args.out, file, "out")? {
        Some(out) => {
            let mut csv = create(&out)?;
            write_row(
                &mut csv,
                &["k", "branch", "l_tilde", "l", "detuning", "class"].map(String::from),
            )?;
            for r in &rows {
                write_row(&mut csv, r)?;
            }
            csv.flush()?;
            let mut manifest = Manifest::new("couplings");
            manifest.set("l0", num(cfg.l0));
            manifest.set("mass", num(cfg.mass));
            manifest.set("omega", num(cfg.omega));
            if let Some(c) = cavity {
                manifest.set(
                    "cavity",
                    format!("{},{},{},{}", num(c.ly), num(c.lz), c.ny, c.nz),
                );
            }
            manifest.set("resonant-n", n);
            manifest.set("max-mode", max_mode);
            manifest.set("threshold", num(threshold));
            manifest.set("chain", format!("{:?}", graph.chain));
            manifest.write(&manifest_path(&out))?;
        }
        None => {
            println!(
                "{:>4} {:>6} {:>12} {:>4} {:>12}  class",
                "k", "branch", "l_tilde", "l", "detuning"
            );
            for e in &graph.entries {
                println!(
                    "{:>4} {:>6} {:>12.6} {:>4} {:>12.3e}  {}",
                    e.k,
                    e.branch.sign(),
                    e.l_tilde,
                    e.l,
                    e.detuning,
                    e.class
                );
            }
            println!("chain: {:?}", graph.chain);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs, file: &FileConfig) -> Result<ExitCode> {
    check_keys(file, &["preset", "err", "kmax", "t-eval"])?;
    let preset = pick(args.preset, file, "preset")?.ok_or_else(|| usage("--preset is required"))?;
    let overrides = Overrides {
        err: pick(args.err, file, "err")?,
        cutoff: pick(args.kmax, file, "kmax")?,
        t_eval: pick(args.t_eval, file, "t-eval")?,
    };
    let checks = dce::run_checks(preset, &overrides)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{preset}: {} passed, {failed} failed",
        checks.len() - failed
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("starting worker pool")?;
    }
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate(a) => simulate(a, &file),
        Command::Sweep(a) => sweep(a, &file),
        Command::Couplings(a) => couplings(a, &file),
        Command::Validate(a) => validate(a, &file),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<dce::Error>() {
        Some(dce::Error::InvalidConfig(_)) | Some(dce::Error::NoSolution(_)) => 2,
        Some(dce::Error::IntegrationFailure { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        let g = parse_grid("0.1:0.4:0.1").unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[3] - 0.4).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("-1").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn cavity_and_pair_flags() {
        let c = parse_cavity("11,11,1,1").unwrap();
        assert!((c.mass(1.0) - 0.404).abs() < 1e-3);
        assert!(parse_cavity("1,1,0,1").is_err());
        assert!(parse_cavity("1,1,1").is_err());
        assert_eq!(parse_pair("1, 5").unwrap(), (1, 5));
        assert!(parse_pair("15").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&usage("x")), 2);
        assert_eq!(exit_code(&dce::Error::InvalidConfig("x".into()).into()), 2);
        let failure = dce::Error::IntegrationFailure {
            column: 1,
            t: 0.0,
            reason: "x".into(),
        };
        assert_eq!(exit_code(&failure.into()), 3);
        assert_eq!(exit_code(&anyhow!("io")), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
