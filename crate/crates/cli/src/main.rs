use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fejerlab::convolution::{convolve, Target};
use fejerlab::experiments::{
    emit_report, lebesgue_point_check, report_to_string, run_convergence, SweepSpec, Verdict,
    JUMP_TOLERANCE,
};
use fejerlab::fourier::FourierCoefficients;
use fejerlab::kernels::verify_approximate_identity;
use fejerlab::partitions::{masses_converge, LocalPartition};
use fejerlab::{Config, GroupChart, GroupKind, GroupPoint, KernelFamily, KernelParam, QuadratureSpec};

#[derive(Parser, Debug)]
#[command(name = "fejerlab", version, about = "Approximate identities on groups: kernels, partitions, convergence sweeps")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check unit mass, bounded L1 norm and shrinking tails along a sweep.
    VerifyKernel(KernelArgs),
    /// Cell masses of a partition along a sweep.
    Masses(MassArgs),
    /// Convolve a target along a sweep and compare with the predicted limit.
    Converge(ConvergeArgs),
    /// Fejer convolution against Cesaro means of the Fourier series.
    Compare(CompareArgs),
    /// Averaged deviation |f - f(x)| over shrinking intervals on the line.
    Lebesgue(LebesgueArgs),
}

#[derive(Args, Debug, Default)]
struct KernelArgs {
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// `int:<n0>:<count>`, `real:<theta0>:<ratio>:<count>` or `list:<v1>,<v2>,...`
    #[arg(long)]
    sweep: Option<String>,
    /// Single Fejer order instead of a sweep.
    #[arg(long, conflicts_with_all = ["sweep", "theta"])]
    n: Option<u64>,
    /// Single scale instead of a sweep.
    #[arg(long, conflicts_with_all = ["sweep", "n"])]
    theta: Option<f64>,
    /// Gauge radii for the tail check, comma separated.
    #[arg(long)]
    radii: Option<String>,
}

#[derive(Args, Debug)]
struct MassArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    partition: Option<String>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    function: Option<String>,
    /// Comma-separated chart coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    function: Option<String>,
    /// Number of evaluation points in [0, 1).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LebesgueArgs {
    #[arg(long)]
    function: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    point: Option<f64>,
    #[arg(long)]
    radii: Option<String>,
}

/// Flag values with config-file fallback.
struct Settings {
    config: Config,
}

impl Settings {
    fn get<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        self.config
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
            .transpose()
    }

    fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(cli, key)?
            .ok_or_else(|| anyhow!("missing --{key} (or `{key} = ...` in the config file)"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}` in `{s}`")))
        .collect()
}

fn resolve_kernel(s: &Settings, k: &KernelArgs) -> Result<(GroupChart, KernelFamily, Vec<KernelParam>)> {
    let group: GroupChart = s.require(k.group.clone(), "group")?.parse()?;
    let family = KernelFamily::from_token(&s.require(k.family.clone(), "family")?, &group)?;
    let n = s.get(k.n, "n")?;
    let theta = s.get(k.theta, "theta")?;
    let sweep = s.get(k.sweep.clone(), "sweep")?;
    let params = match (n, theta, sweep) {
        (Some(n), _, _) => vec![KernelParam::Order(n)],
        (_, Some(t), _) => vec![KernelParam::Scale(t)],
        (_, _, Some(sw)) => sw.parse::<SweepSpec>()?.params(&family)?,
        _ => bail!("give --sweep, --n or --theta"),
    };
    for p in &params {
        family.validate_param(*p)?;
    }
    Ok((group, family, params))
}

fn resolve_partition(s: &Settings, cli: Option<String>, group: &GroupChart) -> Result<LocalPartition> {
    let token = s.get(cli, "partition")?.unwrap_or_else(|| {
        if s.config.entries().any(|(k, _)| k.starts_with("cell.")) {
            "custom".into()
        } else {
            match group.kind() {
                GroupKind::AxB => "axb4".into(),
                GroupKind::Heisenberg => "heis8".into(),
                _ if group.dimension() == 1 => "halves".into(),
                _ => "orthants".into(),
            }
        }
    });
    Ok(LocalPartition::from_token(&token, group, Some(&s.config))?)
}

fn verify_kernel(s: &Settings, k: &KernelArgs) -> Result<ExitCode> {
    let (_, family, params) = resolve_kernel(s, k)?;
    let radii = parse_list(&s.get(k.radii.clone(), "radii")?.unwrap_or_else(|| "0.1".into()))?;
    let report = verify_approximate_identity(&family, &params, &radii, 1.0, &QuadratureSpec::default())?;
    let mut head = String::from("param,mass,l1_norm");
    for r in &radii {
        write!(head, ",tail_{r}")?;
    }
    println!("{head}");
    for row in &report.rows {
        let mut line = format!("{},{:.16e},{:.16e}", row.param.value(), row.mass, row.l1_norm);
        for (_, t) in &row.tails {
            write!(line, ",{t:.16e}")?;
        }
        println!("{line}");
    }
    if report.passed() {
        println!("# {} verdict=pass", family.token());
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &report.violations {
            println!("# violation: {v}");
        }
        println!("# {} verdict=fail", family.token());
        Ok(ExitCode::from(1))
    }
}

fn masses(s: &Settings, a: &MassArgs) -> Result<ExitCode> {
    let (group, family, params) = resolve_kernel(s, &a.kernel)?;
    let partition = resolve_partition(s, a.partition.clone(), &group)?;
    let mc = masses_converge(&partition, &family, &params)?;
    println!("param,{}", partition.labels().join(","));
    for (p, m) in &mc.sequence {
        let w: Vec<String> = m.weights.iter().map(|w| format!("{w:.16e}")).collect();
        println!("{},{}", p.value(), w.join(","));
    }
    println!("# max_step_change={:.3e} stable={}", mc.max_step_change, mc.stable);
    Ok(ExitCode::SUCCESS)
}

fn converge(s: &Settings, a: &ConvergeArgs) -> Result<ExitCode> {
    let (group, family, params) = resolve_kernel(s, &a.kernel)?;
    let partition = resolve_partition(s, a.partition.clone(), &group)?;
    let point = parse_list(&s.require(a.point.clone(), "point")?)?;
    let x = group.point(&point)?;
    let target = Target::from_token(&s.require(a.function.clone(), "function")?, &group, &partition, &x)?;
    let tol = s.get(a.tol, "tol")?.unwrap_or(JUMP_TOLERANCE);
    let report = run_convergence(&partition, &family, &target, &x, &params, tol, &QuadratureSpec::default())?;
    match s.get(a.out.clone(), "out")? {
        Some(path) => {
            emit_report(&report, &path)?;
            eprintln!(
                "verdict={} predicted={} final_error={} -> {}",
                report.verdict,
                report.predicted.map_or("none".into(), |v| v.to_string()),
                report.final_error().map_or("none".into(), |v| format!("{v:.3e}")),
                path.display()
            );
        }
        None => print!("{}", report_to_string(&report)?),
    }
    Ok(match report.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(1),
        Verdict::Refused => ExitCode::from(3),
    })
}

fn compare(s: &Settings, a: &CompareArgs) -> Result<ExitCode> {
    let n_max = s.get(a.n_max, "n-max")?.unwrap_or(32);
    let points = s.get(a.points, "points")?.unwrap_or(20);
    let group = GroupChart::torus(1);
    let partition = LocalPartition::standard(&group);
    let origin = GroupPoint::scalar(0.0);
    let f = Target::from_token(&s.require(a.function.clone(), "function")?, &group, &partition, &origin)?;
    let spec = QuadratureSpec::default();
    let coeffs = FourierCoefficients::compute(&f, n_max, &spec)?;
    let family = KernelFamily::from_token("fejer", &group)?;
    // golden-ratio points: deterministic and evenly spread
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let xs: Vec<f64> = (0..points).map(|k| (0.5 + k as f64 * golden).fract()).collect();
    let mut out = String::from("N,x,cesaro,convolve,abs_diff\n");
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        let k = family.at(KernelParam::Order(n as u64))?;
        for &x in &xs {
            let c = coeffs.cesaro_mean(n, &[x])?;
            let v = convolve(&k, &f, &GroupPoint::scalar(x), &spec)?.value;
            worst = worst.max((c - v).abs());
            writeln!(out, "{n},{x:.16e},{c:.16e},{v:.16e},{:.16e}", (c - v).abs())?;
        }
    }
    match s.get(a.out.clone(), "out")? {
        Some(path) => {
            std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("max |cesaro - convolve| = {worst:.3e} -> {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn lebesgue(s: &Settings, a: &LebesgueArgs) -> Result<ExitCode> {
    let group = GroupChart::euclidean(1);
    let partition = LocalPartition::standard(&group);
    let x = s.require(a.point, "point")?;
    let f = Target::from_token(&s.require(a.function.clone(), "function")?, &group, &partition, &GroupPoint::scalar(x))?;
    let radii = match s.get(a.radii.clone(), "radii")? {
        Some(r) => parse_list(&r)?,
        None => (1..=6).map(|k| 10f64.powi(-k)).collect(),
    };
    let rep = lebesgue_point_check(&f, x, &radii, &QuadratureSpec::default())?;
    println!("radius,average_deviation");
    for (r, v) in &rep.rows {
        println!("{r:e},{v:.16e}");
    }
    println!("# limit={:.16e} lebesgue_point={}", rep.limit, rep.is_lebesgue_point);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::default(),
    };
    let s = Settings { config };
    match &cli.command {
        Command::VerifyKernel(k) => verify_kernel(&s, k),
        Command::Masses(a) => masses(&s, a),
        Command::Converge(a) => converge(&s, a),
        Command::Compare(a) => compare(&s, a),
        Command::Lebesgue(a) => lebesgue(&s, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
