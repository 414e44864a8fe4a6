use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latent_survival::exec::ExecMode;
use latent_survival::io::{
    export_plot, file_label, read_trace, write_acceptance, write_curve, write_dataset_csv, write_km, write_trace,
    RunConfig, CONFIG_HELP,
};
use latent_survival::mcmc::{run_chains, Parametrization};
use latent_survival::model::{simulate_dataset, SimulationDesign};
use latent_survival::summary::{acf_ess, bayes_factor_prior_mc, curve_estimates, CurveEstimate};
use latent_survival::survival::{kaplan_meier, KaplanMeier, SurvivalDataset};
use latent_survival::{Error, Result};

#[derive(Parser)]
#[command(name = "latent-survival", version, about = "Survival analysis with latent diffusion hazards", after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed; overrides sampler.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate censored survival data from the configured model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Subjects per diffusion; overrides simulate.n.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the sampler and write traces and posterior curves.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; overrides data.path.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        /// Block length of the path updates.
        #[arg(long)]
        block: Option<f64>,
        /// centered, pnc or ncp.
        #[arg(long)]
        parametrization: Option<Parametrization>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Kaplan–Meier curves per group.
    Km {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Bayes factor of the first configured model against the second.
    Bf {
        #[command(flatten)]
        common: Common,
        /// Configuration of the second model.
        #[arg(long)]
        against: PathBuf,
        /// Prior draws per model; overrides bayes_factor.samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Autocorrelation, effective sample size and acceptance summaries of a trace.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Trace CSV written by `fit`.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
    },
}

/// Files written by the current command, removed again on failure.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn create(&mut self, dir: &Path, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
        let p = self.path(dir, name);
        Ok(std::io::BufWriter::new(std::fs::File::create(p)?))
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn load_config(common: &Common) -> Result<Option<RunConfig>> {
    common.config.as_deref().map(RunConfig::load).transpose()
}

fn require_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = load_config(common)?.ok_or_else(|| Error::Config("--config is required".into()))?;
    if let Some(s) = common.seed {
        cfg.sampler.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn km_by_group(data: &SurvivalDataset) -> Result<Vec<(String, KaplanMeier)>> {
    let mut out = Vec::new();
    for label in data.group_labels() {
        let sub = data.group(&label).expect("label from data");
        let name = if label.is_empty() { "all".to_string() } else { label };
        out.push((name, kaplan_meier(&sub)));
    }
    Ok(out)
}

fn simulate(common: &Common, n: Option<usize>, outs: &mut Outputs) -> Result<()> {
    let cfg = require_config(common)?;
    let model = cfg.build_model(None)?;
    let theta = cfg.simulate.theta.clone().unwrap_or_else(|| model.prior.mean());
    let design = SimulationDesign {
        n: n.unwrap_or(cfg.simulate.n),
        cutoff: cfg.simulate.cutoff,
        dt: cfg.simulate.dt,
        groups: cfg.simulate.groups.clone(),
    };
    let sim = simulate_dataset(&model, &theta, model.sigma.initial(), &design, cfg.sampler.seed)?;
    let dir = out_dir(common, Some(&cfg))?;
    write_dataset_csv(&outs.path(&dir, "data.csv"), &sim.data, cfg.sampler.seed)?;
    println!("wrote {} observations to {}", sim.data.len(), dir.join("data.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fit(
    common: &Common,
    data: Option<PathBuf>,
    iters: Option<usize>,
    burnin: Option<usize>,
    dt: Option<f64>,
    block: Option<f64>,
    parametrization: Option<Parametrization>,
    horizon: Option<f64>,
    outs: &mut Outputs,
) -> Result<()> {
    let mut cfg = require_config(common)?;
    let s = &mut cfg.sampler;
    if let Some(v) = iters {
        s.iterations = v;
    }
    if let Some(v) = burnin {
        s.burn_in = v;
    }
    if let Some(v) = dt {
        s.dt = v;
    }
    if let Some(v) = block {
        s.block_length = v;
    }
    if let Some(v) = parametrization {
        s.parametrization = v;
    }
    if horizon.is_some() {
        s.horizon = horizon;
    }
    if let Some(p) = data {
        cfg.data.path = Some(p);
        cfg.data.embedded = None;
    }
    cfg.validate()?;
    let data = cfg.load_data()?.ok_or_else(|| Error::Config("no dataset: set data.path or pass --data".into()))?;
    let model = cfg.build_model(Some(&data))?;
    let traces = run_chains(&model, &data, &cfg.sampler, cfg.output.chains, ExecMode::Parallel)?;
    let dir = out_dir(common, Some(&cfg))?;
    let seed = cfg.sampler.seed;
    for t in &traces {
        let suffix = if traces.len() > 1 { format!("_chain{}", t.chain) } else { String::new() };
        write_trace(outs.create(&dir, &format!("trace{suffix}.csv"))?, t)?;
        write_acceptance(outs.create(&dir, &format!("acceptance{suffix}.csv"))?, &t.acceptance, seed)?;
    }
    if !cfg.sampler.record_curves || traces[0].is_empty() {
        return Ok(());
    }
    let mut survival: Vec<(String, CurveEstimate)> = Vec::new();
    let mut hazard: Vec<(String, CurveEstimate)> = Vec::new();
    for (slot, curve) in traces[0].curves.iter().enumerate() {
        let mut merged = curve.clone();
        for t in &traces[1..] {
            let c = &t.curves[slot];
            merged.survival.extend(c.survival.iter().cloned());
            merged.hazard.extend(c.hazard.iter().cloned());
            merged.density.extend(c.density.iter().cloned());
        }
        let [s, h, f] = curve_estimates(&merged, cfg.output.band_level)?;
        let label = file_label(&curve.label);
        for (kind, est) in [("survival", &s), ("hazard", &h), ("density", &f)] {
            write_curve(outs.create(&dir, &format!("{label}_{kind}.csv"))?, est, seed)?;
        }
        survival.push((curve.label.clone(), s));
        hazard.push((curve.label.clone(), h));
    }
    if cfg.output.plot {
        let km = if model.grouping == latent_survival::model::Grouping::ByGroup {
            km_by_group(&data)?
        } else {
            vec![("all".to_string(), kaplan_meier(&data))]
        };
        write_km(outs.create(&dir, "km.csv")?, &km, seed)?;
        export_plot(&outs.path(&dir, "survival.svg"), "survival", &survival, &km)?;
        export_plot(&outs.path(&dir, "hazard.svg"), "hazard", &hazard, &[])?;
    }
    println!("{} chain(s), {} retained draws each, written to {}", traces.len(), traces[0].len(), dir.display());
    Ok(())
}

fn km(common: &Common, data: Option<PathBuf>, outs: &mut Outputs) -> Result<()> {
    let cfg = load_config(common)?;
    let data = match (data, &cfg) {
        (Some(p), _) => latent_survival::io::load_dataset_csv(&p)?,
        (None, Some(c)) => c.load_data()?.ok_or_else(|| Error::Config("configuration names no dataset".into()))?,
        (None, None) => return Err(Error::Config("pass --data or --config".into())),
    };
    let seed = common.seed.or(cfg.as_ref().map(|c| c.sampler.seed)).unwrap_or(0);
    let dir = out_dir(common, cfg.as_ref())?;
    write_km(outs.create(&dir, "km.csv")?, &km_by_group(&data)?, seed)?;
    Ok(())
}

fn bf(common: &Common, against: &Path, samples: Option<usize>, outs: &mut Outputs) -> Result<()> {
    let first = require_config(common)?;
    let second = RunConfig::load(against)?;
    let data = first.load_data()?.ok_or_else(|| Error::Config("configuration names no dataset".into()))?;
    let m1 = first.build_model(Some(&data))?;
    let m2 = second.build_model(Some(&data))?;
    let mut settings = first.prior_mc_settings();
    if let Some(n) = samples {
        settings.n_samples = n;
    }
    let r = bayes_factor_prior_mc(&m1, &m2, &data, &settings, ExecMode::Parallel)?;
    let dir = out_dir(common, Some(&first))?;
    let mut w = outs.create(&dir, "bf.csv")?;
    use std::io::Write;
    writeln!(w, "# seed={}", settings.seed)?;
    writeln!(w, "bf,log_bf,se_log_bf,log_ml_first,se_first,log_ml_second,se_second,samples")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        r.bf, r.log_bf, r.se_log_bf, r.first.log_ml, r.first.se, r.second.log_ml, r.second.se, settings.n_samples
    )?;
    w.flush()?;
    println!("BF = {:e} (log BF {:.4} +- {:.4})", r.bf, r.log_bf, r.se_log_bf);
    Ok(())
}

fn summarize(common: &Common, trace: &Path, max_lag: usize, outs: &mut Outputs) -> Result<()> {
    let text = std::fs::read_to_string(trace)?;
    let table = read_trace(&text)?;
    let n = table.iterations.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("trace has {n} draws")));
    }
    let lag = max_lag.min(n - 1);
    let cfg = load_config(common)?;
    let dir = out_dir(common, cfg.as_ref())?;
    let seed = common.seed.or(table.seed).unwrap_or(0);
    let diags = table
        .columns
        .iter()
        .map(|c| acf_ess(c, lag))
        .collect::<Result<Vec<_>>>()?;
    use std::io::Write;
    let mut w = outs.create(&dir, "diagnostics.csv")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "parameter,mean,sd,ess,iat,constant")?;
    println!("{:<12} {:>12} {:>12} {:>10} {:>8}", "parameter", "mean", "sd", "ess", "iat");
    for ((name, col), d) in table.names.iter().zip(&table.columns).zip(&diags) {
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        writeln!(w, "{name},{mean},{sd},{},{},{}", d.ess, d.iat, d.constant)?;
        println!("{name:<12} {mean:>12.5} {sd:>12.5} {:>10.1} {:>8.2}", d.ess, d.iat);
    }
    w.flush()?;
    let mut w = outs.create(&dir, "acf.csv")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "lag,{}", table.names.join(","))?;
    for k in 0..=lag {
        let row: Vec<String> = diags.iter().map(|d| d.acf.get(k).map(f64::to_string).unwrap_or_default()).collect();
        writeln!(w, "{k},{}", row.join(","))?;
    }
    w.flush()?;
    let acceptance = trace.with_file_name(
        trace
            .file_name()
            .and_then(|f| f.to_str())
            .map(|f| f.replacen("trace", "acceptance", 1))
            .unwrap_or_default(),
    );
    if acceptance != trace && acceptance.exists() {
        println!();
        for line in std::fs::read_to_string(&acceptance)?.lines().filter(|l| !l.starts_with('#')) {
            println!("{}", line.replace(',', "\t"));
        }
    }
    Ok(())
}

fn run(cli: Cli, outs: &mut Outputs) -> Result<()> {
    match cli.command {
        Command::Simulate { common, n } => simulate(&common, n, outs),
        Command::Fit {
            common,
            data,
            iters,
            burnin,
            dt,
            block,
            parametrization,
            horizon,
        } => fit(&common, data, iters, burnin, dt, block, parametrization, horizon, outs),
        Command::Km { common, data } => km(&common, data, outs),
        Command::Bf { common, against, samples } => bf(&common, &against, samples, outs),
        Command::Summarize { common, trace, max_lag } => summarize(&common, &trace, max_lag, outs),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Dataset { .. } | Error::Csv(_) => "data",
        Error::Io(_) => "io",
        Error::InvalidSampler(_) => "sampler",
        Error::EstimateFailed(_) => "estimate",
        _ => "invalid",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut outs = Outputs::default();
    match run(cli, &mut outs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outs.discard();
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", error_kind(&e));
            ExitCode::FAILURE
        }
    }
}
