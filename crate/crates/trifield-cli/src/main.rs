//! Batch front door for the laboratory: seeded experiment runners for
//! sampling, volume, facet weights, spectra, covering statistics, the
//! concentration experiment and the diameter certificate.
//!
//! Every run resolves its settings from defaults, an optional `key=value`
//! config file and command-line overrides (in that order of precedence),
//! writes its primary artifact to `--out` when given, and accompanies it
//! with a `<out>.manifest.json` carrying the full configuration and its
//! content hash. Exit codes: 0 success, 2 invalid configuration, 3 a run
//! whose preconditions make the requested report inapplicable.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use trifield::covering::{
    self, census_log2_bound, choose_scales, cover_id, surface_excess_report,
    surface_mean_report, surrogate_scale, CoverId, OffsetStrategy,
};
use trifield::quadratic::{diameter_floor, diameter_witness};
use trifield::sampler::{estimate_p, sample_uniform, ChainConfig};
use trifield::spectral::{spectrum_rows, SpectralWeights};
use trifield::volume::{
    default_fd_step, estimate_volume, exact_volume_n2, facet_weights_fd, normalized_f,
    FacetWeights, VolumeEstimate,
};
use trifield::{ConstraintSystem, Slack64, Variant};

#[derive(Parser)]
#[command(name = "trifield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw uniform samples from the slack polytope and dump them as CSV.
    Sample(CommonArgs),
    /// Estimate (or at n = 2 exactly compute) the polytope volume.
    Volume(CommonArgs),
    /// Facet weights by central finite differences, with the volume row.
    Weights(CommonArgs),
    /// Dump the operator spectrum for given weights.
    Spectrum(CommonArgs),
    /// Covering-polytope report: scales, surrogate slope, surface
    /// statistics and the identifier census.
    Cover(CommonArgs),
    /// Tail probability of the sup norm across a list of sides.
    Concentration(CommonArgs),
    /// Diameter witness: certificate value, quoted floor, feasibility.
    Diameter(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// key=value config file applied before command-line overrides
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// comma-separated list of sides (concentration)
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// primary output path; a manifest is written alongside
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long)]
    w2: Option<f64>,
    #[arg(long)]
    target_rel_err: Option<f64>,
    #[arg(long)]
    fd_step: Option<f64>,
    /// aimed-for measured excess of the block-scale surrogate slope
    #[arg(long)]
    target_eps2: Option<f64>,
    /// offset strategy for cover identifiers: fixed-zero | mc-min
    #[arg(long)]
    offset_strategy: Option<String>,
    /// use the exact vertex-enumeration oracle (n = 2 only)
    #[arg(long)]
    exact: bool,
}

const EXIT_INVALID: u8 = 2;
const EXIT_INAPPLICABLE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Sample(a) => ("sample", a),
        Command::Volume(a) => ("volume", a),
        Command::Weights(a) => ("weights", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Cover(a) => ("cover", a),
        Command::Concentration(a) => ("concentration", a),
        Command::Diameter(a) => ("diameter", a),
    };
    let cfg = match resolve(name, args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let result = match name {
        "sample" => run_sample(&cfg, args),
        "volume" => run_volume(&cfg, args),
        "weights" => run_weights(&cfg, args),
        "spectrum" => run_spectrum(&cfg, args),
        "cover" => run_cover(&cfg, args),
        "concentration" => run_concentration(&cfg, args),
        "diameter" => run_diameter(&cfg, args),
        _ => unreachable!(),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn resolve(command: &str, args: &CommonArgs) -> Result<RunConfig, String> {
    let mut cfg = RunConfig {
        command: command.to_string(),
        ..RunConfig::default()
    };
    if let Some(path) = &args.config {
        cfg.load_file(path).map_err(|e| e.to_string())?;
    }
    macro_rules! take {
        ($field:ident) => {
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        };
    }
    take!(n);
    take!(s0);
    take!(s1);
    take!(s2);
    take!(seed);
    take!(chains);
    take!(samples);
    take!(eps0);
    take!(eps1);
    take!(w0);
    take!(w1);
    take!(w2);
    take!(target_rel_err);
    take!(target_eps2);
    if let Some(v) = args.burn_in {
        cfg.burn_in = Some(v);
    }
    if let Some(v) = args.thin {
        cfg.thin = Some(v);
    }
    if let Some(v) = args.fd_step {
        cfg.fd_step = Some(v);
    }
    if let Some(v) = &args.n_list {
        cfg.n_list = v
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("bad n_list entry {p:?}")))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = &args.offset_strategy {
        cfg.offset_strategy = v.clone();
    }
    if args.exact {
        cfg.exact = true;
    }
    if !matches!(cfg.offset_strategy.as_str(), "fixed-zero" | "mc-min") {
        return Err(format!(
            "offset_strategy must be fixed-zero or mc-min, got {:?}",
            cfg.offset_strategy
        ));
    }
    Ok(cfg)
}

fn slack(cfg: &RunConfig) -> Result<Slack64, String> {
    Slack64::new(cfg.s0, cfg.s1, cfg.s2).map_err(|e| e.to_string())
}

fn chain_config(cfg: &RunConfig, n: usize) -> ChainConfig {
    let mut cc = ChainConfig::default_for(n, cfg.seed).with_chains(cfg.chains);
    if let Some(b) = cfg.burn_in {
        cc.burn_in = b;
    }
    if let Some(t) = cfg.thin {
        cc.thin = t;
    }
    cc
}

fn run_sample(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let sys = ConstraintSystem::build(cfg.n, slack(cfg)?, Variant::MeanZero)
        .map_err(|e| e.to_string())?;
    let samples = sample_uniform(&sys, cfg.samples, &chain_config(cfg, cfg.n))
        .map_err(|e| e.to_string())?;
    let mut csv = String::new();
    for x in &samples {
        output::push_row(&mut csv, x.as_slice());
    }
    output::emit(args.out.as_deref(), cfg, &csv)?;
    eprintln!("wrote {} samples at n = {}", samples.len(), cfg.n);
    Ok(ExitCode::SUCCESS)
}

fn volume_row(
    cfg: &RunConfig,
    est: &VolumeEstimate,
    weights: Option<&FacetWeights>,
) -> String {
    let f = normalized_f(est, cfg.n);
    let w = weights
        .map(|w| {
            format!(
                "{:.16e},{:.16e},{:.16e}",
                w.w0, w.w1, w.w2
            )
        })
        .unwrap_or_else(|| ",,".into());
    format!(
        "n,s0,s1,s2,log_volume,stderr_log,f_n,w0,w1,w2\n{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
        cfg.n, cfg.s0, cfg.s1, cfg.s2, est.log_volume, est.stderr_log, f, w
    )
}

fn run_volume(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let s = slack(cfg)?;
    let est = if cfg.exact {
        if cfg.n != 2 {
            return Err("--exact requires n = 2".into());
        }
        exact_volume_n2(&s)
    } else {
        estimate_volume(cfg.n, &s, cfg.target_rel_err, &chain_config(cfg, cfg.n))
            .map_err(|e| e.to_string())?
    };
    let csv = volume_row(cfg, &est, None);
    output::emit(args.out.as_deref(), cfg, &csv)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn run_weights(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let s = slack(cfg)?;
    let cc = chain_config(cfg, cfg.n);
    let delta = cfg.fd_step.unwrap_or_else(|| default_fd_step(&s));
    let weights = facet_weights_fd(cfg.n, &s, delta, &cc).map_err(|e| e.to_string())?;
    let est = if cfg.n == 2 {
        exact_volume_n2(&s)
    } else {
        estimate_volume(cfg.n, &s, cfg.target_rel_err, &cc).map_err(|e| e.to_string())?
    };
    let csv = volume_row(cfg, &est, Some(&weights));
    output::emit(args.out.as_deref(), cfg, &csv)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn run_spectrum(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let w = SpectralWeights::new(cfg.w0, cfg.w1, cfg.w2).map_err(|e| e.to_string())?;
    if cfg.n < 2 {
        return Err("spectrum requires n >= 2".into());
    }
    let mut csv = String::from("i_hat,j_hat,lambda\n");
    for (i, j, l) in spectrum_rows(&w, cfg.n) {
        csv.push_str(&format!("{i},{j},{l:.16e}\n"));
    }
    output::emit(args.out.as_deref(), cfg, &csv)?;
    if args.out.is_none() {
        print!("{csv}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_cover(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let s_raw = slack(cfg)?;
    let scales = choose_scales(cfg.n, cfg.eps1).map_err(|e| e.to_string())?;
    let cc = chain_config(cfg, cfg.n);
    let surrogate = match surrogate_scale(scales.n1, &s_raw, cfg.target_eps2, 0.05, &cc) {
        Ok(s) => s,
        Err(trifield::Error::Inapplicable(msg)) => {
            eprintln!("cover: inapplicable — {msg}");
            return Ok(ExitCode::from(EXIT_INAPPLICABLE));
        }
        Err(e) => return Err(e.to_string()),
    };

    let sys = ConstraintSystem::build(cfg.n, surrogate.slack, Variant::MeanZero)
        .map_err(|e| e.to_string())?;
    let samples =
        sample_uniform(&sys, cfg.samples, &cc).map_err(|e| e.to_string())?;

    let strategy = if cfg.offset_strategy == "mc-min" {
        OffsetStrategy::McMin {
            budget: 32,
            seed: cfg.seed,
        }
    } else {
        OffsetStrategy::FixedZero
    };

    let mut census: std::collections::HashMap<CoverId, usize> = std::collections::HashMap::new();
    let mut mean_reports = Vec::new();
    let mut excess_reports = Vec::new();
    for x in &samples {
        let id = cover_id(x, &scales, &surrogate.slack, strategy).map_err(|e| e.to_string())?;
        *census.entry(id).or_insert(0) += 1;
        mean_reports.push(surface_mean_report(
            x,
            &scales,
            &surrogate.slack,
            &surrogate.weights,
        ));
        excess_reports.push(surface_excess_report(
            x,
            &scales,
            &surrogate.slack,
            &surrogate.weights,
        ));
    }
    let hashed_census = output::hash_census(&census);
    let log2_count = (census.len() as f64).log2();
    let log2_bound = census_log2_bound(cfg.n, cfg.eps1);
    let applicable = covering_applicable(&mean_reports);
    let all_hold = mean_reports.iter().all(|r| r.holds)
        && excess_reports.iter().all(|r| r.holds);

    let report = output::cover_report_json(
        cfg,
        &scales,
        &surrogate,
        &mean_reports,
        &excess_reports,
        &hashed_census,
        log2_count,
        log2_bound,
    );
    output::emit(args.out.as_deref(), cfg, &report)?;
    eprintln!(
        "cover: eps2 = {:.4}, applicable = {applicable}, bounds hold = {all_hold}, census = {} ids",
        surrogate.eps2,
        census.len()
    );
    if !applicable {
        return Ok(ExitCode::from(EXIT_INAPPLICABLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn covering_applicable(reports: &[covering::SurfaceMeanReport]) -> bool {
    reports.iter().all(|r| r.applicable)
}

fn run_concentration(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let s = slack(cfg)?;
    let sides = if cfg.n_list.is_empty() {
        vec![cfg.n]
    } else {
        cfg.n_list.clone()
    };
    if cfg.samples == 0 {
        return Err("samples must be >= 1".into());
    }
    let mut csv = String::from("n,eps0,p_hat,stderr\n");
    for &n in &sides {
        let sys =
            ConstraintSystem::build(n, s, Variant::MeanZero).map_err(|e| e.to_string())?;
        let samples = sample_uniform(&sys, cfg.samples, &chain_config(cfg, n))
            .map_err(|e| e.to_string())?;
        let est = estimate_p(&samples, cfg.eps0).map_err(|e| e.to_string())?;
        csv.push_str(&format!(
            "{n},{:.16e},{:.16e},{:.16e}\n",
            cfg.eps0, est.fraction, est.stderr
        ));
    }
    output::emit(args.out.as_deref(), cfg, &csv)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn run_diameter(cfg: &RunConfig, args: &CommonArgs) -> Result<ExitCode, String> {
    let s = slack(cfg)?;
    let (witness, linf) = diameter_witness(cfg.n, &s).map_err(|e| e.to_string())?;
    let sys = ConstraintSystem::build(cfg.n, s, Variant::MeanZero).map_err(|e| e.to_string())?;
    let feasible = sys
        .membership(&witness)
        .map_err(|e| e.to_string())?
        .feasible;
    let floor = diameter_floor(cfg.n, &s);
    let csv = format!(
        "n,linf,lower_bound,feasible\n{},{:.16e},{:.16e},{}\n",
        cfg.n, linf, floor, feasible
    );
    output::emit(args.out.as_deref(), cfg, &csv)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

