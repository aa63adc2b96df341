use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcic::lattice::{dithered_samples, ks_critical_1pct, ks_uniform, sum_decode_check, SumDecodeStats};
use fcic::montecarlo::McError;
use fcic::rates::{det_converse, gap_point, gap_report, gdof_fb, gdof_nofb, qsym_converse};
use fcic::schemes::{construct, construct_auto, converse_for, qsym_solve, trial_messages, verify_scheme, RateJson};
use fcic::{
    make_lattice, run_feedback_session, simulate_strong_two_block, AlignmentSolution, DetParams, DetRegime,
    GaussParams64, MCConfig, Prime, Rational, SchemeError, SignMatrix,
};
use serde::Serialize;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_REGIME: u8 = 4;

#[derive(Parser)]
#[command(name = "fcic", version, about = "Feedback interference-channel calculations and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user GDoF with and without feedback, as CSV.
    Gdof {
        #[arg(long, default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Exact symmetric-rate converse of the deterministic channel.
    DetConverse {
        #[command(flatten)]
        det: DetArgs,
        /// Sign matrix file: K rows of K entries in {-1, 0, 1}.
        #[arg(long)]
        signs: Option<PathBuf>,
    },
    /// Builds the two-block scheme and replays it on random messages.
    DetVerify {
        #[command(flatten)]
        det: DetArgs,
        /// Field size; the smallest working candidate prime when omitted.
        #[arg(long)]
        p: Option<u32>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        signs: Option<PathBuf>,
        /// Writes the first failing transcript, or trial 0 if none failed.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Alignment coefficients for a sign matrix.
    Qsym {
        #[arg(long)]
        signs: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        p: u32,
    },
    /// Gaussian rate expressions at one point, as JSON.
    GaussRates {
        #[command(flatten)]
        gauss: GaussArgs,
    },
    /// Gap sweep over an SNR x INR x K grid, as CSV.
    GaussGap {
        #[arg(long)]
        snr_grid: String,
        #[arg(long)]
        inr_grid: String,
        #[arg(long, default_value = "2,3,5")]
        k_list: String,
    },
    /// Monte Carlo of the strong-regime zero-forcing scheme.
    McStrong {
        #[command(flatten)]
        gauss: GaussArgs,
        #[arg(long, default_value_t = 10_000)]
        block: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Nested lattice codebook, dither uniformity and modulo-sum decoding.
    LatticeDemo {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long = "m", default_value_t = 8)]
        refinement: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct DetArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
}

#[derive(Args)]
struct GaussArgs {
    #[arg(long)]
    snr: f64,
    #[arg(long)]
    inr: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

/// Exit code plus a message for stderr.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gdof { alpha_min, alpha_max, steps, k } => cmd_gdof(alpha_min, alpha_max, steps, k),
        Command::DetConverse { det, signs } => cmd_det_converse(&det, signs.as_deref()),
        Command::DetVerify { det, p, trials, seed, signs, dump } => {
            cmd_det_verify(&det, p, trials, seed, signs.as_deref(), dump.as_deref())
        }
        Command::Qsym { signs, n, m, p } => cmd_qsym(&signs, n, m, p),
        Command::GaussRates { gauss } => cmd_gauss_rates(&gauss),
        Command::GaussGap { snr_grid, inr_grid, k_list } => cmd_gauss_gap(&snr_grid, &inr_grid, &k_list),
        Command::McStrong { gauss, block, trials, seed } => cmd_mc_strong(&gauss, block, trials, seed),
        Command::LatticeDemo { c, refinement, k, sigma, trials, seed } => {
            cmd_lattice_demo(c, refinement, k, sigma, trials, seed)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `%.12g`-style formatting with a `NaN` literal.
fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
}

fn prime(p: u32) -> Result<Prime, Failure> {
    Prime::new(p).map_err(|e| Failure::usage(e.to_string()))
}

fn read_signs(path: &Path) -> Result<SignMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    SignMatrix::parse(&text).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_gdof(alpha_min: f64, alpha_max: f64, steps: usize, k: usize) -> CmdResult {
    if !(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max.is_finite()) {
        return Err(Failure::usage("need 0 <= alpha-min < alpha-max"));
    }
    if steps < 2 {
        return Err(Failure::usage("steps must be at least 2"));
    }
    if k < 2 {
        return Err(Failure::usage("K must be at least 2"));
    }
    let mut out = String::from("alpha,d_fb,d_nofb\n");
    for i in 0..steps {
        let alpha = alpha_min + (alpha_max - alpha_min) * i as f64 / (steps - 1) as f64;
        let fb = gdof_fb(alpha).unwrap_or(f64::NAN);
        out.push_str(&format!("{},{},{}\n", fmt_g(alpha), fmt_g(fb), fmt_g(gdof_nofb(alpha, k))));
    }
    print!("{out}");
    Ok(0)
}

#[derive(Serialize)]
struct ConverseOut {
    k: usize,
    n: usize,
    m: usize,
    regime: DetRegime,
    rate: RateJson,
    value: f64,
}

fn cmd_det_converse(det: &DetArgs, signs: Option<&Path>) -> CmdResult {
    if det.k < 2 || det.n + det.m == 0 {
        return Err(Failure::usage("need K >= 2 and n + m >= 1"));
    }
    let rate: Rational = match signs {
        None => det_converse(det.n, det.m, det.k),
        Some(path) => {
            let s = read_signs(path)?;
            if s.k() != det.k {
                return Err(Failure::usage(format!("sign matrix is for K={}, not {}", s.k(), det.k)));
            }
            qsym_converse(det.n, det.m, &s).map_err(|e| Failure::usage(e.to_string()))?
        }
    };
    print_json(&ConverseOut {
        k: det.k,
        n: det.n,
        m: det.m,
        regime: DetRegime::of(det.n, det.m),
        rate: rate.into(),
        value: *rate.numer() as f64 / *rate.denom() as f64,
    });
    Ok(0)
}

#[derive(Serialize)]
struct SingularOut {
    error: &'static str,
    user: usize,
    rank: usize,
    dim: usize,
    matrix: Vec<Vec<u32>>,
}

fn scheme_failure(err: SchemeError) -> Failure {
    let err = match err {
        SchemeError::NoPrime { last } => *last,
        e => e,
    };
    match &err {
        SchemeError::SingularSystem { user, rank, dim, matrix } => {
            let rows = matrix.to_rows().into_iter().map(|r| r.into_iter().map(|e| e.value()).collect()).collect();
            print_json(&SingularOut { error: "singular_system", user: *user, rank: *rank, dim: *dim, matrix: rows });
            eprintln!("{matrix}");
            Failure { code: EXIT_SINGULAR, message: err.to_string() }
        }
        SchemeError::NoSolution { .. } | SchemeError::SingularLambdaPlusI | SchemeError::InvalidSolution => {
            Failure { code: EXIT_SINGULAR, message: err.to_string() }
        }
        SchemeError::RegimeMismatch { .. } => Failure { code: EXIT_REGIME, message: err.to_string() },
        _ => Failure::usage(err.to_string()),
    }
}

fn cmd_det_verify(
    det: &DetArgs,
    p: Option<u32>,
    trials: usize,
    seed: u64,
    signs: Option<&Path>,
    dump: Option<&Path>,
) -> CmdResult {
    if trials == 0 {
        return Err(Failure::usage("trials must be positive"));
    }
    let signs = signs.map(read_signs).transpose()?;
    let scheme = match p {
        Some(p) => {
            let params =
                DetParams::new(det.k, det.n, det.m, prime(p)?, signs).map_err(|e| Failure::usage(e.to_string()))?;
            construct(&params)
        }
        None => {
            if det.k < 2 || det.n + det.m == 0 {
                return Err(Failure::usage("need K >= 2 and n + m >= 1"));
            }
            construct_auto(det.k, det.n, det.m, signs)
        }
    }
    .map_err(scheme_failure)?;
    let params = scheme.params.clone();
    let report = verify_scheme(&params, &scheme, trials, seed)
        .map_err(|e| Failure { code: EXIT_FAILED, message: e.to_string() })?;
    if let Some(path) = dump {
        let transcript = match &report.first_failure {
            Some(t) => t.clone(),
            None => {
                let msgs = trial_messages(&params, scheme.msg_symbols, seed, 0);
                run_feedback_session(&params, &scheme, &msgs, scheme.blocks)
                    .map_err(|e| Failure { code: EXIT_FAILED, message: e.to_string() })?
            }
        };
        let text = serde_json::to_string_pretty(&transcript).expect("serializable transcript");
        fs::write(path, text + "\n")
            .map_err(|e| Failure { code: EXIT_FAILED, message: format!("{}: {e}", path.display()) })?;
    }
    eprintln!(
        "p={} blocks={} successes={}/{} declared={} converse={}",
        params.p.value(),
        scheme.blocks,
        report.successes,
        report.trials,
        scheme.declared_rate,
        converse_for(&params).map_or("unknown".to_string(), |r| r.to_string()),
    );
    print_json(&report);
    Ok(if report.all_passed() { 0 } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct QsymOut {
    regime: DetRegime,
    p: u32,
    solution: AlignmentSolution,
    converse: Option<RateJson>,
}

fn cmd_qsym(signs: &Path, n: usize, m: usize, p: u32) -> CmdResult {
    let s = read_signs(signs)?;
    let p = prime(p)?;
    let regime = DetRegime::of(n, m);
    let solution = qsym_solve(&s, regime, p).map_err(scheme_failure)?;
    let converse = qsym_converse(n, m, &s).ok().map(RateJson::from);
    print_json(&QsymOut { regime, p: p.value(), solution, converse });
    Ok(0)
}

fn gauss(args: &GaussArgs) -> Result<GaussParams64, Failure> {
    GaussParams64::new(args.snr, args.inr, args.k).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_gauss_rates(args: &GaussArgs) -> CmdResult {
    let point = gap_point(&gauss(args)?);
    print_json(&point);
    Ok(0)
}

/// `logspace:lo:hi:n` or a comma-separated list of positive reals.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::usage(format!("bad grid {text:?}: {why}"));
    let values = if let Some(rest) = text.strip_prefix("logspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else { return Err(bad("expected logspace:lo:hi:n")) };
        let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("n is not a count"))?;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(bad("need 0 < lo <= hi and n >= 1"));
        }
        if n == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(bad("values must be positive"));
    }
    Ok(values)
}

fn cmd_gauss_gap(snr_grid: &str, inr_grid: &str, k_list: &str) -> CmdResult {
    let snrs = parse_grid(snr_grid)?;
    let inrs = parse_grid(inr_grid)?;
    let ks = k_list
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if k >= 2 => Ok(k),
            _ => Err(Failure::usage(format!("bad K {t:?}: need integers >= 2"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut grid = Vec::with_capacity(snrs.len() * inrs.len() * ks.len());
    for &snr in &snrs {
        for &inr in &inrs {
            for &k in &ks {
                grid.push(GaussParams64::new(snr, inr, k).map_err(|e| Failure::usage(e.to_string()))?);
            }
        }
    }
    let report = gap_report(&grid);
    let mut out = String::from("snr,inr,k,regime,achievable,c_tilde,upper,gap_ok\n");
    let mut violations = 0;
    for r in &report {
        if !r.gap_ok {
            violations += 1;
            eprintln!(
                "violation at snr={} inr={} k={}: {}",
                fmt_g(r.params.snr),
                fmt_g(r.params.inr),
                r.params.k,
                r.violations.join(",")
            );
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_g(r.params.snr),
            fmt_g(r.params.inr),
            r.params.k,
            r.regime,
            fmt_g(r.achievable),
            fmt_g(r.c_tilde),
            fmt_g(r.upper),
            r.gap_ok
        ));
    }
    print!("{out}");
    eprintln!("violations={violations}");
    Ok(if violations == 0 { 0 } else { EXIT_FAILED })
}

fn cmd_mc_strong(args: &GaussArgs, block: usize, trials: usize, seed: u64) -> CmdResult {
    let cfg = MCConfig { params: gauss(args)?, block_len: block, trials, seed };
    let stats = simulate_strong_two_block(&cfg).map_err(|e| match e {
        McError::RegimeMismatch { .. } => Failure { code: EXIT_REGIME, message: e.to_string() },
        McError::EmptyRun => Failure::usage(e.to_string()),
    })?;
    print_json(&stats);
    if !stats.gates_pass() {
        eprintln!("gates: noise={} signal={} tx_power={}", stats.noise_ok, stats.signal_ok, stats.tx_power_ok);
        return Ok(EXIT_FAILED);
    }
    Ok(0)
}

#[derive(Serialize)]
struct KsOut {
    samples: usize,
    statistic: f64,
    critical_1pct: f64,
    uniform: bool,
}

#[derive(Serialize)]
struct LatticeOut {
    coarse: f64,
    refinement: usize,
    codebook: Vec<f64>,
    second_moment: f64,
    dither_ks: KsOut,
    sum_decode: SumDecodeStats,
}

fn cmd_lattice_demo(c: f64, refinement: usize, k: usize, sigma: f64, trials: usize, seed: u64) -> CmdResult {
    let lat = make_lattice(c, refinement).map_err(|e| Failure::usage(e.to_string()))?;
    if trials == 0 {
        return Err(Failure::usage("trials must be positive"));
    }
    let samples = dithered_samples(&lat, trials, seed);
    let statistic = ks_uniform(&samples, -c / 2.0, c / 2.0);
    let critical = ks_critical_1pct(trials);
    let sum_decode = sum_decode_check(k, &lat, sigma, trials, seed).map_err(|e| Failure::usage(e.to_string()))?;
    print_json(&LatticeOut {
        coarse: c,
        refinement,
        codebook: lat.codebook(),
        second_moment: lat.second_moment(),
        dither_ks: KsOut { samples: trials, statistic, critical_1pct: critical, uniform: statistic < critical },
        sum_decode,
    });
    Ok(0)
}
