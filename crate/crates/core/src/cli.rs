//! Command-line front end: every capability of the crate behind
//! machine-readable JSON (default) or flattened CSV output.
//!
//! Exit codes: 0 success, 2 malformed input, 3 model error (for instance the
//! max-gap law on a recurrence with a zero coefficient), 4 budget guard.

use std::collections::BTreeMap;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value as Json};

use crate::chain::{build_chain, verify_spectral, ChainModel};
use crate::decomposer::{decompose, enumerate_legal, recompose};
use crate::error::{Error, Result};
use crate::functionals::{asymptotic_variance, lekkerkerker_constants, summand_indicator};
use crate::gaps::{limit_gap_law, maxgap_exact_cdf, maxgap_law, spacing_margin};
use crate::oracle::{exhaustive_stats, transfer_stats, TransferStatistic};
use crate::recurrence::{Recurrence, DEFAULT_ROOT_TOL};
use crate::report::{bigint_json, rational_json};
use crate::sampler::{batch_gap_distribution, estimate, sample_paths, SampleStatistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Recurrence, compact ("L=2;c=1,1") or JSON ({"L":2,"c":[1,1]}).
    #[arg(long)]
    rec: Option<String>,
    /// JSON file supplying defaults for missing flags (same key names).
    #[arg(long)]
    config: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "zeck", version, about = "Generalized Zeckendorf decompositions and their conditioned-chain statistics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Decompose an integer into its legal digit string.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// The integer to decompose (decimal, arbitrary size).
        #[arg(long)]
        n: Option<String>,
    },
    /// Build the conditioned chain; --dump includes all matrices.
    Chain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump: bool,
    },
    /// Closed-form constants: growth rate, mean/variance coefficients.
    Constants {
        #[command(flatten)]
        common: Common,
    },
    /// Limiting gap distribution up to a cutoff.
    Gaps {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        kmax: usize,
    },
    /// Maximal-gap law and its exact CDF at centered points.
    Maxgap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Offset range around the centering, e.g. "-1..3".
        #[arg(long, default_value = "-1..3", allow_hyphen_values = true)]
        k: String,
    },
    /// Exact enumeration / transfer-DP statistics.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Enumeration length parameter n (strings of length n+1).
        #[arg(long)]
        length: Option<usize>,
        /// Also run the transfer DP at this larger length.
        #[arg(long)]
        transfer_n: Option<usize>,
    },
    /// Importance-weighted Monte Carlo batch summary.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Emit one CSV row per trial instead of the summary.
        #[arg(long)]
        raw_csv: bool,
    },
    /// Full invariant sweep on the model.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

/// Runs the CLI on explicit arguments and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Input(_) | Error::Recurrence(_) => 2,
                Error::Model(_) => 3,
                Error::Budget(_) => 4,
                Error::Internal(_) => 1,
            }
        }
    }
}

struct Ctx {
    config: Option<Json>,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let config = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Input(format!("cannot read config {path}: {e}")))?;
                Some(
                    serde_json::from_str(&text)
                        .map_err(|e| Error::Input(format!("bad config {path}: {e}")))?,
                )
            }
            None => None,
        };
        Ok(Ctx { config })
    }

    fn lookup(&self, key: &str) -> Option<&Json> {
        self.config.as_ref().and_then(|c| c.get(key))
    }

    fn rec(&self, common: &Common) -> Result<Recurrence> {
        let text = match (&common.rec, self.lookup("rec")) {
            (Some(t), _) => t.clone(),
            (None, Some(Json::String(t))) => t.clone(),
            (None, Some(v)) => serde_json::to_string(v).unwrap(),
            (None, None) => return Err(Error::Input("missing --rec".into())),
        };
        parse_rec(&text)
    }

    fn usize_arg(&self, flag: Option<usize>, key: &str) -> Result<usize> {
        flag.or_else(|| self.lookup(key).and_then(Json::as_u64).map(|v| v as usize))
            .ok_or_else(|| Error::Input(format!("missing --{key}")))
    }
}

fn parse_rec(text: &str) -> Result<Recurrence> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("bad recurrence JSON: {e}")))
    } else {
        Recurrence::parse_compact(text)
    }
}

fn model_for(rec: &Recurrence) -> Result<ChainModel> {
    build_chain(rec, DEFAULT_ROOT_TOL)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Decompose { common, n } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let text = match (n, ctx.lookup("n")) {
                (Some(t), _) => t,
                (None, Some(v)) => v.to_string().trim_matches('"').to_string(),
                (None, None) => return Err(Error::Input("missing --n".into())),
            };
            let value = BigInt::from_str(text.trim())
                .map_err(|_| Error::Input(format!("not an integer: '{text}'")))?;
            if value.sign() != num_bigint::Sign::Plus {
                return Err(Error::Input("N must be >= 1".into()));
            }
            let ds = decompose(&rec, &value);
            let back = recompose(&ds);
            let out = json!({
                "rec": rec.to_compact(),
                "value": bigint_json(&value),
                "digits": ds.digits(),
                "length": ds.len(),
                "recomposed": bigint_json(&back),
            });
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Chain { common, dump } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let model = model_for(&rec)?;
            let mut out = chain_summary(&model);
            if dump {
                let o = out.as_object_mut().unwrap();
                o.insert("q".into(), matrix_json(&model.q));
                o.insert("p_sub".into(), matrix_json(&model.p_sub));
                o.insert("phi_c".into(), json!(vec_of(&model.phi_c)));
                o.insert("nu_c".into(), json!(vec_of(&model.nu_c)));
                o.insert("pi_q".into(), json!(vec_of(&model.pi_q)));
                o.insert("tilde_phi_c".into(), json!(vec_of(&model.tilde_phi_c)));
                o.insert("pi_q1".into(), json!(model.pi_q1));
                o.insert("norm_k1k2".into(), json!(model.norm_k1k2));
            }
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Constants { common } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let model = model_for(&rec)?;
            let g = summand_indicator(&model.space);
            let lek = lekkerkerker_constants(&model, &g)?;
            let var = asymptotic_variance(&model, &g)?;
            let out = json!({
                "rec": rec.to_compact(),
                "lambda_c_companion": model.spectral.lambda,
                "c_lek": lek.c_lek,
                "d": lek.d,
                "sigma2": var.sigma2,
                "pi_q": vec_of(&model.pi_q),
                "pi_q1": model.pi_q1,
                "states": states_json(&model),
            });
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Gaps { common, kmax } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let model = model_for(&rec)?;
            let law = limit_gap_law(&model);
            let mass: BTreeMap<String, f64> =
                (0..=kmax).map(|k| (format!("{k}"), law.mass(k))).collect();
            let out = json!({
                "rec": rec.to_compact(),
                "lambda_c_companion": law.lambda,
                "mean_digit": law.mean_digit,
                "h1_mass": law.h1_mass,
                "h2": law.h2.iter().map(|e| json!({
                    "b": e.b, "r": e.r, "rho": e.rho, "weight": e.weight,
                })).collect::<Vec<_>>(),
                "mass": mass,
                "total_mass": law.total_mass(),
            });
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Maxgap { common, n, k } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let n = ctx.usize_arg(n, "n")?;
            let (k_lo, k_hi) = parse_range(&k)?;
            let model = model_for(&rec)?;
            let law = maxgap_law(&model)?;
            let center = law.centering(n);
            let mut points = Vec::new();
            for off in k_lo..=k_hi {
                let m = center + off;
                let exact = if m < 0 {
                    json!(0.0)
                } else {
                    rational_json(&maxgap_exact_cdf(&rec, n, m as usize)?)
                };
                points.push(json!({
                    "k": off,
                    "m": m,
                    "cdf_limit": law.cdf_offset(off),
                    "cdf_exact": exact,
                }));
            }
            let out = json!({
                "rec": rec.to_compact(),
                "n": n,
                "alpha": law.alpha,
                "q": law.q,
                "centering": center,
                "spacing_margin": spacing_margin(n, law.alpha, law.q),
                "points": points,
            });
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Oracle {
            common,
            length,
            transfer_n,
        } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let n = ctx.usize_arg(length, "length")?;
            let ex = exhaustive_stats(&rec, n)?;
            let mut out = json!({
                "rec": rec.to_compact(),
                "exhaustive": {
                    "n": ex.n,
                    "count": ex.count,
                    "mean_summands": rational_json(&ex.mean_summands),
                    "variance_summands": rational_json(&ex.variance_summands),
                    "gap_histogram": ex.gap_histogram.iter()
                        .map(|(k, v)| (format!("{k}"), json!(v)))
                        .collect::<serde_json::Map<_, _>>(),
                    "max_gap_histogram": ex.max_gap_histogram.iter()
                        .map(|(k, v)| (format!("{k}"), json!(v)))
                        .collect::<serde_json::Map<_, _>>(),
                },
            });
            if let Some(tn) = transfer_n {
                let mean = transfer_stats(&rec, tn, TransferStatistic::MeanSummands)?;
                let total = transfer_stats(&rec, tn, TransferStatistic::TotalGaps)?;
                let count = transfer_stats(&rec, tn, TransferStatistic::StringCount)?;
                out.as_object_mut().unwrap().insert(
                    "transfer".into(),
                    json!({
                        "n": tn,
                        "mean_summands": rational_json(&mean),
                        "total_gaps": rational_json(&total),
                        "string_count": bigint_json(count.numer()),
                    }),
                );
            }
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Sample {
            common,
            length,
            trials,
            seed,
            raw_csv,
        } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let n = ctx.usize_arg(length, "length")?;
            let trials = ctx.usize_arg(trials, "trials")?;
            let seed = match (seed, ctx.lookup("seed").and_then(Json::as_u64)) {
                (Some(s), _) => s,
                (None, Some(s)) => s,
                (None, None) => return Err(Error::Input("missing --seed".into())),
            };
            if trials == 0 {
                return Err(Error::Input("--trials must be >= 1".into()));
            }
            let model = model_for(&rec)?;
            let batch = sample_paths(&model, n, trials, seed);
            if raw_csv {
                println!("trial,weight,nonzero_digits,digit_sum,max_gap");
                for (i, (w, s)) in batch.weights.iter().zip(&batch.stats).enumerate() {
                    println!(
                        "{i},{w},{},{},{}",
                        s.nonzero_digits, s.digit_sum, s.max_gap
                    );
                }
                return Ok(0);
            }
            let (sc, sc_se) = estimate(&batch, SampleStatistic::SummandCount);
            let (tg, tg_se) = estimate(&batch, SampleStatistic::TotalGaps);
            let gaps: BTreeMap<String, f64> = batch_gap_distribution(&batch)
                .into_iter()
                .map(|(k, v)| (format!("{k}"), v))
                .collect();
            let out = json!({
                "rec": rec.to_compact(),
                "n": n,
                "trials": trials,
                "seed": seed,
                "ess": batch.ess,
                "summand_count": {"estimate": sc, "stderr": sc_se},
                "total_gaps": {"estimate": tg, "stderr": tg_se},
                "gap_distribution": gaps,
            });
            emit(&out, common.format);
            Ok(0)
        }
        Cmd::Verify { common } => {
            let ctx = Ctx::new(&common)?;
            let rec = ctx.rec(&common)?;
            let model = model_for(&rec)?;
            let report = verify_spectral(&model, 1e-10);
            // Exercise enumeration consistency on a small length too.
            let strings = enumerate_legal(&rec, 6)?;
            let out = json!({
                "rec": rec.to_compact(),
                "pass": report.pass,
                "enumeration_count_n6": strings.len(),
                "checks": report.checks.iter().map(|c| json!({
                    "name": c.name, "residual": c.residual, "pass": c.pass,
                })).collect::<Vec<_>>(),
            });
            emit(&out, common.format);
            Ok(if report.pass { 0 } else { 3 })
        }
    }
}

fn chain_summary(model: &ChainModel) -> Json {
    json!({
        "rec": model.rec().to_compact(),
        "num_states": model.num_states(),
        "states": states_json(model),
        "start_states": model.space.start_indices(),
        "gamma": model.gamma,
        "lambda_c_companion": model.spectral.lambda,
        "lambda_c": model.lambda_c,
    })
}

fn states_json(model: &ChainModel) -> Vec<Json> {
    model
        .space
        .states()
        .iter()
        .map(|s| json!([s.x, s.b, s.b_next]))
        .collect()
}

fn vec_of(v: &nalgebra::DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Json {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    json!(rows)
}

fn parse_range(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Input(format!("bad range '{s}', expected like -1..3"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn emit(value: &Json, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).unwrap()),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", value, &mut rows);
            for (k, v) in rows {
                println!("{k},{v}");
            }
        }
    }
}

fn flatten(prefix: &str, value: &Json, rows: &mut Vec<(String, String)>) {
    let key = |suffix: &str| {
        if prefix.is_empty() {
            suffix.to_string()
        } else {
            format!("{prefix}.{suffix}")
        }
    };
    match value {
        Json::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Json::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
