//! `aprhl`: parse, run, certify, check and audit pWHILE programs.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pwhile_dp::aprhl::check::{check_script, CheckConfig, CheckError};
use pwhile_dp::aprhl::fuzz::{soundness_fuzz, FuzzConfig, FUZZ_RULES};
use pwhile_dp::aprhl::params::SValue;
use pwhile_dp::aprhl::rules::Mutation;
use pwhile_dp::aprhl::Policy;
use pwhile_dp::audit::{audit_dp, input_memory, load_audit, AuditError};
use pwhile_dp::lifting::text::{parse_liftcheck, run_liftcheck};
use pwhile_dp::mechanisms::named::{certify_named, GaussVariant, NamedKind};
use pwhile_dp::num::{parse_rational, ExpNum, Rational};
use pwhile_dp::semantics::{interp_exact, interp_sample, ExactConfig, Machine, SampleConfig};
use pwhile_dp::syntax::{parse, print_program, typecheck, OpTable};

const OK: u8 = 0;
const REFUTED: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "aprhl", version, about = "Differential privacy tools for pWHILE programs")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Seed for every randomized step.
    #[arg(long, env = "APRHL_SEED", default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Sample,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mech {
    Lap,
    Gauss,
    Cauchy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MutationArg {
    SeqSum,
    CompMin,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print it back with its AST hash.
    Parse { file: PathBuf },
    /// Typecheck a program.
    Typecheck { file: PathBuf },
    /// Run a program from the all-zero memory with some variables set.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        /// Initial value, `name=value`; vectors as `d=1,0,1`.
        #[arg(long = "init", value_name = "NAME=VALUE")]
        init: Vec<String>,
        /// Program parameter override, `name=value`.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Show only this variable.
        #[arg(long)]
        output: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Decide a lifting membership given in a `lift` file.
    LiftCheck { file: PathBuf },
    /// Certify a named mechanism at an adjacency radius.
    Certify {
        mechanism: Mech,
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        r: String,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        /// Gaussian variant: main or relaxed.
        #[arg(long, default_value = "main")]
        variant: String,
    },
    /// Check an apRHL proof script.
    Check {
        file: PathBuf,
        /// Shorthand for `--param eps=...`.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Side-condition policy: strict, standard or permissive.
        #[arg(long, default_value = "standard")]
        policy: String,
        /// Samples for tested side conditions.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Statistically audit a program against a claimed budget.
    Audit {
        file: PathBuf,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
    },
    /// Fuzz the proof rules against the exact semantics.
    FuzzSoundness {
        #[arg(long, default_value_t = 1100)]
        trials: usize,
        /// Comma-separated subset of the rules.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
    },
}

struct Fail(u8, String);

type Outcome = Result<(u8, String, serde_json::Value), Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(USAGE, msg.into())
}

fn refuted(msg: impl Into<String>) -> Fail {
    Fail(REFUTED, msg.into())
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn number(s: &str) -> Result<Rational, Fail> {
    parse_rational(s).ok_or_else(|| usage(format!("`{s}` is not a number")))
}

fn svalue(s: &str) -> Result<SValue, Fail> {
    match s {
        "true" => Ok(SValue::Bool(true)),
        "false" => Ok(SValue::Bool(false)),
        _ if s.contains(',') => Ok(SValue::Tuple(s.split(',').map(|x| number(x).map(SValue::Num)).collect::<Result<_, _>>()?)),
        _ => Ok(SValue::Num(number(s)?)),
    }
}

fn assignments(items: &[String]) -> Result<BTreeMap<String, SValue>, Fail> {
    items
        .iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("expected NAME=VALUE, got `{kv}`")))?;
            Ok((k.trim().to_string(), svalue(v.trim())?))
        })
        .collect()
}

fn cmd_parse(file: &Path) -> Outcome {
    let src = read(file)?;
    let p = parse(&src).map_err(|e| refuted(format!("{}: {e}", file.display())))?;
    let mut h = DefaultHasher::new();
    p.hash(&mut h);
    let hash = format!("{:016x}", h.finish());
    let text = print_program(&p);
    Ok((OK, format!("{text}\nhash {hash}\n"), json!({ "hash": hash, "program": text })))
}

fn cmd_typecheck(file: &Path) -> Outcome {
    let src = read(file)?;
    let p = parse(&src).map_err(|e| refuted(format!("{}: {e}", file.display())))?;
    let env = typecheck(&p, &OpTable::default()).map_err(|e| refuted(format!("{}: {e}", file.display())))?;
    let vars: BTreeMap<String, String> = env.ctx.iter().map(|(n, t)| (n.clone(), t.to_string())).collect();
    let text = vars.iter().map(|(n, t)| format!("{n}: {t}\n")).collect::<String>() + "ok\n";
    Ok((OK, text, json!({ "vars": vars })))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(file: &Path, mode: Mode, init: &[String], params: &[String], output: Option<&str>, trials: usize, seed: u64) -> Outcome {
    let src = read(file)?;
    let p = parse(&src).map_err(|e| refuted(format!("{}: {e}", file.display())))?;
    let overrides = assignments(params)?;
    let (machine, env) = {
        let env = typecheck(&p, &OpTable::default()).map_err(|e| refuted(e.to_string()))?;
        let mut vals = BTreeMap::new();
        for g in p.prelude.globals.iter().filter(|g| g.is_param) {
            if let Some(v) = overrides.get(&g.name) {
                let ty = env.resolve(&g.ty, Default::default()).map_err(|e| refuted(e.to_string()))?;
                let v = pwhile_dp::audit::svalue_to_value(v, &ty).ok_or_else(|| usage(format!("{v} does not fit `{}`", g.name)))?;
                vals.insert(g.name.clone(), v);
            }
        }
        if let Some(k) = overrides.keys().find(|k| !p.prelude.globals.iter().any(|g| g.is_param && &g.name == *k)) {
            return Err(usage(format!("`{k}` is not a program parameter")));
        }
        Machine::for_program(&p, &OpTable::default(), &vals).map_err(|e| refuted(e.to_string()))?
    };
    let m0 = input_memory(&env, &assignments(init)?).map_err(|e: AuditError| usage(e.to_string()))?;
    if let Some(o) = output {
        if env.ctx.lookup(o).is_none() {
            return Err(usage(format!("`{o}` is not a program variable")));
        }
    }
    let project = |m: &pwhile_dp::Memory| match output {
        Some(o) => m.get(o).map(|v| v.to_string()).unwrap_or_default(),
        None => m.to_string(),
    };
    match mode {
        Mode::Exact => {
            let r = interp_exact(&machine, &p.body, &m0, &ExactConfig::default()).map_err(|e| refuted(e.to_string()))?;
            let d = r.dist.map(|m| project(m));
            let mut text = String::new();
            for (pt, w) in d.iter() {
                text += &format!("{w}\t{pt}\n");
            }
            text += &format!("residual {}\n", r.residual);
            Ok((OK, text, json!({ "dist": d.to_record(), "residual": r.residual.to_string(), "unrolled": r.unroll_count })))
        }
        Mode::Sample => {
            let cfg = SampleConfig { trials, seed, ..SampleConfig::default() };
            let r = interp_sample(&machine, &p.body, &m0, &cfg).map_err(|e| refuted(e.to_string()))?;
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for m in &r.outcomes {
                *counts.entry(project(m)).or_default() += 1;
            }
            let mut text = String::new();
            if counts.len() <= 64 {
                for (pt, c) in &counts {
                    text += &format!("{c}\t{pt}\n");
                }
            } else {
                text += &format!("{} distinct outcomes\n", counts.len());
            }
            text += &format!("trials {} exhausted {} seed {}\n", r.trials, r.exhausted, r.seed);
            let shown = if counts.len() <= 64 { json!(counts) } else { json!(null) };
            Ok((OK, text, json!({ "counts": shown, "trials": r.trials, "exhausted": r.exhausted, "seed": r.seed })))
        }
    }
}

fn cmd_lift(file: &Path) -> Outcome {
    let lc = parse_liftcheck(&read(file)?).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let r = run_liftcheck(&lc).map_err(|e| usage(e.to_string()))?;
    Ok((if r.holds { OK } else { REFUTED }, r.render(), json!(r)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    mech: Mech,
    sigma: Option<&str>,
    rho: Option<&str>,
    r: &str,
    eps: Option<&str>,
    delta: Option<&str>,
    variant: &str,
) -> Outcome {
    let need = |v: Option<&str>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required"))).and_then(number);
    let kind = match mech {
        Mech::Lap => NamedKind::Lap { sigma: need(sigma, "sigma")? },
        Mech::Cauchy => NamedKind::Cauchy { rho: need(rho, "rho")? },
        Mech::Gauss => NamedKind::Gauss {
            sigma: need(sigma, "sigma")?,
            gamma: ExpNum::exp(need(eps, "eps")?),
            delta: need(delta, "delta")?,
            variant: match variant {
                "main" => GaussVariant::Main,
                "relaxed" => GaussVariant::Relaxed,
                v => return Err(usage(format!("unknown variant `{v}`"))),
            },
        },
    };
    let cert = certify_named(&kind, &number(r)?).map_err(|e| refuted(e.to_string()))?;
    let text = format!(
        "mechanism {}\nradius    {}\ngrade     (gamma, delta) = ({}, {})\n          (eps, delta)   = ({}, {})\nwindow    {}\ntail      {:e}\nstatus    {:?}\n",
        cert.mechanism,
        r,
        cert.grade.gamma,
        cert.grade.delta,
        cert.grade.eps,
        cert.grade.delta,
        cert.window_note,
        cert.tail_mass,
        cert.status
    );
    Ok((OK, text, json!(cert)))
}

fn cmd_check(file: &Path, eps: Option<&str>, params: &[String], policy: &str, samples: usize, seed: u64) -> Outcome {
    let mut overrides = assignments(params)?;
    if let Some(e) = eps {
        overrides.insert("eps".into(), SValue::Num(number(e)?));
    }
    let policy = Policy::parse(policy).ok_or_else(|| usage(format!("unknown policy `{policy}`")))?;
    let cfg = CheckConfig { policy, seed, samples, overrides };
    match check_script(file, &cfg) {
        Ok(r) => Ok((OK, r.render(), json!(r))),
        Err(e @ CheckError::Io { .. }) => Err(usage(e.to_string())),
        Err(e) => Err(refuted(e.to_string())),
    }
}

fn cmd_audit(file: &Path, eps: Option<&str>, params: &[String], seed: Option<u64>) -> Outcome {
    let mut overrides = assignments(params)?;
    if let Some(e) = eps {
        overrides.insert("eps".into(), SValue::Num(number(e)?));
    }
    let mut spec = load_audit(file, &overrides).map_err(|e| match e {
        AuditError::Io { .. } => usage(e.to_string()),
        e => refuted(e.to_string()),
    })?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let r = audit_dp(&spec).map_err(|e| refuted(e.to_string()))?;
    Ok((if r.is_violation() { REFUTED } else { OK }, r.render(), json!(r)))
}

fn cmd_fuzz(trials: usize, rules: Option<&str>, mutation: Option<MutationArg>, seed: u64) -> Outcome {
    let rules: Vec<String> = match rules {
        None => FUZZ_RULES.iter().map(|s| s.to_string()).collect(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    if let Some(bad) = rules.iter().find(|r| !FUZZ_RULES.contains(&r.as_str())) {
        return Err(usage(format!("unknown rule `{bad}`; choose from {}", FUZZ_RULES.join(", "))));
    }
    let cfg = FuzzConfig {
        trials,
        seed,
        rules,
        mutation: mutation.map(|m| match m {
            MutationArg::SeqSum => Mutation::SeqSum,
            MutationArg::CompMin => Mutation::CompMin,
        }),
        ..FuzzConfig::default()
    };
    let r = soundness_fuzz(&cfg);
    let mut text = format!("trials {} seed {} validated {}\n", r.trials, r.seed, r.validated);
    for (rule, s) in &r.per_rule {
        text += &format!(
            "{rule:10} generated {:4} rejected {:4} skipped {:4} validated {:4} counterexamples {}\n",
            s.generated, s.rejected, s.skipped, s.validated, s.counterexamples
        );
    }
    if let Some(c) = r.counterexamples.first() {
        text += &format!("first counterexample (trial {}, {}):\n", c.trial, c.rule);
        for p in &c.premises {
            text += &format!("  premise    {p}\n");
        }
        text += &format!("  conclusion {}\n  inputs     {} / {}\n  {}\n", c.conclusion, c.left, c.right, c.violation);
    }
    let code = if r.counterexamples.is_empty() { OK } else { REFUTED };
    Ok((code, text, json!(r)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let seed_given = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed=")) || std::env::var("APRHL_SEED").is_ok();
    let (name, config, outcome) = match &cli.command {
        Command::Parse { file } => ("parse", json!({ "file": file }), cmd_parse(file)),
        Command::Typecheck { file } => ("typecheck", json!({ "file": file }), cmd_typecheck(file)),
        Command::Run { file, mode, init, params, output, trials } => (
            "run",
            json!({ "file": file, "mode": mode, "init": init, "params": params, "output": output, "trials": trials, "seed": seed }),
            cmd_run(file, *mode, init, params, output.as_deref(), *trials, seed),
        ),
        Command::LiftCheck { file } => ("lift-check", json!({ "file": file }), cmd_lift(file)),
        Command::Certify { mechanism, sigma, rho, r, eps, delta, variant } => (
            "certify",
            json!({ "mechanism": mechanism, "sigma": sigma, "rho": rho, "r": r, "eps": eps, "delta": delta, "variant": variant }),
            cmd_certify(*mechanism, sigma.as_deref(), rho.as_deref(), r, eps.as_deref(), delta.as_deref(), variant),
        ),
        Command::Check { file, eps, params, policy, samples } => (
            "check",
            json!({ "file": file, "eps": eps, "params": params, "policy": policy, "samples": samples, "seed": seed }),
            cmd_check(file, eps.as_deref(), params, policy, *samples, seed),
        ),
        Command::Audit { file, eps, params } => (
            "audit",
            json!({ "file": file, "eps": eps, "params": params, "seed": if seed_given { Some(seed) } else { None } }),
            cmd_audit(file, eps.as_deref(), params, seed_given.then_some(seed)),
        ),
        Command::FuzzSoundness { trials, rules, mutation } => (
            "fuzz-soundness",
            json!({ "trials": trials, "rules": rules, "mutation": mutation.map(|m| match m {
                MutationArg::SeqSum => "seq-sum",
                MutationArg::CompMin => "comp-min",
            }), "seed": seed }),
            cmd_fuzz(*trials, rules.as_deref(), *mutation, seed),
        ),
    };
    match outcome {
        Ok((code, text, report)) => {
            let body = match cli.format {
                Format::Text => text,
                Format::Json => {
                    let out = json!({
                        "tool": "aprhl",
                        "version": env!("CARGO_PKG_VERSION"),
                        "command": name,
                        "config": config,
                        "exit": code,
                        "report": report,
                    });
                    serde_json::to_string_pretty(&out).expect("serializable") + "\n"
                }
            };
            // a closed pipe (`| head`) is not an error worth a panic
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(body.as_bytes()).and_then(|_| out.flush());
            ExitCode::from(code)
        }
        Err(Fail(code, msg)) => {
            eprintln!("aprhl {name}: {msg}");
            ExitCode::from(code)
        }
    }
}
