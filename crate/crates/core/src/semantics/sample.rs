//! Monte-Carlo interpreter. Trial `i` draws from a ChaCha stream selected by
//! `(seed, i)`, so results do not depend on thread scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::discrete_support;
use super::{ExecError, Machine};
use crate::mechanisms::Mechanism;
use crate::num::rational::to_f64;
use crate::syntax::{Cmd, DistExpr};
use crate::value::{Memory, Value};

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub trials: usize,
    pub seed: u64,
    /// Loop iterations allowed per trial.
    pub fuel: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { trials: 10_000, seed: 0, fuel: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub trials: usize,
    pub seed: u64,
    pub outcomes: Vec<Memory>,
    /// Trials that produced no final memory: fuel ran out or `null` was reached.
    pub exhausted: usize,
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn interp_sample(machine: &Machine, c: &Cmd, m: &Memory, cfg: &SampleConfig) -> Result<SampleResult, ExecError> {
    let runs: Vec<Option<Memory>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, i as u64);
            sample_once(machine, c, m, cfg.fuel, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    let exhausted = runs.iter().filter(|r| r.is_none()).count();
    Ok(SampleResult { trials: cfg.trials, seed: cfg.seed, outcomes: runs.into_iter().flatten().collect(), exhausted })
}

/// One run of `c` from `m`; `None` if the run stops without a result.
pub fn sample_once<R: Rng + ?Sized>(
    machine: &Machine,
    c: &Cmd,
    m: &Memory,
    fuel: u64,
    rng: &mut R,
) -> Result<Option<Memory>, ExecError> {
    let mut fuel = fuel;
    let mut m = m.clone();
    Ok(if step(machine, c, &mut m, &mut fuel, rng)? { Some(m) } else { None })
}

fn step<R: Rng + ?Sized>(machine: &Machine, c: &Cmd, m: &mut Memory, fuel: &mut u64, rng: &mut R) -> Result<bool, ExecError> {
    match c {
        Cmd::Skip => Ok(true),
        Cmd::Null => Ok(false),
        Cmd::Assign { var, expr, .. } => {
            let v = machine.eval(expr, m)?;
            *m = machine.store(m, var, v);
            Ok(true)
        }
        Cmd::Sample { var, dist, .. } => {
            let v = draw(machine, dist, m, rng)?;
            *m = machine.store(m, var, v);
            Ok(true)
        }
        Cmd::Seq(a, b) => Ok(step(machine, a, m, fuel, rng)? && step(machine, b, m, fuel, rng)?),
        Cmd::If { cond, then_branch, else_branch, .. } => {
            if machine.eval_bool(cond, m)? {
                step(machine, then_branch, m, fuel, rng)
            } else {
                step(machine, else_branch, m, fuel, rng)
            }
        }
        Cmd::While { cond, body, .. } => {
            while machine.eval_bool(cond, m)? {
                if *fuel == 0 {
                    return Ok(false);
                }
                *fuel -= 1;
                if !step(machine, body, m, fuel, rng)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn real(name: &str, v: &Value) -> Result<f64, ExecError> {
    v.as_f64().ok_or_else(|| ExecError::BadParameter(name.into(), format!("{v} is not numeric")))
}

fn draw<R: Rng + ?Sized>(machine: &Machine, d: &DistExpr, m: &Memory, rng: &mut R) -> Result<Value, ExecError> {
    let params: Vec<Value> = d.params.iter().map(|e| machine.eval(e, m)).collect::<Result<_, _>>()?;
    let args: Vec<Value> = d.args.iter().map(|e| machine.eval(e, m)).collect::<Result<_, _>>()?;
    let continuous = match d.name.as_str() {
        "lap" => Some(Mechanism::laplace(real("lap", &params[0])?)),
        "gauss" => Some(Mechanism::gauss(real("gauss", &params[0])?)),
        "cauchy" => Some(Mechanism::cauchy(real("cauchy", &params[0])?)),
        _ => None,
    };
    if let Some(mech) = continuous {
        let mech = mech.map_err(|e| ExecError::BadParameter(d.name.clone(), e.to_string()))?;
        let centre = real(&d.name, &args[0])?;
        return Ok(Value::float(mech.sample(centre, rng)));
    }
    // discrete: inverse transform over the exact table
    let table = discrete_support(&d.name, &params, &args)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (v, w) in &table {
        acc += to_f64(w);
        if u < acc {
            return Ok(v.clone());
        }
    }
    Ok(table.last().map(|(v, _)| v.clone()).expect("non-empty support"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, OpTable};
    use std::collections::BTreeMap;

    fn setup(src: &str) -> (Machine, Cmd, Memory) {
        let p = parse(src).unwrap();
        let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap();
        let m = env.default_memory();
        (machine, p.body, m)
    }

    #[test]
    fn reproducible() {
        let (mach, c, m) = setup("var x:real; x <$ lap(1)(0)");
        let cfg = SampleConfig { trials: 200, seed: 7, fuel: 10 };
        let a = interp_sample(&mach, &c, &m, &cfg).unwrap();
        let b = interp_sample(&mach, &c, &m, &cfg).unwrap();
        assert_eq!(a, b);
        let c2 = interp_sample(&mach, &c, &m, &SampleConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c2);
    }

    #[test]
    fn fuel_and_null_count_as_exhausted() {
        let (mach, c, m) = setup("var x:int; while true do { skip }");
        let r = interp_sample(&mach, &c, &m, &SampleConfig { trials: 10, seed: 0, fuel: 5 }).unwrap();
        assert_eq!((r.outcomes.len(), r.exhausted), (0, 10));
        let (mach, c, m) = setup("var x:int; x <$ bern(1/2); if x = 1 then { null }");
        let r = interp_sample(&mach, &c, &m, &SampleConfig { trials: 4000, seed: 1, fuel: 5 }).unwrap();
        assert_eq!(r.outcomes.len() + r.exhausted, 4000);
        assert!((r.exhausted as f64 / 4000.0 - 0.5).abs() < 0.05);
    }
}
