use serde::{Deserialize, Serialize};

use super::evaluate::Evaluator;
use super::policy::DriftPolicy;
use crate::error::{Error, Result};
use crate::flow::{build_stochastic_vector, sample_flow, StochasticVector};
use crate::parallel::map_samples;
use crate::stats::Estimate;

/// Offset separating evaluation streams from training streams.
pub const EVAL_STREAM_OFFSET: u64 = 1 << 40;

/// Cached training vectors are dropped above this many bytes and rebuilt instead.
const CACHE_BYTES: usize = 1 << 30;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub iterations: usize,
    pub train_samples: usize,
    pub eval_samples: usize,
    /// Central-difference step.
    pub fd_step: f64,
    /// Multiplies the curvature-scaled step.
    pub learning_rate: f64,
    /// Largest change of any parameter per iteration.
    pub max_step: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            iterations: 8,
            train_samples: 64,
            eval_samples: 200,
            fd_step: 0.05,
            learning_rate: 1.0,
            max_step: 0.5,
            seed: 1,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Training objective at the current parameters.
    pub objective: f64,
    /// Best training objective so far.
    pub best: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub policy: DriftPolicy,
    /// Best policy on fresh samples.
    pub estimate: Estimate,
    /// Zero drift on the same fresh samples.
    pub zero_drift: Estimate,
    /// Paired difference `estimate - zero_drift`.
    pub improvement: Estimate,
    pub trace: Vec<TraceRow>,
}

enum Ensemble {
    Cached(Vec<StochasticVector>),
    Streams(u64),
}

struct Objective<'a> {
    eval: &'a Evaluator<'a>,
    seed: u64,
    ensemble: Ensemble,
    count: usize,
    workers: usize,
}

impl<'a> Objective<'a> {
    fn new(eval: &'a Evaluator<'a>, seed: u64, offset: u64, count: usize, workers: usize) -> Self {
        let setup = eval.setup;
        let per = (setup.cells() + 1) * setup.grid().len() * 8 * (12 + setup.partition().j_max() as usize);
        let ensemble = if per.saturating_mul(count) <= CACHE_BYTES {
            Ensemble::Cached(map_samples(count, workers, |i| {
                build_stochastic_vector(setup, &sample_flow(setup, seed, offset + i as u64))
            }))
        } else {
            Ensemble::Streams(offset)
        };
        Self { eval, seed, ensemble, count, workers }
    }

    fn samples(&self, policy: &DriftPolicy) -> Result<Vec<f64>> {
        let setup = self.eval.setup;
        let rows = map_samples(self.count, self.workers, |i| match &self.ensemble {
            Ensemble::Cached(v) => self.eval.evaluate(&v[i], policy),
            Ensemble::Streams(o) => {
                let v = build_stochastic_vector(setup, &sample_flow(setup, self.seed, o + i as u64));
                self.eval.evaluate(&v, policy)
            }
        });
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| r.map(|e| e.objective).map_err(|e| Error::Numerical(format!("sample {i}: {e}"))))
            .collect()
    }

    fn mean(&self, policy: &DriftPolicy) -> Result<f64> {
        let s = self.samples(policy)?;
        Ok(s.iter().sum::<f64>() / s.len() as f64)
    }
}

/// Minimises the sample-mean objective over the parameters of `policy`.
///
/// The same training streams are reused at every iteration, so the central
/// differences see common random numbers. Each coordinate moves by a
/// curvature-scaled step `-lr g_i / H_i` (both from the same three
/// evaluations), falling back to a clipped gradient step where the
/// curvature is not positive. The best training iterate is then re-evaluated,
/// together with the zero drift, on fresh streams.
pub fn optimize(eval: &Evaluator, policy: &DriftPolicy, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    if opts.train_samples < 2 || opts.eval_samples < 2 {
        return Err(Error::Invalid("optimisation needs at least two training and two evaluation samples".into()));
    }
    if !(opts.fd_step > 0.0) || !(opts.max_step > 0.0) {
        return Err(Error::Invalid("finite-difference and maximal steps must be positive".into()));
    }
    let train = Objective::new(eval, opts.seed, 0, opts.train_samples, opts.workers);
    let mut theta = policy.params().to_vec();
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, policy.clone());
    let iters = if theta.is_empty() { 0 } else { opts.iterations };
    let eps = opts.fd_step;

    for it in 0..=iters {
        let current = policy.with_params(theta.clone())?;
        let f0 = train.mean(&current)?;
        if f0 < best.0 {
            best = (f0, current.clone());
        }
        trace.push(TraceRow { iteration: it, objective: f0, best: best.0, params: theta.clone() });
        if it == iters {
            break;
        }
        let mut step = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            tp[i] += eps;
            let mut tm = theta.clone();
            tm[i] -= eps;
            let fp = train.mean(&policy.with_params(tp)?)?;
            let fm = train.mean(&policy.with_params(tm)?)?;
            let g = (fp - fm) / (2.0 * eps);
            let h = (fp + fm - 2.0 * f0) / (eps * eps);
            let s = if h > 0.0 {
                -opts.learning_rate * g / h
            } else if g != 0.0 {
                -g.signum() * opts.max_step
            } else {
                0.0
            };
            step[i] = s.clamp(-opts.max_step, opts.max_step);
        }
        for (t, s) in theta.iter_mut().zip(&step) {
            *t += s;
        }
    }

    let fresh = Objective::new(eval, opts.seed, EVAL_STREAM_OFFSET, opts.eval_samples, opts.workers);
    let a = fresh.samples(&best.1)?;
    let z = fresh.samples(&DriftPolicy::Zero)?;
    let diff: Vec<f64> = a.iter().zip(&z).map(|(x, y)| x - y).collect();
    Ok(OptimizeResult {
        policy: best.1,
        estimate: Estimate::from_samples(&a),
        zero_drift: Estimate::from_samples(&z),
        improvement: Estimate::from_samples(&diff),
        trace,
    })
}

/// Objective samples of a fixed policy on streams `offset..offset + count`.
pub fn evaluate_policy(
    eval: &Evaluator,
    policy: &DriftPolicy,
    seed: u64,
    offset: u64,
    count: usize,
    workers: usize,
) -> Result<Vec<f64>> {
    let setup = eval.setup;
    let rows = map_samples(count, workers, |i| {
        let v = build_stochastic_vector(setup, &sample_flow(setup, seed, offset + i as u64));
        eval.evaluate(&v, policy)
    });
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.map(|e| e.objective).map_err(|e| Error::Numerical(format!("sample {i}: {e}"))))
        .collect()
}
