//! Derivative-free minimizers: Nelder–Mead simplex and differential evolution
//! (rand/1/bin) with a multi-start simplex polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const DE_WEIGHT: f64 = 0.8;
const DE_CROSSOVER: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Simplex iterations per run.
    pub max_iterations: usize,
    /// Simplex stops once the spread of objective values is below
    /// `tolerance · (1 + |f_best|)`...
    pub tolerance: f64,
    /// ...and the simplex diameter below `x_tolerance · (1 + |x_best|)`.
    pub x_tolerance: f64,
    /// Differential-evolution population.
    pub population: usize,
    pub generations: usize,
    /// Simplex runs used to polish (or, for slices, to search).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-12,
            x_tolerance: 1e-9,
            population: 30,
            generations: 150,
            restarts: 4,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("max_iterations", self.max_iterations as f64),
            ("tolerance", self.tolerance),
            ("x_tolerance", self.x_tolerance),
            ("population", self.population as f64),
            ("generations", self.generations as f64),
            ("restarts", self.restarts as f64),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "optimizer settings must be positive",
                });
            }
        }
        if self.population < 4 {
            return Err(Error::InvalidParameter {
                name: "population",
                value: self.population as f64,
                reason: "differential evolution needs at least 4 members",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn default_steps(x0: &[f64]) -> Vec<f64> {
    x0.iter()
        .map(|&x| if x != 0.0 { 0.05 * x.abs() } else { 0.00025 })
        .collect()
}

/// Nelder–Mead from `x0` with the usual 5% initial simplex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> OptimResult {
    let steps = default_steps(x0);
    nelder_mead_with_steps(f, x0, &steps, cfg)
}

/// Nelder–Mead with explicit initial simplex edge lengths.
pub fn nelder_mead_with_steps<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    cfg: &OptimizerConfig,
) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        finite_or_inf(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if has_converged(&simplex, cfg) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along =
            |t: f64, from: &[f64]| -> Vec<f64> { centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect() };
        let worst = simplex[n].clone();
        let xr = along(REFLECT, &worst.0);
        let fr = eval(&xr);

        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND, &worst.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(REFLECT * CONTRACT, &worst.0);
            let fc = eval(&xc);
            (xc, if fc <= fr { fc } else { f64::NAN })
        } else {
            let xc = along(-CONTRACT, &worst.0);
            let fc = eval(&xc);
            (xc, if fc < worst.1 { fc } else { f64::NAN })
        };
        if !fc.is_nan() {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for (x, b) in v.0.iter_mut().zip(&best) {
                *x = b + SHRINK * (*x - b);
            }
            v.1 = eval(&v.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    OptimResult {
        x,
        f: fx,
        iterations,
        evaluations: evals,
        converged,
    }
}

fn has_converged(simplex: &[(Vec<f64>, f64)], cfg: &OptimizerConfig) -> bool {
    let (best, fb) = (&simplex[0].0, simplex[0].1);
    let fw = simplex[simplex.len() - 1].1;
    if !fb.is_finite() {
        return false;
    }
    let fspread = fw - fb;
    let scale = best.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diameter = simplex[1..]
        .iter()
        .flat_map(|v| v.0.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    fspread <= cfg.tolerance * (1.0 + fb.abs()) && diameter <= cfg.x_tolerance * (1.0 + scale)
}

fn clamp_to(bounds: &[(f64, f64)], x: &[f64]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect()
}

/// Differential evolution over a box, then Nelder–Mead polish from the best
/// member and `restarts − 1` perturbations of it. Deterministic for a seed.
pub fn differential_evolution<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<OptimResult> {
    cfg.validate()?;
    if bounds.is_empty() {
        return Err(Error::Input("empty search box".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Input(format!("invalid bound [{lo}, {hi}]")));
        }
    }
    let dim = bounds.len();
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        finite_or_inf(f(x))
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
        .collect();
    let mut fit: Vec<f64> = pop.iter().map(|x| eval(x)).collect();

    let mut generations = 0;
    for _ in 0..cfg.generations {
        generations += 1;
        let mut next = pop.clone();
        let mut next_fit = fit.clone();
        for i in 0..np {
            let mut pick = || loop {
                let r = rng.random_range(0..np);
                if r != i {
                    break r;
                }
            };
            let r1 = pick();
            let r2 = loop {
                let r = pick();
                if r != r1 {
                    break r;
                }
            };
            let r3 = loop {
                let r = pick();
                if r != r1 && r != r2 {
                    break r;
                }
            };
            let jrand = rng.random_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|j| {
                    if j == jrand || rng.random::<f64>() < DE_CROSSOVER {
                        pop[r1][j] + DE_WEIGHT * (pop[r2][j] - pop[r3][j])
                    } else {
                        pop[i][j]
                    }
                })
                .collect();
            let trial = clamp_to(bounds, &trial);
            let ft = eval(&trial);
            if ft <= fit[i] {
                next[i] = trial;
                next_fit[i] = ft;
            }
        }
        pop = next;
        fit = next_fit;

        let (lo, hi) = fit
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi.is_finite() && hi - lo <= cfg.tolerance * (1.0 + lo.abs()) {
            break;
        }
    }

    let best_idx = (0..np).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).expect("population");
    let mut starts = vec![pop[best_idx].clone()];
    for _ in 1..cfg.restarts {
        let p: Vec<f64> = pop[best_idx]
            .iter()
            .zip(bounds)
            .map(|(x, (lo, hi))| x + 0.05 * (hi - lo) * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        starts.push(clamp_to(bounds, &p));
    }

    let steps: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.02 * (hi - lo)).collect();
    let mut best = OptimResult {
        x: pop[best_idx].clone(),
        f: fit[best_idx],
        iterations: generations,
        evaluations: 0,
        converged: false,
    };
    let mut iterations = generations;
    for s in starts {
        let r = nelder_mead_with_steps(|x| eval(&clamp_to(bounds, x)), &s, &steps, cfg);
        iterations += r.iterations;
        if r.f < best.f || (r.f == best.f && !best.converged) {
            best = OptimResult {
                x: clamp_to(bounds, &r.x),
                ..r
            };
        }
    }
    best.iterations = iterations;
    best.evaluations = evals;
    Ok(best)
}
