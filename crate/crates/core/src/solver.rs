//! Desk-scale solvers for variational inequalities over polyhedral sets.
//!
//! Both methods stop on the natural residual `‖x − Π_Ω(x − F(x))‖`, which
//! does not depend on the method, and record `ψ` on every iterate so the
//! trace can be compared against error-bound predictions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Alpha;
use crate::gap::{dist, ViInstance};
use crate::report::fmt_f64;

const DIVERGENCE_NORM: f64 = 1e8;
const LIPSCHITZ_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    MaxIter,
    Diverged,
    /// Line search failed to find a decrease.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iterate {
    pub k: usize,
    pub x: Vec<f64>,
    pub psi: f64,
    pub natural_residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub iterates: Vec<Iterate>,
    pub status: TerminalStatus,
    pub solution: Option<Vec<f64>>,
}

impl SolverTrace {
    pub fn last(&self) -> &Iterate {
        self.iterates.last().expect("traces hold the initial point")
    }

    /// `k, x1..xn, psi, natural_residual`.
    pub fn to_csv(&self) -> String {
        let n = self.iterates.first().map_or(0, |it| it.x.len());
        let mut out = String::from("k");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",psi,natural_residual\n");
        for it in &self.iterates {
            out.push_str(&it.k.to_string());
            for v in &it.x {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push_str(&format!(",{},{}\n", fmt_f64(it.psi), fmt_f64(it.natural_residual)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentParams {
    pub max_iter: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            initial_step: 1.0,
            armijo: 1e-4,
            max_halvings: 60,
        }
    }
}

pub fn natural_residual(inst: &ViInstance, x: &[f64]) -> Result<f64> {
    let fx = inst.map().eval(x)?;
    let target: Vec<f64> = x.iter().zip(&fx).map(|(a, f)| a - f).collect();
    let p = inst.omega().project_with(&target, inst.tolerances().proj_tol)?;
    Ok(dist(x, &p))
}

fn require_projectable(inst: &ViInstance, x0: &[f64]) -> Result<()> {
    if !inst.omega().is_polyhedral() {
        return Err(Error::UnsupportedSet("the solvers need a polyhedral feasible set".into()));
    }
    if !inst.omega().contains(x0, inst.tolerances().active_tol)? {
        return Err(Error::Infeasible(format!("starting point {x0:?} is outside the feasible set")));
    }
    Ok(())
}

/// `0.3 / (1 + L)` with `L` the largest Frobenius norm of the Jacobian over
/// 16 seeded points in the unit cube around `x0`.
pub fn default_step(inst: &ViInstance, x0: &[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let lip = (0..LIPSCHITZ_SAMPLES)
        .map(|_| {
            let x: Vec<f64> = x0.iter().map(|v| v + rng.gen_range(-1.0..=1.0)).collect();
            inst.map()
                .jacobian_unchecked(&x)
                .iter()
                .flatten()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    0.3 / (1.0 + lip)
}

fn record(inst: &ViInstance, k: usize, x: &[f64], step: f64) -> Result<Iterate> {
    Ok(Iterate {
        k,
        x: x.to_vec(),
        psi: inst.psi(x)?,
        natural_residual: natural_residual(inst, x)?,
        step,
    })
}

fn finish(iterates: Vec<Iterate>, status: TerminalStatus) -> SolverTrace {
    let solution = (status == TerminalStatus::Converged).then(|| iterates.last().expect("nonempty").x.clone());
    SolverTrace {
        iterates,
        status,
        solution,
    }
}

/// Korpelevich extragradient:
/// `y = Π(x − τF(x))`, `x⁺ = Π(x − τF(y))`.
pub fn extragradient(inst: &ViInstance, x0: &[f64], step: Option<f64>, max_iter: usize) -> Result<SolverTrace> {
    require_projectable(inst, x0)?;
    let tol = inst.tolerances();
    let step = step.unwrap_or_else(|| default_step(inst, x0));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let omega = inst.omega();
    let f = inst.map();
    let mut x = x0.to_vec();
    let mut iterates = Vec::new();
    for k in 0..=max_iter {
        let it = record(inst, k, &x, step)?;
        let done = it.natural_residual <= tol.solve_tol;
        iterates.push(it);
        if done {
            return Ok(finish(iterates, TerminalStatus::Converged));
        }
        if k == max_iter {
            break;
        }
        let fx = f.eval_unchecked(&x);
        let y = omega.project_with(
            &x.iter().zip(&fx).map(|(a, g)| a - step * g).collect::<Vec<_>>(),
            tol.proj_tol,
        )?;
        let fy = f.eval_unchecked(&y);
        x = omega.project_with(
            &x.iter().zip(&fy).map(|(a, g)| a - step * g).collect::<Vec<_>>(),
            tol.proj_tol,
        )?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            iterates.push(Iterate {
                k: k + 1,
                psi: f64::NAN,
                natural_residual: f64::NAN,
                x,
                step,
            });
            return Ok(finish(iterates, TerminalStatus::Diverged));
        }
    }
    Ok(finish(iterates, TerminalStatus::MaxIter))
}

/// Projected gradient descent on `ψ` with Armijo backtracking.
pub fn gap_descent(inst: &ViInstance, x0: &[f64], params: &DescentParams) -> Result<SolverTrace> {
    require_projectable(inst, x0)?;
    let tol = inst.tolerances();
    let omega = inst.omega();
    let mut x = x0.to_vec();
    let (mut psi, mut grad) = inst.psi_and_gradient(&x)?;
    let mut step = params.initial_step;
    let mut iterates = Vec::new();
    for k in 0..=params.max_iter {
        let nat = natural_residual(inst, &x)?;
        iterates.push(Iterate {
            k,
            x: x.clone(),
            psi,
            natural_residual: nat,
            step,
        });
        if nat <= tol.solve_tol {
            return Ok(finish(iterates, TerminalStatus::Converged));
        }
        if k == params.max_iter {
            break;
        }
        let mut accepted = None;
        let mut t = (step * 2.0).min(params.initial_step.max(step));
        for _ in 0..=params.max_halvings {
            let cand = omega.project_with(
                &x.iter().zip(&grad).map(|(a, g)| a - t * g).collect::<Vec<_>>(),
                tol.proj_tol,
            )?;
            let (cpsi, cgrad) = inst.psi_and_gradient(&cand)?;
            let decrease: f64 = grad.iter().zip(cand.iter().zip(&x)).map(|(g, (c, a))| g * (c - a)).sum();
            if cpsi <= psi + params.armijo * decrease && cpsi <= psi {
                accepted = Some((cand, cpsi, cgrad));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, cpsi, cgrad)) => {
                x = cand;
                psi = cpsi;
                grad = cgrad;
                step = t;
            }
            None => return Ok(finish(iterates, TerminalStatus::Stalled)),
        }
    }
    Ok(finish(iterates, TerminalStatus::MaxIter))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub k: usize,
    pub psi: f64,
    pub dist: f64,
    pub psi_pow_alpha: f64,
    /// `dist / ψ^α`, formed in the log domain; NaN when `ψ ≤ 0`.
    pub ratio: f64,
    /// Set when the zero set was empty and `dist` fell back to 1.
    pub empty_zero_set: bool,
}

/// Lines up each iterate's distance to the zero set with `ψ^α`.
pub fn correlate_rate(trace: &SolverTrace, zero_set: &[Vec<f64>], alpha: &Alpha) -> Vec<RateRow> {
    trace
        .iterates
        .iter()
        .filter(|it| it.psi.is_finite())
        .map(|it| {
            let d = zero_set
                .iter()
                .map(|z| dist(&it.x, z))
                .fold(f64::INFINITY, f64::min);
            let empty = zero_set.is_empty();
            let d = if empty { 1.0 } else { d };
            let psi = it.psi.max(0.0);
            let pow = crate::exponent::pow_alpha(psi, alpha).unwrap_or(f64::NAN);
            let ratio = if psi > 0.0 && d > 0.0 {
                (d.ln() - alpha.scale(psi.ln())).exp()
            } else {
                f64::NAN
            };
            RateRow {
                k: it.k,
                psi: it.psi,
                dist: d,
                psi_pow_alpha: pow,
                ratio,
                empty_zero_set: empty,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::FeasibleSet;
    use crate::poly::PolynomialMap;
    use approx::assert_abs_diff_eq;

    fn identity_halfline() -> ViInstance {
        ViInstance::new(PolynomialMap::identity(1), FeasibleSet::nonnegative_orthant(1), 1.0).unwrap()
    }

    fn shifted_orthant() -> ViInstance {
        let f = PolynomialMap::affine(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[-1.0, 1.0]).unwrap();
        ViInstance::new(f, FeasibleSet::nonnegative_orthant(2), 1.0).unwrap()
    }

    #[test]
    fn extragradient_examples() {
        let tr = extragradient(&identity_halfline(), &[1.0], Some(0.5), 1000).unwrap();
        assert_eq!(tr.status, TerminalStatus::Converged);
        assert!(tr.last().x[0].abs() <= 1e-10);
        assert!(tr.last().psi <= 1e-20);

        let tr = extragradient(&shifted_orthant(), &[0.0, 0.0], None, 10_000).unwrap();
        assert_eq!(tr.status, TerminalStatus::Converged);
        let sol = tr.solution.unwrap();
        assert_abs_diff_eq!(sol[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol[1], 0.0, epsilon = 1e-9);

        let tr = extragradient(&shifted_orthant(), &[1.0, 0.0], None, 10).unwrap();
        assert_eq!(tr.status, TerminalStatus::Converged);
        assert_eq!(tr.iterates.len(), 1);
    }

    #[test]
    fn extragradient_rejects_bad_start() {
        assert!(matches!(
            extragradient(&identity_halfline(), &[-1.0], None, 10),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn extragradient_reports_divergence() {
        // F(x) = -x pushes iterates away from 0 on the whole line
        let f = PolynomialMap::affine(&[vec![-1.0]], &[0.0]).unwrap();
        let inst = ViInstance::new(f, FeasibleSet::whole_space(1), 1.0).unwrap();
        let tr = extragradient(&inst, &[1.0], Some(0.9), 10_000).unwrap();
        assert_eq!(tr.status, TerminalStatus::Diverged);
    }

    #[test]
    fn gap_descent_examples() {
        let tr = gap_descent(&identity_halfline(), &[1.0], &DescentParams::default()).unwrap();
        assert_eq!(tr.status, TerminalStatus::Converged);
        assert!(tr.last().psi <= 1e-12);
        for w in tr.iterates.windows(2) {
            assert!(w[1].psi <= w[0].psi + 1e-15);
        }
        let tr = gap_descent(&shifted_orthant(), &[1.0, 0.0], &DescentParams::default()).unwrap();
        assert_eq!(tr.iterates.len(), 1);
    }

    #[test]
    fn correlate_examples() {
        let inst = identity_halfline();
        let tr = extragradient(&inst, &[1.0], Some(0.5), 1000).unwrap();
        let rows = correlate_rate(&tr, &[vec![0.0]], &Alpha::ratio(1, 2));
        for row in rows.iter().filter(|r| r.psi > 0.0) {
            assert_abs_diff_eq!(row.ratio, 2f64.sqrt(), epsilon = 1e-9);
        }
        let rows = correlate_rate(&tr, &[], &Alpha::ratio(1, 2));
        assert!(rows.iter().all(|r| r.dist == 1.0 && r.empty_zero_set));
    }

    #[test]
    fn trace_csv_layout() {
        let tr = extragradient(&shifted_orthant(), &[1.0, 0.0], None, 10).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,x1,x2,psi,natural_residual"));
        assert_eq!(lines.next(), Some("0,1.0,0.0,0.0,0.0"));
    }
}
