//! The regularized gap function
//!
//! ```text
//! φ(x, y) = ⟨F(x), x − y⟩ − (ρ/2)‖x − y‖²,     ψ(x) = max_{y ∈ Ω} φ(x, y)
//! ```
//!
//! together with its argmax set, the generators of its Clarke
//! subdifferential `co {∇_x φ(x, y) : y ∈ Ω(x)}`, and the stationarity
//! residual `inf ‖w‖` over `w ∈ ∂°ψ(x) + N(Ω, x)`.
//!
//! For polyhedral `Ω` the argmax is the single point
//! `Π_Ω(x − F(x)/ρ)`. Otherwise it is located by a deterministic grid plus
//! augmented-Lagrangian multistart over the set's bounding box, and the
//! returned generators are a finite sample of the true (possibly infinite)
//! argmax; the residual is then an upper bound on the true infimum.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::exec::Exec;
use crate::feasible::{BoxRegion, FeasibleSet, RawFeasibleSet};
use crate::poly::PolynomialMap;
use crate::qp;
use crate::tol::Tolerances;

/// Seeds per axis for the nonconvex argmax search.
pub const GRID_PER_AXIS: usize = 32;
/// Seeds that get a local polish.
const POLISHED_SEEDS: usize = 24;
const RESIDUAL_QP_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct ViInstance {
    f: PolynomialMap,
    omega: FeasibleSet,
    rho: f64,
    tol: Tolerances,
    exec: Exec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(rename = "F")]
    f: PolynomialMap,
    #[serde(default)]
    omega: RawFeasibleSet,
    #[serde(default = "default_rho")]
    rho: f64,
}

fn default_rho() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArgmaxStrategy {
    /// Projection when `Ω` is polyhedral, multistart otherwise.
    #[default]
    Auto,
    Projection,
    Multistart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEvaluation {
    pub x: Vec<f64>,
    pub psi: f64,
    pub argmax_points: Vec<Vec<f64>>,
    pub clarke_generators: Vec<Vec<f64>>,
    /// `None` when `x` is outside `Ω`.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCertificate {
    /// Barycentric weights over the Clarke generators.
    pub lambda: Vec<f64>,
    /// One entry per inequality; zero off the active set.
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub w: Vec<f64>,
    pub norm: f64,
    pub active: Vec<usize>,
    pub kkt_residual: f64,
}

impl ViInstance {
    pub fn new(f: PolynomialMap, omega: FeasibleSet, rho: f64) -> Result<Self> {
        if f.n_out() != f.n_in() {
            return Err(Error::InvalidInput(format!(
                "F must map R^n to R^n, got {} outputs for {} inputs",
                f.n_out(),
                f.n_in()
            )));
        }
        check_dim(f.n_in(), omega.dim())?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            f,
            omega,
            rho,
            tol: Tolerances::default(),
            exec: Exec::default(),
        })
    }

    /// Parses the instance JSON; additionally requires `deg F ≥ 1`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let actual_degree = raw.f.components().iter().map(|p| p.degree()).max().unwrap_or(0);
        if actual_degree < 1 {
            return Err(Error::InvalidInput("F must have degree at least 1".into()));
        }
        let n = raw.f.n_in();
        let omega = FeasibleSet::from_raw(n, raw.omega)?;
        Self::new(raw.f, omega, raw.rho)
    }

    pub fn to_json(&self) -> String {
        let raw = RawInstance {
            f: self.f.clone(),
            omega: self.omega.to_raw(),
            rho: self.rho,
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        self.tol = tol;
        Ok(self)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_omega(mut self, omega: FeasibleSet) -> Result<Self> {
        check_dim(self.dim(), omega.dim())?;
        self.omega = omega;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.f.n_in()
    }

    pub fn map(&self) -> &PolynomialMap {
        &self.f
    }

    pub fn omega(&self) -> &FeasibleSet {
        &self.omega
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Largest degree among `F`, the `g_i` and the `h_j` (at least 1).
    pub fn degree(&self) -> u32 {
        self.f.map_degree().max(self.omega.max_degree()).max(1)
    }

    pub fn phi(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        Ok(phi_with(&self.f.eval_unchecked(x), x, y, self.rho))
    }

    /// `∇_x φ(x, y) = F(x) + J_F(x)ᵀ(x − y) − ρ(x − y)`.
    pub fn grad_x_phi(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        let fx = self.f.eval_unchecked(x);
        let jac = self.f.jacobian_unchecked(x);
        Ok(self.grad_x_phi_with(&fx, &jac, x, y))
    }

    fn grad_x_phi_with(&self, fx: &[f64], jac: &[Vec<f64>], x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        (0..n)
            .map(|i| {
                let jt: f64 = (0..n).map(|k| jac[k][i] * diff[k]).sum();
                fx[i] + jt - self.rho * diff[i]
            })
            .collect()
    }

    fn resolve(&self, strategy: ArgmaxStrategy) -> ArgmaxStrategy {
        match strategy {
            ArgmaxStrategy::Auto if self.omega.is_polyhedral() => ArgmaxStrategy::Projection,
            ArgmaxStrategy::Auto => ArgmaxStrategy::Multistart,
            s => s,
        }
    }

    pub fn argmax_set(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.argmax_set_with(x, ArgmaxStrategy::Auto)
    }

    pub fn argmax_set_with(&self, x: &[f64], strategy: ArgmaxStrategy) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim(), x.len())?;
        let fx = self.f.eval_unchecked(x);
        match self.resolve(strategy) {
            ArgmaxStrategy::Projection => {
                let target: Vec<f64> = x.iter().zip(&fx).map(|(xi, fi)| xi - fi / self.rho).collect();
                let y = self.omega.project_with(&target, self.tol.proj_tol)?;
                // y = x is a candidate whenever x is feasible; rounding in the
                // projection can otherwise leave φ(x, y) a few ulps below 0. Feasibility
                // uses the active slack so projected points count as feasible
                if phi_with(&fx, x, &y, self.rho) < 0.0 && self.omega.contains(x, self.tol.active_tol)? {
                    return Ok(vec![x.to_vec()]);
                }
                Ok(vec![y])
            }
            _ => self.argmax_multistart(x, &fx),
        }
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64> {
        self.psi_with(x, ArgmaxStrategy::Auto)
    }

    pub fn psi_with(&self, x: &[f64], strategy: ArgmaxStrategy) -> Result<f64> {
        let ys = self.argmax_set_with(x, strategy)?;
        let fx = self.f.eval_unchecked(x);
        Ok(ys
            .iter()
            .map(|y| phi_with(&fx, x, y, self.rho))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `ψ(x)` and `∇ψ(x)` for polyhedral `Ω`, where the argmax is unique.
    pub fn psi_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ys = self.argmax_set_with(x, ArgmaxStrategy::Projection)?;
        let fx = self.f.eval_unchecked(x);
        let jac = self.f.jacobian_unchecked(x);
        Ok((phi_with(&fx, x, &ys[0], self.rho), self.grad_x_phi_with(&fx, &jac, x, &ys[0])))
    }

    pub fn clarke_generators(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let ys = self.argmax_set(x)?;
        Ok(self.generators_from(x, &ys))
    }

    fn generators_from(&self, x: &[f64], ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let fx = self.f.eval_unchecked(x);
        let jac = self.f.jacobian_unchecked(x);
        ys.iter().map(|y| self.grad_x_phi_with(&fx, &jac, x, y)).collect()
    }

    pub fn stationarity_residual(&self, x: &[f64]) -> Result<(f64, ResidualCertificate)> {
        let gens = self.clarke_generators(x)?;
        self.residual_from_generators(x, &gens)
    }

    fn residual_from_generators(&self, x: &[f64], gens: &[Vec<f64>]) -> Result<(f64, ResidualCertificate)> {
        let active = self.omega.active_set(x, self.tol.active_tol)?;
        let (nonneg, free) = self.omega.cone_generators(x, &active);
        let sol = qp::min_norm_hull_plus_cone(gens, &nonneg, &free, self.tol.qp_tol, RESIDUAL_QP_MAX_ITER)?;
        let cone = self.omega.cone_element(&active, &sol.mu, &sol.kappa, &nonneg, &free);
        let cert = ResidualCertificate {
            lambda: sol.lambda,
            mu: cone.mu,
            kappa: cone.kappa,
            w: sol.w,
            norm: sol.norm,
            active,
            kkt_residual: sol.kkt_residual,
        };
        Ok((sol.norm, cert))
    }

    /// ψ, the argmax sample, the Clarke generators and (for `x ∈ Ω`) the residual.
    pub fn evaluate(&self, x: &[f64]) -> Result<GapEvaluation> {
        let ys = self.argmax_set(x)?;
        let fx = self.f.eval_unchecked(x);
        let psi = ys
            .iter()
            .map(|y| phi_with(&fx, x, y, self.rho))
            .fold(f64::NEG_INFINITY, f64::max);
        let gens = self.generators_from(x, &ys);
        let residual = if self.omega.contains(x, self.tol.active_tol)? {
            Some(self.residual_from_generators(x, &gens)?.0)
        } else {
            None
        };
        Ok(GapEvaluation {
            x: x.to_vec(),
            psi,
            argmax_points: ys,
            clarke_generators: gens,
            residual,
        })
    }

    fn argmax_multistart(&self, x: &[f64], fx: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        let bbox = self.omega.bounding_box().ok_or_else(|| {
            Error::UnsupportedSet("nonpolyhedral feasible set needs a bounding box for the argmax search".into())
        })?;
        if n > 3 {
            return Err(Error::UnsupportedSet(format!(
                "multistart argmax is limited to n <= 3, got n = {n}"
            )));
        }
        let total = GRID_PER_AXIS.pow(n as u32);
        let grid_point = |idx: usize| -> Vec<f64> {
            let mut rem = idx;
            (0..n)
                .map(|i| {
                    let k = rem % GRID_PER_AXIS;
                    rem /= GRID_PER_AXIS;
                    bbox.lo[i] + (bbox.hi[i] - bbox.lo[i]) * k as f64 / (GRID_PER_AXIS - 1) as f64
                })
                .collect()
        };
        let merits = self.exec.map_range(total, |idx| {
            let y = grid_point(idx);
            phi_with(fx, x, &y, self.rho) - 1e4 * self.omega.violation_sq(&y)
        });
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| merits[b].total_cmp(&merits[a]).then(a.cmp(&b)));
        let cell: Vec<f64> = (0..n)
            .map(|i| (bbox.hi[i] - bbox.lo[i]) / (GRID_PER_AXIS - 1) as f64)
            .collect();
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        for &idx in &order {
            let y = grid_point(idx);
            let far = seeds.iter().all(|s| {
                s.iter()
                    .zip(&y)
                    .zip(&cell)
                    .any(|((a, b), c)| (a - b).abs() > 1.5 * c)
            });
            if far {
                seeds.push(y);
                if seeds.len() == POLISHED_SEEDS {
                    break;
                }
            }
        }
        let polished = self.exec.map(&seeds, |s| self.polish_argmax(x, fx, s, bbox));
        let mut cands: Vec<(f64, Vec<f64>)> = polished
            .into_iter()
            .chain(seeds.iter().cloned())
            .filter(|y| self.omega.contains(y, self.tol.active_tol).unwrap_or(false))
            .map(|y| (phi_with(fx, x, &y, self.rho), y))
            .collect();
        if cands.is_empty() {
            return Err(Error::Infeasible(
                "no feasible point found in the bounding box during the argmax search".into(),
            ));
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let best = cands[0].0;
        let mut reps: Vec<Vec<f64>> = Vec::new();
        for (v, y) in cands {
            if v < best - self.tol.cluster_tol {
                break;
            }
            if reps.iter().all(|r| dist(r, &y) >= self.tol.cluster_sep) {
                reps.push(y);
            }
        }
        Ok(reps)
    }

    /// Local maximization of `φ(x, ·)` over `Ω ∩ box` by an augmented Lagrangian
    /// with projected-gradient inner solves.
    fn polish_argmax(&self, x: &[f64], fx: &[f64], seed: &[f64], bbox: &BoxRegion) -> Vec<f64> {
        let ineqs = self.omega.ineqs();
        let eqs = self.omega.eqs();
        let rho = self.rho;
        let mut y = seed.to_vec();
        let mut mu = vec![0.0; ineqs.len()];
        let mut kappa = vec![0.0; eqs.len()];
        let mut pen = 10.0;
        let mut last_viol = f64::INFINITY;

        let lagr = |y: &[f64], mu: &[f64], kappa: &[f64], pen: f64| -> (f64, Vec<f64>) {
            let mut val = -phi_with(fx, x, y, rho);
            let mut grad: Vec<f64> = fx.iter().zip(y.iter().zip(x)).map(|(f, (yi, xi))| f + rho * (yi - xi)).collect();
            for (g, &m) in ineqs.iter().zip(mu) {
                let gv = g.eval_unchecked(y);
                let s = (m + pen * gv).max(0.0);
                val += (s * s - m * m) / (2.0 * pen);
                if s > 0.0 {
                    for (gr, d) in grad.iter_mut().zip(g.grad_unchecked(y)) {
                        *gr += s * d;
                    }
                }
            }
            for (h, &k) in eqs.iter().zip(kappa) {
                let hv = h.eval_unchecked(y);
                val += k * hv + 0.5 * pen * hv * hv;
                let s = k + pen * hv;
                for (gr, d) in grad.iter_mut().zip(h.grad_unchecked(y)) {
                    *gr += s * d;
                }
            }
            (val, grad)
        };

        for _outer in 0..40 {
            let mut step = 1.0 / (rho + pen);
            let (mut val, mut grad) = lagr(&y, &mu, &kappa, pen);
            for _inner in 0..400 {
                let mut accepted = false;
                for _ in 0..50 {
                    let cand = bbox.clamp(&y.iter().zip(&grad).map(|(a, g)| a - step * g).collect::<Vec<_>>());
                    let (cv, cg) = lagr(&cand, &mu, &kappa, pen);
                    let decrease: f64 = grad.iter().zip(cand.iter().zip(&y)).map(|(g, (c, a))| g * (c - a)).sum();
                    if cv <= val + 1e-4 * decrease {
                        let moved = dist(&cand, &y);
                        y = cand;
                        val = cv;
                        grad = cg;
                        accepted = true;
                        step *= 2.0;
                        if moved <= 1e-14 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                            accepted = false;
                        }
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let mut viol = 0.0f64;
            for (g, m) in ineqs.iter().zip(mu.iter_mut()) {
                let gv = g.eval_unchecked(&y);
                viol = viol.max(gv.max(-*m / pen).abs());
                *m = (*m + pen * gv).max(0.0);
            }
            for (h, k) in eqs.iter().zip(kappa.iter_mut()) {
                let hv = h.eval_unchecked(&y);
                viol = viol.max(hv.abs());
                *k += pen * hv;
            }
            if viol <= 1e-12 {
                break;
            }
            if viol > 0.25 * last_viol {
                pen = (pen * 10.0).min(1e10);
            }
            last_viol = viol;
        }
        y
    }
}

pub(crate) fn phi_with(fx: &[f64], x: &[f64], y: &[f64], rho: f64) -> f64 {
    let mut inner = 0.0;
    let mut sq = 0.0;
    for ((f, xi), yi) in fx.iter().zip(x).zip(y) {
        let d = xi - yi;
        inner += f * d;
        sq += d * d;
    }
    inner - 0.5 * rho * sq
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}
