//! The constraint set `Ω = {x : g_i(x) ≤ 0, h_j(x) = 0}`.
//!
//! Membership, active sets and MFCQ are available for any polynomial data.
//! Exact Euclidean projection is only offered when every constraint is
//! affine (a polyhedron, solved as a QP) or the inequalities are coordinate
//! bounds (clamping). Anything else is rejected with
//! [`Error::UnsupportedSet`].

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::Polynomial;
use crate::qp;
use crate::tol::Tolerances;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidInput("box needs finite bounds with lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `center ± radius` in every coordinate.
    pub fn around(center: &[f64], radius: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone)]
enum Structure {
    /// Coordinate bounds only (possibly infinite).
    Bounds { lo: Vec<f64>, hi: Vec<f64> },
    /// All constraints affine: `a·x ≤ b`, `e·x = f`.
    Polyhedral {
        ineqs: Vec<(Vec<f64>, f64)>,
        eqs: Vec<(Vec<f64>, f64)>,
    },
    General,
}

fn classify(n: usize, ineqs: &[Polynomial], eqs: &[Polynomial]) -> Structure {
    let lin_ineqs: Option<Vec<_>> = ineqs.iter().map(|g| g.as_affine().map(|(a, c)| (a, -c))).collect();
    let lin_eqs: Option<Vec<_>> = eqs.iter().map(|h| h.as_affine().map(|(a, c)| (a, -c))).collect();
    let (Some(li), Some(le)) = (lin_ineqs, lin_eqs) else {
        return Structure::General;
    };
    if le.is_empty() {
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        let mut bounds_only = true;
        for (a, b) in &li {
            let nz: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
            if nz.len() != 1 {
                bounds_only = false;
                break;
            }
            let i = nz[0];
            let bound = b / a[i];
            if a[i] > 0.0 {
                hi[i] = hi[i].min(bound);
            } else {
                lo[i] = lo[i].max(bound);
            }
        }
        if bounds_only && lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            return Structure::Bounds { lo, hi };
        }
    }
    Structure::Polyhedral { ineqs: li, eqs: le }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFeasibleSet {
    #[serde(default)]
    pub ineqs: Vec<Polynomial>,
    #[serde(default)]
    pub eqs: Vec<Polynomial>,
    #[serde(default)]
    pub convex: bool,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<BoxRegion>,
}

#[derive(Debug, Clone)]
pub struct FeasibleSet {
    n: usize,
    ineqs: Vec<Polynomial>,
    eqs: Vec<Polynomial>,
    declared_convex: bool,
    bounding_box: Option<BoxRegion>,
    structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfcqReport {
    pub point: Vec<f64>,
    pub eq_gradients_rank: usize,
    pub active_indices: Vec<usize>,
    pub direction: Option<Vec<f64>>,
    /// Optimal LP margin `t`; `None` when no inequality is active.
    pub margin: Option<f64>,
    pub holds: bool,
}

/// `Σ μ_i ∇g_i(x) + Σ κ_j ∇h_j(x)` with `μ ≥ 0` supported on the active set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalConeElement {
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub vector_value: Vec<f64>,
}

impl FeasibleSet {
    pub fn new(
        n: usize,
        ineqs: Vec<Polynomial>,
        eqs: Vec<Polynomial>,
        declared_convex: bool,
        bounding_box: Option<BoxRegion>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for p in ineqs.iter().chain(&eqs) {
            if p.n_vars() != n {
                return Err(Error::InvalidInput(format!(
                    "constraint has {} variables, expected {n}",
                    p.n_vars()
                )));
            }
        }
        if let Some(b) = &bounding_box {
            check_dim(n, b.dim())?;
        }
        let structure = classify(n, &ineqs, &eqs);
        if declared_convex && matches!(structure, Structure::General) {
            return Err(Error::UnsupportedSet(
                "declared convex but not affine-polyhedral; exact projection is unavailable".into(),
            ));
        }
        Ok(Self {
            n,
            ineqs,
            eqs,
            declared_convex,
            bounding_box,
            structure,
        })
    }

    pub fn whole_space(n: usize) -> Self {
        Self::new(n, vec![], vec![], true, None).expect("whole space is valid")
    }

    /// `{x ≥ 0}` written as `g_i = −x_i ≤ 0`.
    pub fn nonnegative_orthant(n: usize) -> Self {
        let ineqs = (0..n).map(|i| Polynomial::var(n, i).scale(-1.0)).collect();
        Self::new(n, ineqs, vec![], true, None).expect("orthant is valid")
    }

    pub fn from_box(b: &BoxRegion) -> Self {
        let n = b.dim();
        let mut ineqs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut a = vec![0.0; n];
            a[i] = -1.0;
            ineqs.push(Polynomial::affine(&a, b.lo[i]));
            a[i] = 1.0;
            ineqs.push(Polynomial::affine(&a, -b.hi[i]));
        }
        Self::new(n, ineqs, vec![], true, Some(b.clone())).expect("box is valid")
    }

    pub fn from_raw(n: usize, raw: RawFeasibleSet) -> Result<Self> {
        Self::new(n, raw.ineqs, raw.eqs, raw.convex, raw.bounding_box)
    }

    pub fn to_raw(&self) -> RawFeasibleSet {
        RawFeasibleSet {
            ineqs: self.ineqs.clone(),
            eqs: self.eqs.clone(),
            convex: self.declared_convex,
            bounding_box: self.bounding_box.clone(),
        }
    }

    pub fn with_bounding_box(mut self, b: BoxRegion) -> Result<Self> {
        check_dim(self.n, b.dim())?;
        self.bounding_box = Some(b);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ineqs(&self) -> &[Polynomial] {
        &self.ineqs
    }

    pub fn eqs(&self) -> &[Polynomial] {
        &self.eqs
    }

    pub fn declared_convex(&self) -> bool {
        self.declared_convex
    }

    pub fn bounding_box(&self) -> Option<&BoxRegion> {
        self.bounding_box.as_ref()
    }

    /// Exact projection is available (affine constraints or coordinate bounds).
    pub fn is_polyhedral(&self) -> bool {
        !matches!(self.structure, Structure::General)
    }

    pub fn max_degree(&self) -> u32 {
        self.ineqs.iter().chain(&self.eqs).map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.n, x.len())?;
        Ok(self.ineqs.iter().all(|g| g.eval_unchecked(x) <= tol)
            && self.eqs.iter().all(|h| h.eval_unchecked(x).abs() <= tol))
    }

    /// Sum of squared constraint violations.
    pub(crate) fn violation_sq(&self, x: &[f64]) -> f64 {
        let gi: f64 = self.ineqs.iter().map(|g| g.eval_unchecked(x).max(0.0).powi(2)).sum();
        let hj: f64 = self.eqs.iter().map(|h| h.eval_unchecked(x).powi(2)).sum();
        gi + hj
    }

    fn require_feasible(&self, x: &[f64], tol: f64) -> Result<()> {
        if self.contains(x, tol)? {
            Ok(())
        } else {
            Err(Error::Infeasible(format!("{x:?} violates the constraints beyond {tol:e}")))
        }
    }

    pub fn active_set(&self, x: &[f64], active_tol: f64) -> Result<Vec<usize>> {
        self.require_feasible(x, active_tol)?;
        Ok(self.active_unchecked(x, active_tol))
    }

    fn active_unchecked(&self, x: &[f64], active_tol: f64) -> Vec<usize> {
        self.ineqs
            .iter()
            .enumerate()
            .filter(|(_, g)| g.eval_unchecked(x).abs() <= active_tol)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check_mfcq(&self, x: &[f64], tol: &Tolerances) -> Result<MfcqReport> {
        let active = self.active_set(x, tol.active_tol)?;
        let n = self.n;
        let unit = |v: Vec<f64>| {
            let s = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if s > 0.0 {
                v.into_iter().map(|a| a / s).collect()
            } else {
                v
            }
        };
        let eq_grads: Vec<Vec<f64>> = self.eqs.iter().map(|h| unit(h.grad_unchecked(x))).collect();
        let rank = if eq_grads.is_empty() {
            0
        } else {
            let m = DMatrix::from_fn(eq_grads.len(), n, |i, j| eq_grads[i][j]);
            qp::rank(&m, tol.rank_tol)
        };
        let rank_ok = rank == self.eqs.len();

        if active.is_empty() {
            return Ok(MfcqReport {
                point: x.to_vec(),
                eq_gradients_rank: rank,
                active_indices: active,
                direction: rank_ok.then(|| vec![0.0; n]),
                margin: None,
                holds: rank_ok,
            });
        }

        let act_grads: Vec<Vec<f64>> = active.iter().map(|&i| unit(self.ineqs[i].grad_unchecked(x))).collect();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let v: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
        let t = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
        for g in &act_grads {
            let mut expr: Vec<_> = v.iter().zip(g).map(|(&vi, &gi)| (vi, gi)).collect();
            expr.push((t, 1.0));
            lp.add_constraint(expr, ComparisonOp::Le, 0.0);
        }
        for h in &eq_grads {
            let expr: Vec<_> = v.iter().zip(h).map(|(&vi, &hi)| (vi, hi)).collect();
            lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::NonConvergence(format!("MFCQ direction LP failed: {e}")))?;
        let margin = sol.objective();
        let dir: Vec<f64> = v.iter().map(|&vi| sol[vi]).collect();
        let strict = margin > tol.strict_tol;
        Ok(MfcqReport {
            point: x.to_vec(),
            eq_gradients_rank: rank,
            active_indices: active,
            direction: strict.then_some(dir),
            margin: Some(margin),
            holds: strict && rank_ok,
        })
    }

    /// Euclidean projection onto `Ω`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.project_with(z, Tolerances::default().proj_tol)
    }

    pub fn project_with(&self, z: &[f64], proj_tol: f64) -> Result<Vec<f64>> {
        check_dim(self.n, z.len())?;
        match &self.structure {
            Structure::Bounds { lo, hi } => Ok(z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.max(*l).min(*h))
                .collect()),
            Structure::Polyhedral { ineqs, eqs } => {
                let p = qp::project_polyhedron(z, ineqs, eqs)?;
                let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if p.kkt_residual > proj_tol * scale {
                    return Err(Error::NonConvergence(format!(
                        "projection KKT residual {:.3e} exceeds {proj_tol:e}",
                        p.kkt_residual
                    )));
                }
                Ok(p.y)
            }
            Structure::General => Err(Error::UnsupportedSet(
                "projection needs affine constraints or coordinate bounds".into(),
            )),
        }
    }

    /// `min ‖v0 + w‖` over `w ∈ N(Ω, x)` with its minimizing element.
    pub fn min_norm_in_cone_shift(
        &self,
        x: &[f64],
        v0: &[f64],
        active_tol: f64,
    ) -> Result<(f64, NormalConeElement)> {
        check_dim(self.n, v0.len())?;
        let active = self.active_set(x, active_tol)?;
        let (nonneg, free) = self.cone_generators(x, &active);
        let sol = qp::min_norm_in_cone(v0, &nonneg, &free)?;
        let elem = self.cone_element(&active, &sol.mu, &sol.kappa, &nonneg, &free);
        Ok((sol.norm, elem))
    }

    pub(crate) fn cone_generators(&self, x: &[f64], active: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nonneg = active.iter().map(|&i| self.ineqs[i].grad_unchecked(x)).collect();
        let free = self.eqs.iter().map(|h| h.grad_unchecked(x)).collect();
        (nonneg, free)
    }

    pub(crate) fn cone_element(
        &self,
        active: &[usize],
        mu_active: &[f64],
        kappa: &[f64],
        nonneg: &[Vec<f64>],
        free: &[Vec<f64>],
    ) -> NormalConeElement {
        let mut mu = vec![0.0; self.ineqs.len()];
        let mut value = vec![0.0; self.n];
        for ((&i, &m), g) in active.iter().zip(mu_active).zip(nonneg) {
            mu[i] = m;
            for (v, gi) in value.iter_mut().zip(g) {
                *v += m * gi;
            }
        }
        for (&k, h) in kappa.iter().zip(free) {
            for (v, hi) in value.iter_mut().zip(h) {
                *v += k * hi;
            }
        }
        NormalConeElement {
            mu,
            kappa: kappa.to_vec(),
            vector_value: value,
        }
    }
}
