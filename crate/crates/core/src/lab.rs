//! Empirical checks of error bounds and gradient inequalities for the gap
//! function on finite point clouds.
//!
//! Every comparison of the form `c·dist ≤ ψ^α` is carried out on logarithms,
//! since the exponents of interest can be far below machine epsilon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exponent::Alpha;
use crate::feasible::BoxRegion;
use crate::gap::{dist, ViInstance};
use crate::report::{csv_header, fmt_f64};
use crate::solver::{extragradient, gap_descent, DescentParams};

const DRAW_BUDGET_FACTOR: usize = 100;
/// Minimum run of strictly growing ratios that marks a sequence as escaping.
const ESCAPE_MIN_RUN: usize = 5;
const ESCAPE_MIN_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CloudKind {
    /// Points drawn from a compact box.
    Compact { region: BoxRegion },
    /// An ordered sequence, typically escaping to infinity.
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCloud {
    pub kind: CloudKind,
    pub points: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

impl SampleCloud {
    pub fn sequence(points: Vec<Vec<f64>>) -> Self {
        Self {
            kind: CloudKind::Sequence,
            points,
            seed: None,
        }
    }

    pub fn compact(region: BoxRegion, points: Vec<Vec<f64>>) -> Self {
        Self {
            kind: CloudKind::Compact { region },
            points,
            seed: None,
        }
    }

    /// Keeps the points within `radius` of `center`.
    pub fn restrict_to_ball(mut self, center: &[f64], radius: f64) -> Self {
        self.points.retain(|p| dist(p, center) <= radius);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform draws from `region`, kept when feasible. For polyhedral sets an
/// infeasible draw is projected and kept if the projection stays in the box.
pub fn sample_cloud(inst: &ViInstance, region: &BoxRegion, count: usize, seed: u64) -> Result<SampleCloud> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    check_dim(inst.dim(), region.dim())?;
    let tol = inst.tolerances();
    let omega = inst.omega();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = DRAW_BUDGET_FACTOR * count;
    let mut points = Vec::with_capacity(count);
    let mut draws = 0;
    while points.len() < count && draws < budget {
        draws += 1;
        let x: Vec<f64> = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l })
            .collect();
        if omega.contains(&x, tol.active_tol)? {
            points.push(x);
        } else if omega.is_polyhedral() {
            match omega.project_with(&x, tol.proj_tol) {
                Ok(p) if region.contains(&p, tol.active_tol) => points.push(p),
                Ok(_) => {}
                Err(Error::EmptySet) => break,
                Err(e) => return Err(e),
            }
        }
    }
    if points.len() < count {
        return Err(Error::EmptyIntersection {
            draws,
            accepted: points.len(),
            requested: count,
        });
    }
    Ok(SampleCloud {
        kind: CloudKind::Compact { region: region.clone() },
        points,
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSetEstimate {
    pub points: Vec<Vec<f64>>,
    pub psi_threshold: f64,
}

impl ZeroSetEstimate {
    pub fn new(points: Vec<Vec<f64>>, psi_threshold: f64) -> Self {
        Self { points, psi_threshold }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance to the nearest stored point, or 1 for an empty estimate.
    pub fn distance(&self, x: &[f64]) -> f64 {
        if self.points.is_empty() {
            return 1.0;
        }
        self.points.iter().map(|z| dist(x, z)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroSetConfig {
    pub starts: usize,
    pub seed: u64,
    /// Extragradient iterations per start.
    pub max_iter: usize,
    /// Descent iterations used to polish each candidate.
    pub polish_iter: usize,
}

impl Default for ZeroSetConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0,
            max_iter: 5_000,
            polish_iter: 200,
        }
    }
}

/// Multistart search for zeros of `ψ`: extragradient from seeded starts in
/// `region` (plus its centre), polished by descent on `ψ`.
pub fn estimate_zero_set(inst: &ViInstance, region: &BoxRegion, config: &ZeroSetConfig) -> Result<ZeroSetEstimate> {
    check_dim(inst.dim(), region.dim())?;
    let omega = inst.omega();
    if !omega.is_polyhedral() {
        return Err(Error::UnsupportedSet(
            "zero-set estimation runs projection solvers and needs a polyhedral feasible set".into(),
        ));
    }
    let tol = *inst.tolerances();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let center: Vec<f64> = region.lo.iter().zip(&region.hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut starts = vec![center];
    for _ in 0..config.starts {
        starts.push(
            region
                .lo
                .iter()
                .zip(&region.hi)
                .map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l })
                .collect(),
        );
    }
    let starts = starts
        .iter()
        .map(|s| omega.project_with(s, tol.proj_tol))
        .collect::<Result<Vec<_>>>()?;

    let mut polish_tol = tol;
    polish_tol.solve_tol = (tol.solve_tol * 1e-4).max(f64::MIN_POSITIVE);
    let polisher = inst.clone().with_tolerances(polish_tol)?;
    let params = DescentParams {
        max_iter: config.polish_iter,
        ..DescentParams::default()
    };
    let max_iter = config.max_iter;
    let candidates = inst.exec().map(&starts, |x0| -> Result<Option<(f64, Vec<f64>)>> {
        let coarse = extragradient(inst, x0, None, max_iter)?;
        let last = coarse.last();
        let from = if last.psi.is_finite() { last.x.clone() } else { x0.clone() };
        let fine = gap_descent(&polisher, &from, &params)?;
        let end = fine.last();
        Ok((end.psi <= tol.psi_threshold).then(|| (end.psi, end.x.clone())))
    });
    let mut found: Vec<(f64, Vec<f64>)> = candidates.into_iter().filter_map(|c| c.transpose()).collect::<Result<_>>()?;
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (_, p) in found {
        if points.iter().all(|q| dist(q, &p) >= tol.dedup_tol) {
            points.push(p);
        }
    }
    Ok(ZeroSetEstimate::new(points, tol.psi_threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub x: Vec<f64>,
    pub psi: f64,
    pub dist: f64,
    /// Stationarity residual, when it could be computed.
    pub residual: Option<f64>,
    /// Logarithm of the largest constant `c` this point allows; NaN when the
    /// point carries no information.
    pub log_ratio: f64,
    /// MFCQ verdict at `x`, recorded by the gradient-inequality check only.
    pub mfcq: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub alpha_used: Alpha,
    pub c_star: Option<f64>,
    pub fitted_alpha: Option<f64>,
    pub fitted_c: Option<f64>,
    pub verdict: Verdict,
    pub empty_zero_set: bool,
    pub warnings: Vec<String>,
    /// Sorted by `ψ`.
    pub rows: Vec<BoundRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub alpha: Alpha,
    pub c_star: Option<f64>,
    pub fitted_alpha: Option<f64>,
    pub fitted_c: Option<f64>,
    pub verdict: Verdict,
    pub points: usize,
    pub empty_zero_set: bool,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn summary(&self) -> BoundSummary {
        BoundSummary {
            alpha: self.alpha_used.clone(),
            c_star: self.c_star,
            fitted_alpha: self.fitted_alpha,
            fitted_c: self.fitted_c,
            verdict: self.verdict,
            points: self.rows.len(),
            empty_zero_set: self.empty_zero_set,
            warnings: self.warnings.clone(),
        }
    }

    /// `x1..xn, psi, dist, residual, log_ratio`; a missing residual is left blank.
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.x.len());
        let mut out = csv_header(n, &["psi", "dist", "residual", "log_ratio"]);
        for row in &self.rows {
            let mut fields: Vec<String> = row.x.iter().map(|v| fmt_f64(*v)).collect();
            fields.push(fmt_f64(row.psi));
            fields.push(fmt_f64(row.dist));
            fields.push(row.residual.map(fmt_f64).unwrap_or_default());
            fields.push(fmt_f64(row.log_ratio));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Fits `ln dist = ln(1/c) + α ln ψ` over rows with `ψ > psi_threshold`
/// and `dist > 0`. Returns `(α, c)`.
///
/// The least-squares regression runs `ln ψ` on `ln dist` and inverts the
/// slope. At a fixed distance `ψ` scatters with the direction of approach,
/// and regressing the other way would bias `α` toward zero.
pub fn fit_exponent(rows: &[BoundRow], psi_threshold: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.psi > psi_threshold && r.dist > 0.0 && r.dist.is_finite())
        .map(|r| (r.dist.ln(), r.psi.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Degenerate(format!("{} usable points, need at least 2", pts.len())));
    }
    let spread = |k: usize| {
        let vals = pts.iter().map(|p| if k == 0 { p.0 } else { p.1 });
        vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
    };
    let m = pts.len() as f64;
    let md = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mp = pts.iter().map(|p| p.1).sum::<f64>() / m;
    if spread(1) <= 1e-12 * (1.0 + mp.abs()) {
        return Err(Error::Degenerate("all gap values coincide".into()));
    }
    if spread(0) <= 1e-12 * (1.0 + md.abs()) {
        return Err(Error::Degenerate("all distances coincide".into()));
    }
    let sdd: f64 = pts.iter().map(|p| (p.0 - md).powi(2)).sum();
    let sdp: f64 = pts.iter().map(|p| (p.0 - md) * (p.1 - mp)).sum();
    let slope = sdp / sdd;
    if slope.abs() <= f64::EPSILON {
        return Err(Error::Degenerate("gap values do not vary with distance".into()));
    }
    let intercept = mp - slope * md;
    let alpha = 1.0 / slope;
    Ok((alpha, (intercept * alpha).exp()))
}

/// True when the tail of `values` rises strictly for at least
/// [`ESCAPE_MIN_RUN`] entries and by a factor of [`ESCAPE_MIN_GROWTH`].
fn escapes(log_values: &[f64]) -> bool {
    let Some(&last) = log_values.last() else {
        return false;
    };
    let mut start = log_values.len() - 1;
    while start > 0 && log_values[start - 1] < log_values[start] {
        start -= 1;
    }
    log_values.len() - start >= ESCAPE_MIN_RUN && last - log_values[start] >= ESCAPE_MIN_GROWTH.ln()
}

fn assemble(
    inst: &ViInstance,
    alpha: &Alpha,
    kind: &CloudKind,
    mut rows: Vec<BoundRow>,
    empty_zero_set: bool,
    mut warnings: Vec<String>,
    fit: bool,
) -> BoundReport {
    let tol = inst.tolerances();
    let informative: Vec<f64> = rows.iter().map(|r| r.log_ratio).filter(|v| !v.is_nan()).collect();
    let (c_star, verdict) = if informative.is_empty() {
        (None, Verdict::Inconclusive)
    } else {
        let log_c = informative.iter().copied().fold(f64::INFINITY, f64::min);
        let c = log_c.exp();
        let escaping = *kind == CloudKind::Sequence
            && escapes(&informative.iter().map(|v| -v).collect::<Vec<_>>());
        if escaping {
            warnings.push("ratio dist/psi^alpha grows without bound along the sequence".into());
        }
        let verdict = if c > tol.c_floor && !escaping {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        (Some(c), verdict)
    };
    let (fitted_alpha, fitted_c) = if fit {
        match fit_exponent(&rows, tol.psi_threshold) {
            Ok((a, c)) => (Some(a), Some(c)),
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };
    rows.sort_by(|a, b| a.psi.total_cmp(&b.psi));
    BoundReport {
        alpha_used: alpha.clone(),
        c_star,
        fitted_alpha,
        fitted_c,
        verdict,
        empty_zero_set,
        warnings,
        rows,
    }
}

/// Checks `c·dist(x, Z) ≤ ψ(x)^α` over the cloud and reports the largest
/// admissible `c`. Sequence clouds also fail when the ratio escapes.
pub fn verify_error_bound(
    inst: &ViInstance,
    cloud: &SampleCloud,
    zero_set: &ZeroSetEstimate,
    alpha: &Alpha,
) -> Result<BoundReport> {
    let tol = *inst.tolerances();
    for p in &cloud.points {
        check_dim(inst.dim(), p.len())?;
    }
    let rows = inst.exec().map(&cloud.points, |x| -> Result<BoundRow> {
        let psi = inst.psi(x)?;
        let d = zero_set.distance(x);
        let residual = inst.stationarity_residual(x).ok().map(|r| r.0);
        let log_ratio = if psi > tol.psi_threshold {
            alpha.scale(psi.ln()) - d.ln()
        } else {
            f64::NAN
        };
        Ok(BoundRow {
            x: x.clone(),
            psi,
            dist: d,
            residual,
            log_ratio,
            mfcq: None,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if zero_set.is_empty() {
        warnings.push("zero set estimate is empty; distances set to 1".into());
    }
    Ok(assemble(inst, alpha, &cloud.kind, rows, zero_set.is_empty(), warnings, true))
}

/// Checks `c·|ψ(x) − ψ(x̄)|^{1−α} ≤ dist(0, ∂ψ(x) + N(Ω, x))` over a cloud
/// inside the ball of radius `epsilon` around `xbar`. The `dist` column
/// holds `‖x − x̄‖`.
pub fn verify_lojasiewicz(
    inst: &ViInstance,
    xbar: &[f64],
    epsilon: f64,
    cloud: &SampleCloud,
    alpha: &Alpha,
) -> Result<BoundReport> {
    check_dim(inst.dim(), xbar.len())?;
    let tol = *inst.tolerances();
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !inst.omega().contains(xbar, tol.active_tol)? {
        return Err(Error::Infeasible(format!("reference point {xbar:?} is outside the feasible set")));
    }
    for p in &cloud.points {
        check_dim(inst.dim(), p.len())?;
        if dist(p, xbar) > epsilon * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "cloud point {p:?} lies outside the ball of radius {epsilon}"
            )));
        }
    }
    let psi_bar = inst.psi(xbar)?;
    let rows = inst.exec().map(&cloud.points, |x| -> Result<BoundRow> {
        let psi = inst.psi(x)?;
        let (residual, _) = inst.stationarity_residual(x)?;
        let mfcq = inst.omega().check_mfcq(x, &tol)?.holds;
        let gap = (psi - psi_bar).abs();
        let log_ratio = if gap > tol.psi_threshold {
            let ln_gap = gap.ln();
            residual.ln() - (ln_gap - alpha.scale(ln_gap))
        } else {
            f64::NAN
        };
        Ok(BoundRow {
            x: x.clone(),
            psi,
            dist: dist(x, xbar),
            residual: Some(residual),
            log_ratio,
            mfcq: Some(mfcq),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let flagged = rows.iter().filter(|r| r.mfcq == Some(false)).count();
    let mut warnings = Vec::new();
    if flagged > 0 {
        warnings.push(format!("MFCQ fails at {flagged} sampled point(s)"));
    }
    Ok(assemble(inst, alpha, &cloud.kind, rows, false, warnings, false))
}
