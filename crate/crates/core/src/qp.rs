//! Small dense quadratic programs used by the feasible-set and gap modules.
//!
//! * [`nnls`]: Lawson–Hanson nonnegative least squares.
//! * [`min_norm_in_cone`]: `min ‖v0 + G μ + H κ‖` over `μ ≥ 0`, `κ` free.
//! * [`project_polyhedron`]: Euclidean projection onto `{A y ≤ b, E y = f}`
//!   by the Goldfarb–Idnani dual active-set method with identity Hessian.
//! * [`min_norm_hull_plus_cone`]: `min ‖V λ + G μ + H κ‖` over the simplex
//!   for `λ`, `μ ≥ 0`, `κ` free, by restarted FISTA followed by an exact
//!   polish on the detected support.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn columns_to_matrix(n: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Least-squares solve through the SVD; returns the minimum-norm solution.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-13).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Numerical rank with threshold `rel_tol × σ_max`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthogonal projector onto the complement of `range(H)`.
fn complement_projector(n: usize, h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = DMatrix::identity(n, n);
    if h.ncols() == 0 {
        return p;
    }
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * smax {
            let col = u.column(k);
            p -= col * col.transpose();
        }
    }
    p
}

/// Lawson–Hanson NNLS: `min ‖A x − b‖` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return Ok(x);
    }
    let scale = a.norm() * (b.norm() + 1.0);
    let tol = 1e-14 * scale.max(1e-300);
    let mut passive = vec![false; n];
    let mut w = a.transpose() * (b - a * &x);
    let max_outer = 3 * n + 10;
    let mut outer = 0;
    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        outer += 1;
        if outer > max_outer {
            return Err(Error::NonConvergence("nnls exceeded its outer iteration budget".into()));
        }
        passive[j] = true;
        let mut inner = 0;
        loop {
            inner += 1;
            if inner > 3 * n + 10 {
                return Err(Error::NonConvergence("nnls inner loop did not settle".into()));
            }
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let s_p = lstsq(&sub, b);
            let mut s = DVector::zeros(n);
            for (pos, &k) in idx.iter().enumerate() {
                s[k] = s_p[pos];
            }
            if idx.iter().all(|&k| s[k] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &k in &idx {
                if s[k] <= 0.0 {
                    let denom = x[k] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            x = &x + (&s - &x) * alpha;
            for &k in &idx {
                if x[k] <= 1e-300 || (s[k] <= 0.0 && x[k] <= tol) {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = a.transpose() * (b - a * &x);
        // A column that immediately drops back out would be picked again forever.
        if !passive[j] {
            w[j] = 0.0;
            if (0..n).all(|k| passive[k] || w[k] <= tol) {
                break;
            }
        }
    }
    Ok(x)
}

/// Solution of `min ‖v0 + G μ + H κ‖`, `μ ≥ 0`.
#[derive(Debug, Clone)]
pub struct ConeShift {
    pub norm: f64,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn min_norm_in_cone(v0: &[f64], nonneg: &[Vec<f64>], free: &[Vec<f64>]) -> Result<ConeShift> {
    let n = v0.len();
    let v = DVector::from_column_slice(v0);
    let g = columns_to_matrix(n, nonneg);
    let h = columns_to_matrix(n, free);
    let p = complement_projector(n, &h);
    let mu = if nonneg.is_empty() {
        DVector::zeros(0)
    } else {
        nnls(&(&p * &g), &(-(&p * &v)))?
    };
    let partial = &v + &g * &mu;
    let kappa = if free.is_empty() {
        DVector::zeros(0)
    } else {
        -lstsq(&h, &partial)
    };
    let w = &partial + &h * &kappa;
    Ok(ConeShift {
        norm: w.norm(),
        mu: mu.iter().copied().collect(),
        kappa: kappa.iter().copied().collect(),
        w: w.iter().copied().collect(),
    })
}

/// Result of [`project_polyhedron`]. Multipliers satisfy
/// `y − z + Aᵀ ineq_mult + Eᵀ eq_mult = 0` with `ineq_mult ≥ 0`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub y: Vec<f64>,
    pub ineq_mult: Vec<f64>,
    pub eq_mult: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Ineq(usize),
    Eq(usize, f64),
}

/// Euclidean projection of `z` onto `{y : a_i·y ≤ b_i, e_j·y = f_j}`.
///
/// Rows are given as `(a_i, b_i)` pairs. Returns [`Error::EmptySet`] when
/// the dual becomes unbounded.
pub fn project_polyhedron(z: &[f64], ineqs: &[(Vec<f64>, f64)], eqs: &[(Vec<f64>, f64)]) -> Result<Projection> {
    let n = z.len();
    // Work with unit normals in the form  nrm·y ≥ c.
    let mut ineq_n = Vec::with_capacity(ineqs.len());
    let mut ineq_scale = Vec::with_capacity(ineqs.len());
    for (a, b) in ineqs {
        let s = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s == 0.0 {
            if *b < 0.0 {
                return Err(Error::EmptySet);
            }
            ineq_n.push(None);
        } else {
            let nrm = DVector::from_iterator(n, a.iter().map(|v| -v / s));
            ineq_n.push(Some((nrm, -b / s)));
        }
        ineq_scale.push(s);
    }
    let mut eq_n = Vec::with_capacity(eqs.len());
    let mut eq_scale = Vec::with_capacity(eqs.len());
    for (a, f) in eqs {
        let s = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s == 0.0 {
            if f.abs() > 0.0 {
                return Err(Error::EmptySet);
            }
            eq_n.push(None);
        } else {
            eq_n.push(Some((DVector::from_iterator(n, a.iter().map(|v| v / s)), f / s)));
        }
        eq_scale.push(s);
    }

    let z0 = DVector::from_column_slice(z);
    let feas_tol = 1e-13 * (1.0 + z0.amax());
    let mut y = z0.clone();
    let mut active: Vec<Kind> = Vec::new();
    let mut normals: Vec<DVector<f64>> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let budget = 20 * (ineqs.len() + eqs.len() + n) + 100;

    let normal_of = |k: Kind| -> (DVector<f64>, f64) {
        match k {
            Kind::Ineq(i) => ineq_n[i].clone().expect("nonzero row"),
            Kind::Eq(j, sign) => {
                let (v, c) = eq_n[j].clone().expect("nonzero row");
                (v * sign, c * sign)
            }
        }
    };

    let mut pending: Vec<Kind> = Vec::new();
    for (j, row) in eq_n.iter().enumerate() {
        if let Some((v, c)) = row {
            let s = v.dot(&y) - c;
            pending.push(Kind::Eq(j, if s > 0.0 { -1.0 } else { 1.0 }));
        }
    }
    pending.reverse();

    loop {
        let p = if let Some(k) = pending.pop() {
            k
        } else {
            let mut worst: Option<(usize, f64)> = None;
            for (i, row) in ineq_n.iter().enumerate() {
                if active.contains(&Kind::Ineq(i)) {
                    continue;
                }
                if let Some((v, c)) = row {
                    let s = v.dot(&y) - c;
                    if s < -feas_tol && worst.is_none_or(|(_, w)| s < w) {
                        worst = Some((i, s));
                    }
                }
            }
            match worst {
                Some((i, _)) => Kind::Ineq(i),
                None => break,
            }
        };
        let (np, cp) = normal_of(p);
        let is_eq = matches!(p, Kind::Eq(..));
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > budget {
                return Err(Error::NonConvergence("polyhedral projection exceeded its iteration budget".into()));
            }
            let sp = np.dot(&y) - cp;
            if (is_eq && sp.abs() <= feas_tol) || (!is_eq && sp >= -feas_tol) {
                if up > 0.0 || is_eq {
                    active.push(p);
                    normals.push(np.clone());
                    u.push(up);
                }
                break;
            }
            let (r, dir) = if normals.is_empty() {
                (DVector::zeros(0), np.clone())
            } else {
                let nmat = DMatrix::from_columns(&normals);
                let r = lstsq(&nmat, &np);
                let dir = &np - &nmat * &r;
                (r, dir)
            };
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (l, kind) in active.iter().enumerate() {
                if matches!(kind, Kind::Ineq(_)) && r[l] > 1e-14 {
                    let ratio = u[l] / r[l];
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(l);
                    }
                }
            }
            let dz = dir.dot(&np);
            let t2 = if dir.norm() > 1e-12 && dz > 0.0 { -sp / dz } else { f64::INFINITY };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::EmptySet);
            }
            for (l, ul) in u.iter_mut().enumerate() {
                *ul -= t * r[l];
            }
            up += t;
            if t2.is_finite() {
                y += &dir * t;
            }
            if t2 <= t1 {
                active.push(p);
                normals.push(np.clone());
                u.push(up);
                break;
            }
            let l = drop_at.expect("partial step has a blocking constraint");
            active.remove(l);
            normals.remove(l);
            u.remove(l);
        }
    }

    let mut ineq_mult = vec![0.0; ineqs.len()];
    let mut eq_mult = vec![0.0; eqs.len()];
    for (kind, &ul) in active.iter().zip(&u) {
        match *kind {
            // y − z = Σ u nrm with nrm = −a/s  ⇒  multiplier on a is u/s
            Kind::Ineq(i) => ineq_mult[i] = ul.max(0.0) / ineq_scale[i],
            Kind::Eq(j, sign) => eq_mult[j] = -sign * ul / eq_scale[j],
        }
    }
    let mut station = &y - &z0;
    for (i, (a, _)) in ineqs.iter().enumerate() {
        station += DVector::from_column_slice(a) * ineq_mult[i];
    }
    for (j, (e, _)) in eqs.iter().enumerate() {
        station += DVector::from_column_slice(e) * eq_mult[j];
    }
    let mut kkt = station.amax();
    for (i, (a, b)) in ineqs.iter().enumerate() {
        let g: f64 = a.iter().zip(y.iter()).map(|(ai, yi)| ai * yi).sum::<f64>() - b;
        kkt = kkt.max(g.max(0.0)).max((ineq_mult[i] * g).abs());
    }
    for (e, f) in eqs {
        let h: f64 = e.iter().zip(y.iter()).map(|(ei, yi)| ei * yi).sum::<f64>() - f;
        kkt = kkt.max(h.abs());
    }
    Ok(Projection {
        y: y.iter().copied().collect(),
        ineq_mult,
        eq_mult,
        kkt_residual: kkt,
        iterations,
    })
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone)]
pub struct HullConeSolution {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub w: Vec<f64>,
    pub norm: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

struct Reduced {
    m: DMatrix<f64>,
    k: usize,
}

impl Reduced {
    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        self.m.transpose() * (&self.m * z)
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let lam = project_simplex(&z.as_slice()[..self.k]);
        DVector::from_iterator(
            z.len(),
            lam.into_iter().chain(z.as_slice()[self.k..].iter().map(|v| v.max(0.0))),
        )
    }

    /// Norm of the unit-step projected-gradient mapping.
    fn kkt(&self, z: &DVector<f64>) -> f64 {
        let g = self.grad(z);
        (z - self.project(&(z - g))).norm()
    }
}

/// `min ‖V λ + G μ + H κ‖` over `λ` in the simplex, `μ ≥ 0`, `κ` free.
pub fn min_norm_hull_plus_cone(
    hull: &[Vec<f64>],
    nonneg: &[Vec<f64>],
    free: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<HullConeSolution> {
    let k = hull.len();
    if k == 0 {
        return Err(Error::InvalidInput("at least one hull generator is required".into()));
    }
    let n = hull[0].len();
    if k == 1 {
        let cs = min_norm_in_cone(&hull[0], nonneg, free)?;
        return Ok(HullConeSolution {
            lambda: vec![1.0],
            mu: cs.mu,
            kappa: cs.kappa,
            w: cs.w,
            norm: cs.norm,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }
    let h = columns_to_matrix(n, free);
    let p = complement_projector(n, &h);
    let mut cols = hull.to_vec();
    cols.extend_from_slice(nonneg);
    let full = columns_to_matrix(n, &cols);
    let red = Reduced { m: &p * &full, k };
    let lip = red.m.clone().svd(false, false).singular_values.max().powi(2);
    let dim = cols.len();

    let mut z = DVector::zeros(dim);
    for i in 0..k {
        z[i] = 1.0 / k as f64;
    }
    let mut iterations = 0;
    if lip > 0.0 {
        let step = 1.0 / lip;
        let mut x_prev = z.clone();
        let mut yk = z.clone();
        let mut t = 1.0f64;
        while iterations < max_iter {
            iterations += 1;
            let g = red.grad(&yk);
            let x_new = red.project(&(&yk - &g * step));
            // gradient-based adaptive restart
            if (&yk - &x_new).dot(&(&x_new - &x_prev)) > 0.0 {
                t = 1.0;
                yk = x_new.clone();
            } else {
                let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                yk = &x_new + (&x_new - &x_prev) * ((t - 1.0) / t_new);
                t = t_new;
            }
            x_prev = x_new;
            if iterations % 16 == 0 && red.kkt(&x_prev) <= tol {
                break;
            }
        }
        z = x_prev;
        if let Some(polished) = polish(&red, &z) {
            if red.kkt(&polished) <= red.kkt(&z) {
                z = polished;
            }
        }
    }
    let kkt = red.kkt(&z);
    if kkt > tol {
        return Err(Error::NonConvergence(format!(
            "hull/cone residual QP stopped at KKT residual {kkt:.3e} after {iterations} iterations"
        )));
    }
    let partial = &full * &z;
    let kappa = if free.is_empty() { DVector::zeros(0) } else { -lstsq(&h, &partial) };
    let w = &partial + &h * &kappa;
    Ok(HullConeSolution {
        lambda: z.as_slice()[..k].to_vec(),
        mu: z.as_slice()[k..].to_vec(),
        kappa: kappa.iter().copied().collect(),
        norm: w.norm(),
        w: w.iter().copied().collect(),
        kkt_residual: kkt,
        iterations,
    })
}

/// Exact equality-constrained least squares on the support of `z`.
fn polish(red: &Reduced, z: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] > 1e-10).collect();
    let lam_support: Vec<usize> = support.iter().copied().filter(|&i| i < red.k).collect();
    if lam_support.is_empty() {
        return None;
    }
    let ms = red.m.select_columns(&support);
    let q = ms.transpose() * &ms;
    let p = support.len();
    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    kkt.view_mut((0, 0), (p, p)).copy_from(&q);
    let mut rhs = DVector::zeros(p + 1);
    for (pos, &i) in support.iter().enumerate() {
        if i < red.k {
            kkt[(pos, p)] = 1.0;
            kkt[(p, pos)] = 1.0;
        }
    }
    rhs[p] = 1.0;
    let sol = lstsq(&kkt, &rhs);
    let mut out = DVector::zeros(z.len());
    for (pos, &i) in support.iter().enumerate() {
        if sol[pos] < -1e-12 {
            return None;
        }
        out[i] = sol[pos].max(0.0);
    }
    let sum: f64 = out.as_slice()[..red.k].iter().sum();
    if sum <= 0.0 {
        return None;
    }
    for i in 0..red.k {
        out[i] /= sum;
    }
    Some(out)
}
