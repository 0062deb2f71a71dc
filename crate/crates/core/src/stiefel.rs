//! Minimization under orthogonality constraints `XᵀX = I_p`.
//!
//! Iterates move along the Cayley curve
//!
//! ```text
//! Y(τ) = (I + τ/2 W)⁻¹ (I − τ/2 W) X,     W = G Xᵀ − X Gᵀ
//! ```
//!
//! which stays on the Stiefel manifold for every `τ` and has slope
//! `−½‖W‖²_F` at `τ = 0`. Step sizes come from halving `τ` until the
//! Armijo–Wolfe conditions hold. Problems with several orthogonal variables
//! (one per rotation core in a factorization) are handled by
//! [`minimize_multi`], either one variable at a time or all at once.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{orthogonality_error, ORTHOGONALITY_TOL};

/// A point `X ∈ R^{n×p}` with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    x: DMatrix<f64>,
}

impl StiefelPoint {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.ncols() > x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "Stiefel point needs p <= n, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let dev = orthogonality_error(&x);
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal(dev));
        }
        Ok(StiefelPoint { x })
    }

    /// First `p` columns of the identity.
    pub fn identity(n: usize, p: usize) -> Self {
        StiefelPoint {
            x: DMatrix::identity(n, p),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.x
    }
}

/// Differentiable objective `F: R^{n×p} → R`.
pub trait StiefelObjective {
    fn value(&self, x: &DMatrix<f64>) -> f64;
    /// Euclidean gradient `G_{ij} = ∂F/∂X_{ij}`.
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

/// Objective built from a pair of closures.
pub struct FnObjective<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> StiefelObjective for FnObjective<F, G>
where
    F: Fn(&DMatrix<f64>) -> f64,
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (self.gradient)(x)
    }
}

/// Joint objective over `q` orthogonally constrained variables.
pub trait MultiObjective {
    fn num_vars(&self) -> usize;
    fn value(&self, xs: &[DMatrix<f64>]) -> f64;
    fn gradients(&self, xs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>>;

    /// Gradient with respect to `xs[i]` alone.
    fn partial_gradient(&self, xs: &[DMatrix<f64>], i: usize) -> DMatrix<f64> {
        self.gradients(xs).swap_remove(i)
    }
}

/// Curvilinear search and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchParams {
    /// Sufficient-decrease constant.
    pub rho1: f64,
    /// Curvature constant.
    pub rho2: f64,
    /// Stop once `‖∇F‖_F = ‖W X‖_F <= eps`.
    pub eps: f64,
    pub tau0: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Extra halvings tried after the first point that satisfies only the
    /// sufficient-decrease condition before settling for it.
    pub wolfe_patience: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            rho1: 1e-4,
            rho2: 0.9,
            eps: 1e-6,
            tau0: 1.0,
            max_iters: 500,
            max_halvings: 50,
            wolfe_patience: 50,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.rho1 && self.rho1 < self.rho2 && self.rho2 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < rho1 < rho2 < 1, got rho1={}, rho2={}",
                self.rho1, self.rho2
            )));
        }
        if !(self.eps > 0.0) || !(self.tau0 > 0.0) {
            return Err(Error::InvalidArgument(
                "eps and tau0 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How [`minimize_multi`] moves the variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum MultiStrategy {
    /// One curvilinear step per variable per sweep, others held fixed.
    #[default]
    BlockCoordinate,
    /// All variables step together along their own Cayley curves with a
    /// shared `τ`.
    Simultaneous,
}

fn check_shapes(x: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<()> {
    if x.shape() != g.shape() {
        return Err(Error::DimensionMismatch(format!(
            "X is {:?} but G is {:?}",
            x.shape(),
            g.shape()
        )));
    }
    Ok(())
}

/// `W = G Xᵀ − X Gᵀ` (skew-symmetric, `n × n`).
pub fn skew_direction(x: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(x, g)?;
    let a = g * x.transpose();
    Ok(&a - a.transpose())
}

fn cayley_system(w: &DMatrix<f64>, tau: f64) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let n = w.nrows();
    (DMatrix::identity(n, n) + w * (0.5 * tau)).lu()
}

fn solve_checked(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let sol = lu
        .solve(rhs)
        .ok_or_else(|| Error::Numerical("singular Cayley system".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Cayley solve".into()));
    }
    Ok(sol)
}

/// `Y(τ) = (I + τ/2 W)⁻¹ (I − τ/2 W) X` via an LU solve, re-orthonormalized
/// if round-off pushes it off the manifold.
pub fn cayley_curve(x: &DMatrix<f64>, w: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if w.nrows() != x.nrows() || w.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "W is {:?} but X has {} rows",
            w.shape(),
            x.nrows()
        )));
    }
    if tau == 0.0 {
        return Ok(x.clone());
    }
    let rhs = x - (w * x) * (0.5 * tau);
    let y = solve_checked(&cayley_system(w, tau), &rhs)?;
    Ok(reorthonormalize_if_needed(y))
}

/// `Y'(τ) = −(I + τ/2 W)⁻¹ W (X + Y(τ)) / 2`.
pub fn curve_derivative(
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    tau: f64,
    y: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_shapes(x, y)?;
    let rhs = -(w * (x + y)) * 0.5;
    if tau == 0.0 {
        return Ok(rhs);
    }
    solve_checked(&cayley_system(w, tau), &rhs)
}

/// Polar-free cleanup: thin QR with the sign of `R`'s diagonal folded back.
fn reorthonormalize_if_needed(y: DMatrix<f64>) -> DMatrix<f64> {
    if orthogonality_error(&y) <= 0.5 * ORTHOGONALITY_TOL {
        return y;
    }
    let p = y.ncols();
    let qr = y.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn trace_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Slope of `τ ↦ F(Y(τ))` at zero, `trace(Gᵀ(−W X))`, cross-checked against
/// the closed form `−½‖W‖²_F`.
pub fn descent_slope_at_zero(g: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    let w = skew_direction(x, g)?;
    let slope = -trace_inner(g, &(&w * x));
    let expected = -0.5 * w.norm_squared();
    let roundoff = 64.0 * f64::EPSILON * g.norm() * w.norm() * x.norm().max(1.0);
    if !((slope - expected).abs() <= 1e-8 * slope.abs().max(expected.abs()) + roundoff) {
        return Err(Error::GradientInconsistency { slope, expected });
    }
    Ok(slope)
}

/// Accepted step of a curvilinear search.
#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub tau: f64,
    pub y: DMatrix<f64>,
    pub value: f64,
    /// Whether the curvature condition held, or only sufficient decrease.
    pub wolfe: bool,
    pub halvings: usize,
}

struct Trial<T> {
    point: T,
    value: f64,
}

/// Halving search shared by the single- and multi-variable drivers.
fn curvilinear_search<T>(
    params: &SearchParams,
    f0: f64,
    slope0: f64,
    mut eval: impl FnMut(f64) -> Result<Trial<T>>,
    mut slope_at: impl FnMut(f64, &T) -> Result<f64>,
) -> Result<(f64, Trial<T>, bool, usize)> {
    if !(slope0 < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "search direction is not a descent direction (slope {slope0:e})"
        )));
    }
    let mut tau = params.tau0;
    let mut fallback: Option<(f64, Trial<T>, usize)> = None;
    for halvings in 0..=params.max_halvings {
        let trial = eval(tau)?;
        let armijo = trial.value.is_finite() && trial.value <= f0 + params.rho1 * tau * slope0;
        if armijo {
            if slope_at(tau, &trial.point)? >= params.rho2 * slope0 {
                return Ok((tau, trial, true, halvings));
            }
            match &fallback {
                None => fallback = Some((tau, trial, halvings)),
                Some((_, _, first)) if halvings - first >= params.wolfe_patience => break,
                Some(_) => {}
            }
        }
        tau *= 0.5;
    }
    match fallback {
        Some((tau, trial, h)) => Ok((tau, trial, false, h)),
        None => Err(Error::LineSearchFailure {
            halvings: params.max_halvings,
        }),
    }
}

/// Finds `τ ∈ {τ₀, τ₀/2, …}` satisfying
/// `F(Y(τ)) ≤ F(X) + ρ₁ τ F'(0)` and `F'(τ) ≥ ρ₂ F'(0)` where
/// `F'(τ) = trace(∇F(Y(τ))ᵀ Y'(τ))`.
pub fn armijo_wolfe_search(
    obj: &dyn StiefelObjective,
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    params: &SearchParams,
) -> Result<LineSearchResult> {
    let f0 = obj.value(x);
    let slope0 = -trace_inner(&obj.gradient(x), &(w * x));
    search_single(obj, x, w, f0, slope0, params)
}

fn search_single(
    obj: &dyn StiefelObjective,
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    f0: f64,
    slope0: f64,
    params: &SearchParams,
) -> Result<LineSearchResult> {
    let (tau, trial, wolfe, halvings) = curvilinear_search(
        params,
        f0,
        slope0,
        |tau| {
            let y = cayley_curve(x, w, tau)?;
            let value = obj.value(&y);
            Ok(Trial { point: y, value })
        },
        |tau, y| {
            let dy = curve_derivative(x, w, tau, y)?;
            Ok(trace_inner(&obj.gradient(y), &dy))
        },
    )?;
    Ok(LineSearchResult {
        tau,
        y: trial.point,
        value: trial.value,
        wolfe,
        halvings,
    })
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: DMatrix<f64>,
    /// `F` at the start and after every accepted step.
    pub values: Vec<f64>,
    pub iterations: usize,
    /// `false` when `max_iters` ran out before the stationarity test passed.
    pub converged: bool,
    pub max_feasibility_error: f64,
}

/// Cayley-curve gradient descent from a feasible `x0`.
pub fn minimize(
    obj: &dyn StiefelObjective,
    x0: &StiefelPoint,
    params: &SearchParams,
) -> Result<MinimizeResult> {
    params.validate()?;
    let mut x = x0.matrix().clone();
    let mut f = obj.value(&x);
    let mut values = vec![f];
    let mut max_feas = orthogonality_error(&x);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let g = obj.gradient(&x);
        let w = skew_direction(&x, &g)?;
        if (&w * &x).norm() <= params.eps {
            converged = true;
            break;
        }
        if iterations >= params.max_iters {
            break;
        }
        let slope = descent_slope_at_zero(&g, &x)?;
        let step = search_single(obj, &x, &w, f, slope, params)?;
        x = step.y;
        f = step.value;
        values.push(f);
        max_feas = max_feas.max(orthogonality_error(&x));
        iterations += 1;
    }
    Ok(MinimizeResult {
        x,
        values,
        iterations,
        converged,
        max_feasibility_error: max_feas,
    })
}

#[derive(Debug, Clone)]
pub struct MultiMinimizeResult {
    pub xs: Vec<DMatrix<f64>>,
    /// Joint objective at the start and after every outer iteration.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_feasibility_error: f64,
    /// Accepted steps that satisfied only the sufficient-decrease condition.
    pub armijo_only_steps: usize,
}

/// Minimizes a joint objective over `q` Stiefel variables.
pub fn minimize_multi(
    obj: &dyn MultiObjective,
    x0: &[StiefelPoint],
    params: &SearchParams,
    strategy: MultiStrategy,
) -> Result<MultiMinimizeResult> {
    params.validate()?;
    if x0.len() != obj.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "{} starting points for {} variables",
            x0.len(),
            obj.num_vars()
        )));
    }
    let mut xs: Vec<DMatrix<f64>> = x0.iter().map(|p| p.matrix().clone()).collect();
    let mut f = obj.value(&xs);
    let mut values = vec![f];
    let mut max_feas = xs.iter().map(orthogonality_error).fold(0.0, f64::max);
    let mut iterations = 0;
    let mut converged = false;
    let mut armijo_only = 0;

    loop {
        let grads = obj.gradients(&xs);
        let mut ws = Vec::with_capacity(xs.len());
        let mut norm_sq = 0.0;
        for (x, g) in xs.iter().zip(&grads) {
            let w = skew_direction(x, g)?;
            norm_sq += (&w * x).norm_squared();
            ws.push(w);
        }
        if norm_sq.sqrt() <= params.eps {
            converged = true;
            break;
        }
        if iterations >= params.max_iters {
            break;
        }
        match strategy {
            MultiStrategy::BlockCoordinate => {
                let mut first = Some((grads, ws));
                for i in 0..xs.len() {
                    let (g, w) = match first.as_mut() {
                        Some((grads, ws)) if i == 0 => (grads[0].clone(), ws[0].clone()),
                        _ => {
                            let g = obj.partial_gradient(&xs, i);
                            let w = skew_direction(&xs[i], &g)?;
                            (g, w)
                        }
                    };
                    if i == 0 {
                        first = None;
                    }
                    let x = xs[i].clone();
                    let step_norm = (&w * &x).norm();
                    if step_norm <= params.eps / (xs.len() as f64).sqrt() {
                        continue;
                    }
                    let slope = descent_slope_at_zero(&g, &x)?;
                    let (_, trial, wolfe, _) = curvilinear_search(
                        params,
                        f,
                        slope,
                        |tau| {
                            let mut trial_xs = xs.clone();
                            trial_xs[i] = cayley_curve(&x, &w, tau)?;
                            let value = obj.value(&trial_xs);
                            Ok(Trial {
                                point: trial_xs,
                                value,
                            })
                        },
                        |tau, trial_xs| {
                            let dy = curve_derivative(&x, &w, tau, &trial_xs[i])?;
                            Ok(trace_inner(&obj.partial_gradient(trial_xs, i), &dy))
                        },
                    )?;
                    if !wolfe {
                        armijo_only += 1;
                    }
                    xs = trial.point;
                    f = trial.value;
                    max_feas = max_feas.max(orthogonality_error(&xs[i]));
                }
            }
            MultiStrategy::Simultaneous => {
                let mut slope = 0.0;
                for (x, g) in xs.iter().zip(&grads) {
                    slope += descent_slope_at_zero(g, x)?;
                }
                let base = xs.clone();
                let (_, trial, wolfe, _) = curvilinear_search(
                    params,
                    f,
                    slope,
                    |tau| {
                        let point = base
                            .iter()
                            .zip(&ws)
                            .map(|(x, w)| cayley_curve(x, w, tau))
                            .collect::<Result<Vec<_>>>()?;
                        let value = obj.value(&point);
                        Ok(Trial { point, value })
                    },
                    |tau, ys| {
                        let gs = obj.gradients(ys);
                        let mut d = 0.0;
                        for ((x, w), (y, g)) in base.iter().zip(&ws).zip(ys.iter().zip(&gs)) {
                            d += trace_inner(g, &curve_derivative(x, w, tau, y)?);
                        }
                        Ok(d)
                    },
                )?;
                if !wolfe {
                    armijo_only += 1;
                }
                xs = trial.point;
                f = trial.value;
                max_feas = xs.iter().map(orthogonality_error).fold(max_feas, f64::max);
            }
        }
        values.push(f);
        iterations += 1;
    }
    Ok(MultiMinimizeResult {
        xs,
        values,
        iterations,
        converged,
        max_feasibility_error: max_feas,
        armijo_only_steps: armijo_only,
    })
}

/// Worst relative disagreement between `obj.gradient` and central finite
/// differences (step `h`) at `x`, measured as `‖G − G_fd‖_∞ / max(‖G_fd‖_∞, 1)`.
pub fn gradient_check(obj: &dyn StiefelObjective, x: &DMatrix<f64>, h: f64) -> f64 {
    let g = obj.gradient(x);
    let mut fd = DMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let fp = obj.value(&probe);
            probe[(i, j)] = orig - h;
            let fm = obj.value(&probe);
            probe[(i, j)] = orig;
            fd[(i, j)] = (fp - fm) / (2.0 * h);
        }
    }
    (&g - &fd).amax() / fd.amax().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::testutil::{random_orthogonal, rng};
    use rand::Rng;

    fn random_stiefel(n: usize, p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        random_orthogonal(n, rng).columns(0, p).into_owned()
    }

    fn random_matrix(n: usize, p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
    }

    /// `F(X) = ‖X − T‖²_F`.
    fn distance_objective(target: DMatrix<f64>) -> impl StiefelObjective {
        let t2 = target.clone();
        FnObjective {
            value: move |x: &DMatrix<f64>| (x - &target).norm_squared(),
            gradient: move |x: &DMatrix<f64>| (x - &t2) * 2.0,
        }
    }

    /// `F(X) = −trace(ΛᵀX)`, minimized by the polar factor of `Λ`.
    fn procrustes_objective(lambda: DMatrix<f64>) -> impl StiefelObjective {
        let l2 = lambda.clone();
        FnObjective {
            value: move |x: &DMatrix<f64>| -trace_inner(&lambda, x),
            gradient: move |_: &DMatrix<f64>| -l2.clone(),
        }
    }

    fn polar_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
        let svd = m.clone().svd(true, true);
        svd.u.unwrap() * svd.v_t.unwrap()
    }

    #[test]
    fn skew_direction_examples() {
        let mut rng = rng(1);
        let x = random_stiefel(4, 2, &mut rng);
        assert_eq!(skew_direction(&x, &x).unwrap().amax(), 0.0);

        let g = random_matrix(4, 2, &mut rng);
        let w = skew_direction(&x, &g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut expected = 0.0;
                for c in 0..2 {
                    expected += g[(i, c)] * x[(j, c)] - x[(i, c)] * g[(j, c)];
                }
                assert!((w[(i, j)] - expected).abs() < 1e-14);
                assert_eq!(w[(i, j)], -w[(j, i)]);
            }
        }
        assert!(skew_direction(&x, &random_matrix(3, 2, &mut rng)).is_err());
    }

    #[test]
    fn stationarity_iff_zero_skew() {
        let mut rng = rng(2);
        for _ in 0..10 {
            let x = random_stiefel(5, 3, &mut rng);
            let g = random_matrix(5, 3, &mut rng);
            let w = skew_direction(&x, &g).unwrap();
            assert!((&w * &x).norm() > 1e-6 && w.norm() > 1e-6);
            // G = X S with S symmetric is stationary.
            let s = random_matrix(3, 3, &mut rng);
            let g0 = &x * (&s + s.transpose());
            let w0 = skew_direction(&x, &g0).unwrap();
            assert!((&w0 * &x).norm() < 1e-12 && w0.norm() < 1e-12);
        }
    }

    #[test]
    fn cayley_stays_feasible_and_degenerates() {
        let mut rng = rng(3);
        let x = random_stiefel(6, 3, &mut rng);
        let g = random_matrix(6, 3, &mut rng);
        let w = skew_direction(&x, &g).unwrap();
        for tau in [0.0, 1e-3, 0.5, 3.0, 100.0] {
            let y = cayley_curve(&x, &w, tau).unwrap();
            assert!(orthogonality_error(&y) <= 1e-8);
        }
        assert_eq!(cayley_curve(&x, &w, 0.0).unwrap(), x);
        let zero = DMatrix::zeros(6, 6);
        assert!((cayley_curve(&x, &zero, 0.7).unwrap() - &x).amax() < 1e-15);
    }

    #[test]
    fn cayley_tangent_and_derivative_match_finite_differences() {
        let mut rng = rng(4);
        let x = random_stiefel(5, 2, &mut rng);
        let w = skew_direction(&x, &random_matrix(5, 2, &mut rng)).unwrap();

        let h = 1e-6;
        let fwd = (cayley_curve(&x, &w, h).unwrap() - &x) / h;
        let tangent = -(&w * &x);
        assert!((&fwd - &tangent).amax() < 1e-4);
        assert_eq!(curve_derivative(&x, &w, 0.0, &x).unwrap(), tangent);

        let h = 1e-5;
        for tau in [0.3, 1.0, 2.5] {
            let y = cayley_curve(&x, &w, tau).unwrap();
            let d = curve_derivative(&x, &w, tau, &y).unwrap();
            let fd = (cayley_curve(&x, &w, tau + h).unwrap()
                - cayley_curve(&x, &w, tau - h).unwrap())
                / (2.0 * h);
            assert!((&d - &fd).amax() < 1e-6, "tau={tau}");
        }
        let zero = DMatrix::zeros(5, 5);
        assert_eq!(curve_derivative(&x, &zero, 1.0, &x).unwrap().amax(), 0.0);
    }

    #[test]
    fn tangent_vector_satisfies_tangency() {
        let mut rng = rng(5);
        for _ in 0..20 {
            let x = random_stiefel(6, 4, &mut rng);
            let w = skew_direction(&x, &random_matrix(6, 4, &mut rng)).unwrap();
            let z = -(&w * &x);
            let sym = z.transpose() * &x + x.transpose() * &z;
            assert!(sym.amax() <= 1e-10);
        }
    }

    #[test]
    fn slope_identity() {
        let mut rng = rng(6);
        assert_eq!(
            descent_slope_at_zero(&DMatrix::zeros(4, 2), &random_stiefel(4, 2, &mut rng)).unwrap(),
            0.0
        );
        for _ in 0..50 {
            let x = random_stiefel(7, 3, &mut rng);
            let g = random_matrix(7, 3, &mut rng);
            let w = skew_direction(&x, &g).unwrap();
            let slope = descent_slope_at_zero(&g, &x).unwrap();
            assert!(slope <= 0.0);
            assert!((slope + 0.5 * w.norm_squared()).abs() <= 1e-10 * slope.abs());
        }
    }

    #[test]
    fn slope_rejects_non_finite_gradient() {
        let x = DMatrix::identity(3, 2);
        let mut g = DMatrix::zeros(3, 2);
        g[(2, 0)] = f64::NAN;
        assert!(matches!(
            descent_slope_at_zero(&g, &x),
            Err(Error::GradientInconsistency { .. })
        ));
    }

    #[test]
    fn line_search_accepts_point_meeting_both_conditions() {
        let mut rng = rng(7);
        let target = random_stiefel(5, 2, &mut rng);
        let obj = distance_objective(target.clone());
        let x = cayley_curve(
            &target,
            &skew_direction(&target, &random_matrix(5, 2, &mut rng)).unwrap(),
            0.3,
        )
        .unwrap();
        let g = obj.gradient(&x);
        let w = skew_direction(&x, &g).unwrap();
        let params = SearchParams::default();
        let step = armijo_wolfe_search(&obj, &x, &w, &params).unwrap();
        let f0 = obj.value(&x);
        let slope0 = -0.5 * w.norm_squared();
        assert!(step.value <= f0 + params.rho1 * step.tau * slope0);
        assert!(step.value < f0);
        if step.wolfe {
            let d = trace_inner(
                &obj.gradient(&step.y),
                &curve_derivative(&x, &w, step.tau, &step.y).unwrap(),
            );
            assert!(d >= params.rho2 * slope0);
        }
    }

    #[test]
    fn line_search_rejects_zero_direction() {
        let obj = distance_objective(DMatrix::identity(3, 2));
        let x = DMatrix::identity(3, 2);
        let w = DMatrix::zeros(3, 3);
        assert!(armijo_wolfe_search(&obj, &x, &w, &SearchParams::default()).is_err());
    }

    #[test]
    fn minimize_solves_procrustes() {
        let mut rng = rng(8);
        for (n, p) in [(4, 4), (6, 3), (5, 1)] {
            let lambda = random_matrix(n, p, &mut rng);
            let obj = procrustes_objective(lambda.clone());
            let expected = polar_factor(&lambda);
            // Cayley steps never leave the connected component of the start.
            let mut start = DMatrix::identity(n, p);
            if n == p && expected.determinant() < 0.0 {
                start[(0, 0)] = -1.0;
            }
            let x0 = StiefelPoint::new(start).unwrap();
            let params = SearchParams {
                eps: 1e-10,
                max_iters: 5000,
                ..SearchParams::default()
            };
            let res = minimize(&obj, &x0, &params).unwrap();
            assert!((&res.x - &expected).amax() < 1e-6, "n={n} p={p}");
            assert!(res.values.windows(2).all(|v| v[1] <= v[0]));
            assert!(res.max_feasibility_error <= 1e-8);
        }
    }

    #[test]
    fn minimize_returns_immediately_at_stationary_point() {
        let target = DMatrix::identity(4, 2);
        let obj = distance_objective(target.clone());
        let res = minimize(
            &obj,
            &StiefelPoint::new(target).unwrap(),
            &SearchParams::default(),
        )
        .unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
        assert_eq!(res.values.len(), 1);
    }

    #[test]
    fn minimize_flags_iteration_cap() {
        let mut rng = rng(9);
        let obj = procrustes_objective(random_matrix(6, 3, &mut rng));
        let params = SearchParams {
            max_iters: 2,
            ..SearchParams::default()
        };
        let res = minimize(&obj, &StiefelPoint::identity(6, 3), &params).unwrap();
        assert_eq!(res.iterations, 2);
        assert!(!res.converged);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = SearchParams {
            rho1: 0.95,
            ..SearchParams::default()
        };
        assert!(bad.validate().is_err());
    }

    struct Separable {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    }

    impl MultiObjective for Separable {
        fn num_vars(&self) -> usize {
            2
        }

        fn value(&self, xs: &[DMatrix<f64>]) -> f64 {
            -trace_inner(&self.a, &xs[0]) - trace_inner(&self.b, &xs[1])
        }

        fn gradients(&self, _xs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
            vec![-self.a.clone(), -self.b.clone()]
        }
    }

    struct Single<O>(O);

    impl<O: StiefelObjective> MultiObjective for Single<O> {
        fn num_vars(&self) -> usize {
            1
        }

        fn value(&self, xs: &[DMatrix<f64>]) -> f64 {
            self.0.value(&xs[0])
        }

        fn gradients(&self, xs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
            vec![self.0.gradient(&xs[0])]
        }
    }

    #[test]
    fn multi_with_one_variable_matches_minimize() {
        let mut rng = rng(10);
        let lambda = random_matrix(5, 3, &mut rng);
        let params = SearchParams {
            max_iters: 40,
            ..SearchParams::default()
        };
        let x0 = StiefelPoint::identity(5, 3);
        let single = minimize(&procrustes_objective(lambda.clone()), &x0, &params).unwrap();
        for strategy in [MultiStrategy::BlockCoordinate, MultiStrategy::Simultaneous] {
            let multi = minimize_multi(
                &Single(procrustes_objective(lambda.clone())),
                &[x0.clone()],
                &params,
                strategy,
            )
            .unwrap();
            assert_eq!(multi.values, single.values);
            assert_eq!(multi.xs[0], single.x);
        }
    }

    #[test]
    fn separable_multi_matches_independent_runs() {
        let mut rng = rng(11);
        let a = random_matrix(4, 2, &mut rng);
        let b = random_matrix(3, 3, &mut rng);
        let params = SearchParams {
            max_iters: 60,
            ..SearchParams::default()
        };
        let xa = StiefelPoint::identity(4, 2);
        let xb = StiefelPoint::identity(3, 3);
        let ra = minimize(&procrustes_objective(a.clone()), &xa, &params).unwrap();
        let rb = minimize(&procrustes_objective(b.clone()), &xb, &params).unwrap();
        let joint = minimize_multi(
            &Separable { a, b },
            &[xa, xb],
            &params,
            MultiStrategy::BlockCoordinate,
        )
        .unwrap();
        // both block updates follow the same curvilinear path as the standalone runs
        assert!((&joint.xs[0] - &ra.x).amax() < 1e-6);
        assert!((&joint.xs[1] - &rb.x).amax() < 1e-6);
        let independent = ra.values.last().unwrap() + rb.values.last().unwrap();
        assert!((joint.values.last().unwrap() - independent).abs() < 1e-8);
        assert!(joint.values.windows(2).all(|v| v[1] <= v[0]));
    }

    #[test]
    fn gradient_check_harness() {
        let mut rng = rng(12);
        let obj = distance_objective(random_matrix(4, 3, &mut rng));
        assert!(gradient_check(&obj, &random_stiefel(4, 3, &mut rng), 1e-5) < 1e-8);
        let wrong = FnObjective {
            value: |x: &DMatrix<f64>| x.norm_squared(),
            gradient: |x: &DMatrix<f64>| x.clone(),
        };
        assert!(gradient_check(&wrong, &random_stiefel(4, 3, &mut rng), 1e-5) > 0.1);
    }
}
