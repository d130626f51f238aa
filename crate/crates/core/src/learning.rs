//! The density-based inverse problem: recover θ = (k, λ) by minimizing the
//! summed KL divergence between an observed density time series and forward
//! runs of the augmented hydrodynamic model.
//!
//! Gradient and Hessian come from central finite differences; the Hessian is
//! made positive definite by Lanczos tridiagonalization and eigenvalue
//! clipping, and the update is a damped Newton step with backtracking.  The
//! parameters are optimized in log-space (θ = e^η) so positivity needs no
//! constraints; every reported value is in (k, λ) space.  The printed update
//! rule in the source material omits the +θⁿ term; the standard
//! θⁿ − αĤ⁻¹∇V step is used instead.

use crate::domain::ScalarField;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::macro_solver::{simulate_macro, DensitySeries, MacroConfig};
use serde::Serialize;

/// Observed cells with p below this are excluded from the KL sum.
pub const SUPPORT_FLOOR: f64 = 1e-8;
/// Floor inside the logarithm guarding against −∞.
pub const Q_FLOOR: f64 = 1e-12;

/// Everything a fit needs: the observations, the forward-solver settings, and
/// the optimizer knobs.
#[derive(Clone, Debug)]
pub struct LearnConfig {
    pub theta0: [f64; 2],
    /// Relative finite-difference step (per component, on the log parameters).
    pub fd_step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Hessian eigenvalue floor as a fraction of |trace|.
    pub hessian_floor: f64,
    pub observations: DensitySeries,
    /// Template forward config; its kernel parameters are overwritten by θ.
    pub forward: MacroConfig,
}

impl LearnConfig {
    fn validate(&self) -> Result<()> {
        if !(self.theta0[0] > 0.0 && self.theta0[1] > 0.0) {
            return Err(Error::InvalidArgument("theta0 must be componentwise positive".into()));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "fd_step must be in (0, 1e-2], got {}",
                self.fd_step
            )));
        }
        if self.observations.states.is_empty() {
            return Err(Error::InvalidArgument("no observation frames".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnStatus {
    Converged,
    MaxIters,
    Stalled,
}

/// Optimizer state returned to the caller; `history` holds every accepted
/// iterate as (θ, objective).
#[derive(Clone, Debug)]
pub struct LearnState {
    pub theta: [f64; 2],
    pub objective: f64,
    pub gradient: [f64; 2],
    pub hessian_psd: [[f64; 2]; 2],
    pub iteration: usize,
    pub history: Vec<([f64; 2], f64)>,
    pub status: LearnStatus,
}

/// D_KL(p‖q) = Σ_{p > floor} p·log₂(p / max(q, floor))·dxᵈ.
pub fn kl_divergence(p: &ScalarField, q: &ScalarField) -> Result<f64> {
    if p.grid() != q.grid() {
        return Err(Error::SizeMismatch("KL divergence of fields on different grids".into()));
    }
    let dv = p.grid().cell_volume();
    let mut total = 0.0;
    for (&pv, &qv) in p.values().iter().zip(q.values()) {
        if pv > SUPPORT_FLOOR {
            total += pv * (pv / qv.max(Q_FLOOR)).log2();
        }
    }
    Ok(total * dv)
}

fn forward_config(config: &LearnConfig, theta: [f64; 2]) -> MacroConfig {
    let mut fwd = config.forward.clone();
    fwd.kernel = match fwd.grid.domain().dim() {
        1 => KernelSpec::ScreenedPoisson1d {
            k: theta[0],
            lambda: theta[1],
            l: fwd.grid.domain().width(),
        },
        _ => KernelSpec::ScreenedPoisson2d {
            k: theta[0],
            lambda: theta[1],
            l: fwd.grid.domain().width(),
            truncation: 256,
        },
    };
    fwd
}

/// Forward-simulate from the observation's initial frame at θ and sum the KL
/// divergence over all shared frames.  Blow-ups and non-finite values map to
/// a +∞ sentinel rather than an error.
pub fn objective(theta: [f64; 2], config: &LearnConfig) -> f64 {
    if !(theta[0] > 0.0 && theta[1] > 0.0)
        || !theta[0].is_finite()
        || !theta[1].is_finite()
        || theta[0] > 1e6
        || theta[1] > 1e6
    {
        return f64::INFINITY;
    }
    let obs = &config.observations;
    let init = &obs.states[0];
    let fwd = forward_config(config, theta);
    let sim = match simulate_macro(&fwd, init) {
        Ok((series, report)) => {
            if report.aborted_at.is_some() {
                return f64::INFINITY;
            }
            series
        }
        Err(_) => return f64::INFINITY,
    };
    if sim.times.len() < obs.times.len() {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    for (i, (t, p)) in obs.times.iter().zip(&obs.states).enumerate() {
        if (sim.times[i] - t).abs() > 1e-6 {
            return f64::INFINITY;
        }
        match kl_divergence(&p.rho, &sim.states[i].rho) {
            Ok(v) if v.is_finite() => total += v,
            _ => return f64::INFINITY,
        }
    }
    total
}

fn fd_steps(x: [f64; 2], fd_step: f64) -> [f64; 2] {
    [fd_step * x[0].abs().max(1.0), fd_step * x[1].abs().max(1.0)]
}

/// Central two-point finite-difference gradient with per-component step
/// h = fd_step·max(|xᵢ|, 1).  Returns +∞ components if a stencil point blows
/// up.
pub fn fd_gradient(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], fd_step: f64) -> [f64; 2] {
    let h = fd_steps(x, fd_step);
    let mut g = [0.0; 2];
    for i in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h[i];
        xm[i] -= h[i];
        g[i] = (f(xp) - f(xm)) / (2.0 * h[i]);
    }
    g
}

/// Lanczos tridiagonalization of a small symmetric matrix with full
/// reorthogonalization; returns (diagonal, off-diagonal, basis).
fn lanczos_tridiagonalize(h: &[[f64; 2]; 2]) -> (Vec<f64>, Vec<f64>, Vec<[f64; 2]>) {
    let matvec = |v: [f64; 2]| -> [f64; 2] {
        [
            h[0][0] * v[0] + h[0][1] * v[1],
            h[1][0] * v[0] + h[1][1] * v[1],
        ]
    };
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut basis: Vec<[f64; 2]> = Vec::new();
    let mut q = [1.0, 0.0];
    let mut beta = 0.0;
    let mut q_prev = [0.0, 0.0];
    for step in 0..2 {
        basis.push(q);
        let mut w = matvec(q);
        let alpha = w[0] * q[0] + w[1] * q[1];
        alphas.push(alpha);
        for c in 0..2 {
            w[c] -= alpha * q[c] + beta * q_prev[c];
        }
        // full reorthogonalization against the stored basis
        for b in &basis {
            let proj = w[0] * b[0] + w[1] * b[1];
            w[0] -= proj * b[0];
            w[1] -= proj * b[1];
        }
        beta = (w[0] * w[0] + w[1] * w[1]).sqrt();
        if step == 0 {
            if beta < 1e-14 {
                break;
            }
            betas.push(beta);
            q_prev = q;
            q = [w[0] / beta, w[1] / beta];
        }
    }
    (alphas, betas, basis)
}

fn tridiagonal_eigen_2x2(a0: f64, a1: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    // eigenpairs of [[a0, b], [b, a1]]
    let tr = a0 + a1;
    let det = a0 * a1 - b * b;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 - disc;
    let l2 = tr / 2.0 + disc;
    let vec_for = |l: f64| -> [f64; 2] {
        if b.abs() > 1e-300 {
            let v = [b, l - a0];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        } else if a0 <= a1 {
            if l == l1 { [1.0, 0.0] } else { [0.0, 1.0] }
        } else if l == l1 {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        }
    };
    ([l1, l2], [vec_for(l1), vec_for(l2)])
}

/// Symmetric central finite-difference Hessian, tridiagonalized by Lanczos,
/// eigenvalues clipped below max(hessian_floor·|trace|, 1e−12), reassembled.
/// The result is always symmetric positive definite.
pub fn psd_hessian(
    f: &dyn Fn([f64; 2]) -> f64,
    x: [f64; 2],
    fd_step: f64,
    hessian_floor: f64,
) -> [[f64; 2]; 2] {
    let h = fd_steps(x, fd_step);
    let f0 = f(x);
    let eval = |dx: f64, dy: f64| f([x[0] + dx, x[1] + dy]);
    let h00 = (eval(h[0], 0.0) - 2.0 * f0 + eval(-h[0], 0.0)) / (h[0] * h[0]);
    let h11 = (eval(0.0, h[1]) - 2.0 * f0 + eval(0.0, -h[1])) / (h[1] * h[1]);
    let h01 = (eval(h[0], h[1]) - eval(h[0], -h[1]) - eval(-h[0], h[1]) + eval(-h[0], -h[1]))
        / (4.0 * h[0] * h[1]);
    let sym = [[h00, h01], [h01, h11]];
    let (alphas, betas, basis) = lanczos_tridiagonalize(&sym);
    let floor = (hessian_floor * (h00 + h11).abs()).max(1e-12);
    if alphas.len() == 1 {
        // Krylov space collapsed after one step: the start vector is an
        // eigenvector; treat the matrix as diagonal in the basis built so far
        let l0 = alphas[0].max(floor);
        let l1 = h11.max(floor);
        return [[l0, 0.0], [0.0, l1]];
    }
    let ([l1, l2], [v1, v2]) = tridiagonal_eigen_2x2(alphas[0], alphas[1], betas[0]);
    let (l1, l2) = (l1.max(floor), l2.max(floor));
    // eigenvectors back in the original coordinates
    let to_full = |v: [f64; 2]| -> [f64; 2] {
        [
            v[0] * basis[0][0] + v[1] * basis[1][0],
            v[0] * basis[0][1] + v[1] * basis[1][1],
        ]
    };
    let (u1, u2) = (to_full(v1), to_full(v2));
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = l1 * u1[i] * u1[j] + l2 * u2[i] * u2[j];
        }
    }
    // exact symmetry
    let off = 0.5 * (out[0][1] + out[1][0]);
    out[0][1] = off;
    out[1][0] = off;
    out
}

fn solve_2x2(h: &[[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    [
        (h[1][1] * b[0] - h[0][1] * b[1]) / det,
        (h[0][0] * b[1] - h[1][0] * b[0]) / det,
    ]
}

/// Damped Newton minimization of an arbitrary objective of θ = (k, λ) in
/// log-space; `newton_learn` wires the PDE objective in here.
pub fn newton_minimize(
    f: &dyn Fn([f64; 2]) -> f64,
    theta0: [f64; 2],
    fd_step: f64,
    max_iters: usize,
    grad_tol: f64,
    hessian_floor: f64,
) -> LearnState {
    let g = |eta: [f64; 2]| f([eta[0].exp(), eta[1].exp()]);
    let mut eta = [theta0[0].ln(), theta0[1].ln()];
    let mut obj = g(eta);
    let mut history = vec![([eta[0].exp(), eta[1].exp()], obj)];
    let mut gradient = [0.0; 2];
    let mut hess = [[1.0, 0.0], [0.0, 1.0]];
    let mut status = LearnStatus::MaxIters;
    let mut iteration = 0;
    while iteration < max_iters {
        gradient = fd_gradient(&g, eta, fd_step);
        if !gradient.iter().all(|v| v.is_finite()) {
            status = LearnStatus::Stalled;
            break;
        }
        let gnorm = (gradient[0] * gradient[0] + gradient[1] * gradient[1]).sqrt();
        if gnorm <= grad_tol {
            status = LearnStatus::Converged;
            break;
        }
        hess = psd_hessian(&g, eta, fd_step, hessian_floor);
        let mut dir = solve_2x2(&hess, [-gradient[0], -gradient[1]]);
        // When the Hessian was clipped near zero the raw step can be
        // astronomically long; cap it at 2 per log-parameter (a factor e²)
        // so backtracking with 20 halvings stays meaningful.
        let dmax = dir[0].abs().max(dir[1].abs());
        if dmax > 2.0 {
            let s = 2.0 / dmax;
            dir[0] *= s;
            dir[1] *= s;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = [eta[0] + alpha * dir[0], eta[1] + alpha * dir[1]];
            let trial_obj = g(trial);
            if trial_obj < obj {
                eta = trial;
                obj = trial_obj;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            status = LearnStatus::Stalled;
            break;
        }
        iteration += 1;
        history.push(([eta[0].exp(), eta[1].exp()], obj));
    }
    LearnState {
        theta: [eta[0].exp(), eta[1].exp()],
        objective: obj,
        gradient,
        hessian_psd: hess,
        iteration,
        history,
        status,
    }
}

/// Fit θ to the observations in `config`.
pub fn newton_learn(config: &LearnConfig) -> Result<LearnState> {
    config.validate()?;
    let f = |theta: [f64; 2]| objective(theta, config);
    Ok(newton_minimize(
        &f,
        config.theta0,
        config.fd_step,
        config.max_iters,
        config.grad_tol,
        config.hessian_floor,
    ))
}

/// Artifacts of a completed fit: the per-iteration training error in log₂
/// scale, fitted-vs-true kernel profiles ψ(0,·) on the grid, and the
/// per-frame KL of the final fit.
#[derive(Clone, Debug)]
pub struct FitReport {
    /// (iteration, log₂ objective)
    pub training_error: Vec<(usize, f64)>,
    /// (x, fitted ψ(0,x), reference ψ(0,x) if a reference kernel was given)
    pub kernel_profile: Vec<(f64, f64, Option<f64>)>,
    /// (t, KL of the final fit at that frame)
    pub per_frame_kl: Vec<(f64, f64)>,
}

pub fn fit_report(
    state: &LearnState,
    config: &LearnConfig,
    reference: Option<&KernelSpec>,
) -> Result<FitReport> {
    let training_error = state
        .history
        .iter()
        .enumerate()
        .map(|(i, (_, obj))| (i, obj.max(1e-300).log2()))
        .collect();
    let grid = config.forward.grid;
    let fitted = forward_config(config, state.theta).kernel;
    let mut kernel_profile = Vec::with_capacity(grid.cells_per_axis());
    for i in 0..grid.cells_per_axis() {
        let x = grid.center(i);
        let fit_v = match grid.domain().dim() {
            1 => fitted.eval_1d(0.0, x).unwrap_or(f64::NAN),
            _ => fitted.eval_2d([0.0, 0.0], [x, 0.0]).unwrap_or(f64::NAN),
        };
        let ref_v = reference.map(|kr| match grid.domain().dim() {
            1 => kr.eval_1d(0.0, x).unwrap_or(f64::NAN),
            _ => kr.eval_2d([0.0, 0.0], [x, 0.0]).unwrap_or(f64::NAN),
        });
        kernel_profile.push((x, fit_v, ref_v));
    }
    // per-frame KL of the final fit
    let obs = &config.observations;
    let fwd = forward_config(config, state.theta);
    let (sim, _) = simulate_macro(&fwd, &obs.states[0])?;
    let mut per_frame_kl = Vec::new();
    for (i, (t, p)) in obs.times.iter().zip(&obs.states).enumerate() {
        if i < sim.states.len() {
            per_frame_kl.push((*t, kl_divergence(&p.rho, &sim.states[i].rho)?));
        }
    }
    Ok(FitReport { training_error, kernel_profile, per_frame_kl })
}

/// Summary serialized to `fit.json`.
#[derive(Serialize)]
pub struct FitSummary {
    pub theta: [f64; 2],
    pub objective: f64,
    pub iterations: usize,
    pub status: LearnStatus,
    pub gradient: [f64; 2],
}

impl From<&LearnState> for FitSummary {
    fn from(s: &LearnState) -> Self {
        FitSummary {
            theta: s.theta,
            objective: s.objective,
            iterations: s.iteration,
            status: s.status,
            gradient: s.gradient,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_grid, Domain, Grid};
    use crate::macro_solver::initial_conditions_1d;
    use std::f64::consts::PI;

    fn grid_1d(ns: usize) -> Grid {
        make_grid(Domain::new(1, PI).unwrap(), ns).unwrap()
    }

    #[test]
    fn kl_identical_is_zero() {
        let g = grid_1d(11);
        let p = ScalarField::from_fn_1d(g, |x| 0.25 * (0.5 * x).cos());
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_two_cell_toy() {
        // dx=1 via a 4-cell grid with p supported on two cells
        let g = make_grid(Domain::new(1, 2.0).unwrap(), 4).unwrap();
        let p = ScalarField::new(g, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let q = ScalarField::new(g, vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        let v = kl_divergence(&p, &q).unwrap();
        assert!((v - 0.207_518_749_639_422).abs() < 1e-9, "got {v}");
        let w = kl_divergence(&q, &p).unwrap();
        assert!((w - 0.188_721_875_540_867).abs() < 1e-9, "got {w}");
        assert!((v - w).abs() > 1e-3); // asymmetry
    }

    #[test]
    fn kl_rejects_grid_mismatch() {
        let p = ScalarField::zeros(grid_1d(11));
        let q = ScalarField::zeros(grid_1d(13));
        assert!(kl_divergence(&p, &q).is_err());
    }

    #[test]
    fn kl_nonnegative_on_normalized_pairs() {
        use rand::Rng;
        use rand::SeedableRng;
        let g = grid_1d(31);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let norm_field = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut v: Vec<f64> = (0..31).map(|_| rng.random::<f64>() + 1e-6).collect();
                let s: f64 = v.iter().sum::<f64>() * g.dx();
                v.iter_mut().for_each(|x| *x /= s);
                ScalarField::new(g, v).unwrap()
            };
            let p = norm_field(&mut rng);
            let q = norm_field(&mut rng);
            assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn fd_gradient_exact_on_quadratic() {
        let f = |t: [f64; 2]| (t[0] - 3.0).powi(2) + (t[1] + 1.0).powi(2);
        let g = fd_gradient(&f, [1.0, 2.0], 1e-4);
        assert!((g[0] - -4.0).abs() < 1e-8, "g0 {}", g[0]);
        assert!((g[1] - 6.0).abs() < 1e-8);
        // Richardson: halving h changes the estimate by O(h²)
        let f3 = |t: [f64; 2]| t[0].powi(3) + t[1].powi(3);
        let e1 = (fd_gradient(&f3, [1.0, 1.0], 1e-2)[0] - 3.0).abs();
        let e2 = (fd_gradient(&f3, [1.0, 1.0], 5e-3)[0] - 3.0).abs();
        assert!(e2 < e1 / 3.0, "{e1} vs {e2}");
    }

    #[test]
    fn psd_hessian_quadratic_oracle() {
        let f = |t: [f64; 2]| t[0] * t[0] + 4.0 * t[1] * t[1];
        let h = psd_hessian(&f, [0.7, -0.3], 1e-4, 1e-6);
        assert!((h[0][0] - 2.0).abs() < 1e-4, "{:?}", h);
        assert!((h[1][1] - 8.0).abs() < 1e-4);
        assert!(h[0][1].abs() < 1e-4);
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn psd_hessian_clips_saddle() {
        let f = |t: [f64; 2]| t[0] * t[0] - t[1] * t[1];
        let h = psd_hessian(&f, [0.5, 0.5], 1e-4, 1e-6);
        // eigenvalues of the symmetric result
        let tr = h[0][0] + h[1][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let lmin = tr / 2.0 - disc;
        assert!(lmin >= 1e-13, "min eigenvalue {lmin}");
        // Cholesky must succeed
        assert!(h[0][0] > 0.0 && det > 0.0);
    }

    #[test]
    fn psd_hessian_cross_term() {
        let f = |t: [f64; 2]| t[0] * t[0] + t[0] * t[1] + 2.0 * t[1] * t[1];
        let h = psd_hessian(&f, [0.2, 0.4], 1e-4, 1e-6);
        assert!((h[0][0] - 2.0).abs() < 1e-4);
        assert!((h[0][1] - 1.0).abs() < 1e-4);
        assert!((h[1][1] - 4.0).abs() < 1e-4);
    }

    #[test]
    fn newton_minimizes_shifted_quadratic() {
        // minimize in θ-space through the log-space machinery
        let f = |t: [f64; 2]| (t[0] - 4.0).powi(2) + 3.0 * (t[1] - 1.0).powi(2);
        let state = newton_minimize(&f, [1.0, 0.5], 1e-5, 60, 1e-10, 1e-9);
        assert!((state.theta[0] - 4.0).abs() < 1e-4, "{:?}", state.theta);
        assert!((state.theta[1] - 1.0).abs() < 1e-4);
        // accepted objective sequence is monotone nonincreasing
        for w in state.history.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn newton_at_minimum_terminates_immediately() {
        let f = |t: [f64; 2]| (t[0] - 2.0).powi(2) + (t[1] - 2.0).powi(2);
        let state = newton_minimize(&f, [2.0, 2.0], 1e-6, 50, 1e-6, 1e-9);
        assert!(state.iteration <= 1);
        assert!((state.theta[0] - 2.0).abs() < 1e-6);
    }

    fn toy_learn_config(frames: usize) -> LearnConfig {
        let grid = grid_1d(41);
        let forward = MacroConfig {
            grid,
            kernel: KernelSpec::ScreenedPoisson1d { k: 4.0, lambda: 1.0, l: 2.0 * PI },
            t0: 0.0,
            tf: 0.25,
            dt: Some(0.0125),
            cfl: 0.45,
            save_every: 20 / frames.max(1),
        };
        let (obs, _) = simulate_macro(&forward, &initial_conditions_1d(grid)).unwrap();
        LearnConfig {
            theta0: [1.0, 0.5],
            fd_step: 1e-3,
            max_iters: 25,
            grad_tol: 1e-10,
            hessian_floor: 1e-6,
            observations: obs,
            forward,
        }
    }

    #[test]
    fn objective_self_consistency_and_shape() {
        let cfg = toy_learn_config(2);
        let at_truth = objective([4.0, 1.0], &cfg);
        assert!(at_truth <= 1e-10, "objective at θ* is {at_truth}");
        assert!(objective([0.5, 4.0], &cfg) > at_truth);
        // gradient ~0 at the generating parameters
        let f = |t: [f64; 2]| objective(t, &cfg);
        let g = fd_gradient(&f, [4.0, 1.0], 1e-4);
        assert!(g[0].abs() <= 1e-3 && g[1].abs() <= 1e-3, "{g:?}");
        // absurd parameters hit the sentinel
        assert_eq!(objective([-1.0, 1.0], &cfg), f64::INFINITY);
        assert_eq!(objective([1e9, 1.0], &cfg), f64::INFINITY);
    }

    #[test]
    fn newton_learn_recovers_self_consistent_parameters() {
        let cfg = toy_learn_config(2);
        let state = newton_learn(&cfg).unwrap();
        assert!(
            (state.theta[0] - 4.0).abs() < 0.2 && (state.theta[1] - 1.0).abs() < 0.05,
            "θ̂ = {:?} after {} iterations ({:?})",
            state.theta,
            state.iteration,
            state.status
        );
    }

    #[test]
    fn fit_report_columns() {
        let cfg = toy_learn_config(2);
        let state = newton_minimize(&|t| objective(t, &cfg), [2.0, 0.8], 1e-3, 3, 1e-12, 1e-6);
        let report = fit_report(&state, &cfg, Some(&cfg.forward.kernel)).unwrap();
        assert_eq!(report.kernel_profile.len(), cfg.forward.grid.cells_per_axis());
        for w in report.training_error.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        assert_eq!(report.per_frame_kl.len(), cfg.observations.times.len());
    }
}
