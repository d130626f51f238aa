//! Kurganov-Tadmor central finite-volume discretization of the transport
//! part of the hydrodynamic system: minmod-limited piecewise-linear
//! reconstruction, the local-speed-dissipation numerical flux
//! F̂ = ½[F⁺ + F⁻ − max±|u±|(U⁺ − U⁻)], the semi-discrete right-hand side,
//! and SSP-RK2 (Heun) time stepping with CFL control.
//!
//! Boundary handling: two ghost cells per side filled with zeros — the
//! states of interest are compactly supported inside the domain.  Velocities
//! are always formed as u = m/max(ρ, ρ_floor) so vacuum cells never divide
//! by zero.

use crate::domain::{ScalarField, StateField};
use crate::error::{Error, Result};

/// Minimum density used when forming u = m/ρ.
pub const RHO_FLOOR: f64 = 1e-10;
/// Speed floor keeping the CFL step finite on momentum-free states.
pub const FLOOR_SPEED: f64 = 1e-8;
/// Default CFL number for adaptive stepping.
pub const DEFAULT_CFL: f64 = 0.45;

/// ½(sign a + sign b)·min(|a|, |b|).
pub fn minmod(a: f64, b: f64) -> f64 {
    0.5 * (a.signum() + b.signum()) * a.abs().min(b.abs())
}

/// Velocity with the vacuum floor applied.
pub fn velocity(rho: f64, m: f64) -> f64 {
    m / rho.max(RHO_FLOOR)
}

/// Limited interface reconstruction of one component.  `w` carries two ghost
/// cells per side (length N+4 for N interior cells); returns the minus/plus
/// traces at the N+1 interfaces bounding the interior cells; slopes are
/// undivided differences passed through minmod.
pub fn reconstruct_interfaces(w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = w.len() - 4;
    let slope = |j: usize| minmod(w[j + 1] - w[j], w[j] - w[j - 1]);
    let mut minus = Vec::with_capacity(n + 1);
    let mut plus = Vec::with_capacity(n + 1);
    for j in 0..=n {
        minus.push(w[j + 1] + 0.5 * slope(j + 1));
        plus.push(w[j + 2] - 0.5 * slope(j + 2));
    }
    (minus, plus)
}

/// Kurganov-Tadmor flux for the 1D state (ρ, m) with physical flux
/// F(U) = (m, m²/ρ).
pub fn kt_flux(left: [f64; 2], right: [f64; 2]) -> [f64; 2] {
    let ul = velocity(left[0], left[1]);
    let ur = velocity(right[0], right[1]);
    let a = ul.abs().max(ur.abs());
    let fl = [left[1], left[1] * ul];
    let fr = [right[1], right[1] * ur];
    [
        0.5 * (fl[0] + fr[0] - a * (right[0] - left[0])),
        0.5 * (fl[1] + fr[1] - a * (right[1] - left[1])),
    ]
}

/// Kurganov-Tadmor flux for the 2D state (ρ, m₁, m₂) along one axis; the
/// physical flux is u_axis·Q.
pub fn kt_flux_axis(left: [f64; 3], right: [f64; 3], axis: usize) -> [f64; 3] {
    let ul = velocity(left[0], left[1 + axis]);
    let ur = velocity(right[0], right[1 + axis]);
    let a = ul.abs().max(ur.abs());
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = 0.5 * (ul * left[c] + ur * right[c] - a * (right[c] - left[c]));
    }
    out
}

fn pad_with_ghosts(values: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; values.len() + 4];
    w[2..2 + values.len()].copy_from_slice(values);
    w
}

fn rhs_1d(u: &StateField, source: &StateField) -> StateField {
    let grid = u.grid();
    let n = grid.cells_per_axis();
    let dx = grid.dx();
    let rho_p = pad_with_ghosts(u.rho.values());
    let m_p = pad_with_ghosts(u.momentum[0].values());
    let (rho_minus, rho_plus) = reconstruct_interfaces(&rho_p);
    let (m_minus, m_plus) = reconstruct_interfaces(&m_p);
    let flux: Vec<[f64; 2]> = (0..=n)
        .map(|j| kt_flux([rho_minus[j], m_minus[j]], [rho_plus[j], m_plus[j]]))
        .collect();
    let mut drho = vec![0.0; n];
    let mut dm = vec![0.0; n];
    for i in 0..n {
        drho[i] = -(flux[i + 1][0] - flux[i][0]) / dx + source.rho.values()[i];
        dm[i] = -(flux[i + 1][1] - flux[i][1]) / dx + source.momentum[0].values()[i];
    }
    StateField::new(
        ScalarField::new(grid, drho).unwrap(),
        vec![ScalarField::new(grid, dm).unwrap()],
    )
    .unwrap()
}

fn rhs_2d(u: &StateField, source: &StateField) -> StateField {
    let grid = u.grid();
    let ns = grid.cells_per_axis();
    let dx = grid.dx();
    let mut out = [vec![0.0; ns * ns], vec![0.0; ns * ns], vec![0.0; ns * ns]];
    let comp = |c: usize| -> &[f64] {
        match c {
            0 => u.rho.values(),
            _ => u.momentum[c - 1].values(),
        }
    };
    // sweep along each axis, one pencil at a time
    let mut line = [vec![0.0; ns + 4], vec![0.0; ns + 4], vec![0.0; ns + 4]];
    for axis in 0..2 {
        for other in 0..ns {
            for c in 0..3 {
                line[c].iter_mut().for_each(|v| *v = 0.0);
                for i in 0..ns {
                    let idx = if axis == 0 { grid.index2(i, other) } else { grid.index2(other, i) };
                    line[c][i + 2] = comp(c)[idx];
                }
            }
            let rec: Vec<(Vec<f64>, Vec<f64>)> =
                (0..3).map(|c| reconstruct_interfaces(&line[c])).collect();
            let mut prev = [0.0; 3];
            for j in 0..=ns {
                let left = [rec[0].0[j], rec[1].0[j], rec[2].0[j]];
                let right = [rec[0].1[j], rec[1].1[j], rec[2].1[j]];
                let f = kt_flux_axis(left, right, axis);
                if j > 0 {
                    let i = j - 1;
                    let idx = if axis == 0 { grid.index2(i, other) } else { grid.index2(other, i) };
                    for c in 0..3 {
                        out[c][idx] -= (f[c] - prev[c]) / dx;
                    }
                }
                prev = f;
            }
        }
    }
    for (i, v) in out[0].iter_mut().enumerate() {
        *v += source.rho.values()[i];
    }
    for c in 0..2 {
        for (i, v) in out[c + 1].iter_mut().enumerate() {
            *v += source.momentum[c].values()[i];
        }
    }
    let mut it = out.into_iter();
    StateField::new(
        ScalarField::new(grid, it.next().unwrap()).unwrap(),
        it.map(|v| ScalarField::new(grid, v).unwrap()).collect(),
    )
    .unwrap()
}

/// Flux divergence of the Kurganov-Tadmor scheme plus the source, per cell.
pub fn semi_discrete_rhs(u: &StateField, source: &StateField) -> Result<StateField> {
    if source.grid() != u.grid() {
        return Err(Error::SizeMismatch("source on a different grid than the state".into()));
    }
    Ok(match u.grid().domain().dim() {
        1 => rhs_1d(u, source),
        _ => rhs_2d(u, source),
    })
}

/// Largest stable step dt = cfl·dx / max(|u|, floor).
pub fn cfl_dt(u: &StateField, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl must be in (0, 1], got {cfl}")));
    }
    let mut max_speed = 0.0f64;
    for m in &u.momentum {
        for (&r, &mv) in u.rho.values().iter().zip(m.values()) {
            max_speed = max_speed.max(velocity(r, mv).abs());
        }
    }
    Ok(cfl * u.grid().dx() / max_speed.max(FLOOR_SPEED))
}

/// One SSP-RK2 (Heun) step: U* = U + dt·f(U), Uⁿ⁺¹ = U + dt/2·(f(U) + f(U*)).
pub fn step_time(
    u: &StateField,
    rhs: &mut dyn FnMut(&StateField) -> Result<StateField>,
    dt: f64,
) -> Result<StateField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let k1 = rhs(u)?;
    let stage = u.axpy(dt, &k1)?;
    let k2 = rhs(&stage)?;
    u.axpy(0.5 * dt, &k1)?.axpy(0.5 * dt, &k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, Grid, make_grid};
    use std::f64::consts::PI;

    fn grid_1d(ns: usize) -> Grid {
        make_grid(Domain::new(1, PI).unwrap(), ns).unwrap()
    }

    fn state_1d(grid: Grid, rho: impl Fn(f64) -> f64, m: impl Fn(f64) -> f64) -> StateField {
        StateField::new(
            ScalarField::from_fn_1d(grid, rho),
            vec![ScalarField::from_fn_1d(grid, m)],
        )
        .unwrap()
    }

    #[test]
    fn minmod_cases() {
        assert_eq!(minmod(-1.0, 2.0), 0.0);
        assert_eq!(minmod(3.0, 3.0), 3.0);
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-2.0, -0.5), -0.5);
    }

    #[test]
    fn kt_flux_no_jump_is_physical_flux() {
        let f = kt_flux([1.0, 0.5], [1.0, 0.5]);
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert!((f[1] - 0.25).abs() < 1e-15);
        let f0 = kt_flux([1.0, 0.0], [1.0, 0.0]);
        assert_eq!(f0, [0.0, 0.0]);
    }

    #[test]
    fn kt_flux_hand_example() {
        // left=(1,1), right=(1,−1): ½[(1,1)+(−1,1) − 1·(0,−2)] = (0,2)
        let f = kt_flux([1.0, 1.0], [1.0, -1.0]);
        assert!((f[0] - 0.0).abs() < 1e-15);
        assert!((f[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_constant_and_linear() {
        let mut w = vec![2.0; 12];
        let (minus, plus) = reconstruct_interfaces(&w);
        for j in 0..minus.len() {
            assert_eq!(minus[j], 2.0);
            assert_eq!(plus[j], 2.0);
        }
        // linear data on the padded array: exact interface values
        for (j, v) in w.iter_mut().enumerate() {
            *v = 3.0 * j as f64 + 1.0;
        }
        let (minus, plus) = reconstruct_interfaces(&w);
        for j in 0..minus.len() {
            let exact = 3.0 * (j as f64 + 1.5) + 1.0;
            assert!((minus[j] - exact).abs() < 1e-13);
            assert!((plus[j] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn reconstruct_step_is_limited() {
        let w = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let (minus, plus) = reconstruct_interfaces(&w);
        // interface at the jump (between padded cells 3 and 4): both traces
        // keep their cell values, slopes limited to zero
        assert_eq!(minus[2], 0.0);
        assert_eq!(plus[2], 1.0);
    }

    #[test]
    fn rhs_uniform_state_is_zero() {
        let g = grid_1d(32);
        // constant state away from the influence of the zero ghost cells
        // would still see the boundary; use the zero state instead plus a
        // uniform-interior check on interior cells only
        let u = state_1d(g, |_| 0.0, |_| 0.0);
        let r = semi_discrete_rhs(&u, &StateField::zeros(g)).unwrap();
        assert!(r.rho.values().iter().all(|v| *v == 0.0));
        assert!(r.momentum[0].values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rhs_spatial_order_at_least_1_8() {
        // smooth compactly supported state; measured on |x| < 2 where the
        // solution is bounded away from vacuum
        let error = |ns: usize| -> f64 {
            let g = grid_1d(ns);
            let u = state_1d(g, |x| 0.25 * (0.5 * x).cos(), |x| {
                -0.25 * (0.5 * x).cos() * (0.5 * x).sin()
            });
            let r = semi_discrete_rhs(&u, &StateField::zeros(g)).unwrap();
            let mut e = 0.0;
            for i in 0..ns {
                let x = g.center(i);
                if x.abs() >= 2.0 {
                    continue;
                }
                let (c, s) = ((0.5 * x).cos(), (0.5 * x).sin());
                let exact_mass = x.cos() / 8.0;
                let exact_mom = -(s / 8.0) * (2.0 * c * c - s * s);
                e += (r.rho.values()[i] - exact_mass).abs() + (r.momentum[0].values()[i] - exact_mom).abs();
            }
            e * g.dx()
        };
        let (e1, e2) = (error(200), error(400));
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "measured order {order} ({e1} -> {e2})");
    }

    #[test]
    fn cfl_dt_cases() {
        let g = make_grid(Domain::new(1, 1.6).unwrap(), 32).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        let u = state_1d(g, |_| 1.0, |x| if x.abs() < 0.5 { 2.0 } else { 0.0 });
        let dt = cfl_dt(&u, 0.45).unwrap();
        assert!((dt - 0.0225).abs() < 1e-12);
        // zero momentum → finite dt via the speed floor
        let u0 = state_1d(g, |_| 1.0, |_| 0.0);
        assert!(cfl_dt(&u0, 0.45).unwrap().is_finite());
        // doubling resolution halves dt
        let g2 = make_grid(Domain::new(1, 1.6).unwrap(), 64).unwrap();
        let u2 = StateField::new(
            ScalarField::from_fn_1d(g2, |_| 1.0),
            vec![ScalarField::from_fn_1d(g2, |x| if x.abs() < 0.5 { 2.0 } else { 0.0 })],
        )
        .unwrap();
        assert!((cfl_dt(&u2, 0.45).unwrap() - 0.5 * dt).abs() < 1e-12);
    }

    #[test]
    fn step_time_zero_rhs_identity() {
        let g = grid_1d(16);
        let u = state_1d(g, |x| x.cos().abs(), |x| 0.1 * x);
        let out = step_time(&u, &mut |s| Ok(StateField::zeros(s.grid())), 0.01).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn step_time_matches_heun_on_decay() {
        // u' = −u over one step: Heun gives 1 − dt + dt²/2
        let g = grid_1d(8);
        let u = state_1d(g, |_| 1.0, |_| 0.0);
        let dt = 0.01;
        let out = step_time(&u, &mut |s| s.axpy(-2.0, s), dt).unwrap();
        let expect = 1.0 - dt + dt * dt / 2.0;
        for v in out.rho.values() {
            assert!((v - expect).abs() < 1e-14);
            assert!((v - (-dt_f64()).exp()).abs() < 1e-6);
        }
        fn dt_f64() -> f64 {
            0.01
        }
    }

    #[test]
    fn step_time_linear_in_state_for_linear_rhs() {
        let g = grid_1d(16);
        let u = state_1d(g, |x| x.cos() + 2.0, |x| x.sin());
        let mut lin = |s: &StateField| s.axpy(-2.0, s);
        let one = step_time(&u, &mut lin, 0.02).unwrap();
        let scaled_in = u.axpy(2.0, &StateField::zeros(g)).unwrap(); // 3u? no: u + 2*0 = u
        assert_eq!(scaled_in, u);
        let three_u = u.axpy(2.0, &u).unwrap();
        let three_out = step_time(&three_u, &mut lin, 0.02).unwrap();
        let expect = one.axpy(2.0, &one).unwrap();
        for (a, b) in three_out.rho.values().iter().zip(expect.rho.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn total_variation_nonincreasing_on_advection() {
        // compact bump advected at nearly uniform speed
        let g = grid_1d(200);
        let bump = |x: f64| if x.abs() < 1.5 { (0.5 + 0.5 * (PI * x / 1.5).cos()) * 0.3 } else { 0.0 };
        let mut u = state_1d(g, bump, |x| 0.4 * bump(x));
        let tv = |f: &[f64]| -> f64 { f.windows(2).map(|w| (w[1] - w[0]).abs()).sum() };
        let tv0 = tv(u.rho.values());
        let mut rhs = |s: &StateField| semi_discrete_rhs(s, &StateField::zeros(g));
        for _ in 0..20 {
            let dt = cfl_dt(&u, DEFAULT_CFL).unwrap().min(0.01);
            u = step_time(&u, &mut rhs, dt).unwrap();
        }
        assert!(tv(u.rho.values()) <= tv0 * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn mass_conserved_per_step_for_compact_support() {
        let g = grid_1d(128);
        let bump = |x: f64| if x.abs() < 1.0 { (1.0 + (PI * x).cos()) * 0.2 } else { 0.0 };
        let mut u = state_1d(g, bump, |x| 0.3 * bump(x));
        let mass = |s: &StateField| crate::domain::integrate_field(&s.rho);
        let m0 = mass(&u);
        let mut rhs = |s: &StateField| semi_discrete_rhs(s, &StateField::zeros(g));
        for _ in 0..10 {
            u = step_time(&u, &mut rhs, 0.005).unwrap();
            assert!((mass(&u) - m0).abs() <= 1e-10);
        }
    }
}
