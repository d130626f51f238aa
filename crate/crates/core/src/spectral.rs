//! Fast evaluation of the non-local terms.
//!
//! The screened Poisson solve 𝓛ₓφ = q with 𝓛ₓ = −(1/2k)(∇² − λ²) and zero
//! Dirichlet conditions diagonalizes in the sine basis: with q̂ₙ the DST-II
//! coefficients of the cell-center samples, φ̂ₙ = 2k q̂ₙ/(μₙ + λ²) where
//! μₙ = (nπ/L)² (sum of per-axis eigenvalues in 2D), and φ is recovered by
//! the scaled DST-III.  Translation-invariant kernels (the Cucker-Smale
//! rational kernel, the free-space exponential) are applied instead by
//! zero-padded FFT convolution.  `convolve_direct` is the O(Ns²)/O(Ns⁴)
//! quadrature oracle both fast paths are validated against.

use crate::domain::{Domain, Grid, ScalarField, make_grid};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Sine coefficients of a field; entry n−1 holds the coefficient of
/// sin(nπx'/L) (per axis in 2D), n = 1..Ns.
#[derive(Clone, Debug)]
pub struct SineSpectrum {
    pub grid: Grid,
    pub coefficients: Vec<f64>,
}

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}

/// DST-II of a real sequence: F_k = Σₙ xₙ sin(π(n+½)(k+1)/N), computed via a
/// length-4N complex FFT embedding.
pub fn dst2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let fft = plan_forward(4 * n);
    let mut buf = vec![Complex::new(0.0, 0.0); 4 * n];
    for (i, &v) in x.iter().enumerate() {
        buf[2 * i + 1].re = v;
        buf[4 * n - 1 - 2 * i].re = -v;
    }
    fft.process(&mut buf);
    (0..n).map(|k| -0.5 * buf[k + 1].im).collect()
}

/// Scaled DST-III, the exact inverse of [`dst2`]:
/// xₙ = (2/N)[Σ_{k<N−1} F_k sin(π(n+½)(k+1)/N) + ½(−1)ⁿ F_{N−1}].
pub fn dst3_inverse(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let fft = plan_forward(4 * n);
    let mut buf = vec![Complex::new(0.0, 0.0); 4 * n];
    for (k, &v) in f.iter().enumerate() {
        let v = if k == n - 1 { 0.5 * v } else { v };
        buf[k + 1].re = v;
        buf[4 * n - (k + 1)].re = -v;
    }
    fft.process(&mut buf);
    (0..n).map(|i| -0.5 * buf[2 * i + 1].im * 2.0 / n as f64).collect()
}

/// Apply a 1D transform along each axis of a row-major (y-fastest) square
/// array.
fn transform_2d(values: &[f64], ns: usize, t: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut out = vec![0.0; ns * ns];
    // along y: rows are contiguous
    for ix in 0..ns {
        let row = t(&values[ix * ns..(ix + 1) * ns]);
        out[ix * ns..(ix + 1) * ns].copy_from_slice(&row);
    }
    // along x: gather columns
    let mut col = vec![0.0; ns];
    for iy in 0..ns {
        for ix in 0..ns {
            col[ix] = out[ix * ns + iy];
        }
        let tc = t(&col);
        for ix in 0..ns {
            out[ix * ns + iy] = tc[ix];
        }
    }
    out
}

/// Forward sine transform of cell-center samples (DST-II per axis).
pub fn dst_forward(f: &ScalarField) -> SineSpectrum {
    let grid = f.grid();
    let coefficients = match grid.domain().dim() {
        1 => dst2(f.values()),
        _ => transform_2d(f.values(), grid.cells_per_axis(), |r| dst2(r)),
    };
    SineSpectrum { grid, coefficients }
}

/// Inverse of [`dst_forward`].
pub fn dst_backward(c: &SineSpectrum) -> ScalarField {
    let values = match c.grid.domain().dim() {
        1 => dst3_inverse(&c.coefficients),
        _ => transform_2d(&c.coefficients, c.grid.cells_per_axis(), |r| dst3_inverse(r)),
    };
    ScalarField::new(c.grid, values).expect("spectrum length matches grid")
}

/// Solve −(1/2k)(∇² − λ²)φ = q with zero Dirichlet values: scale each sine
/// coefficient by 2k/(μ + λ²).
pub fn solve_screened_poisson(q: &ScalarField, k: f64, lambda: f64) -> ScalarField {
    let grid = q.grid();
    let ns = grid.cells_per_axis();
    let l = grid.domain().width();
    let pi_over_l = std::f64::consts::PI / l;
    let mut spec = dst_forward(q);
    match grid.domain().dim() {
        1 => {
            for (i, c) in spec.coefficients.iter_mut().enumerate() {
                let mu = ((i + 1) as f64 * pi_over_l).powi(2);
                *c *= 2.0 * k / (mu + lambda * lambda);
            }
        }
        _ => {
            for ix in 0..ns {
                let mux = ((ix + 1) as f64 * pi_over_l).powi(2);
                for iy in 0..ns {
                    let mu = mux + ((iy + 1) as f64 * pi_over_l).powi(2);
                    spec.coefficients[ix * ns + iy] *= 2.0 * k / (mu + lambda * lambda);
                }
            }
        }
    }
    dst_backward(&spec)
}

/// Midpoint-quadrature integral transform (𝓛_ψ q)(xᵢ) = Σⱼ ψ(xᵢ,xⱼ) q(xⱼ) dxᵈ.
/// For singular kernels in 2D the self-cell term j=i is skipped
/// (principal-value-style midpoint rule).
pub fn convolve_direct(kernel: &KernelSpec, q: &ScalarField) -> Result<ScalarField> {
    let grid = q.grid();
    let dv = grid.cell_volume();
    let out = match grid.domain().dim() {
        1 => {
            let xs = grid.centers();
            let mut out = vec![0.0; xs.len()];
            for (i, &xi) in xs.iter().enumerate() {
                let mut acc = 0.0;
                for (j, &xj) in xs.iter().enumerate() {
                    acc += kernel.eval_1d(xi, xj)? * q.values()[j];
                }
                out[i] = acc * dv;
            }
            out
        }
        _ => {
            let ns = grid.cells_per_axis();
            let xs = grid.centers();
            let singular = matches!(
                kernel,
                KernelSpec::ScreenedPoisson2d { .. } | KernelSpec::RadialBessel { .. }
            );
            let mut out = vec![0.0; ns * ns];
            for ix in 0..ns {
                for iy in 0..ns {
                    let xi = [xs[ix], xs[iy]];
                    let mut acc = 0.0;
                    for jx in 0..ns {
                        for jy in 0..ns {
                            if singular && jx == ix && jy == iy {
                                continue;
                            }
                            acc += kernel.eval_2d(xi, [xs[jx], xs[jy]])?
                                * q.values()[grid.index2(jx, jy)];
                        }
                    }
                    out[grid.index2(ix, iy)] = acc * dv;
                }
            }
            out
        }
    };
    ScalarField::new(grid, out)
}

/// Grid holding kernel samples at displacements (i − (Ns−1))·dx per axis,
/// 2Ns−1 samples per axis with the zero displacement at the center cell.
pub fn displacement_grid(grid: Grid) -> Result<Grid> {
    let m = 2 * grid.cells_per_axis() - 1;
    let domain = Domain::new(grid.domain().dim(), 0.5 * m as f64 * grid.dx())?;
    make_grid(domain, m)
}

/// Sample a translation-invariant kernel on the displacement grid of `grid`.
pub fn sample_displacement_kernel(kernel: &KernelSpec, grid: Grid) -> Result<ScalarField> {
    if !kernel.is_translation_invariant() {
        return Err(Error::InvalidArgument(
            "kernel is not translation-invariant; FFT convolution does not apply".into(),
        ));
    }
    let dgrid = displacement_grid(grid)?;
    Ok(match grid.domain().dim() {
        1 => ScalarField::from_fn_1d(dgrid, |r| kernel.eval_1d(r, 0.0).unwrap()),
        _ => ScalarField::from_fn_2d(dgrid, |rx, ry| kernel.eval_2d([rx, ry], [0.0, 0.0]).unwrap()),
    })
}

fn fft_1d(buf: &mut [Complex<f64>], inverse: bool) {
    let fft = if inverse {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().unwrap();
        cache
            .entry(buf.len())
            .or_insert_with(|| FftPlanner::new().plan_fft_inverse(buf.len()))
            .clone()
    } else {
        plan_forward(buf.len())
    };
    fft.process(buf);
}

/// Linear (non-circular) convolution of `q` with a kernel sampled on the
/// displacement grid, times dxᵈ, restricted to the original grid.  Padding is
/// the next power of two at or above 2Ns−1.
pub fn convolve_fft(kernel_samples: &ScalarField, q: &ScalarField) -> Result<ScalarField> {
    let grid = q.grid();
    let ns = grid.cells_per_axis();
    let kgrid = kernel_samples.grid();
    if kgrid.domain().dim() != grid.domain().dim()
        || kgrid.cells_per_axis() != 2 * ns - 1
        || (kgrid.dx() - grid.dx()).abs() > 1e-12 * grid.dx()
    {
        return Err(Error::SizeMismatch(format!(
            "kernel sampled on {} cells of spacing {}, expected {} of spacing {}",
            kgrid.cells_per_axis(),
            kgrid.dx(),
            2 * ns - 1,
            grid.dx()
        )));
    }
    let p = (2 * ns - 1).next_power_of_two();
    let dv = grid.cell_volume();
    match grid.domain().dim() {
        1 => {
            let mut kb = vec![Complex::new(0.0, 0.0); p];
            let mut qb = vec![Complex::new(0.0, 0.0); p];
            for (i, &v) in kernel_samples.values().iter().enumerate() {
                kb[i].re = v;
            }
            for (i, &v) in q.values().iter().enumerate() {
                qb[i].re = v;
            }
            fft_1d(&mut kb, false);
            fft_1d(&mut qb, false);
            for (a, b) in kb.iter_mut().zip(&qb) {
                *a *= b;
            }
            fft_1d(&mut kb, true);
            let scale = dv / p as f64;
            let out = (0..ns).map(|i| kb[i + ns - 1].re * scale).collect();
            ScalarField::new(grid, out)
        }
        _ => {
            let embed = |vals: &[f64], n: usize| -> Vec<Complex<f64>> {
                let mut b = vec![Complex::new(0.0, 0.0); p * p];
                for ix in 0..n {
                    for iy in 0..n {
                        b[ix * p + iy].re = vals[ix * n + iy];
                    }
                }
                b
            };
            let fft2 = |b: &mut Vec<Complex<f64>>, inverse: bool| {
                for row in b.chunks_mut(p) {
                    fft_1d(row, inverse);
                }
                let mut col = vec![Complex::new(0.0, 0.0); p];
                for iy in 0..p {
                    for ix in 0..p {
                        col[ix] = b[ix * p + iy];
                    }
                    fft_1d(&mut col, inverse);
                    for ix in 0..p {
                        b[ix * p + iy] = col[ix];
                    }
                }
            };
            let mut kb = embed(kernel_samples.values(), 2 * ns - 1);
            let mut qb = embed(q.values(), ns);
            fft2(&mut kb, false);
            fft2(&mut qb, false);
            for (a, b) in kb.iter_mut().zip(&qb) {
                *a *= b;
            }
            fft2(&mut kb, true);
            let scale = dv / (p * p) as f64;
            let mut out = vec![0.0; ns * ns];
            for ix in 0..ns {
                for iy in 0..ns {
                    out[ix * ns + iy] = kb[(ix + ns - 1) * p + (iy + ns - 1)].re * scale;
                }
            }
            ScalarField::new(grid, out)
        }
    }
}
