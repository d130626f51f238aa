//! Timing harness comparing the non-local-term evaluation strategies.
//!
//! Every method applied to the same right-hand side must produce the same
//! discrete field, so each benchmarked pair doubles as a correctness check:
//! the "direct" baselines are built on exactly the same discrete operator as
//! their fast counterparts (a dense matrix assembled from unit-load spectral
//! solves for the screened Poisson problem; a sampled displacement table for
//! translation-invariant convolution), and the harness validates agreement
//! before reporting times.

use crate::domain::{make_grid, Domain, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::spectral::{convolve_fft, sample_displacement_kernel, solve_screened_poisson};
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct BenchResult {
    pub dim: usize,
    pub method: String,
    pub ns: usize,
    pub threads: usize,
    pub seconds_median: f64,
    pub repeats: usize,
}

/// Dense matrix of the discrete screened-Poisson solve, assembled column by
/// column from unit loads.  Applying it is the O(Ns²ᵈ) "direct" method; by
/// construction it agrees with the spectral solve to rounding.
pub fn dense_solve_matrix(grid: Grid, k: f64, lambda: f64) -> Vec<Vec<f64>> {
    let n = grid.cell_count();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = ScalarField::zeros(grid);
        e.values_mut()[j] = 1.0;
        cols.push(solve_screened_poisson(&e, k, lambda).values().to_vec());
    }
    cols
}

fn matvec_columns(cols: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let mut out = vec![0.0; n];
    for (j, col) in cols.iter().enumerate() {
        let qj = q[j];
        if qj != 0.0 {
            for i in 0..n {
                out[i] += col[i] * qj;
            }
        }
    }
    out
}

/// Direct application of a sampled displacement kernel: out[i] = Σⱼ T[i−j+c]·qⱼ·dv,
/// the same sum the padded FFT computes.
fn table_convolve(table: &ScalarField, q: &ScalarField) -> Vec<f64> {
    let grid = q.grid();
    let ns = grid.cells_per_axis();
    let dv = grid.cell_volume();
    let t = table.values();
    let qv = q.values();
    match grid.domain().dim() {
        1 => {
            let mut out = vec![0.0; ns];
            for i in 0..ns {
                let mut acc = 0.0;
                for j in 0..ns {
                    acc += t[i + ns - 1 - j] * qv[j];
                }
                out[i] = acc * dv;
            }
            out
        }
        _ => {
            let m = 2 * ns - 1;
            let mut out = vec![0.0; ns * ns];
            for ix in 0..ns {
                for iy in 0..ns {
                    let mut acc = 0.0;
                    for jx in 0..ns {
                        let row = (ix + ns - 1 - jx) * m + ns - 1;
                        for jy in 0..ns {
                            acc += t[row + iy - jy] * qv[jx * ns + jy];
                        }
                    }
                    out[ix * ns + iy] = acc * dv;
                }
            }
            out
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn smooth_load(grid: Grid) -> ScalarField {
    let l = grid.domain().width();
    let w = std::f64::consts::PI / l;
    match grid.domain().dim() {
        1 => ScalarField::from_fn_1d(grid, |x| (w * x).cos() * (1.0 + 0.3 * (3.0 * w * x).sin())),
        _ => ScalarField::from_fn_2d(grid, |x, y| (w * x).cos() * (w * y).cos()),
    }
}

fn median_seconds(repeats: usize, mut run: impl FnMut()) -> f64 {
    run(); // warm-up (plan caches, allocator)
    let mut times: Vec<f64> = (0..repeats)
        .map(|_| {
            let t = Instant::now();
            run();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[repeats / 2]
}

/// Benchmark one grid size: times the spectral screened-Poisson solve against
/// its dense-matrix equivalent, and the padded-FFT convolution against the
/// displacement-table double sum, verifying each pair agrees to 1e-10 first.
pub fn run_bench(dim: usize, ns: usize, repeats: usize, threads: usize) -> Result<Vec<BenchResult>> {
    if repeats < 5 {
        return Err(Error::InvalidArgument("need at least 5 repeats".into()));
    }
    let l = 2.0 * std::f64::consts::PI;
    let grid = make_grid(Domain::new(dim, l / 2.0)?, ns)?;
    let q = smooth_load(grid);
    let (k, lambda) = (4.0, 1.0);
    let mut results = Vec::new();
    let mut push = |method: &str, seconds: f64| {
        results.push(BenchResult {
            dim,
            method: method.to_string(),
            ns,
            threads,
            seconds_median: seconds,
            repeats,
        });
    };

    // screened-Poisson pair: dense matvec vs spectral solve.  The dense
    // matrix is quadratic in the cell count, so this pair is skipped on
    // grids where it would not fit comfortably in memory; the convolution
    // pair below still covers the large-grid scaling.
    if grid.cell_count() <= 8192 {
        let cols = dense_solve_matrix(grid, k, lambda);
        let spectral = solve_screened_poisson(&q, k, lambda);
        let direct = matvec_columns(&cols, q.values());
        let gap = max_abs_diff(spectral.values(), &direct);
        if gap > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "direct/spectral disagreement {gap:.3e} at Ns={ns}"
            )));
        }
        push("direct", median_seconds(repeats, || {
            std::hint::black_box(matvec_columns(&cols, q.values()));
        }));
        push("spectral", median_seconds(repeats, || {
            std::hint::black_box(solve_screened_poisson(&q, k, lambda));
        }));
    }

    // convolution pair: displacement-table sum vs padded FFT
    let kernel = KernelSpec::CuckerSmale { k_cs: 5.0, gamma: 2.0 };
    let table = sample_displacement_kernel(&kernel, grid)?;
    let fft_out = convolve_fft(&table, &q)?;
    let tab_out = table_convolve(&table, &q);
    let gap = max_abs_diff(fft_out.values(), &tab_out);
    if gap > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "table/FFT convolution disagreement {gap:.3e} at Ns={ns}"
        )));
    }
    push("conv_direct", median_seconds(repeats, || {
        std::hint::black_box(table_convolve(&table, &q));
    }));
    push("fft_conv", median_seconds(repeats, || {
        std::hint::black_box(convolve_fft(&table, &q).unwrap());
    }));

    Ok(results)
}

/// For each method pair, the smallest benchmarked Ns at which the fast method
/// beats its direct counterpart.
pub fn crossover_report(results: &[BenchResult]) -> Vec<(String, Option<usize>)> {
    let pairs = [("direct", "spectral"), ("conv_direct", "fft_conv")];
    let mut out = Vec::new();
    for (slow, fast) in pairs {
        let mut sizes: Vec<usize> = results
            .iter()
            .filter(|r| r.method == slow)
            .map(|r| r.ns)
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        let cross = sizes.into_iter().find(|&ns| {
            let t = |m: &str| {
                results
                    .iter()
                    .find(|r| r.method == m && r.ns == ns)
                    .map(|r| r.seconds_median)
            };
            matches!((t(slow), t(fast)), (Some(a), Some(b)) if b < a)
        });
        out.push((format!("{fast} vs {slow}"), cross));
    }
    out
}

pub fn results_to_csv(results: &[BenchResult]) -> String {
    let mut s = String::from("dim,method,Ns,threads,seconds_median,repeats\n");
    for r in results {
        s.push_str(&format!(
            "{},{},{},{},{:.9e},{}\n",
            r.dim, r.method, r.ns, r.threads, r.seconds_median, r.repeats
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_1d_small_grid_runs_and_validates() {
        let results = run_bench(1, 64, 5, 1).unwrap();
        assert_eq!(results.len(), 4);
        for r in &results {
            assert!(r.seconds_median >= 0.0 && r.seconds_median.is_finite());
            assert_eq!(r.dim, 1);
            assert_eq!(r.ns, 64);
        }
        let methods: Vec<&str> = results.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["direct", "spectral", "conv_direct", "fft_conv"]);
    }

    #[test]
    fn bench_2d_small_grid_runs_and_validates() {
        let results = run_bench(2, 12, 5, 1).unwrap();
        assert_eq!(results.len(), 4);
    }

    #[test]
    fn rejects_too_few_repeats() {
        assert!(run_bench(1, 32, 3, 1).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let results = run_bench(1, 32, 5, 1).unwrap();
        let csv = results_to_csv(&results);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "dim,method,Ns,threads,seconds_median,repeats");
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn crossover_structure() {
        let mut all = run_bench(1, 32, 5, 1).unwrap();
        all.extend(run_bench(1, 64, 5, 1).unwrap());
        let report = crossover_report(&all);
        assert_eq!(report.len(), 2);
        assert!(report[0].0.contains("spectral"));
    }
}
