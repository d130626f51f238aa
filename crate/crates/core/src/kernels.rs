//! Pointwise evaluation of every interaction function ψ used by the solvers:
//! the closed-form Green's function of the screened Poisson operator on a
//! bounded 1D interval, its free-space counterpart, the classical
//! Cucker-Smale rational kernel, the 2D Dirichlet sine-series Green's
//! function, and the radial Bessel kernel with its boundary image term.
//!
//! All evaluators are pure functions of an immutable [`KernelSpec`] and may be
//! called concurrently.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Requests closer than this to a kernel singularity are rejected.
pub const SINGULARITY_TOL: f64 = 1e-12;

fn default_truncation() -> usize {
    256
}

/// Tagged description of an interaction function and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum KernelSpec {
    /// Green's function of −(1/2k)(∂²ₓ − λ²) on [−L/2, L/2], zero boundary.
    #[serde(rename = "screened_poisson_1d")]
    ScreenedPoisson1d {
        k: f64,
        lambda: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    /// (k/λ)e^{−λ|x−s|}: the same operator's kernel on the whole line.
    #[serde(rename = "free_space_exp")]
    FreeSpaceExp { k: f64, lambda: f64 },
    /// K/(1+r²)^γ, a function of pair distance only.
    #[serde(rename = "cucker_smale")]
    CuckerSmale {
        #[serde(rename = "K")]
        k_cs: f64,
        gamma: f64,
    },
    /// Truncated double sine series for the 2D Dirichlet Green's function.
    #[serde(rename = "screened_poisson_2d")]
    ScreenedPoisson2d {
        k: f64,
        lambda: f64,
        #[serde(rename = "L")]
        l: f64,
        #[serde(default = "default_truncation")]
        truncation: usize,
    },
    /// Radially symmetric free-space kernel in d ∈ {2,3} with an image-point
    /// correction enforcing the zero boundary condition on a ball.
    #[serde(rename = "radial_bessel")]
    RadialBessel {
        k: f64,
        lambda: f64,
        d: usize,
        #[serde(rename = "L")]
        l: f64,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("kernel parameter {name} must be positive, got {v}")))
            }
        };
        match *self {
            KernelSpec::ScreenedPoisson1d { k, lambda, l } => {
                positive("k", k)?;
                positive("lambda", lambda)?;
                positive("L", l)
            }
            KernelSpec::FreeSpaceExp { k, lambda } => {
                positive("k", k)?;
                positive("lambda", lambda)
            }
            KernelSpec::CuckerSmale { k_cs, gamma } => {
                positive("K", k_cs)?;
                positive("gamma", gamma)
            }
            KernelSpec::ScreenedPoisson2d { k, lambda, l, truncation } => {
                positive("k", k)?;
                positive("lambda", lambda)?;
                positive("L", l)?;
                if truncation == 0 {
                    return Err(Error::InvalidArgument("truncation must be ≥ 1".into()));
                }
                Ok(())
            }
            KernelSpec::RadialBessel { k, lambda, d, l } => {
                positive("k", k)?;
                positive("lambda", lambda)?;
                positive("L", l)?;
                if d != 2 && d != 3 {
                    return Err(Error::InvalidArgument(format!("radial kernel dimension must be 2 or 3, got {d}")));
                }
                Ok(())
            }
        }
    }

    /// Evaluate at a pair of 1D coordinates.
    pub fn eval_1d(&self, x: f64, s: f64) -> Result<f64> {
        match *self {
            KernelSpec::ScreenedPoisson1d { k, lambda, l } => greens_1d_eval(k, lambda, l, x, s),
            KernelSpec::FreeSpaceExp { k, lambda } => Ok(free_space_eval(k, lambda, x, s)),
            KernelSpec::CuckerSmale { k_cs, gamma } => Ok(cs_kernel_eval(k_cs, gamma, (x - s).abs())),
            _ => Err(Error::InvalidArgument("kernel is not a function of 1D coordinates".into())),
        }
    }

    /// Evaluate at a pair of 2D points.
    pub fn eval_2d(&self, x: [f64; 2], s: [f64; 2]) -> Result<f64> {
        let r = ((x[0] - s[0]).powi(2) + (x[1] - s[1]).powi(2)).sqrt();
        match *self {
            KernelSpec::FreeSpaceExp { k, lambda } => Ok((k / lambda) * (-lambda * r).exp()),
            KernelSpec::CuckerSmale { k_cs, gamma } => Ok(cs_kernel_eval(k_cs, gamma, r)),
            KernelSpec::ScreenedPoisson2d { k, lambda, l, truncation } => {
                greens_2d_series_eval(k, lambda, l, truncation, x, s)
            }
            KernelSpec::RadialBessel { k, lambda, d, l } => radial_bessel_eval(k, lambda, d, l, x, s),
            _ => Err(Error::InvalidArgument("kernel is not a function of 2D points".into())),
        }
    }

    /// True for kernels that depend on x − s only (FFT-convolvable).
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, KernelSpec::FreeSpaceExp { .. } | KernelSpec::CuckerSmale { .. })
    }
}

/// Closed-form Green's function of −(1/2k)(∂²ₓ − λ²) with zero Dirichlet
/// conditions on [−L/2, L/2]:
///
/// ψ(x,s) = K σ₊(min(x,s)) σ₋(max(x,s)),  K = −(k/λ)/(e^{λL} − e^{−λL}),
/// σ₊(z) = 2 sinh(λ(z + L/2)),  σ₋(z) = 2 sinh(λ(z − L/2)).
pub fn greens_1d_eval(k: f64, lambda: f64, l: f64, x: f64, s: f64) -> Result<f64> {
    let half = l / 2.0;
    let tol = 1e-12 * half.max(1.0);
    for (name, c) in [("x", x), ("s", s)] {
        if c < -half - tol || c > half + tol {
            return Err(Error::OutOfDomain(format!(
                "{name}={c} outside [−{half}, {half}]"
            )));
        }
    }
    let cap = -(k / lambda) / ((lambda * l).exp() - (-lambda * l).exp());
    let sig_p = |z: f64| 2.0 * (lambda * (z + half)).sinh();
    let sig_m = |z: f64| 2.0 * (lambda * (z - half)).sinh();
    let (lo, hi) = if s <= x { (s, x) } else { (x, s) };
    Ok(cap * sig_p(lo) * sig_m(hi))
}

/// Free-space kernel (k/λ)e^{−λ|x−s|}.
pub fn free_space_eval(k: f64, lambda: f64, x: f64, s: f64) -> f64 {
    (k / lambda) * (-lambda * (x - s).abs()).exp()
}

/// Classical Cucker-Smale kernel K/(1+r²)^γ.
pub fn cs_kernel_eval(k_cs: f64, gamma: f64, r: f64) -> f64 {
    k_cs / (1.0 + r * r).powf(gamma)
}

/// Truncated sine-series Green's function of −(1/2k)(∇² − λ²) on the square
/// [−L/2, L/2]² with zero boundary values.  Coordinates are translated by L/2
/// so the eigenfunctions are sin(nπx'/L); each (n,m) term carries weight
/// (2/L)²·2k/(μ_{nm} + λ²) with μ_{nm} = (nπ/L)² + (mπ/L)².
pub fn greens_2d_series_eval(
    k: f64,
    lambda: f64,
    l: f64,
    truncation: usize,
    x: [f64; 2],
    s: [f64; 2],
) -> Result<f64> {
    let dist = ((x[0] - s[0]).powi(2) + (x[1] - s[1]).powi(2)).sqrt();
    if dist < SINGULARITY_TOL {
        return Err(Error::SingularKernel(format!(
            "series kernel is singular along x=s (requested separation {dist:.3e})"
        )));
    }
    let half = l / 2.0;
    // translated coordinates in [0, L]
    let xp = [x[0] + half, x[1] + half];
    let sp = [s[0] + half, s[1] + half];
    let pi_over_l = std::f64::consts::PI / l;
    // precompute the four sine families
    let sin_tab = |coord: f64| -> Vec<f64> {
        (1..=truncation).map(|n| (n as f64 * pi_over_l * coord).sin()).collect()
    };
    let sx0 = sin_tab(xp[0]);
    let sx1 = sin_tab(xp[1]);
    let ss0 = sin_tab(sp[0]);
    let ss1 = sin_tab(sp[1]);
    let scale = (2.0 / l) * (2.0 / l) * 2.0 * k;
    let mut total = 0.0;
    for n in 1..=truncation {
        let mu_n = (n as f64 * pi_over_l).powi(2);
        let an = sx0[n - 1] * ss0[n - 1];
        if an == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for m in 1..=truncation {
            let mu = mu_n + (m as f64 * pi_over_l).powi(2);
            inner += sx1[m - 1] * ss1[m - 1] / (mu + lambda * lambda);
        }
        total += an * inner;
    }
    Ok(scale * total)
}

/// Radially symmetric free-space kernel
/// ψ̃(r) = (k/2π)^{d/2} (λ/r)^{d/2−1} K_{d/2−1}(λr)
/// plus the image-point correction φ(x,s) = −ψ̃((2/L)‖x‖·‖s − (L²/4)x/‖x‖²‖)
/// that zeroes the kernel on the sphere of radius L/2.
pub fn radial_bessel_eval(k: f64, lambda: f64, d: usize, l: f64, x: [f64; 2], s: [f64; 2]) -> Result<f64> {
    let r = ((x[0] - s[0]).powi(2) + (x[1] - s[1]).powi(2)).sqrt();
    if r < SINGULARITY_TOL {
        return Err(Error::SingularKernel(format!(
            "radial kernel is singular at zero separation (requested {r:.3e})"
        )));
    }
    let norm_x = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if norm_x < SINGULARITY_TOL {
        return Err(Error::SingularKernel(
            "image point is undefined for x at the origin".into(),
        ));
    }
    let direct = radial_bessel_profile(k, lambda, d, r)?;
    // image point s* = (L²/4) x/‖x‖²; argument (2/L)‖x‖‖s − s*‖
    let scale = l * l / 4.0 / (norm_x * norm_x);
    let sx = [x[0] * scale, x[1] * scale];
    let image_r = (2.0 / l) * norm_x * ((s[0] - sx[0]).powi(2) + (s[1] - sx[1]).powi(2)).sqrt();
    let image = radial_bessel_profile(k, lambda, d, image_r)?;
    Ok(direct - image)
}

/// The radial profile ψ̃(r) itself (no image term).
pub fn radial_bessel_profile(k: f64, lambda: f64, d: usize, r: f64) -> Result<f64> {
    if r < SINGULARITY_TOL {
        return Err(Error::SingularKernel("radial profile requested at r=0".into()));
    }
    let half_d = d as f64 / 2.0;
    let front = (k / (2.0 * std::f64::consts::PI)).powf(half_d) * (lambda / r).powf(half_d - 1.0);
    let z = lambda * r;
    let bessel = match d {
        3 => (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp(),
        2 => bessel_k0(z),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "radial kernel dimension must be 2 or 3, got {d}"
            )))
        }
    };
    Ok(front * bessel)
}

// ---------------------------------------------------------------------------
// Modified Bessel functions I0 and K0 by Chebyshev expansion (double
// precision, standard Cephes coefficient tables).

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x * b1 - b2 + c;
    }
    0.5 * (b0 - b2)
}

const I0_A: [f64; 30] = [
    -4.415_341_646_479_339e-18,
    3.330_794_518_822_238e-17,
    -2.431_279_846_547_955e-16,
    1.715_391_285_555_133e-15,
    -1.168_533_287_799_345e-14,
    7.676_185_498_604_936e-14,
    -4.856_446_783_111_929e-13,
    2.955_052_663_129_64e-12,
    -1.726_826_291_441_556e-11,
    9.675_809_035_373_237e-11,
    -5.189_795_601_635_263e-10,
    2.659_823_724_682_387e-9,
    -1.300_025_009_986_248e-8,
    6.046_995_022_541_919e-8,
    -2.670_793_853_940_612e-7,
    1.117_387_539_120_103_7e-6,
    -4.416_738_358_458_75e-6,
    1.644_844_807_072_889_7e-5,
    -5.754_195_010_082_104e-5,
    1.885_028_850_958_416_5e-4,
    -5.763_755_745_385_824e-4,
    1.639_475_616_941_335_8e-3,
    -4.324_309_995_050_576e-3,
    1.054_646_039_459_499_8e-2,
    -2.373_741_480_589_947e-2,
    4.930_528_423_967_071e-2,
    -9.490_109_704_804_764e-2,
    1.716_209_015_222_087_7e-1,
    -3.046_826_723_431_984e-1,
    6.767_952_744_094_761e-1,
];

const I0_B: [f64; 25] = [
    -7.233_180_487_874_754e-18,
    -4.830_504_485_944_182e-18,
    4.465_621_420_296_76e-17,
    3.461_222_867_697_461e-17,
    -2.827_623_980_516_583_5e-16,
    -3.425_485_619_677_219e-16,
    1.772_560_133_056_526_4e-15,
    3.811_680_669_352_622_4e-15,
    -9.554_846_698_828_307e-15,
    -4.150_569_347_287_222e-14,
    1.540_086_217_521_41e-14,
    3.852_778_382_742_142_7e-13,
    7.180_124_451_383_666e-13,
    -1.794_178_531_506_806e-12,
    -1.321_581_184_044_771_3e-11,
    -3.149_916_527_963_241_4e-11,
    1.188_914_710_784_643_8e-11,
    4.940_602_388_224_97e-10,
    3.396_232_025_708_386_3e-9,
    2.266_668_990_498_178e-8,
    2.048_918_589_469_063_7e-7,
    2.891_370_520_834_756_5e-6,
    6.889_758_346_916_824e-5,
    3.369_116_478_255_694e-3,
    8.044_904_110_141_088e-1,
];

const K0_A: [f64; 10] = [
    1.374_465_435_613_523e-16,
    4.259_816_142_796_61e-14,
    1.034_969_525_763_384_2e-11,
    1.904_516_377_220_209e-9,
    2.534_791_079_026_149_4e-7,
    2.286_212_103_119_451_8e-5,
    1.264_615_411_446_926e-3,
    3.597_993_651_536_15e-2,
    3.442_898_999_246_285e-1,
    -5.353_273_932_339_027e-1,
];

const K0_B: [f64; 25] = [
    5.300_433_772_686_263e-18,
    -1.647_580_430_152_421_3e-17,
    5.210_391_505_039_027_5e-17,
    -1.678_231_096_805_412e-16,
    5.512_055_978_524_319e-16,
    -1.848_593_377_343_779e-15,
    6.340_076_477_405_07e-15,
    -2.227_513_326_991_669_7e-14,
    8.032_890_775_363_575e-14,
    -2.980_096_923_172_730_6e-13,
    1.140_340_586_444_483_5e-12,
    -4.514_597_883_373_944e-12,
    1.855_949_114_954_717_9e-11,
    -7.957_489_244_477_108e-11,
    3.577_397_281_400_301e-10,
    -1.697_534_509_389_06e-9,
    8.574_034_017_414_226e-9,
    -4.660_489_897_687_948e-8,
    2.766_813_639_445_015e-7,
    -1.831_755_522_719_119_4e-6,
    1.394_981_371_887_65e-5,
    -1.284_954_958_162_780_3e-4,
    1.569_883_885_730_053_4e-3,
    -3.144_810_131_196_45e-2,
    2.440_303_082_065_955_3,
];

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 8.0 {
        x.exp() * chbevl(x / 2.0 - 2.0, &I0_A)
    } else {
        x.exp() * chbevl(32.0 / x - 2.0, &I0_B) / x.sqrt()
    }
}

/// Modified Bessel function of the second kind, order zero (x > 0).
pub fn bessel_k0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        chbevl(x * x - 2.0, &K0_A) - (x / 2.0).ln() * bessel_i0(x)
    } else {
        (-x).exp() * chbevl(8.0 / x - 2.0, &K0_B) / x.sqrt()
    }
}
