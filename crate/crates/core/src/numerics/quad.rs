//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).norm())
}

/// Integrates a complex-valued `f` over `[a, b]` to absolute tolerance
/// `abs_tol` or relative tolerance `rel_tol`, whichever is looser.
pub fn integrate_complex(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: Complex64::new(0.0, 0.0), error_estimate: 0.0, evaluations: 0 });
    }
    let mut intervals: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    intervals.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let total: Complex64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(Quadrature { value: total, error_estimate: err, evaluations });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let (worst, _) = intervals.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|q| q.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn smooth_and_endpoint_singular() {
        let v = integrate(f64::cos, 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!((v - 1f64.sin()).abs() < 1e-14);
        // ∫_0^1 x^{-1/2} dx = 2, integrable singularity at 0
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn complex_oscillatory() {
        let q = integrate_complex(|x| Complex64::from_polar(1.0, 10.0 * x), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        let exact = (Complex64::from_polar(1.0, 10.0) - 1.0) / Complex64::new(0.0, 10.0);
        assert!((q.value - exact).norm() < 1e-12);
    }
}
