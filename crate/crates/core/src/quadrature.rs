//! One-dimensional quadrature and root finding helpers.

use crate::error::{Result, VpbError};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut stack = vec![(lo, hi, abs_tol)];
    let mut total = 0.0;
    let mut evals = 0usize;
    while let Some((x0, x1, tol)) = stack.pop() {
        let (v, err) = gk15(&f, x0, x1);
        evals += 1;
        if !v.is_finite() {
            return Err(VpbError::Numerical(format!(
                "non-finite integrand on [{x0}, {x1}]"
            )));
        }
        if err <= tol.max(1e-15 * v.abs()) || (x1 - x0) < 1e-12 * (hi - lo).abs().max(1e-300) {
            total += v;
        } else if evals > 20_000 {
            return Err(VpbError::NoConvergence {
                context: "adaptive quadrature".into(),
                iterations: evals,
                residual: err,
            });
        } else {
            let m = 0.5 * (x0 + x1);
            stack.push((x0, m, 0.5 * tol));
            stack.push((m, x1, 0.5 * tol));
        }
    }
    Ok(sign * total)
}

/// Root of an increasing function on `[lo, hi]` by Newton steps safeguarded
/// with bisection. `f` returns the value and derivative.
pub fn monotone_root<F: Fn(f64) -> Result<(f64, f64)>>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let (flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo > 0.0 || fhi < 0.0 {
        return Err(VpbError::Numerical(format!(
            "root not bracketed on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut last_step = hi - lo;
    for _ in 0..200 {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if dfx > 0.0 { x - fx / dfx } else { f64::NAN };
        // bisect when Newton leaves the bracket or is not converging fast enough
        if !(next > lo && next < hi) || 2.0 * (next - x).abs() > last_step {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        last_step = step;
        x = next;
        if step <= x_tol || hi - lo <= x_tol {
            return Ok(x);
        }
    }
    Err(VpbError::NoConvergence {
        context: "safeguarded Newton".into(),
        iterations: 200,
        residual: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        let v = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-11).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        let v = integrate(|x| x * x, 1.0, 0.0, 1e-13).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn finds_monotone_roots() {
        let r = monotone_root(|x| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 3.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(monotone_root(|x| Ok((x - 5.0, 1.0)), 0.0, 1.0, 1e-12).is_err());
    }
}
