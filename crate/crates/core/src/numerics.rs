//! Small numerical building blocks: bracketed root finding and adaptive
//! Gauss-Kronrod quadrature. Both are deterministic and allocation-light;
//! tolerances are passed explicitly by the callers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("quadrature failed to converge (interval stack exhausted)")]
    QuadratureFailure,
    #[error("root refinement lost its bracket")]
    LostBracket,
}

/// Scan `f` at `n` uniformly spaced points on `[lo, hi]` and collect every
/// sign-change bracket. Endpoints where `f` is not finite are skipped.
pub fn bracket_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    debug_assert!(n >= 2);
    let mut brackets = Vec::new();
    let step = (hi - lo) / (n - 1) as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..n {
        let x = lo + step * i as f64;
        let fx = f(x);
        if f_prev.is_finite() && fx.is_finite() && f_prev != 0.0 && f_prev.signum() != fx.signum()
        {
            brackets.push((x_prev, x));
        }
        if fx.is_finite() {
            x_prev = x;
            f_prev = fx;
        }
    }
    brackets
}

/// Refine a bracketed root by bisection down to relative width `rel_tol`
/// (floored at a few ulps). The bracket must hold a sign change.
pub fn refine_root<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64, NumericsError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !flo.is_finite() || !fhi.is_finite() || flo.signum() == fhi.signum() {
        return Err(NumericsError::LostBracket);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol.max(4.0 * f64::EPSILON) * mid.abs() {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss-Kronrod integration of `f` on `[a, b]` to relative
/// tolerance `rel_tol`, by repeated bisection of the worst interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    let (i0, e0) = gk15(&f, a, b);
    // (error, a, b, integral); worst interval is bisected first
    let mut heap: Vec<(f64, f64, f64, f64)> = vec![(e0, a, b, i0)];
    let mut total = i0;
    let mut err = e0;
    for _ in 0..2000 {
        if err <= rel_tol * total.abs().max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
        let worst = heap
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.partial_cmp(&y.1 .0).unwrap())
            .map(|(i, _)| i)
            .ok_or(NumericsError::QuadratureFailure)?;
        let (e, lo, hi, integral) = heap.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further; accept its estimate
            heap.push((0.0, lo, hi, integral));
            err -= e;
            continue;
        }
        let (i1, e1) = gk15(&f, lo, mid);
        let (i2, e2) = gk15(&f, mid, hi);
        total += i1 + i2 - integral;
        err += e1 + e2 - e;
        heap.push((e1, lo, mid, i1));
        heap.push((e2, mid, hi, i2));
    }
    if err <= rel_tol * total.abs().max(f64::MIN_POSITIVE) {
        Ok(total)
    } else {
        Err(NumericsError::QuadratureFailure)
    }
}
