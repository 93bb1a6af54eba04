//! Quadrature rules.

use alloc::vec::Vec;


/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(y: &[f64], h: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (y[0] + y[n - 1]) + y[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite Simpson rule on uniformly spaced samples. An even sample count
/// closes the last interval with the trapezoid rule.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    if n < 3 {
        return trapezoid(y, h);
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, v) in y[1..m - 1].iter().enumerate() {
        if k % 2 == 0 {
            odd += v;
        } else {
            even += v;
        }
    }
    let mut total = h / 3.0 * (y[0] + y[m - 1] + 4.0 * odd + 2.0 * even);
    if m < n {
        total += 0.5 * h * (y[n - 2] + y[n - 1]);
    }
    total
}

/// Five-point Gauss-Legendre nodes on [0, 1].
pub const GAUSS5_NODES: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332,
];

/// Five-point Gauss-Legendre weights on [0, 1].
pub const GAUSS5_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 7/15-point Gauss-Kronrod panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gauss_kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS7_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod integration over consecutive panels `edges[i]..edges[i+1]`.
///
/// Each panel is bisected until its error estimate drops below
/// `tol · width / total_width`, reaches the round-off level of the panel
/// value, or the bisection depth reaches `max_depth`.
pub fn adaptive_panels<F: FnMut(f64) -> f64>(
    f: &mut F,
    edges: &[f64],
    tol: f64,
    max_depth: u32,
) -> f64 {
    if edges.len() < 2 {
        return 0.0;
    }
    let total_width = (edges[edges.len() - 1] - edges[0]).abs();
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    let mut sum = 0.0;
    for w in edges.windows(2) {
        stack.push((w[0], w[1], 0));
        while let Some((a, b, depth)) = stack.pop() {
            let (value, err) = gauss_kronrod15(f, a, b);
            let allowed = tol * (b - a).abs() / total_width;
            let roundoff = 50.0 * f64::EPSILON * value.abs();
            if err <= allowed || err <= roundoff || depth >= max_depth {
                sum += value;
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use std::vec::Vec;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let y: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(3)).collect();
        assert!((simpson(&y, h) - 0.25).abs() < 1e-14);
        let y: Vec<f64> = (0..12).map(|k| k as f64 * h).collect();
        assert!((simpson(&y, h) - 0.5 * 1.1 * 1.1).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_linear() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(trapezoid(&y, 0.5), 1.0);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
    }

    #[test]
    fn gauss5_integrates_degree_nine() {
        let s: f64 = GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kronrod_panels_resolve_lorentzian() {
        let gamma = 1e-3;
        let mut f = |x: f64| gamma / PI / (x * x + gamma * gamma);
        let v = adaptive_panels(&mut f, &[-1.0, 0.0, 1.0], 1e-12, 40);
        let exact = 2.0 / PI * (1.0 / gamma).atan();
        assert!((v - exact).abs() < 1e-10);
    }
}
