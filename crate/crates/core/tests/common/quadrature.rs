//! Adaptive Gauss-Kronrod (7/15) quadrature used as an independent oracle in
//! tests. Nothing in the library calls into this module.
#![allow(dead_code)]

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

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Global adaptive integration of `f` over `[a, b]` to relative tolerance
/// `rel_tol` (with a vanishing absolute floor).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

fn gauss_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(right, left)` tail integrals of `g(z) phi(z - mu)` over `z > t` and
/// `z < -t`, each truncated 40 standard deviations out.
pub fn gauss_tail_parts(g: impl Fn(f64) -> f64, t: f64, mu: f64) -> (f64, f64) {
    let integrand = |z: f64| g(z) * gauss_density(z - mu);
    let right_end = t.max(mu) + 40.0;
    let left_end = (-t).min(mu) - 40.0;
    let right = integrate(&integrand, t, right_end, 1e-13);
    let left = integrate(&integrand, left_end, -t, 1e-13);
    (right, left)
}

/// `E[g(Z) 1{|Z| > t}]` for `Z ~ N(mu, 1)`.
pub fn gauss_tail_moment(g: impl Fn(f64) -> f64, t: f64, mu: f64) -> f64 {
    let (right, left) = gauss_tail_parts(g, t, mu);
    right + left
}
