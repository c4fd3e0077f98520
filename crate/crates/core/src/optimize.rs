//! One-dimensional search: dense grid bracketing, golden-section refinement
//! and bisection on monotone functions.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Points `lo, lo + step, ...` up to and including `hi`.
pub(crate) fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = ((hi - lo) / step).floor() as usize;
    let tail = if lo + count as f64 * step < hi {
        Some(hi)
    } else {
        None
    };
    (0..=count).map(move |i| lo + i as f64 * step).chain(tail)
}

/// Largest value of `f` on the grid; ties go to the smallest abscissa.
pub(crate) fn grid_argmax(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let mut best = (lo, f64::NEG_INFINITY);
    for x in grid(lo, hi, step) {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Golden-section search for a maximum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`.
pub(crate) fn golden_section_max(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid bracket followed by golden-section refinement around the best grid
/// point. Never returns a point worse than the best grid point.
pub(crate) fn maximize(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    step: f64,
    tol: f64,
) -> (f64, f64) {
    let (x0, f0) = grid_argmax(f, lo, hi, step);
    let a = (x0 - step).max(lo);
    let b = (x0 + step).min(hi);
    let (x1, f1) = golden_section_max(f, a, b, tol);
    if f1 > f0 {
        (x1, f1)
    } else {
        (x0, f0)
    }
}

/// Bisection for the boundary of `{x : pred(x)}` on `[lo, hi]` where
/// `pred(lo)` is false and `pred(hi)` is true. Returns the final bracket.
pub(crate) fn bisect(
    pred: &impl Fn(f64) -> bool,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}
