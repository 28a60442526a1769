//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Panels the interval is split into before adapting, so that features much
/// narrower than the interval are still sampled.
const INITIAL_PANELS: usize = 256;
const MAX_PANELS: usize = 200_000;

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integral of `f` over `[lo, hi]` to absolute tolerance `abs_tol`.
///
/// Returns the estimate together with the accumulated error estimate. If
/// the panel budget runs out first, the best estimate is returned anyway.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64) -> (f64, f64) {
    if hi == lo {
        return (0.0, 0.0);
    }
    let width = (hi - lo) / INITIAL_PANELS as f64;
    let mut heap: BinaryHeap<Panel> = (0..INITIAL_PANELS)
        .map(|k| {
            let a = lo + width * k as f64;
            let b = if k + 1 == INITIAL_PANELS { hi } else { a + width };
            gauss_kronrod(&f, a, b)
        })
        .collect();
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();
    while total_err > abs_tol && heap.len() < MAX_PANELS {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = gauss_kronrod(&f, worst.lo, mid);
        let right = gauss_kronrod(&f, mid, worst.hi);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Sum in a fixed order so the result does not depend on heap layout.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    (value, error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_peak_over_wide_interval() {
        let g = 0.005;
        let (v, _) = integrate(|x| g / PI / ((x - 0.3).powi(2) + g * g), 0.0, 50.0, 1e-10);
        let exact = ((50.0 - 0.3) / g).atan() / PI + (0.3 / g).atan() / PI;
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }
}
