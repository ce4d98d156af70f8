//! Small numerical building blocks: compensated summation, adaptive
//! Gauss-Kronrod quadrature and a few Gaussian special functions.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

// Kronrod 15-point abscissae (positive half) and weights; the 7-point Gauss
// rule uses the odd-indexed abscissae.
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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Eight-point Gauss-Legendre rule on [-1, 1].
pub(crate) const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
pub(crate) const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_7,
    0.222_381_034_453_374_3,
    0.313_706_645_877_887,
    0.362_683_783_378_361_8,
    0.362_683_783_378_361_8,
    0.313_706_645_877_887,
    0.222_381_034_453_374_3,
    0.101_228_536_290_376_7,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = r * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Subdivides until the per-interval error estimate is below
/// `rel_tol * |integral|` (or an absolute floor), returning `None` if the
/// interval budget is exhausted first.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Option<f64> {
    if a == b {
        return Some(0.0);
    }
    const MAX_INTERVALS: usize = 20_000;
    let (v0, e0) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v0, e0)];
    loop {
        let total: f64 = compensated_sum(pieces.iter().map(|p| p.2));
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return Some(total);
        }
        if pieces.len() >= MAX_INTERVALS {
            return None;
        }
        // Bisect the worst interval.
        let (worst, _) = pieces.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        pieces.push((lo, mid, vl, el));
        pieces.push((mid, hi, vr, er));
    }
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `(2k-1)!!`, with `(-1)!! = 1`.
pub fn double_factorial_odd(k: u32) -> f64 {
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}
