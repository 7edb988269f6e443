//! Adaptive univariate quadrature (Gauss-Kronrod 7-15 with interval
//! bisection). Semi-infinite and doubly infinite ranges are handled by
//! rational change of variables.

use crate::error::{AmlError, Result};

/// 15-point Kronrod abscissae on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// 7-point Gauss weights (nodes are XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Identifier of the adaptive interval rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuadKind {
    GaussKronrod15,
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadKind,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureRule {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if abs_tol <= 0.0 || rel_tol <= 0.0 {
            return Err(AmlError::Config(
                "quadrature tolerances must be strictly positive".into(),
            ));
        }
        Ok(Self {
            kind: QuadKind::GaussKronrod15,
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            kind: QuadKind::GaussKronrod15,
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_subdivisions: 128,
        }
    }
}

/// One Gauss-Kronrod pass on [a, b]: returns (estimate, error bound).
fn gk15<F>(f: &F, a: f64, b: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    let err = (kronrod - gauss).abs();
    // QUADPACK-style sharpening of the raw error estimate.
    let scaled = if err > 0.0 {
        let ratio = (200.0 * err / kronrod.abs().max(1e-300)).min(1.0);
        err * ratio.powf(1.5).max(1e-6)
    } else {
        0.0
    };
    (kronrod, scaled.max(err * 1e-3))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn integrate_finite<F>(f: F, lo: f64, hi: f64, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (v, e) = gk15(&f, lo, hi);
    let mut segments = vec![Segment {
        a: lo,
        b: hi,
        value: v,
        error: e,
    }];

    for _ in 0..rule.max_subdivisions {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= rule.abs_tol.max(rule.rel_tol * total.abs()) {
            return Ok(total);
        }
        // Split the segment with the largest error.
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .expect("non-empty segment list");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }

    let total: f64 = segments.iter().map(|s| s.value).sum();
    let total_err: f64 = segments.iter().map(|s| s.error).sum();
    if total_err <= rule.abs_tol.max(rule.rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(AmlError::QuadratureBudget {
            estimate: total,
            error_bound: total_err,
        })
    }
}

/// Integrate `f` over `[lo, hi]`; either endpoint may be infinite.
pub fn integrate<F>(f: F, lo: f64, hi: f64, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(AmlError::Config(format!(
            "integration bounds must satisfy lo < hi (got {lo}, {hi})"
        )));
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => integrate_finite(f, lo, hi, rule),
        (true, false) => {
            // x = lo + t/(1-t), dx = dt/(1-t)^2
            integrate_finite(
                move |t| {
                    let om = 1.0 - t;
                    f(lo + t / om) / (om * om)
                },
                0.0,
                1.0 - 1e-14,
                rule,
            )
        }
        (false, true) => integrate_finite(
            move |t| {
                let om = 1.0 - t;
                f(hi - t / om) / (om * om)
            },
            0.0,
            1.0 - 1e-14,
            rule,
        ),
        (false, false) => {
            // x = t/(1-t^2), dx = (1+t^2)/(1-t^2)^2
            integrate_finite(
                move |t| {
                    let d = 1.0 - t * t;
                    f(t / d) * (1.0 + t * t) / (d * d)
                },
                -1.0 + 1e-14,
                1.0 - 1e-14,
                rule,
            )
        }
    }
}
