//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];

// Gauss weights pair with the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_489_0,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

/// Integrates `f` over `[a, b]` by globally adaptive bisection: the panel
/// with the largest Kronrod/Gauss error estimate is split until the summed
/// estimate falls under `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    const MAX_PANELS: usize = 4000;
    let first = gk15(f, a, b);
    let mut panels = vec![(a, b, first.0, first.1)];
    loop {
        if panels.iter().any(|p| !p.2.is_finite()) {
            return Err(Error::NonConvergence(format!(
                "non-finite integrand on [{a:e}, {b:e}]"
            )));
        }
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol {
            break;
        }
        // worst panel that can still be split
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.1 - p.0).abs() > 64.0 * f64::EPSILON * p.0.abs().max(p.1.abs()))
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i);
        let Some(i) = worst else { break };
        if panels.len() >= MAX_PANELS {
            return Err(Error::NonConvergence(format!(
                "quadrature on [{a:e}, {b:e}] did not reach {abs_tol:e} (estimate {err:e})"
            )));
        }
        let (lo, hi, _, _) = panels.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let l = gk15(f, lo, mid);
        let r = gk15(f, mid, hi);
        panels.push((lo, mid, l.0, l.1));
        panels.push((mid, hi, r.0, r.1));
    }
    // fixed summation order for reproducibility
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(panels.iter().map(|p| p.2).sum())
}
