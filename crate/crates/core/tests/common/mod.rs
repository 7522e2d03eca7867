//! Reference values computed without the library's own numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite 20-point Gauss–Legendre over consecutive breakpoints.
pub fn composite_gl(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let (x, w) = gauss_legendre(20);
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        total += half
            * x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(mid + half * xi))
                .sum::<f64>();
    }
    total
}

/// E_α(-X) for 0 < α < 1, X > 0, from
/// E_α(-X) = sin(απ)/(απ) ∫_0^∞ exp(-v^{1/α}) X / (v² + 2Xv cos απ + X²) dv.
pub fn ml_integral(alpha: f64, x: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && x < 0.0);
    let big = -x;
    let c = (alpha * PI).cos();
    let f = |v: f64| (-v.powf(1.0 / alpha)).exp() * big / (v * v + 2.0 * big * v * c + big * big);
    let v_max = 750f64.powf(alpha);
    let mut breaks: Vec<f64> = (0..=1500).map(|i| v_max * i as f64 / 1500.0).collect();
    breaks.extend((1..60).map(|k| v_max * 0.5f64.powi(k)));
    // the denominator peaks at v = -X cos απ with width X sin απ
    if c < 0.0 {
        let (centre, width) = (-big * c, big * (alpha * PI).sin());
        breaks.extend(
            (-40..=40)
                .map(|k| centre + width * k as f64 / 8.0)
                .filter(|v| *v > 0.0 && *v < v_max),
        );
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    (alpha * PI).sin() / (alpha * PI) * composite_gl(f, &breaks)
}

/// Rows of `tests/data/ml_reference.csv`: (α, β, x, E_{α,β}(x)).
pub fn ml_reference() -> Vec<(f64, f64, f64, f64)> {
    include_str!("../data/ml_reference.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2], v[3])
        })
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
