use proptest::prelude::*;
use soefrac::kernel::build_kernel;
use soefrac::oracle::{oracle_weights, theorem_bound, volterra_reference, BoundInputs};
use soefrac::problems::{scalar_operator, ScalarLinear};
use soefrac::schemes::{run, RunOptions, Scheme};
use soefrac::specfun::gamma_fn;
use soefrac::Error;

fn lin(lambda: f64) -> ScalarLinear {
    scalar_operator(ScalarLinear { lambda }).unwrap()
}

/// erf by its Maclaurin series, adequate for |x| ≤ 2.
fn erf(x: f64) -> f64 {
    let (mut sum, mut term) = (0.0, x);
    for n in 0..60 {
        sum += term / (2 * n + 1) as f64;
        term *= -x * x / (n + 1) as f64;
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn integer_order_oracle_is_implicit_euler() {
    let r = volterra_reference(vec![1.0], &lin(-1.0), 1.0, 0.1, 0.1).unwrap();
    assert!((r.snapshots[1].1[0] - 1.0 / 1.1).abs() < 1e-12);
    let w = oracle_weights(1.0, 0.1, 7).unwrap();
    assert!(w.iter().all(|a| (a - 0.1).abs() < 1e-15));
}

#[test]
fn single_step_solves_the_one_term_equation() {
    // the fixed point contracts while a_nn·|λ| < 1
    for a in [0.2, 0.5, 0.8] {
        let h = 0.05;
        let r = volterra_reference(vec![2.0], &lin(-1.2), a, h, h).unwrap();
        let w = h.powf(a) / gamma_fn(a + 1.0).unwrap();
        assert!((r.snapshots[1].1[0] - 2.0 / (1.0 + 1.2 * w)).abs() < 1e-11);
    }
}

#[test]
fn half_order_final_value() {
    let h = 2f64.powi(-10);
    let r = volterra_reference(vec![1.0], &lin(-1.0), 0.5, h, 1.0).unwrap();
    assert!((r.final_field().unwrap()[0] - 0.427583576155807).abs() < 2e-3);
}

#[test]
fn rejects_oversized_runs() {
    assert!(volterra_reference(vec![1.0], &lin(-1.0), 0.5, 1e-6, 1.0).is_err());
    assert!(volterra_reference(vec![1.0], &lin(-1.0), 0.0, 0.1, 1.0).is_err());
}

#[test]
fn agrees_with_compressed_scheme() {
    let (t_end, window) = (1.0, 1.0 / 3.0);
    for a in [0.3, 0.5, 0.9] {
        let mut diffs = Vec::new();
        for e in 7..=10 {
            let h = 2f64.powi(-e);
            let k = build_kernel(a, h, t_end, 1e-13, 100).unwrap();
            let opts = RunOptions {
                capture_from: Some(0.0),
                capture_every: 1,
                ..Default::default()
            };
            let s = run(vec![1.0], &lin(-1.0), &k, Scheme::Mcn, h, t_end, &opts).unwrap();
            let o = volterra_reference(vec![1.0], &lin(-1.0), a, h, t_end).unwrap();
            let gap = |from: f64| {
                s.snapshots
                    .iter()
                    .zip(&o.snapshots)
                    .filter(|(x, _)| x.0 >= from)
                    .map(|(x, y)| (x.1[0] - y.1[0]).abs())
                    .fold(0.0, f64::max)
            };
            diffs.push((gap(0.0), gap(window)));
        }
        for w in diffs.windows(2) {
            assert!(w[1].0 < w[0].0, "alpha={a}: {diffs:?}");
            let order = (w[0].1 / w[1].1).log2();
            assert!(order >= 0.9, "alpha={a}: windowed order {order}");
        }
    }
}

#[test]
fn bound_examples() {
    let base = BoundInputs {
        c_alpha: 0.0,
        c1: 1.0,
        c2: 1.0,
        h: 0.1,
        t_end: 1.0,
        alpha: 0.5,
        rhs_norm: 1.0,
    };
    assert_eq!(theorem_bound(&base).unwrap(), 0.0);
    let one = BoundInputs {
        c_alpha: 1.0,
        c1: 0.0,
        c2: 1.0,
        h: 0.1,
        t_end: 1.0,
        alpha: 1.0,
        rhs_norm: 0.0,
    };
    assert!((theorem_bound(&one).unwrap() - 0.02).abs() < 1e-15);
    // E_{1/2}(1) = e·erfc(-1)
    let half = BoundInputs {
        c_alpha: 1.0,
        c1: 1.0,
        c2: 0.0,
        h: 0.01,
        t_end: 1.0,
        alpha: 0.5,
        rhs_norm: 1.0,
    };
    let want = 2.0 * 0.01f64.powf(1.5) * std::f64::consts::E * (1.0 + erf(1.0));
    assert!((theorem_bound(&half).unwrap() - want).abs() < 1e-13 * want);
    let bad = BoundInputs {
        c_alpha: 1e3,
        c1: 1e3,
        ..half
    };
    assert!(matches!(theorem_bound(&bad), Err(Error::Precondition(_))));
}

proptest! {
    #[test]
    fn weights_telescope(a in 0.01f64..=1.0, h in 1e-4f64..0.5, n in 1usize..400) {
        let sum: f64 = oracle_weights(a, h, n).unwrap().iter().sum();
        let want = (n as f64 * h).powf(a) / gamma_fn(a + 1.0).unwrap();
        prop_assert!(((sum - want) / want).abs() < 1e-13);
    }

    #[test]
    fn bound_is_monotone(
        a in 0.3f64..=1.0, c_alpha in 0.0f64..5.0, c1 in 0.0f64..2.0, c2 in 0.0f64..5.0,
        t_end in 0.1f64..3.0, rhs in 0.0f64..5.0, bump in 0.01f64..2.0, which in 0usize..4,
    ) {
        let b = BoundInputs { c_alpha, c1, c2, h: 0.01, t_end, alpha: a, rhs_norm: rhs };
        let mut up = b;
        match which {
            0 => up.c_alpha += bump,
            1 => up.c2 += bump,
            2 => up.rhs_norm += bump,
            _ => up.t_end += bump,
        }
        prop_assert!(theorem_bound(&up).unwrap() >= theorem_bound(&b).unwrap());
    }
}
