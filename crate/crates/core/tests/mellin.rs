mod common;

use num_complex::Complex64;
use tamewave_core::mellin::{
    apply_normal_operator, extract_expansion, find_resonances, normal_symbol, spectral_gap, ModelOperatorSpec,
    ResonanceSet,
};
use tamewave_core::{Error, Field, Grid};

fn wave() -> ModelOperatorSpec {
    ModelOperatorSpec::wave(0.5, 1.0)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn symbol_examples() {
    assert_eq!(normal_symbol(&wave(), 0, c(0.0, 0.0)), c(0.0, 0.0));
    assert!(normal_symbol(&wave(), 0, c(0.0, -0.5)).norm() < 1e-15);
    assert_eq!(normal_symbol(&wave(), 1, c(0.0, 0.0)), c(1.0, 0.0));
}

#[test]
fn roots_match_quadratic_formula() {
    let specs = [
        wave(),
        ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1),
        ModelOperatorSpec::klein_gordon(0.3, 2.0, 0.4),
        ModelOperatorSpec { extra_zeroth: 0.7, ..wave() },
    ];
    for spec in specs {
        let rs = find_resonances(&spec, 4, 10.0).unwrap();
        for k in -4i64..=4 {
            let cst = spec.c0 * spec.c0 * (k * k) as f64 + spec.mass * spec.mass + spec.extra_zeroth;
            let oracle = common::quadratic_resonances(spec.gamma, cst);
            let got = &rs.modes[&k];
            assert_eq!(got.len(), 2);
            for z in &oracle {
                let best = got.iter().map(|g| (g - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-10, "k={k}: {z} missing from {got:?}");
            }
            for z in got {
                assert!(normal_symbol(&spec, k, *z).norm() < 1e-10);
            }
            assert!(got.windows(2).all(|w| w[0].im >= w[1].im));
        }
    }
}

#[test]
fn documented_resonances() {
    let rs = find_resonances(&wave(), 0, 10.0).unwrap();
    assert_eq!(rs.modes.len(), 1);
    assert_eq!(rs.modes[&0][0], c(0.0, 0.0));
    assert!((rs.modes[&0][1] - c(0.0, -0.5)).norm() < 1e-12);
    let rs = find_resonances(&wave(), 1, 10.0).unwrap();
    for k in [-1, 1] {
        let roots = &rs.modes[&k];
        assert!(roots.iter().any(|z| (z - c(0.9682458366, -0.25)).norm() < 1e-10));
        assert!(roots.iter().any(|z| (z - c(-0.9682458366, -0.25)).norm() < 1e-10));
    }
    let (s1, gap) = spectral_gap(&rs).unwrap();
    assert_eq!(s1, c(0.0, 0.0));
    assert!((gap - 0.25).abs() < 1e-12);

    let kg = find_resonances(&ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1), 2, 10.0).unwrap();
    let (s1, gap) = spectral_gap(&kg).unwrap();
    let expect = 0.25 * (1.0 - (1.0f64 - 4.0 * 0.01 / 0.25).sqrt());
    assert!((s1 - c(0.0, -expect)).norm() < 1e-12);
    assert!((s1.im + 0.02087).abs() < 1e-5);
    assert!((gap - 0.25).abs() < 1e-12);
    assert!(kg.modes[&0].iter().all(|z| z.im < 0.0));
}

#[test]
fn gap_with_two_levels() {
    let rs = ResonanceSet {
        modes: [(0, vec![c(0.0, 0.0), c(0.0, -0.5)])].into_iter().collect(),
        search_bound: 10.0,
    };
    assert_eq!(spectral_gap(&rs).unwrap().1, 0.5);
    let empty = ResonanceSet {
        modes: Default::default(),
        search_bound: 1.0,
    };
    assert!(spectral_gap(&empty).is_err());
}

#[test]
fn search_bound_filters_deep_roots() {
    let spec = ModelOperatorSpec::wave(3.0, 1.0);
    let rs = find_resonances(&spec, 0, 1.0).unwrap();
    // roots 0 and −3i; only the first is within the bound
    assert_eq!(rs.modes[&0], vec![c(0.0, 0.0)]);
}

#[test]
fn conjugate_symmetry() {
    for spec in [wave(), ModelOperatorSpec::klein_gordon(0.7, 1.3, 0.2)] {
        let rs = find_resonances(&spec, 5, 10.0).unwrap();
        for roots in rs.modes.values() {
            for z in roots {
                let mirror = -z.conj();
                assert!(roots.iter().any(|w| (w - mirror).norm() < 1e-10));
            }
        }
    }
}

#[test]
fn dense_scan_finds_no_missed_pole() {
    let spec = ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1);
    let rs = find_resonances(&spec, 2, 10.0).unwrap();
    let h = 0.01;
    for k in -2i64..=2 {
        let roots = &rs.modes[&k];
        // local maxima of 1/|P| on the scan grid must sit next to a reported root
        let n = 400;
        let val = |i: i64, j: i64| 1.0 / normal_symbol(&spec, k, c(-2.0 + i as f64 * h, -2.0 + j as f64 * h)).norm();
        for i in 1..n {
            for j in 1..n {
                let v = val(i, j);
                let is_peak = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().all(|(a, b)| v > val(i + a, j + b));
                if is_peak && v > 1e3 {
                    let z = c(-2.0 + i as f64 * h, -2.0 + j as f64 * h);
                    assert!(roots.iter().any(|r| (r - z).norm() <= 2.0 * h), "k={k}: peak at {z}");
                }
            }
        }
        for r in roots {
            let i = ((r.re + 2.0) / h).round() as i64;
            let j = ((r.im + 2.0) / h).round() as i64;
            assert!(val(i, j) > 10.0, "root {r} not visible on the scan");
        }
    }
}

#[test]
fn constants_are_annihilated() {
    let g = Grid::new(256, 16, 20.0).unwrap();
    let one = Field::from_real_fn(g, 0.0, |_, _| 1.0);
    let out = apply_normal_operator(&wave(), &one).unwrap();
    assert!(out.max_abs() < 1e-12);
    // with a mass the constant is no longer resonant: it maps to m²
    let kg = apply_normal_operator(&ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1), &one).unwrap();
    assert!((kg.at(10, 3).re - 0.01).abs() < 1e-12);
}

fn expansion_grid() -> Grid {
    Grid::new(4096, 8, 40.0).unwrap()
}

#[test]
fn constant_field_expansion() {
    let g = expansion_grid();
    let u = Field::from_real_fn(g, 0.0, |_, _| 3.0);
    let e = extract_expansion(&u, 0.5, (10.0, 30.0)).unwrap();
    assert!((e.constant - 3.0).norm() < 1e-12);
    for i in g.first_row_at_or_above(2.0)..g.n_t {
        assert!(e.remainder.row(i).iter().all(|v| v.norm() < 1e-12));
    }
}

#[test]
fn constant_plus_decaying_mode() {
    let g = expansion_grid();
    let u = Field::from_real_fn(g, 0.0, |t, y| 3.0 + (-t).exp() * y.cos());
    let e = extract_expansion(&u, 0.5, (10.0, 30.0)).unwrap();
    assert!((e.constant - 3.0).norm() < 1e-8);
    let slope = e.tail_slope.unwrap();
    assert!((slope + 1.0).abs() < 0.05, "{slope}");
    assert!(e.fit_residual >= 0.0);
}

#[test]
fn slow_decay_without_constant() {
    let g = Grid::new(8192, 4, 200.0).unwrap();
    let u = Field::from_real_fn(g, 0.0, |t, _| (-0.1 * t).exp());
    let early = extract_expansion(&u, 0.05, (20.0, 120.0)).unwrap();
    let late = extract_expansion(&u, 0.05, (80.0, 190.0)).unwrap();
    assert!(early.constant.norm() < 1e-6);
    assert!(late.constant.norm() < 1e-6);
    for e in [&early, &late] {
        assert!((e.tail_slope.unwrap() + 0.1).abs() < 0.01);
    }
}

#[test]
fn multi_mode_tail_recovers_constant() {
    let g = expansion_grid();
    let u = Field::from_real_fn(g, 0.0, |t, y| {
        2.0 + 0.5 * (-0.3 * t).exp() - 0.4 * (-0.45 * t).exp() * (0.8 * t).cos()
            + (-0.25 * t).exp() * (0.97 * t).sin() * y.cos()
    });
    let e = extract_expansion(&u, 0.2, (8.0, 38.0)).unwrap();
    assert!((e.constant - 2.0).norm() < 1e-6, "{}", e.constant);
    assert!(e.tail_slope.unwrap() <= -0.2);
}

#[test]
fn short_window_is_rejected() {
    let g = expansion_grid();
    let u = Field::from_real_fn(g, 0.0, |_, _| 1.0);
    assert!(matches!(extract_expansion(&u, 0.1, (10.0, 30.0)), Err(Error::Config(_))));
    assert!(matches!(extract_expansion(&u, 0.5, (10.0, 45.0)), Err(Error::Config(_))));
}
