use proptest::prelude::*;

use resonance::arith::{self, kronecker};
use resonance::dirichlet::{self, char_sum_check, chi_8d, hunt_discriminants, l_half, l_half_with_cutoff, HuntMode};
use resonance::modform::{bessel_j, hecke_expand, kloosterman, petersson_rhs, PeterssonParams};
use resonance::ratio::build_matrix;
use resonance::resonator::{self, build_table, numerator_exact, read_table, write_table, CoefficientTable, ResonatorSpec, Scheme};
use resonance::sum::par_sum;

fn random_table() -> impl Strategy<Value = CoefficientTable> {
    (2u64..=500).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n as usize).prop_map(move |v| {
            let entries = v.iter().enumerate().map(|(i, &r)| (i as u64 + 1, r)).collect();
            CoefficientTable::from_entries(n, entries).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn numerator_is_divisor_quadratic_form(t in random_table()) {
        let b = build_matrix(t.n_max()).unwrap();
        let mut x = vec![0.0; t.n_max() as usize];
        for &(n, r) in t.entries() {
            x[n as usize - 1] = r;
        }
        let q = b.quadratic_form(&x);
        let num = numerator_exact(&t);
        let scale: f64 = t.entries().iter().map(|&(_, r)| r * r).sum::<f64>().max(1.0);
        prop_assert!((q - num).abs() <= 1e-12 * scale, "{} vs {}", q, num);
    }

    #[test]
    fn table_text_round_trip(t in random_table()) {
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = read_table(&buf[..]).unwrap();
        prop_assert_eq!(back.entries(), t.entries());
        prop_assert_eq!(back.n_max(), t.n_max());
    }

    #[test]
    fn chi_is_periodic(d in 1u64..5000, n in 1u64..1_000_000) {
        prop_assume!(d % 2 == 1 && arith::mu_and_squarefree(d).1);
        prop_assert_eq!(chi_8d(d, n), chi_8d(d, n + 8 * d));
    }

    #[test]
    fn kronecker_is_completely_multiplicative(a in -500i64..500, m in 1u64..3000, n in 1u64..3000) {
        prop_assert_eq!(kronecker(a, m * n), kronecker(a, m) * kronecker(a, n));
    }

    #[test]
    fn hecke_length_is_divisor_count(m in 1u64..2000, n in 1u64..2000) {
        let v = hecke_expand(m, n).unwrap();
        prop_assert_eq!(v.len(), arith::divisors(arith::gcd(m, n)).len());
        prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*v.last().unwrap(), m * n);
    }

    #[test]
    fn par_sum_ignores_thread_count(n in 0usize..50_000, seed in any::<u64>()) {
        let f = |i: usize| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 * 1e-3 - 0.5 + 1e10 * ((i % 7) as f64 - 3.0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| par_sum(n, f));
        let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap().install(|| par_sum(n, f));
        prop_assert_eq!(one.to_bits(), eight.to_bits());
    }
}

#[test]
fn kloosterman_symmetry_and_trivial_bound() {
    for c in 1..=500u64 {
        for m in 1..=20u64 {
            for n in m..=20u64 {
                if (m * 31 + n * 17 + c) % 7 != 0 {
                    continue;
                }
                let s = kloosterman(m, n, c).unwrap();
                assert!((s - kloosterman(n, m, c).unwrap()).abs() < 1e-9);
                assert!(s.abs() <= c as f64 + 1e-9);
            }
        }
    }
}

#[test]
fn bessel_below_series_bound_on_grid() {
    for order in 0..40u32 {
        for i in 0..=25 {
            let x = 2.0 * (order as f64 + 1.0) * i as f64 / 25.0;
            let b = bessel_j(order, x).unwrap();
            assert!(b.value.abs() <= b.paper_bound, "J_{order}({x})");
        }
    }
}

#[test]
fn petersson_tail_contract() {
    for k in [16u32, 64, 128] {
        for (m, n) in [(1u64, 1u64), (1, 2), (2, 3)] {
            let p = PeterssonParams::new(k, m, n);
            if p.validate().is_err() {
                continue;
            }
            let r = petersson_rhs(&p).unwrap();
            let r2 = petersson_rhs(&p.with_c_max(2 * r.c_max)).unwrap();
            assert!((r.value - r2.value).abs() <= r.tail_bound, "k={k} m={m} n={n}");
        }
    }
}

#[test]
fn l_half_error_estimate_bounds_cutoff_change() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    while done < 100 {
        let d = rng.random_range(1..200_000u64);
        if d % 2 == 0 || !arith::mu_and_squarefree(d).1 {
            continue;
        }
        let full = l_half(d).unwrap();
        let half = l_half_with_cutoff(d, dirichlet::L_CUTOFF / 2.0).unwrap();
        assert!((full.l_value - half.l_value).abs() < full.est_error, "d={d}");
        assert!(full.est_error >= 0.0);
        assert_eq!(full.disc, 8 * d);
        done += 1;
    }
}

#[test]
fn small_central_values_are_not_negative() {
    // nonnegativity is conjectural; values are only required to stay above the error band
    let mut smallest = f64::MAX;
    for d in (1..=1000u64).filter(|&d| d % 2 == 1 && arith::mu_and_squarefree(d).1) {
        let r = l_half(d).unwrap();
        smallest = smallest.min(r.l_value);
        assert!(r.l_value >= -r.est_error, "d={d}: {}", r.l_value);
    }
    eprintln!("smallest L(1/2, chi_8d) for d <= 1000: {smallest}");
}

#[test]
fn character_sum_windows_average_out() {
    // window sums for non-square n: their average over ten windows is at
    // least twice as small as a typical single window
    for n in [3u64, 5, 7, 11] {
        let len = 5000;
        let s: Vec<f64> = (0..=10)
            .map(|j| if j == 0 { 0.0 } else { char_sum_check(n, j * len).unwrap().observed })
            .collect();
        let windows: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = (s[10] - s[0]) / 10.0;
        let typical = windows.iter().map(|w| w.abs()).sum::<f64>() / 10.0;
        assert!(2.0 * mean.abs() <= typical, "n={n}: mean {mean}, typical {typical}");
    }
}

#[test]
fn small_mode_sits_below_large_mode() {
    let spec = ResonatorSpec::new(Scheme::DirichletF, 1000).with_window(3.0, 20.0);
    let small = hunt_discriminants(&spec, 20_000.0, HuntMode::Small, 20).unwrap();
    let large = hunt_discriminants(&spec, 20_000.0, HuntMode::Large, 20).unwrap();
    assert!(small[0].l_value <= large[0].l_value);
    assert!(small.windows(2).all(|w| w[0].l_value <= w[1].l_value));
    assert!(large.windows(2).all(|w| w[0].l_value >= w[1].l_value));
}

#[test]
fn m2_over_m1_ratio_decreases_with_n() {
    let x: f64 = 1e8;
    let mut last = f64::INFINITY;
    for (n, p1) in [(100u64, 12.0), (1000, 20.0), (10_000, 30.0), (100_000, 40.0)] {
        let signed = build_table(&ResonatorSpec::new(Scheme::DirichletSigned, n).with_window(3.0, p1)).unwrap();
        let m1 = dirichlet::m1_quadratic(&signed, x).unwrap();
        let m2 = dirichlet::m2_main(&signed, x).unwrap();
        let ratio = m2.triple_sum / (m1.euler_main * m2.log_x);
        assert!(ratio < last, "N={n}: {ratio} after {last}");
        assert!(ratio > 0.0);
        last = ratio;
    }
}

#[test]
fn scheme_tables_respect_windows() {
    for scheme in Scheme::ALL {
        let mut spec = ResonatorSpec::new(scheme, 5000).with_window(2.0, 40.0);
        if scheme == Scheme::FrequencyA {
            spec = spec.with_a(1.5);
        }
        let t = build_table(&spec).unwrap();
        for &(p, r) in t.prime_values() {
            assert!((2..=40).contains(&p));
            assert_eq!(r < 0.0, scheme.is_signed());
            if scheme.is_dirichlet() {
                assert_ne!(p, 2);
            }
        }
        let cert = resonator::amgm_upper_certificate(&t, None).unwrap();
        assert!(cert.holds);
    }
}
