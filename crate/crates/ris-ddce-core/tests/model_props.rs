mod common;

use proptest::prelude::*;
use ris_ddce_core::model::{draw_channels, rx_bs, rx_bs_with_reflection, rx_ris};
use ris_ddce_core::{SeededStream, C64};

use common::{random_vector, scenario};

fn unit_phases(stream: &mut SeededStream, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * stream.uniform()))
        .collect()
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_split_is_lossless(rhos in prop::collection::vec(0.0f64..=1.0, 1..8)) {
        let na = rhos.len();
        let mut sc = scenario(1, 2, 10, na, 0.5);
        sc.rho_sensing = rhos.clone();
        let eta = sc.eta_sensing();
        for (r, e) in rhos.iter().zip(&eta) {
            prop_assert!((r * r + e * e - 1.0).abs() <= 1e-15);
        }
        let rho = sc.rho_full();
        for (i, &el) in sc.sensing.iter().enumerate() {
            prop_assert_eq!(rho[el], rhos[i]);
        }
    }

    #[test]
    fn full_reflection_silences_the_sensors(k in 1usize..4, seed in any::<u64>()) {
        let sc0 = scenario(k, 2, 12, k, 1.0);
        let mut s = SeededStream::new(seed, 0);
        let ch = draw_channels(&sc0, &mut s).unwrap();
        let phi = unit_phases(&mut s, k);
        let x = random_vector(&mut s, k);
        let y = rx_ris(&ch, &sc0, &phi, &x, None).unwrap();
        prop_assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn bs_observation_is_homogeneous(k in 1usize..4, m in 1usize..5, seed in any::<u64>(), c in 0.1f64..10.0, a_re in -2.0f64..2.0, a_im in -2.0f64..2.0) {
        let mut sc = scenario(k, m, 9, k, 0.6);
        sc.power = 0.7;
        let mut s = SeededStream::new(seed, 0);
        let ch = draw_channels(&sc, &mut s).unwrap();
        let phi = unit_phases(&mut s, 9);
        let x = random_vector(&mut s, k);
        let y = rx_bs(&ch, &sc, &phi, &x, None).unwrap();
        let scale = y.iter().map(|v| v.norm()).fold(1.0, f64::max);

        // linear in √P
        let mut scaled = sc.clone();
        scaled.power = sc.power * c * c;
        let yp = rx_bs(&ch, &scaled, &phi, &x, None).unwrap();
        let want: Vec<C64> = y.iter().map(|v| v * c).collect();
        prop_assert!(max_diff(&yp, &want) <= 1e-12 * scale * c);

        // linear in the symbols
        let alpha = C64::new(a_re, a_im);
        let xs: Vec<C64> = x.iter().map(|v| v * alpha).collect();
        let ys = rx_bs(&ch, &sc, &phi, &xs, None).unwrap();
        let want: Vec<C64> = y.iter().map(|v| v * alpha).collect();
        prop_assert!(max_diff(&ys, &want) <= 1e-12 * scale * alpha.norm().max(1.0));

        // additive in the symbols
        let x2 = random_vector(&mut s, k);
        let sum: Vec<C64> = x.iter().zip(&x2).map(|(p, q)| p + q).collect();
        let y2 = rx_bs(&ch, &sc, &phi, &x2, None).unwrap();
        let ysum = rx_bs(&ch, &sc, &phi, &sum, None).unwrap();
        let want: Vec<C64> = y.iter().zip(y2.iter()).map(|(p, q)| p + q).collect();
        prop_assert!(max_diff(&ysum, &want) <= 1e-12 * scale.max(y2.norm()) * 4.0);
    }

    #[test]
    fn no_sensing_elements_is_the_passive_model(m in 1usize..5, n in 1usize..16, seed in any::<u64>()) {
        let sc = scenario(1, m, n, 0, 0.5);
        let mut s = SeededStream::new(seed, 0);
        let ch = draw_channels(&sc, &mut s).unwrap();
        let phi = unit_phases(&mut s, n);
        let x = random_vector(&mut s, 1);
        let y = rx_bs(&ch, &sc, &phi, &x, None).unwrap();
        let passive = rx_bs_with_reflection(&ch, 1.0, &vec![1.0; n], &phi, &x, None).unwrap();
        prop_assert_eq!(y, passive);
        prop_assert!(sc.rho_full().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn sensed_power_follows_the_split(rho in 0.0f64..1.0, seed in any::<u64>()) {
        // per element: reflected share ρ² plus absorbed share η² of one incident wave
        let sc = scenario(1, 1, 6, 1, rho);
        let mut s = SeededStream::new(seed, 0);
        let ch = draw_channels(&sc, &mut s).unwrap();
        let one = [C64::new(1.0, 0.0)];
        let sensed = rx_ris(&ch, &sc, &one, &one, None).unwrap()[0].norm_sqr();
        let incident = ch.user_ris[(5, 0)].norm_sqr();
        let reflected = (rho * ch.user_ris[(5, 0)]).norm_sqr();
        prop_assert!((sensed + reflected - incident).abs() <= 1e-12 * incident.max(1e-300));
    }
}
