use std::f64::consts::PI;

use proptest::prelude::*;
use ris_ddce_core::constellation::{gray, PskAlphabet, PskOrder};
use ris_ddce_core::C64;

fn alphabet(log2: u32) -> PskAlphabet {
    PskAlphabet::new(PskOrder::new(1 << log2).unwrap())
}

#[test]
fn symbols_are_unit_modulus_and_sum_to_zero() {
    for log2 in 1..=5 {
        let a = alphabet(log2);
        let sum: C64 = a.symbols().sum();
        assert!(sum.norm() < 1e-12);
        assert!(a.symbols().all(|s| (s.norm() - 1.0).abs() < 1e-15));
    }
}

#[test]
fn neighbours_differ_in_one_bit() {
    for log2 in 1..=5 {
        let a = alphabet(log2);
        let d = a.size();
        for l in 0..d {
            assert_eq!(a.bit_diff(l, (l + 1) % d), 1);
            assert_eq!((gray(l) ^ gray((l + 1) % d)).count_ones(), 1);
        }
    }
}

proptest! {
    #[test]
    fn detection_ignores_amplitude(log2 in 1u32..=5, l in 0usize..32, eps in -0.999f64..50.0) {
        let a = alphabet(log2);
        let l = l % a.size();
        prop_assert_eq!(a.detect(a.symbol(l) * (1.0 + eps)), l);
    }

    #[test]
    fn detection_commutes_with_symbol_rotation(log2 in 1u32..=5, l in 0usize..32, r in 0usize..32, off in -0.99f64..0.99) {
        let a = alphabet(log2);
        let d = a.size();
        let (l, r) = (l % d, r % d);
        // a point inside wedge l, then rotated by r symbol steps
        let y = a.symbol(l) * C64::from_polar(1.0, off * PI / d as f64);
        let rot = C64::from_polar(1.0, 2.0 * PI * r as f64 / d as f64);
        prop_assert_eq!(a.detect(y), l);
        prop_assert_eq!(a.detect(y * rot), (l + r) % d);
    }

    #[test]
    fn bit_errors_are_symmetric(log2 in 1u32..=5, x in 0usize..32, y in 0usize..32) {
        let a = alphabet(log2);
        let (x, y) = (x % a.size(), y % a.size());
        prop_assert_eq!(a.bit_diff(x, y), a.bit_diff(y, x));
        prop_assert_eq!(a.bit_diff(x, x), 0);
        prop_assert!(a.bit_diff(x, y) <= log2);
    }
}
