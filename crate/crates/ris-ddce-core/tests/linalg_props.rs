mod common;

use proptest::prelude::*;
use ris_ddce_core::linalg::{complex_gaussian, dft_matrix, lstsq, numerical_rank, LinalgError};
use ris_ddce_core::{CMatrix, SeededStream, C64};

use common::{random_matrix, random_vector};

#[test]
fn dft_columns_are_orthogonal_up_to_n() {
    for n in 1..=64 {
        let v = dft_matrix(n);
        let g = v.adjoint().matmul(&v).unwrap();
        let want = CMatrix::identity(n).scale(C64::new(n as f64, 0.0));
        let worst = g
            .as_slice()
            .iter()
            .zip(want.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "n = {n}: {worst}");
    }
}

#[test]
fn gaussian_real_and_imaginary_parts_are_uncorrelated() {
    let n = 1_000_000;
    let x = complex_gaussian(&mut SeededStream::new(2024, 7), n, 2.0);
    let (mut sr, mut si, mut srr, mut sii, mut sri) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for z in x.iter() {
        sr += z.re;
        si += z.im;
        srr += z.re * z.re;
        sii += z.im * z.im;
        sri += z.re * z.im;
    }
    let nf = n as f64;
    let cov = sri / nf - sr * si / (nf * nf);
    let vr = srr / nf - (sr / nf).powi(2);
    let vi = sii / nf - (si / nf).powi(2);
    let corr = cov / (vr * vi).sqrt();
    assert!(corr.abs() < 0.01, "{corr}");
    // each part carries half the variance
    assert!((vr - 1.0).abs() < 0.01 && (vi - 1.0).abs() < 0.01, "{vr} {vi}");
}

#[test]
fn streams_replay_and_forks_diverge() {
    let draw = |mut s: SeededStream| (0..64).map(|_| s.uniform()).collect::<Vec<_>>();
    assert_eq!(draw(SeededStream::new(5, 3)), draw(SeededStream::new(5, 3)));
    assert_ne!(draw(SeededStream::new(5, 3)), draw(SeededStream::new(5, 4)));
    let base = SeededStream::new(5, 3);
    assert_ne!(draw(base.fork(1)), draw(base.fork(2)));
    assert_eq!(draw(base.fork(1)), draw(SeededStream::new(5, 3).fork(1)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lstsq_residual_is_orthogonal(rows in 1usize..24, extra in 0usize..12, seed in any::<u64>()) {
        let cols = rows.min(1 + extra);
        let mut s = SeededStream::new(seed, 0);
        let a = random_matrix(&mut s, rows + extra, cols);
        let b = random_vector(&mut s, rows + extra);
        let x = lstsq(&a, &b).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let r: Vec<C64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        let g = a.adjoint().mul_vec(&r).unwrap();
        let bound = 1e-10 * a.frobenius_norm() * b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(g.norm() <= bound, "{} > {}", g.norm(), bound);
    }

    #[test]
    fn lstsq_reports_rank_deficiency(rows in 3usize..20, seed in any::<u64>()) {
        let mut s = SeededStream::new(seed, 1);
        let a0 = random_matrix(&mut s, rows, 2);
        // third column duplicates the first
        let a = CMatrix::from_fn(rows, 3, |r, c| a0[(r, c % 2)]);
        let b = random_vector(&mut s, rows);
        prop_assert_eq!(lstsq(&a, &b), Err(LinalgError::RankDeficient { rank: 2, cols: 3 }));
        prop_assert_eq!(numerical_rank(&a), 2);
    }

    #[test]
    fn kron_and_products_stay_finite(r in 1usize..5, c in 1usize..5, seed in any::<u64>()) {
        let mut s = SeededStream::new(seed, 2);
        let a = random_matrix(&mut s, r, c);
        let b = random_matrix(&mut s, c, r);
        let k = a.kron(&b);
        prop_assert_eq!(k.shape(), (r * c, c * r));
        prop_assert_eq!(k.as_slice().len(), r * c * c * r);
        prop_assert!(k.is_finite() && a.matmul(&b).unwrap().is_finite());
    }
}
