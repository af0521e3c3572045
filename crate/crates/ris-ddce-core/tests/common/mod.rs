#![allow(dead_code)]

use ris_ddce_core::constellation::PskOrder;
use ris_ddce_core::model::{Correlation, LargeScale, Scenario};
use ris_ddce_core::{CMatrix, SeededStream, C64};

/// Unit-gain, noiseless scenario with the last `na` elements sensing.
pub fn scenario(k: usize, m: usize, n: usize, na: usize, rho: f64) -> Scenario {
    Scenario {
        users: k,
        bs_antennas: m,
        ris_elements: n,
        sensing: Scenario::trailing_sensing(n, na),
        rho_sensing: vec![rho; na],
        power: 1.0,
        noise_bs: 0.0,
        noise_ris: 0.0,
        order: PskOrder::new(8).unwrap(),
        coherence: 500,
        large_scale: LargeScale::Gains {
            user_bs: vec![1.0; k],
            user_ris: vec![1.0; k],
            ris_bs: 1.0,
        },
        correlation: Correlation::default(),
    }
}

pub fn random_matrix(stream: &mut SeededStream, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| stream.complex_normal(1.0))
}

pub fn random_vector(stream: &mut SeededStream, n: usize) -> Vec<C64> {
    (0..n).map(|_| stream.complex_normal(1.0)).collect()
}

pub fn random_symbols(stream: &mut SeededStream, d: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| stream.index(d)).collect()
}

pub fn relative_error(est: &CMatrix, truth: &CMatrix) -> f64 {
    est.sub(truth).unwrap().frobenius_norm() / truth.frobenius_norm()
}
