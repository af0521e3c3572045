//! D-PSK alphabet `exp(jπ(2ℓ+1)/D)` with binary-reflected Gray labels.

use core::f64::consts::PI;
use core::fmt;

use crate::linalg::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationError {
    UnsupportedOrder(usize),
    LengthMismatch { tx: usize, rx: usize },
    IndexOutOfRange { index: usize, order: usize },
}

impl fmt::Display for ConstellationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationError::UnsupportedOrder(d) => {
                write!(f, "PSK order {d} not in {{2, 4, 8, 16, 32}}")
            }
            ConstellationError::LengthMismatch { tx, rx } => {
                write!(f, "sequence lengths differ: {tx} transmitted, {rx} detected")
            }
            ConstellationError::IndexOutOfRange { index, order } => {
                write!(f, "symbol index {index} out of range for {order}-PSK")
            }
        }
    }
}

impl core::error::Error for ConstellationError {}

/// Modulation order, restricted to 2, 4, 8, 16 or 32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PskOrder(usize);

impl PskOrder {
    pub fn new(order: usize) -> Result<Self, ConstellationError> {
        match order {
            2 | 4 | 8 | 16 | 32 => Ok(Self(order)),
            _ => Err(ConstellationError::UnsupportedOrder(order)),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.0.trailing_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitErrorCount {
    pub bit_errors: u64,
    pub bits: u64,
}

impl BitErrorCount {
    pub fn rate(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn merge(self, other: BitErrorCount) -> BitErrorCount {
        BitErrorCount {
            bit_errors: self.bit_errors + other.bit_errors,
            bits: self.bits + other.bits,
        }
    }
}

pub fn gray(index: usize) -> usize {
    index ^ (index >> 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PskAlphabet {
    order: PskOrder,
}

impl PskAlphabet {
    pub fn new(order: PskOrder) -> Self {
        Self { order }
    }

    pub fn order(&self) -> PskOrder {
        self.order
    }

    pub fn size(&self) -> usize {
        self.order.get()
    }

    pub fn symbol(&self, index: usize) -> C64 {
        let d = self.size() as f64;
        C64::from_polar(1.0, PI * (2.0 * (index % self.size()) as f64 + 1.0) / d)
    }

    pub fn symbols(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.size()).map(|l| self.symbol(l))
    }

    /// Nearest symbol by angle. Exact boundary ties go to the smaller index;
    /// `y = 0` maps to index 0.
    pub fn detect(&self, y: C64) -> usize {
        if y.re == 0.0 && y.im == 0.0 {
            return 0;
        }
        let d = self.size();
        let df = d as f64;
        let raw = y.arg() * df / (2.0 * PI) - 0.5;
        let x = raw - df * libm::floor(raw / df);
        let fl = libm::floor(x);
        let frac = x - fl;
        let lo = (fl as usize) % d;
        let hi = (lo + 1) % d;
        if frac < 0.5 {
            lo
        } else if frac > 0.5 {
            hi
        } else {
            lo.min(hi)
        }
    }

    pub fn bit_diff(&self, a: usize, b: usize) -> u32 {
        (gray(a) ^ gray(b)).count_ones()
    }

    pub fn ber_count(&self, tx: &[usize], rx: &[usize]) -> Result<BitErrorCount, ConstellationError> {
        if tx.len() != rx.len() {
            return Err(ConstellationError::LengthMismatch {
                tx: tx.len(),
                rx: rx.len(),
            });
        }
        let d = self.size();
        let mut errors = 0u64;
        for (&a, &b) in tx.iter().zip(rx) {
            for &i in [a, b].iter() {
                if i >= d {
                    return Err(ConstellationError::IndexOutOfRange { index: i, order: d });
                }
            }
            errors += u64::from(self.bit_diff(a, b));
        }
        Ok(BitErrorCount {
            bit_errors: errors,
            bits: tx.len() as u64 * u64::from(self.order.bits_per_symbol()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SeededStream;

    fn psk(d: usize) -> PskAlphabet {
        PskAlphabet::new(PskOrder::new(d).unwrap())
    }

    fn brute_detect(a: &PskAlphabet, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for l in 0..a.size() {
            let dist = (y - a.symbol(l)).norm_sqr();
            if dist < best_d {
                best_d = dist;
                best = l;
            }
        }
        best
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(PskOrder::new(6).is_err());
        assert!(PskOrder::new(64).is_err());
        assert!(PskOrder::new(1).is_err());
    }

    #[test]
    fn alphabet_geometry() {
        for d in [2, 4, 8, 16, 32] {
            let a = psk(d);
            let sum: C64 = a.symbols().sum();
            assert!(sum.norm() < 1e-12);
            for l in 0..d {
                assert!((a.symbol(l).norm() - 1.0).abs() < 1e-15);
                assert_eq!(a.bit_diff(l, (l + 1) % d), 1);
            }
        }
    }

    #[test]
    fn detect_examples() {
        assert_eq!(psk(8).detect(psk(8).symbol(3)), 3);
        assert_eq!(psk(4).detect(C64::new(1.0, 0.0)), 0);
        assert_eq!(psk(8).detect(C64::new(0.0, 0.0)), 0);
    }

    #[test]
    fn bit_diff_examples() {
        assert_eq!(psk(8).bit_diff(0, 1), 1);
        assert_eq!(psk(8).bit_diff(0, 4), 2);
        assert_eq!(psk(4).bit_diff(0, 2), 2);
    }

    #[test]
    fn ber_count_examples() {
        let a = psk(16);
        let tx = [0, 5, 9, 15];
        assert_eq!(a.ber_count(&tx, &tx).unwrap().bit_errors, 0);
        let c = a.ber_count(&[3, 3, 3], &[3, 4, 3]).unwrap();
        assert_eq!(c, BitErrorCount { bit_errors: 1, bits: 12 });
        assert!(a.ber_count(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn ber_count_matches_per_symbol_sum() {
        let a = psk(32);
        let mut s = SeededStream::new(5, 0);
        let tx: alloc::vec::Vec<usize> = (0..500).map(|_| s.index(32)).collect();
        let rx: alloc::vec::Vec<usize> = (0..500).map(|_| s.index(32)).collect();
        let want: u64 = tx
            .iter()
            .zip(&rx)
            .map(|(&x, &y)| u64::from((gray(x) ^ gray(y)).count_ones()))
            .sum();
        assert_eq!(a.ber_count(&tx, &rx).unwrap().bit_errors, want);
    }

    #[test]
    fn detect_matches_exhaustive_search() {
        let mut s = SeededStream::new(99, 1);
        for d in [2, 4, 8, 16, 32] {
            let a = psk(d);
            for _ in 0..20_000 {
                let l = s.index(d);
                let y = a.symbol(l) + s.complex_normal(0.5);
                assert_eq!(a.detect(y), brute_detect(&a, y));
            }
        }
    }
}
