//! Table-driven complex oscillator: exact `cis` anchors every block,
//! table multiplies in between.

use std::f64::consts::TAU;

use num_complex::Complex64;

const BLOCK: usize = 64;

/// Yields `exp(i 2 pi f n / fs)` for `n = first, first + 1, ...`.
pub(crate) struct Oscillator {
    cycles_per_sample: f64,
    table: [Complex64; BLOCK],
    index: i64,
    anchor: Complex64,
    offset: usize,
}

impl Oscillator {
    pub(crate) fn new(freq_hz: f64, sample_rate_hz: f64, first_sample: i64) -> Self {
        let cycles_per_sample = freq_hz / sample_rate_hz;
        let table = std::array::from_fn(|k| Complex64::cis(TAU * cycles_per_sample * k as f64));
        let mut osc = Self {
            cycles_per_sample,
            table,
            index: first_sample,
            anchor: Complex64::new(1.0, 0.0),
            offset: 0,
        };
        osc.reanchor();
        osc
    }

    fn reanchor(&mut self) {
        // reduce to a fraction of a cycle before scaling so long captures keep
        // full phase precision
        let cycles = (self.cycles_per_sample * self.index as f64).rem_euclid(1.0);
        self.anchor = Complex64::cis(TAU * cycles);
        self.offset = 0;
    }
}

impl Iterator for Oscillator {
    type Item = Complex64;

    #[inline]
    fn next(&mut self) -> Option<Complex64> {
        if self.offset == BLOCK {
            self.reanchor();
        }
        let z = self.anchor * self.table[self.offset];
        self.offset += 1;
        self.index += 1;
        Some(z)
    }
}
