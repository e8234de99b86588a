//! Discrete Fourier transforms.
//!
//! Power-of-two lengths go through an iterative radix-2 Cooley-Tukey kernel;
//! any other length falls back to a direct O(n²) DFT. The forward direction
//! uses the kernel `exp(-j 2π mq / n)`.

use alloc::vec::Vec;

use crate::math::{cis, C64, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Precomputed twiddles for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    // exp(-j 2π k / len), k in 0..len (radix-2 only uses the first half)
    twiddles: Vec<C64>,
    bit_reverse: Vec<u32>,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        let twiddles = (0..len)
            .map(|k| cis(-TAU * k as f64 / len as f64))
            .collect();
        let bit_reverse = if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            (0..len as u32)
                .map(|i| {
                    if bits == 0 {
                        0
                    } else {
                        i.reverse_bits() >> (32 - bits)
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            len,
            twiddles,
            bit_reverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized transform in place.
    pub fn process(&self, buf: &mut [C64], direction: Direction) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        if self.len.is_power_of_two() {
            self.radix2(buf, direction);
        } else {
            self.direct(buf, direction);
        }
    }

    /// Transform scaled by `1/sqrt(n)`, so forward and inverse are adjoint
    /// unitary maps.
    pub fn process_unitary(&self, buf: &mut [C64], direction: Direction) {
        self.process(buf, direction);
        let scale = 1.0 / libm::sqrt(self.len as f64);
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn twiddle(&self, k: usize, direction: Direction) -> C64 {
        let w = self.twiddles[k];
        match direction {
            Direction::Forward => w,
            Direction::Inverse => w.conj(),
        }
    }

    fn radix2(&self, buf: &mut [C64], direction: Direction) {
        let n = self.len;
        for (i, &j) in self.bit_reverse.iter().enumerate() {
            let j = j as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, direction);
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }

    fn direct(&self, buf: &mut [C64], direction: Direction) {
        let n = self.len;
        let input: Vec<C64> = buf.to_vec();
        for (q, out) in buf.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (m, x) in input.iter().enumerate() {
                acc += x * self.twiddle((q * m) % n, direction);
            }
            *out = acc;
        }
    }
}
