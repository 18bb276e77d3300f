//! Type-I discrete sine transform on top of a complex FFT.
//!
//! `X_k = sum_{n=1..N} x_n sin(pi n k / (N + 1))`. Applying it twice returns
//! the input scaled by `(N + 1) / 2`. Rows are transformed two at a time by
//! packing one into the real and one into the imaginary part.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        SineTransform {
            n,
            fft: planner.plan_fft_forward(2 * (n + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Transforms one or two rows in place (`b` may be absent).
    pub fn transform_pair(&self, a: &mut [f64], b: Option<&mut [f64]>, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        let m = 2 * (n + 1);
        debug_assert_eq!(buf.len(), m);
        buf[0] = Complex64::new(0.0, 0.0);
        buf[n + 1] = Complex64::new(0.0, 0.0);
        match &b {
            Some(b) => {
                for k in 0..n {
                    buf[k + 1] = Complex64::new(a[k], b[k]);
                    buf[m - 1 - k] = Complex64::new(-a[k], -b[k]);
                }
            }
            None => {
                for k in 0..n {
                    buf[k + 1] = Complex64::new(a[k], 0.0);
                    buf[m - 1 - k] = Complex64::new(-a[k], 0.0);
                }
            }
        }
        self.fft.process_with_scratch(buf, scratch);
        for k in 0..n {
            a[k] = -0.5 * buf[k + 1].im;
        }
        if let Some(b) = b {
            for k in 0..n {
                b[k] = 0.5 * buf[k + 1].re;
            }
        }
    }

    pub fn buffers(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = 2 * (self.n + 1);
        (
            vec![Complex64::new(0.0, 0.0); m],
            vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()],
        )
    }

    /// Transforms every row (length `n`) of a row-major block.
    pub fn transform_rows(&self, data: &mut [f64]) {
        let n = self.n;
        let run = |(buf, scratch): &mut (Vec<Complex64>, Vec<Complex64>), pair: &mut [f64]| {
            let (a, rest) = pair.split_at_mut(n);
            let b = if rest.is_empty() { None } else { Some(rest) };
            self.transform_pair(a, b, buf, scratch);
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            data.par_chunks_mut(2 * n).for_each_init(|| self.buffers(), run);
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut bufs = self.buffers();
            data.chunks_mut(2 * n).for_each(|pair| run(&mut bufs, pair));
        }
    }
}
