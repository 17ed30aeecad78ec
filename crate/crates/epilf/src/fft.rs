//! Plan-caching FFT helpers for 2D grids.
//!
//! Everything downstream implements circular convolution through the DFT, so
//! this module centralizes plan reuse and normalization conventions: forward
//! transforms are unnormalized, inverse transforms divide by the transform
//! length (`ifft2(fft2(f)) = f`).

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse plan pair for one transform length.
#[derive(Clone)]
struct PlanPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PlanPair {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        PlanPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Reusable 2D FFT for a fixed `(n_rows, n_cols)` grid.
///
/// The plans are immutable and internally reference-counted, so one `Fft2`
/// can be shared across worker threads.
#[derive(Clone)]
pub struct Fft2 {
    n_rows: usize,
    n_cols: usize,
    rows: PlanPair, // transforms of length n_cols, applied along axis 1
    cols: PlanPair, // transforms of length n_rows, applied along axis 0
}

impl Fft2 {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        assert!(n_rows > 0 && n_cols > 0, "empty grid");
        let mut planner = FftPlanner::new();
        let rows = PlanPair::new(&mut planner, n_cols);
        let cols = if n_rows == n_cols {
            rows.clone()
        } else {
            PlanPair::new(&mut planner, n_rows)
        };
        Fft2 {
            n_rows,
            n_cols,
            rows,
            cols,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    fn check(&self, a: &Array2<Complex64>) {
        assert_eq!(
            a.dim(),
            (self.n_rows, self.n_cols),
            "grid does not match FFT plan size"
        );
    }

    /// In-place FFT along axis 1 (each row transformed).
    pub fn fft_axis1(&self, a: &mut Array2<Complex64>) {
        self.check(a);
        for mut row in a.rows_mut() {
            let slice = row.as_slice_mut().expect("row-major layout");
            self.rows.forward.process(slice);
        }
    }

    /// In-place normalized inverse FFT along axis 1.
    pub fn ifft_axis1(&self, a: &mut Array2<Complex64>) {
        self.check(a);
        let scale = 1.0 / self.n_cols as f64;
        for mut row in a.rows_mut() {
            let slice = row.as_slice_mut().expect("row-major layout");
            self.rows.inverse.process(slice);
            for v in slice.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// In-place FFT along axis 0 (each column transformed).
    pub fn fft_axis0(&self, a: &mut Array2<Complex64>) {
        self.check(a);
        self.columns_with(a, |plan_buf| self.cols.forward.process(plan_buf), 1.0);
    }

    /// In-place normalized inverse FFT along axis 0.
    pub fn ifft_axis0(&self, a: &mut Array2<Complex64>) {
        self.check(a);
        let scale = 1.0 / self.n_rows as f64;
        self.columns_with(a, |plan_buf| self.cols.inverse.process(plan_buf), scale);
    }

    fn columns_with(&self, a: &mut Array2<Complex64>, f: impl Fn(&mut [Complex64]), scale: f64) {
        let mut buf = vec![Complex64::default(); self.n_rows];
        for c in 0..self.n_cols {
            for r in 0..self.n_rows {
                buf[r] = a[(r, c)];
            }
            f(&mut buf);
            for r in 0..self.n_rows {
                a[(r, c)] = buf[r] * scale;
            }
        }
    }

    /// Full 2D FFT of a real grid.
    pub fn fft2(&self, a: &Array2<f64>) -> Array2<Complex64> {
        let mut c = a.mapv(|x| Complex64::new(x, 0.0));
        self.fft2_inplace(&mut c);
        c
    }

    /// Full 2D FFT, in place.
    pub fn fft2_inplace(&self, a: &mut Array2<Complex64>) {
        self.fft_axis1(a);
        self.fft_axis0(a);
    }

    /// Full normalized 2D inverse FFT, in place.
    pub fn ifft2_inplace(&self, a: &mut Array2<Complex64>) {
        self.ifft_axis1(a);
        self.ifft_axis0(a);
    }

    /// Normalized 2D inverse FFT, keeping only the real part.
    pub fn ifft2_real(&self, mut spec: Array2<Complex64>) -> Array2<f64> {
        self.ifft2_inplace(&mut spec);
        spec.mapv(|z| z.re)
    }
}

/// Angular DFT frequency for bin `k` of an `n`-point transform, in `[-pi, pi)`.
pub fn dft_frequency(k: usize, n: usize) -> f64 {
    let k = k as isize;
    let n = n as isize;
    let signed = if k < (n + 1) / 2 { k } else { k - n };
    2.0 * std::f64::consts::PI * signed as f64 / n as f64
}

/// Centered spatial offset for index `i` of an `n`-point periodic axis:
/// `0, 1, …, ⌈n/2⌉-1, -⌊n/2⌋, …, -1`.
pub fn centered_offset(i: usize, n: usize) -> f64 {
    let i = i as isize;
    let n = n as isize;
    let signed = if i < (n + 1) / 2 { i } else { i - n };
    signed as f64
}
