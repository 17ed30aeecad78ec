//! 1D scaling/wavelet filter cascades and the 2D directional fan window.
//!
//! The directional frame in [`crate::shearlet`] is assembled entirely from the
//! pieces built here: iterated products of a base low-pass/high-pass pair
//! define the radial (scale) behaviour, and a fan-shaped angular window
//! defines the directional behaviour. Filters are used on the DFT grid in the
//! frequency domain; spatial taps are kept because they are finite and make
//! symmetry properties directly testable.

use crate::fft::dft_frequency;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

/// Finite, real 1D filter: `taps[i]` sits at integer position `first + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter1d {
    taps: Vec<f64>,
    first: i64,
}

impl Filter1d {
    pub fn new(taps: Vec<f64>, first: i64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Filter("empty tap sequence".into()));
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::Filter("non-finite tap".into()));
        }
        Ok(Filter1d { taps, first })
    }

    /// The unit impulse (frequency response identically 1).
    pub fn unit_impulse() -> Self {
        Filter1d {
            taps: vec![1.0],
            first: 0,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Complex frequency response `sum_n taps[n] e^{-i (first+n) xi}`.
    pub fn response_complex(&self, xi: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &t) in self.taps.iter().enumerate() {
            let n = (self.first + i as i64) as f64;
            acc += t * Complex64::new((n * xi).cos(), -(n * xi).sin());
        }
        acc
    }

    /// Real part of the frequency response (exact for symmetric taps).
    pub fn response(&self, xi: f64) -> f64 {
        self.response_complex(xi).re
    }

    /// Inserts `m - 1` zeros between taps: response becomes `H(m*xi)`.
    pub fn upsample(&self, m: u32) -> Self {
        let m = m as usize;
        assert!(m >= 1);
        if m == 1 || self.taps.len() == 1 {
            let mut f = self.clone();
            f.first *= m as i64;
            return f;
        }
        let mut taps = vec![0.0; (self.taps.len() - 1) * m + 1];
        for (i, &t) in self.taps.iter().enumerate() {
            taps[i * m] = t;
        }
        Filter1d {
            taps,
            first: self.first * m as i64,
        }
    }

    /// Full linear convolution with another filter.
    pub fn convolve(&self, other: &Filter1d) -> Self {
        let mut taps = vec![0.0; self.taps.len() + other.taps.len() - 1];
        for (i, &a) in self.taps.iter().enumerate() {
            for (j, &b) in other.taps.iter().enumerate() {
                taps[i + j] += a * b;
            }
        }
        Filter1d {
            taps,
            first: self.first + other.first,
        }
    }

    /// True when taps are even-symmetric about position 0.
    pub fn is_even_symmetric(&self, tol: f64) -> bool {
        let last = self.first + self.taps.len() as i64 - 1;
        if self.first != -last {
            return false;
        }
        let n = self.taps.len();
        (0..n).all(|i| (self.taps[i] - self.taps[n - 1 - i]).abs() <= tol)
    }
}

/// Base low-pass (`h`) / high-pass (`g`) analysis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair1d {
    pub h: Filter1d,
    pub g: Filter1d,
}

impl FilterPair1d {
    /// Validates the structural requirements: `h` has nonzero DC gain and `g`
    /// has (numerically) zero DC gain.
    pub fn new(h: Filter1d, g: Filter1d) -> Result<Self> {
        let h_dc: f64 = h.taps().iter().sum();
        let g_dc: f64 = g.taps().iter().sum();
        if h_dc.abs() < 1e-8 {
            return Err(Error::Filter(format!(
                "low-pass DC gain {h_dc:.3e} is (near) zero"
            )));
        }
        if g_dc.abs() > 1e-8 {
            return Err(Error::Filter(format!(
                "high-pass DC gain {g_dc:.3e} is not zero"
            )));
        }
        Ok(FilterPair1d { h, g })
    }

    /// The default pair: symmetric biorthogonal 9/7-tap analysis filters,
    /// rescaled so that `h` has DC gain exactly 1 (and `g` peaks at 1 at the
    /// half-band frequency). The unit DC gain keeps iterated products of `h`
    /// bounded, which is what the frame construction needs.
    pub fn biorthogonal_9_7() -> Self {
        const H: [f64; 9] = [
            0.037828455506995,
            -0.023849465019380,
            -0.110624404418423,
            0.377402855612654,
            0.852698679009403,
            0.377402855612654,
            -0.110624404418423,
            -0.023849465019380,
            0.037828455506995,
        ];
        const G: [f64; 7] = [
            0.064538882628938,
            -0.040689417609558,
            -0.418092273222212,
            0.788485616405664,
            -0.418092273222212,
            -0.040689417609558,
            0.064538882628938,
        ];
        let sqrt2 = std::f64::consts::SQRT_2;
        let h = Filter1d::new(H.iter().map(|t| t / sqrt2).collect(), -4).unwrap();
        // Renormalize h to DC gain exactly 1 (the published taps carry
        // rounding in the last digit).
        let h_dc: f64 = h.taps().iter().sum();
        let h = Filter1d::new(h.taps().iter().map(|t| t / h_dc).collect(), -4).unwrap();
        let g = Filter1d::new(G.iter().map(|t| t / sqrt2).collect(), -3).unwrap();
        FilterPair1d::new(h, g).expect("built-in pair satisfies the invariants")
    }
}

impl Default for FilterPair1d {
    fn default() -> Self {
        FilterPair1d::biorthogonal_9_7()
    }
}

/// Iterated filters for one level `j`:
/// `h_j(xi) = prod_{k<j} h(2^k xi)` and `g_j(xi) = g(2^{j-1} xi) h_{j-1}(xi)`,
/// with `h_0 = g_0 = ` unit impulse (level 0 has no band of its own).
#[derive(Debug, Clone)]
pub struct CascadeSet {
    pub level: u32,
    pub h: Filter1d,
    pub g: Filter1d,
}

/// Builds cascade filters for `j = 0..=max_level` by upsampled convolution:
/// `h_j = h * up_2(h_{j-1})` realizes the frequency-domain product formula
/// exactly (up to round-off) in the tap domain.
pub fn cascade_filters(base: &FilterPair1d, max_level: u32) -> Vec<CascadeSet> {
    let mut out = Vec::with_capacity(max_level as usize + 1);
    out.push(CascadeSet {
        level: 0,
        h: Filter1d::unit_impulse(),
        g: Filter1d::unit_impulse(),
    });
    for j in 1..=max_level {
        let prev_h = &out[j as usize - 1].h;
        // h_j(xi) = h(xi) * h_{j-1}(2 xi): convolve base with the upsampled
        // previous cascade.
        let h = base.h.convolve(&prev_h.upsample(2));
        // g_j(xi) = g(2^{j-1} xi) h_{j-1}(xi).
        let g = base.g.upsample(1 << (j - 1)).convolve(prev_h);
        out.push(CascadeSet { level: j, h, g });
    }
    out
}

/// Wraps an angular frequency into `[-pi, pi)`.
pub fn wrap_frequency(xi: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut w = (xi + PI) % two_pi;
    if w < 0.0 {
        w += two_pi;
    }
    w - PI
}

/// Directional fan window.
///
/// The passband is the pair of angular sectors around the `xi_1` axis:
/// `P(xi_1, xi_2) = W(xi_2 / xi_1)` where `W(t)^2` is a raised cosine in `|t|`
/// equal to 1 for `|t| <= 1 - w`, 0 for `|t| >= 1 + w`, with a monotone
/// cosine transition between. Squared responses of unit-spaced translates of
/// `W^2` in the slope variable tile exactly (`W^2(1-x) + W^2(1+x) = 1`),
/// which makes the sheared frame elements partition their cone.
#[derive(Debug, Clone, Copy)]
pub struct FanFilter {
    transition: f64,
}

impl FanFilter {
    /// `transition` is the half-width `w` of the slope transition band,
    /// in `(0, 1]`.
    pub fn new(transition: f64) -> Result<Self> {
        if !(transition > 0.0 && transition <= 1.0) {
            return Err(Error::Params(format!(
                "fan transition width {transition} outside (0, 1]"
            )));
        }
        Ok(FanFilter { transition })
    }

    pub fn transition(&self) -> f64 {
        self.transition
    }

    /// Squared window as a function of slope: the raised-cosine profile.
    fn squared_slope_window(&self, t: f64) -> f64 {
        let t = t.abs();
        let w = self.transition;
        if t <= 1.0 - w {
            1.0
        } else if t >= 1.0 + w {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (t - (1.0 - w)) / (2.0 * w)).cos())
        }
    }

    /// Window amplitude at frequency pair `(xi_1, xi_2)`; both arguments are
    /// wrapped into `[-pi, pi)` first (all grids are periodic).
    pub fn response(&self, xi1: f64, xi2: f64) -> f64 {
        let x1 = wrap_frequency(xi1);
        let x2 = wrap_frequency(xi2);
        if x1.abs() < 1e-300 {
            // On the xi_2 axis the slope is infinite: outside the fan except
            // at the origin itself.
            return if x2.abs() < 1e-300 { 1.0 } else { 0.0 };
        }
        self.squared_slope_window(x2 / x1).sqrt()
    }

    /// Samples `P(scale1 * xi_1, scale2 * xi_2)` on the `n1 x n2` DFT grid;
    /// `out[(i1, i2)]` uses the DFT frequencies of bins `i1` (length `n1`)
    /// and `i2` (length `n2`). Scaled arguments periodize (wrap) rather than
    /// clamp, consistent with circular convolution.
    pub fn response_grid(&self, n1: usize, n2: usize, scale1: f64, scale2: f64) -> Array2<f64> {
        assert!(n1 >= 2 && n2 >= 2, "grid too small");
        Array2::from_shape_fn((n1, n2), |(i1, i2)| {
            self.response(
                scale1 * dft_frequency(i1, n1),
                scale2 * dft_frequency(i2, n2),
            )
        })
    }

    /// Spatial coefficients realizing the sampled response on an `n1 x n2`
    /// periodic grid (inverse DFT of the frequency samples). Real and
    /// even-symmetric because the response is real and even.
    pub fn taps(&self, n1: usize, n2: usize) -> Array2<f64> {
        let grid = self.response_grid(n1, n2, 1.0, 1.0);
        let fft = crate::fft::Fft2::new(n1, n2);
        fft.ifft2_real(grid.mapv(|x| Complex64::new(x, 0.0)))
    }
}

impl Default for FanFilter {
    /// Half-band transition: the widest window that still tiles, giving the
    /// smoothest angular roll-off and the least spatial ringing.
    fn default() -> Self {
        FanFilter { transition: 0.5 }
    }
}
