//! Periodic cubic computational box with spectral wavenumbers.
//!
//! The box is `[-L, L)^3` sampled at `n` points per axis (`n` a power of
//! two), `dx = 2L/n`, with nodes `x_i = -L + i*dx`.  Sample arrays are
//! row-major with x fastest: `index = ix + n*(iy + n*iz)`.  Wavenumbers
//! follow the standard FFT layout `k_m = pi*m/L` for `m` in `[-n/2, n/2)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    half_width: f64,
}

impl Grid3 {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::BadGridExtent(half_width));
        }
        Ok(Grid3 { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Cell volume dx^3, the nodal quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        let dx = self.dx();
        dx * dx * dx
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Node position for a flat index.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ix = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let iz = idx / (self.n * self.n);
        [self.coord(ix), self.coord(iy), self.coord(iz)]
    }

    /// Wavenumber for axis index `i`: `pi*m/L` with `m = i` for `i < n/2`
    /// and `m = i - n` otherwise.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        };
        std::f64::consts::PI * m / self.half_width
    }

    /// One axis worth of wavenumbers in FFT layout.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Wavenumber used by derivative operators: zero at the Nyquist index so
    /// that derivatives of real fields stay real and the identities
    /// `laplacian = div(grad)` and `h1 = ||grad||^2` hold exactly.
    #[inline]
    pub fn deriv_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Largest |k|^2 representable on the grid (Nyquist in all three axes).
    pub fn k_sq_max(&self) -> f64 {
        let k_nyq = std::f64::consts::PI * (self.n as f64 / 2.0) / self.half_width;
        3.0 * k_nyq * k_nyq
    }

    /// Iterate `(flat_index, [x, y, z])` over all nodes.
    pub fn iter_positions(&self) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
        let n = self.n;
        (0..self.len()).map(move |idx| {
            let ix = idx % n;
            let iy = (idx / n) % n;
            let iz = idx / (n * n);
            (idx, [self.coord(ix), self.coord(iy), self.coord(iz)])
        })
    }
}
