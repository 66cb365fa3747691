//! FFT plans, scratch buffers, and spectral differentiation for one grid size.
//!
//! A workspace is single-owner: clone one per worker thread, never share.
//! Forward transforms are unnormalized; the inverse carries the 1/n^3 factor,
//! so `inverse(forward(u)) == u` up to roundoff.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;

/// Strided axes are transformed through a block of this many columns at a
/// time, keeping gathers/scatters cache-friendly at large n.
const COLUMN_BLOCK: usize = 32;

pub struct SpectralWorkspace {
    grid: Grid3,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fft_scratch: Vec<Complex64>,
    block: Vec<Complex64>,
}

impl SpectralWorkspace {
    pub fn new(grid: Grid3) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft(n, FftDirection::Forward);
        let inv = planner.plan_fft(n, FftDirection::Inverse);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        SpectralWorkspace {
            grid,
            fwd,
            inv,
            fft_scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            block: vec![Complex64::new(0.0, 0.0); COLUMN_BLOCK.min(n) * n],
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    fn check_grid(&self, other: Grid3) -> Result<()> {
        if self.grid != other {
            return Err(Error::GridMismatch(self.grid, other));
        }
        Ok(())
    }

    fn transform_axes(&mut self, data: &mut [Complex64], plan: Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let bw = COLUMN_BLOCK.min(n);
        // x: contiguous rows
        for row in data.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut self.fft_scratch);
        }
        // y: stride n within each z-slab; gather bw adjacent x-columns at once
        let n2 = n * n;
        for iz in 0..n {
            let slab = &mut data[iz * n2..(iz + 1) * n2];
            for ix0 in (0..n).step_by(bw) {
                for iy in 0..n {
                    let src = &slab[iy * n + ix0..iy * n + ix0 + bw];
                    for (b, &v) in src.iter().enumerate() {
                        self.block[b * n + iy] = v;
                    }
                }
                plan.process_with_scratch(&mut self.block[..bw * n], &mut self.fft_scratch);
                for iy in 0..n {
                    let dst = &mut slab[iy * n + ix0..iy * n + ix0 + bw];
                    for (b, v) in dst.iter_mut().enumerate() {
                        *v = self.block[b * n + iy];
                    }
                }
            }
        }
        // z: stride n^2; same blocking over x
        for iy in 0..n {
            for ix0 in (0..n).step_by(bw) {
                let base = iy * n + ix0;
                for iz in 0..n {
                    let src = &data[iz * n2 + base..iz * n2 + base + bw];
                    for (b, &v) in src.iter().enumerate() {
                        self.block[b * n + iz] = v;
                    }
                }
                plan.process_with_scratch(&mut self.block[..bw * n], &mut self.fft_scratch);
                for iz in 0..n {
                    let dst = &mut data[iz * n2 + base..iz * n2 + base + bw];
                    for (b, v) in dst.iter_mut().enumerate() {
                        *v = self.block[b * n + iz];
                    }
                }
            }
        }
    }

    /// In-place forward transform (unnormalized).
    pub fn forward_inplace(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.grid.len());
        self.transform_axes(data, self.fwd.clone());
    }

    /// In-place inverse transform, normalized by 1/n^3.
    pub fn inverse_inplace(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.grid.len());
        self.transform_axes(data, self.inv.clone());
        let scale = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of a field into a fresh spectral array.
    pub fn forward(&mut self, u: &Field) -> Result<Vec<Complex64>> {
        self.check_grid(u.grid())?;
        let mut data = u.values().to_vec();
        self.forward_inplace(&mut data);
        Ok(data)
    }

    /// Inverse transform of a spectral array into a field.
    pub fn inverse(&mut self, mut data: Vec<Complex64>) -> Field {
        self.inverse_inplace(&mut data);
        Field::from_values(self.grid, data)
    }

    /// Apply a pointwise spectral multiplier `m(kx, ky, kz)`.
    pub fn apply_multiplier<M>(&mut self, u: &Field, mult: M) -> Result<Field>
    where
        M: Fn(f64, f64, f64) -> Complex64,
    {
        let mut hat = self.forward(u)?;
        self.multiply_spectrum(&mut hat, mult);
        Ok(self.inverse(hat))
    }

    /// Multiply a spectral array in place by `m(kx, ky, kz)`.
    pub fn multiply_spectrum<M>(&self, hat: &mut [Complex64], mult: M)
    where
        M: Fn(f64, f64, f64) -> Complex64,
    {
        let n = self.grid.n();
        let mut idx = 0;
        for iz in 0..n {
            let kz = self.grid.wavenumber(iz);
            for iy in 0..n {
                let ky = self.grid.wavenumber(iy);
                for ix in 0..n {
                    let kx = self.grid.wavenumber(ix);
                    hat[idx] *= mult(kx, ky, kz);
                    idx += 1;
                }
            }
        }
    }

    /// Spectral gradient (ik multiplier with the derivative wavenumber
    /// convention of `Grid3::deriv_wavenumber`).
    pub fn gradient(&mut self, u: &Field) -> Result<[Field; 3]> {
        let hat = self.forward(u)?;
        let n = self.grid.n();
        let mut out = Vec::with_capacity(3);
        for axis in 0..3 {
            let mut g = hat.clone();
            let grid = self.grid;
            let mut idx = 0;
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let k = match axis {
                            0 => grid.deriv_wavenumber(ix),
                            1 => grid.deriv_wavenumber(iy),
                            _ => grid.deriv_wavenumber(iz),
                        };
                        g[idx] *= Complex64::new(0.0, k);
                        idx += 1;
                    }
                }
            }
            out.push(self.inverse(g));
        }
        let [gx, gy, gz]: [Field; 3] = out.try_into().ok().unwrap();
        Ok([gx, gy, gz])
    }

    /// Spectral Laplacian (-|k|^2 multiplier, derivative convention).
    pub fn laplacian(&mut self, u: &Field) -> Result<Field> {
        let mut hat = self.forward(u)?;
        let n = self.grid.n();
        let grid = self.grid;
        let mut idx = 0;
        for iz in 0..n {
            let kz = grid.deriv_wavenumber(iz);
            for iy in 0..n {
                let ky = grid.deriv_wavenumber(iy);
                for ix in 0..n {
                    let kx = grid.deriv_wavenumber(ix);
                    hat[idx] *= -(kx * kx + ky * ky + kz * kz);
                    idx += 1;
                }
            }
        }
        Ok(self.inverse(hat))
    }

    /// H^1 seminorm squared computed in spectral space: sum |k|^2 |u_hat|^2
    /// (derivative convention, so it equals the L^2 norm of the gradient).
    pub fn h1_seminorm_sq(&mut self, u: &Field) -> Result<f64> {
        let hat = self.forward(u)?;
        let n = self.grid.n();
        let mut acc = 0.0;
        let mut idx = 0;
        for iz in 0..n {
            let kz = self.grid.deriv_wavenumber(iz);
            for iy in 0..n {
                let ky = self.grid.deriv_wavenumber(iy);
                for ix in 0..n {
                    let kx = self.grid.deriv_wavenumber(ix);
                    acc += (kx * kx + ky * ky + kz * kz) * hat[idx].norm_sqr();
                    idx += 1;
                }
            }
        }
        Ok(acc * self.grid.cell_volume() / self.grid.len() as f64)
    }

    /// Translate a field by `shift` using the Fourier shift theorem.
    pub fn translate(&mut self, u: &Field, shift: [f64; 3]) -> Result<Field> {
        self.apply_multiplier(u, |kx, ky, kz| {
            let phase = -(kx * shift[0] + ky * shift[1] + kz * shift[2]);
            Complex64::from_polar(1.0, phase)
        })
    }

    /// Zero-pad the spectrum onto a grid with twice the points per axis
    /// (same box), i.e. trigonometric interpolation onto the finer grid.
    pub fn upsample_double(&mut self, u: &Field, fine_ws: &mut SpectralWorkspace) -> Result<Field> {
        let n = self.grid.n();
        let fine = fine_ws.grid();
        assert_eq!(fine.n(), 2 * n, "fine grid must have 2n points per axis");
        assert_eq!(fine.half_width(), self.grid.half_width());
        let hat = self.forward(u)?;
        let mut big = vec![Complex64::new(0.0, 0.0); fine.len()];
        let map = |i: usize| -> usize {
            if i < n / 2 {
                i
            } else {
                i + n
            }
        };
        let scale = (fine.len() / self.grid.len()) as f64;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let src = ix + n * (iy + n * iz);
                    let dst = map(ix) + 2 * n * (map(iy) + 2 * n * map(iz));
                    big[dst] = hat[src] * scale;
                }
            }
        }
        Ok(fine_ws.inverse(big))
    }

    /// Zero all modes with |m| > n/3 in any axis (2/3 dealiasing rule).
    pub fn dealias_inplace(&mut self, u: &mut Field) -> Result<()> {
        self.check_grid(u.grid())?;
        let n = self.grid.n();
        let cut = n / 3;
        let keep = |i: usize| -> bool {
            let m = if i < n / 2 { i } else { n - i };
            m <= cut
        };
        let mut hat = u.values().to_vec();
        self.forward_inplace(&mut hat);
        let mut idx = 0;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if !(keep(ix) && keep(iy) && keep(iz)) {
                        hat[idx] = Complex64::new(0.0, 0.0);
                    }
                    idx += 1;
                }
            }
        }
        self.inverse_inplace(&mut hat);
        u.values_mut().copy_from_slice(&hat);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample;

    fn gaussian_field(n: usize, l: f64) -> (Grid3, Field) {
        let grid = Grid3::new(n, l).unwrap();
        let f = sample(grid, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            Complex64::new((-r2).exp(), 0.0)
        })
        .unwrap();
        (grid, f)
    }

    #[test]
    fn roundtrip_identity() {
        let (grid, f) = gaussian_field(16, 4.0);
        let mut ws = SpectralWorkspace::new(grid);
        let hat = ws.forward(&f).unwrap();
        let back = ws.inverse(hat);
        let num = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = f.values().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-12, "roundtrip relative error {}", num / den);
    }

    #[test]
    fn parseval() {
        let (grid, f) = gaussian_field(16, 4.0);
        let mut ws = SpectralWorkspace::new(grid);
        let hat = ws.forward(&f).unwrap();
        let phys = f.l2_norm_sq();
        let spec = hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume()
            / grid.len() as f64;
        assert!((phys - spec).abs() / phys < 1e-10);
    }

    #[test]
    fn laplacian_of_plane_wave() {
        let grid = Grid3::new(16, 2.0).unwrap();
        // resolved wavevector: m = (2, -3, 1)
        let k = [
            grid.wavenumber(2),
            grid.wavenumber(16 - 3),
            grid.wavenumber(1),
        ];
        let f = sample(grid, |p| {
            Complex64::from_polar(1.0, k[0] * p[0] + k[1] * p[1] + k[2] * p[2])
        })
        .unwrap();
        let mut ws = SpectralWorkspace::new(grid);
        let lap = ws.laplacian(&f).unwrap();
        let ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let max_rel = f
            .values()
            .iter()
            .zip(lap.values())
            .map(|(u, l)| (l + ksq * u).norm() / ksq)
            .fold(0.0f64, f64::max);
        assert!(max_rel < 1e-12, "max relative error {}", max_rel);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = Grid3::new(8, 1.0).unwrap();
        let f = sample(grid, |_| Complex64::new(1.0, 0.0)).unwrap();
        let mut ws = SpectralWorkspace::new(grid);
        let g = ws.gradient(&f).unwrap();
        for comp in &g {
            assert!(comp.values().iter().all(|v| v.norm() < 1e-13));
        }
    }

    #[test]
    fn laplacian_is_divergence_of_gradient() {
        let (grid, f) = gaussian_field(32, 5.0);
        let mut ws = SpectralWorkspace::new(grid);
        let lap = ws.laplacian(&f).unwrap();
        let [gx, gy, gz] = ws.gradient(&f).unwrap();
        let dgx = ws.gradient(&gx).unwrap();
        let dgy = ws.gradient(&gy).unwrap();
        let dgz = ws.gradient(&gz).unwrap();
        let scale = lap
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        let max_err = (0..grid.len())
            .map(|i| {
                (dgx[0].values()[i] + dgy[1].values()[i] + dgz[2].values()[i] - lap.values()[i])
                    .norm()
            })
            .fold(0.0f64, f64::max);
        assert!(max_err / scale < 1e-10, "rel error {}", max_err / scale);
    }

    #[test]
    fn h1_seminorm_matches_gradient_l2() {
        let (grid, f) = gaussian_field(32, 5.0);
        let mut ws = SpectralWorkspace::new(grid);
        let h1 = ws.h1_seminorm_sq(&f).unwrap();
        let g = ws.gradient(&f).unwrap();
        let via_grad: f64 = g.iter().map(|c| c.l2_norm_sq()).sum();
        assert!((h1 - via_grad).abs() / h1 < 1e-10);
    }

    #[test]
    fn translate_shifts_nodes() {
        let (grid, f) = gaussian_field(16, 4.0);
        let mut ws = SpectralWorkspace::new(grid);
        let dx = grid.dx();
        let shifted = ws.translate(&f, [dx, 0.0, 0.0]).unwrap();
        // lattice shift: values move by one node in x
        let n = grid.n();
        let mut max_err = 0.0f64;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let src = f.values()[grid.index(ix, iy, iz)];
                    let dst = shifted.values()[grid.index((ix + 1) % n, iy, iz)];
                    max_err = max_err.max((src - dst).norm());
                }
            }
        }
        assert!(max_err < 1e-12, "max err {}", max_err);
    }
}
