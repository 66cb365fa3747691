//! Modulation analysis around the soliton orbit: fit (theta, y) from the
//! orthogonality conditions, split off the scaling direction g = alpha Q + h,
//! apply the linearized operators L+/L-, and evaluate the bilinear form B
//! and the Lyapunov expansion.
//!
//! The soliton family e^{i theta} Q(. - y) is generated from one base field
//! by the Fourier shift theorem, which translates the grid representation
//! exactly and keeps <Q_y, grad Q_y> = 0 for every y.  The base may be the
//! grid's own discrete ground state (exactly kernel-consistent with the
//! spectral Laplacian) or a periodized sample of the shooting profile.

use num_complex::Complex64;

use crate::diagnostics::Diagnostics;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::spectral::SpectralWorkspace;

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a <= -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Generator of the soliton orbit on a fixed grid.
pub struct SolitonFamily {
    grid: Grid3,
    base_hat: Vec<Complex64>,
    /// integral |Q|^2 of the base
    pub l2_sq: f64,
    /// integral |grad Q|^2 of the base
    pub h1_sq: f64,
    /// integral |Q|^4 of the base
    pub l4_4: f64,
}

impl SolitonFamily {
    /// Build from a real base field centered at the origin.
    pub fn from_field(base: &Field, ws: &mut SpectralWorkspace) -> Result<Self> {
        let grid = base.grid();
        let l2_sq = base.l2_norm_sq();
        let h1_sq = ws.h1_seminorm_sq(base)?;
        let l4_4 = base.l4_norm_4();
        let base_hat = ws.forward(base)?;
        Ok(SolitonFamily {
            grid,
            base_hat,
            l2_sq,
            h1_sq,
            l4_4,
        })
    }

    /// Build from a periodized sample of the radial shooting profile.
    pub fn from_profile(
        grid: Grid3,
        profile: &crate::ground_state::GroundStateProfile,
        ws: &mut SpectralWorkspace,
    ) -> Result<Self> {
        let base = crate::ground_state::soliton_with_tol(grid, profile, 0.0, [0.0; 3], 1.0)?;
        Self::from_field(&base, ws)
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    fn shifted_spectrum<M>(&self, y: [f64; 3], extra: M) -> Vec<Complex64>
    where
        M: Fn(f64, f64, f64) -> Complex64,
    {
        let n = self.grid.n();
        let mut hat = self.base_hat.clone();
        let mut idx = 0;
        for iz in 0..n {
            let kz = self.grid.deriv_wavenumber(iz);
            for iy in 0..n {
                let ky = self.grid.deriv_wavenumber(iy);
                for ix in 0..n {
                    let kx = self.grid.deriv_wavenumber(ix);
                    let phase = -(kx * y[0] + ky * y[1] + kz * y[2]);
                    hat[idx] *= Complex64::from_polar(1.0, phase) * extra(kx, ky, kz);
                    idx += 1;
                }
            }
        }
        hat
    }

    /// Q(. - y) as a real field.
    pub fn translate(&self, y: [f64; 3], ws: &mut SpectralWorkspace) -> Field {
        let hat = self.shifted_spectrum(y, |_, _, _| Complex64::new(1.0, 0.0));
        ws.inverse(hat).real_part()
    }

    /// e^{i theta} Q(. - y).
    pub fn sample(&self, theta: f64, y: [f64; 3], ws: &mut SpectralWorkspace) -> Field {
        self.translate(y, ws)
            .scale(Complex64::from_polar(1.0, theta))
    }

    /// (d_j Q)(. - y), real.
    pub fn gradient(&self, y: [f64; 3], axis: usize, ws: &mut SpectralWorkspace) -> Field {
        let hat = self.shifted_spectrum(y, |kx, ky, kz| {
            let kj = [kx, ky, kz][axis];
            Complex64::new(0.0, kj)
        });
        ws.inverse(hat).real_part()
    }

    /// (Delta Q)(. - y), real.
    pub fn laplacian(&self, y: [f64; 3], ws: &mut SpectralWorkspace) -> Field {
        let hat = self.shifted_spectrum(y, |kx, ky, kz| {
            Complex64::new(-(kx * kx + ky * ky + kz * kz), 0.0)
        });
        ws.inverse(hat).real_part()
    }

    /// (d_j d_k Q)(. - y), real.
    fn second_derivative(
        &self,
        y: [f64; 3],
        j: usize,
        k: usize,
        ws: &mut SpectralWorkspace,
    ) -> Field {
        let hat = self.shifted_spectrum(y, |kx, ky, kz| {
            let ks = [kx, ky, kz];
            Complex64::new(-ks[j] * ks[k], 0.0)
        });
        ws.inverse(hat).real_part()
    }
}

/// Result of the orthogonality fit at one time slice.
#[derive(Debug, Clone)]
pub struct ModulationFit {
    /// gauge angle, wrapped to (-pi, pi]
    pub theta: f64,
    pub y: [f64; 3],
    /// g = e^{-i theta} u - Q(. - y)
    pub g: Field,
    pub alpha: f64,
    /// h = g - alpha Q(. - y)
    pub h: Field,
    /// final orthogonality residuals (Im<Q,u'>, Re<d_j Q, u'>)
    pub ortho_residual: [f64; 4],
    pub iterations: usize,
}

impl ModulationFit {
    pub fn residual_norm(&self) -> f64 {
        self.ortho_residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

fn residual_vector(
    family: &SolitonFamily,
    u: &Field,
    theta: f64,
    y: [f64; 3],
    ws: &mut SpectralWorkspace,
) -> Result<[f64; 4]> {
    let q = family.translate(y, ws);
    let rot = Complex64::from_polar(1.0, -theta);
    let ip = q.inner(u)?; // <Q_y, u>, Q real
    let mut out = [0.0; 4];
    out[0] = (rot * ip).im;
    for axis in 0..3 {
        let dq = family.gradient(y, axis, ws);
        let ipd = dq.inner(u)?;
        out[1 + axis] = (rot * ipd).re;
    }
    Ok(out)
}

/// Newton iteration on the four orthogonality conditions
/// Im<e^{i theta} Q(.-y), u> = Re<e^{i theta} d_j Q(.-y), u> = 0,
/// using the analytic leading-order Jacobian
/// diag(-||Q||_2^2, -(1/3)||grad Q||_2^2 I_3), refreshed by central finite
/// differences every five iterations.
pub fn fit(
    family: &SolitonFamily,
    u: &Field,
    guess: (f64, [f64; 3]),
    ws: &mut SpectralWorkspace,
) -> Result<ModulationFit> {
    let tol = 1e-10 * family.l2_sq;
    let max_iters = 50;
    let mut theta = guess.0;
    let mut y = guess.1;
    // leading-order Jacobian at the soliton: d(Phi_1)/d(theta) = -||Q||_2^2
    // and d(Phi_{1+j})/d(y_k) = -<d_k d_j Q, Q> = +delta_jk ||d_j Q||_2^2
    // (each diagonal block is a third of ||grad Q||^2 by radial symmetry)
    let mut jac = [
        [-family.l2_sq, 0.0, 0.0, 0.0],
        [0.0, family.h1_sq / 3.0, 0.0, 0.0],
        [0.0, 0.0, family.h1_sq / 3.0, 0.0],
        [0.0, 0.0, 0.0, family.h1_sq / 3.0],
    ];
    let mut residual = residual_vector(family, u, theta, y, ws)?;
    let mut norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut prev_norm = f64::INFINITY;
    let mut iters = 0;
    while norm >= tol && iters < max_iters {
        iters += 1;
        // refresh the Jacobian by finite differences every five iterations,
        // but only while convergence is slow and the residual is still far
        // above the tolerance (the differences are pure noise near the zero)
        if iters % 5 == 0 && norm > 0.25 * prev_norm && norm > 1e4 * tol {
            let h = 1e-6;
            for col in 0..4 {
                let mut zp = (theta, y);
                let mut zm = (theta, y);
                match col {
                    0 => {
                        zp.0 += h;
                        zm.0 -= h;
                    }
                    c => {
                        zp.1[c - 1] += h;
                        zm.1[c - 1] -= h;
                    }
                }
                let rp = residual_vector(family, u, zp.0, zp.1, ws)?;
                let rm = residual_vector(family, u, zm.0, zm.1, ws)?;
                for row in 0..4 {
                    jac[row][col] = (rp[row] - rm[row]) / (2.0 * h);
                }
            }
        }
        let step = solve4(&jac, &residual).ok_or(Error::NonConvergence {
            iters,
            residual: norm,
        })?;
        theta = wrap_angle(theta - step[0]);
        for axis in 0..3 {
            y[axis] -= step[1 + axis];
        }
        residual = residual_vector(family, u, theta, y, ws)?;
        prev_norm = norm;
        norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    }
    if norm >= tol {
        return Err(Error::NonConvergence {
            iters,
            residual: norm,
        });
    }

    let (g, alpha, h) = decompose(family, u, theta, y, ws)?;
    Ok(ModulationFit {
        theta: wrap_angle(theta),
        y,
        g,
        alpha,
        h,
        ortho_residual: residual,
        iterations: iters,
    })
}

/// Split g = e^{-i theta} u - Q(.-y) as alpha Q(.-y) + h with
/// alpha = <g_1(.+y), Delta Q> / <Q, Delta Q>, so that h_1 is orthogonal to
/// Delta Q and h lands in the coercive subspace of B.
pub fn decompose(
    family: &SolitonFamily,
    u: &Field,
    theta: f64,
    y: [f64; 3],
    ws: &mut SpectralWorkspace,
) -> Result<(Field, f64, Field)> {
    let q = family.translate(y, ws);
    let rot = Complex64::from_polar(1.0, -theta);
    let g = Field::from_values(
        family.grid,
        u.values()
            .iter()
            .zip(q.values())
            .map(|(uv, qv)| rot * uv - qv)
            .collect(),
    );
    let lap_q = family.laplacian(y, ws);
    // <g_1, Delta Q(.-y)> / <Q, Delta Q>; the denominator is -||grad Q||^2
    let num = g.real_part().inner(&lap_q)?.re;
    let den = -family.h1_sq;
    let alpha = num / den;
    let h = g.add_scaled(Complex64::new(-alpha, 0.0), &q)?;
    Ok((g, alpha, h))
}

fn solve4(a: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..4 {
        let mut pivot = col;
        for row in col + 1..4 {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut s = rhs[col];
        for k in col + 1..4 {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// The linearized operators about Q(. - y):
/// L+ f = -Delta f + f - 3 Q^2 f,  L- f = -Delta f + f - Q^2 f.
pub struct LinearizedOps {
    grid: Grid3,
    /// Q(. - y)^2 at nodes
    q_sq: Vec<f64>,
}

impl LinearizedOps {
    pub fn new(family: &SolitonFamily, y: [f64; 3], ws: &mut SpectralWorkspace) -> Self {
        let q = family.translate(y, ws);
        LinearizedOps {
            grid: family.grid,
            q_sq: q.values().iter().map(|v| v.re * v.re).collect(),
        }
    }

    fn apply(&self, f: &Field, cubic_coeff: f64, ws: &mut SpectralWorkspace) -> Result<Field> {
        let lap = ws.laplacian(f)?;
        let values = f
            .values()
            .iter()
            .zip(lap.values())
            .zip(&self.q_sq)
            .map(|((fv, lv), &q2)| fv - lv - cubic_coeff * q2 * fv)
            .collect();
        Ok(Field::from_values(self.grid, values))
    }

    pub fn apply_lplus(&self, f: &Field, ws: &mut SpectralWorkspace) -> Result<Field> {
        self.apply(f, 3.0, ws)
    }

    pub fn apply_lminus(&self, f: &Field, ws: &mut SpectralWorkspace) -> Result<Field> {
        self.apply(f, 1.0, ws)
    }

    /// B(g, g) computed both as the energy-space integral and as
    /// (1/2)<L+ g1, g1> + (1/2)<L- g2, g2>.  The two routes agree to
    /// roundoff by Parseval.
    pub fn bilinear_b(&self, g: &Field, ws: &mut SpectralWorkspace) -> Result<(f64, f64)> {
        let g1 = g.real_part();
        let g2 = g.imag_part();
        // integral form
        let h1 = ws.h1_seminorm_sq(g)?;
        let mut local = 0.0;
        for (v, &q2) in g.values().iter().zip(&self.q_sq) {
            local += (1.5 * v.re * v.re + 0.5 * v.im * v.im) * q2;
        }
        local *= self.grid.cell_volume();
        let integral = 0.5 * h1 + 0.5 * g.l2_norm_sq() - local;
        // operator form
        let lp = self.apply_lplus(&g1, ws)?;
        let lm = self.apply_lminus(&g2, ws)?;
        let operator = 0.5 * g1.inner(&lp)?.re + 0.5 * g2.inner(&lm)?.re;
        Ok((integral, operator))
    }
}

/// Residual of the Lyapunov expansion at the threshold normalization:
/// r = B(g(.+y), g(.+y)) + (1/2) int V |u|^2, which is O(||g||_{H1}^3).
pub fn lyapunov_residual(
    family: &SolitonFamily,
    diag: &Diagnostics,
    u: &Field,
    fit: &ModulationFit,
    ws: &mut SpectralWorkspace,
) -> Result<f64> {
    let mass = diag.mass(u);
    let energy = diag.energy(u, ws)?;
    let m_ref = 0.5 * family.l2_sq;
    let e_ref = 0.5 * family.h1_sq - 0.25 * family.l4_4;
    if ((mass - m_ref) / m_ref).abs() > 1e-6 || ((energy - e_ref) / e_ref.abs()).abs() > 1e-6 {
        return Err(Error::NotNormalized(format!(
            "Lyapunov expansion needs M = M(Q), E_V = E_0(Q); offsets {:.2e}, {:.2e}",
            ((mass - m_ref) / m_ref).abs(),
            ((energy - e_ref) / e_ref.abs()).abs()
        )));
    }
    let ops = LinearizedOps::new(family, fit.y, ws);
    let (b, _) = ops.bilinear_b(&fit.g, ws)?;
    Ok(b + 0.5 * diag.potential_energy_term(u))
}

/// Exact nodal mass-constraint identity of the decomposition
/// (its paper form drops the 2 alpha <Q, h_1> term, which is O(||g||^2)):
/// (alpha^2 + 2 alpha) ||Q_y||^2 + (2 + 2 alpha) <Q_y, h_1> + ||h||^2
///   + (||Q_y||^2 - 2 M(u)) = 0.
pub fn mass_constraint_residual(
    family: &SolitonFamily,
    u: &Field,
    fit: &ModulationFit,
    ws: &mut SpectralWorkspace,
) -> Result<(f64, f64)> {
    let q = family.translate(fit.y, ws);
    let q_l2 = q.l2_norm_sq();
    let qh1 = q.inner(&fit.h.real_part())?.re;
    let h_l2 = fit.h.l2_norm_sq();
    let a = fit.alpha;
    let exact = (a * a + 2.0 * a) * q_l2 + (2.0 + 2.0 * a) * qh1 + h_l2
        + (q_l2 - u.l2_norm_sq());
    let paper_form = (a * a + 2.0 * a) * q_l2 + 2.0 * qh1 + h_l2;
    Ok((exact, paper_form))
}

/// One row of the modulation CSV.
#[derive(Debug, Clone)]
pub struct ModulationRow {
    pub t: f64,
    pub theta: f64,
    pub y: [f64; 3],
    pub alpha: f64,
    pub g_h1: f64,
    pub delta: f64,
    pub ratio_g: f64,
    pub ratio_pot: f64,
    pub ratio_decay: f64,
    /// |dy/dt| / delta, filled by centered differences after the run
    pub ydot_over_delta: f64,
    pub ortho_resid: f64,
}

/// Sequential tracker: fits each admitted slice seeded by the previous one.
pub struct Tracker {
    family: SolitonFamily,
    delta_gate: f64,
    seed: Option<(f64, [f64; 3])>,
    pub rows: Vec<ModulationRow>,
    /// slices rejected by the gate or by fit failure
    pub skipped: usize,
}

impl Tracker {
    pub fn new(family: SolitonFamily, delta_gate: f64) -> Self {
        Tracker {
            family,
            delta_gate,
            seed: None,
            rows: Vec::new(),
            skipped: 0,
        }
    }

    pub fn family(&self) -> &SolitonFamily {
        &self.family
    }

    /// Fit one time slice if delta(u) is under the gate.  Fit failure
    /// truncates the window (drops the seed) rather than erroring the run.
    pub fn observe(
        &mut self,
        t: f64,
        u: &Field,
        diag: &Diagnostics,
        ws: &mut SpectralWorkspace,
    ) -> Result<()> {
        let delta = diag.delta(u, ws)?;
        if !(delta.abs() < self.delta_gate) {
            self.skipped += 1;
            self.seed = None;
            return Ok(());
        }
        let guess = match self.seed {
            Some(z) => z,
            None => {
                let y0 = diag.spatial_center(u, ws)?;
                let q = self.family.translate(y0, ws);
                let theta0 = q.inner(u)?.arg();
                (theta0, y0)
            }
        };
        match fit(&self.family, u, guess, ws) {
            Ok(f) => {
                let pot = diag.potential_energy_term(u);
                let g_h1 = (f.g.l2_norm_sq() + ws.h1_seminorm_sq(&f.g)?).sqrt();
                let ynorm = (f.y[0] * f.y[0] + f.y[1] * f.y[1] + f.y[2] * f.y[2]).sqrt();
                let decay = if ynorm > 0.0 {
                    (-2.0 * ynorm).exp() / (ynorm * ynorm)
                } else {
                    f64::INFINITY
                };
                let denom = if delta.abs() > 0.0 { delta.abs() } else { f64::MIN_POSITIVE };
                self.seed = Some((f.theta, f.y));
                self.rows.push(ModulationRow {
                    t,
                    theta: f.theta,
                    y: f.y,
                    alpha: f.alpha,
                    g_h1,
                    delta,
                    ratio_g: g_h1 / denom,
                    ratio_pot: pot.max(0.0).sqrt() / denom,
                    ratio_decay: decay / denom,
                    ydot_over_delta: f64::NAN,
                    ortho_resid: f.residual_norm(),
                });
            }
            Err(Error::NonConvergence { .. }) => {
                self.skipped += 1;
                self.seed = None;
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }

    /// Fill |dy/dt|/delta by centered differences over consecutive rows.
    pub fn finalize(&mut self) {
        let n = self.rows.len();
        for i in 0..n {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            if hi == lo {
                continue;
            }
            let dt = self.rows[hi].t - self.rows[lo].t;
            if dt <= 0.0 {
                continue;
            }
            let mut dy = 0.0;
            for ax in 0..3 {
                let d = self.rows[hi].y[ax] - self.rows[lo].y[ax];
                dy += d * d;
            }
            let speed = dy.sqrt() / dt;
            let denom = self.rows[i].delta.abs().max(f64::MIN_POSITIVE);
            self.rows[i].ydot_over_delta = speed / denom;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::discrete_ground_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    // shared discrete ground state on a small grid to keep the tests quick
    fn test_grid() -> Grid3 {
        Grid3::new(64, 12.8).unwrap()
    }

    fn base_field() -> &'static Field {
        static CELL: OnceLock<Field> = OnceLock::new();
        CELL.get_or_init(|| discrete_ground_state(test_grid(), 1e-11).unwrap().0)
    }

    fn family(ws: &mut SpectralWorkspace) -> SolitonFamily {
        SolitonFamily::from_field(base_field(), ws).unwrap()
    }

    /// Smooth band-limited random field with decaying spectrum.
    fn random_smooth(grid: Grid3, ws: &mut SpectralWorkspace, seed: u64, complex: bool) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.len()];
        let kcut = grid.wavenumber(n / 2 - 1).abs() / 3.0;
        let mut idx = 0;
        for iz in 0..n {
            let kz = grid.wavenumber(iz);
            for iy in 0..n {
                let ky = grid.wavenumber(iy);
                for ix in 0..n {
                    let kx = grid.wavenumber(ix);
                    let ksq = kx * kx + ky * ky + kz * kz;
                    if ksq.sqrt() <= kcut {
                        hat[idx] = Complex64::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ) * (-2.0 * ksq / (kcut * kcut)).exp();
                    }
                    idx += 1;
                }
            }
        }
        let f = ws.inverse(hat);
        if complex {
            f
        } else {
            f.real_part()
        }
    }

    #[test]
    fn kernel_of_lminus_is_discrete_ground_state() {
        // L- Q = -(Delta Q - Q + Q^3) vanishes identically for the grid's
        // own ground state; the L+ kernel check needs the cube resolved and
        // lives in the acceptance suite on the fine analysis grid.
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let ops = LinearizedOps::new(&fam, [0.0; 3], &mut ws);
        let q = fam.translate([0.0; 3], &mut ws);
        let lm = ops.apply_lminus(&q, &mut ws).unwrap();
        let rel_m = (lm.l2_norm_sq() / q.l2_norm_sq()).sqrt();
        assert!(rel_m < 1e-6, "|L- Q|/|Q| = {rel_m:.3e}");
    }

    #[test]
    fn lplus_of_q_is_minus_two_q_cubed() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let ops = LinearizedOps::new(&fam, [0.0; 3], &mut ws);
        let q = fam.translate([0.0; 3], &mut ws);
        let half_lpq_q = 0.5 * q.inner(&ops.apply_lplus(&q, &mut ws).unwrap()).unwrap().re;
        assert!(
            (half_lpq_q + fam.l4_4).abs() < 1e-6 * fam.l4_4,
            "1/2 <L+ Q, Q> = {half_lpq_q}, -l4 = {}",
            -fam.l4_4
        );
    }

    #[test]
    fn l_ops_are_self_adjoint() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let ops = LinearizedOps::new(&fam, [0.5, -0.25, 0.0], &mut ws);
        let f = random_smooth(grid, &mut ws, 11, false);
        let g = random_smooth(grid, &mut ws, 12, false);
        for which in [3.0, 1.0] {
            let lf = ops.apply(&f, which, &mut ws).unwrap();
            let lg = ops.apply(&g, which, &mut ws).unwrap();
            let a = lf.inner(&g).unwrap().re;
            let b = f.inner(&lg).unwrap().re;
            assert!(
                (a - b).abs() < 1e-8 * a.abs().max(1.0),
                "coeff {which}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn b_routes_agree() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let ops = LinearizedOps::new(&fam, [0.0; 3], &mut ws);
        let g = random_smooth(grid, &mut ws, 21, true);
        let (integral, operator) = ops.bilinear_b(&g, &mut ws).unwrap();
        assert!(
            (integral - operator).abs() < 1e-8 * integral.abs().max(1.0),
            "{integral} vs {operator}"
        );
    }

    #[test]
    fn alpha_denominator_is_nondegenerate() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let q = fam.translate([0.0; 3], &mut ws);
        let lap = fam.laplacian([0.0; 3], &mut ws);
        let num = q.inner(&lap).unwrap().re;
        // <Q, Delta Q> = -||grad Q||^2
        assert!((num + fam.h1_sq).abs() < 1e-9 * fam.h1_sq);
        let denom_scale = (q.l2_norm_sq() * lap.l2_norm_sq()).sqrt();
        assert!(num.abs() > 0.1 * denom_scale, "nondegeneracy margin");
    }

    #[test]
    fn fit_recovers_pure_soliton_exactly() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let (theta, y) = (0.7, [3.0, 0.0, 0.0]);
        let u = fam.sample(theta, y, &mut ws);
        let f = fit(&fam, &u, (0.6, [2.8, 0.1, -0.1]), &mut ws).unwrap();
        assert!((f.theta - theta).abs() < 1e-8, "theta {}", f.theta);
        for ax in 0..3 {
            assert!((f.y[ax] - y[ax]).abs() < 1e-8, "y[{ax}] = {}", f.y[ax]);
        }
        assert!(f.residual_norm() < 1e-10 * fam.l2_sq);
        assert!(f.g.l2_norm_sq().sqrt() < 1e-7);
        assert!(f.alpha.abs() < 1e-8);
    }

    #[test]
    fn fit_gauge_and_translation_equivariance() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let u = {
            let base = fam.sample(0.3, [1.0, -0.5, 0.0], &mut ws);
            let bump = random_smooth(grid, &mut ws, 33, true);
            base.add_scaled(Complex64::new(1e-3, 0.0), &bump).unwrap()
        };
        let f0 = fit(&fam, &u, (0.3, [1.0, -0.5, 0.0]), &mut ws).unwrap();
        // gauge rotation
        let phi = 0.9;
        let u_rot = u.scale(Complex64::from_polar(1.0, phi));
        let f1 = fit(&fam, &u_rot, (f0.theta + phi, f0.y), &mut ws).unwrap();
        assert!(
            (wrap_angle(f1.theta - f0.theta - phi)).abs() < 1e-8,
            "gauge shift"
        );
        // lattice translation
        let a = [2.0 * grid.dx(), 0.0, -grid.dx()];
        let u_shift = ws.translate(&u, a).unwrap();
        let f2 = fit(
            &fam,
            &u_shift,
            (f0.theta, [f0.y[0] + a[0], f0.y[1], f0.y[2] + a[2]]),
            &mut ws,
        )
        .unwrap();
        for ax in 0..3 {
            assert!(
                ((f2.y[ax] - f0.y[ax]) - a[ax]).abs() < 1e-8,
                "translation axis {ax}"
            );
        }
    }

    #[test]
    fn fit_perturbed_soliton_has_quadratic_parameter_error() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let (theta, y) = (0.7, [1.5, 0.0, 0.0]);
        // perturbation with the four fit projections removed
        let raw = random_smooth(grid, &mut ws, 44, true);
        let mut pert = raw.clone();
        {
            let q = fam.translate(y, &mut ws);
            let phase = Complex64::from_polar(1.0, theta);
            // remove i Q and d_j Q directions (rotated by e^{i theta})
            let iq = q.scale(Complex64::new(0.0, 1.0) * phase);
            let c = iq.inner(&pert).unwrap() / iq.inner(&iq).unwrap().re;
            pert = pert.add_scaled(-c, &iq).unwrap();
            for ax in 0..3 {
                let dq = fam.gradient(y, ax, &mut ws).scale(phase);
                let c = dq.inner(&pert).unwrap() / dq.inner(&dq).unwrap().re;
                pert = pert.add_scaled(-c, &dq).unwrap();
            }
        }
        let pert_norm = pert.l2_norm_sq().sqrt();
        // the orthogonality map is linear in u, so with the four projections
        // removed the recovered parameters match the truth to within the
        // Newton tolerance, comfortably inside the O(eps^2) band
        for eps in [1e-1, 1e-2, 1e-3] {
            let u = fam
                .sample(theta, y, &mut ws)
                .add_scaled(Complex64::new(eps / pert_norm, 0.0), &pert)
                .unwrap();
            let f = fit(&fam, &u, (theta + 0.05, [y[0] - 0.1, y[1], y[2]]), &mut ws).unwrap();
            let mut err = (f.theta - theta).abs();
            for ax in 0..3 {
                err = err.max((f.y[ax] - y[ax]).abs());
            }
            assert!(err <= eps * eps, "eps {eps}: parameter error {err:.3e}");
            // g is Theta(eps)
            let g_norm = f.g.l2_norm_sq().sqrt();
            assert!(
                g_norm > 0.5 * eps && g_norm < 2.0 * eps,
                "eps {eps}: |g| = {g_norm:.3e}"
            );
        }
        // brute-force cross-check at the largest eps: the residual norm is
        // minimized at the fitted parameters over a coarse 4d neighborhood
        let eps = 1e-1;
        let u = fam
            .sample(theta, y, &mut ws)
            .add_scaled(Complex64::new(eps / pert_norm, 0.0), &pert)
            .unwrap();
        let f = fit(&fam, &u, (theta, y), &mut ws).unwrap();
        let center_norm = {
            let r = residual_vector(&fam, &u, f.theta, f.y, &mut ws).unwrap();
            r.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        for d_theta in [-0.02, 0.0, 0.02] {
            for dy in [-0.02, 0.0, 0.02] {
                if d_theta == 0.0 && dy == 0.0 {
                    continue;
                }
                let r = residual_vector(
                    &fam,
                    &u,
                    f.theta + d_theta,
                    [f.y[0] + dy, f.y[1], f.y[2]],
                    &mut ws,
                )
                .unwrap();
                let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(n > center_norm, "off-center residual {n:.3e} not larger");
            }
        }
    }

    #[test]
    fn fit_alpha_direction_is_recovered() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let (theta, y) = (0.4, [0.5, 0.5, 0.0]);
        let eps = 1e-3;
        let q = fam.translate(y, &mut ws);
        let u = q
            .add_scaled(Complex64::new(eps, 0.0), &q)
            .unwrap()
            .scale(Complex64::from_polar(1.0, theta));
        let f = fit(&fam, &u, (theta, y), &mut ws).unwrap();
        assert!((f.theta - theta).abs() < 1e-9);
        for ax in 0..3 {
            assert!((f.y[ax] - y[ax]).abs() < 1e-9);
        }
        assert!((f.alpha - eps).abs() < 1e-9, "alpha = {}", f.alpha);
        assert!(f.h.l2_norm_sq().sqrt() < 1e-9);
    }

    #[test]
    fn decompose_alpha_matches_brute_force_projection() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let y = [1.0, 0.0, -0.5];
        let u = {
            let base = fam.sample(0.0, y, &mut ws);
            let bump = random_smooth(grid, &mut ws, 55, true);
            base.add_scaled(Complex64::new(5e-3, 0.0), &bump).unwrap()
        };
        let f = fit(&fam, &u, (0.0, y), &mut ws).unwrap();
        // brute force: alpha minimizing |<(g - alpha Q)_1, Delta Q>| is the
        // exact root of a linear function; find it by secant on a coarse scan
        let lap_q = fam.laplacian(f.y, &mut ws);
        let q = fam.translate(f.y, &mut ws);
        let proj = |alpha: f64| -> f64 {
            let mut acc = 0.0;
            for ((gv, qv), lv) in f.g.values().iter().zip(q.values()).zip(lap_q.values()) {
                acc += (gv.re - alpha * qv.re) * lv.re;
            }
            acc * grid.cell_volume()
        };
        let (a0, a1) = (-0.1, 0.1);
        let (p0, p1) = (proj(a0), proj(a1));
        let alpha_brute = a0 - p0 * (a1 - a0) / (p1 - p0);
        assert!(
            (f.alpha - alpha_brute).abs() < 1e-10,
            "{} vs {}",
            f.alpha,
            alpha_brute
        );
        // h_1 has no Delta Q component left
        let res = f.h.real_part().inner(&lap_q).unwrap().re;
        assert!(res.abs() < 1e-8 * fam.h1_sq, "h ortho residual {res:.3e}");
    }

    #[test]
    fn coercivity_on_constrained_subspace() {
        let grid = test_grid();
        let mut ws = SpectralWorkspace::new(grid);
        let fam = family(&mut ws);
        let y = [0.0; 3];
        let ops = LinearizedOps::new(&fam, y, &mut ws);
        let q = fam.translate(y, &mut ws);
        let lap_q = fam.laplacian(y, &mut ws);
        let dqs: Vec<Field> = (0..3).map(|ax| fam.gradient(y, ax, &mut ws)).collect();
        let mut kappa_min = f64::INFINITY;
        for seed in 0..30u64 {
            let raw = random_smooth(grid, &mut ws, 100 + seed, true);
            let mut h1 = raw.real_part();
            let mut h2 = raw.imag_part();
            // h1 perp {d_j Q, Delta Q}, h2 perp Q
            for dq in &dqs {
                let c = dq.inner(&h1).unwrap().re / dq.l2_norm_sq();
                h1 = h1.add_scaled(Complex64::new(-c, 0.0), dq).unwrap();
            }
            // Gram-Schmidt Delta Q against the gradients first
            let mut dq_dir = lap_q.clone();
            for dq in &dqs {
                let c = dq.inner(&dq_dir).unwrap().re / dq.l2_norm_sq();
                dq_dir = dq_dir.add_scaled(Complex64::new(-c, 0.0), dq).unwrap();
            }
            let c = dq_dir.inner(&h1).unwrap().re / dq_dir.l2_norm_sq();
            h1 = h1.add_scaled(Complex64::new(-c, 0.0), &dq_dir).unwrap();
            let c = q.inner(&h2).unwrap().re / q.l2_norm_sq();
            h2 = h2.add_scaled(Complex64::new(-c, 0.0), &q).unwrap();

            let h = Field::from_values(
                grid,
                h1.values()
                    .iter()
                    .zip(h2.values())
                    .map(|(a, b)| Complex64::new(a.re, b.re))
                    .collect(),
            );
            let (b, _) = ops.bilinear_b(&h, &mut ws).unwrap();
            let h1_norm = h.l2_norm_sq() + ws.h1_seminorm_sq(&h).unwrap();
            kappa_min = kappa_min.min(b / h1_norm);
        }
        assert!(
            kappa_min > 0.0,
            "coercivity constant must be positive, got {kappa_min:.3e}"
        );
        println!("measured coercivity kappa = {kappa_min:.4}");
    }

    #[test]
    fn wrap_angle_is_principal() {
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-14);
        assert!((wrap_angle(-7.0) + (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-14);
        assert_eq!(wrap_angle(0.0), 0.0);
    }
}
