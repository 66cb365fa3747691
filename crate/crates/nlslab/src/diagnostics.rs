//! Functionals of the proof machinery, evaluated on grid fields: mass,
//! energy, the distance functional delta, the truncated virial pair
//! (P_R, F_R^V), the spatial center, and the sign/inequality monitors.
//!
//! The virial weight is w_R(x) = R^2 phi(|x|/R) with phi(s) = s^2 for
//! s <= 1, phi = 4 for s >= 3, and on (1, 3) the unique quintic in s
//! matching value and first two derivatives at both ends.  This choice is
//! provably monotone: phi'(s) = (5/16)(s-3)^2 ((s-1)^2 + (s-1) + 1/2) >= 0.
//! (The quintic in s^2 with the same matching fails monotonicity by a
//! fraction of a percent near s = 2.9.)
//!
//! The weight is C^2, so its third radial derivative jumps across the
//! matching spheres and the bilaplacian exists only distributionally (it
//! carries surface deltas there).  All weight derivatives are analytic,
//! and the bilaplacian term of F_R^V is evaluated in the
//! integrated-by-parts form `int grad(w) . grad(lap |u|^2)`, which is
//! exact for the distributional bilaplacian; the pointwise form is kept
//! only as a cross-check away from the matching spheres.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::potential::Potential;
use crate::spectral::SpectralWorkspace;

/// Quintic coefficients in t = s - 1 (exact dyadic):
/// phi = 1 + 2t + t^2 - (3/4) t^3 - (1/16) t^4 + (1/16) t^5 on t in (0, 2).
const A3: f64 = -0.75;
const A4: f64 = -0.0625;
const A5: f64 = 0.0625;

/// Radial profile phi and its s-derivatives through order four.
fn phi_derivs(s: f64) -> [f64; 5] {
    if s <= 1.0 {
        [s * s, 2.0 * s, 2.0, 0.0, 0.0]
    } else if s >= 3.0 {
        [4.0, 0.0, 0.0, 0.0, 0.0]
    } else {
        let t = s - 1.0;
        [
            1.0 + t * (2.0 + t * (1.0 + t * (A3 + t * (A4 + t * A5)))),
            2.0 + t * (2.0 + t * (3.0 * A3 + t * (4.0 * A4 + t * 5.0 * A5))),
            2.0 + t * (6.0 * A3 + t * (12.0 * A4 + t * 20.0 * A5)),
            6.0 * A3 + t * (24.0 * A4 + t * 60.0 * A5),
            24.0 * A4 + t * 120.0 * A5,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightRadius {
    Finite(f64),
    Infinite,
}

impl WeightRadius {
    pub fn label(&self) -> String {
        match self {
            WeightRadius::Finite(r) => format!("{r}"),
            WeightRadius::Infinite => "inf".to_string(),
        }
    }
}

/// Truncated virial weight w_R with analytic derivatives.
#[derive(Debug, Clone, Copy)]
pub struct VirialWeight {
    radius: WeightRadius,
}

impl VirialWeight {
    pub fn new(radius: WeightRadius) -> Self {
        if let WeightRadius::Finite(r) = radius {
            assert!(r >= 1.0, "weight radius must be >= 1");
        }
        VirialWeight { radius }
    }

    pub fn radius(&self) -> WeightRadius {
        self.radius
    }

    pub fn w(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        match self.radius {
            WeightRadius::Infinite => r2,
            WeightRadius::Finite(rr) => {
                let s = r2.sqrt() / rr;
                rr * rr * phi_derivs(s)[0]
            }
        }
    }

    pub fn grad(&self, x: [f64; 3]) -> [f64; 3] {
        match self.radius {
            WeightRadius::Infinite => [2.0 * x[0], 2.0 * x[1], 2.0 * x[2]],
            WeightRadius::Finite(rr) => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let s = r / rr;
                if s <= 1.0 {
                    return [2.0 * x[0], 2.0 * x[1], 2.0 * x[2]];
                }
                if s >= 3.0 {
                    return [0.0; 3];
                }
                let d = phi_derivs(s);
                let f = rr * d[1] / r; // R phi'(s) / r
                [f * x[0], f * x[1], f * x[2]]
            }
        }
    }

    /// Hessian as (xx, yy, zz, xy, xz, yz).
    pub fn hessian(&self, x: [f64; 3]) -> [f64; 6] {
        match self.radius {
            WeightRadius::Infinite => [2.0, 2.0, 2.0, 0.0, 0.0, 0.0],
            WeightRadius::Finite(rr) => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let r = r2.sqrt();
                let s = r / rr;
                if s <= 1.0 {
                    return [2.0, 2.0, 2.0, 0.0, 0.0, 0.0];
                }
                if s >= 3.0 {
                    return [0.0; 6];
                }
                let d = phi_derivs(s);
                // radial F(r) = R^2 phi(r/R): F'' = phi'', F'/r = phi'/(s r) * ... = R phi'/r
                let fpp = d[2];
                let fp_over_r = rr * d[1] / r;
                let aniso = (fpp - fp_over_r) / r2;
                [
                    aniso * x[0] * x[0] + fp_over_r,
                    aniso * x[1] * x[1] + fp_over_r,
                    aniso * x[2] * x[2] + fp_over_r,
                    aniso * x[0] * x[1],
                    aniso * x[0] * x[2],
                    aniso * x[1] * x[2],
                ]
            }
        }
    }

    pub fn laplacian(&self, x: [f64; 3]) -> f64 {
        match self.radius {
            WeightRadius::Infinite => 6.0,
            WeightRadius::Finite(rr) => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let s = r / rr;
                if s <= 1.0 {
                    return 6.0;
                }
                if s >= 3.0 {
                    return 0.0;
                }
                let d = phi_derivs(s);
                d[2] + 2.0 * d[1] / s
            }
        }
    }

    pub fn bilaplacian(&self, x: [f64; 3]) -> f64 {
        match self.radius {
            WeightRadius::Infinite => 0.0,
            WeightRadius::Finite(rr) => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let s = r / rr;
                if s <= 1.0 || s >= 3.0 {
                    return 0.0;
                }
                let d = phi_derivs(s);
                (d[4] + 4.0 * d[3] / s) / (rr * rr)
            }
        }
    }
}

/// Reference ground-state constants used by delta and the monitors; build
/// them grid-consistently (from the grid's own soliton) so that
/// delta(soliton) vanishes identically.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ReferenceConstants {
    /// integral |Q|^2
    pub q_l2_sq: f64,
    /// integral |grad Q|^2
    pub q_h1_sq: f64,
    /// integral |Q|^4
    pub q_l4_4: f64,
    /// E_0(Q)
    pub q_energy: f64,
    /// M(Q) E_0(Q)
    pub mass_energy: f64,
}

impl ReferenceConstants {
    pub fn from_field(q: &Field, ws: &mut SpectralWorkspace) -> Result<Self> {
        let l2 = q.l2_norm_sq();
        let h1 = ws.h1_seminorm_sq(q)?;
        let l4 = q.l4_norm_4();
        let energy = 0.5 * h1 - 0.25 * l4;
        Ok(ReferenceConstants {
            q_l2_sq: l2,
            q_h1_sq: h1,
            q_l4_4: l4,
            q_energy: energy,
            mass_energy: 0.5 * l2 * energy,
        })
    }

    pub fn from_ground_state(c: &crate::ground_state::GroundStateConstants) -> Self {
        ReferenceConstants {
            q_l2_sq: c.l2_sq,
            q_h1_sq: c.h1_sq,
            q_l4_4: c.l4_4,
            q_energy: c.energy,
            mass_energy: c.mass_energy,
        }
    }

    /// The norm cap ||Q||_2 ||Q||_{H1}.
    pub fn cap(&self) -> f64 {
        (self.q_l2_sq * self.q_h1_sq).sqrt()
    }
}

/// Evaluator bundle for one (grid, potential, reference) combination.
/// Caches the nodal potential samples.
pub struct Diagnostics {
    grid: Grid3,
    potential: Potential,
    refs: ReferenceConstants,
    /// V at nodes
    v: Vec<f64>,
    /// x . grad V at nodes
    xgv: Vec<f64>,
    /// grad V at nodes
    gv: [Vec<f64>; 3],
}

/// One diagnostic record along a trajectory.
#[derive(Debug, Clone)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// ||u||^2_{H1_V} = int |grad u|^2 + V |u|^2
    pub h1v: f64,
    /// int V |u|^2
    pub pot: f64,
    /// int |u|^4
    pub l4: f64,
    pub delta: f64,
    /// (P_R, F_R^V) per configured radius
    pub virial: Vec<(f64, f64)>,
    pub f_inf_0: f64,
    pub center: [f64; 3],
    /// int |u|^5 at this time
    pub l5: f64,
}

impl Diagnostics {
    pub fn new(grid: Grid3, potential: Potential, refs: ReferenceConstants) -> Result<Self> {
        let mut v = Vec::with_capacity(grid.len());
        let mut xgv = Vec::with_capacity(grid.len());
        let mut gvx = Vec::with_capacity(grid.len());
        let mut gvy = Vec::with_capacity(grid.len());
        let mut gvz = Vec::with_capacity(grid.len());
        for (_, pos) in grid.iter_positions() {
            let (vv, rv, gv) = match (
                potential.eval(pos),
                potential.radial_virial(pos),
                potential.grad(pos),
            ) {
                (Some(a), Some(b), Some(g)) => (a, b, g),
                _ => {
                    let h = grid.n() / 2;
                    return Err(Error::SingularPotential(h, h, h));
                }
            };
            v.push(vv);
            xgv.push(rv);
            gvx.push(gv[0]);
            gvy.push(gv[1]);
            gvz.push(gv[2]);
        }
        Ok(Diagnostics {
            grid,
            potential,
            refs,
            v,
            xgv,
            gv: [gvx, gvy, gvz],
        })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn reference(&self) -> &ReferenceConstants {
        &self.refs
    }

    pub fn mass(&self, u: &Field) -> f64 {
        0.5 * u.l2_norm_sq()
    }

    /// int V |u|^2.
    pub fn potential_energy_term(&self, u: &Field) -> f64 {
        let s: f64 = u
            .values()
            .iter()
            .zip(&self.v)
            .map(|(a, &vv)| vv * a.norm_sqr())
            .sum();
        s * self.grid.cell_volume()
    }

    /// E_V(u) = int 1/2 |grad u|^2 + 1/2 V |u|^2 - 1/4 |u|^4.
    pub fn energy(&self, u: &Field, ws: &mut SpectralWorkspace) -> Result<f64> {
        let h1 = ws.h1_seminorm_sq(u)?;
        Ok(0.5 * h1 + 0.5 * self.potential_energy_term(u) - 0.25 * u.l4_norm_4())
    }

    /// delta(u) = int |grad Q|^2 - (int |grad u|^2 + V |u|^2).
    pub fn delta(&self, u: &Field, ws: &mut SpectralWorkspace) -> Result<f64> {
        let h1v = ws.h1_seminorm_sq(u)? + self.potential_energy_term(u);
        Ok(self.refs.q_h1_sq - h1v)
    }

    /// P_R[u] = 2 Im int conj(u) grad(u) . grad(w_R).
    pub fn p_r(&self, u: &Field, w: &VirialWeight, ws: &mut SpectralWorkspace) -> Result<f64> {
        let grad = ws.gradient(u)?;
        Ok(self.p_r_with_gradient(u, &grad, w))
    }

    fn p_r_with_gradient(&self, u: &Field, grad: &[Field; 3], w: &VirialWeight) -> f64 {
        let mut acc = 0.0;
        for (idx, pos) in self.grid.iter_positions() {
            let gw = w.grad(pos);
            let dot = grad[0].values()[idx] * gw[0]
                + grad[1].values()[idx] * gw[1]
                + grad[2].values()[idx] * gw[2];
            acc += (u.values()[idx].conj() * dot).im;
        }
        2.0 * acc * self.grid.cell_volume()
    }

    /// F_R^V[u]; with the zero potential this is F_R^0[u].
    ///
    /// The three weight terms are evaluated as
    ///   int grad(w) . grad(lap |u|^2)          (bilaplacian term, by parts)
    ///   + 4 Re int conj(u_j) u_k d_jk(w)
    ///   - 2 int |u|^2 grad(V) . grad(w)
    ///   - int |u|^4 lap(w).
    pub fn f_r_v(&self, u: &Field, w: &VirialWeight, ws: &mut SpectralWorkspace) -> Result<f64> {
        let grad = ws.gradient(u)?;
        self.f_r_v_with_gradient(u, &grad, w, ws)
    }

    fn f_r_v_with_gradient(
        &self,
        u: &Field,
        grad: &[Field; 3],
        w: &VirialWeight,
        ws: &mut SpectralWorkspace,
    ) -> Result<f64> {
        // |u|^2 as a real field
        let m = Field::from_values(
            self.grid,
            u.values()
                .iter()
                .map(|v| Complex64::new(v.norm_sqr(), 0.0))
                .collect(),
        );
        // grad(lap m): one forward, three inverse transforms
        let mhat = ws.forward(&m)?;
        let n = self.grid.n();
        let grid = self.grid;
        let mut glm = Vec::with_capacity(3);
        for axis in 0..3 {
            let mut h = mhat.clone();
            let mut idx = 0;
            for iz in 0..n {
                let kz = grid.deriv_wavenumber(iz);
                for iy in 0..n {
                    let ky = grid.deriv_wavenumber(iy);
                    for ix in 0..n {
                        let kx = grid.deriv_wavenumber(ix);
                        let ksq = kx * kx + ky * ky + kz * kz;
                        let kj = match axis {
                            0 => kx,
                            1 => ky,
                            _ => kz,
                        };
                        h[idx] *= Complex64::new(0.0, -kj * ksq);
                        idx += 1;
                    }
                }
            }
            glm.push(ws.inverse(h));
        }

        let mut acc = 0.0;
        for (idx, pos) in self.grid.iter_positions() {
            let gw = w.grad(pos);
            // bilaplacian term by parts
            let t1 = gw[0] * glm[0].values()[idx].re
                + gw[1] * glm[1].values()[idx].re
                + gw[2] * glm[2].values()[idx].re;
            // hessian term
            let hs = w.hessian(pos);
            let (gx, gy, gz) = (
                grad[0].values()[idx],
                grad[1].values()[idx],
                grad[2].values()[idx],
            );
            let t2 = 4.0
                * (hs[0] * gx.norm_sqr()
                    + hs[1] * gy.norm_sqr()
                    + hs[2] * gz.norm_sqr()
                    + 2.0 * hs[3] * (gx.conj() * gy).re
                    + 2.0 * hs[4] * (gx.conj() * gz).re
                    + 2.0 * hs[5] * (gy.conj() * gz).re);
            // potential term
            let m_i = m.values()[idx].re;
            let t3 = -2.0
                * m_i
                * (self.gv[0][idx] * gw[0] + self.gv[1][idx] * gw[1] + self.gv[2][idx] * gw[2]);
            // laplacian term
            let t4 = -m_i * m_i * w.laplacian(pos);
            acc += t1 + t2 + t3 + t4;
        }
        Ok(acc * self.grid.cell_volume())
    }

    /// F_R^V in the textbook form with the raw bilaplacian (kept for
    /// cross-checking the integrated-by-parts evaluation).
    pub fn f_r_v_direct(
        &self,
        u: &Field,
        w: &VirialWeight,
        ws: &mut SpectralWorkspace,
    ) -> Result<f64> {
        let grad = ws.gradient(u)?;
        let mut acc = 0.0;
        for (idx, pos) in self.grid.iter_positions() {
            let m_i = u.values()[idx].norm_sqr();
            let t1 = -w.bilaplacian(pos) * m_i;
            let hs = w.hessian(pos);
            let (gx, gy, gz) = (
                grad[0].values()[idx],
                grad[1].values()[idx],
                grad[2].values()[idx],
            );
            let t2 = 4.0
                * (hs[0] * gx.norm_sqr()
                    + hs[1] * gy.norm_sqr()
                    + hs[2] * gz.norm_sqr()
                    + 2.0 * hs[3] * (gx.conj() * gy).re
                    + 2.0 * hs[4] * (gx.conj() * gz).re
                    + 2.0 * hs[5] * (gy.conj() * gz).re);
            let gw = w.grad(pos);
            let t3 = -2.0
                * m_i
                * (self.gv[0][idx] * gw[0] + self.gv[1][idx] * gw[1] + self.gv[2][idx] * gw[2]);
            let t4 = -m_i * m_i * w.laplacian(pos);
            acc += t1 + t2 + t3 + t4;
        }
        Ok(acc * self.grid.cell_volume())
    }

    /// F_infty^0[u] = 8 int |grad u|^2 - 6 int |u|^4.
    pub fn f_inf_0(&self, u: &Field, ws: &mut SpectralWorkspace) -> Result<f64> {
        Ok(8.0 * ws.h1_seminorm_sq(u)? - 6.0 * u.l4_norm_4())
    }

    /// Residual of the identity
    /// int |grad u|^2 - (3/4)|u|^4 = delta/2 - int V |u|^2, valid at the
    /// threshold normalization M(u) = M(Q), E_V(u) = E_0(Q).
    pub fn virial_connect_residual(&self, u: &Field, ws: &mut SpectralWorkspace) -> Result<f64> {
        let mass = self.mass(u);
        let energy = self.energy(u, ws)?;
        let m_ref = 0.5 * self.refs.q_l2_sq;
        let rel_m = (mass - m_ref).abs() / m_ref;
        let rel_e = (energy - self.refs.q_energy).abs() / self.refs.q_energy.abs();
        if rel_m > 1e-6 || rel_e > 1e-6 {
            return Err(Error::NotNormalized(format!(
                "virial-connect needs M = M(Q) and E_V = E_0(Q); got relative offsets {rel_m:.2e}, {rel_e:.2e}"
            )));
        }
        let lhs = ws.h1_seminorm_sq(u)? - 0.75 * u.l4_norm_4();
        let pot = self.potential_energy_term(u);
        let delta = self.refs.q_h1_sq - (ws.h1_seminorm_sq(u)? + pot);
        Ok(lhs - (0.5 * delta - pot))
    }

    /// Maximizer of the local L^2 mass on unit balls: convolve |u|^2 with
    /// the unit-ball indicator (spectrally, via the analytic ball symbol)
    /// and take the nodal argmax.  Ties break toward smaller |x|, then
    /// lexicographic (x, y, z).
    pub fn spatial_center(&self, u: &Field, ws: &mut SpectralWorkspace) -> Result<[f64; 3]> {
        if u.values().iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::ZeroField);
        }
        let m = Field::from_values(
            self.grid,
            u.values()
                .iter()
                .map(|v| Complex64::new(v.norm_sqr(), 0.0))
                .collect(),
        );
        let local = ws.apply_multiplier(&m, |kx, ky, kz| {
            let k = (kx * kx + ky * ky + kz * kz).sqrt();
            let s = if k < 1e-9 {
                4.0 * std::f64::consts::PI / 3.0
            } else {
                4.0 * std::f64::consts::PI * (k.sin() - k * k.cos()) / (k * k * k)
            };
            Complex64::new(s, 0.0)
        })?;
        let mut best_idx = 0usize;
        let mut best = f64::NEG_INFINITY;
        for (idx, pos) in self.grid.iter_positions() {
            let val = local.values()[idx].re;
            if val > best {
                best = val;
                best_idx = idx;
            } else if val == best {
                let cur = self.grid.position(best_idx);
                let r_new: f64 = pos.iter().map(|c| c * c).sum();
                let r_old: f64 = cur.iter().map(|c| c * c).sum();
                if r_new < r_old || (r_new == r_old && pos < cur) {
                    best_idx = idx;
                }
            }
        }
        Ok(self.grid.position(best_idx))
    }

    /// Full diagnostics row at time t for the configured weight list.
    pub fn row(
        &self,
        t: f64,
        u: &Field,
        weights: &[VirialWeight],
        ws: &mut SpectralWorkspace,
    ) -> Result<DiagnosticsRow> {
        let h1 = ws.h1_seminorm_sq(u)?;
        let pot = self.potential_energy_term(u);
        let l4 = u.l4_norm_4();
        let grad = ws.gradient(u)?;
        let mut virial = Vec::with_capacity(weights.len());
        for w in weights {
            let p = self.p_r_with_gradient(u, &grad, w);
            let f = self.f_r_v_with_gradient(u, &grad, w, ws)?;
            virial.push((p, f));
        }
        Ok(DiagnosticsRow {
            t,
            mass: self.mass(u),
            energy: 0.5 * h1 + 0.5 * pot - 0.25 * l4,
            h1v: h1 + pot,
            pot,
            l4,
            delta: self.refs.q_h1_sq - (h1 + pot),
            virial,
            f_inf_0: 8.0 * h1 - 6.0 * l4,
            center: self.spatial_center(u, ws)?,
            l5: u.l5_norm_5(),
        })
    }

    /// True when the strict norm-cap hypothesis holds with margin:
    /// ||u||_2 ||u||_{H1_V} < (1 - margin) ||Q||_2 ||Q||_{H1}.
    pub fn below_cap(&self, u: &Field, ws: &mut SpectralWorkspace, margin: f64) -> Result<bool> {
        let h1v = ws.h1_seminorm_sq(u)? + self.potential_energy_term(u);
        let lhs = (u.l2_norm_sq() * h1v).sqrt();
        Ok(lhs < (1.0 - margin) * self.refs.cap())
    }

    /// The repulsive virial term -2 int |u|^2 grad(V).grad(w_R), nonnegative
    /// for every admissible potential.
    pub fn repulsive_term(&self, u: &Field, w: &VirialWeight) -> f64 {
        let mut acc = 0.0;
        for (idx, pos) in self.grid.iter_positions() {
            let gw = w.grad(pos);
            let m_i = u.values()[idx].norm_sqr();
            acc -= 2.0
                * m_i
                * (self.gv[0][idx] * gw[0] + self.gv[1][idx] * gw[1] + self.gv[2][idx] * gw[2]);
        }
        acc * self.grid.cell_volume()
    }
}

/// Centered-difference residual of d/dt P_R = F_R^V along a trajectory
/// sampled at uniform stride. Returns per-time residuals in units of the
/// reference ||Q||^2_{H1}.
pub fn virial_identity_residual(
    times: &[f64],
    p_series: &[f64],
    f_series: &[f64],
    q_h1_sq: f64,
) -> Result<Vec<f64>> {
    if times.len() < 3 {
        return Err(Error::StrideTooCoarse(times.len()));
    }
    let mut out = Vec::with_capacity(times.len() - 2);
    for i in 1..times.len() - 1 {
        let dt = times[i + 1] - times[i - 1];
        let dpdt = (p_series[i + 1] - p_series[i - 1]) / dt;
        out.push((dpdt - f_series[i]) / q_h1_sq);
    }
    Ok(out)
}

/// Cumulative space-time L^5 integral by the trapezoid rule, and the decay
/// exponent of ||u(t)||_{L^4} fitted on the trailing window.
pub struct ScatteringProxy {
    /// cumulative int_0^t int |u|^5 dx dt at each recorded time
    pub cumulative_l5: Vec<f64>,
    /// relative growth of the cumulative integral over the last quarter
    pub tail_increment_fraction: f64,
    /// least-squares slope of log ||u||_4 against log t on the last half
    pub l4_decay_exponent: f64,
}

pub fn scattering_proxy(times: &[f64], l5: &[f64], l4: &[f64]) -> ScatteringProxy {
    let mut cum = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (l5[i] + l5[i - 1]) * (times[i] - times[i - 1]);
        }
        cum.push(acc);
    }
    let total = *cum.last().unwrap_or(&0.0);
    let q3 = cum
        .get((3 * cum.len()) / 4)
        .copied()
        .unwrap_or(0.0);
    let tail_fraction = if total > 0.0 {
        (total - q3) / total
    } else {
        0.0
    };
    // log-log fit on the trailing half, skipping t = 0
    let start = times.len() / 2;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0.0;
    for i in start..times.len() {
        if times[i] <= 0.0 || l4[i] <= 0.0 {
            continue;
        }
        let x = times[i].ln();
        let y = l4[i].powf(0.25).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1.0;
    }
    let exponent = if count >= 2.0 {
        (count * sxy - sx * sy) / (count * sxx - sx * sx)
    } else {
        0.0
    };
    ScatteringProxy {
        cumulative_l5: cum,
        tail_increment_fraction: tail_fraction,
        l4_decay_exponent: exponent,
    }
}
