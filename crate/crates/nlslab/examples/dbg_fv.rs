use num_complex::Complex64;
use nlslab::diagnostics::{Diagnostics, ReferenceConstants, VirialWeight, WeightRadius};
use nlslab::field::sample;
use nlslab::grid::Grid3;
use nlslab::potential::Potential;
use nlslab::spectral::SpectralWorkspace;

fn main() {
    let grid = Grid3::new(32, 8.0).unwrap();
    let mut ws = SpectralWorkspace::new(grid);
    let refs = ReferenceConstants { q_l2_sq: 1.0, q_h1_sq: 1.0, q_l4_4: 1.0, q_energy: 1.0, mass_energy: 1.0 };
    let d = Diagnostics::new(grid, Potential::Zero, refs).unwrap();
    let u = sample(grid, |p| {
        let r2 = p[0]*p[0]+p[1]*p[1]+p[2]*p[2];
        Complex64::new((-r2).exp(), -0.2*(-r2).exp())
    }).unwrap();
    // manual term-by-term for R=5 and inf
    let grad = ws.gradient(&u).unwrap();
    let m: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
    let h1_spec = ws.h1_seminorm_sq(&u).unwrap();
    let h1_nodal: f64 = grad.iter().map(|g| g.l2_norm_sq()).sum();
    println!("h1 spectral {h1_spec:.12}  nodal-grad {h1_nodal:.12}");
    for radius in [WeightRadius::Finite(5.0), WeightRadius::Infinite] {
        let w = VirialWeight::new(radius);
        let mut t2 = 0.0; let mut t4 = 0.0;
        for (idx, pos) in grid.iter_positions() {
            let hs = w.hessian(pos);
            let (gx, gy, gz) = (grad[0].values()[idx], grad[1].values()[idx], grad[2].values()[idx]);
            t2 += 4.0*(hs[0]*gx.norm_sqr()+hs[1]*gy.norm_sqr()+hs[2]*gz.norm_sqr()
                + 2.0*hs[3]*(gx.conj()*gy).re + 2.0*hs[4]*(gx.conj()*gz).re + 2.0*hs[5]*(gy.conj()*gz).re);
            t4 -= m[idx]*m[idx]*w.laplacian(pos);
        }
        t2 *= grid.cell_volume(); t4 *= grid.cell_volume();
        // t1 via IBP
        let mf = nlslab::field::Field::from_values(grid, m.iter().map(|&v| Complex64::new(v, 0.0)).collect());
        let lap_m = ws.laplacian(&mf).unwrap();
        let glm = ws.gradient(&lap_m).unwrap();
        let mut t1 = 0.0;
        for (idx, pos) in grid.iter_positions() {
            let gw = w.grad(pos);
            t1 += gw[0]*glm[0].values()[idx].re + gw[1]*glm[1].values()[idx].re + gw[2]*glm[2].values()[idx].re;
        }
        t1 *= grid.cell_volume();
        println!("{radius:?}: t1={t1:.9} t2={t2:.9} t4={t4:.9} total={:.9}", t1+t2+t4);
        println!("  f_r_v says {:.9}", d.f_r_v(&u, &w, &mut ws).unwrap());
    }
}
