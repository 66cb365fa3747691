use num_complex::Complex64;
use nlslab::evolution::{Propagator, PropagatorConfig};
use nlslab::field::sample;
use nlslab::grid::Grid3;
use nlslab::potential::Potential;
fn main() {
    for (n, l) in [(32usize, 8.0f64), (64, 8.0)] {
        let grid = Grid3::new(n, l).unwrap();
        let u0 = sample(grid, |p| {
            let r2 = p[0]*p[0]+p[1]*p[1]+p[2]*p[2];
            Complex64::new(6.0*(-r2).exp(), 0.0)
        }).unwrap();
        let mut cfg = PropagatorConfig::new(1e-3, 0.6, Potential::Zero);
        cfg.blowup_factor = 1e9; // watch without tripping
        cfg.dealias = true;
        cfg.callback_stride = 25;
        let mut prop = Propagator::new(grid, cfg).unwrap();
        let mut peak: f64 = 0.0;
        let traj = prop.evolve_with(&u0, |_, t, u, _| {
            let m = u.max_abs();
            if m > peak { peak = m; }
            if (t * 20.0).fract() < 1e-9 { println!("  n={n} t={t:.2} max={m:.2}"); }
            Ok(())
        }).unwrap();
        println!("n={n} L={l}: peak max|u| = {peak:.2}, blowup={:?}", traj.blowup.is_some());
    }
}
