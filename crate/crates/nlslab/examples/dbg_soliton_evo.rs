use nlslab::evolution::{Propagator, PropagatorConfig};
use nlslab::ground_state::discrete_ground_state;
use nlslab::grid::Grid3;
use nlslab::potential::Potential;

fn main() {
    for (n, l, dt, t_end) in [
        (64usize, 16.0f64, 1e-3, 0.2),
        (128, 16.0, 1e-3, 0.2),
        (128, 16.0, 5e-4, 0.2),
        (128, 12.8, 1e-3, 0.2),
    ] {
        let grid = Grid3::new(n, l).unwrap();
        let (q, _) = discrete_ground_state(grid, 1e-9).unwrap();
        let mut cfg = PropagatorConfig::new(dt, t_end, Potential::Zero);
        cfg.dealias = false;
        let mut prop = Propagator::new(grid, cfg).unwrap();
        let t0 = std::time::Instant::now();
        let traj = prop.evolve_with(&q, |_, _, _, _| Ok(())).unwrap();
        let u1 = &traj.final_field;
        let max_mod_err = (0..grid.len())
            .map(|i| (u1.values()[i].norm() - q.values()[i].norm()).abs())
            .fold(0.0f64, f64::max);
        let origin = grid.index(n / 2, n / 2, n / 2);
        let phase = u1.values()[origin].arg();
        println!(
            "n={n} L={l} dt={dt}: mod drift {max_mod_err:.2e}, phase err {:.2e}, evolve {:.1?}",
            (phase - t_end).abs(),
            t0.elapsed()
        );
    }
}
