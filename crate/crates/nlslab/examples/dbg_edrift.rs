use nlslab::diagnostics::{Diagnostics, ReferenceConstants};
use nlslab::evolution::{Propagator, PropagatorConfig};
use nlslab::ground_state::discrete_ground_state;
use nlslab::grid::Grid3;
use nlslab::potential::Potential;

fn main() {
    let grid = Grid3::new(128, 16.0).unwrap();
    let (q, _) = discrete_ground_state(grid, 1e-9).unwrap();
    let mut ws0 = nlslab::spectral::SpectralWorkspace::new(grid);
    let refs = ReferenceConstants::from_field(&q, &mut ws0).unwrap();
    for dt in [1e-3, 5e-4] {
        let potential = Potential::Zero;
        let diag = Diagnostics::new(grid, potential, refs).unwrap();
        let mut cfg = PropagatorConfig::new(dt, 0.2, potential);
        cfg.dealias = false;
        cfg.callback_stride = 50;
        let mut prop = Propagator::new(grid, cfg).unwrap();
        let mut e0 = None;
        let mut worst = 0.0f64;
        let mut mdrift = 0.0f64;
        let m0 = 0.5 * q.l2_norm_sq();
        prop.evolve_with(&q, |_, _, u, ws| {
            let e = diag.energy(u, ws)?;
            match e0 { None => e0 = Some(e), Some(r) => worst = worst.max((e - r).abs()) }
            mdrift = mdrift.max(((0.5 * u.l2_norm_sq() - m0) / m0).abs());
            Ok(())
        }).unwrap();
        println!("soliton n=128 L=16 dt={dt}: energy drift {worst:.2e}, mass drift {mdrift:.2e}");
    }
}
