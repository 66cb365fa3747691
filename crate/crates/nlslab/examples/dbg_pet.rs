use nlslab::ground_state::{discrete_ground_state, solve_shooting, soliton_with_tol};
use nlslab::grid::Grid3;

fn main() {
    let prof = solve_shooting(1e-9, 25.0).unwrap();
    let c = prof.constants();
    for (n, l) in [(128usize, 12.8f64), (256, 12.8)] {
        let grid = Grid3::new(n, l).unwrap();
        let t0 = std::time::Instant::now();
        let (qp, cert) = discrete_ground_state(grid, 1e-9).unwrap();
        let q0 = qp.values()[grid.index(n / 2, n / 2, n / 2)].re;
        let qs = soliton_with_tol(grid, &prof, 0.0, [0.0; 3], 1.0).unwrap();
        let max_err = (0..grid.len())
            .map(|i| (qp.values()[i] - qs.values()[i]).norm())
            .fold(0.0f64, f64::max);
        println!(
            "n={n} L={l}: iters={} res_inf={:.2e} t={:.1?} | Q0 rel={:+.2e} l2 rel={:+.2e} maxdiff={:.2e}",
            cert.iterations, cert.residual_inf, t0.elapsed(),
            q0 / prof.q0() - 1.0,
            qp.l2_norm_sq() / c.l2_sq - 1.0,
            max_err
        );
    }
}
