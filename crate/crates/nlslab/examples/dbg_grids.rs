use num_complex::Complex64;
use nlslab::field::Field;
use nlslab::ground_state::{solve_petviashvili, solve_shooting, soliton_with_tol};
use nlslab::grid::Grid3;
use nlslab::spectral::SpectralWorkspace;

fn main() {
    let prof = solve_shooting(1e-9, 25.0).unwrap();
    let c = prof.constants();
    println!("radial: l2={:.9} h1={:.9} l4={:.9}", c.l2_sq, c.h1_sq, c.l4_4);

    for (n, l) in [(64usize, 16.0f64), (128, 16.0), (128, 12.8), (128, 9.0), (256, 10.0), (256, 12.8)] {
        let grid = Grid3::new(n, l).unwrap();
        let mut ws = SpectralWorkspace::new(grid);
        let q = soliton_with_tol(grid, &prof, 0.0, [0.0; 3], 1.0).unwrap();
        let l2 = q.l2_norm_sq();
        let h1 = ws.h1_seminorm_sq(&q).unwrap();
        let l4 = q.l4_norm_4();
        // L- Q = -lap Q + Q - Q^3 ; L+ d1Q = -lap d1Q + d1Q - 3 Q^2 d1Q
        let lap = ws.laplacian(&q).unwrap();
        let lm: f64 = (0..grid.len())
            .map(|i| {
                let qi = q.values()[i].re;
                (-lap.values()[i].re + qi - qi * qi * qi).powi(2)
            })
            .sum::<f64>()
            * grid.cell_volume();
        let dq = ws.gradient(&q).unwrap();
        let lapd = ws.laplacian(&dq[0]).unwrap();
        let mut lp = 0.0;
        let mut dnorm = 0.0;
        for i in 0..grid.len() {
            let qi = q.values()[i].re;
            let di = dq[0].values()[i].re;
            lp += (-lapd.values()[i].re + di - 3.0 * qi * qi * di).powi(2);
            dnorm += di * di;
        }
        lp *= grid.cell_volume();
        dnorm *= grid.cell_volume();
        println!(
            "n={n:3} L={l:5.1}: l2rel={:+.2e} h1rel={:+.2e} l4rel={:+.2e} |L-Q|/|Q|={:.2e} |L+dQ|/|dQ|={:.2e}",
            l2 / c.l2_sq - 1.0,
            h1 / c.h1_sq - 1.0,
            l4 / c.l4_4 - 1.0,
            (lm / l2).sqrt(),
            (lp / dnorm).sqrt()
        );
    }

    // Petviashvili on its acceptance grid
    let grid = Grid3::new(128, 12.8).unwrap();
    let mut ws = SpectralWorkspace::new(grid);
    let t0 = std::time::Instant::now();
    let (qp, cert) = solve_petviashvili(grid, 1e-13, &mut ws).unwrap();
    println!(
        "petviashvili n=128 L=12.8: iters={} |s-1|={:.2e} res_inf={:.2e} time={:.1?}",
        cert.iterations,
        (cert.final_factor - 1.0).abs(),
        cert.residual_inf,
        t0.elapsed()
    );
    let q0_pet = qp.values()[grid.index(64, 64, 64)].re;
    println!(
        "Q(0): shoot={:.9} pet={:.9} rel={:+.2e}",
        prof.q0(),
        q0_pet,
        q0_pet / prof.q0() - 1.0
    );
    println!(
        "l2: shoot={:.9} pet={:.9} rel={:+.2e}",
        c.l2_sq,
        qp.l2_norm_sq(),
        qp.l2_norm_sq() / c.l2_sq - 1.0
    );
    // compare fields directly
    let qs = soliton_with_tol(grid, &prof, 0.0, [0.0; 3], 1.0).unwrap();
    let max_err = (0..grid.len())
        .map(|i| (qp.values()[i] - qs.values()[i]).norm())
        .fold(0.0f64, f64::max);
    println!("max |pet - shoot| = {:.2e}", max_err);

    // one n=64 FFT timing
    let g64 = Grid3::new(64, 16.0).unwrap();
    let mut w64 = SpectralWorkspace::new(g64);
    let f = Field::from_values(
        g64,
        (0..g64.len()).map(|i| Complex64::new(i as f64, 0.0)).collect(),
    );
    let t0 = std::time::Instant::now();
    for _ in 0..10 {
        let h = w64.forward(&f).unwrap();
        let _ = w64.inverse(h);
    }
    println!("n=64 fft pair: {:.1?} / 10", t0.elapsed());
}
