use num_complex::Complex64;
use nlslab::field::Field;
use nlslab::grid::Grid3;
use nlslab::spectral::SpectralWorkspace;
fn main() {
    for n in [64usize, 128, 256] {
        let g = Grid3::new(n, 12.8).unwrap();
        let mut ws = SpectralWorkspace::new(g);
        let f = Field::from_values(g, (0..g.len()).map(|i| Complex64::new((i % 71) as f64, 0.0)).collect());
        let reps = if n <= 128 { 10 } else { 3 };
        let t0 = std::time::Instant::now();
        for _ in 0..reps {
            let h = ws.forward(&f).unwrap();
            let _ = ws.inverse(h);
        }
        println!("n={n}: {:.1?} per fwd+inv pair", t0.elapsed() / reps);
    }
}
