use nlslab::diagnostics::{Diagnostics, ReferenceConstants, VirialWeight, WeightRadius};
use nlslab::ground_state::{discrete_ground_state, solve_shooting, soliton_with_tol};
use nlslab::grid::Grid3;
use nlslab::potential::Potential;
use nlslab::spectral::SpectralWorkspace;
use num_complex::Complex64;

fn main() {
    let prof = solve_shooting(1e-9, 25.0).unwrap();
    let radii = [
        WeightRadius::Finite(1.0),
        WeightRadius::Finite(2.0),
        WeightRadius::Finite(5.0),
        WeightRadius::Finite(10.0),
        WeightRadius::Infinite,
    ];
    for (n, l) in [(64usize, 16.0f64), (128, 12.8)] {
        let grid = Grid3::new(n, l).unwrap();
        let mut ws = SpectralWorkspace::new(grid);
        // profile-sampled soliton
        let q_prof = soliton_with_tol(grid, &prof, 0.0, [0.0; 3], 1.0).unwrap();
        let refs = ReferenceConstants::from_field(&q_prof, &mut ws).unwrap();
        let d = Diagnostics::new(grid, Potential::Zero, refs).unwrap();
        print!("profile  n={n:3} L={l:5.1}: ");
        for r in radii {
            let w = VirialWeight::new(r);
            let f = d.f_r_v(&q_prof, &w, &mut ws).unwrap();
            print!("R={}: {:+.2e}  ", r.label(), f / refs.q_h1_sq);
        }
        println!();
        // discrete soliton
        let (qp, _) = discrete_ground_state(grid, 1e-9).unwrap();
        let refs2 = ReferenceConstants::from_field(&qp, &mut ws).unwrap();
        let d2 = Diagnostics::new(grid, Potential::Zero, refs2).unwrap();
        print!("discrete n={n:3} L={l:5.1}: ");
        for r in radii {
            let w = VirialWeight::new(r);
            let f = d2.f_r_v(&qp, &w, &mut ws).unwrap();
            print!("R={}: {:+.2e}  ", r.label(), f / refs2.q_h1_sq);
        }
        println!();
        // discrete soliton, shifted off-center (lattice and non-lattice) with phase
        for (label, shift) in [("lattice y=(2,-1,0.5)*", [2.0, -1.0, 0.5]), ("nonlat y=(1.7,0.3,-2.2)", [1.7, 0.3, -2.2])] {
            let hat_shift = {
                let mut hat = ws.forward(&qp).unwrap();
                ws.multiply_spectrum(&mut hat, |kx, ky, kz| {
                    Complex64::from_polar(1.0, -(kx * shift[0] + ky * shift[1] + kz * shift[2]) + 0.7)
                });
                ws.inverse(hat)
            };
            print!("discrete {label}: ");
            for r in radii {
                let w = VirialWeight::new(r);
                let f = d2.f_r_v(&hat_shift, &w, &mut ws).unwrap();
                print!("R={}: {:+.2e}  ", r.label(), f / refs2.q_h1_sq);
            }
            println!();
        }
    }
}
