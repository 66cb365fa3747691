use nlslab::ground_state::solve_shooting;
fn main() {
    let prof = solve_shooting(1e-9, 25.0).unwrap();
    // replicate residual loop but find argmax
    let dr = prof.dr();
    let q: Vec<f64> = prof.nodes().map(|(_, q)| q).collect();
    let mut worst = 0.0f64;
    let mut worst_r = 0.0;
    for i in 2..q.len() - 2 {
        let r = i as f64 * dr;
        let d1 = (q[i-2] - 8.0*q[i-1] + 8.0*q[i+1] - q[i+2]) / (12.0*dr);
        let d2 = (-q[i-2] + 16.0*q[i-1] - 30.0*q[i] + 16.0*q[i+1] - q[i+2]) / (12.0*dr*dr);
        let res = (d2 + 2.0/r*d1 - q[i] + q[i].powi(3)).abs();
        if res > worst { worst = res; worst_r = r; }
    }
    println!("max residual {:.3e} at r = {:.3}", worst, worst_r);
    // per-region maxima
    for (a, b) in [(0.002, 1.0), (1.0, 5.0), (5.0, 10.0), (10.0, 14.0), (13.9, 14.1), (14.0, 20.0), (20.0, 24.9)] {
        let mut w = 0.0f64;
        for i in 2..q.len()-2 {
            let r = i as f64 * dr;
            if r < a || r > b { continue; }
            let d1 = (q[i-2] - 8.0*q[i-1] + 8.0*q[i+1] - q[i+2]) / (12.0*dr);
            let d2 = (-q[i-2] + 16.0*q[i-1] - 30.0*q[i] + 16.0*q[i+1] - q[i+2]) / (12.0*dr*dr);
            w = w.max((d2 + 2.0/r*d1 - q[i] + q[i].powi(3)).abs());
        }
        println!("[{a:6.3},{b:6.3}] max = {w:.3e}");
    }
    println!("Q(0) = {:.12}", prof.q0());
    let (a, mu) = prof.tail_fit();
    println!("tail A = {a:.9}, mu = {mu:.9}");
}
