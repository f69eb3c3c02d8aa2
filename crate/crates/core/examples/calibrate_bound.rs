//! Regenerates `kernel::BOUND_CONSTANTS`.
//!
//! For each τ = k/8 the supremum of `F(s) s^τ / (2π)` is taken over a dense
//! log-spaced sweep, then inflated by a 1% margin.
//!
//!     cargo run --release -p vring-core --example calibrate_bound

use vring::kernel::{sweep_bound_sup, KernelEval};

fn main() {
    let eval = KernelEval::default();
    println!("pub const BOUND_CONSTANTS: [f64; 12] = [");
    for k in 1..=12 {
        let tau = k as f64 / 8.0;
        let sup = sweep_bound_sup(&eval, tau, 200).expect("quadrature");
        println!("    {:?}, // tau = {tau}", 1.01 * sup);
    }
    println!("];");
}
