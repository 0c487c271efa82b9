//! Simulation throughput for both processes at the reference parameters.
//!
//! `cargo run --release --example bench_sim -- 2000`

use std::time::Instant;

use recovery_core::portfolio::run_simulation;
use recovery_core::{ModelParams, ProcessKind};

fn main() {
    let m: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("scenario count"))
        .unwrap_or(1000);
    for kind in [ProcessKind::Diffusion, ProcessKind::JumpDiffusion] {
        let params = ModelParams {
            scenarios: m,
            process_kind: kind,
            ..ModelParams::default()
        };
        let start = Instant::now();
        let set = run_simulation(&params).expect("simulation");
        let mean_pd = set.records.iter().map(|r| r.p_d).sum::<f64>() / m as f64;
        println!(
            "{} M={m}: {:.2?}, mean p_d {mean_pd:.5}",
            kind.as_str(),
            start.elapsed()
        );
    }
}
