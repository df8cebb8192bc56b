//! Timing sweep for the incremental cycle guard.
//!
//! For each node count, plays a random stream of query+insert operations and
//! reports the aggregate wall time, as TSV on stdout:
//!
//! ```text
//! nodes  ops  inserted  rejected  total_us  ns_per_op
//! ```
//!
//! Run with `cargo run --release --example guard_bench -p cycle-detect`.

use std::time::Instant;

use cycle_detect::CycleGuard;

// Small xorshift generator; keeps the example dependency-free.
struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, bound: usize) -> usize {
        (self.next() % bound as u64) as usize
    }
}

fn main() {
    println!("nodes\tops\tinserted\trejected\ttotal_us\tns_per_op");
    for &nodes in &[10usize, 30, 100, 300, 1_000, 3_000, 10_000] {
        let ops = nodes * 20;
        let mut rng = XorShift(0x2545F4914F6CDD1D ^ nodes as u64);
        let mut guard = CycleGuard::new(nodes);
        let mut inserted = 0usize;
        let mut rejected = 0usize;
        let started = Instant::now();
        for _ in 0..ops {
            let a = rng.below(nodes);
            let b = {
                let mut b = rng.below(nodes);
                while b == a {
                    b = rng.below(nodes);
                }
                b
            };
            if guard.would_create_cycle(a, b) {
                rejected += 1;
            } else {
                guard.insert_arc(a, b).unwrap();
                inserted += 1;
            }
        }
        let elapsed = started.elapsed();
        println!(
            "{nodes}\t{ops}\t{inserted}\t{rejected}\t{}\t{}",
            elapsed.as_micros(),
            elapsed.as_nanos() / ops as u128
        );
    }
}
