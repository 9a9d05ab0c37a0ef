//! Prints exact values of h_p(k) for the given `p:k` pairs, e.g.
//! `cargo run --release --example h_table -- 2:5 3:2 3:3`.

use std::time::Instant;

fn main() {
    let pairs: Vec<(u32, u32)> = std::env::args()
        .skip(1)
        .filter_map(|a| {
            let (p, k) = a.split_once(':')?;
            Some((p.parse().ok()?, k.parse().ok()?))
        })
        .collect();
    let pairs = if pairs.is_empty() { vec![(2, 4), (3, 2), (13, 1)] } else { pairs };
    println!("{:>3} {:>3} {:>6} {:>6} {:>8} {:>12} {:>10}", "p", "k", "lower", "exact", "upper", "nodes", "time");
    for (p, k) in pairs {
        let start = Instant::now();
        match zerosum::reduced::h_exact(p, k, 2_000_000_000) {
            Ok(r) => println!(
                "{p:>3} {k:>3} {:>6} {:>6} {:>8.1} {:>12} {:>10.2?}",
                r.lower,
                r.exact.map_or("?".into(), |h| h.to_string()),
                r.upper,
                r.nodes,
                start.elapsed()
            ),
            Err(e) => println!("{p:>3} {k:>3} error: {e}"),
        }
    }
}
