//! Runs the four worked examples and prints each check.

use gls::showcase::run_example;

fn main() {
    for n in 1..=4 {
        let t = std::time::Instant::now();
        let r = run_example(n, 7).expect("example runs");
        println!("example {n} ({}): {}", r.title, if r.passed { "passed" } else { "FAILED" });
        for c in &r.checks {
            println!("  [{}] {}: {}", if c.passed { "ok" } else { "xx" }, c.name, c.detail);
        }
        for note in &r.notes {
            println!("  note: {note}");
        }
        println!("  ({:.2?})", t.elapsed());
    }
}
