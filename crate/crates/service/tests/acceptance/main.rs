//! Acceptance suite. Runs every primary criterion, prints one PASS/FAIL line
//! each and exits non-zero if any fails.
//!
//! Real dataset files are picked up from `TEACHQA_OBQA_TRAIN`,
//! `TEACHQA_OBQA_TEST`, `TEACHQA_QUARTZ_TRAIN` and `TEACHQA_QUARTZ_TEST`.

/// Fails the criterion with a formatted message.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

mod algorithm;
mod datasets;
mod oracle;
mod penny;
mod persistence;
mod retrieval;
mod teaching;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria = [
        Criterion {
            name: "bm25-oracle-equivalence",
            limit: Duration::from_secs(10),
            run: retrieval::bm25_oracle,
        },
        Criterion {
            name: "answer-loop-invariants",
            limit: Duration::from_secs(30),
            run: algorithm::invariants,
        },
        Criterion {
            name: "penny-end-to-end",
            limit: Duration::from_secs(5),
            run: penny::end_to_end,
        },
        Criterion {
            name: "simulated-teacher-trend",
            limit: Duration::from_secs(120),
            run: teaching::trend,
        },
        Criterion {
            name: "indexing-strategy-benchmark",
            limit: Duration::from_secs(60),
            run: retrieval::strategy_benchmark,
        },
        Criterion {
            name: "persistence-and-replay",
            limit: Duration::from_secs(60),
            run: persistence::round_trip_and_replay,
        },
        Criterion {
            name: "dataset-adapters",
            limit: Duration::from_secs(60),
            run: datasets::adapters,
        },
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.as_deref().map_or(true, |f| c.name.contains(f))) {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:<30} {:>7.2}s / {:>3}s  {}",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    let _ = panic::take_hook();
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
