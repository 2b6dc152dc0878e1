//! Timing of one four-particle evaluation on a fixed grid.

use std::time::Instant;

use super::report::{CheckReport, Tracker};
use crate::bethe_engine::{choose_radius, transition_probability, ContourMode, ContourSpec};
use crate::error::{Error, Result};
use crate::models::{Configuration, Model};

/// Timings of [`check_performance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub serial_s: f64,
    pub parallel_s: f64,
    pub identical: bool,
}

impl Timing {
    pub fn speedup(&self) -> f64 {
        self.serial_s / self.parallel_s
    }
}

/// Evaluates `P_Y(X; t)` for PushASEP with `N = 4` on a fixed `nodes^4`
/// grid, once on a 1-thread pool and once on a `workers`-thread pool.
pub fn time_evaluation(nodes: usize, workers: usize) -> Result<(Timing, f64)> {
    let model = Model::push(0.6, 0.3)?;
    let y = Configuration::new(vec![0, 1, 3, 4]);
    let x = Configuration::new(vec![1, 2, 3, 6]);
    let spec = ContourSpec::fixed(choose_radius(&model, 4, ContourMode::Small)?, nodes);
    let run = |threads: usize| -> Result<(f64, f64)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        let start = Instant::now();
        let v = pool
            .install(|| transition_probability(&model, &y, &x, 0.8, &spec))?
            .value;
        Ok((v, start.elapsed().as_secs_f64()))
    };
    // warm-up so that neither timing pays for first-touch allocation
    run(workers)?;
    let (v1, serial_s) = run(1)?;
    let (vp, parallel_s) = run(workers)?;
    Ok((
        Timing {
            serial_s,
            parallel_s,
            identical: v1.to_bits() == vp.to_bits(),
        },
        vp,
    ))
}

/// Two reports: wall time of the parallel evaluation against `max_seconds`,
/// and `1 / speedup` against `1 / min_speedup`. Differing serial and
/// parallel values are an error in both.
pub fn check_performance(
    nodes: usize,
    workers: usize,
    max_seconds: f64,
    min_speedup: f64,
) -> Vec<CheckReport> {
    let mut time = Tracker::new("performance_time", 0).particles(4);
    let mut speed = Tracker::new("performance_speedup", 0).particles(4);
    match time_evaluation(nodes, workers) {
        Ok((t, _)) => {
            time.record(t.parallel_s);
            speed.record(1.0 / t.speedup());
            if !t.identical {
                time.error("output", "serial and parallel values differ");
                speed.error("output", "serial and parallel values differ");
            }
        }
        Err(e) => {
            time.error("evaluation", e.clone());
            speed.error("evaluation", e);
        }
    }
    vec![time.finish(max_seconds), speed.finish(1.0 / min_speedup)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_is_reproducible() {
        let (t, v) = time_evaluation(8, 2).unwrap();
        assert!(t.identical);
        assert!(v.is_finite());
    }
}
