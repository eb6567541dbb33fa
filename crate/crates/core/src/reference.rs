//! Exact per-key reference tracker.
//!
//! A slow but exact implementation of the scoring semantics that keeps one
//! plain record per key instead of sketches: true counts, true run widths,
//! true gap lengths, true segment indices. It shares no code with the
//! sketch path, which makes it usable as an independent oracle — under a
//! collision-free layout the detector must reproduce its component scores
//! exactly.
//!
//! Untouched sketch cells still age during absence sweeps, so a key that has
//! never occurred inherits the global sweep count as its initial gap; the
//! tracker models that with lazy initialization.

use std::collections::HashMap;

use crate::detector::{gtest_score, ComponentScores};

#[derive(Debug, Clone)]
struct KeyState {
    burst_cur: f64,
    burst_acc: f64,
    width_cur: f64,
    width_acc: f64,
    width_seg: f64,
    gap_cur: f64,
    gap_acc: f64,
    gap_seg: f64,
    busy_cur: bool,
    busy_last: bool,
}

impl KeyState {
    fn fresh(sweeps_seen: u64) -> Self {
        KeyState {
            burst_cur: 0.0,
            burst_acc: 0.0,
            width_cur: 0.0,
            width_acc: 0.0,
            width_seg: 0.0,
            gap_cur: sweeps_seen as f64,
            gap_acc: 0.0,
            gap_seg: 0.0,
            busy_cur: false,
            busy_last: false,
        }
    }
}

/// Exact tracker over arbitrary 64-bit keys.
#[derive(Debug, Clone)]
pub struct ExactTracker {
    zeta: f64,
    clock: u64,
    sweeps: u64,
    keys: HashMap<u64, KeyState>,
}

impl ExactTracker {
    pub fn new(zeta: f64) -> Self {
        ExactTracker {
            zeta,
            clock: 1,
            sweeps: 0,
            keys: HashMap::new(),
        }
    }

    /// Exact component scores for one `(key, timestamp)` event.
    ///
    /// Timestamps must be non-decreasing; panics otherwise (this is test
    /// support, not production input handling).
    pub fn process_key(&mut self, key: u64, t: u64) -> ComponentScores<f64> {
        assert!(t >= self.clock, "reference tracker fed an unsorted stream");
        if self.clock < t {
            self.sweep();
            self.clock = t;
        }
        let state = self
            .keys
            .entry(key)
            .or_insert_with(|| KeyState::fresh(self.sweeps));

        state.burst_cur += 1.0;
        state.burst_acc += 1.0;
        let burst = gtest_score(state.burst_cur, state.burst_acc, t as f64);

        if !state.busy_cur {
            state.busy_cur = true;
            if !state.busy_last {
                state.width_acc += state.width_cur;
                state.width_cur *= self.zeta;
                state.width_seg += 1.0;
            }
            state.width_cur += 1.0;
        }
        let occ = gtest_score(state.width_cur, state.width_acc, state.width_seg);
        let abs = gtest_score(state.gap_cur, state.gap_acc, state.gap_seg);
        ComponentScores { burst, occ, abs }
    }

    fn sweep(&mut self) {
        self.sweeps += 1;
        for state in self.keys.values_mut() {
            if !state.busy_cur {
                if state.busy_last {
                    state.gap_acc += state.gap_cur;
                    state.gap_cur *= self.zeta;
                    state.gap_seg += 1.0;
                }
                state.gap_cur += 1.0;
            }
            state.busy_last = state.busy_cur;
            state.busy_cur = false;
            state.burst_cur *= self.zeta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{DetectorState, Params};
    use crate::key;
    use crate::sketch::SketchLayout;
    use proptest::prelude::*;
    use std::sync::Arc;

    // Collision-free detector: identity layout, edge keys placed in their
    // own cells through the mixer preimage.
    fn identity_detector(zeta: f64, cols: usize) -> DetectorState<f64> {
        let layout = Arc::new(SketchLayout::identity(cols).unwrap());
        DetectorState::with_layout(Params::new(1.0, 1.0, 1.0, zeta).unwrap(), layout)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn detector_matches_exact_tracker(
            steps in proptest::collection::vec((0u64..24, 0u64..3), 1..400),
            zeta_pick in 0usize..4,
        ) {
            let zeta = [0.0, 0.3, 0.5, 0.7][zeta_pick];
            let mut det = identity_detector(zeta, 24);
            let mut oracle = ExactTracker::new(zeta);
            let mut t = 1u64;
            for (key, advance) in steps {
                t += advance;
                let (s, d) = key::edge_preimage(key);
                let (_, got) = det.process_key(key::edge_key(s, d), t).unwrap();
                let want = oracle.process_key(key, t);
                prop_assert_eq!(got.burst.to_bits(), want.burst.to_bits());
                prop_assert_eq!(got.occ.to_bits(), want.occ.to_bits());
                prop_assert_eq!(got.abs.to_bits(), want.abs.to_bits());
            }
        }
    }
}
