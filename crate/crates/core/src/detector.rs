//! Edge-only scoring engine.
//!
//! For every record the detector produces three components and their
//! combination:
//!
//! * burst: a G-test on the edge type's current-timestamp count against its
//!   accumulated history,
//! * occurrence width: the same test on the length of the current
//!   consecutive-occurrence run against the accumulated run lengths,
//! * absence gap: the same test on the current absence-gap length against
//!   the accumulated gaps.
//!
//! Counts and run lengths live in eight count-min sketches over one shared
//! layout; a pair of boolean busy-indicator sketches marks which cells were
//! active in the current and previous timestamp so that run boundaries can
//! be detected without storing any per-key state.

use std::sync::Arc;

use thiserror::Error;

use crate::key;
use crate::num::Real;
use crate::sketch::{CountSketch, FlagSketch, IndexVector, LayoutError, SketchLayout};

/// One stream entry: an ordered node pair plus its timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeRecord {
    pub s: u64,
    pub d: u64,
    pub t: u64,
}

impl EdgeRecord {
    pub fn new(s: u64, d: u64, t: u64) -> Self {
        EdgeRecord { s, d, t }
    }
}

/// Invalid score weights or scale factor.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("component weights must be finite and non-negative")]
    InvalidWeight,
    #[error("scale factor must lie in [0, 1]")]
    ScaleOutOfRange,
}

/// Score weights `(alpha, beta, gamma)` and the scale factor `zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<F> {
    alpha: F,
    beta: F,
    gamma: F,
    zeta: F,
}

impl<F: Real> Params<F> {
    pub fn new(alpha: F, beta: F, gamma: F, zeta: F) -> Result<Self, ParamsError> {
        for w in [alpha, beta, gamma] {
            if !w.is_finite() || w < F::zero() {
                return Err(ParamsError::InvalidWeight);
            }
        }
        if !(zeta >= F::zero() && zeta <= F::one()) {
            return Err(ParamsError::ScaleOutOfRange);
        }
        Ok(Params {
            alpha,
            beta,
            gamma,
            zeta,
        })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn zeta(&self) -> F {
        self.zeta
    }
}

impl<F: Real> Default for Params<F> {
    /// Burst weight 1, width weight 1, gap weight 0.5, scale factor 0.7.
    fn default() -> Self {
        let half = F::from_f64(0.5).unwrap();
        Params {
            alpha: F::one(),
            beta: F::one(),
            gamma: half,
            zeta: F::from_f64(0.7).unwrap(),
        }
    }
}

/// The per-record component triple, before combination.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentScores<F> {
    /// Burst (frequency) score.
    pub burst: F,
    /// Occurrence-run width score.
    pub occ: F,
    /// Absence-gap score.
    pub abs: F,
}

impl<F: Real> ComponentScores<F> {
    /// Element-wise maximum.
    pub fn max(&self, other: &Self) -> Self {
        ComponentScores {
            burst: self.burst.max(other.burst),
            occ: self.occ.max(other.occ),
            abs: self.abs.max(other.abs),
        }
    }
}

/// G-test score of a current value against its accumulated history:
/// `|2 * cur * ln(cur * (n - 1) / acc)|`.
///
/// `n` is the number of periods the history spans (the timestamp for burst
/// counts, the segment index for run lengths). Zero history (`cur = 0`,
/// `acc = 0`, or `n <= 1`) carries no evidence and scores 0.
#[inline]
pub fn gtest_score<F: Real>(cur: F, acc: F, n: F) -> F {
    if cur <= F::zero() || acc <= F::zero() || n <= F::one() {
        return F::zero();
    }
    let ratio = cur * (n - F::one()) / acc;
    ((cur + cur) * ratio.ln()).abs()
}

/// Final score: `burst^alpha * occ^beta * abs^gamma`.
///
/// A weight of zero turns its factor into 1 (even at base 0), fully
/// disabling that component.
#[inline]
pub fn combine<F: Real>(scores: &ComponentScores<F>, params: &Params<F>) -> F {
    #[inline]
    fn factor<F: Real>(base: F, weight: F) -> F {
        if weight == F::zero() {
            F::one()
        } else if weight == F::one() {
            base
        } else {
            base.powf(weight)
        }
    }
    factor(scores.burst, params.alpha)
        * factor(scores.occ, params.beta)
        * factor(scores.abs, params.gamma)
}

/// Errors raised by the scoring engine.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DetectorError {
    #[error("edge record ({s}, {d}, {t}) arrived out of order: detector clock already at {clock}")]
    StreamOrder { s: u64, d: u64, t: u64, clock: u64 },
    #[error("tick to {timestamp} does not advance the detector clock {clock}")]
    ClockNotAdvanced { timestamp: u64, clock: u64 },
}

/// Full scoring state of one edge-only detector instance.
///
/// Strictly sequential: stream order is significant, so a state must never
/// be mutated concurrently. Independent instances are free to run in
/// parallel.
#[derive(Debug, Clone)]
pub struct DetectorState<F> {
    layout: Arc<SketchLayout>,
    params: Params<F>,
    burst_cur: CountSketch<F>,
    burst_acc: CountSketch<F>,
    width_cur: CountSketch<F>,
    width_acc: CountSketch<F>,
    width_seg: CountSketch<F>,
    gap_cur: CountSketch<F>,
    gap_acc: CountSketch<F>,
    gap_seg: CountSketch<F>,
    busy_cur: FlagSketch,
    busy_last: FlagSketch,
    clock: u64,
    multi_sweep: bool,
}

impl DetectorState<f64> {
    /// Score a whole slice of records in stream order (`f64` fast path;
    /// instantiated in this crate rather than the caller's).
    pub fn score_stream(&mut self, records: &[EdgeRecord]) -> Result<Vec<f64>, DetectorError> {
        let mut out = Vec::with_capacity(records.len());
        self.score_into(records, &mut out)?;
        Ok(out)
    }
}

impl<F: Real> DetectorState<F> {
    /// Detector with a seeded layout of the given geometry.
    pub fn new(params: Params<F>, rows: usize, cols: usize, seed: u64) -> Result<Self, LayoutError> {
        Ok(Self::with_layout(
            params,
            Arc::new(SketchLayout::seeded(rows, cols, seed)?),
        ))
    }

    /// Detector over a caller-provided layout (e.g. the identity layout).
    pub fn with_layout(params: Params<F>, layout: Arc<SketchLayout>) -> Self {
        DetectorState {
            burst_cur: CountSketch::new(Arc::clone(&layout)),
            burst_acc: CountSketch::new(Arc::clone(&layout)),
            width_cur: CountSketch::new(Arc::clone(&layout)),
            width_acc: CountSketch::new(Arc::clone(&layout)),
            width_seg: CountSketch::new(Arc::clone(&layout)),
            gap_cur: CountSketch::new(Arc::clone(&layout)),
            gap_acc: CountSketch::new(Arc::clone(&layout)),
            gap_seg: CountSketch::new(Arc::clone(&layout)),
            busy_cur: FlagSketch::new(Arc::clone(&layout)),
            busy_last: FlagSketch::new(Arc::clone(&layout)),
            layout,
            params,
            clock: 1,
            multi_sweep: false,
        }
    }

    /// Run one absence sweep per skipped timestamp instead of one per
    /// transition. Off by default.
    pub fn with_multi_sweep(mut self, enabled: bool) -> Self {
        self.multi_sweep = enabled;
        self
    }

    /// Score one record and update all state.
    pub fn process_edge(&mut self, e: EdgeRecord) -> Result<(F, ComponentScores<F>), DetectorError> {
        self.process_key(key::edge_key(e.s, e.d), e.t)
            .map_err(|clock| DetectorError::StreamOrder {
                s: e.s,
                d: e.d,
                t: e.t,
                clock,
            })
    }

    /// Score a pre-derived sketch key; `Err` carries the clock value that
    /// rejected the timestamp.
    pub(crate) fn process_key(&mut self, key: u64, t: u64) -> Result<(F, ComponentScores<F>), u64> {
        if t < self.clock {
            return Err(self.clock);
        }
        if self.clock < t {
            self.advance_clock(t);
        }
        let idx = self.layout.hash_key(key);
        let one = F::one();
        self.burst_cur.add(&idx, one);
        self.burst_acc.add(&idx, one);
        let burst = gtest_score(
            self.burst_cur.query(&idx),
            self.burst_acc.query(&idx),
            F::from_count(t),
        );
        self.occurrence_update(&idx);
        let wp = self.width_seg.arg_query(&idx);
        let occ = gtest_score(
            self.width_cur.cell(wp),
            self.width_acc.cell(wp),
            self.width_seg.cell(wp),
        );
        let gp = self.gap_seg.arg_query(&idx);
        let abs = gtest_score(
            self.gap_cur.cell(gp),
            self.gap_acc.cell(gp),
            self.gap_seg.cell(gp),
        );
        let components = ComponentScores { burst, occ, abs };
        Ok((combine(&components, &self.params), components))
    }

    /// Score a whole slice of records in stream order, appending the final
    /// scores to `out`.
    pub fn score_into(
        &mut self,
        records: &[EdgeRecord],
        out: &mut Vec<F>,
    ) -> Result<(), DetectorError> {
        out.reserve(records.len());
        for &e in records {
            out.push(self.process_edge(e)?.0);
        }
        Ok(())
    }

    /// Advance the internal clock: absence sweep plus burst decay.
    pub fn tick(&mut self, t_new: u64) -> Result<(), DetectorError> {
        if t_new <= self.clock {
            return Err(DetectorError::ClockNotAdvanced {
                timestamp: t_new,
                clock: self.clock,
            });
        }
        self.advance_clock(t_new);
        Ok(())
    }

    fn advance_clock(&mut self, t: u64) {
        let steps = if self.multi_sweep { t - self.clock } else { 1 };
        for _ in 0..steps {
            self.absence_sweep();
            self.burst_cur.scale(self.params.zeta);
        }
        self.clock = t;
    }

    /// Mark the indexed cells busy and extend their occurrence runs.
    ///
    /// Cells already busy in this timestamp are untouched, so repeats of an
    /// edge type within one timestamp widen the run only once. A cell that
    /// was idle in the previous timestamp starts a new run: its current
    /// width folds into the accumulated width, decays, and the segment
    /// counter advances.
    pub fn occurrence_update(&mut self, idx: &IndexVector) {
        let zeta = self.params.zeta;
        let cols = self.layout.cols();
        for (row, col) in idx.iter().enumerate() {
            let i = row * cols + col;
            if !self.busy_cur.get_flat(i) {
                self.busy_cur.set_flat(i, true);
                if !self.busy_last.get_flat(i) {
                    let cur = self.width_cur.cell_flat(i);
                    self.width_acc.add_flat(i, cur);
                    self.width_cur.scale_flat(i, zeta);
                    self.width_seg.add_flat(i, F::one());
                }
                self.width_cur.add_flat(i, F::one());
            }
        }
    }

    /// End-of-timestamp pass over the whole grid.
    ///
    /// Every idle cell extends its absence gap; a cell that was busy in the
    /// previous timestamp but idle now starts a new gap (fold, decay,
    /// segment increment) first. Afterwards the busy indicators shift:
    /// `last <- cur`, `cur <- false`.
    pub fn absence_sweep(&mut self) {
        let zeta = self.params.zeta;
        let n = self.layout.size();
        for i in 0..n {
            if !self.busy_cur.get_flat(i) {
                if self.busy_last.get_flat(i) {
                    let cur = self.gap_cur.cell_flat(i);
                    self.gap_acc.add_flat(i, cur);
                    self.gap_cur.scale_flat(i, zeta);
                    self.gap_seg.add_flat(i, F::one());
                }
                self.gap_cur.add_flat(i, F::one());
            }
        }
        self.busy_cur.copy_into(&mut self.busy_last);
        self.busy_cur.clear();
    }

    /// Burst-count snapshot of an edge type: `(current, accumulated, total
    /// of the current sketch)`, the inputs of the adjusted statistic.
    pub fn burst_counts(&self, s: u64, d: u64) -> (F, F, F) {
        let idx = self.layout.hash_key(key::edge_key(s, d));
        (
            self.burst_cur.query(&idx),
            self.burst_acc.query(&idx),
            self.burst_cur.total(),
        )
    }

    pub fn layout(&self) -> &Arc<SketchLayout> {
        &self.layout
    }

    pub fn params(&self) -> &Params<F> {
        &self.params
    }

    /// Internal clock: the largest timestamp seen (starts at 1).
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn burst_current(&self) -> &CountSketch<F> {
        &self.burst_cur
    }

    pub fn burst_accumulated(&self) -> &CountSketch<F> {
        &self.burst_acc
    }

    pub fn width_current(&self) -> &CountSketch<F> {
        &self.width_cur
    }

    pub fn width_accumulated(&self) -> &CountSketch<F> {
        &self.width_acc
    }

    pub fn width_segments(&self) -> &CountSketch<F> {
        &self.width_seg
    }

    pub fn gap_current(&self) -> &CountSketch<F> {
        &self.gap_cur
    }

    pub fn gap_accumulated(&self) -> &CountSketch<F> {
        &self.gap_acc
    }

    pub fn gap_segments(&self) -> &CountSketch<F> {
        &self.gap_seg
    }

    pub fn busy_current(&self) -> &FlagSketch {
        &self.busy_cur
    }

    pub fn busy_previous(&self) -> &FlagSketch {
        &self.busy_last
    }
}
