//! Edge-node variant: three edge-only instances merged by component maxima.
//!
//! One instance tracks edge types, one tracks source nodes, one tracks
//! destination nodes; all share the same geometry, weights and scale factor
//! but keep separate sketch storage. Each record is scored by all three and
//! the element-wise maximum of the component triples is combined into the
//! final score.

use std::sync::Arc;

use crate::detector::{combine, ComponentScores, DetectorState, DetectorError, EdgeRecord, Params};
use crate::key;
use crate::num::Real;
use crate::sketch::{LayoutError, SketchLayout};

/// Component triples of the edge, source and destination instances for one
/// record, exposed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubScores<F> {
    pub edge: ComponentScores<F>,
    pub source: ComponentScores<F>,
    pub destination: ComponentScores<F>,
}

/// Edge-node detector.
#[derive(Debug, Clone)]
pub struct EnDetector<F> {
    edge: DetectorState<F>,
    source: DetectorState<F>,
    destination: DetectorState<F>,
    params: Params<F>,
}

impl EnDetector<f64> {
    /// Score a whole slice of records in stream order (`f64` fast path;
    /// instantiated in this crate rather than the caller's).
    pub fn score_stream(&mut self, records: &[EdgeRecord]) -> Result<Vec<f64>, DetectorError> {
        let mut out = Vec::with_capacity(records.len());
        self.score_into(records, &mut out)?;
        Ok(out)
    }
}

impl<F: Real> EnDetector<F> {
    /// Three instances with identical geometry drawn from one seed.
    pub fn new(params: Params<F>, rows: usize, cols: usize, seed: u64) -> Result<Self, LayoutError> {
        Ok(EnDetector {
            edge: DetectorState::new(params, rows, cols, seed)?,
            source: DetectorState::new(params, rows, cols, seed)?,
            destination: DetectorState::new(params, rows, cols, seed)?,
            params,
        })
    }

    /// Build over caller-provided layouts of identical geometry.
    pub fn with_layouts(
        params: Params<F>,
        edge: Arc<SketchLayout>,
        source: Arc<SketchLayout>,
        destination: Arc<SketchLayout>,
    ) -> Self {
        debug_assert!(
            edge.rows() == source.rows()
                && edge.cols() == source.cols()
                && edge.rows() == destination.rows()
                && edge.cols() == destination.cols()
        );
        EnDetector {
            edge: DetectorState::with_layout(params, edge),
            source: DetectorState::with_layout(params, source),
            destination: DetectorState::with_layout(params, destination),
            params,
        }
    }

    /// See [`DetectorState::with_multi_sweep`]; applies to all instances.
    pub fn with_multi_sweep(mut self, enabled: bool) -> Self {
        self.edge = self.edge.with_multi_sweep(enabled);
        self.source = self.source.with_multi_sweep(enabled);
        self.destination = self.destination.with_multi_sweep(enabled);
        self
    }

    /// Score one record: max-merge the three component triples, then combine.
    pub fn process_edge(&mut self, e: EdgeRecord) -> Result<(F, ComponentScores<F>), DetectorError> {
        let (score, merged, _) = self.process_edge_traced(e)?;
        Ok((score, merged))
    }

    /// As [`process_edge`](Self::process_edge), but also returns the
    /// per-instance component triples.
    pub fn process_edge_traced(
        &mut self,
        e: EdgeRecord,
    ) -> Result<(F, ComponentScores<F>, SubScores<F>), DetectorError> {
        let order_err = |clock| DetectorError::StreamOrder {
            s: e.s,
            d: e.d,
            t: e.t,
            clock,
        };
        let (_, edge) = self
            .edge
            .process_key(key::edge_key(e.s, e.d), e.t)
            .map_err(order_err)?;
        let (_, source) = self
            .source
            .process_key(key::node_key(e.s), e.t)
            .map_err(order_err)?;
        let (_, destination) = self
            .destination
            .process_key(key::node_key(e.d), e.t)
            .map_err(order_err)?;
        let merged = edge.max(&source).max(&destination);
        let score = combine(&merged, &self.params);
        Ok((
            score,
            merged,
            SubScores {
                edge,
                source,
                destination,
            },
        ))
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

    /// Burst-count snapshot from the edge instance (the statistic the
    /// false-positive guarantee is stated for).
    pub fn burst_counts(&self, s: u64, d: u64) -> (F, F, F) {
        self.edge.burst_counts(s, d)
    }

    pub fn params(&self) -> &Params<F> {
        &self.params
    }

    pub fn edge_instance(&self) -> &DetectorState<F> {
        &self.edge
    }

    pub fn source_instance(&self) -> &DetectorState<F> {
        &self.source
    }

    pub fn destination_instance(&self) -> &DetectorState<F> {
        &self.destination
    }
}
