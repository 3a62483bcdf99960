//! Parallel bank of independent reservoirs, one per feature map.
//!
//! Instead of feeding one wide reservoir every feature channel at once, a
//! bank gives each feature map its own (typically much smaller) reservoir and
//! concatenates the final states into a single unified vector for the
//! readout. The blocks are fully independent: reservoir `i` sees only map
//! `i`, so perturbing one map can only change that map's block.

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::reservoir::{Reservoir, ReservoirSpec};

/// Where one reservoir's block lives inside a [`UnifiedState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpan {
    /// Index of the reservoir that produced the block.
    pub reservoir: usize,
    /// Offset of the block in the unified vector.
    pub offset: usize,
    /// Block length (that reservoir's node count).
    pub len: usize,
}

/// Concatenated final states of every reservoir in a bank, in bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedState {
    values: Vec<f64>,
    layout: Vec<StateSpan>,
}

impl UnifiedState {
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn layout(&self) -> &[StateSpan] {
        &self.layout
    }

    /// The slice produced by reservoir `i`.
    pub fn block(&self, i: usize) -> &[f64] {
        let span = &self.layout[i];
        &self.values[span.offset..span.offset + span.len]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An ordered collection of reservoirs run side by side.
#[derive(Debug, Clone)]
pub struct ReservoirBank {
    reservoirs: Vec<Reservoir>,
}

impl ReservoirBank {
    /// Build one reservoir per entry of `map_dims`, all sharing `base_spec`
    /// except for the input dimension (taken per map) and the seed
    /// (`base_spec.seed + i`, so sibling reservoirs never share weights).
    pub fn build(base_spec: &ReservoirSpec, map_dims: &[usize]) -> Result<ReservoirBank> {
        if map_dims.is_empty() {
            return Err(Error::Parameter {
                name: "map_dims",
                detail: "a reservoir bank needs at least one feature map".into(),
            });
        }
        let mut reservoirs = Vec::with_capacity(map_dims.len());
        for (i, &dim) in map_dims.iter().enumerate() {
            let spec = ReservoirSpec {
                input_dim: dim,
                seed: base_spec.seed.wrapping_add(i as u64),
                ..base_spec.clone()
            };
            reservoirs.push(Reservoir::build(spec)?);
        }
        Ok(ReservoirBank { reservoirs })
    }

    /// Assemble a bank from prebuilt reservoirs (model deserialization and
    /// tests). Seeds must be pairwise distinct — identical seeds with equal
    /// shapes would mean duplicated weights and a redundant bank.
    pub fn from_reservoirs(reservoirs: Vec<Reservoir>) -> Result<ReservoirBank> {
        if reservoirs.is_empty() {
            return Err(Error::Parameter {
                name: "reservoirs",
                detail: "a reservoir bank needs at least one reservoir".into(),
            });
        }
        for i in 0..reservoirs.len() {
            for j in i + 1..reservoirs.len() {
                if reservoirs[i].spec().seed == reservoirs[j].spec().seed {
                    return Err(Error::Parameter {
                        name: "reservoirs",
                        detail: format!("reservoirs {i} and {j} share seed {}", reservoirs[i].spec().seed),
                    });
                }
            }
        }
        Ok(ReservoirBank { reservoirs })
    }

    #[inline]
    pub fn reservoirs(&self) -> &[Reservoir] {
        &self.reservoirs
    }

    pub fn len(&self) -> usize {
        self.reservoirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reservoirs.is_empty()
    }

    /// Total dimension of the unified state.
    pub fn unified_dim(&self) -> usize {
        self.reservoirs.iter().map(|r| r.spec().nodes).sum()
    }

    /// Input channel counts expected per position.
    pub fn expected_channels(&self) -> Vec<usize> {
        self.reservoirs.iter().map(|r| r.spec().input_dim).collect()
    }

    /// Run every reservoir on its map and concatenate the final states in
    /// bank order.
    pub fn run(&self, maps: &[FeatureMap]) -> Result<UnifiedState> {
        if maps.len() != self.reservoirs.len() {
            return Err(Error::Shape {
                op: "bank run",
                detail: format!("bank has {} reservoirs, got {} feature maps", self.reservoirs.len(), maps.len()),
            });
        }
        let mut values = Vec::with_capacity(self.unified_dim());
        let mut layout = Vec::with_capacity(self.reservoirs.len());
        for (i, (res, map)) in self.reservoirs.iter().zip(maps).enumerate() {
            if map.channels() != res.spec().input_dim {
                return Err(Error::Shape {
                    op: "bank run",
                    detail: format!(
                        "map {i}: reservoir expects {} channels, feature map has {}",
                        res.spec().input_dim,
                        map.channels()
                    ),
                });
            }
            let state = res.run(map)?;
            layout.push(StateSpan { reservoir: i, offset: values.len(), len: state.len() });
            values.extend_from_slice(state.values());
        }
        Ok(UnifiedState { values, layout })
    }
}
