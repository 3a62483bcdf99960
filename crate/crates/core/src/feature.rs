//! Feature maps derived from range–Doppler frame sequences.
//!
//! A radar sample arrives as a sequence of range–Doppler magnitude frames,
//! one per time step and antenna. Three two-dimensional projections feed the
//! classifiers:
//!
//! * **range–time**: each frame's rows summed over Doppler bins — where the
//!   hand is, over time;
//! * **Doppler–time**: each frame's columns summed over range bins — how fast
//!   it moves, over time;
//! * **micro-Doppler**: corpora that ship Doppler spectrograms directly pass
//!   through untouched.
//!
//! Sums run in a fixed ascending-index order, so for a given payload the
//! projections are bitwise reproducible and both marginal sums conserve the
//! per-frame total mass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence of nonnegative range–Doppler magnitude frames,
/// `steps × antennas × range_bins × doppler_bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RdmSequence {
    steps: usize,
    antennas: usize,
    range_bins: usize,
    doppler_bins: usize,
    data: Vec<f64>,
}

impl RdmSequence {
    pub fn new(
        steps: usize,
        antennas: usize,
        range_bins: usize,
        doppler_bins: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if steps == 0 || antennas == 0 || range_bins == 0 || doppler_bins == 0 {
            return Err(Error::Dataset(format!(
                "range–Doppler sequence has an empty dimension: {steps}×{antennas}×{range_bins}×{doppler_bins}"
            )));
        }
        let expect = steps * antennas * range_bins * doppler_bins;
        if data.len() != expect {
            return Err(Error::Dataset(format!(
                "range–Doppler payload holds {} values, dims {steps}×{antennas}×{range_bins}×{doppler_bins} need {expect}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Dataset(format!(
                "range–Doppler payload value at flat index {i} is {} (must be finite and ≥ 0)",
                data[i]
            )));
        }
        Ok(RdmSequence { steps, antennas, range_bins, doppler_bins, data })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn range_bins(&self) -> usize {
        self.range_bins
    }

    #[inline]
    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn value(&self, t: usize, a: usize, r: usize, d: usize) -> f64 {
        self.data[((t * self.antennas + a) * self.range_bins + r) * self.doppler_bins + d]
    }

    /// Slice holding one frame (range × Doppler) for step `t`, antenna `a`.
    #[inline]
    pub fn frame(&self, t: usize, a: usize) -> &[f64] {
        let fsz = self.range_bins * self.doppler_bins;
        let start = (t * self.antennas + a) * fsz;
        &self.data[start..start + fsz]
    }
}

/// What a feature map's channels mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Channels are range bins; Doppler summed out.
    RangeTime,
    /// Channels are Doppler bins; range summed out.
    DopplerTime,
    /// Pre-computed Doppler spectrogram passed through unchanged.
    MicroDoppler,
    /// Channel-wise concatenation of several maps, built in memory to feed
    /// architectures that take all maps through one input. Never stored.
    Stacked,
}

/// Per-sample feature-map normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide the map by its own maximum (no-op when the max is 0).
    #[default]
    PerSampleMax,
    /// Leave values untouched.
    None,
}

impl Normalization {
    pub const ALL: [Normalization; 2] = [Normalization::PerSampleMax, Normalization::None];

    pub fn name(self) -> &'static str {
        match self {
            Normalization::PerSampleMax => "per-sample-max",
            Normalization::None => "none",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Normalization> {
        Normalization::ALL.into_iter().find(|n| n.name() == s).ok_or_else(|| Error::Parameter {
            name: "normalization",
            detail: format!(
                "unknown normalization {s:?}; expected one of {}",
                Normalization::ALL.map(|n| n.name()).join(", ")
            ),
        })
    }
}

/// A `steps × channels` time series of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    /// Antenna the map came from; `None` for single-channel corpora.
    pub antenna: Option<u32>,
    steps: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        kind: FeatureKind,
        antenna: Option<u32>,
        steps: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if steps == 0 || channels == 0 {
            return Err(Error::Dataset(format!("feature map has an empty dimension: {steps}×{channels}")));
        }
        if data.len() != steps * channels {
            return Err(Error::Dataset(format!(
                "feature map holds {} values, dims {steps}×{channels} need {}",
                data.len(),
                steps * channels
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("feature map value at flat index {i} is not finite")));
        }
        Ok(FeatureMap { kind, antenna, steps, channels, data })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.channels + c]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

/// Range–time projection for one antenna: channel `r` at step `t` is the
/// frame row `r` summed over Doppler bins, ascending.
pub fn compute_rtm(rdm: &RdmSequence, antenna: usize) -> Result<FeatureMap> {
    check_antenna(rdm, antenna)?;
    let (steps, nr, nd) = (rdm.steps(), rdm.range_bins(), rdm.doppler_bins());
    let mut data = Vec::with_capacity(steps * nr);
    for t in 0..steps {
        let frame = rdm.frame(t, antenna);
        for r in 0..nr {
            let mut acc = 0.0;
            for d in 0..nd {
                acc += frame[r * nd + d];
            }
            data.push(acc);
        }
    }
    FeatureMap::new(FeatureKind::RangeTime, Some(antenna as u32), steps, nr, data)
}

/// Doppler–time projection for one antenna: channel `d` at step `t` is the
/// frame column `d` summed over range bins, ascending.
pub fn compute_dtm(rdm: &RdmSequence, antenna: usize) -> Result<FeatureMap> {
    check_antenna(rdm, antenna)?;
    let (steps, nr, nd) = (rdm.steps(), rdm.range_bins(), rdm.doppler_bins());
    let mut data = Vec::with_capacity(steps * nd);
    for t in 0..steps {
        let frame = rdm.frame(t, antenna);
        for d in 0..nd {
            let mut acc = 0.0;
            for r in 0..nr {
                acc += frame[r * nd + d];
            }
            data.push(acc);
        }
    }
    FeatureMap::new(FeatureKind::DopplerTime, Some(antenna as u32), steps, nd, data)
}

fn check_antenna(rdm: &RdmSequence, antenna: usize) -> Result<()> {
    if antenna >= rdm.antennas() {
        return Err(Error::Parameter {
            name: "antenna",
            detail: format!("index {antenna} out of range, sequence has {}", rdm.antennas()),
        });
    }
    Ok(())
}

/// All feature maps of a frame sequence, ordered
/// `[range–time a0, Doppler–time a0, range–time a1, Doppler–time a1, …]`.
/// This ordering is part of the model contract: reservoir banks and trained
/// readouts index maps by position.
pub fn extract_all(rdm: &RdmSequence) -> Vec<FeatureMap> {
    let mut maps = Vec::with_capacity(2 * rdm.antennas());
    for a in 0..rdm.antennas() {
        maps.push(compute_rtm(rdm, a).expect("antenna index in range"));
        maps.push(compute_dtm(rdm, a).expect("antenna index in range"));
    }
    maps
}

/// Concatenate maps channel-wise into one wide map: row `t` of the result is
/// `[maps[0].row(t), maps[1].row(t), …]`. All maps must share a step count.
pub fn stack_maps(maps: &[FeatureMap]) -> Result<FeatureMap> {
    let Some(first) = maps.first() else {
        return Err(Error::Parameter { name: "maps", detail: "cannot stack zero feature maps".into() });
    };
    let steps = first.steps();
    let mut channels = 0usize;
    for (i, m) in maps.iter().enumerate() {
        if m.steps() != steps {
            return Err(Error::Shape {
                op: "stack_maps",
                detail: format!("map {i} has {} steps, map 0 has {steps}", m.steps()),
            });
        }
        channels += m.channels();
    }
    let mut data = Vec::with_capacity(steps * channels);
    for t in 0..steps {
        for m in maps {
            data.extend_from_slice(m.row(t));
        }
    }
    FeatureMap::new(FeatureKind::Stacked, None, steps, channels, data)
}

/// Apply a normalization scheme in place.
pub fn normalize(map: &mut FeatureMap, scheme: Normalization) {
    match scheme {
        Normalization::None => {}
        Normalization::PerSampleMax => {
            let max = map.max_value();
            if max > 0.0 {
                for v in &mut map.data {
                    *v /= max;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn sample_rdm() -> RdmSequence {
        // 2 steps, 1 antenna, 3×4 frames with hand-picked entries.
        #[rustfmt::skip]
        let data = vec![
            // t = 0
            1.0, 2.0, 3.0, 4.0,
            5.0, 6.0, 7.0, 8.0,
            9.0, 10.0, 11.0, 12.0,
            // t = 1
            0.0, 1.0, 0.0, 2.0,
            3.0, 0.0, 4.0, 0.0,
            0.0, 5.0, 0.0, 6.0,
        ];
        RdmSequence::new(2, 1, 3, 4, data).unwrap()
    }

    #[test]
    fn range_time_matches_hand_sums() {
        let rtm = compute_rtm(&sample_rdm(), 0).unwrap();
        assert_eq!(rtm.kind, FeatureKind::RangeTime);
        assert_eq!((rtm.steps(), rtm.channels()), (2, 3));
        assert_eq!(rtm.row(0), &[10.0, 26.0, 42.0]);
        assert_eq!(rtm.row(1), &[3.0, 7.0, 11.0]);
    }

    #[test]
    fn doppler_time_matches_hand_sums() {
        let dtm = compute_dtm(&sample_rdm(), 0).unwrap();
        assert_eq!(dtm.kind, FeatureKind::DopplerTime);
        assert_eq!((dtm.steps(), dtm.channels()), (2, 4));
        assert_eq!(dtm.row(0), &[15.0, 18.0, 21.0, 24.0]);
        assert_eq!(dtm.row(1), &[3.0, 6.0, 4.0, 8.0]);
    }

    #[test]
    fn marginal_sums_conserve_frame_mass() {
        let rdm = sample_rdm();
        let rtm = compute_rtm(&rdm, 0).unwrap();
        let dtm = compute_dtm(&rdm, 0).unwrap();
        for t in 0..2 {
            let via_rtm: f64 = rtm.row(t).iter().sum();
            let via_dtm: f64 = dtm.row(t).iter().sum();
            let direct: f64 = rdm.frame(t, 0).iter().sum();
            assert_eq!(via_rtm, direct);
            assert_eq!(via_dtm, direct);
        }
    }

    #[test]
    fn extract_all_orders_maps_per_antenna() {
        let mut stream = RngStream::new(3);
        let data: Vec<f64> = (0..2 * 2 * 3 * 4).map(|_| stream.uniform(0.0, 1.0)).collect();
        let rdm = RdmSequence::new(2, 2, 3, 4, data).unwrap();
        let maps = extract_all(&rdm);
        assert_eq!(maps.len(), 4);
        assert_eq!(maps[0].kind, FeatureKind::RangeTime);
        assert_eq!(maps[0].antenna, Some(0));
        assert_eq!(maps[1].kind, FeatureKind::DopplerTime);
        assert_eq!(maps[1].antenna, Some(0));
        assert_eq!(maps[2].kind, FeatureKind::RangeTime);
        assert_eq!(maps[2].antenna, Some(1));
        assert_eq!(maps[3].kind, FeatureKind::DopplerTime);
        assert_eq!(maps[3].antenna, Some(1));
        // Each antenna's maps come from that antenna's frames alone.
        let solo = compute_rtm(&rdm, 1).unwrap();
        assert_eq!(maps[2], solo);
    }

    #[test]
    fn stacking_concatenates_rows_in_map_order() {
        let a = FeatureMap::new(FeatureKind::RangeTime, Some(0), 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = FeatureMap::new(FeatureKind::DopplerTime, Some(0), 2, 1, vec![9.0, 8.0]).unwrap();
        let stacked = stack_maps(&[a, b]).unwrap();
        assert_eq!(stacked.kind, FeatureKind::Stacked);
        assert_eq!((stacked.steps(), stacked.channels()), (2, 3));
        assert_eq!(stacked.row(0), &[1.0, 2.0, 9.0]);
        assert_eq!(stacked.row(1), &[3.0, 4.0, 8.0]);
    }

    #[test]
    fn stacking_rejects_step_mismatch_and_empty_input() {
        let a = FeatureMap::new(FeatureKind::RangeTime, None, 2, 2, vec![0.0; 4]).unwrap();
        let b = FeatureMap::new(FeatureKind::RangeTime, None, 3, 2, vec![0.0; 6]).unwrap();
        assert!(stack_maps(&[a, b]).is_err());
        assert!(stack_maps(&[]).is_err());
    }

    #[test]
    fn normalize_per_sample_max_scales_into_unit_range() {
        let mut map =
            FeatureMap::new(FeatureKind::RangeTime, Some(0), 2, 2, vec![0.0, 1.0, 2.0, 0.5]).unwrap();
        normalize(&mut map, Normalization::PerSampleMax);
        assert_eq!(map.data(), &[0.0, 0.5, 1.0, 0.25]);
        assert!(map.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn normalize_leaves_zero_map_unchanged() {
        let mut map = FeatureMap::new(FeatureKind::DopplerTime, None, 2, 3, vec![0.0; 6]).unwrap();
        normalize(&mut map, Normalization::PerSampleMax);
        assert_eq!(map.data(), &[0.0; 6]);
    }

    #[test]
    fn normalize_none_is_identity() {
        let mut map = FeatureMap::new(FeatureKind::MicroDoppler, None, 1, 3, vec![5.0, 2.0, 7.0]).unwrap();
        normalize(&mut map, Normalization::None);
        assert_eq!(map.data(), &[5.0, 2.0, 7.0]);
    }

    #[test]
    fn rejects_negative_values() {
        let err = RdmSequence::new(1, 1, 1, 2, vec![1.0, -0.5]).unwrap_err();
        assert!(err.to_string().contains("flat index 1"), "{err}");
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(RdmSequence::new(2, 1, 2, 2, vec![0.0; 7]).is_err());
        assert!(FeatureMap::new(FeatureKind::RangeTime, None, 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rejects_antenna_out_of_range() {
        let rdm = sample_rdm();
        assert!(compute_rtm(&rdm, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// With dyadic payload values every partial sum is exact in f64, so
        /// the two marginal projections must agree with the frame total to
        /// the last bit.
        #[test]
        fn mass_conservation_is_exact_on_dyadic_data(seed in 0u64..1_000_000) {
            let mut stream = RngStream::new(seed);
            let (steps, nr, nd) = (3usize, 8usize, 16usize);
            let data: Vec<f64> = (0..steps * nr * nd)
                .map(|_| stream.index(1024) as f64 / 64.0)
                .collect();
            let rdm = RdmSequence::new(steps, 1, nr, nd, data).unwrap();
            let rtm = compute_rtm(&rdm, 0).unwrap();
            let dtm = compute_dtm(&rdm, 0).unwrap();
            for t in 0..steps {
                let a: f64 = rtm.row(t).iter().sum();
                let b: f64 = dtm.row(t).iter().sum();
                let direct: f64 = rdm.frame(t, 0).iter().sum();
                prop_assert_eq!(a, b);
                prop_assert_eq!(a, direct);
            }
        }

        /// On arbitrary continuous data the identity holds to rounding.
        #[test]
        fn mass_conservation_close_on_continuous_data(seed in 0u64..1_000_000) {
            let mut stream = RngStream::new(seed);
            let (steps, nr, nd) = (2usize, 10usize, 12usize);
            let data: Vec<f64> = (0..steps * nr * nd).map(|_| stream.uniform(0.0, 3.0)).collect();
            let rdm = RdmSequence::new(steps, 1, nr, nd, data).unwrap();
            let rtm = compute_rtm(&rdm, 0).unwrap();
            let dtm = compute_dtm(&rdm, 0).unwrap();
            for t in 0..steps {
                let a: f64 = rtm.row(t).iter().sum();
                let b: f64 = dtm.row(t).iter().sum();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }

        #[test]
        fn per_sample_max_lands_in_unit_interval(seed in 0u64..1_000_000) {
            let mut stream = RngStream::new(seed);
            let data: Vec<f64> = (0..40).map(|_| stream.uniform(0.0, 50.0)).collect();
            let mut map = FeatureMap::new(FeatureKind::DopplerTime, None, 4, 10, data).unwrap();
            normalize(&mut map, Normalization::PerSampleMax);
            prop_assert!(map.data().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(map.data().iter().any(|v| *v == 1.0));
        }
    }
}
