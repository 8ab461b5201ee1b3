//! Lattice geometries, exclusion and zero-range configurations, phase
//! classification and the plain-text snapshot format.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a configuration lives.
///
/// A `LineWindow` observes the sites `lo..hi` (half-open) and additionally
/// simulates `padding` buffer sites on each side, so the stored array covers
/// `lo - padding .. hi + padding`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeGeometry {
    Torus { sites: usize },
    LineWindow { lo: i64, hi: i64, padding: usize },
}

impl LatticeGeometry {
    pub fn torus(sites: usize) -> Result<Self> {
        if sites < 2 {
            return Err(Error::Geometry(format!("torus needs at least 2 sites, got {sites}")));
        }
        Ok(Self::Torus { sites })
    }

    /// Single-site torus; only used for the degenerate zero-range image of a
    /// configuration without empty sites.
    pub(crate) fn degenerate_torus() -> Self {
        Self::Torus { sites: 1 }
    }

    pub fn line_window(lo: i64, hi: i64, padding: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Geometry(format!("line window needs lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self::LineWindow { lo, hi, padding })
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Self::Torus { .. })
    }

    /// Number of stored (simulated) sites.
    pub fn len(&self) -> usize {
        match *self {
            Self::Torus { sites } => sites,
            Self::LineWindow { lo, hi, padding } => (hi - lo) as usize + 2 * padding,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice label of array index 0.
    pub fn first_site(&self) -> i64 {
        match *self {
            Self::Torus { .. } => 0,
            Self::LineWindow { lo, padding, .. } => lo - padding as i64,
        }
    }

    pub fn site_of(&self, index: usize) -> i64 {
        self.first_site() + index as i64
    }

    /// Array index of a lattice label; wraps on the torus.
    pub fn index_of(&self, site: i64) -> Option<usize> {
        match *self {
            Self::Torus { sites } => Some(site.rem_euclid(sites as i64) as usize),
            Self::LineWindow { .. } => {
                let i = site - self.first_site();
                (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
            }
        }
    }

    /// Array indices of the observed sites.
    pub fn window(&self) -> Range<usize> {
        match *self {
            Self::Torus { sites } => 0..sites,
            Self::LineWindow { lo, hi, padding } => padding..padding + (hi - lo) as usize,
        }
    }

    pub fn padding(&self) -> usize {
        match *self {
            Self::Torus { .. } => 0,
            Self::LineWindow { padding, .. } => padding,
        }
    }

    /// Number of nearest-neighbour edges `(i, i+1)` between stored sites.
    pub fn edge_count(&self) -> usize {
        match *self {
            Self::Torus { sites } => sites,
            Self::LineWindow { .. } => self.len().saturating_sub(1),
        }
    }

    fn header(&self) -> String {
        match *self {
            Self::Torus { sites } => format!("torus {sites}"),
            Self::LineWindow { lo, hi, padding } => format!("line {lo} {hi} {padding}"),
        }
    }

    fn parse_header(s: &str, line: usize) -> Result<Self> {
        let err = |msg: &str| Error::Parse { line, msg: msg.to_string() };
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<i64> {
            parts
                .get(i)
                .ok_or_else(|| err("missing geometry field"))?
                .parse::<i64>()
                .map_err(|_| err("bad geometry number"))
        };
        match parts.first().copied() {
            Some("torus") => {
                let n = num(1)?;
                if n < 1 {
                    return Err(err("torus size must be positive"));
                }
                Ok(Self::Torus { sites: n as usize })
            }
            Some("line") => {
                let pad = num(3)?;
                if pad < 0 {
                    return Err(err("negative padding"));
                }
                Self::line_window(num(1)?, num(2)?, pad as usize)
            }
            _ => Err(err("unknown geometry")),
        }
    }
}

/// Phase of a configuration: all holes isolated, all particles isolated, or
/// neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Ergodic,
    Frozen,
    Transient,
}

/// 0/1 occupancy, one entry per stored site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExclusionConfig {
    geometry: LatticeGeometry,
    occupancy: Vec<u8>,
}

impl ExclusionConfig {
    pub fn empty(geometry: LatticeGeometry) -> Result<Self> {
        Self::from_bits(geometry, vec![0; geometry.len()])
    }

    pub fn from_bits(geometry: LatticeGeometry, occupancy: Vec<u8>) -> Result<Self> {
        if geometry.len() < 2 {
            return Err(Error::Geometry("exclusion configurations need at least 2 sites".into()));
        }
        if occupancy.len() != geometry.len() {
            return Err(Error::Geometry(format!(
                "occupancy has {} entries, geometry has {} sites",
                occupancy.len(),
                geometry.len()
            )));
        }
        if occupancy.iter().any(|&b| b > 1) {
            return Err(Error::Geometry("occupancy entries must be 0 or 1".into()));
        }
        Ok(Self { geometry, occupancy })
    }

    /// Builds a configuration from the lattice labels of the occupied sites.
    pub fn from_sites(geometry: LatticeGeometry, occupied: &[i64]) -> Result<Self> {
        let mut c = Self::empty(geometry)?;
        for &x in occupied {
            let i = geometry
                .index_of(x)
                .ok_or_else(|| Error::Geometry(format!("site {x} outside the lattice")))?;
            c.occupancy[i] = 1;
        }
        Ok(c)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occupancy
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    /// Occupation of lattice label `x` (wrapping on the torus, 0 outside a window).
    pub fn get(&self, x: i64) -> u8 {
        self.geometry.index_of(x).map_or(0, |i| self.occupancy[i])
    }

    pub fn particle_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b == 1).count()
    }

    pub fn hole_count(&self) -> usize {
        self.len() - self.particle_count()
    }

    /// Lattice labels of the empty sites, in array order.
    pub fn holes(&self) -> Vec<i64> {
        (0..self.len())
            .filter(|&i| self.occupancy[i] == 0)
            .map(|i| self.geometry.site_of(i))
            .collect()
    }

    pub fn classify(&self) -> Phase {
        classify_exclusion(self)
    }
}

/// Classifies by the pair sums `η_x + η_{x+1}` over all torus edges, or over
/// the edges with both ends inside the observed window on a line.
pub fn classify_exclusion(eta: &ExclusionConfig) -> Phase {
    let occ = &eta.occupancy;
    let pairs: Box<dyn Iterator<Item = (usize, usize)>> = match eta.geometry {
        LatticeGeometry::Torus { sites } => Box::new((0..sites).map(move |i| (i, (i + 1) % sites))),
        LatticeGeometry::LineWindow { .. } => {
            let w = eta.geometry.window();
            Box::new((w.start..w.end.saturating_sub(1)).map(|i| (i, i + 1)))
        }
    };
    let (mut double_hole, mut double_particle) = (false, false);
    for (a, b) in pairs {
        match occ[a] + occ[b] {
            0 => double_hole = true,
            2 => double_particle = true,
            _ => {}
        }
    }
    phase_from_flags(double_hole, double_particle)
}

fn phase_from_flags(has_low: bool, has_high: bool) -> Phase {
    match (has_low, has_high) {
        (false, _) => Phase::Ergodic,
        (true, false) => Phase::Frozen,
        (true, true) => Phase::Transient,
    }
}

/// Pile heights, one entry per stored site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroRangeConfig {
    geometry: LatticeGeometry,
    heights: Vec<u32>,
}

impl ZeroRangeConfig {
    pub fn new(geometry: LatticeGeometry, heights: Vec<u32>) -> Result<Self> {
        if heights.len() != geometry.len() {
            return Err(Error::Geometry(format!(
                "{} heights for a geometry with {} sites",
                heights.len(),
                geometry.len()
            )));
        }
        if heights.is_empty() {
            return Err(Error::Geometry("zero-range configuration without sites".into()));
        }
        Ok(Self { geometry, heights })
    }

    /// Heights on a torus of `heights.len()` sites (a single site is allowed).
    pub fn on_torus(heights: Vec<u32>) -> Result<Self> {
        let g = match heights.len() {
            1 => LatticeGeometry::degenerate_torus(),
            n => LatticeGeometry::torus(n)?,
        };
        Self::new(g, heights)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn total_mass(&self) -> u64 {
        self.heights.iter().map(|&h| h as u64).sum()
    }

    pub fn classify(&self) -> Phase {
        classify_zero_range(self)
    }

    /// Pointwise order `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.heights.len() == other.heights.len()
            && self.heights.iter().zip(&other.heights).all(|(a, b)| a <= b)
    }
}

/// Ergodic iff every observed height is at least 1, frozen iff every observed
/// height is at most 1.
pub fn classify_zero_range(omega: &ZeroRangeConfig) -> Phase {
    let w = omega.geometry.window();
    let h = &omega.heights[w];
    phase_from_flags(h.contains(&0), h.iter().any(|&k| k >= 2))
}

pub fn particle_count(eta: &ExclusionConfig) -> usize {
    eta.particle_count()
}

pub fn hole_count(eta: &ExclusionConfig) -> usize {
    eta.hole_count()
}

pub fn total_mass(omega: &ZeroRangeConfig) -> u64 {
    omega.total_mass()
}

/// What a snapshot file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Exclusion,
    ZeroRange,
}

/// A configuration read back from a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub enum SnapshotData {
    Exclusion(ExclusionConfig),
    ZeroRange(ZeroRangeConfig),
}

/// Writes `site<TAB>value` lines preceded by `#`-prefixed header lines
/// carrying the kind, geometry and time stamp.
pub fn write_snapshot(kind: SnapshotKind, geometry: &LatticeGeometry, values: &[u32], time: f64) -> String {
    let mut out = String::with_capacity(values.len() * 8 + 64);
    let kind = match kind {
        SnapshotKind::Exclusion => "exclusion",
        SnapshotKind::ZeroRange => "zero-range",
    };
    let _ = writeln!(out, "# kind {kind}");
    let _ = writeln!(out, "# geometry {}", geometry.header());
    let _ = writeln!(out, "# time {time}");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", geometry.site_of(i), v);
    }
    out
}

pub fn exclusion_snapshot(eta: &ExclusionConfig, time: f64) -> String {
    let v: Vec<u32> = eta.occupancy.iter().map(|&b| b as u32).collect();
    write_snapshot(SnapshotKind::Exclusion, &eta.geometry, &v, time)
}

pub fn zero_range_snapshot(omega: &ZeroRangeConfig, time: f64) -> String {
    write_snapshot(SnapshotKind::ZeroRange, &omega.geometry, &omega.heights, time)
}

/// Parses a snapshot; returns the configuration and its time stamp.
pub fn read_snapshot(text: &str) -> Result<(SnapshotData, f64)> {
    let mut kind = None;
    let mut geometry = None;
    let mut time = 0.0;
    let mut values: Vec<(i64, u32)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix('#') {
            let h = h.trim();
            if let Some(k) = h.strip_prefix("kind") {
                kind = Some(match k.trim() {
                    "exclusion" => SnapshotKind::Exclusion,
                    "zero-range" => SnapshotKind::ZeroRange,
                    other => return Err(Error::Parse { line, msg: format!("unknown kind {other}") }),
                });
            } else if let Some(g) = h.strip_prefix("geometry") {
                geometry = Some(LatticeGeometry::parse_header(g, line)?);
            } else if let Some(t) = h.strip_prefix("time") {
                time = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse { line, msg: "bad time stamp".into() })?;
            }
            continue;
        }
        let mut it = l.split('\t');
        let (Some(s), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse { line, msg: "expected site<TAB>value".into() });
        };
        let s = s.trim().parse().map_err(|_| Error::Parse { line, msg: "bad site".into() })?;
        let v = v.trim().parse().map_err(|_| Error::Parse { line, msg: "bad value".into() })?;
        values.push((s, v));
    }
    let geometry = geometry.ok_or(Error::Parse { line: 0, msg: "missing geometry header".into() })?;
    let kind = kind.ok_or(Error::Parse { line: 0, msg: "missing kind header".into() })?;
    if values.len() != geometry.len() {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{} values for {} sites", values.len(), geometry.len()),
        });
    }
    let mut dense = vec![0u32; geometry.len()];
    for (k, (s, v)) in values.into_iter().enumerate() {
        if geometry.site_of(k) != s {
            return Err(Error::Parse { line: k + 4, msg: format!("site {s} out of order") });
        }
        dense[k] = v;
    }
    let data = match kind {
        SnapshotKind::Exclusion => {
            let bits = dense
                .into_iter()
                .map(|v| u8::try_from(v).ok().filter(|b| *b <= 1))
                .collect::<Option<Vec<u8>>>()
                .ok_or(Error::Parse { line: 0, msg: "occupancy must be 0 or 1".into() })?;
            SnapshotData::Exclusion(ExclusionConfig::from_bits(geometry, bits)?)
        }
        SnapshotKind::ZeroRange => SnapshotData::ZeroRange(ZeroRangeConfig::new(geometry, dense)?),
    };
    Ok((data, time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus_eta(n: usize, occupied: &[i64]) -> ExclusionConfig {
        ExclusionConfig::from_sites(LatticeGeometry::torus(n).unwrap(), occupied).unwrap()
    }

    #[test]
    fn figure_configurations_classify() {
        assert_eq!(torus_eta(8, &[0, 1, 3, 5, 6]).classify(), Phase::Ergodic);
        assert_eq!(torus_eta(8, &[2, 4, 7]).classify(), Phase::Frozen);
        assert_eq!(torus_eta(8, &[2, 3, 4]).classify(), Phase::Transient);

        let zr = |h: &[u32]| ZeroRangeConfig::on_torus(h.to_vec()).unwrap().classify();
        assert_eq!(zr(&[2, 1, 3, 1]), Phase::Ergodic);
        assert_eq!(zr(&[0, 1, 1, 0]), Phase::Frozen);
        assert_eq!(zr(&[0, 0, 2, 1]), Phase::Transient);
    }

    #[test]
    fn counts() {
        let eta = ExclusionConfig::empty(LatticeGeometry::torus(8).unwrap()).unwrap();
        assert_eq!((eta.particle_count(), eta.hole_count()), (0, 8));
        assert_eq!(torus_eta(8, &[0, 2, 3, 6, 7]).hole_count(), 3);
        assert_eq!(total_mass(&ZeroRangeConfig::on_torus(vec![2, 0, 3]).unwrap()), 5);
    }

    #[test]
    fn line_window_ignores_padding_edges() {
        // Window is sites 0..4; the double hole sits in the padding.
        let g = LatticeGeometry::line_window(0, 4, 2).unwrap();
        let eta = ExclusionConfig::from_sites(g, &[0, 1, 2, 3]).unwrap();
        assert_eq!(eta.classify(), Phase::Ergodic);
        let eta = ExclusionConfig::from_sites(g, &[0, 3, 5]).unwrap();
        assert_eq!(eta.classify(), Phase::Frozen);
    }

    #[test]
    fn invalid_geometries_are_rejected() {
        assert!(LatticeGeometry::torus(1).is_err());
        assert!(LatticeGeometry::line_window(3, 3, 0).is_err());
        assert!(ExclusionConfig::from_bits(LatticeGeometry::torus(3).unwrap(), vec![0, 2, 1]).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let g = LatticeGeometry::line_window(-3, 4, 2).unwrap();
        let eta = ExclusionConfig::from_sites(g, &[-5, -1, 0, 3, 5]).unwrap();
        let text = exclusion_snapshot(&eta, 0.25);
        assert!(text.contains("-5\t1"));
        let (back, t) = read_snapshot(&text).unwrap();
        assert_eq!(back, SnapshotData::Exclusion(eta));
        assert_eq!(t, 0.25);

        let omega = ZeroRangeConfig::on_torus(vec![2, 0, 3]).unwrap();
        let (back, _) = read_snapshot(&zero_range_snapshot(&omega, 1.0)).unwrap();
        assert_eq!(back, SnapshotData::ZeroRange(omega));
        assert!(read_snapshot("# kind exclusion\n0\t1\n").is_err());
    }

    // Ergodic needs at least ceil(N/2) particles and frozen at most floor(N/2).
    #[test]
    fn phase_particle_bounds_exhaustive() {
        for n in 2..=12usize {
            let g = LatticeGeometry::torus(n).unwrap();
            for mask in 0u32..(1 << n) {
                let bits = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                let eta = ExclusionConfig::from_bits(g, bits).unwrap();
                let k = eta.particle_count();
                match eta.classify() {
                    Phase::Ergodic => assert!(k >= n.div_ceil(2)),
                    Phase::Frozen => assert!(k <= n / 2),
                    Phase::Transient => {}
                }
            }
        }
    }

    proptest! {
        #[test]
        fn classification_is_exhaustive(bits in proptest::collection::vec(0u8..=1, 2..64)) {
            let g = LatticeGeometry::torus(bits.len()).unwrap();
            let eta = ExclusionConfig::from_bits(g, bits.clone()).unwrap();
            let sums: Vec<u8> = (0..bits.len()).map(|i| bits[i] + bits[(i + 1) % bits.len()]).collect();
            let ergodic = sums.iter().all(|&s| s >= 1);
            let frozen = sums.iter().all(|&s| s <= 1);
            let phase = eta.classify();
            prop_assert_eq!(phase == Phase::Ergodic, ergodic);
            prop_assert_eq!(phase == Phase::Frozen, frozen && !ergodic);
            prop_assert_eq!(phase == Phase::Transient, !ergodic && !frozen);
        }
    }
}
