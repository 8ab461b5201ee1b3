//! Cell-averaged macroscopic fields on the unit torus or a bounded interval.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Profile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldGeometry {
    /// `[0, 1)` with periodic wrap.
    Torus,
    /// `[lo, hi]`, extended by constants outside.
    Interval { lo: f64, hi: f64 },
}

impl FieldGeometry {
    pub fn lo(&self) -> f64 {
        match *self {
            Self::Torus => 0.0,
            Self::Interval { lo, .. } => lo,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Self::Torus => 1.0,
            Self::Interval { lo, hi } => hi - lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub geometry: FieldGeometry,
    pub cells: Vec<f64>,
}

impl DensityField {
    pub fn new(geometry: FieldGeometry, cells: Vec<f64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Params("a field needs at least one cell".into()));
        }
        if let FieldGeometry::Interval { lo, hi } = geometry {
            if !(lo < hi) {
                return Err(Error::Params(format!("interval needs lo < hi, got [{lo}, {hi}]")));
            }
        }
        if cells.iter().any(|c| !c.is_finite()) {
            return Err(Error::Params("field has non-finite cells".into()));
        }
        Ok(Self { geometry, cells })
    }

    pub fn constant(geometry: FieldGeometry, n: usize, value: f64) -> Result<Self> {
        Self::new(geometry, vec![value; n])
    }

    /// Exact cell averages of a profile.
    pub fn from_profile(profile: &Profile, geometry: FieldGeometry, n: usize) -> Result<Self> {
        profile.validate_shape()?;
        let (lo, h) = (geometry.lo(), geometry.length() / n as f64);
        let cells = (0..n)
            .map(|i| {
                let a = lo + i as f64 * h;
                profile.integral(a, a + h) / h
            })
            .collect();
        Self::new(geometry, cells)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.geometry.length() / self.cells.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.geometry.lo() + (i as f64 + 0.5) * self.dx()
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.geometry.lo() + i as f64 * self.dx()
    }

    /// Piecewise-constant evaluation (periodic on the torus, constant
    /// extension on an interval).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.cells.len();
        let k = ((x - self.geometry.lo()) / self.dx()).floor();
        match self.geometry {
            FieldGeometry::Torus => self.cells[(k as i64).rem_euclid(n as i64) as usize],
            FieldGeometry::Interval { .. } => self.cells[(k.max(0.0) as usize).min(n - 1)],
        }
    }

    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() * self.dx()
    }

    pub fn min(&self) -> f64 {
        self.cells.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry || self.len() != other.len() {
            return Err(Error::Params("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.cells.iter().zip(&other.cells).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.dx())
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok((self.cells.iter().zip(&other.cells).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * self.dx()).sqrt())
    }

    /// L¹ distance restricted to cells whose centers lie in `[a, b]`.
    pub fn l1_distance_on(&self, other: &Self, a: f64, b: f64) -> Result<f64> {
        self.check_same(other)?;
        Ok((0..self.len())
            .filter(|&i| (a..=b).contains(&self.center(i)))
            .map(|i| (self.cells[i] - other.cells[i]).abs())
            .sum::<f64>()
            * self.dx())
    }

    /// `∫ f(x) · field(x) dx` by the midpoint rule.
    pub fn pair(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.len()).map(|i| self.cells[i] * f(self.center(i))).sum::<f64>() * self.dx()
    }

    /// Averages groups of `factor` neighbouring cells.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.len().is_multiple_of(factor) {
            return Err(Error::Params(format!("cannot coarsen {} cells by {factor}", self.len())));
        }
        let cells = self.cells.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect();
        Self::new(self.geometry, cells)
    }

    /// Plain-text format: header lines `# geometry ...`, `# dx ...`,
    /// `# time ...`, then one cell average per line.
    pub fn to_text(&self, time: f64) -> String {
        let mut s = String::new();
        match self.geometry {
            FieldGeometry::Torus => writeln!(s, "# geometry torus").unwrap(),
            FieldGeometry::Interval { lo, hi } => writeln!(s, "# geometry interval {lo} {hi}").unwrap(),
        }
        writeln!(s, "# dx {}", self.dx()).unwrap();
        writeln!(s, "# time {time}").unwrap();
        for c in &self.cells {
            writeln!(s, "{c}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<(Self, f64)> {
        let mut geometry = None;
        let mut time = 0.0;
        let mut cells = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let err = |msg: &str| Error::Parse { line: k + 1, msg: msg.to_string() };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let num = |i: usize| -> Result<f64> {
                    parts.get(i).ok_or_else(|| err("missing number"))?.parse().map_err(|_| err("bad number"))
                };
                match parts.first().copied() {
                    Some("geometry") => {
                        geometry = Some(match parts.get(1).copied() {
                            Some("torus") => FieldGeometry::Torus,
                            Some("interval") => FieldGeometry::Interval { lo: num(2)?, hi: num(3)? },
                            _ => return Err(err("unknown geometry")),
                        })
                    }
                    Some("time") => time = num(1)?,
                    _ => {}
                }
                continue;
            }
            cells.push(line.parse::<f64>().map_err(|_| err("bad cell value"))?);
        }
        let geometry = geometry.ok_or(Error::Parse { line: 1, msg: "missing geometry header".into() })?;
        Ok((Self::new(geometry, cells)?, time))
    }
}

/// A field sampled at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<DensityField>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityField {
        self.fields.last().expect("trajectory is never empty")
    }

    pub fn at(&self, t: f64) -> Result<&DensityField> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|k| &self.fields[k])
            .ok_or(Error::MissingObservation(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_cell_averages() {
        let p = Profile::torus_steps(vec![0.8, 0.3]).unwrap();
        let f = DensityField::from_profile(&p, FieldGeometry::Torus, 4).unwrap();
        assert_eq!(f.cells, vec![0.8, 0.8, 0.3, 0.3]);
        let f = DensityField::from_profile(&p, FieldGeometry::Torus, 3).unwrap();
        assert!((f.cells[1] - (0.8 * 0.5 + 0.3 * 0.5)).abs() < 1e-12);
        assert!((f.mass() - 0.55).abs() < 1e-15);
    }

    #[test]
    fn evaluation_and_distances() {
        let f = DensityField::new(FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.dx(), 0.5);
        assert_eq!(f.eval(-0.9), 1.0);
        assert_eq!(f.eval(-5.0), 1.0);
        assert_eq!(f.eval(0.1), 3.0);
        assert_eq!(f.eval(9.0), 4.0);
        let g = DensityField::constant(f.geometry, 4, 0.0).unwrap();
        assert_eq!(f.l1_distance(&g).unwrap(), 5.0);
        assert_eq!(f.l1_distance_on(&g, 0.0, 1.0).unwrap(), 3.5);
        let t = DensityField::new(FieldGeometry::Torus, vec![1.0, 2.0]).unwrap();
        assert_eq!(t.eval(-0.25), 2.0);
        assert_eq!(t.coarsen(2).unwrap().cells, vec![1.5]);
    }

    #[test]
    fn text_round_trip() {
        let f = DensityField::new(FieldGeometry::Interval { lo: -0.5, hi: 1.5 }, vec![0.25, 1.0 / 3.0, 7.0]).unwrap();
        let (g, t) = DensityField::from_text(&f.to_text(0.125)).unwrap();
        assert_eq!(f, g);
        assert_eq!(t, 0.125);
        assert!(DensityField::from_text("0.5\n").is_err());
    }
}
