//! Sampled functionals `t -> g(t)` on grids of log-coordinates `u = ln t`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

/// Strictly increasing, finite log-coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("Grid", "empty grid"));
        }
        if points.iter().any(|u| !u.is_finite()) {
            return Err(Error::invalid("Grid", "grid points must be finite"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("Grid", "grid points must strictly increase"));
        }
        Ok(Grid(points))
    }

    /// `u_min * 10^(j / points_per_decade)` for `j = 0, 1, ...`, ending exactly at `u_max`.
    pub fn geometric(u_min: f64, u_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(u_min > 0.0 && u_min < u_max && u_max.is_finite()) {
            return Err(Error::invalid(
                "Grid::geometric",
                format!("need 0 < u_min < u_max < inf, got {u_min}:{u_max}"),
            ));
        }
        if points_per_decade < 4 {
            return Err(Error::invalid("Grid::geometric", "at least 4 points per decade"));
        }
        let decades = (u_max / u_min).log10();
        let n = (decades * points_per_decade as f64).ceil() as usize;
        let mut pts: Vec<f64> = (0..n)
            .map(|j| u_min * 10f64.powf(j as f64 / points_per_decade as f64))
            .take_while(|&u| u < u_max)
            .collect();
        pts.push(u_max);
        Grid::from_points(pts)
    }

    /// `n + 1` equally spaced points from `a` to `b`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || n == 0 {
            return Err(Error::invalid("Grid::uniform", "need a < b and n >= 1"));
        }
        let h = (b - a) / n as f64;
        let mut pts: Vec<f64> = (0..n).map(|j| a + j as f64 * h).collect();
        pts.push(b);
        Grid::from_points(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("grid is nonempty")
    }
}

/// `umin:umax:ppd`
impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, p] = parts.as_slice() else {
            return Err(Error::invalid("Grid", format!("expected umin:umax:ppd, got `{s}`")));
        };
        let bad = |what: &str| Error::invalid("Grid", format!("bad {what} in `{s}`"));
        let a: f64 = a.parse().map_err(|_| bad("umin"))?;
        let b: f64 = b.parse().map_err(|_| bad("umax"))?;
        let p: usize = p.parse().map_err(|_| bad("points per decade"))?;
        Grid::geometric(a, b, p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSeries {
    pub meta: String,
    pub u: Vec<f64>,
    pub value: Vec<f64>,
}

impl WindowSeries {
    pub fn new(meta: impl Into<String>, u: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        let meta = meta.into();
        if u.len() != value.len() {
            return Err(Error::invalid("WindowSeries", "grid and values differ in length"));
        }
        if u.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("WindowSeries", "grid must strictly increase"));
        }
        if let Some(i) = value.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                op: "WindowSeries",
                detail: format!("{meta}: non-finite value at u = {}", u[i]),
            });
        }
        Ok(WindowSeries { meta, u, value })
    }

    pub fn from_fn(meta: impl Into<String>, grid: &Grid, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let value = grid.points().iter().map(|&u| f(u)).collect::<Result<Vec<_>>>()?;
        WindowSeries::new(meta, grid.points().to_vec(), value)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.value.last().copied()
    }

    /// Pointwise difference on a shared grid.
    pub fn minus(&self, other: &WindowSeries, meta: impl Into<String>) -> Result<WindowSeries> {
        if self.u != other.u {
            return Err(Error::invalid("WindowSeries::minus", "series live on different grids"));
        }
        let value = self.value.iter().zip(&other.value).map(|(a, b)| a - b).collect();
        WindowSeries::new(meta, self.u.clone(), value)
    }

    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, u: f64) -> Option<f64> {
        let (first, last) = (*self.u.first()?, *self.u.last()?);
        if u < first || u > last {
            return None;
        }
        let i = self.u.partition_point(|&x| x <= u);
        if i == self.u.len() {
            return self.value.last().copied();
        }
        let (u0, u1) = (self.u[i - 1], self.u[i]);
        let (v0, v1) = (self.value[i - 1], self.value[i]);
        Some(v0 + (v1 - v0) * (u - u0) / (u1 - u0))
    }

    /// Smallest and largest value over the last `fraction` of the grid points.
    pub fn tail_envelope(&self, fraction: f64) -> (f64, f64) {
        let skip = ((1.0 - fraction.clamp(0.0, 1.0)) * self.len() as f64) as usize;
        self.value
            .iter()
            .skip(skip.min(self.len().saturating_sub(1)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDocument {
    pub schema: String,
    pub series: Vec<WindowSeries>,
}

impl SeriesDocument {
    pub fn new(series: Vec<WindowSeries>) -> Self {
        SeriesDocument {
            schema: SCHEMA_VERSION.to_string(),
            series,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("series serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SeriesDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::Parse {
                line: 0,
                reason: format!("unsupported schema `{}`", doc.schema),
            });
        }
        doc.series
            .into_iter()
            .map(|s| WindowSeries::new(s.meta, s.u, s.value))
            .collect::<Result<Vec<_>>>()
            .map(SeriesDocument::new)
    }

    /// One block per series: `# meta` line, `u,value` header, rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.series {
            writeln!(out, "# {}", s.meta).unwrap();
            out.push_str("u,value\n");
            for (u, v) in s.u.iter().zip(&s.value) {
                writeln!(out, "{u:?},{v:?}").unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut series = Vec::new();
        let mut current: Option<(String, Vec<f64>, Vec<f64>)> = None;
        for (i, line) in text.lines().enumerate() {
            let err = |reason: &str| Error::Parse {
                line: i + 1,
                reason: reason.to_string(),
            };
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some((m, u, v)) = current.take() {
                    series.push(WindowSeries::new(m, u, v)?);
                }
                current = Some((meta.to_string(), Vec::new(), Vec::new()));
            } else if line == "u,value" || line.is_empty() {
                continue;
            } else {
                let (_, us, vs) = current.as_mut().ok_or_else(|| err("row before any `# meta` line"))?;
                let (a, b) = line.split_once(',').ok_or_else(|| err("expected `u,value`"))?;
                us.push(a.trim().parse().map_err(|_| err("bad u"))?);
                vs.push(b.trim().parse().map_err(|_| err("bad value"))?);
            }
        }
        if let Some((m, u, v)) = current {
            series.push(WindowSeries::new(m, u, v)?);
        }
        Ok(SeriesDocument::new(series))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_endpoints() {
        let g = Grid::geometric(1.0, 1e4, 64).unwrap();
        assert_eq!(g.points()[0], 1.0);
        assert_eq!(g.last(), 1e4);
        assert_eq!(g.len(), 4 * 64 + 1);
        assert!(Grid::geometric(0.0, 1.0, 64).is_err());
        assert!(Grid::geometric(1.0, 10.0, 3).is_err());
    }

    #[test]
    fn parse_grid_spec() {
        let g: Grid = "1:100:8".parse().unwrap();
        assert_eq!(g.len(), 17);
        assert!("1:100".parse::<Grid>().is_err());
        assert!("5:1:8".parse::<Grid>().is_err());
    }

    #[test]
    fn series_validation() {
        assert!(WindowSeries::new("x", vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(matches!(
            WindowSeries::new("x", vec![1.0], vec![f64::NAN]),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn json_and_csv_round_trip() {
        let a = WindowSeries::new("first, with comma", vec![0.5, 1.0, 2.0], vec![1.0 / 3.0, 2.0, -1e-300]).unwrap();
        let b = WindowSeries::new("second", vec![1.0], vec![7.0]).unwrap();
        let doc = SeriesDocument::new(vec![a, b]);
        assert_eq!(SeriesDocument::from_json(&doc.to_json()).unwrap(), doc);
        assert_eq!(SeriesDocument::from_csv(&doc.to_csv()).unwrap(), doc);
        assert!(doc.to_json().contains("\"schema\": \"1\""));
    }

    #[test]
    fn interpolation() {
        let s = WindowSeries::new("lin", vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 5.0]).unwrap();
        assert_eq!(s.interpolate(2.0), Some(3.0));
        assert_eq!(s.interpolate(3.0), Some(5.0));
        assert_eq!(s.interpolate(3.5), None);
    }
}
