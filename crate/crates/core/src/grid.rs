//! Uniformly sampled fields.
//!
//! Samples are stored in C order: the last axis varies fastest. Values
//! between nodes come from multilinear interpolation and derivatives from
//! central differences, so accuracy is `O(h²)` for orders up to two and
//! `O(h²)` with a larger constant for orders three and four.
//!
//! # CSV layout
//!
//! ```text
//! origin,spacing,counts
//! -5;-5,0.05;0.05,201;201
//! 1.0,1.0,...          <- samples, comma or newline separated, C order
//! ```
//!
//! The second row holds the per-axis origin, spacing and count, each as a
//! `;`-separated list. Every following value is a sample.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Minimum nodes per axis; five-point stencils for fourth derivatives need
/// this much room around an interior point.
pub const MIN_SAMPLES_PER_AXIS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridSpec {
    /// Samples `f` on the grid described by `origin`, `spacing` and `counts`.
    pub fn sample<F>(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = origin.len();
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut index = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for _ in 0..total {
            for k in 0..dim {
                x[k] = origin[k] + index[k] as f64 * spacing[k];
            }
            values.push(f(&x));
            for k in (0..dim).rev() {
                index[k] += 1;
                if index[k] < counts[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        GridSpec {
            origin,
            spacing,
            counts,
            values,
        }
    }

    /// Builds a spec from explicit node coordinates per axis, rejecting
    /// non-uniform spacing.
    pub fn from_nodes(axes: &[Vec<f64>], values: Vec<f64>) -> Result<Self> {
        let mut origin = Vec::new();
        let mut spacing = Vec::new();
        let mut counts = Vec::new();
        for (axis, nodes) in axes.iter().enumerate() {
            if nodes.len() < 2 {
                return Err(Error::InsufficientSamples {
                    axis,
                    count: nodes.len(),
                    min: MIN_SAMPLES_PER_AXIS,
                });
            }
            let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
            let uniform = nodes
                .windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
            if !uniform || h <= 0.0 {
                return Err(Error::NonUniformSpacing { axis });
            }
            origin.push(nodes[0]);
            spacing.push(h);
            counts.push(nodes.len());
        }
        let spec = GridSpec {
            origin,
            spacing,
            counts,
            values,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.origin.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if self.spacing.len() != dim || self.counts.len() != dim {
            return Err(Error::MalformedGrid(
                "origin, spacing and counts must have the same length".into(),
            ));
        }
        for (axis, &h) in self.spacing.iter().enumerate() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonUniformSpacing { axis });
            }
        }
        for (axis, &count) in self.counts.iter().enumerate() {
            if count < MIN_SAMPLES_PER_AXIS {
                return Err(Error::InsufficientSamples {
                    axis,
                    count,
                    min: MIN_SAMPLES_PER_AXIS,
                });
            }
        }
        let total: usize = self.counts.iter().product();
        if self.values.len() != total {
            return Err(Error::MalformedGrid(format!(
                "expected {total} samples, found {}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedGrid("samples must be finite".into()));
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedGrid("empty input".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns != ["origin", "spacing", "counts"] {
            return Err(Error::MalformedGrid(format!(
                "header must be \"origin,spacing,counts\", found {header:?}"
            )));
        }
        let params = lines
            .next()
            .ok_or_else(|| Error::MalformedGrid("missing parameter row".into()))?;
        let fields: Vec<&str> = params.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::MalformedGrid(
                "parameter row must have three columns".into(),
            ));
        }
        let origin = parse_list::<f64>(fields[0], "origin")?;
        let spacing = parse_list::<f64>(fields[1], "spacing")?;
        let counts = parse_list::<usize>(fields[2], "counts")?;
        let mut values = Vec::new();
        for line in lines {
            for item in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                values.push(item.parse::<f64>().map_err(|_| {
                    Error::MalformedGrid(format!("invalid sample {item:?}"))
                })?);
            }
        }
        let spec = GridSpec {
            origin,
            spacing,
            counts,
            values,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Writes the CSV layout; one line per run of the last axis.
    pub fn to_csv(&self) -> String {
        let join = |xs: Vec<String>| xs.join(";");
        let mut out = String::from("origin,spacing,counts\n");
        let _ = writeln!(
            out,
            "{},{},{}",
            join(self.origin.iter().map(|x| format!("{x:?}")).collect()),
            join(self.spacing.iter().map(|x| format!("{x:?}")).collect()),
            join(self.counts.iter().map(|x| x.to_string()).collect()),
        );
        let row = *self.counts.last().unwrap_or(&1);
        for chunk in self.values.chunks(row.max(1)) {
            let line: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(';')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::MalformedGrid(format!("invalid {what} entry {s:?}")))
        })
        .collect()
}

/// Validated grid with precomputed strides.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    spec: GridSpec,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.counts.len();
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * spec.counts[k + 1];
        }
        Ok(Grid { spec, strides })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.origin.len()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spec.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spec.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spec.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.spec.origin.clone()
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.spec.origin[k] + (self.spec.counts[k] - 1) as f64 * self.spec.spacing[k])
            .collect()
    }

    /// True when `x` lies within the sampled box shrunk by `margin[k]` per axis.
    pub fn inside(&self, x: &[f64], margin: &[f64]) -> bool {
        let upper = self.upper();
        (0..self.dim()).all(|k| {
            let slack = 1e-9 * self.spec.spacing[k];
            x[k] >= self.spec.origin[k] + margin[k] - slack && x[k] <= upper[k] - margin[k] + slack
        })
    }

    /// Multilinear interpolation; `None` outside the sampled box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let dim = self.dim();
        if !self.inside(x, &vec![0.0; dim]) {
            return None;
        }
        let mut base = 0usize;
        let mut frac = vec![0.0; dim];
        for k in 0..dim {
            let s = (x[k] - self.spec.origin[k]) / self.spec.spacing[k];
            let max_cell = self.spec.counts[k] - 2;
            let mut cell = s.floor().max(0.0) as usize;
            if cell > max_cell {
                cell = max_cell;
            }
            let mut f = s - cell as f64;
            // snap rounding noise so node-aligned stencils stay node-aligned
            if f.abs() < 1e-9 {
                f = 0.0;
            } else if (f - 1.0).abs() < 1e-9 {
                f = 1.0;
            }
            frac[k] = f;
            base += cell * self.strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut offset = 0usize;
            for k in 0..dim {
                if corner >> k & 1 == 1 {
                    weight *= frac[k];
                    offset += self.strides[k];
                } else {
                    weight *= 1.0 - frac[k];
                }
            }
            if weight != 0.0 {
                acc += weight * self.spec.values[base + offset];
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> GridSpec {
        GridSpec::sample(vec![-1.0, -2.0], vec![0.25, 0.5], vec![9, 9], |x| {
            3.0 * x[0] - x[1] + 2.0
        })
    }

    #[test]
    fn interpolation_is_exact_for_affine_samples() {
        let g = Grid::new(plane()).unwrap();
        let v = g.interpolate(&[0.1, 0.3]).unwrap();
        assert!((v - (0.3 - 0.3 + 2.0)).abs() < 1e-13);
        assert!(g.interpolate(&[1.5, 0.0]).is_none());
    }

    #[test]
    fn csv_round_trip() {
        let spec = plane();
        let parsed = GridSpec::parse_csv(&spec.to_csv()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn small_grids_are_rejected() {
        let spec = GridSpec::sample(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 5], |_| 0.0);
        assert!(matches!(
            spec.validate(),
            Err(Error::InsufficientSamples { count: 5, .. })
        ));
    }

    #[test]
    fn non_uniform_nodes_are_rejected() {
        let axis: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
        let values = vec![0.0; 81];
        assert_eq!(
            GridSpec::from_nodes(&[axis.clone(), axis], values),
            Err(Error::NonUniformSpacing { axis: 0 })
        );
    }

    #[test]
    fn malformed_csv() {
        assert!(GridSpec::parse_csv("a,b,c\n").is_err());
        assert!(GridSpec::parse_csv("origin,spacing,counts\n0;0,1;1,9;9\n1,2,3\n").is_err());
    }
}
