//! Tabulated symbols: per-ν values on a tensor grid in x, multilinear in between.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub nu: Vec<usize>,
    /// Grid values, row-major with the last axis varying fastest.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDocument {
    /// Strictly increasing node coordinates, one list per dimension.
    pub axes: Vec<Vec<f64>>,
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSymbol {
    axes: Vec<Vec<f64>>,
    values: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl TabulatedSymbol {
    pub fn from_document(doc: &TableDocument, dim: usize) -> Result<Self> {
        if doc.axes.len() != dim {
            return Err(Error::SymbolFile(format!(
                "table has {} axes but dim is {dim}",
                doc.axes.len()
            )));
        }
        for (j, axis) in doc.axes.iter().enumerate() {
            if axis.is_empty() || !axis.iter().all(|v| v.is_finite()) {
                return Err(Error::SymbolFile(format!("axis {} is empty or non-finite", j + 1)));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::SymbolFile(format!(
                    "axis {} is not strictly increasing",
                    j + 1
                )));
            }
        }
        let grid_len: usize = doc.axes.iter().map(Vec::len).product();
        let mut values = BTreeMap::new();
        for entry in &doc.entries {
            if entry.nu.len() != dim {
                return Err(Error::SymbolFile(format!(
                    "table entry nu={:?} has wrong dimension",
                    entry.nu
                )));
            }
            if entry.values.len() != grid_len {
                return Err(Error::SymbolFile(format!(
                    "table entry nu={:?} has {} values, grid needs {grid_len}",
                    entry.nu,
                    entry.values.len()
                )));
            }
            if !entry.values.iter().all(|v| v.is_finite()) {
                return Err(Error::SymbolFile(format!(
                    "table entry nu={:?} has non-finite values",
                    entry.nu
                )));
            }
            if values.insert(entry.nu.clone(), entry.values.clone()).is_some() {
                return Err(Error::SymbolFile(format!("duplicate table entry nu={:?}", entry.nu)));
            }
        }
        Ok(Self {
            axes: doc.axes.clone(),
            values,
        })
    }

    pub fn to_document(&self) -> TableDocument {
        TableDocument {
            axes: self.axes.clone(),
            entries: self
                .values
                .iter()
                .map(|(nu, values)| TableEntry {
                    nu: nu.clone(),
                    values: values.clone(),
                })
                .collect(),
        }
    }

    /// True if every listed ν has a grid of identical values.
    pub fn is_x_independent(&self) -> bool {
        self.values.values().all(|v| v.iter().all(|&a| a == v[0]))
    }

    pub fn constant_value(&self, nu: &[usize]) -> std::result::Result<f64, String> {
        self.values
            .get(nu)
            .map(|v| v[0])
            .ok_or_else(|| format!("nu={nu:?} is not listed in the table"))
    }

    pub fn eval(&self, x: &[f64], nu: &[usize]) -> std::result::Result<f64, String> {
        let grid = self
            .values
            .get(nu)
            .ok_or_else(|| format!("nu={nu:?} is not listed in the table"))?;
        // per-axis bracketing cell and fractional position
        let mut cells = Vec::with_capacity(self.axes.len());
        for (j, (axis, &xj)) in self.axes.iter().zip(x).enumerate() {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(lo..=hi).contains(&xj) {
                return Err(format!(
                    "x{}={xj} outside table range [{lo}, {hi}]",
                    j + 1
                ));
            }
            if axis.len() == 1 {
                cells.push((0usize, 0.0));
                continue;
            }
            let i = axis.partition_point(|&a| a <= xj).clamp(1, axis.len() - 1) - 1;
            let t = (xj - axis[i]) / (axis[i + 1] - axis[i]);
            cells.push((i, t));
        }
        let dim = self.axes.len();
        let mut strides = vec![1usize; dim];
        for j in (0..dim.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.axes[j + 1].len();
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut offset = 0;
            for j in 0..dim {
                let (i, t) = cells[j];
                let upper = (corner >> j) & 1 == 1;
                if upper {
                    if self.axes[j].len() == 1 {
                        weight = 0.0;
                        break;
                    }
                    weight *= t;
                    offset += (i + 1) * strides[j];
                } else {
                    weight *= 1.0 - t;
                    offset += i * strides[j];
                }
            }
            if weight != 0.0 {
                acc += weight * grid[offset];
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_1d() -> TabulatedSymbol {
        let doc = TableDocument {
            axes: vec![vec![-1.0, 0.0, 2.0]],
            entries: vec![
                TableEntry { nu: vec![0], values: vec![1.0, 3.0, 7.0] },
                TableEntry { nu: vec![1], values: vec![2.0, 2.0, 2.0] },
            ],
        };
        TabulatedSymbol::from_document(&doc, 1).unwrap()
    }

    #[test]
    fn linear_interpolation() {
        let t = table_1d();
        assert_eq!(t.eval(&[-1.0], &[0]).unwrap(), 1.0);
        assert_eq!(t.eval(&[-0.5], &[0]).unwrap(), 2.0);
        assert_eq!(t.eval(&[1.0], &[0]).unwrap(), 5.0);
        assert_eq!(t.eval(&[2.0], &[0]).unwrap(), 7.0);
    }

    #[test]
    fn no_extrapolation_or_zero_fill() {
        let t = table_1d();
        assert!(t.eval(&[2.5], &[0]).is_err());
        assert!(t.eval(&[0.0], &[2]).is_err());
        assert!(!t.is_x_independent());
    }

    #[test]
    fn bilinear() {
        let doc = TableDocument {
            axes: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            entries: vec![TableEntry { nu: vec![0, 0], values: vec![0.0, 1.0, 2.0, 3.0] }],
        };
        let t = TabulatedSymbol::from_document(&doc, 2).unwrap();
        // f(x, y) = 2x + y
        assert!((t.eval(&[0.25, 0.5], &[0, 0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let bad = TableDocument {
            axes: vec![vec![0.0, 0.0]],
            entries: vec![],
        };
        assert!(TabulatedSymbol::from_document(&bad, 1).is_err());
        let bad = TableDocument {
            axes: vec![vec![0.0, 1.0]],
            entries: vec![TableEntry { nu: vec![0], values: vec![1.0] }],
        };
        assert!(TabulatedSymbol::from_document(&bad, 1).is_err());
    }
}
