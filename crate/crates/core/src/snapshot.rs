//! Field snapshots: one JSON header line followed by CSV rows `i,j,r,z,value`.
//!
//! Floats are written in shortest round-trip form, so reading a snapshot
//! back reproduces every value bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AxiGrid, ScalarField, VorticityField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub grid: AxiGrid,
    pub field: String,
    pub time: f64,
    /// Present for vorticity fields.
    pub strength_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub values: ScalarField,
}

const CSV_HEADER: &str = "i,j,r,z,value";

impl Snapshot {
    pub fn scalar(name: &str, time: f64, field: &ScalarField) -> Self {
        Snapshot {
            header: SnapshotHeader {
                grid: *field.grid(),
                field: name.to_string(),
                time,
                strength_cap: None,
            },
            values: field.clone(),
        }
    }

    pub fn vorticity(name: &str, time: f64, xi: &VorticityField) -> Self {
        Snapshot {
            header: SnapshotHeader {
                grid: *xi.grid(),
                field: name.to_string(),
                time,
                strength_cap: Some(xi.cap()),
            },
            values: xi.field().clone(),
        }
    }

    /// The stored field as vorticity; fails without a strength cap.
    pub fn to_vorticity(&self) -> Result<VorticityField> {
        let cap = self.header.strength_cap.ok_or_else(|| {
            Error::Format(format!("snapshot '{}' has no strength cap", self.header.field))
        })?;
        VorticityField::new(self.values.clone(), cap)
    }

    pub fn to_string_repr(&self) -> Result<String> {
        let mut s = serde_json::to_string(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        s.push_str(CSV_HEADER);
        s.push('\n');
        let g = &self.header.grid;
        for i in 0..g.nr {
            for j in 0..g.nz {
                let _ = writeln!(s, "{i},{j},{:?},{:?},{:?}", g.r(i), g.z(j), self.values.get(i, j));
            }
        }
        Ok(s)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_string_repr()?.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing {what}")))?
                .map_err(Error::from)
        };
        let header: SnapshotHeader =
            serde_json::from_str(&next("JSON header")?).map_err(|e| Error::Format(e.to_string()))?;
        let g = AxiGrid::new(
            header.grid.nr,
            header.grid.nz,
            header.grid.r_max,
            header.grid.z_min,
            header.grid.z_max,
        )?;
        if next("CSV header")?.trim() != CSV_HEADER {
            return Err(Error::Format(format!("expected CSV header '{CSV_HEADER}'")));
        }
        let mut values = vec![f64::NAN; g.len()];
        let mut seen = vec![false; g.len()];
        for n in 0..g.len() {
            let line = next(&format!("row {n}"))?;
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Format(format!("row {n}: expected 5 columns, got {}", cols.len())));
            }
            let parse_idx = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::Format(format!("row {n}: bad index '{s}'")))
            };
            let (i, j) = (parse_idx(cols[0])?, parse_idx(cols[1])?);
            if i >= g.nr || j >= g.nz {
                return Err(Error::Format(format!("row {n}: node ({i}, {j}) outside the grid")));
            }
            let v: f64 = cols[4]
                .parse()
                .map_err(|_| Error::Format(format!("row {n}: bad value '{}'", cols[4])))?;
            let k = g.idx(i, j);
            if seen[k] {
                return Err(Error::Format(format!("row {n}: duplicate node ({i}, {j})")));
            }
            seen[k] = true;
            values[k] = v;
        }
        let values = ScalarField::new(g, values)?;
        Ok(Snapshot { header, values })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Snapshot::read_from(std::fs::File::open(path)?)
    }
}
