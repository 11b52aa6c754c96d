//! Partitioned LTI models
//!
//! ```text
//! dx/dt = A x + sum_j B_j u_j
//!   y_i = C_i x + sum_j D_ij u_j,   i = 1..v
//! ```
//!
//! Each control station `i` owns an input block `u_i` (columns of `B`) and an
//! output block `y_i` (rows of `C`). Models are immutable once validated.

use crate::error::{Error, Result};
use crate::linalg::{has_full_row_rank, hstack, shifted, to_complex};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::ops::Range;
use std::path::Path;

/// Relative rank tolerance for the PBH tests.
pub const DEFAULT_PBH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Station {
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationPartition {
    stations: Vec<Station>,
}

impl StationPartition {
    pub fn new(stations: Vec<Station>) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::Partition(format!(
                "at least 2 stations required, got {}",
                stations.len()
            )));
        }
        if let Some(pos) = stations.iter().position(|s| s.inputs == 0 || s.outputs == 0) {
            return Err(Error::Partition(format!(
                "station {} must have at least one input and one output",
                pos + 1
            )));
        }
        Ok(Self { stations })
    }

    /// Every station with one input and one output.
    pub fn scalar(v: usize) -> Result<Self> {
        Self::new(vec![Station { inputs: 1, outputs: 1 }; v])
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn total_inputs(&self) -> usize {
        self.stations.iter().map(|s| s.inputs).sum()
    }

    pub fn total_outputs(&self) -> usize {
        self.stations.iter().map(|s| s.outputs).sum()
    }

    pub fn blocks(&self) -> Vec<BlockIndex> {
        let mut col = 0;
        let mut row = 0;
        self.stations
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let b = BlockIndex {
                    station: k + 1,
                    inputs: col..col + s.inputs,
                    outputs: row..row + s.outputs,
                };
                col += s.inputs;
                row += s.outputs;
                b
            })
            .collect()
    }
}

/// Column range (into `B`) and row range (into `C`) of one station; `station`
/// is 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndex {
    pub station: usize,
    pub inputs: Range<usize>,
    pub outputs: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    name: String,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    partition: StationPartition,
    blocks: Vec<BlockIndex>,
}

impl SystemModel {
    /// Validates dimensions and finiteness. `d = None` means no feedthrough.
    pub fn new(
        name: impl Into<String>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: Option<DMatrix<f64>>,
        partition: StationPartition,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension {
                matrix: "A",
                detail: format!("must be square and non-empty, got {}x{}", a.nrows(), a.ncols()),
            });
        }
        let m = partition.total_inputs();
        let r = partition.total_outputs();
        if b.nrows() != n || b.ncols() != m {
            return Err(Error::Dimension {
                matrix: "B",
                detail: format!("expected {n}x{m} (stations declare {m} inputs), got {}x{}", b.nrows(), b.ncols()),
            });
        }
        if c.nrows() != r || c.ncols() != n {
            return Err(Error::Dimension {
                matrix: "C",
                detail: format!("expected {r}x{n} (stations declare {r} outputs), got {}x{}", c.nrows(), c.ncols()),
            });
        }
        let d = d.unwrap_or_else(|| DMatrix::zeros(r, m));
        if d.nrows() != r || d.ncols() != m {
            return Err(Error::Dimension {
                matrix: "D",
                detail: format!("expected {r}x{m}, got {}x{}", d.nrows(), d.ncols()),
            });
        }
        for (label, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            check_finite(label, mat)?;
        }
        let blocks = partition.blocks();
        Ok(Self {
            name: name.into(),
            a,
            b,
            c,
            d,
            partition,
            blocks,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn partition(&self) -> &StationPartition {
        &self.partition
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn station_count(&self) -> usize {
        self.partition.len()
    }

    pub fn station_blocks(&self) -> &[BlockIndex] {
        &self.blocks
    }

    /// `B_i` for 1-based station `i`.
    pub fn b_block(&self, station: usize) -> DMatrix<f64> {
        let cols = &self.blocks[station - 1].inputs;
        self.b.columns(cols.start, cols.len()).into_owned()
    }

    /// `C_i` for 1-based station `i`.
    pub fn c_block(&self, station: usize) -> DMatrix<f64> {
        let rows = &self.blocks[station - 1].outputs;
        self.c.rows(rows.start, rows.len()).into_owned()
    }

    /// `D_ij`: rows of output station `i`, columns of input station `j`.
    pub fn d_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let rows = &self.blocks[i - 1].outputs;
        let cols = &self.blocks[j - 1].inputs;
        self.d
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// Same partition and name, new `B`, `C`, `D`.
    pub fn with_io(&self, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.a.clone(),
            b,
            c,
            Some(d),
            self.partition.clone(),
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_model()
    }

    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json_str(&text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            name: self.name.clone(),
            stations: self.partition.stations().to_vec(),
            a: rows_of(&self.a),
            b: rows_of(&self.b),
            c: rows_of(&self.c),
            d: Some(rows_of(&self.d)),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }
}

fn check_finite(label: &'static str, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    matrix: label,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// On-disk model format: row-major nested arrays, station order = block order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    pub stations: Vec<Station>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
}

impl ModelDocument {
    pub fn into_model(self) -> Result<SystemModel> {
        let partition = StationPartition::new(self.stations)?;
        let n = self.a.len();
        let m = partition.total_inputs();
        let a = matrix_from_rows("A", &self.a, n)?;
        let b = matrix_from_rows("B", &self.b, m)?;
        let c = matrix_from_rows("C", &self.c, n)?;
        let d = self
            .d
            .as_ref()
            .map(|rows| matrix_from_rows("D", rows, m))
            .transpose()?;
        SystemModel::new(self.name, a, b, c, d, partition)
    }
}

/// Builds a matrix from row-major rows. `expected_cols` is only used when the
/// document has zero rows.
fn matrix_from_rows(label: &'static str, rows: &[Vec<f64>], expected_cols: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(expected_cols, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Dimension {
            matrix: label,
            detail: format!("row {} has {} entries, expected {}", bad, rows[bad].len(), ncols),
        });
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

/// PBH verdict for one eigenvalue.
#[derive(Clone, Debug, Serialize)]
pub struct ModeCheck {
    pub value: Complex64,
    pub controllable: bool,
    pub observable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CentralReport {
    pub modes: Vec<ModeCheck>,
}

impl CentralReport {
    pub fn all_ok(&self) -> bool {
        self.modes.iter().all(|m| m.controllable && m.observable)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for m in &self.modes {
            if !m.controllable {
                out.push(format!("mode {} is centrally uncontrollable", crate::fmt_complex(m.value)));
            }
            if !m.observable {
                out.push(format!("mode {} is centrally unobservable", crate::fmt_complex(m.value)));
            }
        }
        out
    }
}

/// PBH rank tests `rank[A - lI, B] = n` and `rank[A^T - lI, C^T] = n` at every
/// catalog eigenvalue.
pub fn central_check(model: &SystemModel, tol: f64) -> Result<CentralReport> {
    let a = to_complex(model.a());
    let b = to_complex(model.b());
    let ct = to_complex(&model.c().transpose());
    let at = a.transpose();
    let modes = crate::spectral::modes(model, crate::spectral::DEFAULT_CLUSTER_TOL)?;
    let mut out = Vec::with_capacity(modes.len());
    for mode in modes {
        let shift = shifted(&a, mode.value);
        let shift_t = shifted(&at, mode.value);
        let ctrl = hstack(&shift, &b);
        let obs = hstack(&shift_t, &ct);
        out.push(ModeCheck {
            value: mode.value,
            controllable: has_full_row_rank(&ctrl, tol)?,
            observable: has_full_row_rank(&obs, tol)?,
        });
    }
    Ok(CentralReport { modes: out })
}
