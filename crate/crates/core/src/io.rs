//! JSON layouts. Matrices are nested row-major arrays of `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{Channel, ChoiMatrix};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &ComplexMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<ComplexMatrix> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let cols = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(Error::Parse(format!(
            "matrix row {i} has {} entries, expected {cols}",
            row.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(r, cols, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

/// `#[serde(with = "cmat")]` for a single matrix.
pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let rows = MatrixRows::deserialize(d)?;
        matrix_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "cmat_vec")]` for a list of matrices.
pub mod cmat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let all = Vec::<MatrixRows>::deserialize(d)?;
        all.iter()
            .map(|rows| matrix_from_rows(rows).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `{"d": int, "kraus": [matrix, ...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d: usize,
    pub kraus: Vec<MatrixRows>,
}

impl ChannelFile {
    pub fn from_channel(ch: &Channel) -> Self {
        ChannelFile {
            d: ch.dim(),
            kraus: ch.kraus().iter().map(matrix_to_rows).collect(),
        }
    }

    pub fn into_channel(self) -> Result<Channel> {
        if self.kraus.is_empty() {
            return Err(Error::Parse("field `kraus`: empty Kraus list".into()));
        }
        let mut ops = Vec::with_capacity(self.kraus.len());
        for (k, rows) in self.kraus.iter().enumerate() {
            let m = matrix_from_rows(rows)
                .map_err(|e| Error::Parse(format!("field `kraus[{k}]`: {e}")))?;
            if m.shape() != (self.d, self.d) {
                return Err(Error::Parse(format!(
                    "field `kraus[{k}]`: shape {:?} does not match d = {}",
                    m.shape(),
                    self.d
                )));
            }
            ops.push(m);
        }
        Channel::new(ops)
    }
}

/// `{"d_in": int, "d_out": int, "matrix": matrix, "normalized": bool}`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiFile {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: MatrixRows,
    pub normalized: bool,
}

impl ChoiFile {
    pub fn from_choi(choi: &ChoiMatrix) -> Self {
        ChoiFile {
            d_in: choi.d_in,
            d_out: choi.d_out,
            matrix: matrix_to_rows(&choi.matrix),
            normalized: choi.normalized,
        }
    }

    pub fn into_choi(self) -> Result<ChoiMatrix> {
        let matrix = matrix_from_rows(&self.matrix)
            .map_err(|e| Error::Parse(format!("field `matrix`: {e}")))?;
        let n = self.d_in * self.d_out;
        if matrix.shape() != (n, n) {
            return Err(Error::Parse(format!(
                "field `matrix`: shape {:?} does not match d_in·d_out = {n}",
                matrix.shape()
            )));
        }
        Ok(ChoiMatrix {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix,
            normalized: self.normalized,
        })
    }
}

pub fn channel_to_json(ch: &Channel) -> String {
    serde_json::to_string(&ChannelFile::from_channel(ch)).expect("channel serializes")
}

pub fn channel_from_json(text: &str) -> Result<Channel> {
    let file: ChannelFile = serde_json::from_str(text)?;
    file.into_channel()
}

pub fn choi_from_json(text: &str) -> Result<ChoiMatrix> {
    let file: ChoiFile = serde_json::from_str(text)?;
    file.into_choi()
}
