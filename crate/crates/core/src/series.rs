//! Time-major feature matrices and the binary feature cache format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic  "BSFC"
//! u32    version (1)
//! u32    T (rows)
//! u32    D (columns)
//! u32    dim_meaning (0 mel, 1 mfcc, 2 encoded, 3 random-projected, 4 summary)
//! u32    frame_hop in samples
//! f32    T*D values, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::binio::{check_version, write_atomic, LeReader, LeWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"BSFC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DimMeaning {
    Mel,
    Mfcc,
    Encoded,
    RandomProjected,
    Summary,
}

impl DimMeaning {
    fn code(self) -> u32 {
        match self {
            DimMeaning::Mel => 0,
            DimMeaning::Mfcc => 1,
            DimMeaning::Encoded => 2,
            DimMeaning::RandomProjected => 3,
            DimMeaning::Summary => 4,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        Ok(match c {
            0 => DimMeaning::Mel,
            1 => DimMeaning::Mfcc,
            2 => DimMeaning::Encoded,
            3 => DimMeaning::RandomProjected,
            4 => DimMeaning::Summary,
            other => return Err(Error::Format(format!("unknown dim_meaning code {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    /// T×D, one row per frame.
    pub values: Array2<f64>,
    pub meaning: DimMeaning,
    /// Samples between consecutive rows.
    pub frame_hop: u32,
}

impl FeatureSeries {
    pub fn new(values: Array2<f64>, meaning: DimMeaning, frame_hop: u32) -> Self {
        FeatureSeries {
            values,
            meaning,
            frame_hop,
        }
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.values.row(t)
    }

    /// Contiguous frame range `[start, end)` as a new series.
    pub fn slice_frames(&self, start: usize, end: usize) -> FeatureSeries {
        FeatureSeries {
            values: self.values.slice(ndarray::s![start..end, ..]).to_owned(),
            meaning: self.meaning,
            frame_hop: self.frame_hop,
        }
    }

    /// Rounds every value through `f32`, the precision of the cache format.
    /// Caching stages call this on fresh results so that cold and warm runs
    /// see identical numbers.
    pub fn quantized(mut self) -> Self {
        self.values.mapv_inplace(|v| v as f32 as f64);
        self
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let rows = u32::try_from(self.frames()).map_err(|_| Error::Format("too many rows".into()))?;
        let cols = u32::try_from(self.dim()).map_err(|_| Error::Format("too many columns".into()))?;
        let mut w = LeWriter::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u32(rows)?;
        w.u32(cols)?;
        w.u32(self.meaning.code())?;
        w.u32(self.frame_hop)?;
        for row in self.values.axis_iter(Axis(0)) {
            for &v in row {
                w.f32(v as f32)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader::new(r);
        r.magic(MAGIC)?;
        check_version(r.u32()?, VERSION, "feature cache")?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let meaning = DimMeaning::from_code(r.u32()?)?;
        let frame_hop = r.u32()?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(r.f32()? as f64);
        }
        r.expect_eof()?;
        let values = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))?;
        Ok(FeatureSeries::new(values, meaning, frame_hop))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 4 * self.values.len());
        self.write_to(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}
