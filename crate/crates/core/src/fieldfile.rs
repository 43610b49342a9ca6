//! Binary field files for ground states and propagation checkpoints.
//!
//! Layout, all little endian:
//! `b"SOLFIELD"`, `u32` version, `u32` dim, per axis `u64` points then `f64`
//! extent, `f64` sigma, omega, energy, residual, time, `u32` components
//! (1 real, 2 complex), then the samples (interleaved re/im when complex).

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, WaveField};
use crate::ground_state::GroundState;

const MAGIC: &[u8; 8] = b"SOLFIELD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldHeader {
    pub sigma: f64,
    pub omega: f64,
    pub energy: f64,
    pub residual: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub grid: Grid,
    pub header: FieldHeader,
    pub data: FieldData,
}

impl FieldFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        for a in 0..self.grid.dim() {
            b.extend_from_slice(&(self.grid.points()[a] as u64).to_le_bytes());
            b.extend_from_slice(&self.grid.lengths()[a].to_le_bytes());
        }
        let h = &self.header;
        for v in [h.sigma, h.omega, h.energy, h.residual, h.time] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        match &self.data {
            FieldData::Real(v) => {
                b.extend_from_slice(&1u32.to_le_bytes());
                v.iter().for_each(|x| b.extend_from_slice(&x.to_le_bytes()));
            }
            FieldData::Complex(v) => {
                b.extend_from_slice(&2u32.to_le_bytes());
                for z in v {
                    b.extend_from_slice(&z.re.to_le_bytes());
                    b.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::FieldFile("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::FieldFile(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        if dim == 0 || dim > 8 {
            return Err(Error::FieldFile(format!("implausible dimension {dim}")));
        }
        let mut points = Vec::with_capacity(dim);
        let mut lengths = Vec::with_capacity(dim);
        for _ in 0..dim {
            points.push(r.u64()? as usize);
            lengths.push(r.f64()?);
        }
        let grid = Grid::new(&lengths, &points).map_err(|e| Error::FieldFile(e.to_string()))?;
        let header = FieldHeader {
            sigma: r.f64()?,
            omega: r.f64()?,
            energy: r.f64()?,
            residual: r.f64()?,
            time: r.f64()?,
        };
        let n = grid.len();
        let data = match r.u32()? {
            1 => FieldData::Real((0..n).map(|_| r.f64()).collect::<Result<_>>()?),
            2 => FieldData::Complex(
                (0..n).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect::<Result<_>>()?,
            ),
            c => return Err(Error::FieldFile(format!("unknown component count {c}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::FieldFile(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(FieldFile { grid, header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        FieldFile::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::FieldFile("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_ground_state(path: &Path, gs: &GroundState) -> Result<()> {
    FieldFile {
        grid: gs.profile.grid.clone(),
        header: FieldHeader {
            sigma: gs.sigma,
            omega: gs.omega,
            energy: gs.energy,
            residual: gs.residual,
            time: 0.0,
        },
        data: FieldData::Real(gs.profile.values.clone()),
    }
    .write(path)
}

pub fn load_ground_state(path: &Path) -> Result<GroundState> {
    let f = FieldFile::read(path)?;
    let values = match f.data {
        FieldData::Real(v) => v,
        FieldData::Complex(_) => return Err(Error::FieldFile("ground state must be real".into())),
    };
    let profile = RealField::new(f.grid, values)?;
    let center = profile.density_barycenter();
    Ok(GroundState {
        profile,
        omega: f.header.omega,
        energy: f.header.energy,
        sigma: f.header.sigma,
        residual: f.header.residual,
        iterations: 0,
        center,
    })
}

/// Checkpoint of a propagated state; `header.time` is the field time.
pub fn save_checkpoint(path: &Path, psi: &WaveField, header: FieldHeader) -> Result<()> {
    FieldFile {
        grid: psi.grid.clone(),
        header: FieldHeader { time: psi.time, ..header },
        data: FieldData::Complex(psi.values.clone()),
    }
    .write(path)
}

pub fn load_checkpoint(path: &Path) -> Result<(WaveField, FieldHeader)> {
    let f = FieldFile::read(path)?;
    let values = match f.data {
        FieldData::Complex(v) => v,
        FieldData::Real(v) => v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
    };
    Ok((WaveField::new(f.grid, values, f.header.time)?, f.header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_round_trip() {
        let g = Grid::new(&[10.0, 6.0], &[8, 4]).unwrap();
        let u = RealField::from_fn(&g, |x| x[0] * 0.1 - x[1]);
        let gs = GroundState {
            profile: u.clone(),
            omega: -0.25,
            energy: -1.5,
            sigma: 2.0,
            residual: 3e-9,
            iterations: 7,
            center: u.density_barycenter(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gs.bin");
        save_ground_state(&p, &gs).unwrap();
        let back = load_ground_state(&p).unwrap();
        assert_eq!(back.profile, gs.profile);
        assert_eq!((back.omega, back.energy, back.sigma), (gs.omega, gs.energy, gs.sigma));

        let psi = WaveField::from_fn(&g, 1.25, |x| Complex64::new(x[0], -x[1]));
        let c = dir.path().join("ck.bin");
        save_checkpoint(&c, &psi, FieldHeader::default()).unwrap();
        let (back, h) = load_checkpoint(&c).unwrap();
        assert_eq!(back, psi);
        assert_eq!(h.time, 1.25);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let g = Grid::cubic(1, 1.0, 4).unwrap();
        let f = FieldFile { grid: g, header: FieldHeader::default(), data: FieldData::Real(vec![1.0; 4]) };
        let bytes = f.to_bytes();
        assert!(FieldFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(FieldFile::from_bytes(&bad), Err(Error::FieldFile(_))));
        assert_eq!(FieldFile::from_bytes(&bytes).unwrap(), f);
    }
}
