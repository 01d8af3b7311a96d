//! Binary checkpoints of spectral states.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `b"HYDROSTC"` |
//! | 4     | format version (`u32`, currently 1) |
//! | 4     | state kind (`u32`, see [`StateKind`]) |
//! | 4     | number of axes `d` (`u32`) |
//! | 8·d   | axis sizes (`u32`) followed by axis roles (`u32`, 0 horizontal, 1 vertical) |
//! | 4     | number of components `c` (`u32`) |
//! | 8     | time (`f64`) |
//! | 8     | ε (`f64`, NaN when absent) |
//! | 16·c·N | coefficients, component-major, each as `(re, im)` `f64` pairs in grid order |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nse::{DifferenceState, ScaledState};
use crate::pe::HydroState;
use crate::spectral::{AxisRole, Grid, SpectralField};

pub const MAGIC: &[u8; 8] = b"HYDROSTC";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum StateKind {
    /// `(v1, v2, w)` of the primitive equations.
    Hydro = 0,
    /// `(v1, v2, εw)` of the scaled equations.
    Scaled = 1,
    /// `(V1, V2, εW)`.
    Difference = 2,
    /// Anything else.
    Raw = 3,
}

impl StateKind {
    fn from_u32(x: u32) -> Result<Self> {
        Ok(match x {
            0 => Self::Hydro,
            1 => Self::Scaled,
            2 => Self::Difference,
            3 => Self::Raw,
            _ => return Err(Error::Format(format!("unknown state kind {x}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub kind: StateKind,
    pub time: f64,
    pub epsilon: Option<f64>,
    pub fields: Vec<SpectralField>,
}

impl From<&HydroState> for Checkpoint {
    fn from(s: &HydroState) -> Self {
        Self {
            kind: StateKind::Hydro,
            time: s.time,
            epsilon: None,
            fields: vec![s.v[0].clone(), s.v[1].clone(), s.w.clone()],
        }
    }
}

impl From<&ScaledState> for Checkpoint {
    fn from(s: &ScaledState) -> Self {
        Self {
            kind: StateKind::Scaled,
            time: s.time,
            epsilon: Some(s.epsilon),
            fields: s.u.to_vec(),
        }
    }
}

impl From<&DifferenceState> for Checkpoint {
    fn from(s: &DifferenceState) -> Self {
        Self {
            kind: StateKind::Difference,
            time: s.time,
            epsilon: Some(s.epsilon),
            fields: vec![s.v[0].clone(), s.v[1].clone(), s.ew.clone()],
        }
    }
}

impl Checkpoint {
    fn three(&self, want: StateKind) -> Result<[SpectralField; 3]> {
        if self.kind != want || self.fields.len() != 3 {
            return Err(Error::Format(format!(
                "expected a {want:?} checkpoint with 3 fields, found {:?} with {}",
                self.kind,
                self.fields.len()
            )));
        }
        Ok([self.fields[0].clone(), self.fields[1].clone(), self.fields[2].clone()])
    }

    pub fn into_hydro(self) -> Result<HydroState> {
        let [a, b, c] = self.three(StateKind::Hydro)?;
        Ok(HydroState {
            v: [a, b],
            w: c,
            time: self.time,
        })
    }

    pub fn into_scaled(self) -> Result<ScaledState> {
        let u = self.three(StateKind::Scaled)?;
        Ok(ScaledState {
            u,
            epsilon: self.eps_required()?,
            time: self.time,
        })
    }

    pub fn into_difference(self) -> Result<DifferenceState> {
        let [a, b, c] = self.three(StateKind::Difference)?;
        Ok(DifferenceState {
            v: [a, b],
            ew: c,
            epsilon: self.eps_required()?,
            time: self.time,
        })
    }

    fn eps_required(&self) -> Result<f64> {
        self.epsilon
            .ok_or_else(|| Error::Format("checkpoint carries no epsilon".into()))
    }
}

fn put_u32<W: Write>(w: &mut W, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_checkpoint<W: Write>(mut w: W, c: &Checkpoint) -> Result<()> {
    let first = c
        .fields
        .first()
        .ok_or_else(|| Error::Format("checkpoint without fields".into()))?;
    let grid = first.grid();
    if c.fields.iter().any(|f| f.grid() != grid) {
        return Err(Error::ShapeMismatch("checkpoint fields on different grids".into()));
    }
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u32(&mut w, c.kind as u32)?;
    put_u32(&mut w, grid.ndim() as u32)?;
    for &n in grid.dims() {
        put_u32(&mut w, n as u32)?;
    }
    for r in grid.roles() {
        put_u32(&mut w, matches!(r, AxisRole::Vertical) as u32)?;
    }
    put_u32(&mut w, c.fields.len() as u32)?;
    put_f64(&mut w, c.time)?;
    put_f64(&mut w, c.epsilon.unwrap_or(f64::NAN))?;
    for f in &c.fields {
        for z in f.coeffs() {
            put_f64(&mut w, z.re)?;
            put_f64(&mut w, z.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = get_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = StateKind::from_u32(get_u32(&mut r)?)?;
    let nd = get_u32(&mut r)? as usize;
    if !(1..=3).contains(&nd) {
        return Err(Error::Format(format!("{nd} axes")));
    }
    let dims = (0..nd)
        .map(|_| get_u32(&mut r).map(|x| x as usize))
        .collect::<Result<Vec<_>>>()?;
    let roles = (0..nd)
        .map(|_| match get_u32(&mut r)? {
            0 => Ok(AxisRole::Horizontal),
            1 => Ok(AxisRole::Vertical),
            x => Err(Error::Format(format!("axis role {x}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(&dims, &roles)?;
    let nc = get_u32(&mut r)? as usize;
    if nc == 0 || nc > 64 {
        return Err(Error::Format(format!("{nc} components")));
    }
    let time = get_f64(&mut r)?;
    let eps = get_f64(&mut r)?;
    let mut fields = Vec::with_capacity(nc);
    for _ in 0..nc {
        let coeffs = (0..grid.len())
            .map(|_| Ok(Complex64::new(get_f64(&mut r)?, get_f64(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        fields.push(SpectralField::new(&grid, coeffs)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok(Checkpoint {
        kind,
        time,
        epsilon: if eps.is_nan() { None } else { Some(eps) },
        fields,
    })
}

pub fn save(path: &Path, c: &Checkpoint) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), c)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
