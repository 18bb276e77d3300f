//! Binary checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                  |
//! |-------:|-----:|----------------------------------------|
//! | 0      | 7    | magic `MPOLAR1`                        |
//! | 7      | 4    | version (`u32`, currently 1)           |
//! | 11     | 8    | nx (`u64`)                             |
//! | 19     | 8    | ny (`u64`)                             |
//! | 27     | 8    | lx (`f64`)                             |
//! | 35     | 8    | ly (`f64`)                             |
//! | 43     | 8    | t (`f64`)                              |
//! | 51     | 8    | gamma (`f64`)                          |
//! | 59     | 8    | kappa (`f64`)                          |
//! | 67     | 1    | variant (0 standard, 1 damped)         |
//! | 68     | 8·nx·ny | omega, row-major (`f64`)            |
//! |        | 8·nx·ny | w, row-major (`f64`)                |
//!
//! The streamfunction and velocity are recomputed on load.

use std::path::Path;

use crate::domain::{Grid, ScalarField};
use crate::dynamics::{PhysParams, State, Variant};
use crate::elliptic::PoissonSolver;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 7] = b"MPOLAR1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 68;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: Grid,
    pub params: PhysParams,
    pub t: f64,
    pub omega: Vec<f64>,
    pub w: Vec<f64>,
}

fn variant_tag(v: Variant) -> u8 {
    match v {
        Variant::Standard => 0,
        Variant::Damped => 1,
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format { offset: offset as u64, message: message.into() }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let have = self.bytes.len() - self.pos;
        if have < n {
            return Err(self.fail(self.bytes.len(), format!("truncated in {what}: needed {n} bytes, found {have}")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn from_state(state: &State, params: &PhysParams) -> Checkpoint {
        Checkpoint {
            grid: *state.grid(),
            params: *params,
            t: state.t(),
            omega: state.omega().values().to_vec(),
            w: state.w().values().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.omega.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid.nx() as u64).to_le_bytes());
        out.extend_from_slice(&(self.grid.ny() as u64).to_le_bytes());
        for v in [self.grid.lx(), self.grid.ly(), self.t, self.params.gamma(), self.params.kappa()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(variant_tag(self.params.variant()));
        for v in self.omega.iter().chain(&self.w) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(MAGIC.len(), "magic")?;
        if magic != MAGIC {
            return Err(r.fail(0, format!("bad magic {:?}", String::from_utf8_lossy(magic))));
        }
        let at = r.pos;
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(r.fail(at, format!("unsupported version {version} (expected {VERSION})")));
        }
        let at = r.pos;
        let nx = r.u64("nx")?;
        let ny = r.u64("ny")?;
        let lx = r.f64("lx")?;
        let ly = r.f64("ly")?;
        let grid = usize::try_from(nx)
            .ok()
            .zip(usize::try_from(ny).ok())
            .ok_or_else(|| r.fail(at, "grid size does not fit in memory"))
            .and_then(|(nx, ny)| Grid::new(nx, ny, lx, ly).map_err(|e| r.fail(at, format!("invalid grid: {e}"))))?;
        let at = r.pos;
        let t = r.f64("t")?;
        if !t.is_finite() {
            return Err(r.fail(at, format!("non-finite time {t}")));
        }
        let at = r.pos;
        let gamma = r.f64("gamma")?;
        let kappa = r.f64("kappa")?;
        let at_variant = r.pos;
        let variant = match r.take(1, "variant")?[0] {
            0 => Variant::Standard,
            1 => Variant::Damped,
            tag => return Err(r.fail(at_variant, format!("unknown variant tag {tag}"))),
        };
        let params = PhysParams::new(gamma, kappa, variant).map_err(|e| r.fail(at, format!("invalid parameters: {e}")))?;
        let size = grid
            .nx()
            .checked_mul(grid.ny())
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| r.fail(11, "grid size overflows"))?;
        let field = |r: &mut Reader, what: &str| -> Result<Vec<f64>> {
            let raw = r.take(size, what)?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let omega = field(&mut r, "omega payload")?;
        let w = field(&mut r, "w payload")?;
        if r.pos != bytes.len() {
            return Err(r.fail(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Checkpoint { grid, params, t, omega, w })
    }

    /// Restores a full state, recomputing the streamfunction and velocity.
    pub fn to_state(&self, solver: &PoissonSolver) -> Result<State> {
        let omega = ScalarField::from_values(self.grid, self.omega.clone())?;
        let w = ScalarField::from_values(self.grid, self.w.clone())?;
        State::from_vorticity(self.t, omega, w, solver)
    }
}

pub fn save_checkpoint(state: &State, params: &PhysParams, path: &Path) -> Result<()> {
    std::fs::write(path, Checkpoint::from_state(state, params).to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Loads a checkpoint as a state ready to step, with its parameters.
pub fn load_checkpoint(path: &Path) -> Result<(State, PhysParams)> {
    let ck = read_checkpoint(path)?;
    let state = ck.to_state(&PoissonSolver::new(ck.grid))?;
    Ok((state, ck.params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let grid = Grid::new(4, 3, 2.0, 1.5).unwrap();
        let n = grid.len();
        Checkpoint {
            grid,
            params: PhysParams::new(0.7, 0.125, Variant::Damped).unwrap(),
            t: 0.1 + 0.2,
            omega: (0..n).map(|k| (k as f64).sin() * 1e-300).collect(),
            w: (0..n).map(|k| -(k as f64) / 3.0).collect(),
        }
    }

    #[test]
    fn header_layout() {
        let b = sample().to_bytes();
        assert_eq!(&b[..7], b"MPOLAR1");
        assert_eq!(u32::from_le_bytes(b[7..11].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[11..19].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(b[19..27].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(b[43..51].try_into().unwrap()), 0.1 + 0.2);
        assert_eq!(b[67], 1);
        assert_eq!(b.len(), HEADER_LEN + 16 * 12);
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        for (a, b) in back.omega.iter().zip(&ck.omega) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    fn offset_of(bytes: &[u8]) -> u64 {
        match Checkpoint::from_bytes(bytes) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_offsets() {
        let good = sample().to_bytes();
        let mut b = good.clone();
        b[0] = b'X';
        assert_eq!(offset_of(&b), 0);
        let mut b = good.clone();
        b[7] = 9;
        assert_eq!(offset_of(&b), 7);
        let mut b = good.clone();
        b[67] = 5;
        assert_eq!(offset_of(&b), 67);
        assert_eq!(offset_of(&good[..30]), 30);
        assert_eq!(offset_of(&good[..good.len() - 1]), (good.len() - 1) as u64);
        let mut b = good.clone();
        b.push(0);
        assert_eq!(offset_of(&b), good.len() as u64);
        let mut b = good;
        b[11..19].copy_from_slice(&2u64.to_le_bytes());
        assert_eq!(offset_of(&b), 11);
        assert_eq!(offset_of(&[]), 0);
    }
}
