//! Binary parameter files.
//!
//! Layout: a 16-byte header — magic `PQWG`, format version (u32 LE), then
//! `n_patches`, `n_layers`, `n_qubits` as u16 LE and two reserved zero
//! bytes — followed by `n_patches · n_layers · n_qubits · 3` angles as f64
//! LE in (patch, layer, qubit, phi/theta/omega) order.

use std::path::Path;

use pqwgan::generator::{count_parameters, GeneratorConfig, GeneratorParams};
use pqwgan::{Error, Result};

const MAGIC: &[u8; 4] = b"PQWG";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Shape recorded in a parameter file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamsHeader {
    pub n_patches: u16,
    pub n_layers: u16,
    pub n_qubits: u16,
}

pub fn write_params(params: &GeneratorParams, config: &GeneratorConfig, path: &Path) -> Result<()> {
    let expected = count_parameters(config);
    if params.angles.len() != expected {
        return Err(Error::Shape(format!(
            "parameter vector has {} angles, config requires {expected}",
            params.angles.len()
        )));
    }
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * params.angles.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(config.n_patches as u16).to_le_bytes());
    bytes.extend_from_slice(&(config.n_layers as u16).to_le_bytes());
    bytes.extend_from_slice(&(config.n_qubits() as u16).to_le_bytes());
    bytes.extend_from_slice(&[0, 0]);
    for a in &params.angles {
        bytes.extend_from_slice(&a.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<(ParamsHeader, GeneratorParams)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!("file is {} bytes, shorter than the 16-byte header", bytes.len()),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic {:?}, expected \"PQWG\"", &bytes[..4]),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Parse {
            offset: 4,
            message: format!("unsupported format version {version}, expected {VERSION}"),
        });
    }
    let header = ParamsHeader {
        n_patches: u16::from_le_bytes(bytes[8..10].try_into().unwrap()),
        n_layers: u16::from_le_bytes(bytes[10..12].try_into().unwrap()),
        n_qubits: u16::from_le_bytes(bytes[12..14].try_into().unwrap()),
    };
    let count = header.n_patches as usize * header.n_layers as usize * header.n_qubits as usize * 3;
    let expected = HEADER_LEN + 8 * count;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected),
            message: format!(
                "expected {expected} bytes for {} x {} x {} x 3 angles, found {}",
                header.n_patches,
                header.n_layers,
                header.n_qubits,
                bytes.len()
            ),
        });
    }
    let angles = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, GeneratorParams { angles }))
}

/// Load a parameter file and require its shape to match `config`, naming
/// both sides on mismatch.
pub fn read_params_for(config: &GeneratorConfig, path: &Path) -> Result<GeneratorParams> {
    let (header, params) = read_params(path)?;
    let file = (
        header.n_patches as usize,
        header.n_layers as usize,
        header.n_qubits as usize,
    );
    let cfg = (config.n_patches, config.n_layers, config.n_qubits());
    if file != cfg {
        return Err(Error::Shape(format!(
            "parameter file has (patches, layers, qubits) = {file:?}, config requires {cfg:?}"
        )));
    }
    Ok(params)
}
