use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::encoder::{FourierConfig, FourierEncoder, FourierGroup, GroupKind};
use super::ensemble::{EnsembleMode, EnsembleModel, Member};
use super::network::{Dense, Mlp, NetworkParams};
use crate::error::{DcpfError, Result};
use crate::geometry::RobotSpec;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"DCPFMODL";
pub const FORMAT_VERSION: u32 = 1;
const ACTIVATION: &str = "gelu_tanh";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    activation: String,
    mode: EnsembleMode,
    robot: RobotSpec<f64>,
    members: Vec<MemberHeader>,
    /// Total count of f64 values following the header.
    n_values: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct MemberHeader {
    seed: u64,
    fourier: FourierConfig,
    groups: Vec<(GroupKind, usize, usize)>,
    main_layers: Vec<(usize, usize)>,
    shaping_layers: Vec<(usize, usize)>,
}

fn format_err(msg: impl Into<String>) -> DcpfError {
    DcpfError::Format(msg.into())
}

/// Serializes the model: magic, version, JSON header, then every frequency
/// and weight as a little-endian f64 in header order.
pub fn write_model<T: Scalar, W: Write>(model: &EnsembleModel<T>, mut w: W) -> Result<()> {
    model.validate()?;
    let mut values: Vec<f64> = Vec::new();
    let mut members = Vec::new();
    for m in &model.members {
        for g in &m.encoder.groups {
            values.extend(g.freqs.iter());
        }
        for t in m.params.tensors() {
            values.extend(t.iter().map(|v| v.to_f64_lossless()));
        }
        let dims = |mlp: &Mlp<T>| mlp.layers.iter().map(|l| l.w.dim()).collect();
        members.push(MemberHeader {
            seed: m.encoder.seed,
            fourier: m.encoder.config,
            groups: m.encoder.groups.iter().map(|g| (g.kind, g.n_frequencies(), g.dim())).collect(),
            main_layers: dims(&m.params.main),
            shaping_layers: dims(&m.params.shaping),
        });
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        activation: ACTIVATION.into(),
        mode: model.mode,
        robot: model.robot,
        members,
        n_values: values.len(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(20 + json.len() + 8 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| format_err(e.to_string()))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| {
            format_err(format!("truncated model: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| format_err("size overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn read_mlp<T: Scalar>(cur: &mut Cursor, dims: &[(usize, usize)]) -> Result<Mlp<T>> {
    if dims.is_empty() {
        return Err(format_err("network without layers"));
    }
    if dims.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err(format_err("layer dimensions do not chain"));
    }
    let layers = dims
        .iter()
        .map(|&(i, o)| {
            let w = cur.f64s(i * o)?;
            let b = cur.f64s(o)?;
            Ok(Dense {
                w: Array2::from_shape_vec((i, o), w.into_iter().map(T::of).collect())
                    .map_err(|e| format_err(e.to_string()))?,
                b: Array1::from_iter(b.into_iter().map(T::of)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mlp { layers })
}

pub fn read_model<T: Scalar, R: Read>(mut r: R) -> Result<EnsembleModel<T>> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(|e| format_err(e.to_string()))?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(format_err("bad magic bytes"));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format_err(format!("unsupported format version {version}")));
    }
    let len = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| format_err("header too large"))?;
    let header: Header =
        serde_json::from_slice(cur.take(len)?).map_err(|e| format_err(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(format_err("header version mismatch"));
    }
    if header.activation != ACTIVATION {
        return Err(format_err(format!("unsupported activation {:?}", header.activation)));
    }
    if data.len() - cur.pos != header.n_values * 8 {
        return Err(format_err(format!(
            "expected {} weight bytes, found {}",
            header.n_values * 8,
            data.len() - cur.pos
        )));
    }

    let mut members = Vec::with_capacity(header.members.len());
    for mh in &header.members {
        mh.fourier.validate().map_err(|e| format_err(e.to_string()))?;
        if mh.groups.len() != GroupKind::ALL.len() || mh.groups.iter().zip(GroupKind::ALL).any(|(g, k)| g.0 != k) {
            return Err(format_err("unexpected Fourier group layout"));
        }
        let groups = mh
            .groups
            .iter()
            .map(|&(kind, n, d)| {
                if n != mh.fourier.n_frequencies || d != kind.dim() {
                    return Err(format_err(format!("bad {kind:?} group shape {n}x{d}")));
                }
                let freqs = Array2::from_shape_vec((n, d), cur.f64s(n * d)?).map_err(|e| format_err(e.to_string()))?;
                Ok(FourierGroup { kind, freqs })
            })
            .collect::<Result<Vec<_>>>()?;
        let encoder = FourierEncoder {
            seed: mh.seed,
            config: mh.fourier,
            groups,
        };
        let main = read_mlp::<T>(&mut cur, &mh.main_layers)?;
        let shaping = read_mlp::<T>(&mut cur, &mh.shaping_layers)?;
        if main.input_dim() != encoder.main_dim()
            || shaping.input_dim() != encoder.shaping_dim()
            || main.output_dim() != 1
            || shaping.output_dim() != 4
        {
            return Err(format_err("network dimensions do not match the encoder"));
        }
        members.push(Member {
            encoder,
            params: NetworkParams { main, shaping },
        });
    }
    EnsembleModel::new(members, header.mode, header.robot).map_err(|e| format_err(e.to_string()))
}

pub fn save_model<T: Scalar>(model: &EnsembleModel<T>, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| DcpfError::io(path, e))?;
    write_model(model, std::io::BufWriter::new(f))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<EnsembleModel<T>> {
    let f = std::fs::File::open(path).map_err(|e| DcpfError::io(path, e))?;
    read_model(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::network::Arch;

    fn small() -> EnsembleModel<f32> {
        let arch = Arch {
            main_width: 16,
            main_depth: 2,
            shaping_width: 8,
            shaping_depth: 2,
        };
        EnsembleModel::init(&arch, FourierConfig::default(), 2, 11, RobotSpec::default()).unwrap()
    }

    fn bytes(m: &EnsembleModel<f32>) -> Vec<u8> {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = small();
        let back: EnsembleModel<f32> = read_model(&bytes(&m)[..]).unwrap();
        assert_eq!(back, m);
        let wide: EnsembleModel<f64> = read_model(&bytes(&m)[..]).unwrap();
        assert_eq!(wide.cast::<f32>(), m);
    }

    #[test]
    fn corrupted_magic() {
        let mut b = bytes(&small());
        b[0] = b'X';
        assert!(matches!(read_model::<f32, _>(&b[..]), Err(DcpfError::Format(_))));
    }

    #[test]
    fn truncated_or_padded() {
        let b = bytes(&small());
        for cut in [4, 15, 40, b.len() - 1] {
            assert!(matches!(read_model::<f32, _>(&b[..cut]), Err(DcpfError::Format(_))), "{cut}");
        }
        let mut long = b.clone();
        long.push(0);
        assert!(read_model::<f32, _>(&long[..]).is_err());
    }

    #[test]
    fn wrong_version() {
        let mut b = bytes(&small());
        b[8] = 9;
        assert!(matches!(read_model::<f32, _>(&b[..]), Err(DcpfError::Format(_))));
    }

    #[test]
    fn little_endian_layout() {
        let m = small();
        let b = bytes(&m);
        let len = u64::from_le_bytes(b[12..20].try_into().unwrap()) as usize;
        let first = f64::from_le_bytes(b[20 + len..28 + len].try_into().unwrap());
        assert_eq!(first, m.members[0].encoder.groups[0].freqs[[0, 0]]);
    }
}
