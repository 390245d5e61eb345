//! Model checkpoints: a short text header, then every layer's weights (row-major,
//! `out × in`) and biases as little-endian f32.
//!
//! ```text
//! pppl-checkpoint 1
//! dims 2 32 3
//! seed 7
//! loss mse
//! data
//! <bytes>
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use pppl_core::nn::Layer;
use pppl_core::{LossKind, Model};

use crate::error::{CliError, Result};

const MAGIC: &str = "pppl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save(path: &Path, model: &Model, loss: LossKind) -> Result<()> {
    let mut buf = Vec::new();
    write_to(&mut buf, model, loss).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

pub fn write_to<W: Write>(mut w: W, model: &Model, loss: LossKind) -> std::io::Result<()> {
    let dims: Vec<String> = model.layer_dims().iter().map(usize::to_string).collect();
    write!(
        w,
        "{MAGIC} {CHECKPOINT_VERSION}\ndims {}\nseed {}\nloss {}\ndata\n",
        dims.join(" "),
        model.seed(),
        loss.as_str()
    )?;
    for layer in model.layers() {
        for v in layer.weights().iter().chain(layer.biases()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<(Model, LossKind)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    read_from(&bytes[..]).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a checkpoint and checks the payload length against the header's shapes.
pub fn read_from<R: BufRead>(mut r: R) -> Result<(Model, LossKind)> {
    let bad = |m: String| CliError::Data(m);
    let mut line = String::new();
    let mut next = |r: &mut R| -> Result<String> {
        line.clear();
        r.read_line(&mut line).map_err(|e| bad(format!("unreadable header: {e}")))?;
        Ok(line.trim_end_matches('\n').to_string())
    };

    let magic = next(&mut r)?;
    match magic.split_once(' ') {
        Some((MAGIC, v)) if v.parse() == Ok(CHECKPOINT_VERSION) => {}
        Some((MAGIC, v)) => return Err(bad(format!("unsupported checkpoint version {v}"))),
        _ => return Err(bad("not a checkpoint file".into())),
    }
    let mut dims = None;
    let mut seed = None;
    let mut loss = None;
    loop {
        let l = next(&mut r)?;
        if l == "data" {
            break;
        }
        let (key, value) = l.split_once(' ').ok_or_else(|| bad(format!("malformed header line `{l}`")))?;
        match key {
            "dims" => {
                let d: std::result::Result<Vec<usize>, _> = value.split(' ').map(str::parse).collect();
                dims = Some(d.map_err(|_| bad(format!("bad dims `{value}`")))?);
            }
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad(format!("bad seed `{value}`")))?),
            "loss" => loss = Some(LossKind::parse(value).ok_or_else(|| bad(format!("bad loss kind `{value}`")))?),
            _ => return Err(bad(format!("unknown header key `{key}`"))),
        }
    }
    let dims = dims.ok_or_else(|| bad("header lacks dims".into()))?;
    let seed = seed.ok_or_else(|| bad("header lacks seed".into()))?;
    let loss = loss.ok_or_else(|| bad("header lacks loss".into()))?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(bad(format!("invalid layer dims {dims:?}")));
    }

    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(|e| bad(format!("unreadable payload: {e}")))?;
    let expected: usize = dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum::<usize>() * 4;
    if payload.len() != expected {
        return Err(bad(format!(
            "payload has {} bytes, dims {dims:?} need {expected}",
            payload.len()
        )));
    }
    let mut values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (inp, out) = (w[0], w[1]);
        let weights: Vec<f32> = values.by_ref().take(inp * out).collect();
        let biases: Vec<f32> = values.by_ref().take(out).collect();
        layers.push(Layer::from_parts(inp, out, weights, biases)?);
    }
    let model = Model::from_layers(layers, seed)?;
    if !model.all_finite() {
        return Err(CliError::Numerical("checkpoint contains non-finite parameters".into()));
    }
    Ok((model, loss))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes(model: &Model) -> Vec<u8> {
        let mut buf = Vec::new();
        write_to(&mut buf, model, LossKind::Ce).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact() {
        let model = Model::new(&[4, 3, 2], 11).unwrap();
        let buf = bytes(&model);
        assert!(buf.starts_with(b"pppl-checkpoint 1\ndims 4 3 2\nseed 11\nloss ce\ndata\n"));
        let (back, loss) = read_from(&buf[..]).unwrap();
        assert_eq!(back, model);
        assert_eq!(loss, LossKind::Ce);
    }

    #[test]
    fn rejects_mismatched_payloads_and_headers() {
        let model = Model::new(&[4, 3, 2], 1).unwrap();
        let buf = bytes(&model);
        assert!(read_from(&buf[..buf.len() - 4]).is_err());
        let mut longer = buf.clone();
        longer.extend_from_slice(&[0; 4]);
        assert!(read_from(&longer[..]).is_err());
        let text = String::from_utf8_lossy(&buf[..40]).to_string();
        let wrong_dims = [text.replacen("dims 4 3 2", "dims 4 3 3", 1).as_bytes(), &buf[40..]].concat();
        assert!(read_from(&wrong_dims[..]).is_err());
        assert!(read_from(&b"pppl-checkpoint 2\n"[..]).is_err());
        assert!(read_from(&b"hello\n"[..]).is_err());
        assert_eq!(read_from(&b"pppl-checkpoint 1\nseed 1\nloss mse\ndata\n"[..]).unwrap_err().exit_code(), 2);
    }
}
