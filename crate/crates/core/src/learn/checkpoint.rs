//! Checkpoints: one JSON header line, then the flat parameters as
//! little-endian `f64`.

use std::path::Path;

use serde_json::{json, Value};

use super::nets::{Architecture, Awcr};
use crate::error::{Error, Result};
use crate::io::{json_number, write_atomic};
use crate::rng::{stream, Stream};

pub const CHECKPOINT_FORMAT: &str = "wcreg-awcr-v1";

pub fn encode_checkpoint(net: &Awcr, seed: u64) -> Vec<u8> {
    let arch = net.architecture();
    let (rho, lip, beta) = net.declared_modulus();
    let header = json!({
        "format": CHECKPOINT_FORMAT,
        "input": arch.input,
        "smooth": arch.smooth,
        "icnn_hidden": arch.icnn_hidden,
        "slope": json_number(arch.slope),
        "mu0": json_number(arch.mu0),
        "seed": seed,
        "params": net.param_count(),
        "modulus": {
            "rho_hat": json_number(rho),
            "lipschitz_icnn": json_number(lip),
            "beta_smooth": json_number(beta),
            "kind": "upper bound from layer norms",
        },
    });
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    for v in net.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn usize_list(v: &Value, key: &str) -> Result<Vec<usize>> {
    v[key]
        .as_array()
        .ok_or_else(|| Error::config(format!("checkpoint header lacks {key}")))?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::config(format!("bad entry in {key}")))
        })
        .collect()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Awcr, u64)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::config("checkpoint has no header line"))?;
    let header: Value =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::config(format!("checkpoint header: {e}")))?;
    if header["format"] != CHECKPOINT_FORMAT {
        return Err(Error::config(format!("unknown checkpoint format {}", header["format"])));
    }
    let num = |key: &str| {
        header[key]
            .as_f64()
            .ok_or_else(|| Error::config(format!("checkpoint header lacks {key}")))
    };
    let arch = Architecture {
        input: num("input")? as usize,
        smooth: usize_list(&header, "smooth")?,
        icnn_hidden: usize_list(&header, "icnn_hidden")?,
        slope: num("slope")?,
        mu0: num("mu0")?,
    };
    let seed = header["seed"].as_u64().unwrap_or(0);
    let blob = &bytes[nl + 1..];
    if blob.len() % 8 != 0 {
        return Err(Error::config("checkpoint blob is not a whole number of f64"));
    }
    let flat: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut net = Awcr::new(&arch, &mut stream(0, Stream::Init));
    net.set_flat(&flat)?;
    net.icnn.check_structure()?;
    Ok((net, seed))
}

pub fn write_checkpoint(path: &Path, net: &Awcr, seed: u64) -> Result<()> {
    write_atomic(path, &encode_checkpoint(net, seed))
}

pub fn read_checkpoint(path: &Path) -> Result<(Awcr, u64)> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Awcr::new(&Architecture::standard(2), &mut stream(5, Stream::Init));
        let bytes = encode_checkpoint(&net, 17);
        let (back, seed) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(seed, 17);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
    }
}
