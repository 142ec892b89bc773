use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Conv1dSpec, Network, NetworkConfig};
use crate::autodiff::ParamStore;
use crate::error::{Error, Result};

const HEADER: &str = "kernel-pretrain network v1";
const END: &str = "end";

/// A network plus free-form provenance entries, stored as a text header
/// (`key = value` lines closed by `end`) followed by the binary parameters.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub network: Network,
    pub provenance: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(network: Network) -> Self {
        Checkpoint {
            network,
            provenance: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.provenance.insert(key.into(), value.to_string());
        self
    }

    pub fn encode(&self) -> Vec<u8> {
        let c = self.network.config();
        let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let conv1d = c
            .conv1d
            .iter()
            .map(|s| format!("{}:{}:{}", s.filters, s.width, s.stride))
            .collect::<Vec<_>>()
            .join(",");
        let mut text = format!(
            "{HEADER}\nnum_labels = {}\nconv_channels = {}\nsortpool_k = {}\nconv1d = {conv1d}\n\
             dense_width = {}\nnum_classes = {}\nbias = {}\ndropout = {}\n",
            c.num_labels,
            join(&c.conv_channels),
            c.sortpool_k,
            c.dense_width,
            c.num_classes,
            c.bias,
            c.dropout,
        );
        for (k, v) in &self.provenance {
            assert!(
                !k.contains(['=', '\n']) && !v.contains('\n'),
                "provenance entry {k:?} is not a single line"
            );
            text.push_str(&format!("provenance.{k} = {v}\n"));
        }
        text.push_str(END);
        text.push('\n');
        let mut bytes = text.into_bytes();
        bytes.extend(self.network.params().encode());
        bytes
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::decode(&bytes).map_err(|message| Error::Binary {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Checkpoint, String> {
        let mut pos = 0;
        let mut next_line = || -> std::result::Result<&str, String> {
            let rest = &bytes[pos..];
            let end = rest.iter().position(|&b| b == b'\n').ok_or("unterminated header")?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| "header is not UTF-8".to_string())
        };
        if next_line()? != HEADER {
            return Err("not a network checkpoint".into());
        }
        let mut fields = BTreeMap::new();
        let mut provenance = BTreeMap::new();
        loop {
            let line = next_line()?;
            if line == END {
                break;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| format!("malformed header line {line:?}"))?;
            match k.strip_prefix("provenance.") {
                Some(p) => provenance.insert(p.to_string(), v.to_string()),
                None => fields.insert(k.to_string(), v.to_string()),
            };
        }
        let config = parse_config(&fields)?;
        let (params, used) = ParamStore::decode(&bytes[pos..])?;
        if pos + used != bytes.len() {
            return Err("trailing bytes after parameters".into());
        }
        let network = Network::from_params(config, params).map_err(|e| e.to_string())?;
        Ok(Checkpoint { network, provenance })
    }
}

fn parse_config(fields: &BTreeMap<String, String>) -> std::result::Result<NetworkConfig, String> {
    fn get<'a>(f: &'a BTreeMap<String, String>, k: &str) -> std::result::Result<&'a str, String> {
        f.get(k)
            .map(String::as_str)
            .ok_or_else(|| format!("missing header field {k}"))
    }
    fn num<T: std::str::FromStr>(s: &str, k: &str) -> std::result::Result<T, String> {
        s.trim().parse().map_err(|_| format!("bad value {s:?} for {k}"))
    }
    let conv1d = get(fields, "conv1d")?;
    let conv1d = if conv1d.is_empty() {
        Vec::new()
    } else {
        conv1d
            .split(',')
            .map(|s| {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() != 3 {
                    return Err(format!("bad conv1d layer {s:?}"));
                }
                Ok(Conv1dSpec {
                    filters: num(parts[0], "conv1d")?,
                    width: num(parts[1], "conv1d")?,
                    stride: num(parts[2], "conv1d")?,
                })
            })
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(NetworkConfig {
        num_labels: num(get(fields, "num_labels")?, "num_labels")?,
        conv_channels: get(fields, "conv_channels")?
            .split(',')
            .map(|s| num(s, "conv_channels"))
            .collect::<std::result::Result<_, _>>()?,
        sortpool_k: num(get(fields, "sortpool_k")?, "sortpool_k")?,
        conv1d,
        dense_width: num(get(fields, "dense_width")?, "dense_width")?,
        num_classes: num(get(fields, "num_classes")?, "num_classes")?,
        bias: num(get(fields, "bias")?, "bias")?,
        dropout: num(get(fields, "dropout")?, "dropout")?,
    })
}
