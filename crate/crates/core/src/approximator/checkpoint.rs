//! Text checkpoint format `fsq-ckpt-v1`.
//!
//! ```text
//! fsq-ckpt-v1
//! [config]
//! key=value            (zero or more lines, echoed run configuration)
//! [arrays]
//! hidden.weight <rows> <cols>
//! <rows*cols values, space separated, one line>
//! hidden.bias <len>
//! <values>
//! output.weight <rows> <cols>
//! <values>
//! output.bias <len>
//! <values>
//! [end]
//! ```
//!
//! Values are written in shortest round-trip exponent form, so a
//! save/load cycle restores every parameter bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Dense, QNetwork};
use crate::error::{Error, Result};

pub const HEADER: &str = "fsq-ckpt-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub network: QNetwork,
    /// Echoed configuration, in file order.
    pub config: Vec<(String, String)>,
}

impl Checkpoint {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str("[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(out, "{k}={v}");
        }
        out.push_str("[arrays]\n");
        let net = &self.network;
        write_matrix(&mut out, "hidden.weight", net.hidden.outputs, net.hidden.inputs, &net.hidden.weight);
        write_vector(&mut out, "hidden.bias", &net.hidden.bias);
        write_matrix(&mut out, "output.weight", net.output.outputs, net.output.inputs, &net.output.weight);
        write_vector(&mut out, "output.bias", &net.output.bias);
        out.push_str("[end]\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|message| Error::Checkpoint {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .map(|(i, l)| (i + 1, l))
                .ok_or_else(|| format!("unexpected end of file, expected {what}"))
        };

        let (_, header) = next("header")?;
        if header != HEADER {
            return Err(format!("unsupported header `{header}`"));
        }
        let (n, section) = next("[config]")?;
        if section != "[config]" {
            return Err(format!("line {n}: expected [config]"));
        }
        let mut config = Vec::new();
        loop {
            let (n, line) = next("[arrays]")?;
            if line == "[arrays]" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {n}: expected key=value"))?;
            config.push((k.to_string(), v.to_string()));
        }

        let mut read_array = |name: &str, rank: usize| -> std::result::Result<(Vec<usize>, Vec<f64>), String> {
            let (n, line) = next(name)?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(format!("line {n}: expected array `{name}`"));
            }
            let shape = parts
                .map(|p| p.parse::<usize>().map_err(|e| format!("line {n}: bad shape: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if shape.len() != rank {
                return Err(format!("line {n}: `{name}` needs {rank} dimensions"));
            }
            let (n, line) = next("array values")?;
            let values = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| format!("line {n}: bad value `{v}`: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let expected: usize = shape.iter().product();
            if values.len() != expected {
                return Err(format!(
                    "line {n}: `{name}` has {} values, shape needs {expected}",
                    values.len()
                ));
            }
            Ok((shape, values))
        };

        let (hw_shape, hw) = read_array("hidden.weight", 2)?;
        let (hb_shape, hb) = read_array("hidden.bias", 1)?;
        let (ow_shape, ow) = read_array("output.weight", 2)?;
        let (ob_shape, ob) = read_array("output.bias", 1)?;
        if hb_shape[0] != hw_shape[0] || ow_shape[1] != hw_shape[0] || ob_shape[0] != ow_shape[0] {
            return Err("array shapes are inconsistent".into());
        }
        let (_, end) = next("[end]")?;
        if end != "[end]" {
            return Err("missing [end] marker".into());
        }

        let network = QNetwork {
            hidden: Dense {
                inputs: hw_shape[1],
                outputs: hw_shape[0],
                weight: hw,
                bias: hb,
            },
            output: Dense {
                inputs: ow_shape[1],
                outputs: ow_shape[0],
                weight: ow,
                bias: ob,
            },
        };
        Ok(Self { network, config })
    }
}

fn write_values(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:e}");
    }
    out.push('\n');
}

fn write_matrix(out: &mut String, name: &str, rows: usize, cols: usize, values: &[f64]) {
    let _ = writeln!(out, "{name} {rows} {cols}");
    write_values(out, values);
}

fn write_vector(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "{name} {}", values.len());
    write_values(out, values);
}
