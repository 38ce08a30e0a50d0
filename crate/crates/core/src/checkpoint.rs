//! Plain-text checkpoints for [`TpiNets`].
//!
//! ```text
//! hinf-checkpoint v1
//! value quadratic n=2
//! params 3 8.888 -0.0907 0.557
//! gain 2x2
//! params 4 -1.365 0.0009 0.0445 0.1796
//! noise mlp sizes=2,64,64,2 scale=0.01,0.05
//! params 4482 ...
//! ```
//!
//! Each net is a header line followed by a `params` line holding the count
//! and the flat parameter vector. Floats are written in shortest round-trip
//! form, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::approx::{GainNet, LinearNoiseNet, Mlp, NoiseNet, QuadraticValueNet, ValueNet};
use crate::error::{ApproxError, Result};
use crate::linalg::Mat;
use crate::tpi::TpiNets;

const MAGIC: &str = "hinf-checkpoint v1";

fn bad(msg: impl Into<String>) -> ApproxError {
    ApproxError::Checkpoint(msg.into())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn params_line(out: &mut String, params: &[f64]) {
    let _ = write!(out, "params {}", params.len());
    for p in params {
        let _ = write!(out, " {p}");
    }
    out.push('\n');
}

fn mlp_header(kind: &str, m: &Mlp) -> String {
    format!("{kind} mlp sizes={} scale={}\n", join(m.sizes()), join(m.out_scale()))
}

pub fn to_string(nets: &TpiNets) -> String {
    let mut out = String::from(MAGIC);
    out.push('\n');
    match &nets.value {
        ValueNet::Quadratic(q) => out.push_str(&format!("value quadratic n={}\n", q.dim())),
        ValueNet::Mlp(m) => out.push_str(&mlp_header("value", m)),
    }
    params_line(&mut out, nets.value.params());
    let (n, r) = nets.gain.gain().shape();
    out.push_str(&format!("gain {n}x{r}\n"));
    params_line(&mut out, nets.gain.params());
    match &nets.noise {
        NoiseNet::Linear(l) => out.push_str(&format!("noise linear n={}\n", l.eta().rows())),
        NoiseNet::Mlp(m) => out.push_str(&mlp_header("noise", m)),
    }
    params_line(&mut out, nets.noise.params());
    out
}

fn key<'a>(field: &'a str, name: &str) -> std::result::Result<&'a str, ApproxError> {
    field
        .strip_prefix(name)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| bad(format!("expected `{name}=...`, found `{field}`")))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, ApproxError> {
    s.split(',')
        .map(|t| t.parse().map_err(|_| bad(format!("bad list entry `{t}`"))))
        .collect()
}

fn parse_usize(s: &str) -> std::result::Result<usize, ApproxError> {
    s.parse().map_err(|_| bad(format!("bad integer `{s}`")))
}

fn parse_params(line: Option<&str>) -> std::result::Result<Vec<f64>, ApproxError> {
    let line = line.ok_or_else(|| bad("missing params line"))?;
    let mut it = line.split_whitespace();
    if it.next() != Some("params") {
        return Err(bad(format!("expected params line, found `{line}`")));
    }
    let count = parse_usize(it.next().ok_or_else(|| bad("missing parameter count"))?)?;
    let vals = it
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}`"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if vals.len() != count {
        return Err(bad(format!("expected {count} parameters, found {}", vals.len())));
    }
    Ok(vals)
}

fn parse_mlp(fields: &[&str], params: Vec<f64>) -> std::result::Result<Mlp, ApproxError> {
    if fields.len() != 2 {
        return Err(bad("mlp header needs sizes= and scale="));
    }
    let sizes: Vec<usize> = parse_list(key(fields[0], "sizes")?)?;
    let scale: Vec<f64> = parse_list(key(fields[1], "scale")?)?;
    Mlp::from_params(&sizes, scale, params)
}

pub fn from_str(text: &str) -> std::result::Result<TpiNets, ApproxError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(MAGIC) {
        return Err(bad(format!("missing `{MAGIC}` header")));
    }
    let mut header = |name: &str| -> std::result::Result<Vec<String>, ApproxError> {
        let line = lines.next().ok_or_else(|| bad(format!("missing {name} section")))?;
        let fields: Vec<String> = line.split_whitespace().map(String::from).collect();
        if fields.first().map(String::as_str) != Some(name) {
            return Err(bad(format!("expected {name} section, found `{line}`")));
        }
        let params = lines.next();
        let mut out = fields[1..].to_vec();
        out.push(params.unwrap_or_default().to_string());
        Ok(out)
    };

    let v = header("value")?;
    let (v_params, v_head) = v.split_last().expect("nonempty");
    let v_params = parse_params(Some(v_params))?;
    let v_fields: Vec<&str> = v_head.iter().map(String::as_str).collect();
    let value = match v_fields.first() {
        Some(&"quadratic") if v_fields.len() == 2 => {
            ValueNet::Quadratic(QuadraticValueNet::from_weights(parse_usize(key(v_fields[1], "n")?)?, v_params)?)
        }
        Some(&"mlp") => ValueNet::Mlp(parse_mlp(&v_fields[1..], v_params)?),
        _ => return Err(bad("unknown value net kind")),
    };

    let g = header("gain")?;
    let (g_params, g_head) = g.split_last().expect("nonempty");
    let shape = g_head.first().ok_or_else(|| bad("gain header needs NxR"))?;
    let (n, r) = shape.split_once('x').ok_or_else(|| bad(format!("bad gain shape `{shape}`")))?;
    let theta = Mat::new(parse_usize(n)?, parse_usize(r)?, parse_params(Some(g_params))?)
        .map_err(|e| bad(e.to_string()))?;
    let gain = GainNet::new(theta)?;

    let w = header("noise")?;
    let (w_params, w_head) = w.split_last().expect("nonempty");
    let w_params = parse_params(Some(w_params))?;
    let w_fields: Vec<&str> = w_head.iter().map(String::as_str).collect();
    let noise = match w_fields.first() {
        Some(&"linear") if w_fields.len() == 2 => {
            let n = parse_usize(key(w_fields[1], "n")?)?;
            let eta = Mat::new(n, n, w_params).map_err(|e| bad(e.to_string()))?;
            NoiseNet::Linear(LinearNoiseNet::from_matrix(eta)?)
        }
        Some(&"mlp") => NoiseNet::Mlp(parse_mlp(&w_fields[1..], w_params)?),
        _ => return Err(bad("unknown noise net kind")),
    };
    if lines.next().is_some() {
        return Err(bad("trailing content after noise section"));
    }
    Ok(TpiNets { value, gain, noise })
}

pub fn save(nets: &TpiNets, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(nets))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TpiNets> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    Ok(from_str(&text)?)
}
