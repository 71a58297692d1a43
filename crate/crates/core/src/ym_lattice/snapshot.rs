//! Text snapshots of a lattice configuration.
//!
//! ```text
//! # sic-lattice-snapshot v1 group=SU2 spatial_dims=1 sites_per_dim=16 spacing=1 coupling=1 dt=0.01 time=10 steps=1000
//! site,i,a,A,E
//! 0,0,0,0.125,-0.5
//! ...
//! ```
//!
//! One row per `(site, i, a)` in storage order. Values use the shortest
//! round-trip representation, so reading a snapshot back is lossless.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{FieldConfiguration, LatticeError, LatticeSpec, VECTOR_COMPONENTS};
use crate::format::fmt_f64;
use crate::gauge_algebra::{GaugeGroup, GroupKind};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &str = "sic-lattice-snapshot";
const COLUMNS: &str = "site,i,a,A,E";

pub fn write_snapshot<W: Write>(
    mut w: W,
    spec: &LatticeSpec,
    cfg: &FieldConfiguration,
) -> Result<(), LatticeError> {
    cfg.check_shape(spec)?;
    let io = |e: std::io::Error| LatticeError::Snapshot(e.to_string());
    writeln!(
        w,
        "# {MAGIC} v{SNAPSHOT_VERSION} group={} spatial_dims={} sites_per_dim={} spacing={} coupling={} dt={} time={} steps={}",
        spec.group().kind(),
        spec.spatial_dims(),
        spec.sites_per_dim(),
        fmt_f64(spec.spacing()),
        fmt_f64(spec.coupling()),
        fmt_f64(spec.dt()),
        fmt_f64(cfg.time),
        cfg.steps
    )
    .map_err(io)?;
    writeln!(w, "{COLUMNS}").map_err(io)?;
    let dim = spec.group().dim_adjoint();
    for site in 0..spec.n_sites() {
        for i in 0..VECTOR_COMPONENTS {
            for a in 0..dim {
                let k = spec.index(site, i, a);
                writeln!(w, "{site},{i},{a},{},{}", fmt_f64(cfg.a[k]), fmt_f64(cfg.e[k]))
                    .map_err(io)?;
            }
        }
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(LatticeSpec, FieldConfiguration), LatticeError> {
    let bad = |msg: String| LatticeError::Snapshot(msg);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty snapshot".into()))?
        .map_err(|e| bad(e.to_string()))?;

    let mut words = header.split_whitespace();
    if words.next() != Some("#") || words.next() != Some(MAGIC) {
        return Err(bad("missing snapshot header".into()));
    }
    let version = words.next().unwrap_or_default();
    if version != format!("v{SNAPSHOT_VERSION}") {
        return Err(bad(format!("unsupported snapshot version `{version}`")));
    }
    let fields: HashMap<&str, &str> = words.filter_map(|w| w.split_once('=')).collect();
    let get = |key: &str| -> Result<&str, LatticeError> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| bad(format!("header lacks `{key}`")))
    };
    let num = |key: &str| -> Result<f64, LatticeError> {
        get(key)?
            .parse::<f64>()
            .map_err(|e| bad(format!("`{key}`: {e}")))
    };
    let int = |key: &str| -> Result<u64, LatticeError> {
        get(key)?
            .parse::<u64>()
            .map_err(|e| bad(format!("`{key}`: {e}")))
    };

    let kind: GroupKind = get("group")?
        .parse()
        .map_err(|e| bad(format!("{e}")))?;
    let spec = LatticeSpec::new(
        GaugeGroup::new(kind),
        int("spatial_dims")? as usize,
        int("sites_per_dim")? as usize,
        num("spacing")?,
        num("coupling")?,
        num("dt")?,
    )?;
    let mut cfg = FieldConfiguration::vacuum(&spec);
    cfg.time = num("time")?;
    cfg.steps = int("steps")?;

    match lines.next() {
        Some(Ok(l)) if l.trim() == COLUMNS => {}
        _ => return Err(bad("missing column line".into())),
    }
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(format!("row {}: expected 5 columns", lineno + 3)));
        }
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(e.to_string()));
        let val = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        let (site, i, a) = (idx(cols[0])?, idx(cols[1])?, idx(cols[2])?);
        if site >= spec.n_sites() || i >= VECTOR_COMPONENTS || a >= spec.group().dim_adjoint() {
            return Err(bad(format!("row {}: index out of range", lineno + 3)));
        }
        let k = spec.index(site, i, a);
        cfg.a[k] = val(cols[3])?;
        cfg.e[k] = val(cols[4])?;
        seen += 1;
    }
    if seen != spec.field_len() {
        return Err(bad(format!(
            "expected {} rows, found {seen}",
            spec.field_len()
        )));
    }
    Ok((spec, cfg))
}
