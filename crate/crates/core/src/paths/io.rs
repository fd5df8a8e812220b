use std::io::{Read, Write};
use std::sync::Arc;

use super::{Grid, InterpRule, SampledPath};
use crate::error::{Error, Result};

/// Two columns `t,value` with 17 significant digits.
pub fn write_csv<W: Write>(path: &SampledPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"])?;
    for (t, v) in path.times().iter().zip(path.values()) {
        w.write_record([crate::fmt_f64(*t), crate::fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R, rule: InterpRule) -> Result<SampledPath> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(Error::InvalidArgument(format!(
            "expected header `t,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad number `{s}`: {e}")))
        };
        times.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    SampledPath::new(Arc::new(Grid::new(times)?), values, rule)
}
