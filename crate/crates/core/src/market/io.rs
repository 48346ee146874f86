//! CSV formats for option chains, discount curves and forward reports.
//!
//! Lines starting with `#` are ignored on input, so files written with a
//! provenance header can be read back.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DiscountCurve, OptionQuote, SyntheticForward};
use crate::error::{Error, Result};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_err(what: &str, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Input(format!("{what}: {e}")),
    }
}

/// Read `expiry_yf,strike,side,bid,ask` rows; each quote is validated.
pub fn read_chain<R: Read>(r: R) -> Result<Vec<OptionQuote>> {
    let mut rdr = reader(r);
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<OptionQuote>().enumerate() {
        let q = row.map_err(|e| csv_err("option chain", e))?;
        q.validate()
            .map_err(|e| Error::Input(format!("option chain row {}: {e}", line + 1)))?;
        out.push(q);
    }
    Ok(out)
}

pub fn write_chain<W: Write>(w: W, quotes: &[OptionQuote]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for q in quotes {
        wtr.serialize(q).map_err(|e| csv_err("option chain", e))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    tenor_yf: f64,
    discount_factor: f64,
}

/// Read `tenor_yf,discount_factor` rows.
pub fn read_curve<R: Read>(r: R) -> Result<DiscountCurve> {
    let mut rdr = reader(r);
    let pillars = rdr
        .deserialize::<CurveRow>()
        .map(|row| {
            row.map(|c| (c.tenor_yf, c.discount_factor))
                .map_err(|e| csv_err("discount curve", e))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscountCurve::new(pillars)
}

pub fn write_curve<W: Write>(w: W, curve: &DiscountCurve) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for &(tenor_yf, discount_factor) in curve.pillars() {
        wtr.serialize(CurveRow {
            tenor_yf,
            discount_factor,
        })
        .map_err(|e| csv_err("discount curve", e))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ForwardRow {
    expiry_yf: f64,
    fwd_bid: f64,
    fwd_ask: f64,
    fwd_mid: f64,
    n_used: usize,
    n_discarded: usize,
}

/// Write the per-expiry forward report.
pub fn write_forwards<W: Write>(w: W, forwards: &[SyntheticForward]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for f in forwards {
        wtr.serialize(ForwardRow {
            expiry_yf: f.expiry,
            fwd_bid: f.fwd_bid,
            fwd_ask: f.fwd_ask,
            fwd_mid: f.fwd_mid,
            n_used: f.used_strikes.len(),
            n_discarded: f.discarded_strikes.len(),
        })
        .map_err(|e| csv_err("forward report", e))?;
    }
    wtr.flush()?;
    Ok(())
}
