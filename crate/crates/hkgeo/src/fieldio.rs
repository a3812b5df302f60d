//! Grid field file format.
//!
//! Text header, one `key value...` line each, terminated by a `data` line,
//! followed by a raw block of little-endian f64 values in row-major sample
//! order (last axis fastest), one block per component in header order:
//!
//! ```text
//! hkfield 1
//! dim 3
//! extents 8 8 8
//! spacing 0.1 0.1 0.1
//! origin 0 0 0
//! periodic 1 0 0
//! degree 1
//! components 0 1 2
//! data le f64 rowmajor
//! <binary block: n_components * n_samples * 8 bytes>
//! ```
//!
//! Component labels are the ascending index tuples joined without
//! separators (degree 0 uses the single label `s`). Floats in the header are
//! written with `{:.17e}` so the header is byte-stable for identical inputs.

use std::io::{Read, Write};

use crate::chart::GridChart;
use crate::error::{Error, Result};
use crate::forms::{tuples, FormField};

fn comp_label(t: &[usize]) -> String {
    if t.is_empty() {
        "s".to_string()
    } else {
        t.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("")
    }
}

pub fn write_form(w: &mut impl Write, f: &FormField) -> Result<()> {
    let chart = &f.chart;
    let dim = chart.dim();
    writeln!(w, "hkfield 1")?;
    writeln!(w, "dim {dim}")?;
    writeln!(
        w,
        "extents {}",
        chart.extents().iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
    )?;
    writeln!(
        w,
        "spacing {}",
        chart.spacings().iter().map(|s| format!("{s:.17e}")).collect::<Vec<_>>().join(" ")
    )?;
    writeln!(
        w,
        "origin {}",
        chart.origin().iter().map(|s| format!("{s:.17e}")).collect::<Vec<_>>().join(" ")
    )?;
    writeln!(
        w,
        "periodic {}",
        chart
            .periodic_flags()
            .iter()
            .map(|p| if *p { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    writeln!(w, "degree {}", f.degree)?;
    writeln!(
        w,
        "components {}",
        tuples(dim, f.degree).iter().map(|t| comp_label(t)).collect::<Vec<_>>().join(" ")
    )?;
    writeln!(w, "data le f64 rowmajor")?;
    for comp in &f.components {
        for v in comp {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_form(r: &mut impl Read) -> Result<FormField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    // split header at the end of the `data` line
    let mut header_end = None;
    let mut line_start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            let line = &bytes[line_start..i];
            if line.starts_with(b"data ") {
                header_end = Some(i + 1);
                break;
            }
            line_start = i + 1;
        }
    }
    let header_end = header_end.ok_or_else(|| Error::Parse("missing data line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Parse("header is not utf-8".into()))?;

    let mut dim = 0usize;
    let mut extents = Vec::new();
    let mut spacing = Vec::new();
    let mut origin = Vec::new();
    let mut periodic = Vec::new();
    let mut degree = usize::MAX;
    for line in header.lines() {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let rest: Vec<&str> = it.collect();
        match key {
            "hkfield" => {
                if rest != ["1"] {
                    return Err(Error::Parse(format!("unsupported version {rest:?}")));
                }
            }
            "dim" => dim = rest[0].parse().map_err(|_| Error::Parse("bad dim".into()))?,
            "extents" => {
                extents = rest
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::Parse("bad extent".into())))
                    .collect::<Result<_>>()?
            }
            "spacing" => {
                spacing = rest
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::Parse("bad spacing".into())))
                    .collect::<Result<_>>()?
            }
            "origin" => {
                origin = rest
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::Parse("bad origin".into())))
                    .collect::<Result<_>>()?
            }
            "periodic" => periodic = rest.iter().map(|s| *s == "1").collect(),
            "degree" => degree = rest[0].parse().map_err(|_| Error::Parse("bad degree".into()))?,
            "components" | "data" => {}
            other => return Err(Error::Parse(format!("unknown header key {other}"))),
        }
    }
    if degree == usize::MAX {
        return Err(Error::Parse("missing degree".into()));
    }
    let chart = GridChart::new(dim, &extents, &spacing, &origin, &periodic)?;
    let ncomp = tuples(dim, degree).len();
    let expected = ncomp * chart.len() * 8;
    let block = &bytes[header_end..];
    if block.len() != expected {
        return Err(Error::Parse(format!(
            "binary block has {} bytes, expected {expected}",
            block.len()
        )));
    }
    let mut components = vec![vec![0.0f64; chart.len()]; ncomp];
    let mut off = 0;
    for comp in components.iter_mut() {
        for v in comp.iter_mut() {
            let mut b = [0u8; 8];
            b.copy_from_slice(&block[off..off + 8]);
            *v = f64::from_le_bytes(b);
            off += 8;
        }
    }
    let f = FormField { chart, degree, components };
    f.validate_finite()?;
    Ok(f)
}

pub fn write_form_to_path(path: &std::path::Path, f: &FormField) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_form(&mut file, f)
}

pub fn read_form_from_path(path: &std::path::Path) -> Result<FormField> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_form(&mut file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let chart = GridChart::new(3, &[4, 5, 6], &[0.1, 0.2, 0.3], &[-1.0, 0.0, 2.5], &[true, false, false])
            .unwrap();
        let f = FormField::from_fn(&chart, 2, |x| {
            vec![x[0] * 1.1, (x[1] * 7.3).sin(), x[2].exp() * 0.1]
        })
        .unwrap();
        let mut buf = Vec::new();
        write_form(&mut buf, &f).unwrap();
        let g = read_form(&mut buf.as_slice()).unwrap();
        assert_eq!(f.degree, g.degree);
        assert!(f.chart.same_as(&g.chart));
        for c in 0..f.components.len() {
            for i in 0..f.components[c].len() {
                assert_eq!(f.components[c][i].to_bits(), g.components[c][i].to_bits());
            }
        }
        // byte stability: rewriting produces identical bytes
        let mut buf2 = Vec::new();
        write_form(&mut buf2, &g).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn truncated_block_is_rejected() {
        let chart = GridChart::boxed(2, 4, 0.5, 0.0).unwrap();
        let f = FormField::scalar(&chart, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        write_form(&mut buf, &f).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(read_form(&mut buf.as_slice()).is_err());
    }
}
