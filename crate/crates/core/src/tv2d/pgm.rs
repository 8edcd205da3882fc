use std::fmt::Write as _;

use super::Image2D;
use crate::error::{Error, Result};

const MAXVAL: u32 = 65_535;

/// ASCII PGM (P2). Values map to `round((v − offset)/scale)` over the 16-bit
/// range, with `scale` and `offset` recorded in comment lines.
pub fn write_pgm(img: &Image2D) -> String {
    let (lo, hi) = if img.is_empty() { (0.0, 0.0) } else { img.min_max() };
    let scale = if hi > lo { (hi - lo) / MAXVAL as f64 } else { 1.0 };
    let mut out = String::new();
    out.push_str("P2\n");
    let _ = writeln!(out, "# scale {scale:e}");
    let _ = writeln!(out, "# offset {lo:e}");
    let _ = writeln!(out, "{} {}", img.width, img.height);
    let _ = writeln!(out, "{MAXVAL}");
    for row in 0..img.height {
        let line: Vec<String> = (0..img.width)
            .map(|col| {
                let q = ((img.get(col, row) - lo) / scale).round().clamp(0.0, MAXVAL as f64);
                (q as u32).to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_pgm(text: &str) -> Result<Image2D> {
    let mut scale = 1.0;
    let mut offset = 0.0;
    let mut tokens = Vec::new();
    for line in text.lines() {
        let (body, comment) = match line.find('#') {
            Some(i) => (&line[..i], Some(&line[i + 1..])),
            None => (line, None),
        };
        if let Some(c) = comment {
            let mut parts = c.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("scale"), Some(v)) => scale = parse_float(v)?,
                (Some("offset"), Some(v)) => offset = parse_float(v)?,
                _ => {}
            }
        }
        tokens.extend(body.split_whitespace());
    }
    let mut it = tokens.into_iter();
    if it.next() != Some("P2") {
        return Err(Error::InvalidInput("not an ASCII PGM (missing P2 magic)".into()));
    }
    let mut header = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::InvalidInput("truncated PGM header".into()))?
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad PGM header field: {e}")))
    };
    let width = header()?;
    let height = header()?;
    let maxval = header()?;
    if maxval == 0 || maxval > MAXVAL as usize {
        return Err(Error::InvalidInput(format!("PGM maxval {maxval} out of range")));
    }
    let mut values = Vec::with_capacity(width * height);
    for tok in it {
        let q: usize = tok.parse().map_err(|e| Error::InvalidInput(format!("bad PGM sample {tok:?}: {e}")))?;
        if q > maxval {
            return Err(Error::InvalidInput(format!("PGM sample {q} exceeds maxval {maxval}")));
        }
        values.push(offset + scale * q as f64);
    }
    Image2D::new(width, height, values)
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|e| Error::InvalidInput(format!("bad PGM comment value {s:?}: {e}")))
}
