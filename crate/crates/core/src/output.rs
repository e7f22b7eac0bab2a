//! Raster and field writers.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarField};

/// Binary PGM (P5): 255 solid, 0 void, first row is the top of the domain.
pub fn write_pgm(mask: &Mask, mut w: impl Write) -> std::io::Result<()> {
    let g = mask.grid();
    write!(w, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let mut row = vec![0u8; g.nx()];
    for j in (0..g.ny()).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            *px = if *mask.at(i, j) { 255 } else { 0 };
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn pgm_bytes(mask: &Mask) -> Vec<u8> {
    let mut out = Vec::with_capacity(mask.grid().len() + 32);
    write_pgm(mask, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Grey-level PGM of a field linearly mapped from [lo, hi].
pub fn write_field_pgm(f: &ScalarField, lo: f64, hi: f64, mut w: impl Write) -> std::io::Result<()> {
    let g = f.grid();
    write!(w, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut row = vec![0u8; g.nx()];
    for j in (0..g.ny()).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            *px = ((f.at(i, j) - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Parse a binary PGM (P5, maxval ≤ 255) into a mask on `grid`, solid where
/// the grey level is at least half of maxval.
pub fn read_pgm(bytes: &[u8], grid: Grid) -> Result<Mask> {
    let bad = |why: &str| Error::case("pgm", why);
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned()).ok_or_else(|| bad("truncated header"))
    };
    if token()? != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let mut num = |what: &str| -> Result<usize> { token()?.parse().map_err(|_| bad(&format!("bad {what}"))) };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    if (w, h) != (grid.nx(), grid.ny()) {
        return Err(bad(&format!("image is {w}x{h}, expected {}x{}", grid.nx(), grid.ny())));
    }
    // One whitespace byte separates the header from the raster.
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if data.len() < w * h {
        return Err(bad("raster is shorter than width × height"));
    }
    let half = (maxval as u16 + 1) / 2;
    Ok(Mask::from_fn(grid, |i, j| data[(h - 1 - j) * w + i] as u16 >= half))
}
