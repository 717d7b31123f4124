//! Planar configurations as text: one line per row, `+` and `-` per site.
//! Row `r` holds the sites with `y = r`, column `c` those with `x = c`.
//! Blank lines and lines starting with `#` are skipped.

use crate::error::{Error, Result};
use crate::model::{LatticeBox, Site, Spin, SpinConfig};

pub fn parse_grid(text: &str) -> Result<SpinConfig> {
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
    if width == 0 {
        return Err(Error::Config("empty grid".into()));
    }
    let mut cells = vec![Vec::with_capacity(width); rows.len()];
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(Error::Config(format!(
                "grid row {r} has {} columns, expected {width}",
                row.chars().count()
            )));
        }
        for (c, ch) in row.chars().enumerate() {
            cells[r].push(match ch {
                '+' => Spin::Up,
                '-' => Spin::Down,
                other => {
                    return Err(Error::Config(format!("unexpected '{other}' at row {r}, column {c}")));
                }
            });
        }
    }
    let region = LatticeBox::new(&[width, rows.len()])?;
    Ok(SpinConfig::from_fn(region, |s| {
        cells[s.coords()[1] as usize][s.coords()[0] as usize]
    }))
}

/// Inverse of [`parse_grid`] for any planar box, relative to its origin.
pub fn format_grid(config: &SpinConfig) -> Result<String> {
    let region = config.region();
    if region.dim() != 2 {
        return Err(Error::NotTwoDimensional(region.dim()));
    }
    let o = region.origin().coords();
    let (w, h) = (region.sides()[0] as i64, region.sides()[1] as i64);
    let mut out = String::with_capacity(((w + 1) * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let s = config
                .get(&Site::new(vec![o[0] + x, o[1] + y]))
                .expect("site of the box");
            out.push(s.symbol());
        }
        out.push('\n');
    }
    Ok(out)
}
