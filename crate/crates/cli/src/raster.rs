use std::fmt::Write as _;

use riskbound_core::contour::Raster;

pub const RASTER_FORMAT_VERSION: u32 = 1;

/// One row per grid node: coordinates, optional time, `E[P]`, `E[P^2]`,
/// the bound (empty when undefined) and membership as 0/1.
pub fn raster_csv(r: &Raster, state_vars: &[String]) -> String {
    let mut out = format!("# riskbound raster format_version={RASTER_FORMAT_VERSION} delta={}\n", r.delta);
    out.push_str(&state_vars.join(","));
    if r.time.is_some() {
        out.push_str(",t");
    }
    out.push_str(",ep,ep2,bound,member\n");
    for e in &r.cells {
        for x in &e.point {
            write!(out, "{x},").unwrap();
        }
        if let Some(t) = r.time {
            write!(out, "{t},").unwrap();
        }
        let bound = e.bound.map(|b| b.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", e.ep, e.ep2, bound, u8::from(e.is_member())).unwrap();
    }
    out
}

/// 16-bit binary PGM of a 2D raster: `(1 - bound)` scaled to the full
/// range for points with a bound, 0 elsewhere. The first image row is the
/// top of the workspace (largest second coordinate).
pub fn raster_pgm(r: &Raster) -> Option<Vec<u8>> {
    if r.grid.dim() != 2 {
        return None;
    }
    let (nx, ny) = (r.grid.resolution[0], r.grid.resolution[1]);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            let e = &r.cells[i * ny + j];
            let v = e.bound.map(|b| ((1.0 - b).clamp(0.0, 1.0) * 65535.0).round() as u16).unwrap_or(0);
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    Some(out)
}
