//! Static figure formats: SVG polylines for unit circles and OBJ meshes for
//! unit spheres.

use std::io::Write;

use crate::error::Result;
use crate::scalar::Real;

/// Writes a closed planar curve as a standalone SVG drawn in `[-1.1, 1.1]²`
/// (y up), together with the max-norm square and the 1-norm diamond for
/// reference.
pub fn write_svg_polyline<T: Real, W: Write>(curve: &[[T; 2]], size_px: u32, mut w: W) -> Result<()> {
    let pts: Vec<String> = curve
        .iter()
        .map(|p| format!("{:.6},{:.6}", p[0].to_f64_lossy(), -p[1].to_f64_lossy()))
        .collect();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size_px}" height="{size_px}" viewBox="-1.1 -1.1 2.2 2.2">"#
    )?;
    writeln!(
        w,
        r##"  <g fill="none" stroke="#999" stroke-width="0.004" stroke-dasharray="0.02,0.02">"##
    )?;
    writeln!(w, r#"    <rect x="-1" y="-1" width="2" height="2"/>"#)?;
    writeln!(w, r#"    <polygon points="1,0 0,-1 -1,0 0,1"/>"#)?;
    writeln!(w, "  </g>")?;
    writeln!(
        w,
        r#"  <polyline fill="none" stroke="black" stroke-width="0.008" points="{}"/>"#,
        pts.join(" ")
    )?;
    writeln!(w, "</svg>")?;
    Ok(())
}

/// Writes vertices and triangles in Wavefront OBJ form (1-based faces).
pub fn write_obj<T: Real, W: Write>(vertices: &[[T; 3]], faces: &[[usize; 3]], mut w: W) -> Result<()> {
    for v in vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
