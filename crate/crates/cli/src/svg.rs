use std::f64::consts::TAU;
use std::fmt::Write;

use shaperec::geometry::{line_cell_segment, ConvexPolygon, Point};
use shaperec::{CellRecon, Reconstruction, Shape};

/// Boundary of `shape` inside the unit square as a list of polylines.
fn true_boundary(shape: &Shape) -> Vec<Vec<Point>> {
    match *shape {
        Shape::Disk { center, radius } => {
            let n = 720;
            let mut pts: Vec<Point> =
                (0..n).map(|k| k as f64 * TAU / n as f64).map(|t| Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())).collect();
            pts.push(pts[0]);
            vec![pts]
        }
        Shape::HalfPlane { hp } => {
            let square = shaperec::Cell::new(1, 1, 1.0);
            line_cell_segment(&hp, &square).map(|(a, b)| vec![vec![a, b]]).unwrap_or_default()
        }
        Shape::RotatedSquare { center, half_width, angle } => {
            let (s, c) = angle.sin_cos();
            let w = half_width;
            let mut pts: Vec<Point> =
                [(-w, -w), (w, -w), (w, w), (-w, w), (-w, -w)].iter().map(|&(a, b)| Point::new(center.x + c * a - s * b, center.y + s * a + c * b)).collect();
            pts.dedup();
            vec![pts]
        }
    }
}

fn polyline(out: &mut String, pts: &[Point], color: &str, width: f64) {
    let coords: Vec<String> = pts.iter().map(|p| format!("{:.6},{:.6}", p.x, p.y)).collect();
    let _ = writeln!(out, r#"  <polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#, coords.join(" "));
}

/// SVG 1.1 drawing of the true boundary and the reconstructed interface segments.
pub fn render(shape: &Shape, recon: &Reconstruction) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 1 1\" width=\"800\" height=\"800\">\n");
    out.push_str("<g transform=\"translate(0,1) scale(1,-1)\">\n");
    let domain = ConvexPolygon::unit_square();
    let frame: Vec<Point> = domain.vertices().iter().chain(domain.vertices().first()).copied().collect();
    polyline(&mut out, &frame, "#999999", 0.002);
    for line in true_boundary(shape) {
        polyline(&mut out, &line, "#1f77b4", 0.002);
    }
    let l = recon.grid.cells_per_side();
    for cell in recon.grid.cells() {
        if let CellRecon::Interface(hp) = recon.cells[recon.grid.index(cell.i, cell.j)] {
            if let Some((a, b)) = line_cell_segment(&hp, &cell) {
                let _ = writeln!(
                    out,
                    r##"  <line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="#d62728" stroke-width="{}"/>"##,
                    a.x,
                    a.y,
                    b.x,
                    b.y,
                    0.25 / l as f64
                );
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}
