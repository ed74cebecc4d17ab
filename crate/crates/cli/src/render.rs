//! SVG plots of trajectory files: one polyline per vehicle, heading
//! triangles at a fixed simulated-time spacing, and per-frame snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use freeflight_core::evaluation::TrajectoryPoint;
use freeflight_core::geometry::{AirspaceConfig, VehicleId};

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
];

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub marker_interval: f64,
    /// Half-width of the square view around the vertiport (m).
    pub extent: f64,
    pub pixels: f64,
}

impl RenderOptions {
    pub fn new(airspace: &AirspaceConfig, marker_interval: f64) -> Self {
        Self { marker_interval, extent: airspace.boundary_penalty_radius * 1.05, pixels: 800.0 }
    }
}

pub fn by_vehicle(points: &[TrajectoryPoint]) -> BTreeMap<VehicleId, Vec<TrajectoryPoint>> {
    let mut tracks: BTreeMap<VehicleId, Vec<TrajectoryPoint>> = BTreeMap::new();
    for p in points {
        tracks.entry(p.vehicle_id).or_default().push(*p);
    }
    for t in tracks.values_mut() {
        t.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    tracks
}

/// Samples of `track` at the first point on or after each multiple of
/// `interval`, counted on the global simulation clock.
pub fn marker_points(track: &[TrajectoryPoint], interval: f64) -> Vec<TrajectoryPoint> {
    if interval <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut next = match track.first() {
        Some(p) => (p.time / interval).ceil() * interval,
        None => return out,
    };
    for p in track {
        if p.time + 1e-9 >= next {
            out.push(*p);
            next = ((p.time + 1e-9) / interval).floor() * interval + interval;
        }
    }
    out
}

struct Canvas {
    scale: f64,
    half: f64,
}

impl Canvas {
    fn new(opts: &RenderOptions) -> Self {
        Self { scale: opts.pixels / (2.0 * opts.extent), half: opts.pixels / 2.0 }
    }

    /// North up, east to the right.
    fn xy(&self, n: f64, e: f64) -> (f64, f64) {
        (self.half + e * self.scale, self.half - n * self.scale)
    }

    fn triangle(&self, p: &TrajectoryPoint, size: f64) -> String {
        let (cx, cy) = self.xy(p.n, p.e);
        let (s, c) = p.heading.sin_cos();
        // heading is a compass angle: forward is (n, e) = (cos, sin)
        let fwd = (s, -c);
        let side = (c, s);
        let tip = (cx + fwd.0 * size, cy + fwd.1 * size);
        let l = (cx - fwd.0 * size * 0.6 + side.0 * size * 0.6, cy - fwd.1 * size * 0.6 + side.1 * size * 0.6);
        let r = (cx - fwd.0 * size * 0.6 - side.0 * size * 0.6, cy - fwd.1 * size * 0.6 - side.1 * size * 0.6);
        format!("{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}", tip.0, tip.1, l.0, l.1, r.0, r.1)
    }

    fn header(&self, out: &mut String, airspace: &AirspaceConfig, pixels: f64) {
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pixels}" height="{pixels}" viewBox="0 0 {pixels} {pixels}">"#);
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (cx, cy) = self.xy(0.0, 0.0);
        for (r, dash) in [(airspace.outer_radius, ""), (airspace.vtol_radius, ""), (airspace.boundary_penalty_radius, r#" stroke-dasharray="6 4""#)] {
            let _ = writeln!(out, r##"<circle class="airspace" cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="none" stroke="#999"{dash}/>"##, r * self.scale);
        }
        for b in airspace.gate_bearings_deg {
            let (s, c) = b.to_radians().sin_cos();
            let (gx, gy) = self.xy(airspace.outer_radius * c, airspace.outer_radius * s);
            let _ = writeln!(out, r##"<rect class="gate" x="{:.1}" y="{:.1}" width="8" height="8" fill="#444"/>"##, gx - 4.0, gy - 4.0);
        }
    }
}

/// Whole-run plot.
pub fn trajectory_svg(points: &[TrajectoryPoint], airspace: &AirspaceConfig, opts: &RenderOptions) -> String {
    let canvas = Canvas::new(opts);
    let mut out = String::new();
    canvas.header(&mut out, airspace, opts.pixels);
    for (k, (id, track)) in by_vehicle(points).iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = track
            .iter()
            .map(|p| {
                let (x, y) = canvas.xy(p.n, p.e);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(out, r#"<polyline class="track" data-vehicle="{id}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        for m in marker_points(track, opts.marker_interval) {
            let _ = writeln!(out, r#"<polygon class="marker" data-vehicle="{id}" data-time="{}" points="{}" fill="{color}"/>"#, m.time, canvas.triangle(&m, 6.0));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Snapshot at `time`: each vehicle present at that instant as a triangle
/// with a short trail of its last `trail` seconds.
pub fn frame_svg(points: &[TrajectoryPoint], time: f64, trail: f64, airspace: &AirspaceConfig, opts: &RenderOptions) -> String {
    let canvas = Canvas::new(opts);
    let mut out = String::new();
    canvas.header(&mut out, airspace, opts.pixels);
    let _ = writeln!(out, r#"<text x="10" y="20" font-family="monospace" font-size="14">t = {time:.0} s</text>"#);
    for (k, (id, track)) in by_vehicle(points).iter().enumerate() {
        let Some(now) = track.iter().find(|p| (p.time - time).abs() < 1e-9) else { continue };
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = track
            .iter()
            .filter(|p| p.time <= time + 1e-9 && p.time >= time - trail)
            .map(|p| {
                let (x, y) = canvas.xy(p.n, p.e);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(out, r#"<polyline class="trail" data-vehicle="{id}" points="{}" fill="none" stroke="{color}" stroke-opacity="0.5"/>"#, coords.join(" "));
        let fill = if now.sigma > 0.0 { color } else { "none" };
        let _ = writeln!(out, r#"<polygon class="vehicle" data-vehicle="{id}" points="{}" fill="{fill}" stroke="{color}"/>"#, canvas.triangle(now, 8.0));
    }
    out.push_str("</svg>\n");
    out
}
