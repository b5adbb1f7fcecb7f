use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use base64::Engine as _;

use super::graph::{SceneGraph, SceneObject};
use super::SceneError;

pub const MIN_RESOLUTION: u32 = 64;
pub const MAX_RESOLUTION: u32 = 2048;

/// An RGB raster of the room seen from above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopView {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples, row 0 at the far (+Z) wall.
    pub pixels: Vec<u8>,
}

impl TopView {
    pub fn pixel(&self, col: u32, row: u32) -> [u8; 3] {
        let i = ((row * self.width + col) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Standard padded base64 of the P6 bytes.
    pub fn to_base64(&self) -> String {
        base64::engine::general_purpose::STANDARD.encode(self.to_ppm())
    }
}

/// Orthographic projection onto the XZ ground plane. The room bounds fill the
/// square canvas; each object is its footprint rectangle turned by its yaw and
/// filled with its color. Taller objects are painted last so the view matches
/// what a camera above the room would see.
pub fn render_top_view(scene: &SceneGraph, resolution: u32) -> Result<TopView, SceneError> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(SceneError::InvalidResolution(resolution));
    }
    let n = resolution as usize;
    let mut pixels = vec![255u8; n * n * 3];
    let bounds = scene.bounds();
    let px_w = bounds.width() / n as f64;
    let px_d = bounds.depth() / n as f64;

    let mut order: Vec<&SceneObject> = scene.objects().iter().collect();
    // stable: equal heights keep insertion order
    order.sort_by(|a, b| top_height(a).total_cmp(&top_height(b)));

    for obj in order {
        let (w, d) = obj.footprint();
        let (hw, hd) = (w / 2.0, d / 2.0);
        let yaw = obj.rotation.y.to_radians();
        let (sin, cos) = (libm::sin(yaw), libm::cos(yaw));
        let reach_x = libm::fabs(hw * cos) + libm::fabs(hd * sin);
        let reach_z = libm::fabs(hw * sin) + libm::fabs(hd * cos);
        let (cx, cz) = (obj.position.x, obj.position.z);

        let col_lo = clamp_index((cx - reach_x - bounds.min[0]) / px_w - 0.5, n);
        let col_hi = clamp_index((cx + reach_x - bounds.min[0]) / px_w + 0.5, n);
        let row_lo = clamp_index((bounds.max[1] - (cz + reach_z)) / px_d - 0.5, n);
        let row_hi = clamp_index((bounds.max[1] - (cz - reach_z)) / px_d + 0.5, n);

        let rgb = [obj.color.r, obj.color.g, obj.color.b];
        for row in row_lo..=row_hi {
            let z = bounds.max[1] - (row as f64 + 0.5) * px_d;
            for col in col_lo..=col_hi {
                let x = bounds.min[0] + (col as f64 + 0.5) * px_w;
                let (dx, dz) = (x - cx, z - cz);
                let local_x = dx * cos - dz * sin;
                let local_z = dx * sin + dz * cos;
                if libm::fabs(local_x) <= hw && libm::fabs(local_z) <= hd {
                    let i = (row * n + col) * 3;
                    pixels[i..i + 3].copy_from_slice(&rgb);
                }
            }
        }
    }

    Ok(TopView {
        width: resolution,
        height: resolution,
        pixels,
    })
}

fn top_height(obj: &SceneObject) -> f64 {
    obj.position.y + obj.scale.y / 2.0
}

fn clamp_index(v: f64, n: usize) -> usize {
    if v.is_nan() || v <= 0.0 {
        0
    } else if v >= (n - 1) as f64 {
        n - 1
    } else {
        libm::floor(v) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ColorRGB, NewObject, Vector3};

    const RED: [u8; 3] = [255, 0, 0];
    const BLUE: [u8; 3] = [0, 0, 255];
    const WHITE: [u8; 3] = [255, 255, 255];

    fn count(view: &TopView, rgb: [u8; 3]) -> usize {
        view.pixels.chunks(3).filter(|p| *p == rgb).count()
    }

    /// Pixel centers of an n x n canvas over the default 8 m room that fall in
    /// the closed axis-aligned box [x0, x1] x [z0, z1].
    fn oracle_box_pixels(n: usize, x0: f64, x1: f64, z0: f64, z1: f64) -> Vec<(usize, usize)> {
        let step = 8.0 / n as f64;
        let mut hits = Vec::new();
        for row in 0..n {
            for col in 0..n {
                let x = -4.0 + (col as f64 + 0.5) * step;
                let z = 4.0 - (row as f64 + 0.5) * step;
                if x >= x0 && x <= x1 && z >= z0 && z <= z1 {
                    hits.push((col, row));
                }
            }
        }
        hits
    }

    #[test]
    fn resolution_bounds() {
        let s = SceneGraph::new("s");
        assert_eq!(
            render_top_view(&s, 63),
            Err(SceneError::InvalidResolution(63))
        );
        assert_eq!(
            render_top_view(&s, 2049),
            Err(SceneError::InvalidResolution(2049))
        );
        assert!(render_top_view(&s, 64).is_ok());
    }

    #[test]
    fn empty_scene_is_white() {
        let view = render_top_view(&SceneGraph::new("s"), 64).unwrap();
        assert_eq!((view.width, view.height), (64, 64));
        assert_eq!(count(&view, WHITE), 64 * 64);
        let ppm = view.to_ppm();
        assert!(ppm.starts_with(b"P6\n64 64\n255\n"));
        assert_eq!(ppm.len(), 13 + 64 * 64 * 3);
    }

    #[test]
    fn centered_cube_is_a_centered_rectangle() {
        let mut s = SceneGraph::new("s");
        s.add_object(NewObject::new("Cube").colored(ColorRGB::new(255, 0, 0)))
            .unwrap();
        let view = render_top_view(&s, 64).unwrap();
        // 1 m at 8 px/m: an 8 x 8 block spanning cols/rows 28..36
        assert_eq!(count(&view, RED), 64);
        for row in 0..64 {
            for col in 0..64 {
                let inside = (28..36).contains(&row) && (28..36).contains(&col);
                assert_eq!(view.pixel(col, row) == RED, inside, "({col},{row})");
            }
        }
    }

    #[test]
    fn opposite_corners_match_projection_oracle() {
        let mut s = SceneGraph::new("s");
        s.add_object(
            NewObject::new("A")
                .at(Vector3::new(-3.25, 0.0, 3.25))
                .sized(Vector3::new(1.5, 1.0, 1.5))
                .colored(ColorRGB::new(255, 0, 0)),
        )
        .unwrap();
        s.add_object(
            NewObject::new("B")
                .at(Vector3::new(3.4, 0.0, -3.4))
                .sized(Vector3::new(1.2, 1.0, 1.2))
                .colored(ColorRGB::new(0, 0, 255)),
        )
        .unwrap();
        for n in [64usize, 100, 257] {
            let view = render_top_view(&s, n as u32).unwrap();
            let red = oracle_box_pixels(n, -4.0, -2.5, 2.5, 4.0);
            let blue = oracle_box_pixels(n, 2.8, 4.0, -4.0, -2.8);
            assert_eq!(count(&view, RED), red.len(), "n={n}");
            assert_eq!(count(&view, BLUE), blue.len(), "n={n}");
            for (c, r) in red {
                assert_eq!(view.pixel(c as u32, r as u32), RED);
                assert!(c < n / 2 && r < n / 2, "red in top-left quadrant");
            }
            for (c, r) in blue {
                assert_eq!(view.pixel(c as u32, r as u32), BLUE);
                assert!(c >= n / 2 && r >= n / 2, "blue in bottom-right quadrant");
            }
        }
    }

    #[test]
    fn quarter_turn_swaps_footprint_axes() {
        let mut s = SceneGraph::new("s");
        s.add_object(
            NewObject::new("Bench")
                .sized(Vector3::new(4.0, 0.5, 1.0))
                .rotated(Vector3::new(0.0, 90.0, 0.0))
                .colored(ColorRGB::new(255, 0, 0)),
        )
        .unwrap();
        let view = render_top_view(&s, 64).unwrap();
        // rotated: 1 m wide along x, 4 m deep along z
        assert_eq!(count(&view, RED), 8 * 32);
        assert_eq!(view.pixel(32, 18), RED);
        assert_eq!(view.pixel(20, 32), WHITE);
    }

    #[test]
    fn taller_objects_paint_over_lower_ones() {
        let mut s = SceneGraph::new("s");
        s.add_object(
            NewObject::new("Lamp")
                .at(Vector3::new(0.0, 1.0, 0.0))
                .sized(Vector3::new(0.5, 2.0, 0.5))
                .colored(ColorRGB::new(0, 0, 255)),
        )
        .unwrap();
        s.add_object(
            NewObject::new("Rug")
                .sized(Vector3::new(3.0, 0.02, 3.0))
                .colored(ColorRGB::new(255, 0, 0)),
        )
        .unwrap();
        let view = render_top_view(&s, 64).unwrap();
        assert_eq!(view.pixel(32, 32), BLUE);
        assert_eq!(count(&view, BLUE), 16);
    }

    #[test]
    fn deterministic_bytes() {
        let mut s = SceneGraph::new("s");
        s.add_object(NewObject::new("A").rotated(Vector3::new(0.0, 33.0, 0.0)))
            .unwrap();
        let a = render_top_view(&s, 128).unwrap();
        let b = render_top_view(&s.clone(), 128).unwrap();
        assert_eq!(a.to_ppm(), b.to_ppm());
        assert_eq!(a.to_base64(), b.to_base64());
    }
}
