//! Built-in scenes and the TOML scene-file format.

use crate::error::{HnaError, Result};
use crate::geometry::{build_obstacle, build_polygon, Point, Scene, SmallObstacle};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Equilateral triangle with side `2π`; its vertical side `x = 0` faces the obstacles.
pub fn big_triangle() -> Vec<Point> {
    vec![[SQRT3 * PI, 0.0], [0.0, PI], [0.0, -PI]]
}

/// The obstacle triangle (perimeter `3π/5`) centred at `c`, pointing towards `+x`.
pub fn small_triangle(c: Point, flipped: bool) -> Vec<Point> {
    let s = if flipped { -1.0 } else { 1.0 };
    let q = [
        [2.0 * SQRT3 * PI / 30.0, 0.0],
        [-SQRT3 * PI / 30.0, PI / 10.0],
        [-SQRT3 * PI / 30.0, -PI / 10.0],
    ];
    q.iter().map(|v| [c[0] + s * v[0], c[1] + v[1]]).collect()
}

/// Default incident direction `(1,1)/√2`.
pub fn default_direction() -> Point {
    [0.5f64.sqrt(), 0.5f64.sqrt()]
}

/// Centre of the obstacle triangle whose tip lies `dist` from the side `x = 0`.
fn centre_at_distance(dist: f64) -> Point {
    [-dist - 2.0 * SQRT3 * PI / 30.0, 0.0]
}

fn assemble(obstacles: Vec<Vec<Point>>, k: f64) -> Result<Scene> {
    let poly = build_polygon(&big_triangle())?;
    let obs = obstacles
        .iter()
        .map(|v| build_obstacle(v))
        .collect::<Result<Vec<SmallObstacle>>>()?;
    Scene::new(poly, obs, k, default_direction(), None)
}

/// Big triangle plus one small triangle at distance `√3π/5`.
pub fn exp1(k: f64) -> Result<Scene> {
    assemble(vec![small_triangle(centre_at_distance(SQRT3 * PI / 5.0), false)], k)
}

/// As [`exp1`] with separation `3π/k`.
pub fn exp2(k: f64) -> Result<Scene> {
    assemble(vec![small_triangle(centre_at_distance(3.0 * PI / k), false)], k)
}

/// Two small triangles: exp1's shifted up by ½, and its mirror image shifted down by ½.
pub fn exp3(k: f64) -> Result<Scene> {
    let c = centre_at_distance(SQRT3 * PI / 5.0);
    assemble(
        vec![
            small_triangle([c[0], c[1] + 0.5], false),
            small_triangle([c[0], c[1] - 0.5], true),
        ],
        k,
    )
}

/// Big triangle alone.
pub fn single(k: f64) -> Result<Scene> {
    assemble(vec![], k)
}

/// Regular `n`-gon inscribed in the circle of radius `radius` about the origin.
pub fn regular_polygon(n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

/// Polygonal unit "circle" (64 sides) as a lone scatterer.
pub fn unit_circle(k: f64) -> Result<Scene> {
    let poly = build_polygon(&regular_polygon(64, 1.0))?;
    Scene::new(poly, vec![], k, [1.0, 0.0], None)
}

/// Resolve a built-in scene name (`exp1`, `exp2`, `exp3`, `single`, `circle`).
pub fn builtin_scene(name: &str, k: f64) -> Result<Scene> {
    match name {
        "exp1" => exp1(k),
        "exp2" => exp2(k),
        "exp3" => exp3(k),
        "single" => single(k),
        "circle" => unit_circle(k),
        _ => Err(HnaError::UnknownScene(name.to_string())),
    }
}

/// On-disk scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub polygon: PolygonSpec,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<PolygonSpec>,
    #[serde(default)]
    pub wave: WaveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_direction")]
    pub d: [f64; 2],
    #[serde(default)]
    pub eta: Option<f64>,
}

fn default_k() -> f64 {
    20.0
}

impl Default for WaveSpec {
    fn default() -> Self {
        WaveSpec {
            k: default_k(),
            d: default_direction(),
            eta: None,
        }
    }
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> Self {
        SceneFile {
            polygon: PolygonSpec {
                vertices: scene.polygon.boundary.vertices.clone(),
            },
            obstacles: scene
                .obstacles
                .iter()
                .map(|o| PolygonSpec {
                    vertices: o.boundary.vertices.clone(),
                })
                .collect(),
            wave: WaveSpec {
                k: scene.k,
                d: scene.d,
                eta: Some(scene.eta),
            },
        }
    }

    pub fn to_scene(&self) -> Result<Scene> {
        let poly = build_polygon(&self.polygon.vertices)?;
        let obs = self
            .obstacles
            .iter()
            .map(|o| build_obstacle(&o.vertices))
            .collect::<Result<Vec<_>>>()?;
        Scene::new(poly, obs, self.wave.k, self.wave.d, self.wave.eta)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HnaError::Invalid(format!("scene file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }
}

/// Read a scene file.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HnaError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    SceneFile::parse(&text)?.to_scene()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::separation;

    #[test]
    fn exp1_layout() {
        let s = exp1(20.0).unwrap();
        assert!((s.polygon.perimeter() - 6.0 * PI).abs() < 1e-12);
        assert!((s.small_perimeter() - 3.0 * PI / 5.0).abs() < 1e-12);
        assert!((separation(&s) - SQRT3 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn exp2_separation() {
        let s = exp2(160.0).unwrap();
        assert!((separation(&s) - 3.0 * PI / 160.0).abs() < 1e-12);
        assert!(separation(&s) < 0.06);
    }

    #[test]
    fn exp3_layout() {
        let s = exp3(20.0).unwrap();
        assert!((s.small_perimeter() - 6.0 * PI / 5.0).abs() < 1e-12);
        assert!((separation(&s) - SQRT3 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(builtin_scene("nope", 1.0).unwrap_err(), HnaError::UnknownScene("nope".into()));
    }

    #[test]
    fn toml_roundtrip() {
        let s = exp3(20.0).unwrap();
        let f = SceneFile::from_scene(&s);
        let back = SceneFile::parse(&f.to_toml()).unwrap();
        assert_eq!(back, f);
        let s2 = back.to_scene().unwrap();
        assert_eq!(s2.obstacles.len(), 2);
    }
}
