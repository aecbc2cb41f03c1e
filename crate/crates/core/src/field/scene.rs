use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DistanceField, FieldError, LookupMode};
use crate::geometry::{Aabb, Point3, ScenePrimitive};

/// Distance reported by an analytic field with no obstacles.
pub const DEFAULT_EMPTY_DISTANCE: f64 = 1e9;

/// Obstacle set inside a world bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScene")]
pub struct Scene {
    pub bounds: Aabb,
    pub primitives: Vec<ScenePrimitive>,
}

#[derive(Deserialize)]
struct RawScene {
    bounds: Aabb,
    #[serde(default)]
    primitives: Vec<ScenePrimitive>,
}

impl TryFrom<RawScene> for Scene {
    type Error = FieldError;

    fn try_from(raw: RawScene) -> Result<Self, Self::Error> {
        Scene::new(raw.bounds, raw.primitives)
    }
}

impl Scene {
    pub fn new(bounds: Aabb, primitives: Vec<ScenePrimitive>) -> Result<Self, FieldError> {
        if let Some(i) = primitives
            .iter()
            .position(|p| !p.bounding_box().intersects(&bounds))
        {
            return Err(FieldError::InvalidScene(format!(
                "primitive {i} lies outside the scene bounds"
            )));
        }
        Ok(Self { bounds, primitives })
    }

    pub fn empty(bounds: Aabb) -> Self {
        Self {
            bounds,
            primitives: Vec::new(),
        }
    }

    /// Minimum primitive distance, or `None` for an empty scene.
    pub fn nearest_distance(&self, p: &Point3) -> Option<f64> {
        self.primitives
            .iter()
            .map(|prim| prim.distance(p))
            .reduce(f64::min)
    }

    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FieldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FieldError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Exact continuous distance field over a scene.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    scene: Scene,
    empty_distance: f64,
}

impl AnalyticField {
    pub fn new(scene: Scene) -> Self {
        Self {
            scene,
            empty_distance: DEFAULT_EMPTY_DISTANCE,
        }
    }

    pub fn with_empty_distance(mut self, value: f64) -> Self {
        self.empty_distance = value;
        self
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn empty_distance(&self) -> f64 {
        self.empty_distance
    }

    pub fn analytic_distance(&self, p: &Point3) -> f64 {
        self.scene
            .nearest_distance(p)
            .unwrap_or(self.empty_distance)
    }
}

impl DistanceField for AnalyticField {
    #[inline]
    fn distance(&self, p: &Point3, _mode: LookupMode) -> f64 {
        self.analytic_distance(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds() -> Aabb {
        Aabb::new(Point3::new(-5.0, -5.0, -5.0), Point3::new(5.0, 5.0, 5.0)).unwrap()
    }

    #[test]
    fn nearer_sphere_wins() {
        let scene = Scene::new(
            unit_bounds(),
            vec![
                ScenePrimitive::sphere(Point3::new(0.0, 0.0, 3.0), 0.5).unwrap(),
                ScenePrimitive::sphere(Point3::new(0.0, 0.0, -2.0), 0.5).unwrap(),
            ],
        )
        .unwrap();
        let field = AnalyticField::new(scene);
        assert_eq!(field.analytic_distance(&Point3::origin()), 1.5);
    }

    #[test]
    fn empty_scene_reports_sentinel() {
        let field = AnalyticField::new(Scene::empty(unit_bounds()));
        assert_eq!(field.analytic_distance(&Point3::origin()), 1e9);
        let field = field.with_empty_distance(42.0);
        assert_eq!(field.distance(&Point3::origin(), LookupMode::Raw), 42.0);
    }

    #[test]
    fn primitive_outside_bounds_is_rejected() {
        let far = ScenePrimitive::sphere(Point3::new(20.0, 0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            Scene::new(unit_bounds(), vec![far]),
            Err(FieldError::InvalidScene(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"bounds":{"min":[0,0,0],"max":[2,1,1]},
            "primitives":[{"type":"box","min":[0,0,0],"max":[1,1,1]},
                          {"type":"sphere","center":[1.5,0.5,0.5],"radius":0.25}]}"#;
        let scene = Scene::from_json(text).unwrap();
        assert_eq!(scene.primitives.len(), 2);
        assert_eq!(Scene::from_json(&scene.to_json()).unwrap(), scene);
        assert!(Scene::from_json(r#"{"bounds":{"min":[0,0,0],"max":[0,1,1]}}"#).is_err());
    }

    #[test]
    fn matches_dense_primitive_sampling() {
        // Sample each primitive's surface densely and compare the nearest
        // sample against the closed-form distance.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scene = Scene::new(
            unit_bounds(),
            vec![
                ScenePrimitive::sphere(Point3::new(1.0, -0.5, 0.2), 0.7).unwrap(),
                ScenePrimitive::cuboid(Point3::new(-2.0, 0.5, -1.0), Point3::new(-1.0, 1.5, 0.5))
                    .unwrap(),
            ],
        )
        .unwrap();
        let field = AnalyticField::new(scene.clone());
        for _ in 0..100 {
            let p = Point3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
            let mut best = f64::INFINITY;
            for prim in &scene.primitives {
                best = best.min(sampled_distance(prim, &p));
            }
            let exact = field.analytic_distance(&p);
            assert!(exact <= best + 1e-12);
            assert!(best - exact < 1e-6, "exact {exact} sampled {best}");
        }
    }

    /// Nearest point by refining a grid search over the surface parameter
    /// space around the current best.
    fn sampled_distance(prim: &ScenePrimitive, p: &Point3) -> f64 {
        match *prim {
            ScenePrimitive::Sphere { center, radius } => {
                if (p - center).norm() <= radius {
                    return 0.0;
                }
                let (mut theta0, mut phi0) = (0.0, 0.0);
                let (mut span_t, mut span_p) = (std::f64::consts::PI, std::f64::consts::PI);
                let mut best = f64::INFINITY;
                for _ in 0..30 {
                    let (mut bt, mut bp) = (theta0, phi0);
                    for i in -20..=20 {
                        for j in -20..=20 {
                            let t = theta0 + span_t * i as f64 / 20.0;
                            let f = phi0 + span_p * j as f64 / 20.0;
                            let q = center
                                + nalgebra::Vector3::new(
                                    t.sin() * f.cos(),
                                    t.sin() * f.sin(),
                                    t.cos(),
                                ) * radius;
                            let d = (p - q).norm();
                            if d < best {
                                best = d;
                                bt = t;
                                bp = f;
                            }
                        }
                    }
                    theta0 = bt;
                    phi0 = bp;
                    span_t *= 0.2;
                    span_p *= 0.2;
                }
                best
            }
            ScenePrimitive::Box { min, max } => {
                // Per-axis dense clamp search: the nearest box point is separable.
                let mut sq = 0.0;
                for a in 0..3 {
                    let n = 2_000_000;
                    let mut best = f64::INFINITY;
                    for k in 0..=n {
                        let c = min[a] + (max[a] - min[a]) * k as f64 / n as f64;
                        best = best.min((p[a] - c).abs());
                    }
                    sq += best * best;
                }
                sq.sqrt()
            }
        }
    }
}
