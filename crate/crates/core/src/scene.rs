//! Scene descriptions and seeded scene composition.
//!
//! A scene is a textured ground plane at `z = 0`, a set of posed objects
//! resting on it, an overhead camera and a sky. Everything is plain data
//! and serializes to JSON losslessly.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aabb::{aabb_overlap, Aabb};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::{self, TriangleMesh};
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    Bundled(String),
    File(PathBuf),
}

impl MeshSource {
    pub fn load(&self) -> Result<TriangleMesh> {
        match self {
            MeshSource::Bundled(name) => mesh::bundled(name),
            MeshSource::File(path) => mesh::load_mesh(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Sphere { radius: f64 },
    /// Box with the given half extents, in its local frame.
    Box { half_extents: Vec3 },
    /// Loaded mesh, uniformly scaled.
    Mesh { source: MeshSource, scale: f64 },
}

impl Geometry {
    /// Local-frame bounds after rotating by `rotation_deg` about +z.
    pub fn local_aabb(&self, rotation_deg: f64) -> Result<Aabb> {
        Ok(match self {
            Geometry::Sphere { radius } => {
                Aabb::new(Vec3::splat(-radius), Vec3::splat(*radius))
            }
            Geometry::Box { half_extents: h } => {
                let corners: Vec<Vec3> = (0..8)
                    .map(|k| {
                        let s = |bit: usize| if k & bit != 0 { 1.0 } else { -1.0 };
                        Vec3::new(s(1) * h.x, s(2) * h.y, s(4) * h.z).rotate_z(rotation_deg)
                    })
                    .collect();
                Aabb::from_points(&corners)
            }
            Geometry::Mesh { source, scale } => {
                let m = source.load()?;
                m.transformed(*scale, rotation_deg, Vec3::ZERO).aabb
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub albedo: Vec3,
    pub specular_strength: f64,
    pub specular_exponent: f64,
    pub emissive: Vec3,
}

impl MaterialSpec {
    pub fn lambertian(albedo: Vec3) -> Self {
        MaterialSpec {
            albedo,
            specular_strength: 0.0,
            specular_exponent: 1.0,
            emissive: Vec3::ZERO,
        }
    }

    pub fn glossy(albedo: Vec3, strength: f64, exponent: f64) -> Self {
        MaterialSpec {
            albedo,
            specular_strength: strength,
            specular_exponent: exponent,
            emissive: Vec3::ZERO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(self.albedo.x) && in_unit(self.albedo.y) && in_unit(self.albedo.z)) {
            return Err(Error::InvalidArgument(format!(
                "albedo {:?} outside [0,1]^3",
                self.albedo
            )));
        }
        if !in_unit(self.specular_strength) || !(self.specular_exponent >= 1.0) {
            return Err(Error::InvalidArgument("bad specular parameters".into()));
        }
        if !(self.emissive.x >= 0.0 && self.emissive.y >= 0.0 && self.emissive.z >= 0.0) {
            return Err(Error::InvalidArgument("negative emission".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    /// Rotation about +z, degrees in `[0, 360)`.
    pub rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub name: String,
    pub geometry: Geometry,
    pub material: MaterialSpec,
    pub pose: Pose,
    pub aabb: Aabb,
    /// High-fidelity anchor object; multi-object scenes carry at least one.
    #[serde(default)]
    pub hero: bool,
}

/// A reusable object: geometry plus material, not yet posed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTemplate {
    pub name: String,
    pub geometry: Geometry,
    pub material: MaterialSpec,
}

impl ObjectTemplate {
    /// Pose the template so that its bounds rest on the ground with the
    /// footprint centred at `(x, y)`.
    pub fn instantiate(&self, x: f64, y: f64, rotation_deg: f64, hero: bool) -> Result<ObjectInstance> {
        let rotation_deg = crate::lightfield::wrap_deg(rotation_deg);
        let local = self.geometry.local_aabb(rotation_deg)?;
        let c = local.center();
        let position = Vec3::new(x - c.x, y - c.y, -local.min.z);
        Ok(ObjectInstance {
            name: self.name.clone(),
            geometry: self.geometry.clone(),
            material: self.material,
            pose: Pose {
                position,
                rotation_deg,
            },
            aabb: local.translate(position),
            hero,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroundTexture {
    Checker { size: f64, a: Vec3, b: Vec3 },
    /// PNG image tiled every `tile` metres.
    Image { path: PathBuf, tile: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSpec {
    pub texture: GroundTexture,
    /// In-plane texture rotation, degrees.
    pub rotation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: Vec3,
    pub look_at: Vec3,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        if (self.position - self.look_at).length() == 0.0 {
            return Err(Error::InvalidArgument("camera position equals look-at".into()));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidArgument(format!("fov {} outside (0,180)", self.fov_deg)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image dims must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sky radiance: `intensity · lerp(horizon, zenith, max(0, d.z))`.
/// A constant sky has `horizon == zenith`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientSpec {
    pub horizon: Vec3,
    pub zenith: Vec3,
    pub intensity: f64,
}

impl AmbientSpec {
    pub fn constant(color: Vec3) -> Self {
        AmbientSpec {
            horizon: color,
            zenith: color,
            intensity: 1.0,
        }
    }

    pub fn gradient(horizon: Vec3, zenith: Vec3) -> Self {
        AmbientSpec {
            horizon,
            zenith,
            intensity: 1.0,
        }
    }

    pub fn radiance(&self, dir: Vec3) -> Vec3 {
        let t = dir.z.clamp(0.0, 1.0);
        (self.horizon * (1.0 - t) + self.zenith * t) * self.intensity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub ground: GroundSpec,
    pub objects: Vec<ObjectInstance>,
    pub camera: CameraSpec,
    pub ambient: AmbientSpec,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        for (i, o) in self.objects.iter().enumerate() {
            o.material.validate()?;
            if o.aabb.min.z.abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "object {i} ({}) does not rest on the ground: min z {}",
                    o.name, o.aabb.min.z
                )));
            }
            for (j, p) in self.objects.iter().enumerate().skip(i + 1) {
                if aabb_overlap(&o.aabb, &p.aabb) {
                    return Err(Error::InvalidArgument(format!("objects {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn with_resolution(mut self, width: usize, height: usize) -> Self {
        self.camera.width = width;
        self.camera.height = height;
        self
    }
}

/// Composition constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposeOptions {
    pub camera_height: f64,
    /// Uniform camera elevation perturbation, ± metres.
    pub camera_jitter: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl ComposeOptions {
    pub const SINGLE: ComposeOptions = ComposeOptions {
        camera_height: 2.5,
        camera_jitter: 0.3,
        fov_deg: 40.0,
        width: 64,
        height: 64,
    };
    pub const MULTI: ComposeOptions = ComposeOptions {
        camera_height: 4.0,
        camera_jitter: 0.3,
        fov_deg: 50.0,
        width: 64,
        height: 64,
    };

    pub fn with_resolution(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }
}

fn overhead_camera<R: Rng>(rng: &mut R, opts: &ComposeOptions) -> CameraSpec {
    let dz = rng.gen_range(-opts.camera_jitter..=opts.camera_jitter);
    CameraSpec {
        position: Vec3::new(0.0, 0.0, opts.camera_height + dz),
        look_at: Vec3::ZERO,
        fov_deg: opts.fov_deg,
        width: opts.width,
        height: opts.height,
    }
}

const CHECKER_PALETTE: [(Vec3, Vec3); 4] = [
    (Vec3::new(0.75, 0.75, 0.72), Vec3::new(0.45, 0.45, 0.43)),
    (Vec3::new(0.70, 0.62, 0.50), Vec3::new(0.42, 0.35, 0.28)),
    (Vec3::new(0.60, 0.66, 0.70), Vec3::new(0.35, 0.40, 0.45)),
    (Vec3::new(0.68, 0.70, 0.60), Vec3::new(0.40, 0.44, 0.36)),
];

fn random_ground<R: Rng>(rng: &mut R) -> GroundSpec {
    let (a, b) = CHECKER_PALETTE[rng.gen_range(0..CHECKER_PALETTE.len())];
    GroundSpec {
        texture: GroundTexture::Checker {
            size: rng.gen_range(0.15..0.35),
            a,
            b,
        },
        rotation_deg: rng.gen_range(0.0..360.0),
    }
}

fn default_sky() -> AmbientSpec {
    AmbientSpec::gradient(Vec3::new(0.9, 0.9, 0.95), Vec3::new(0.6, 0.7, 0.9))
}

/// One object at the origin with a random up-axis rotation.
pub fn compose_single(seed: u64, object: &ObjectTemplate, opts: &ComposeOptions) -> Result<SceneSpec> {
    let mut rng = rng_from(seed);
    let rotation = rng.gen_range(0.0..360.0);
    let ground = random_ground(&mut rng);
    let camera = overhead_camera(&mut rng, opts);
    let obj = object.instantiate(0.0, 0.0, rotation, false)?;
    let scene = SceneSpec {
        ground,
        objects: vec![obj],
        camera,
        ambient: default_sky(),
        seed,
    };
    scene.validate()?;
    Ok(scene)
}

/// Archimedean spiral placement with AABB collision checks.
#[derive(Debug, Clone)]
pub struct SpiralPlacer {
    /// Radial growth per full turn, metres.
    pub growth_per_turn: f64,
    /// Angular step between candidate slots, degrees.
    pub step_deg: f64,
    /// Clearance added around every box before the overlap test, metres.
    pub margin: f64,
    /// Largest spiral angle tried, degrees.
    pub max_angle_deg: f64,
    cursor_deg: f64,
    placed: Vec<Aabb>,
    /// Distance from the centre of every candidate slot tried for the most
    /// recent placement.
    pub last_attempts: Vec<f64>,
}

impl Default for SpiralPlacer {
    fn default() -> Self {
        SpiralPlacer {
            growth_per_turn: 0.25,
            step_deg: 15.0,
            margin: 0.01,
            max_angle_deg: 360.0 * 16.0,
            cursor_deg: 0.0,
            placed: Vec::new(),
            last_attempts: Vec::new(),
        }
    }
}

impl SpiralPlacer {
    pub fn slot(&self, angle_deg: f64) -> (f64, f64) {
        let rad = self.growth_per_turn * angle_deg / 360.0;
        let (s, c) = angle_deg.to_radians().sin_cos();
        (rad * c, rad * s)
    }

    pub fn reset_cursor(&mut self) {
        self.cursor_deg = 0.0;
    }

    /// Walk the spiral from the cursor until `make(x, y)` yields an object
    /// whose bounds clear everything placed so far.
    pub fn place<F>(&mut self, mut make: F) -> Result<ObjectInstance>
    where
        F: FnMut(f64, f64) -> Result<ObjectInstance>,
    {
        self.last_attempts.clear();
        let mut angle = self.cursor_deg;
        while angle <= self.max_angle_deg {
            let (x, y) = self.slot(angle);
            self.last_attempts.push(x.hypot(y));
            let obj = make(x, y)?;
            let inflated = obj.aabb.inflate(self.margin);
            if !self.placed.iter().any(|p| aabb_overlap(&inflated, p)) {
                self.placed.push(inflated);
                self.cursor_deg = angle;
                return Ok(obj);
            }
            angle += self.step_deg;
        }
        Err(Error::Placement(format!(
            "no collision-free slot within {} turns ({} objects placed)",
            self.max_angle_deg / 360.0,
            self.placed.len()
        )))
    }
}

/// Up to `max_objects` pool objects plus one hero object, placed along a
/// spiral from the centre.
pub fn compose_multi(
    seed: u64,
    pool: &[ObjectTemplate],
    heroes: &[ObjectTemplate],
    max_objects: usize,
    opts: &ComposeOptions,
) -> Result<SceneSpec> {
    if pool.is_empty() || heroes.is_empty() {
        return Err(Error::InvalidArgument("object pool is empty".into()));
    }
    let mut rng = rng_from(seed);
    let ground = random_ground(&mut rng);
    let camera = overhead_camera(&mut rng, opts);
    let hero = heroes.choose(&mut rng).expect("non-empty");
    let count = if max_objects == 0 { 0 } else { rng.gen_range(1..=max_objects) };
    let mut picks: Vec<(&ObjectTemplate, bool)> = vec![(hero, true)];
    for _ in 0..count {
        picks.push((pool.choose(&mut rng).expect("non-empty"), false));
    }

    let mut placer = SpiralPlacer::default();
    let mut objects = Vec::with_capacity(picks.len());
    for (tpl, is_hero) in picks {
        let rotation = rng.gen_range(0.0..360.0);
        let obj = placer.place(|x, y| tpl.instantiate(x, y, rotation, is_hero))?;
        objects.push(obj);
    }
    let scene = SceneSpec {
        ground,
        objects,
        camera,
        ambient: default_sky(),
        seed,
    };
    scene.validate()?;
    Ok(scene)
}

/// Plain white-ish Lambertian sphere of radius 0.3 m.
pub fn lambertian_sphere() -> ObjectTemplate {
    ObjectTemplate {
        name: "sphere".into(),
        geometry: Geometry::Sphere { radius: 0.3 },
        material: MaterialSpec::lambertian(Vec3::new(0.8, 0.8, 0.8)),
    }
}

/// Default pool of procedural and bundled objects, roughly 0.2-0.5 m across.
pub fn default_pool() -> Vec<ObjectTemplate> {
    let mesh = |name: &str, scale: f64| Geometry::Mesh {
        source: MeshSource::Bundled(name.into()),
        scale,
    };
    let t = |name: &str, geometry: Geometry, material: MaterialSpec| ObjectTemplate {
        name: name.into(),
        geometry,
        material,
    };
    vec![
        t("sphere", Geometry::Sphere { radius: 0.2 }, MaterialSpec::lambertian(Vec3::new(0.8, 0.3, 0.25))),
        t("box", Geometry::Box { half_extents: Vec3::new(0.2, 0.12, 0.15) }, MaterialSpec::lambertian(Vec3::new(0.3, 0.6, 0.8))),
        t("tetrahedron", mesh("tetrahedron", 0.5), MaterialSpec::lambertian(Vec3::new(0.9, 0.8, 0.3))),
        t("octahedron", mesh("octahedron", 0.5), MaterialSpec::glossy(Vec3::new(0.4, 0.7, 0.4), 0.3, 32.0)),
        t("cone", mesh("cone", 0.45), MaterialSpec::lambertian(Vec3::new(0.7, 0.5, 0.8))),
        t("cylinder", mesh("cylinder", 0.5), MaterialSpec::glossy(Vec3::new(0.6, 0.6, 0.6), 0.2, 16.0)),
        t("pyramid", mesh("pyramid", 0.45), MaterialSpec::lambertian(Vec3::new(0.85, 0.6, 0.4))),
        t("prism", mesh("prism", 0.45), MaterialSpec::lambertian(Vec3::new(0.5, 0.5, 0.9))),
    ]
}

/// Hero objects: richer shapes with glossy materials.
pub fn hero_pool() -> Vec<ObjectTemplate> {
    let mesh = |name: &str, scale: f64| Geometry::Mesh {
        source: MeshSource::Bundled(name.into()),
        scale,
    };
    vec![
        ObjectTemplate {
            name: "torus".into(),
            geometry: mesh("torus", 0.8),
            material: MaterialSpec::glossy(Vec3::new(0.8, 0.55, 0.2), 0.5, 64.0),
        },
        ObjectTemplate {
            name: "icosphere".into(),
            geometry: mesh("icosphere", 0.7),
            material: MaterialSpec::glossy(Vec3::new(0.2, 0.45, 0.8), 0.4, 48.0),
        },
        ObjectTemplate {
            name: "mug".into(),
            geometry: mesh("mug", 0.6),
            material: MaterialSpec::glossy(Vec3::new(0.9, 0.9, 0.85), 0.3, 32.0),
        },
        ObjectTemplate {
            name: "stool".into(),
            geometry: mesh("stool", 0.8),
            material: MaterialSpec::lambertian(Vec3::new(0.55, 0.35, 0.2)),
        },
    ]
}
