//! CPU renderer for relighting clips.
//!
//! Each pixel sums a direct point-light term (Lambert plus a Phong lobe,
//! irradiance `P / (4π d²) · cos`, shadow-ray visibility), sky light scaled
//! by the frame's environment intensity, and Monte Carlo diffuse
//! interreflection up to `bounces` deep. Random streams are keyed by
//! `(seed, tile)`, so the image does not depend on thread count and every
//! frame of a clip reuses the same samples (a static light gives identical
//! frames, and noise does not flicker between frames).

pub mod bvh;
pub mod post;
pub mod world;

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{write_pfm, write_png, Image};
use crate::lightfield::{polar_to_cartesian, LightState, Trajectory};
use crate::math::Vec3;
use crate::scene::{CameraSpec, MaterialSpec};
use crate::seed::child_rng;

pub use post::{composite_glow, tonemap, GlowSettings};
pub use world::{HitRecord, PreparedScene, Ray, Surface, EPSILON};

const TILE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub spp: usize,
    pub bounces: usize,
    pub gamma: f64,
    /// Linear scale applied before tone mapping.
    pub exposure: f64,
    /// Bloom around the light marker; `None` disables it.
    pub glow: Option<GlowSettings>,
    /// Radius of the light-marker sphere used for the glow mask, metres.
    pub marker_radius: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            spp: 16,
            bounces: 2,
            gamma: 2.2,
            exposure: 0.3,
            glow: None,
            marker_radius: 0.04,
        }
    }
}

impl RenderSettings {
    /// Production-scale single-object settings (1024 spp, 8 bounces).
    pub fn production_single() -> Self {
        RenderSettings {
            spp: 1024,
            bounces: 8,
            ..Self::default()
        }
    }

    /// Production-scale multi-object settings (512 spp, 8 bounces, glow).
    pub fn production_multi() -> Self {
        RenderSettings {
            spp: 512,
            bounces: 8,
            glow: Some(GlowSettings::default()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 {
            return Err(Error::InvalidArgument("spp must be >= 1".into()));
        }
        if !(self.gamma > 0.0) || !(self.exposure >= 0.0) {
            return Err(Error::InvalidArgument("gamma must be > 0, exposure >= 0".into()));
        }
        Ok(())
    }
}

/// Pinhole camera basis.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    origin: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half: f64,
    width: usize,
    height: usize,
}

impl Camera {
    pub fn new(spec: &CameraSpec) -> Result<Self> {
        spec.validate()?;
        let forward = (spec.look_at - spec.position).normalize();
        // Straight-down cameras use +y as image up, so image right is +x.
        let world_up = if forward.z.abs() > 0.999 {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::Z
        };
        let right = forward.cross(world_up).normalize();
        let up = right.cross(forward);
        Ok(Camera {
            origin: spec.position,
            forward,
            right,
            up,
            tan_half: (spec.fov_deg.to_radians() * 0.5).tan(),
            width: spec.width,
            height: spec.height,
        })
    }

    /// Ray through image position `(px, py)` in pixel units, origin top-left.
    pub fn ray(&self, px: f64, py: f64) -> Ray {
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * px / self.width as f64 - 1.0) * self.tan_half * aspect;
        let sy = (1.0 - 2.0 * py / self.height as f64) * self.tan_half;
        Ray::new(self.origin, self.forward + self.right * sx + self.up * sy)
    }
}

/// Point light with power `power` at `position`.
#[derive(Debug, Clone, Copy)]
pub struct PointLight {
    pub position: Vec3,
    pub power: f64,
}

impl PointLight {
    pub fn from_state(s: &LightState) -> Self {
        PointLight {
            position: polar_to_cartesian(s),
            power: s.i_p,
        }
    }
}

/// Shadow test from a surface point (offset along its geometric normal).
pub fn visible(scene: &PreparedScene, point: Vec3, geo_normal: Vec3, light: Vec3) -> bool {
    let origin = point + geo_normal * EPSILON;
    segment_clear(scene, origin, light)
}

/// True when nothing blocks the open segment between `a` and `b`
/// (shrunk by `EPSILON` at both ends).
pub fn segment_clear(scene: &PreparedScene, a: Vec3, b: Vec3) -> bool {
    let d = b - a;
    let dist = d.length();
    if dist <= 2.0 * EPSILON {
        return true;
    }
    !scene.occluded(&Ray::new(a, d), EPSILON, dist - EPSILON)
}

/// Irradiance at `point` from `light`, shadowed: `P / (4π d²) · max(0, n·l)`.
pub fn direct_irradiance(
    scene: &PreparedScene,
    point: Vec3,
    normal: Vec3,
    geo_normal: Vec3,
    light: &PointLight,
) -> f64 {
    let to_light = light.position - point;
    let d2 = to_light.length_squared();
    if d2 == 0.0 || light.power == 0.0 {
        return 0.0;
    }
    let l = to_light / d2.sqrt();
    let cos = normal.dot(l);
    if cos <= 0.0 || geo_normal.dot(l) <= 0.0 {
        return 0.0;
    }
    if !visible(scene, point, geo_normal, light.position) {
        return 0.0;
    }
    light.power / (4.0 * PI * d2) * cos
}

/// Outgoing radiance towards `view` (unit, pointing away from the surface)
/// due to the point light.
pub fn direct_radiance(
    scene: &PreparedScene,
    hit: &HitRecord,
    mat: &MaterialSpec,
    view: Vec3,
    light: &PointLight,
) -> Vec3 {
    let e = direct_irradiance(scene, hit.point, hit.normal, hit.geo_normal, light);
    if e == 0.0 {
        return Vec3::ZERO;
    }
    let l = (light.position - hit.point).normalize();
    let diffuse = mat.albedo * ((1.0 - mat.specular_strength) / PI);
    let mut f = diffuse;
    if mat.specular_strength > 0.0 {
        let n = hit.normal;
        let refl = n * (2.0 * n.dot(l)) - l;
        let c = refl.dot(view).max(0.0);
        let lobe = mat.specular_strength * (mat.specular_exponent + 2.0) / (2.0 * PI)
            * c.powf(mat.specular_exponent);
        f += Vec3::splat(lobe);
    }
    f * e
}

fn cosine_sample<R: Rng>(rng: &mut R, n: Vec3) -> Vec3 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let (t, b) = n.basis();
    (t * (r * phi.cos()) + b * (r * phi.sin()) + n * (1.0 - u1).max(0.0).sqrt()).normalize()
}

/// Radiance arriving along `ray`.
pub fn trace_radiance<R: Rng>(
    scene: &PreparedScene,
    ray: Ray,
    light: &PointLight,
    env: f64,
    bounces: usize,
    rng: &mut R,
) -> Vec3 {
    let Some(mut hit) = scene.intersect(&ray, 0.0, f64::INFINITY) else {
        return scene.ambient.radiance(ray.dir) * env;
    };
    let mut view = -ray.dir;
    let mut radiance = Vec3::ZERO;
    let mut throughput = Vec3::ONE;
    for depth in 0..=bounces {
        let mat = scene.material(hit.surface, hit.point);
        radiance += throughput.mul_elem(mat.emissive);
        radiance += throughput.mul_elem(direct_radiance(scene, &hit, &mat, view, light));

        // One cosine-distributed continuation: it picks up sky light if it
        // escapes and becomes the next bounce otherwise.
        let dir = cosine_sample(rng, hit.normal);
        if dir.dot(hit.geo_normal) <= 0.0 {
            break;
        }
        throughput = throughput.mul_elem(mat.albedo * (1.0 - mat.specular_strength));
        let next = Ray::new(hit.point + hit.geo_normal * EPSILON, dir);
        match scene.intersect(&next, 0.0, f64::INFINITY) {
            None => {
                radiance += throughput.mul_elem(scene.ambient.radiance(dir)) * env;
                break;
            }
            Some(h) if depth < bounces => {
                hit = h;
                view = -dir;
            }
            Some(_) => break,
        }
    }
    if radiance.is_finite() {
        radiance
    } else {
        Vec3::ZERO
    }
}

fn hits_marker(ray: &Ray, center: Vec3, radius: f64) -> Option<f64> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t > 0.0).then_some(t)
}

/// One rendered frame: linear radiance and the light-marker coverage mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub radiance: Image,
    pub light_mask: Image,
}

pub fn render_frame(
    scene: &PreparedScene,
    light: &LightState,
    settings: &RenderSettings,
    seed: u64,
) -> Result<FrameOutput> {
    settings.validate()?;
    light.validate()?;
    let cam = Camera::new(&scene.camera)?;
    let (w, h) = (scene.camera.width, scene.camera.height);
    let pl = PointLight::from_state(light);
    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let inv_spp = 1.0 / settings.spp as f64;

    let tiles: Vec<Vec<(usize, usize, Vec3, f64)>> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|tile| {
            let mut rng: ChaCha8Rng = child_rng(seed, "render-tile", tile as u64);
            let (tx, ty) = (tile % tiles_x, tile / tiles_x);
            let mut out = Vec::with_capacity(TILE * TILE);
            for y in ty * TILE..((ty + 1) * TILE).min(h) {
                for x in tx * TILE..((tx + 1) * TILE).min(w) {
                    let mut sum = Vec3::ZERO;
                    let mut marker = 0.0;
                    for _ in 0..settings.spp {
                        let jx: f64 = rng.gen();
                        let jy: f64 = rng.gen();
                        let ray = cam.ray(x as f64 + jx, y as f64 + jy);
                        if let Some(tm) = hits_marker(&ray, pl.position, settings.marker_radius) {
                            let blocked = scene
                                .intersect(&ray, 0.0, tm)
                                .is_some();
                            if !blocked {
                                marker += 1.0;
                            }
                        }
                        sum += trace_radiance(scene, ray, &pl, light.i_e, settings.bounces, &mut rng);
                    }
                    out.push((x, y, sum * inv_spp, marker * inv_spp));
                }
            }
            out
        })
        .collect();

    let mut radiance = Image::new(w, h, 3);
    let mut light_mask = Image::new(w, h, 1);
    for (x, y, c, m) in tiles.into_iter().flatten() {
        radiance.set(x, y, 0, c.x);
        radiance.set(x, y, 1, c.y);
        radiance.set(x, y, 2, c.z);
        light_mask.set(x, y, 0, m);
    }
    Ok(FrameOutput {
        radiance,
        light_mask,
    })
}

/// Binary foreground mask from the object-ID pass (pixel-centre rays).
pub fn object_mask(scene: &PreparedScene) -> Result<Image> {
    let cam = Camera::new(&scene.camera)?;
    let (w, h) = (scene.camera.width, scene.camera.height);
    let mut m = Image::new(w, h, 1);
    for y in 0..h {
        for x in 0..w {
            let ray = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
            if let Some(hit) = scene.intersect(&ray, 0.0, f64::INFINITY) {
                if matches!(hit.surface, Surface::Object(_)) {
                    m.set(x, y, 0, 1.0);
                }
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    /// Linear RGB frames, glow already composited when enabled.
    pub frames: Vec<Image>,
    pub control: Trajectory,
    pub seed: u64,
    pub foreground: Image,
}

pub fn render_clip(
    scene: &PreparedScene,
    traj: &Trajectory,
    settings: &RenderSettings,
    seed: u64,
) -> Result<VideoClip> {
    let frames = traj
        .states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let out = render_frame(scene, s, settings, seed).map_err(|e| Error::Frame {
                frame: i + 1,
                source: Box::new(e),
            })?;
            Ok(match &settings.glow {
                Some(g) => composite_glow(&out.radiance, &out.light_mask, g),
                None => out.radiance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, f) in frames.iter().enumerate() {
        if !f.all_finite() {
            return Err(Error::Frame {
                frame: i + 1,
                source: Box::new(Error::InvalidArgument("non-finite radiance".into())),
            });
        }
    }
    Ok(VideoClip {
        frames,
        control: traj.clone(),
        seed,
        foreground: object_mask(scene)?,
    })
}

pub fn frame_file_name(frame: usize, ext: &str) -> String {
    format!("frame_{frame:03}.{ext}")
}

/// Write `frame_%03d.png` (1-based), optional `.pfm`, `mask.png` and
/// `control.json` into `dir`. Returns the PNG paths.
pub fn write_clip(
    dir: &Path,
    clip: &VideoClip,
    settings: &RenderSettings,
    pfm: bool,
) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(clip.frames.len());
    for (i, f) in clip.frames.iter().enumerate() {
        let name = frame_file_name(i + 1, "png");
        write_png(dir.join(&name), &tonemap(&f.scaled(settings.exposure), settings.gamma))?;
        if pfm {
            write_pfm(dir.join(frame_file_name(i + 1, "pfm")), f)?;
        }
        names.push(name);
    }
    write_png(dir.join("mask.png"), &tonemap(&clip.foreground, 1.0))?;
    let control = dir.join("control.json");
    std::fs::write(&control, clip.control.to_control_json()?).map_err(|e| Error::io(&control, e))?;
    Ok(names)
}
