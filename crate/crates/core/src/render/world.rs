//! Scene prepared for tracing: meshes loaded and transformed to world
//! space, acceleration structures built, textures decoded.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::image::{read_png, Image};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::scene::{
    AmbientSpec, CameraSpec, Geometry, GroundTexture, MaterialSpec, SceneSpec,
};

use super::bvh::Bvh;

/// Self-intersection offset, metres.
pub const EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    /// `dir` must be non-zero; it is normalized here.
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray {
            origin,
            dir: dir.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Ground,
    Object(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct HitRecord {
    pub t: f64,
    pub point: Vec3,
    /// Unit shading normal, facing the incoming ray.
    pub normal: Vec3,
    /// Unit geometric normal, facing the incoming ray.
    pub geo_normal: Vec3,
    pub surface: Surface,
}

#[derive(Debug, Clone)]
enum Shape {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    Box {
        center: Vec3,
        half: Vec3,
        rotation_deg: f64,
    },
    Mesh {
        mesh: Arc<TriangleMesh>,
        bvh: Arc<Bvh>,
    },
}

#[derive(Debug, Clone)]
struct Object {
    shape: Shape,
    material: MaterialSpec,
    bounds: crate::aabb::Aabb,
}

#[derive(Debug, Clone)]
enum GroundTex {
    Checker { size: f64, a: Vec3, b: Vec3 },
    Image { img: Arc<Image>, tile: f64 },
}

#[derive(Debug, Clone)]
pub struct PreparedScene {
    objects: Vec<Object>,
    ground: GroundTex,
    ground_rotation_deg: f64,
    pub camera: CameraSpec,
    pub ambient: AmbientSpec,
    pub seed: u64,
}

impl PreparedScene {
    pub fn new(spec: &SceneSpec) -> Result<Self> {
        spec.camera.validate()?;
        let mut objects = Vec::with_capacity(spec.objects.len());
        for o in &spec.objects {
            o.material.validate()?;
            let p = o.pose.position;
            let shape = match &o.geometry {
                Geometry::Sphere { radius } => Shape::Sphere {
                    center: p,
                    radius: *radius,
                },
                Geometry::Box { half_extents } => Shape::Box {
                    center: p,
                    half: *half_extents,
                    rotation_deg: o.pose.rotation_deg,
                },
                Geometry::Mesh { source, scale } => {
                    let mesh = source
                        .load()?
                        .transformed(*scale, o.pose.rotation_deg, p);
                    let bvh = Bvh::build(&mesh);
                    Shape::Mesh {
                        mesh: Arc::new(mesh),
                        bvh: Arc::new(bvh),
                    }
                }
            };
            objects.push(Object {
                shape,
                material: o.material,
                bounds: o.aabb.inflate(EPSILON),
            });
        }
        let ground = match &spec.ground.texture {
            GroundTexture::Checker { size, a, b } => {
                if !(*size > 0.0) {
                    return Err(Error::InvalidArgument("checker size must be > 0".into()));
                }
                GroundTex::Checker {
                    size: *size,
                    a: *a,
                    b: *b,
                }
            }
            GroundTexture::Image { path, tile } => {
                let img = read_png(path)?.to_unit();
                if img.channels < 3 || !(*tile > 0.0) {
                    return Err(Error::Image {
                        path: path.clone(),
                        msg: "ground texture needs RGB and tile > 0".into(),
                    });
                }
                GroundTex::Image {
                    img: Arc::new(img),
                    tile: *tile,
                }
            }
        };
        Ok(PreparedScene {
            objects,
            ground,
            ground_rotation_deg: spec.ground.rotation_deg,
            camera: spec.camera,
            ambient: spec.ambient,
            seed: spec.seed,
        })
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn material(&self, surface: Surface, point: Vec3) -> MaterialSpec {
        match surface {
            Surface::Object(i) => self.objects[i].material,
            Surface::Ground => MaterialSpec::lambertian(self.ground_albedo(point)),
        }
    }

    pub fn ground_albedo(&self, p: Vec3) -> Vec3 {
        let q = p.rotate_z(-self.ground_rotation_deg);
        match &self.ground {
            GroundTex::Checker { size, a, b } => {
                let i = (q.x / size).floor() as i64 + (q.y / size).floor() as i64;
                if i.rem_euclid(2) == 0 {
                    *a
                } else {
                    *b
                }
            }
            GroundTex::Image { img, tile } => {
                let u = (q.x / tile).rem_euclid(1.0);
                let v = (q.y / tile).rem_euclid(1.0);
                let x = ((u * img.width as f64) as usize).min(img.width - 1);
                let y = ((v * img.height as f64) as usize).min(img.height - 1);
                Vec3::new(img.get(x, y, 0), img.get(x, y, 1), img.get(x, y, 2))
            }
        }
    }

    /// Closest hit in `(t_min, t_max)`.
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<HitRecord> {
        self.trace(ray, t_min, t_max, false)
    }

    /// True if anything blocks the segment `(t_min, t_max)` along `ray`.
    pub fn occluded(&self, ray: &Ray, t_min: f64, t_max: f64) -> bool {
        self.trace(ray, t_min, t_max, true).is_some()
    }

    fn trace(&self, ray: &Ray, t_min: f64, mut t_max: f64, any: bool) -> Option<HitRecord> {
        let mut best: Option<(f64, Surface, Vec3, Vec3)> = None;

        // Ground plane z = 0.
        if ray.dir.z.abs() > 1e-15 {
            let t = -ray.origin.z / ray.dir.z;
            if t > t_min && t < t_max {
                t_max = t;
                best = Some((t, Surface::Ground, Vec3::Z, Vec3::Z));
                if any {
                    return self.finish(ray, best);
                }
            }
        }

        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.bounds.hit(ray.origin, inv, t_min, t_max).is_none() {
                continue;
            }
            let hit = match &obj.shape {
                Shape::Sphere { center, radius } => {
                    hit_sphere(ray, *center, *radius, t_min, t_max).map(|t| {
                        let n = (ray.at(t) - *center) / *radius;
                        (t, n, n)
                    })
                }
                Shape::Box {
                    center,
                    half,
                    rotation_deg,
                } => hit_box(ray, *center, *half, *rotation_deg, t_min, t_max)
                    .map(|(t, n)| (t, n, n)),
                Shape::Mesh { mesh, bvh } => bvh
                    .intersect(mesh, ray.origin, ray.dir, t_min, t_max, any)
                    .map(|h| {
                        let g = mesh.face_normal(h.face);
                        (h.t, shading_normal(mesh, h.face, h.u, h.v, g), g)
                    }),
            };
            if let Some((t, n, g)) = hit {
                t_max = t;
                best = Some((t, Surface::Object(i), n, g));
                if any {
                    break;
                }
            }
        }
        self.finish(ray, best)
    }

    fn finish(&self, ray: &Ray, best: Option<(f64, Surface, Vec3, Vec3)>) -> Option<HitRecord> {
        let (t, surface, n, g) = best?;
        let flip = if g.dot(ray.dir) > 0.0 { -1.0 } else { 1.0 };
        let geo_normal = g * flip;
        let mut normal = n * flip;
        if normal.dot(geo_normal) <= 0.0 {
            normal = geo_normal;
        }
        Some(HitRecord {
            t,
            point: ray.at(t),
            normal,
            geo_normal,
            surface,
        })
    }
}

/// Interpolated vertex normal, unless the triangle spans a crease wider
/// than ~30 degrees, in which case the face normal.
fn shading_normal(mesh: &TriangleMesh, face: usize, u: f64, v: f64, geo: Vec3) -> Vec3 {
    let [a, b, c] = mesh.faces[face];
    let na = mesh.normals[a as usize];
    let nb = mesh.normals[b as usize];
    let nc = mesh.normals[c as usize];
    let crease = 0.866;
    if na.dot(geo) < crease || nb.dot(geo) < crease || nc.dot(geo) < crease {
        return geo;
    }
    (na * (1.0 - u - v) + nb * u + nc * v).try_normalize().unwrap_or(geo)
}

fn hit_sphere(ray: &Ray, center: Vec3, radius: f64, t_min: f64, t_max: f64) -> Option<f64> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Numerically stable root pair.
    let q = -b - s.copysign(b);
    let (mut t0, mut t1) = if q != 0.0 { (q, c / q) } else { (-b, -b) };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    [t0, t1].into_iter().find(|t| *t > t_min && *t < t_max)
}

fn hit_box(
    ray: &Ray,
    center: Vec3,
    half: Vec3,
    rotation_deg: f64,
    t_min: f64,
    t_max: f64,
) -> Option<(f64, Vec3)> {
    let o = (ray.origin - center).rotate_z(-rotation_deg);
    let d = ray.dir.rotate_z(-rotation_deg);
    let mut t0 = t_min;
    let mut t1 = t_max;
    let mut n0 = Vec3::ZERO;
    let mut n1 = Vec3::ZERO;
    for a in 0..3 {
        let axis = match a {
            0 => Vec3::new(1.0, 0.0, 0.0),
            1 => Vec3::new(0.0, 1.0, 0.0),
            _ => Vec3::Z,
        };
        if d[a].abs() < 1e-300 {
            if o[a] < -half[a] || o[a] > half[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[a];
        let mut ta = (-half[a] - o[a]) * inv;
        let mut tb = (half[a] - o[a]) * inv;
        let mut na = -axis;
        let mut nb = axis;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
            std::mem::swap(&mut na, &mut nb);
        }
        if ta > t0 {
            t0 = ta;
            n0 = na;
        }
        if tb < t1 {
            t1 = tb;
            n1 = nb;
        }
        if t1 < t0 {
            return None;
        }
    }
    let (t, n) = if n0 != Vec3::ZERO {
        (t0, n0)
    } else if n1 != Vec3::ZERO && t1 < t_max {
        // Origin inside the box: exit face.
        (t1, n1)
    } else {
        return None;
    };
    Some((t, n.rotate_z(rotation_deg)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_hits_near_side() {
        let r = Ray::new(Vec3::new(0.0, 0.0, 5.0), -Vec3::Z);
        let t = hit_sphere(&r, Vec3::new(0.0, 0.0, 1.0), 0.5, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 3.5).abs() < 1e-12);
        let inside = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::Z);
        let t = hit_sphere(&inside, Vec3::new(0.0, 0.0, 1.0), 0.5, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rotated_box_hit_and_normal() {
        let r = Ray::new(Vec3::new(5.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let (t, n) = hit_box(&r, Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), 45.0, 1e-9, f64::INFINITY).unwrap();
        assert!((t - (5.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!(n.x > 0.0 && (n.length() - 1.0).abs() < 1e-12);
        let miss = Ray::new(Vec3::new(5.0, 3.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        assert!(hit_box(&miss, Vec3::ZERO, Vec3::splat(1.0), 0.0, 1e-9, f64::INFINITY).is_none());
    }
}
