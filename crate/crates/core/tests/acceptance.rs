//! End-to-end acceptance checks. Each test prints one line:
//! `criterion N: PASS|FAIL  <name>  <details>`.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use forge_core::campaign::{
    campaign_trajectory, load_examples, read_trajectory, run_campaign, CampaignConfig, Mode,
    ObjectChoice, Split,
};
use forge_core::diffusion::{
    fixed_eval_loss, gradient_check, precondition, sample, tensor_to_frames, train, Denoiser,
    Draw, EdmSchedule, Example, Layer, Tensor, ToyConfig, ToyDenoiser, TrainConfig, TrainState,
};
use forge_core::eval::{
    mit_trajectories, octant_matches, psnr_from_mse, rmse, ssim, Mask, SsimParams,
};
use forge_core::image::Image;
use forge_core::lightfield::{
    build_control_volume, grid_positions, ControlEncoding, FrameLayout, LightState, PolarBox,
    SchedulePreset, TrajectoryKind,
};
use forge_core::math::Vec3;
use forge_core::mesh::bundled;
use forge_core::render::{
    direct_irradiance, object_mask, render_frame, visible, PointLight, PreparedScene,
    RenderSettings, EPSILON,
};
use forge_core::render::Camera;
use forge_core::scene::{
    AmbientSpec, CameraSpec, Geometry, GroundSpec, GroundTexture, MaterialSpec, MeshSource,
    ObjectTemplate, SceneSpec,
};
use forge_core::seed::rng_from;

fn report(n: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let ok = pass && elapsed <= budget;
    // Written to the raw handle so the line shows without --nocapture.
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {n}: {}  {name}  {detail}  [{:.2?} / budget {:.0?}]",
        if ok { "PASS" } else { "FAIL" },
        elapsed,
        budget
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
    assert!(elapsed <= budget, "criterion {n} ({name}) exceeded its {budget:?} budget");
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_edm_identities() {
    let t = Instant::now();
    let mut rng = rng_from(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        // (0, 100]
        let sigma = 100.0 * (1.0 - rng.gen::<f64>());
        let p = precondition(sigma).unwrap();
        let s2 = sigma * sigma;
        worst = worst
            .max(rel_err(p.c_skip, 1.0 / (1.0 + s2)))
            .max(rel_err(p.c_out, sigma / (1.0 + s2).sqrt()))
            .max(rel_err(p.w * p.c_out * p.c_out, 1.0));
    }
    report(
        1,
        "EDM identities",
        worst <= 1e-12,
        t.elapsed(),
        Duration::from_secs(1),
        &format!("1000 sigma, worst relative error {worst:.2e} (tol 1e-12)"),
    );
}

fn random_tensor(n: usize, c: usize, h: usize, w: usize, rng: &mut impl Rng, scale: f64) -> Tensor {
    let data = (0..n * c * h * w)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Tensor::from_vec(n, c, h, w, data).unwrap()
}

fn random_control(n: usize, h: usize, w: usize, rng: &mut impl Rng) -> Tensor {
    let mut t = Tensor::zeros(n, 5, h, w);
    for f in 0..n {
        for c in 0..5 {
            let v: f64 = rng.gen();
            t.plane_mut(f, c).fill(v);
        }
    }
    t
}

#[test]
fn criterion_02_zero_init_control_equivalence() {
    let t = Instant::now();
    let model = ToyDenoiser::new(ToyConfig::default());
    let mut rng = rng_from(202);
    let (n, h, w) = (14, 16, 16);
    let mut identical = 0;
    for _ in 0..50 {
        let sigma = (rng.gen_range(0.02f64.ln()..80f64.ln())).exp();
        let x = random_tensor(n, 3, h, w, &mut rng, sigma.max(1.0));
        let cond = random_tensor(1, 3, h, w, &mut rng, 0.5);
        let control = random_control(n, h, w, &mut rng);
        let a = model.phi(&x, sigma, &cond, &control).unwrap();
        let b = model.phi(&x, sigma, &cond, &Tensor::zeros(n, 5, h, w)).unwrap();
        if a.data.iter().zip(&b.data).all(|(p, q)| p.to_bits() == q.to_bits()) {
            identical += 1;
        }
    }
    // The comparison must be able to fail: once projections are non-zero the
    // control changes the output.
    let mut live = model.clone();
    live.randomize_projections(3, 0.1);
    let x = random_tensor(n, 3, h, w, &mut rng, 1.0);
    let cond = random_tensor(1, 3, h, w, &mut rng, 0.5);
    let control = random_control(n, h, w, &mut rng);
    let a = live.phi(&x, 1.0, &cond, &control).unwrap();
    let b = live.phi(&x, 1.0, &cond, &Tensor::zeros(n, 5, h, w)).unwrap();
    let sensitive = a != b;
    report(
        2,
        "zero-init control equivalence",
        identical == 50 && sensitive,
        t.elapsed(),
        Duration::from_secs(10),
        &format!("{identical}/50 bit-identical; non-zero projections change output: {sensitive}"),
    );
}

fn random_example(id: usize, n: usize, h: usize, w: usize, rng: &mut impl Rng) -> Example {
    let clean = Tensor::from_vec(
        n,
        3,
        h,
        w,
        (0..n * 3 * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let control = random_control(n, h, w, rng);
    let cond = Tensor::from_vec(1, 3, h, w, clean.frame(0).to_vec()).unwrap();
    Example {
        id: format!("ex{id}"),
        clean,
        cond,
        control,
    }
}

#[test]
fn criterion_03_gradient_check() {
    let t = Instant::now();
    let mut rng = rng_from(303);
    let mut model = ToyDenoiser::new(ToyConfig {
        c1: 6,
        c2: 8,
        init_seed: 31,
    });
    // Zero projections would make every control-branch gradient vanish.
    model.randomize_projections(32, 0.3);
    let examples: Vec<Example> = (0..2).map(|i| random_example(i, 4, 8, 8, &mut rng)).collect();
    let batch: Vec<&Example> = examples.iter().collect();
    let draws: Vec<Draw> = [0.2, 3.0]
        .iter()
        .map(|&sigma| Draw {
            sigma,
            eps: random_tensor(4, 3, 8, 8, &mut rng, 1.0),
        })
        .collect();
    let checks = gradient_check(&model, &batch, &draws, 20, 1e-4, 33).unwrap();
    let mut per_layer: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for c in &checks {
        let e = per_layer.entry(c.layer.name()).or_default();
        e.0 += 1;
        e.1 = e.1.max(c.rel_err);
    }
    let worst = checks.iter().map(|c| c.rel_err).fold(0.0, f64::max);
    let covered = Layer::ALL
        .iter()
        .all(|l| per_layer.get(l.name()).is_some_and(|e| e.0 >= 20));
    let detail = per_layer
        .iter()
        .map(|(k, (n, e))| format!("{k}:{n}@{e:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    report(
        3,
        "gradient check",
        covered && worst <= 1e-3,
        t.elapsed(),
        Duration::from_secs(120),
        &format!("{} params, worst rel {worst:.2e} (tol 1e-3); {detail}", checks.len()),
    );
}

fn white_floor(objects: Vec<forge_core::scene::ObjectInstance>, size: usize) -> SceneSpec {
    SceneSpec {
        ground: GroundSpec {
            texture: GroundTexture::Checker {
                size: 1.0,
                a: Vec3::splat(0.8),
                b: Vec3::splat(0.8),
            },
            rotation_deg: 0.0,
        },
        objects,
        camera: CameraSpec {
            position: Vec3::new(0.0, 0.0, 2.5),
            look_at: Vec3::ZERO,
            fov_deg: 40.0,
            width: size,
            height: size,
        },
        ambient: AmbientSpec::constant(Vec3::ONE),
        seed: 0,
    }
}

/// Segment/triangle test by plane intersection, then barycentric
/// coordinates of the hit point.
fn segment_hits_triangle(o: Vec3, d: Vec3, t0: f64, t1: f64, tri: [Vec3; 3]) -> bool {
    let [a, b, c] = tri;
    let n = (b - a).cross(c - a);
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return false;
    }
    let t = n.dot(a - o) / denom;
    if t <= t0 || t >= t1 {
        return false;
    }
    let p = o + d * t;
    let (v0, v1, v2) = (b - a, c - a, p - a);
    let (d00, d01, d11) = (v0.dot(v0), v0.dot(v1), v1.dot(v1));
    let (d20, d21) = (v2.dot(v0), v2.dot(v1));
    let den = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / den;
    let w = (d00 * d21 - d01 * d20) / den;
    v >= 0.0 && w >= 0.0 && v + w <= 1.0
}

fn segment_hits_sphere(o: Vec3, d: Vec3, t0: f64, t1: f64, center: Vec3, radius: f64) -> bool {
    let oc = o - center;
    let b = oc.dot(d);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return false;
    }
    let s = disc.sqrt();
    [-b - s, -b + s].iter().any(|&t| t > t0 && t < t1)
}

#[test]
fn criterion_04_renderer_physics() {
    let t = Instant::now();

    // Inverse-square falloff on an empty white floor.
    let empty = PreparedScene::new(&white_floor(vec![], 8)).unwrap();
    let mut rng = rng_from(404);
    let mut falloff_err = 0.0f64;
    for _ in 0..1000 {
        let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0);
        let light = PointLight {
            position: Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.2..4.0)),
            power: rng.gen_range(1.0..200.0),
        };
        let e = direct_irradiance(&empty, p, Vec3::Z, Vec3::Z, &light);
        let d = light.position - p;
        let oracle = light.power * (d.z / d.length()) / (4.0 * PI * d.length_squared());
        falloff_err = falloff_err.max(rel_err(e, oracle));
        // Doubling the distance along the same direction quarters irradiance.
        let far = PointLight {
            position: p + d * 2.0,
            ..light
        };
        let e2 = direct_irradiance(&empty, p, Vec3::Z, Vec3::Z, &far);
        falloff_err = falloff_err.max(rel_err(e2 * 4.0, e));
    }
    let falloff_ok = falloff_err <= 1e-6;

    // Shadow visibility against a brute-force oracle.
    let mesh_obj = |name: &str, scale: f64, x: f64, y: f64, rot: f64| {
        ObjectTemplate {
            name: name.into(),
            geometry: Geometry::Mesh {
                source: MeshSource::Bundled(name.into()),
                scale,
            },
            material: MaterialSpec::lambertian(Vec3::splat(0.5)),
        }
        .instantiate(x, y, rot, false)
        .unwrap()
    };
    let sphere = ObjectTemplate {
        name: "sphere".into(),
        geometry: Geometry::Sphere { radius: 0.2 },
        material: MaterialSpec::lambertian(Vec3::splat(0.5)),
    }
    .instantiate(-0.35, 0.3, 0.0, false)
    .unwrap();
    let objects = vec![
        mesh_obj("torus", 0.8, 0.35, 0.25, 17.0),
        mesh_obj("stool", 0.6, -0.3, -0.35, 40.0),
        mesh_obj("cone", 0.5, 0.3, -0.4, 0.0),
        sphere,
    ];
    let mut triangles = Vec::new();
    for o in &objects {
        if let Geometry::Mesh { source: MeshSource::Bundled(name), scale } = &o.geometry {
            let m = bundled(name).unwrap().transformed(*scale, o.pose.rotation_deg, o.pose.position);
            triangles.extend((0..m.faces.len()).map(|f| m.triangle(f)));
        }
    }
    let (sc, sr) = (objects[3].pose.position, 0.2);
    let scene = PreparedScene::new(&white_floor(objects, 8)).unwrap();
    let bx = PolarBox::multi_object();
    let (mut mismatches, mut shadowed) = (0, 0);
    for _ in 0..10_000 {
        let p = Vec3::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9), 0.0);
        let lp = bx.sample(&mut rng);
        let light = forge_core::lightfield::point_to_cartesian(&lp);
        let lit = visible(&scene, p, Vec3::Z, light);
        let o = p + Vec3::Z * EPSILON;
        let seg = light - o;
        let dist = seg.length();
        let d = seg / dist;
        let (t0, t1) = (EPSILON, dist - EPSILON);
        let blocked = segment_hits_sphere(o, d, t0, t1, sc, sr)
            || triangles.iter().any(|&tri| segment_hits_triangle(o, d, t0, t1, tri));
        if blocked {
            shadowed += 1;
        }
        if lit == blocked {
            mismatches += 1;
        }
    }
    let shadow_ok = mismatches == 0 && shadowed > 500;

    // Colour bleeding from a red wall onto a white floor.
    let wall = ObjectTemplate {
        name: "wall".into(),
        geometry: Geometry::Box {
            half_extents: Vec3::new(0.04, 0.6, 0.35),
        },
        material: MaterialSpec::lambertian(Vec3::new(0.9, 0.08, 0.08)),
    }
    .instantiate(0.34, 0.0, 0.0, false)
    .unwrap();
    let spec = white_floor(vec![wall], 32);
    let scene = PreparedScene::new(&spec).unwrap();
    let light = LightState {
        theta_deg: 180.0,
        phi_deg: 60.0,
        r: 1.2,
        i_p: 120.0,
        i_e: 0.2,
    };
    let settings = RenderSettings {
        spp: 64,
        ..RenderSettings::default()
    };
    let frame = render_frame(&scene, &light, &settings, 7).unwrap();
    let mask = object_mask(&scene).unwrap();
    let cam = Camera::new(&spec.camera).unwrap();
    let (mut r_sum, mut b_sum, mut strip) = (0.0, 0.0, 0);
    for y in 0..32 {
        for x in 0..32 {
            let ray = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
            let g = ray.origin + ray.dir * (-ray.origin.z / ray.dir.z);
            if mask.get(x, y, 0) == 0.0 && (0.05..0.28).contains(&g.x) && g.y.abs() < 0.5 {
                r_sum += frame.radiance.get(x, y, 0);
                b_sum += frame.radiance.get(x, y, 2);
                strip += 1;
            }
        }
    }
    let bleed = r_sum / b_sum;
    let bleed_ok = strip >= 10 && bleed >= 1.05;

    report(
        4,
        "renderer physics",
        falloff_ok && shadow_ok && bleed_ok,
        t.elapsed(),
        Duration::from_secs(300),
        &format!(
            "falloff worst rel {falloff_err:.1e} (tol 1e-6); shadow mismatches {mismatches}/10000 \
             ({shadowed} occluded); floor strip R/B {bleed:.3} over {strip} px (need >= 1.05)"
        ),
    );
}

fn schedule_problems(label: &str, motion_start: usize, s: &[LightState]) -> Vec<String> {
    let mut problems = Vec::new();
    if s[0].i_e != 1.0 || s[0].i_p != 0.0 {
        problems.push(format!("{label}: frame 1 I_e {} I_p {}", s[0].i_e, s[0].i_p));
    }
    if s[3].i_e != 0.2 || s[3].i_p != 120.0 {
        problems.push(format!("{label}: frame 4 I_e {} I_p {}", s[3].i_e, s[3].i_p));
    }
    if s[4..].iter().any(|x| x.i_e != 0.2 || x.i_p != 120.0) {
        problems.push(format!("{label}: intensities not held after frame 4"));
    }
    if s[1..motion_start - 1].iter().any(|x| x.position() != s[0].position()) {
        problems.push(format!("{label}: light moves before frame {motion_start}"));
    }
    if s[motion_start - 1..].windows(2).all(|w| w[0].position() == w[1].position()) {
        problems.push(format!("{label}: no motion over frames {motion_start}-{}", s.len()));
    }
    problems
}

#[test]
fn criterion_05_dataset_schedule() {
    let t = Instant::now();
    let mut problems = Vec::new();

    // Rendered single-object clips, read back from their control files.
    let dir = tempfile::tempdir().unwrap();
    let single = CampaignConfig {
        scenes: 1,
        trajectories_per_scene: Some(4),
        width: 8,
        height: 8,
        objects: ObjectChoice::LambertianSphere,
        render: RenderSettings {
            spp: 1,
            bounces: 0,
            ..RenderSettings::default()
        },
        master_seed: 5,
        ..CampaignConfig::default()
    };
    let outcome = run_campaign(&single, dir.path(), Some(1)).unwrap();
    for rec in &outcome.manifest.clips {
        let traj = read_trajectory(&dir.path().join(&rec.trajectory_file), FrameLayout::SINGLE, rec.kind).unwrap();
        if traj.n_frames() != 14 || rec.frames.len() != 14 {
            problems.push(format!("{}: {} frames", rec.id, traj.n_frames()));
        }
        problems.extend(schedule_problems(&rec.id, traj.motion_start, &traj.states));
    }

    // Generated trajectories of both modes.
    let multi = CampaignConfig {
        scenes: 1,
        ..CampaignConfig::multi()
    };
    let mut counts = (0, 0);
    for cfg in [&single, &multi] {
        for (i, kind) in cfg.trajectory_kinds().into_iter().enumerate().take(40) {
            let traj = campaign_trajectory(cfg, i as u64, kind).unwrap();
            let expect = if cfg.mode == Mode::Single { (14, 5) } else { (25, 7) };
            if (traj.n_frames(), traj.motion_start) != expect {
                problems.push(format!("{kind:?} #{i}: layout {:?}", traj.layout()));
            }
            problems.extend(schedule_problems(&format!("{kind:?} #{i}"), traj.motion_start, &traj.states));
            if cfg.mode == Mode::Single {
                counts.0 += 1;
            } else {
                counts.1 += 1;
            }
        }
    }
    let preset_ok = SchedulePreset::DEFAULT.i_e_floor == 0.2 && SchedulePreset::DEFAULT.i_p_max == 120.0;
    report(
        5,
        "dataset schedule",
        problems.is_empty() && preset_ok,
        t.elapsed(),
        Duration::from_secs(60),
        &format!(
            "{} rendered single clips, {} single + {} multi trajectories; {}",
            outcome.manifest.clips.len(),
            counts.0,
            counts.1,
            if problems.is_empty() { "no violations".to_string() } else { problems.join("; ") }
        ),
    );
}

#[test]
fn criterion_06_trajectory_properties() {
    let t = Instant::now();
    let cfg = CampaignConfig {
        scenes: 1,
        trajectories_per_scene: Some(1000),
        ..CampaignConfig::multi()
    };
    let mut out_of_range = 0;
    let mut kinds = [0usize; 3];
    for (i, kind) in cfg.trajectory_kinds().into_iter().enumerate() {
        let traj = campaign_trajectory(&cfg, i as u64, kind).unwrap();
        match kind {
            TrajectoryKind::Bezier => kinds[0] += 1,
            TrajectoryKind::Spiral => kinds[1] += 1,
            TrajectoryKind::Hybrid => kinds[2] += 1,
            _ => out_of_range += 1,
        }
        for s in &traj.states {
            if !(0.8..=1.5).contains(&s.r) || !(45.0..=80.0).contains(&s.phi_deg) {
                out_of_range += 1;
            }
        }
    }
    let n = kinds.iter().sum::<usize>();

    let bx = PolarBox::single_object();
    let coarse = grid_positions(64, &bx, true).unwrap();
    let fine = grid_positions(128, &bx, false).unwrap();
    let fine_pts: HashSet<(u64, u64)> = fine.points().map(|(a, b)| (a.to_bits(), b.to_bits())).collect();
    let shared = coarse
        .points()
        .filter(|(a, b)| fine_pts.contains(&(a.to_bits(), b.to_bits())))
        .count();
    // Also no near-coincidences.
    let min_gap = coarse
        .points()
        .map(|(a, b)| {
            fine.points()
                .map(|(c, d)| (a - c).abs().max((b - d).abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    report(
        6,
        "trajectory properties",
        n == 1000 && out_of_range == 0 && shared == 0 && min_gap > 1e-6,
        t.elapsed(),
        Duration::from_secs(60),
        &format!(
            "{n} trajectories (bezier {}, spiral {}, hybrid {}), {out_of_range} states out of range; \
             M=64 offset vs M=128: {shared} shared points, min gap {min_gap:.4} deg",
            kinds[0], kinds[1], kinds[2]
        ),
    );
}

#[test]
fn criterion_07_mit_table() {
    let t = Instant::now();
    let fixture = fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mit_trajectories.txt")).unwrap();
    let set = mit_trajectories();
    let emitted = set.to_text().into_bytes();
    let shape_ok = set.sequences.len() == 25 && set.sequences.iter().all(|s| s.len() == 14 && s.iter().all(|&i| i <= 24));
    report(
        7,
        "MIT trajectory table",
        emitted == fixture && shape_ok && set.validate().is_ok(),
        t.elapsed(),
        Duration::from_secs(5),
        &format!("{} bytes emitted, {} bytes in fixture, identical: {}", emitted.len(), fixture.len(), emitted == fixture),
    );
}

#[test]
fn criterion_08_metrics() {
    let t = Instant::now();
    let mut rng = rng_from(808);
    let params = SsimParams::default();
    let a = Image::from_fn(24, 20, 3, |_, _, _| rng.gen());
    let ssim_self = ssim(&a, &a, &params, None).unwrap();
    let zeros = Image::new(16, 16, 3);
    let ones = Image::from_fn(16, 16, 3, |_, _, _| 1.0);
    let rmse01 = rmse(&zeros, &ones, None).unwrap();
    let psnr20 = psnr_from_mse(0.01, 1.0);

    let mut worst = 0.0f64;
    for i in 0..50 {
        let (w, h) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let a = Image::from_fn(w, h, 3, |_, _, _| rng.gen());
        let b = Image::from_fn(w, h, 3, |_, _, _| rng.gen());
        let masked = i % 2 == 1;
        let bits: Vec<bool> = (0..w * h).map(|k| !masked || k == 0 || rng.gen_bool(0.4)).collect();
        let mask = Mask::from_bits(w, h, bits.clone()).unwrap();
        let got = rmse(&a, &b, masked.then_some(&mask)).unwrap();
        let (mut sum, mut n) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                if bits[y * w + x] {
                    for c in 0..3 {
                        let d = a.get(x, y, c) - b.get(x, y, c);
                        sum += d * d;
                        n += 1.0;
                    }
                }
            }
        }
        worst = worst.max((got - (sum / n).sqrt()).abs());
    }
    report(
        8,
        "metrics",
        ssim_self == 1.0 && rmse01 == 1.0 && psnr20 == 20.0 && worst <= 1e-12,
        t.elapsed(),
        Duration::from_secs(10),
        &format!("SSIM(a,a)={ssim_self}, RMSE(0,1)={rmse01}, PSNR(0.01)={psnr20} dB, RMSE oracle worst diff {worst:.1e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_09_end_to_end_toy_relighting() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let train_cfg = CampaignConfig {
        scenes: 6,
        trajectories_per_scene: Some(50),
        width: 16,
        height: 16,
        objects: ObjectChoice::LambertianSphere,
        render: RenderSettings {
            spp: 16,
            bounces: 2,
            ..RenderSettings::default()
        },
        master_seed: 1,
        ..CampaignConfig::default()
    };
    let test_cfg = CampaignConfig {
        split: Split::Test,
        scenes: 1,
        trajectories_per_scene: Some(20),
        master_seed: 2,
        ..train_cfg.clone()
    };
    let train_root = dir.path().join("train");
    let test_root = dir.path().join("test");
    run_campaign(&train_cfg, &train_root, None).unwrap();
    run_campaign(&test_cfg, &test_root, None).unwrap();
    let (trainset, _) = load_examples(&train_root).unwrap();
    let (testset, test_manifest) = load_examples(&test_root).unwrap();

    let model = ToyDenoiser::new(ToyConfig {
        c1: 12,
        c2: 24,
        init_seed: 3,
    });
    let cfg = TrainConfig {
        lr: 0.03,
        batch_size: 2,
        ..TrainConfig::default()
    };
    let mut state = TrainState::new(model, cfg, 5).unwrap();
    let probe: Vec<Example> = trainset.iter().step_by(30).cloned().collect();
    let sigmas = forge_core::diffusion::eval_sigmas();
    let loss0 = fixed_eval_loss(&state.model, &probe, &sigmas, 9).unwrap();
    let mut curve = Vec::with_capacity(2000);
    train(&mut state, &trainset, 2000, |_, l| curve.push(l)).unwrap();
    let loss1 = fixed_eval_loss(&state.model, &probe, &sigmas, 9).unwrap();
    let drop = 1.0 - loss1 / loss0;
    let head: f64 = curve[..100].iter().sum::<f64>() / 100.0;
    let tail: f64 = curve[curve.len() - 100..].iter().sum::<f64>() / 100.0;

    let schedule = EdmSchedule::karras(16, 0.02, 80.0, 7.0).unwrap();
    let enc = ControlEncoding::new(PolarBox::single_object(), SchedulePreset::DEFAULT.i_p_max);
    let (mut hits, mut total) = (0, 0);
    for (i, (ex, rec)) in testset.iter().zip(&test_manifest.clips).enumerate() {
        assert_eq!(ex.id, rec.id);
        let traj = read_trajectory(&test_root.join(&rec.trajectory_file), FrameLayout::SINGLE, rec.kind).unwrap();
        let cv = build_control_volume(&traj, &enc, 16, 16).unwrap();
        let video = sample(&state.model, &ex.cond, &cv, &schedule, i as u64).unwrap();
        let frames = tensor_to_frames(&video);
        for f in traj.motion_start - 1..traj.n_frames() {
            total += 1;
            if octant_matches(&frames[f], traj.states[f].theta_deg, 45.0) {
                hits += 1;
            }
        }
    }
    let acc = hits as f64 / total as f64;
    report(
        9,
        "end-to-end toy relighting",
        testset.len() == 20 && trainset.len() == 300 && drop >= 0.5 && acc >= 0.7,
        t.elapsed(),
        Duration::from_secs(30 * 60),
        &format!(
            "{} train clips; fixed-noise loss {loss0:.4} -> {loss1:.4} ({:.1}% drop, need >= 50%); \
             running loss {head:.4} -> {tail:.4}; octant match {hits}/{total} = {:.1}% (need >= 70%)",
            trainset.len(),
            100.0 * drop,
            100.0 * acc
        ),
    );
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig {
        scenes: 2,
        trajectories_per_scene: Some(3),
        width: 16,
        height: 16,
        render: RenderSettings {
            spp: 4,
            ..RenderSettings::default()
        },
        master_seed: 1010,
        ..CampaignConfig::multi()
    };
    let single = CampaignConfig {
        mode: Mode::Single,
        trajectories_per_scene: Some(4),
        objects: ObjectChoice::Pool,
        ..CampaignConfig::default()
    };
    let single = CampaignConfig {
        scenes: 2,
        width: 16,
        height: 16,
        render: cfg.render,
        master_seed: 1010,
        ..single
    };
    let mut files = 0;
    let mut identical = true;
    for (label, c) in [("multi", &cfg), ("single", &single)] {
        let mut snaps = Vec::new();
        for workers in [1, 2, 3] {
            let root = dir.path().join(format!("{label}-{workers}"));
            run_campaign(c, &root, Some(workers)).unwrap();
            snaps.push(snapshot(&root));
        }
        files += snaps[0].len();
        identical &= snaps.windows(2).all(|w| w[0] == w[1]);
        identical &= snaps[0].contains_key("manifest.json");
    }
    report(
        10,
        "determinism",
        identical,
        t.elapsed(),
        Duration::from_secs(300),
        &format!("single and multi campaigns replayed with 1, 2 and 3 workers: {files} files per replay, byte-identical: {identical}"),
    );
}
