//! Dataset-generation campaigns, manifests and contact sheets.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{frames_to_tensor, Example};
use crate::error::{Error, Result};
use crate::image::{read_png, Image8};
use crate::lightfield::{
    apply_schedule, build_control_volume, grid_positions, sample_curve, sample_grid_motion,
    ControlEncoding, ControlRecord, FrameLayout, PolarBox, SchedulePreset, Trajectory,
    TrajectoryKind,
};
use crate::render::{render_clip, write_clip, PreparedScene, RenderSettings};
use crate::scene::{
    compose_multi, compose_single, default_pool, hero_pool, lambertian_sphere, ComposeOptions,
    ObjectTemplate, SceneSpec,
};
use crate::seed::{child_rng, child_seed};

pub const TOOL_VERSION: &str = concat!("forge ", env!("CARGO_PKG_VERSION"));
/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "FORGE_WORKERS";

/// Full-scale scene counts, kept as reference defaults.
pub const FULL_SINGLE_OBJECTS: usize = 1200;
pub const FULL_MULTI_SCENES: usize = 1000;
pub const TRAJECTORIES_PER_SCENE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectChoice {
    /// Procedural primitives and bundled meshes.
    Pool,
    LambertianSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub split: Split,
    pub scenes: usize,
    /// `None` uses the split's standard count (40 for training, 21 for the
    /// multi-object test split, 40 for the single-object test split).
    pub trajectories_per_scene: Option<usize>,
    pub preset: SchedulePreset,
    pub render: RenderSettings,
    pub width: usize,
    pub height: usize,
    pub objects: ObjectChoice,
    /// Extra objects besides the hero in multi-object scenes.
    pub max_objects: usize,
    pub master_seed: u64,
    pub write_pfm: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            mode: Mode::Single,
            split: Split::Train,
            scenes: FULL_SINGLE_OBJECTS,
            trajectories_per_scene: None,
            preset: SchedulePreset::DEFAULT,
            render: RenderSettings::default(),
            width: 64,
            height: 64,
            objects: ObjectChoice::Pool,
            max_objects: 4,
            master_seed: 0,
            write_pfm: false,
        }
    }
}

impl CampaignConfig {
    pub fn multi() -> Self {
        CampaignConfig {
            mode: Mode::Multi,
            scenes: FULL_MULTI_SCENES,
            render: RenderSettings {
                glow: Some(Default::default()),
                ..RenderSettings::default()
            },
            ..CampaignConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenes == 0 || self.trajectories_per_scene == Some(0) {
            return Err(Error::InvalidArgument("scene and trajectory counts must be >= 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("resolution must be >= 1".into()));
        }
        self.preset.validate()?;
        self.render.validate()
    }

    pub fn layout(&self) -> FrameLayout {
        match self.mode {
            Mode::Single => FrameLayout::SINGLE,
            Mode::Multi => FrameLayout::MULTI,
        }
    }

    pub fn polar_box(&self) -> PolarBox {
        match self.mode {
            Mode::Single => PolarBox::single_object(),
            Mode::Multi => PolarBox::multi_object(),
        }
    }

    pub fn encoding(&self) -> ControlEncoding {
        ControlEncoding::new(self.polar_box(), self.preset.i_p_max)
    }

    /// Trajectory kinds in order for one scene.
    pub fn trajectory_kinds(&self) -> Vec<TrajectoryKind> {
        let standard: Vec<TrajectoryKind> = match (self.mode, self.split) {
            (Mode::Single, _) => vec![TrajectoryKind::LinearGrid; TRAJECTORIES_PER_SCENE],
            (Mode::Multi, Split::Train) => [
                (TrajectoryKind::Bezier, 13),
                (TrajectoryKind::Spiral, 13),
                (TrajectoryKind::Hybrid, 14),
            ]
            .iter()
            .flat_map(|&(k, n)| std::iter::repeat(k).take(n))
            .collect(),
            (Mode::Multi, Split::Test) => [TrajectoryKind::Bezier, TrajectoryKind::Spiral, TrajectoryKind::Hybrid]
                .iter()
                .flat_map(|&k| std::iter::repeat(k).take(7))
                .collect(),
        };
        match self.trajectories_per_scene {
            None => standard,
            Some(n) => (0..n).map(|i| standard[i % standard.len()]).collect(),
        }
    }

    /// SHA-256 of the canonical (key-sorted) JSON form.
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(sha256_hex(serde_json::to_string(&value)?.as_bytes()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: CampaignConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub id: String,
    pub scene_index: usize,
    pub trajectory_index: usize,
    pub kind: TrajectoryKind,
    pub scene_seed: u64,
    pub trajectory_seed: u64,
    pub render_seed: u64,
    /// Paths are relative to the campaign root.
    pub scene_file: String,
    pub trajectory_file: String,
    pub frames: Vec<String>,
    pub frame_sha256: Vec<String>,
    /// Hash of the config hash and clip id; used to skip finished clips.
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config: CampaignConfig,
    pub clips: Vec<ClipRecord>,
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let p = root.join("manifest.json");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub manifest: Manifest,
    pub rendered: usize,
    pub skipped: usize,
}

/// Worker count: explicit value, else `FORGE_WORKERS`, else all cores.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

struct Job {
    scene_index: usize,
    trajectory_index: usize,
    clip_index: u64,
    kind: TrajectoryKind,
}

fn clip_id(scene: usize, traj: usize) -> String {
    format!("s{scene:04}_t{traj:03}")
}

fn scene_file(scene: usize) -> String {
    format!("scenes/scene_{scene:04}.json")
}

fn templates(choice: ObjectChoice) -> Vec<ObjectTemplate> {
    match choice {
        ObjectChoice::Pool => default_pool(),
        ObjectChoice::LambertianSphere => vec![lambertian_sphere()],
    }
}

/// Scene for `index`, fully determined by the master seed.
pub fn campaign_scene(cfg: &CampaignConfig, index: usize) -> Result<SceneSpec> {
    let seed = child_seed(cfg.master_seed, "scene", index as u64);
    let pool = templates(cfg.objects);
    match cfg.mode {
        Mode::Single => {
            let opts = ComposeOptions::SINGLE.with_resolution(cfg.width, cfg.height);
            let pick = (child_seed(seed, "object", 0) % pool.len() as u64) as usize;
            compose_single(seed, &pool[pick], &opts)
        }
        Mode::Multi => {
            let opts = ComposeOptions::MULTI.with_resolution(cfg.width, cfg.height);
            let heroes = match cfg.objects {
                ObjectChoice::Pool => hero_pool(),
                ObjectChoice::LambertianSphere => pool.clone(),
            };
            compose_multi(seed, &pool, &heroes, cfg.max_objects, &opts)
        }
    }
}

/// Trajectory `clip_index` of the campaign.
pub fn campaign_trajectory(cfg: &CampaignConfig, clip_index: u64, kind: TrajectoryKind) -> Result<Trajectory> {
    let mut rng = child_rng(cfg.master_seed, "trajectory", clip_index);
    let layout = cfg.layout();
    let bx = cfg.polar_box();
    let motion = match kind {
        TrajectoryKind::LinearGrid => {
            let (m, offset) = match cfg.split {
                Split::Train => (128, false),
                Split::Test => (64, true),
            };
            let grid = grid_positions(m, &bx, offset)?;
            sample_grid_motion(&mut rng, &grid, bx.r.min, layout.n_motion())?.1
        }
        k => sample_curve(&mut rng, k, &bx, layout.n_motion())?,
    };
    apply_schedule(&motion, cfg.preset, layout, kind, &bx)
}

fn clip_key(config_hash: &str, id: &str) -> String {
    sha256_hex(format!("{config_hash}/{id}").as_bytes())
}

fn rel(p: &str) -> PathBuf {
    p.split('/').collect()
}

/// Record of a finished clip whose frames still hash to the recorded values.
fn finished(root: &Path, id: &str, key: &str) -> Option<ClipRecord> {
    let text = fs::read_to_string(root.join("clips").join(id).join("record.json")).ok()?;
    let rec: ClipRecord = serde_json::from_str(&text).ok()?;
    if rec.key != key {
        return None;
    }
    for (f, h) in rec.frames.iter().zip(&rec.frame_sha256) {
        let bytes = fs::read(root.join(rel(f))).ok()?;
        if &sha256_hex(&bytes) != h {
            return None;
        }
    }
    root.join(rel(&rec.trajectory_file)).exists().then_some(rec)
}

fn render_job(
    cfg: &CampaignConfig,
    root: &Path,
    scene: &PreparedScene,
    job: &Job,
    key: String,
) -> Result<ClipRecord> {
    let id = clip_id(job.scene_index, job.trajectory_index);
    let traj = campaign_trajectory(cfg, job.clip_index, job.kind)?;
    let render_seed = child_seed(cfg.master_seed, "render", job.clip_index);
    let clip = render_clip(scene, &traj, &cfg.render, render_seed)?;
    let dir = root.join("clips").join(&id);
    let names = write_clip(&dir, &clip, &cfg.render, cfg.write_pfm)?;
    let mut frames = Vec::with_capacity(names.len());
    let mut hashes = Vec::with_capacity(names.len());
    for n in &names {
        let p = dir.join(n);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        hashes.push(sha256_hex(&bytes));
        frames.push(format!("clips/{id}/{n}"));
    }
    let rec = ClipRecord {
        id: id.clone(),
        scene_index: job.scene_index,
        trajectory_index: job.trajectory_index,
        kind: job.kind,
        scene_seed: child_seed(cfg.master_seed, "scene", job.scene_index as u64),
        trajectory_seed: child_seed(cfg.master_seed, "trajectory", job.clip_index),
        render_seed,
        scene_file: scene_file(job.scene_index),
        trajectory_file: format!("clips/{id}/control.json"),
        frames,
        frame_sha256: hashes,
        key,
    };
    let rp = dir.join("record.json");
    fs::write(&rp, serde_json::to_string_pretty(&rec)?).map_err(|e| Error::io(&rp, e))?;
    Ok(rec)
}

/// Render every clip of the campaign into `root`, skipping clips already
/// completed under the same config, then write `manifest.json`.
pub fn run_campaign(cfg: &CampaignConfig, root: &Path, workers: Option<usize>) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let config_hash = cfg.hash()?;
    fs::create_dir_all(root.join("scenes")).map_err(|e| Error::io(root, e))?;
    let kinds = cfg.trajectory_kinds();

    let mut scenes = Vec::with_capacity(cfg.scenes);
    for s in 0..cfg.scenes {
        let spec = campaign_scene(cfg, s)?;
        let p = root.join(rel(&scene_file(s)));
        fs::write(&p, spec.to_json()?).map_err(|e| Error::io(&p, e))?;
        scenes.push(spec);
    }
    let mut jobs = Vec::with_capacity(cfg.scenes * kinds.len());
    for s in 0..cfg.scenes {
        for (t, &kind) in kinds.iter().enumerate() {
            jobs.push(Job {
                scene_index: s,
                trajectory_index: t,
                clip_index: (s * kinds.len() + t) as u64,
                kind,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(String, bool, Result<ClipRecord>)> = pool.install(|| {
        let prepared = scenes
            .par_iter()
            .map(PreparedScene::new)
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>(
            jobs.par_iter()
                .map(|job| {
                    let id = clip_id(job.scene_index, job.trajectory_index);
                    let key = clip_key(&config_hash, &id);
                    match finished(root, &id, &key) {
                        Some(rec) => (id, true, Ok(rec)),
                        None => {
                            let r = render_job(cfg, root, &prepared[job.scene_index], job, key);
                            (id, false, r)
                        }
                    }
                })
                .collect(),
        )
    })?;

    let mut clips = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    let (mut rendered, mut skipped) = (0, 0);
    for (id, reused, r) in results {
        match r {
            Ok(rec) => {
                if reused {
                    skipped += 1;
                } else {
                    rendered += 1;
                }
                clips.push(rec);
            }
            Err(_) => failed.push(id),
        }
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        config_hash,
        config: cfg.clone(),
        clips,
    };
    let mp = root.join("manifest.json");
    fs::write(&mp, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&mp, e))?;
    if !failed.is_empty() {
        return Err(Error::Campaign {
            failed: failed.len(),
            ids: failed,
        });
    }
    Ok(CampaignOutcome {
        manifest,
        rendered,
        skipped,
    })
}

/// Read `control.json` from a clip directory.
pub fn read_trajectory(path: &Path, layout: FrameLayout, kind: TrajectoryKind) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<ControlRecord> = serde_json::from_str(&text)?;
    Trajectory::from_records(&records, layout, kind)
}

/// Training examples for every clip listed in the campaign manifest.
pub fn load_examples(root: &Path) -> Result<(Vec<Example>, Manifest)> {
    let manifest = Manifest::load(root)?;
    let cfg = &manifest.config;
    let enc = cfg.encoding();
    let examples = manifest
        .clips
        .par_iter()
        .map(|rec| {
            let frames = rec
                .frames
                .iter()
                .map(|f| read_png(root.join(rel(f))).map(|i| i.to_unit()))
                .collect::<Result<Vec<_>>>()?;
            let clean = frames_to_tensor(&frames)?;
            let traj = read_trajectory(&root.join(rel(&rec.trajectory_file)), cfg.layout(), rec.kind)?;
            let cv = build_control_volume(&traj, &enc, clean.h, clean.w)?;
            Example::new(rec.id.clone(), clean, &cv)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((examples, manifest))
}

/// Light arrow drawn on one contact-sheet tile, in sheet pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrow {
    pub frame: usize,
    pub theta_deg: f64,
    pub tail: (f64, f64),
    pub head: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSheet {
    pub image: Image8,
    pub rows: usize,
    pub cols: usize,
    pub tile: usize,
    pub arrows: Vec<Arrow>,
}

const ARROW_RGB: [u8; 3] = [255, 32, 32];

/// Two-row montage of a clip's frames, each upscaled by `scale`, with an
/// arrow from the tile centre toward the light azimuth (image right is
/// θ = 0°, image up is θ = 90°).
pub fn contact_sheet(clip_dir: &Path, scale: usize) -> Result<ContactSheet> {
    let frames: Vec<Image8> = crate::eval::list_frames(clip_dir)?
        .iter()
        .map(read_png)
        .collect::<Result<_>>()?;
    if frames.is_empty() {
        return Err(Error::InvalidArgument(format!("no frames in {}", clip_dir.display())));
    }
    let control = clip_dir.join("control.json");
    let text = fs::read_to_string(&control).map_err(|e| Error::io(&control, e))?;
    let records: Vec<ControlRecord> = serde_json::from_str(&text)?;
    if records.len() != frames.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![frames.len()],
            got: vec![records.len()],
        });
    }
    let scale = scale.max(1);
    let (fw, fh) = (frames[0].width, frames[0].height);
    let tile = fw.max(fh) * scale;
    let rows = if frames.len() > 1 { 2 } else { 1 };
    let cols = frames.len().div_ceil(rows);
    let (w, h) = (cols * tile, rows * tile);
    let mut img = Image8 {
        width: w,
        height: h,
        channels: 3,
        data: vec![0; w * h * 3],
    };
    let mut arrows = Vec::with_capacity(frames.len());
    for (k, (f, rec)) in frames.iter().zip(&records).enumerate() {
        let (r, c) = (k / cols, k % cols);
        let (ox, oy) = (c * tile, r * tile);
        for y in 0..fh * scale {
            for x in 0..fw * scale {
                let (sx, sy) = (x / scale, y / scale);
                for ch in 0..3 {
                    let src = f.data[(sy * fw + sx) * f.channels + ch.min(f.channels - 1)];
                    img.data[((oy + y) * w + ox + x) * 3 + ch] = src;
                }
            }
        }
        let (cx, cy) = (ox as f64 + tile as f64 / 2.0, oy as f64 + tile as f64 / 2.0);
        let len = tile as f64 * 0.4;
        let t = rec.theta_deg.to_radians();
        let head = (cx + len * t.cos(), cy - len * t.sin());
        draw_line(&mut img, (cx, cy), head);
        for side in [-1.0, 1.0] {
            let a = t + std::f64::consts::PI + side * 0.5;
            let wing = (head.0 + 0.3 * len * a.cos(), head.1 - 0.3 * len * a.sin());
            draw_line(&mut img, head, wing);
        }
        arrows.push(Arrow {
            frame: k + 1,
            theta_deg: rec.theta_deg,
            tail: (cx, cy),
            head,
        });
    }
    Ok(ContactSheet {
        image: img,
        rows,
        cols,
        tile,
        arrows,
    })
}

fn draw_line(img: &mut Image8, a: (f64, f64), b: (f64, f64)) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize * 2).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = (a.0 + t * (b.0 - a.0)).floor();
        let y = (a.1 + t * (b.1 - a.1)).floor();
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width && (y as usize) < img.height {
            let o = (y as usize * img.width + x as usize) * 3;
            img.data[o..o + 3].copy_from_slice(&ARROW_RGB);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: Mode, split: Split, scenes: usize, trajs: Option<usize>) -> CampaignConfig {
        CampaignConfig {
            mode,
            split,
            scenes,
            trajectories_per_scene: trajs,
            render: RenderSettings {
                spp: 2,
                bounces: 1,
                ..RenderSettings::default()
            },
            width: 8,
            height: 8,
            objects: ObjectChoice::LambertianSphere,
            max_objects: 1,
            master_seed: 42,
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn trajectory_counts() {
        let test = tiny(Mode::Multi, Split::Test, 1, None).trajectory_kinds();
        assert_eq!(test.len(), 21);
        for k in [TrajectoryKind::Bezier, TrajectoryKind::Spiral, TrajectoryKind::Hybrid] {
            assert_eq!(test.iter().filter(|&&x| x == k).count(), 7);
        }
        let train = tiny(Mode::Multi, Split::Train, 1, None).trajectory_kinds();
        assert_eq!(train.len(), 40);
        assert_eq!(train.iter().filter(|&&x| x == TrajectoryKind::Hybrid).count(), 14);
        assert_eq!(tiny(Mode::Single, Split::Train, 1, None).trajectory_kinds().len(), 40);
    }

    #[test]
    fn hash_ignores_key_order() {
        let cfg = tiny(Mode::Single, Split::Train, 1, Some(2));
        let v = serde_json::to_value(&cfg).unwrap();
        let mut obj: Vec<(String, serde_json::Value)> = v.as_object().unwrap().clone().into_iter().collect();
        obj.reverse();
        let text = format!(
            "{{{}}}",
            obj.iter()
                .map(|(k, v)| format!("{}:{}", serde_json::to_string(k).unwrap(), v))
                .collect::<Vec<_>>()
                .join(",")
        );
        let back = CampaignConfig::from_json(&text).unwrap();
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        let other = CampaignConfig { master_seed: 43, ..cfg.clone() };
        assert_ne!(other.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn campaign_runs_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(Mode::Single, Split::Train, 1, Some(2));
        let out = run_campaign(&cfg, dir.path(), Some(1)).unwrap();
        assert_eq!((out.rendered, out.skipped, out.manifest.clips.len()), (2, 0, 2));
        for rec in &out.manifest.clips {
            assert_eq!(rec.frames.len(), 14);
            for f in &rec.frames {
                assert!(dir.path().join(f).exists());
            }
            assert!(dir.path().join(&rec.scene_file).exists());
        }
        let first = fs::read(dir.path().join("manifest.json")).unwrap();
        let again = run_campaign(&cfg, dir.path(), Some(1)).unwrap();
        assert_eq!((again.rendered, again.skipped), (0, 2));
        assert_eq!(fs::read(dir.path().join("manifest.json")).unwrap(), first);

        let (examples, _) = load_examples(dir.path()).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].clean.shape(), [14, 3, 8, 8]);
    }

    #[test]
    fn contact_sheet_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(Mode::Single, Split::Test, 1, Some(1));
        let out = run_campaign(&cfg, dir.path(), Some(1)).unwrap();
        let clip = dir.path().join("clips").join(&out.manifest.clips[0].id);
        let sheet = contact_sheet(&clip, 4).unwrap();
        assert_eq!((sheet.rows, sheet.cols), (2, 7));
        assert_eq!((sheet.image.width, sheet.image.height), (7 * 32, 2 * 32));
        let traj = read_trajectory(&clip.join("control.json"), FrameLayout::SINGLE, TrajectoryKind::LinearGrid).unwrap();
        for (a, s) in sheet.arrows.iter().zip(&traj.states) {
            let ang = (-(a.head.1 - a.tail.1)).atan2(a.head.0 - a.tail.0).to_degrees();
            assert!(crate::lightfield::shortest_delta(ang, s.theta_deg).abs() < 1e-9);
            let (hx, hy) = (a.head.0.floor() as usize, a.head.1.floor() as usize);
            let o = (hy.min(sheet.image.height - 1) * sheet.image.width + hx.min(sheet.image.width - 1)) * 3;
            assert_eq!(&sheet.image.data[o..o + 3], &ARROW_RGB);
        }
        let empty = tempfile::tempdir().unwrap();
        assert!(contact_sheet(empty.path(), 2).is_err());
    }
}
