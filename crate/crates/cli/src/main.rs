use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use forge_core::campaign::{
    campaign_trajectory, contact_sheet, load_examples, read_trajectory, resolve_workers, run_campaign, CampaignConfig,
    Mode, ObjectChoice, Split, WORKERS_ENV,
};
use forge_core::diffusion::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use forge_core::diffusion::{
    fixed_eval_loss, frames_to_tensor, sample, tensor_to_frames, train, EdmSchedule, TrainConfig,
    TrainState, ToyConfig, ToyDenoiser,
};
use forge_core::eval::{build_mit_clips, evaluate_dirs, mit_trajectories};
use forge_core::image::write_png;
use forge_core::lightfield::{
    build_control_volume, ControlEncoding, FrameLayout, PolarBox, SchedulePreset, Trajectory,
    TrajectoryKind,
};
use forge_core::render::{render_clip, render_frame, tonemap, write_clip, PreparedScene, RenderSettings};
use forge_core::scene::{
    compose_multi, compose_single, default_pool, hero_pool, lambertian_sphere,
    ComposeOptions, SceneSpec,
};

#[derive(Parser)]
#[command(name = "forge", version, about = "Synthetic relighting videos, toy controllable denoiser, metrics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => Mode::Single,
            ModeArg::Multi => Mode::Multi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// I_e floor 0.2, I_p peak 120.
    Default,
    /// I_e floor 0.4, I_p peak 75.
    #[value(name = "40-75")]
    A40_75,
    /// I_e floor 0.3, I_p peak 100.
    #[value(name = "30-100")]
    A30_100,
}

impl From<PresetArg> for SchedulePreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Default => SchedulePreset::DEFAULT,
            PresetArg::A40_75 => SchedulePreset::ABLATION_40_75,
            PresetArg::A30_100 => SchedulePreset::ABLATION_30_100,
        }
    }
}

#[derive(clap::Args, Clone)]
struct RenderArgs {
    #[arg(long)]
    spp: Option<usize>,
    #[arg(long)]
    bounces: Option<usize>,
    #[arg(long)]
    exposure: Option<f64>,
    /// Composite a bloom around the light marker.
    #[arg(long)]
    glow: bool,
}

impl RenderArgs {
    fn apply(&self, mut s: RenderSettings) -> RenderSettings {
        if let Some(v) = self.spp {
            s.spp = v;
        }
        if let Some(v) = self.bounces {
            s.bounces = v;
        }
        if let Some(v) = self.exposure {
            s.exposure = v;
        }
        if self.glow && s.glow.is_none() {
            s.glow = Some(Default::default());
        }
        s
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compose a random scene and write it as JSON.
    Compose {
        #[arg(long, value_enum, default_value = "single")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Object template for single-object scenes (bundled name or "sphere").
        #[arg(long)]
        object: Option<String>,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 4)]
        max_objects: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample light trajectories and write one control file each.
    Trajectories {
        #[arg(long, value_enum, default_value = "single")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "train")]
        split: SplitArg,
        #[arg(long, value_enum, default_value = "default")]
        preset: PresetArg,
        #[arg(long, default_value_t = 40)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one clip for a scene and a control file.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write linear .pfm frames.
        #[arg(long)]
        pfm: bool,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render a full dataset campaign (resumable).
    Campaign {
        /// JSON campaign config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        /// Use only the plain Lambertian sphere.
        #[arg(long)]
        sphere: bool,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Train the toy denoiser on a campaign directory.
    TrainToy {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 2000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.03)]
        lr: f64,
        #[arg(long, default_value_t = 2)]
        batch: usize,
        #[arg(long, default_value_t = 12)]
        c1: usize,
        #[arg(long, default_value_t = 24)]
        c2: usize,
        /// Update only the control branch.
        #[arg(long)]
        frozen_base: bool,
        #[arg(long, default_value = "toy.ckpt")]
        out: PathBuf,
        /// Per-step loss log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Sample a relit clip from a checkpoint.
    Sample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        /// Input image; rendered from the scene under the first control frame if absent.
        #[arg(long)]
        first_frame: Option<PathBuf>,
        #[arg(long, default_value_t = 24)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted frames against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Directory with mask.png or mask_%03d.png; enables foreground mode.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Centre crop to SIZE×SIZE before scoring.
        #[arg(long)]
        crop: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the 25 fixed index trajectories, or arrange a capture into clips.
    MitBuild {
        /// Directory with dir_<i>.png captures.
        #[arg(long)]
        capture: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contact sheet of a clip with light-direction arrows.
    Sheet {
        #[arg(long)]
        clip: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn layout_for(n: usize) -> Result<FrameLayout> {
    match n {
        14 => Ok(FrameLayout::SINGLE),
        25 => Ok(FrameLayout::MULTI),
        _ => bail!("control file has {n} frames; expected 14 or 25"),
    }
}

fn load_traj(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let n = serde_json::from_str::<Vec<serde_json::Value>>(&text)?.len();
    let layout = layout_for(n)?;
    let kind = if n == 14 {
        TrajectoryKind::LinearGrid
    } else {
        TrajectoryKind::Bezier
    };
    Ok(read_trajectory(path, layout, kind)?)
}

fn load_scene(path: &Path) -> Result<SceneSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SceneSpec::from_json(&text)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Compose {
            mode,
            seed,
            object,
            width,
            height,
            max_objects,
            out,
        } => {
            let scene = match mode {
                ModeArg::Single => {
                    let tpl = match object.as_deref() {
                        None | Some("sphere") => lambertian_sphere(),
                        Some(name) => default_pool()
                            .into_iter()
                            .chain(hero_pool())
                            .find(|t| t.name == name)
                            .with_context(|| format!("unknown object {name:?}"))?,
                    };
                    compose_single(seed, &tpl, &ComposeOptions::SINGLE.with_resolution(width, height))?
                }
                ModeArg::Multi => compose_multi(
                    seed,
                    &default_pool(),
                    &hero_pool(),
                    max_objects,
                    &ComposeOptions::MULTI.with_resolution(width, height),
                )?,
            };
            write_text(&out, &scene.to_json()?)?;
            println!("wrote {} ({} objects)", out.display(), scene.objects.len());
        }
        Cmd::Trajectories {
            mode,
            split,
            preset,
            count,
            seed,
            out,
        } => {
            let cfg = CampaignConfig {
                mode: mode.into(),
                split: split.into(),
                preset: preset.into(),
                trajectories_per_scene: Some(count.max(1)),
                master_seed: seed,
                ..CampaignConfig::default()
            };
            fs::create_dir_all(&out)?;
            for (i, kind) in cfg.trajectory_kinds().into_iter().enumerate() {
                let traj = campaign_trajectory(&cfg, i as u64, kind)?;
                write_text(&out.join(format!("traj_{i:03}.json")), &traj.to_control_json()?)?;
            }
            println!("wrote {count} trajectories to {}", out.display());
        }
        Cmd::Render {
            scene,
            traj,
            out,
            seed,
            pfm,
            render,
        } => {
            let spec = load_scene(&scene)?;
            let traj = load_traj(&traj)?;
            let settings = render.apply(RenderSettings::default());
            let prepared = PreparedScene::new(&spec)?;
            let clip = render_clip(&prepared, &traj, &settings, seed)?;
            let names = write_clip(&out, &clip, &settings, pfm)?;
            println!("wrote {} frames to {}", names.len(), out.display());
        }
        Cmd::Campaign {
            config,
            out,
            mode,
            split,
            preset,
            scenes,
            trajectories,
            seed,
            width,
            height,
            sphere,
            workers,
            render,
        } => {
            let mut cfg = match &config {
                Some(p) => CampaignConfig::from_json(
                    &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => match mode {
                    Some(ModeArg::Multi) => CampaignConfig::multi(),
                    _ => CampaignConfig::default(),
                },
            };
            if let Some(m) = mode {
                cfg.mode = m.into();
            }
            if let Some(s) = split {
                cfg.split = s.into();
            }
            if let Some(p) = preset {
                cfg.preset = p.into();
            }
            if let Some(v) = scenes {
                cfg.scenes = v;
            }
            if trajectories.is_some() {
                cfg.trajectories_per_scene = trajectories;
            }
            if let Some(v) = seed {
                cfg.master_seed = v;
            }
            if let Some(v) = width {
                cfg.width = v;
            }
            if let Some(v) = height {
                cfg.height = v;
            }
            if sphere {
                cfg.objects = ObjectChoice::LambertianSphere;
            }
            cfg.render = render.apply(cfg.render);
            let n = resolve_workers(workers);
            eprintln!(
                "campaign: {} scenes x {} trajectories, {n} workers",
                cfg.scenes,
                cfg.trajectory_kinds().len()
            );
            let outcome = run_campaign(&cfg, &out, Some(n))?;
            println!(
                "{} clips ({} rendered, {} already complete); manifest {}",
                outcome.manifest.clips.len(),
                outcome.rendered,
                outcome.skipped,
                out.join("manifest.json").display()
            );
        }
        Cmd::TrainToy {
            data,
            steps,
            seed,
            lr,
            batch,
            c1,
            c2,
            frozen_base,
            out,
            log,
        } => {
            let (examples, manifest) = load_examples(&data)?;
            if examples.is_empty() {
                bail!("no clips in {}", data.display());
            }
            let model = ToyDenoiser::new(ToyConfig { c1, c2, init_seed: seed });
            let tc = TrainConfig {
                lr,
                batch_size: batch,
                frozen_base,
                ..TrainConfig::default()
            };
            let mut state = TrainState::new(model, tc, seed)?;
            let eval_set: Vec<_> = examples.iter().step_by((examples.len() / 8).max(1)).cloned().collect();
            let sigmas = forge_core::diffusion::eval_sigmas();
            let before = fixed_eval_loss(&state.model, &eval_set, &sigmas, seed)?;
            let mut csv = String::from("step,loss\n");
            let mut window = 0.0;
            train(&mut state, &examples, steps, |s, l| {
                csv.push_str(&format!("{s},{l}\n"));
                window += l;
                if s % 100 == 0 {
                    eprintln!("step {s:>6}  mean loss {:.5}", window / 100.0);
                    window = 0.0;
                }
            })?;
            let after = fixed_eval_loss(&state.model, &eval_set, &sigmas, seed)?;
            let first = &examples[0];
            let meta = CheckpointMeta {
                step: state.step,
                frames: first.clean.n,
                height: first.clean.h,
                width: first.clean.w,
                encoding: Some(manifest.config.encoding()),
                train: Some(tc),
            };
            save_checkpoint(&out, &state.model, &meta)?;
            if let Some(p) = log {
                write_text(&p, &csv)?;
            }
            println!(
                "fixed-noise loss {before:.5} -> {after:.5} ({:.1}% lower); wrote {}",
                100.0 * (1.0 - after / before),
                out.display()
            );
        }
        Cmd::Sample {
            ckpt,
            scene,
            traj,
            first_frame,
            steps,
            seed,
            out,
        } => {
            let (model, meta) = load_checkpoint(&ckpt)?;
            let traj = load_traj(&traj)?;
            let enc = meta.encoding.unwrap_or_else(|| {
                ControlEncoding::new(
                    if traj.n_frames() == 14 {
                        PolarBox::single_object()
                    } else {
                        PolarBox::multi_object()
                    },
                    SchedulePreset::DEFAULT.i_p_max,
                )
            });
            let first = match first_frame {
                Some(p) => forge_core::image::read_png(&p)?.to_unit(),
                None => {
                    let spec = load_scene(&scene)?.with_resolution(meta.width, meta.height);
                    let settings = RenderSettings::default();
                    let frame = render_frame(&PreparedScene::new(&spec)?, &traj.states[0], &settings, seed)?;
                    tonemap(&frame.radiance.scaled(settings.exposure), settings.gamma).to_unit()
                }
            };
            if (first.width, first.height) != (meta.width, meta.height) {
                bail!(
                    "first frame is {}x{}, checkpoint expects {}x{}",
                    first.width,
                    first.height,
                    meta.width,
                    meta.height
                );
            }
            let cond = frames_to_tensor(std::slice::from_ref(&first))?;
            let cv = build_control_volume(&traj, &enc, meta.height, meta.width)?;
            let schedule = EdmSchedule::karras(steps, 0.02, 80.0, 7.0)?;
            let video = sample(&model, &cond, &cv, &schedule, seed)?;
            fs::create_dir_all(&out)?;
            for (i, f) in tensor_to_frames(&video).iter().enumerate() {
                write_png(out.join(format!("frame_{:03}.png", i + 1)), &tonemap(f, 1.0))?;
            }
            write_text(&out.join("control.json"), &traj.to_control_json()?)?;
            println!("wrote {} frames to {}", video.n, out.display());
        }
        Cmd::Eval {
            pred,
            gt,
            mask,
            crop,
            out,
        } => {
            let report = evaluate_dirs(&pred, &gt, mask.as_deref(), crop)?;
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(p) => write_text(&p, &json)?,
                None => println!("{json}"),
            }
            let m = report.means;
            eprintln!(
                "RMSE {:.4}  PSNR {}  SSIM {:.4}  ({} frames, {} identical)",
                m.rmse,
                m.psnr.map_or("inf".to_string(), |p| format!("{p:.2} dB")),
                m.ssim,
                report.per_frame.len(),
                m.psnr_identical_frames
            );
        }
        Cmd::MitBuild { capture, out } => {
            let set = mit_trajectories();
            set.validate()?;
            match (capture, out) {
                (Some(cap), Some(dir)) => {
                    let dirs = build_mit_clips(&cap, &dir)?;
                    println!("wrote {} clips under {}", dirs.len(), dir.display());
                }
                (Some(_), None) => bail!("--capture needs --out"),
                (None, Some(p)) => write_text(&p, &set.to_text())?,
                (None, None) => print!("{}", set.to_text()),
            }
        }
        Cmd::Sheet { clip, scale, out } => {
            let sheet = contact_sheet(&clip, scale)?;
            write_png(&out, &sheet.image)?;
            println!("wrote {}x{} sheet to {}", sheet.cols, sheet.rows, out.display());
        }
    }
    Ok(())
}
