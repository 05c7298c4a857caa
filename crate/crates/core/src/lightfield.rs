//! Point-light trajectories, intensity schedules and the per-frame 5D
//! control signal `(θ, φ, r, I_p, I_e)`.
//!
//! Angles follow the dataset convention: `θ` is azimuth in degrees around
//! the up axis, `φ` is elevation above the ground plane, `z` is up.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Slack allowed when checking a state against its box; anything beyond
/// this is a real excursion, anything within it is rounding and gets
/// snapped onto the boundary.
const BOX_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightState {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub r: f64,
    /// Point-light power ("lumens", treated radiometrically).
    pub i_p: f64,
    /// Environment intensity as a fraction of its initial value.
    pub i_e: f64,
}

impl LightState {
    pub fn position(&self) -> PolarPoint {
        PolarPoint::new(self.theta_deg, self.phi_deg, self.r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..360.0).contains(&self.theta_deg)
            && (0.0..=1.0).contains(&self.i_e)
            && self.i_p >= 0.0
            && self.r > 0.0
            && self.phi_deg.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid light state {self:?}")))
        }
    }
}

/// Light position in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub r: f64,
}

impl PolarPoint {
    pub const fn new(theta_deg: f64, phi_deg: f64, r: f64) -> Self {
        PolarPoint {
            theta_deg,
            phi_deg,
            r,
        }
    }
}

/// Five unitless components in `[0, 1]`, ordered `(θ, φ, r, I_p, I_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedLightState(pub [f64; 5]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Interval { min, max }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn is_fixed(&self) -> bool {
        self.span() == 0.0
    }

    fn contains_eps(&self, v: f64) -> bool {
        v >= self.min - BOX_EPS && v <= self.max + BOX_EPS
    }

    fn snap(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_fixed() {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

/// Axis-aligned box in polar light space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarBox {
    pub theta: Interval,
    pub phi: Interval,
    pub r: Interval,
}

impl PolarBox {
    pub fn new(theta: Interval, phi: Interval, r: Interval) -> Result<Self> {
        for (name, iv) in [("theta", theta), ("phi", phi), ("r", r)] {
            if !(iv.min <= iv.max) || !iv.min.is_finite() || !iv.max.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} range [{}, {}] is empty",
                    iv.min, iv.max
                )));
            }
        }
        if r.min <= 0.0 {
            return Err(Error::InvalidArgument("radius range must be positive".into()));
        }
        Ok(PolarBox { theta, phi, r })
    }

    /// Single-object box: fixed unit radius, elevation 45..80 degrees.
    pub const fn single_object() -> Self {
        PolarBox {
            theta: Interval::new(0.0, 360.0),
            phi: Interval::new(45.0, 80.0),
            r: Interval::new(1.0, 1.0),
        }
    }

    /// Multi-object box: radius 0.8..1.5, elevation 45..80 degrees.
    pub const fn multi_object() -> Self {
        PolarBox {
            theta: Interval::new(0.0, 360.0),
            phi: Interval::new(45.0, 80.0),
            r: Interval::new(0.8, 1.5),
        }
    }

    pub fn contains(&self, p: &PolarPoint) -> bool {
        self.theta.contains_eps(p.theta_deg)
            && self.phi.contains_eps(p.phi_deg)
            && self.r.contains_eps(p.r)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PolarPoint {
        let theta = if self.theta.min == 0.0 && self.theta.max == 360.0 {
            rng.gen_range(0.0..360.0)
        } else {
            self.theta.sample(rng)
        };
        PolarPoint::new(theta, self.phi.sample(rng), self.r.sample(rng))
    }

    fn snap(&self, p: PolarPoint) -> PolarPoint {
        PolarPoint::new(p.theta_deg, self.phi.snap(p.phi_deg), self.r.snap(p.r))
    }
}

/// Wrap an angle into `[0, 360)`.
pub fn wrap_deg(theta: f64) -> f64 {
    let w = theta.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Signed shortest angular difference `end - start`, in `[-180, 180)`.
pub fn shortest_delta(start: f64, end: f64) -> f64 {
    (end - start + 180.0).rem_euclid(360.0) - 180.0
}

/// Light position in scene coordinates (z up, `φ` measured from the ground plane).
pub fn polar_to_cartesian(state: &LightState) -> Vec3 {
    point_to_cartesian(&state.position())
}

pub fn point_to_cartesian(p: &PolarPoint) -> Vec3 {
    let (st, ct) = p.theta_deg.to_radians().sin_cos();
    let (sp, cp) = p.phi_deg.to_radians().sin_cos();
    Vec3::new(p.r * cp * ct, p.r * cp * st, p.r * sp)
}

/// `M` evenly spaced azimuths and `M` evenly spaced elevations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl PolarGrid {
    pub fn m(&self) -> usize {
        self.thetas.len()
    }

    pub fn point(&self, i: usize, j: usize, r: f64) -> PolarPoint {
        PolarPoint::new(self.thetas[i], self.phis[j], r)
    }

    /// All `(θ, φ)` pairs, θ-major.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas
            .iter()
            .flat_map(move |&t| self.phis.iter().map(move |&p| (t, p)))
    }
}

/// Build the light-position grid.
///
/// Without the offset, θ takes `M` values `k·360/M` over `[0, 360)` and φ
/// takes `M` values spanning the box's elevation range end to end. With the
/// offset, both axes are shifted by half a step (φ becomes cell-centred), so
/// an offset grid never shares a point with an unshifted grid of any size.
pub fn grid_positions(m: usize, bx: &PolarBox, offset_half_step: bool) -> Result<PolarGrid> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("grid size M={m} must be >= 2")));
    }
    let t_step = bx.theta.span() / m as f64;
    let thetas = (0..m)
        .map(|k| {
            let k = k as f64 + if offset_half_step { 0.5 } else { 0.0 };
            bx.theta.min + k * t_step
        })
        .collect();
    let phis = if offset_half_step {
        let step = bx.phi.span() / m as f64;
        (0..m)
            .map(|j| bx.phi.min + (j as f64 + 0.5) * step)
            .collect()
    } else {
        let step = bx.phi.span() / (m - 1) as f64;
        (0..m)
            .map(|j| {
                if j == m - 1 {
                    bx.phi.max
                } else {
                    bx.phi.min + j as f64 * step
                }
            })
            .collect()
    };
    Ok(PolarGrid { thetas, phis })
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact at both endpoints.
    (1.0 - t) * a + t * b
}

fn params(n: usize) -> impl Iterator<Item = f64> {
    let denom = (n.max(2) - 1) as f64;
    (0..n).map(move |k| k as f64 / denom)
}

/// Linear motion in polar space; θ travels along the shorter arc.
pub fn linear_motion(
    start: (f64, f64),
    end: (f64, f64),
    n_motion: usize,
    r: f64,
) -> Result<Vec<PolarPoint>> {
    if n_motion < 2 {
        return Err(Error::InvalidArgument("n_motion must be >= 2".into()));
    }
    let d_theta = shortest_delta(start.0, end.0);
    Ok(params(n_motion)
        .map(|t| {
            PolarPoint::new(
                wrap_deg(start.0 + t * d_theta),
                lerp(start.1, end.1, t),
                r,
            )
        })
        .collect())
}

fn bernstein3(p: [f64; 4], t: f64) -> f64 {
    let u = 1.0 - t;
    u * u * u * p[0] + 3.0 * u * u * t * p[1] + 3.0 * u * t * t * p[2] + t * t * t * p[3]
}

/// Cubic Bézier in `(θ, φ, r)`, evaluated componentwise at `n_motion`
/// uniform parameters. θ is not unwrapped; control points are taken as given.
pub fn bezier_motion(ctrl: &[PolarPoint; 4], n_motion: usize) -> Vec<PolarPoint> {
    let th = ctrl.map(|p| p.theta_deg);
    let ph = ctrl.map(|p| p.phi_deg);
    let rr = ctrl.map(|p| p.r);
    params(n_motion)
        .map(|t| {
            PolarPoint::new(
                wrap_deg(bernstein3(th, t)),
                bernstein3(ph, t),
                bernstein3(rr, t),
            )
        })
        .collect()
}

/// Counter-clockwise spiral: θ advances by `turns·360°` plus the
/// counter-clockwise offset from `start.θ` to `end.θ`; φ and r move linearly.
pub fn spiral_motion(
    start: PolarPoint,
    end: PolarPoint,
    turns: f64,
    n_motion: usize,
) -> Result<Vec<PolarPoint>> {
    if !(turns > 0.0) {
        return Err(Error::InvalidArgument(format!("turns={turns} must be > 0")));
    }
    let sweep = turns * 360.0 + (end.theta_deg - start.theta_deg).rem_euclid(360.0);
    Ok(params(n_motion)
        .map(|t| {
            PolarPoint::new(
                wrap_deg(start.theta_deg + t * sweep),
                lerp(start.phi_deg, end.phi_deg, t),
                lerp(start.r, end.r, t),
            )
        })
        .collect())
}

/// Bézier path with a spiral sweep of `turns·360°` added to θ.
pub fn hybrid_motion(
    ctrl: &[PolarPoint; 4],
    turns: f64,
    n_motion: usize,
) -> Result<Vec<PolarPoint>> {
    if !(turns >= 0.0) {
        return Err(Error::InvalidArgument(format!("turns={turns} must be >= 0")));
    }
    let base = bezier_motion(ctrl, n_motion);
    let th = ctrl.map(|p| p.theta_deg);
    Ok(base
        .into_iter()
        .zip(params(n_motion))
        .map(|(p, t)| {
            PolarPoint::new(
                wrap_deg(bernstein3(th, t) + turns * 360.0 * t),
                p.phi_deg,
                p.r,
            )
        })
        .collect())
}

/// Environment floor and point-light peak reached at the end of dimming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePreset {
    pub i_e_floor: f64,
    pub i_p_max: f64,
}

impl SchedulePreset {
    /// 20% environment, 120 lm point light.
    pub const DEFAULT: SchedulePreset = SchedulePreset {
        i_e_floor: 0.2,
        i_p_max: 120.0,
    };
    pub const ABLATION_40_75: SchedulePreset = SchedulePreset {
        i_e_floor: 0.4,
        i_p_max: 75.0,
    };
    pub const ABLATION_30_100: SchedulePreset = SchedulePreset {
        i_e_floor: 0.3,
        i_p_max: 100.0,
    };

    pub const ABLATIONS: [SchedulePreset; 3] = [
        Self::ABLATION_40_75,
        Self::ABLATION_30_100,
        Self::DEFAULT,
    ];

    pub fn validate(&self) -> Result<()> {
        if !(self.i_e_floor > 0.0 && self.i_e_floor <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "I_e floor {} outside (0, 1]",
                self.i_e_floor
            )));
        }
        if !(self.i_p_max >= 0.0) || !self.i_p_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "I_p max {} must be >= 0",
                self.i_p_max
            )));
        }
        Ok(())
    }
}

impl Default for SchedulePreset {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Frame bookkeeping. Frame numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub n_frames: usize,
    pub dim_frames: usize,
    pub motion_start: usize,
}

impl FrameLayout {
    /// 14 frames, dimming over frames 1-4, motion over frames 5-14.
    pub const SINGLE: FrameLayout = FrameLayout {
        n_frames: 14,
        dim_frames: 4,
        motion_start: 5,
    };
    /// 25 frames, dimming over frames 1-4, motion over frames 7-25.
    pub const MULTI: FrameLayout = FrameLayout {
        n_frames: 25,
        dim_frames: 4,
        motion_start: 7,
    };

    pub fn n_motion(&self) -> usize {
        self.n_frames + 1 - self.motion_start
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_frames < 2
            || self.motion_start <= self.dim_frames
            || self.motion_start > self.n_frames
            || self.n_motion() < 2
        {
            return Err(Error::InvalidArgument(format!("bad frame layout {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    LinearGrid,
    Bezier,
    Spiral,
    Hybrid,
    MitIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<LightState>,
    pub dim_frames: usize,
    /// First frame (1-based) in which the light moves.
    pub motion_start: usize,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn n_frames(&self) -> usize {
        self.states.len()
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout {
            n_frames: self.states.len(),
            dim_frames: self.dim_frames,
            motion_start: self.motion_start,
        }
    }

    /// `control.json` records.
    pub fn records(&self) -> Vec<ControlRecord> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| ControlRecord {
                frame: i + 1,
                theta_deg: s.theta_deg,
                phi_deg: s.phi_deg,
                r: s.r,
                i_p: s.i_p,
                i_e: s.i_e,
            })
            .collect()
    }

    pub fn from_records(
        records: &[ControlRecord],
        layout: FrameLayout,
        kind: TrajectoryKind,
    ) -> Result<Self> {
        if records.len() != layout.n_frames {
            return Err(Error::InvalidArgument(format!(
                "{} control records for a {}-frame layout",
                records.len(),
                layout.n_frames
            )));
        }
        let states = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.frame != i + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "control record {} carries frame number {}",
                        i + 1,
                        r.frame
                    )));
                }
                let s = r.state();
                s.validate()?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            states,
            dim_frames: layout.dim_frames,
            motion_start: layout.motion_start,
            kind,
        })
    }

    pub fn to_control_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.records())?)
    }
}

/// One frame of the `control.json` sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub frame: usize,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub r: f64,
    #[serde(rename = "I_p")]
    pub i_p: f64,
    #[serde(rename = "I_e")]
    pub i_e: f64,
}

impl ControlRecord {
    pub fn state(&self) -> LightState {
        LightState {
            theta_deg: self.theta_deg,
            phi_deg: self.phi_deg,
            r: self.r,
            i_p: self.i_p,
            i_e: self.i_e,
        }
    }
}

/// Attach the dimming schedule to a motion path.
///
/// During frames `1..=dim_frames`, `I_e` ramps linearly from 1 to the floor
/// and `I_p` from 0 to its peak; both hold afterwards. The light sits at the
/// first motion position until `motion_start`.
pub fn apply_schedule(
    motion: &[PolarPoint],
    preset: SchedulePreset,
    layout: FrameLayout,
    kind: TrajectoryKind,
    bx: &PolarBox,
) -> Result<Trajectory> {
    preset.validate()?;
    layout.validate()?;
    if motion.len() != layout.n_motion() {
        return Err(Error::InvalidArgument(format!(
            "{} motion positions for a layout expecting {}",
            motion.len(),
            layout.n_motion()
        )));
    }
    let mut states = Vec::with_capacity(layout.n_frames);
    for frame in 1..=layout.n_frames {
        let pos = if frame < layout.motion_start {
            motion[0]
        } else {
            motion[frame - layout.motion_start]
        };
        if !bx.contains(&pos) {
            return Err(Error::OutOfBox(format!("frame {frame}: {pos:?}")));
        }
        let pos = bx.snap(pos);
        let ramp = if frame >= layout.dim_frames {
            1.0
        } else {
            (frame - 1) as f64 / (layout.dim_frames - 1) as f64
        };
        states.push(LightState {
            theta_deg: wrap_deg(pos.theta_deg),
            phi_deg: pos.phi_deg,
            r: pos.r,
            i_p: ramp * preset.i_p_max,
            i_e: lerp(1.0, preset.i_e_floor, ramp),
        });
    }
    Ok(Trajectory {
        states,
        dim_frames: layout.dim_frames,
        motion_start: layout.motion_start,
        kind,
    })
}

/// Fixed bounds that map a [`LightState`] onto the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlEncoding {
    pub bounds: PolarBox,
    pub i_p_max: f64,
}

impl ControlEncoding {
    pub fn new(bounds: PolarBox, i_p_max: f64) -> Self {
        ControlEncoding { bounds, i_p_max }
    }

    pub fn normalize(&self, state: &LightState) -> Result<NormalizedLightState> {
        normalize(state, &self.bounds, self.i_p_max)
    }
}

pub fn normalize(
    state: &LightState,
    bx: &PolarBox,
    i_p_max: f64,
) -> Result<NormalizedLightState> {
    if !bx.contains(&state.position()) {
        return Err(Error::OutOfBox(format!("{state:?} not in {bx:?}")));
    }
    if !(i_p_max > 0.0) || state.i_p < 0.0 || state.i_p > i_p_max + BOX_EPS {
        return Err(Error::OutOfBox(format!(
            "I_p={} outside [0, {i_p_max}]",
            state.i_p
        )));
    }
    if !(0.0..=1.0).contains(&state.i_e) {
        return Err(Error::OutOfBox(format!("I_e={} outside [0, 1]", state.i_e)));
    }
    let unit = |v: f64, iv: &Interval| {
        if iv.is_fixed() {
            0.5
        } else {
            ((v - iv.min) / iv.span()).clamp(0.0, 1.0)
        }
    };
    Ok(NormalizedLightState([
        wrap_deg(state.theta_deg) / 360.0,
        unit(state.phi_deg, &bx.phi),
        unit(state.r, &bx.r),
        (state.i_p / i_p_max).min(1.0),
        state.i_e,
    ]))
}

pub fn denormalize(n: &NormalizedLightState, bx: &PolarBox, i_p_max: f64) -> LightState {
    let [t, p, r, ip, ie] = n.0;
    let scale = |u: f64, iv: &Interval| {
        if iv.is_fixed() {
            iv.min
        } else {
            iv.min + u * iv.span()
        }
    };
    LightState {
        theta_deg: t * 360.0,
        phi_deg: scale(p, &bx.phi),
        r: scale(r, &bx.r),
        i_p: ip * i_p_max,
        i_e: ie,
    }
}

/// Per-frame constant broadcast of the normalized control vector,
/// laid out `N × H × W × 5`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVolume {
    pub data: Vec<f64>,
    pub dims: (usize, usize, usize),
}

impl ControlVolume {
    pub const CHANNELS: usize = 5;

    pub fn zeros(n: usize, h: usize, w: usize) -> Self {
        ControlVolume {
            data: vec![0.0; n * h * w * Self::CHANNELS],
            dims: (n, h, w),
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        let (n, h, w) = self.dims;
        [n, h, w, Self::CHANNELS]
    }

    pub fn get(&self, n: usize, y: usize, x: usize, c: usize) -> f64 {
        let (_, h, w) = self.dims;
        self.data[((n * h + y) * w + x) * Self::CHANNELS + c]
    }

    pub fn pixel(&self, n: usize, y: usize, x: usize) -> &[f64] {
        let (_, h, w) = self.dims;
        let o = ((n * h + y) * w + x) * Self::CHANNELS;
        &self.data[o..o + Self::CHANNELS]
    }
}

pub fn build_control_volume(
    traj: &Trajectory,
    enc: &ControlEncoding,
    h: usize,
    w: usize,
) -> Result<ControlVolume> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument("control volume needs H, W >= 1".into()));
    }
    let n = traj.n_frames();
    let mut data = Vec::with_capacity(n * h * w * ControlVolume::CHANNELS);
    for s in &traj.states {
        let v = enc.normalize(s)?;
        for _ in 0..h * w {
            data.extend_from_slice(&v.0);
        }
    }
    Ok(ControlVolume {
        data,
        dims: (n, h, w),
    })
}

/// Direction class of a grid motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMotion {
    Horizontal,
    Vertical,
    Diagonal,
}

/// Random horizontal, vertical or diagonal motion between two grid points.
pub fn sample_grid_motion<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &PolarGrid,
    r: f64,
    n_motion: usize,
) -> Result<(GridMotion, Vec<PolarPoint>)> {
    let m = grid.m();
    let kind = match rng.gen_range(0..3) {
        0 => GridMotion::Horizontal,
        1 => GridMotion::Vertical,
        _ => GridMotion::Diagonal,
    };
    let i0 = rng.gen_range(0..m);
    let j0 = rng.gen_range(0..m);
    let other_j = |rng: &mut R| {
        let j = rng.gen_range(0..m - 1);
        if j >= j0 {
            j + 1
        } else {
            j
        }
    };
    let step_i = |rng: &mut R| {
        let k = rng.gen_range(1..=m / 2) as isize;
        let k = if rng.gen_bool(0.5) { k } else { -k };
        (i0 as isize + k).rem_euclid(m as isize) as usize
    };
    let (i1, j1) = match kind {
        GridMotion::Horizontal => (step_i(rng), j0),
        GridMotion::Vertical => (i0, other_j(rng)),
        GridMotion::Diagonal => {
            let i1 = step_i(rng);
            (i1, other_j(rng))
        }
    };
    let a = grid.point(i0, j0, r);
    let b = grid.point(i1, j1, r);
    let path = linear_motion(
        (a.theta_deg, a.phi_deg),
        (b.theta_deg, b.phi_deg),
        n_motion,
        r,
    )?;
    Ok((kind, path))
}

/// Spiral turn counts drawn for random spirals and hybrids.
pub const TURNS_RANGE: (f64, f64) = (0.5, 1.5);

/// Random curve of the requested kind inside `bx`.
pub fn sample_curve<R: Rng + ?Sized>(
    rng: &mut R,
    kind: TrajectoryKind,
    bx: &PolarBox,
    n_motion: usize,
) -> Result<Vec<PolarPoint>> {
    match kind {
        TrajectoryKind::Bezier => {
            let ctrl = [(); 4].map(|_| bx.sample(rng));
            Ok(bezier_motion(&ctrl, n_motion))
        }
        TrajectoryKind::Spiral => {
            let a = bx.sample(rng);
            let b = bx.sample(rng);
            let turns = rng.gen_range(TURNS_RANGE.0..TURNS_RANGE.1);
            spiral_motion(a, b, turns, n_motion)
        }
        TrajectoryKind::Hybrid => {
            let ctrl = [(); 4].map(|_| bx.sample(rng));
            let turns = rng.gen_range(TURNS_RANGE.0..TURNS_RANGE.1);
            hybrid_motion(&ctrl, turns, n_motion)
        }
        other => Err(Error::InvalidArgument(format!(
            "{other:?} is not a free-form curve kind"
        ))),
    }
}
