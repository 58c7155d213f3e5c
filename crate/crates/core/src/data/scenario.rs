//! Procedural motion generation: turning walks plus reach / climb / sit
//! goal scenarios.
//!
//! All motion is built analytically in the root's yaw-aligned frame from a
//! seeded RNG, so sequences are bitwise reproducible. Feet are pinned to
//! fixed world positions during stance and swing with zero end-point
//! velocity (septic ease), which keeps ground-truth foot skating at zero.
//! Goal scenarios place end effectors on their sampled targets exactly at
//! the final frame via two-link inverse kinematics.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::motion::{joints, MotionSequence, PoseFrame, Skeleton};
use crate::vec3::{self, wrap_angle, Vec3};

pub const FPS: f64 = 20.0;

/// Action label values used across the project.
pub mod labels {
    pub const WALK_TURN: u32 = 0;
    pub const REACH: u32 = 1;
    pub const CLIMB: u32 = 2;
    pub const SIT: u32 = 3;
    pub const NAMES: [&str; 4] = ["walk_turn", "reach", "climb", "sit"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    WalkTurn,
    Reach,
    Climb,
    Sit,
}

impl ScenarioKind {
    pub fn label(self) -> u32 {
        match self {
            ScenarioKind::WalkTurn => labels::WALK_TURN,
            ScenarioKind::Reach => labels::REACH,
            ScenarioKind::Climb => labels::CLIMB,
            ScenarioKind::Sit => labels::SIT,
        }
    }

    pub fn from_label(label: u32) -> Option<Self> {
        match label {
            labels::WALK_TURN => Some(ScenarioKind::WalkTurn),
            labels::REACH => Some(ScenarioKind::Reach),
            labels::CLIMB => Some(ScenarioKind::Climb),
            labels::SIT => Some(ScenarioKind::Sit),
            _ => None,
        }
    }
}

/// Sampling ranges for one scenario draw.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_frames: usize,
    pub seed: u64,
    /// Walking speed range, m/s.
    pub speed: (f64, f64),
    /// Turn rate range, rad/s.
    pub turn_rate: (f64, f64),
    /// Arm swing amplitude range, meters of hand travel.
    pub arm_swing: (f64, f64),
    /// Body scale sampling range.
    pub body_scale: (f64, f64),
    /// Reach goal radius around the shoulder, meters (scaled by body).
    pub reach_radius: (f64, f64),
    /// Climb hand-hold height range, meters (scaled by body).
    pub climb_hand_height: (f64, f64),
    /// Sit seat height range, meters (absolute).
    pub seat_height: (f64, f64),
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        ScenarioSpec {
            kind,
            n_frames: 60,
            seed,
            speed: (0.8, 1.6),
            turn_rate: (-0.6, 0.6),
            arm_swing: (0.0, 0.4),
            body_scale: (0.8, 1.2),
            reach_radius: (0.30, 0.50),
            climb_hand_height: (1.50, 1.68),
            seat_height: (0.40, 0.50),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames < 20 {
            return Err(Error::InvalidArgument {
                context: "scenario spec",
                reason: format!("need at least 20 frames, got {}", self.n_frames),
            });
        }
        for (lo, hi, name) in [
            (self.speed.0, self.speed.1, "speed"),
            (self.turn_rate.0, self.turn_rate.1, "turn_rate"),
            (self.arm_swing.0, self.arm_swing.1, "arm_swing"),
            (self.body_scale.0, self.body_scale.1, "body_scale"),
            (self.reach_radius.0, self.reach_radius.1, "reach_radius"),
            (self.climb_hand_height.0, self.climb_hand_height.1, "climb_hand_height"),
            (self.seat_height.0, self.seat_height.1, "seat_height"),
        ] {
            if !(lo <= hi) {
                return Err(Error::InvalidArgument {
                    context: "scenario spec",
                    reason: format!("empty {name} range [{lo}, {hi}]"),
                });
            }
        }
        Ok(())
    }
}

/// End-effector targets a goal scenario satisfies at its final frame.
#[derive(Debug, Clone)]
pub struct GoalInfo {
    /// (keyjoint index in the 6-joint keyjoint order, world position).
    pub targets: Vec<(usize, Vec3<f64>)>,
}

/// Smooth step with zero velocity and acceleration at both ends.
fn ease(phi: f64) -> f64 {
    let x = phi.clamp(0.0, 1.0);
    let x4 = x * x * x * x;
    x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
}

/// Two-link IK: mid-joint position for a chain root -> mid -> target with
/// segment lengths l1, l2, bending toward `bend_dir`. The target is clamped
/// to the reachable annulus.
fn two_link_ik(root: Vec3<f64>, target: Vec3<f64>, l1: f64, l2: f64, bend_dir: Vec3<f64>) -> Vec3<f64> {
    let mut d = vec3::sub(target, root);
    let mut len = vec3::norm(d);
    let max_len = l1 + l2;
    let min_len = (l1 - l2).abs().max(1e-9);
    if len < 1e-12 {
        d = [0.0, -1.0, 0.0];
        len = 1e-12;
    }
    let clamped = len.clamp(min_len, max_len);
    let dir = vec3::scale(d, 1.0 / len);
    let along = ((l1 * l1 + clamped * clamped - l2 * l2) / (2.0 * clamped)).clamp(-l1, l1);
    let h = (l1 * l1 - along * along).max(0.0).sqrt();
    // Perpendicular component of the bend direction.
    let mut perp = vec3::sub(bend_dir, vec3::scale(dir, vec3::dot(bend_dir, dir)));
    let pn = vec3::norm(perp);
    if pn < 1e-9 {
        // Bend direction degenerate with the chain axis; pick any normal.
        let alt = if dir[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
        perp = vec3::sub(alt, vec3::scale(dir, vec3::dot(alt, dir)));
    }
    let perp = vec3::scale(perp, 1.0 / vec3::norm(perp).max(1e-12));
    vec3::add(root, vec3::add(vec3::scale(dir, along), vec3::scale(perp, h)))
}

/// Per-frame world-space plan for the whole body; converted to pose frames
/// at the end.
struct BodyPlan {
    /// Pelvis world position per frame.
    pelvis: Vec<Vec3<f64>>,
    /// Wrapped yaw per frame.
    yaw: Vec<f64>,
    /// World positions for hands and feet per frame.
    l_hand: Vec<Vec3<f64>>,
    r_hand: Vec<Vec3<f64>>,
    l_foot: Vec<Vec3<f64>>,
    r_foot: Vec<Vec3<f64>>,
}

/// Skeleton segment lengths scaled by body size.
struct Limbs {
    scale: f64,
    hip_lateral: f64,
    hip_drop: f64,
    thigh: f64,
    shin: f64,
    shoulder_lateral: f64,
    shoulder_raise: f64,
    upper_arm: f64,
    forearm: f64,
    spine1: f64,
    spine2: f64,
    head_raise: f64,
}

impl Limbs {
    fn new(scale: f64) -> Self {
        Limbs {
            scale,
            hip_lateral: 0.10 * scale,
            hip_drop: 0.05 * scale,
            thigh: 0.40 * scale,
            shin: 0.45 * scale,
            shoulder_lateral: 0.20 * scale,
            shoulder_raise: 0.05 * scale,
            upper_arm: 0.28 * scale,
            forearm: 0.26 * scale,
            spine1: 0.20 * scale,
            spine2: 0.20 * scale,
            head_raise: 0.25 * scale,
        }
    }

    fn arm_len(&self) -> f64 {
        self.upper_arm + self.forearm
    }
}

/// Convert a world-space body plan into pose frames with per-joint offsets.
fn plan_to_frames(plan: &BodyPlan, limbs: &Limbs) -> Vec<PoseFrame<f64>> {
    let n = plan.pelvis.len();
    let s = limbs.scale;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let pelvis = plan.pelvis[i];
        let yaw = plan.yaw[i];
        // Everything below is in the root's yaw-aligned frame.
        let rel = |world: Vec3<f64>| vec3::rotate_y_inv(vec3::sub(world, pelvis), yaw);
        let spine_lower = [0.0, limbs.spine1, 0.0];
        let spine_upper = [0.0, limbs.spine1 + limbs.spine2, 0.0];
        let head = [0.0, limbs.spine1 + limbs.spine2 + limbs.head_raise, 0.0];
        let l_shoulder = [
            limbs.shoulder_lateral,
            limbs.spine1 + limbs.spine2 + limbs.shoulder_raise,
            0.0,
        ];
        let r_shoulder = [
            -limbs.shoulder_lateral,
            limbs.spine1 + limbs.spine2 + limbs.shoulder_raise,
            0.0,
        ];
        let l_hip = [limbs.hip_lateral, -limbs.hip_drop, 0.0];
        let r_hip = [-limbs.hip_lateral, -limbs.hip_drop, 0.0];

        let l_hand = rel(plan.l_hand[i]);
        let r_hand = rel(plan.r_hand[i]);
        let l_foot = rel(plan.l_foot[i]);
        let r_foot = rel(plan.r_foot[i]);

        let l_elbow = two_link_ik(l_shoulder, l_hand, limbs.upper_arm, limbs.forearm, [0.0, 0.0, -1.0]);
        let r_elbow = two_link_ik(r_shoulder, r_hand, limbs.upper_arm, limbs.forearm, [0.0, 0.0, -1.0]);
        let l_knee = two_link_ik(l_hip, l_foot, limbs.thigh, limbs.shin, [0.0, 0.0, 1.0]);
        let r_knee = two_link_ik(r_hip, r_foot, limbs.thigh, limbs.shin, [0.0, 0.0, 1.0]);

        // Parent-relative offsets, divided by scale (forward kinematics
        // multiplies it back).
        let mut local = vec![[0.0f64; 3]; 15];
        let mut set = |joint: usize, child: Vec3<f64>, parent: Vec3<f64>| {
            local[joint - 1] = vec3::scale(vec3::sub(child, parent), 1.0 / s);
        };
        let origin = [0.0, 0.0, 0.0];
        set(joints::SPINE_LOWER, spine_lower, origin);
        set(joints::SPINE_UPPER, spine_upper, spine_lower);
        set(joints::HEAD, head, spine_upper);
        set(joints::L_SHOULDER, l_shoulder, spine_upper);
        set(joints::L_ELBOW, l_elbow, l_shoulder);
        set(joints::L_HAND, l_hand, l_elbow);
        set(joints::R_SHOULDER, r_shoulder, spine_upper);
        set(joints::R_ELBOW, r_elbow, r_shoulder);
        set(joints::R_HAND, r_hand, r_elbow);
        set(joints::L_HIP, l_hip, origin);
        set(joints::L_KNEE, l_knee, l_hip);
        set(joints::L_FOOT, l_foot, l_knee);
        set(joints::R_HIP, r_hip, origin);
        set(joints::R_KNEE, r_knee, r_hip);
        set(joints::R_FOOT, r_foot, r_knee);

        frames.push(PoseFrame {
            root_position: pelvis,
            root_yaw: wrap_angle(yaw),
            local_offsets: local,
        });
    }
    frames
}

struct WalkParams {
    speed: f64,
    turn_rate: f64,
    arm_swing: f64,
    start_yaw: f64,
    start_xz: (f64, f64),
}

/// Turning walk with analytic ground-contact locking.
fn generate_walk(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    limbs: &Limbs,
    params: WalkParams,
) -> BodyPlan {
    let _ = rng;
    let n = spec.n_frames;
    let s = limbs.scale;
    let dt = 1.0 / FPS;
    let cycle_frames = (0.75 * s * FPS).round() as i64; // full gait cycle
    let step_len = params.speed * (cycle_frames as f64 * dt) / 2.0;
    let walk_height = 0.82 * s;
    let step_height = 0.15 * s;

    // Pelvis path extended one cycle on both sides so foot planning can look
    // ahead and behind.
    let lead = cycle_frames;
    let total = n as i64 + 2 * lead;
    let mut path = Vec::with_capacity(total as usize);
    let mut yaw_track = Vec::with_capacity(total as usize);
    for k in 0..total {
        let t = (k - lead) as f64 * dt;
        let yaw = params.start_yaw + params.turn_rate * t;
        yaw_track.push(yaw);
        let xz = if params.turn_rate.abs() < 1e-9 {
            let h = vec3::heading(params.start_yaw);
            (
                params.start_xz.0 + params.speed * t * h[0],
                params.start_xz.1 + params.speed * t * h[2],
            )
        } else {
            // Closed-form arc: integral of speed * heading(yaw0 + w t).
            let w = params.turn_rate;
            let (y0, y1) = (params.start_yaw, yaw);
            (
                params.start_xz.0 + params.speed / w * (y0.cos() - y1.cos()),
                params.start_xz.1 + params.speed / w * (y1.sin() - y0.sin()),
            )
        };
        path.push(xz);
    }
    let pelvis_at = |k: i64| -> (f64, f64) { path[(k + lead) as usize] };
    let yaw_at = |k: i64| -> f64 { yaw_track[(k + lead) as usize] };

    // Foot plan: alternating stance/swing with half-cycle duty. A foot lands
    // half a step ahead of its hip at landing time.
    let half = cycle_frames / 2;
    let plant_pos = |land_frame: i64, side: f64| -> Vec3<f64> {
        let (px, pz) = pelvis_at(land_frame);
        let yaw = yaw_at(land_frame);
        let offset = vec3::rotate_y([side * limbs.hip_lateral, 0.0, step_len / 2.0], yaw);
        [px + offset[0], 0.0, pz + offset[2]]
    };
    let foot_track = |phase_offset: i64, side: f64| -> Vec<Vec3<f64>> {
        let mut track = Vec::with_capacity(n);
        for i in 0..n as i64 {
            // Cycle-local position: stance on [0, half), swing on [half, cycle).
            let local = (i + phase_offset).rem_euclid(cycle_frames);
            let cycle_start = i + phase_offset - local;
            if local < half {
                // Stance: planted since this stance began.
                let land = cycle_start - phase_offset;
                track.push(plant_pos(land, side));
            } else {
                // Swing from the previous plant to the next landing.
                let land_prev = cycle_start - phase_offset;
                let land_next = cycle_start + cycle_frames - phase_offset;
                let from = plant_pos(land_prev, side);
                let to = plant_pos(land_next, side);
                let phi = (local - half) as f64 / half as f64;
                let e = ease(phi);
                let mut p = vec3::lerp(from, to, e);
                p[1] = step_height * (std::f64::consts::PI * phi).sin();
                track.push(p);
            }
        }
        track
    };
    // Left foot stance starts at phase 0; right foot is half a cycle off.
    let l_foot = foot_track(0, 1.0);
    let r_foot = foot_track(half, -1.0);

    let mut pelvis = Vec::with_capacity(n);
    let mut yaw = Vec::with_capacity(n);
    let mut l_hand = Vec::with_capacity(n);
    let mut r_hand = Vec::with_capacity(n);
    let shoulder_y = limbs.spine1 + limbs.spine2 + limbs.shoulder_raise;
    let hang = 0.50 * s;
    let swing_angle = params.arm_swing.clamp(0.0, 0.9).asin();
    for i in 0..n as i64 {
        let (px, pz) = pelvis_at(i);
        let phase = (i.rem_euclid(cycle_frames)) as f64 / cycle_frames as f64;
        let bob = -0.01 * s * (1.0 - (4.0 * std::f64::consts::PI * phase).cos()) / 2.0;
        let p = [px, walk_height + bob, pz];
        pelvis.push(p);
        let y = yaw_at(i);
        yaw.push(y);
        // Arms swing opposite their leg with constant shoulder distance.
        let theta = swing_angle * (2.0 * std::f64::consts::PI * phase).sin();
        let hand = |side: f64, th: f64| -> Vec3<f64> {
            let rel = [
                side * limbs.shoulder_lateral,
                shoulder_y - hang * th.cos(),
                hang * th.sin(),
            ];
            vec3::add(p, vec3::rotate_y(rel, y))
        };
        // Left arm is in phase with the right leg (phase offset pi).
        l_hand.push(hand(1.0, -theta));
        r_hand.push(hand(-1.0, theta));
    }
    BodyPlan {
        pelvis,
        yaw,
        l_hand,
        r_hand,
        l_foot,
        r_foot,
    }
}

/// Static standing base plan shared by the goal scenarios.
fn standing_plan(n: usize, limbs: &Limbs, start_xz: (f64, f64), yaw: f64, height: f64) -> BodyPlan {
    let s = limbs.scale;
    let pelvis = [start_xz.0, height, start_xz.1];
    let foot = |side: f64| -> Vec3<f64> {
        let o = vec3::rotate_y([side * limbs.hip_lateral, 0.0, 0.0], yaw);
        [pelvis[0] + o[0], 0.0, pelvis[2] + o[2]]
    };
    let hand = |side: f64| -> Vec3<f64> {
        let shoulder_y = limbs.spine1 + limbs.spine2 + limbs.shoulder_raise;
        let rel = [side * limbs.shoulder_lateral, shoulder_y - 0.50 * s, 0.0];
        vec3::add(pelvis, vec3::rotate_y(rel, yaw))
    };
    BodyPlan {
        pelvis: vec![pelvis; n],
        yaw: vec![yaw; n],
        l_hand: vec![hand(1.0); n],
        r_hand: vec![hand(-1.0); n],
        l_foot: vec![foot(1.0); n],
        r_foot: vec![foot(-1.0); n],
    }
}

/// Ease a track from its current value toward a fixed world target over
/// frame window [start, end]; holds the target afterwards.
fn ease_to(track: &mut [Vec3<f64>], target: Vec3<f64>, start: usize, end: usize) {
    let from = track[start.min(track.len() - 1)];
    let n = track.len();
    for i in start..n {
        let phi = if end > start {
            (i - start) as f64 / (end - start) as f64
        } else {
            1.0
        };
        track[i] = vec3::lerp(from, target, ease(phi));
    }
}

fn generate_reach(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, limbs: &Limbs) -> (BodyPlan, GoalInfo) {
    let n = spec.n_frames;
    let s = limbs.scale;
    let yaw = rng.gen_range(-0.6..0.6);
    let xz = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let mut plan = standing_plan(n, limbs, xz, yaw, 0.90 * s);
    // Goal on a sphere around the right shoulder, biased forward.
    let radius = rng.gen_range(spec.reach_radius.0..=spec.reach_radius.1) * s;
    let radius = radius.min(limbs.arm_len() - 0.02 * s);
    let azimuth: f64 = rng.gen_range(-0.7..0.7);
    let elevation: f64 = rng.gen_range(-0.2..0.9);
    let shoulder_rel = [
        -limbs.shoulder_lateral,
        limbs.spine1 + limbs.spine2 + limbs.shoulder_raise,
        0.0,
    ];
    let dir_rel = [
        azimuth.sin() * elevation.cos(),
        elevation.sin(),
        azimuth.cos() * elevation.cos(),
    ];
    let goal_rel = vec3::add(shoulder_rel, vec3::scale(dir_rel, radius));
    let goal = vec3::add(plan.pelvis[0], vec3::rotate_y(goal_rel, yaw));
    ease_to(&mut plan.r_hand, goal, n / 3, n - 1);
    let info = GoalInfo {
        targets: vec![(3, goal)], // right hand is keyjoint 3
    };
    (plan, info)
}

fn generate_climb(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, limbs: &Limbs) -> (BodyPlan, GoalInfo) {
    let n = spec.n_frames;
    let s = limbs.scale;
    let yaw = rng.gen_range(-0.3..0.3);
    let xz = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let start_height = 0.80 * s;
    let mut plan = standing_plan(n, limbs, xz, yaw, start_height);
    let fwd = vec3::heading(yaw);
    let right = vec3::rotate_y([-1.0, 0.0, 0.0], yaw);

    // Wall 0.50 m ahead of the start; pelvis approaches it and rises.
    let base = plan.pelvis[0];
    let wall = 0.50;
    let rise = 0.25 * s;
    let approach = 0.25;
    let hand_y = |r: &mut ChaCha8Rng| rng_range_scaled(r, spec.climb_hand_height, s);
    let holds = [
        // (keyjoint index, world target)
        (2usize, hold_pos(base, fwd, right, -0.20 * s, hand_y(rng), wall - 0.05)), // left hand
        (3usize, hold_pos(base, fwd, right, 0.20 * s, hand_y(rng), wall - 0.05)),  // right hand
        (4usize, hold_pos(base, fwd, right, -0.12 * s, rng.gen_range(0.32..0.42) * s, wall - 0.08)), // left foot
        (5usize, hold_pos(base, fwd, right, 0.12 * s, rng.gen_range(0.32..0.42) * s, wall - 0.08)), // right foot
    ];

    // Pelvis: approach the wall early, rise late.
    for i in 0..n {
        let phi_a = ease(i as f64 / (n as f64 * 0.5));
        let phi_r = ease((i as f64 - 0.55 * n as f64) / (0.40 * n as f64));
        let shift = vec3::scale(fwd, approach * phi_a);
        plan.pelvis[i] = [
            base[0] + shift[0],
            start_height + rise * phi_r,
            base[2] + shift[2],
        ];
    }
    // Hands reach their holds before the rise, feet step on during it.
    ease_to(&mut plan.l_hand, holds[0].1, n / 20, 2 * n / 5);
    ease_to(&mut plan.r_hand, holds[1].1, n / 10, 9 * n / 20);
    ease_to(&mut plan.l_foot, holds[2].1, 3 * n / 10, n / 2);
    ease_to(&mut plan.r_foot, holds[3].1, n / 2, 7 * n / 10);
    let info = GoalInfo {
        targets: holds.iter().map(|&(k, p)| (k, p)).collect(),
    };
    (plan, info)
}

fn hold_pos(
    base: Vec3<f64>,
    fwd: Vec3<f64>,
    right: Vec3<f64>,
    lateral: f64,
    height: f64,
    forward: f64,
) -> Vec3<f64> {
    [
        base[0] + fwd[0] * forward + right[0] * lateral,
        height,
        base[2] + fwd[2] * forward + right[2] * lateral,
    ]
}

fn rng_range_scaled(rng: &mut ChaCha8Rng, range: (f64, f64), s: f64) -> f64 {
    rng.gen_range(range.0..=range.1) * s
}

fn generate_sit(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, limbs: &Limbs) -> (BodyPlan, GoalInfo) {
    let n = spec.n_frames;
    let s = limbs.scale;
    let yaw = rng.gen_range(-0.6..0.6);
    let xz = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let mut plan = standing_plan(n, limbs, xz, yaw, 0.90 * s);
    let seat = rng.gen_range(spec.seat_height.0..=spec.seat_height.1);
    let back = 0.15;
    let fwd = vec3::heading(yaw);
    let base = plan.pelvis[0];

    // Pelvis descends to the seat, shifting backward.
    let descent_start = n / 5;
    let descent_end = 7 * n / 10;
    for i in 0..n {
        let phi = ease((i as f64 - descent_start as f64) / (descent_end - descent_start) as f64);
        plan.pelvis[i] = [
            base[0] - fwd[0] * back * phi,
            0.90 * s + (seat - 0.90 * s) * phi,
            base[2] - fwd[2] * back * phi,
        ];
    }
    // Hands settle onto sampled rest targets (relative to the seated pelvis).
    let pelvis_final = plan.pelvis[n - 1];
    let mut hand_target = |side: f64| -> Vec3<f64> {
        let rel = [
            side * 0.18 * s,
            0.10 + rng.gen_range(-0.02..0.02),
            rng.gen_range(0.10..0.18),
        ];
        vec3::add(pelvis_final, vec3::rotate_y(rel, yaw))
    };
    let l_target = hand_target(1.0);
    let r_target = hand_target(-1.0);
    ease_to(&mut plan.l_hand, l_target, n / 4, 4 * n / 5);
    ease_to(&mut plan.r_hand, r_target, n / 4, 4 * n / 5);
    let info = GoalInfo {
        targets: vec![(2, l_target), (3, r_target)],
    };
    (plan, info)
}

/// Generate one motion sequence; deterministic given the spec's seed.
pub fn generate_motion(skeleton: &Skeleton<f64>, spec: &ScenarioSpec) -> Result<MotionSequence<f64>> {
    Ok(generate_motion_with_goal(skeleton, spec)?.0)
}

/// Like [`generate_motion`], also returning the sampled end-effector goals
/// for goal scenarios (None for walks).
pub fn generate_motion_with_goal(
    skeleton: &Skeleton<f64>,
    spec: &ScenarioSpec,
) -> Result<(MotionSequence<f64>, Option<GoalInfo>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let body_scale = rng.gen_range(spec.body_scale.0..=spec.body_scale.1);
    let limbs = Limbs::new(body_scale);
    let (plan, goal) = match spec.kind {
        ScenarioKind::WalkTurn => {
            let params = WalkParams {
                speed: rng.gen_range(spec.speed.0..=spec.speed.1),
                turn_rate: rng.gen_range(spec.turn_rate.0..=spec.turn_rate.1),
                arm_swing: rng.gen_range(spec.arm_swing.0..=spec.arm_swing.1),
                start_yaw: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                start_xz: (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            };
            (generate_walk(spec, &mut rng, &limbs, params), None)
        }
        ScenarioKind::Reach => {
            let (plan, info) = generate_reach(spec, &mut rng, &limbs);
            (plan, Some(info))
        }
        ScenarioKind::Climb => {
            let (plan, info) = generate_climb(spec, &mut rng, &limbs);
            (plan, Some(info))
        }
        ScenarioKind::Sit => {
            let (plan, info) = generate_sit(spec, &mut rng, &limbs);
            (plan, Some(info))
        }
    };
    let frames = plan_to_frames(&plan, &limbs);
    let seq = MotionSequence {
        skeleton_id: skeleton.id,
        fps: FPS,
        frames,
        action_label: spec.kind.label(),
        body_scale,
    };
    seq.validate()?;
    Ok((seq, goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{extract_keyjoints, forward_kinematics};

    fn skeleton() -> Skeleton<f64> {
        Skeleton::canonical()
    }

    #[test]
    fn straight_walk_covers_speed_times_duration() {
        let s = skeleton();
        let mut spec = ScenarioSpec::new(ScenarioKind::WalkTurn, 5);
        spec.speed = (1.0, 1.0);
        spec.turn_rate = (0.0, 0.0);
        let seq = generate_motion(&s, &spec).unwrap();
        let a = seq.frames[0].root_position;
        let b = seq.frames[59].root_position;
        let travel = ((b[0] - a[0]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
        // 59 intervals at 1 m/s and 20 fps.
        assert!((travel - 59.0 / 20.0).abs() < 1e-9, "travel={travel}");
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let s = skeleton();
        for kind in [
            ScenarioKind::WalkTurn,
            ScenarioKind::Reach,
            ScenarioKind::Climb,
            ScenarioKind::Sit,
        ] {
            let spec = ScenarioSpec::new(kind, 1234);
            let a = generate_motion(&s, &spec).unwrap();
            let b = generate_motion(&s, &spec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn goal_scenarios_hit_targets_at_final_frame() {
        let s = skeleton();
        for kind in [ScenarioKind::Reach, ScenarioKind::Climb, ScenarioKind::Sit] {
            for seed in 0..30 {
                let spec = ScenarioSpec::new(kind, seed);
                let (seq, goal) = generate_motion_with_goal(&s, &spec).unwrap();
                let goal = goal.expect("goal scenarios carry targets");
                let pos =
                    forward_kinematics(&s, seq.frames.last().unwrap(), seq.body_scale).unwrap();
                for (k, target) in goal.targets {
                    let joint = s.keyjoint_indices[k];
                    let d = vec3::dist(pos[joint], target);
                    assert!(d < 1e-6, "{kind:?} seed {seed} keyjoint {k}: {d}");
                }
            }
        }
    }

    #[test]
    fn generated_motion_is_finite_and_valid() {
        let s = skeleton();
        for kind in [
            ScenarioKind::WalkTurn,
            ScenarioKind::Reach,
            ScenarioKind::Climb,
            ScenarioKind::Sit,
        ] {
            for seed in 0..20 {
                let spec = ScenarioSpec::new(kind, 7000 + seed);
                let seq = generate_motion(&s, &spec).unwrap();
                let c = extract_keyjoints(&s, &seq).unwrap();
                assert!(c.frames.iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn walk_feet_alternate_contact() {
        let s = skeleton();
        let spec = ScenarioSpec::new(ScenarioKind::WalkTurn, 42);
        let seq = generate_motion(&s, &spec).unwrap();
        let mut l_contact = 0;
        let mut r_contact = 0;
        for f in &seq.frames {
            let pos = forward_kinematics(&s, f, seq.body_scale).unwrap();
            if pos[joints::L_FOOT][1] < 0.05 {
                l_contact += 1;
            }
            if pos[joints::R_FOOT][1] < 0.05 {
                r_contact += 1;
            }
        }
        // Half-duty gait: each foot grounded roughly half the time.
        assert!(l_contact > 20 && l_contact < 45, "left contact {l_contact}");
        assert!(r_contact > 20 && r_contact < 45, "right contact {r_contact}");
    }

    #[test]
    fn rejects_short_sequences() {
        let s = skeleton();
        let mut spec = ScenarioSpec::new(ScenarioKind::WalkTurn, 1);
        spec.n_frames = 10;
        assert!(generate_motion(&s, &spec).is_err());
    }
}
