"""Procedural articulated walkers rendered as parsing label maps.

All geometry lives in a canonical 64×44 pixel frame (y grows downwards, the
figure walks towards +x). Rendering maps every output pixel centre back into
canonical coordinates through the inverse view transform and tests it
against capsules, disks and a convex dress polygon in painter's order:
far (left) limbs, torso and dress, near (right) limbs, head.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..gps.types import (NUM_CLASSES, DRESS, HEAD, LEFT_ARM, LEFT_FOOT, LEFT_HAND, LEFT_LEG, MIRROR_LABELS,
                         RIGHT_ARM, RIGHT_FOOT, RIGHT_HAND, RIGHT_LEG, TORSO,
                         GaitParsingSequence, ParsingFrame)

CANON_H, CANON_W = 64.0, 44.0
GROUND_Y = 61.0
CENTER_X = 22.0
HIP_OFFSET = 0.0
SS = 3
SHIN_FOLD = 0.7


class FigureOutOfBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class IdentityProfile:
    height_scale: float
    head_radius: float
    torso_height: float
    torso_width: float
    upper_arm: float
    forearm: float
    arm_width: float
    hand_radius: float
    thigh: float
    shin: float
    leg_width: float
    foot_length: float
    gait_period: float
    stride_amplitude: float
    arm_swing: float
    knee_flex: float
    elbow_bend: float
    phase_offset: float
    has_dress: bool
    dress_length: float

    def to_dict(self):
        return asdict(self)


def generate_identity(seed: int, subject_index: int, dress_prob: float = 0.1) -> IdentityProfile:
    """Deterministic body and gait parameters for one subject (canonical pixels)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x1D, subject_index)))
    u = rng.uniform
    s = u(0.86, 1.0)
    body = 50.0 * s
    torso_h = body * u(0.27, 0.34)
    return IdentityProfile(
        height_scale=s,
        head_radius=body * u(0.055, 0.075),
        torso_height=torso_h,
        torso_width=body * u(0.12, 0.2),
        upper_arm=body * u(0.15, 0.2),
        forearm=body * u(0.13, 0.18),
        arm_width=body * u(0.04, 0.06),
        hand_radius=body * u(0.028, 0.045),
        thigh=body * u(0.2, 0.26),
        shin=body * u(0.19, 0.25),
        leg_width=body * u(0.055, 0.08),
        foot_length=body * u(0.07, 0.1),
        gait_period=u(9.0, 15.0),
        stride_amplitude=u(0.22, 0.42),
        arm_swing=u(0.15, 0.45),
        knee_flex=u(0.3, 0.8),
        elbow_bend=u(0.1, 0.5),
        phase_offset=u(0.0, 2 * np.pi),
        has_dress=bool(u() < dress_prob),
        dress_length=body * u(0.14, 0.26),
    )


@dataclass(frozen=True)
class Viewpoint:
    scale_x: float = 1.0
    shear: float = 0.0
    mirror: bool = False
    offset_x: float = 0.0


@dataclass(frozen=True)
class Occlusion:
    """Per-sequence static occluders; occluded pixels become background."""

    rects: tuple = ()            # (y0, x0, y1, x1) in output pixels
    bottom_rows: int = 0
    dropped_frames: tuple = ()


# -- primitive shapes (canonical coordinates) ------------------------------------

def _capsule(px, py, a, b, r):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / ll, 0.0, 1.0) if ll > 0 else 0.0
    qx, qy = px - (ax + t * dx), py - (ay + t * dy)
    return qx * qx + qy * qy <= r * r


def _disk(px, py, c, r):
    return (px - c[0]) ** 2 + (py - c[1]) ** 2 <= r * r


def _convex(px, py, pts):
    inside = np.ones(px.shape, dtype=bool)
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        inside &= (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) >= 0
    return inside


def _polar(origin, length, angle):
    # angle measured from straight down, positive swings towards +x
    return (origin[0] + length * np.sin(angle), origin[1] + length * np.cos(angle))


def pose_shapes(p: IdentityProfile, phase: float):
    """Ordered (label, kind, params) primitives for one pose, painter's order."""
    leg_len = p.thigh + p.shin
    hip = (CENTER_X, GROUND_Y - leg_len - p.leg_width / 2)
    shoulder = (CENTER_X, hip[1] - p.torso_height)
    head_c = (CENTER_X + 0.6, shoulder[1] - p.head_radius * 0.85)

    def leg(side_phase, dx):
        # slightly oblique camera: the hips sit half a leg width either side of the midline
        hip_s = (hip[0] + dx, hip[1])
        s = np.sin(side_phase)
        swing = max(0.0, np.cos(side_phase))   # >0 only during the swing half
        thigh_a = p.stride_amplitude * s
        knee = _polar(hip_s, p.thigh, thigh_a)
        shin_a = thigh_a - p.knee_flex * swing
        # the lower leg folds out of the image plane during swing
        shin_len = p.shin * (1.0 - SHIN_FOLD * swing)
        ankle = _polar(knee, shin_len, shin_a)
        toe = _polar(ankle, p.foot_length, shin_a + np.pi / 2)
        return [(None, "capsule", (hip_s, knee, p.leg_width / 2)),
                (None, "capsule", (knee, ankle, p.leg_width / 2)),
                ("foot", "capsule", (ankle, toe, p.leg_width / 2.6))]

    def arm(side_phase):
        a = p.arm_swing * np.sin(side_phase)
        elbow = _polar(shoulder, p.upper_arm, a)
        wrist = _polar(elbow, p.forearm, a + p.elbow_bend)
        return [(None, "capsule", (shoulder, elbow, p.arm_width / 2)),
                (None, "capsule", (elbow, wrist, p.arm_width / 2)),
                ("hand", "disk", (wrist, p.hand_radius))]

    def tag(parts, limb, extra):
        return [((extra if t is not None else limb), kind, prm) for t, kind, prm in parts]

    phi_left = phase
    phi_right = phase + np.pi
    shapes = []
    shapes += tag(arm(phi_right), LEFT_ARM, LEFT_HAND)     # arms swing against same-side leg
    shapes += tag(leg(phi_left, -HIP_OFFSET * p.leg_width), LEFT_LEG, LEFT_FOOT)
    shapes.append((TORSO, "capsule", (shoulder, hip, p.torso_width / 2)))
    if p.has_dress:
        top = hip[1] - p.torso_height * 0.2
        half_top = p.torso_width / 2
        half_bot = p.torso_width / 2 + p.dress_length * 0.35
        bot = hip[1] + p.dress_length
        shapes.append((DRESS, "convex", [(CENTER_X - half_top, top), (CENTER_X + half_top, top),
                                         (CENTER_X + half_bot, bot), (CENTER_X - half_bot, bot)]))
    shapes += tag(leg(phi_right, HIP_OFFSET * p.leg_width), RIGHT_LEG, RIGHT_FOOT)
    shapes += tag(arm(phi_left), RIGHT_ARM, RIGHT_HAND)
    shapes.append((HEAD, "disk", (head_c, p.head_radius)))
    return shapes


def _extent(kind, prm):
    if kind == "capsule":
        (ax, ay), (bx, by), r = prm
        return min(ax, bx) - r, min(ay, by) - r, max(ax, bx) + r, max(ay, by) + r
    if kind == "disk":
        (cx, cy), r = prm
        return cx - r, cy - r, cx + r, cy + r
    xs = [q[0] for q in prm]
    ys = [q[1] for q in prm]
    return min(xs), min(ys), max(xs), max(ys)


def _view_forward(x, y, view: Viewpoint):
    cy = CANON_H / 2
    return CENTER_X + view.offset_x + view.scale_x * (x - CENTER_X) + view.shear * (y - cy), y


def _check_bounds(shapes, view: Viewpoint):
    for _, kind, prm in shapes:
        x0, y0, x1, y1 = _extent(kind, prm)
        for x, y in ((x0, y0), (x0, y1), (x1, y0), (x1, y1)):
            vx, vy = _view_forward(x, y, view)
            if not (0.0 <= vx <= CANON_W and 0.0 <= vy <= CANON_H):
                raise FigureOutOfBoundsError(
                    f"figure reaches ({vx:.1f}, {vy:.1f}) outside the {CANON_H:.0f}x{CANON_W:.0f} frame")


def render_pose(p: IdentityProfile, phase: float, view: Viewpoint, size) -> np.ndarray:
    h, w = size
    shapes = pose_shapes(p, phase)
    _check_bounds(shapes, view)
    # SS x SS sub-samples per output pixel, majority label wins: removes the
    # column aliasing that makes thin vertical limbs flicker in pixel count
    ys = (np.arange(h * SS) + 0.5) * (CANON_H / (h * SS))
    xs = (np.arange(w * SS) + 0.5) * (CANON_W / (w * SS))
    vy, vx = np.meshgrid(ys, xs, indexing="ij")
    py = vy
    px = CENTER_X + (vx - CENTER_X - view.offset_x - view.shear * (vy - CANON_H / 2)) / view.scale_x
    fine = np.zeros((h * SS, w * SS), dtype=np.uint8)
    for label, kind, prm in shapes:
        if kind == "capsule":
            m = _capsule(px, py, *prm)
        elif kind == "disk":
            m = _disk(px, py, *prm)
        else:
            m = _convex(px, py, prm)
        fine[m] = label
    blocks = fine.reshape(h, SS, w, SS).transpose(0, 2, 1, 3).reshape(h, w, SS * SS)
    counts = (blocks[..., None] == np.arange(NUM_CLASSES, dtype=np.uint8)).sum(axis=2)
    out = np.argmax(counts, axis=-1).astype(np.uint8)
    if view.mirror:
        # walking the other way: flip the image and exchange left/right labels
        out = MIRROR_LABELS[out[:, ::-1]]
    return np.ascontiguousarray(out)


def render_walk_sequence(profile: IdentityProfile, viewpoint: Viewpoint, n_frames: int,
                         occlusion: Occlusion | None = None, rng=None, size=(64, 44),
                         start_phase: float | None = None, subject_id="", sequence_id="",
                         camera_id="") -> GaitParsingSequence:
    """Render ``n_frames`` consecutive walking poses."""
    h, w = size
    if h < 32 or w < 22:
        raise ValueError(f"frame size {size} below the 32x22 minimum")
    rng = rng if rng is not None else np.random.default_rng(0)
    if start_phase is None:
        start_phase = rng.uniform(0, 2 * np.pi)
    occlusion = occlusion or Occlusion()
    step = 2 * np.pi / profile.gait_period
    frames = []
    for t in range(n_frames):
        if t in occlusion.dropped_frames:
            continue
        lab = render_pose(profile, profile.phase_offset + start_phase + step * t, viewpoint, size)
        for y0, x0, y1, x1 in occlusion.rects:
            lab[y0:y1, x0:x1] = 0
        if occlusion.bottom_rows:
            lab[h - occlusion.bottom_rows:] = 0
        frames.append(ParsingFrame(lab))
    if not frames:
        frames.append(ParsingFrame(render_pose(profile, start_phase, viewpoint, size)))
    return GaitParsingSequence(tuple(frames), subject_id=subject_id, sequence_id=sequence_id,
                               camera_id=camera_id)
