use std::f64::consts::PI;

use rand::Rng;

use super::{ArmrestStyle, ChairSpec, LegStyle, PartId};
use crate::geometry::{normalize_unit_sphere, Normalization, PointCloud};
use crate::{rng, Error, Result};

type V3 = [f64; 3];

const LEG_RADIUS: f64 = 0.035;
const PEDESTAL_RADIUS: f64 = 0.09;
const SPOKE_RADIUS: f64 = 0.015;
const SPOKE_LENGTH: f64 = 0.26;
const RUNNER_RADIUS: f64 = 0.025;
const BACK_THICKNESS: f64 = 0.04;
const BACK_BULGE: f64 = 0.12;
const ARM_HEIGHT: f64 = 0.22;

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Surface primitives the chair parts are assembled from.
#[derive(Clone, Debug)]
enum Primitive {
    /// Axis-aligned box surface.
    Box { center: V3, half: V3 },
    /// Lateral surface of a cylinder between two end points.
    Cylinder { a: V3, b: V3, radius: f64 },
    /// Two-sided backrest shell hinged at `hinge`, rising along `up`.
    Panel { hinge: V3, up: V3, normal: V3, width: f64, height: f64, bulge: f64 },
}

impl Primitive {
    fn area(&self) -> f64 {
        match *self {
            Primitive::Box { half, .. } => {
                let [x, y, z] = scale(half, 2.0);
                2.0 * (x * y + y * z + x * z)
            }
            Primitive::Cylinder { a, b, radius } => 2.0 * PI * radius * norm(sub(b, a)),
            Primitive::Panel { width, height, .. } => 2.0 * width * height,
        }
    }

    fn sample(&self, g: &mut rng::Rng) -> V3 {
        match *self {
            Primitive::Box { center, half } => {
                let [x, y, z] = half;
                let faces = [y * z, y * z, x * z, x * z, x * y, x * y];
                let total: f64 = faces.iter().sum();
                let mut u = g.random::<f64>() * total;
                let mut face = 5;
                for (i, f) in faces.iter().enumerate() {
                    if u < *f {
                        face = i;
                        break;
                    }
                    u -= f;
                }
                let s = |g: &mut rng::Rng, h: f64| (2.0 * g.random::<f64>() - 1.0) * h;
                let p = match face {
                    0 => [x, s(g, y), s(g, z)],
                    1 => [-x, s(g, y), s(g, z)],
                    2 => [s(g, x), y, s(g, z)],
                    3 => [s(g, x), -y, s(g, z)],
                    4 => [s(g, x), s(g, y), z],
                    _ => [s(g, x), s(g, y), -z],
                };
                add(center, p)
            }
            Primitive::Cylinder { a, b, radius } => {
                let axis = sub(b, a);
                let len = norm(axis);
                let dir = scale(axis, 1.0 / len);
                let helper = if dir[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let e1 = {
                    let c = cross(dir, helper);
                    scale(c, 1.0 / norm(c))
                };
                let e2 = cross(dir, e1);
                let t = g.random::<f64>();
                let th = 2.0 * PI * g.random::<f64>();
                add(add(a, scale(axis, t)), add(scale(e1, radius * th.cos()), scale(e2, radius * th.sin())))
            }
            Primitive::Panel { hinge, up, normal, width, height, bulge } => {
                let u = 2.0 * g.random::<f64>() - 1.0;
                let v = g.random::<f64>();
                let side = if g.random::<bool>() { 0.5 } else { -0.5 };
                let offset = -bulge * (1.0 - u * u) + side * BACK_THICKNESS;
                add(add(add(hinge, [u * width / 2.0, 0.0, 0.0]), scale(up, v * height)), scale(normal, offset))
            }
        }
    }
}

/// Assembles the labelled primitives of a chair in its raw frame (y up, +z front, floor at y = 0).
fn assemble(spec: &ChairSpec) -> Vec<(PartId, Primitive)> {
    let w = spec.seat_width;
    let d = spec.seat_depth;
    let t = spec.seat_thickness;
    let h = spec.leg_height;
    let top = h + t;
    let mut prims = Vec::new();

    prims.push((PartId::Seat, Primitive::Box { center: [0.0, h + t / 2.0, 0.0], half: [w / 2.0, t / 2.0, d / 2.0] }));

    let rec = spec.back_recline_deg.to_radians();
    let up = [0.0, rec.cos(), -rec.sin()];
    let normal = [0.0, rec.sin(), rec.cos()];
    let rear = -d / 2.0 + BACK_THICKNESS / 2.0;
    prims.push((
        PartId::Backrest,
        Primitive::Panel {
            hinge: [0.0, top, rear],
            up,
            normal,
            width: w,
            height: spec.back_height,
            bulge: BACK_BULGE * spec.back_curvature,
        },
    ));

    match spec.leg_style {
        LegStyle::Straight4 => {
            let (x, z) = (w / 2.0 - 0.07, d / 2.0 - 0.07);
            for (sx, sz) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                prims.push((
                    PartId::Legs,
                    Primitive::Cylinder { a: [sx * x, 0.0, sz * z], b: [sx * x, h, sz * z], radius: LEG_RADIUS },
                ));
            }
        }
        LegStyle::Swivel5 => {
            prims.push((
                PartId::Legs,
                Primitive::Cylinder { a: [0.0, 0.04, 0.0], b: [0.0, h, 0.0], radius: PEDESTAL_RADIUS },
            ));
            for k in 0..5 {
                let ang = 2.0 * PI * k as f64 / 5.0 + PI / 2.0;
                prims.push((
                    PartId::Legs,
                    Primitive::Cylinder {
                        a: [0.0, 0.03, 0.0],
                        b: [SPOKE_LENGTH * ang.cos(), 0.03, SPOKE_LENGTH * ang.sin()],
                        radius: SPOKE_RADIUS,
                    },
                ));
            }
        }
        LegStyle::Cantilever => {
            let r = RUNNER_RADIUS;
            for sx in [-1.0, 1.0] {
                let x = sx * (w / 2.0 - 0.05);
                let front = d / 2.0 - 0.05;
                let floor = [
                    ([x, r, -d / 2.0 + 0.05], [x, r, front]),
                    ([x, r, front], [x, h - r, front]),
                    ([x, h - r, front], [x, h - r, -d / 2.0 + 0.1]),
                ];
                for (a, b) in floor {
                    prims.push((PartId::Legs, Primitive::Cylinder { a, b, radius: r }));
                }
            }
        }
    }

    if spec.armrest_style != ArmrestStyle::None {
        // Connected: a solid side panel from the seat to the rail, capped by a
        // rail reaching the backrest.
        // Disconnected: T-shaped, a short pad on a central post.
        let z_front = d / 2.0 - 0.04;
        for sx in [-1.0, 1.0] {
            let x = sx * (w / 2.0 - 0.03);
            let z_end = match spec.armrest_style {
                ArmrestStyle::Connected => {
                    prims.push((
                        PartId::Armrest,
                        Primitive::Box {
                            center: [x, top + ARM_HEIGHT / 2.0, (z_front + rear) / 2.0],
                            half: [0.015, ARM_HEIGHT / 2.0, (z_front - rear) / 2.0],
                        },
                    ));
                    rear - ARM_HEIGHT * rec.tan()
                }
                _ => {
                    prims.push((
                        PartId::Armrest,
                        Primitive::Box { center: [x, top + ARM_HEIGHT / 2.0, z_front - 0.225 * d], half: [0.02, ARM_HEIGHT / 2.0, 0.02] },
                    ));
                    z_front - 0.45 * d
                }
            };
            prims.push((
                PartId::Armrest,
                Primitive::Box {
                    center: [x, top + ARM_HEIGHT + 0.015, (z_front + z_end) / 2.0],
                    half: [0.03, 0.015, (z_front - z_end) / 2.0],
                },
            ));
        }
    }
    prims
}

/// Area-proportional labelled sample in the raw (unnormalised) chair frame.
fn sample_raw(spec: &ChairSpec, n_points: usize, seed: u64) -> PointCloud<f64> {
    sample_prims(spec, assemble(spec), n_points, seed)
}

fn sample_prims(spec: &ChairSpec, prims: Vec<(PartId, Primitive)>, n_points: usize, seed: u64) -> PointCloud<f64> {
    let areas: Vec<f64> = prims.iter().map(|(_, p)| p.area()).collect();
    let total: f64 = areas.iter().sum();
    let mut g = rng::derived(spec.seed ^ seed.rotate_left(32), "realize", seed);
    let mut points = Vec::with_capacity(n_points);
    let mut labels = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut u = g.random::<f64>() * total;
        let mut idx = prims.len() - 1;
        for (i, a) in areas.iter().enumerate() {
            if u < *a {
                idx = i;
                break;
            }
            u -= a;
        }
        let (part, prim) = &prims[idx];
        points.push(prim.sample(&mut g));
        labels.push(part.label());
    }
    PointCloud::with_labels(points, labels).expect("generator produces finite points")
}

/// Labelled, unit-sphere-normalised chair together with the normalising transform.
pub fn realize_with_transform(
    spec: &ChairSpec,
    n_points: usize,
    seed: u64,
) -> Result<(PointCloud<f64>, Normalization<f64>)> {
    spec.validate()?;
    if n_points < 64 {
        return Err(Error::Precondition(format!("need at least 64 points, got {n_points}")));
    }
    normalize_unit_sphere(&sample_raw(spec, n_points, seed))
}

pub fn realize_point_cloud(spec: &ChairSpec, n_points: usize, seed: u64) -> Result<PointCloud<f64>> {
    Ok(realize_with_transform(spec, n_points, seed)?.0)
}

/// Dense sample of a single part, normalised to the unit sphere on its own.
/// `None` when the chair has no such part.
pub fn realize_part(spec: &ChairSpec, part: PartId, n_points: usize, seed: u64) -> Result<Option<PointCloud<f64>>> {
    spec.validate()?;
    if n_points == 0 {
        return Err(Error::Precondition("need at least one point".into()));
    }
    let prims: Vec<_> = assemble(spec).into_iter().filter(|(p, _)| *p == part).collect();
    if prims.is_empty() {
        return Ok(None);
    }
    let raw = sample_prims(spec, prims, n_points, seed ^ 0x5041_5254);
    Ok(Some(normalize_unit_sphere(&raw)?.0))
}
