//! Flatland physics: circular robots on an unbounded plane, range/color ray
//! sensing, differential-drive locomotion with metered energy costs.

use std::f64::consts::{FRAC_PI_2, PI};

pub const ROBOT_RADIUS: f64 = 10.0;
/// Plants and poison are drawn as small circles, well under robot size, so a
/// robot has to steer at one deliberately rather than brush it in passing.
pub const ITEM_RADIUS: f64 = 5.0;
pub const MAX_RAY: f64 = 400.0;
pub const RAY_COUNT: usize = 5;
/// The sensed arc: five rays evenly spanning 90 degrees, centered on the
/// robot's heading.
pub const SENSOR_ARC: f64 = FRAC_PI_2;
pub const MAX_SPEED: f64 = 1.0;
pub const FLAT_COST: f64 = 0.1;
pub const START_ENERGY: f64 = 1000.0;
pub const PLANT_ENERGY: f64 = 500.0;
pub const POISON_PENALTY: f64 = 2000.0;
pub const AGE_CAP: u32 = 20_000;

pub const COLOR_BACKGROUND: f64 = -1.0;
pub const COLOR_PLANT: f64 = 0.5;
pub const COLOR_POISON: f64 = 0.0;
pub const COLOR_PREY: f64 = -0.5;
pub const COLOR_PREDATOR: f64 = 1.0;

/// Spawn region for plants, poison, and prey.
pub const PREY_REGION: (f64, f64, f64, f64) = (0.0, 800.0, 0.0, 500.0);
/// Spawn region for predators.
pub const PREDATOR_REGION: (f64, f64, f64, f64) = (800.0, 1400.0, 0.0, 500.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Prey,
    Predator,
}

impl Species {
    pub fn color(&self) -> f64 {
        match self {
            Species::Prey => COLOR_PREY,
            Species::Predator => COLOR_PREDATOR,
        }
    }

    pub fn region(&self) -> (f64, f64, f64, f64) {
        match self {
            Species::Prey => PREY_REGION,
            Species::Predator => PREDATOR_REGION,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Species::Prey => "prey",
            Species::Predator => "predator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    Plant,
    Poison,
}

impl ItemKind {
    pub fn color(&self) -> f64 {
        match self {
            ItemKind::Plant => COLOR_PLANT,
            ItemKind::Poison => COLOR_POISON,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ItemKind::Plant => "plant",
            ItemKind::Poison => "poison",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Item {
    pub id: u64,
    pub kind: ItemKind,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// The physical state of one live robot.
#[derive(Debug, Clone)]
pub struct Body {
    pub id: u64,
    pub species: Species,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub radius: f64,
    pub energy: f64,
    pub age: u32,
    pub steps_lived: u32,
    /// Plants eaten (prey) or prey caught (predators).
    pub food: u32,
}

impl Body {
    pub fn new(id: u64, species: Species, x: f64, y: f64, heading: f64) -> Self {
        Body {
            id,
            species,
            x,
            y,
            heading,
            radius: ROBOT_RADIUS,
            energy: START_ENERGY,
            age: 0,
            steps_lived: 0,
            food: 0,
        }
    }

    /// Survival points plus food count, assigned at death.
    pub fn fitness(&self) -> f64 {
        (self.steps_lived.min(1000) as f64) / 1000.0 + self.food as f64
    }
}

/// Smallest non-negative ray parameter at which the ray from `(px, py)` in
/// unit direction `(dx, dy)` meets the circle at `(cx, cy)` with radius `r`.
/// An origin inside the circle reads as a touching hit at distance 0.
pub fn ray_circle(px: f64, py: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let fx = px - cx;
    let fy = py - cy;
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - r * r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t >= 0.0 {
        Some(t)
    } else {
        None
    }
}

/// The five ray directions for a robot heading.
pub fn ray_angles(heading: f64) -> [f64; RAY_COUNT] {
    let step = SENSOR_ARC / (RAY_COUNT - 1) as f64;
    let start = heading - SENSOR_ARC / 2.0;
    std::array::from_fn(|i| start + step * i as f64)
}

/// A scene entity flattened for ray casting.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub color: f64,
}

impl From<&Body> for Obstacle {
    fn from(b: &Body) -> Self {
        Obstacle { x: b.x, y: b.y, radius: b.radius, color: b.species.color() }
    }
}

impl From<&Item> for Obstacle {
    fn from(i: &Item) -> Self {
        Obstacle { x: i.x, y: i.y, radius: i.radius, color: i.kind.color() }
    }
}

/// Cast one ray against a flattened scene. Returns the normalized range
/// (distance / MAX_RAY, 1.0 on a miss) and the color of whatever was hit
/// (background on a miss).
pub fn cast_obstacles(origin: (f64, f64), angle: f64, obstacles: &[Obstacle]) -> (f64, f64) {
    let (dx, dy) = (angle.cos(), angle.sin());
    let mut best = f64::INFINITY;
    let mut color = COLOR_BACKGROUND;
    for o in obstacles {
        if let Some(t) = ray_circle(origin.0, origin.1, dx, dy, o.x, o.y, o.radius) {
            if t < best {
                best = t;
                color = o.color;
            }
        }
    }
    if best <= MAX_RAY {
        (best / MAX_RAY, color)
    } else {
        (1.0, COLOR_BACKGROUND)
    }
}

/// Cast one ray against the whole scene; the caster's own body is skipped.
pub fn cast_ray(
    origin: (f64, f64),
    angle: f64,
    self_id: u64,
    bodies: &[&Body],
    items: &[Item],
) -> (f64, f64) {
    let obstacles: Vec<Obstacle> = bodies
        .iter()
        .filter(|b| b.id != self_id)
        .map(|b| Obstacle::from(*b))
        .chain(items.iter().map(Obstacle::from))
        .collect();
    cast_obstacles(origin, angle, &obstacles)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveOutcome {
    pub distance: f64,
    pub rotation: f64,
    pub cost: f64,
}

/// One use of the differential-drive actuator. Wheel commands are clamped to
/// [-1, 1] and scale to at most 1 m/s; the axle is the robot's diameter.
/// Energy cost: 1 per m/s of translation, 1 per 90 degrees/s of rotation,
/// plus a flat 0.1 per use. Ages the body by one step.
pub fn differential_drive(body: &mut Body, left: f64, right: f64) -> DriveOutcome {
    let l = left.clamp(-1.0, 1.0) * MAX_SPEED;
    let r = right.clamp(-1.0, 1.0) * MAX_SPEED;
    let v = (l + r) / 2.0;
    let omega = (r - l) / (2.0 * body.radius);
    body.heading += omega;
    if body.heading > PI {
        body.heading -= 2.0 * PI;
    } else if body.heading < -PI {
        body.heading += 2.0 * PI;
    }
    body.x += v * body.heading.cos();
    body.y += v * body.heading.sin();
    let cost = v.abs() + omega.abs() / FRAC_PI_2 + FLAT_COST;
    body.energy -= cost;
    body.age += 1;
    body.steps_lived += 1;
    DriveOutcome { distance: v.abs(), rotation: omega, cost }
}

pub fn overlaps(ax: f64, ay: f64, ar: f64, bx: f64, by: f64, br: f64) -> bool {
    let dx = ax - bx;
    let dy = ay - by;
    dx * dx + dy * dy < (ar + br) * (ar + br)
}

/// Separate two touching circles by moving the `moved` point directly away
/// from the `fixed` one until the circles just touch. Coincident centers
/// resolve along +x.
pub fn push_apart(fixed: (f64, f64, f64), moved: &mut (f64, f64), moved_r: f64) {
    let dx = moved.0 - fixed.0;
    let dy = moved.1 - fixed.1;
    let d = (dx * dx + dy * dy).sqrt();
    let want = fixed.2 + moved_r;
    if d < 1e-12 {
        moved.0 = fixed.0 + want;
        moved.1 = fixed.1;
    } else {
        moved.0 = fixed.0 + dx / d * want;
        moved.1 = fixed.1 + dy / d * want;
    }
}
