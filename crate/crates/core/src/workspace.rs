//! Validity gate for commanded poses: joint limits plus collision with the
//! bench plane and the arm's own base column.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::batch::{self, Execution};
use crate::kinematics::{
    fk_full, fk_position, ik_solve, Angle, IkError, JointAngles, LinkLengths, ToolPosition,
};

/// Points sampled strictly between the endpoints of each link segment.
pub const SAMPLES_PER_LINK: usize = 10;

/// Slack on the base keep-out test so a link lying exactly on the top face of
/// the column is not flagged through rounding.
const BASE_CONTACT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("joint {joint} limit range is empty or not finite: [{min}, {max}] rad")]
pub struct InvalidLimits {
    pub joint: usize,
    pub min: f64,
    pub max: f64,
}

/// Per-joint `[min, max]` ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointLimits {
    ranges: [(Angle, Angle); 5],
}

impl Default for JointLimits {
    fn default() -> Self {
        let pm90 = (Angle::from_degrees(-90.0), Angle::from_degrees(90.0));
        JointLimits {
            ranges: [
                pm90,
                pm90,
                pm90,
                pm90,
                (Angle::ZERO, Angle::from_degrees(90.0)),
            ],
        }
    }
}

impl JointLimits {
    pub fn new(ranges: [(Angle, Angle); 5]) -> Result<Self, InvalidLimits> {
        for (i, (min, max)) in ranges.iter().enumerate() {
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(InvalidLimits {
                    joint: i + 1,
                    min: min.radians(),
                    max: max.radians(),
                });
            }
        }
        Ok(JointLimits { ranges })
    }

    pub fn from_degrees(ranges: [(f64, f64); 5]) -> Result<Self, InvalidLimits> {
        Self::new(ranges.map(|(lo, hi)| (Angle::from_degrees(lo), Angle::from_degrees(hi))))
    }

    pub fn ranges(&self) -> &[(Angle, Angle); 5] {
        &self.ranges
    }

    /// Range of joint `joint`, 1-based.
    pub fn range(&self, joint: usize) -> (Angle, Angle) {
        self.ranges[joint - 1]
    }

    pub fn contains(&self, angles: &JointAngles) -> bool {
        angles
            .0
            .iter()
            .zip(&self.ranges)
            .all(|(a, (lo, hi))| lo <= a && a <= hi)
    }

    /// Map a point of the unit 5-cube onto the joint box.
    pub fn lerp(&self, unit: [f64; 5]) -> JointAngles {
        let mut out = [Angle::ZERO; 5];
        for (i, u) in unit.iter().enumerate() {
            let (lo, hi) = self.ranges[i];
            out[i] = Angle(lo.0 + (hi.0 - lo.0) * u);
        }
        JointAngles(out)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("invalid scene: {0}")]
pub struct InvalidScene(&'static str);

/// Static obstacles: the bench plane and a keep-out cylinder around the base axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scene {
    floor_z: f64,
    base_radius: f64,
    base_height: f64,
}

impl Scene {
    pub fn new(floor_z: f64, base_radius: f64, base_height: f64) -> Result<Self, InvalidScene> {
        if !floor_z.is_finite() {
            return Err(InvalidScene("floor_z must be finite"));
        }
        if !(base_radius.is_finite() && base_radius > 0.0) {
            return Err(InvalidScene("base_radius must be positive"));
        }
        if !(base_height.is_finite() && base_height > 0.0) {
            return Err(InvalidScene("base_height must be positive"));
        }
        Ok(Scene {
            floor_z,
            base_radius,
            base_height,
        })
    }

    /// Bench at z = 0 and a 40 mm column as tall as the first link.
    pub fn for_links(links: &LinkLengths) -> Self {
        Scene {
            floor_z: 0.0,
            base_radius: 40.0,
            base_height: links.a1(),
        }
    }

    pub fn floor_z(&self) -> f64 {
        self.floor_z
    }
    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }
    pub fn base_height(&self) -> f64 {
        self.base_height
    }
}

impl Default for Scene {
    fn default() -> Self {
        Scene::for_links(&LinkLengths::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    LimitExceeded,
    FloorCollision,
    BaseCollision,
    Unreachable,
    NegativeReach,
    BaseSingular,
}

impl ViolationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ViolationKind::LimitExceeded => "LimitExceeded",
            ViolationKind::FloorCollision => "FloorCollision",
            ViolationKind::BaseCollision => "BaseCollision",
            ViolationKind::Unreachable => "Unreachable",
            ViolationKind::NegativeReach => "NegativeReach",
            ViolationKind::BaseSingular => "BaseSingular",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "LimitExceeded" => ViolationKind::LimitExceeded,
            "FloorCollision" => ViolationKind::FloorCollision,
            "BaseCollision" => ViolationKind::BaseCollision,
            "Unreachable" => ViolationKind::Unreachable,
            "NegativeReach" => ViolationKind::NegativeReach,
            "BaseSingular" => ViolationKind::BaseSingular,
            _ => return None,
        })
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<IkError> for ViolationKind {
    fn from(e: IkError) -> Self {
        match e {
            IkError::NegativeReach => ViolationKind::NegativeReach,
            IkError::Unreachable => ViolationKind::Unreachable,
            IkError::BaseSingular => ViolationKind::BaseSingular,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    /// `joint` is 1-based.
    LimitExceeded {
        joint: usize,
        value: Angle,
        min: Angle,
        max: Angle,
    },
    /// First sampled point of link `link` (1-based) under the bench plane.
    FloorCollision { link: usize, point: ToolPosition },
    /// First sampled point of link `link` inside the base column.
    BaseCollision { link: usize, point: ToolPosition },
    Ik(IkError),
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::LimitExceeded { .. } => ViolationKind::LimitExceeded,
            Violation::FloorCollision { .. } => ViolationKind::FloorCollision,
            Violation::BaseCollision { .. } => ViolationKind::BaseCollision,
            Violation::Ik(e) => (*e).into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LimitExceeded {
                joint,
                value,
                min,
                max,
            } => write!(
                f,
                "LimitExceeded(joint {joint}: {:.3} deg not in [{:.3}, {:.3}])",
                value.degrees(),
                min.degrees(),
                max.degrees()
            ),
            Violation::FloorCollision { link, point } => {
                write!(f, "FloorCollision(link {link} at {point})")
            }
            Violation::BaseCollision { link, point } => {
                write!(f, "BaseCollision(link {link} at {point})")
            }
            Violation::Ik(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(Violation::kind).collect()
    }

    pub fn merge(mut self, other: ValidityReport) -> ValidityReport {
        self.violations.extend(other.violations);
        self
    }
}

pub fn check_limits(angles: &JointAngles, limits: &JointLimits) -> ValidityReport {
    let violations = angles
        .0
        .iter()
        .zip(limits.ranges())
        .enumerate()
        .filter(|(_, (a, (lo, hi)))| !(lo <= *a && *a <= hi))
        .map(|(i, (&value, &(min, max)))| Violation::LimitExceeded {
            joint: i + 1,
            value,
            min,
            max,
        })
        .collect();
    ValidityReport { violations }
}

/// Sampled points along link `segment` (0-based), endpoints included.
fn link_samples(chain: &[ToolPosition; 5], segment: usize) -> impl Iterator<Item = ToolPosition> + '_ {
    let (start, end) = (chain[segment], chain[segment + 1]);
    (0..=SAMPLES_PER_LINK + 1).map(move |i| start.lerp(&end, i as f64 / (SAMPLES_PER_LINK + 1) as f64))
}

/// Polyline collision test against the bench plane and the base column.
///
/// Every link is checked against the floor; links 2 to 4 are also checked
/// against the column (link 1 is the column).
pub fn check_collision(angles: &JointAngles, links: &LinkLengths, scene: &Scene) -> ValidityReport {
    let (_, chain) = fk_full(angles, links);
    let mut violations = Vec::new();

    for segment in 0..4 {
        let link = segment + 1;
        if let Some(point) = link_samples(&chain, segment).find(|p| p.z < scene.floor_z) {
            violations.push(Violation::FloorCollision { link, point });
        }
        if link >= 2 {
            let inside = |p: &ToolPosition| {
                p.radial() < scene.base_radius && p.z < scene.base_height - BASE_CONTACT_EPS
            };
            if let Some(point) = link_samples(&chain, segment).find(inside) {
                violations.push(Violation::BaseCollision { link, point });
            }
        }
    }
    ValidityReport { violations }
}

/// The gate the slave runs before moving: limits and collisions together.
pub fn validate_command(
    angles: &JointAngles,
    links: &LinkLengths,
    limits: &JointLimits,
    scene: &Scene,
) -> ValidityReport {
    check_limits(angles, limits).merge(check_collision(angles, links, scene))
}

/// Coordinate-level gate: solve IK first, then validate the resulting angles.
pub fn validate_target(
    target: &ToolPosition,
    theta5: Angle,
    links: &LinkLengths,
    limits: &JointLimits,
    scene: &Scene,
) -> (Option<JointAngles>, ValidityReport) {
    match ik_solve(target, theta5, links) {
        Ok(sol) => (
            Some(sol.angles),
            validate_command(&sol.angles, links, limits, scene),
        ),
        Err(e) => (
            None,
            ValidityReport {
                violations: vec![Violation::Ik(e)],
            },
        ),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkspaceSample {
    pub angles: JointAngles,
    pub position: ToolPosition,
    pub valid: bool,
}

const HALTON_BASES: [u32; 5] = [2, 3, 5, 7, 11];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let inv = 1.0 / f64::from(base);
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % u64::from(base)) as f64 * scale;
        index /= u64::from(base);
        scale *= inv;
    }
    out
}

/// Point `index` of a 5-D Halton sequence shifted by `shift` (mod 1).
pub fn halton_point(index: u64, shift: &[f64; 5]) -> [f64; 5] {
    let mut p = [0.0; 5];
    for d in 0..5 {
        let v = radical_inverse(index + 1, HALTON_BASES[d]) + shift[d];
        p[d] = v - v.floor();
    }
    p
}

/// Deterministic low-discrepancy sweep of the joint box.
///
/// Uses a Halton sequence with a seeded random shift, so equal seeds give
/// identical output regardless of execution mode.
pub fn sample_workspace(
    links: &LinkLengths,
    limits: &JointLimits,
    scene: &Scene,
    n: usize,
    seed: u64,
) -> Vec<WorkspaceSample> {
    sample_workspace_with(Execution::default(), links, limits, scene, n, seed)
}

pub fn sample_workspace_with(
    exec: Execution,
    links: &LinkLengths,
    limits: &JointLimits,
    scene: &Scene,
    n: usize,
    seed: u64,
) -> Vec<WorkspaceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 5] = std::array::from_fn(|_| rng.gen::<f64>());
    let indices: Vec<u64> = (0..n as u64).collect();
    batch::map(exec, &indices, |&i| {
        let angles = limits.lerp(halton_point(i, &shift));
        WorkspaceSample {
            angles,
            position: fk_position(&angles, links),
            valid: validate_command(&angles, links, limits, scene).valid(),
        }
    })
}
