//! Forward and inverse kinematics of the five-joint desk arm.
//!
//! The chain is built from explicit homogeneous matrices, one per link:
//!
//! ```text
//! M1 = [Rz(t1) | (0, 0, a1)] * Ry(t2)
//! M2 = T(0, 0, a2) * Ry(90deg + t3)
//! M3 = T(0, 0, a3) * Ry(t4)
//! M4 = T(0, 0, a4) * Rz(t5)
//! ```
//!
//! The inverse solver assumes the last link stays parallel to the bench,
//! reducing the problem to a top-view yaw plus a planar two-link triangle.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

pub use crate::transform::Transform4;

/// Arguments to `acos` this far outside `[-1, 1]` are clamped instead of rejected.
pub const ACOS_CLAMP_EPS: f64 = 1e-9;

/// Default pass threshold for [`roundtrip_validate`], in millimeters.
pub const DEFAULT_ROUNDTRIP_TOL: f64 = 1e-6;

pub fn deg_to_rad(degrees: f64) -> Angle {
    Angle(degrees * std::f64::consts::PI / 180.0)
}

pub fn rad_to_deg(angle: Angle) -> f64 {
    angle.0 * 180.0 / std::f64::consts::PI
}

/// A plane angle in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Angle(pub f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub const fn from_radians(radians: f64) -> Self {
        Angle(radians)
    }

    pub fn from_degrees(degrees: f64) -> Self {
        deg_to_rad(degrees)
    }

    pub const fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        rad_to_deg(self)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn abs(self) -> Self {
        Angle(self.0.abs())
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(self.0 - rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

impl Mul<f64> for Angle {
    type Output = Angle;
    fn mul(self, rhs: f64) -> Angle {
        Angle(self.0 * rhs)
    }
}

/// The five joint variables. Index 0 is the base yaw, 1..=3 the pitch joints,
/// 4 the gripper.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointAngles(pub [Angle; 5]);

impl JointAngles {
    pub const REST: JointAngles = JointAngles([Angle::ZERO; 5]);

    pub fn from_radians(values: [f64; 5]) -> Self {
        JointAngles(values.map(Angle))
    }

    pub fn from_degrees(values: [f64; 5]) -> Self {
        JointAngles(values.map(deg_to_rad))
    }

    pub fn radians(&self) -> [f64; 5] {
        self.0.map(Angle::radians)
    }

    pub fn degrees(&self) -> [f64; 5] {
        self.0.map(Angle::degrees)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn theta1(&self) -> Angle {
        self.0[0]
    }
    pub fn theta2(&self) -> Angle {
        self.0[1]
    }
    pub fn theta3(&self) -> Angle {
        self.0[2]
    }
    pub fn theta4(&self) -> Angle {
        self.0[3]
    }
    pub fn theta5(&self) -> Angle {
        self.0[4]
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("link length a{index} must be strictly positive and finite, got {value}")]
pub struct InvalidLinkLength {
    pub index: usize,
    pub value: f64,
}

/// Link offsets a1..a4 in millimeters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkLengths {
    a: [f64; 4],
}

impl Default for LinkLengths {
    fn default() -> Self {
        LinkLengths {
            a: [63.0, 145.0, 170.0, 110.0],
        }
    }
}

impl LinkLengths {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self, InvalidLinkLength> {
        let a = [a1, a2, a3, a4];
        for (i, &value) in a.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(InvalidLinkLength { index: i + 1, value });
            }
        }
        Ok(LinkLengths { a })
    }

    pub fn a1(&self) -> f64 {
        self.a[0]
    }
    pub fn a2(&self) -> f64 {
        self.a[1]
    }
    pub fn a3(&self) -> f64 {
        self.a[2]
    }
    pub fn a4(&self) -> f64 {
        self.a[3]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.a
    }

    /// Largest horizontal distance the tool can reach from the base axis.
    pub fn max_reach(&self) -> f64 {
        self.a2() + self.a3() + self.a4()
    }
}

/// A point in the base frame, millimeters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ToolPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ToolPosition {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        ToolPosition { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &ToolPosition) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance from the base z-axis.
    pub fn radial(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn lerp(&self, other: &ToolPosition, t: f64) -> ToolPosition {
        ToolPosition {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            z: self.z + (other.z - self.z) * t,
        }
    }
}

impl fmt::Display for ToolPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3})", self.x, self.y, self.z)
    }
}

pub fn rot_x(theta: Angle) -> Transform4 {
    let (s, c) = theta.0.sin_cos();
    Transform4::from_rows([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, -s, 0.0],
        [0.0, s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn rot_y(theta: Angle) -> Transform4 {
    let (s, c) = theta.0.sin_cos();
    Transform4::from_rows([
        [c, 0.0, s, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn rot_z(theta: Angle) -> Transform4 {
    let (s, c) = theta.0.sin_cos();
    Transform4::from_rows([
        [c, -s, 0.0, 0.0],
        [s, c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn translate(dx: f64, dy: f64, dz: f64) -> Transform4 {
    Transform4::from_rows([
        [1.0, 0.0, 0.0, dx],
        [0.0, 1.0, 0.0, dy],
        [0.0, 0.0, 1.0, dz],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn compose(a: &Transform4, b: &Transform4) -> Transform4 {
    a * b
}

/// The four link matrices, base to tool.
pub fn link_transforms(angles: &JointAngles, links: &LinkLengths) -> [Transform4; 4] {
    let [t1, t2, t3, t4, t5] = angles.0;

    // Yaw about z with the base height stacked into the translation column.
    let mut base = rot_z(t1);
    base.set(2, 3, links.a1());

    [
        base * rot_y(t2),
        translate(0.0, 0.0, links.a2()) * rot_y(Angle(FRAC_PI_2) + t3),
        translate(0.0, 0.0, links.a3()) * rot_y(t4),
        translate(0.0, 0.0, links.a4()) * rot_z(t5),
    ]
}

/// Origins of the chain in base coordinates.
///
/// Order is base, shoulder, elbow, wrist, tool; consecutive pairs are the
/// four link segments.
pub type JointChain = [ToolPosition; 5];

/// Full forward kinematics: base-to-tool transform plus every joint origin.
pub fn fk_full(angles: &JointAngles, links: &LinkLengths) -> (Transform4, JointChain) {
    let mut chain = [ToolPosition::default(); 5];
    let mut acc = Transform4::identity();
    for (i, m) in link_transforms(angles, links).iter().enumerate() {
        acc = acc * *m;
        chain[i + 1] = acc.translation();
    }
    (acc, chain)
}

pub fn fk_position(angles: &JointAngles, links: &LinkLengths) -> ToolPosition {
    fk_full(angles, links).0.translation()
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IkError {
    /// Target is closer to the base axis than the horizontal last link.
    #[error("NegativeReach")]
    NegativeReach,
    /// Wrist point lies outside the annulus the two middle links can span.
    #[error("Unreachable")]
    Unreachable,
    /// Target on the base axis; the yaw is undefined.
    #[error("BaseSingular")]
    BaseSingular,
}

impl IkError {
    pub fn name(&self) -> &'static str {
        match self {
            IkError::NegativeReach => "NegativeReach",
            IkError::Unreachable => "Unreachable",
            IkError::BaseSingular => "BaseSingular",
        }
    }
}

/// Geometric quantities computed on the way to a solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkIntermediates {
    /// Horizontal reach of the wrist point.
    pub w: f64,
    /// Shoulder-to-wrist distance.
    pub k: f64,
    /// Elevation of the shoulder-to-wrist line above horizontal.
    pub alpha: Angle,
    /// Interior angle at the elbow.
    pub beta: Angle,
    /// Angle between the upper arm and the shoulder-to-wrist line.
    pub gamma: Angle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkSolution {
    pub angles: JointAngles,
    pub intermediates: IkIntermediates,
}

fn clamped_acos(arg: f64) -> Result<f64, IkError> {
    if !arg.is_finite() || !(-1.0 - ACOS_CLAMP_EPS..=1.0 + ACOS_CLAMP_EPS).contains(&arg) {
        return Err(IkError::Unreachable);
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Elbow-up geometric inverse kinematics with the last link held horizontal.
///
/// `theta5` is copied into the solution untouched; it only drives the gripper.
pub fn ik_solve(
    target: &ToolPosition,
    theta5: Angle,
    links: &LinkLengths,
) -> Result<IkSolution, IkError> {
    let ToolPosition { x, y, z } = *target;
    if x == 0.0 && y == 0.0 {
        return Err(IkError::BaseSingular);
    }
    let (a1, a2, a3, a4) = (links.a1(), links.a2(), links.a3(), links.a4());

    // Top view.
    let w = x.hypot(y) - a4;
    if w < 0.0 {
        return Err(IkError::NegativeReach);
    }
    let theta1 = y.atan2(x);

    // Side view.
    let h = z - a1;
    let k = w.hypot(h);
    if k == 0.0 {
        return Err(IkError::Unreachable);
    }
    let alpha = h.atan2(w);
    let gamma = clamped_acos((a2 * a2 + k * k - a3 * a3) / (2.0 * a2 * k))?;
    let beta = clamped_acos((a2 * a2 + a3 * a3 - k * k) / (2.0 * a2 * a3))?;

    let theta2 = FRAC_PI_2 - alpha - gamma;
    let theta3 = FRAC_PI_2 - beta;
    let theta4 = -theta2 - theta3;

    Ok(IkSolution {
        angles: JointAngles([
            Angle(theta1),
            Angle(theta2),
            Angle(theta3),
            Angle(theta4),
            theta5,
        ]),
        intermediates: IkIntermediates {
            w,
            k,
            alpha: Angle(alpha),
            beta: Angle(beta),
            gamma: Angle(gamma),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RoundtripStatus {
    Pass,
    Fail,
    /// The pose puts the tool where the horizontal-last-link solver cannot go.
    Skipped(IkError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundtripReport {
    pub target: ToolPosition,
    pub recovered: Option<ToolPosition>,
    /// `|target - recovered|` in millimeters, absent when skipped.
    pub error: Option<f64>,
    pub status: RoundtripStatus,
}

/// FK, then IK on the result, then FK again; the two positions must agree.
///
/// Only the position is compared. Several joint configurations reach the same
/// point, so the recovered angles generally differ from the input.
pub fn roundtrip_validate(angles: &JointAngles, links: &LinkLengths, tol: f64) -> RoundtripReport {
    let target = fk_position(angles, links);
    match ik_solve(&target, angles.theta5(), links) {
        Ok(solution) => {
            let recovered = fk_position(&solution.angles, links);
            let error = target.distance(&recovered);
            RoundtripReport {
                target,
                recovered: Some(recovered),
                error: Some(error),
                status: if error < tol {
                    RoundtripStatus::Pass
                } else {
                    RoundtripStatus::Fail
                },
            }
        }
        Err(e) => RoundtripReport {
            target,
            recovered: None,
            error: None,
            status: RoundtripStatus::Skipped(e),
        },
    }
}
