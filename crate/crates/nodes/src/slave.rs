//! Actuator-side node: verifies each received frame against the workspace
//! gate before handing it to the servos.

use armtwin_core::config::Config;
use armtwin_core::protocol::decode_frame;
use armtwin_core::workspace::validate_command;
use armtwin_core::{fk_position, JointAngles, JointLimits, LinkLengths, Scene};

use crate::servo::ServoModel;
use crate::telemetry::{RejectReason, TelemetryRecord, Verdict};

#[derive(Clone, Debug)]
pub struct SlaveState {
    servo: ServoModel,
    last_valid_seq: Option<u16>,
    reject_count: u64,
    transient_violations: u64,
    verdict: Verdict,
    links: LinkLengths,
    limits: JointLimits,
    scene: Scene,
}

impl SlaveState {
    /// Starts at rest with the setpoint on the current pose.
    pub fn new(config: &Config) -> Self {
        SlaveState {
            servo: ServoModel::new(JointAngles::REST, config.max_rate),
            last_valid_seq: None,
            reject_count: 0,
            transient_violations: 0,
            verdict: Verdict::Idle,
            links: config.links,
            limits: config.limits,
            scene: config.scene,
        }
    }

    pub fn servo(&self) -> &ServoModel {
        &self.servo
    }

    pub fn last_valid_seq(&self) -> Option<u16> {
        self.last_valid_seq
    }

    /// Lines rejected so far, corrupt or invalid.
    pub fn reject_count(&self) -> u64 {
        self.reject_count
    }

    /// Telemetry instants at which the moving arm was outside the valid set.
    /// Only the commanded endpoints are gated, so this can be nonzero.
    pub fn transient_violations(&self) -> u64 {
        self.transient_violations
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    pub fn telemetry(&self, now: f64) -> TelemetryRecord {
        let angles = *self.servo.current();
        TelemetryRecord {
            timestamp: now,
            seq: self.last_valid_seq,
            angles,
            position: fk_position(&angles, &self.links),
            verdict: self.verdict.clone(),
        }
    }

    /// Handle one received line. Failures are recorded, never returned.
    pub fn tick(&mut self, line: impl AsRef<[u8]>, now: f64) -> TelemetryRecord {
        self.verdict = match decode_frame(line) {
            Err(e) => {
                log::debug!("dropping line: {e}");
                Verdict::Rejected(RejectReason::from(&e))
            }
            Ok(frame) => {
                let angles = frame.angles();
                let report = validate_command(&angles, &self.links, &self.limits, &self.scene);
                if report.valid() {
                    self.servo.set_setpoint(angles);
                    self.last_valid_seq = Some(frame.seq());
                    Verdict::Accepted
                } else {
                    let mut kinds = report.kinds();
                    kinds.sort();
                    kinds.dedup();
                    log::info!("rejecting seq={}: {:?}", frame.seq(), report.violations);
                    Verdict::Rejected(RejectReason::Invalid(kinds))
                }
            }
        };
        if matches!(self.verdict, Verdict::Rejected(_)) {
            self.reject_count += 1;
        }
        self.telemetry(now)
    }

    /// Advance the servo plant by `dt` and report the new pose.
    pub fn step(&mut self, dt: f64, now: f64) -> TelemetryRecord {
        self.servo = self.servo.step(dt);
        let current = self.servo.current();
        if !validate_command(current, &self.links, &self.limits, &self.scene).valid() {
            self.transient_violations += 1;
            log::warn!("arm passes through an invalid pose at t={now:.3}s: {:?}", current.degrees());
        }
        self.telemetry(now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use armtwin_core::protocol::{encode_frame, Frame};
    use armtwin_core::ViolationKind;

    fn frame_line(seq: u16, deg: [f64; 5]) -> String {
        encode_frame(&Frame::new(seq, JointAngles::from_degrees(deg)))
    }

    #[test]
    fn rest_frame_is_accepted() {
        let mut s = SlaveState::new(&Config::default());
        let rec = s.tick(frame_line(0, [0.0; 5]), 0.0);
        assert_eq!(rec.verdict, Verdict::Accepted);
        assert_eq!(*s.servo().setpoint(), JointAngles::REST);
        assert_eq!(s.last_valid_seq(), Some(0));
        assert_eq!(s.reject_count(), 0);
    }

    #[test]
    fn limit_violation_leaves_setpoint() {
        let mut s = SlaveState::new(&Config::default());
        s.tick(frame_line(0, [10.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
        let before = *s.servo().setpoint();
        let rec = s.tick(frame_line(1, [0.0, 120.0, 0.0, 0.0, 0.0]), 0.1);
        assert!(matches!(
            &rec.verdict,
            Verdict::Rejected(RejectReason::Invalid(k)) if k[0] == ViolationKind::LimitExceeded
        ));
        assert_eq!(*s.servo().setpoint(), before);
        assert_eq!(s.reject_count(), 1);
        assert_eq!(rec.seq, Some(0));
    }

    #[test]
    fn corrupt_line_is_counted() {
        let mut s = SlaveState::new(&Config::default());
        let mut bytes = frame_line(0, [0.0, 10.0, 0.0, 0.0, 0.0]).into_bytes();
        bytes[4] ^= 0x01;
        let rec = s.tick(&bytes, 0.0);
        assert_eq!(rec.verdict, Verdict::Rejected(RejectReason::CrcMismatch));
        s.tick("", 0.0);
        assert_eq!(s.reject_count(), 2);
        assert_eq!(*s.servo().setpoint(), JointAngles::REST);
    }

    #[test]
    fn telemetry_position_tracks_servo() {
        let mut s = SlaveState::new(&Config::default());
        s.tick(frame_line(0, [30.0, 10.0, 10.0, -20.0, 0.0]), 0.0);
        for i in 0..50 {
            let rec = s.step(0.01, i as f64 * 0.01);
            let fk = fk_position(&rec.angles, &LinkLengths::default());
            assert!(rec.position.distance(&fk) < 1e-9);
        }
        assert!(s.servo().at_setpoint());
    }
}
