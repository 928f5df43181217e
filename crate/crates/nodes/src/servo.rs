use armtwin_core::{Angle, JointAngles};

/// Kinematic servo bank: every joint slews toward its setpoint at a bounded rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServoModel {
    current: JointAngles,
    setpoint: JointAngles,
    max_rate: Angle,
}

impl ServoModel {
    /// # Panics
    /// If `max_rate` is not strictly positive.
    pub fn new(start: JointAngles, max_rate: Angle) -> Self {
        assert!(max_rate.radians() > 0.0, "max_rate must be positive");
        ServoModel {
            current: start,
            setpoint: start,
            max_rate,
        }
    }

    pub fn current(&self) -> &JointAngles {
        &self.current
    }

    pub fn setpoint(&self) -> &JointAngles {
        &self.setpoint
    }

    pub fn max_rate(&self) -> Angle {
        self.max_rate
    }

    pub fn set_setpoint(&mut self, target: JointAngles) {
        self.setpoint = target;
    }

    pub fn at_setpoint(&self) -> bool {
        self.current == self.setpoint
    }

    /// Largest remaining joint error.
    pub fn max_error(&self) -> Angle {
        self.current
            .0
            .iter()
            .zip(&self.setpoint.0)
            .map(|(c, s)| (*s - *c).abs())
            .fold(Angle::ZERO, |a, b| if b > a { b } else { a })
    }

    /// Advance by `dt` seconds. Joints within one step of the setpoint land on
    /// it exactly.
    pub fn step(&self, dt: f64) -> ServoModel {
        assert!(dt > 0.0, "dt must be positive");
        let max_step = self.max_rate.radians() * dt;
        let mut next = *self;
        for (c, s) in next.current.0.iter_mut().zip(&self.setpoint.0) {
            let err = s.radians() - c.radians();
            *c = if err.abs() <= max_step {
                *s
            } else {
                Angle(c.radians() + max_step.copysign(err))
            };
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate() -> Angle {
        Angle::from_degrees(300.0)
    }

    #[test]
    fn idle_at_setpoint() {
        let s = ServoModel::new(JointAngles::REST, rate());
        assert_eq!(s.step(0.01), s);
    }

    #[test]
    fn one_step_moves_rate_times_dt() {
        let mut s = ServoModel::new(JointAngles::REST, rate());
        s.set_setpoint(JointAngles::from_degrees([90.0, -90.0, 0.0, 0.0, 0.0]));
        let n = s.step(0.1);
        assert!((n.current().degrees()[0] - 30.0).abs() < 1e-12);
        assert!((n.current().degrees()[1] + 30.0).abs() < 1e-12);
        assert_eq!(n.current().theta3(), Angle::ZERO);
    }

    #[test]
    fn ninety_degree_step_settles_in_point_three_seconds() {
        let dt = 0.01;
        let mut s = ServoModel::new(JointAngles::REST, rate());
        s.set_setpoint(JointAngles::from_degrees([0.0, 90.0, 0.0, 0.0, 0.0]));
        let mut t = 0.0;
        let mut last_err = s.max_error();
        while !s.at_setpoint() {
            s = s.step(dt);
            t += dt;
            assert!(s.max_error() <= last_err);
            last_err = s.max_error();
            assert!(t < 1.0);
        }
        assert!((t - 0.30).abs() <= dt + 1e-9, "settled after {t}s");
    }
}
