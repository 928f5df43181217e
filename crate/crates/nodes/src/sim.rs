//! Deterministic in-process replay: master, loopback link, slave and servo
//! plant driven on simulated time.

use armtwin_core::config::Config;
use armtwin_core::protocol::MasterInput;

use crate::master::{master_tick, MasterState, MasterStep};
use crate::slave::SlaveState;
use crate::telemetry::TelemetryRecord;
use crate::transport::{loopback_pair, LoopbackTransport, Transport};

pub struct LoopbackSim {
    master: MasterState,
    master_end: LoopbackTransport,
    slave_end: LoopbackTransport,
    slave: SlaveState,
    dt: f64,
    clock: f64,
    trace: Vec<TelemetryRecord>,
    delivered: usize,
}

impl LoopbackSim {
    /// The trace starts with one record of the initial rest state.
    pub fn new(config: &Config) -> Self {
        assert!(config.dt > 0.0, "dt must be positive");
        let (master_end, slave_end) = loopback_pair();
        let slave = SlaveState::new(config);
        let initial = slave.telemetry(0.0);
        LoopbackSim {
            master: MasterState::new(config),
            master_end,
            slave_end,
            slave,
            dt: config.dt,
            clock: 0.0,
            trace: vec![initial],
            delivered: 0,
        }
    }

    /// Run one input through the master, deliver whatever it sent, and let the
    /// servos settle.
    pub fn apply(&mut self, input: &MasterInput) -> MasterStep {
        let step = master_tick(&mut self.master, &mut self.master_end, input)
            .expect("loopback link cannot close while the sim owns both ends");
        self.deliver();
        step
    }

    /// Hand a raw line straight to the slave, bypassing the master.
    pub fn inject_line(&mut self, line: impl AsRef<[u8]>) {
        self.delivered += 1;
        let rec = self.slave.tick(line, self.clock);
        self.trace.push(rec);
        self.settle();
    }

    fn deliver(&mut self) {
        while let Ok(Some(line)) = self.slave_end.try_recv() {
            self.delivered += 1;
            let rec = self.slave.tick(&line, self.clock);
            self.trace.push(rec);
        }
        self.settle();
    }

    /// Step the plant until every joint is on its setpoint.
    pub fn settle(&mut self) {
        let rate = self.slave.servo().max_rate().radians();
        let bound = (self.slave.servo().max_error().radians() / (rate * self.dt)).ceil() as usize + 1;
        for _ in 0..bound {
            if self.slave.servo().at_setpoint() {
                break;
            }
            self.clock += self.dt;
            let rec = self.slave.step(self.dt, self.clock);
            self.trace.push(rec);
        }
    }

    pub fn slave(&self) -> &SlaveState {
        &self.slave
    }

    pub fn master(&self) -> &MasterState {
        &self.master
    }

    /// Lines the slave has received, good or bad.
    pub fn delivered(&self) -> usize {
        self.delivered
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn trace(&self) -> &[TelemetryRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TelemetryRecord> {
        self.trace
    }
}

/// Replay `scenario` with tick `dt` and return the full telemetry trace.
pub fn run_loopback(scenario: &[MasterInput], dt: f64, config: &Config) -> Vec<TelemetryRecord> {
    let mut cfg = config.clone();
    cfg.dt = dt;
    let mut sim = LoopbackSim::new(&cfg);
    for input in scenario {
        sim.apply(input);
    }
    sim.into_trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use armtwin_core::ToolPosition;

    #[test]
    fn empty_scenario_has_only_initial_record() {
        let trace = run_loopback(&[], 0.01, &Config::default());
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].position, ToolPosition::new(280.0, 0.0, 208.0));
    }

    #[test]
    fn rest_command_ends_at_rest() {
        let trace = run_loopback(&[MasterInput::AngleLine([0.0; 5])], 0.01, &Config::default());
        let last = trace.last().unwrap();
        assert_eq!(last.position, ToolPosition::new(280.0, 0.0, 208.0));
        assert_eq!(last.seq, Some(0));
    }

    #[test]
    fn replay_is_deterministic() {
        let scenario = [
            MasterInput::AngleLine([20.0, 10.0, 5.0, -15.0, 30.0]),
            MasterInput::CoordLine { x: 200.0, y: 120.0, z: 180.0, grip: 10.0 },
            MasterInput::AnalogReadings([512, 600, 400, 500, 100]),
        ];
        let a = run_loopback(&scenario, 0.01, &Config::default());
        let b = run_loopback(&scenario, 0.01, &Config::default());
        assert_eq!(a, b);
    }
}
