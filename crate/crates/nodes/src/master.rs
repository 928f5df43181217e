//! Operator-side node: turns any input mode into radian joint frames and
//! sends them only when something changed.

use armtwin_core::config::Config;
use armtwin_core::protocol::{
    encode_frame, normalize_input, ChangeDetector, Frame, InputError, MasterInput,
};
use armtwin_core::{JointLimits, LinkLengths};

use crate::transport::{Transport, TransportError};

#[derive(Clone, Debug)]
pub struct MasterState {
    detector: ChangeDetector,
    next_seq: u16,
    links: LinkLengths,
    limits: JointLimits,
}

/// Result of one master iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterStep {
    pub frame: Option<Frame>,
    /// Short operator-facing status: `sent seq=N`, `unchanged`, or the error name.
    pub message: String,
}

impl MasterState {
    pub fn new(config: &Config) -> Self {
        MasterState {
            detector: ChangeDetector::new(config.delta_min),
            next_seq: 0,
            links: config.links,
            limits: config.limits,
        }
    }

    pub fn next_seq(&self) -> u16 {
        self.next_seq
    }

    /// Normalize, debounce and frame one input. Nothing is sent here.
    pub fn tick(&mut self, input: &MasterInput) -> MasterStep {
        let thetas = match normalize_input(input, &self.links, &self.limits) {
            Ok(t) => t,
            Err(e) => {
                let message = match &e {
                    InputError::Ik(ik) => ik.name().to_string(),
                    other => other.to_string(),
                };
                return MasterStep {
                    frame: None,
                    message,
                };
            }
        };

        let (detector, emit) = self.detector.change_filter(&thetas);
        self.detector = detector;
        if !emit {
            return MasterStep {
                frame: None,
                message: "unchanged".into(),
            };
        }
        let frame = Frame::new(self.next_seq, thetas);
        self.next_seq = self.next_seq.wrapping_add(1);
        MasterStep {
            frame: Some(frame),
            message: format!("sent seq={}", frame.seq()),
        }
    }
}

/// One full master iteration, including transmission.
pub fn master_tick<T: Transport + ?Sized>(
    state: &mut MasterState,
    transport: &mut T,
    input: &MasterInput,
) -> Result<MasterStep, TransportError> {
    let step = state.tick(input);
    if let Some(frame) = &step.frame {
        transport.send(&encode_frame(frame))?;
    }
    Ok(step)
}
