//! Slave-to-observer status stream. Separate from the command link and never
//! read by the master.
//!
//! ```text
//! S,<seq>,<t1>,<t2>,<t3>,<t4>,<t5>,<x>,<y>,<z>,<verdict>\n
//! ```
//!
//! `seq` is the last accepted frame sequence number or `-` before the first
//! one. Angles are radians and positions millimeters, six decimals each.
//! `verdict` is `idle`, `accepted`, or `rejected:<Kind>[|<Kind>...]`.

use std::fmt;

use armtwin_core::protocol::FrameError;
use armtwin_core::{Angle, JointAngles, ToolPosition, ViolationKind};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    Malformed,
    CrcMismatch,
    Invalid(Vec<ViolationKind>),
}

impl From<&FrameError> for RejectReason {
    fn from(e: &FrameError) -> Self {
        match e {
            FrameError::Malformed(_) => RejectReason::Malformed,
            FrameError::CrcMismatch { .. } => RejectReason::CrcMismatch,
        }
    }
}

/// Outcome of the last line the slave processed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Verdict {
    #[default]
    Idle,
    Accepted,
    Rejected(RejectReason),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Idle => f.write_str("idle"),
            Verdict::Accepted => f.write_str("accepted"),
            Verdict::Rejected(RejectReason::Malformed) => f.write_str("rejected:MalformedFrame"),
            Verdict::Rejected(RejectReason::CrcMismatch) => f.write_str("rejected:CrcMismatch"),
            Verdict::Rejected(RejectReason::Invalid(kinds)) => {
                let names: Vec<&str> = kinds.iter().map(ViolationKind::name).collect();
                write!(f, "rejected:{}", names.join("|"))
            }
        }
    }
}

impl std::str::FromStr for Verdict {
    type Err = TelemetryParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TelemetryParseError(format!("bad verdict {s:?}"));
        match s {
            "idle" => Ok(Verdict::Idle),
            "accepted" => Ok(Verdict::Accepted),
            "rejected:MalformedFrame" => Ok(Verdict::Rejected(RejectReason::Malformed)),
            "rejected:CrcMismatch" => Ok(Verdict::Rejected(RejectReason::CrcMismatch)),
            _ => {
                let rest = s.strip_prefix("rejected:").ok_or_else(bad)?;
                let kinds = rest
                    .split('|')
                    .map(|k| ViolationKind::from_name(k).ok_or_else(bad))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Verdict::Rejected(RejectReason::Invalid(kinds)))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed telemetry line: {0}")]
pub struct TelemetryParseError(String);

#[derive(Clone, Debug, PartialEq)]
pub struct TelemetryRecord {
    /// Seconds of simulated (or node) time.
    pub timestamp: f64,
    pub seq: Option<u16>,
    pub angles: JointAngles,
    pub position: ToolPosition,
    pub verdict: Verdict,
}

impl TelemetryRecord {
    pub fn to_line(&self) -> String {
        let seq = self.seq.map_or_else(|| "-".to_string(), |s| s.to_string());
        let mut line = format!("S,{seq}");
        for a in self.angles.radians() {
            line.push_str(&format!(",{:.6}", a));
        }
        let p = &self.position;
        line.push_str(&format!(",{:.6},{:.6},{:.6},{}\n", p.x, p.y, p.z, self.verdict));
        line
    }

    /// Inverse of [`to_line`](Self::to_line); the timestamp is not carried and
    /// comes back as zero.
    pub fn parse_line(line: &str) -> Result<Self, TelemetryParseError> {
        let bad = |why: &str| TelemetryParseError(why.to_string());
        let line = line.trim_end_matches(['\n', '\r']);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 || fields[0] != "S" {
            return Err(bad("expected S and ten fields"));
        }
        let seq = match fields[1] {
            "-" => None,
            s => Some(s.parse().map_err(|_| bad("seq"))?),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
        let mut angles = [Angle::ZERO; 5];
        for (slot, f) in angles.iter_mut().zip(&fields[2..7]) {
            *slot = Angle(num(f)?);
        }
        Ok(TelemetryRecord {
            timestamp: 0.0,
            seq,
            angles: JointAngles(angles),
            position: ToolPosition::new(num(fields[7])?, num(fields[8])?, num(fields[9])?),
            verdict: fields[10].parse()?,
        })
    }
}
