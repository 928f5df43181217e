//! Master-to-slave command link.
//!
//! One frame per line:
//!
//! ```text
//! J,<seq>,<t1>,<t2>,<t3>,<t4>,<t5>,<crc>\n
//! ```
//!
//! Angles are radians with six decimals. `crc` is two lowercase hex digits of
//! CRC-8 (poly 0x07, init 0x00) over the bytes strictly between the first and
//! the last comma. The link is one-way; there is no slave-to-master frame.

use thiserror::Error;

use crate::kinematics::{deg_to_rad, ik_solve, Angle, IkError, JointAngles, LinkLengths, ToolPosition};
use crate::workspace::JointLimits;

pub const FRAME_TAG: &str = "J";
pub const ANALOG_MAX: u16 = 1023;

const fn crc8_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u8;
        let mut bit = 0;
        while bit < 8 {
            c = if c & 0x80 != 0 { (c << 1) ^ 0x07 } else { c << 1 };
            bit += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

static CRC8_TABLE: [u8; 256] = crc8_table();

/// CRC-8, polynomial 0x07, init 0x00, no reflection, no final xor.
pub fn crc8(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |c, &b| CRC8_TABLE[(c ^ b) as usize])
}

/// Round to the six decimals carried on the wire.
fn quantize(radians: f64) -> f64 {
    // `+ 0.0` folds -0.0 into 0.0 so it never prints as "-0.000000".
    (radians * 1e6).round() / 1e6 + 0.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    seq: u16,
    thetas: [Angle; 5],
}

impl Frame {
    /// Angles are rounded to wire precision (six decimals), so a decoded
    /// frame compares equal to the encoded one.
    pub fn new(seq: u16, thetas: JointAngles) -> Self {
        Frame {
            seq,
            thetas: thetas.0.map(|a| Angle(quantize(a.0))),
        }
    }

    pub fn seq(&self) -> u16 {
        self.seq
    }

    pub fn angles(&self) -> JointAngles {
        JointAngles(self.thetas)
    }

    fn payload(&self) -> String {
        let mut s = self.seq.to_string();
        for t in &self.thetas {
            s.push_str(&format!(",{:.6}", t.0));
        }
        s
    }

    pub fn crc(&self) -> u8 {
        crc8(self.payload().as_bytes())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("MalformedFrame: {0}")]
    Malformed(String),
    #[error("CrcMismatch: line carries {found:02x}, payload hashes to {computed:02x}")]
    CrcMismatch { found: u8, computed: u8 },
}

impl FrameError {
    pub fn name(&self) -> &'static str {
        match self {
            FrameError::Malformed(_) => "MalformedFrame",
            FrameError::CrcMismatch { .. } => "CrcMismatch",
        }
    }
}

pub fn encode_frame(frame: &Frame) -> String {
    let payload = frame.payload();
    format!("{FRAME_TAG},{payload},{:02x}\n", crc8(payload.as_bytes()))
}

/// Parse and verify one line, with or without its terminator. The checksum
/// is verified before the payload is parsed.
pub fn decode_frame(line: impl AsRef<[u8]>) -> Result<Frame, FrameError> {
    let malformed = |why: &str| FrameError::Malformed(why.to_string());
    let line = line.as_ref();
    let line = line
        .strip_suffix(b"\r\n")
        .or_else(|| line.strip_suffix(b"\n"))
        .unwrap_or(line);
    if line.is_empty() {
        return Err(malformed("empty line"));
    }

    let (first, last) = match (
        line.iter().position(|&b| b == b','),
        line.iter().rposition(|&b| b == b','),
    ) {
        (Some(f), Some(l)) if f < l => (f, l),
        _ => return Err(malformed("missing separators")),
    };
    if &line[..first] != FRAME_TAG.as_bytes() {
        return Err(malformed("unknown frame tag"));
    }
    let payload = &line[first + 1..last];
    let found = match &line[last + 1..] {
        &[hi, lo] => (hex_digit(hi)? << 4) | hex_digit(lo)?,
        _ => return Err(malformed("crc must be two hex digits")),
    };

    let computed = crc8(payload);
    if found != computed {
        return Err(FrameError::CrcMismatch { found, computed });
    }

    let payload = std::str::from_utf8(payload).map_err(|_| malformed("payload is not ASCII"))?;
    let fields: Vec<&str> = payload.split(',').collect();
    if fields.len() != 6 {
        return Err(malformed("expected seq and five angles"));
    }
    let seq: u16 = fields[0].parse().map_err(|_| malformed("seq is not a u16"))?;
    let mut thetas = [Angle::ZERO; 5];
    for (slot, field) in thetas.iter_mut().zip(&fields[1..]) {
        let v: f64 = field.parse().map_err(|_| malformed("angle is not numeric"))?;
        if !v.is_finite() {
            return Err(malformed("angle is not finite"));
        }
        *slot = Angle(v);
    }
    Ok(Frame { seq, thetas })
}

fn hex_digit(b: u8) -> Result<u8, FrameError> {
    match b {
        b'0'..=b'9' => Ok(b - b'0'),
        b'a'..=b'f' => Ok(b - b'a' + 10),
        _ => Err(FrameError::Malformed("crc must be lowercase hex".into())),
    }
}

/// The three ways the master acquires a command.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MasterInput {
    /// `A d1 d2 d3 d4 d5`: joint angles in degrees.
    AngleLine([f64; 5]),
    /// `C x y z g`: tool target in millimeters plus gripper angle in degrees.
    CoordLine { x: f64, y: f64, z: f64, grip: f64 },
    /// Raw 10-bit potentiometer readings, one per joint.
    AnalogReadings([u16; 5]),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("malformed input line: {0}")]
    Malformed(String),
    #[error("AnalogOutOfRange: channel {channel} reads {value} (max {ANALOG_MAX})")]
    AnalogOutOfRange { channel: usize, value: u16 },
    #[error("{0}")]
    Ik(#[from] IkError),
}

impl InputError {
    pub fn name(&self) -> &'static str {
        match self {
            InputError::Malformed(_) => "MalformedInput",
            InputError::AnalogOutOfRange { .. } => "AnalogOutOfRange",
            InputError::Ik(e) => e.name(),
        }
    }
}

fn parse_numbers<const N: usize>(fields: &[&str]) -> Result<[f64; N], InputError> {
    if fields.len() != N {
        return Err(InputError::Malformed(format!(
            "expected {N} values, got {}",
            fields.len()
        )));
    }
    let mut out = [0.0; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| InputError::Malformed(format!("not a number: {f:?}")))?;
    }
    Ok(out)
}

impl MasterInput {
    /// Parse one serial-mode line (`A ...` or `C ...`).
    pub fn parse_serial(line: &str) -> Result<Self, InputError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.split_first() {
            Some((&"A", rest)) => Ok(MasterInput::AngleLine(parse_numbers::<5>(rest)?)),
            Some((&"C", rest)) => {
                let [x, y, z, grip] = parse_numbers::<4>(rest)?;
                Ok(MasterInput::CoordLine { x, y, z, grip })
            }
            Some((tag, _)) => Err(InputError::Malformed(format!("unknown command {tag:?}"))),
            None => Err(InputError::Malformed("empty line".into())),
        }
    }

    /// Parse one potentiometer line: five whitespace-separated integers.
    pub fn parse_analog(line: &str) -> Result<Self, InputError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(InputError::Malformed(format!(
                "expected 5 channels, got {}",
                fields.len()
            )));
        }
        let mut values = [0u16; 5];
        for (slot, f) in values.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| InputError::Malformed(format!("not a channel reading: {f:?}")))?;
        }
        Ok(MasterInput::AnalogReadings(values))
    }

    /// Serial-grammar rendering of the input, when one exists.
    pub fn to_serial_line(&self) -> Option<String> {
        match self {
            MasterInput::AngleLine(d) => Some(format!("A {} {} {} {} {}", d[0], d[1], d[2], d[3], d[4])),
            MasterInput::CoordLine { x, y, z, grip } => Some(format!("C {x} {y} {z} {grip}")),
            MasterInput::AnalogReadings(_) => None,
        }
    }
}

/// Reduce any input mode to five joint angles in radians.
pub fn normalize_input(
    input: &MasterInput,
    links: &LinkLengths,
    limits: &JointLimits,
) -> Result<JointAngles, InputError> {
    match *input {
        MasterInput::AngleLine(deg) => Ok(JointAngles(deg.map(deg_to_rad))),
        MasterInput::CoordLine { x, y, z, grip } => {
            let sol = ik_solve(&ToolPosition::new(x, y, z), deg_to_rad(grip), links)?;
            Ok(sol.angles)
        }
        MasterInput::AnalogReadings(raw) => {
            let mut unit = [0.0; 5];
            for (i, (&v, u)) in raw.iter().zip(unit.iter_mut()).enumerate() {
                if v > ANALOG_MAX {
                    return Err(InputError::AnalogOutOfRange { channel: i + 1, value: v });
                }
                *u = f64::from(v) / f64::from(ANALOG_MAX);
            }
            Ok(limits.lerp(unit))
        }
    }
}

/// Suppresses retransmission of commands that have not meaningfully changed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeDetector {
    last_sent: Option<JointAngles>,
    delta_min: Angle,
}

impl Default for ChangeDetector {
    fn default() -> Self {
        ChangeDetector::new(Angle::from_degrees(0.5))
    }
}

impl ChangeDetector {
    /// # Panics
    /// If `delta_min` is not strictly positive.
    pub fn new(delta_min: Angle) -> Self {
        assert!(delta_min.radians() > 0.0, "delta_min must be positive");
        ChangeDetector {
            last_sent: None,
            delta_min,
        }
    }

    pub fn delta_min(&self) -> Angle {
        self.delta_min
    }

    pub fn last_sent(&self) -> Option<&JointAngles> {
        self.last_sent.as_ref()
    }

    /// Returns the updated detector and whether `thetas` should be sent.
    pub fn change_filter(self, thetas: &JointAngles) -> (Self, bool) {
        let emit = match &self.last_sent {
            None => true,
            Some(prev) => prev
                .0
                .iter()
                .zip(&thetas.0)
                .any(|(a, b)| (*b - *a).abs() >= self.delta_min),
        };
        let next = if emit {
            ChangeDetector {
                last_sent: Some(*thetas),
                ..self
            }
        } else {
            self
        };
        (next, emit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_check_value() {
        // Standard CRC-8 (SMBus) check value.
        assert_eq!(crc8(b"123456789"), 0xf4);
        assert_eq!(crc8(b""), 0);
    }

    #[test]
    fn zero_frame_bytes() {
        let f = Frame::new(0, JointAngles::REST);
        assert_eq!(
            encode_frame(&f),
            "J,0,0.000000,0.000000,0.000000,0.000000,0.000000,f8\n"
        );
    }

    #[test]
    fn negative_zero_is_normalized() {
        let f = Frame::new(3, JointAngles::from_radians([-1e-9, -0.0, 0.0, 0.0, 0.0]));
        assert!(!encode_frame(&f).contains("-0.000000"));
    }

    #[test]
    fn decode_rejects_garbage() {
        for line in ["", "\n", "J", "J,1,2", "X,0,0,0,0,0,0,00\n", "J,0,0,0,0,0,zz\n"] {
            assert!(matches!(decode_frame(line), Err(FrameError::Malformed(_))), "{line:?}");
        }
    }

    #[test]
    fn decode_checks_field_count_behind_a_valid_crc() {
        let payload = "0,0,0,0,0,0,0";
        let line = format!("J,{payload},{:02x}\n", crc8(payload.as_bytes()));
        assert!(matches!(decode_frame(&line), Err(FrameError::Malformed(_))));
    }

    #[test]
    fn decode_flags_bad_checksum() {
        let line = "J,0,0.000000,0.000000,0.000000,0.000000,0.000000,00\n";
        assert_eq!(
            decode_frame(line),
            Err(FrameError::CrcMismatch { found: 0, computed: 0xf8 })
        );
    }

    #[test]
    fn decode_accepts_crlf_but_not_uppercase_crc() {
        let f = Frame::new(7, JointAngles::from_radians([0.1, -0.2, 0.3, -0.4, 0.5]));
        let line = encode_frame(&f);
        let body = &line[..line.len() - 1];
        assert_eq!(decode_frame(format!("{body}\r\n")).unwrap(), f);
        assert_eq!(decode_frame(body).unwrap(), f);
        assert!(matches!(decode_frame(format!("{body}\r")), Err(FrameError::Malformed(_))));
        let upper = format!("{}{}", &body[..body.len() - 2], body[body.len() - 2..].to_uppercase());
        if upper != body {
            assert!(matches!(decode_frame(&upper), Err(FrameError::Malformed(_))));
        }
        let plus = format!("{}+{}", &body[..body.len() - 2], &body[body.len() - 1..]);
        assert!(decode_frame(&plus).is_err());
    }

    #[test]
    fn serial_grammar() {
        assert_eq!(
            MasterInput::parse_serial("A 0 0 0 0 0").unwrap(),
            MasterInput::AngleLine([0.0; 5])
        );
        assert_eq!(
            MasterInput::parse_serial("  C 250 0 150   0 ").unwrap(),
            MasterInput::CoordLine { x: 250.0, y: 0.0, z: 150.0, grip: 0.0 }
        );
        assert!(MasterInput::parse_serial("A 1 2 3").is_err());
        assert!(MasterInput::parse_serial("B 1 2 3 4 5").is_err());
        assert!(MasterInput::parse_serial("A 1 2 x 4 5").is_err());
        assert!(MasterInput::parse_serial("").is_err());
        assert_eq!(
            MasterInput::parse_analog("0 1023 512 1 2").unwrap(),
            MasterInput::AnalogReadings([0, 1023, 512, 1, 2])
        );
        assert!(MasterInput::parse_analog("0 -1 512 1 2").is_err());
    }

    #[test]
    fn normalize_modes() {
        let l = LinkLengths::default();
        let lim = JointLimits::from_degrees([(-90.0, 90.0); 5]).unwrap();
        assert_eq!(
            normalize_input(&MasterInput::AngleLine([0.0; 5]), &l, &lim).unwrap(),
            JointAngles::REST
        );
        let lo = normalize_input(&MasterInput::AnalogReadings([0; 5]), &l, &lim).unwrap();
        let hi = normalize_input(&MasterInput::AnalogReadings([1023; 5]), &l, &lim).unwrap();
        for i in 0..5 {
            assert!((lo.degrees()[i] + 90.0).abs() < 1e-12);
            assert!((hi.degrees()[i] - 90.0).abs() < 1e-12);
        }
        assert_eq!(
            normalize_input(&MasterInput::AnalogReadings([0, 0, 1024, 0, 0]), &l, &lim),
            Err(InputError::AnalogOutOfRange { channel: 3, value: 1024 })
        );
        assert_eq!(
            normalize_input(
                &MasterInput::CoordLine { x: 500.0, y: 0.0, z: 208.0, grip: 0.0 },
                &l,
                &lim
            ),
            Err(InputError::Ik(IkError::Unreachable))
        );
    }

    #[test]
    fn coordinate_input_goes_through_ik() {
        let l = LinkLengths::default();
        let got = normalize_input(
            &MasterInput::CoordLine { x: 250.0, y: 0.0, z: 150.0, grip: 0.0 },
            &l,
            &JointLimits::default(),
        )
        .unwrap()
        .radians();
        let expected = [0.0, -0.1405, 0.4799, -0.3393, 0.0];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 2e-4, "{got:?}");
        }
    }

    #[test]
    fn change_filter_threshold() {
        let det = ChangeDetector::default();
        let (det, first) = det.change_filter(&JointAngles::REST);
        assert!(first);
        let (det, again) = det.change_filter(&JointAngles::REST);
        assert!(!again);
        let (det, small) = det.change_filter(&JointAngles::from_degrees([0.0, 0.4, 0.0, 0.0, 0.0]));
        assert!(!small);
        let (det, moved) = det.change_filter(&JointAngles::from_degrees([0.0, 1.0, 0.0, 0.0, 0.0]));
        assert!(moved);
        assert_eq!(det.last_sent(), Some(&JointAngles::from_degrees([0.0, 1.0, 0.0, 0.0, 0.0])));
    }

    #[test]
    #[should_panic]
    fn change_detector_requires_positive_threshold() {
        ChangeDetector::new(Angle::ZERO);
    }
}
