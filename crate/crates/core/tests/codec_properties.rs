use armtwin_core::protocol::{crc8, decode_frame, encode_frame, ChangeDetector, Frame, FrameError};
use armtwin_core::JointAngles;
use proptest::prelude::*;

/// Textbook MSB-first shift register, one bit at a time.
fn crc8_bitwise(bytes: &[u8]) -> u8 {
    let mut crc = 0u8;
    for &b in bytes {
        crc ^= b;
        for _ in 0..8 {
            crc = if crc & 0x80 != 0 { (crc << 1) ^ 0x07 } else { crc << 1 };
        }
    }
    crc
}

fn frame() -> impl Strategy<Value = Frame> {
    (any::<u16>(), prop::array::uniform5(-4_000_000i64..4_000_000))
        .prop_map(|(seq, micro)| Frame::new(seq, JointAngles::from_radians(micro.map(|m| m as f64 / 1e6))))
}

#[test]
fn zero_frame_crc_from_reference_routine() {
    let payload = b"0,0.000000,0.000000,0.000000,0.000000,0.000000";
    assert_eq!(crc8_bitwise(payload), 0xf8);
    assert_eq!(
        encode_frame(&Frame::new(0, JointAngles::REST)),
        format!("J,{},{:02x}\n", std::str::from_utf8(payload).unwrap(), crc8_bitwise(payload))
    );
}

#[test]
fn sequence_numbers_wrap() {
    let last = Frame::new(u16::MAX, JointAngles::REST);
    let next = Frame::new(last.seq().wrapping_add(1), JointAngles::REST);
    assert_eq!(next.seq(), 0);
    assert_eq!(decode_frame(encode_frame(&last)).unwrap().seq(), 65535);
}

#[test]
fn empty_line_is_malformed() {
    assert!(matches!(decode_frame(""), Err(FrameError::Malformed(_))));
}

#[test]
fn constant_stream_emits_once() {
    let pose = JointAngles::from_degrees([10.0, 20.0, -30.0, 5.0, 45.0]);
    let mut det = ChangeDetector::default();
    let mut emitted = 0;
    for _ in 0..1000 {
        let (next, emit) = det.change_filter(&pose);
        det = next;
        emitted += usize::from(emit);
    }
    assert_eq!(emitted, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn table_crc_matches_bitwise(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(crc8(&bytes), crc8_bitwise(&bytes));
    }

    #[test]
    fn codec_round_trip(f in frame()) {
        prop_assert_eq!(decode_frame(encode_frame(&f)).unwrap(), f);
    }

    #[test]
    fn every_single_byte_payload_corruption_is_caught(f in frame(), pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let line = encode_frame(&f).into_bytes();
        let first = line.iter().position(|&b| b == b',').unwrap();
        let last = line.iter().rposition(|&b| b == b',').unwrap();
        let i = first + 1 + pos.index(last - first - 1);
        prop_assume!(line[i] != byte);
        let mut bad = line.clone();
        bad[i] = byte;
        prop_assert!(matches!(decode_frame(&bad), Err(FrameError::CrcMismatch { .. })), "{:?}", String::from_utf8_lossy(&bad));
    }

    #[test]
    fn every_single_byte_line_corruption_is_rejected(f in frame(), pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let line = encode_frame(&f).into_bytes();
        let i = pos.index(line.len());
        prop_assume!(line[i] != byte);
        let mut bad = line.clone();
        bad[i] = byte;
        prop_assert!(decode_frame(&bad).is_err(), "{:?}", String::from_utf8_lossy(&bad));
    }
}
