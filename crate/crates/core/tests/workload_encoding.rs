use xsim_core::isa::{assemble, encode, validate};
use xsim_core::workloads::{philosopher_sources, producer_consumer_sources, PcLayout, PhilLayout};

/// First 20 instructions of producer 0 for one queue of capacity 2 and three
/// items, encoded by hand: opcode byte, then the operand as u32 LE (zero when
/// the opcode takes none). Queue words: lock 0, head 1, tail 2, count 3.
#[rustfmt::skip]
const PRODUCER_HEAD: [u8; 100] = [
    0x01, 0x01, 0x00, 0x00, 0x00, // PUSH 1        first item tag
    0x03, 0x00, 0x00, 0x00, 0x00, // DUP
    0x01, 0x04, 0x00, 0x00, 0x00, // PUSH 4        one past the last tag
    0x19, 0x00, 0x00, 0x00, 0x00, // EQ
    0x21, 0x07, 0x00, 0x00, 0x00, // BRZ 7         poll
    0x02, 0x00, 0x00, 0x00, 0x00, // POP
    0xff, 0x00, 0x00, 0x00, 0x00, // HALT
    0x01, 0x03, 0x00, 0x00, 0x00, // PUSH 3        count
    0x30, 0x00, 0x00, 0x00, 0x00, // LOAD
    0x01, 0x02, 0x00, 0x00, 0x00, // PUSH 2        capacity
    0x1a, 0x00, 0x00, 0x00, 0x00, // LT
    0x21, 0x3e, 0x00, 0x00, 0x00, // BRZ 62        full
    0x01, 0x00, 0x00, 0x00, 0x00, // PUSH 0        lock
    0x32, 0x00, 0x00, 0x00, 0x00, // TAS
    0x21, 0x17, 0x00, 0x00, 0x00, // BRZ 23        locked
    0x01, 0x02, 0x00, 0x00, 0x00, // PUSH 2        backoff trips
    0x01, 0x01, 0x00, 0x00, 0x00, // PUSH 1
    0x11, 0x00, 0x00, 0x00, 0x00, // SUB
    0x03, 0x00, 0x00, 0x00, 0x00, // DUP
    0x21, 0x15, 0x00, 0x00, 0x00, // BRZ 21
];

#[test]
fn producer_body_matches_hand_encoding() {
    let layout = PcLayout::new(1, 1, 1, 2, 3);
    let sources = producer_consumer_sources(&layout, false);
    let program = assemble(&sources[0]).unwrap();
    let bytes = encode(&program);
    assert_eq!(&bytes[..4], b"XSM1");
    assert_eq!(&bytes[8..12], &[0, 0, 0, 0]);
    assert_eq!(&bytes[12..112], &PRODUCER_HEAD[..]);
}

#[test]
fn generated_workloads_validate() {
    for (p, c, q, cap) in [(1, 1, 1, 1), (2, 3, 2, 4), (4, 4, 4, 2), (5, 1, 1, 8)] {
        for racy in [false, true] {
            for src in producer_consumer_sources(&PcLayout::new(p, c, q, cap, 9), racy) {
                assert_eq!(validate(&assemble(&src).unwrap()), vec![]);
            }
        }
    }
    for n in 2..=8 {
        for naive in [false, true] {
            for src in philosopher_sources(&PhilLayout::new(n, 5), naive) {
                assert_eq!(validate(&assemble(&src).unwrap()), vec![]);
            }
        }
    }
}
