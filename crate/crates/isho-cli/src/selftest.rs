//! Wire-codec self-test: golden vectors, randomized round-trips, and a
//! decode fuzz pass over every parser. Meant to be cheap enough to run on
//! every install (`isho codec-selftest`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isho::wire::gtpu;
use isho::wire::ipv6::{self, Ipv6Prefix};
use isho::wire::mip::MobilityMessage;

const ROUND_TRIPS: usize = 10_000;
const FUZZ_INPUTS: usize = 100_000;

pub fn run() -> Result<(), String> {
    golden_vectors()?;
    println!("golden vectors: ok");

    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    gtpu_round_trips(&mut rng)?;
    println!("gtp-u round-trips: {ROUND_TRIPS} ok");

    mobility_round_trips(&mut rng)?;
    println!("mobility round-trips: {ROUND_TRIPS} ok");

    let rejected = fuzz_decoders(&mut rng);
    println!(
        "decoder fuzz: {FUZZ_INPUTS} inputs x 5 decoders, {rejected} rejected cleanly, no faults"
    );
    Ok(())
}

/// Known-good encodings, pinned byte for byte.
fn golden_vectors() -> Result<(), String> {
    let gpdu = gtpu::encode_gpdu(1, &[0xDE, 0xAD, 0xBE, 0xEF]);
    let want = [
        0x30, 0xFF, 0x00, 0x04, 0x00, 0x00, 0x00, 0x01, 0xDE, 0xAD, 0xBE, 0xEF,
    ];
    if gpdu != want {
        return Err(format!("g-pdu golden mismatch: got {gpdu:02x?}"));
    }

    let bu = MobilityMessage::BindingUpdate {
        sequence: 1,
        lifetime: 100,
        auth: 0x1122_3344_5566_7788,
    }
    .encode();
    let want = [
        0x3b, 0x02, 0x05, 0x00, 0x00, 0x00, 0x00, 0x01, 0xc0, 0x00, 0x00, 0x64, 0x05, 0x08, 0x11,
        0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x01, 0x00,
    ];
    if bu != want {
        return Err(format!("binding update golden mismatch: got {bu:02x?}"));
    }

    let coti = MobilityMessage::CareOfTestInit {
        cookie: 0xAABB_CCDD_EEFF_0011,
    }
    .encode();
    let want = [
        0x3b, 0x01, 0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff, 0x00,
        0x11,
    ];
    if coti != want {
        return Err(format!("care-of test init golden mismatch: got {coti:02x?}"));
    }
    Ok(())
}

fn gtpu_round_trips(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for i in 0..ROUND_TRIPS {
        let teid: u32 = rng.gen();
        let len = rng.gen_range(0..=512);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let frame = gtpu::encode_gpdu(teid, &payload);
        let (got_teid, got_payload) =
            gtpu::decode_gpdu(&frame).map_err(|e| format!("g-pdu round-trip {i}: {e}"))?;
        if got_teid != teid || got_payload != payload {
            return Err(format!("g-pdu round-trip {i}: teid 0x{teid:08x} corrupted"));
        }
    }
    Ok(())
}

fn mobility_round_trips(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for i in 0..ROUND_TRIPS {
        let msg = match rng.gen_range(0..6) {
            0 => MobilityMessage::HomeTestInit { cookie: rng.gen() },
            1 => MobilityMessage::CareOfTestInit { cookie: rng.gen() },
            2 => MobilityMessage::HomeTest {
                nonce_index: rng.gen(),
                cookie: rng.gen(),
                token: rng.gen(),
            },
            3 => MobilityMessage::CareOfTest {
                nonce_index: rng.gen(),
                cookie: rng.gen(),
                token: rng.gen(),
            },
            4 => MobilityMessage::BindingUpdate {
                sequence: rng.gen(),
                lifetime: rng.gen(),
                auth: rng.gen(),
            },
            _ => MobilityMessage::BindingAck {
                status: rng.gen(),
                sequence: rng.gen(),
                lifetime: rng.gen(),
            },
        };
        let b = msg.encode();
        if b.len() % 8 != 0 {
            return Err(format!("mobility round-trip {i}: length {} not 8-aligned", b.len()));
        }
        let back = MobilityMessage::decode(&b).map_err(|e| format!("mobility round-trip {i}: {e}"))?;
        if back != msg {
            return Err(format!("mobility round-trip {i}: {msg:?} decoded as {back:?}"));
        }
    }
    Ok(())
}

/// Every decoder must reject or accept arbitrary bytes without panicking.
/// Inputs mix pure noise with truncated/mutated valid frames, which reach
/// deeper branches than noise alone. Returns how many inputs were rejected.
fn fuzz_decoders(rng: &mut ChaCha8Rng) -> u64 {
    let mut rejected = 0u64;
    let mut count = |ok: bool| {
        if !ok {
            rejected += 1;
        }
    };
    for i in 0..FUZZ_INPUTS {
        let buf: Vec<u8> = if i % 3 == 0 {
            // Damaged valid frame: encode something real, then truncate or
            // flip a byte.
            let mut frame = match i % 2 {
                0 => gtpu::encode_gpdu(rng.gen(), &[0u8; 16]),
                _ => MobilityMessage::HomeTest {
                    nonce_index: 1,
                    cookie: rng.gen(),
                    token: rng.gen(),
                }
                .encode(),
            };
            if rng.gen_bool(0.5) && !frame.is_empty() {
                let cut = rng.gen_range(0..frame.len());
                frame.truncate(cut);
            }
            if !frame.is_empty() {
                let at = rng.gen_range(0..frame.len());
                frame[at] ^= 1 << rng.gen_range(0..8);
            }
            frame
        } else {
            let len = rng.gen_range(0..=128);
            (0..len).map(|_| rng.gen()).collect()
        };
        count(gtpu::decode_gpdu(&buf).is_ok());
        count(MobilityMessage::decode(&buf).is_ok());
        count(ipv6::decode_datagram(&buf).is_ok());
        count(ipv6::decode_udp(&buf).is_ok());
        count(Ipv6Prefix::from_wire(&buf).is_ok());
    }
    rejected
}
