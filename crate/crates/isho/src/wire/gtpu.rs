//! Minimal GTPv1-U codec: G-PDU (encapsulated T-PDU) messages only.
//!
//! Encoded headers are always the plain 8-byte form (version 1, PT=1, no
//! E/S/PN). The decoder additionally accepts headers with the optional
//! 4-byte field block present, as long as no extension header follows.

use super::WireError;

/// Registered UDP port for GTP-U.
pub const UDP_PORT: u16 = 2152;

const FLAGS_PLAIN: u8 = 0x30; // version 1, PT=1, E/S/PN clear
const MSG_GPDU: u8 = 0xFF;

pub fn encode_gpdu(teid: u32, payload: &[u8]) -> Vec<u8> {
    assert!(payload.len() <= u16::MAX as usize, "payload too large for GTP-U");
    let mut out = Vec::with_capacity(8 + payload.len());
    out.push(FLAGS_PLAIN);
    out.push(MSG_GPDU);
    out.extend_from_slice(&(payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&teid.to_be_bytes());
    out.extend_from_slice(payload);
    out
}

/// Decodes a G-PDU, returning the TEID and the encapsulated payload.
pub fn decode_gpdu(b: &[u8]) -> Result<(u32, &[u8]), WireError> {
    if b.len() < 8 {
        return Err(WireError::Truncated { got: b.len(), need: 8 });
    }
    let flags = b[0];
    let version = flags >> 5;
    if version != 1 {
        return Err(WireError::UnsupportedVersion(version));
    }
    if flags & 0x10 == 0 {
        return Err(WireError::PrimeFormat);
    }
    if b[1] != MSG_GPDU {
        return Err(WireError::NotGpdu(b[1]));
    }
    let declared = u16::from_be_bytes([b[2], b[3]]) as usize;
    let available = b.len() - 8;
    if declared != available {
        return Err(WireError::LengthMismatch { declared, available });
    }
    let teid = u32::from_be_bytes([b[4], b[5], b[6], b[7]]);

    // Any of E/S/PN set means the 4-byte optional field block is present and
    // counted inside the declared length.
    let mut payload = &b[8..];
    if flags & 0x07 != 0 {
        if payload.len() < 4 {
            return Err(WireError::Truncated {
                got: b.len(),
                need: 12,
            });
        }
        let next_ext = payload[3];
        if next_ext != 0 {
            return Err(WireError::ExtensionChain(next_ext));
        }
        payload = &payload[4..];
    }
    Ok((teid, payload))
}
