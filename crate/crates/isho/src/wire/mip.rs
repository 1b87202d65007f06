//! MIPv6 mobility-header codec (RFC 6275 shapes) for the return-routability
//! and binding-registration exchange.
//!
//! Checksums are carried as zero; computing them is out of scope for the
//! model and the decoder rejects anything else. The binding update carries
//! its authenticator as a binding-authorization-data option (type 5) with an
//! 8-byte value derived from the two routability tokens.

use super::WireError;

/// IPv6 next-header value of the mobility header.
pub const MOBILITY_PROTO: u8 = 135;

/// Payload proto inside the mobility header: nothing follows.
const NO_NEXT_HEADER: u8 = 59;

const OPT_PAD1: u8 = 0;
const OPT_PADN: u8 = 1;
const OPT_AUTH: u8 = 5;

/// Binding update flags: acknowledge + home registration.
const BU_FLAGS: u16 = 0xC000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityMessage {
    HomeTestInit {
        cookie: u64,
    },
    CareOfTestInit {
        cookie: u64,
    },
    HomeTest {
        nonce_index: u16,
        cookie: u64,
        token: u64,
    },
    CareOfTest {
        nonce_index: u16,
        cookie: u64,
        token: u64,
    },
    BindingUpdate {
        sequence: u16,
        lifetime: u16,
        auth: u64,
    },
    BindingAck {
        status: u8,
        sequence: u16,
        lifetime: u16,
    },
}

impl MobilityMessage {
    pub fn mh_type(&self) -> u8 {
        match self {
            MobilityMessage::HomeTestInit { .. } => 1,
            MobilityMessage::CareOfTestInit { .. } => 2,
            MobilityMessage::HomeTest { .. } => 3,
            MobilityMessage::CareOfTest { .. } => 4,
            MobilityMessage::BindingUpdate { .. } => 5,
            MobilityMessage::BindingAck { .. } => 6,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut data = Vec::new();
        match *self {
            MobilityMessage::HomeTestInit { cookie } | MobilityMessage::CareOfTestInit { cookie } => {
                data.extend_from_slice(&[0, 0]); // reserved
                data.extend_from_slice(&cookie.to_be_bytes());
            }
            MobilityMessage::HomeTest {
                nonce_index,
                cookie,
                token,
            }
            | MobilityMessage::CareOfTest {
                nonce_index,
                cookie,
                token,
            } => {
                data.extend_from_slice(&nonce_index.to_be_bytes());
                data.extend_from_slice(&cookie.to_be_bytes());
                data.extend_from_slice(&token.to_be_bytes());
            }
            MobilityMessage::BindingUpdate {
                sequence,
                lifetime,
                auth,
            } => {
                data.extend_from_slice(&sequence.to_be_bytes());
                data.extend_from_slice(&BU_FLAGS.to_be_bytes());
                data.extend_from_slice(&lifetime.to_be_bytes());
                data.push(OPT_AUTH);
                data.push(8);
                data.extend_from_slice(&auth.to_be_bytes());
            }
            MobilityMessage::BindingAck {
                status,
                sequence,
                lifetime,
            } => {
                data.push(status);
                data.push(0); // K flag + reserved
                data.extend_from_slice(&sequence.to_be_bytes());
                data.extend_from_slice(&lifetime.to_be_bytes());
            }
        }
        // Pad the message to a multiple of 8 octets with a PadN option.
        let unpadded = 6 + data.len();
        let pad = (8 - unpadded % 8) % 8;
        match pad {
            0 => {}
            1 => data.push(OPT_PAD1),
            n => {
                data.push(OPT_PADN);
                data.push(n as u8 - 2);
                data.extend(std::iter::repeat_n(0, n - 2));
            }
        }

        let total = 6 + data.len();
        debug_assert_eq!(total % 8, 0);
        let mut out = Vec::with_capacity(total);
        out.push(NO_NEXT_HEADER);
        out.push((total / 8 - 1) as u8);
        out.push(self.mh_type());
        out.push(0); // reserved
        out.extend_from_slice(&[0, 0]); // checksum, carried as zero
        out.extend_from_slice(&data);
        out
    }

    pub fn decode(b: &[u8]) -> Result<MobilityMessage, WireError> {
        if b.len() < 8 {
            return Err(WireError::Truncated { got: b.len(), need: 8 });
        }
        if b[0] != NO_NEXT_HEADER {
            return Err(WireError::NotMobilityHeader(b[0]));
        }
        let total = (b[1] as usize + 1) * 8;
        if b.len() < total {
            return Err(WireError::Truncated {
                got: b.len(),
                need: total,
            });
        }
        if b.len() > total {
            return Err(WireError::TrailingBytes {
                got: b.len() - total,
            });
        }
        if b[4] != 0 || b[5] != 0 {
            return Err(WireError::NonZeroChecksum);
        }
        let mh_type = b[2];
        let data = &b[6..total];
        let need = |n: usize| -> Result<(), WireError> {
            if data.len() < n {
                Err(WireError::Truncated {
                    got: b.len(),
                    need: 6 + n,
                })
            } else {
                Ok(())
            }
        };
        let u16at = |i: usize| u16::from_be_bytes([data[i], data[i + 1]]);
        let u64at = |i: usize| {
            let mut a = [0u8; 8];
            a.copy_from_slice(&data[i..i + 8]);
            u64::from_be_bytes(a)
        };

        match mh_type {
            1 | 2 => {
                need(10)?;
                skip_padding(&data[10..])?;
                let cookie = u64at(2);
                Ok(if mh_type == 1 {
                    MobilityMessage::HomeTestInit { cookie }
                } else {
                    MobilityMessage::CareOfTestInit { cookie }
                })
            }
            3 | 4 => {
                need(18)?;
                skip_padding(&data[18..])?;
                let msg = (u16at(0), u64at(2), u64at(10));
                Ok(if mh_type == 3 {
                    MobilityMessage::HomeTest {
                        nonce_index: msg.0,
                        cookie: msg.1,
                        token: msg.2,
                    }
                } else {
                    MobilityMessage::CareOfTest {
                        nonce_index: msg.0,
                        cookie: msg.1,
                        token: msg.2,
                    }
                })
            }
            5 => {
                need(6)?;
                let sequence = u16at(0);
                let lifetime = u16at(4);
                let auth = parse_bu_options(&data[6..])?;
                Ok(MobilityMessage::BindingUpdate {
                    sequence,
                    lifetime,
                    auth,
                })
            }
            6 => {
                need(6)?;
                skip_padding(&data[6..])?;
                Ok(MobilityMessage::BindingAck {
                    status: data[0],
                    sequence: u16at(2),
                    lifetime: u16at(4),
                })
            }
            other => Err(WireError::BadMobilityType(other)),
        }
    }
}

/// Walks a padding-only option area.
fn skip_padding(mut area: &[u8]) -> Result<(), WireError> {
    while !area.is_empty() {
        match area[0] {
            OPT_PAD1 => area = &area[1..],
            OPT_PADN => {
                if area.len() < 2 || area.len() < 2 + area[1] as usize {
                    return Err(WireError::BadOption(OPT_PADN));
                }
                area = &area[2 + area[1] as usize..];
            }
            other => return Err(WireError::BadOption(other)),
        }
    }
    Ok(())
}

/// Walks the binding-update option area; the authenticator is required.
fn parse_bu_options(mut area: &[u8]) -> Result<u64, WireError> {
    let mut auth = None;
    while !area.is_empty() {
        let t = area[0];
        if t == OPT_PAD1 {
            area = &area[1..];
            continue;
        }
        if area.len() < 2 || area.len() < 2 + area[1] as usize {
            return Err(WireError::BadOption(t));
        }
        let (body, rest) = area[2..].split_at(area[1] as usize);
        match t {
            OPT_PADN => {}
            OPT_AUTH => {
                if body.len() != 8 {
                    return Err(WireError::BadOption(OPT_AUTH));
                }
                let mut a = [0u8; 8];
                a.copy_from_slice(body);
                auth = Some(u64::from_be_bytes(a));
            }
            other => return Err(WireError::BadOption(other)),
        }
        area = rest;
    }
    auth.ok_or(WireError::BadOption(OPT_AUTH))
}
