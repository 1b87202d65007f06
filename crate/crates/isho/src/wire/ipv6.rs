//! Minimal IPv6 plumbing: prefixes with stateless address configuration, and
//! raw IPv6/UDP datagram builders for the captured user-plane frames.

use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;

use super::WireError;

pub const UDP_PROTO: u8 = 17;
const HOP_LIMIT: u8 = 64;

/// A routing prefix of at most 64 bits, leaving the low 64 bits for the
/// interface identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ipv6Prefix {
    pub addr: Ipv6Addr,
    pub prefix_len: u8,
}

impl Ipv6Prefix {
    pub fn new(addr: Ipv6Addr, prefix_len: u8) -> Result<Ipv6Prefix, WireError> {
        if prefix_len > 64 {
            return Err(WireError::PrefixTooLong(prefix_len));
        }
        let mask = if prefix_len == 0 {
            0
        } else {
            u128::MAX << (128 - prefix_len as u32)
        };
        Ok(Ipv6Prefix {
            addr: Ipv6Addr::from(u128::from(addr) & mask),
            prefix_len,
        })
    }

    /// Combines the prefix with a 64-bit interface identifier.
    pub fn autoconfigure(&self, iid: u64) -> Ipv6Addr {
        Ipv6Addr::from(u128::from(self.addr) | iid as u128)
    }

    pub fn contains(&self, addr: Ipv6Addr) -> bool {
        Ipv6Prefix::new(addr, self.prefix_len).map(|p| p.addr) == Ok(self.addr)
    }

    /// The 16-byte prefix address followed by the length, as carried in
    /// advertisement payloads.
    pub fn to_wire(&self) -> [u8; 17] {
        let mut out = [0u8; 17];
        out[..16].copy_from_slice(&self.addr.octets());
        out[16] = self.prefix_len;
        out
    }

    pub fn from_wire(b: &[u8]) -> Result<Ipv6Prefix, WireError> {
        if b.len() != 17 {
            return Err(WireError::BadPrefix(format!("{} byte payload", b.len())));
        }
        let mut octets = [0u8; 16];
        octets.copy_from_slice(&b[..16]);
        Ipv6Prefix::new(Ipv6Addr::from(octets), b[16])
    }
}

impl FromStr for Ipv6Prefix {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Ipv6Prefix, WireError> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| WireError::BadPrefix(s.to_string()))?;
        let addr: Ipv6Addr = addr
            .parse()
            .map_err(|_| WireError::BadPrefix(s.to_string()))?;
        let len: u8 = len
            .parse()
            .map_err(|_| WireError::BadPrefix(s.to_string()))?;
        Ipv6Prefix::new(addr, len)
    }
}

impl fmt::Display for Ipv6Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.prefix_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ipv6Datagram<'a> {
    pub src: Ipv6Addr,
    pub dst: Ipv6Addr,
    pub next_header: u8,
    pub payload: &'a [u8],
}

/// Builds a raw IPv6 datagram with a 40-byte header.
pub fn datagram(src: Ipv6Addr, dst: Ipv6Addr, next_header: u8, payload: &[u8]) -> Vec<u8> {
    assert!(payload.len() <= u16::MAX as usize, "payload too large");
    let mut out = Vec::with_capacity(40 + payload.len());
    out.extend_from_slice(&[0x60, 0, 0, 0]);
    out.extend_from_slice(&(payload.len() as u16).to_be_bytes());
    out.push(next_header);
    out.push(HOP_LIMIT);
    out.extend_from_slice(&src.octets());
    out.extend_from_slice(&dst.octets());
    out.extend_from_slice(payload);
    out
}

pub fn decode_datagram(b: &[u8]) -> Result<Ipv6Datagram<'_>, WireError> {
    if b.len() < 40 {
        return Err(WireError::Truncated {
            got: b.len(),
            need: 40,
        });
    }
    let version = b[0] >> 4;
    if version != 6 {
        return Err(WireError::UnsupportedVersion(version));
    }
    let declared = u16::from_be_bytes([b[4], b[5]]) as usize;
    let available = b.len() - 40;
    if declared != available {
        return Err(WireError::LengthMismatch {
            declared,
            available,
        });
    }
    let addr = |at: usize| {
        let mut a = [0u8; 16];
        a.copy_from_slice(&b[at..at + 16]);
        Ipv6Addr::from(a)
    };
    Ok(Ipv6Datagram {
        src: addr(8),
        dst: addr(24),
        next_header: b[6],
        payload: &b[40..],
    })
}

/// Builds a UDP datagram; the checksum is carried as zero.
pub fn udp_datagram(sport: u16, dport: u16, payload: &[u8]) -> Vec<u8> {
    assert!(payload.len() + 8 <= u16::MAX as usize, "payload too large");
    let mut out = Vec::with_capacity(8 + payload.len());
    out.extend_from_slice(&sport.to_be_bytes());
    out.extend_from_slice(&dport.to_be_bytes());
    out.extend_from_slice(&((payload.len() + 8) as u16).to_be_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(payload);
    out
}

pub fn decode_udp(b: &[u8]) -> Result<(u16, u16, &[u8]), WireError> {
    if b.len() < 8 {
        return Err(WireError::Truncated { got: b.len(), need: 8 });
    }
    let declared = u16::from_be_bytes([b[4], b[5]]) as usize;
    if declared != b.len() {
        return Err(WireError::LengthMismatch {
            declared,
            available: b.len(),
        });
    }
    Ok((
        u16::from_be_bytes([b[0], b[1]]),
        u16::from_be_bytes([b[2], b[3]]),
        &b[8..],
    ))
}
