//! Byte-level codecs used by the simulator: GTPv1-U G-PDUs, MIPv6 mobility
//! headers, raw IPv6/UDP datagrams, and a classic pcap writer for captures.

pub mod gtpu;
pub mod ipv6;
pub mod mip;
pub mod pcap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("buffer too short ({got} bytes, need {need})")]
    Truncated { got: usize, need: usize },
    #[error("{got} trailing bytes after the message")]
    TrailingBytes { got: usize },
    #[error("unsupported GTP version {0}")]
    UnsupportedVersion(u8),
    #[error("GTP' framing is not supported")]
    PrimeFormat,
    #[error("unsupported GTP message type {0:#04x} (only G-PDU)")]
    NotGpdu(u8),
    #[error("extension header chains are not supported (next type {0:#04x})")]
    ExtensionChain(u8),
    #[error("length field {declared} does not match {available} available bytes")]
    LengthMismatch { declared: usize, available: usize },
    #[error("not a mobility header (payload proto {0})")]
    NotMobilityHeader(u8),
    #[error("unknown mobility header type {0}")]
    BadMobilityType(u8),
    #[error("mobility header checksum must be carried as zero in this model")]
    NonZeroChecksum,
    #[error("bad mobility option (type {0})")]
    BadOption(u8),
    #[error("cannot parse IPv6 prefix '{0}'")]
    BadPrefix(String),
    #[error("prefix length {0} not supported (must be <= 64)")]
    PrefixTooLong(u8),
    #[error("not an IPv6 datagram")]
    BadDatagram,
}
