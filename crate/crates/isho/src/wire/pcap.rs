//! Classic little-endian pcap writer (v2.4) with the raw-IP link type, so
//! captured frames open directly in wireshark/tcpdump without a synthetic
//! ethernet layer.

use std::io::{self, Write};

const MAGIC: u32 = 0xA1B2_C3D4;
const VERSION_MAJOR: u16 = 2;
const VERSION_MINOR: u16 = 4;
const SNAPLEN: u32 = 0xFFFF;
const LINKTYPE_RAW_IP: u32 = 101;

pub struct PcapWriter<W: Write> {
    out: W,
}

impl<W: Write> PcapWriter<W> {
    /// Writes the global header immediately.
    pub fn new(mut out: W) -> io::Result<PcapWriter<W>> {
        out.write_all(&MAGIC.to_le_bytes())?;
        out.write_all(&VERSION_MAJOR.to_le_bytes())?;
        out.write_all(&VERSION_MINOR.to_le_bytes())?;
        out.write_all(&0i32.to_le_bytes())?; // thiszone
        out.write_all(&0u32.to_le_bytes())?; // sigfigs
        out.write_all(&SNAPLEN.to_le_bytes())?;
        out.write_all(&LINKTYPE_RAW_IP.to_le_bytes())?;
        Ok(PcapWriter { out })
    }

    pub fn record(&mut self, ts_us: u64, frame: &[u8]) -> io::Result<()> {
        let len = u32::try_from(frame.len())
            .ok()
            .filter(|&n| n <= SNAPLEN)
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "frame exceeds snaplen"))?;
        self.out.write_all(&((ts_us / 1_000_000) as u32).to_le_bytes())?;
        self.out.write_all(&((ts_us % 1_000_000) as u32).to_le_bytes())?;
        self.out.write_all(&len.to_le_bytes())?;
        self.out.write_all(&len.to_le_bytes())?;
        self.out.write_all(frame)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Writes a whole capture of `(timestamp µs, frame)` pairs.
pub fn write_capture<W: Write>(out: W, frames: &[(u64, Vec<u8>)]) -> io::Result<W> {
    let mut w = PcapWriter::new(out)?;
    for (ts, frame) in frames {
        w.record(*ts, frame)?;
    }
    Ok(w.into_inner())
}
