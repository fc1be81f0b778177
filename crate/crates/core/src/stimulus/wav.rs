use std::io::Write;

use super::{AudioBuffer, Result};
use crate::num::Sample;

const HEADER_LEN: u64 = 44;

/// Byte length of the WAV file for `samples` mono 16-bit samples.
pub fn wav_len(samples: usize) -> u64 {
    HEADER_LEN + 2 * samples as u64
}

/// Writes a canonical 44-byte-header RIFF/WAVE file: PCM, mono, 16-bit
/// little-endian. Samples are scaled by 32767 and rounded.
pub fn write_wav<T: Sample, W: Write>(buffer: &AudioBuffer<T>, mut sink: W) -> Result<u64> {
    let data_len = 2 * buffer.len() as u32;
    let rate = buffer.sample_rate_hz;

    let mut header = [0u8; HEADER_LEN as usize];
    header[0..4].copy_from_slice(b"RIFF");
    header[4..8].copy_from_slice(&(36 + data_len).to_le_bytes());
    header[8..12].copy_from_slice(b"WAVE");
    header[12..16].copy_from_slice(b"fmt ");
    header[16..20].copy_from_slice(&16u32.to_le_bytes());
    header[20..22].copy_from_slice(&1u16.to_le_bytes()); // PCM
    header[22..24].copy_from_slice(&1u16.to_le_bytes()); // mono
    header[24..28].copy_from_slice(&rate.to_le_bytes());
    header[28..32].copy_from_slice(&(rate * 2).to_le_bytes());
    header[32..34].copy_from_slice(&2u16.to_le_bytes());
    header[34..36].copy_from_slice(&16u16.to_le_bytes());
    header[36..40].copy_from_slice(b"data");
    header[40..44].copy_from_slice(&data_len.to_le_bytes());
    sink.write_all(&header)?;

    let mut data = Vec::with_capacity(data_len as usize);
    for s in buffer.samples() {
        let q = (s.to_f64_lossy() * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        data.extend_from_slice(&q.to_le_bytes());
    }
    sink.write_all(&data)?;
    sink.flush()?;
    Ok(wav_len(buffer.len()))
}
