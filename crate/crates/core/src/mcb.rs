//! MCB1: the binary interchange format for [`ConditioningBundle`].
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "MCB1" | version u16 = 1 | sample_rate u32 | hop u32 | fft_size u32 | window_size u32
//! | speaker_id u32 | gst_flag u8 | [gst_id u32]
//! | phoneme_count u32 | { len u8, utf-8 bytes } * phoneme_count
//! | frame_count u32 | f0 f32 * frame_count | voiced bitset, LSB-first, ceil(frame_count / 8) bytes
//! | alignment_kind u8 (0 = hard, 1 = soft)
//! | hard: token index u32 * frame_count | soft: f32 * (tokens * frames), row-major
//! ```

use thiserror::Error;

use crate::bundle::{
    validate_bundle, AlignmentMap, AlignmentWeights, ConditioningBundle, PhonemeSequence, PitchContour,
    Violation,
};
use crate::clock::AudioClock;
use crate::phone::Phone;

pub const MAGIC: &[u8; 4] = b"MCB1";
pub const VERSION: u16 = 1;

const KIND_HARD: u8 = 0;
const KIND_SOFT: u8 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("bundle is invalid: {}", join(.0))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("bad magic {found:?} at offset 0, expected \"MCB1\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported format version {version} at offset {offset}")]
    UnsupportedVersion { offset: usize, version: u16 },
    #[error("truncated payload: need {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("invalid {field} byte {value} at offset {offset}")]
    BadByte {
        offset: usize,
        field: &'static str,
        value: u8,
    },
    #[error("invalid phone symbol {symbol:?} at offset {offset}")]
    BadPhone { offset: usize, symbol: String },
    #[error("{extra} trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("decoded bundle violates invariants: {}", join(.0))]
    Invariant(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn serialize_bundle(bundle: &ConditioningBundle) -> Result<Vec<u8>, EncodeError> {
    let violations = validate_bundle(bundle);
    if !violations.is_empty() {
        return Err(EncodeError::Invalid(violations));
    }
    let frames = bundle.contour.len();
    let mut out = Vec::with_capacity(64 + frames * 9);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let c = &bundle.clock;
    for v in [c.sample_rate, c.hop, c.fft_size, c.window_size, bundle.speaker_id] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match bundle.gst_id {
        Some(id) => {
            out.push(1);
            out.extend_from_slice(&id.to_le_bytes());
        }
        None => out.push(0),
    }
    out.extend_from_slice(&(bundle.phonemes.len() as u32).to_le_bytes());
    for p in bundle.phonemes.iter() {
        let s = p.to_string();
        out.push(s.len() as u8);
        out.extend_from_slice(s.as_bytes());
    }
    write_contour(&mut out, &bundle.contour);
    match bundle.alignment.weights() {
        AlignmentWeights::Hard(path) => {
            out.push(KIND_HARD);
            for &t in path {
                out.extend_from_slice(&t.to_le_bytes());
            }
        }
        AlignmentWeights::Soft(w) => {
            out.push(KIND_SOFT);
            for &x in w {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn deserialize_bundle(bytes: &[u8]) -> Result<ConditioningBundle, DecodeError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4).map_err(|_| DecodeError::BadMagic {
        found: bytes.to_vec(),
    })?;
    if magic != MAGIC {
        return Err(DecodeError::BadMagic { found: magic.to_vec() });
    }
    let offset = r.pos;
    let version = r.u16()?;
    if version != VERSION {
        return Err(DecodeError::UnsupportedVersion { offset, version });
    }
    let clock = AudioClock {
        sample_rate: r.u32()?,
        hop: r.u32()?,
        fft_size: r.u32()?,
        window_size: r.u32()?,
    };
    let speaker_id = r.u32()?;
    let offset = r.pos;
    let gst_id = match r.u8()? {
        0 => None,
        1 => Some(r.u32()?),
        value => {
            return Err(DecodeError::BadByte {
                offset,
                field: "gst_flag",
                value,
            })
        }
    };
    let count = r.u32()? as usize;
    let mut tokens = Vec::with_capacity(count.min(bytes.len()));
    for _ in 0..count {
        let len = r.u8()? as usize;
        let offset = r.pos;
        let raw = r.take(len)?;
        let symbol = String::from_utf8_lossy(raw).into_owned();
        let phone: Phone = symbol
            .parse()
            .map_err(|_| DecodeError::BadPhone { offset, symbol })?;
        tokens.push(phone);
    }
    let contour = read_contour(&mut r)?;
    let frames = contour.len();
    let offset = r.pos;
    let alignment = match r.u8()? {
        KIND_HARD => {
            let raw = r.take(checked_len(frames, 4, &r)?)?;
            let path = raw
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            AlignmentMap::hard(tokens.len(), path)
        }
        KIND_SOFT => {
            let n = tokens.len().checked_mul(frames).ok_or(DecodeError::Truncated {
                offset: r.pos,
                needed: usize::MAX,
                available: r.remaining(),
            })?;
            let raw = r.take(checked_len(n, 4, &r)?)?;
            AlignmentMap::soft(tokens.len(), frames, f32s(raw))
        }
        value => {
            return Err(DecodeError::BadByte {
                offset,
                field: "alignment_kind",
                value,
            })
        }
    };
    if r.remaining() > 0 {
        return Err(DecodeError::TrailingBytes {
            offset: r.pos,
            extra: r.remaining(),
        });
    }
    let bundle = ConditioningBundle {
        clock,
        phonemes: PhonemeSequence::new(tokens),
        contour,
        alignment,
        speaker_id,
        gst_id,
    };
    let violations = validate_bundle(&bundle);
    if !violations.is_empty() {
        return Err(DecodeError::Invariant(violations));
    }
    Ok(bundle)
}

/// The standalone contour chunk: `frame_count u32 | f0 f32 * n | voiced bitset`.
pub fn encode_contour_chunk(contour: &PitchContour) -> Vec<u8> {
    let mut out = Vec::new();
    write_contour(&mut out, contour);
    out
}

pub fn decode_contour_chunk(bytes: &[u8]) -> Result<PitchContour, DecodeError> {
    let mut r = Reader::new(bytes);
    let contour = read_contour(&mut r)?;
    if r.remaining() > 0 {
        return Err(DecodeError::TrailingBytes {
            offset: r.pos,
            extra: r.remaining(),
        });
    }
    Ok(contour)
}

fn write_contour(out: &mut Vec<u8>, contour: &PitchContour) {
    out.extend_from_slice(&(contour.len() as u32).to_le_bytes());
    for &f in &contour.f0 {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out.extend(pack_bits(&contour.voiced));
}

fn read_contour(r: &mut Reader<'_>) -> Result<PitchContour, DecodeError> {
    let frames = r.u32()? as usize;
    let raw = r.take(checked_len(frames, 4, r)?)?;
    let f0 = f32s(raw);
    let offset = r.pos;
    let bits = r.take(frames.div_ceil(8))?;
    if !frames.is_multiple_of(8) {
        let last = bits[bits.len() - 1];
        if last >> (frames % 8) != 0 {
            return Err(DecodeError::BadByte {
                offset: offset + bits.len() - 1,
                field: "voiced padding",
                value: last,
            });
        }
    }
    let voiced = (0..frames).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    Ok(PitchContour::new(f0, voiced))
}

/// LSB-first bit packing.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

fn f32s(raw: &[u8]) -> Vec<f32> {
    raw.chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn checked_len(count: usize, width: usize, r: &Reader<'_>) -> Result<usize, DecodeError> {
    count.checked_mul(width).ok_or(DecodeError::Truncated {
        offset: r.pos,
        needed: usize::MAX,
        available: r.remaining(),
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if n > self.remaining() {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n,
                available: self.remaining(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::tests::small_bundle;

    #[test]
    fn known_layout() {
        let bytes = serialize_bundle(&small_bundle()).unwrap();
        assert_eq!(&bytes[..4], b"MCB1");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &22050u32.to_le_bytes());
        assert_eq!(&bytes[22..26], &7u32.to_le_bytes());
        assert_eq!(bytes[26], 0, "no gst id");
        assert_eq!(&bytes[27..31], &3u32.to_le_bytes());
        assert_eq!(&bytes[31..33], &[1, b'B']);
        assert_eq!(&bytes[33..37], &[3, b'A', b'E', b'1']);
        // header 31 + phones (2 + 4 + 2) + frames 4 + f0 16 + bitset 1 + kind 1 + path 16
        assert_eq!(bytes.len(), 31 + 8 + 4 + 16 + 1 + 1 + 16);
        // voiced = [F, T, T, F] -> 0b0110
        assert_eq!(bytes[31 + 8 + 4 + 16], 0b0110);
    }

    #[test]
    fn empty_contour_is_rejected() {
        let mut b = small_bundle();
        b.contour = PitchContour::default();
        b.alignment = AlignmentMap::hard(3, vec![]);
        assert_eq!(
            serialize_bundle(&b),
            Err(EncodeError::Invalid(vec![Violation::EmptyContour]))
        );
    }

    #[test]
    fn bad_magic() {
        let mut bytes = serialize_bundle(&small_bundle()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert_eq!(
            deserialize_bundle(&bytes),
            Err(DecodeError::BadMagic {
                found: b"XXXX".to_vec()
            })
        );
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = serialize_bundle(&small_bundle()).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match deserialize_bundle(cut) {
            Err(DecodeError::Truncated { offset, needed, available }) => {
                assert_eq!(offset, bytes.len() - 16);
                assert_eq!(needed, 16);
                assert_eq!(available, 13);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hand_edited_voicing_bit_is_an_invariant_error() {
        let mut bytes = serialize_bundle(&small_bundle()).unwrap();
        let bitset = 31 + 8 + 4 + 16;
        // mark frame 0 voiced while its f0 stays 0
        bytes[bitset] |= 1;
        assert_eq!(
            deserialize_bundle(&bytes),
            Err(DecodeError::Invariant(vec![Violation::VoicedWithoutF0 { frame: 0 }]))
        );
    }

    #[test]
    fn gst_id_round_trips() {
        let mut b = small_bundle();
        b.gst_id = Some(42);
        let bytes = serialize_bundle(&b).unwrap();
        assert_eq!(deserialize_bundle(&bytes).unwrap(), b);
    }

    #[test]
    fn trailing_bytes_and_bad_kind() {
        let mut bytes = serialize_bundle(&small_bundle()).unwrap();
        bytes.push(0);
        assert!(matches!(
            deserialize_bundle(&bytes),
            Err(DecodeError::TrailingBytes { extra: 1, .. })
        ));
        let mut bytes = serialize_bundle(&small_bundle()).unwrap();
        let kind = bytes.len() - 17;
        bytes[kind] = 9;
        assert_eq!(
            deserialize_bundle(&bytes),
            Err(DecodeError::BadByte {
                offset: kind,
                field: "alignment_kind",
                value: 9
            })
        );
    }

    #[test]
    fn contour_chunk_round_trip() {
        let c = small_bundle().contour;
        assert_eq!(decode_contour_chunk(&encode_contour_chunk(&c)).unwrap(), c);
    }
}
