//! Canonical byte encoding primitives shared by the ledger artifacts:
//! big-endian integers, IEEE-754 bit patterns for 64-bit reals, raw
//! 32-byte digests, and explicit length prefixes. Field order is fixed by
//! the caller, so equal values always encode to equal bytes and distinct
//! valid structures encode to distinct bytes.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    /// IEEE-754 bit pattern, big-endian; injective on all payload values
    /// including negative zero and NaN payloads.
    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_be_bytes());
    }

    pub fn put_digest(&mut self, v: &[u8; 32]) {
        self.buf.extend_from_slice(v);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, at: 0 }
    }

    pub fn offset(&self) -> usize {
        self.at
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.at + len > self.data.len() {
            return Err(Error::Decode {
                offset: self.at,
                message: format!(
                    "need {len} bytes for {what}, {} remain",
                    self.data.len() - self.at
                ),
            });
        }
        let slice = &self.data[self.at..self.at + len];
        self.at += len;
        Ok(slice)
    }

    pub fn take_u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn take_u32(&mut self, what: &str) -> Result<u32> {
        let raw = self.take(4, what)?;
        Ok(u32::from_be_bytes(raw.try_into().expect("length checked")))
    }

    pub fn take_u64(&mut self, what: &str) -> Result<u64> {
        let raw = self.take(8, what)?;
        Ok(u64::from_be_bytes(raw.try_into().expect("length checked")))
    }

    pub fn take_f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_bits(self.take_u64(what)?))
    }

    pub fn take_digest(&mut self, what: &str) -> Result<[u8; 32]> {
        let raw = self.take(32, what)?;
        Ok(raw.try_into().expect("length checked"))
    }

    /// Fails unless every input byte has been consumed.
    pub fn expect_end(&self) -> Result<()> {
        if self.at == self.data.len() {
            Ok(())
        } else {
            Err(Error::Decode {
                offset: self.at,
                message: format!("{} trailing bytes", self.data.len() - self.at),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_field_kind() {
        let mut w = ByteWriter::new();
        w.put_u8(7);
        w.put_u32(0xDEAD_BEEF);
        w.put_u64(u64::MAX - 1);
        w.put_f64(-0.0);
        w.put_f64(1.5e300);
        w.put_digest(&[9u8; 32]);
        let bytes = w.into_bytes();

        let mut r = ByteReader::new(&bytes);
        assert_eq!(r.take_u8("a").unwrap(), 7);
        assert_eq!(r.take_u32("b").unwrap(), 0xDEAD_BEEF);
        assert_eq!(r.take_u64("c").unwrap(), u64::MAX - 1);
        assert_eq!(r.take_f64("d").unwrap().to_bits(), (-0.0f64).to_bits());
        assert_eq!(r.take_f64("e").unwrap(), 1.5e300);
        assert_eq!(r.take_digest("f").unwrap(), [9u8; 32]);
        r.expect_end().unwrap();
    }

    #[test]
    fn integers_encode_big_endian() {
        let mut w = ByteWriter::new();
        w.put_u32(1);
        assert_eq!(w.into_bytes(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn truncated_input_reports_offset() {
        let mut r = ByteReader::new(&[1, 2]);
        let err = r.take_u32("field").unwrap_err();
        match err {
            Error::Decode { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let r = ByteReader::new(&[1]);
        assert!(r.expect_end().is_err());
    }
}
