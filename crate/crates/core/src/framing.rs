//! MAC framing: fragment a payload into MSDUs, wrap each into an MPDU with
//! a compact header and FCS, and reassemble on receive.
//!
//! MPDU wire layout (little-endian):
//!
//! ```text
//! 0..2   sequence_number (bits 0..12) | fragment_number low nibble (bits 12..16)
//! 2      flags: bit 0 = more_fragments
//! 3      fragment_number high byte
//! 4..n   body
//! n..n+4 FCS = crc32(header ‖ body)
//! ```

use crate::bits::crc32;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// MSDU length of the reference measurement setup.
pub const DEFAULT_MSDU_LENGTH: usize = 2304;
pub const MAX_PSDU_LENGTH: usize = 4095;
pub const HEADER_LEN: usize = 4;
pub const FCS_LEN: usize = 4;
/// Fragment numbers are 12 bits wide (nibble plus extension byte).
pub const MAX_FRAGMENTS: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Msdu {
    pub payload: Vec<u8>,
    pub index: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacHeader {
    pub sequence_number: u16,
    pub fragment_number: u16,
    pub more_fragments: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mpdu {
    pub header: MacHeader,
    pub body: Vec<u8>,
    pub fcs: u32,
}

/// Serialized MPDU, the unit handed to the PHY.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Psdu(pub Vec<u8>);

impl Psdu {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() || bytes.len() > MAX_PSDU_LENGTH {
            return Err(Error::PsduLength(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Split `payload` into chunks of at most `msdu_length` bytes.
pub fn fragment(payload: &[u8], msdu_length: usize) -> Result<Vec<Msdu>> {
    if msdu_length == 0 {
        return Err(Error::ZeroMsduLength);
    }
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let total = payload.len().div_ceil(msdu_length);
    Ok(payload
        .chunks(msdu_length)
        .enumerate()
        .map(|(index, c)| Msdu {
            payload: c.to_vec(),
            index,
            total,
        })
        .collect())
}

impl MacHeader {
    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let word = (self.sequence_number & 0x0fff) | ((self.fragment_number & 0xf) << 12);
        let [lo, hi] = word.to_le_bytes();
        [lo, hi, self.more_fragments as u8, (self.fragment_number >> 4) as u8]
    }

    fn from_bytes(b: &[u8]) -> Self {
        let word = u16::from_le_bytes([b[0], b[1]]);
        Self {
            sequence_number: word & 0x0fff,
            fragment_number: (word >> 12) | ((b[3] as u16) << 4),
            more_fragments: b[2] & 1 == 1,
        }
    }
}

impl Mpdu {
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.body.len() + FCS_LEN
    }
}

/// Wrap one MSDU. Fragments beyond the 12-bit fragment space are rejected.
pub fn build_mpdu(msdu: &Msdu, seq: u16) -> Result<Mpdu> {
    if msdu.total == 0 || msdu.total > MAX_FRAGMENTS || msdu.index >= msdu.total {
        return Err(Error::Config(format!(
            "fragment {} of {} outside the fragment number space",
            msdu.index, msdu.total
        )));
    }
    let header = MacHeader {
        sequence_number: seq & 0x0fff,
        fragment_number: msdu.index as u16,
        more_fragments: msdu.index + 1 < msdu.total,
    };
    let len = HEADER_LEN + msdu.payload.len() + FCS_LEN;
    if len > MAX_PSDU_LENGTH {
        return Err(Error::OversizeMpdu(len));
    }
    let mut covered = header.to_bytes().to_vec();
    covered.extend_from_slice(&msdu.payload);
    Ok(Mpdu {
        header,
        body: msdu.payload.clone(),
        fcs: crc32(&covered),
    })
}

pub fn serialize_mpdu(mpdu: &Mpdu) -> Result<Psdu> {
    if mpdu.wire_len() > MAX_PSDU_LENGTH {
        return Err(Error::OversizeMpdu(mpdu.wire_len()));
    }
    let mut out = Vec::with_capacity(mpdu.wire_len());
    out.extend_from_slice(&mpdu.header.to_bytes());
    out.extend_from_slice(&mpdu.body);
    out.extend_from_slice(&mpdu.fcs.to_le_bytes());
    Psdu::new(out)
}

/// Parse and FCS-check a received PSDU.
pub fn parse_mpdu(psdu: &[u8]) -> Result<Mpdu> {
    if psdu.len() < HEADER_LEN + FCS_LEN {
        return Err(Error::Fcs);
    }
    let (covered, fcs_bytes) = psdu.split_at(psdu.len() - FCS_LEN);
    let fcs = u32::from_le_bytes(fcs_bytes.try_into().unwrap());
    if crc32(covered) != fcs {
        return Err(Error::Fcs);
    }
    Ok(Mpdu {
        header: MacHeader::from_bytes(covered),
        body: covered[HEADER_LEN..].to_vec(),
        fcs,
    })
}

/// Rebuild the payload from FCS-valid MPDUs in any order. Duplicates are
/// tolerated; the first copy of each fragment wins.
///
/// The fragment count is taken from the fragment with `more_fragments`
/// clear. When that fragment is lost the count is unknown and the report
/// lists every gap up to and including one past the highest index seen.
pub fn reassemble(mpdus: &[Mpdu]) -> Result<Vec<u8>> {
    if mpdus.is_empty() {
        return Err(Error::MissingFragments(vec![0]));
    }
    let last = mpdus
        .iter()
        .find(|m| !m.header.more_fragments)
        .map(|m| m.header.fragment_number as usize);
    let highest = mpdus.iter().map(|m| m.header.fragment_number as usize).max().unwrap();
    let total = match last {
        Some(l) => l + 1,
        None => highest + 2,
    };
    let mut slots: Vec<Option<&[u8]>> = vec![None; total];
    for m in mpdus {
        let i = m.header.fragment_number as usize;
        if i < total && slots[i].is_none() {
            slots[i] = Some(&m.body);
        }
    }
    let missing: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.is_none().then_some(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFragments(missing));
    }
    Ok(slots.into_iter().flatten().flatten().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frames(payload: &[u8], len: usize) -> Vec<Psdu> {
        fragment(payload, len)
            .unwrap()
            .iter()
            .map(|m| serialize_mpdu(&build_mpdu(m, 42).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn fragment_counts() {
        assert_eq!(fragment(&[7; 2304], 2304).unwrap().len(), 1);
        let f = fragment(&[7; 5000], 2304).unwrap();
        let lens: Vec<usize> = f.iter().map(|m| m.payload.len()).collect();
        assert_eq!(lens, vec![2304, 2304, 392]);
        assert_eq!(fragment(&[], 2304), Err(Error::EmptyPayload));
        assert_eq!(fragment(&[1], 0), Err(Error::ZeroMsduLength));
    }

    #[test]
    fn psdu_length_for_full_msdu() {
        let p = frames(&[0xAB; 2304], 2304);
        assert_eq!(p[0].len(), 2312);
    }

    #[test]
    fn fcs_covers_header_and_body() {
        let m = build_mpdu(&fragment(b"hello", 10).unwrap()[0], 5).unwrap();
        let mut covered = m.header.to_bytes().to_vec();
        covered.extend_from_slice(&m.body);
        assert_eq!(m.fcs, crc32(&covered));
    }

    #[test]
    fn single_flip_is_fcs_error() {
        let p = frames(&[1, 2, 3, 4, 5, 6, 7, 8, 9], 100).remove(0);
        for bit in 0..p.len() * 8 {
            let mut b = p.0.clone();
            b[bit / 8] ^= 1 << (bit % 8);
            assert_eq!(parse_mpdu(&b), Err(Error::Fcs));
        }
        assert_eq!(parse_mpdu(&p.0[..7]), Err(Error::Fcs));
    }

    #[test]
    fn reverse_order_and_missing() {
        let payload: Vec<u8> = (0..=255).cycle().take(700).collect();
        let mpdus: Vec<Mpdu> = frames(&payload, 300)
            .iter()
            .map(|p| parse_mpdu(&p.0).unwrap())
            .collect();
        let rev: Vec<Mpdu> = mpdus.iter().rev().cloned().collect();
        assert_eq!(reassemble(&rev).unwrap(), payload);
        let partial = vec![mpdus[0].clone(), mpdus[2].clone()];
        assert_eq!(reassemble(&partial), Err(Error::MissingFragments(vec![1])));
        let one: Vec<Mpdu> = frames(&[9; 10], 2304)
            .iter()
            .map(|p| parse_mpdu(&p.0).unwrap())
            .collect();
        assert_eq!(reassemble(&one).unwrap(), vec![9; 10]);
    }

    #[test]
    fn more_fragments_flag() {
        let mpdus: Vec<Mpdu> = fragment(&[0; 10], 4)
            .unwrap()
            .iter()
            .map(|m| build_mpdu(m, 1).unwrap())
            .collect();
        let flags: Vec<bool> = mpdus.iter().map(|m| m.header.more_fragments).collect();
        assert_eq!(flags, vec![true, true, false]);
        assert!(mpdus.iter().all(|m| m.header.sequence_number == 1));
    }

    #[test]
    fn oversize_rejected() {
        let m = Msdu {
            payload: vec![0; 4090],
            index: 0,
            total: 1,
        };
        assert_eq!(build_mpdu(&m, 0), Err(Error::OversizeMpdu(4098)));
    }

    #[test]
    fn one_mebibyte_at_full_msdu_length() {
        let payload: Vec<u8> = (0..1usize << 20).map(|i| (i * 31 % 251) as u8).collect();
        let mpdus: Vec<Mpdu> = frames(&payload, 2304)
            .iter()
            .map(|p| parse_mpdu(&p.0).unwrap())
            .collect();
        assert_eq!(reassemble(&mpdus).unwrap(), payload);
    }

    #[test]
    fn fragment_number_space_is_bounded() {
        let m = Msdu {
            payload: vec![0],
            index: MAX_FRAGMENTS,
            total: MAX_FRAGMENTS + 1,
        };
        assert!(build_mpdu(&m, 0).is_err());
        let m = Msdu {
            payload: vec![0],
            index: 300,
            total: 301,
        };
        let p = serialize_mpdu(&build_mpdu(&m, 0).unwrap()).unwrap();
        assert_eq!(parse_mpdu(&p.0).unwrap().header.fragment_number, 300);
    }

    #[test]
    fn lost_last_fragment_is_reported() {
        let mpdus: Vec<Mpdu> = frames(&[5; 30], 10).iter().map(|p| parse_mpdu(&p.0).unwrap()).collect();
        assert_eq!(reassemble(&mpdus[..2]), Err(Error::MissingFragments(vec![2])));
        assert_eq!(reassemble(&[]), Err(Error::MissingFragments(vec![0])));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn chain_is_byte_exact(
            payload in proptest::collection::vec(any::<u8>(), 1..4000),
            len in prop_oneof![Just(1usize), Just(100), Just(2304)],
        ) {
            let mpdus: Vec<Mpdu> = frames(&payload, len)
                .iter()
                .map(|p| parse_mpdu(&p.0).unwrap())
                .collect();
            prop_assert_eq!(reassemble(&mpdus).unwrap(), payload);
        }
    }
}
