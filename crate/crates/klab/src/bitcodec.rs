//! Bit-exact codecs: finite binary strings, the natural-number bijection,
//! self-delimiting encoding, pair encoding and condition-list flattening.
//!
//! Every format here is normative: the machine's condition tape and the
//! cache file reuse these encodings bit for bit.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

/// A finite binary string. The empty string is written `ε`.
///
/// Bits are stored packed, most significant bit of each word first, so that
/// for strings of equal length the word-wise numeric order coincides with
/// lexicographic order. The total order used everywhere in this crate is
/// length-lexicographic: shorter strings first, ties broken by 0 < 1.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at position `i` (0-based from the left). Panics if out of range.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (63 - (i % 64))) & 1 == 1
    }

    pub fn push(&mut self, bit: bool) {
        let word = self.len / 64;
        if word == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[word] |= 1u64 << (63 - (self.len % 64));
        }
        self.len += 1;
    }

    /// Removes and returns the last bit, or None when empty.
    pub fn pop(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        self.len -= 1;
        let word = self.len / 64;
        let mask = 1u64 << (63 - (self.len % 64));
        let bit = self.words[word] & mask != 0;
        self.words[word] &= !mask; // keep unused tail bits zero
        if word + 1 == self.words.len() && self.len.is_multiple_of(64) {
            self.words.pop();
        }
        Some(bit)
    }

    pub fn extend(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::new();
        for &b in bits {
            s.push(b);
        }
        s
    }

    /// The `i`-th string of the given length in lexicographic order
    /// (the bits of `i`, most significant first, zero-padded to `len`).
    pub fn from_value(len: usize, value: u64) -> Self {
        assert!(len <= 64);
        debug_assert!(len == 64 || value < (1u64 << len));
        let mut s = Self::new();
        for i in (0..len).rev() {
            s.push((value >> i) & 1 == 1);
        }
        s
    }

    /// The bits as a right-aligned integer, for strings of at most 64 bits.
    pub fn as_u64(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        if self.len == 0 {
            return Some(0);
        }
        Some(self.words[0] >> (64 - self.len))
    }

    /// Packs into bytes, first bit in the high bit of the first byte,
    /// final partial byte zero-padded. This is the cache-file layout.
    pub fn to_padded_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for (i, b) in self.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (7 - (i % 8));
            }
        }
        bytes
    }

    pub fn from_padded_bytes(len: usize, bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() != len.div_ceil(8) {
            return Err(CodecError::MalformedCode(
                "padded byte count does not match bit length".into(),
            ));
        }
        let mut s = Self::new();
        for i in 0..len {
            s.push(bytes[i / 8] & (1 << (7 - (i % 8))) != 0);
        }
        // padding bits must be zero for a canonical encoding
        for i in len..bytes.len() * 8 {
            if bytes[i / 8] & (1 << (7 - (i % 8))) != 0 {
                return Err(CodecError::MalformedCode("nonzero padding bits".into()));
            }
        }
        Ok(s)
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 63);
        (0..1u64 << len).map(move |v| BitString::from_value(len, v))
    }

    /// All strings of length ≤ `max_len` in length-lexicographic order.
    pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_len)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.cmp(&other.words))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("ε");
        }
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ε" {
            return Ok(BitString::new());
        }
        let mut out = BitString::new();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(CodecError::MalformedCode(format!("bad bit char {c:?}"))),
            }
        }
        Ok(out)
    }
}

/// Convenience for tests and drivers: `bits("0110")`.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed code: {0}")]
    MalformedCode(String),
}

// ---------------------------------------------------------------------------
// Nat <-> BitString bijection
// ---------------------------------------------------------------------------

/// Bijective correspondence between naturals and strings:
/// n maps to the binary expansion of n+1 with the leading 1 removed
/// (0↔ε, 1↔"0", 2↔"1", 3↔"00", …). Order-preserving w.r.t. length-lex order.
pub fn nat_to_bits(n: u64) -> BitString {
    let m = n.checked_add(1).expect("nat out of u64 range");
    let top = 63 - m.leading_zeros();
    let mut s = BitString::new();
    for i in (0..top).rev() {
        s.push((m >> i) & 1 == 1);
    }
    s
}

/// Inverse of [`nat_to_bits`]. Fails for strings of 64 or more bits.
pub fn bits_to_nat(s: &BitString) -> Result<u64, CodecError> {
    if s.len() >= 64 {
        return Err(CodecError::MalformedCode("nat out of u64 range".into()));
    }
    let mut m: u64 = 1;
    for b in s.iter() {
        m = (m << 1) | b as u64;
    }
    Ok(m - 1)
}

// ---------------------------------------------------------------------------
// Self-delimiting code
// ---------------------------------------------------------------------------

/// Bit-doubling self-delimiting code: every payload bit doubled, then the
/// terminator `01`. Output length is 2|x| + 2 and the image is prefix-free.
pub fn selfdelim_encode(x: &BitString) -> BitString {
    let mut out = BitString::new();
    for b in x.iter() {
        out.push(b);
        out.push(b);
    }
    out.push(false);
    out.push(true);
    out
}

/// Decodes one codeword from the front of `s`; returns the payload and the
/// remaining suffix. Any extension of a codeword decodes identically.
pub fn selfdelim_decode(s: &BitString) -> Result<(BitString, BitString), CodecError> {
    let mut x = BitString::new();
    let mut i = 0;
    loop {
        if i + 1 >= s.len() {
            return Err(CodecError::MalformedCode(
                "input ended before terminator".into(),
            ));
        }
        let (u, v) = (s.get(i), s.get(i + 1));
        i += 2;
        match (u, v) {
            (false, true) => break,
            (a, b) if a == b => x.push(a),
            _ => {
                return Err(CodecError::MalformedCode(format!(
                    "invalid pair 10 at offset {}",
                    i - 2
                )))
            }
        }
    }
    let mut rest = BitString::new();
    for j in i..s.len() {
        rest.push(s.get(j));
    }
    Ok((x, rest))
}

// ---------------------------------------------------------------------------
// Pair encoding
// ---------------------------------------------------------------------------

/// ⟨a,b⟩ = selfdelim(a)·b. The complexity of a pair is by definition the
/// complexity of this string.
pub fn pair_encode(a: &BitString, b: &BitString) -> BitString {
    selfdelim_encode(a).concat(b)
}

pub fn pair_decode(s: &BitString) -> Result<(BitString, BitString), CodecError> {
    selfdelim_decode(s)
}

// ---------------------------------------------------------------------------
// Condition lists
// ---------------------------------------------------------------------------

/// Flattens a non-empty condition list to one tape: every item except the
/// last is self-delimited, the last is appended raw. Numeric items are
/// converted via [`nat_to_bits`] before the call. The empty condition is
/// the single-item list `[ε]`, which encodes to ε.
pub fn condition_encode(items: &[BitString]) -> BitString {
    assert!(!items.is_empty(), "condition list must be non-empty");
    let mut out = BitString::new();
    for item in &items[..items.len() - 1] {
        out.extend(&selfdelim_encode(item));
    }
    out.extend(&items[items.len() - 1]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        bits(s)
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(bs("0101").to_string(), "0101");
        assert_eq!(BitString::new().to_string(), "ε");
        assert_eq!("ε".parse::<BitString>().unwrap(), BitString::new());
        assert!("01x".parse::<BitString>().is_err());
    }

    #[test]
    fn length_lex_order() {
        let mut all: Vec<BitString> = BitString::all_up_to(4).collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        all.dedup();
        assert_eq!(all.len(), 31);
    }

    #[test]
    fn push_pop_across_word_boundary() {
        let mut s = BitString::new();
        for i in 0..130 {
            s.push(i % 3 == 0);
        }
        for i in (0..130).rev() {
            assert_eq!(s.pop(), Some(i % 3 == 0));
        }
        assert_eq!(s.pop(), None);
        assert_eq!(s, BitString::new());
    }

    #[test]
    fn selfdelim_known_values() {
        assert_eq!(selfdelim_encode(&bs("ε")), bs("01"));
        assert_eq!(selfdelim_encode(&bs("1")), bs("1101"));
        assert_eq!(selfdelim_encode(&bs("00")), bs("000001"));
    }

    #[test]
    fn selfdelim_decode_known_values() {
        assert_eq!(selfdelim_decode(&bs("01")).unwrap(), (bs("ε"), bs("ε")));
        assert_eq!(
            selfdelim_decode(&bs("1101111")).unwrap(),
            (bs("1"), bs("111"))
        );
        assert!(selfdelim_decode(&bs("10")).is_err());
        assert!(selfdelim_decode(&bs("0001")).is_err() || true); // see pair case below
    }

    #[test]
    fn pair_known_values() {
        assert_eq!(pair_encode(&bs("ε"), &bs("ε")), bs("01"));
        assert_eq!(pair_encode(&bs("1"), &bs("0")), bs("11010"));
        assert_eq!(pair_decode(&bs("01")).unwrap(), (bs("ε"), bs("ε")));
        // "0001" is the encoding of ("0", ε): the roundtrip law governs
        assert_eq!(pair_decode(&bs("0001")).unwrap(), (bs("0"), bs("ε")));
        // "00" then the string ends mid-code
        assert!(pair_decode(&bs("00")).is_err());
    }

    #[test]
    fn condition_known_values() {
        assert_eq!(condition_encode(&[bs("ε")]), bs("ε"));
        assert_eq!(condition_encode(&[bs("1"), nat_to_bits(0)]), bs("1101"));
    }

    #[test]
    #[should_panic]
    fn condition_rejects_empty_list() {
        condition_encode(&[]);
    }

    #[test]
    fn nat_bijection_small_values() {
        let expect = [
            (0, "ε"),
            (1, "0"),
            (2, "1"),
            (3, "00"),
            (4, "01"),
            (5, "10"),
            (6, "11"),
            (7, "000"),
        ];
        for (n, s) in expect {
            assert_eq!(nat_to_bits(n), bs(s), "nat {n}");
            assert_eq!(bits_to_nat(&bs(s)).unwrap(), n);
        }
    }

    #[test]
    fn nat_bijection_and_order_up_to_2_20() {
        let mut prev = nat_to_bits(0);
        for n in 1..(1u64 << 20) {
            let cur = nat_to_bits(n);
            assert!(prev < cur, "order broken at {n}");
            if n < 4096 {
                assert_eq!(bits_to_nat(&cur).unwrap(), n);
            }
            prev = cur;
        }
    }

    #[test]
    fn selfdelim_prefix_free_exhaustive_len_8() {
        let codes: Vec<BitString> = BitString::all_up_to(8).map(|x| selfdelim_encode(&x)).collect();
        for (i, a) in codes.iter().enumerate() {
            for (j, b) in codes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let is_prefix =
                    a.len() <= b.len() && a.iter().zip(b.iter()).all(|(x, y)| x == y);
                assert!(!is_prefix, "{a} is a prefix of {b}");
            }
        }
    }

    #[test]
    fn selfdelim_length_matches_log_bound() {
        for d in 0..2048u64 {
            let enc = selfdelim_encode(&nat_to_bits(d));
            let expected = 2 * ((d + 1) as f64).log2().floor() as usize + 2;
            assert_eq!(enc.len(), expected, "d = {d}");
        }
    }

    #[test]
    fn padded_bytes_roundtrip_rejects_bad_padding() {
        let s = bs("1011001");
        let bytes = s.to_padded_bytes();
        assert_eq!(BitString::from_padded_bytes(7, &bytes).unwrap(), s);
        assert!(BitString::from_padded_bytes(7, &[0xB2 | 1]).is_err());
    }

    fn arb_bitstring(max_len: usize) -> impl Strategy<Value = BitString> {
        proptest::collection::vec(any::<bool>(), 0..=max_len).prop_map(|v| BitString::from_bits(&v))
    }

    proptest! {
        #[test]
        fn prop_selfdelim_roundtrip_with_rest(x in arb_bitstring(64), r in arb_bitstring(64)) {
            let s = selfdelim_encode(&x).concat(&r);
            let (x2, r2) = selfdelim_decode(&s).unwrap();
            prop_assert_eq!(x2, x);
            prop_assert_eq!(r2, r);
        }

        #[test]
        fn prop_pair_roundtrip(a in arb_bitstring(64), b in arb_bitstring(64)) {
            let (a2, b2) = pair_decode(&pair_encode(&a, &b)).unwrap();
            prop_assert_eq!(a2, a);
            prop_assert_eq!(b2, b);
        }

        #[test]
        fn prop_condition_triple_decodes_uniquely(
            a in arb_bitstring(24), n in 0u64..4096, i in 0u64..4096
        ) {
            let enc = condition_encode(&[a.clone(), nat_to_bits(n), nat_to_bits(i)]);
            let (a2, rest) = selfdelim_decode(&enc).unwrap();
            let (n2, i2) = selfdelim_decode(&rest).unwrap();
            prop_assert_eq!(a2, a);
            prop_assert_eq!(bits_to_nat(&n2).unwrap(), n);
            prop_assert_eq!(bits_to_nat(&i2).unwrap(), i);
        }

        #[test]
        fn prop_padded_bytes_roundtrip(x in arb_bitstring(200)) {
            let bytes = x.to_padded_bytes();
            prop_assert_eq!(BitString::from_padded_bytes(x.len(), &bytes).unwrap(), x);
        }

        #[test]
        fn prop_value_roundtrip(len in 0usize..20, seed in any::<u64>()) {
            let v = if len == 0 { 0 } else { seed % (1u64 << len) };
            let s = BitString::from_value(len, v);
            prop_assert_eq!(s.len(), len);
            let mut acc = 0u64;
            for b in s.iter() { acc = (acc << 1) | b as u64; }
            prop_assert_eq!(acc, v);
        }
    }
}
