use alloc::string::String;
use alloc::vec::Vec;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `std`'s
/// randomly keyed hasher.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Lowercased words split on every non-alphanumeric character.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.chars().flat_map(char::to_lowercase).collect())
}

/// Maps text to vocabulary bucket ids.
pub fn tokenize(text: &str, vocab_size: usize) -> Vec<usize> {
    words(text)
        .map(|w| (fnv1a(w.as_bytes()) % vocab_size as u64) as usize)
        .collect()
}
