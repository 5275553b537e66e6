//! Namespaced unigram/bigram features hashed into a fixed 50,000-slot space.

use crate::logdata::QueryEvent;

/// Width of the hashed feature space.
pub const FEATURE_DIM: usize = 50_000;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Bucket of a namespaced feature string.
pub fn feature_index(feature: &str) -> u32 {
    (fnv1a64(feature.as_bytes()) % FEATURE_DIM as u64) as u32
}

/// Binary sparse vector: strictly increasing indices below [`FEATURE_DIM`],
/// every present index has value 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseVector {
    indices: Vec<u32>,
}

impl SparseVector {
    /// Sorts and deduplicates; panics if any index is out of range.
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        assert!(indices.last().is_none_or(|&i| (i as usize) < FEATURE_DIM), "feature index out of range");
        SparseVector { indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lowercased maximal runs of `[a-z0-9]`. Everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        let c = c.to_ascii_lowercase();
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn strip_scheme(url: &str) -> &str {
    match url.find("://") {
        Some(pos) => &url[pos + 3..],
        None => url,
    }
}

fn push_ngrams(out: &mut Vec<String>, text: &str, uni: &str, bi: Option<&str>) {
    let tokens = tokenize(text);
    for t in &tokens {
        out.push(format!("{uni}:{t}"));
    }
    if let Some(bi) = bi {
        for pair in tokens.windows(2) {
            out.push(format!("{bi}:{}_{}", pair[0], pair[1]));
        }
    }
}

/// The namespaced feature strings of an event, before hashing. May contain
/// duplicates.
pub fn feature_strings(e: &QueryEvent) -> Vec<String> {
    let mut out = Vec::new();
    push_ngrams(&mut out, &e.text, "q", Some("qb"));
    for page in &e.results {
        push_ngrams(&mut out, strip_scheme(&page.url), "u", None);
        push_ngrams(&mut out, &page.title, "t", Some("tb"));
        push_ngrams(&mut out, &page.snippet, "s", Some("sb"));
        for tag in &page.concept_tags {
            out.push(format!("k:{tag}"));
        }
    }
    out
}

fn fnv_extend(h: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(h, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn fnv_extend_lower(h: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(h, |h, &b| (h ^ u64::from(b.to_ascii_lowercase())).wrapping_mul(FNV_PRIME))
}

fn bucket(h: u64) -> u32 {
    (h % FEATURE_DIM as u64) as u32
}

/// Byte slices of the tokens [`tokenize`] would return, not yet lowercased.
fn raw_tokens(text: &str) -> impl Iterator<Item = &[u8]> {
    text.as_bytes().split(|b| !b.is_ascii_alphanumeric()).filter(|t| !t.is_empty())
}

/// Same buckets as hashing the [`push_ngrams`] strings, without building them.
fn push_hashed(out: &mut Vec<u32>, text: &str, uni: &str, bi: Option<&str>) {
    let uni_prefix = fnv_extend(fnv_extend(FNV_OFFSET, uni.as_bytes()), b":");
    let bi_prefix = bi.map(|b| fnv_extend(fnv_extend(FNV_OFFSET, b.as_bytes()), b":"));
    let mut prev: Option<&[u8]> = None;
    for t in raw_tokens(text) {
        out.push(bucket(fnv_extend_lower(uni_prefix, t)));
        if let (Some(prefix), Some(p)) = (bi_prefix, prev) {
            out.push(bucket(fnv_extend_lower(fnv_extend(fnv_extend_lower(prefix, p), b"_"), t)));
        }
        prev = Some(t);
    }
}

/// Hashed binary feature vector of a query event: the buckets of
/// [`feature_strings`].
pub fn featurize(e: &QueryEvent) -> SparseVector {
    let mut out = Vec::new();
    push_hashed(&mut out, &e.text, "q", Some("qb"));
    let tag_prefix = fnv_extend(FNV_OFFSET, b"k:");
    for page in &e.results {
        push_hashed(&mut out, strip_scheme(&page.url), "u", None);
        push_hashed(&mut out, &page.title, "t", Some("tb"));
        push_hashed(&mut out, &page.snippet, "s", Some("sb"));
        for tag in &page.concept_tags {
            out.push(bucket(fnv_extend(tag_prefix, tag.as_bytes())));
        }
    }
    SparseVector::from_indices(out)
}
