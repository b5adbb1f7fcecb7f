//! Brute-force retrieval oracle built from first principles: character
//! trigram counts hashed with FNV-1a, compared as exact rationals.
#![allow(dead_code)]

use echo_core::catalog::Catalog;

const OFFSET: u64 = 14695981039346656037;
const PRIME: u64 = 1099511628211;

fn fnv(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

fn padded(text: &str) -> Vec<char> {
    let lowered = text.to_lowercase();
    let words: Vec<String> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    format!(" {} ", words.join(" "))
        .replace("  ", " ")
        .chars()
        .collect()
}

pub fn counts(text: &str) -> [u64; 256] {
    let mut out = [0u64; 256];
    for w in padded(text).windows(3) {
        let s: String = w.iter().collect();
        out[(fnv(s.as_bytes()) % 256) as usize] += 1;
    }
    out
}

/// cos^2 as a fraction `dot^2 / (|q|^2 |r|^2)`; counts are non-negative so
/// ordering by cos^2 is ordering by cos.
fn score(q: &[u64; 256], r: &[u64; 256]) -> (u128, u128) {
    let dot: u128 = q.iter().zip(r).map(|(a, b)| u128::from(a * b)).sum();
    let nq: u128 = q.iter().map(|a| u128::from(a * a)).sum();
    let nr: u128 = r.iter().map(|a| u128::from(a * a)).sum();
    (dot * dot, nq * nr)
}

/// Asset ids ranked best first, ties by ascending id.
pub fn rank(catalog: &Catalog, category: Option<&str>, query: &str) -> Vec<String> {
    let q = counts(query);
    let mut scored: Vec<((u128, u128), String)> = catalog
        .records()
        .iter()
        .filter(|r| category.is_none_or(|c| r.category == c))
        .map(|r| (score(&q, &counts(&r.description)), r.asset_id.clone()))
        .collect();
    scored.sort_by(|((an, ad), aid), ((bn, bd), bid)| {
        (bn * ad).cmp(&(an * bd)).then_with(|| aid.cmp(bid))
    });
    scored.into_iter().map(|(_, id)| id).collect()
}

/// Free-text queries in the voice of category-select descriptions.
pub const QUERIES: [&str; 17] = [
    "A comfortable sofa in a neutral light gray fabric with soft cushions.",
    "A plush recliner chair in charcoal with a footrest.",
    "A large flat screen TV with a thin black bezel for an immersive cinema experience.",
    "A white projector screen that turns the wall into a home cinema.",
    "A compact black surround sound speaker on a stand.",
    "A long black soundbar under the television.",
    "A framed classic movie poster for a cinema theme.",
    "A wooden ship wheel wall decoration with brass details.",
    "A framed print of calm ocean waves in blue tones.",
    "A small stone water fountain whose flowing water promotes relaxation.",
    "A navy and white striped rug with a seaside style.",
    "A round rug in layered ocean blues with a wave pattern.",
    "A tall fiddle leaf fig with large green leaves.",
    "A bamboo palm in a planter.",
    "A hanging fern with trailing green fronds.",
    "A small succulent in a white pot for a tabletop.",
    "A floor lamp with a warm shade for reading.",
];
