//! Ratcliff/Obershelp ("gestalt") string similarity.
//!
//! The matched-character count M is the length of the longest common
//! substring plus, recursively, the matches to its left and right. The
//! similarity is `2·M / (|a| + |b|)`, computed over Unicode scalar values.

use std::collections::HashMap;

/// Similarity in `[0, 1]`; two empty strings are identical (1.0).
///
/// Longest-block tie-breaking makes the raw recursion order dependent, so the
/// larger of the two argument orders is returned, which keeps the measure
/// symmetric.
pub fn ratcliff_obershelp(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let m = matched_chars(&a, &b).max(matched_chars(&b, &a));
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

/// Cheap upper bound on [`ratcliff_obershelp`] from the character multiset
/// intersection.
pub fn similarity_upper_bound(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la + lb == 0 {
        return 1.0;
    }
    let mut counts: HashMap<char, isize> = HashMap::new();
    for c in a.chars() {
        *counts.entry(c).or_default() += 1;
    }
    let mut common = 0usize;
    for c in b.chars() {
        if let Some(n) = counts.get_mut(&c) {
            if *n > 0 {
                *n -= 1;
                common += 1;
            }
        }
    }
    2.0 * common as f64 / (la + lb) as f64
}

/// Total matched characters for one argument order.
pub fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    let mut row = vec![0usize; b.len() + 1];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (len, i, j) = longest_block(a, b, alo, ahi, blo, bhi, &mut row);
        if len == 0 {
            continue;
        }
        total += len;
        stack.push((alo, i, blo, j));
        stack.push((i + len, ahi, j + len, bhi));
    }
    total
}

/// Longest common block of `a[alo..ahi]` and `b[blo..bhi]`, earliest in `a`
/// then earliest in `b`. Returns (length, start in a, start in b).
fn longest_block(
    a: &[char],
    b: &[char],
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
    row: &mut [usize],
) -> (usize, usize, usize) {
    let (mut best, mut bi, mut bj) = (0, alo, blo);
    row[blo..=bhi].iter_mut().for_each(|x| *x = 0);
    for (i, ai) in a.iter().enumerate().take(ahi).skip(alo) {
        // iterate j downwards so row[j] still holds the previous row's value
        for j in (blo..bhi).rev() {
            row[j + 1] = if *ai == b[j] { row[j] + 1 } else { 0 };
        }
        for j in blo..bhi {
            let len = row[j + 1];
            if len > best {
                best = len;
                bi = i + 1 - len;
                bj = j + 1 - len;
            }
        }
    }
    (best, bi, bj)
}
