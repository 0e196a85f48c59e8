//! Reference implementations used as oracles by the integration tests.
//! They follow the letter-level definitions and share no code with the
//! library's graph search.

#![allow(dead_code)]

use std::collections::BTreeSet;

use unavoidable::{Letter, Pattern};

fn factors(p: &Pattern) -> BTreeSet<(u32, u32)> {
    p.letters().windows(2).map(|w| (w[0].0, w[1].0)).collect()
}

/// Whether there are `n > 0` and letters `a_1..a_n`, `b_1..b_n` such that
/// `x a_1, b_1 a_1, b_1 a_2, b_2 a_2, ..., b_n a_n, b_n y` are all factors.
/// The `a` letters and `b` letters reachable along such chains are grown to
/// a fixed point.
pub fn chain_connects(p: &Pattern, x: Letter, y: Letter) -> bool {
    let f = factors(p);
    let mut seconds: BTreeSet<u32> = f.iter().filter(|&&(u, _)| u == x.0).map(|&(_, v)| v).collect();
    let mut firsts: BTreeSet<u32> = BTreeSet::new();
    loop {
        let new_firsts: BTreeSet<u32> = f
            .iter()
            .filter(|&&(_, v)| seconds.contains(&v))
            .map(|&(u, _)| u)
            .collect();
        let new_seconds: BTreeSet<u32> = f
            .iter()
            .filter(|&&(u, _)| new_firsts.contains(&u))
            .map(|&(_, v)| v)
            .collect();
        let grew = !new_firsts.is_subset(&firsts) || !new_seconds.is_subset(&seconds);
        firsts.extend(new_firsts);
        seconds.extend(new_seconds);
        if !grew {
            break;
        }
    }
    firsts.iter().any(|&b| f.contains(&(b, y.0)))
}

pub fn chain_free(p: &Pattern, x: Letter) -> bool {
    p.contains(x) && !chain_connects(p, x, x)
}

pub fn chain_free_set(p: &Pattern, xs: &BTreeSet<Letter>) -> bool {
    xs.iter().all(|&x| p.contains(x)) && xs.iter().all(|&x| xs.iter().all(|&y| !chain_connects(p, x, y)))
}

/// Whether some factor of `w` is a square `uu`.
pub fn has_square(w: &[u32]) -> bool {
    (0..w.len()).any(|i| (1..=(w.len() - i) / 2).any(|l| w[i..i + l] == w[i + l..i + 2 * l]))
}

/// Every word of `[r]^n` in lexicographic order.
pub fn all_words(r: u32, n: usize) -> impl Iterator<Item = Vec<u32>> {
    let total = (r as u64).pow(n as u32);
    (0..total).map(move |mut code| {
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = (code % r as u64) as u32;
            code /= r as u64;
        }
        w
    })
}
