//! The mod 2 Steenrod algebra in the admissible (Serre-Cartan) basis.
//!
//! Words `Sq^{i_1} ... Sq^{i_k}` are rewritten to sums of admissible words
//! with the Adem relations
//!
//! ```text
//! Sq^i Sq^j -> sum_{k=0}^{i/2} binom(j-k-1, i-2k) Sq^{i+j-k} Sq^k    (0 < i < 2j)
//! ```
//!
//! always rewriting the leftmost inadmissible pair first. A word acts on an
//! element by applying its letters right to left.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::F2Vector;

/// A word in the squares; the empty word is `Sq^0 = 1`. Entries are positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct SqWord(Vec<u32>);

impl SqWord {
    /// Builds a word, dropping `Sq^0` letters.
    pub fn new(exponents: impl IntoIterator<Item = u32>) -> Self {
        SqWord(exponents.into_iter().filter(|&i| i != 0).collect())
    }

    pub fn unit() -> Self {
        SqWord(Vec::new())
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_admissible(&self) -> bool {
        self.first_inadmissible().is_none()
    }

    /// Position `h` of the leftmost pair with `i_h < 2 i_{h+1}`.
    pub fn first_inadmissible(&self) -> Option<usize> {
        self.0.windows(2).position(|w| w[0] < 2 * w[1])
    }

    /// `i_1 - i_2 - ... - i_k`; zero for the unit.
    pub fn excess(&self) -> i64 {
        match self.0.split_first() {
            None => 0,
            Some((&first, rest)) => first as i64 - rest.iter().map(|&i| i as i64).sum::<i64>(),
        }
    }

    /// Weighted position sum `sum_h h * i_h`; strictly decreases under every
    /// Adem rewrite.
    pub fn moment(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .map(|(h, &i)| (h as u64 + 1) * i as u64)
            .sum()
    }

    /// The product `Sq^i * self`.
    pub fn prepend(&self, i: u32) -> SqWord {
        SqWord::new(std::iter::once(i).chain(self.0.iter().copied()))
    }

    pub fn concat(&self, other: &SqWord) -> SqWord {
        SqWord(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Parses `"2 2"`, `"Sq^2 Sq^2"` or `"2,2"`.
    pub fn parse(s: &str) -> Result<SqWord> {
        let mut out = Vec::new();
        for tok in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let t = tok.trim_start_matches("Sq^").trim_start_matches("Sq");
            let i: u32 = t
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad Steenrod exponent `{tok}`")))?;
            out.push(i);
        }
        Ok(SqWord::new(out))
    }
}

impl fmt::Display for SqWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|i| format!("Sq^{i}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// An admissible word: `i_h >= 2 i_{h+1}` at every adjacent pair.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct Admissible(SqWord);

impl Admissible {
    pub fn new(word: SqWord) -> Result<Self> {
        if word.is_admissible() {
            Ok(Admissible(word))
        } else {
            Err(Error::InvalidArgument(format!("{word} is not admissible")))
        }
    }

    pub fn unit() -> Self {
        Admissible(SqWord::unit())
    }

    pub fn word(&self) -> &SqWord {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.degree()
    }

    pub fn excess(&self) -> i64 {
        self.0.excess()
    }
}

impl fmt::Display for Admissible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A homogeneous element of A in the admissible basis.
pub type SteenrodElement = F2Vector<Admissible>;

/// Binomial coefficient mod 2 (Lucas: `b` must be a bitwise subset of `a`).
/// Out-of-range arguments give 0.
pub fn binom_mod2(a: i64, b: i64) -> u8 {
    if a < 0 || b < 0 || b > a {
        0
    } else {
        u8::from(a & b == b)
    }
}

/// Right-hand side of the Adem relation for `Sq^i Sq^j`, `0 < i < 2j`.
pub fn adem_relation(i: u32, j: u32) -> F2Vector<SqWord> {
    debug_assert!(i > 0 && i < 2 * j);
    let mut out = F2Vector::zero();
    for k in 0..=i / 2 {
        if binom_mod2(j as i64 - k as i64 - 1, i as i64 - 2 * k as i64) == 1 {
            out.add_term(SqWord::new([i + j - k, k]));
        }
    }
    out
}

fn rewrite_at(word: &SqWord, h: usize) -> F2Vector<SqWord> {
    let w = word.exponents();
    let (i, j) = (w[h], w[h + 1]);
    adem_relation(i, j).map(|pair| {
        SqWord::new(
            w[..h]
                .iter()
                .copied()
                .chain(pair.exponents().iter().copied())
                .chain(w[h + 2..].iter().copied()),
        )
    })
}

fn memo() -> &'static RwLock<HashMap<SqWord, SteenrodElement>> {
    static MEMO: OnceLock<RwLock<HashMap<SqWord, SteenrodElement>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Normal form of a word: the sum of admissible monomials equal to it in A.
pub fn adem_normalize(word: &SqWord) -> SteenrodElement {
    let Some(h) = word.first_inadmissible() else {
        return F2Vector::from_term(Admissible(word.clone()));
    };
    if let Some(hit) = memo().read().expect("memo poisoned").get(word) {
        return hit.clone();
    }
    let mut out = F2Vector::zero();
    for next in rewrite_at(word, h) {
        debug_assert!(next.moment() < word.moment());
        debug_assert_eq!(next.degree(), word.degree());
        out += adem_normalize(&next);
    }
    memo().write().expect("memo poisoned").insert(word.clone(), out.clone());
    out
}

/// Normalizes by repeatedly rewriting the pair chosen by `choose` among the
/// inadmissible positions. Used to exercise confluence; no memoization.
pub fn normalize_with_strategy<F>(word: &SqWord, choose: &mut F) -> SteenrodElement
where
    F: FnMut(&[usize]) -> usize,
{
    let bad: Vec<usize> = word
        .exponents()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < 2 * w[1])
        .map(|(h, _)| h)
        .collect();
    if bad.is_empty() {
        return F2Vector::from_term(Admissible(word.clone()));
    }
    let h = bad[choose(&bad) % bad.len()];
    let mut out = F2Vector::zero();
    for next in rewrite_at(word, h) {
        assert!(next.moment() < word.moment(), "rewrite failed to decrease the moment");
        out += normalize_with_strategy(&next, choose);
    }
    out
}

/// Product of two elements of A.
pub fn multiply(a: &SteenrodElement, b: &SteenrodElement) -> SteenrodElement {
    let mut out = F2Vector::zero();
    for x in a {
        for y in b {
            out += adem_normalize(&x.word().concat(y.word()));
        }
    }
    out
}

/// Admissible sequences of the given degree whose excess is at most
/// `max_excess` (all of them when `None`), first entry descending.
pub fn admissible_with_excess(degree: u32, max_excess: Option<u32>) -> Vec<Admissible> {
    fn rec(degree: u32, max_first: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if degree == 0 {
            out.push(prefix.clone());
            return;
        }
        for i in (1..=max_first.min(degree)).rev() {
            prefix.push(i);
            rec(degree - i, i / 2, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let max_first = match max_excess {
        // e(I) = 2 i_1 - degree
        Some(e) => (e + degree) / 2,
        None => degree,
    };
    rec(degree, max_first, &mut Vec::new(), &mut out);
    out.into_iter().map(|v| Admissible(SqWord(v))).collect()
}

/// Basis of A in the given degree.
pub fn steenrod_basis(degree: u32) -> Vec<Admissible> {
    admissible_with_excess(degree, None)
}

/// Polynomials over F₂ in a fixed number of degree-one variables; a
/// monomial is its exponent vector.
pub mod poly {
    use super::*;

    pub type Monomial = Vec<u32>;
    pub type Poly = F2Vector<Monomial>;

    /// `Sq^j` on a monomial: `Sq(x) = x + x^2` on each variable, extended
    /// multiplicatively, so `Sq^j x^e = sum prod binom(e_v, c_v) x^{e+c}`.
    pub fn sq_monomial(j: u32, m: &Monomial) -> Poly {
        fn rec(j: u32, m: &Monomial, v: usize, cur: &mut Monomial, out: &mut Poly) {
            if v == m.len() {
                if j == 0 {
                    out.add_term(cur.clone());
                }
                return;
            }
            for c in 0..=j.min(m[v]) {
                if binom_mod2(m[v] as i64, c as i64) == 1 {
                    cur[v] = m[v] + c;
                    rec(j - c, m, v + 1, cur, out);
                }
            }
            cur[v] = m[v];
        }
        let mut out = F2Vector::zero();
        rec(j, m, 0, &mut m.clone(), &mut out);
        out
    }

    pub fn sq(j: u32, p: &Poly) -> Poly {
        p.flat_map(|m| sq_monomial(j, m))
    }

    /// Letter-by-letter action of a word, rightmost letter first.
    pub fn act_word(word: &SqWord, p: &Poly) -> Poly {
        word.exponents()
            .iter()
            .rev()
            .fold(p.clone(), |acc, &i| sq(i, &acc))
    }

    pub fn act_element(a: &SteenrodElement, p: &Poly) -> Poly {
        a.flat_map(|w| act_word(w.word(), p))
    }
}

/// The polynomial-action oracle: acts letter by letter on a monomial of the
/// polynomial algebra, without any Adem rewriting.
pub fn polynomial_action_oracle(word: &SqWord, monomial: &[u32]) -> poly::Poly {
    poly::act_word(word, &F2Vector::from_term(monomial.to_vec()))
}
