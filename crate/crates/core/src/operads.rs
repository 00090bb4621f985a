//! Set operads over F₂ in degree 0: commutative and unary operads, their
//! distributive composites `Com∘U`, the level operad `Lev` inside `Com∘D`,
//! its truncations, and the free operad `MagCom` on one commutative binary
//! operation.
//!
//! Permutations act on the right: the input in slot `p` of `ν` sits in slot
//! `σ(p)` of `ν·σ`, and `(ν·σ)·τ = ν·(στ)` where `στ` means "σ then τ".

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::F2Vector;

/// Binary trees with labelled leaves, canonical when every node lists its
/// smaller child first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Tree<L> {
    Leaf(L),
    Node(Box<Tree<L>>, Box<Tree<L>>),
}

impl<L: Ord + Clone> Tree<L> {
    pub fn node(a: Tree<L>, b: Tree<L>) -> Self {
        if a <= b {
            Tree::Node(Box::new(a), Box::new(b))
        } else {
            Tree::Node(Box::new(b), Box::new(a))
        }
    }

    pub fn canonical(&self) -> Self {
        match self {
            Tree::Leaf(l) => Tree::Leaf(l.clone()),
            Tree::Node(a, b) => Tree::node(a.canonical(), b.canonical()),
        }
    }

    pub fn leaves(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a L>) {
        match self {
            Tree::Leaf(l) => out.push(l),
            Tree::Node(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    pub fn map<M: Ord + Clone>(&self, f: &mut impl FnMut(&L) -> Tree<M>) -> Tree<M> {
        match self {
            Tree::Leaf(l) => f(l),
            Tree::Node(a, b) => Tree::node(a.map(f), b.map(f)),
        }
    }

    /// Depth of every leaf, in traversal order.
    pub fn depths(&self) -> Vec<u32> {
        match self {
            Tree::Leaf(_) => vec![0],
            Tree::Node(a, b) => a.depths().into_iter().chain(b.depths()).map(|x| x + 1).collect(),
        }
    }
}

impl<L: fmt::Display> fmt::Display for Tree<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(l) => write!(f, "{l}"),
            Tree::Node(a, b) => write!(f, "⋆({a}, {b})"),
        }
    }
}

/// A basis element of an operad.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum OpToken {
    /// `(μ_n; d^{a_1}, …, d^{a_n})`; the empty vector is the arity-0 unit.
    Exps(Vec<i32>),
    /// A `MagCom` tree whose leaves are the slots `0..n`.
    Tree(Tree<usize>),
}

impl OpToken {
    pub fn arity(&self) -> usize {
        match self {
            OpToken::Exps(a) => a.len(),
            OpToken::Tree(t) => t.leaves().len(),
        }
    }

    pub fn exps(&self) -> Option<&[i32]> {
        match self {
            OpToken::Exps(a) => Some(a),
            OpToken::Tree(_) => None,
        }
    }
}

impl fmt::Display for OpToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpToken::Exps(a) => {
                let parts: Vec<String> = a.iter().map(|e| format!("d^{e}")).collect();
                write!(f, "(μ_{}; {})", a.len(), parts.join(", "))
            }
            OpToken::Tree(t) => write!(f, "{t}"),
        }
    }
}

pub type OpElement = F2Vector<OpToken>;

/// Permutation of `0..n`, stored as the image list.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Perm(images))
    }

    /// Builds a permutation of `n` points from 1-based cycles.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut img: Vec<usize> = (0..n).collect();
        for c in cycles {
            for (k, &p) in c.iter().enumerate() {
                let q = c[(k + 1) % c.len()];
                if p == 0 || q == 0 || p > n || q > n {
                    return Err(Error::InvalidArgument(format!("cycle entry outside 1..={n}")));
                }
                img[p - 1] = q - 1;
            }
        }
        Perm::from_images(img)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, p: usize) -> usize {
        self.0[p]
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&p| other.0[p]).collect())
    }

    /// `σ_{2n}`: `2i-1 ↦ i`, `2i ↦ n+i` (1-based).
    pub fn shuffle(n: usize) -> Perm {
        Perm((0..2 * n).map(|p| if p % 2 == 0 { p / 2 } else { n + p / 2 }).collect())
    }

    /// The block permutation `σ ∘_i τ` acting on `σ`'s slots with slot `i`
    /// expanded into a block of `τ.len()` slots.
    pub fn block(&self, i: usize, tau: &Perm) -> Perm {
        let n = tau.len() as isize;
        let si = self.0[i];
        let shift = |q: usize| {
            let s = self.0[q];
            if s < si {
                s
            } else {
                (s as isize + n - 1) as usize
            }
        };
        let m = self.0.len();
        let mut out = Vec::with_capacity(m + tau.len() - 1);
        for p in 0..m {
            if p == i {
                out.extend(tau.0.iter().map(|&t| si + t));
            } else {
                out.push(shift(p));
            }
        }
        Perm(out)
    }

    pub fn all(n: usize) -> Vec<Perm> {
        fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Perm>) {
            if prefix.len() == used.len() {
                out.push(Perm(prefix.clone()));
                return;
            }
            for k in 0..used.len() {
                if !used[k] {
                    used[k] = true;
                    prefix.push(k);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[k] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    /// Adjacent transpositions of `Σ_n`.
    pub fn generators(n: usize) -> Vec<Perm> {
        (1..n)
            .map(|k| Perm::from_cycles(n, &[&[k, k + 1]]).expect("valid cycle"))
            .collect()
    }
}

/// One-variable operads `F[d]` and their quotients.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Unary {
    /// Polynomials in `d`.
    D,
    /// Laurent polynomials in `d`.
    Dpm,
    /// `F[d]/(d^s - 1)`.
    Qs(u32),
    /// `F[d]/(d^{q+1})`.
    Tq(u32),
}

impl Unary {
    fn name(&self) -> String {
        match self {
            Unary::D => "D".into(),
            Unary::Dpm => "D±".into(),
            Unary::Qs(s) => format!("Q_{s}D"),
            Unary::Tq(q) => format!("T_{q}D"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum OperadKind {
    Com { unital: bool },
    ComUnary { unital: bool, unary: Unary },
    Unary(Unary),
    /// `Lev`, or `T_qLev` when truncated at `q`.
    Lev { truncation: Option<u32> },
    MagCom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operad {
    kind: OperadKind,
    arity_cap: usize,
    exponent_cap: i32,
}

/// Largest exponent accepted for `D` and `D±` unless overridden.
pub const DEFAULT_EXPONENT_CAP: i32 = 64;

pub fn com_operad(unital: bool, arity_cap: usize) -> Operad {
    Operad::new(OperadKind::Com { unital }, arity_cap)
}

pub fn unary_operad(kind: Unary, exponent_cap: i32) -> Result<Operad> {
    Operad::new(OperadKind::Unary(kind), 1).with_exponent_cap(exponent_cap)
}

pub fn lev_operad(arity_cap: usize) -> Operad {
    Operad::new(OperadKind::Lev { truncation: None }, arity_cap)
}

pub fn truncated_lev(q: u32, arity_cap: usize) -> Operad {
    Operad::new(OperadKind::Lev { truncation: Some(q) }, arity_cap)
}

pub fn magcom_operad(arity_cap: usize) -> Operad {
    Operad::new(OperadKind::MagCom, arity_cap)
}

/// `P∘U` for `P` one of `Com`, `uCom` and `U` a unary operad.
pub fn compose_with_unary(p: &Operad, u: &Operad) -> Result<Operad> {
    let unary = match u.kind {
        OperadKind::Unary(k) => k,
        _ => return Err(Error::InvalidArgument(format!("{} is not concentrated in arity 1", u.name()))),
    };
    match p.kind {
        OperadKind::Com { unital: true } if matches!(unary, Unary::Tq(_)) => Err(unital_truncation_error()),
        OperadKind::Com { unital } => Operad::new(OperadKind::ComUnary { unital, unary }, p.arity_cap)
            .with_exponent_cap(u.exponent_cap),
        _ => Err(Error::InvalidArgument(format!(
            "composite with a unary operad is implemented for Com and uCom, not {}",
            p.name()
        ))),
    }
}

// d^{q+1}(e) = e for the arity-0 unit e, so the nilpotence relation
// cannot be imposed compatibly with the distributive law.
fn unital_truncation_error() -> Error {
    Error::InvalidArgument("uCom∘T_qD is degenerate (d^{q+1} applied to the unit is the unit); use Com∘T_qD".into())
}

impl Operad {
    pub fn new(kind: OperadKind, arity_cap: usize) -> Self {
        Operad {
            kind,
            arity_cap,
            exponent_cap: DEFAULT_EXPONENT_CAP,
        }
    }

    pub fn with_exponent_cap(mut self, cap: i32) -> Result<Self> {
        if cap < 0 {
            return Err(Error::InvalidArgument(format!("negative exponent cap {cap}")));
        }
        self.exponent_cap = cap;
        Ok(self)
    }

    pub fn with_arity_cap(mut self, cap: usize) -> Self {
        self.arity_cap = if matches!(self.kind, OperadKind::Unary(_)) { 1 } else { cap };
        self
    }

    /// Parses `com`, `ucom`, `lev`, `tqlev:<q>`, `magcom`, `ucom.d`,
    /// `ucom.dpm`, `ucom.qsd:<s>`, `com.tqd:<q>` (and `com.*` variants of
    /// the unital composites).
    pub fn parse(name: &str, arity_cap: usize) -> Result<Self> {
        let unknown = || Error::UnknownName {
            kind: "operad",
            name: name.to_string(),
            expected: OPERAD_NAMES.join(", "),
        };
        let lower = name.to_ascii_lowercase();
        let (head, param) = match lower.split_once(':') {
            Some((h, p)) => (h.to_string(), Some(p.parse::<u32>().map_err(|_| unknown())?)),
            None => (lower.clone(), None),
        };
        let kind = match (head.as_str(), param) {
            ("com", None) => OperadKind::Com { unital: false },
            ("ucom", None) => OperadKind::Com { unital: true },
            ("lev", None) => OperadKind::Lev { truncation: None },
            ("tqlev", Some(q)) => OperadKind::Lev { truncation: Some(q) },
            ("magcom", None) => OperadKind::MagCom,
            _ => {
                let (base, unary) = head.split_once('.').ok_or_else(unknown)?;
                let unital = match base {
                    "com" => false,
                    "ucom" => true,
                    _ => return Err(unknown()),
                };
                let unary = match (unary, param) {
                    ("d", None) => Unary::D,
                    ("dpm", None) => Unary::Dpm,
                    ("qsd", Some(s)) if s >= 1 => Unary::Qs(s),
                    ("tqd", Some(q)) => Unary::Tq(q),
                    _ => return Err(unknown()),
                };
                if unital && matches!(unary, Unary::Tq(_)) {
                    return Err(unital_truncation_error());
                }
                OperadKind::ComUnary { unital, unary }
            }
        };
        Ok(Operad::new(kind, arity_cap))
    }

    pub fn kind(&self) -> OperadKind {
        self.kind
    }

    pub fn arity_cap(&self) -> usize {
        self.arity_cap
    }

    pub fn exponent_cap(&self) -> i32 {
        self.exponent_cap
    }

    pub fn name(&self) -> String {
        match self.kind {
            OperadKind::Com { unital } => if unital { "uCom" } else { "Com" }.into(),
            OperadKind::ComUnary { unital, unary } => {
                format!("{}∘{}", if unital { "uCom" } else { "Com" }, unary.name())
            }
            OperadKind::Unary(u) => u.name(),
            OperadKind::Lev { truncation: None } => "Lev".into(),
            OperadKind::Lev { truncation: Some(q) } => format!("T_{q}Lev"),
            OperadKind::MagCom => "MagCom".into(),
        }
    }

    pub fn is_unital(&self) -> bool {
        matches!(
            self.kind,
            OperadKind::Com { unital: true } | OperadKind::ComUnary { unital: true, .. }
        )
    }

    fn unary(&self) -> Option<Unary> {
        match self.kind {
            OperadKind::ComUnary { unary, .. } | OperadKind::Unary(unary) => Some(unary),
            _ => None,
        }
    }

    /// Inclusive range of exponents a token may carry.
    pub fn exponent_window(&self) -> (i32, i32) {
        match self.kind {
            OperadKind::Com { .. } => (0, 0),
            OperadKind::Lev { truncation } => {
                let top = (self.arity_cap.max(1) - 1) as i32;
                (0, truncation.map_or(top, |q| top.min(q as i32)))
            }
            OperadKind::MagCom => (0, 0),
            _ => match self.unary().expect("unary kind") {
                Unary::D => (0, self.exponent_cap),
                Unary::Dpm => (-self.exponent_cap, self.exponent_cap),
                Unary::Qs(s) => (0, s as i32 - 1),
                Unary::Tq(q) => (0, q as i32),
            },
        }
    }

    /// Whether `Σ 2^{-a_j} = 1` is imposed on exponent vectors.
    pub fn is_level(&self) -> bool {
        matches!(self.kind, OperadKind::Lev { .. })
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.kind, OperadKind::MagCom)
    }

    pub fn unit(&self) -> OpToken {
        if self.is_tree() {
            OpToken::Tree(Tree::Leaf(0))
        } else {
            OpToken::Exps(vec![0])
        }
    }

    /// The arity-0 unit of `uCom`-type operads.
    pub fn arity_zero(&self) -> Option<OpToken> {
        self.is_unital().then(|| OpToken::Exps(Vec::new()))
    }

    /// The canonical commutative binary operation, if there is one.
    pub fn star(&self) -> Option<OpToken> {
        match self.kind {
            OperadKind::Com { .. } => Some(OpToken::Exps(vec![0, 0])),
            OperadKind::Unary(_) => None,
            OperadKind::ComUnary { unary, .. } => {
                let one = match unary {
                    Unary::Qs(1) => 0,
                    Unary::Tq(0) => return None,
                    _ => 1,
                };
                Some(OpToken::Exps(vec![one, one]))
            }
            OperadKind::Lev { truncation: Some(0) } => None,
            OperadKind::Lev { .. } => Some(OpToken::Exps(vec![1, 1])),
            OperadKind::MagCom => Some(OpToken::Tree(Tree::node(Tree::Leaf(0), Tree::Leaf(1)))),
        }
    }

    /// Operations generating the operad under composition and Σ-action.
    pub fn generators(&self) -> Vec<OpToken> {
        let mut out = Vec::new();
        match self.kind {
            OperadKind::Com { unital } => {
                out.push(OpToken::Exps(vec![0, 0]));
                if unital {
                    out.push(OpToken::Exps(vec![]));
                }
            }
            OperadKind::ComUnary { unital, unary } => {
                out.push(OpToken::Exps(vec![0, 0]));
                out.extend(self.unary_generators(unary));
                if unital {
                    out.push(OpToken::Exps(vec![]));
                }
            }
            OperadKind::Unary(unary) => out.extend(self.unary_generators(unary)),
            OperadKind::Lev { .. } | OperadKind::MagCom => out.extend(self.star()),
        }
        out
    }

    fn unary_generators(&self, unary: Unary) -> Vec<OpToken> {
        match unary {
            Unary::Tq(0) => vec![],
            Unary::Qs(1) => vec![],
            Unary::Dpm => vec![OpToken::Exps(vec![1]), OpToken::Exps(vec![-1])],
            _ => vec![OpToken::Exps(vec![1])],
        }
    }

    fn check_arity(&self, n: usize) -> Result<()> {
        if n > self.arity_cap {
            Err(Error::ArityAboveCap { arity: n, cap: self.arity_cap })
        } else {
            Ok(())
        }
    }

    fn arity_allowed(&self, n: usize) -> bool {
        match self.kind {
            OperadKind::Unary(_) => n == 1,
            OperadKind::Com { unital } | OperadKind::ComUnary { unital, .. } => n >= 1 || unital,
            _ => n >= 1,
        }
    }

    /// Basis of arity `n`; exponents of `D`/`D±` are limited to `exp_bound`
    /// in absolute value when given (the window otherwise).
    pub fn basis_within(&self, n: usize, exp_bound: Option<i32>) -> Result<Vec<OpToken>> {
        self.check_arity(n)?;
        if !self.arity_allowed(n) {
            return Ok(Vec::new());
        }
        if self.is_tree() {
            let labels: Vec<usize> = (0..n).collect();
            return Ok(magcom_trees(&labels).into_iter().map(OpToken::Tree).collect());
        }
        let (mut lo, mut hi) = self.exponent_window();
        if let Some(b) = exp_bound {
            lo = lo.max(-b);
            hi = hi.min(b);
        }
        let mut out = Vec::new();
        if self.is_level() {
            let scale = dyadic_one(hi.max(0) as u32);
            let mut cur = Vec::new();
            level_vectors(n, hi, scale, hi.max(0) as u32, &mut cur, &mut out);
        } else {
            let mut cur = Vec::new();
            all_vectors(n, lo, hi, &mut cur, &mut out);
        }
        Ok(out.into_iter().map(OpToken::Exps).collect())
    }

    pub fn basis(&self, n: usize) -> Result<Vec<OpToken>> {
        self.basis_within(n, None)
    }

    pub fn dim(&self, n: usize) -> Result<usize> {
        Ok(self.basis(n)?.len())
    }

    /// Membership test for tokens of this operad.
    pub fn contains(&self, t: &OpToken) -> bool {
        match t {
            OpToken::Tree(tree) => self.is_tree() && *tree == tree.canonical() && {
                let mut l: Vec<usize> = tree.leaves().into_iter().copied().collect();
                l.sort_unstable();
                l.iter().enumerate().all(|(k, &x)| k == x)
            },
            OpToken::Exps(a) => {
                if self.is_tree() || !self.arity_allowed(a.len()) {
                    return false;
                }
                let (lo, hi) = self.exponent_window();
                if a.iter().any(|&x| x < lo || x > hi) {
                    return false;
                }
                !self.is_level() || kraft_is_one(a)
            }
        }
    }

    /// Normal form of a formal exponent vector: `None` when it is zero.
    pub fn reduce_exps(&self, mut a: Vec<i32>) -> Result<Option<Vec<i32>>> {
        match self.kind {
            OperadKind::Lev { truncation: Some(q) } => {
                if a.iter().any(|&x| x > q as i32) {
                    return Ok(None);
                }
            }
            OperadKind::Lev { truncation: None } | OperadKind::Com { .. } | OperadKind::MagCom => {}
            _ => match self.unary().expect("unary kind") {
                Unary::D | Unary::Dpm => {
                    let (lo, hi) = self.exponent_window();
                    if let Some(&x) = a.iter().find(|&&x| x < lo || x > hi) {
                        return Err(Error::ExponentOverflow {
                            exponent: x as i64,
                            lo: lo as i64,
                            hi: hi as i64,
                        });
                    }
                }
                Unary::Qs(s) => a.iter_mut().for_each(|x| *x = x.rem_euclid(s as i32)),
                Unary::Tq(q) => {
                    if a.iter().any(|&x| x > q as i32) {
                        return Ok(None);
                    }
                }
            },
        }
        Ok(Some(a))
    }

    /// Partial composition `μ ∘_i ν` (0-based `i`).
    pub fn compose(&self, mu: &OpToken, i: usize, nu: &OpToken) -> Result<OpElement> {
        if i >= mu.arity() {
            return Err(Error::IndexOutOfRange { index: i, dim: mu.arity() });
        }
        match (mu, nu) {
            (OpToken::Exps(a), OpToken::Exps(b)) => {
                let mut c = Vec::with_capacity(a.len() + b.len() - 1);
                c.extend_from_slice(&a[..i]);
                c.extend(b.iter().map(|&x| a[i] + x));
                c.extend_from_slice(&a[i + 1..]);
                Ok(self.reduce_exps(c)?.map(OpToken::Exps).into_iter().collect())
            }
            (OpToken::Tree(s), OpToken::Tree(t)) => {
                let n = t.leaves().len();
                let grafted = s.map(&mut |&l| {
                    if l < i {
                        Tree::Leaf(l)
                    } else if l == i {
                        t.map(&mut |&k| Tree::Leaf(k + i))
                    } else {
                        Tree::Leaf(l + n - 1)
                    }
                });
                Ok(F2Vector::from_term(OpToken::Tree(grafted)))
            }
            _ => Err(Error::InvalidArgument("cannot compose tokens of different operads".into())),
        }
    }

    pub fn compose_elem(&self, mu: &OpElement, i: usize, nu: &OpElement) -> Result<OpElement> {
        let mut out = F2Vector::zero();
        for m in mu {
            for n in nu {
                out += self.compose(m, i, n)?;
            }
        }
        Ok(out)
    }

    /// Total composition `μ(ν_1, …, ν_m)`.
    pub fn compose_total(&self, mu: &OpElement, nus: &[OpElement]) -> Result<OpElement> {
        let mut cur = mu.clone();
        for (i, nu) in nus.iter().enumerate().rev() {
            cur = self.compose_elem(&cur, i, nu)?;
        }
        Ok(cur)
    }

    pub fn act(&self, t: &OpToken, sigma: &Perm) -> Result<OpToken> {
        if sigma.len() != t.arity() {
            return Err(Error::MixedBases { expected: t.arity(), found: sigma.len() });
        }
        Ok(match t {
            OpToken::Exps(a) => {
                let mut out = vec![0; a.len()];
                for (p, &x) in a.iter().enumerate() {
                    out[sigma.image(p)] = x;
                }
                OpToken::Exps(out)
            }
            OpToken::Tree(tree) => OpToken::Tree(tree.map(&mut |&l| Tree::Leaf(sigma.image(l)))),
        })
    }

    pub fn act_elem(&self, v: &OpElement, sigma: &Perm) -> Result<OpElement> {
        v.iter().map(|t| self.act(t, sigma)).collect()
    }
}

/// Names accepted by [`Operad::parse`].
pub const OPERAD_NAMES: &[&str] = &[
    "com", "ucom", "lev", "tqlev:<q>", "magcom", "ucom.d", "ucom.dpm", "ucom.qsd:<s>", "com.tqd:<q>",
];

fn all_vectors(n: usize, lo: i32, hi: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    if cur.len() == n {
        out.push(cur.clone());
        return;
    }
    for x in lo..=hi {
        cur.push(x);
        all_vectors(n, lo, hi, cur, out);
        cur.pop();
    }
}

/// `2^top` as the fixed-point representation of 1 with `top` binary digits.
fn dyadic_one(top: u32) -> u128 {
    1u128 << top
}

fn level_vectors(n: usize, hi: i32, remaining: u128, top: u32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    let left = n - cur.len();
    if left == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // each remaining leaf contributes at least 2^{top-hi} and at most the remainder
    if remaining < (left as u128) << (top as i32 - hi) as u32 {
        return;
    }
    for a in 0..=hi {
        let w = 1u128 << (top - a as u32);
        if w <= remaining {
            cur.push(a);
            level_vectors(n, hi, remaining - w, top, cur, out);
            cur.pop();
        }
    }
}

/// `Σ 2^{-a_j} == 1` for nonnegative `a`.
pub fn kraft_is_one(a: &[i32]) -> bool {
    if a.iter().any(|&x| !(0..=120).contains(&x)) {
        return false;
    }
    let top = a.iter().copied().max().unwrap_or(0) as u32;
    a.iter().map(|&x| 1u128 << (top - x as u32)).sum::<u128>() == 1u128 << top
}

/// A binary tree whose leaf in slot `j` sits at depth `a_j`, requiring
/// `Σ 2^{-a_j} = 1`. Leaves are labelled by their slots.
pub fn kraft_tree(a: &[i32]) -> Result<Tree<usize>> {
    if !kraft_is_one(a) {
        return Err(Error::InvalidArgument(format!("{a:?} is not a level exponent vector")));
    }
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by_key(|&j| (a[j], j));
    fn build(idx: &[usize], a: &[i32], depth: i32) -> Tree<usize> {
        if idx.len() == 1 {
            return Tree::Leaf(idx[0]);
        }
        let top = a[*idx.last().expect("nonempty")] as u32;
        let half = 1u128 << (top - depth as u32 - 1);
        let mut acc = 0u128;
        let mut k = 0;
        while acc < half {
            acc += 1u128 << (top - a[idx[k]] as u32);
            k += 1;
        }
        Tree::node(build(&idx[..k], a, depth + 1), build(&idx[k..], a, depth + 1))
    }
    Ok(build(&idx, a, 0))
}

/// All canonical binary trees with the given (sorted, distinct) leaves.
pub fn magcom_trees<L: Ord + Clone>(labels: &[L]) -> Vec<Tree<L>> {
    if labels.len() == 1 {
        return vec![Tree::Leaf(labels[0].clone())];
    }
    let rest = &labels[1..];
    let mut out = Vec::new();
    // subsets of the rest joined to the first label form the first child
    for mask in 0u64..(1u64 << rest.len()) - 1 {
        let mut left = vec![labels[0].clone()];
        let mut right = Vec::new();
        for (k, l) in rest.iter().enumerate() {
            if mask >> k & 1 == 1 {
                left.push(l.clone());
            } else {
                right.push(l.clone());
            }
        }
        for a in magcom_trees(&left) {
            for b in magcom_trees(&right) {
                out.push(Tree::node(a.clone(), b));
            }
        }
    }
    out.sort();
    out
}

/// Outcome of a centrality check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralVerdict {
    pub central: bool,
    pub checked: usize,
    /// The first operation `μ` for which the interchange law fails.
    pub failing: Option<OpToken>,
}

fn check_commutative(p: &Operad, star: &OpElement) -> Result<()> {
    if star.iter().any(|t| t.arity() != 2) {
        return Err(Error::InvalidArgument("⋆ must be a binary operation".into()));
    }
    let swapped = p.act_elem(star, &Perm::from_cycles(2, &[&[1, 2]])?)?;
    if swapped != *star {
        return Err(Error::NotCommutative);
    }
    Ok(())
}

/// Both sides of the interchange law `⋆(μ,μ) = μ(⋆,…,⋆)·σ_{2n}`.
pub fn interchange_sides(p: &Operad, star: &OpElement, mu: &OpToken) -> Result<(OpElement, OpElement)> {
    let n = mu.arity();
    let m = F2Vector::from_term(mu.clone());
    let lhs = p.compose_total(star, &[m.clone(), m.clone()])?;
    let inner = p.compose_total(&m, &vec![star.clone(); n])?;
    let rhs = p.act_elem(&inner, &Perm::shuffle(n))?;
    Ok((lhs, rhs))
}

/// Checks the interchange law for `⋆` against each of `generators`.
pub fn is_central(p: &Operad, star: &OpElement, generators: &[OpToken]) -> Result<CentralVerdict> {
    check_commutative(p, star)?;
    for (k, mu) in generators.iter().enumerate() {
        let (lhs, rhs) = interchange_sides(p, star, mu)?;
        if lhs != rhs {
            return Ok(CentralVerdict {
                central: false,
                checked: k + 1,
                failing: Some(mu.clone()),
            });
        }
    }
    Ok(CentralVerdict {
        central: true,
        checked: generators.len(),
        failing: None,
    })
}

/// Checks the interchange law against every basis token of arity
/// `n <= max_arity` (exponents of `D`/`D±` limited to `exp_bound`).
pub fn is_central_exhaustive(p: &Operad, star: &OpElement, max_arity: usize, exp_bound: i32) -> Result<CentralVerdict> {
    let mut all = Vec::new();
    for n in 0..=max_arity.min(p.arity_cap()) {
        all.extend(p.basis_within(n, Some(exp_bound))?);
    }
    is_central(p, star, &all)
}

/// The iterated operation `⋆_k` of arity `2^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarPower {
    pub k: u32,
    pub element: OpElement,
}

pub fn star_power(p: &Operad, star: &OpElement, k: u32) -> Result<StarPower> {
    let arity = 1usize.checked_shl(k).filter(|&a| a <= p.arity_cap().max(1) && k < 32);
    let arity = arity.ok_or(Error::ArityAboveCap {
        arity: 1usize.checked_shl(k).unwrap_or(usize::MAX),
        cap: p.arity_cap(),
    })?;
    let mut cur = F2Vector::from_term(p.unit());
    for _ in 0..k {
        cur = p.compose_total(star, &[cur.clone(), cur])?;
    }
    debug_assert!(cur.iter().all(|t| t.arity() == arity));
    Ok(StarPower { k, element: cur })
}

impl StarPower {
    /// Generators of `Σ_2 ≀ Σ_{2^{k-1}}` together with `σ_{2^k}`; they
    /// generate `Σ_{2^k}`.
    pub fn symmetry_generators(k: u32) -> Vec<Perm> {
        if k == 0 {
            return Vec::new();
        }
        let n = 1usize << k;
        let m = n / 2;
        let mut gens = vec![Perm::from_cycles(n, &[&[1, 2]]).expect("valid")];
        if m > 1 {
            gens.push(Perm::from_cycles(n, &[&[1, 3], &[2, 4]]).expect("valid"));
            let block_cycle: Vec<usize> = (0..n).map(|p| (p + 2) % n).collect();
            gens.push(Perm::from_images(block_cycle).expect("valid"));
        }
        gens.push(Perm::shuffle(m));
        gens
    }

    /// Checks `⋆_k·σ = ⋆_k` for the generating set above.
    pub fn is_symmetric(&self, p: &Operad) -> Result<bool> {
        for g in Self::symmetry_generators(self.k) {
            if p.act_elem(&self.element, &g)? != self.element {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Verifies unit, associativity and equivariance axioms on all tokens of
/// arity `<= max_arity` (exponents limited to `exp_bound`).
pub fn check_axioms(p: &Operad, max_arity: usize, exp_bound: i32) -> Result<()> {
    let max_arity = max_arity.min(p.arity_cap());
    let basis: Vec<Vec<OpToken>> = (0..=max_arity)
        .map(|n| p.basis_within(n, Some(exp_bound)))
        .collect::<Result<_>>()?;
    let unit = F2Vector::from_term(p.unit());
    let fail = |what: &str, detail: String| Err(Error::Inconsistent(format!("{}: {what} fails for {detail}", p.name())));
    for (m, toks) in basis.iter().enumerate() {
        for mu in toks {
            let one = F2Vector::from_term(mu.clone());
            for i in 0..m {
                if p.compose(mu, i, &p.unit())? != one {
                    return fail("right unit", format!("{mu}"));
                }
            }
            if p.compose_elem(&unit, 0, &one)? != one {
                return fail("left unit", format!("{mu}"));
            }
        }
    }
    for (l, ls) in basis.iter().enumerate() {
        for lam in ls {
            for (m, ms) in basis.iter().enumerate() {
                if l + m > max_arity + 1 || l == 0 {
                    continue;
                }
                for mu in ms {
                    for (n, ns) in basis.iter().enumerate() {
                        if l + m + n > max_arity + 2 {
                            continue;
                        }
                        for nu in ns {
                            let lam1 = F2Vector::from_term(lam.clone());
                            let mu1 = F2Vector::from_term(mu.clone());
                            let nu1 = F2Vector::from_term(nu.clone());
                            for i in 0..l {
                                let lm = p.compose_elem(&lam1, i, &mu1)?;
                                for j in 0..m {
                                    let a = p.compose_elem(&lm, i + j, &nu1)?;
                                    let b = p.compose_elem(&lam1, i, &p.compose_elem(&mu1, j, &nu1)?)?;
                                    if a != b {
                                        return fail("sequential associativity", format!("{lam}, {mu}, {nu}"));
                                    }
                                }
                                for k in i + 1..l {
                                    let a = p.compose_elem(&lm, k + m - 1, &nu1)?;
                                    let b = p.compose_elem(&p.compose_elem(&lam1, k, &nu1)?, i, &mu1)?;
                                    if a != b {
                                        return fail("parallel associativity", format!("{lam}, {mu}, {nu}"));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (m, ms) in basis.iter().enumerate() {
        for (n, ns) in basis.iter().enumerate() {
            if m == 0 || m + n > max_arity + 1 {
                continue;
            }
            let mut pairs: Vec<(Perm, Perm)> = Perm::generators(m).into_iter().map(|s| (s, Perm::identity(n))).collect();
            pairs.extend(Perm::generators(n).into_iter().map(|t| (Perm::identity(m), t)));
            for mu in ms {
                for nu in ns {
                    for (s, t) in &pairs {
                        for i in 0..m {
                            let a = p.compose(&p.act(mu, s)?, s.image(i), &p.act(nu, t)?)?;
                            let b = p.act_elem(&p.compose(mu, i, nu)?, &s.block(i, t))?;
                            if a != b {
                                return fail("equivariance", format!("{mu}, {nu}"));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// A morphism of operads, defined on basis tokens.
#[derive(Clone, Debug)]
pub struct OperadMorphism {
    pub source: Operad,
    pub target: Operad,
    /// Image of the binary generator, when the morphism is classified by it.
    star_image: Option<OpElement>,
}

/// The level relation `⋆(⋆,⋆) = ⋆(⋆,⋆)·(2 3)`.
pub fn level_relation_holds(p: &Operad, star: &OpElement) -> Result<bool> {
    let lhs = p.compose_total(star, &[star.clone(), star.clone()])?;
    let rhs = p.act_elem(&lhs, &Perm::from_cycles(4, &[&[2, 3]])?)?;
    Ok(lhs == rhs)
}

/// Builds a morphism `source -> target`.
///
/// With `star_image = Some(x)` the morphism sends the binary generator of
/// `source` (`Com`, `uCom`, `Lev`, `T_qLev` or `MagCom`) to `x`. Without it,
/// both operads must be exponent-vector operads and tokens are sent to
/// their reduction in the target (inclusions and projections).
pub fn operad_morphism(source: &Operad, target: &Operad, star_image: Option<OpElement>) -> Result<OperadMorphism> {
    if let Some(x) = &star_image {
        check_commutative(target, x).map_err(|_| Error::RelationViolated("⋆·(1 2) = ⋆".into()))?;
        match source.kind() {
            OperadKind::Lev { truncation } => {
                if !level_relation_holds(target, x)? {
                    return Err(Error::RelationViolated("⋆(⋆,⋆) = ⋆(⋆,⋆)·(2 3)".into()));
                }
                if let Some(q) = truncation {
                    let deep = (q + 2) as usize;
                    if deep <= source.arity_cap() {
                        // the comb with leaf depths (1, 2, …, q+1, q+1) has depth q+1
                        let comb: Vec<i32> = (1..=q as i32 + 1).chain([q as i32 + 1]).collect();
                        let img = evaluate_tree(target, x, &kraft_tree(&comb)?)?;
                        if !img.is_zero() {
                            return Err(Error::RelationViolated(format!("operations of depth > {q} vanish")));
                        }
                    }
                }
            }
            OperadKind::Com { .. } => {
                let left = target.compose_total(x, &[x.clone(), F2Vector::from_term(target.unit())])?;
                let right = target.compose_total(x, &[F2Vector::from_term(target.unit()), x.clone()])?;
                if left != right {
                    return Err(Error::RelationViolated("⋆(⋆,1) = ⋆(1,⋆)".into()));
                }
                if source.is_unital() && target.arity_zero().is_none() {
                    return Err(Error::RelationViolated("the arity-0 unit needs an image".into()));
                }
            }
            OperadKind::MagCom => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{} is not classified by a binary operation",
                    source.name()
                )))
            }
        }
    } else if source.is_tree() || target.is_tree() {
        return Err(Error::InvalidArgument("MagCom morphisms need the image of ⋆".into()));
    }
    let f = OperadMorphism {
        source: source.clone(),
        target: target.clone(),
        star_image,
    };
    f.verify(4.min(source.arity_cap()), 2)?;
    Ok(f)
}

/// Evaluates a tree of `⋆`s in `p`, placing the leaf labelled `l` in slot `l`.
pub fn evaluate_tree(p: &Operad, star: &OpElement, t: &Tree<usize>) -> Result<OpElement> {
    fn eval(p: &Operad, star: &OpElement, t: &Tree<usize>) -> Result<OpElement> {
        match t {
            Tree::Leaf(_) => Ok(F2Vector::from_term(p.unit())),
            Tree::Node(a, b) => p.compose_total(star, &[eval(p, star, a)?, eval(p, star, b)?]),
        }
    }
    let v = eval(p, star, t)?;
    let order: Vec<usize> = t.leaves().into_iter().copied().collect();
    p.act_elem(&v, &Perm::from_images(order)?)
}

impl OperadMorphism {
    pub fn apply(&self, t: &OpToken) -> Result<OpElement> {
        let tgt = &self.target;
        if t.arity() == 1 && self.star_image.is_some() {
            return Ok(F2Vector::from_term(tgt.unit()));
        }
        match (&self.star_image, t) {
            (None, OpToken::Exps(a)) => Ok(tgt.reduce_exps(a.clone())?.map(OpToken::Exps).into_iter().collect()),
            (Some(x), OpToken::Tree(tree)) => evaluate_tree(tgt, x, tree),
            (Some(x), OpToken::Exps(a)) => match self.source.kind() {
                OperadKind::Lev { .. } => evaluate_tree(tgt, x, &kraft_tree(a)?),
                _ if a.is_empty() => Ok(tgt.arity_zero().into_iter().collect()),
                _ => {
                    // left comb of binary generators
                    let mut cur = F2Vector::from_term(tgt.unit());
                    for _ in 1..a.len() {
                        cur = tgt.compose_total(x, &[cur, F2Vector::from_term(tgt.unit())])?;
                    }
                    Ok(cur)
                }
            },
            (None, OpToken::Tree(_)) => Err(Error::InvalidArgument("tree token without a ⋆ image".into())),
        }
    }

    pub fn apply_elem(&self, v: &OpElement) -> Result<OpElement> {
        let mut out = F2Vector::zero();
        for t in v {
            out += self.apply(t)?;
        }
        Ok(out)
    }

    /// Checks unit, composition and Σ-compatibility within arity `max_arity`.
    pub fn verify(&self, max_arity: usize, exp_bound: i32) -> Result<()> {
        let src = &self.source;
        let tgt = &self.target;
        let bad = |what: &str| Err(Error::RelationViolated(format!("{} → {}: {what}", src.name(), tgt.name())));
        if self.apply(&src.unit())? != F2Vector::from_term(tgt.unit()) {
            return bad("unit");
        }
        let basis: Vec<Vec<OpToken>> = (0..=max_arity)
            .map(|n| src.basis_within(n, Some(exp_bound)))
            .collect::<Result<_>>()?;
        for (m, ms) in basis.iter().enumerate() {
            for mu in ms {
                let fmu = self.apply(mu)?;
                if self.star_image.is_none() && !fmu.iter().all(|t| tgt.contains(t)) {
                    return bad("image outside the target");
                }
                for s in Perm::generators(m) {
                    if self.apply(&src.act(mu, &s)?)? != tgt.act_elem(&fmu, &s)? {
                        return bad("Σ-action");
                    }
                }
                for (n, ns) in basis.iter().enumerate() {
                    if m == 0 || m + n > max_arity + 1 {
                        continue;
                    }
                    for nu in ns {
                        let fnu = self.apply(nu)?;
                        for i in 0..m {
                            let a = self.apply_elem(&src.compose(mu, i, nu)?)?;
                            let b = tgt.compose_elem(&fmu, i, &fnu)?;
                            if a != b {
                                return bad("composition");
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[i32]) -> OpToken {
        OpToken::Exps(v.to_vec())
    }

    fn one(t: OpToken) -> OpElement {
        F2Vector::from_term(t)
    }

    #[test]
    fn shuffle_and_level_relation_convention() {
        assert_eq!(Perm::shuffle(2), Perm::from_cycles(4, &[&[2, 3]]).unwrap());
        // σ_6: 1↦1, 2↦4, 3↦2, 4↦5, 5↦3, 6↦6
        assert_eq!(Perm::shuffle(3), Perm::from_cycles(6, &[&[2, 4, 5, 3]]).unwrap());
        let lev = lev_operad(6);
        assert!(level_relation_holds(&lev, &one(lev.star().unwrap())).unwrap());
        let mag = magcom_operad(6);
        assert!(!level_relation_holds(&mag, &one(mag.star().unwrap())).unwrap());
    }

    #[test]
    fn right_action_is_an_action() {
        let p = lev_operad(4);
        let s = Perm::from_cycles(4, &[&[1, 2, 3]]).unwrap();
        let t = Perm::from_cycles(4, &[&[3, 4]]).unwrap();
        for tok in p.basis(4).unwrap() {
            let a = p.act(&p.act(&tok, &s).unwrap(), &t).unwrap();
            assert_eq!(a, p.act(&tok, &s.then(&t)).unwrap());
        }
    }

    #[test]
    fn small_dimensions() {
        let com = com_operad(false, 5);
        assert_eq!((1..=5).map(|n| com.dim(n).unwrap()).collect::<Vec<_>>(), vec![1; 5]);
        assert_eq!(com.dim(0).unwrap(), 0);
        assert_eq!(com_operad(true, 3).dim(0).unwrap(), 1);
        let lev = lev_operad(5);
        assert_eq!((1..=4).map(|n| lev.dim(n).unwrap()).collect::<Vec<_>>(), vec![1, 1, 3, 13]);
        let mag = magcom_operad(5);
        assert_eq!((1..=5).map(|n| mag.dim(n).unwrap()).collect::<Vec<_>>(), vec![1, 1, 3, 15, 105]);
        assert_eq!(truncated_lev(1, 5).dim(3).unwrap(), 0);
        assert_eq!(truncated_lev(2, 5).dim(4).unwrap(), 1);
        assert_eq!(truncated_lev(2, 5).dim(5).unwrap(), 0);
        assert!(matches!(lev.basis(6), Err(Error::ArityAboveCap { .. })));
    }

    #[test]
    fn unary_examples() {
        let q3 = unary_operad(Unary::Qs(3), 8).unwrap();
        assert_eq!(q3.compose(&e(&[2]), 0, &e(&[2])).unwrap(), one(e(&[1])));
        let t2 = unary_operad(Unary::Tq(2), 8).unwrap();
        assert!(t2.compose(&e(&[2]), 0, &e(&[1])).unwrap().is_zero());
        let d = unary_operad(Unary::D, 4).unwrap();
        assert_eq!(d.unit(), e(&[0]));
        assert!(matches!(d.compose(&e(&[3]), 0, &e(&[2])), Err(Error::ExponentOverflow { .. })));
        let dpm = unary_operad(Unary::Dpm, 4).unwrap();
        assert_eq!(dpm.compose(&e(&[3]), 0, &e(&[-4])).unwrap(), one(e(&[-1])));
    }

    #[test]
    fn distributive_composite_examples() {
        let ucd = compose_with_unary(&com_operad(true, 6), &unary_operad(Unary::D, 8).unwrap()).unwrap();
        // (·; d, d) ∘_1 (·; d, d) = (·₃; d², d², d)
        assert_eq!(ucd.compose(&e(&[1, 1]), 0, &e(&[1, 1])).unwrap(), one(e(&[2, 2, 1])));
        assert!(compose_with_unary(&lev_operad(4), &unary_operad(Unary::D, 3).unwrap()).is_err());
        assert!(compose_with_unary(&com_operad(true, 4), &com_operad(true, 4)).is_err());
        // arity-0 unit deletes a slot
        assert_eq!(ucd.compose(&e(&[1, 2]), 0, &e(&[])).unwrap(), one(e(&[2])));
    }

    #[test]
    fn kraft_trees_realise_depths() {
        for tok in lev_operad(6).basis(6).unwrap() {
            let a = tok.exps().unwrap();
            let t = kraft_tree(a).unwrap();
            let leaves: Vec<usize> = t.leaves().into_iter().copied().collect();
            for (k, d) in t.depths().into_iter().enumerate() {
                assert_eq!(a[leaves[k]], d as i32);
            }
        }
        assert!(kraft_tree(&[1, 2]).is_err());
    }

    #[test]
    fn axioms_hold_for_the_zoo() {
        let d = unary_operad(Unary::D, 12).unwrap();
        let dpm = unary_operad(Unary::Dpm, 12).unwrap();
        let ucom = com_operad(true, 4);
        let zoo = vec![
            com_operad(false, 4),
            ucom.clone(),
            lev_operad(4),
            truncated_lev(1, 4),
            truncated_lev(2, 4),
            magcom_operad(4),
            d.clone(),
            compose_with_unary(&ucom, &d).unwrap(),
            compose_with_unary(&ucom, &dpm).unwrap(),
            compose_with_unary(&ucom, &unary_operad(Unary::Qs(3), 0).unwrap()).unwrap(),
            compose_with_unary(&com_operad(false, 4), &unary_operad(Unary::Tq(1), 0).unwrap()).unwrap(),
        ];
        assert!(compose_with_unary(&ucom, &unary_operad(Unary::Tq(1), 0).unwrap()).is_err());
        assert!(Operad::parse("ucom.tqd:1", 4).is_err());
        for p in &zoo {
            check_axioms(p, 4, 1).unwrap_or_else(|err| panic!("{}: {err}", p.name()));
        }
    }

    #[test]
    fn centrality_verdicts() {
        let ucom = com_operad(true, 8);
        let com = com_operad(false, 8);
        let verdict = |p: &Operad| is_central(p, &one(p.star().unwrap()), &p.generators()).unwrap();
        assert!(verdict(&com).central);
        assert!(verdict(&lev_operad(8)).central);
        for q in 1..=3 {
            assert!(verdict(&truncated_lev(q, 8)).central, "T_{q}Lev");
        }
        for u in [Unary::D, Unary::Dpm, Unary::Qs(1), Unary::Qs(2), Unary::Qs(3), Unary::Qs(4)] {
            let p = compose_with_unary(&ucom, &unary_operad(u, 16).unwrap()).unwrap();
            assert!(verdict(&p).central, "{}", p.name());
        }
        let mag = magcom_operad(8);
        let v = verdict(&mag);
        assert!(!v.central);
        assert_eq!(v.failing, mag.star());
        let bad = one(OpToken::Exps(vec![1, 2]));
        let ucd = compose_with_unary(&ucom, &unary_operad(Unary::D, 8).unwrap()).unwrap();
        assert_eq!(is_central(&ucd, &bad, &[]), Err(Error::NotCommutative));
    }

    #[test]
    fn generator_and_exhaustive_centrality_agree() {
        let ucom = com_operad(true, 8);
        let ops = vec![
            lev_operad(8),
            truncated_lev(2, 8),
            magcom_operad(8),
            com_operad(false, 8),
            compose_with_unary(&ucom, &unary_operad(Unary::D, 16).unwrap()).unwrap(),
            compose_with_unary(&ucom, &unary_operad(Unary::Qs(3), 0).unwrap()).unwrap(),
        ];
        for p in &ops {
            let star = one(p.star().unwrap());
            let g = is_central(p, &star, &p.generators()).unwrap().central;
            let all = is_central_exhaustive(p, &star, 4, 2).unwrap().central;
            assert_eq!(g, all, "{}", p.name());
            if all {
                // a central operation is a level operation
                assert!(level_relation_holds(p, &star).unwrap());
            }
        }
    }

    #[test]
    fn star_powers() {
        let lev = lev_operad(8);
        let star = one(lev.star().unwrap());
        assert_eq!(star_power(&lev, &star, 0).unwrap().element, one(lev.unit()));
        assert_eq!(star_power(&lev, &star, 1).unwrap().element, star);
        let s2 = star_power(&lev, &star, 2).unwrap();
        assert_eq!(s2.element, one(e(&[2, 2, 2, 2])));
        for s in Perm::all(4) {
            assert_eq!(lev.act_elem(&s2.element, &s).unwrap(), s2.element);
        }
        assert!(star_power(&lev, &star, 3).unwrap().is_symmetric(&lev).unwrap());
        assert!(matches!(star_power(&lev, &star, 4), Err(Error::ArityAboveCap { .. })));
        let mag = magcom_operad(8);
        let ms = star_power(&mag, &one(mag.star().unwrap()), 2).unwrap();
        assert!(!ms.is_symmetric(&mag).unwrap());
    }

    #[test]
    fn symmetry_generators_generate() {
        for k in 1..=3u32 {
            let gens = StarPower::symmetry_generators(k);
            let n = 1usize << k;
            let mut seen = std::collections::HashSet::new();
            let mut frontier = vec![Perm::identity(n)];
            seen.insert(Perm::identity(n));
            while let Some(p) = frontier.pop() {
                for g in &gens {
                    let q = p.then(g);
                    if seen.insert(q.clone()) {
                        frontier.push(q);
                    }
                }
            }
            assert_eq!(seen.len(), (1..=n).product::<usize>());
        }
    }

    #[test]
    fn lev_basis_matches_generation_closure() {
        // span of everything reachable from ⋆ by composition and Σ-action
        let lev = lev_operad(5);
        let star = lev.star().unwrap();
        let mut by_arity: Vec<std::collections::BTreeSet<OpToken>> = vec![Default::default(); 6];
        by_arity[1].insert(lev.unit());
        by_arity[2].insert(star.clone());
        loop {
            let mut grew = false;
            for m in 1..=5 {
                for n in 1..=5 {
                    if m + n - 1 > 5 {
                        continue;
                    }
                    let (ms, ns) = (by_arity[m].clone(), by_arity[n].clone());
                    for mu in &ms {
                        for nu in &ns {
                            for i in 0..m {
                                for t in &lev.compose(mu, i, nu).unwrap() {
                                    grew |= by_arity[m + n - 1].insert(t.clone());
                                }
                            }
                        }
                    }
                }
            }
            for (k, set) in by_arity.iter_mut().enumerate() {
                for t in set.clone() {
                    for s in Perm::generators(k) {
                        grew |= set.insert(lev.act(&t, &s).unwrap());
                    }
                }
            }
            if !grew {
                break;
            }
        }
        for n in 1..=5 {
            let basis: std::collections::BTreeSet<OpToken> = lev.basis(n).unwrap().into_iter().collect();
            assert_eq!(by_arity[n], basis, "arity {n}");
        }
    }

    #[test]
    fn morphisms() {
        let lev = lev_operad(5);
        let ucd = compose_with_unary(&com_operad(true, 5), &unary_operad(Unary::D, 16).unwrap()).unwrap();
        let incl = operad_morphism(&lev, &ucd, Some(one(e(&[1, 1])))).unwrap();
        for n in 1..=5 {
            let mut images = std::collections::BTreeSet::new();
            for t in lev.basis(n).unwrap() {
                let img = incl.apply(&t).unwrap();
                assert_eq!(img, one(t.clone()));
                images.insert(img.first().cloned().unwrap());
            }
            assert_eq!(images.len(), lev.dim(n).unwrap());
        }
        let plain = operad_morphism(&lev, &ucd, None).unwrap();
        assert_eq!(plain.apply(&e(&[1, 2, 2])).unwrap(), one(e(&[1, 2, 2])));
        let mag = magcom_operad(5);
        operad_morphism(&mag, &lev, Some(one(lev.star().unwrap()))).unwrap();
        let proj = operad_morphism(&truncated_lev(2, 5), &truncated_lev(1, 5), None).unwrap();
        assert!(proj.apply(&e(&[1, 2, 2])).unwrap().is_zero());
        assert_eq!(proj.apply(&e(&[1, 1])).unwrap(), one(e(&[1, 1])));
        let err = operad_morphism(&lev, &mag, Some(one(mag.star().unwrap()))).unwrap_err();
        assert!(matches!(err, Error::RelationViolated(r) if r.contains("(2 3)")));
        let com = com_operad(false, 5);
        operad_morphism(&com, &ucd, Some(one(e(&[0, 0])))).unwrap();
        operad_morphism(&com, &ucd, None).unwrap();
        assert!(operad_morphism(&com, &ucd, Some(one(e(&[1, 1])))).is_err());
        // uCom → Lev: Lev has no arity-0 unit
        assert!(operad_morphism(&com_operad(true, 4), &lev, Some(one(e(&[1, 1])))).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!(Operad::parse("ucom.qsd:3", 4).unwrap().name(), "uCom∘Q_3D");
        assert_eq!(Operad::parse("tqlev:2", 4).unwrap().name(), "T_2Lev");
        assert_eq!(Operad::parse("MagCom", 4).unwrap().name(), "MagCom");
        assert!(matches!(Operad::parse("ucom.qsd:0", 4), Err(Error::UnknownName { .. })));
        assert!(matches!(Operad::parse("ass", 4), Err(Error::UnknownName { .. })));
    }
}
