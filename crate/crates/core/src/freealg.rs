//! Free algebras `S(P, M)` over an operad on an unstable module.
//!
//! A basis element is an orbit of (operation, module basis tuple) under the
//! diagonal Σ_n-action. For exponent-vector operads the orbit is the sorted
//! multiset of `(exponent, label)` atoms; for `MagCom` it is a canonical tree
//! with labelled leaves. The Steenrod action is the Cartan formula.
//!
//! With `D` and `D±` every degree is infinite-dimensional; an auxiliary
//! weight `Σ 2^{-a_j}` (module elements have weight 1) is preserved by the
//! action and splits each degree into finite pieces.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::F2Vector;
use crate::operads::{OpElement, OpToken, Operad, OperadKind, Tree, Unary};
use crate::steenrod::{adem_normalize, SqWord};
use crate::unstable::UnstableModule;

/// Fixed-point dyadic rational `n / 2^64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Dyadic(i128);

const SHIFT: i32 = 64;

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic(0);

    pub fn one() -> Self {
        Dyadic(1 << SHIFT)
    }

    /// `2^e` for `-64 <= e <= 60`.
    pub fn pow2(e: i32) -> Result<Self> {
        if !(-SHIFT..=60).contains(&e) {
            return Err(Error::ExponentOverflow {
                exponent: -(e as i64),
                lo: -60,
                hi: SHIFT as i64,
            });
        }
        Ok(Dyadic(1i128 << (SHIFT + e)))
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic((n as i128) << SHIFT)
    }

    pub fn checked_add(self, o: Dyadic) -> Result<Dyadic> {
        self.0
            .checked_add(o.0)
            .map(Dyadic)
            .ok_or_else(|| Error::InvalidArgument("weight overflow".into()))
    }

    pub fn checked_sub(self, o: Dyadic) -> Result<Dyadic> {
        self.0
            .checked_sub(o.0)
            .map(Dyadic)
            .ok_or_else(|| Error::InvalidArgument("weight overflow".into()))
    }

    /// `self · 2^e` when exactly representable.
    pub fn scale_pow2(self, e: i32) -> Option<Dyadic> {
        if e >= 0 {
            let v = self.0.checked_shl(e as u32)?;
            (v >> e == self.0).then_some(Dyadic(v))
        } else {
            let k = (-e) as u32;
            (k < 127 && self.0.trailing_zeros() >= k).then(|| Dyadic(self.0 >> k))
        }
    }

    /// The value itself when it is an integer.
    pub fn as_integer(self) -> Option<i128> {
        (self.0.trailing_zeros() >= SHIFT as u32).then_some(self.0 >> SHIFT)
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Exponent `k` of the finest binary digit `2^{-k}`; `None` for zero.
    pub fn finest(self) -> Option<i32> {
        (self.0 != 0).then(|| SHIFT - self.0.trailing_zeros() as i32)
    }

    /// `floor(log2 self)` for positive values.
    pub fn log2_floor(self) -> Option<i32> {
        (self.0 > 0).then(|| 127 - self.0.leading_zeros() as i32 - SHIFT)
    }

    /// Parses `3`, `3/4`, `0.375`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a nonnegative dyadic rational"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if n < 0 || !d.is_power_of_two() || d.trailing_zeros() > SHIFT as u32 {
                return Err(bad());
            }
            return Ok(Dyadic(((n as i128) << SHIFT) >> d.trailing_zeros()));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let i: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let mut v = Dyadic::from_int(i);
            let mut rest: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let scale = 10u128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
            let mut bit = 1;
            // binary expansion of rest/scale must terminate
            while rest != 0 {
                if bit > SHIFT {
                    return Err(bad());
                }
                rest *= 2;
                if rest >= scale {
                    rest -= scale;
                    v.0 += 1i128 << (SHIFT - bit);
                }
                bit += 1;
            }
            if i < 0 {
                return Err(bad());
            }
            return Ok(v);
        }
        let n: i64 = s.parse().map_err(|_| bad())?;
        if n < 0 {
            return Err(bad());
        }
        Ok(Dyadic::from_int(n))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "0");
        }
        let tz = (self.0.trailing_zeros() as i32).min(SHIFT);
        let num = self.0 >> tz;
        let den_exp = SHIFT - tz;
        if den_exp == 0 {
            write!(f, "{num}")
        } else {
            write!(f, "{num}/{}", 1u128 << den_exp)
        }
    }
}

/// Which weights to build for `D`/`D±` operads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSpec {
    All,
    Only(Vec<Dyadic>),
}

/// A homogeneous piece: degree, and weight for weighted operads.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Grade {
    pub degree: u32,
    pub weight: Option<Dyadic>,
}

impl Grade {
    pub fn new(degree: u32, weight: Option<Dyadic>) -> Self {
        Grade { degree, weight }
    }

    pub fn shifted(self, i: u32) -> Self {
        Grade {
            degree: self.degree + i,
            weight: self.weight,
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.weight {
            Some(w) => write!(f, "(degree {}, weight {w})", self.degree),
            None => write!(f, "degree {}", self.degree),
        }
    }
}

/// A module basis element.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Label {
    pub deg: u32,
    pub idx: usize,
}

/// Canonical orbit representative of `(μ; x_1, …, x_n)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Monomial {
    /// Sorted `(exponent, label)` atoms; empty for the arity-0 unit.
    Flat(Vec<(i32, Label)>),
    Tree(Tree<Label>),
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        match self {
            Monomial::Flat(a) => a.iter().map(|(_, l)| l.deg).sum(),
            Monomial::Tree(t) => t.leaves().iter().map(|l| l.deg).sum(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Monomial::Flat(a) => a.len(),
            Monomial::Tree(t) => t.leaves().len(),
        }
    }

    /// `Σ 2^{-a_j}` over atoms.
    pub fn kraft(&self) -> Result<Dyadic> {
        match self {
            Monomial::Flat(a) => {
                let mut w = Dyadic::ZERO;
                for &(e, _) in a {
                    w = w.checked_add(Dyadic::pow2(-e)?)?;
                }
                Ok(w)
            }
            Monomial::Tree(_) => Ok(Dyadic::one()),
        }
    }

    /// The generator `(1; x)`.
    pub fn generator(l: Label, tree: bool) -> Self {
        if tree {
            Monomial::Tree(Tree::Leaf(l))
        } else {
            Monomial::Flat(vec![(0, l)])
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        match self {
            Monomial::Flat(a) => a.iter().map(|&(_, l)| l).collect(),
            Monomial::Tree(t) => t.leaves().into_iter().copied().collect(),
        }
    }

    /// Replaces the labels in traversal order and recanonicalises.
    pub fn relabel(&self, new: &[Label]) -> Monomial {
        match self {
            Monomial::Flat(a) => {
                let mut v: Vec<(i32, Label)> = a.iter().zip(new).map(|(&(e, _), &l)| (e, l)).collect();
                v.sort_unstable();
                Monomial::Flat(v)
            }
            Monomial::Tree(t) => {
                let mut it = new.iter();
                Monomial::Tree(t.map(&mut |_| Tree::Leaf(*it.next().expect("label count"))))
            }
        }
    }
}

pub type AlgElement = F2Vector<Monomial>;

/// `S(P, M)` built on every grade up to a degree cap.
#[derive(Clone, Debug)]
pub struct FreeAlgebra {
    operad: Operad,
    module: UnstableModule,
    cap: u32,
    weighted: bool,
    bases: BTreeMap<Grade, Vec<Monomial>>,
    index: HashMap<Monomial, (Grade, usize)>,
}

fn weighted_operad(p: &Operad) -> bool {
    matches!(
        p.kind(),
        OperadKind::ComUnary { unary: Unary::D | Unary::Dpm, .. } | OperadKind::Unary(Unary::D | Unary::Dpm)
    )
}

/// Builds `S(P, M)` up to degree `cap` (at most the cap of `M`).
pub fn build_free_algebra(p: &Operad, m: &UnstableModule, cap: u32, weights: &WeightSpec) -> Result<FreeAlgebra> {
    if cap > m.cap() {
        return Err(Error::DegreeAboveCap { degree: cap, cap: m.cap() });
    }
    if !m.is_connected() {
        return Err(Error::NotConnected { dim: m.dim(0)? });
    }
    let weighted = weighted_operad(p);
    let weight_list: Vec<Option<Dyadic>> = match (weighted, weights) {
        (false, _) => vec![None],
        (true, WeightSpec::Only(ws)) => ws.iter().map(|&w| Some(w)).collect(),
        (true, WeightSpec::All) => {
            return Err(Error::InvalidArgument(format!(
                "{} has infinite-dimensional degrees; choose weights",
                p.name()
            )))
        }
    };
    let mut bases = BTreeMap::new();
    for d in 0..=cap {
        for &w in &weight_list {
            let grade = Grade::new(d, w);
            bases.insert(grade, enumerate(p, m, grade)?);
        }
    }
    let mut index = HashMap::new();
    for (g, b) in &bases {
        for (k, mono) in b.iter().enumerate() {
            index.insert(mono.clone(), (*g, k));
        }
    }
    Ok(FreeAlgebra {
        operad: p.clone(),
        module: m.clone(),
        cap,
        weighted,
        bases,
        index,
    })
}

fn enumerate(p: &Operad, m: &UnstableModule, grade: Grade) -> Result<Vec<Monomial>> {
    let d = grade.degree;
    if d == 0 {
        let unit_ok = p.is_unital() && grade.weight.is_none_or(|w| w == Dyadic::ZERO);
        return Ok(if unit_ok { vec![Monomial::Flat(Vec::new())] } else { Vec::new() });
    }
    if p.is_tree() {
        return Ok(tree_monomials(&module_labels(m, d)?, d));
    }
    let target = match p.kind() {
        OperadKind::Lev { .. } => Some(Dyadic::one()),
        _ => grade.weight,
    };
    let (lo, hi) = p.exponent_window();
    Ok(atom_multisets(m, d, lo, hi, target, max_flat_arity(p))?
        .into_iter()
        .map(Monomial::Flat)
        .collect())
}

/// Basis labels of `M` in degrees `1..=d`.
pub fn module_labels(m: &UnstableModule, d: u32) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for deg in 1..=d.min(m.cap()) {
        for idx in 0..m.dim(deg)? {
            labels.push(Label { deg, idx });
        }
    }
    Ok(labels)
}

pub(crate) fn max_flat_arity(p: &Operad) -> usize {
    if matches!(p.kind(), OperadKind::Unary(_)) {
        1
    } else {
        usize::MAX
    }
}

/// Sorted multisets of `(exponent, label)` atoms of total degree `degree`
/// with exponents in `lo..=hi`, at most `max_arity` atoms, and
/// `Σ 2^{-a} = kraft` when `kraft` is given.
pub fn atom_multisets(
    m: &UnstableModule,
    degree: u32,
    mut lo: i32,
    mut hi: i32,
    kraft: Option<Dyadic>,
    max_arity: usize,
) -> Result<Vec<Vec<(i32, Label)>>> {
    if let Some(t) = kraft {
        if t.0 < 0 || (t == Dyadic::ZERO) != (degree == 0) {
            return Ok(Vec::new());
        }
        if t == Dyadic::ZERO {
            return Ok(vec![Vec::new()]);
        }
        lo = lo.max(-t.log2_floor().expect("positive"));
        hi = hi.min(t.finest().expect("positive") + degree as i32 - 1);
    }
    let labels = module_labels(m, degree)?;
    let mut atoms = Vec::new();
    for e in lo..=hi {
        let k = if kraft.is_some() { Dyadic::pow2(-e)? } else { Dyadic::ZERO };
        for &l in &labels {
            atoms.push((e, l, k));
        }
    }
    let max_atom = atoms.iter().map(|a| a.2).max().unwrap_or(Dyadic::ZERO);
    let mut out = Vec::new();
    let ctx = Dfs {
        atoms: &atoms,
        max_arity,
        use_kraft: kraft.is_some(),
        max_atom,
    };
    ctx.run(0, degree, kraft.unwrap_or(Dyadic::ZERO), &mut Vec::new(), &mut out);
    Ok(out)
}

struct Dfs<'a> {
    atoms: &'a [(i32, Label, Dyadic)],
    max_arity: usize,
    use_kraft: bool,
    max_atom: Dyadic,
}

impl Dfs<'_> {
    fn run(&self, start: usize, rem: u32, kraft: Dyadic, cur: &mut Vec<(i32, Label)>, out: &mut Vec<Vec<(i32, Label)>>) {
        if rem == 0 {
            if !self.use_kraft || kraft == Dyadic::ZERO {
                out.push(cur.clone());
            }
            return;
        }
        if cur.len() == self.max_arity {
            return;
        }
        if self.use_kraft && (kraft.0 <= 0 || kraft.0 > self.max_atom.0 * rem as i128) {
            return;
        }
        for k in start..self.atoms.len() {
            let (e, l, w) = self.atoms[k];
            if l.deg > rem || (self.use_kraft && w.0 > kraft.0) {
                continue;
            }
            cur.push((e, l));
            self.run(k, rem - l.deg, Dyadic(kraft.0 - w.0), cur, out);
            cur.pop();
        }
    }
}

pub fn label_multisets(labels: &[Label], start: usize, rem: u32, cur: &mut Vec<Label>, out: &mut Vec<Vec<Label>>) {
    if rem == 0 {
        out.push(cur.clone());
        return;
    }
    for k in start..labels.len() {
        if labels[k].deg <= rem {
            cur.push(labels[k]);
            label_multisets(labels, k, rem - labels[k].deg, cur, out);
            cur.pop();
        }
    }
}

/// Canonical trees whose leaves carry exactly the given multiset.
pub fn trees_on_multiset(ms: &[Label], memo: &mut HashMap<Vec<Label>, Vec<Tree<Label>>>) -> Vec<Tree<Label>> {
    if ms.len() == 1 {
        return vec![Tree::Leaf(ms[0])];
    }
    if let Some(t) = memo.get(ms) {
        return t.clone();
    }
    let mut set = BTreeSet::new();
    // sub-multisets containing the first element, to halve the work
    let rest = &ms[1..];
    let mut seen = BTreeSet::new();
    for mask in 0u64..(1u64 << rest.len()) {
        let mut a = vec![ms[0]];
        let mut b = Vec::new();
        for (k, &l) in rest.iter().enumerate() {
            if mask >> k & 1 == 1 {
                a.push(l);
            } else {
                b.push(l);
            }
        }
        if b.is_empty() || !seen.insert(a.clone()) {
            continue;
        }
        let ta = trees_on_multiset(&a, memo);
        let tb = trees_on_multiset(&b, memo);
        for x in &ta {
            for y in &tb {
                set.insert(Tree::node(x.clone(), y.clone()));
            }
        }
    }
    let v: Vec<Tree<Label>> = set.into_iter().collect();
    memo.insert(ms.to_vec(), v.clone());
    v
}

fn tree_monomials(labels: &[Label], d: u32) -> Vec<Monomial> {
    let mut sets = Vec::new();
    label_multisets(labels, 0, d, &mut Vec::new(), &mut sets);
    let mut memo = HashMap::new();
    let mut out: Vec<Monomial> = sets
        .iter()
        .flat_map(|ms| trees_on_multiset(ms, &mut memo))
        .map(Monomial::Tree)
        .collect();
    out.sort();
    out
}

impl FreeAlgebra {
    pub fn operad(&self) -> &Operad {
        &self.operad
    }

    pub fn module(&self) -> &UnstableModule {
        &self.module
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn grades(&self) -> impl Iterator<Item = Grade> + '_ {
        self.bases.keys().copied()
    }

    /// Weights built for the weighted operads (`[None]` otherwise).
    pub fn weights(&self) -> Vec<Option<Dyadic>> {
        let mut w: Vec<Option<Dyadic>> = self.bases.keys().map(|g| g.weight).collect();
        w.sort();
        w.dedup();
        w
    }

    pub fn basis(&self, g: Grade) -> Result<&[Monomial]> {
        if g.degree > self.cap {
            return Err(Error::DegreeAboveCap { degree: g.degree, cap: self.cap });
        }
        self.bases.get(&g).map(Vec::as_slice).ok_or_else(|| Error::GradeNotBuilt {
            degree: g.degree,
            weight: g.weight.map_or("none".into(), |w| w.to_string()),
        })
    }

    pub fn dim(&self, g: Grade) -> Result<usize> {
        Ok(self.basis(g)?.len())
    }

    /// Dimensions per degree, summed over the built weights.
    pub fn dims_by_degree(&self) -> Vec<usize> {
        let mut out = vec![0; self.cap as usize + 1];
        for (g, b) in &self.bases {
            out[g.degree as usize] += b.len();
        }
        out
    }

    pub fn index_of(&self, m: &Monomial) -> Option<(Grade, usize)> {
        self.index.get(m).copied()
    }

    /// The grade of a monomial (whether or not it was built).
    pub fn grade_of(&self, m: &Monomial) -> Result<Grade> {
        let w = if self.weighted {
            Some(if m.arity() == 0 { Dyadic::ZERO } else { m.kraft()? })
        } else {
            None
        };
        Ok(Grade::new(m.degree(), w))
    }

    pub fn generator(&self, l: Label) -> Monomial {
        Monomial::generator(l, self.operad.is_tree())
    }

    pub fn display(&self, m: &Monomial) -> String {
        let lab = |l: &Label| self.module.label(l.deg, l.idx).to_string();
        match m {
            Monomial::Flat(a) if a.is_empty() => "1".into(),
            Monomial::Flat(a) => {
                let parts: Vec<String> = a
                    .iter()
                    .map(|(e, l)| if *e == 0 { lab(l) } else { format!("d^{e}({})", lab(l)) })
                    .collect();
                format!("(μ_{}; {})", a.len(), parts.join(", "))
            }
            Monomial::Tree(t) => format!("{}", TreeDisplay(t, &lab)),
        }
    }

    pub fn display_elem(&self, v: &AlgElement) -> String {
        if v.is_zero() {
            return "0".into();
        }
        v.iter().map(|m| self.display(m)).collect::<Vec<_>>().join(" + ")
    }

    fn check_cap(&self, degree: u32) -> Result<()> {
        if degree > self.cap {
            Err(Error::DegreeAboveCap { degree, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// `Sq^i` of a monomial by the Cartan formula.
    pub fn sq(&self, i: u32, m: &Monomial) -> Result<AlgElement> {
        let deg = m.degree();
        self.check_cap(deg + i)?;
        if i == 0 {
            return Ok(F2Vector::from_term(m.clone()));
        }
        if i > deg {
            return Ok(F2Vector::zero());
        }
        let labels = m.labels();
        let mut out = F2Vector::zero();
        let mut choice = Vec::with_capacity(labels.len());
        self.cartan(m, &labels, i, &mut choice, &mut out)?;
        Ok(out)
    }

    fn cartan(&self, m: &Monomial, labels: &[Label], rem: u32, choice: &mut Vec<Label>, out: &mut AlgElement) -> Result<()> {
        let k = choice.len();
        if k == labels.len() {
            if rem == 0 {
                out.add_term(m.relabel(choice));
            }
            return Ok(());
        }
        let l = labels[k];
        let tail: u32 = labels[k + 1..].iter().map(|x| x.deg).sum();
        let lo = rem.saturating_sub(tail);
        for j in lo..=l.deg.min(rem) {
            for idx in &self.module.sq(j, l.deg, l.idx)? {
                choice.push(Label { deg: l.deg + j, idx: *idx });
                self.cartan(m, labels, rem - j, choice, out)?;
                choice.pop();
            }
        }
        Ok(())
    }

    pub fn sq_elem(&self, i: u32, v: &AlgElement) -> Result<AlgElement> {
        let mut out = F2Vector::zero();
        for m in v {
            out += self.sq(i, m)?;
        }
        Ok(out)
    }

    /// Word action, rightmost letter first.
    pub fn act_word(&self, w: &SqWord, v: &AlgElement) -> Result<AlgElement> {
        let mut cur = v.clone();
        for &i in w.exponents().iter().rev() {
            cur = self.sq_elem(i, &cur)?;
        }
        Ok(cur)
    }

    /// `μ(v_1, …, v_n)` for an operation `μ` of arity `n`.
    pub fn compose(&self, mu: &OpToken, args: &[AlgElement]) -> Result<AlgElement> {
        if mu.arity() != args.len() {
            return Err(Error::MixedBases { expected: mu.arity(), found: args.len() });
        }
        let mut out = F2Vector::zero();
        let mut pick = Vec::with_capacity(args.len());
        self.compose_terms(mu, args, &mut pick, &mut out)?;
        Ok(out)
    }

    fn compose_terms<'a>(&self, mu: &OpToken, args: &'a [AlgElement], pick: &mut Vec<&'a Monomial>, out: &mut AlgElement) -> Result<()> {
        if pick.len() == args.len() {
            if let Some(m) = self.compose_monomials(mu, pick)? {
                out.add_term(m);
            }
            return Ok(());
        }
        for m in &args[pick.len()] {
            pick.push(m);
            self.compose_terms(mu, args, pick, out)?;
            pick.pop();
        }
        Ok(())
    }

    fn compose_monomials(&self, mu: &OpToken, parts: &[&Monomial]) -> Result<Option<Monomial>> {
        self.check_cap(parts.iter().map(|m| m.degree()).sum())?;
        match mu {
            OpToken::Exps(a) => {
                let mut exps = Vec::new();
                let mut labels = Vec::new();
                for (&aj, m) in a.iter().zip(parts) {
                    let Monomial::Flat(atoms) = m else {
                        return Err(Error::InvalidArgument("tree monomial in a flat algebra".into()));
                    };
                    for &(b, l) in atoms {
                        exps.push(aj + b);
                        labels.push(l);
                    }
                }
                Ok(self.operad.reduce_exps(exps)?.map(|e| {
                    let mut v: Vec<(i32, Label)> = e.into_iter().zip(labels).collect();
                    v.sort_unstable();
                    Monomial::Flat(v)
                }))
            }
            OpToken::Tree(t) => {
                let mut subs = Vec::new();
                for m in parts {
                    match m {
                        Monomial::Tree(s) => subs.push(s),
                        _ => return Err(Error::InvalidArgument("flat monomial in a tree algebra".into())),
                    }
                }
                Ok(Some(Monomial::Tree(t.map(&mut |&slot| subs[slot].clone()))))
            }
        }
    }

    pub fn compose_elem(&self, mu: &OpElement, args: &[AlgElement]) -> Result<AlgElement> {
        let mut out = F2Vector::zero();
        for t in mu {
            out += self.compose(t, args)?;
        }
        Ok(out)
    }

    /// `α^⋆(Φt) = ⋆(t, t)`.
    pub fn alpha_star(&self, star: &OpElement, t: &AlgElement) -> Result<AlgElement> {
        self.compose_elem(star, &[t.clone(), t.clone()])
    }

    /// Checks `Sq^{deg m} m = (μ; Sq_0 x_1, …)` and `Sq^{deg m + 1} m = 0`
    /// on every basis monomial whose squares stay within the cap.
    pub fn check_top_square(&self) -> Result<()> {
        for (g, b) in &self.bases {
            if 2 * g.degree > self.cap {
                continue;
            }
            for m in b {
                let top = self.sq(g.degree, m)?;
                let mut labels = Vec::new();
                for l in m.labels() {
                    let img = self.module.sq(l.deg, l.deg, l.idx)?;
                    labels.push(img.iter().map(|&idx| Label { deg: 2 * l.deg, idx }).collect::<Vec<_>>());
                }
                let mut expected = F2Vector::zero();
                expand_choices(&labels, &mut Vec::new(), &mut |ch| expected.add_term(m.relabel(ch)));
                if top != expected {
                    return Err(Error::Inconsistent(format!("top square fails on {}", self.display(m))));
                }
                if 2 * g.degree < self.cap && !self.sq(g.degree + 1, m)?.is_zero() {
                    return Err(Error::Inconsistent(format!("instability fails on {}", self.display(m))));
                }
            }
        }
        Ok(())
    }

    /// Adem relations for every inadmissible pair on every basis monomial.
    pub fn certify(&self) -> Result<()> {
        for (g, b) in &self.bases {
            let room = self.cap - g.degree;
            for m in b {
                let x = F2Vector::from_term(m.clone());
                for j in 1..=room {
                    for i in 1..(2 * j).min(room - j + 1) {
                        let w = SqWord::new([i, j]);
                        let lhs = self.act_word(&w, &x)?;
                        let mut rhs = F2Vector::zero();
                        for t in adem_normalize(&w) {
                            rhs += self.act_word(t.word(), &x)?;
                        }
                        if lhs != rhs {
                            return Err(Error::Inconsistent(format!(
                                "Adem relation Sq^{i} Sq^{j} fails on {}",
                                self.display(m)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn expand_choices(options: &[Vec<Label>], cur: &mut Vec<Label>, f: &mut impl FnMut(&[Label])) {
    if cur.len() == options.len() {
        f(cur);
        return;
    }
    for &l in &options[cur.len()] {
        cur.push(l);
        expand_choices(options, cur, f);
        cur.pop();
    }
}

struct TreeDisplay<'a, F>(&'a Tree<Label>, &'a F);

impl<F: Fn(&Label) -> String> fmt::Display for TreeDisplay<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Tree::Leaf(l) => write!(f, "{}", (self.1)(l)),
            Tree::Node(a, b) => write!(f, "⋆({}, {})", TreeDisplay(a, self.1), TreeDisplay(b, self.1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operads::{com_operad, compose_with_unary, lev_operad, magcom_operad, unary_operad, Perm};
    use crate::unstable::{direct_sum, free_module, suspend};

    fn all() -> WeightSpec {
        WeightSpec::All
    }

    /// Multisets of powers of two summing to `d`.
    fn binary_partitions(d: u32) -> usize {
        fn rec(d: u32, max: u32) -> usize {
            if d == 0 {
                return 1;
            }
            let mut n = 0;
            let mut p = max;
            loop {
                if p <= d {
                    n += rec(d - p, p);
                }
                if p == 1 {
                    break;
                }
                p /= 2;
            }
            n
        }
        rec(d, 1 << 10)
    }

    /// Multisets of `d` nonnegative integers with `Σ 2^{-a} = 1`, counted
    /// with exact rationals.
    fn dyadic_multisets(d: usize) -> usize {
        fn rec(left: usize, min_a: u32, num: u64, den_exp: u32) -> usize {
            // remaining sum num / 2^den_exp
            if left == 0 {
                return usize::from(num == 0);
            }
            if num == 0 {
                return 0;
            }
            let mut n = 0;
            for a in min_a..=24 {
                // term 2^{-a} = 2^{den_exp - a} / 2^den_exp
                let (num2, den2) = if a > den_exp { (num << (a - den_exp), a) } else { (num, den_exp) };
                let term = 1u64 << (den2 - a);
                if term > num2 {
                    continue;
                }
                if term * (left as u64) < num2 {
                    break;
                }
                n += rec(left - 1, a, num2 - term, den2);
            }
            n
        }
        rec(d, 0, 1, 0)
    }

    #[test]
    fn dyadic_parsing_and_display() {
        assert_eq!(Dyadic::parse("3/4").unwrap().to_string(), "3/4");
        assert_eq!(Dyadic::parse("0.375").unwrap(), Dyadic::parse("3/8").unwrap());
        assert_eq!(Dyadic::parse("2").unwrap().to_string(), "2");
        assert!(Dyadic::parse("1/3").is_err());
        assert!(Dyadic::parse("0.1").is_err());
        assert_eq!(Dyadic::parse("3/4").unwrap().finest(), Some(2));
        assert_eq!(Dyadic::parse("5").unwrap().log2_floor(), Some(2));
    }

    #[test]
    fn ucom_on_f1_is_binary_partitions() {
        let a = build_free_algebra(&com_operad(true, 16), &free_module(1, 16).unwrap(), 16, &all()).unwrap();
        let dims = a.dims_by_degree();
        for d in 0..=16 {
            assert_eq!(dims[d as usize], binary_partitions(d), "degree {d}");
        }
        a.check_top_square().unwrap();
    }

    #[test]
    fn lev_on_sigma_f0_is_dyadic_multisets() {
        let m = suspend(&free_module(0, 9).unwrap()).unwrap();
        let a = build_free_algebra(&lev_operad(10), &m, 10, &all()).unwrap();
        let dims = a.dims_by_degree();
        assert_eq!(&dims[1..=5], &[1, 1, 1, 2, 3]);
        for d in 1..=10 {
            assert_eq!(dims[d], dyadic_multisets(d), "degree {d}");
        }
    }

    #[test]
    fn free_algebra_on_zero_module() {
        let z = UnstableModule::zero(6);
        let a = build_free_algebra(&com_operad(true, 6), &z, 6, &all()).unwrap();
        assert_eq!(a.dims_by_degree(), vec![1, 0, 0, 0, 0, 0, 0]);
        let b = build_free_algebra(&lev_operad(6), &z, 6, &all()).unwrap();
        assert!(b.dims_by_degree().iter().all(|&n| n == 0));
        assert!(matches!(
            build_free_algebra(&com_operad(true, 4), &free_module(0, 4).unwrap(), 4, &all()),
            Err(Error::NotConnected { .. })
        ));
    }

    #[test]
    fn weighted_operads_need_weights() {
        let p = compose_with_unary(&com_operad(true, 8), &unary_operad(Unary::D, 16).unwrap()).unwrap();
        let f1 = free_module(1, 8).unwrap();
        assert!(build_free_algebra(&p, &f1, 8, &all()).is_err());
        let a = build_free_algebra(&p, &f1, 8, &WeightSpec::Only(vec![Dyadic::one()])).unwrap();
        // degree 1, weight 1: only ι itself
        assert_eq!(a.dim(Grade::new(1, Some(Dyadic::one()))).unwrap(), 1);
        // degree 2, weight 1: (d,d; ι,ι) and Sq^1 ι
        assert_eq!(a.dim(Grade::new(2, Some(Dyadic::one()))).unwrap(), 2);
        assert!(matches!(a.dim(Grade::new(2, None)), Err(Error::GradeNotBuilt { .. })));
        a.certify().unwrap();
    }

    #[test]
    fn orbit_counts_match_explicit_symmetric_group_orbits() {
        // explicit Σ_n orbits of (token, label tuple) pairs
        fn orbit_count(p: &Operad, m: &UnstableModule, d: u32) -> usize {
            let mut labels = Vec::new();
            for deg in 1..=d {
                for idx in 0..m.dim(deg).unwrap() {
                    labels.push(Label { deg, idx });
                }
            }
            let mut orbits = BTreeSet::new();
            for n in 1..=d as usize {
                let toks = p.basis_within(n, Some(8)).unwrap();
                let mut tuples = vec![vec![]];
                for _ in 0..n {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t: Vec<Label>| {
                            labels.iter().map(move |&l| {
                                let mut t = t.clone();
                                t.push(l);
                                t
                            })
                        })
                        .collect();
                }
                for t in toks {
                    for tup in &tuples {
                        if tup.iter().map(|l| l.deg).sum::<u32>() != d {
                            continue;
                        }
                        let orbit: BTreeSet<(OpToken, Vec<Label>)> = Perm::all(n)
                            .iter()
                            .map(|s| {
                                let mut moved = tup.clone();
                                for (k, &l) in tup.iter().enumerate() {
                                    moved[s.image(k)] = l;
                                }
                                (p.act(&t, s).unwrap(), moved)
                            })
                            .collect();
                        orbits.insert(orbit.into_iter().next().unwrap());
                    }
                }
            }
            orbits.len()
        }
        let f1 = free_module(1, 6).unwrap();
        let sf0 = suspend(&free_module(0, 5).unwrap()).unwrap();
        let two = direct_sum(&[&sf0, &sf0]).unwrap();
        let cases: Vec<(Operad, &UnstableModule)> = vec![
            (com_operad(false, 6), &f1),
            (lev_operad(6), &sf0),
            (lev_operad(6), &two),
            (magcom_operad(6), &f1),
            (magcom_operad(6), &two),
            (
                compose_with_unary(&com_operad(false, 6), &unary_operad(Unary::Qs(2), 0).unwrap()).unwrap(),
                &two,
            ),
        ];
        for (p, m) in &cases {
            let a = build_free_algebra(p, m, 5, &all()).unwrap();
            for d in 1..=5 {
                assert_eq!(a.dims_by_degree()[d as usize], orbit_count(p, m, d), "{} degree {d}", p.name());
            }
        }
    }

    #[test]
    fn cartan_action_examples() {
        let f1 = free_module(1, 8).unwrap();
        let a = build_free_algebra(&com_operad(true, 8), &f1, 8, &all()).unwrap();
        let j0 = AlgElement::from_term(a.generator(Label { deg: 1, idx: 0 }));
        let sq2 = a.compose(&OpToken::Exps(vec![0, 0]), &[j0.clone(), j0.clone()]).unwrap();
        assert_eq!(sq2.len(), 1);
        assert_eq!(sq2.first().unwrap().arity(), 2);
        // Sq^1(j0^2) = 2 j0 j1 = 0, Sq^2(j0^2) = j1^2
        assert!(a.sq_elem(1, &sq2).unwrap().is_zero());
        let j1 = AlgElement::from_term(a.generator(Label { deg: 2, idx: 0 }));
        let j1sq = a.compose(&OpToken::Exps(vec![0, 0]), &[j1.clone(), j1]).unwrap();
        assert_eq!(a.sq_elem(2, &sq2).unwrap(), j1sq);
        assert_eq!(a.sq_elem(0, &sq2).unwrap(), sq2);
        assert!(matches!(a.sq(7, sq2.first().unwrap()), Err(Error::DegreeAboveCap { .. })));
        let unit = a.compose(&OpToken::Exps(vec![0]), std::slice::from_ref(&j0)).unwrap();
        assert_eq!(unit, j0);
        a.certify().unwrap();
    }

    #[test]
    fn alpha_star_is_linear_over_the_steenrod_algebra() {
        let f2 = free_module(2, 12).unwrap();
        let lev = lev_operad(12);
        let a = build_free_algebra(&lev, &f2, 12, &all()).unwrap();
        let star = OpElement::from_term(lev.star().unwrap());
        assert!(a.alpha_star(&star, &F2Vector::zero()).unwrap().is_zero());
        for d in 1..=3 {
            for m in a.basis(Grade::new(d, None)).unwrap() {
                let t = AlgElement::from_term(m.clone());
                let am = a.alpha_star(&star, &t).unwrap();
                assert!(am.iter().all(|x| x.degree() == 2 * d));
                for i in 0..=d {
                    if 2 * (d + i) > 12 {
                        continue;
                    }
                    let lhs = a.sq_elem(2 * i, &am).unwrap();
                    let rhs = a.alpha_star(&star, &a.sq(i, m).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                    if 2 * d + 2 * i < 12 {
                        assert!(a.sq_elem(2 * i + 1, &am).unwrap().is_zero());
                    }
                }
            }
        }
        a.check_top_square().unwrap();
    }

    #[test]
    fn magcom_and_lev_algebras_are_certified() {
        let f1 = free_module(1, 8).unwrap();
        build_free_algebra(&magcom_operad(8), &f1, 8, &all()).unwrap().certify().unwrap();
        build_free_algebra(&lev_operad(8), &f1, 8, &all()).unwrap().certify().unwrap();
    }

    #[test]
    fn inclusions_induce_injections_on_monomials() {
        let f1 = free_module(1, 8).unwrap();
        let f2 = free_module(2, 8).unwrap();
        let sum = direct_sum(&[&f1, &f2]).unwrap();
        let p = lev_operad(8);
        let small = build_free_algebra(&p, &f1, 8, &all()).unwrap();
        let big = build_free_algebra(&p, &sum, 8, &all()).unwrap();
        for d in 0..=8 {
            let g = Grade::new(d, None);
            let mut images = BTreeSet::new();
            for m in small.basis(g).unwrap() {
                // F(1) is the first summand, so basis indices are unchanged
                assert!(big.index_of(m).is_some());
                images.insert(m.clone());
            }
            assert_eq!(images.len(), small.dim(g).unwrap());
        }
    }
}
