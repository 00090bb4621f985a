//! Polynomial models with the shifted action `Sq^1 x_i = x_{i-1}^2`:
//! the Brown–Gitler algebra `J = F[x_i, i >= 0]` (with `x_{-1} = 0`), the
//! Carlsson algebra `K = F[x_i, i ∈ Z]`, the Campbell–Selick algebras
//! `M_s = F[x_i, i ∈ Z/s]`, and the truncations `F[x_0, …, x_q]`.
//!
//! Every variable has degree 1 and weight `2^i`. The internal product of a
//! weight piece is `a ⋆ b = d(a b)` where `d(x_i) = x_{i-1}` is the shift.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freealg::{AlgElement, Dyadic, Label, Monomial};
use crate::gf2::{BitRow, Echelon, F2Vector, GradedSpace};
use crate::kfunctor::{as_composite, QuotientAlgebra};
use crate::operads::{OpToken, OperadKind};
use crate::unstable::{free_module, Elem, UnstableModule};

/// Which polynomial model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Brown–Gitler, indices in `N`.
    J,
    /// Carlsson, indices in `Z`.
    K,
    /// Campbell–Selick, indices in `Z/s`.
    Ms(u32),
    /// `F[x_0, …, x_q]` restricted to weights `1..=2^q`, i.e. `⊕ J(i)`.
    Jtrunc(u32),
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::UnknownName {
            kind: "model",
            name: s.into(),
            expected: "j, k, ms:<s>, jtrunc:<q>".into(),
        };
        let lower = s.to_ascii_lowercase();
        match lower.split_once(':') {
            None if lower == "j" => Ok(ModelKind::J),
            None if lower == "k" => Ok(ModelKind::K),
            Some(("ms", n)) => match n.parse::<u32>() {
                Ok(0) => Err(Error::InvalidArgument("M_s needs s >= 1".into())),
                Ok(n) => Ok(ModelKind::Ms(n)),
                Err(_) => Err(bad()),
            },
            Some(("jtrunc", n)) => n.parse().map(ModelKind::Jtrunc).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::J => write!(f, "J"),
            ModelKind::K => write!(f, "K"),
            ModelKind::Ms(s) => write!(f, "M_{s}"),
            ModelKind::Jtrunc(q) => write!(f, "J≤{}", 1u64 << q),
        }
    }
}

/// `∏ x_i^{a_i}`, sorted by index, every exponent positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct PolyMonomial(pub Vec<(i32, u32)>);

pub type PolyElement = F2Vector<PolyMonomial>;

impl PolyMonomial {
    pub fn one() -> Self {
        PolyMonomial(Vec::new())
    }

    pub fn var(i: i32) -> Self {
        PolyMonomial(vec![(i, 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|v| v.1).sum()
    }

    /// `Σ a_i 2^i`.
    pub fn weight(&self) -> Result<Dyadic> {
        let mut w = Dyadic::ZERO;
        for &(i, a) in &self.0 {
            let part = Dyadic::from_int(a as i64)
                .scale_pow2(i)
                .ok_or_else(|| Error::InvalidArgument(format!("weight of x_{i} is out of range")))?;
            w = w.checked_add(part)?;
        }
        Ok(w)
    }

    pub fn mul(&self, o: &PolyMonomial) -> PolyMonomial {
        let mut out = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut p, mut q) = (0, 0);
        while p < self.0.len() || q < o.0.len() {
            match (self.0.get(p), o.0.get(q)) {
                (Some(&a), Some(&b)) if a.0 == b.0 => {
                    out.push((a.0, a.1 + b.1));
                    p += 1;
                    q += 1;
                }
                (Some(&a), Some(&b)) if a.0 < b.0 => {
                    out.push(a);
                    p += 1;
                }
                (Some(&a), None) => {
                    out.push(a);
                    p += 1;
                }
                (_, Some(&b)) => {
                    out.push(b);
                    q += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        PolyMonomial(out)
    }
}

impl fmt::Display for PolyMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(i, a)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            if i < 0 {
                write!(f, "x_{{{i}}}")?;
            } else {
                write!(f, "x_{i}")?;
            }
            if a > 1 {
                write!(f, "^{a}")?;
            }
        }
        Ok(())
    }
}

pub fn poly_mul(a: &PolyElement, b: &PolyElement) -> PolyElement {
    let mut out = F2Vector::zero();
    for x in a {
        for y in b {
            out.add_term(x.mul(y));
        }
    }
    out
}

/// Largest supported degree cap; keeps all weights inside `Dyadic`.
pub const MODEL_CAP_LIMIT: u32 = 30;

/// A polynomial model truncated at a degree cap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedPolynomialAlgebra {
    kind: ModelKind,
    cap: u32,
    /// Indices of the variables that may occur. For `K` the certified
    /// window is `[-2 cap, cap]`: a monomial of degree `<= cap` and weight
    /// `w >= 2^{-cap}` only involves indices `>= log2(w) - cap + 1`.
    window: (i32, i32),
}

pub fn build_model(kind: ModelKind, cap: u32) -> Result<ShiftedPolynomialAlgebra> {
    if cap > MODEL_CAP_LIMIT {
        return Err(Error::DegreeAboveCap {
            degree: cap,
            cap: MODEL_CAP_LIMIT,
        });
    }
    let c = cap as i32;
    let window = match kind {
        ModelKind::J => (0, c),
        ModelKind::K => (-2 * c, c),
        ModelKind::Ms(0) => return Err(Error::InvalidArgument("M_s needs s >= 1".into())),
        ModelKind::Ms(s) => (0, s as i32 - 1),
        ModelKind::Jtrunc(q) if q as i32 > c => {
            return Err(Error::InvalidArgument(format!("J≤2^{q} needs q <= cap = {cap}")))
        }
        ModelKind::Jtrunc(q) => (0, q as i32),
    };
    Ok(ShiftedPolynomialAlgebra { kind, cap, window })
}

impl ShiftedPolynomialAlgebra {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn window(&self) -> (i32, i32) {
        self.window
    }

    pub fn is_weighted(&self) -> bool {
        !matches!(self.kind, ModelKind::Ms(_))
    }

    /// Normalises an index: reduces mod `s`, sends `x_{-1}` of `J` to zero
    /// (`None`), and rejects indices outside the certified window of `K`.
    fn normalize(&self, i: i32) -> Result<Option<i32>> {
        let (lo, hi) = self.window;
        match self.kind {
            ModelKind::Ms(s) => Ok(Some(i.rem_euclid(s as i32))),
            ModelKind::J | ModelKind::Jtrunc(_) if i < 0 => Ok(None),
            _ if i < lo || i > hi => Err(Error::ExponentOverflow {
                exponent: i as i64,
                lo: lo as i64,
                hi: hi as i64,
            }),
            _ => Ok(Some(i)),
        }
    }

    fn monomial_of(&self, factors: impl IntoIterator<Item = (i32, u32)>) -> Result<Option<PolyMonomial>> {
        let mut out = PolyMonomial::one();
        for (i, a) in factors {
            if a == 0 {
                continue;
            }
            match self.normalize(i)? {
                Some(j) => out = out.mul(&PolyMonomial(vec![(j, a)])),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// `d^a`: the algebra map `x_i ↦ x_{i-a}`.
    pub fn shift(&self, m: &PolyMonomial, a: i32) -> Result<PolyElement> {
        Ok(self
            .monomial_of(m.0.iter().map(|&(i, e)| (i - a, e)))?
            .map_or_else(F2Vector::zero, F2Vector::from_term))
    }

    pub fn shift_elem(&self, v: &PolyElement, a: i32) -> Result<PolyElement> {
        let mut out = F2Vector::zero();
        for m in v {
            out += self.shift(m, a)?;
        }
        Ok(out)
    }

    /// `Sq^k m` by the Cartan formula from `Sq x_i = x_i + x_{i-1}^2`.
    pub fn sq(&self, k: u32, m: &PolyMonomial) -> Result<PolyElement> {
        let mut out = F2Vector::zero();
        if k > m.degree() {
            return Ok(out);
        }
        let mut js = vec![0u32; m.0.len()];
        self.cartan(m, k, 0, &mut js, &mut out)?;
        Ok(out)
    }

    fn cartan(&self, m: &PolyMonomial, rem: u32, pos: usize, js: &mut Vec<u32>, out: &mut PolyElement) -> Result<()> {
        if pos == m.0.len() {
            if rem == 0 {
                let factors = m.0.iter().zip(js.iter()).flat_map(|(&(i, a), &j)| [(i, a - j), (i - 1, 2 * j)]);
                if let Some(t) = self.monomial_of(factors)? {
                    out.add_term(t);
                }
            }
            return Ok(());
        }
        let a = m.0[pos].1;
        for j in 0..=a.min(rem) {
            // binom(a, j) is odd iff the bits of j lie in a
            if j & !a == 0 {
                js[pos] = j;
                self.cartan(m, rem - j, pos + 1, js, out)?;
            }
        }
        js[pos] = 0;
        Ok(())
    }

    pub fn sq_elem(&self, k: u32, v: &PolyElement) -> Result<PolyElement> {
        let mut out = F2Vector::zero();
        for m in v {
            out += self.sq(k, m)?;
        }
        Ok(out)
    }

    /// The internal product `a ⋆ b = d(a b)`.
    pub fn star(&self, a: &PolyElement, b: &PolyElement) -> Result<PolyElement> {
        self.shift_elem(&poly_mul(a, b), 1)
    }

    /// Evaluates the flat operation with exponents `exps`:
    /// `(y_1, …, y_n) ↦ ∏ d^{a_j}(y_j)`.
    pub fn evaluate(&self, exps: &[i32], args: &[PolyElement]) -> Result<PolyElement> {
        let mut out = F2Vector::from_term(PolyMonomial::one());
        for (&a, y) in exps.iter().zip(args) {
            out = poly_mul(&out, &self.shift_elem(y, a)?);
        }
        Ok(out)
    }

    /// Monomials of degree `d` and weight `w` (`None`: every weight allowed
    /// by the model; only for `M_s` and the truncations).
    pub fn basis(&self, d: u32, w: Option<Dyadic>) -> Result<Vec<PolyMonomial>> {
        let (lo, mut hi) = self.window;
        let bound = match (self.kind, w) {
            (_, Some(w)) => {
                if !w.is_positive() {
                    return Ok(if d == 0 && w == Dyadic::ZERO { vec![PolyMonomial::one()] } else { Vec::new() });
                }
                if matches!(self.kind, ModelKind::Ms(_)) {
                    return Err(Error::InvalidArgument("M_s carries no weight grading".into()));
                }
                hi = hi.min(w.log2_floor().expect("positive"));
                Some((w, true))
            }
            (ModelKind::Ms(_), None) => None,
            (ModelKind::Jtrunc(q), None) => {
                if d == 0 {
                    return Ok(Vec::new());
                }
                Some((Dyadic::from_int(1i64 << q), false))
            }
            _ => return Err(Error::InvalidArgument(format!("{} needs a weight", self.kind))),
        };
        let mut out = Vec::new();
        let mut cur = Vec::new();
        match bound {
            None => enumerate_free(hi, lo, d, &mut cur, &mut out),
            Some((w, exact)) => {
                let units = w
                    .scale_pow2(-lo)
                    .and_then(Dyadic::as_integer)
                    .ok_or_else(|| Error::InvalidArgument(format!("weight {w} is finer than the window")))?;
                if hi >= lo {
                    enumerate_weighted(hi, lo, d, units, exact, &mut cur, &mut out);
                }
            }
        }
        out.iter_mut().for_each(|m| m.0.reverse());
        out.sort();
        Ok(out)
    }

    /// The weight piece of weight `w` (`None`: see [`Self::basis`]) as an
    /// unstable module through the cap.
    pub fn piece(&self, w: Option<Dyadic>) -> Result<WeightPiece> {
        let mut bases = Vec::new();
        for d in 0..=self.cap {
            bases.push(self.basis(d, w)?);
        }
        let mut index = HashMap::new();
        for (d, b) in bases.iter().enumerate() {
            for (k, m) in b.iter().enumerate() {
                index.insert(m.clone(), (d as u32, k));
            }
        }
        let labels = bases.iter().map(|b| b.iter().map(|m| m.to_string()).collect()).collect();
        let name = match w {
            Some(w) => format!("{}({w})", self.kind),
            None => self.kind.to_string(),
        };
        let module = UnstableModule::from_action(name, GradedSpace::new(self.cap, labels)?, |i, d, b| {
            let img = self.sq(i, &bases[d as usize][b])?;
            coords(&index, d + i, &img)
        })?;
        Ok(WeightPiece {
            model: self.clone(),
            weight: w,
            bases,
            index,
            module,
        })
    }
}

fn enumerate_free(i: i32, lo: i32, rem: u32, cur: &mut Vec<(i32, u32)>, out: &mut Vec<PolyMonomial>) {
    if i < lo {
        if rem == 0 {
            out.push(PolyMonomial(cur.clone()));
        }
        return;
    }
    for a in (0..=rem).rev() {
        if a > 0 {
            cur.push((i, a));
        }
        enumerate_free(i - 1, lo, rem - a, cur, out);
        if a > 0 {
            cur.pop();
        }
    }
}

/// Monomials in `x_lo..x_i` of degree `rem` and weight `units · 2^lo`
/// (at most that weight when `exact` is false, at least `2^lo`).
fn enumerate_weighted(i: i32, lo: i32, rem: u32, units: i128, exact: bool, cur: &mut Vec<(i32, u32)>, out: &mut Vec<PolyMonomial>) {
    if rem == 0 {
        if units == 0 || !exact {
            out.push(PolyMonomial(cur.clone()));
        }
        return;
    }
    if i < lo || units < rem as i128 {
        return;
    }
    let unit = 1i128 << (i - lo);
    if exact && units > rem as i128 * unit {
        return;
    }
    let top = rem.min((units / unit) as u32);
    for a in (0..=top).rev() {
        if a > 0 {
            cur.push((i, a));
        }
        enumerate_weighted(i - 1, lo, rem - a, units - a as i128 * unit, exact, cur, out);
        if a > 0 {
            cur.pop();
        }
    }
}

fn coords(index: &HashMap<PolyMonomial, (u32, usize)>, d: u32, v: &PolyElement) -> Result<Elem> {
    v.iter()
        .map(|m| match index.get(m) {
            Some(&(e, k)) if e == d => Ok(k),
            _ => Err(Error::Inconsistent(format!("{m} leaves the piece"))),
        })
        .collect()
}

/// One weight piece of a model, as an unstable module with its basis of
/// monomials.
#[derive(Clone, Debug)]
pub struct WeightPiece {
    model: ShiftedPolynomialAlgebra,
    weight: Option<Dyadic>,
    bases: Vec<Vec<PolyMonomial>>,
    index: HashMap<PolyMonomial, (u32, usize)>,
    module: UnstableModule,
}

impl WeightPiece {
    pub fn model(&self) -> &ShiftedPolynomialAlgebra {
        &self.model
    }

    pub fn weight(&self) -> Option<Dyadic> {
        self.weight
    }

    pub fn module(&self) -> &UnstableModule {
        &self.module
    }

    pub fn cap(&self) -> u32 {
        self.model.cap
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    pub fn basis(&self, d: u32) -> &[PolyMonomial] {
        &self.bases[d as usize]
    }

    pub fn monomials(&self) -> impl Iterator<Item = &PolyMonomial> {
        self.bases.iter().flatten()
    }

    pub fn contains(&self, m: &PolyMonomial) -> bool {
        self.index.contains_key(m)
    }

    pub fn coords(&self, d: u32, v: &PolyElement) -> Result<Elem> {
        coords(&self.index, d, v)
    }

    /// Instability and Adem relations through the cap.
    pub fn certify(&self) -> Result<()> {
        self.module.certify()
    }
}

/// `Sq^1 x_i = x_{i-1}^2` while `Sq_0 x_i` would have to be `x_i^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub variable: i32,
    pub top_square: PolyElement,
    pub square: PolyMonomial,
}

/// The witness at `x_i`, if `Sq^1 x_i ≠ x_i^2`.
pub fn classical_instability_witness(model: &ShiftedPolynomialAlgebra, i: i32) -> Result<Option<Witness>> {
    let x = PolyMonomial::var(i);
    let top_square = model.sq(1, &x)?;
    let square = x.mul(&x);
    Ok((top_square != F2Vector::from_term(square.clone())).then_some(Witness {
        variable: i,
        top_square,
        square,
    }))
}

/// The model is not an unstable algebra in the classical sense: some
/// variable has `Sq_0 x ≠ x^2`. Returns the first such variable.
pub fn not_classically_unstable(model: &ShiftedPolynomialAlgebra) -> Result<Option<Witness>> {
    let (lo, hi) = model.window;
    for i in lo.max(-1)..=hi {
        if let Some(w) = classical_instability_witness(model, i)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checked: usize,
    pub failures: Vec<String>,
    pub ok: bool,
}

impl IdentityReport {
    fn new(checked: usize, failures: Vec<String>) -> Self {
        let ok = failures.is_empty();
        IdentityReport { checked, failures, ok }
    }
}

/// `Sq_0 m = d(m)^2` for every monomial `m` of the piece with `2|m| <= cap`.
pub fn star_instability_check(piece: &WeightPiece) -> Result<IdentityReport> {
    let model = &piece.model;
    let mut checked = 0;
    let mut failures = Vec::new();
    for m in piece.monomials() {
        let d = m.degree();
        if d == 0 || 2 * d > piece.cap() {
            continue;
        }
        let lhs = model.sq(d, m)?;
        let dm = model.shift(m, 1)?;
        if lhs != poly_mul(&dm, &dm) {
            failures.push(format!("Sq_0({m})"));
        }
        checked += 1;
    }
    Ok(IdentityReport::new(checked, failures))
}

/// `(a⋆b)⋆(c⋆d) = (a⋆c)⋆(b⋆d)` on all quadruples of positive-degree
/// monomials with total degree within the cap.
pub fn level_identity_check(piece: &WeightPiece) -> Result<IdentityReport> {
    let model = &piece.model;
    let cap = piece.cap();
    let monos: Vec<PolyElement> = piece
        .monomials()
        .filter(|m| m.degree() > 0)
        .map(|m| F2Vector::from_term(m.clone()))
        .collect();
    let deg = |v: &PolyElement| v.first().map_or(0, PolyMonomial::degree);
    let results: Vec<(usize, Vec<String>)> = monos
        .par_iter()
        .map(|a| -> Result<(usize, Vec<String>)> {
            let mut checked = 0;
            let mut failures = Vec::new();
            for b in &monos {
                for c in &monos {
                    if deg(a) + deg(b) + deg(c) >= cap {
                        continue;
                    }
                    for d in &monos {
                        if deg(a) + deg(b) + deg(c) + deg(d) > cap {
                            continue;
                        }
                        let lhs = model.star(&model.star(a, b)?, &model.star(c, d)?)?;
                        let rhs = model.star(&model.star(a, c)?, &model.star(b, d)?)?;
                        if lhs != rhs {
                            failures.push(format!("({a}, {b}, {c}, {d})"));
                        }
                        checked += 1;
                    }
                }
            }
            Ok((checked, failures))
        })
        .collect::<Result<_>>()?;
    let checked = results.iter().map(|r| r.0).sum();
    Ok(IdentityReport::new(checked, results.into_iter().flat_map(|r| r.1).collect()))
}

/// Dimension and bijectivity in one degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRow {
    pub d: u32,
    pub model: usize,
    pub free: usize,
    pub bijective: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub sq_checked: usize,
    pub sq_failures: Vec<String>,
    pub products_checked: usize,
    pub product_failures: Vec<String>,
    pub ok: bool,
}

/// The classifying map `K_P^⋆(F(1)) -> piece` determined by `ι_1 ↦ x_g`.
#[derive(Clone, Debug)]
pub struct ClassifyingMap<'a> {
    piece: &'a WeightPiece,
    quotient: &'a QuotientAlgebra,
    /// Image of `Sq_0^k ι_1`, indexed by `k`.
    images: Vec<PolyElement>,
}

pub fn classifying_map<'a>(piece: &'a WeightPiece, quotient: &'a QuotientAlgebra, generator: i32) -> Result<ClassifyingMap<'a>> {
    let cap = quotient.ambient().cap();
    let m = quotient.ambient().module();
    if m.dims() != free_module(1, m.cap())?.dims() {
        return Err(Error::InvalidArgument(format!(
            "the classifying map needs the module F(1) with generator in degree 1, got {}",
            m.name()
        )));
    }
    if cap > piece.cap() {
        return Err(Error::DegreeAboveCap {
            degree: cap,
            cap: piece.cap(),
        });
    }
    let mut images = vec![F2Vector::from_term(PolyMonomial::var(generator))];
    let mut d = 1;
    while 2 * d <= cap {
        let next = piece.model.sq_elem(d, images.last().expect("nonempty"))?;
        images.push(next);
        d *= 2;
    }
    Ok(ClassifyingMap { piece, quotient, images })
}

impl ClassifyingMap<'_> {
    fn image_of(&self, l: Label) -> PolyElement {
        self.images[l.deg.trailing_zeros() as usize].clone()
    }

    /// Image of an element of `S(P, F(1))` (not reduced first).
    pub fn apply_free(&self, v: &AlgElement) -> Result<PolyElement> {
        let mut out = F2Vector::zero();
        for m in v {
            if matches!(m, Monomial::Tree(_)) {
                return Err(Error::InvalidArgument("tree-shaped operations have no polynomial model".into()));
            }
            let (tok, labels) = as_composite(m);
            let exps = tok.exps().expect("flat").to_vec();
            let args: Vec<PolyElement> = labels.iter().map(|&l| self.image_of(l)).collect();
            out += self.piece.model.evaluate(&exps, &args)?;
        }
        Ok(out)
    }

    pub fn apply(&self, v: &AlgElement) -> Result<PolyElement> {
        self.apply_free(&self.quotient.reduce(v)?)
    }

    /// Checks the map degreewise for bijectivity, and its compatibility
    /// with every `Sq^i` and with the binary operations.
    pub fn report(&self) -> Result<CompareReport> {
        let q = self.quotient;
        let amb = q.ambient();
        let model = &self.piece.model;
        let cap = amb.cap();
        let mut reps: Vec<Vec<AlgElement>> = vec![Vec::new(); cap as usize + 1];
        for g in q.grades().collect::<Vec<_>>() {
            if g.weight.is_some() && g.weight != self.piece.weight {
                continue;
            }
            for r in q.representatives(g)? {
                reps[g.degree as usize].push(AlgElement::from_term(r.clone()));
            }
        }
        let mut rows = Vec::new();
        for (d, rs) in reps.iter().enumerate() {
            let d = d as u32;
            let dim = self.piece.basis(d).len();
            let mut ech = Echelon::new(dim);
            let mut inside = true;
            for r in rs {
                match self.piece.coords(d, &self.apply_free(r)?) {
                    Ok(c) => {
                        ech.insert(BitRow::from_indices(dim, c.iter())?)?;
                    }
                    Err(_) => inside = false,
                }
            }
            rows.push(CompareRow {
                d,
                model: dim,
                free: rs.len(),
                bijective: inside && rs.len() == dim && ech.rank() == dim,
            });
        }
        let mut sq_checked = 0;
        let mut sq_failures = Vec::new();
        for (d, rs) in reps.iter().enumerate() {
            for r in rs {
                let x = self.apply_free(r)?;
                for i in 1..=cap - d as u32 {
                    if self.apply(&q.sq(i, r)?)? != model.sq_elem(i, &x)? {
                        sq_failures.push(format!("Sq^{i} on {}", amb.display_elem(r)));
                    }
                    sq_checked += 1;
                }
            }
        }
        let ops = self.binary_operations()?;
        let mut products_checked = 0;
        let mut product_failures = Vec::new();
        for (d1, r1s) in reps.iter().enumerate().skip(1) {
            for (d2, r2s) in reps.iter().enumerate().skip(d1) {
                if d1 + d2 > cap as usize {
                    break;
                }
                for a in r1s {
                    for b in r2s {
                        let (x, y) = (self.apply_free(a)?, self.apply_free(b)?);
                        for tok in &ops {
                            let exps = tok.exps().expect("flat");
                            let lhs = self.apply(&amb.compose(tok, &[a.clone(), b.clone()])?)?;
                            if lhs != model.evaluate(exps, &[x.clone(), y.clone()])? {
                                product_failures.push(format!(
                                    "{tok} on {}, {}",
                                    amb.display_elem(a),
                                    amb.display_elem(b)
                                ));
                            }
                            products_checked += 1;
                        }
                    }
                }
            }
        }
        let ok = rows.iter().all(|r| r.bijective) && sq_failures.is_empty() && product_failures.is_empty();
        Ok(CompareReport {
            rows,
            sq_checked,
            sq_failures,
            products_checked,
            product_failures,
            ok,
        })
    }

    /// `⋆` for weighted pieces and level operads, all binary operations
    /// with exponents in `{0, 1}` otherwise.
    fn binary_operations(&self) -> Result<Vec<OpToken>> {
        let p = self.quotient.ambient().operad();
        if self.quotient.ambient().is_weighted() || p.is_level() {
            return Ok(p.star().into_iter().collect());
        }
        match p.kind() {
            OperadKind::Com { .. } | OperadKind::ComUnary { .. } => p.basis_within(2, Some(1)),
            _ => Ok(p.star().into_iter().collect()),
        }
    }
}

/// Compares a weight piece with `K_P^⋆(F(1))` through `ι_1 ↦ x_g`.
pub fn compare_with_free(piece: &WeightPiece, quotient: &QuotientAlgebra, generator: i32) -> Result<CompareReport> {
    classifying_map(piece, quotient, generator)?.report()
}

/// The map `d : J(2^{q+1}) -> J(2^q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CofiltrationStep {
    pub q: u32,
    pub source_dims: Vec<usize>,
    pub target_dims: Vec<usize>,
    pub star_checked: usize,
    pub sq_checked: usize,
    pub failures: Vec<String>,
}

/// `dim K(1)^d` against `dim J(2^q)^d` for every `q` up to stabilization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationRow {
    pub d: u32,
    pub k1: usize,
    /// `dim J(2^q)^d` for `q = 0, 1, …`.
    pub j: Vec<usize>,
    /// Smallest `q` from which on `dim J(2^q)^d = dim K(1)^d`.
    pub first_stable: Option<u32>,
    /// Equality for every `q >= d - 1`: a Kraft vector with `d` parts
    /// has depth at most `d - 1`, and `(1, 2, …, d-1, d-1)` attains it.
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CofiltrationReport {
    pub steps: Vec<CofiltrationStep>,
    pub stabilization: Vec<StabilizationRow>,
    pub ok: bool,
}

/// Checks `d : J(2^{q+1}) -> J(2^q)` against `⋆` and every `Sq^i` for
/// `q <= q_max`, and the stabilization of `dim J(2^q)^d` to `dim K(1)^d`.
pub fn cofiltration_maps(q_max: u32, cap: u32) -> Result<CofiltrationReport> {
    let j = build_model(ModelKind::J, cap)?;
    let piece = |q: u32| j.piece(Some(Dyadic::from_int(1i64 << q)));
    let mut steps = Vec::new();
    for q in 0..=q_max {
        let (src, tgt) = (piece(q + 1)?, piece(q)?);
        let mut failures = Vec::new();
        let (mut star_checked, mut sq_checked) = (0, 0);
        let map = |v: &PolyElement| -> Result<PolyElement> { j.shift_elem(v, 1) };
        for m in src.monomials() {
            let x = F2Vector::from_term(m.clone());
            let d = m.degree();
            if let Err(e) = tgt.coords(d, &map(&x)?) {
                failures.push(e.to_string());
            }
            for i in 1..=cap - d {
                if map(&j.sq(i, m)?)? != j.sq_elem(i, &map(&x)?)? {
                    failures.push(format!("Sq^{i} on {m}"));
                }
                sq_checked += 1;
            }
            for n in src.monomials() {
                if d == 0 || n.degree() == 0 || d + n.degree() > cap {
                    continue;
                }
                let y = F2Vector::from_term(n.clone());
                if map(&j.star(&x, &y)?)? != j.star(&map(&x)?, &map(&y)?)? {
                    failures.push(format!("⋆ on {m}, {n}"));
                }
                star_checked += 1;
            }
        }
        steps.push(CofiltrationStep {
            q,
            source_dims: src.dims(),
            target_dims: tgt.dims(),
            star_checked,
            sq_checked,
            failures,
        });
    }
    let k1 = build_model(ModelKind::K, cap)?.piece(Some(Dyadic::one()))?.dims();
    let jdims: Vec<Vec<usize>> = (0..cap.max(1)).map(|q| piece(q).map(|p| p.dims())).collect::<Result<_>>()?;
    let stabilization: Vec<StabilizationRow> = (1..=cap)
        .map(|d| {
            let k = k1[d as usize];
            let j: Vec<usize> = jdims.iter().map(|v| v[d as usize]).collect();
            let first_stable = (0..j.len()).find(|&q| j[q..].iter().all(|&n| n == k)).map(|q| q as u32);
            let stable = j[d as usize - 1..].iter().all(|&n| n == k);
            StabilizationRow { d, k1: k, j, first_stable, stable }
        })
        .collect();
    let ok = steps.iter().all(|s| s.failures.is_empty()) && stabilization.iter().all(|r| r.stable);
    Ok(CofiltrationReport {
        steps,
        stabilization,
        ok,
    })
}
