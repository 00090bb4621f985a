//! The free `⋆`-unstable `P`-algebra `K_P^⋆(M)` as a degreewise quotient of
//! `S(P, M)`, the three generating sets of its defining ideal, and the
//! isomorphism `S(P, ΣΩM) ≅ K_P^⋆(M)` attached to a graded section.
//!
//! Coset representatives are the basis monomials that are not pivots of the
//! reduced ideal span (pivot = largest monomial), i.e. the smallest
//! complement in the monomial order. This is a convention.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freealg::{
    atom_multisets, build_free_algebra, label_multisets, max_flat_arity, module_labels, trees_on_multiset, AlgElement,
    Dyadic, FreeAlgebra, Grade, Label, Monomial, WeightSpec,
};
use crate::gf2::{solve_membership, BitRow, Echelon, F2Vector};
use crate::operads::{is_central, star_power, OpElement, OpToken, Operad, OperadKind, OperadMorphism, Tree};
use crate::unstable::{is_reduced, loops_via_cokernel, Elem, GradedSection, SigmaOmega, UnstableModule};

/// Which generating set of the instability ideal to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// `Sq_0 t + ⋆(t, t)` for every monomial `t`.
    X,
    /// `Sq_0 x + ⋆(x, x)` for module elements `x`.
    Unst,
    /// `Sq_0^k s(b) + ⋆_k(s(b), …, s(b))` for a graded section `s`.
    E,
}

impl Flavor {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Flavor::X),
            "unst" => Ok(Flavor::Unst),
            "e" => Ok(Flavor::E),
            _ => Err(Error::UnknownName {
                kind: "ideal flavor",
                name: s.into(),
                expected: "x, unst, e".into(),
            }),
        }
    }
}

/// `ΣΩM` with a chosen graded section of `pr : M -> ΣΩM`.
pub type SectionRef<'a> = (&'a SigmaOmega, &'a GradedSection);

fn gens_of(a: &FreeAlgebra, d: u32, v: &Elem) -> AlgElement {
    v.iter().map(|&idx| a.generator(Label { deg: d, idx })).collect()
}

/// Iterated top square `Sq_0^k` on a module element of degree `d`.
fn sq0_power(m: &UnstableModule, d: u32, v: &Elem, k: u32) -> Result<Elem> {
    let mut cur = v.clone();
    let mut deg = d;
    for _ in 0..k {
        cur = m.sq0(deg, &cur)?;
        deg *= 2;
    }
    Ok(cur)
}

/// Generators of the chosen flavor, each homogeneous and nonzero.
pub fn flavor_generators(a: &FreeAlgebra, star: &OpElement, flavor: Flavor, section: Option<SectionRef>) -> Result<Vec<AlgElement>> {
    let cap = a.cap();
    let m = a.module();
    let mut out = Vec::new();
    match flavor {
        Flavor::X => {
            if a.is_weighted() {
                return Err(Error::InvalidArgument(
                    "the X generating set needs every weight; use unst or e for D and D±".into(),
                ));
            }
            for g in a.grades().collect::<Vec<_>>() {
                if g.degree == 0 || 2 * g.degree > cap {
                    continue;
                }
                for t in a.basis(g)? {
                    let t = AlgElement::from_term(t.clone());
                    let mut e = a.sq_elem(g.degree, &t)?;
                    e += a.alpha_star(star, &t)?;
                    out.push(e);
                }
            }
        }
        Flavor::Unst => {
            for d in 1..=cap / 2 {
                for idx in 0..m.dim(d)? {
                    let x = AlgElement::from_term(a.generator(Label { deg: d, idx }));
                    let mut e = a.sq_elem(d, &x)?;
                    e += a.alpha_star(star, &x)?;
                    out.push(e);
                }
            }
        }
        Flavor::E => {
            let (so, s) = section.ok_or_else(|| Error::InvalidArgument("the E generating set needs a graded section".into()))?;
            let verdict = is_reduced(m)?;
            if let Some((degree, _)) = verdict.first_failure {
                return Err(Error::NotReduced { degree });
            }
            for d in 1..=cap / 2 {
                for b in 0..so.module.dim(d)? {
                    let sb = s.apply(d, &F2Vector::from_term(b));
                    let arg = gens_of(a, d, &sb);
                    let mut k = 1;
                    while (d << k) <= cap {
                        let mut e = gens_of(a, d << k, &sq0_power(m, d, &sb, k)?);
                        let sk = star_power(a.operad(), star, k)?;
                        e += a.compose_elem(&sk.element, &vec![arg.clone(); 1 << k])?;
                        out.push(e);
                        k += 1;
                    }
                }
            }
        }
    }
    out.retain(|e| !e.is_zero());
    Ok(out)
}

const HOLE: Label = Label { deg: 0, idx: usize::MAX };

fn exps_range(e: &AlgElement) -> (i32, i32) {
    let mut lo = i32::MAX;
    let mut hi = i32::MIN;
    for m in e {
        if let Monomial::Flat(atoms) = m {
            for &(b, _) in atoms {
                lo = lo.min(b);
                hi = hi.max(b);
            }
        }
    }
    (lo, hi)
}

fn plug_flat(p: &Operad, c: i32, rest: &[(i32, Label)], e: &AlgElement) -> Result<AlgElement> {
    let mut out = F2Vector::zero();
    for m in e {
        let Monomial::Flat(atoms) = m else {
            return Err(Error::Inconsistent("tree monomial in a flat ideal".into()));
        };
        let mut exps: Vec<i32> = rest.iter().map(|x| x.0).collect();
        let mut labels: Vec<Label> = rest.iter().map(|x| x.1).collect();
        for &(b, l) in atoms {
            exps.push(c + b);
            labels.push(l);
        }
        if let Some(e2) = p.reduce_exps(exps)? {
            let mut v: Vec<(i32, Label)> = e2.into_iter().zip(labels).collect();
            v.sort_unstable();
            out.add_term(Monomial::Flat(v));
        }
    }
    Ok(out)
}

/// Spanning set of the ideal generated by `gens` in grade `g`: every
/// generator placed in one slot of every operation, the other slots
/// holding module basis elements.
pub fn ideal_span(a: &FreeAlgebra, gens: &[AlgElement], g: Grade) -> Result<Vec<AlgElement>> {
    let p = a.operad();
    let m = a.module();
    let mut out = Vec::new();
    for e in gens {
        let first = e.first().expect("generators are nonzero");
        let ge = a.grade_of(first)?;
        if ge.degree > g.degree {
            continue;
        }
        let rest_deg = g.degree - ge.degree;
        if p.is_tree() {
            let labels = module_labels(m, rest_deg)?;
            let mut sets = Vec::new();
            label_multisets(&labels, 0, rest_deg, &mut Vec::new(), &mut sets);
            let mut memo = HashMap::new();
            for mut ms in sets {
                ms.insert(0, HOLE);
                for ctx in trees_on_multiset(&ms, &mut memo) {
                    let mut v = F2Vector::zero();
                    for mono in e {
                        let Monomial::Tree(t) = mono else {
                            return Err(Error::Inconsistent("flat monomial in a tree ideal".into()));
                        };
                        v.add_term(Monomial::Tree(ctx.map(&mut |l| if *l == HOLE { t.clone() } else { Tree::Leaf(*l) })));
                    }
                    out.push(v);
                }
            }
            continue;
        }
        let (wlo, whi) = p.exponent_window();
        let (bmin, bmax) = exps_range(e);
        let (clo, chi, scaled): (i32, i32, Option<(Dyadic, Dyadic)>) = match (p.kind(), g.weight) {
            (OperadKind::Lev { .. }, _) => (0, whi.min(g.degree as i32), Some((Dyadic::one(), Dyadic::one()))),
            (_, Some(w)) => {
                let we = ge.weight.expect("weighted grade");
                if !w.is_positive() || !we.is_positive() {
                    continue;
                }
                let hf = w.finest().expect("positive") + g.degree as i32 - 1;
                let lf = -w.log2_floor().expect("positive");
                ((wlo - bmin).max(lf - bmax), (whi - bmax).min(hf - bmin), Some((w, we)))
            }
            _ => (wlo, whi, None),
        };
        for c in clo..=chi {
            let target = match scaled {
                Some((w, we)) => match we.scale_pow2(-c) {
                    Some(part) => {
                        let t = w.checked_sub(part)?;
                        if t.is_negative() {
                            continue;
                        }
                        Some(t)
                    }
                    None => continue,
                },
                None => None,
            };
            let max_rest = max_flat_arity(p).saturating_sub(1);
            for rest in atom_multisets(m, rest_deg, wlo, whi, target, max_rest)? {
                let v = plug_flat(p, c, &rest, e)?;
                if !v.is_zero() {
                    out.push(v);
                }
            }
        }
    }
    Ok(out)
}

fn row_of(a: &FreeAlgebra, g: Grade, dim: usize, v: &AlgElement) -> Result<BitRow> {
    let mut idx = Vec::with_capacity(v.len());
    for mono in v {
        match a.index_of(mono) {
            Some((h, k)) if h == g => idx.push(k),
            _ => {
                return Err(Error::Inconsistent(format!(
                    "{} is not a basis monomial in {g}",
                    a.display(mono)
                )))
            }
        }
    }
    BitRow::from_indices(dim, idx.iter())
}

fn span_echelon(a: &FreeAlgebra, gens: &[AlgElement], g: Grade) -> Result<Echelon> {
    let dim = a.dim(g)?;
    let mut ech = Echelon::new(dim);
    for v in ideal_span(a, gens, g)? {
        ech.insert(row_of(a, g, dim, &v)?)?;
    }
    Ok(ech)
}

/// `S(P, M)` modulo the ideal generated by one flavor.
#[derive(Clone, Debug)]
pub struct QuotientAlgebra {
    ambient: FreeAlgebra,
    star: OpElement,
    flavor: Flavor,
    ideals: BTreeMap<Grade, Echelon>,
    reps: BTreeMap<Grade, Vec<usize>>,
}

/// Builds the quotient and checks `Sq_0[t] = ⋆([t], [t])` on every
/// representative whose square lies within the cap.
pub fn build_quotient(ambient: FreeAlgebra, star: &OpElement, flavor: Flavor, section: Option<SectionRef>) -> Result<QuotientAlgebra> {
    let gens = flavor_generators(&ambient, star, flavor, section)?;
    let grades: Vec<Grade> = ambient.grades().collect();
    let ideals: Vec<Echelon> = grades
        .par_iter()
        .map(|&g| span_echelon(&ambient, &gens, g))
        .collect::<Result<_>>()?;
    let ideals: BTreeMap<Grade, Echelon> = grades.iter().copied().zip(ideals).collect();
    let reps = ideals.iter().map(|(g, e)| (*g, e.non_pivots())).collect();
    let q = QuotientAlgebra {
        ambient,
        star: star.clone(),
        flavor,
        ideals,
        reps,
    };
    q.check_star_instability()?;
    Ok(q)
}

impl QuotientAlgebra {
    pub fn ambient(&self) -> &FreeAlgebra {
        &self.ambient
    }

    pub fn star(&self) -> &OpElement {
        &self.star
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn grades(&self) -> impl Iterator<Item = Grade> + '_ {
        self.reps.keys().copied()
    }

    pub fn dim(&self, g: Grade) -> Result<usize> {
        self.ambient.basis(g)?;
        Ok(self.reps[&g].len())
    }

    pub fn dims_by_degree(&self) -> Vec<usize> {
        let mut out = vec![0; self.ambient.cap() as usize + 1];
        for (g, r) in &self.reps {
            out[g.degree as usize] += r.len();
        }
        out
    }

    /// Coset representatives in grade `g`.
    pub fn representatives(&self, g: Grade) -> Result<Vec<&Monomial>> {
        let basis = self.ambient.basis(g)?;
        Ok(self.reps[&g].iter().map(|&k| &basis[k]).collect())
    }

    /// Normal form: the unique combination of representatives congruent to `v`.
    pub fn reduce(&self, v: &AlgElement) -> Result<AlgElement> {
        let mut by_grade: BTreeMap<Grade, Vec<usize>> = BTreeMap::new();
        for mono in v {
            let (g, k) = match self.ambient.index_of(mono) {
                Some(x) => x,
                None => {
                    let g = self.ambient.grade_of(mono)?;
                    self.ambient.basis(g)?;
                    return Err(Error::Inconsistent(format!("{} is not canonical", self.ambient.display(mono))));
                }
            };
            by_grade.entry(g).or_default().push(k);
        }
        let mut out = F2Vector::zero();
        for (g, idx) in by_grade {
            let ech = &self.ideals[&g];
            let mut row = BitRow::from_indices(ech.dim(), idx.iter())?;
            ech.reduce(&mut row);
            let basis = self.ambient.basis(g)?;
            for k in row.ones() {
                out.add_term(basis[k].clone());
            }
        }
        Ok(out)
    }

    pub fn sq(&self, i: u32, v: &AlgElement) -> Result<AlgElement> {
        self.reduce(&self.ambient.sq_elem(i, v)?)
    }

    pub fn compose(&self, mu: &OpElement, args: &[AlgElement]) -> Result<AlgElement> {
        self.reduce(&self.ambient.compose_elem(mu, args)?)
    }

    pub fn check_star_instability(&self) -> Result<()> {
        let cap = self.ambient.cap();
        for g in self.grades() {
            if g.degree == 0 || 2 * g.degree > cap {
                continue;
            }
            for r in self.representatives(g)? {
                let t = AlgElement::from_term(r.clone());
                let mut e = self.ambient.sq_elem(g.degree, &t)?;
                e += self.ambient.alpha_star(&self.star, &t)?;
                if !self.reduce(&e)?.is_zero() {
                    return Err(Error::Inconsistent(format!(
                        "Sq_0 and ⋆(t, t) differ on {} in the quotient",
                        self.ambient.display(r)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `K_P^⋆(M)` up to degree `cap`, from the `Unst` generating set.
pub fn build_k(p: &Operad, star: &OpElement, m: &UnstableModule, cap: u32, weights: &WeightSpec) -> Result<QuotientAlgebra> {
    build_quotient(build_free_algebra(p, m, cap, weights)?, star, Flavor::Unst, None)
}

/// Ranks of the three ideal spans in one grade.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealRow {
    pub grade: Grade,
    pub x: Option<usize>,
    pub unst: usize,
    pub e: Option<usize>,
    /// Rank of the sum of all computed spans.
    pub joint: usize,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealReport {
    pub rows: Vec<IdealRow>,
    pub ok: bool,
}

/// Compares the spans of the ideals generated by `X`, `Unst` and `E`
/// grade by grade (equal iff every rank equals the rank of their sum).
/// `X` is skipped for weighted algebras and `E` when no section is given.
pub fn ideal_equalities_check(a: &FreeAlgebra, star: &OpElement, section: Option<SectionRef>) -> Result<IdealReport> {
    let gx = if a.is_weighted() { None } else { Some(flavor_generators(a, star, Flavor::X, None)?) };
    let gu = flavor_generators(a, star, Flavor::Unst, None)?;
    let ge = match section {
        Some(s) => Some(flavor_generators(a, star, Flavor::E, Some(s))?),
        None => None,
    };
    let grades: Vec<Grade> = a.grades().collect();
    let rows: Vec<IdealRow> = grades
        .par_iter()
        .map(|&g| -> Result<IdealRow> {
            let dim = a.dim(g)?;
            let mut joint = Echelon::new(dim);
            let mut rank_of = |gens: &[AlgElement]| -> Result<usize> {
                let e = span_echelon(a, gens, g)?;
                for r in e.reduced_basis() {
                    joint.insert(r)?;
                }
                Ok(e.rank())
            };
            let x = gx.as_deref().map(&mut rank_of).transpose()?;
            let unst = rank_of(&gu)?;
            let e = ge.as_deref().map(&mut rank_of).transpose()?;
            let j = joint.rank();
            let equal = unst == j && x.is_none_or(|r| r == j) && e.is_none_or(|r| r == j);
            Ok(IdealRow { grade: g, x, unst, e, joint: j, equal })
        })
        .collect::<Result<_>>()?;
    let ok = rows.iter().all(|r| r.equal);
    Ok(IdealReport { rows, ok })
}

/// Dimension comparison in one degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimRow {
    pub d: u32,
    pub quotient: usize,
    pub free: usize,
    #[serde(rename = "match")]
    pub matches: bool,
}

fn dim_rows(q: &[usize], f: &[usize]) -> Vec<DimRow> {
    q.iter()
        .zip(f)
        .enumerate()
        .map(|(d, (&a, &b))| DimRow { d: d as u32, quotient: a, free: b, matches: a == b })
        .collect()
}

/// `dim K_P^⋆(M)^d` against `dim S(P, ΣΩM)^d`, without any hypothesis on
/// `P` or `M` beyond connectivity.
pub fn dimension_comparison(p: &Operad, star: &OpElement, m: &UnstableModule, cap: u32, weights: &WeightSpec) -> Result<Vec<DimRow>> {
    let k = build_k(p, star, m, cap, weights)?;
    let so = loops_via_cokernel(m)?;
    let s = build_free_algebra(p, &so.module, cap, weights)?;
    Ok(dim_rows(&k.dims_by_degree(), &s.dims_by_degree()))
}

/// The isomorphism `ψ_s : S(P, ΣΩM) -> K_P^⋆(M)` and its inverse `φ̂_s`.
#[derive(Clone, Debug)]
pub struct ThetaIso {
    pub quotient: QuotientAlgebra,
    pub source: FreeAlgebra,
    pub sigma_omega: SigmaOmega,
    pub section: GradedSection,
    phi: HashMap<Label, AlgElement>,
}

/// Splits a monomial into an operation and its ordered inputs.
pub fn as_composite(m: &Monomial) -> (OpToken, Vec<Label>) {
    match m {
        Monomial::Flat(atoms) => (
            OpToken::Exps(atoms.iter().map(|a| a.0).collect()),
            atoms.iter().map(|a| a.1).collect(),
        ),
        Monomial::Tree(t) => {
            let labels: Vec<Label> = t.leaves().into_iter().copied().collect();
            let mut k = 0;
            let slots = t.map(&mut |_| {
                k += 1;
                Tree::Leaf(k - 1)
            });
            (OpToken::Tree(slots), labels)
        }
    }
}

/// Builds `ψ_s`, `φ̂_s` after checking that `⋆` is central, `M` is reduced
/// and `s` is a section of `pr : M -> ΣΩM`.
pub fn theorem_iso(
    p: &Operad,
    star: &OpElement,
    m: &UnstableModule,
    sigma_omega: SigmaOmega,
    section: GradedSection,
    cap: u32,
    weights: &WeightSpec,
) -> Result<ThetaIso> {
    let verdict = is_central(p, star, &p.generators())?;
    if let Some(mu) = verdict.failing {
        return Err(Error::NotCentral(format!("the interchange law fails at μ = {mu}")));
    }
    if let Some((degree, _)) = is_reduced(m)?.first_failure {
        return Err(Error::NotReduced { degree });
    }
    section.validate(&sigma_omega)?;
    let ambient = build_free_algebra(p, m, cap, weights)?;
    let quotient = build_quotient(ambient, star, Flavor::E, Some((&sigma_omega, &section)))?;
    let source = build_free_algebra(p, &sigma_omega.module, cap, weights)?;
    // φ on M: decompose each basis element along the Sq_0^k s(b)
    let mut phi = HashMap::new();
    for d in 1..=cap {
        let mut span = Vec::new();
        let mut values = Vec::new();
        let mut k = 0;
        while d % (1 << k) == 0 {
            let e = d >> k;
            for b in 0..sigma_omega.module.dim(e)? {
                let sb = section.apply(e, &F2Vector::from_term(b));
                span.push(sq0_power(m, e, &sb, k)?);
                let arg = AlgElement::from_term(source.generator(Label { deg: e, idx: b }));
                let sk = star_power(p, star, k)?;
                values.push(source.compose_elem(&sk.element, &vec![arg; 1 << k])?);
            }
            k += 1;
        }
        let dim = m.dim(d)?;
        for idx in 0..dim {
            let w = solve_membership(dim, &F2Vector::from_term(idx), &span)?.ok_or_else(|| {
                Error::Inconsistent(format!("`{}` is not in the span of the Sq_0^k s(b)", m.label(d, idx)))
            })?;
            let mut v = F2Vector::zero();
            for j in w {
                v += &values[j];
            }
            phi.insert(Label { deg: d, idx }, v);
        }
    }
    Ok(ThetaIso {
        quotient,
        source,
        sigma_omega,
        section,
        phi,
    })
}

/// Outcome of the round-trip and dimension checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub rows: Vec<DimRow>,
    pub checked_representatives: usize,
    pub checked_monomials: usize,
}

impl ThetaIso {
    /// `ψ_s`, normalised in the quotient.
    pub fn psi(&self, v: &AlgElement) -> Result<AlgElement> {
        let a = self.quotient.ambient();
        let mut out = F2Vector::zero();
        for mono in v {
            let (tok, labels) = as_composite(mono);
            let args: Vec<AlgElement> = labels
                .iter()
                .map(|l| gens_of(a, l.deg, &self.section.apply(l.deg, &F2Vector::from_term(l.idx))))
                .collect();
            out += a.compose(&tok, &args)?;
        }
        self.quotient.reduce(&out)
    }

    /// `φ̂_s` on any element of `S(P, M)`, through its normal form.
    pub fn phi_hat(&self, v: &AlgElement) -> Result<AlgElement> {
        let mut out = F2Vector::zero();
        for mono in &self.quotient.reduce(v)? {
            let (tok, labels) = as_composite(mono);
            let args: Vec<AlgElement> = labels.iter().map(|l| self.phi[l].clone()).collect();
            out += self.source.compose(&tok, &args)?;
        }
        Ok(out)
    }

    /// The transported action `Sq^i ⊙ t = φ̂(Sq^i ψ(t))` on `S(P, ΣΩM)`.
    pub fn transported_sq(&self, i: u32, t: &AlgElement) -> Result<AlgElement> {
        self.phi_hat(&self.quotient.sq(i, &self.psi(t)?)?)
    }

    pub fn dimension_rows(&self) -> Vec<DimRow> {
        dim_rows(&self.quotient.dims_by_degree(), &self.source.dims_by_degree())
    }

    /// Checks `ψ∘φ̂ = id` on representatives and `φ̂∘ψ = id` on monomials.
    pub fn verify_roundtrip(&self) -> Result<RoundTrip> {
        let mut reps = 0;
        let mut monos = 0;
        for g in self.quotient.grades().collect::<Vec<_>>() {
            for r in self.quotient.representatives(g)? {
                let x = AlgElement::from_term(r.clone());
                if self.psi(&self.phi_hat(&x)?)? != x {
                    return Err(Error::Inconsistent(format!(
                        "ψ∘φ̂ moves {}",
                        self.quotient.ambient().display(r)
                    )));
                }
                reps += 1;
            }
        }
        for g in self.source.grades().collect::<Vec<_>>() {
            for m in self.source.basis(g)? {
                let x = AlgElement::from_term(m.clone());
                if self.phi_hat(&self.psi(&x)?)? != x {
                    return Err(Error::Inconsistent(format!("φ̂∘ψ moves {}", self.source.display(m))));
                }
                monos += 1;
            }
        }
        Ok(RoundTrip {
            rows: self.dimension_rows(),
            checked_representatives: reps,
            checked_monomials: monos,
        })
    }

    /// Checks that `ψ` and `φ̂` commute with binary operations on `count`
    /// seeded random pairs of basis monomials; returns the number checked.
    pub fn check_p_maps(&self, seed: u64, count: usize) -> Result<usize> {
        let p = self.source.operad();
        let ops: Vec<OpToken> = if self.source.is_weighted() {
            p.star().into_iter().collect()
        } else {
            p.basis_within(2, Some(2))?
        };
        let monos: Vec<&Monomial> = self
            .source
            .grades()
            .filter(|g| g.degree > 0)
            .flat_map(|g| self.source.basis(g).expect("built grade").iter())
            .collect();
        if monos.is_empty() || ops.is_empty() {
            return Ok(0);
        }
        let cap = self.source.cap();
        let amb = self.quotient.ambient();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut done = 0;
        for _ in 0..count * 200 {
            if done == count {
                break;
            }
            let a = monos[rng.gen_range(0..monos.len())];
            let b = monos[rng.gen_range(0..monos.len())];
            if a.degree() + b.degree() > cap {
                continue;
            }
            let mu = &ops[rng.gen_range(0..ops.len())];
            let (x, y) = (AlgElement::from_term(a.clone()), AlgElement::from_term(b.clone()));
            let prod = self.source.compose(mu, &[x.clone(), y.clone()])?;
            if prod.iter().any(|m| self.source.index_of(m).is_none()) {
                continue;
            }
            let (px, py) = (self.psi(&x)?, self.psi(&y)?);
            if self.psi(&prod)? != self.quotient.reduce(&amb.compose(mu, &[px.clone(), py.clone()])?)? {
                return Err(Error::Inconsistent(format!(
                    "ψ does not commute with {mu} on {}, {}",
                    self.source.display(a),
                    self.source.display(b)
                )));
            }
            let back = self.phi_hat(&amb.compose(mu, &[px.clone(), py.clone()])?)?;
            let direct = self.source.compose(mu, &[self.phi_hat(&px)?, self.phi_hat(&py)?])?;
            if back != direct {
                return Err(Error::Inconsistent(format!("φ̂ does not commute with {mu}")));
            }
            done += 1;
        }
        Ok(done)
    }
}

/// `K_P^{⋆}(M) -> K_Q^{⋆}(M)` induced by an operad morphism.
#[derive(Clone, Debug)]
pub struct InducedMap<'a> {
    pub morphism: OperadMorphism,
    pub source: &'a QuotientAlgebra,
    pub target: &'a QuotientAlgebra,
}

pub fn induced_morphism<'a>(f: &OperadMorphism, source: &'a QuotientAlgebra, target: &'a QuotientAlgebra) -> Result<InducedMap<'a>> {
    if f.apply_elem(source.star())? != *target.star() {
        return Err(Error::RelationViolated("f(⋆_P) = ⋆_Q".into()));
    }
    if source.ambient().module().dims() != target.ambient().module().dims() {
        return Err(Error::InvalidArgument("induced maps need the same module on both sides".into()));
    }
    Ok(InducedMap {
        morphism: f.clone(),
        source,
        target,
    })
}

impl InducedMap<'_> {
    pub fn apply(&self, v: &AlgElement) -> Result<AlgElement> {
        let amb = self.target.ambient();
        let mut out = F2Vector::zero();
        for mono in &self.source.reduce(v)? {
            let (tok, labels) = as_composite(mono);
            let args: Vec<AlgElement> = labels.iter().map(|&l| AlgElement::from_term(amb.generator(l))).collect();
            out += amb.compose_elem(&self.morphism.apply(&tok)?, &args)?;
        }
        self.target.reduce(&out)
    }

    /// Kernel dimension of the map in every source grade.
    pub fn kernel_dims(&self) -> Result<Vec<(Grade, usize)>> {
        let mut out = Vec::new();
        for g in self.source.grades().collect::<Vec<_>>() {
            let reps = self.source.representatives(g)?;
            let images: Vec<AlgElement> = reps
                .iter()
                .map(|r| self.apply(&AlgElement::from_term((*r).clone())))
                .collect::<Result<_>>()?;
            let mut index: HashMap<&Monomial, usize> = HashMap::new();
            for v in &images {
                for m in v {
                    let n = index.len();
                    index.entry(m).or_insert(n);
                }
            }
            let mut ech = Echelon::new(index.len());
            for v in &images {
                let idx: Vec<usize> = v.iter().map(|m| index[m]).collect();
                ech.insert(BitRow::from_indices(index.len(), idx.iter())?)?;
            }
            out.push((g, reps.len() - ech.rank()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operads::{com_operad, compose_with_unary, lev_operad, magcom_operad, truncated_lev, unary_operad, Unary};
    use crate::unstable::{classical_section, free_module, suspend};

    fn one(t: OpToken) -> OpElement {
        F2Vector::from_term(t)
    }

    fn star_of(p: &Operad) -> OpElement {
        one(p.star().unwrap())
    }

    fn all() -> WeightSpec {
        WeightSpec::All
    }

    #[test]
    fn unst_span_examples() {
        let p = com_operad(true, 8);
        let a = build_free_algebra(&p, &free_module(1, 8).unwrap(), 8, &all()).unwrap();
        let gens = flavor_generators(&a, &star_of(&p), Flavor::Unst, None).unwrap();
        let j0 = AlgElement::from_term(a.generator(Label { deg: 1, idx: 0 }));
        let mut expected = AlgElement::from_term(a.generator(Label { deg: 2, idx: 0 }));
        expected += a.compose(&OpToken::Exps(vec![0, 0]), &[j0.clone(), j0]).unwrap();
        let span = ideal_span(&a, &gens, Grade::new(2, None)).unwrap();
        assert!(span.contains(&expected));
        assert!(ideal_span(&a, &gens, Grade::new(1, None)).unwrap().is_empty());
    }

    #[test]
    fn e_generator_with_k_zero_vanishes() {
        // Sq_0^0 s(b) + ⋆_0(s(b)) = 0, so E has nothing in degree 1
        let p = com_operad(true, 8);
        let (m, so, s) = classical_section(1, 8).unwrap();
        let a = build_free_algebra(&p, &m, 8, &all()).unwrap();
        let gens = flavor_generators(&a, &star_of(&p), Flavor::E, Some((&so, &s))).unwrap();
        assert!(gens.iter().all(|g| g.first().unwrap().degree() >= 2));
        let sf0 = suspend(&free_module(0, 4).unwrap()).unwrap();
        let so0 = loops_via_cokernel(&sf0).unwrap();
        let s0 = GradedSection::representative(&so0);
        let b = build_free_algebra(&p, &sf0, 4, &all()).unwrap();
        assert!(matches!(
            flavor_generators(&b, &star_of(&p), Flavor::E, Some((&so0, &s0))),
            Err(Error::NotReduced { degree: 1 })
        ));
    }

    #[test]
    fn k_of_f1_examples() {
        let ucom = com_operad(true, 16);
        let k = build_k(&ucom, &star_of(&ucom), &free_module(1, 16).unwrap(), 16, &all()).unwrap();
        assert_eq!(k.dims_by_degree(), vec![1; 17]);
        let lev = lev_operad(12);
        let k = build_k(&lev, &star_of(&lev), &free_module(1, 12).unwrap(), 12, &all()).unwrap();
        assert_eq!(&k.dims_by_degree()[1..=5], &[1, 1, 1, 2, 3]);
    }

    #[test]
    fn non_reduced_negative_control() {
        let ucom = com_operad(true, 4);
        let sf0 = suspend(&free_module(0, 3).unwrap()).unwrap();
        let rows = dimension_comparison(&ucom, &star_of(&ucom), &sf0, 4, &all()).unwrap();
        let q: Vec<usize> = rows.iter().map(|r| r.quotient).collect();
        let f: Vec<usize> = rows.iter().map(|r| r.free).collect();
        assert_eq!(q, vec![1, 1, 0, 0, 0]);
        assert_eq!(f, vec![1, 1, 1, 1, 1]);
        assert!(!rows[2].matches);
        let so = loops_via_cokernel(&sf0).unwrap();
        let s = GradedSection::representative(&so);
        let err = theorem_iso(&ucom, &star_of(&ucom), &sf0, so, s, 4, &all()).unwrap_err();
        assert_eq!(err, Error::NotReduced { degree: 1 });
    }

    #[test]
    fn theorem_refuses_non_central_operations() {
        let mag = magcom_operad(8);
        let (m, so, s) = classical_section(1, 6).unwrap();
        let err = theorem_iso(&mag, &star_of(&mag), &m, so, s, 6, &all()).unwrap_err();
        assert!(matches!(err, Error::NotCentral(_)));
    }

    #[test]
    fn magcom_ideals_differ() {
        let mag = magcom_operad(8);
        let a = build_free_algebra(&mag, &free_module(1, 8).unwrap(), 8, &all()).unwrap();
        let report = ideal_equalities_check(&a, &star_of(&mag), None).unwrap();
        assert!(!report.ok);
        let first = report.rows.iter().find(|r| !r.equal).unwrap();
        assert!(first.grade.degree <= 8);
        // the X quotient is ⋆-unstable; the Unst quotient need not be
        build_quotient(a.clone(), &star_of(&mag), Flavor::X, None).unwrap();
        assert!(build_quotient(a, &star_of(&mag), Flavor::Unst, None).is_err());
    }

    #[test]
    fn ideal_equalities_for_central_operations() {
        for (p, n, cap) in [(com_operad(true, 10), 1, 10), (lev_operad(10), 1, 10), (com_operad(true, 8), 2, 8)] {
            let (m, so, s) = classical_section(n, cap).unwrap();
            let a = build_free_algebra(&p, &m, cap, &all()).unwrap();
            let report = ideal_equalities_check(&a, &star_of(&p), Some((&so, &s))).unwrap();
            assert!(report.ok, "{} F({n}): {:?}", p.name(), report.rows.iter().find(|r| !r.equal));
        }
    }

    #[test]
    fn theorem_for_ucom_f2_and_transported_action() {
        let ucom = com_operad(true, 10);
        let (m, so, s) = classical_section(2, 10).unwrap();
        let iso = theorem_iso(&ucom, &star_of(&ucom), &m, so, s, 10, &all()).unwrap();
        let rt = iso.verify_roundtrip().unwrap();
        assert!(rt.rows.iter().all(|r| r.matches));
        assert_eq!(iso.check_p_maps(7, 50).unwrap(), 50);
        let space = iso.sigma_omega.module.space();
        let x = Label { deg: 9, idx: space.find(9, "σ(Sq^4 Sq^2 Sq^1 ι_1)").unwrap() };
        let y = Label { deg: 5, idx: space.find(5, "σ(Sq^2 Sq^1 ι_1)").unwrap() };
        let xt = AlgElement::from_term(iso.source.generator(x));
        let yt = AlgElement::from_term(iso.source.generator(y));
        let expected = iso.source.compose(&OpToken::Exps(vec![0, 0]), &[yt.clone(), yt]).unwrap();
        assert_eq!(iso.transported_sq(1, &xt).unwrap(), expected);
        assert_eq!(iso.transported_sq(0, &xt).unwrap(), xt);
        // whereas σ(Sq^1 Sq^4 Sq^2 Sq^1 ι_1) = σ(Sq^5 Sq^2 Sq^1 ι_1) has excess 2 > 1
        assert_eq!(iso.sigma_omega.module.sq(1, 9, x.idx).unwrap(), F2Vector::zero());
    }

    #[test]
    fn dimensions_do_not_depend_on_the_section() {
        let ucom = com_operad(true, 8);
        let (m, so, s) = classical_section(2, 8).unwrap();
        let a = theorem_iso(&ucom, &star_of(&ucom), &m, so.clone(), s, 8, &all()).unwrap();
        let r = GradedSection::random(&so, 99);
        let b = theorem_iso(&ucom, &star_of(&ucom), &m, so, r, 8, &all()).unwrap();
        assert_eq!(a.quotient.dims_by_degree(), b.quotient.dims_by_degree());
        b.verify_roundtrip().unwrap();
    }

    #[test]
    fn lev_theorem_generator_round_trip() {
        let lev = lev_operad(8);
        let (m, so, s) = classical_section(1, 8).unwrap();
        let iso = theorem_iso(&lev, &star_of(&lev), &m, so, s, 8, &all()).unwrap();
        let b = AlgElement::from_term(iso.source.generator(Label { deg: 1, idx: 0 }));
        assert_eq!(iso.phi_hat(&iso.psi(&b).unwrap()).unwrap(), b);
        // Sq^1 ⊙ ι = ⋆(ι, ι)
        let sq = iso.transported_sq(1, &b).unwrap();
        assert_eq!(sq, iso.source.alpha_star(&star_of(&lev), &b).unwrap());
        iso.verify_roundtrip().unwrap();
    }

    #[test]
    fn weighted_theorem_for_laurent_operad() {
        let p = compose_with_unary(&com_operad(true, 8), &unary_operad(Unary::Dpm, 32).unwrap()).unwrap();
        let (m, so, s) = classical_section(1, 8).unwrap();
        let w = WeightSpec::Only(vec![Dyadic::one()]);
        let iso = theorem_iso(&p, &star_of(&p), &m, so, s, 8, &w).unwrap();
        let rt = iso.verify_roundtrip().unwrap();
        assert!(rt.rows.iter().all(|r| r.matches));
        assert!(iso.check_p_maps(3, 20).unwrap() > 0);
    }

    #[test]
    fn induced_morphisms() {
        let f1 = free_module(1, 8).unwrap();
        let lev = lev_operad(8);
        let klev = build_k(&lev, &star_of(&lev), &f1, 8, &all()).unwrap();
        let id = crate::operads::operad_morphism(&lev, &lev, None).unwrap();
        let idm = induced_morphism(&id, &klev, &klev).unwrap();
        for g in klev.grades().collect::<Vec<_>>() {
            for r in klev.representatives(g).unwrap() {
                let x = AlgElement::from_term(r.clone());
                assert_eq!(idm.apply(&x).unwrap(), x);
            }
        }
        let dpm = compose_with_unary(&com_operad(true, 8), &unary_operad(Unary::Dpm, 32).unwrap()).unwrap();
        let kd = build_k(&dpm, &star_of(&dpm), &f1, 8, &WeightSpec::Only(vec![Dyadic::one()])).unwrap();
        let f = crate::operads::operad_morphism(&lev, &dpm, None).unwrap();
        let ind = induced_morphism(&f, &klev, &kd).unwrap();
        assert!(ind.kernel_dims().unwrap().iter().all(|&(_, k)| k == 0));
        let t2 = truncated_lev(2, 8);
        let t1 = truncated_lev(1, 8);
        let k2 = build_k(&t2, &star_of(&t2), &f1, 8, &all()).unwrap();
        let k1 = build_k(&t1, &star_of(&t1), &f1, 8, &all()).unwrap();
        let proj = crate::operads::operad_morphism(&t2, &t1, None).unwrap();
        let pm = induced_morphism(&proj, &k2, &k1).unwrap();
        // compatible with Sq^i
        for g in k2.grades().collect::<Vec<_>>() {
            for r in k2.representatives(g).unwrap() {
                let x = AlgElement::from_term(r.clone());
                for i in 0..=8 - g.degree {
                    assert_eq!(pm.apply(&k2.sq(i, &x).unwrap()).unwrap(), k1.sq(i, &pm.apply(&x).unwrap()).unwrap());
                }
            }
        }
        let bad = crate::operads::operad_morphism(&lev, &dpm, Some(one(OpToken::Exps(vec![2, 2])))).unwrap();
        assert!(induced_morphism(&bad, &klev, &kd).is_err());
    }
}
