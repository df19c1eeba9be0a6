//! Sparse multivariate polynomials over ℚ whose variables are kernels.
//!
//! Two multiplication modes exist. `mul_free` treats every atom as an
//! independent indeterminate; it is what division and gcd run on.
//! `mul` additionally applies the kernel relations (`i² = −1`,
//! `exp(a)·exp(b) = exp(a+b)`), which keeps canonical polynomials in a form
//! with at most one exponential per monomial. Public gcd and exact division
//! respect the exponential relation by lifting to base kernels first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{units, Atom, AtomKind, Expr, Func, Symbol};

pub type Q = BigRational;

/// A power product of atoms, sorted by atom.
///
/// Ordered lexicographically with the smallest atom most significant.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub(crate) Vec<(Atom, u32)>);

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter();
        let mut b = other.0.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((x, e)), Some((y, f))) => match x.cmp(y) {
                    Ordering::Equal => match e.cmp(f) {
                        Ordering::Equal => continue,
                        o => return o,
                    },
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                },
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn atom(a: Atom, k: u32) -> Self {
        if k == 0 {
            Mono::one()
        } else {
            Mono(vec![(a, k)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self, v: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(a, _)| a == v)
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, k) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *a {
                let f = other.0[j].1;
                if f > *k {
                    return None;
                }
                if *k > f {
                    out.push((a.clone(), k - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *a {
                return None;
            } else {
                out.push((a.clone(), *k));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    /// Component-wise minimum of exponents.
    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1.min(other.0[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Mono(out)
    }

    pub fn without(&self, v: &Atom) -> Mono {
        Mono(self.0.iter().filter(|(a, _)| a != v).cloned().collect())
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter().map(|(a, _)| a)
    }

    fn needs_merge(&self) -> bool {
        let mut exps = 0;
        for (a, k) in &self.0 {
            match a.kind() {
                AtomKind::Sym(Symbol::ImagUnit) if *k >= 2 => return true,
                AtomKind::Func(Func::Exp, _) => {
                    exps += *k;
                    if exps > 1 {
                        return true;
                    }
                }
                _ => {}
            }
        }
        false
    }
}

/// Polynomial with terms sorted in descending monomial order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Poly {
    pub(crate) terms: Vec<(Mono, Q)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::one(), c)],
            }
        }
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn atom(a: Atom) -> Self {
        Poly::monomial(Mono::atom(a, 1), Q::one())
    }

    /// Builds from unsorted terms, combining duplicates.
    pub fn from_terms<I: IntoIterator<Item = (Mono, Q)>>(terms: I) -> Self {
        let mut map: BTreeMap<Mono, Q> = BTreeMap::new();
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            match map.entry(m) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(c);
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    *o.get_mut() += c;
                    if o.get().is_zero() {
                        o.remove();
                    }
                }
            }
        }
        Poly {
            terms: map.into_iter().rev().collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.first()
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .iter()
            .flat_map(|(m, _)| m.atoms().cloned())
            .collect()
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge_with(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge_with(other, true)
    }

    fn merge_with(&self, other: &Poly, negate: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        let sgn = |c: &Q| if negate { -c } else { c.clone() };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((b[j].0.clone(), sgn(&b[j].1)));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate {
                        &a[i].1 - &b[j].1
                    } else {
                        &a[i].1 + &b[j].1
                    };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(|(m, c)| (m.clone(), sgn(c))));
        Poly { terms: out }
    }

    /// Multiplication by a single term; order is preserved.
    pub fn mul_term(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, d)| (n.mul(m), d * c))
                .collect(),
        }
    }

    /// Multiplication in the free polynomial ring (no kernel relations).
    pub fn mul_free(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        Poly::from_terms(self.terms.iter().flat_map(|(m, c)| {
            other.terms.iter().map(move |(n, d)| (m.mul(n), c * d))
        }))
    }

    /// Multiplication followed by kernel-relation reduction.
    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_free(other).reduce_relations()
    }

    pub fn pow_free(&self, mut k: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_free(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_free(&base);
            }
        }
        acc
    }

    /// Applies `i² = −1` and merges exponentials inside each monomial.
    pub fn reduce_relations(self) -> Poly {
        if !self.terms.iter().any(|(m, _)| m.needs_merge()) {
            return self;
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms {
            if !m.needs_merge() {
                out.push((m, c));
                continue;
            }
            let mut coef = c;
            let mut rest = Vec::new();
            let mut exp_arg: Option<Expr> = None;
            for (a, k) in m.0 {
                match a.kind() {
                    AtomKind::Sym(Symbol::ImagUnit) => {
                        if k % 4 >= 2 {
                            coef = -coef;
                        }
                        if k % 2 == 1 {
                            rest.push((a, 1));
                        }
                    }
                    AtomKind::Func(Func::Exp, arg) => {
                        let add = arg * &Expr::int(k as i64);
                        exp_arg = Some(match exp_arg {
                            None => add,
                            Some(e) => &e + &add,
                        });
                    }
                    _ => rest.push((a, k)),
                }
            }
            let mut mono = Mono(rest);
            if let Some(arg) = exp_arg {
                if !arg.is_zero() {
                    mono = mono.mul(&Mono::atom(Atom::new(AtomKind::Func(Func::Exp, arg)), 1));
                }
            }
            out.push((mono, coef));
        }
        Poly::from_terms(out)
    }

    pub fn degree(&self, v: &Atom) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree(v)).max().unwrap_or(0)
    }

    /// Coefficients with respect to `v`, indexed by degree.
    pub fn coefficients(&self, v: &Atom) -> Vec<Poly> {
        let d = self.degree(v) as usize;
        let mut buckets: Vec<Vec<(Mono, Q)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let k = m.degree(v) as usize;
            buckets[k].push((m.without(v), c.clone()));
        }
        buckets
            .into_iter()
            .map(|t| {
                // Removing a variable can break the ordering; re-sort.
                Poly::from_terms(t)
            })
            .collect()
    }

    pub fn leading_coefficient(&self, v: &Atom) -> Poly {
        let d = self.degree(v);
        Poly::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.degree(v) == d)
                .map(|(m, c)| (m.without(v), c.clone())),
        )
    }

    /// Exact division up to the kernel relations; `None` when `other` does not divide.
    pub fn exact_div(&self, other: &Poly) -> Option<Poly> {
        if !self.is_zero() && units::has_exp(other) {
            if let Some(q) = units::exact_div(self, other) {
                return q;
            }
        }
        self.exact_div_free(other)
    }

    /// Exact division in the free ring; `None` when `other` does not divide.
    pub(crate) fn exact_div_free(&self, other: &Poly) -> Option<Poly> {
        if other.is_zero() {
            return None;
        }
        if let Some(c) = other.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = other.leading().cloned()?;
        let mut rem = self.clone();
        let mut quot = Vec::new();
        while let Some((m, c)) = rem.leading().cloned() {
            let qm = m.div(&lm)?;
            let qc = &c / &lc;
            rem = rem.sub(&other.mul_term(&qm, &qc));
            quot.push((qm, qc));
        }
        Some(Poly { terms: quot })
    }

    /// Splits off the content with respect to `v`: returns `(content, primitive part)`.
    fn content_pp(&self, v: &Atom) -> (Poly, Poly) {
        let mut content = Poly::zero();
        for c in self.coefficients(v).into_iter().rev() {
            if c.is_zero() {
                continue;
            }
            content = free_gcd(&content, &c);
            if content.is_constant() {
                return (Poly::one(), self.clone());
            }
        }
        let pp = self
            .exact_div_free(&content)
            .expect("content divides its polynomial");
        (content, pp)
    }
}

fn pseudo_remainder(a: &Poly, b: &Poly, v: &Atom) -> Poly {
    let db = b.degree(v);
    let lcb = b.leading_coefficient(v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree(v) >= db {
        let dr = r.degree(v);
        let lcr = r.leading_coefficient(v);
        let shift = Mono::atom(v.clone(), dr - db);
        r = lcb
            .mul_free(&r)
            .sub(&lcr.mul_free(b).mul_term(&shift, &Q::one()));
    }
    r
}

pub(super) fn int_gcd(mut a: BigInt, mut b: BigInt) -> BigInt {
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    if a.is_negative() {
        -a
    } else {
        a
    }
}

/// Scales to integer coefficients with no common integer factor.
fn integer_primitive(p: Poly) -> Poly {
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    for (_, c) in &p.terms {
        let g = int_gcd(den.clone(), c.denom().clone());
        den = &den / &g * c.denom();
        num = int_gcd(num, c.numer().clone());
    }
    if num.is_zero() || (den.is_one() && num.is_one()) {
        return p;
    }
    p.scale(&Q::new(den, num))
}

fn primitive_prs_gcd(a: Poly, b: Poly, v: &Atom) -> Poly {
    let (a, b) = (integer_primitive(a), integer_primitive(b));
    let (mut a, mut b) = if a.degree(v) >= b.degree(v) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        if b.degree(v) == 0 {
            return Poly::one();
        }
        let r = pseudo_remainder(&a, &b, v);
        if r.is_zero() {
            return b;
        }
        if r.degree(v) == 0 {
            return Poly::one();
        }
        let (_, rp) = integer_primitive(r).content_pp(v);
        a = b;
        b = integer_primitive(rp);
    }
}

fn monomial_content(a: &Poly) -> Mono {
    let mut g: Option<Mono> = None;
    for (m, _) in &a.terms {
        g = Some(match g {
            None => m.clone(),
            Some(g) => g.gcd(m),
        });
    }
    g.unwrap_or_default()
}

fn from_univariate(c: Vec<Q>, v: &Atom) -> Poly {
    Poly::from_terms(
        c.into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (Mono::atom(v.clone(), k as u32), c)),
    )
}

fn monomial_gcd(a: &Poly, b: &Poly) -> Poly {
    let mut g: Option<Mono> = None;
    for (m, _) in a.terms.iter().chain(b.terms.iter()) {
        g = Some(match g {
            None => m.clone(),
            Some(g) => g.gcd(m),
        });
        if g.as_ref().map(|g| g.is_one()).unwrap_or(false) {
            break;
        }
    }
    Poly::monomial(g.unwrap_or_default(), Q::one())
}

/// Greatest common divisor up to constants and exponential units,
/// normalized to leading coefficient 1.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if units::has_exp(a) && units::has_exp(b) {
        if let Some(g) = units::gcd(a, b) {
            return g;
        }
    }
    free_gcd(a, b)
}

/// Greatest common divisor in the free ring, normalized to leading coefficient 1.
pub(super) fn free_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if a.terms.len() == 1 || b.terms.len() == 1 {
        return monomial_gcd(a, b);
    }
    // split off monomial contents
    let (ma, mb) = (monomial_content(a), monomial_content(b));
    if !ma.is_one() || !mb.is_one() {
        let g = Poly::monomial(ma.gcd(&mb), Q::one());
        let a1 = a.exact_div_free(&Poly::monomial(ma, Q::one())).expect("content divides");
        let b1 = b.exact_div_free(&Poly::monomial(mb, Q::one())).expect("content divides");
        return g.mul_free(&free_gcd(&a1, &b1)).monic();
    }
    let va = a.atoms();
    let vb = b.atoms();
    if va.len() == 1 && va == vb {
        let v = va.first().expect("one atom");
        return from_univariate(univariate_gcd(univariate_image(a, v, &BTreeMap::new()), univariate_image(b, v, &BTreeMap::new())), v).monic();
    }
    if let Some(g) = divides(b, a, &vb, &va).or_else(|| divides(a, b, &va, &vb)) {
        return g;
    }
    // a variable missing from one side can only live in the other's content
    if let Some(v) = va.difference(&vb).next() {
        return gcd_with_coefficients(b, a, v);
    }
    if let Some(v) = vb.difference(&va).next() {
        return gcd_with_coefficients(a, b, v);
    }
    let mut common: Vec<Atom> = va.intersection(&vb).cloned().collect();
    common.sort_by_key(|v| a.degree(v).max(b.degree(v)));
    let Some(v) = common.first().cloned() else {
        return Poly::one();
    };
    // a coprime image in v means the gcd is free of v
    for w in &common {
        if image_gcd_degree(a, b, w) == Some(0) {
            let ca = a.content_pp(w).0;
            let cb = b.content_pp(w).0;
            return free_gcd(&ca, &cb);
        }
    }
    let (ca, pa) = a.content_pp(&v);
    let (cb, pb) = b.content_pp(&v);
    let c = free_gcd(&ca, &cb);
    let g = primitive_prs_gcd(pa, pb, &v);
    c.mul_free(&g).monic()
}

/// `d.monic()` when `d` divides `n`; cheap degree checks first.
fn divides(d: &Poly, n: &Poly, vd: &BTreeSet<Atom>, vn: &BTreeSet<Atom>) -> Option<Poly> {
    if d.len() > n.len() || !vd.is_subset(vn) || vd.iter().any(|v| d.degree(v) > n.degree(v)) {
        return None;
    }
    n.exact_div_free(d).map(|_| d.monic())
}

fn gcd_with_coefficients(a: &Poly, b: &Poly, v: &Atom) -> Poly {
    let mut g = a.clone();
    for c in b.coefficients(v) {
        if c.is_zero() {
            continue;
        }
        g = free_gcd(&g, &c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    g.monic()
}

/// Degree in `v` of the gcd of the images of `a` and `b` with every other
/// atom replaced by an integer; an upper bound on the true degree. `None`
/// when no tried point keeps both leading coefficients nonzero.
fn image_gcd_degree(a: &Poly, b: &Poly, v: &Atom) -> Option<usize> {
    let atoms: Vec<Atom> = a.atoms().union(&b.atoms()).filter(|w| *w != v).cloned().collect();
    let mut state: u64 = 0x2545f4914f6cdd1d;
    for _ in 0..3 {
        let vals: BTreeMap<Atom, Q> = atoms
            .iter()
            .map(|w| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (w.clone(), Q::from_integer(((state >> 33) % 61 + 2).into()))
            })
            .collect();
        let ia = univariate_image(a, v, &vals);
        let ib = univariate_image(b, v, &vals);
        if ia.len() == a.degree(v) as usize + 1 && ib.len() == b.degree(v) as usize + 1 {
            return Some(univariate_gcd(ia, ib).len() - 1);
        }
    }
    None
}

/// Coefficients in `v`, lowest first, trailing zeros trimmed.
fn univariate_image(p: &Poly, v: &Atom, vals: &BTreeMap<Atom, Q>) -> Vec<Q> {
    let mut out = vec![Q::zero(); p.degree(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut t = c.clone();
        let mut k = 0;
        for (w, e) in &m.0 {
            if w == v {
                k = *e as usize;
            } else {
                let x = &vals[w];
                for _ in 0..*e {
                    t *= x;
                }
            }
        }
        out[k] += t;
    }
    trim(out)
}

fn trim(mut p: Vec<Q>) -> Vec<Q> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn univariate_gcd(mut a: Vec<Q>, mut b: Vec<Q>) -> Vec<Q> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let lb = b.last().expect("nonempty").clone();
        while a.len() >= b.len() {
            let f = a.last().expect("nonempty") / &lb;
            let shift = a.len() - b.len();
            for (i, c) in b.iter().enumerate() {
                let d = &f * c;
                a[shift + i] -= d;
            }
            a = trim(a);
            if a.is_empty() {
                break;
            }
        }
        if let Some(l) = a.last().cloned() {
            for c in a.iter_mut() {
                *c /= &l;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a
}
