//! Relative Chow groups of open subsets of the projective line with a
//! modulus, computed from the idele-style presentation, with the
//! generalized-Jacobian closed form as the independent oracle, and the
//! product-of-curves finiteness bound.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::groups::{finite_abelian_structure, FiniteAbelian, Functor, GroupValue};
use crate::mackey::stabilization_scan;
use crate::poly::{monic_polys, parse_poly, Poly, RationalFunc};
use crate::zlinalg::{cokernel_structure, smith_normal_form, IntMatrix, PresentedGroup};

/// A closed point of the projective line over the base field.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClosedPoint {
    /// Monic irreducible polynomial in the affine coordinate.
    Finite(Poly),
    Infinity,
}

impl fmt::Debug for ClosedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for ClosedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedPoint::Finite(p) => write!(f, "({})", p),
            ClosedPoint::Infinity => write!(f, "(inf)"),
        }
    }
}

impl ClosedPoint {
    pub fn finite(p: Poly) -> Result<ClosedPoint> {
        if !p.is_monic() || !p.is_irreducible() {
            return Err(Error::Unsupported(format!(
                "{} is not a monic irreducible",
                p
            )));
        }
        Ok(ClosedPoint::Finite(p))
    }

    /// Rational point at t = c.
    pub fn rational(base: &Field, c: &FieldElem) -> ClosedPoint {
        let poly = Poly::from_coeffs(base, vec![c.neg(), base.one()]);
        ClosedPoint::Finite(poly)
    }

    pub fn degree(&self) -> usize {
        match self {
            ClosedPoint::Finite(p) => p.degree().unwrap_or(0),
            ClosedPoint::Infinity => 1,
        }
    }

    /// The residue field as a member of the tower.
    pub fn residue_field(&self, base: &Field) -> Result<Field> {
        Field::new(base.p(), base.degree() * self.degree() as u32)
    }
}

/// Divisor on the projective line: signed multiplicities on distinct closed
/// points. The modulus type enforces effectivity.
#[derive(Clone, PartialEq, Eq)]
pub struct Divisor {
    base: Field,
    terms: BTreeMap<ClosedPoint, i64>,
}

impl fmt::Debug for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (pt, m) in &self.terms {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            if *m != 1 {
                write!(f, "{}*", m)?;
            }
            write!(f, "{}", pt)?;
        }
        Ok(())
    }
}

impl Divisor {
    pub fn new(base: &Field) -> Divisor {
        Divisor {
            base: base.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(base: &Field, terms: &[(ClosedPoint, i64)]) -> Divisor {
        let mut d = Divisor::new(base);
        for (pt, m) in terms {
            d.add_term(pt.clone(), *m);
        }
        d
    }

    pub fn add_term(&mut self, pt: ClosedPoint, mult: i64) {
        let e = self.terms.entry(pt).or_insert(0);
        *e += mult;
        if *e == 0 {
            self.terms
                .retain(|_, m| *m != 0);
        }
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ClosedPoint, i64)> {
        self.terms.iter().map(|(p, &m)| (p, m))
    }

    pub fn multiplicity(&self, pt: &ClosedPoint) -> i64 {
        self.terms.get(pt).copied().unwrap_or(0)
    }

    pub fn support(&self) -> Vec<ClosedPoint> {
        self.terms.keys().cloned().collect()
    }

    pub fn is_effective(&self) -> bool {
        self.terms.values().all(|&m| m >= 1)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> i64 {
        self.terms
            .iter()
            .map(|(p, &m)| m * p.degree() as i64)
            .sum()
    }

    /// Parses divisor literals: terms joined by top-level `+`, each term
    /// `[k*]atom` with atom `inf`, `(inf)`, a rational value `(c)`, or a
    /// polynomial `(t^2+1)`; bare atoms without parentheses are allowed when
    /// they contain no `+`.
    pub fn parse(base: &Field, s: &str) -> Result<Divisor> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::parse(0, "empty divisor"));
        }
        let mut d = Divisor::new(base);
        let mut depth = 0usize;
        let mut start = 0usize;
        let bytes = s.as_bytes();
        let mut pieces = Vec::new();
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| Error::parse(i, "unbalanced parentheses"))?
                }
                b'+' if depth == 0 => {
                    pieces.push(&s[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(Error::parse(s.len(), "unbalanced parentheses"));
        }
        pieces.push(&s[start..]);
        for piece in pieces {
            if piece.is_empty() {
                return Err(Error::parse(0, "empty divisor term"));
            }
            let (mult, atom) = match piece.split_once('*') {
                Some((m, a)) => (
                    m.parse::<i64>()
                        .map_err(|_| Error::parse(0, format!("bad multiplicity {:?}", m)))?,
                    a,
                ),
                None => (1, piece),
            };
            let inner = atom
                .strip_prefix('(')
                .and_then(|a| a.strip_suffix(')'))
                .unwrap_or(atom);
            if inner == "inf" {
                d.add_term(ClosedPoint::Infinity, mult);
                continue;
            }
            let poly = parse_poly(base, inner)?;
            if poly.is_constant() {
                // a rational value c names the point t = c
                let c = poly.coeff(0);
                d.add_term(ClosedPoint::rational(base, &c), mult);
            } else {
                for (g, e) in poly.monic().factor()?.1 {
                    d.add_term(ClosedPoint::Finite(g), mult * e as i64);
                }
            }
        }
        Ok(d)
    }
}

/// An effective divisor with nonempty support together with the open
/// complement of its support in the projective line.
#[derive(Clone, PartialEq, Eq)]
pub struct Modulus {
    divisor: Divisor,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.divisor)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.divisor)
    }
}

impl Modulus {
    pub fn new(divisor: Divisor) -> Result<Modulus> {
        if divisor.is_empty() {
            return Err(Error::EmptySupport);
        }
        if !divisor.is_effective() {
            return Err(Error::Unsupported("modulus must be effective".into()));
        }
        Ok(Modulus { divisor })
    }

    pub fn parse(base: &Field, s: &str) -> Result<Modulus> {
        Modulus::new(Divisor::parse(base, s)?)
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    pub fn base(&self) -> &Field {
        self.divisor.base()
    }

    pub fn touches_infinity(&self) -> bool {
        self.divisor.multiplicity(&ClosedPoint::Infinity) > 0
    }

    /// The modulus as a single polynomial once the support is finite.
    pub fn polynomial(&self) -> Result<Poly> {
        let mut m = Poly::one(self.base());
        for (pt, mult) in self.divisor.terms() {
            match pt {
                ClosedPoint::Infinity => {
                    return Err(Error::Unsupported(
                        "modulus touches infinity; normalize first".into(),
                    ))
                }
                ClosedPoint::Finite(p) => m = m.mul(&p.pow(mult as u32)),
            }
        }
        Ok(m)
    }
}

/// Moebius normalization t -> 1/(t - c): moves a modulus touching infinity
/// onto finite support. Returns the normalized modulus and the chosen c
/// when a change of coordinate was needed.
pub fn normalize_modulus(m: &Modulus) -> Result<(Modulus, Option<FieldElem>)> {
    if !m.touches_infinity() {
        return Ok((m.clone(), None));
    }
    let base = m.base();
    // least rational point outside the support
    let mut chosen = None;
    for c in base.elements() {
        let pt = ClosedPoint::rational(base, &c);
        if m.divisor().multiplicity(&pt) == 0 {
            chosen = Some(c);
            break;
        }
    }
    let Some(c) = chosen else {
        return Err(Error::NoFreeRationalPoint);
    };
    let mut out = Divisor::new(base);
    for (pt, mult) in m.divisor().terms() {
        let image = moebius_point(pt, &c)?;
        out.add_term(image, mult);
    }
    Ok((Modulus::new(out)?, Some(c)))
}

/// Image of a closed point under t -> 1/(t - c).
fn moebius_point(pt: &ClosedPoint, c: &FieldElem) -> Result<ClosedPoint> {
    let base = c.field();
    match pt {
        ClosedPoint::Infinity => Ok(ClosedPoint::rational(base, &base.zero())),
        ClosedPoint::Finite(p) => {
            // roots map z -> 1/(z - c); the image minimal polynomial is the
            // monic normalization of u^d * p(c + 1/u)
            let d = p.degree().unwrap();
            let mut acc = Poly::zero(base);
            // p(c + 1/u) * u^d = sum a_i (c u + 1)^i u^{d-i}
            let cu_plus_1 = Poly::from_coeffs(base, vec![base.one(), c.clone()]);
            for (i, a) in p.coeffs().iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let mut term = cu_plus_1.pow(i as u32);
                let mut shift = vec![base.zero(); d - i];
                shift.push(base.one());
                term = term.mul(&Poly::from_coeffs(base, shift));
                acc = acc.add(&term.scale(a));
            }
            // if c is a root of p the degree drops; the support choice
            // excludes that case
            let acc = acc.monic();
            ClosedPoint::finite(acc)
        }
    }
}

/// Order of the generalized Jacobian J(P^1, D) over the base field, by the
/// closed form prod q^{deg(p)(e-1)} (q^deg(p) - 1) / (q - 1).
pub fn genjac_order(m: &Modulus) -> Result<BigUint> {
    let (norm, _) = normalize_modulus(m)?;
    let q = BigUint::from(norm.base().order());
    let mut order = BigUint::from(1u32);
    for (pt, mult) in norm.divisor().terms() {
        let d = pt.degree() as u32;
        let qd = q.pow(d);
        order *= qd.pow(mult as u32 - 1) * (qd - BigUint::from(1u32));
    }
    Ok(order / (q - BigUint::from(1u32)))
}

/// The local multiplicative group F_x^x / U_x^m at a finite closed point:
/// a free uniformizer coordinate plus the finite unit group (O/pi^m)^x with
/// explicit generators and discrete logarithms.
pub struct LocalUnits {
    pub point: ClosedPoint,
    pub multiplicity: u32,
    pub pi: Poly,
    /// Units of F_q[t]/pi^m, as residue polynomials.
    pub units: FiniteAbelian<Poly>,
    modulus_power: Poly,
}

impl LocalUnits {
    /// v_x(f) and the discrete log of the unit part f * pi^{-v} mod pi^m.
    pub fn class_of(&self, f: &RationalFunc) -> Result<(i64, Vec<i64>)> {
        let v_num = f.num().valuation(&self.pi)?;
        let v_den = f.den().valuation(&self.pi)?;
        let v = v_num - v_den;
        let strip = |p: &Poly, k: i64| -> Result<Poly> {
            let mut cur = p.clone();
            for _ in 0..k {
                cur = cur.divrem(&self.pi)?.0;
            }
            cur.rem(&self.modulus_power)
        };
        let n = strip(f.num(), v_num)?;
        let d = strip(f.den(), v_den)?;
        let unit = n.mul(&d.inv_mod(&self.modulus_power)?).rem(&self.modulus_power)?;
        let dl = self
            .units
            .dlog
            .get(&unit)
            .cloned()
            .ok_or_else(|| Error::LawViolation("unit missing from local table".into()))?;
        Ok((v, dl))
    }
}

/// F_x^x / U_x^m at a finite point of P^1.
pub fn local_unit_quotient(base: &Field, point: &ClosedPoint, m: u32) -> Result<LocalUnits> {
    if m < 1 {
        return Err(Error::Unsupported("multiplicity must be >= 1".into()));
    }
    let ClosedPoint::Finite(pi) = point else {
        return Err(Error::Unsupported(
            "local data at infinity is reached through normalization".into(),
        ));
    };
    let modulus_power = pi.pow(m);
    let deg = modulus_power.degree().unwrap();
    let q = base.order();
    let count = (q as u128).pow(deg as u32);
    if count > 1 << 24 {
        return Err(Error::GroupTooLarge {
            size: count,
            max: 1 << 24,
        });
    }
    let mut elements = Vec::new();
    for n in 0..count as u64 {
        let mut coeffs = Vec::with_capacity(deg);
        let mut v = n;
        for _ in 0..deg {
            coeffs.push(base.from_index(v % q));
            v /= q;
        }
        let r = Poly::from_coeffs(base, coeffs);
        if r.gcd(&modulus_power).is_one() {
            elements.push(r);
        }
    }
    let one = Poly::one(base);
    let mp = modulus_power.clone();
    let units = finite_abelian_structure(
        &elements,
        one,
        |a: &Poly, b: &Poly| a.mul(b).rem(&mp).expect("nonzero modulus"),
        |a: &Poly| a.inv_mod(&mp).expect("unit"),
    )?;
    Ok(LocalUnits {
        point: point.clone(),
        multiplicity: m,
        pi: pi.clone(),
        units,
        modulus_power,
    })
}

/// One evaluation of the idele presentation at fixed truncation bounds.
pub struct ChowPresentation {
    pub modulus: Modulus,
    pub normalization: Option<FieldElem>,
    pub n_pts: usize,
    pub n_fun: usize,
    pub generator_count: usize,
    pub relation_count: usize,
    /// The degree functional on the presentation generators.
    pub degrees: Vec<i64>,
    /// Structure of CH_0(X, D).
    pub full: PresentedGroup,
    /// Structure of the kernel of the degree map.
    pub degree_zero: PresentedGroup,
}

/// Cycle generators: closed points of the open complement of degree at most
/// n_pts, infinity included.
fn cycle_points(base: &Field, support: &[ClosedPoint], n_pts: usize) -> Vec<ClosedPoint> {
    let mut out = vec![ClosedPoint::Infinity];
    for d in 1..=n_pts {
        for p in monic_polys(base, d) {
            if p.is_irreducible() {
                let pt = ClosedPoint::Finite(p);
                if !support.contains(&pt) {
                    out.push(pt);
                }
            }
        }
    }
    out
}

/// Builds and solves the idele presentation of CH_0(X, D) at one truncation.
pub fn relative_chow(modulus: &Modulus, n_pts: usize, n_fun: usize) -> Result<ChowPresentation> {
    if n_fun > n_pts {
        return Err(Error::Unsupported(
            "function degree bound must not exceed the cycle degree bound".into(),
        ));
    }
    let (norm, normalization) = normalize_modulus(modulus)?;
    let base = norm.base().clone();
    let support = norm.divisor().support();
    let cycles = cycle_points(&base, &support, n_pts);
    if cycles.len() > 20_000 {
        return Err(Error::GroupTooLarge {
            size: cycles.len() as u128,
            max: 20_000,
        });
    }
    let locals: Vec<LocalUnits> = support
        .iter()
        .map(|pt| local_unit_quotient(&base, pt, norm.divisor().multiplicity(pt) as u32))
        .collect::<Result<Vec<_>>>()?;
    // generator layout: cycles, then per local place one uniformizer
    // coordinate followed by its unit generators
    let cycle_index: BTreeMap<ClosedPoint, usize> = cycles
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    let mut local_offsets = Vec::new();
    let mut total = cycles.len();
    for l in &locals {
        local_offsets.push(total);
        total += 1 + l.units.orders.len();
    }
    // degree functional
    let mut degree = vec![0i64; total];
    for (i, p) in cycles.iter().enumerate() {
        degree[i] = p.degree() as i64;
    }
    for (l, &off) in locals.iter().zip(&local_offsets) {
        degree[off] = l.point.degree() as i64;
    }
    // relation rows: images of the function-group generators
    let mut rows: Vec<Vec<(usize, i64)>> = Vec::new();
    let mut push_function = |f: &RationalFunc| -> Result<()> {
        let mut row: Vec<(usize, i64)> = Vec::new();
        // divisor on X: zeros and poles away from the support
        let (_, num_factors) = f.num().factor()?;
        let (_, den_factors) = f.den().factor()?;
        let mut div: BTreeMap<ClosedPoint, i64> = BTreeMap::new();
        for (g, e) in num_factors {
            *div.entry(ClosedPoint::Finite(g)).or_insert(0) += e as i64;
        }
        for (g, e) in den_factors {
            *div.entry(ClosedPoint::Finite(g)).or_insert(0) -= e as i64;
        }
        *div.entry(ClosedPoint::Infinity).or_insert(0) += f.valuation_at_infinity()?;
        for (pt, mult) in div {
            if mult == 0 || support.contains(&pt) {
                continue;
            }
            let Some(&i) = cycle_index.get(&pt) else {
                return Err(Error::Unsupported(format!(
                    "function support at {} exceeds the cycle bound",
                    pt
                )));
            };
            row.push((i, mult));
        }
        // local components
        for (l, &off) in locals.iter().zip(&local_offsets) {
            let (v, dl) = l.class_of(f)?;
            if v != 0 {
                row.push((off, v));
            }
            for (j, &c) in dl.iter().enumerate() {
                if c != 0 {
                    row.push((off + 1 + j, c));
                }
            }
        }
        // principal ideles have degree zero
        let total_deg: i64 = row.iter().map(|&(i, c)| c * degree[i]).sum();
        assert_eq!(total_deg, 0, "principal idele of nonzero degree");
        row.sort_by_key(|&(i, _)| i);
        if !row.is_empty() {
            rows.push(row);
        }
        Ok(())
    };
    // constants: one generator of the scalar group
    let c0 = base.primitive_generator();
    if !c0.is_one() {
        push_function(&RationalFunc::from_poly(Poly::constant(c0)))?;
    }
    // monic irreducibles up to the function bound, support included
    for d in 1..=n_fun {
        for g in monic_polys(&base, d) {
            if g.is_irreducible() {
                push_function(&RationalFunc::from_poly(g))?;
            }
        }
    }
    // unit orders of the local groups
    for (l, &off) in locals.iter().zip(&local_offsets) {
        for (j, &o) in l.units.orders.iter().enumerate() {
            rows.push(vec![(off + 1 + j, o as i64)]);
        }
    }
    let relation_count = rows.len();
    rows.sort();
    rows.dedup();
    let big_rows: Vec<Vec<(usize, BigInt)>> = rows
        .iter()
        .map(|r| r.iter().map(|&(j, c)| (j, BigInt::from(c))).collect())
        .collect();
    let relations = IntMatrix::from_sparse_rows(&big_rows, total);
    let full = cokernel_structure(&relations, total);
    // kernel of the degree map: rewrite the rows in a basis of ker(deg)
    let mut deg_matrix = IntMatrix::new(1, total);
    for (i, &d) in degree.iter().enumerate() {
        if d != 0 {
            deg_matrix.add_entry(0, i, BigInt::from(d));
        }
    }
    let snf = smith_normal_form(&deg_matrix);
    // v in ker(deg) iff (V^-1 v) has vanishing first coordinate
    let mut vinv_cols: Vec<Vec<(usize, BigInt)>> = vec![Vec::new(); total];
    for (i, row) in snf.v_inv.sparse_rows().into_iter().enumerate() {
        for (j, x) in row {
            vinv_cols[j].push((i, x));
        }
    }
    let mut k_rows: Vec<Vec<(usize, BigInt)>> = Vec::new();
    for r in &big_rows {
        // w = V^-1 * r (column vector indexing)
        let mut w = vec![BigInt::zero(); total];
        for (j, c) in r {
            for (i, x) in &vinv_cols[*j] {
                w[*i] += c * x;
            }
        }
        assert!(w[0].is_zero(), "relation row outside the degree kernel");
        let kr: Vec<(usize, BigInt)> = w
            .into_iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i - 1, c))
            .collect();
        if !kr.is_empty() {
            k_rows.push(kr);
        }
    }
    let degree_zero = cokernel_structure(
        &IntMatrix::from_sparse_rows(&k_rows, total - 1),
        total - 1,
    );
    Ok(ChowPresentation {
        modulus: norm,
        normalization,
        n_pts,
        n_fun,
        generator_count: total,
        relation_count,
        degrees: degree,
        full,
        degree_zero,
    })
}

/// Stabilized evaluation: ramps the truncation until two consecutive
/// structures agree, capped at 4*deg(D) + 4.
pub struct ChowResult {
    pub last: ChowPresentation,
    pub per_bound: Vec<(usize, PresentedGroup, PresentedGroup)>,
    pub stabilized: bool,
    pub oracle_order: BigUint,
    pub oracle_agrees: bool,
}

pub fn relative_chow_stabilized(modulus: &Modulus) -> Result<ChowResult> {
    let cap = (4 * modulus.divisor().total_degree() as usize + 4).max(2);
    let mut per_bound = Vec::new();
    let mut last: Option<ChowPresentation> = None;
    let mut stabilized = false;
    for n in 1..=cap {
        let cur = relative_chow(modulus, n, n)?;
        per_bound.push((n, cur.full.clone(), cur.degree_zero.clone()));
        if let Some(prev) = &last {
            if prev.full == cur.full && prev.degree_zero == cur.degree_zero {
                stabilized = true;
                last = Some(cur);
                break;
            }
        }
        last = Some(cur);
    }
    let last = last.expect("at least one evaluation");
    let oracle_order = genjac_order(modulus)?;
    let oracle_agrees = last.degree_zero.order() == Some(oracle_order.clone());
    Ok(ChowResult {
        last,
        per_bound,
        stabilized,
        oracle_order,
        oracle_agrees,
    })
}

/// The finiteness bound for a product of two open curves with split
/// modulus: |J_1| * |J_2| * |(J_1 (x)M J_2)(Spec F)| at the given product
/// truncation bound.
pub struct ProductBound {
    pub j1_order: BigUint,
    pub j2_order: BigUint,
    pub mackey_factor: Option<BigUint>,
    pub mackey_stabilized: bool,
    pub bound: Option<BigUint>,
}

pub fn product_bound(m1: &Modulus, m2: &Modulus, d_max: u32) -> Result<ProductBound> {
    let base = m1.base().clone();
    if m2.base() != &base {
        return Err(Error::CharMismatch(base.p(), m2.base().p()));
    }
    // the theorem needs a rational point on each open curve
    for m in [m1, m2] {
        let rational_in_support = m
            .divisor()
            .support()
            .iter()
            .filter(|p| p.degree() == 1)
            .count() as u64;
        if rational_in_support >= base.order() + 1 {
            return Err(Error::NoRationalPoint);
        }
    }
    let j1_order = genjac_order(m1)?;
    let j2_order = genjac_order(m2)?;
    let (n1, _) = normalize_modulus(m1)?;
    let (n2, _) = normalize_modulus(m2)?;
    let functors = vec![
        Functor::GenJac(n1.polynomial()?),
        Functor::GenJac(n2.polynomial()?),
    ];
    let scan = stabilization_scan(&functors, &base, 1, d_max)?;
    let mackey_factor = scan.final_structure().order();
    let bound = mackey_factor
        .clone()
        .map(|m| &j1_order * &j2_order * m);
    Ok(ProductBound {
        j1_order,
        j2_order,
        mackey_factor,
        mackey_stabilized: scan.stabilized,
        bound,
    })
}

/// Push-forward of a cycle on the base-changed line down to the base:
/// a closed point with residue field K maps to its image point with
/// multiplicity [K : residue field of the image].
pub fn cycle_pushforward(
    ext: &Field,
    base: &Field,
    cycle: &[(ClosedPoint, i64)],
) -> Result<Vec<(ClosedPoint, i64)>> {
    if !base.is_subfield_of(ext) {
        return Err(Error::NotSubfield {
            sub: base.order(),
            sup: ext.order(),
        });
    }
    let e = (ext.degree() / base.degree()) as i64;
    let mut out: BTreeMap<ClosedPoint, i64> = BTreeMap::new();
    for (pt, mult) in cycle {
        match pt {
            ClosedPoint::Infinity => {
                // kappa(inf') = ext over kappa(inf) = base
                *out.entry(ClosedPoint::Infinity).or_insert(0) += mult * e;
            }
            ClosedPoint::Finite(p) => {
                let dp = p.degree().unwrap() as u32;
                // splitting field of p over ext, inside the tower over base
                let kappa = Field::new(ext.p(), ext.degree() * dp)?;
                let rho = kappa
                    .elements()
                    .find(|z| p.eval(z).map(|v| v.is_zero()).unwrap_or(false))
                    .ok_or_else(|| Error::LawViolation("irreducible without a root".into()))?;
                // minimal polynomial of rho over the base
                let mut conj = rho.clone();
                let mut d = 0u32;
                loop {
                    conj = conj.pow(base.order());
                    d += 1;
                    if conj == rho {
                        break;
                    }
                }
                let mut minpoly = Poly::one(&kappa);
                let mut c = rho.clone();
                let x = Poly::x(&kappa);
                for _ in 0..d {
                    minpoly = minpoly.mul(&x.sub(&Poly::constant(c.clone())));
                    c = c.pow(base.order());
                }
                let coeffs = minpoly
                    .coeffs()
                    .iter()
                    .map(|z| z.project(base))
                    .collect::<Result<Vec<_>>>()?;
                let image = Poly::from_coeffs(base, coeffs);
                // [kappa(pt') : kappa(image)] = (e * deg pt') / deg image
                let k = e * dp as i64 / d as i64;
                *out.entry(ClosedPoint::finite(image)?).or_insert(0) += mult * k;
            }
        }
    }
    Ok(out.into_iter().filter(|&(_, m)| m != 0).collect())
}

/// The classical identification of degree-zero classes with unit classes of
/// the generalized Jacobian: a degree-zero cycle on the complement of the
/// (finite, normalized) support equals div(f) for f = prod pi^{n_pi}, and
/// maps to the class of f in (F[t]/m)^x / F^x.
pub fn cycle_class_to_jacobian(
    modulus: &Modulus,
    point_field: &Field,
    cycle: &[(ClosedPoint, i64)],
) -> Result<GroupValue> {
    let m_poly = modulus.polynomial()?;
    let m_ext = m_poly.base_change(point_field)?;
    let total: i64 = cycle.iter().map(|(p, m)| m * p.degree() as i64).sum();
    if total != 0 {
        return Err(Error::Unsupported("cycle must have degree zero".into()));
    }
    let mut num = Poly::one(point_field);
    let mut den = Poly::one(point_field);
    for (pt, mult) in cycle {
        match pt {
            ClosedPoint::Infinity => {} // absorbed by the degree balance
            ClosedPoint::Finite(p) => {
                if !p.gcd(&m_ext).is_one() {
                    return Err(Error::Unsupported(
                        "cycle meets the modulus support".into(),
                    ));
                }
                if *mult >= 0 {
                    num = num.mul(&p.pow(*mult as u32)).rem(&m_ext)?;
                } else {
                    den = den.mul(&p.pow((-mult) as u32)).rem(&m_ext)?;
                }
            }
        }
    }
    let rep = num.mul(&den.inv_mod(&m_ext)?).rem(&m_ext)?;
    GroupValue::genjac(&m_poly, point_field, rep)
}
