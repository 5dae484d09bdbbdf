//! Dense univariate polynomials and rational functions over a tower field,
//! with the exhaustive-search factorization used throughout the engine.

use std::fmt;

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};

/// Polynomial with coefficients in a fixed field, low-to-high, no trailing
/// zeros (the zero polynomial has an empty coefficient list).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    field: Field,
    coeffs: Vec<FieldElem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.field(), self.coeffs.len())
            .cmp(&(other.field(), other.coeffs.len()))
            .then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            let show_coeff = i == 0 || !c.is_one();
            if show_coeff {
                if self.field.degree() == 1 {
                    write!(f, "{}", c.coeffs()[0])?;
                } else {
                    write!(f, "({})", c)?;
                }
                if i > 0 {
                    write!(f, "*")?;
                }
            }
            if i == 1 {
                write!(f, "t")?;
            } else if i > 1 {
                write!(f, "t^{}", i)?;
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero(field: &Field) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: &Field) -> Poly {
        Poly::constant(field.one())
    }

    pub fn constant(c: FieldElem) -> Poly {
        let field = c.field().clone();
        let coeffs = if c.is_zero() { Vec::new() } else { vec![c] };
        Poly { field, coeffs }
    }

    /// The variable t.
    pub fn x(field: &Field) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: vec![field.zero(), field.one()],
        }
    }

    pub fn from_coeffs(field: &Field, coeffs: Vec<FieldElem>) -> Poly {
        let mut p = Poly {
            field: field.clone(),
            coeffs,
        };
        p.normalize();
        p
    }

    pub fn from_u64_coeffs(field: &Field, coeffs: &[u64]) -> Poly {
        let cs = coeffs.iter().map(|&c| field.from_u64(c)).collect();
        Poly::from_coeffs(field, cs)
    }

    fn normalize(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> Option<&FieldElem> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        matches!(self.leading(), Some(c) if c.is_one())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        Poly::from_coeffs(&self.field, out)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(&self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Poly::from_coeffs(&self.field, out)
    }

    pub fn scale(&self, c: &FieldElem) -> Poly {
        Poly::from_coeffs(
            &self.field,
            self.coeffs.iter().map(|a| a.mul(c)).collect(),
        )
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.field);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn divrem(&self, den: &Poly) -> Result<(Poly, Poly)> {
        if den.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let dd = den.degree().unwrap();
        let lead_inv = den.leading().unwrap().inv()?;
        let mut rem = self.coeffs.clone();
        if rem.len() < dd + 1 {
            return Ok((Poly::zero(&self.field), self.clone()));
        }
        let mut quo = vec![self.field.zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let f = rem[i].mul(&lead_inv);
            quo[i - dd] = f.clone();
            for j in 0..=dd {
                let sub = f.mul(&den.coeff(j));
                rem[i - dd + j] = rem[i - dd + j].sub(&sub);
            }
        }
        Ok((
            Poly::from_coeffs(&self.field, quo),
            Poly::from_coeffs(&self.field, rem),
        ))
    }

    pub fn rem(&self, den: &Poly) -> Result<Poly> {
        Ok(self.divrem(den)?.1)
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some(l) => self.scale(&l.inv().expect("leading coefficient is nonzero")),
        }
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: returns (g, s, t) with s*self + t*other = g, g monic.
    pub fn xgcd(&self, other: &Poly) -> (Poly, Poly, Poly) {
        let field = &self.field;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (Poly::one(field), Poly::zero(field));
        let (mut t0, mut t1) = (Poly::zero(field), Poly::one(field));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1).expect("nonzero divisor");
            r0 = r1;
            r1 = r;
            let s = s0.sub(&q.mul(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub(&q.mul(&t1));
            t0 = t1;
            t1 = t;
        }
        if let Some(l) = r0.leading() {
            let inv = l.inv().expect("nonzero leading coefficient");
            return (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv));
        }
        (r0, s0, t0)
    }

    /// Inverse modulo m; errors when gcd(self, m) != 1.
    pub fn inv_mod(&self, m: &Poly) -> Result<Poly> {
        let (g, s, _) = self.xgcd(m);
        if !g.is_one() {
            return Err(Error::ZeroInverse);
        }
        s.rem(m)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero(&self.field);
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.scale(i as u64 % self.field.p()))
            .collect();
        Poly::from_coeffs(&self.field, out)
    }

    /// Evaluate at a point of the coefficient field or an extension of it.
    pub fn eval(&self, at: &FieldElem) -> Result<FieldElem> {
        let target = at.field();
        let mut acc = target.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(at);
            acc = acc.add(&c.embed(target)?);
        }
        Ok(acc)
    }

    /// Same polynomial with coefficients embedded into an extension field.
    pub fn base_change(&self, target: &Field) -> Result<Poly> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.embed(target))
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly::from_coeffs(target, coeffs))
    }

    /// Exact valuation of `self` at the monic irreducible `pi` (0 for
    /// coprime, errors on the zero polynomial).
    pub fn valuation(&self, pi: &Poly) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let mut v = 0i64;
        let mut cur = self.clone();
        loop {
            let (q, r) = cur.divrem(pi)?;
            if !r.is_zero() {
                return Ok(v);
            }
            v += 1;
            cur = q;
        }
    }

    /// Irreducibility by trial division by all monic polynomials of degree
    /// at most deg/2.
    pub fn is_irreducible(&self) -> bool {
        let Some(deg) = self.degree() else {
            return false;
        };
        if deg == 0 {
            return false;
        }
        if deg == 1 {
            return true;
        }
        for k in 1..=(deg / 2) {
            for cand in monic_polys(&self.field, k) {
                if self.rem(&cand).expect("nonzero divisor").is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Monic irreducible factors with multiplicities plus the unit, by trial
    /// division in ascending (degree, enumeration) order.
    pub fn factor(&self) -> Result<(FieldElem, Vec<(Poly, u32)>)> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let mut unit = self.leading().unwrap().clone();
        let mut cur = self.monic();
        let mut factors = Vec::new();
        let mut k = 1;
        while cur.degree().unwrap_or(0) > 0 {
            let deg = cur.degree().unwrap();
            if k > deg / 2 {
                // remainder is irreducible
                factors.push((cur.clone(), 1));
                cur = Poly::one(&self.field);
                break;
            }
            for cand in monic_polys(&self.field, k) {
                if cur.degree().unwrap_or(0) < k {
                    break;
                }
                let mut mult = 0u32;
                loop {
                    let (q, r) = cur.divrem(&cand)?;
                    if r.is_zero() {
                        mult += 1;
                        cur = q;
                    } else {
                        break;
                    }
                }
                if mult > 0 {
                    // candidates are hit in ascending order, so the first
                    // divisor of each degree is automatically irreducible
                    factors.push((cand.clone(), mult));
                }
            }
            k += 1;
        }
        if let Some(l) = cur.leading() {
            unit = unit.mul(l);
        }
        Ok((unit, factors))
    }
}

/// All monic polynomials of exact degree `deg`, in enumeration order of the
/// lower coefficients (c0 fastest).
pub fn monic_polys(field: &Field, deg: usize) -> impl Iterator<Item = Poly> + '_ {
    let q = field.order();
    let total = q.pow(deg as u32);
    (0..total).map(move |n| {
        let mut coeffs = Vec::with_capacity(deg + 1);
        let mut m = n;
        for _ in 0..deg {
            coeffs.push(field.from_index(m % q));
            m /= q;
        }
        coeffs.push(field.one());
        Poly::from_coeffs(field, coeffs)
    })
}

/// All polynomials of degree at most `deg` (including zero).
pub fn polys_up_to(field: &Field, deg: usize) -> impl Iterator<Item = Poly> + '_ {
    let q = field.order();
    let total = q.pow(deg as u32 + 1);
    (0..total).map(move |n| {
        let mut coeffs = Vec::with_capacity(deg + 1);
        let mut m = n;
        for _ in 0..=deg {
            coeffs.push(field.from_index(m % q));
            m /= q;
        }
        Poly::from_coeffs(field, coeffs)
    })
}

/// Monic irreducibles of degree 1..=max_degree in ascending order.
pub fn irreducibles(field: &Field, max_degree: usize) -> Vec<Poly> {
    let mut out = Vec::new();
    for k in 1..=max_degree {
        for cand in monic_polys(field, k) {
            if cand.is_irreducible() {
                out.push(cand);
            }
        }
    }
    out
}

/// Parses sums of monomials over the prime-order coefficients, e.g.
/// `t^2+2*t+1`, `1`, `2*t^3`, `t^2-1`.
pub fn parse_poly(field: &Field, s: &str) -> Result<Poly> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::parse(0, "empty polynomial"));
    }
    let bytes = s.as_bytes();
    let mut acc = Poly::zero(field);
    let mut i = 0usize;
    let mut sign_neg = false;
    if bytes[0] == b'+' || bytes[0] == b'-' {
        sign_neg = bytes[0] == b'-';
        i = 1;
    }
    loop {
        // parse one monomial: [INT][*][t[^INT]]
        let start = i;
        let mut coeff: Option<i64> = None;
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > i {
            coeff = Some(
                s[i..j]
                    .parse()
                    .map_err(|_| Error::parse(i, "bad integer"))?,
            );
            i = j;
        }
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
        }
        let mut exp = 0usize;
        if i < bytes.len() && bytes[i] == b't' {
            i += 1;
            exp = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let k = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == k {
                    return Err(Error::parse(i, "missing exponent"));
                }
                exp = s[k..i]
                    .parse()
                    .map_err(|_| Error::parse(k, "bad exponent"))?;
            }
        }
        if i == start && coeff.is_none() {
            return Err(Error::parse(i, "expected monomial"));
        }
        let c = coeff.unwrap_or(1);
        let c = if sign_neg { -c } else { c };
        let mut coeffs = vec![field.zero(); exp + 1];
        coeffs[exp] = field.from_i64(c);
        acc = acc.add(&Poly::from_coeffs(field, coeffs));
        if i == bytes.len() {
            break;
        }
        match bytes[i] {
            b'+' => {
                sign_neg = false;
                i += 1;
            }
            b'-' => {
                sign_neg = true;
                i += 1;
            }
            _ => return Err(Error::parse(i, format!("unexpected byte {:?}", s.as_bytes()[i] as char))),
        }
    }
    Ok(acc)
}

/// Rational function num/den in lowest terms with monic denominator.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalFunc {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl fmt::Display for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl RationalFunc {
    pub fn new(num: Poly, den: Poly) -> Result<RationalFunc> {
        if den.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let mut r = RationalFunc { num, den };
        r.reduce();
        Ok(r)
    }

    pub fn from_poly(p: Poly) -> RationalFunc {
        let field = p.field().clone();
        RationalFunc {
            num: p,
            den: Poly::one(&field),
        }
    }

    pub fn one(field: &Field) -> RationalFunc {
        RationalFunc::from_poly(Poly::one(field))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one(self.num.field());
            return;
        }
        let g = self.num.gcd(&self.den);
        if !g.is_one() {
            self.num = self.num.divrem(&g).expect("nonzero gcd").0;
            self.den = self.den.divrem(&g).expect("nonzero gcd").0;
        }
        let l = self.den.leading().expect("nonzero denominator").clone();
        if !l.is_one() {
            let inv = l.inv().expect("nonzero");
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
    }

    pub fn field(&self) -> &Field {
        self.num.field()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_one()
    }

    pub fn add(&self, other: &RationalFunc) -> RationalFunc {
        RationalFunc::new(
            self.num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
        .expect("nonzero denominator")
    }

    pub fn sub(&self, other: &RationalFunc) -> RationalFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RationalFunc {
        RationalFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RationalFunc) -> RationalFunc {
        RationalFunc::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominator")
    }

    pub fn inv(&self) -> Result<RationalFunc> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        RationalFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn derivative(&self) -> RationalFunc {
        // (n/d)' = (n'd - nd')/d^2
        RationalFunc::new(
            self.num
                .derivative()
                .mul(&self.den)
                .sub(&self.num.mul(&self.den.derivative())),
            self.den.mul(&self.den),
        )
        .expect("nonzero denominator")
    }

    /// Logarithmic derivative f'/f.
    pub fn dlog(&self) -> Result<RationalFunc> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        Ok(self.derivative().mul(&self.inv()?))
    }

    /// Valuation at a finite closed point given by a monic irreducible.
    pub fn valuation(&self, pi: &Poly) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        Ok(self.num.valuation(pi)? - self.den.valuation(pi)?)
    }

    /// Valuation at infinity: deg(den) - deg(num).
    pub fn valuation_at_infinity(&self) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        Ok(self.den.degree().unwrap() as i64 - self.num.degree().unwrap() as i64)
    }

    /// Value at a point of an extension field; errors when the denominator
    /// vanishes there.
    pub fn eval(&self, at: &FieldElem) -> Result<FieldElem> {
        let d = self.den.eval(at)?;
        if d.is_zero() {
            return Err(Error::NotRegular(format!(
                "denominator vanishes at {}",
                at
            )));
        }
        Ok(self.num.eval(at)?.mul(&d.inv()?))
    }
}
