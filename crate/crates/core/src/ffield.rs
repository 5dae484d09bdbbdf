//! Arithmetic in a coherent tower of finite fields `F_{p^d}`.
//!
//! Every field is `F_p[x]/(f_d)` where `f_d` is the lexicographically least
//! monic irreducible of degree `d` over `F_p` (coefficients compared
//! low-degree-first), so descriptions are canonical and reproducible.
//! Embeddings between tower members are generated by a norm-compatible
//! system of primitive elements: for each degree `d` we pick the least
//! primitive `gamma_d` whose norms down the tower hit the `gamma_e` already
//! chosen for every proper divisor `e | d`. Sending
//! `gamma_a -> gamma_b^{(p^b-1)/(p^a-1)}` then yields embeddings that
//! compose coherently along arbitrary chains, which a per-pair least-root
//! choice does not guarantee once degrees admit two intermediate fields.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Default cap on the absolute extension degree over the prime field.
pub const DEFAULT_MAX_DEGREE: u32 = 6;
/// Default cap on the field size `p^d`; oracles enumerate exhaustively.
pub const DEFAULT_MAX_SIZE: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_degree: u32,
    pub max_size: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_degree: DEFAULT_MAX_DEGREE,
            max_size: DEFAULT_MAX_SIZE,
        }
    }
}

struct FieldData {
    p: u64,
    d: u32,
    q: u64,
    /// Monic defining polynomial, low-to-high, length d+1.
    poly: Vec<u64>,
    /// Compatible primitive generator (coefficient vector).
    gamma: OnceLock<Vec<u64>>,
    /// Minimal polynomial of gamma over F_p, low-to-high, length d+1.
    gamma_minpoly: OnceLock<Vec<u64>>,
}

/// Canonical description of `F_{p^d}`. Cheap to clone; two handles with the
/// same `(p, d)` always denote the identical field.
#[derive(Clone)]
pub struct Field(Arc<FieldData>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.d == other.0.d
    }
}
impl Eq for Field {}

impl Hash for Field {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.p.hash(state);
        self.0.d.hash(state);
    }
}

impl PartialOrd for Field {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Field {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.p, self.0.d).cmp(&(other.0.p, other.0.d))
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.0.p, self.0.d)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.0.p, self.0.d)
    }
}

fn registry() -> &'static Mutex<HashMap<(u64, u32), Field>> {
    static REGISTRY: OnceLock<Mutex<HashMap<(u64, u32), Field>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn embed_cache() -> &'static Mutex<HashMap<(u64, u32, u32), Arc<Embedding>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32, u32), Arc<Embedding>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut k = 3u64;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 2;
    }
    true
}

impl Field {
    /// The canonical `F_{p^d}` under the default caps.
    pub fn new(p: u64, d: u32) -> Result<Field> {
        Field::with_limits(p, d, Limits::default())
    }

    pub fn with_limits(p: u64, d: u32, limits: Limits) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if d < 1 || d > limits.max_degree {
            return Err(Error::DegreeOutOfRange {
                degree: d,
                max: limits.max_degree,
            });
        }
        let mut size: u64 = 1;
        for _ in 0..d {
            size = size.checked_mul(p).ok_or(Error::SizeCapExceeded {
                size: u64::MAX,
                max: limits.max_size,
            })?;
            if size > limits.max_size {
                return Err(Error::SizeCapExceeded {
                    size,
                    max: limits.max_size,
                });
            }
        }
        Ok(Field::get(p, d))
    }

    /// Registry fetch without cap checks; callers are internal paths that
    /// already know `(p, d)` is admissible (e.g. subfields of a field that
    /// passed the public constructor).
    pub(crate) fn get(p: u64, d: u32) -> Field {
        let mut reg = registry().lock().unwrap();
        if let Some(f) = reg.get(&(p, d)) {
            return f.clone();
        }
        let poly = least_irreducible(p, d);
        let q = p.pow(d);
        let field = Field(Arc::new(FieldData {
            p,
            d,
            q,
            poly,
            gamma: OnceLock::new(),
            gamma_minpoly: OnceLock::new(),
        }));
        reg.insert((p, d), field.clone());
        field
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.d
    }

    pub fn order(&self) -> u64 {
        self.0.q
    }

    pub fn defining_poly(&self) -> &[u64] {
        &self.0.poly
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem {
            field: self.clone(),
            coeffs: vec![0; self.0.d as usize],
        }
    }

    pub fn one(&self) -> FieldElem {
        self.from_u64(1)
    }

    pub fn from_u64(&self, c: u64) -> FieldElem {
        let mut coeffs = vec![0; self.0.d as usize];
        coeffs[0] = c % self.0.p;
        FieldElem {
            field: self.clone(),
            coeffs,
        }
    }

    pub fn from_i64(&self, c: i64) -> FieldElem {
        let p = self.0.p as i64;
        self.from_u64(c.rem_euclid(p) as u64)
    }

    /// Element with coordinate vector given low-to-high; entries reduced mod p.
    pub fn elem(&self, coeffs: &[u64]) -> Result<FieldElem> {
        if coeffs.len() > self.0.d as usize {
            return Err(Error::Unsupported(format!(
                "coefficient list of length {} for degree-{} field",
                coeffs.len(),
                self.0.d
            )));
        }
        let mut cs = vec![0; self.0.d as usize];
        for (i, &c) in coeffs.iter().enumerate() {
            cs[i] = c % self.0.p;
        }
        Ok(FieldElem {
            field: self.clone(),
            coeffs: cs,
        })
    }

    /// The n-th element in the canonical enumeration (c0 varies fastest:
    /// n = c0 + c1*p + c2*p^2 + ...).
    pub fn from_index(&self, n: u64) -> FieldElem {
        let mut coeffs = vec![0; self.0.d as usize];
        let mut m = n;
        for c in coeffs.iter_mut() {
            *c = m % self.0.p;
            m /= self.0.p;
        }
        FieldElem {
            field: self.clone(),
            coeffs,
        }
    }

    /// Root of the defining polynomial, i.e. x mod f. For d = 1 this is 0.
    pub fn generator(&self) -> FieldElem {
        if self.0.d == 1 {
            return self.zero();
        }
        let mut coeffs = vec![0; self.0.d as usize];
        coeffs[1] = 1;
        FieldElem {
            field: self.clone(),
            coeffs,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.0.q).map(move |n| self.from_index(n))
    }

    pub fn is_subfield_of(&self, other: &Field) -> bool {
        self.0.p == other.0.p && other.0.d % self.0.d == 0
    }

    /// Compatible primitive generator of the multiplicative group.
    pub fn primitive_generator(&self) -> FieldElem {
        let coeffs = self
            .0
            .gamma
            .get_or_init(|| compute_gamma(self))
            .clone();
        FieldElem {
            field: self.clone(),
            coeffs,
        }
    }

    fn gamma_minpoly(&self) -> &[u64] {
        // Ensure gamma exists first.
        let _ = self.primitive_generator();
        self.0
            .gamma_minpoly
            .get_or_init(|| minpoly_over_prime(&self.primitive_generator()))
    }
}

/// Element of `F_{p^d}` in the power basis of the defining polynomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElem {
    field: Field,
    coeffs: Vec<u64>,
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PartialOrd for FieldElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.field, self.index()).cmp(&(&other.field, other.index()))
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}:[", self.field.p(), self.field.degree())?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}

impl FromStr for FieldElem {
    type Err = Error;

    /// Parses the textual element format `p^d:[c0,c1,...]`.
    fn from_str(s: &str) -> Result<FieldElem> {
        let (field_part, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(0, "expected p^d:[c0,c1,...]"))?;
        let (p_str, d_str) = field_part
            .split_once('^')
            .ok_or_else(|| Error::parse(0, "expected p^d before ':'"))?;
        let p: u64 = p_str
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, "bad characteristic"))?;
        let d: u32 = d_str
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, "bad degree"))?;
        let body = rest.trim();
        if !body.starts_with('[') || !body.ends_with(']') {
            return Err(Error::parse(field_part.len(), "expected [c0,c1,...]"));
        }
        let inner = &body[1..body.len() - 1];
        let mut coeffs = Vec::new();
        if !inner.trim().is_empty() {
            for part in inner.split(',') {
                let c: i64 = part
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(0, format!("bad coefficient {:?}", part)))?;
                coeffs.push(c.rem_euclid(p as i64) as u64);
            }
        }
        let field = Field::new(p, d)?;
        field.elem(&coeffs)
    }
}

impl FieldElem {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    /// Position in the canonical enumeration.
    pub fn index(&self) -> u64 {
        let p = self.field.p();
        let mut n = 0u64;
        for &c in self.coeffs.iter().rev() {
            n = n * p + c;
        }
        n
    }

    /// True if the element lies in the prime field.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &FieldElem) -> FieldElem {
        assert_eq!(self.field, other.field, "field mismatch in add");
        let p = self.field.p();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        FieldElem {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn neg(&self) -> FieldElem {
        let p = self.field.p();
        let coeffs = self.coeffs.iter().map(|&a| (p - a) % p).collect();
        FieldElem {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn sub(&self, other: &FieldElem) -> FieldElem {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FieldElem) -> FieldElem {
        assert_eq!(self.field, other.field, "field mismatch in mul");
        let p = self.field.p();
        let d = self.field.degree() as usize;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                prod[i + j] = ((prod[i + j] as u128 + a as u128 * b as u128) % p as u128) as u64;
            }
        }
        // Reduce mod the monic defining polynomial.
        let poly = self.field.defining_poly();
        for i in (d..prod.len()).rev() {
            let carry = prod[i];
            if carry == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..d {
                let sub = (carry as u128 * poly[j] as u128) % p as u128;
                prod[i - d + j] =
                    ((prod[i - d + j] as u128 + p as u128 - sub) % p as u128) as u64;
            }
        }
        prod.truncate(d);
        FieldElem {
            field: self.field.clone(),
            coeffs: prod,
        }
    }

    pub fn scale(&self, c: u64) -> FieldElem {
        let p = self.field.p();
        let c = c % p;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| ((a as u128 * c as u128) % p as u128) as u64)
            .collect();
        FieldElem {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn pow(&self, mut e: u64) -> FieldElem {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self) -> Result<FieldElem> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(self.field.order() - 2))
    }

    /// Image under the canonical embedding into `target`.
    pub fn embed(&self, target: &Field) -> Result<FieldElem> {
        if self.field == *target {
            return Ok(self.clone());
        }
        let emb = embedding(&self.field, target)?;
        Ok(emb.apply(self))
    }

    /// Inverse of `embed` on the image; errors if the element is not in the
    /// embedded copy of `sub`.
    pub fn project(&self, sub: &Field) -> Result<FieldElem> {
        if self.field == *sub {
            return Ok(self.clone());
        }
        let emb = embedding(sub, &self.field)?;
        emb.unapply(self)
    }

    /// `a^{|over|}`, the Frobenius of `a` relative to the subfield `over`.
    pub fn frobenius(&self, over: &Field) -> Result<FieldElem> {
        if !over.is_subfield_of(&self.field) {
            return Err(Error::NotSubfield {
                sub: over.order(),
                sup: self.field.order(),
            });
        }
        Ok(self.pow(over.order()))
    }

    /// Sum of Galois conjugates over `down_to`, returned in `down_to`.
    pub fn trace(&self, down_to: &Field) -> Result<FieldElem> {
        if !down_to.is_subfield_of(&self.field) {
            return Err(Error::NotSubfield {
                sub: down_to.order(),
                sup: self.field.order(),
            });
        }
        let k = self.field.degree() / down_to.degree();
        let q = down_to.order();
        let mut acc = self.field.zero();
        let mut conj = self.clone();
        for _ in 0..k {
            acc = acc.add(&conj);
            conj = conj.pow(q);
        }
        acc.project(down_to)
    }

    /// Product of Galois conjugates over `down_to`, returned in `down_to`.
    pub fn norm(&self, down_to: &Field) -> Result<FieldElem> {
        if !down_to.is_subfield_of(&self.field) {
            return Err(Error::NotSubfield {
                sub: down_to.order(),
                sup: self.field.order(),
            });
        }
        let k = self.field.degree() / down_to.degree();
        let q = down_to.order();
        let mut acc = self.field.one();
        let mut conj = self.clone();
        for _ in 0..k {
            acc = acc.mul(&conj);
            conj = conj.pow(q);
        }
        acc.project(down_to)
    }

    /// Multiplicative order; errors on zero.
    pub fn mult_order(&self) -> Result<u64> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let n = self.field.order() - 1;
        let mut ord = n;
        for r in distinct_prime_factors(n) {
            while ord % r == 0 && self.pow(ord / r).is_one() {
                ord /= r;
            }
        }
        Ok(ord)
    }
}

// ---------------------------------------------------------------------------
// Prime-field polynomial helpers (dense, low-to-high coefficient vectors).
// ---------------------------------------------------------------------------

fn fp_trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
}

fn fp_divrem(num: &[u64], den: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut rem: Vec<u64> = num.to_vec();
    fp_trim(&mut rem);
    let mut den = den.to_vec();
    fp_trim(&mut den);
    let dd = den.len() - 1;
    assert!(den[dd] != 0, "division by zero polynomial");
    let lead_inv = mod_inv(den[dd], p);
    if rem.len() - 1 < dd || (rem.len() == 1 && rem[0] == 0) {
        return (vec![0], rem);
    }
    let mut quo = vec![0u64; rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i];
        if c == 0 {
            continue;
        }
        let f = (c as u128 * lead_inv as u128 % p as u128) as u64;
        quo[i - dd] = f;
        for j in 0..=dd {
            let sub = (f as u128 * den[j] as u128) % p as u128;
            rem[i - dd + j] = ((rem[i - dd + j] as u128 + p as u128 - sub) % p as u128) as u64;
        }
    }
    fp_trim(&mut rem);
    fp_trim(&mut quo);
    (quo, rem)
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p prime, a != 0 mod p
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn fp_is_zero(v: &[u64]) -> bool {
    v.iter().all(|&c| c == 0)
}

/// Irreducibility over F_p by trial division by all monic polynomials of
/// degree at most deg/2.
fn fp_is_irreducible(poly: &[u64], p: u64) -> bool {
    let deg = poly.len() - 1;
    if deg == 1 {
        return true;
    }
    for k in 1..=(deg / 2) {
        // monic divisor candidates of degree k
        let count = p.pow(k as u32);
        for n in 0..count {
            let mut cand = vec![0u64; k + 1];
            let mut m = n;
            for c in cand.iter_mut().take(k) {
                *c = m % p;
                m /= p;
            }
            cand[k] = 1;
            let (_, rem) = fp_divrem(poly, &cand, p);
            if fp_is_zero(&rem) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically least monic irreducible of degree d over F_p, comparing
/// coefficient sequences low-degree-first.
fn least_irreducible(p: u64, d: u32) -> Vec<u64> {
    let d = d as usize;
    if d == 1 {
        // x is irreducible and least.
        return vec![0, 1];
    }
    // Low-degree-first lexicographic order: c0 is the most significant slot.
    let total = p.pow(d as u32);
    for n in 0..total {
        let mut cand = vec![0u64; d + 1];
        let mut m = n;
        // decode with c0 most significant
        for i in (0..d).rev() {
            cand[i] = m % p;
            m /= p;
        }
        cand[d] = 1;
        if fp_is_irreducible(&cand, p) {
            return cand;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p")
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut fs = Vec::new();
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            fs.push(k);
            while n % k == 0 {
                n /= k;
            }
        }
        k += 1;
    }
    if n > 1 {
        fs.push(n);
    }
    fs
}

fn is_primitive(a: &FieldElem, group_order: u64, prime_factors: &[u64]) -> bool {
    if a.is_zero() {
        return false;
    }
    prime_factors
        .iter()
        .all(|&r| !a.pow(group_order / r).is_one())
}

/// Least primitive element compatible with the generators already fixed for
/// every proper divisor degree: norm down to F_{p^e} must be a root of the
/// minimal polynomial of gamma_e.
fn compute_gamma(field: &Field) -> Vec<u64> {
    let p = field.p();
    let d = field.degree();
    let q = field.order();
    let group_order = q - 1;
    let prime_factors = distinct_prime_factors(group_order);
    let mut divisor_checks: Vec<(u64, Vec<u64>)> = Vec::new();
    for e in 1..d {
        if d % e == 0 {
            let sub = Field::get(p, e);
            let g = sub.gamma_minpoly().to_vec();
            let sub_group = sub.order() - 1;
            divisor_checks.push((group_order / sub_group, g));
        }
    }
    for n in 1..q {
        let cand = field.from_index(n);
        if !is_primitive(&cand, group_order, &prime_factors) {
            continue;
        }
        let ok = divisor_checks.iter().all(|(exp, minpoly)| {
            let delta = cand.pow(*exp);
            eval_fp_poly(minpoly, &delta).is_zero()
        });
        if ok {
            return cand.coeffs;
        }
    }
    unreachable!("a compatible primitive element always exists")
}

/// Evaluate a polynomial with F_p coefficients at an element of an extension.
fn eval_fp_poly(poly: &[u64], at: &FieldElem) -> FieldElem {
    let mut acc = at.field().zero();
    for &c in poly.iter().rev() {
        acc = acc.mul(at);
        acc = acc.add(&at.field().from_u64(c));
    }
    acc
}

/// Minimal polynomial over F_p of an element generating its field.
fn minpoly_over_prime(a: &FieldElem) -> Vec<u64> {
    let field = a.field();
    let p = field.p();
    let d = field.degree() as usize;
    // prod over conjugates (X - a^{p^i})
    let mut coeffs: Vec<FieldElem> = vec![field.one()];
    let mut conj = a.clone();
    for _ in 0..d {
        let mut next: Vec<FieldElem> = vec![field.zero(); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] = next[i + 1].add(c);
            next[i] = next[i].sub(&c.mul(&conj));
        }
        coeffs = next;
        conj = conj.pow(p);
    }
    let mut out = Vec::with_capacity(coeffs.len());
    for c in &coeffs {
        assert!(
            c.is_constant(),
            "minimal polynomial coefficients must land in F_p"
        );
        out.push(c.coeffs()[0]);
    }
    out
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct Embedding {
    src: Field,
    dst: Field,
    /// Image of the power-basis generator of src, and its powers 0..src.d.
    root_powers: Vec<FieldElem>,
}

impl Embedding {
    fn apply(&self, a: &FieldElem) -> FieldElem {
        let mut acc = self.dst.zero();
        for (i, &c) in a.coeffs().iter().enumerate() {
            if c != 0 {
                acc = acc.add(&self.root_powers[i].scale(c));
            }
        }
        acc
    }

    fn unapply(&self, a: &FieldElem) -> Result<FieldElem> {
        // Solve sum z_i * root_powers[i] = a over F_p.
        let p = self.dst.p();
        let rows = self.dst.degree() as usize;
        let cols = self.src.degree() as usize;
        let mut mat = vec![vec![0u64; cols + 1]; rows];
        for (j, rp) in self.root_powers.iter().enumerate() {
            for (i, &c) in rp.coeffs().iter().enumerate() {
                mat[i][j] = c;
            }
        }
        for (i, &c) in a.coeffs().iter().enumerate() {
            mat[i][cols] = c;
        }
        match solve_mod_p(mat, cols, p) {
            Some(z) => self.src.elem(&z),
            None => Err(Error::NotInSubfield),
        }
    }
}

/// Gaussian elimination over F_p on an augmented matrix; returns a solution
/// of the linear system if one exists.
fn solve_mod_p(mut mat: Vec<Vec<u64>>, cols: usize, p: u64) -> Option<Vec<u64>> {
    let rows = mat.len();
    let mut pivot_row_of_col = vec![usize::MAX; cols];
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| mat[i][c] != 0) else {
            continue;
        };
        mat.swap(r, pr);
        let inv = mod_inv(mat[r][c], p);
        for j in c..=cols {
            mat[r][j] = (mat[r][j] as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..rows {
            if i != r && mat[i][c] != 0 {
                let f = mat[i][c];
                for j in c..=cols {
                    let sub = (f as u128 * mat[r][j] as u128) % p as u128;
                    mat[i][j] = ((mat[i][j] as u128 + p as u128 - sub) % p as u128) as u64;
                }
            }
        }
        pivot_row_of_col[c] = r;
        r += 1;
        if r == rows {
            break;
        }
    }
    // Consistency: no row of the form (0 ... 0 | nonzero).
    for row in &mat {
        if row[..cols].iter().all(|&x| x == 0) && row[cols] != 0 {
            return None;
        }
    }
    let mut sol = vec![0u64; cols];
    for c in 0..cols {
        if pivot_row_of_col[c] != usize::MAX {
            sol[c] = mat[pivot_row_of_col[c]][cols];
        }
    }
    Some(sol)
}

/// Some element of `ext` whose trace down to `a.field()` equals `a`; exists
/// for every `a` since the trace of a separable extension is surjective.
pub fn trace_preimage(a: &FieldElem, ext: &Field) -> Result<FieldElem> {
    let sub = a.field();
    if !sub.is_subfield_of(ext) {
        return Err(Error::NotSubfield {
            sub: sub.order(),
            sup: ext.order(),
        });
    }
    if sub == ext {
        return Ok(a.clone());
    }
    let p = ext.p();
    let rows = sub.degree() as usize;
    let cols = ext.degree() as usize;
    let mut mat = vec![vec![0u64; cols + 1]; rows];
    for j in 0..cols {
        let mut basis = vec![0u64; cols];
        basis[j] = 1;
        let t = ext.elem(&basis)?.trace(sub)?;
        for (i, &c) in t.coeffs().iter().enumerate() {
            mat[i][j] = c;
        }
    }
    for (i, &c) in a.coeffs().iter().enumerate() {
        mat[i][cols] = c;
    }
    let x = solve_mod_p(mat, cols, p).expect("trace is surjective");
    ext.elem(&x)
}

fn embedding(src: &Field, dst: &Field) -> Result<Arc<Embedding>> {
    if src.p() != dst.p() {
        return Err(Error::CharMismatch(src.p(), dst.p()));
    }
    if !src.is_subfield_of(dst) {
        return Err(Error::NotSubfield {
            sub: src.order(),
            sup: dst.order(),
        });
    }
    let key = (src.p(), src.degree(), dst.degree());
    if let Some(e) = embed_cache().lock().unwrap().get(&key) {
        return Ok(e.clone());
    }
    let emb = Arc::new(build_embedding(src, dst));
    embed_cache().lock().unwrap().insert(key, emb.clone());
    Ok(emb)
}

fn build_embedding(src: &Field, dst: &Field) -> Embedding {
    let a = src.degree() as usize;
    let root = if a == 1 {
        // Prime field: the power basis is {1}; nothing to map besides
        // constants. Store a dummy root (unused beyond index 0).
        dst.zero()
    } else {
        // delta = gamma_dst^{(q_dst - 1)/(q_src - 1)} is the image of
        // gamma_src under the canonical embedding.
        let delta = dst
            .primitive_generator()
            .pow((dst.order() - 1) / (src.order() - 1));
        // Express the power-basis generator of src in the gamma_src power
        // basis, then push that expression through delta.
        let gamma_src = src.primitive_generator();
        let p = src.p();
        let mut mat = vec![vec![0u64; a + 1]; a];
        let mut pow = src.one();
        for j in 0..a {
            for (i, &c) in pow.coeffs().iter().enumerate() {
                mat[i][j] = c;
            }
            pow = pow.mul(&gamma_src);
        }
        let gen = src.generator();
        for (i, &c) in gen.coeffs().iter().enumerate() {
            mat[i][a] = c;
        }
        let h = solve_mod_p(mat, a, p).expect("gamma powers form a basis");
        let mut r = dst.zero();
        let mut dpow = dst.one();
        for &hj in &h {
            if hj != 0 {
                r = r.add(&dpow.scale(hj));
            }
            dpow = dpow.mul(&delta);
        }
        let check = eval_fp_poly(src.defining_poly(), &r);
        assert!(
            check.is_zero(),
            "embedding image must be a root of the source defining polynomial"
        );
        r
    };
    let mut root_powers = Vec::with_capacity(a);
    let mut acc = dst.one();
    for i in 0..a {
        root_powers.push(acc.clone());
        if i + 1 < a {
            acc = acc.mul(&root);
        }
    }
    Embedding {
        src: src.clone(),
        dst: dst.clone(),
        root_powers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64, d: u32) -> Field {
        Field::new(p, d).unwrap()
    }

    #[test]
    fn canonical_defining_polys() {
        assert_eq!(f(2, 1).defining_poly(), &[0, 1]);
        assert_eq!(f(2, 2).defining_poly(), &[1, 1, 1]);
        // Exhaustive oracle for F_9: scan the 9 monic quadratics in
        // low-degree-first order and take the first irreducible.
        let p = 3u64;
        let mut expected = None;
        'outer: for c0 in 0..p {
            for c1 in 0..p {
                let cand = vec![c0, c1, 1];
                if fp_is_irreducible(&cand, p) {
                    expected = Some(cand);
                    break 'outer;
                }
            }
        }
        assert_eq!(f(3, 2).defining_poly(), expected.unwrap().as_slice());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Field::new(6, 1), Err(Error::NotPrime(6))));
        assert!(matches!(
            Field::new(2, 7),
            Err(Error::DegreeOutOfRange { .. })
        ));
        assert!(matches!(
            Field::with_limits(
                2,
                25,
                Limits {
                    max_degree: 32,
                    max_size: 1 << 20
                }
            ),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn canonicalization_is_stable() {
        let a = f(5, 3);
        let b = f(5, 3);
        assert_eq!(a, b);
        assert_eq!(a.defining_poly(), b.defining_poly());
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for field in [f(2, 2), f(3, 2), f(2, 3)] {
            let els: Vec<_> = field.elements().collect();
            for a in &els {
                for b in &els {
                    assert_eq!(a.add(b), b.add(a));
                    assert_eq!(a.mul(b), b.mul(a));
                    for c in &els {
                        assert_eq!(a.add(b).add(c), a.add(&b.add(c)));
                        assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
                        assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                    }
                }
                if !a.is_zero() {
                    assert!(a.mul(&a.inv().unwrap()).is_one());
                }
            }
        }
    }

    #[test]
    fn embed_examples() {
        let f2 = f(2, 1);
        let f4 = f(2, 2);
        let f16 = f(2, 4);
        assert!(f2.one().embed(&f4).unwrap().is_one());
        let g = f4.generator();
        assert_eq!(g.embed(&f4).unwrap(), g);
        // The image of a generator of F_4 in F_16 is a root of x^2+x+1,
        // found here by exhaustive search.
        let img = g.embed(&f16).unwrap();
        let roots: Vec<_> = f16
            .elements()
            .filter(|e| eval_fp_poly(&[1, 1, 1], e).is_zero())
            .collect();
        assert!(roots.contains(&img));
    }

    #[test]
    fn embeddings_are_homomorphisms() {
        for (pd, sub, sup) in [((3, 1), (3, 1), (3, 2)), ((2, 2), (2, 2), (2, 6))] {
            let _ = pd;
            let s = f(sub.0, sub.1);
            let t = f(sup.0, sup.1);
            let els: Vec<_> = s.elements().collect();
            for a in &els {
                for b in &els {
                    assert_eq!(
                        a.add(b).embed(&t).unwrap(),
                        a.embed(&t).unwrap().add(&b.embed(&t).unwrap())
                    );
                    assert_eq!(
                        a.mul(b).embed(&t).unwrap(),
                        a.embed(&t).unwrap().mul(&b.embed(&t).unwrap())
                    );
                }
            }
            assert!(s.one().embed(&t).unwrap().is_one());
        }
    }

    #[test]
    fn embeddings_compose_within_default_caps() {
        for p in [2u64, 3] {
            for (a, b, c) in [(1, 2, 4), (1, 2, 6), (1, 3, 6), (2, 2, 6)] {
                if p.pow(c) > DEFAULT_MAX_SIZE {
                    continue;
                }
                let fa = f(p, a);
                let fb = f(p, b);
                let fc = f(p, c);
                for x in fa.elements() {
                    let via = x.embed(&fb).unwrap().embed(&fc).unwrap();
                    let direct = x.embed(&fc).unwrap();
                    assert_eq!(via, direct);
                }
            }
        }
    }

    #[test]
    fn embeddings_compose_on_deep_towers() {
        // Degrees with two distinct chains between the same endpoints; this
        // is where per-pair root choices would lose coherence.
        let lim = Limits {
            max_degree: 12,
            max_size: 1 << 20,
        };
        let f2 = Field::with_limits(2, 2, lim).unwrap();
        let f4 = Field::with_limits(2, 4, lim).unwrap();
        let f6 = Field::with_limits(2, 6, lim).unwrap();
        let f8 = Field::with_limits(2, 8, lim).unwrap();
        let f12 = Field::with_limits(2, 12, lim).unwrap();
        for x in f2.elements() {
            let via4 = x.embed(&f4).unwrap().embed(&f12).unwrap();
            let via6 = x.embed(&f6).unwrap().embed(&f12).unwrap();
            let direct = x.embed(&f12).unwrap();
            assert_eq!(via4, direct);
            assert_eq!(via6, direct);
            assert_eq!(x.embed(&f4).unwrap().embed(&f8).unwrap(), x.embed(&f8).unwrap());
        }
        for x in f4.elements() {
            assert_eq!(x.embed(&f4).unwrap(), x);
            // the embedded copy of F_16 is fixed pointwise by Frob^4
            let y = x.embed(&f12).unwrap();
            assert_eq!(y.frobenius(&f4).unwrap(), y);
        }
    }

    #[test]
    fn frobenius_examples() {
        let f2 = f(2, 1);
        let f4 = f(2, 2);
        let g = f4.generator();
        // g^2 = g + 1 in F_4
        assert_eq!(g.frobenius(&f2).unwrap(), g.add(&f4.one()));
        for c in f2.elements() {
            let e = c.embed(&f4).unwrap();
            assert_eq!(e.frobenius(&f2).unwrap(), e);
        }
        let f9 = f(3, 2);
        for a in f9.elements() {
            assert_eq!(a.frobenius(&f(3, 1)).unwrap(), a.pow(3));
            // iterating [E:F] times returns a
            assert_eq!(
                a.frobenius(&f(3, 1)).unwrap().frobenius(&f(3, 1)).unwrap(),
                a
            );
        }
    }

    #[test]
    fn trace_and_norm_examples() {
        let f2 = f(2, 1);
        let f4 = f(2, 2);
        let g = f4.generator();
        assert!(g.trace(&f2).unwrap().is_one()); // g + g^2 = 1
        assert!(g.norm(&f2).unwrap().is_one()); // g * g^2 = g^3 = 1
        // embedded constants: trace is [E:F] * c, norm is c^[E:F]
        let f3 = f(3, 1);
        let f9 = f(3, 2);
        for c in f3.elements() {
            let e = c.embed(&f9).unwrap();
            assert_eq!(e.trace(&f3).unwrap(), c.scale(2));
            assert_eq!(e.norm(&f3).unwrap(), c.mul(&c));
        }
    }

    #[test]
    fn trace_norm_additive_multiplicative() {
        let base = f(3, 1);
        let ext = f(3, 2);
        let els: Vec<_> = ext.elements().collect();
        for a in &els {
            for b in &els {
                assert_eq!(
                    a.add(b).trace(&base).unwrap(),
                    a.trace(&base).unwrap().add(&b.trace(&base).unwrap())
                );
                assert_eq!(
                    a.mul(b).norm(&base).unwrap(),
                    a.norm(&base).unwrap().mul(&b.norm(&base).unwrap())
                );
            }
        }
    }

    #[test]
    fn trace_norm_transitive() {
        for p in [2u64, 3] {
            let bot = f(p, 1);
            let mid = f(p, 2);
            let top = f(p, 4);
            if p.pow(4) > DEFAULT_MAX_SIZE {
                continue;
            }
            for a in top.elements() {
                let two_step = a.trace(&mid).unwrap().trace(&bot).unwrap();
                assert_eq!(two_step, a.trace(&bot).unwrap());
                let two_step_n = a.norm(&mid).unwrap().norm(&bot).unwrap();
                assert_eq!(two_step_n, a.norm(&bot).unwrap());
            }
        }
    }

    #[test]
    fn trace_is_surjective_on_small_towers() {
        // All tower pairs with relative degree <= 4 and manageable sizes.
        let pairs = [
            (2u64, 1u32, 2u32),
            (2, 1, 3),
            (2, 1, 4),
            (2, 2, 4),
            (2, 2, 6),
            (2, 3, 6),
            (3, 1, 2),
            (3, 1, 3),
            (3, 1, 4),
            (3, 2, 4),
            (5, 1, 2),
            (7, 1, 2),
        ];
        for (p, a, b) in pairs {
            let sub = f(p, a);
            let sup = f(p, b);
            let mut hit = std::collections::HashSet::new();
            for x in sup.elements() {
                hit.insert(x.trace(&sub).unwrap());
            }
            assert_eq!(hit.len() as u64, sub.order(), "trace F_{p}^{b} -> F_{p}^{a}");
        }
    }

    #[test]
    fn field_level_projection_formula() {
        // trace(embed(c) * a) = c * trace(a)
        let base = f(3, 1);
        let ext = f(3, 2);
        for c in base.elements() {
            let ce = c.embed(&ext).unwrap();
            for a in ext.elements() {
                assert_eq!(
                    ce.mul(&a).trace(&base).unwrap(),
                    c.mul(&a.trace(&base).unwrap())
                );
            }
        }
    }

    #[test]
    fn norm_of_zero_is_zero() {
        let f9 = f(3, 2);
        assert!(f9.zero().norm(&f(3, 1)).unwrap().is_zero());
    }

    #[test]
    fn textual_format_roundtrip() {
        let f9 = f(3, 2);
        for a in f9.elements() {
            let s = a.to_string();
            let back: FieldElem = s.parse().unwrap();
            assert_eq!(a, back);
        }
        let e: FieldElem = "3^2:[1,2]".parse().unwrap();
        assert_eq!(e.coeffs(), &[1, 2]);
        assert!("3^2:[1".parse::<FieldElem>().is_err());
        assert!("nope".parse::<FieldElem>().is_err());
    }

    #[test]
    fn mult_order_agrees_with_brute_force() {
        let f8 = f(2, 3);
        for a in f8.elements().filter(|a| !a.is_zero()) {
            let fast = a.mult_order().unwrap();
            let mut k = 1u64;
            let mut acc = a.clone();
            while !acc.is_one() {
                acc = acc.mul(&a);
                k += 1;
            }
            assert_eq!(fast, k);
        }
    }

    #[test]
    fn primitive_generator_is_primitive() {
        for field in [f(2, 2), f(3, 2), f(5, 1), f(2, 4)] {
            let g = field.primitive_generator();
            assert_eq!(g.mult_order().unwrap(), field.order() - 1);
        }
    }
}
