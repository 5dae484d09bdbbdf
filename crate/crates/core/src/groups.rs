//! Value groups M(y) of the implemented group functors, with pull-back,
//! push-forward, Galois twists, and invariant-factor structure.
//!
//! The functor kinds are the additive group, the multiplicative group,
//! generalized Jacobians of the projective line with a polynomial modulus
//! (units of F[t] mod the modulus, taken modulo scalars), elliptic curves in
//! short Weierstrass form, and the constant functor Z which serves as the
//! unit object of the product.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::poly::Poly;
use crate::zlinalg::{smith_normal_form, IntMatrix};

/// Cap on the order of an exhaustively enumerated value group.
pub const DEFAULT_GROUP_CAP: u64 = 100_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Functor {
    /// Additive group of the field.
    Ga,
    /// Multiplicative group of the field.
    Gm,
    /// Generalized Jacobian of P^1 with the given monic polynomial modulus
    /// over the base field: (E[t]/m)^x / E^x under base change to E.
    GenJac(Poly),
    /// Elliptic curve y^2 = x^3 + a x + b over the base field.
    Elliptic(FieldElem, FieldElem),
    /// Constant functor Z: pull-back is the identity, push-forward is
    /// multiplication by the degree. Unit of the product.
    ConstZ,
}

impl fmt::Debug for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl Functor {
    pub fn label(&self) -> String {
        match self {
            Functor::Ga => "GA".into(),
            Functor::Gm => "GM".into(),
            Functor::GenJac(m) => format!("GENJAC:{}", m),
            Functor::Elliptic(a, b) => {
                if a.is_constant() && b.is_constant() {
                    format!("ELL:{},{}", a.coeffs()[0], b.coeffs()[0])
                } else {
                    format!("ELL:{},{}", a, b)
                }
            }
            Functor::ConstZ => "Z".into(),
        }
    }

    /// Field the functor parameters live over, when it has any.
    pub fn base_field(&self) -> Option<&Field> {
        match self {
            Functor::Ga | Functor::Gm | Functor::ConstZ => None,
            Functor::GenJac(m) => Some(m.field()),
            Functor::Elliptic(a, _) => Some(a.field()),
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Functor::ConstZ)
    }

    /// Checks parameter invariants relative to an intended base field.
    pub fn validate(&self, base: &Field) -> Result<()> {
        match self {
            Functor::Ga | Functor::Gm | Functor::ConstZ => Ok(()),
            Functor::GenJac(m) => {
                if m.field() != base {
                    return Err(Error::IncompatiblePoints(format!(
                        "modulus over {} but base is {}",
                        m.field(),
                        base
                    )));
                }
                if m.degree().unwrap_or(0) < 1 || !m.is_monic() {
                    return Err(Error::Unsupported(
                        "modulus must be monic of degree >= 1".into(),
                    ));
                }
                Ok(())
            }
            Functor::Elliptic(a, b) => {
                if a.field() != base || b.field() != base {
                    return Err(Error::IncompatiblePoints(
                        "curve coefficients must live over the base field".into(),
                    ));
                }
                if base.p() < 5 {
                    return Err(Error::BadCharacteristic(base.p()));
                }
                // nonsingular: 4a^3 + 27b^2 != 0
                let disc = a
                    .mul(a)
                    .mul(a)
                    .scale(4)
                    .add(&b.mul(b).scale(27));
                if disc.is_zero() {
                    return Err(Error::SingularCurve);
                }
                Ok(())
            }
        }
    }

    /// Parses labels of the shape `GA`, `GM`, `GENJAC:t^2`, `ELL:1,1`, `Z`.
    pub fn parse(spec: &str, base: &Field) -> Result<Functor> {
        let spec = spec.trim();
        let f = match spec {
            "GA" => Functor::Ga,
            "GM" => Functor::Gm,
            "Z" => Functor::ConstZ,
            _ => {
                if let Some(rest) = spec.strip_prefix("GENJAC:") {
                    Functor::GenJac(crate::poly::parse_poly(base, rest)?.monic())
                } else if let Some(rest) = spec.strip_prefix("ELL:") {
                    let (a, b) = rest
                        .split_once(',')
                        .ok_or_else(|| Error::parse(0, "expected ELL:a,b"))?;
                    let a: i64 = a
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(0, "bad curve coefficient"))?;
                    let b: i64 = b
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(0, "bad curve coefficient"))?;
                    Functor::Elliptic(base.from_i64(a), base.from_i64(b))
                } else {
                    return Err(Error::parse(0, format!("unknown functor {:?}", spec)));
                }
            }
        };
        f.validate(base)?;
        Ok(f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    Ga(FieldElem),
    Gm(FieldElem),
    /// Canonical unit-class representative: residue mod the modulus, lowest
    /// nonzero coefficient scaled to 1.
    GenJac(Poly),
    /// Affine coordinates, or None for the point at infinity.
    Elliptic(Option<(FieldElem, FieldElem)>),
    ConstZ(i64),
}

/// An element of M(y) for a functor M and a finite point y.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupValue {
    functor: Functor,
    point: Field,
    payload: Payload,
}

impl fmt::Debug for GroupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Ga(a) => write!(f, "Ga({})", a),
            Payload::Gm(a) => write!(f, "Gm({})", a),
            Payload::GenJac(r) => write!(f, "J[{}]", r),
            Payload::Elliptic(None) => write!(f, "E(inf)"),
            Payload::Elliptic(Some((x, y))) => write!(f, "E({},{})", x, y),
            Payload::ConstZ(n) => write!(f, "Z({})", n),
        }
    }
}

fn genjac_canonical(rep: Poly) -> Poly {
    let Some(c) = rep.coeffs().iter().find(|c| !c.is_zero()) else {
        return rep;
    };
    let inv = c.inv().expect("nonzero coefficient");
    rep.scale(&inv)
}

fn curve_at(a: &FieldElem, b: &FieldElem, point: &Field) -> Result<(FieldElem, FieldElem)> {
    Ok((a.embed(point)?, b.embed(point)?))
}

fn on_curve(a: &FieldElem, b: &FieldElem, x: &FieldElem, y: &FieldElem) -> bool {
    let lhs = y.mul(y);
    let rhs = x.mul(x).mul(x).add(&a.mul(x)).add(b);
    lhs == rhs
}

fn ell_add(
    a: &FieldElem,
    p: &Option<(FieldElem, FieldElem)>,
    q: &Option<(FieldElem, FieldElem)>,
) -> Option<(FieldElem, FieldElem)> {
    let (x1, y1) = match p {
        None => return q.clone(),
        Some(p) => p,
    };
    let (x2, y2) = match q {
        None => return p.clone(),
        Some(q) => q,
    };
    if x1 == x2 && *y1 == y2.neg() {
        return None;
    }
    let lambda = if x1 == x2 {
        // doubling; y1 = y2 != 0 here
        let num = x1.mul(x1).scale(3).add(a);
        let den = y1.scale(2);
        num.mul(&den.inv().expect("nonzero ordinate"))
    } else {
        let num = y2.sub(y1);
        let den = x2.sub(x1);
        num.mul(&den.inv().expect("distinct abscissae"))
    };
    let x3 = lambda.mul(&lambda).sub(x1).sub(x2);
    let y3 = lambda.mul(&x1.sub(&x3)).sub(y1);
    Some((x3, y3))
}

impl GroupValue {
    pub fn functor(&self) -> &Functor {
        &self.functor
    }

    pub fn point(&self) -> &Field {
        &self.point
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    /// Underlying field element for additive-group values.
    pub fn ga_elem(&self) -> Option<&FieldElem> {
        match &self.payload {
            Payload::Ga(a) => Some(a),
            _ => None,
        }
    }

    /// Underlying field element for multiplicative-group values.
    pub fn gm_elem(&self) -> Option<&FieldElem> {
        match &self.payload {
            Payload::Gm(a) => Some(a),
            _ => None,
        }
    }

    pub fn ga(point: &Field, a: FieldElem) -> Result<GroupValue> {
        if a.field() != point {
            return Err(Error::IncompatiblePoints("value not over the point".into()));
        }
        Ok(GroupValue {
            functor: Functor::Ga,
            point: point.clone(),
            payload: Payload::Ga(a),
        })
    }

    pub fn gm(point: &Field, a: FieldElem) -> Result<GroupValue> {
        if a.field() != point {
            return Err(Error::IncompatiblePoints("value not over the point".into()));
        }
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(GroupValue {
            functor: Functor::Gm,
            point: point.clone(),
            payload: Payload::Gm(a),
        })
    }

    pub fn genjac(modulus: &Poly, point: &Field, rep: Poly) -> Result<GroupValue> {
        let functor = Functor::GenJac(modulus.clone());
        functor.validate(modulus.field())?;
        if !modulus.field().is_subfield_of(point) {
            return Err(Error::IncompatiblePoints(
                "point must extend the modulus base field".into(),
            ));
        }
        let m_e = modulus.base_change(point)?;
        let rep = rep.rem(&m_e)?;
        if !rep.gcd(&m_e).is_one() {
            return Err(Error::Unsupported(
                "representative must be invertible mod the modulus".into(),
            ));
        }
        Ok(GroupValue {
            functor,
            point: point.clone(),
            payload: Payload::GenJac(genjac_canonical(rep)),
        })
    }

    pub fn elliptic(
        a: &FieldElem,
        b: &FieldElem,
        point: &Field,
        coords: Option<(FieldElem, FieldElem)>,
    ) -> Result<GroupValue> {
        let functor = Functor::Elliptic(a.clone(), b.clone());
        functor.validate(a.field())?;
        if let Some((x, y)) = &coords {
            let (ae, be) = curve_at(a, b, point)?;
            if x.field() != point || y.field() != point || !on_curve(&ae, &be, x, y) {
                return Err(Error::Unsupported(
                    "coordinates do not satisfy the curve equation".into(),
                ));
            }
        }
        Ok(GroupValue {
            functor,
            point: point.clone(),
            payload: Payload::Elliptic(coords),
        })
    }

    pub fn const_z(point: &Field, n: i64) -> GroupValue {
        GroupValue {
            functor: Functor::ConstZ,
            point: point.clone(),
            payload: Payload::ConstZ(n),
        }
    }

    pub fn identity(functor: &Functor, point: &Field) -> Result<GroupValue> {
        let payload = match functor {
            Functor::Ga => Payload::Ga(point.zero()),
            Functor::Gm => Payload::Gm(point.one()),
            Functor::GenJac(_) => Payload::GenJac(Poly::one(point)),
            Functor::Elliptic(_, _) => Payload::Elliptic(None),
            Functor::ConstZ => Payload::ConstZ(0),
        };
        Ok(GroupValue {
            functor: functor.clone(),
            point: point.clone(),
            payload,
        })
    }

    pub fn is_identity(&self) -> bool {
        match &self.payload {
            Payload::Ga(a) => a.is_zero(),
            Payload::Gm(a) => a.is_one(),
            Payload::GenJac(r) => r.is_one(),
            Payload::Elliptic(c) => c.is_none(),
            Payload::ConstZ(n) => *n == 0,
        }
    }

    /// Group law. Panics when the operands belong to different groups.
    pub fn op(&self, other: &GroupValue) -> GroupValue {
        assert_eq!(self.functor, other.functor, "functor mismatch");
        assert_eq!(self.point, other.point, "point mismatch");
        let payload = match (&self.payload, &other.payload) {
            (Payload::Ga(a), Payload::Ga(b)) => Payload::Ga(a.add(b)),
            (Payload::Gm(a), Payload::Gm(b)) => Payload::Gm(a.mul(b)),
            (Payload::GenJac(a), Payload::GenJac(b)) => {
                let Functor::GenJac(m) = &self.functor else {
                    unreachable!()
                };
                let m_e = m.base_change(&self.point).expect("valid base change");
                let prod = a.mul(b).rem(&m_e).expect("nonzero modulus");
                Payload::GenJac(genjac_canonical(prod))
            }
            (Payload::Elliptic(p), Payload::Elliptic(q)) => {
                let Functor::Elliptic(a, b) = &self.functor else {
                    unreachable!()
                };
                let (ae, _) = curve_at(a, b, &self.point).expect("valid base change");
                Payload::Elliptic(ell_add(&ae, p, q))
            }
            (Payload::ConstZ(a), Payload::ConstZ(b)) => Payload::ConstZ(a + b),
            _ => unreachable!("payload kind mismatch"),
        };
        GroupValue {
            functor: self.functor.clone(),
            point: self.point.clone(),
            payload,
        }
    }

    pub fn inverse(&self) -> GroupValue {
        let payload = match &self.payload {
            Payload::Ga(a) => Payload::Ga(a.neg()),
            Payload::Gm(a) => Payload::Gm(a.inv().expect("nonzero")),
            Payload::GenJac(r) => {
                let Functor::GenJac(m) = &self.functor else {
                    unreachable!()
                };
                let m_e = m.base_change(&self.point).expect("valid base change");
                Payload::GenJac(genjac_canonical(r.inv_mod(&m_e).expect("unit")))
            }
            Payload::Elliptic(None) => Payload::Elliptic(None),
            Payload::Elliptic(Some((x, y))) => Payload::Elliptic(Some((x.clone(), y.neg()))),
            Payload::ConstZ(n) => Payload::ConstZ(-n),
        };
        GroupValue {
            functor: self.functor.clone(),
            point: self.point.clone(),
            payload,
        }
    }

    /// n-fold sum by double-and-add.
    pub fn scalar_mul(&self, n: i64) -> GroupValue {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = GroupValue::identity(&self.functor, &self.point).expect("identity");
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.op(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.op(&sq);
            }
        }
        acc
    }

    /// Pull-back along the canonical extension `self.point -> to`.
    pub fn pullback(&self, to: &Field) -> Result<GroupValue> {
        if !self.point.is_subfield_of(to) {
            return Err(Error::NotSubfield {
                sub: self.point.order(),
                sup: to.order(),
            });
        }
        let payload = match &self.payload {
            Payload::Ga(a) => Payload::Ga(a.embed(to)?),
            Payload::Gm(a) => Payload::Gm(a.embed(to)?),
            Payload::GenJac(r) => Payload::GenJac(r.base_change(to)?),
            Payload::Elliptic(None) => Payload::Elliptic(None),
            Payload::Elliptic(Some((x, y))) => {
                Payload::Elliptic(Some((x.embed(to)?, y.embed(to)?)))
            }
            Payload::ConstZ(n) => Payload::ConstZ(*n),
        };
        Ok(GroupValue {
            functor: self.functor.clone(),
            point: to.clone(),
            payload,
        })
    }

    /// Push-forward along the canonical extension `to -> self.point`:
    /// trace for the additive group, norm for the multiplicative group,
    /// product resp. sum of Galois conjugates in general.
    pub fn pushforward(&self, to: &Field) -> Result<GroupValue> {
        if !to.is_subfield_of(&self.point) {
            return Err(Error::NotSubfield {
                sub: to.order(),
                sup: self.point.order(),
            });
        }
        let k = self.point.degree() / to.degree();
        let q = to.order();
        let payload = match &self.payload {
            Payload::Ga(a) => Payload::Ga(a.trace(to)?),
            Payload::Gm(a) => Payload::Gm(a.norm(to)?),
            Payload::GenJac(r) => {
                let Functor::GenJac(m) = &self.functor else {
                    unreachable!()
                };
                let m_e = m.base_change(&self.point)?;
                let mut acc = Poly::one(&self.point);
                let mut conj = r.clone();
                for _ in 0..k {
                    acc = acc.mul(&conj).rem(&m_e)?;
                    conj = frob_poly(&conj, q);
                }
                let coeffs = acc
                    .coeffs()
                    .iter()
                    .map(|c| c.project(to))
                    .collect::<Result<Vec<_>>>()?;
                Payload::GenJac(genjac_canonical(Poly::from_coeffs(to, coeffs)))
            }
            Payload::Elliptic(_) => {
                let Functor::Elliptic(a, b) = &self.functor else {
                    unreachable!()
                };
                let (ae, _) = curve_at(a, b, &self.point)?;
                let Payload::Elliptic(p) = &self.payload else {
                    unreachable!()
                };
                let mut acc: Option<(FieldElem, FieldElem)> = None;
                let mut conj = p.clone();
                for _ in 0..k {
                    acc = ell_add(&ae, &acc, &conj);
                    conj = conj.map(|(x, y)| (x.pow(q), y.pow(q)));
                }
                match acc {
                    None => Payload::Elliptic(None),
                    Some((x, y)) => Payload::Elliptic(Some((x.project(to)?, y.project(to)?))),
                }
            }
            Payload::ConstZ(n) => Payload::ConstZ(n * k as i64),
        };
        Ok(GroupValue {
            functor: self.functor.clone(),
            point: to.clone(),
            payload,
        })
    }

    /// Galois twist: apply Frobenius relative to `over` to the payload,
    /// `power` times. This is the value action of Gal(point/over).
    pub fn galois_twist(&self, over: &Field, power: u32) -> Result<GroupValue> {
        if !over.is_subfield_of(&self.point) {
            return Err(Error::NotSubfield {
                sub: over.order(),
                sup: self.point.order(),
            });
        }
        let k = self.point.degree() / over.degree();
        let power = power % k;
        if power == 0 {
            return Ok(self.clone());
        }
        let mut e = 1u64;
        for _ in 0..power {
            e *= over.order();
        }
        let payload = match &self.payload {
            Payload::Ga(a) => Payload::Ga(a.pow(e)),
            Payload::Gm(a) => Payload::Gm(a.pow(e)),
            Payload::GenJac(r) => Payload::GenJac(genjac_canonical(frob_poly(r, e))),
            Payload::Elliptic(None) => Payload::Elliptic(None),
            Payload::Elliptic(Some((x, y))) => Payload::Elliptic(Some((x.pow(e), y.pow(e)))),
            Payload::ConstZ(n) => Payload::ConstZ(*n),
        };
        Ok(GroupValue {
            functor: self.functor.clone(),
            point: self.point.clone(),
            payload,
        })
    }
}

fn frob_poly(r: &Poly, q: u64) -> Poly {
    let coeffs = r.coeffs().iter().map(|c| c.pow(q)).collect();
    Poly::from_coeffs(r.field(), coeffs)
}

/// Order of (F[t]/m)^x from the factorization of m.
pub fn unit_group_order(m: &Poly) -> Result<u64> {
    let q = m.field().order();
    let (_, factors) = m.factor()?;
    let mut order = 1u64;
    for (g, e) in factors {
        let d = g.degree().unwrap() as u32;
        let qd = q.pow(d);
        order *= qd.pow(e - 1) * (qd - 1);
    }
    Ok(order)
}

/// Order of the generalized Jacobian value group (E[t]/m_E)^x / E^x.
pub fn genjac_value_order(m: &Poly, point: &Field) -> Result<u64> {
    let m_e = m.base_change(point)?;
    Ok(unit_group_order(&m_e)? / (point.order() - 1))
}

// ---------------------------------------------------------------------------
// Invariant-factor structure of an enumerated finite abelian group
// ---------------------------------------------------------------------------

/// Invariant factor decomposition with realizing generators and a discrete
/// logarithm table. `orders == [0]` encodes the infinite cyclic structure of
/// the constant functor.
pub struct GroupStructure {
    pub functor: Functor,
    pub point: Field,
    /// Invariant factors d1 | d2 | ..., each >= 2; `[0]` for Z.
    pub orders: Vec<u64>,
    pub generators: Vec<GroupValue>,
    /// Every element in enumeration order (empty for Z).
    pub elements: Vec<GroupValue>,
    pub size: u64,
    dlog: HashMap<Payload, Vec<i64>>,
}

impl fmt::Debug for GroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GroupStructure({:?} at {}, orders {:?})",
            self.functor, self.point, self.orders
        )
    }
}

impl GroupStructure {
    pub fn is_free(&self) -> bool {
        self.orders == [0]
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn exponent(&self) -> u64 {
        self.orders.last().copied().unwrap_or(1)
    }

    /// Coordinates of a value in the invariant-factor basis.
    pub fn dlog(&self, v: &GroupValue) -> Result<Vec<i64>> {
        if let Payload::ConstZ(n) = v.payload() {
            return Ok(vec![*n]);
        }
        self.dlog
            .get(v.payload())
            .cloned()
            .ok_or_else(|| Error::LawViolation("element missing from dlog table".into()))
    }

    /// Solves n*x = v when possible: a witness of n-divisibility.
    pub fn divide(&self, v: &GroupValue, n: u64) -> Result<Option<GroupValue>> {
        if self.is_free() {
            return Err(Error::Unsupported("division in the constant functor".into()));
        }
        let coords = self.dlog(v)?;
        let mut x = GroupValue::identity(&v.functor, &v.point)?;
        for ((&d, g), &c) in self.orders.iter().zip(&self.generators).zip(&coords) {
            // solve n * t = c (mod d)
            let g0 = gcd_u64(n % d, d);
            if (c as u64) % g0 != 0 {
                return Ok(None);
            }
            let dd = d / g0;
            let inv = mod_inverse((n % d) / g0 % dd, dd);
            let t = ((c as u64 / g0) % dd * inv) % dd;
            x = x.op(&g.scalar_mul(t as i64));
        }
        debug_assert_eq!(&x.scalar_mul(n as i64), v);
        Ok(Some(x))
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd_u64(b % a, a)
    }
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m as i64, (a % m) as i64);
    while new_r != 0 {
        let q = r / new_r;
        t -= q * new_t;
        std::mem::swap(&mut t, &mut new_t);
        r -= q * new_r;
        std::mem::swap(&mut r, &mut new_r);
    }
    assert_eq!(r, 1, "inverse of a non-unit");
    t.rem_euclid(m as i64) as u64
}

fn enumerate_values(functor: &Functor, point: &Field) -> Result<Vec<GroupValue>> {
    let cap = DEFAULT_GROUP_CAP;
    match functor {
        Functor::Ga => Ok(point
            .elements()
            .map(|a| GroupValue {
                functor: Functor::Ga,
                point: point.clone(),
                payload: Payload::Ga(a),
            })
            .collect()),
        Functor::Gm => Ok(point
            .elements()
            .filter(|a| !a.is_zero())
            .map(|a| GroupValue {
                functor: Functor::Gm,
                point: point.clone(),
                payload: Payload::Gm(a),
            })
            .collect()),
        Functor::GenJac(m) => {
            let d = m.degree().unwrap() as u32;
            let residues = (point.order() as u128).pow(d);
            if residues > cap as u128 * point.order() as u128 {
                return Err(Error::GroupTooLarge {
                    size: residues,
                    max: cap as u128 * point.order() as u128,
                });
            }
            let m_e = m.base_change(point)?;
            let q = point.order();
            let mut out = Vec::new();
            for n in 0..residues as u64 {
                let mut coeffs = Vec::with_capacity(d as usize);
                let mut v = n;
                for _ in 0..d {
                    coeffs.push(point.from_index(v % q));
                    v /= q;
                }
                let rep = Poly::from_coeffs(point, coeffs);
                // canonical representatives only: lowest nonzero coefficient 1
                match rep.coeffs().iter().find(|c| !c.is_zero()) {
                    Some(c) if c.is_one() => {}
                    _ => continue,
                }
                if !rep.gcd(&m_e).is_one() {
                    continue;
                }
                out.push(GroupValue {
                    functor: functor.clone(),
                    point: point.clone(),
                    payload: Payload::GenJac(rep),
                });
            }
            Ok(out)
        }
        Functor::Elliptic(a, b) => {
            functor.validate(a.field())?;
            if point.order() > cap {
                return Err(Error::GroupTooLarge {
                    size: point.order() as u128,
                    max: cap as u128,
                });
            }
            let (ae, be) = curve_at(a, b, point)?;
            // y -> y^2 preimage table
            let mut sqrt: HashMap<FieldElem, Vec<FieldElem>> = HashMap::new();
            for y in point.elements() {
                sqrt.entry(y.mul(&y)).or_default().push(y.clone());
            }
            let mut out = vec![GroupValue {
                functor: functor.clone(),
                point: point.clone(),
                payload: Payload::Elliptic(None),
            }];
            for x in point.elements() {
                let rhs = x.mul(&x).mul(&x).add(&ae.mul(&x)).add(&be);
                if let Some(ys) = sqrt.get(&rhs) {
                    let mut ys = ys.clone();
                    ys.sort_by_key(|y| y.index());
                    ys.dedup();
                    for y in ys {
                        out.push(GroupValue {
                            functor: functor.clone(),
                            point: point.clone(),
                            payload: Payload::Elliptic(Some((x.clone(), y))),
                        });
                    }
                }
            }
            Ok(out)
        }
        Functor::ConstZ => Err(Error::Unsupported(
            "the constant functor has no finite enumeration".into(),
        )),
    }
}

/// Full value group M(point) with structure, generators, and dlog table.
pub fn value_group(functor: &Functor, point: &Field) -> Result<Arc<GroupStructure>> {
    static CACHE: OnceLock<Mutex<HashMap<(Functor, Field), Arc<GroupStructure>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (functor.clone(), point.clone());
    if let Some(s) = cache.lock().unwrap().get(&key) {
        return Ok(s.clone());
    }
    if let Some(base) = functor.base_field() {
        functor.validate(base)?;
        if !base.is_subfield_of(point) {
            return Err(Error::IncompatiblePoints(
                "point must extend the functor base field".into(),
            ));
        }
    }
    let s = if let Functor::ConstZ = functor {
        Arc::new(GroupStructure {
            functor: functor.clone(),
            point: point.clone(),
            orders: vec![0],
            generators: vec![GroupValue::const_z(point, 1)],
            elements: Vec::new(),
            size: 0,
            dlog: HashMap::new(),
        })
    } else {
        let elements = enumerate_values(functor, point)?;
        Arc::new(abelian_structure(functor, point, elements)?)
    };
    cache.lock().unwrap().insert(key, s.clone());
    Ok(s)
}

/// Invariant factor decomposition of an enumerated finite abelian group
/// with elements of any hashable type; deterministic in the enumeration
/// order. Detects law failures (non-closure) and reports them as errors.
pub struct FiniteAbelian<T> {
    pub orders: Vec<u64>,
    pub generators: Vec<T>,
    pub size: u64,
    pub dlog: HashMap<T, Vec<i64>>,
}

pub fn finite_abelian_structure<T, O, I>(
    elements: &[T],
    identity: T,
    op: O,
    inv: I,
) -> Result<FiniteAbelian<T>>
where
    T: Clone + Eq + std::hash::Hash,
    O: Fn(&T, &T) -> T,
    I: Fn(&T) -> T,
{
    let n = elements.len() as u64;
    if n == 0 {
        return Err(Error::LawViolation("empty enumeration".into()));
    }
    if n > DEFAULT_GROUP_CAP {
        return Err(Error::GroupTooLarge {
            size: n as u128,
            max: DEFAULT_GROUP_CAP as u128,
        });
    }
    let scalar = |g: &T, c: i64| -> T {
        let base = if c < 0 { inv(g) } else { g.clone() };
        let mut k = c.unsigned_abs();
        let mut acc = identity.clone();
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = op(&acc, &sq);
            }
            k >>= 1;
            if k > 0 {
                sq = op(&sq, &sq);
            }
        }
        acc
    };
    // Greedy generating set; the table maps each reached element to its
    // expression over the generators found so far.
    let mut table: HashMap<T, Vec<i64>> = HashMap::new();
    let mut reach: Vec<(T, Vec<i64>)> = vec![(identity.clone(), Vec::new())];
    table.insert(identity.clone(), Vec::new());
    let mut gens: Vec<T> = Vec::new();
    let mut rel_rows: Vec<Vec<i64>> = Vec::new();
    for e in elements {
        if table.contains_key(e) {
            continue;
        }
        let r = gens.len();
        gens.push(e.clone());
        // order of e relative to the current subgroup
        let mut k = 1i64;
        let mut acc = e.clone();
        while !table.contains_key(&acc) {
            acc = op(&acc, e);
            k += 1;
            if k as u64 > n {
                return Err(Error::LawViolation(
                    "element order exceeds the enumeration size".into(),
                ));
            }
        }
        let expr = table[&acc].clone();
        let mut row = vec![0i64; r + 1];
        for (j, c) in expr.iter().enumerate() {
            row[j] = -c;
        }
        row[r] = k;
        rel_rows.push(row);
        // extend the reachable set by t*e for t in 1..k
        let snapshot = reach.clone();
        let mut shift = identity.clone();
        for t in 1..k {
            shift = op(&shift, e);
            for (h, hexpr) in &snapshot {
                let v = op(h, &shift);
                let mut vexpr = hexpr.clone();
                vexpr.resize(r + 1, 0);
                vexpr[r] = t;
                if table.insert(v.clone(), vexpr.clone()).is_none() {
                    reach.push((v, vexpr));
                }
            }
        }
    }
    if table.len() as u64 != n {
        return Err(Error::LawViolation(format!(
            "closure produced {} elements out of {}",
            table.len(),
            n
        )));
    }
    let r = gens.len();
    if r == 0 {
        let mut dlog = HashMap::new();
        dlog.insert(identity, Vec::new());
        return Ok(FiniteAbelian {
            orders: Vec::new(),
            generators: Vec::new(),
            size: 1,
            dlog,
        });
    }
    // Smith reduction of the triangular relation matrix.
    let mut rows = Vec::with_capacity(r);
    for row in &rel_rows {
        let mut full = row.clone();
        full.resize(r, 0);
        rows.push(full);
    }
    let rel = IntMatrix::from_rows(&rows);
    let snf = smith_normal_form(&rel);
    let diag: Vec<i64> = (0..r)
        .map(|i| i64::try_from(&snf.s.get(i, i)).expect("small diagonal"))
        .collect();
    let v_dense: Vec<Vec<i64>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| i64::try_from(&snf.v.get(i, j)).expect("small transform"))
                .collect()
        })
        .collect();
    let v_inv_dense: Vec<Vec<i64>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| i64::try_from(&snf.v_inv.get(i, j)).expect("small transform"))
                .collect()
        })
        .collect();
    let kept: Vec<usize> = (0..r).filter(|&j| diag[j] > 1).collect();
    let orders: Vec<u64> = kept.iter().map(|&j| diag[j] as u64).collect();
    // realizing generators h_j = sum_i Vinv[j][i] * g_i
    let mut generators = Vec::with_capacity(kept.len());
    for &j in &kept {
        let mut h = identity.clone();
        for (i, g) in gens.iter().enumerate() {
            let c = v_inv_dense[j][i];
            if c != 0 {
                h = op(&h, &scalar(g, c));
            }
        }
        assert!(
            scalar(&h, diag[j]) == identity,
            "realized generator must have the invariant factor as order"
        );
        generators.push(h);
    }
    // dlog table: coordinates are (w * V) mod s at the kept positions
    let mut dlog = HashMap::with_capacity(table.len());
    for (element, w) in table {
        let coords: Vec<i64> = kept
            .iter()
            .map(|&j| {
                let mut c = 0i64;
                for (i, wi) in w.iter().enumerate() {
                    c += wi * v_dense[i][j];
                }
                c.rem_euclid(diag[j])
            })
            .collect();
        dlog.insert(element, coords);
    }
    let mut size = 1u64;
    for &o in &orders {
        size = size.saturating_mul(o);
    }
    if size != n {
        return Err(Error::LawViolation(format!(
            "structure order {} disagrees with enumeration size {}",
            size, n
        )));
    }
    Ok(FiniteAbelian {
        orders,
        generators,
        size,
        dlog,
    })
}

/// Invariant factor decomposition of an enumerated value group.
pub fn abelian_structure(
    functor: &Functor,
    point: &Field,
    elements: Vec<GroupValue>,
) -> Result<GroupStructure> {
    let identity = GroupValue::identity(functor, point)?;
    let fa = finite_abelian_structure(
        &elements,
        identity,
        |a: &GroupValue, b: &GroupValue| a.op(b),
        |a: &GroupValue| a.inverse(),
    )?;
    let dlog = fa
        .dlog
        .into_iter()
        .map(|(v, c)| (v.payload().clone(), c))
        .collect();
    Ok(GroupStructure {
        functor: functor.clone(),
        point: point.clone(),
        orders: fa.orders,
        generators: fa.generators,
        elements,
        size: fa.size,
        dlog,
    })
}
