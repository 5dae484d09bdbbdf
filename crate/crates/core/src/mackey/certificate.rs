//! Certified symbol reduction: deterministic rewrite chains whose every step
//! is re-validated against the truncated presentation.
//!
//! Two strategies are implemented. The all-additive chain factors a symbol
//! through the collapsed form {a_1*...*a_n, 1, ..., 1} modulo the I(x)
//! subgroup and pushes it down to the base point by the exchange relation.
//! The divisibility strategy kills a mixed unipotent/semi-abelian symbol by
//! lifting the additive entry through a surjective trace, pulling the
//! semi-abelian entry to an extension where it is divisible by the
//! characteristic, and absorbing the factor p into the additive slot.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ffield::{trace_preimage, Field};
use crate::groups::{value_group, Functor, GroupValue};
use crate::mackey::presentation::Presentation;
use crate::mackey::{FinitePoint, Symbol};

/// Hard cap on rewrite length; the classical chains need at most six moves.
pub const MAX_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// All-additive reduction to the normal form {trace(product), 1, ..., 1}.
    GaChain,
    /// Unipotent x semi-abelian vanishing via p-divisibility.
    Divisibility,
}

impl Strategy {
    pub fn parse(s: &str) -> Result<Strategy> {
        match s {
            "GA_CHAIN" => Ok(Strategy::GaChain),
            "DIVISIBILITY" => Ok(Strategy::Divisibility),
            _ => Err(Error::parse(0, format!("unknown strategy {:?}", s))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::GaChain => "GA_CHAIN",
            Strategy::Divisibility => "DIVISIBILITY",
        }
    }
}

/// A named rewrite rule instance.
#[derive(Debug, Clone)]
pub enum Rule {
    /// Linearity of the evaluation in one slot (coefficient moves).
    Multilinearity { slot: usize },
    /// Exchange of pull-back and push-forward across the point `via`.
    ProjectionFormula { slot: usize, via: Field },
    /// Witness for surjectivity of the trace: entry = Tr(witness).
    TraceLift { slot: usize, witness: GroupValue },
    /// Witness for divisibility: pulled entry = prime * witness.
    Divisibility {
        slot: usize,
        prime: u64,
        witness: GroupValue,
    },
    /// A symbol with an identity entry is zero.
    IdentityKill { slot: usize },
    /// {c, a_2, ..., a_n} = {c*a_2*...*a_n, 1, ..., 1} modulo I(x).
    IMove,
    /// Push-forward on symbols: rebasing only.
    PushforwardNormalization { new_base: Field },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Multilinearity { .. } => "multilinearity",
            Rule::ProjectionFormula { .. } => "projection-formula",
            Rule::TraceLift { .. } => "trace-lift",
            Rule::Divisibility { .. } => "divisibility",
            Rule::IdentityKill { .. } => "identity-kill",
            Rule::IMove => "i-move",
            Rule::PushforwardNormalization { .. } => "pushforward-normalization",
        }
    }
}

/// Integer multiple of a symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: i64,
    pub symbol: Symbol,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub rule: Rule,
    pub result: Vec<Term>,
}

/// A replayable reduction: the initial symbol, the rewrite steps, and the
/// final form (empty means the zero class).
#[derive(Debug, Clone)]
pub struct Certificate {
    pub initial: Symbol,
    pub steps: Vec<Step>,
    pub final_form: Vec<Term>,
    /// Maximal extension degree over the base touched by any step.
    pub degree_bound: u32,
}

impl Certificate {
    pub fn claims_zero(&self) -> bool {
        self.final_form.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn eval_terms(pres: &Presentation, terms: &[Term]) -> Result<Vec<BigInt>> {
    let mut acc = vec![BigInt::zero(); pres.generator_count()];
    for t in terms {
        let v = pres.evaluate_symbol(&t.symbol)?;
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b * t.coeff;
        }
    }
    Ok(acc)
}

/// Replays a certificate step by step. Every step must be justified inside
/// the relation lattice (the I(x)-moves additionally modulo I(x)); witness
/// parameters are re-checked; the final form must be reproduced exactly.
pub fn validate_certificate(cert: &Certificate) -> Result<()> {
    let base = cert.initial.point().base().clone();
    let pres = Presentation::build_cached(cert.initial.functors(), &base, cert.degree_bound)?;
    if cert.steps.len() > MAX_STEPS {
        return Err(Error::LawViolation("certificate exceeds the step cap".into()));
    }
    let mut prev = vec![Term {
        coeff: 1,
        symbol: cert.initial.clone(),
    }];
    for (i, step) in cert.steps.iter().enumerate() {
        // rule-specific witness checks
        match &step.rule {
            Rule::TraceLift { slot, witness } => {
                let cur = &prev[0].symbol;
                let down = witness.pushforward(cur.point().ext())?;
                if &down != &cur.entries()[*slot] {
                    return Err(Error::LawViolation(format!(
                        "step {}: trace witness does not hit the entry",
                        i
                    )));
                }
            }
            Rule::Divisibility {
                slot,
                prime,
                witness,
            } => {
                let next = &step.result[0].symbol;
                if &witness.scalar_mul(*prime as i64) != &next.entries()[*slot] {
                    return Err(Error::LawViolation(format!(
                        "step {}: divisibility witness fails",
                        i
                    )));
                }
            }
            Rule::IdentityKill { slot } => {
                if !prev[0].symbol.entries()[*slot].is_identity() {
                    return Err(Error::LawViolation(format!(
                        "step {}: killed slot is not the identity",
                        i
                    )));
                }
            }
            _ => {}
        }
        let before = eval_terms(&pres, &prev)?;
        let after = eval_terms(&pres, &step.result)?;
        let diff: Vec<BigInt> = before.iter().zip(&after).map(|(a, b)| a - b).collect();
        let ok = match &step.rule {
            Rule::IMove => pres.membership_mod_i(&diff)?.is_contained(),
            _ => pres.relation_membership(&diff).is_contained(),
        };
        if !ok {
            return Err(Error::LawViolation(format!(
                "step {} ({}) is not justified by the relations",
                i,
                step.rule.name()
            )));
        }
        prev = step.result.clone();
    }
    if cert.is_empty() {
        // nothing was rewritten: the initial symbol must already evaluate to
        // the final form on the nose
        let before = eval_terms(&pres, &prev)?;
        let after = eval_terms(&pres, &cert.final_form)?;
        if before != after {
            return Err(Error::LawViolation(
                "empty certificate with a nontrivial claim".into(),
            ));
        }
    } else if prev != cert.final_form {
        return Err(Error::LawViolation(
            "final form does not match the last step".into(),
        ));
    }
    Ok(())
}

/// Reduces a symbol by the chosen strategy, producing a certificate whose
/// final form is zero or a normal-form symbol at the base point.
pub fn reduce_symbol(s: &Symbol, strategy: Strategy) -> Result<Certificate> {
    if s.is_trivially_zero() {
        return Ok(Certificate {
            initial: s.clone(),
            steps: Vec::new(),
            final_form: Vec::new(),
            degree_bound: s.point().degree().max(1),
        });
    }
    match strategy {
        Strategy::GaChain => ga_chain(s),
        Strategy::Divisibility => divisibility(s),
    }
}

fn ga_chain(s: &Symbol) -> Result<Certificate> {
    if !s.functors().iter().all(|f| matches!(f, Functor::Ga)) {
        return Err(Error::StrategyInapplicable(
            "GA_CHAIN needs an all-additive symbol".into(),
        ));
    }
    let n = s.functors().len();
    let x = s.point().base().clone();
    let y = s.point().ext().clone();
    let k = s.point().degree();
    let mut steps: Vec<Step> = Vec::new();
    let mut cur = s.clone();
    if n >= 2 {
        // collapse through the I(x) subgroup
        let mut prod = cur.entries()[0].ga_elem().expect("additive").clone();
        for e in &cur.entries()[1..] {
            prod = prod.mul(e.ga_elem().expect("additive"));
        }
        let mut entries = vec![GroupValue::ga(&y, prod)?];
        for _ in 1..n {
            entries.push(GroupValue::ga(&y, y.one())?);
        }
        let collapsed = Symbol::new(s.functors().to_vec(), s.point().clone(), entries)?;
        steps.push(Step {
            rule: Rule::IMove,
            result: vec![Term {
                coeff: 1,
                symbol: collapsed.clone(),
            }],
        });
        cur = collapsed;
    }
    if k > 1 {
        // exchange: {m, 1, ..., 1}_{y/x} = {Tr(m), 1, ..., 1}_{x/x}
        let m = cur.entries()[0].clone();
        let traced = m.pushforward(&x)?;
        let mut entries = vec![traced];
        for _ in 1..n {
            entries.push(GroupValue::ga(&x, x.one())?);
        }
        let down = Symbol::new(
            s.functors().to_vec(),
            FinitePoint::new(x.clone(), x.clone())?,
            entries,
        )?;
        steps.push(Step {
            rule: Rule::ProjectionFormula {
                slot: 0,
                via: y.clone(),
            },
            result: vec![Term {
                coeff: 1,
                symbol: down.clone(),
            }],
        });
        cur = down;
    }
    let final_form = if cur.is_trivially_zero() {
        steps.push(Step {
            rule: Rule::IdentityKill { slot: 0 },
            result: Vec::new(),
        });
        Vec::new()
    } else {
        vec![Term {
            coeff: 1,
            symbol: cur,
        }]
    };
    assert!(steps.len() <= MAX_STEPS);
    Ok(Certificate {
        initial: s.clone(),
        steps,
        final_form,
        degree_bound: k.max(1),
    })
}

fn divisibility(s: &Symbol) -> Result<Certificate> {
    if s.functors().len() != 2 {
        return Err(Error::StrategyInapplicable(
            "DIVISIBILITY reduces binary symbols".into(),
        ));
    }
    let u = s
        .functors()
        .iter()
        .position(|f| matches!(f, Functor::Ga))
        .ok_or_else(|| {
            Error::StrategyInapplicable("DIVISIBILITY needs a unipotent (GA) factor".into())
        })?;
    let v = 1 - u;
    if !matches!(
        s.functors()[v],
        Functor::Gm | Functor::Elliptic(_, _)
    ) {
        return Err(Error::StrategyInapplicable(
            "DIVISIBILITY needs a semi-abelian (GM or ELL) factor".into(),
        ));
    }
    let x = s.point().base().clone();
    let y = s.point().ext().clone();
    let p = x.p();
    let b = s.entries()[v].clone();
    // find an extension of y where the semi-abelian entry is p-divisible
    let mut found: Option<(Field, GroupValue, GroupValue)> = None; // (y', b_up, b')
    for k in 1.. {
        let Ok(y_prime) = Field::new(y.p(), y.degree() * k) else {
            break;
        };
        let vg = value_group(&s.functors()[v], &y_prime)?;
        let b_up = b.pullback(&y_prime)?;
        if let Some(witness) = vg.divide(&b_up, p)? {
            found = Some((y_prime, b_up, witness));
            break;
        }
    }
    let Some((y_prime, b_up, b_witness)) = found else {
        return Err(Error::StrategyInapplicable(format!(
            "no extension of {} within the field caps makes the entry {}-divisible",
            y, p
        )));
    };
    let mut steps: Vec<Step> = Vec::new();
    let mut cur = s.clone();
    if y_prime != y {
        // lift the additive entry through the surjective trace
        let a_elem = cur.entries()[u].ga_elem().expect("additive").clone();
        let a_witness = GroupValue::ga(&y_prime, trace_preimage(&a_elem, &y_prime)?)?;
        steps.push(Step {
            rule: Rule::TraceLift {
                slot: u,
                witness: a_witness.clone(),
            },
            result: vec![Term {
                coeff: 1,
                symbol: cur.clone(),
            }],
        });
        // exchange across y': {Tr(a'), b}_{y/x} = {a', j* b}_{y'/x}
        let mut entries = vec![GroupValue::identity(&s.functors()[0], &y_prime)?; 2];
        entries[u] = a_witness;
        entries[v] = b_up.clone();
        let up = Symbol::new(
            s.functors().to_vec(),
            FinitePoint::new(x.clone(), y_prime.clone())?,
            entries,
        )?;
        steps.push(Step {
            rule: Rule::ProjectionFormula {
                slot: u,
                via: y_prime.clone(),
            },
            result: vec![Term {
                coeff: 1,
                symbol: up.clone(),
            }],
        });
        cur = up;
    }
    // record the divisibility witness: the v-entry equals p * b'
    let rewritten = cur.with_entry(v, b_witness.scalar_mul(p as i64))?;
    steps.push(Step {
        rule: Rule::Divisibility {
            slot: v,
            prime: p,
            witness: b_witness.clone(),
        },
        result: vec![Term {
            coeff: 1,
            symbol: rewritten.clone(),
        }],
    });
    cur = rewritten;
    // pull the coefficient out of the semi-abelian slot
    let peeled = cur.with_entry(v, b_witness.clone())?;
    steps.push(Step {
        rule: Rule::Multilinearity { slot: v },
        result: vec![Term {
            coeff: p as i64,
            symbol: peeled.clone(),
        }],
    });
    cur = peeled;
    // absorb it into the additive slot, where p kills everything
    let killed = cur.with_entry(u, cur.entries()[u].scalar_mul(p as i64))?;
    steps.push(Step {
        rule: Rule::Multilinearity { slot: u },
        result: vec![Term {
            coeff: 1,
            symbol: killed.clone(),
        }],
    });
    steps.push(Step {
        rule: Rule::IdentityKill { slot: u },
        result: Vec::new(),
    });
    assert!(steps.len() <= MAX_STEPS);
    let degree_bound = (y_prime.degree() / x.degree()).max(1);
    Ok(Certificate {
        initial: s.clone(),
        steps,
        final_form: Vec::new(),
        degree_bound,
    })
}
