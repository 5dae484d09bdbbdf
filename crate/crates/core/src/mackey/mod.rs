//! The product engine: finitely presented truncations of the Mackey product
//! of group functors over a finite base field, and certified symbol
//! reduction.
//!
//! The product at a point x is presented by one summand per finite point y
//! over x (truncated at an extension-degree bound), generated by tensors of
//! value-group generators and cut down by every instance of the
//! pull-back/push-forward exchange relation along every morphism of points,
//! Galois twists included. Symbols evaluate to coordinate vectors in the
//! presentation; reductions replay the classical manipulations step by step
//! and every step is re-checked against the relation lattice.

mod certificate;
mod presentation;

pub use certificate::{
    reduce_symbol, validate_certificate, Certificate, Rule, Step, Strategy, Term,
};
pub use presentation::{
    layer_group, naive_structure, stabilization_scan, Layer, LayerGen, Presentation,
    ScanResult,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::ffield::Field;
use crate::groups::{Functor, GroupValue};

/// A finite point y over a base point x, both members of the field tower.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FinitePoint {
    base: Field,
    ext: Field,
}

impl fmt::Debug for FinitePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.ext, self.base)
    }
}

impl FinitePoint {
    pub fn new(base: Field, ext: Field) -> Result<FinitePoint> {
        if !base.is_subfield_of(&ext) {
            return Err(Error::IncompatiblePoints(format!(
                "{} is not an extension of {}",
                ext, base
            )));
        }
        Ok(FinitePoint { base, ext })
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    pub fn ext(&self) -> &Field {
        &self.ext
    }

    /// Relative degree [y : x].
    pub fn degree(&self) -> u32 {
        self.ext.degree() / self.base.degree()
    }
}

/// A formal generator {a_1,...,a_n}_{y/x} of the product presentation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    functors: Vec<Functor>,
    point: FinitePoint,
    entries: Vec<GroupValue>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", e)?;
        }
        write!(f, "}}_{:?}", self.point)
    }
}

impl Symbol {
    pub fn new(
        functors: Vec<Functor>,
        point: FinitePoint,
        entries: Vec<GroupValue>,
    ) -> Result<Symbol> {
        if functors.len() != entries.len() || functors.is_empty() {
            return Err(Error::Unsupported(
                "entry list must match the functor list".into(),
            ));
        }
        for (f, e) in functors.iter().zip(&entries) {
            if e.functor() != f {
                return Err(Error::IncompatiblePoints(
                    "entry does not belong to its slot functor".into(),
                ));
            }
            if e.point() != point.ext() {
                return Err(Error::IncompatiblePoints(
                    "all entries must live at the same point".into(),
                ));
            }
        }
        Ok(Symbol {
            functors,
            point,
            entries,
        })
    }

    pub fn functors(&self) -> &[Functor] {
        &self.functors
    }

    pub fn point(&self) -> &FinitePoint {
        &self.point
    }

    pub fn entries(&self) -> &[GroupValue] {
        &self.entries
    }

    /// Push-forward along x' -> x on symbols: the entries are unchanged and
    /// the base point is lowered.
    pub fn pushforward(&self, new_base: &Field) -> Result<Symbol> {
        if !new_base.is_subfield_of(self.point.base()) {
            return Err(Error::IncompatiblePoints(format!(
                "{} is not below the symbol base {}",
                new_base,
                self.point.base()
            )));
        }
        Ok(Symbol {
            functors: self.functors.clone(),
            point: FinitePoint::new(new_base.clone(), self.point.ext().clone())?,
            entries: self.entries.clone(),
        })
    }

    /// A symbol with an identity entry is the zero class.
    pub fn is_trivially_zero(&self) -> bool {
        self.entries.iter().any(|e| e.is_identity())
    }

    /// Replace one entry, keeping everything else.
    pub fn with_entry(&self, slot: usize, value: GroupValue) -> Result<Symbol> {
        let mut entries = self.entries.clone();
        entries[slot] = value;
        Symbol::new(self.functors.clone(), self.point.clone(), entries)
    }
}
