//! Branch atoms, their negations, path constraints and the fork tree that
//! picks the next branch to flip.

mod atom;
mod path;
mod tree;

pub use atom::{
    atom_for, classical_constraint, eq_constraint, gt_constraint, lt_constraint, measure_constraint, negate, Atom,
    AtomKind, AtomParams, AtomSite, SymbolRef,
};
pub use path::{path_condition, PathConstraint};
pub use tree::{ForkNode, ForkTree, Target};
