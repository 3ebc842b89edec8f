use serde::{Deserialize, Serialize};

use super::atom::{negate, Atom};
use super::path::PathConstraint;

fn slot(polarity: bool) -> usize {
    polarity as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkNode {
    pub site: usize,
    pub depth: usize,
    pub parent: Option<(usize, bool)>,
    /// Atom as first realized; negated on demand for the other side.
    pub atom: Atom,
    /// Indexed by polarity (`false` = 0).
    pub children: [Option<usize>; 2],
    pub explored: [bool; 2],
    pub unsat: [bool; 2],
    /// Given up after repeated solver timeouts or misses.
    pub abandoned: [bool; 2],
}

impl ForkNode {
    pub fn atom_for(&self, polarity: bool) -> Atom {
        if self.atom.polarity == polarity {
            self.atom.clone()
        } else {
            negate(&self.atom)
        }
    }

    pub fn is_open(&self, polarity: bool) -> bool {
        let i = slot(polarity);
        !self.explored[i] && !self.unsat[i] && !self.abandoned[i]
    }
}

/// A side of a fork node that no execution has taken yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub node: usize,
    pub polarity: bool,
}

/// Tree of observed paths, keyed by the decisions taken at each conditional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ForkTree {
    pub nodes: Vec<ForkNode>,
    /// Nodes visited by the most recently added path.
    pub last_path: Vec<usize>,
}

impl ForkTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<usize> {
        (!self.nodes.is_empty()).then_some(0)
    }

    /// Inserts a path and marks each decision explored.
    pub fn update(&mut self, pc: &PathConstraint) {
        self.last_path.clear();
        let mut parent: Option<(usize, bool)> = None;
        for (depth, atom) in pc.atoms.iter().enumerate() {
            let existing = match parent {
                None => self.root(),
                Some((p, pol)) => self.nodes[p].children[slot(pol)],
            };
            let id = match existing {
                Some(id) => id,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(ForkNode {
                        site: atom.site,
                        depth,
                        parent,
                        atom: atom.clone(),
                        children: [None, None],
                        explored: [false; 2],
                        unsat: [false; 2],
                        abandoned: [false; 2],
                    });
                    if let Some((p, pol)) = parent {
                        self.nodes[p].children[slot(pol)] = Some(id);
                    }
                    id
                }
            };
            debug_assert_eq!(self.nodes[id].site, atom.site, "control flow diverged at a shared prefix");
            self.nodes[id].explored[slot(atom.polarity)] = true;
            self.last_path.push(id);
            parent = Some((id, atom.polarity));
        }
    }

    fn open_side(&self, id: usize) -> Option<Target> {
        let node = &self.nodes[id];
        [false, true].into_iter().find(|&pol| node.is_open(pol)).map(|polarity| Target { node: id, polarity })
    }

    /// Deepest open side on the latest path, else the deepest anywhere.
    pub fn select_target(&self) -> Option<Target> {
        if let Some(t) = self.last_path.iter().rev().find_map(|&id| self.open_side(id)) {
            return Some(t);
        }
        let mut best: Option<Target> = None;
        for id in 0..self.nodes.len() {
            if let Some(t) = self.open_side(id) {
                if best.is_none_or(|b| self.nodes[id].depth > self.nodes[b.node].depth) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Prefix decisions leading to `t` followed by the flipped atom.
    pub fn target_constraint(&self, t: Target) -> PathConstraint {
        let mut atoms = vec![self.nodes[t.node].atom_for(t.polarity)];
        let mut cur = self.nodes[t.node].parent;
        while let Some((id, pol)) = cur {
            atoms.push(self.nodes[id].atom_for(pol));
            cur = self.nodes[id].parent;
        }
        atoms.reverse();
        PathConstraint { atoms }
    }

    pub fn mark_unsat(&mut self, t: Target) {
        self.nodes[t.node].unsat[slot(t.polarity)] = true;
    }

    pub fn mark_abandoned(&mut self, t: Target) {
        self.nodes[t.node].abandoned[slot(t.polarity)] = true;
    }

    pub fn is_exhausted(&self) -> bool {
        (0..self.nodes.len()).all(|id| self.open_side(id).is_none())
    }

    /// `(site, polarity)` pairs proven unreachable at some node.
    pub fn unsat_sides(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for pol in [false, true] {
                if n.unsat[slot(pol)] {
                    out.push((n.site, pol));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::path_condition;
    use crate::ir::parse_program;
    use crate::sim::{execute_concrete, Trace, TraceStep};
    use crate::symbolic::symbolize;
    use crate::testcase::TestCase;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn teleport_pc() -> (crate::ir::Program, PathConstraint) {
        let p = parse_program(include_str!("../../../../programs/teleport.qcp")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = execute_concrete(&p, &TestCase::initial(&p).unwrap(), &mut rng).unwrap();
        let pc = path_condition(&p, &symbolize(&p), &run.trace).unwrap();
        (p, pc)
    }

    #[test]
    fn first_target_is_the_deepest_flip() {
        let (_, pc) = teleport_pc();
        let mut tree = ForkTree::new();
        tree.update(&pc);
        assert_eq!(tree.nodes.len(), 3);
        let t = tree.select_target().unwrap();
        assert_eq!(t.node, 2);
        assert_eq!(t.polarity, !pc.atoms[2].polarity);
        let tc = tree.target_constraint(t);
        assert_eq!(tc.atoms.len(), 3);
        assert_eq!(tc.atoms[..2], pc.atoms[..2]);
        assert_eq!(tc.atoms[2], negate(&pc.atoms[2]));
    }

    #[test]
    fn exhausts_after_marks() {
        let (_, pc) = teleport_pc();
        let mut tree = ForkTree::new();
        tree.update(&pc);
        let mut seen = Vec::new();
        while let Some(t) = tree.select_target() {
            assert!(!seen.contains(&t));
            seen.push(t);
            tree.mark_unsat(t);
        }
        assert_eq!(seen.len(), 3);
        assert!(tree.is_exhausted());
        assert_eq!(tree.unsat_sides().len(), 3);
    }

    #[test]
    fn shared_prefixes_reuse_nodes() {
        let (p, pc) = teleport_pc();
        let mut tree = ForkTree::new();
        tree.update(&pc);
        let mut flipped = pc.clone();
        flipped.atoms[2] = negate(&flipped.atoms[2]);
        tree.update(&flipped);
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(tree.nodes[2].explored, [true, true]);
        assert_eq!(tree.select_target().unwrap().node, 1);
        let _ = p;
    }

    #[test]
    fn empty_trace_leaves_tree_empty() {
        let mut tree = ForkTree::new();
        tree.update(&PathConstraint::default());
        assert!(tree.select_target().is_none());
        let _ = Trace { steps: Vec::<TraceStep>::new(), ops_prefix: vec![], operations: vec![], result: None };
    }
}
