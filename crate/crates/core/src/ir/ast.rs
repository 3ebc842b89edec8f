use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Location in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Int,
    Real,
    Qreg(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
}

impl Param {
    pub fn is_classical(&self) -> bool {
        !matches!(self.kind, ParamKind::Qreg(_))
    }
}

/// The supported gate set.
///
/// Multi-qubit gates list their controls first: `cx(q, c, t)`, `ccx(q, c0, c1, t)`,
/// `cswap(q, c, a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    P,
    Cx,
    Cy,
    Cz,
    Ch,
    Crz,
    Swap,
    Ccx,
    Cswap,
}

impl Gate {
    pub const ALL: [Gate; 20] = [
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::H,
        Gate::S,
        Gate::Sdg,
        Gate::T,
        Gate::Tdg,
        Gate::Rx,
        Gate::Ry,
        Gate::Rz,
        Gate::P,
        Gate::Cx,
        Gate::Cy,
        Gate::Cz,
        Gate::Ch,
        Gate::Crz,
        Gate::Swap,
        Gate::Ccx,
        Gate::Cswap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::H => "h",
            Gate::S => "s",
            Gate::Sdg => "sdg",
            Gate::T => "t",
            Gate::Tdg => "tdg",
            Gate::Rx => "rx",
            Gate::Ry => "ry",
            Gate::Rz => "rz",
            Gate::P => "p",
            Gate::Cx => "cx",
            Gate::Cy => "cy",
            Gate::Cz => "cz",
            Gate::Ch => "ch",
            Gate::Crz => "crz",
            Gate::Swap => "swap",
            Gate::Ccx => "ccx",
            Gate::Cswap => "cswap",
        }
    }

    pub fn from_name(name: &str) -> Option<Gate> {
        Gate::ALL.iter().copied().find(|g| g.name() == name)
    }

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            Gate::Cx | Gate::Cy | Gate::Cz | Gate::Ch | Gate::Crz | Gate::Swap => 2,
            Gate::Ccx | Gate::Cswap => 3,
            _ => 1,
        }
    }

    /// Number of angle operands.
    pub fn angle_count(self) -> usize {
        match self {
            Gate::Rx | Gate::Ry | Gate::Rz | Gate::P | Gate::Crz => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub gate: Gate,
    pub qubits: Vec<usize>,
    pub angles: Vec<f64>,
}

impl GateOp {
    pub fn new(gate: Gate, qubits: &[usize]) -> Self {
        GateOp { gate, qubits: qubits.to_vec(), angles: Vec::new() }
    }

    pub fn with_angles(gate: Gate, qubits: &[usize], angles: &[f64]) -> Self {
        GateOp { gate, qubits: qubits.to_vec(), angles: angles.to_vec() }
    }
}

/// Renders as `h(1)`, `cx(0,1)`, `rz(1,0.785)`, the operation-list form.
impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.gate)?;
        let mut first = true;
        for q in &self.qubits {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
            first = false;
        }
        for a in &self.angles {
            write!(f, ",{a:?}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

/// Classical expression over read-only parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => out.push(v),
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Int(_) | Expr::Real(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    /// The comparator that holds exactly when `self` does not.
    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Eq => Cmp::Ne,
            Cmp::Ne => Cmp::Eq,
            Cmp::Lt => Cmp::Ge,
            Cmp::Ge => Cmp::Lt,
            Cmp::Le => Cmp::Gt,
            Cmp::Gt => Cmp::Le,
        }
    }

    pub fn holds<T: PartialOrd>(self, l: T, r: T) -> bool {
        match self {
            Cmp::Eq => l == r,
            Cmp::Ne => l != r,
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Gt => l > r,
            Cmp::Ge => l >= r,
        }
    }
}

/// Outcome bitstrings: character `i` is the value of the `i`-th qubit in
/// ascending index order. For full-register outcomes that is qubit `i`.
pub type OutcomeMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cond {
    Classical {
        lhs: Expr,
        cmp: Cmp,
        rhs: Expr,
    },
    /// `measure(q, qubits) == outcomes`: single-shot measurement membership.
    Measure {
        qubits: Vec<usize>,
        outcomes: Vec<String>,
    },
    /// `check_state_eq(q, dist, delta)` over all `2^n` outcomes.
    StateEq {
        dist: OutcomeMap,
        delta: f64,
    },
    /// `check_state_gt(q, pairs, delta)`: lower bounds `p - delta`.
    StateGt {
        pairs: Vec<(String, f64)>,
        delta: f64,
    },
    /// `check_state_lt(q, pairs, delta)`: upper bounds `p + delta`.
    StateLt {
        pairs: Vec<(String, f64)>,
        delta: f64,
    },
}

impl Cond {
    pub fn is_quantum(&self) -> bool {
        !matches!(self, Cond::Classical { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Gate(GateOp, Span),
    If { site: usize, cond: Cond, then_block: Block, else_block: Block, span: Span },
    Return(Expr, Span),
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSite {
    pub id: usize,
    /// Statement indices from the program body down to the conditional; `else`
    /// descents are encoded as `usize::MAX` markers followed by the index.
    pub cond_ref: Vec<usize>,
    pub span: Span,
    /// Enclosing (site, polarity) arm, if nested.
    pub parent: Option<(usize, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub branch_sites: Vec<BranchSite>,
    pub reference_dist: Option<OutcomeMap>,
}

/// Marker in [`BranchSite::cond_ref`] for descending into an `else` block.
pub const ELSE_MARKER: usize = usize::MAX;

impl Program {
    /// Qubit count of the quantum register.
    pub fn n(&self) -> usize {
        self.params
            .iter()
            .find_map(|p| match p.kind {
                ParamKind::Qreg(n) => Some(n),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn qreg_name(&self) -> &str {
        self.params.iter().find(|p| !p.is_classical()).map(|p| p.name.as_str()).unwrap_or("q")
    }

    pub fn classical_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.is_classical())
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Looks up the conditional of a branch site.
    pub fn cond(&self, site: usize) -> Option<&Cond> {
        fn walk(block: &Block, site: usize) -> Option<&Cond> {
            for stmt in block {
                if let Stmt::If { site: s, cond, then_block, else_block, .. } = stmt {
                    if *s == site {
                        return Some(cond);
                    }
                    if let Some(c) = walk(then_block, site).or_else(|| walk(else_block, site)) {
                        return Some(c);
                    }
                }
            }
            None
        }
        walk(&self.body, site)
    }

    /// Recomputes `branch_sites` and renumbers `If` statements in pre-order.
    pub fn assign_sites(&mut self) {
        fn walk(block: &mut Block, path: &mut Vec<usize>, parent: Option<(usize, bool)>, out: &mut Vec<BranchSite>) {
            for (i, stmt) in block.iter_mut().enumerate() {
                if let Stmt::If { site, then_block, else_block, span, .. } = stmt {
                    path.push(i);
                    let id = out.len();
                    *site = id;
                    out.push(BranchSite { id, cond_ref: path.clone(), span: *span, parent });
                    walk(then_block, path, Some((id, true)), out);
                    path.push(ELSE_MARKER);
                    walk(else_block, path, Some((id, false)), out);
                    path.pop();
                    path.pop();
                }
            }
        }
        let mut sites = Vec::new();
        walk(&mut self.body, &mut Vec::new(), None, &mut sites);
        self.branch_sites = sites;
    }
}

/// Basis index of a full-register outcome string (character `i` is qubit `i`).
pub fn outcome_index(bits: &str) -> Option<usize> {
    let mut idx = 0usize;
    for (i, c) in bits.chars().enumerate() {
        match c {
            '0' => {}
            '1' => idx |= 1 << i,
            _ => return None,
        }
    }
    Some(idx)
}

/// Inverse of [`outcome_index`] for a `width`-bit string.
pub fn outcome_string(index: usize, width: usize) -> String {
    (0..width).map(|i| if index >> i & 1 == 1 { '1' } else { '0' }).collect()
}
