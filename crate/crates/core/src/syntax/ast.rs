//! Abstract syntax of pWHILE.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

use super::lexer::Span;
use crate::num::Rational;

/// Memory side of a relational expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Bool,
    Int,
    Real,
    /// Fixed-length real vector.
    Vec(usize),
    /// User type declared in the prelude; resolved through the type table.
    Named(String),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "bool"),
            Ty::Int => write!(f, "int"),
            Ty::Real => write!(f, "real"),
            Ty::Vec(n) => write!(f, "vec_real({n})"),
            Ty::Named(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lit {
    Bool(bool),
    Int(BigInt),
    Real(Rational),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Var { name: String, side: Option<Side>, span: Span },
    Lit(Lit),
    /// Operation application; operators use their symbol as name
    /// (`+`, `<=`, `&&`, `neg`, `!`, ...).
    Op { op: String, args: Vec<Expr>, span: Span },
    Vector(Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var { name: name.to_string(), side: None, span: Span::default() }
    }

    pub fn side_var(name: &str, side: Side) -> Expr {
        Expr::Var { name: name.to_string(), side: Some(side), span: Span::default() }
    }

    pub fn int(n: i64) -> Expr {
        Expr::Lit(Lit::Int(BigInt::from(n)))
    }

    pub fn real(q: Rational) -> Expr {
        Expr::Lit(Lit::Real(q))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Lit(Lit::Bool(b))
    }

    pub fn op(op: &str, args: Vec<Expr>) -> Expr {
        Expr::Op { op: op.to_string(), args, span: Span::default() }
    }

    pub fn bin(op: &str, a: Expr, b: Expr) -> Expr {
        Expr::op(op, vec![a, b])
    }

    pub fn span(&self) -> Span {
        match self {
            Expr::Var { span, .. } | Expr::Op { span, .. } => *span,
            Expr::Lit(_) => Span::default(),
            Expr::Vector(es) => es.first().map(Expr::span).unwrap_or_default(),
        }
    }

    /// Tags every untagged variable with `side`.
    pub fn on_side(&self, s: Side) -> Expr {
        self.map_vars(&mut |name, side, span| Expr::Var { name: name.to_string(), side: Some(side.unwrap_or(s)), span })
    }

    /// Rebuilds the expression replacing each variable occurrence.
    pub fn map_vars(&self, f: &mut dyn FnMut(&str, Option<Side>, Span) -> Expr) -> Expr {
        match self {
            Expr::Var { name, side, span } => f(name, *side, *span),
            Expr::Lit(l) => Expr::Lit(l.clone()),
            Expr::Op { op, args, span } => {
                Expr::Op { op: op.clone(), args: args.iter().map(|a| a.map_vars(f)).collect(), span: *span }
            }
            Expr::Vector(es) => Expr::Vector(es.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    pub fn visit_vars(&self, f: &mut dyn FnMut(&str, Option<Side>)) {
        match self {
            Expr::Var { name, side, .. } => f(name, *side),
            Expr::Lit(_) => {}
            Expr::Op { args, .. } | Expr::Vector(args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |n, _| {
            out.insert(n.to_string());
        });
        out
    }

    pub fn op_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Op { op, args, .. } => {
                out.insert(op.clone());
                args.iter().for_each(|a| a.op_names(out));
            }
            Expr::Vector(args) => args.iter().for_each(|a| a.op_names(out)),
            _ => {}
        }
    }
}

/// Distribution expression `d(params)(args)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DistExpr {
    pub name: String,
    pub params: Vec<Expr>,
    pub args: Vec<Expr>,
    pub span: Span,
}

impl DistExpr {
    pub fn new(name: &str, params: Vec<Expr>, args: Vec<Expr>) -> Self {
        Self { name: name.to_string(), params, args, span: Span::default() }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.params.iter().chain(&self.args) {
            out.extend(e.free_vars());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmd {
    Skip,
    Null,
    Assign { var: String, expr: Expr, span: Span },
    Sample { var: String, dist: DistExpr, span: Span },
    Seq(Box<Cmd>, Box<Cmd>),
    If { cond: Expr, then_branch: Box<Cmd>, else_branch: Box<Cmd>, span: Span },
    While { cond: Expr, body: Box<Cmd>, span: Span },
}

impl Cmd {
    pub fn assign(var: &str, expr: Expr) -> Cmd {
        Cmd::Assign { var: var.to_string(), expr, span: Span::default() }
    }

    pub fn sample(var: &str, dist: DistExpr) -> Cmd {
        Cmd::Sample { var: var.to_string(), dist, span: Span::default() }
    }

    pub fn seq(a: Cmd, b: Cmd) -> Cmd {
        Cmd::Seq(Box::new(a), Box::new(b))
    }

    pub fn if_(cond: Expr, t: Cmd, e: Cmd) -> Cmd {
        Cmd::If { cond, then_branch: Box::new(t), else_branch: Box::new(e), span: Span::default() }
    }

    pub fn while_(cond: Expr, body: Cmd) -> Cmd {
        Cmd::While { cond, body: Box::new(body), span: Span::default() }
    }

    /// Right-nested sequence of the given commands (`skip` when empty).
    pub fn seq_all(mut cmds: Vec<Cmd>) -> Cmd {
        let mut acc = match cmds.pop() {
            Some(c) => c,
            None => return Cmd::Skip,
        };
        while let Some(c) = cmds.pop() {
            acc = Cmd::seq(c, acc);
        }
        acc
    }

    /// Flattened list of sequenced commands (ignores Seq association).
    pub fn flatten_seq(&self) -> Vec<&Cmd> {
        match self {
            Cmd::Seq(a, b) => {
                let mut v = a.flatten_seq();
                v.extend(b.flatten_seq());
                v
            }
            c => vec![c],
        }
    }

    /// Equality up to associativity of `;`.
    pub fn equiv_modulo_seq(&self, other: &Cmd) -> bool {
        let a = self.flatten_seq();
        let b = other.flatten_seq();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| match (x, y) {
                (
                    Cmd::If { cond: c1, then_branch: t1, else_branch: e1, .. },
                    Cmd::If { cond: c2, then_branch: t2, else_branch: e2, .. },
                ) => c1 == c2 && t1.equiv_modulo_seq(t2) && e1.equiv_modulo_seq(e2),
                (Cmd::While { cond: c1, body: b1, .. }, Cmd::While { cond: c2, body: b2, .. }) => {
                    c1 == c2 && b1.equiv_modulo_seq(b2)
                }
                (x, y) => x == y,
            })
    }

    /// Standard inductive free-variable set.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_fv(&mut out);
        out
    }

    fn collect_fv(&self, out: &mut BTreeSet<String>) {
        match self {
            Cmd::Skip | Cmd::Null => {}
            Cmd::Assign { var, expr, .. } => {
                out.insert(var.clone());
                out.extend(expr.free_vars());
            }
            Cmd::Sample { var, dist, .. } => {
                out.insert(var.clone());
                out.extend(dist.free_vars());
            }
            Cmd::Seq(a, b) => {
                a.collect_fv(out);
                b.collect_fv(out);
            }
            Cmd::If { cond, then_branch, else_branch, .. } => {
                out.extend(cond.free_vars());
                then_branch.collect_fv(out);
                else_branch.collect_fv(out);
            }
            Cmd::While { cond, body, .. } => {
                out.extend(cond.free_vars());
                body.collect_fv(out);
            }
        }
    }

    /// Variables that may be written.
    pub fn written_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_written(&mut out);
        out
    }

    fn collect_written(&self, out: &mut BTreeSet<String>) {
        match self {
            Cmd::Assign { var, .. } | Cmd::Sample { var, .. } => {
                out.insert(var.clone());
            }
            Cmd::Seq(a, b)
            | Cmd::If { then_branch: a, else_branch: b, .. } => {
                a.collect_written(out);
                b.collect_written(out);
            }
            Cmd::While { body, .. } => body.collect_written(out),
            Cmd::Skip | Cmd::Null => {}
        }
    }

    pub fn visit_dists(&self, f: &mut dyn FnMut(&DistExpr)) {
        match self {
            Cmd::Sample { dist, .. } => f(dist),
            Cmd::Seq(a, b) | Cmd::If { then_branch: a, else_branch: b, .. } => {
                a.visit_dists(f);
                b.visit_dists(f);
            }
            Cmd::While { body, .. } => body.visit_dists(f),
            _ => {}
        }
    }

    pub fn visit_exprs(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Cmd::Skip | Cmd::Null => {}
            Cmd::Assign { expr, .. } => f(expr),
            Cmd::Sample { dist, .. } => dist.params.iter().chain(&dist.args).for_each(&mut *f),
            Cmd::Seq(a, b) => {
                a.visit_exprs(f);
                b.visit_exprs(f);
            }
            Cmd::If { cond, then_branch, else_branch, .. } => {
                f(cond);
                then_branch.visit_exprs(f);
                else_branch.visit_exprs(f);
            }
            Cmd::While { cond, body, .. } => {
                f(cond);
                body.visit_exprs(f);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Cmd::Seq(a, b) | Cmd::If { then_branch: a, else_branch: b, .. } => 1 + a.size() + b.size(),
            Cmd::While { body, .. } => 1 + body.size(),
            _ => 1,
        }
    }
}

/// `[while b do c]_n`: `if b then null else skip` at 0, and
/// `if b then (c; [while b do c]_{n-1}) else skip` above.
pub fn desugar_bounded(cond: &Expr, body: &Cmd, n: usize) -> Cmd {
    let mut acc = Cmd::if_(cond.clone(), Cmd::Null, Cmd::Skip);
    for _ in 0..n {
        acc = Cmd::if_(cond.clone(), Cmd::seq(body.clone(), acc), Cmd::Skip);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeDecl {
    pub name: String,
    pub def: Ty,
}

/// `const` and `param` declarations; params may be overridden at load time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: Ty,
    pub value: Expr,
    pub is_param: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpDecl {
    pub name: String,
    pub args: Vec<Ty>,
    pub ret: Ty,
    /// Lipschitz bound of the result in the named argument under L1 adjacency.
    pub sensitivity: Option<(String, Rational)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Prelude {
    pub types: Vec<TypeDecl>,
    pub globals: Vec<GlobalDecl>,
    pub ops: Vec<OpDecl>,
}

/// Ordered, duplicate-free variable declarations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TypingContext {
    vars: Vec<(String, Ty)>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a declaration; returns false if the variable is already present.
    pub fn declare(&mut self, name: &str, ty: Ty) -> bool {
        if self.lookup(name).is_some() {
            return false;
        }
        self.vars.push((name.to_string(), ty));
        true
    }

    pub fn lookup(&self, name: &str) -> Option<&Ty> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, Ty)> {
        self.vars.iter()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub prelude: Prelude,
    pub ctx: TypingContext,
    pub body: Cmd,
}
