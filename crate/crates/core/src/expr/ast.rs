use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FPart {
    Literal(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    FString(Vec<FPart>),
    Name(String),
    /// `$(inputs.<id>)` before resolution.
    Reference(String),
    /// A resolved reference; never re-tokenized.
    Bound(Value),
    List(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Chained comparison `a < b <= c`.
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Method(Box<Expr>, String, Vec<Expr>),
}

impl Expr {
    /// Visits every node, children after parents.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Literal(_) | Expr::Name(_) | Expr::Reference(_) | Expr::Bound(_) => {}
            Expr::FString(parts) => {
                for part in parts {
                    if let FPart::Expr(e) = part {
                        e.walk(f);
                    }
                }
            }
            Expr::List(items) | Expr::Call(_, items) => items.iter().for_each(|e| e.walk(f)),
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Compare(first, rest) => {
                first.walk(f);
                rest.iter().for_each(|(_, e)| e.walk(f));
            }
            Expr::Method(recv, _, args) => {
                recv.walk(f);
                args.iter().for_each(|e| e.walk(f));
            }
        }
    }

    /// Rebuilds the tree, letting `f` replace any node before descending.
    pub fn try_map<E>(self, f: &mut dyn FnMut(Expr) -> Result<Expr, E>) -> Result<Expr, E> {
        fn all<E>(items: Vec<Expr>, f: &mut dyn FnMut(Expr) -> Result<Expr, E>) -> Result<Vec<Expr>, E> {
            items.into_iter().map(|e| e.try_map(f)).collect()
        }
        fn boxed<E>(e: Box<Expr>, f: &mut dyn FnMut(Expr) -> Result<Expr, E>) -> Result<Box<Expr>, E> {
            Ok(Box::new((*e).try_map(f)?))
        }
        Ok(match f(self)? {
            leaf @ (Expr::Literal(_) | Expr::Name(_) | Expr::Reference(_) | Expr::Bound(_)) => leaf,
            Expr::FString(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                for p in parts {
                    out.push(match p {
                        FPart::Expr(e) => FPart::Expr(e.try_map(f)?),
                        lit => lit,
                    });
                }
                Expr::FString(out)
            }
            Expr::List(items) => Expr::List(all(items, f)?),
            Expr::Call(name, args) => Expr::Call(name, all(args, f)?),
            Expr::Unary(op, e) => Expr::Unary(op, boxed(e, f)?),
            Expr::Binary(op, a, b) => Expr::Binary(op, boxed(a, f)?, boxed(b, f)?),
            Expr::And(a, b) => Expr::And(boxed(a, f)?, boxed(b, f)?),
            Expr::Or(a, b) => Expr::Or(boxed(a, f)?, boxed(b, f)?),
            Expr::Compare(first, rest) => {
                let first = boxed(first, f)?;
                let mut out = Vec::with_capacity(rest.len());
                for (op, e) in rest {
                    out.push((op, e.try_map(f)?));
                }
                Expr::Compare(first, out)
            }
            Expr::Method(recv, name, args) => Expr::Method(boxed(recv, f)?, name, all(args, f)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Return(Option<Expr>),
    /// `raise Exception(<message>)`
    Raise(Expr),
    If {
        branches: Vec<(Expr, Vec<Stmt>)>,
        otherwise: Option<Vec<Stmt>>,
    },
    Assign(String, Expr),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub line: usize,
}
