use std::fmt::{self, Display, Formatter, Write};

use super::{AffinePredicate, Body, HyperFormula, NamedPredicate, Predicate, Quantifier};

// `{:?}` on f64 is the shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v:?}")
}

impl Display for AffinePredicate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            write!(f, "{}*x[{}][{}] + ", num(t.coef), t.var, t.dim)?;
        }
        write!(f, "{} >= 0", num(self.constant))
    }
}

impl Display for NamedPredicate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            NamedPredicate::InBox { var, dims, lo, hi } => {
                let parts: Vec<String> = dims
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(d, (a, b))| format!("{d}:[{},{}]", num(*a), num(*b)))
                    .collect();
                write!(f, "inbox({var}; {})", parts.join(", "))
            }
            NamedPredicate::StateEq { a, b, dims, tol } => {
                let ds: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                write!(f, "eq({a}, {b}; {}; {})", ds.join(","), num(*tol))
            }
        }
    }
}

impl Display for Predicate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Affine(a) => a.fmt(f),
            Predicate::Named(n) => n.fmt(f),
        }
    }
}

fn child(f: &mut Formatter<'_>, b: &Body) -> fmt::Result {
    if b.is_atomic() {
        write!(f, "{b}")
    } else {
        write!(f, "({b})")
    }
}

impl Display for Body {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Body::True => f.write_str("true"),
            Body::Pred(p) => p.fmt(f),
            Body::Not(b) => {
                f.write_char('!')?;
                child(f, b)
            }
            Body::And(v) | Body::Or(v) => {
                let op = if matches!(self, Body::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, b) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    child(f, b)?;
                }
                Ok(())
            }
            Body::Implies(a, b) => {
                child(f, a)?;
                f.write_str(" -> ")?;
                child(f, b)
            }
            Body::Until(i, a, b) => {
                child(f, a)?;
                write!(f, " U[{},{}] ", i.lo, i.hi)?;
                child(f, b)
            }
            Body::Eventually(i, b) => {
                write!(f, "F[{},{}] ", i.lo, i.hi)?;
                child(f, b)
            }
            Body::Always(i, b) => {
                write!(f, "G[{},{}] ", i.lo, i.hi)?;
                child(f, b)
            }
        }
    }
}

impl Display for HyperFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix.0 {
            let kw = match q {
                Quantifier::Exists => "exists",
                Quantifier::Forall => "forall",
            };
            write!(f, "{kw} {v}. ")?;
        }
        self.body.fmt(f)
    }
}
