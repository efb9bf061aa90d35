use std::fmt;

use super::{Formula, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Op(name, args) if args.is_empty() => f.write_str(name),
            Term::Op(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// Binding strength: `|` = 1, `&` = 2, prefix and atoms = 3.
// `tail` is true when nothing can follow the subformula, so a quantifier
// there may extend to the right without parentheses.
fn write_formula(u: &Formula, f: &mut fmt::Formatter<'_>, prec: u8, tail: bool) -> fmt::Result {
    match u {
        Formula::Eq(a, b) => write!(f, "{a} == {b}"),
        Formula::Rel(name, args) => write!(f, "{}", Term::Op(name.clone(), args.clone())),
        Formula::Not(inner) => {
            f.write_str("!")?;
            if matches!(**inner, Formula::Eq(..)) {
                f.write_str("(")?;
                write_formula(inner, f, 0, true)?;
                f.write_str(")")
            } else {
                write_formula(inner, f, 3, tail)
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (own, sym) = if matches!(u, Formula::And(..)) { (2, " & ") } else { (1, " | ") };
            let paren = prec > own;
            let tail = tail || paren;
            if paren {
                f.write_str("(")?;
            }
            write_formula(a, f, own, false)?;
            f.write_str(sym)?;
            write_formula(b, f, own + 1, tail)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Formula::Exists(x, body) | Formula::Forall(x, body) => {
            let kw = if matches!(u, Formula::Exists(..)) { "exists" } else { "forall" };
            if tail {
                write!(f, "{kw} {x}. ")?;
                write_formula(body, f, 0, true)
            } else {
                write!(f, "({kw} {x}. ")?;
                write_formula(body, f, 0, true)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f, 0, true)
    }
}
