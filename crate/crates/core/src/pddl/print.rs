use std::fmt::{self, Display, Formatter, Write};

use num_rational::Rational64;

use super::*;

/// Exact decimal rendering; parsed literals always have a terminating expansion.
pub(crate) fn fmt_rational(v: &Rational64) -> String {
    if *v.denom() == 1 {
        return v.numer().to_string();
    }
    let mut d = *v.denom();
    let mut digits = 0u32;
    while d % 10 == 0 || d % 2 == 0 || d % 5 == 0 {
        if d % 10 == 0 {
            d /= 10;
        } else if d % 2 == 0 {
            d /= 2;
        } else {
            d /= 5;
        }
        digits += 1;
    }
    if d != 1 || digits > 18 {
        return format!("(/ {} {})", v.numer(), v.denom());
    }
    let scale = 10i128.pow(digits);
    let scaled = *v.numer() as i128 * scale / *v.denom() as i128;
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let int = abs / scale as u128;
    let frac = abs % scale as u128;
    let frac = format!("{:0width$}", frac, width = digits as usize);
    format!("{sign}{int}.{}", frac.trim_end_matches('0'))
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Object(o) => f.write_str(o),
        }
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.symbol)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_char(')')
    }
}

impl Display for ArithExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Const(c) => f.write_str(&fmt_rational(c)),
            ArithExpr::Fluent(a) => a.fmt(f),
            ArithExpr::Binary(op, l, r) => write!(f, "({} {l} {r})", op.symbol()),
            ArithExpr::Neg(e) => write!(f, "(- {e})"),
        }
    }
}

impl Display for LiftedCondition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LiftedCondition::Literal { atom, positive: true } => atom.fmt(f),
            LiftedCondition::Literal { atom, positive: false } => write!(f, "(not {atom})"),
            LiftedCondition::Numeric { cmp, lhs, rhs } => write!(f, "({} {lhs} {rhs})", cmp.symbol()),
        }
    }
}

impl Display for LiftedEffect {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LiftedEffect::Add(a) => a.fmt(f),
            LiftedEffect::Delete(a) => write!(f, "(not {a})"),
            LiftedEffect::Numeric { op, fluent, expr } => write!(f, "({} {fluent} {expr})", op.keyword()),
        }
    }
}

fn typed(names: &[TypedName], var: bool) -> String {
    names.iter().map(|n| format!("{}{} - {}", if var { "?" } else { "" }, n.name, n.ty)).collect::<Vec<_>>().join(" ")
}

fn conjunction<T: Display>(items: &[T], indent: &str) -> String {
    let mut s = String::from("(and");
    for i in items {
        let _ = write!(s, "\n{indent}  {i}");
    }
    s.push(')');
    s
}

impl Display for SymbolDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            write!(f, "({})", self.name)
        } else {
            write!(f, "({} {})", self.name, typed(&self.params, true))
        }
    }
}

impl Display for ActionSchema {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "  (:action {}", self.name)?;
        writeln!(f, "    :parameters ({})", typed(&self.params, true))?;
        writeln!(f, "    :precondition {}", conjunction(&self.precondition, "    "))?;
        let mut effects: Vec<String> = self.effects.iter().map(ToString::to_string).collect();
        if self.cost != ArithExpr::constant(1) {
            effects.push(format!("(increase ({TOTAL_COST}) {})", self.cost));
        }
        writeln!(f, "    :effect {})", conjunction(&effects, "    "))
    }
}

impl Display for LiftedDomain {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            let types: Vec<_> = self.types.iter().map(|(t, p)| format!("{t} - {p}")).collect();
            writeln!(f, "  (:types {})", types.join(" "))?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "  (:constants {})", typed(&self.constants, false))?;
        }
        for (kw, decls) in [(":predicates", &self.predicates), (":functions", &self.functions)] {
            if !decls.is_empty() {
                write!(f, "  ({kw}")?;
                for d in decls {
                    write!(f, "\n    {d}")?;
                }
                writeln!(f, ")")?;
            }
        }
        for a in &self.schemata {
            a.fmt(f)?;
        }
        writeln!(f, ")")
    }
}

impl Display for LiftedProblem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        writeln!(f, "  (:objects {})", typed(&self.objects, false))?;
        write!(f, "  (:init")?;
        for a in &self.init_atoms {
            write!(f, "\n    {a}")?;
        }
        for (fl, v) in &self.init_numeric {
            write!(f, "\n    (= {fl} {})", fmt_rational(v))?;
        }
        writeln!(f, ")")?;
        writeln!(f, "  (:goal {}))", conjunction(&self.goal, "  "))
    }
}
