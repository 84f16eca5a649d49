use super::Formula;

// Binding strength, loosest first.
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const BINARY_TEMPORAL: u8 = 4;
const UNARY: u8 = 5;
const ATOMIC: u8 = 6;

fn level(f: &Formula) -> u8 {
    use Formula::*;
    match f {
        True | False | Atom(_) => ATOMIC,
        Not(_) | Next(_) | WeakNext(_) | Eventually(_) | Always(_) => UNARY,
        Until(..) | Release(..) => BINARY_TEMPORAL,
        And(..) => AND,
        Or(..) => OR,
        Implies(..) => IMPLIES,
    }
}

/// Prints `f` in the concrete grammar with the fewest parentheses that
/// reparse to the same tree.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, &mut out);
    out
}

fn write_child(f: &Formula, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write(f, out);
        out.push(')');
    } else {
        write(f, out);
    }
}

fn write(f: &Formula, out: &mut String) {
    use Formula::*;
    match f {
        True => out.push_str("true"),
        False => out.push_str("false"),
        Atom(p) => out.push_str(p.as_str()),
        Not(a) => {
            out.push('~');
            write_child(a, level(a) < UNARY, out);
        }
        Next(a) | WeakNext(a) | Eventually(a) | Always(a) => {
            out.push_str(match f {
                Next(_) => "X ",
                WeakNext(_) => "N ",
                Eventually(_) => "F ",
                _ => "G ",
            });
            write_child(a, level(a) < UNARY, out);
        }
        // left-associative
        And(a, b) | Or(a, b) => {
            let (lvl, op) = if matches!(f, And(..)) {
                (AND, " & ")
            } else {
                (OR, " | ")
            };
            write_child(a, level(a) < lvl, out);
            out.push_str(op);
            write_child(b, level(b) <= lvl, out);
        }
        // right-associative
        Until(a, b) | Release(a, b) | Implies(a, b) => {
            let (lvl, op) = match f {
                Until(..) => (BINARY_TEMPORAL, " U "),
                Release(..) => (BINARY_TEMPORAL, " R "),
                _ => (IMPLIES, " -> "),
            };
            write_child(a, level(a) <= lvl, out);
            out.push_str(op);
            write_child(b, level(b) < lvl, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula_free, PropId};
    use super::*;

    fn atom(n: &str) -> Formula {
        Formula::Atom(PropId::new(n).unwrap())
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(print_formula(&Formula::always(atom("p"))), "G p");
        assert_eq!(print_formula(&Formula::True), "true");
        assert_eq!(print_formula(&Formula::until(atom("p"), atom("q"))), "p U q");
        assert_eq!(
            print_formula(&Formula::always(Formula::implies(
                atom("on_path"),
                Formula::eventually(atom("cone_encounter"))
            ))),
            "G (on_path -> F cone_encounter)"
        );
    }

    #[test]
    fn associativity_parentheses() {
        for text in [
            "p & (q & r)",
            "(p U q) U r",
            "p U q U r",
            "(p -> q) -> r",
            "~(p | q)",
            "~~p",
            "X ~G p",
            "F (p U q)",
            "p | q & r",
            "(p | q) & r",
        ] {
            let f = parse_formula_free(text).unwrap();
            assert_eq!(print_formula(&f), text);
        }
    }
}
