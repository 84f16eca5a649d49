//! Recursive-descent parser for the concrete LTLf grammar.
//!
//! ```text
//! formula  := implies
//! implies  := or [ "->" implies ]
//! or       := and { "|" and }
//! and      := binary { "&" binary }
//! binary   := unary [ ("U" | "R") binary ]
//! unary    := ("~" | "X" | "N" | "F" | "G") unary | primary
//! primary  := "true" | "false" | prop | "(" formula ")"
//! prop     := [a-z][a-z0-9_]*
//! ```

use super::{Formula, LtlfError, PropId, PropSet};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Arrow,
    Next,
    WeakNext,
    Eventually,
    Always,
    Until,
    Release,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("proposition `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.glyph()),
        }
    }

    fn glyph(&self) -> &'static str {
        match self {
            Tok::True => "true",
            Tok::False => "false",
            Tok::Not => "~",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Arrow => "->",
            Tok::Next => "X",
            Tok::WeakNext => "N",
            Tok::Eventually => "F",
            Tok::Always => "G",
            Tok::Until => "U",
            Tok::Release => "R",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, LtlfError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let single = match c {
            '~' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            'X' => Some(Tok::Next),
            'N' => Some(Tok::WeakNext),
            'F' => Some(Tok::Eventually),
            'G' => Some(Tok::Always),
            'U' => Some(Tok::Until),
            'R' => Some(Tok::Release),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push(Spanned {
                    tok: Tok::Arrow,
                    line: l0,
                    column: c0,
                });
                i += 2;
                col += 2;
                continue;
            }
            return Err(syntax(l0, c0, "expected `->`"));
        }
        if c.is_ascii_lowercase() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_lowercase() || chars[i].is_ascii_digit() || chars[i] == '_')
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            });
            continue;
        }
        return Err(syntax(l0, c0, &format!("unexpected character `{c}`")));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

fn syntax(line: usize, column: usize, message: &str) -> LtlfError {
    LtlfError::Syntax {
        line,
        column,
        message: message.to_string(),
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    props: Option<&'a PropSet>,
    propositional_only: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> LtlfError {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, &message)
    }

    fn formula(&mut self) -> Result<Formula, LtlfError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LtlfError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LtlfError> {
        let mut lhs = self.binary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary(&mut self) -> Result<Formula, LtlfError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until | Tok::Release => {
                self.temporal_allowed()?;
                let op = self.bump().tok;
                let rhs = self.binary()?;
                Ok(if op == Tok::Until {
                    Formula::until(lhs, rhs)
                } else {
                    Formula::release(lhs, rhs)
                })
            }
            _ => Ok(lhs),
        }
    }

    fn temporal_allowed(&self) -> Result<(), LtlfError> {
        if self.propositional_only {
            Err(self.error_here(format!(
                "temporal operator {} not allowed in a propositional expression",
                self.peek().describe()
            )))
        } else {
            Ok(())
        }
    }

    fn unary(&mut self) -> Result<Formula, LtlfError> {
        let wrap: fn(Formula) -> Formula = match self.peek() {
            Tok::Not => Formula::not,
            Tok::Next => Formula::next,
            Tok::WeakNext => Formula::weak_next,
            Tok::Eventually => Formula::eventually,
            Tok::Always => Formula::always,
            _ => return self.primary(),
        };
        if *self.peek() != Tok::Not {
            self.temporal_allowed()?;
        }
        self.bump();
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<Formula, LtlfError> {
        let t = self.bump();
        match t.tok {
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(name) => {
                let id = match self.props {
                    Some(props) => props
                        .lookup(&name)
                        .cloned()
                        .ok_or(LtlfError::UnknownProposition(name))?,
                    None => PropId::new(&name)?,
                };
                Ok(Formula::Atom(id))
            }
            Tok::LParen => {
                let f = self.formula()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(syntax(
                        close.line,
                        close.column,
                        &format!("expected `)`, found {}", close.tok.describe()),
                    ));
                }
                Ok(f)
            }
            other => Err(syntax(
                t.line,
                t.column,
                &format!("expected a formula, found {}", other.describe()),
            )),
        }
    }
}

fn run(
    text: &str,
    props: Option<&PropSet>,
    propositional_only: bool,
) -> Result<Formula, LtlfError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        props,
        propositional_only,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}

/// Parses `text`, requiring every proposition to belong to `props`.
pub fn parse_formula(text: &str, props: &PropSet) -> Result<Formula, LtlfError> {
    run(text, Some(props), false)
}

/// Parses `text`, accepting any well-formed proposition name.
pub fn parse_formula_free(text: &str) -> Result<Formula, LtlfError> {
    run(text, None, false)
}

/// Parses the temporal-operator-free fragment. With `props == None` any
/// well-formed proposition name is accepted.
pub fn parse_propositional(text: &str, props: Option<&PropSet>) -> Result<Formula, LtlfError> {
    run(text, props, true)
}
