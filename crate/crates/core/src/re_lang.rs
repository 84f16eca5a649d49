//! Restricted English: a five-slot requirement template (scope, condition,
//! component, timing, response) with a deterministic grammar, a total
//! lowering to LTLf and a canonical rendering.
//!
//! ```text
//! requirement := scope "," [ "when" bexpr "," ] "the" component "shall"
//!                timing "satisfy" bexpr [ "." ]
//! scope       := "globally" | "while" bexpr
//! timing      := "always" | "eventually" | "immediately"
//!              | "until" bexpr | "within" count ( "frame" | "frames" )
//! component   := [a-z][a-z0-9_]*
//! count       := positive decimal integer
//! ```
//!
//! `bexpr` is the propositional fragment of the LTLf grammar. A `when` or
//! `while` expression ends at the next top-level comma, an `until`
//! expression at the word `satisfy`. Keywords are case-insensitive.
//!
//! Lowering table (`r` response, `c` condition, `w` while-expression):
//!
//! | timing        | obligation at a trigger          |
//! |---------------|----------------------------------|
//! | `always`      | `r`                              |
//! | `immediately` | `r`                              |
//! | `eventually`  | `F r`                            |
//! | `until u`     | `r U u`                          |
//! | `within k`    | `r \| X (r \| X (... r))`, k frames |
//!
//! The body is `c -> obligation` (or the bare obligation without a
//! condition); `globally` gives `G body`, `while w` gives `G (w -> body)`.

use serde::{Deserialize, Serialize};

use crate::ltlf::{is_valid_prop_name, parse_propositional, Formula, LtlfError, PropSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReError {
    #[error("column {column}: expected {expected}")]
    Grammar { column: usize, expected: String },
    #[error("column {column}: {source}")]
    Expression {
        column: usize,
        #[source]
        source: LtlfError,
    },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("frame count must be at least 1")]
    ZeroFrames,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "expr", rename_all = "snake_case")]
pub enum Scope {
    Globally,
    While(Formula),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum Timing {
    Always,
    Eventually,
    Immediately,
    Until(Formula),
    Within(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReSpec {
    pub scope: Scope,
    pub condition: Option<Formula>,
    pub component: String,
    pub timing: Timing,
    pub response: Formula,
}

/// The template grammar, as handed to authoring providers.
pub const RE_GRAMMAR: &str = "\
requirement := scope \",\" [ \"when\" bexpr \",\" ] \"the\" component \"shall\" timing \"satisfy\" bexpr
scope       := \"globally\" | \"while\" bexpr
timing      := \"always\" | \"eventually\" | \"immediately\" | \"until\" bexpr | \"within\" count (\"frame\" | \"frames\")
bexpr       := proposition | \"true\" | \"false\" | \"~\" bexpr | bexpr \"&\" bexpr | bexpr \"|\" bexpr | bexpr \"->\" bexpr | \"(\" bexpr \")\"
component   := lowercase identifier
count       := positive integer
";

const KEYWORDS: &[&str] = &[
    "globally",
    "while",
    "when",
    "the",
    "shall",
    "always",
    "eventually",
    "immediately",
    "until",
    "within",
    "frame",
    "frames",
    "satisfy",
];

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
    props: &'a PropSet,
}

impl<'a> Scanner<'a> {
    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ReError> {
        Err(ReError::Grammar {
            column: self.column(),
            expected: expected.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek_word(&self) -> Option<&'a str> {
        let rest = &self.text[self.pos..];
        let end = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek_word().is_some_and(|w| w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ReError> {
        self.skip_ws();
        if self.at_keyword(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            self.fail(&format!("`{kw}`"))
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ReError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.fail(&format!("`{c}`"))
        }
    }

    /// Propositional expression ending before a top-level comma, before the
    /// keyword `stop_word`, or at the end of input.
    fn bexpr(&mut self, stop_word: Option<&str>, what: &str) -> Result<Formula, ReError> {
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0i32;
        let mut end = self.text.len();
        let mut i = start;
        while i < self.text.len() {
            let rest = &self.text[i..];
            let c = rest.chars().next().expect("in bounds");
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    end = i;
                    break;
                }
                _ => {}
            }
            let boundary = i == start
                || !self.text[..i]
                    .chars()
                    .next_back()
                    .is_some_and(|p| p.is_ascii_alphanumeric() || p == '_');
            if boundary {
                if let Some(stop) = stop_word {
                    let word_end = rest
                        .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                        .unwrap_or(rest.len());
                    if rest[..word_end].eq_ignore_ascii_case(stop) {
                        end = i;
                        break;
                    }
                }
            }
            i += c.len_utf8();
        }
        let raw = &self.text[start..end];
        let trimmed = raw.trim_end();
        let trimmed = if stop_word.is_none() && self.allow_period(end) {
            trimmed.strip_suffix('.').unwrap_or(trimmed).trim_end()
        } else {
            trimmed
        };
        if trimmed.is_empty() {
            return self.fail(what);
        }
        let col0 = self.column();
        let f = parse_propositional(trimmed, Some(self.props)).map_err(|e| match e {
            LtlfError::UnknownProposition(p) => ReError::UnknownProposition(p),
            LtlfError::Syntax { column, .. } => ReError::Expression {
                column: col0 + column - 1,
                source: e,
            },
            other => ReError::Expression {
                column: col0,
                source: other,
            },
        })?;
        self.pos = end;
        Ok(f)
    }

    fn allow_period(&self, end: usize) -> bool {
        end == self.text.len()
    }

    fn identifier(&mut self, what: &str) -> Result<String, ReError> {
        self.skip_ws();
        match self.peek_word() {
            Some(w) if is_valid_prop_name(w) && !KEYWORDS.contains(&w) => {
                self.pos += w.len();
                Ok(w.to_string())
            }
            _ => self.fail(what),
        }
    }

    fn count(&mut self) -> Result<u32, ReError> {
        self.skip_ws();
        match self.peek_word() {
            Some(w) if w.chars().all(|c| c.is_ascii_digit()) => {
                let k: u32 = match w.parse() {
                    Ok(k) => k,
                    Err(_) => return self.fail("a frame count"),
                };
                if k == 0 {
                    return Err(ReError::ZeroFrames);
                }
                self.pos += w.len();
                Ok(k)
            }
            _ => self.fail("a frame count"),
        }
    }

    fn end(&mut self) -> Result<(), ReError> {
        self.skip_ws();
        if self.pos < self.text.len() {
            return self.fail("end of requirement");
        }
        Ok(())
    }
}

/// Parses one Restricted English requirement.
pub fn parse_re(text: &str, props: &PropSet) -> Result<ReSpec, ReError> {
    let mut s = Scanner {
        text: text.trim(),
        pos: 0,
        props,
    };
    s.skip_ws();
    let scope = if s.at_keyword("globally") {
        s.keyword("globally")?;
        Scope::Globally
    } else if s.at_keyword("while") {
        s.keyword("while")?;
        Scope::While(s.bexpr(None, "a scope expression")?)
    } else {
        return s.fail("`globally` or `while`");
    };
    s.punct(',')?;
    s.skip_ws();
    let condition = if s.at_keyword("when") {
        s.keyword("when")?;
        let c = s.bexpr(None, "a condition")?;
        s.punct(',')?;
        Some(c)
    } else {
        None
    };
    s.keyword("the")?;
    let component = s.identifier("a component name")?;
    s.keyword("shall")?;
    s.skip_ws();
    let timing = match s.peek_word().map(str::to_ascii_lowercase).as_deref() {
        Some("always") => {
            s.keyword("always")?;
            Timing::Always
        }
        Some("eventually") => {
            s.keyword("eventually")?;
            Timing::Eventually
        }
        Some("immediately") => {
            s.keyword("immediately")?;
            Timing::Immediately
        }
        Some("until") => {
            s.keyword("until")?;
            Timing::Until(s.bexpr(Some("satisfy"), "an until expression")?)
        }
        Some("within") => {
            s.keyword("within")?;
            let k = s.count()?;
            s.skip_ws();
            if s.at_keyword("frames") {
                s.keyword("frames")?;
            } else {
                s.keyword("frame").or_else(|_| s.fail("`frame` or `frames`"))?;
            }
            Timing::Within(k)
        }
        _ => return s.fail("a timing (`always`, `eventually`, `immediately`, `until`, `within`)"),
    };
    s.keyword("satisfy")?;
    let response = s.bexpr(None, "a response")?;
    s.skip_ws();
    if s.text[s.pos..].starts_with('.') {
        s.pos += 1;
    }
    s.end()?;
    Ok(ReSpec {
        scope,
        condition,
        component,
        timing,
        response,
    })
}

/// Canonical text; `parse_re(render_re(s)) == s`.
pub fn render_re(spec: &ReSpec) -> String {
    let mut out = match &spec.scope {
        Scope::Globally => "globally".to_string(),
        Scope::While(w) => format!("while {w}"),
    };
    if let Some(c) = &spec.condition {
        out.push_str(&format!(", when {c}"));
    }
    let timing = match &spec.timing {
        Timing::Always => "always".to_string(),
        Timing::Eventually => "eventually".to_string(),
        Timing::Immediately => "immediately".to_string(),
        Timing::Until(u) => format!("until {u}"),
        Timing::Within(1) => "within 1 frame".to_string(),
        Timing::Within(k) => format!("within {k} frames"),
    };
    out.push_str(&format!(
        ", the {} shall {timing} satisfy {}",
        spec.component, spec.response
    ));
    out
}

/// Deterministic template lowering.
pub fn lower_to_ltlf(spec: &ReSpec) -> Formula {
    let r = spec.response.clone();
    let obligation = match &spec.timing {
        Timing::Always | Timing::Immediately => r,
        Timing::Eventually => Formula::eventually(r),
        Timing::Until(u) => Formula::until(r, u.clone()),
        Timing::Within(k) => {
            let mut f = r.clone();
            for _ in 1..*k {
                f = Formula::or(r.clone(), Formula::next(f));
            }
            f
        }
    };
    let body = match &spec.condition {
        Some(c) => Formula::implies(c.clone(), obligation),
        None => obligation,
    };
    match &spec.scope {
        Scope::Globally => Formula::always(body),
        Scope::While(w) => Formula::always(Formula::implies(w.clone(), body)),
    }
}

/// Trigger condition of a requirement, if it has one: the `when`
/// expression, conjoined with the `while` expression when both exist.
pub fn trigger(spec: &ReSpec) -> Option<Formula> {
    match (&spec.scope, &spec.condition) {
        (Scope::Globally, None) => None,
        (Scope::Globally, Some(c)) => Some(c.clone()),
        (Scope::While(w), None) => Some(w.clone()),
        (Scope::While(w), Some(c)) => Some(Formula::and(w.clone(), c.clone())),
    }
}
