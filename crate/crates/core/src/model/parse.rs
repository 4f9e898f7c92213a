//! Reader and writer for the line-oriented model file.
//!
//! ```text
//! [mc]
//! initial s0
//! trans s0 a 1/2 s1
//! [dfa]
//! initial q0
//! accepting f
//! trans q0 b f
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::ParseError;
use crate::scalar::{fraction_string, is_probability, Rational};

use super::dfa::Dfa;
use super::mc::Mc;

/// Strips comments and blank lines; yields `(line number, tokens)`.
pub(crate) fn tokenize(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

pub(crate) fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

pub(crate) fn check_ident(line: usize, s: &str) -> Result<(), ParseError> {
    if !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
    {
        Ok(())
    } else {
        Err(syntax(line, format!("invalid identifier '{}'", s)))
    }
}

fn parse_prob(line: usize, s: &str) -> Result<Rational, ParseError> {
    let bad = || syntax(line, format!("invalid probability '{}'", s));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    let r = Rational::new(n, d);
    if !is_probability(&r) {
        return Err(syntax(line, format!("probability '{}' outside [0,1]", s)));
    }
    Ok(r)
}

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Mc,
    Dfa,
}

/// Parses a model file into a validated chain and a normalized automaton over
/// the same alphabet.
pub fn load_model(text: &str) -> Result<(Mc<Rational>, Dfa), ParseError> {
    let mut section = Section::None;
    let mut seen_mc = false;
    let mut seen_dfa = false;

    let mut mc_states = Interner::default();
    let mut letters = Interner::default();
    let mut mc_initial: Option<usize> = None;
    let mut mc_trans: Vec<(usize, usize, usize, Rational)> = Vec::new();

    let mut dfa_states = Interner::default();
    let mut dfa_initial: Option<usize> = None;
    let mut accepting: Vec<usize> = Vec::new();
    let mut dfa_trans: Vec<(usize, usize, usize, usize)> = Vec::new();

    for (line, tok) in tokenize(text) {
        match tok[0] {
            "[mc]" => {
                if seen_mc || seen_dfa {
                    return Err(syntax(line, "[mc] must appear once, before [dfa]"));
                }
                seen_mc = true;
                section = Section::Mc;
                continue;
            }
            "[dfa]" => {
                if !seen_mc {
                    return Err(syntax(line, "[dfa] before [mc]"));
                }
                if seen_dfa {
                    return Err(syntax(line, "duplicate [dfa] section"));
                }
                seen_dfa = true;
                section = Section::Dfa;
                continue;
            }
            _ => {}
        }
        match (section, tok[0]) {
            (Section::None, _) => return Err(syntax(line, "content outside of a section")),
            (Section::Mc, "initial") | (Section::Dfa, "initial") => {
                if tok.len() != 2 {
                    return Err(syntax(line, "expected: initial <state>"));
                }
                check_ident(line, tok[1])?;
                let slot = if section == Section::Mc {
                    (&mut mc_initial, &mut mc_states)
                } else {
                    (&mut dfa_initial, &mut dfa_states)
                };
                if slot.0.is_some() {
                    return Err(syntax(line, "duplicate initial state"));
                }
                *slot.0 = Some(slot.1.intern(tok[1]));
            }
            (Section::Mc, "trans") => {
                if tok.len() != 5 {
                    return Err(syntax(line, "expected: trans <src> <letter> <num>/<den> <dst>"));
                }
                for &t in &[tok[1], tok[2], tok[4]] {
                    check_ident(line, t)?;
                }
                let src = mc_states.intern(tok[1]);
                let a = letters.intern(tok[2]);
                let p = parse_prob(line, tok[3])?;
                let dst = mc_states.intern(tok[4]);
                mc_trans.push((src, a, dst, p));
            }
            (Section::Dfa, "accepting") => {
                if tok.len() != 2 {
                    return Err(syntax(line, "expected: accepting <state>"));
                }
                check_ident(line, tok[1])?;
                accepting.push(dfa_states.intern(tok[1]));
            }
            (Section::Dfa, "trans") => {
                if tok.len() != 4 {
                    return Err(syntax(line, "expected: trans <src> <letter> <dst>"));
                }
                for &t in &tok[1..] {
                    check_ident(line, t)?;
                }
                let src = dfa_states.intern(tok[1]);
                let a = letters.intern(tok[2]);
                let dst = dfa_states.intern(tok[3]);
                dfa_trans.push((line, src, a, dst));
            }
            (_, other) => return Err(syntax(line, format!("unexpected keyword '{}'", other))),
        }
    }
    if !seen_mc {
        return Err(ParseError::MissingSection("mc"));
    }
    if !seen_dfa {
        return Err(ParseError::MissingSection("dfa"));
    }
    let mc_initial = mc_initial.ok_or_else(|| syntax(0, "[mc] has no initial state"))?;
    let dfa_initial = dfa_initial.ok_or_else(|| syntax(0, "[dfa] has no initial state"))?;

    let k = letters.names.len();
    let mut delta: Vec<Vec<Option<usize>>> = vec![vec![None; k]; dfa_states.names.len()];
    for (line, src, a, dst) in dfa_trans {
        match delta[src][a] {
            Some(prev) if prev != dst => {
                return Err(syntax(line, "nondeterministic dfa transition"));
            }
            _ => delta[src][a] = Some(dst),
        }
    }
    let mc = Mc::new(mc_states.names, letters.names.clone(), mc_initial, mc_trans)?;
    let dfa = Dfa::new(dfa_states.names, letters.names, delta, dfa_initial, &accepting)?;
    Ok((mc, dfa))
}

/// Writes a model file that [`load_model`] reads back to the same chain and
/// automaton.
pub fn write_model(mc: &Mc<Rational>, dfa: &Dfa) -> String {
    let mut out = String::new();
    out.push_str("[mc]\n");
    let _ = writeln!(out, "initial {}", mc.state_name(mc.initial()));
    for s in 0..mc.num_states() {
        for e in mc.edges(s) {
            let _ = writeln!(
                out,
                "trans {} {} {} {}",
                mc.state_name(s),
                mc.letter_name(e.letter),
                fraction_string(&e.prob),
                mc.state_name(e.target)
            );
        }
    }
    out.push_str("[dfa]\n");
    let _ = writeln!(out, "initial {}", dfa.state_name(dfa.initial()));
    let _ = writeln!(out, "accepting {}", dfa.state_name(dfa.accepting()));
    for q in 0..dfa.num_states() {
        if q == dfa.accepting() {
            continue;
        }
        for (a, letter) in dfa.letters().iter().enumerate() {
            let _ = writeln!(
                out,
                "trans {} {} {}",
                dfa.state_name(q),
                letter,
                dfa.state_name(dfa.next(q, a))
            );
        }
    }
    out
}
