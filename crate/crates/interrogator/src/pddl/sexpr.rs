//! A small s-expression reader for the PDDL subset.
//!
//! Input is lowercased while tokenizing and `;` starts a comment that runs to
//! the end of the line. Every node remembers where it started so the parser
//! can report errors with a line and column.

use std::fmt;

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// The leading keyword of a list such as `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }
}

#[derive(Debug)]
enum Token {
    Open(Pos),
    Close(Pos),
    Word(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 0;
    let mut word = String::new();
    let mut word_pos = Pos { line, column };
    let mut in_comment = false;

    let flush = |word: &mut String, pos: Pos, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token::Word(std::mem::take(word), pos));
        }
    };

    for ch in text.chars() {
        if ch == '\n' {
            flush(&mut word, word_pos, &mut tokens);
            line += 1;
            column = 0;
            in_comment = false;
            continue;
        }
        column += 1;
        if in_comment {
            continue;
        }
        let here = Pos { line, column };
        match ch {
            ';' => {
                flush(&mut word, word_pos, &mut tokens);
                in_comment = true;
            }
            '(' => {
                flush(&mut word, word_pos, &mut tokens);
                tokens.push(Token::Open(here));
            }
            ')' => {
                flush(&mut word, word_pos, &mut tokens);
                tokens.push(Token::Close(here));
            }
            c if c.is_whitespace() => flush(&mut word, word_pos, &mut tokens),
            c => {
                if word.is_empty() {
                    word_pos = here;
                }
                word.extend(c.to_lowercase());
            }
        }
    }
    flush(&mut word, word_pos, &mut tokens);
    tokens
}

/// Read every top-level expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexpr>, PddlError> {
    let mut stack: Vec<(Vec<Sexpr>, Pos)> = Vec::new();
    let mut top = Vec::new();
    for token in tokenize(text) {
        match token {
            Token::Open(pos) => stack.push((Vec::new(), pos)),
            Token::Close(pos) => {
                let (items, start) = stack.pop().ok_or_else(|| PddlError::Syntax {
                    pos,
                    message: "unbalanced ')'".into(),
                })?;
                let node = Sexpr::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
            Token::Word(w, pos) => match stack.last_mut() {
                Some((parent, _)) => parent.push(Sexpr::Atom(w, pos)),
                None => top.push(Sexpr::Atom(w, pos)),
            },
        }
    }
    if let Some((_, pos)) = stack.pop() {
        return Err(PddlError::Syntax {
            pos,
            message: "unclosed '('".into(),
        });
    }
    Ok(top)
}

/// Read exactly one top-level expression.
pub fn read_one(text: &str) -> Result<Sexpr, PddlError> {
    let mut all = read_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(PddlError::Syntax {
            pos: Pos { line: 1, column: 1 },
            message: "empty input".into(),
        }),
        _ => Err(PddlError::Syntax {
            pos: all[1].pos(),
            message: "trailing input after the first expression".into(),
        }),
    }
}
