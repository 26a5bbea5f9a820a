//! Recursive-descent parser for rate-function expressions in `n`.
//!
//! ```text
//! expr   := prod ('+' prod)*
//! prod   := term ('*' term)*
//! term   := factor ('^' factor)?
//! factor := number | 'n' | 'log' '(' expr ')' | '(' expr ')'
//! ```

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    N,
    Log(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
}

impl Node {
    /// Evaluates at `n`, given both `n` and `ln n` so that `log(n)` stays
    /// accurate when `n` itself overflows `f64`.
    pub fn eval(&self, n: f64, ln_n: f64) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::N => n,
            Node::Log(inner) => match **inner {
                Node::N => ln_n,
                _ => inner.eval(n, ln_n).ln(),
            },
            Node::Add(a, b) => a.eval(n, ln_n) + b.eval(n, ln_n),
            Node::Mul(a, b) => a.eval(n, ln_n) * b.eval(n, ln_n),
            Node::Pow(a, b) => a.eval(n, ln_n).powf(b.eval(n, ln_n)),
        }
    }

    pub fn contains_log(&self) -> bool {
        match self {
            Node::Num(_) | Node::N => false,
            Node::Log(_) => true,
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => a.contains_log() || b.contains_log(),
        }
    }

    /// Recognizes `c · n^a · (log n)^b` written as a product of such factors.
    pub fn as_power_log(&self) -> Option<(f64, f64, f64)> {
        let mut c = 1.0;
        let mut a = 0.0;
        let mut b = 0.0;
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                Node::Mul(x, y) => {
                    stack.push(x);
                    stack.push(y);
                }
                Node::Num(v) => c *= v,
                Node::N => a += 1.0,
                Node::Log(inner) if **inner == Node::N => b += 1.0,
                Node::Pow(base, exp) => {
                    let Node::Num(e) = **exp else { return None };
                    match &**base {
                        Node::N => a += e,
                        Node::Log(inner) if **inner == Node::N => b += e,
                        Node::Num(v) => c *= v.powf(e),
                        _ => return None,
                    }
                }
                _ => return None,
            }
        }
        Some((c, a, b))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.prod()?;
        while self.eat(b'+') {
            lhs = Node::Add(Box::new(lhs), Box::new(self.prod()?));
        }
        Ok(lhs)
    }

    fn prod(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while self.eat(b'*') {
            lhs = Node::Mul(Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let base = self.factor()?;
        if self.eat(b'^') {
            return Ok(Node::Pow(Box::new(base), Box::new(self.factor()?)));
        }
        Ok(base)
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'n') if !self.ident_follows(1) => {
                self.pos += 1;
                Ok(Node::N)
            }
            Some(b'l') if self.src[self.pos..].starts_with(b"log") && !self.ident_follows(3) => {
                self.pos += 3;
                self.expect(b'(')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(Node::Log(Box::new(e)))
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn ident_follows(&self, len: usize) -> bool {
        self.src.get(self.pos + len).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut k = i + 1;
            if k < s.len() && (s[k] == b'-' || s[k] == b'+') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                i = k;
                while i < s.len() && s[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Node::Num(v))
            }
            Err(_) => self.err(format!("malformed number '{text}'")),
        }
    }
}

pub fn parse(text: &str) -> Result<Node> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let node = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(node)
}
