//! Recursive-descent parser for the polynomial text syntax.
//!
//! ```text
//! poly   := ws sign? term (ws ('+' | '-') ws term)* ws
//! term   := int ('*'? factor)* | factor ('*'? factor)*
//! factor := 'u' digits? ('^' sign? int)?
//! ```
//! `u` alone means `u1`. The dimension is the largest variable index seen.

use num_bigint::BigInt;

use super::{Exponent, LaurentPoly};
use crate::error::{Error, Result};

/// Parses a polynomial, inferring the dimension from the variables used.
pub fn parse(src: &str) -> Result<LaurentPoly> {
    parse_terms(src).and_then(|(dim, terms)| LaurentPoly::from_terms(dim, terms))
}

/// Parses with a fixed dimension; variables beyond `dim` are rejected.
pub fn parse_with_dim(src: &str, dim: usize) -> Result<LaurentPoly> {
    let (seen, terms) = parse_terms(src)?;
    if seen > dim {
        return Err(Error::Parse { pos: 0, msg: format!("variable u{seen} exceeds dimension {dim}") });
    }
    let terms = terms.into_iter().map(|(mut e, c)| {
        e.resize(dim, 0);
        (e, c)
    });
    LaurentPoly::from_terms(dim, terms)
}

type Terms = Vec<(Exponent, BigInt)>;

fn parse_terms(src: &str) -> Result<(usize, Terms)> {
    let mut p = Parser { s: src.as_bytes(), pos: 0, dim: 1 };
    let mut raw: Vec<(Vec<(usize, i64)>, BigInt)> = Vec::new();
    p.ws();
    let mut sign = p.sign().unwrap_or(1);
    loop {
        p.ws();
        let (vars, c) = p.term()?;
        raw.push((vars, c * sign));
        p.ws();
        match p.sign() {
            Some(s) => sign = s,
            None if p.at_end() => break,
            None => return Err(p.err("expected '+', '-' or end of input")),
        }
    }
    let dim = p.dim;
    let terms = raw
        .into_iter()
        .map(|(vars, c)| {
            let mut e = vec![0i64; dim];
            for (k, x) in vars {
                e[k] += x;
            }
            (e, c)
        })
        .collect();
    Ok((dim, terms))
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn sign(&mut self) -> Option<i64> {
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                Some(1)
            }
            Some(b'-') => {
                self.pos += 1;
                Some(-1)
            }
            _ => None,
        }
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<(Vec<(usize, i64)>, BigInt)> {
        let explicit = self.digits().map(|d| d.parse::<BigInt>().expect("digits"));
        let had_coeff = explicit.is_some();
        let coeff = explicit.unwrap_or_else(|| BigInt::from(1));
        let mut vars = Vec::new();
        loop {
            self.ws();
            let save = self.pos;
            if self.peek() == Some(b'*') {
                if !had_coeff && vars.is_empty() {
                    return Err(self.err("'*' without a preceding factor"));
                }
                self.pos += 1;
                self.ws();
                if self.peek() != Some(b'u') {
                    return Err(self.err("expected a variable after '*'"));
                }
            }
            if self.peek() == Some(b'u') {
                vars.push(self.factor()?);
            } else {
                self.pos = save;
                break;
            }
        }
        if vars.is_empty() && !had_coeff {
            return Err(self.err("expected a coefficient or a variable"));
        }
        Ok((vars, coeff))
    }

    fn factor(&mut self) -> Result<(usize, i64)> {
        self.pos += 1; // 'u'
        let index = match self.digits() {
            Some(d) => d.parse::<usize>().map_err(|_| self.err("variable index too large"))?,
            None => 1,
        };
        if index == 0 {
            return Err(self.err("variables are numbered from u1"));
        }
        self.dim = self.dim.max(index);
        self.ws();
        let mut exp = 1i64;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.ws();
            let s = self.sign().unwrap_or(1);
            let d = self.digits().ok_or_else(|| self.err("expected an integer exponent"))?;
            exp = s * d.parse::<i64>().map_err(|_| self.err("exponent too large"))?;
        }
        Ok((index - 1, exp))
    }
}
