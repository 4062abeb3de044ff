//! Recursive-descent parser for growth expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 'n' | 'e' | 'pi' | 'log' '(' expr ')' | 'exp' '(' expr ')'
//!         | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! The presets are `pow(B)`, `poly(a)` and `doubleexp(c, beta)`.

use super::expr::{Expr, GrowthExpr, Number, Preset};
use crate::error::{Error, Result};
use crate::weights::parse_decimal;

pub fn parse_growth(text: &str) -> Result<GrowthExpr> {
    if text.trim().is_empty() {
        return Err(Error::Parse { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(GrowthExpr::new(e.normalize(), text))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
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
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.eat(b'^') {
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        // optional exponent part, only when followed by digits
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mut k = self.pos + 1;
            if k < self.src.len() && matches!(self.src[k], b'+' | b'-') {
                k += 1;
            }
            if k < self.src.len() && self.src[k].is_ascii_digit() {
                while k < self.src.len() && self.src[k].is_ascii_digit() {
                    k += 1;
                }
                self.pos = k;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let exact = parse_decimal(text).map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })?;
        Ok(Expr::Num(Number::exact(exact)))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string();
        match name.as_str() {
            "n" => return Ok(Expr::Var),
            "e" => return Ok(Expr::Num(Number::approx(std::f64::consts::E))),
            "pi" => return Ok(Expr::Num(Number::approx(std::f64::consts::PI))),
            _ => {}
        }
        if self.peek() != Some(b'(') {
            return Err(Error::UnknownIdentifier(name));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::Parse { pos: start, msg: format!("`{name}` takes {k} argument(s), got {}", args.len()) })
            }
        };
        let constant = |e: &Expr| -> Result<Number> {
            e.as_constant()
                .ok_or_else(|| Error::Parse { pos: start, msg: format!("arguments of `{name}` must be constants") })
        };
        match name.as_str() {
            "log" | "ln" => {
                arity(1)?;
                Ok(Expr::Log(Box::new(args.remove(0))))
            }
            "exp" => {
                arity(1)?;
                Ok(Expr::Exp(Box::new(args.remove(0))))
            }
            "pow" => {
                arity(1)?;
                Ok(Expr::Preset(Preset::Pow(constant(&args[0])?)))
            }
            "poly" => {
                arity(1)?;
                Ok(Expr::Preset(Preset::Poly(constant(&args[0])?)))
            }
            "doubleexp" => {
                arity(2)?;
                Ok(Expr::Preset(Preset::DoubleExp(constant(&args[0])?, constant(&args[1])?)))
            }
            _ => Err(Error::UnknownIdentifier(name)),
        }
    }
}
