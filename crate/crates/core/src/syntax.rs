//! Text form of expressions.
//!
//! ```text
//! expr       := term (('+'|'-') term)*
//! term       := coeff ('*' factor)* | factor ('*' factor)*
//! coeff      := integer ('/' positive-integer)?
//! factor     := var ('^' positive-integer)?
//! var        := ident '[' index-list? (';' multiindex)? ']' | ident
//! multiindex := '(' (integer (',' integer)*)? ')'
//! ```
//!
//! Printing is deterministic: terms run from the highest monomial down and
//! every term carries an explicit coefficient, e.g. `-1*y[;(0,0)]`.

use std::fmt;

use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{Expr, JetVar, Monomial, Q};
use crate::index::{BundleSpec, Coord, MultiIndex, Role};

pub fn var_name(spec: &BundleSpec, v: &JetVar) -> String {
    let fam = spec.family(v.coord.family);
    let idx: Vec<String> = v.coord.comp.iter().map(|i| i.to_string()).collect();
    match (fam.shape.is_empty(), v.jet.is_empty()) {
        (true, true) => fam.name.clone(),
        (true, false) => format!("{}[;{}]", fam.name, v.jet),
        (false, true) => format!("{}[{}]", fam.name, idx.join(",")),
        (false, false) => format!("{}[{};{}]", fam.name, idx.join(","), v.jet),
    }
}

fn write_coeff(f: &mut impl fmt::Write, c: &Q) -> fmt::Result {
    if c.denom().is_one() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn write_monomial(f: &mut impl fmt::Write, spec: &BundleSpec, c: &Q, m: &Monomial) -> fmt::Result {
    write_coeff(f, c)?;
    for (v, e) in m.factors() {
        write!(f, "*{}", var_name(spec, v))?;
        if *e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

/// Display adapter returned by [`Expr::display`].
pub struct ExprDisplay<'a> {
    pub(crate) expr: &'a Expr,
    pub(crate) spec: &'a BundleSpec,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.expr.terms().rev().enumerate() {
            if k == 0 {
                write_monomial(f, self.spec, c, m)?;
            } else if c.is_negative() {
                write!(f, " - ")?;
                write_monomial(f, self.spec, &-c.clone(), m)?;
            } else {
                write!(f, " + ")?;
                write_monomial(f, self.spec, c, m)?;
            }
        }
        Ok(())
    }
}

pub fn print(e: &Expr, spec: &BundleSpec) -> String {
    e.display(spec).to_string()
}

/// Prints at most `max_terms` terms, followed by a count of the omitted ones.
pub fn print_truncated(e: &Expr, spec: &BundleSpec, max_terms: usize) -> String {
    let n = e.num_terms();
    if n <= max_terms {
        return print(e, spec);
    }
    let mut head = Expr::zero();
    for (m, c) in e.terms().rev().take(max_terms) {
        head.add_term(m.clone(), c.clone());
    }
    format!(
        "{} + ... ({} more terms, {} total)",
        print(&head, spec),
        n - max_terms,
        n
    )
}

/// Result of parsing: the expression plus non-fatal diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parsed {
    pub expr: Expr,
    pub warnings: Vec<String>,
}

pub fn parse(text: &str, spec: &BundleSpec) -> Result<Expr> {
    parse_with_warnings(text, spec).map(|p| p.expr)
}

pub fn parse_with_warnings(text: &str, spec: &BundleSpec) -> Result<Parsed> {
    let mut p = Parser::new(text, spec);
    let expr = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Parsed {
        expr,
        warnings: p.warnings,
    })
}

/// Parses a single jet-free variable such as `a[2,1]`, returning the
/// canonical coordinate and its sign, or `None` for a vanishing component.
pub fn parse_coord(text: &str, spec: &BundleSpec) -> Result<Option<(Coord, i8)>> {
    let mut p = Parser::new(text, spec);
    p.skip_ws();
    let (var, sign) = p.var()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    match var {
        Some(v) if !v.jet.is_empty() => Err(p.error("component must not carry a jet")),
        Some(v) => Ok(Some((v.coord, sign))),
        None => Ok(None),
    }
}

pub fn parse_multiindex(text: &str, base_dim: u8) -> Result<MultiIndex> {
    let spec = BundleSpec::new(base_dim, vec![]).expect("trivial bundle");
    let mut p = Parser::new(text, &spec);
    p.skip_ws();
    let m = p.multiindex()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(m)
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    spec: &'a BundleSpec,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn new(text: &str, spec: &'a BundleSpec) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            spec,
            warnings: Vec::new(),
        }
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error_at(&self, pos: usize, msg: impl Into<String>) -> Error {
        let (line, column) = self.location(pos);
        Error::Syntax {
            line,
            column,
            message: msg.into(),
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        self.error_at(self.pos, msg)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        Ok(s.parse().expect("digits parse"))
    }

    fn small(&mut self, what: &str) -> Result<u8> {
        let at = self.pos;
        let n = self.integer()?;
        u8::try_from(n).map_err(|_| self.error_at(at, format!("{what} too large")))
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.pos += 1,
            _ => return Err(self.error("expected identifier")),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = Expr::zero();
        self.skip_ws();
        let mut negate = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        loop {
            let t = self.term()?;
            if negate {
                acc -= &t;
            } else {
                acc += t;
            }
            self.skip_ws();
            if self.eat('+') {
                negate = false;
            } else if self.eat('-') {
                negate = true;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr> {
        self.skip_ws();
        let mut acc = if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            let num = self.integer()?;
            let mut c = Q::from_integer(num);
            if self.eat('/') {
                let at = self.pos;
                let den = self.integer()?;
                if den.is_zero() {
                    return Err(self.error_at(at, "zero denominator"));
                }
                c /= Q::from_integer(den);
            }
            Expr::constant(c)
        } else {
            self.factor()?
        };
        while self.eat('*') {
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        let (var, sign) = self.var()?;
        let mut base = match var {
            Some(v) => Expr::var(v).scale_int(sign as i64),
            None => Expr::zero(),
        };
        if self.eat('^') {
            let at = self.pos;
            let k = self.integer()?;
            let k = u32::try_from(k)
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| self.error_at(at, "exponent must be a positive integer"))?;
            base = base.pow(k);
        }
        Ok(base)
    }

    fn var(&mut self) -> Result<(Option<JetVar>, i8)> {
        self.skip_ws();
        let at = self.pos;
        let name = self.ident()?;
        let family = self
            .spec
            .family_id(&name)
            .map_err(|_| self.error_at(at, format!("unknown family `{name}`")))?;
        let mut indices = Vec::new();
        let mut jet = MultiIndex::empty();
        if self.eat('[') {
            self.skip_ws();
            if !matches!(self.peek(), Some(';') | Some(']')) {
                indices.push(self.small("index")?);
                while self.eat(',') {
                    indices.push(self.small("index")?);
                }
            }
            if self.eat(';') {
                self.skip_ws();
                jet = self.multiindex()?;
            }
            self.expect(']')?;
        }
        let n = self.spec.base_dim();
        if jet.max_entry().is_some_and(|d| d >= n) {
            return Err(self.error_at(at, format!("jet direction out of range 0..{n}")));
        }
        if self.spec.role(family) == Role::Base && !jet.is_empty() {
            return Err(self.error_at(at, "base coordinates carry no jet"));
        }
        let coord = self.spec.coord(family, &indices).map_err(|e| match e {
            Error::IndexOutOfRange(m) => self.error_at(at, format!("index out of range: {m}")),
            other => other,
        })?;
        match coord {
            Some((c, s)) => Ok((Some(JetVar::new(c, jet)), s)),
            None => {
                self.warnings.push(format!(
                    "repeated antisymmetric index in `{name}` at column {}; term vanishes",
                    self.location(at).1
                ));
                Ok((None, 0))
            }
        }
    }

    fn multiindex(&mut self) -> Result<MultiIndex> {
        self.expect('(')?;
        let mut v = Vec::new();
        self.skip_ws();
        if self.peek() != Some(')') {
            v.push(self.small("jet direction")?);
            while self.eat(',') {
                v.push(self.small("jet direction")?);
            }
        }
        self.expect(')')?;
        Ok(MultiIndex::new(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::FieldFamily;

    fn spec() -> BundleSpec {
        BundleSpec::new(
            3,
            vec![
                FieldFamily::new("y", Role::DynamicField, vec![]),
                FieldFamily::new("a", Role::DynamicField, vec![3, 3]).antisym(),
                FieldFamily::new("F", Role::DynamicField, vec![3, 3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn antisymmetric_components() {
        let s = spec();
        let a12 = parse("a[1,2]", &s).unwrap();
        assert_eq!(print(&a12, &s), "1*a[1,2]");
        let a21 = parse("a[2,1]", &s).unwrap();
        assert_eq!(a21, -&a12);
        let p = parse_with_warnings("a[1,1] + y", &s).unwrap();
        assert_eq!(p.expr, parse("y", &s).unwrap());
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn grammar_exercise() {
        let s = spec();
        let e = parse("3/2*y[;(0,0)]^2 - x[0]", &s).unwrap();
        assert_eq!(e.num_terms(), 2);
        assert_eq!(print(&e, &s), "3/2*y[;(0,0)]^2 - 1*x[0]");
        let e2 = parse("a[1,0;(2)]", &s).unwrap();
        assert_eq!(print(&e2, &s), "-1*a[0,1;(2)]");
        assert_eq!(print(&parse("-1*y[;(0,0)]", &s).unwrap(), &s), "-1*y[;(0,0)]");
        assert_eq!(print(&Expr::zero(), &s), "0");
        assert!(parse("y*y*2", &s).is_err());
    }

    #[test]
    fn errors_carry_location() {
        let s = spec();
        match parse("y +\n  q[0]", &s) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("F[1,0,1]", &s), Err(Error::Syntax { .. })));
        assert!(matches!(parse("F[1,3]", &s), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x[0;(1)]", &s), Err(Error::Syntax { .. })));
        assert!(matches!(parse("y^0", &s), Err(Error::Syntax { .. })));
        assert!(matches!(parse("y +", &s), Err(Error::Syntax { .. })));
        assert!(matches!(parse("1/0", &s), Err(Error::Syntax { .. })));
    }

    #[test]
    fn coords_and_multiindices() {
        let s = spec();
        let (c, sign) = parse_coord("a[2,0]", &s).unwrap().unwrap();
        assert_eq!((s.coord_name(&c), sign), ("a[0,2]".to_string(), -1));
        assert!(parse_coord("a[2,2]", &s).unwrap().is_none());
        assert!(parse_coord("a[0,1;(0)]", &s).is_err());
        assert_eq!(parse_multiindex("(1,0)", 2).unwrap(), MultiIndex::new(&[0, 1]));
        assert_eq!(parse_multiindex("()", 2).unwrap(), MultiIndex::empty());
    }

    #[test]
    fn truncation() {
        let s = spec();
        let e = parse("y + y^2 + y^3 + y^4", &s).unwrap();
        let t = print_truncated(&e, &s, 2);
        assert_eq!(t, "1*y^4 + 1*y^3 + ... (2 more terms, 4 total)");
    }
}
