use std::fmt;

use thiserror::Error;

use super::{Primitive, RewardExpr};

pub const MAX_LEN: usize = 1024;
pub const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Empty,
    TooLong(usize),
    UnexpectedChar(char),
    InvalidNumber(String),
    UnknownPrimitive(String),
    /// An identifier not followed by `()`.
    ExpectedCall(String),
    UnbalancedParens,
    UnexpectedToken(String),
    UnexpectedEnd,
    TrailingInput(String),
    TooDeep,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::TooLong(n) => write!(f, "expression is {n} bytes, limit is {MAX_LEN}"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::UnknownPrimitive(s) => write!(f, "unknown primitive `{s}`"),
            ParseErrorKind::ExpectedCall(s) => write!(f, "primitive `{s}` must be called as `{s}()`"),
            ParseErrorKind::UnbalancedParens => write!(f, "unbalanced parentheses"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token `{t}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of expression"),
            ParseErrorKind::TrailingInput(t) => write!(f, "trailing input starting at `{t}`"),
            ParseErrorKind::TooDeep => write!(f, "nesting deeper than {MAX_DEPTH}"),
        }
    }
}

/// A parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(v) => write!(f, "{v}"),
            Token::Ident(s) => f.write_str(s),
            Token::Plus => f.write_str("+"),
            Token::Minus => f.write_str("-"),
            Token::Star => f.write_str("*"),
            Token::Slash => f.write_str("/"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
        }
    }
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                pos += 1;
                continue;
            }
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            tokens.push((start, tok));
            pos += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            if pos < bytes.len() && matches!(bytes[pos], b'e' | b'E') {
                pos += 1;
                if pos < bytes.len() && matches!(bytes[pos], b'+' | b'-') {
                    pos += 1;
                }
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
            }
            let literal = &text[start..pos];
            match literal.parse::<f64>() {
                Ok(v) if v.is_finite() => tokens.push((start, Token::Number(v))),
                _ => return Err(err(start, ParseErrorKind::InvalidNumber(literal.to_string()))),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            tokens.push((start, Token::Ident(text[start..pos].to_string())));
        } else {
            let ch = text[start..].chars().next().unwrap_or('\u{fffd}');
            return Err(err(start, ParseErrorKind::UnexpectedChar(ch)));
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self, depth: usize) -> Result<RewardExpr, ParseError> {
        let mut lhs = self.term(depth)?;
        loop {
            let ctor: fn(Box<RewardExpr>, Box<RewardExpr>) -> RewardExpr = match self.peek() {
                Some(Token::Plus) => RewardExpr::Add,
                Some(Token::Minus) => RewardExpr::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term(depth)?;
            lhs = ctor(Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, depth: usize) -> Result<RewardExpr, ParseError> {
        let mut lhs = self.factor(depth)?;
        loop {
            let ctor: fn(Box<RewardExpr>, Box<RewardExpr>) -> RewardExpr = match self.peek() {
                Some(Token::Star) => RewardExpr::Mul,
                Some(Token::Slash) => RewardExpr::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor(depth)?;
            lhs = ctor(Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self, depth: usize) -> Result<RewardExpr, ParseError> {
        let offset = self.offset();
        match self.next() {
            None => Err(err(offset, ParseErrorKind::UnexpectedEnd)),
            Some((_, Token::Number(v))) => Ok(RewardExpr::Constant(v)),
            Some((_, Token::Ident(name))) => {
                let primitive = Primitive::from_name(&name)
                    .ok_or_else(|| err(offset, ParseErrorKind::UnknownPrimitive(name.clone())))?;
                match (self.next(), self.next()) {
                    (Some((_, Token::LParen)), Some((_, Token::RParen))) => {
                        Ok(RewardExpr::Primitive(primitive))
                    }
                    _ => Err(err(offset, ParseErrorKind::ExpectedCall(name))),
                }
            }
            Some((_, Token::Minus)) => {
                if depth >= MAX_DEPTH {
                    return Err(err(offset, ParseErrorKind::TooDeep));
                }
                Ok(RewardExpr::Neg(Box::new(self.factor(depth + 1)?)))
            }
            Some((_, Token::LParen)) => {
                if depth >= MAX_DEPTH {
                    return Err(err(offset, ParseErrorKind::TooDeep));
                }
                let inner = self.expr(depth + 1)?;
                match self.next() {
                    Some((_, Token::RParen)) => Ok(RewardExpr::Paren(Box::new(inner))),
                    _ => Err(err(offset, ParseErrorKind::UnbalancedParens)),
                }
            }
            Some((o, Token::RParen)) => Err(err(o, ParseErrorKind::UnbalancedParens)),
            Some((o, tok)) => Err(err(o, ParseErrorKind::UnexpectedToken(tok.to_string()))),
        }
    }
}

/// Parses a reward expression.
pub fn parse(text: &str) -> Result<RewardExpr, ParseError> {
    if text.len() > MAX_LEN {
        return Err(err(MAX_LEN, ParseErrorKind::TooLong(text.len())));
    }
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr(0)?;
    match parser.next() {
        None => Ok(expr),
        Some((o, Token::RParen)) => Err(err(o, ParseErrorKind::UnbalancedParens)),
        Some((o, tok)) => Err(err(o, ParseErrorKind::TrailingInput(tok.to_string()))),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse(text).unwrap_err().kind
    }

    #[test]
    fn primitive_call() {
        assert_eq!(
            parse("sum_connected()").unwrap(),
            RewardExpr::Primitive(Primitive::SumConnected)
        );
        assert_eq!(
            parse("  persistence ( ) ").unwrap(),
            RewardExpr::Primitive(Primitive::Persistence)
        );
    }

    #[test]
    fn weighted_sum_tree() {
        let e = parse("0.5*mean_qoe() + 0.5*persistence()").unwrap();
        let half = || Box::new(RewardExpr::Constant(0.5));
        assert_eq!(
            e,
            RewardExpr::Add(
                Box::new(RewardExpr::Mul(
                    half(),
                    Box::new(RewardExpr::Primitive(Primitive::MeanQoe))
                )),
                Box::new(RewardExpr::Mul(
                    half(),
                    Box::new(RewardExpr::Primitive(Primitive::Persistence))
                )),
            )
        );
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse("foo()").unwrap_err();
        assert_eq!(e.offset, 0);
        assert_eq!(e.kind, ParseErrorKind::UnknownPrimitive("foo".into()));
        assert!(e.to_string().contains("unknown primitive"));

        let e = parse("1 + (2 * 3").unwrap_err();
        assert_eq!((e.offset, e.kind), (4, ParseErrorKind::UnbalancedParens));
        let e = parse("1 + 2)").unwrap_err();
        assert_eq!((e.offset, e.kind), (5, ParseErrorKind::UnbalancedParens));
        let e = parse("1 2").unwrap_err();
        assert_eq!((e.offset, e.kind), (2, ParseErrorKind::TrailingInput("2".into())));
        assert_eq!(kind(""), ParseErrorKind::Empty);
        assert_eq!(kind("   "), ParseErrorKind::Empty);
        assert_eq!(kind("1 +"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind("mean_qoe"), ParseErrorKind::ExpectedCall("mean_qoe".into()));
        assert_eq!(kind("1.2.3"), ParseErrorKind::InvalidNumber("1.2.3".into()));
        assert_eq!(kind("1e999"), ParseErrorKind::InvalidNumber("1e999".into()));
        assert_eq!(kind("2 ^ 3"), ParseErrorKind::UnexpectedChar('^'));
        assert_eq!(kind("* 3"), ParseErrorKind::UnexpectedToken("*".into()));
    }

    #[test]
    fn limits() {
        let long = "1+".repeat(600) + "1";
        assert_eq!(kind(&long), ParseErrorKind::TooLong(long.len()));
        let deep = "(".repeat(33) + "1" + &")".repeat(33);
        assert_eq!(kind(&deep), ParseErrorKind::TooDeep);
        let ok = "(".repeat(32) + "1" + &")".repeat(32);
        assert!(parse(&ok).is_ok());
        assert_eq!(kind(&"-".repeat(40)), ParseErrorKind::TooDeep);
    }

    fn leaf() -> impl Strategy<Value = RewardExpr> {
        prop_oneof![
            (0u32..10_000).prop_map(|v| RewardExpr::Constant(f64::from(v) / 100.0)),
            proptest::sample::select(Primitive::ALL.to_vec()).prop_map(RewardExpr::Primitive),
        ]
    }

    // Generates only trees the grammar can produce: left-associative chains
    // at the additive and multiplicative levels, parens and negation on factors.
    fn factor() -> BoxedStrategy<RewardExpr> {
        leaf()
            .prop_recursive(6, 48, 3, |inner| {
            let inner = inner.boxed();
            let expr = additive(inner.clone());
            prop_oneof![
                inner.clone().prop_map(|f| RewardExpr::Neg(Box::new(f))),
                expr.prop_map(|e| RewardExpr::Paren(Box::new(e))),
            ]
        })
            .boxed()
    }

    fn multiplicative(f: BoxedStrategy<RewardExpr>) -> BoxedStrategy<RewardExpr> {
        (f.clone(), prop::collection::vec((any::<bool>(), f), 0..3)).prop_map(|(first, rest)| {
            rest.into_iter().fold(first, |acc, (mul, rhs)| {
                if mul {
                    RewardExpr::Mul(Box::new(acc), Box::new(rhs))
                } else {
                    RewardExpr::Div(Box::new(acc), Box::new(rhs))
                }
            })
        })
        .boxed()
    }

    fn additive(f: BoxedStrategy<RewardExpr>) -> BoxedStrategy<RewardExpr> {
        let t = multiplicative(f);
        (t.clone(), prop::collection::vec((any::<bool>(), t), 0..3)).prop_map(|(first, rest)| {
            rest.into_iter().fold(first, |acc, (add, rhs)| {
                if add {
                    RewardExpr::Add(Box::new(acc), Box::new(rhs))
                } else {
                    RewardExpr::Sub(Box::new(acc), Box::new(rhs))
                }
            })
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in additive(factor())) {
            let text = e.to_string();
            prop_assume!(text.len() <= MAX_LEN);
            match parse(&text) {
                Ok(parsed) => prop_assert_eq!(parsed, e),
                Err(ParseError { kind: ParseErrorKind::TooDeep, .. }) => {}
                Err(other) => prop_assert!(false, "{} failed: {}", text, other),
            }
        }

        #[test]
        fn never_panics_on_text(s in ".{0,200}") {
            let _ = parse(&s);
        }

        #[test]
        fn never_panics_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse(&String::from_utf8_lossy(&bytes));
        }

        #[test]
        fn never_panics_on_grammar_soup(parts in prop::collection::vec(
            prop::sample::select(vec!["(", ")", "+", "-", "*", "/", "1", "0.5", "mean_qoe()", "sum_qoe", " ", "e", "."]),
            0..80,
        )) {
            let _ = parse(&parts.concat());
        }
    }
}
