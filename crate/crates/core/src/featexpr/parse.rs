//! Recursive-descent parser for the feature-expression surface syntax.
//!
//! Grammar: `true | false | IDENT | !e | e & e | e "|" e | e -> e |
//! e xor e | (e)`. Precedence, tightest first: `!`, `&`, `|`, `xor`,
//! `->`; all binary operators associate to the left. `a -> b` desugars
//! to `!a | b` and `a xor b` to `(a | b) & !(a & b)`, so parsed
//! expressions contain core connectives only.

use super::{FeatExpr, FeatureUniverse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    True,
    False,
    Xor,
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
}

struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text: text.as_bytes(), pos: 0 }
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize)>> {
        let mut out = Vec::new();
        while self.pos < self.text.len() {
            let start = self.pos;
            let byte = self.text[self.pos];
            match byte {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                    continue;
                }
                b'!' => {
                    self.pos += 1;
                    out.push((Token::Bang, start));
                }
                b'&' => {
                    self.pos += 1;
                    out.push((Token::Amp, start));
                }
                b'|' => {
                    self.pos += 1;
                    out.push((Token::Pipe, start));
                }
                b'(' => {
                    self.pos += 1;
                    out.push((Token::LParen, start));
                }
                b')' => {
                    self.pos += 1;
                    out.push((Token::RParen, start));
                }
                b'-' => {
                    if self.text.get(self.pos + 1) == Some(&b'>') {
                        self.pos += 2;
                        out.push((Token::Arrow, start));
                    } else {
                        return Err(Error::Syntax {
                            pos: start,
                            msg: "expected `->`".to_string(),
                        });
                    }
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.text.len()
                        && (self.text[self.pos].is_ascii_alphanumeric()
                            || self.text[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let word = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
                    let token = match word {
                        "true" => Token::True,
                        "false" => Token::False,
                        "xor" => Token::Xor,
                        _ => Token::Ident(word.to_string()),
                    };
                    out.push((token, start));
                }
                other => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{}`", other as char),
                    });
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    universe: &'a FeatureUniverse,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        token
    }

    // lowest precedence: e -> e, left-associative
    fn implies(&mut self) -> Result<FeatExpr> {
        let mut lhs = self.xor()?;
        while self.peek() == Some(&Token::Arrow) {
            self.bump();
            let rhs = self.xor()?;
            lhs = lhs.negate().or(&rhs);
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<FeatExpr> {
        let mut lhs = self.or_expr()?;
        while self.peek() == Some(&Token::Xor) {
            self.bump();
            let rhs = self.or_expr()?;
            lhs = lhs.or(&rhs).and(&lhs.and(&rhs).negate());
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> Result<FeatExpr> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Token::Pipe) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = lhs.or(&rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<FeatExpr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::Amp) {
            self.bump();
            let rhs = self.unary()?;
            lhs = lhs.and(&rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FeatExpr> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Bang) => Ok(self.unary()?.negate()),
            Some(Token::True) => Ok(FeatExpr::top(self.universe)),
            Some(Token::False) => Ok(FeatExpr::bottom(self.universe)),
            Some(Token::Ident(name)) => FeatExpr::atom(self.universe, &name),
            Some(Token::LParen) => {
                let inner = self.implies()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::Syntax { pos: self.here(), msg: "expected `)`".to_string() }),
                }
            }
            Some(other) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected token `{other:?}`"),
            }),
            None => Err(Error::Syntax { pos, msg: "unexpected end of expression".to_string() }),
        }
    }
}

/// Parses and binds an expression; atoms must name features of the
/// universe.
pub fn parse_featexpr(text: &str, universe: &FeatureUniverse) -> Result<FeatExpr> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser { tokens, pos: 0, universe, end: text.len() };
    let expr = parser.implies()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Syntax {
            pos: parser.here(),
            msg: "trailing input after expression".to_string(),
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featexpr::Configuration;

    fn uni() -> FeatureUniverse {
        FeatureUniverse::new(["MULTIPLE_DRUGS", "CHECK_DRUG_TYPE", "A", "B", "C"]).unwrap()
    }

    #[test]
    fn literals() {
        let u = uni();
        assert_eq!(parse_featexpr("true", &u).unwrap().text(), "true");
        assert_eq!(parse_featexpr("false", &u).unwrap().text(), "false");
    }

    #[test]
    fn xor_desugars_to_core_connectives() {
        let u = uni();
        let parsed = parse_featexpr("A xor B", &u).unwrap();
        let expanded = parse_featexpr("(A | B) & !(A & B)", &u).unwrap();
        assert_eq!(parsed, expanded);
    }

    #[test]
    fn implication_desugars() {
        let u = uni();
        let parsed = parse_featexpr("MULTIPLE_DRUGS -> CHECK_DRUG_TYPE", &u).unwrap();
        let expanded = parse_featexpr("!MULTIPLE_DRUGS | CHECK_DRUG_TYPE", &u).unwrap();
        assert_eq!(parsed, expanded);
    }

    #[test]
    fn precedence_and_left_associativity() {
        let u = uni();
        // ! binds tighter than &, & tighter than |, | tighter than xor,
        // xor tighter than ->
        let parsed = parse_featexpr("!A & B | C xor A -> B", &u).unwrap();
        let explicit = parse_featexpr("((((!A) & B) | C) xor A) -> B", &u).unwrap();
        assert_eq!(parsed, explicit);
        let chain = parse_featexpr("A -> B -> C", &u).unwrap();
        let left = parse_featexpr("(A -> B) -> C", &u).unwrap();
        assert_eq!(chain, left);
    }

    #[test]
    fn reports_position_on_syntax_error() {
        let u = uni();
        match parse_featexpr("A & & B", &u) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_features() {
        let u = uni();
        assert!(matches!(
            parse_featexpr("A & UNKNOWN", &u),
            Err(Error::UnknownFeature { .. })
        ));
    }

    #[test]
    fn desugared_implication_evaluates_correctly() {
        let u = uni();
        let expr = parse_featexpr("MULTIPLE_DRUGS -> CHECK_DRUG_TYPE", &u).unwrap();
        let md_only = Configuration::from_features(&u, ["MULTIPLE_DRUGS"]).unwrap();
        let both =
            Configuration::from_features(&u, ["MULTIPLE_DRUGS", "CHECK_DRUG_TYPE"]).unwrap();
        assert!(!md_only.satisfies(&expr).unwrap());
        assert!(both.satisfies(&expr).unwrap());
        assert!(Configuration::empty(&u).satisfies(&expr).unwrap());
    }
}
