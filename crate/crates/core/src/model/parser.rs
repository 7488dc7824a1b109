//! Lexer and recursive-descent parser for model expressions.

use super::ast::{number_fits_u32, BinOp, CmpOp, Expr, Func};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(&'static str),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(t) => format!("number '{t}'"),
            Tok::Ident(t) => format!("'{t}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 13] = ["<=", ">=", "+", "-", "*", "/", "^", "(", ")", ",", "<", ">", "="];

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let begin = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            push(&mut out, Tok::Num(chars[begin..i].iter().collect()));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            push(&mut out, Tok::Ident(chars[begin..i].iter().collect()));
        } else if c == '≤' || c == '≥' {
            i += 1;
            push(&mut out, Tok::Sym(if c == '≤' { "<=" } else { ">=" }));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                return Err(Error::Parse {
                    line,
                    column: col,
                    message: format!("unexpected character '{c}'"),
                    expected: "an operator, number, or identifier".into(),
                });
            };
            i += sym.chars().count();
            push(&mut out, Tok::Sym(sym));
        }
        col += i - begin;
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// Parses an expression; variables are `x1, x2, …` or, when given, the input `names`.
pub struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    names: &'a [String],
}

const KEYWORDS: [&str; 4] = ["and", "or", "not", "if"];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name) || Func::from_name(name).is_some()
}

const ATOM_START: &str = "number, identifier, '(', '-', or 'not'";

impl<'a> Parser<'a> {
    pub fn new(text: &str, names: &'a [String]) -> Result<Self> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            names,
        })
    }

    pub fn parse(mut self) -> Result<Expr> {
        if self.peek().tok == Tok::End {
            return Err(self.error("empty expression", ATOM_START));
        }
        let e = self.or_expr()?;
        if self.peek().tok != Tok::End {
            return Err(self.error(
                &format!("unexpected {}", self.peek().tok.describe()),
                "an operator, ')', or end of input",
            ));
        }
        Ok(e)
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(t) if *t == s)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(t) if t == w)
    }

    fn error(&self, message: &str, expected: &str) -> Error {
        let t = self.peek();
        Error::Parse {
            line: t.line,
            column: t.column,
            message: message.to_string(),
            expected: expected.to_string(),
        }
    }

    fn expect_sym(&mut self, s: &str, expected: &str) -> Result<()> {
        if self.at_sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("unexpected {}", self.peek().tok.describe()), expected))
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while self.at_word("or") {
            self.bump();
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.not_expr()?;
        while self.at_word("and") {
            self.bump();
            e = Expr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.at_word("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.cmp()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr> {
        let a = self.sum()?;
        let op = match &self.peek().tok {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=") => CmpOp::Eq,
            _ => return Ok(a),
        };
        self.bump();
        Ok(Expr::Cmp(op, Box::new(a), Box::new(self.sum()?)))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.at_sym("+") {
                BinOp::Add
            } else if self.at_sym("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            self.bump();
            e = Expr::Bin(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.pow()?;
        loop {
            let op = if self.at_sym("*") {
                BinOp::Mul
            } else if self.at_sym("/") {
                BinOp::Div
            } else {
                return Ok(e);
            };
            self.bump();
            e = Expr::Bin(op, Box::new(e), Box::new(self.pow()?));
        }
    }

    fn pow(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if !self.at_sym("^") {
            return Ok(base);
        }
        self.bump();
        let exponent = match &self.peek().tok {
            Tok::Num(text) => {
                let value = parse_rational(text).ok();
                value.as_ref().and_then(number_fits_u32)
            }
            _ => None,
        };
        match exponent {
            Some(n) => {
                self.bump();
                Ok(Expr::Pow(Box::new(base), n))
            }
            None => {
                let msg = match &self.peek().tok {
                    Tok::Num(t) => format!("exponent '{t}' is not a nonnegative integer"),
                    other => format!("unexpected {}", other.describe()),
                };
                Err(self.error(&msg, "integer"))
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.at_sym("-") {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(text) => {
                self.bump();
                let value: Rational = parse_rational(&text)
                    .map_err(|_| self.error(&format!("malformed number '{text}'"), "number"))?;
                Ok(Expr::Num(value))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.or_expr()?;
                self.expect_sym(")", "')' or an operator")?;
                Ok(e)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) || name == "if" => {
                self.bump();
                if self.at_sym("(") {
                    return self.call(&name, t.line, t.column);
                }
                self.variable(&name, t.line, t.column)
            }
            ref other => Err(self.error(&format!("unexpected {}", other.describe()), ATOM_START)),
        }
    }

    fn variable(&self, name: &str, line: usize, column: usize) -> Result<Expr> {
        if let Some(k) = self.names.iter().position(|n| n == name) {
            return Ok(Expr::Var(k + 1));
        }
        if let Some(i) = name.strip_prefix('x').and_then(|s| {
            (!s.starts_with('0')).then(|| s.parse::<usize>().ok()).flatten()
        }) {
            return Ok(Expr::Var(i));
        }
        Err(Error::UnknownIdentifier(format!("{name} at {line}:{column}")))
    }

    fn call(&mut self, name: &str, line: usize, column: usize) -> Result<Expr> {
        let Some(func) = Func::from_name(name) else {
            return Err(Error::UnknownIdentifier(format!("function {name} at {line}:{column}")));
        };
        self.bump(); // (
        let mut args = Vec::new();
        if !self.at_sym(")") {
            args.push(self.or_expr()?);
            while self.at_sym(",") {
                self.bump();
                args.push(self.or_expr()?);
            }
        }
        self.expect_sym(")", "',', ')', or an operator")?;
        if args.len() != func.arity() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: func.arity(),
                found: args.len(),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

/// Parses with the default variable names `x1, x2, …`.
pub fn parse(text: &str) -> Result<Expr> {
    Parser::new(text, &[])?.parse()
}

pub fn parse_with_names(text: &str, names: &[String]) -> Result<Expr> {
    Parser::new(text, names)?.parse()
}
