use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    If,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "exp" => Self::Exp,
            "abs" => Self::Abs,
            "if" => Self::If,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Exp => "exp",
            Self::Abs => "abs",
            Self::If => "if",
        }
    }

    pub fn arity(self) -> usize {
        if self == Self::If {
            3
        } else {
            1
        }
    }
}

/// Expression tree. Booleans are numbers: comparisons and logical operators yield 0 or 1,
/// and any nonzero value counts as true.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Nonnegative literal (a leading minus parses as negation).
    Num(Rational),
    /// Input `x_i`, 1-based.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Largest variable index used (0 for a constant expression).
    pub fn max_var(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                m = m.max(*i);
            }
        });
        m
    }

    /// First function without an exact rational evaluation, if any.
    pub fn irrational_function(&self) -> Option<Func> {
        let mut found = None;
        self.visit(&mut |e| {
            if let Expr::Call(f @ (Func::Sin | Func::Cos | Func::Exp), _) = e {
                found.get_or_insert(*f);
            }
        });
        found
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Not(a) => a.visit(f),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Total degree when the expression is a polynomial in the inputs.
    pub fn polynomial_degree(&self) -> Option<u32> {
        match self {
            Expr::Num(_) => Some(0),
            Expr::Var(_) => Some(1),
            Expr::Neg(a) => a.polynomial_degree(),
            Expr::Bin(BinOp::Add | BinOp::Sub, a, b) => Some(a.polynomial_degree()?.max(b.polynomial_degree()?)),
            Expr::Bin(BinOp::Mul, a, b) => Some(a.polynomial_degree()? + b.polynomial_degree()?),
            Expr::Bin(BinOp::Div, a, b) => match b.polynomial_degree()? {
                0 => a.polynomial_degree(),
                _ => None,
            },
            Expr::Pow(a, n) => a.polynomial_degree()?.checked_mul(*n),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval(self, x)
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Result<Rational> {
        eval(self, x)
    }

    /// Prints with custom variable names (`names[i-1]` for `x_i`).
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Printer { expr: self, names }
    }
}

/// Arithmetic needed by the evaluator.
trait Value: Clone + PartialOrd + Sized {
    fn lit(r: &Rational) -> Self;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Result<Self>;
    fn neg(self) -> Self;
    fn powi(self, n: u32) -> Self;
    fn abs(self) -> Self;
    fn transcendental(self, f: Func) -> Result<Self>;
}

impl Value for f64 {
    fn lit(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Result<Self> {
        if o == 0.0 {
            Err(Error::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, n: u32) -> Self {
        match i32::try_from(n) {
            Ok(n) => f64::powi(self, n),
            Err(_) => f64::powf(self, n as f64),
        }
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn transcendental(self, f: Func) -> Result<Self> {
        Ok(match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            _ => unreachable!("not transcendental"),
        })
    }
}

impl Value for Rational {
    fn lit(r: &Rational) -> Self {
        r.clone()
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Result<Self> {
        if Zero::is_zero(&o) {
            Err(Error::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, n: u32) -> Self {
        num_traits::pow(self, n as usize)
    }
    fn abs(self) -> Self {
        Signed::abs(&self)
    }
    fn transcendental(self, f: Func) -> Result<Self> {
        Err(Error::NotRational(f.name().to_string()))
    }
}

fn truth<V: Value>(b: bool) -> V {
    if b {
        V::one()
    } else {
        V::zero()
    }
}

fn eval<V: Value>(e: &Expr, x: &[V]) -> Result<V> {
    Ok(match e {
        Expr::Num(r) => V::lit(r),
        Expr::Var(i) => x
            .get(i - 1)
            .cloned()
            .ok_or(Error::DimensionMismatch {
                expected: *i,
                found: x.len(),
            })?,
        Expr::Neg(a) => eval(a, x)?.neg(),
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => a.div(b)?,
            }
        }
        Expr::Pow(a, n) => eval(a, x)?.powi(*n),
        Expr::Cmp(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            truth(match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq => a == b,
            })
        }
        Expr::Not(a) => truth(eval(a, x)?.is_zero()),
        // strict: both operands are always evaluated
        Expr::And(a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            truth(!a.is_zero() && !b.is_zero())
        }
        Expr::Or(a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            truth(!a.is_zero() || !b.is_zero())
        }
        Expr::Call(f, args) => match f {
            Func::Abs => eval(&args[0], x)?.abs(),
            Func::If => {
                let c = eval(&args[0], x)?;
                let (a, b) = (eval(&args[1], x)?, eval(&args[2], x)?);
                if c.is_zero() {
                    b
                } else {
                    a
                }
            }
            _ => eval(&args[0], x)?.transcendental(*f)?,
        },
    })
}

/// Binding strength of each grammar level, loosest first.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Or,
    And,
    Not,
    Cmp,
    Sum,
    Term,
    Pow,
    Unary,
    Atom,
}

fn level(e: &Expr) -> Level {
    match e {
        Expr::Or(..) => Level::Or,
        Expr::And(..) => Level::And,
        Expr::Not(_) => Level::Not,
        Expr::Cmp(..) => Level::Cmp,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => Level::Sum,
        Expr::Bin(..) => Level::Term,
        Expr::Pow(..) => Level::Pow,
        Expr::Neg(_) => Level::Unary,
        Expr::Num(r) if r.is_negative() => Level::Unary,
        _ => Level::Atom,
    }
}

/// Exact decimal text for a rational with a terminating expansion.
fn format_number(r: &Rational) -> Option<String> {
    let neg = r.is_negative();
    let r = Signed::abs(r);
    let mut den = r.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let k = twos.max(fives);
    let scaled = (r * Rational::from_integer(num_traits::pow(BigInt::from(10), k as usize))).to_integer();
    let digits = scaled.to_string();
    let text = if k == 0 {
        digits
    } else {
        let k = k as usize;
        let padded = format!("{digits:0>width$}", width = k + 1);
        let (int, frac) = padded.split_at(padded.len() - k);
        format!("{int}.{frac}")
    };
    Some(if neg { format!("-{text}") } else { text })
}

struct Printer<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl Printer<'_> {
    fn write(&self, e: &Expr, min: Level, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if level(e) < min {
            f.write_str("(")?;
            self.write(e, Level::Or, f)?;
            return f.write_str(")");
        }
        match e {
            Expr::Num(r) => match format_number(r) {
                Some(text) => f.write_str(&text),
                None => write!(f, "({}/{})", r.numer(), r.denom()),
            },
            Expr::Var(i) => match self.names.get(i - 1) {
                Some(name) => f.write_str(name),
                None => write!(f, "x{i}"),
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write(a, Level::Atom, f)
            }
            Expr::Bin(op, a, b) => {
                let (lhs, rhs, sym) = match op {
                    BinOp::Add => (Level::Sum, Level::Term, " + "),
                    BinOp::Sub => (Level::Sum, Level::Term, " - "),
                    BinOp::Mul => (Level::Term, Level::Pow, " * "),
                    BinOp::Div => (Level::Term, Level::Pow, " / "),
                };
                self.write(a, lhs, f)?;
                f.write_str(sym)?;
                self.write(b, rhs, f)
            }
            Expr::Pow(a, n) => {
                self.write(a, Level::Unary, f)?;
                write!(f, "^{n}")
            }
            Expr::Cmp(op, a, b) => {
                self.write(a, Level::Sum, f)?;
                f.write_str(match op {
                    CmpOp::Lt => " < ",
                    CmpOp::Le => " <= ",
                    CmpOp::Gt => " > ",
                    CmpOp::Ge => " >= ",
                    CmpOp::Eq => " = ",
                })?;
                self.write(b, Level::Sum, f)
            }
            Expr::Not(a) => {
                f.write_str("not ")?;
                self.write(a, Level::Cmp, f)
            }
            Expr::And(a, b) => {
                self.write(a, Level::And, f)?;
                f.write_str(" and ")?;
                self.write(b, Level::Not, f)
            }
            Expr::Or(a, b) => {
                self.write(a, Level::Or, f)?;
                f.write_str(" or ")?;
                self.write(b, Level::And, f)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    self.write(a, Level::Or, f)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, Level::Or, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer { expr: self, names: &[] }.fmt(f)
    }
}

/// Used by the parser for number tokens.
pub(crate) fn number_fits_u32(r: &Rational) -> Option<u32> {
    if r.is_integer() {
        r.to_integer().to_u32()
    } else {
        None
    }
}
