//! Curvature functions on the positive cone, built from elementary symmetric
//! polynomials.
//!
//! A [`CurvatureFunction`] is an expression tree over `sigma(k)` leaves and
//! constants with sum, product, quotient and real-power nodes. Values and
//! exact gradients are obtained by one recursive pass over the tree.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, symmetrize};

/// Elementary symmetric polynomials e_0..=e_n of λ (e_0 = 1).
pub fn elementary_symmetric(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &x) in lambda.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// ∂e_k/∂λ_i = e_{k-1}(λ with λ_i removed), for all k and i.
/// Entry `[i][k]` holds the derivative of e_k.
fn elementary_symmetric_gradients(lambda: &[f64]) -> Vec<Vec<f64>> {
    let n = lambda.len();
    (0..n)
        .map(|i| {
            let rest: Vec<f64> = lambda
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            let e = elementary_symmetric(&rest);
            let mut d = vec![0.0; n + 1];
            d[1..=n].copy_from_slice(&e[..n]);
            d
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Sigma(usize),
    Sum(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Power(Box<Expr>, f64),
}

impl Expr {
    fn eval(&self, e: &[f64], de: &[Vec<f64>]) -> Result<(f64, DVector<f64>)> {
        let n = de.len();
        Ok(match self {
            Expr::Const(c) => (*c, DVector::zeros(n)),
            Expr::Sigma(k) => (e[*k], DVector::from_fn(n, |i, _| de[i][*k])),
            Expr::Sum(a, b) => {
                let (va, ga) = a.eval(e, de)?;
                let (vb, gb) = b.eval(e, de)?;
                (va + vb, ga + gb)
            }
            Expr::Product(a, b) => {
                let (va, ga) = a.eval(e, de)?;
                let (vb, gb) = b.eval(e, de)?;
                (va * vb, ga * vb + gb * va)
            }
            Expr::Quotient(a, b) => {
                let (va, ga) = a.eval(e, de)?;
                let (vb, gb) = b.eval(e, de)?;
                if !(vb > 0.0) {
                    return Err(Error::ConeViolation(format!(
                        "denominator {vb:e} is not positive"
                    )));
                }
                (va / vb, (ga * vb - gb * va) / (vb * vb))
            }
            Expr::Power(a, alpha) => {
                let (va, ga) = a.eval(e, de)?;
                if !(va > 0.0) {
                    return Err(Error::ConeViolation(format!(
                        "power base {va:e} is not positive"
                    )));
                }
                let v = (alpha * va.ln()).exp();
                (v, ga * (alpha * v / va))
            }
        })
    }

    fn degree(&self) -> Option<f64> {
        match self {
            Expr::Const(_) => Some(0.0),
            Expr::Sigma(k) => Some(*k as f64),
            Expr::Sum(a, b) => {
                let (da, db) = (a.degree()?, b.degree()?);
                ((da - db).abs() < 1e-12).then_some(da)
            }
            Expr::Product(a, b) => Some(a.degree()? + b.degree()?),
            Expr::Quotient(a, b) => Some(a.degree()? - b.degree()?),
            Expr::Power(a, alpha) => Some(a.degree()? * alpha),
        }
    }

    fn max_sigma(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Sigma(k) => *k,
            Expr::Sum(a, b) | Expr::Product(a, b) | Expr::Quotient(a, b) => {
                a.max_sigma().max(b.max_sigma())
            }
            Expr::Power(a, _) => a.max_sigma(),
        }
    }

    fn contains_sigma(&self, k: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Sigma(j) => *j == k,
            Expr::Sum(a, b) | Expr::Product(a, b) | Expr::Quotient(a, b) => {
                a.contains_sigma(k) || b.contains_sigma(k)
            }
            Expr::Power(a, _) => a.contains_sigma(k),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Sum(..) => 1,
            Expr::Product(..) | Expr::Quotient(..) => 2,
            Expr::Power(..) => 3,
            Expr::Const(c) if *c < 0.0 => 0,
            _ => 4,
        }
    }
}

fn fmt_number(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Debug formatting of f64 is the shortest round-trip representation.
    write!(f, "{x:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |e: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => fmt_number(*c, f),
            Expr::Sigma(k) => write!(f, "sigma({k})"),
            Expr::Sum(a, b) => {
                child(a, 1, f)?;
                f.write_str(" + ")?;
                child(b, 2, f)
            }
            Expr::Product(a, b) => {
                child(a, 2, f)?;
                f.write_str(" * ")?;
                child(b, 3, f)
            }
            Expr::Quotient(a, b) => {
                child(a, 2, f)?;
                f.write_str(" / ")?;
                child(b, 3, f)
            }
            Expr::Power(a, alpha) => {
                child(a, 4, f)?;
                f.write_str("^(")?;
                fmt_number(*alpha, f)?;
                f.write_str(")")
            }
        }
    }
}

/// A curvature function f: Γₙ⁺ → (0, ∞) in dimension n.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFunction {
    expr: Expr,
    dim: usize,
    degree: Option<f64>,
}

impl CurvatureFunction {
    pub fn new(expr: Expr, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if expr.max_sigma() > dim {
            return Err(Error::InvalidInput(format!(
                "sigma({}) exceeds dimension {dim}",
                expr.max_sigma()
            )));
        }
        let degree = expr.degree();
        let spec = Self { expr, dim, degree };
        let at_one = spec
            .eval(&vec![1.0; dim])
            .map_err(|e| Error::InvalidInput(format!("f(1,...,1) is undefined: {e}")))?;
        if !(at_one.is_finite() && at_one > 0.0) {
            return Err(Error::InvalidInput(format!(
                "f(1,...,1) = {at_one} must be finite and positive"
            )));
        }
        Ok(spec)
    }

    /// Parses the text form, e.g. `sigma(n)^(1/n)` or `sigma(2)/sigma(1)`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let expr = Parser::new(text, dim)?.parse()?;
        Self::new(expr, dim)
    }

    /// f = S_k.
    pub fn sigma(k: usize, dim: usize) -> Result<Self> {
        Self::new(Expr::Sigma(k), dim)
    }

    /// f = S_k^{1/k}.
    pub fn sigma_root(k: usize, dim: usize) -> Result<Self> {
        Self::new(Expr::Power(Box::new(Expr::Sigma(k)), 1.0 / k as f64), dim)
    }

    /// f = (S_k / S_l)^{1/(k-l)}.
    pub fn quotient_root(k: usize, l: usize, dim: usize) -> Result<Self> {
        if k <= l {
            return Err(Error::InvalidInput(format!("quotient needs k > l, got {k}, {l}")));
        }
        let q = Expr::Quotient(Box::new(Expr::Sigma(k)), Box::new(Expr::Sigma(l)));
        let expr = if k - l == 1 {
            q
        } else {
            Expr::Power(Box::new(q), 1.0 / (k - l) as f64)
        };
        Self::new(expr, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Homogeneity degree, when every sum joins terms of equal degree.
    pub fn homogeneity_degree(&self) -> Option<f64> {
        self.degree
    }

    pub fn is_homogeneous_degree_one(&self) -> bool {
        matches!(self.degree, Some(d) if (d - 1.0).abs() < 1e-12)
    }

    /// True when the expression contains S_n, so f vanishes on the cone boundary.
    pub fn contains_top_sigma(&self) -> bool {
        self.expr.contains_sigma(self.dim)
    }

    fn check_cone(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "expected {} curvatures, got {}",
                self.dim,
                lambda.len()
            )));
        }
        if let Some(x) = lambda.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::ConeViolation(format!(
                "curvature {x:e} outside the positive cone"
            )));
        }
        Ok(())
    }

    fn eval_unchecked(&self, lambda: &[f64]) -> Result<(f64, DVector<f64>)> {
        let e = elementary_symmetric(lambda);
        let de = elementary_symmetric_gradients(lambda);
        self.expr.eval(&e, &de)
    }

    pub fn eval(&self, lambda: &[f64]) -> Result<f64> {
        Ok(self.eval_with_grad(lambda)?.0)
    }

    pub fn grad(&self, lambda: &[f64]) -> Result<DVector<f64>> {
        Ok(self.eval_with_grad(lambda)?.1)
    }

    pub fn eval_with_grad(&self, lambda: &[f64]) -> Result<(f64, DVector<f64>)> {
        self.check_cone(lambda)?;
        self.eval_unchecked(lambda)
    }

    /// Hessian of f by central differences of the exact gradient with
    /// per-coordinate steps `h·λ_j`.
    pub fn fd_hessian(&self, lambda: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut hess = DMatrix::zeros(n, n);
        let mut x = lambda.to_vec();
        for j in 0..n {
            let step = h * lambda[j];
            x[j] = lambda[j] + step;
            let gp = self.grad(&x)?;
            x[j] = lambda[j] - step;
            let gm = self.grad(&x)?;
            x[j] = lambda[j];
            hess.set_column(j, &((gp - gm) / (2.0 * step)));
        }
        Ok(symmetrize(&hess))
    }
}

impl fmt::Display for CurvatureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
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
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn new(text: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            tokens: tokenize(text)?,
            pos: 0,
            dim,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{op}' at token {}", self.pos)))
        }
    }

    fn parse(mut self) -> Result<Expr> {
        let e = self.sum()?;
        if self.pos != self.tokens.len() {
            return Err(Error::Parse(format!("trailing input at token {}", self.pos)));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                lhs = fold(Expr::Sum(Box::new(lhs), Box::new(rhs)));
            } else if self.eat('-') {
                let rhs = self.term()?;
                lhs = match (lhs, rhs) {
                    (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
                    _ => {
                        return Err(Error::Parse(
                            "subtraction is only allowed between constants".into(),
                        ))
                    }
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                lhs = fold(Expr::Product(Box::new(lhs), Box::new(rhs)));
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = fold(Expr::Quotient(Box::new(lhs), Box::new(rhs)));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return match self.unary()? {
                Expr::Const(c) => Ok(Expr::Const(-c)),
                _ => Err(Error::Parse("negation is only allowed on constants".into())),
            };
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = match self.unary()? {
                Expr::Const(c) => c,
                _ => return Err(Error::Parse("exponent must be a constant".into())),
            };
            return Ok(fold(Expr::Power(Box::new(base), exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "n" => Ok(Expr::Const(self.dim as f64)),
                    "sigma" => {
                        self.expect('(')?;
                        let k = match self.sum()? {
                            Expr::Const(c) if c >= 0.0 && c.fract() == 0.0 => c as usize,
                            other => {
                                return Err(Error::Parse(format!(
                                    "sigma index must be a nonnegative integer, got {other}"
                                )))
                            }
                        };
                        self.expect(')')?;
                        if k > self.dim {
                            return Err(Error::Parse(format!(
                                "sigma({k}) exceeds dimension {}",
                                self.dim
                            )));
                        }
                        Ok(if k == 0 { Expr::Const(1.0) } else { Expr::Sigma(k) })
                    }
                    other => Err(Error::Parse(format!("unknown identifier '{other}'"))),
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Folds operations whose operands are all constants.
fn fold(e: Expr) -> Expr {
    match e {
        Expr::Sum(a, b) => match (*a, *b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (a, b) => Expr::Sum(Box::new(a), Box::new(b)),
        },
        Expr::Product(a, b) => match (*a, *b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (a, b) => Expr::Product(Box::new(a), Box::new(b)),
        },
        Expr::Quotient(a, b) => match (*a, *b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x / y),
            (a, b) => Expr::Quotient(Box::new(a), Box::new(b)),
        },
        Expr::Power(a, alpha) => match *a {
            Expr::Const(x) => Expr::Const(x.powf(alpha)),
            a if alpha == 1.0 => a,
            a => Expr::Power(Box::new(a), alpha),
        },
        e => e,
    }
}

// ---------------------------------------------------------------------------
// Structure-condition falsifier

/// Monte-Carlo evidence about the structure conditions of a curvature function.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub samples_used: usize,
    pub samples_skipped: usize,
    /// Smallest observed Σ f_i λ_i over samples with ψ₀ ≤ f ≤ ψ₁.
    pub empirical_sigma0: f64,
    /// Largest eigenvalue of diag(λ)·∇²f·diag(λ) over the samples.
    pub concavity_witness: f64,
    pub concavity_tolerance: f64,
    pub concavity_holds: bool,
    /// Target C of the growth search, 100·f(1,…,1).
    pub growth_target: f64,
    /// Smallest R found with f(λ + R e_n) ≥ C on the box [0.5, 2]ⁿ.
    pub growth_radius: Option<f64>,
    /// Largest value of min over the box of f(λ + R e_n) reached during the search.
    pub growth_best: f64,
    pub smallest_positive_gradient: f64,
}

impl StructureReport {
    pub fn growth_holds(&self) -> bool {
        self.growth_radius.is_some()
    }
}

pub const CONCAVITY_TOLERANCE: f64 = 1e-8;
pub const GROWTH_BOX: (f64, f64) = (0.5, 2.0);
pub const GROWTH_MAX_RADIUS: f64 = 1e8;
const FD_HESSIAN_STEP: f64 = 1e-5;

/// Finds s > 0 with f(s·λ) = target by bisection on log s; `None` if f
/// never brackets the target on [1e-6, 1e6].
fn scale_to_level(spec: &CurvatureFunction, lambda: &[f64], target: f64) -> Option<Vec<f64>> {
    let at = |log_s: f64| -> Option<f64> {
        let s = log_s.exp();
        let x: Vec<f64> = lambda.iter().map(|v| v * s).collect();
        spec.eval(&x).ok()
    };
    let bound = 1e6f64.ln();
    let (mut lo, mut hi) = (-bound, bound);
    let (flo, fhi) = (at(lo)?, at(hi)?);
    if !(flo <= target && target <= fhi) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let s = (0.5 * (lo + hi)).exp();
    Some(lambda.iter().map(|v| v * s).collect())
}

/// Samples the cone at f-levels in [ψ₀, ψ₁] and reports the empirical
/// lower bound of Σ f_i λ_i, a concavity witness and a growth search.
pub fn check_structure_conditions(
    spec: &CurvatureFunction,
    sample_count: usize,
    f_bounds: (f64, f64),
    seed: u64,
) -> Result<StructureReport> {
    let (psi0, psi1) = f_bounds;
    if sample_count == 0 {
        return Err(Error::InvalidInput("sample_count must be >= 1".into()));
    }
    if !(0.0 < psi0 && psi0 < psi1) {
        return Err(Error::InvalidInput(format!(
            "need 0 < psi0 < psi1, got ({psi0}, {psi1})"
        )));
    }
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0;
    let mut skipped = 0;
    let mut sigma0 = f64::INFINITY;
    let mut witness = f64::NEG_INFINITY;
    let mut min_grad = f64::INFINITY;

    for _ in 0..sample_count {
        let raw: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        let level = rng.random_range(psi0..=psi1);
        let Some(lambda) = scale_to_level(spec, &raw, level) else {
            skipped += 1;
            continue;
        };
        let (f, grad) = match spec.eval_with_grad(&lambda) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if !(psi0 * (1.0 - 1e-12) <= f && f <= psi1 * (1.0 + 1e-12)) {
            skipped += 1;
            continue;
        }
        let hess = match spec.fd_hessian(&lambda, FD_HESSIAN_STEP) {
            Ok(h) => h,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&lambda));
        let scaled = &d * hess * &d;
        let top = sym_eigenvalues(&scaled)[n - 1];
        witness = witness.max(top);
        sigma0 = sigma0.min(grad.iter().zip(&lambda).map(|(g, l)| g * l).sum());
        min_grad = min_grad.min(grad.min());
        used += 1;
    }

    let target = 100.0 * spec.eval(&vec![1.0; n])?;
    let (radius, best) = growth_search(spec, target)?;

    Ok(StructureReport {
        samples_used: used,
        samples_skipped: skipped,
        empirical_sigma0: sigma0,
        concavity_witness: witness,
        concavity_tolerance: CONCAVITY_TOLERANCE,
        concavity_holds: used > 0 && witness <= CONCAVITY_TOLERANCE,
        growth_target: target,
        growth_radius: radius,
        growth_best: best,
        smallest_positive_gradient: min_grad,
    })
}

/// Doubles R from 1 up to [`GROWTH_MAX_RADIUS`] until f(λ + R e_n) ≥ C at
/// every corner and the center of the box. f is increasing in each argument,
/// so the lower corner is the binding point; the others are checked anyway.
fn growth_search(spec: &CurvatureFunction, target: f64) -> Result<(Option<f64>, f64)> {
    let n = spec.dim();
    let (lo, hi) = GROWTH_BOX;
    let mut points: Vec<Vec<f64>> = (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { hi } else { lo }).collect())
        .collect();
    points.push(vec![0.5 * (lo + hi); n]);
    let mut best = f64::NEG_INFINITY;
    let mut r = 1.0;
    while r <= GROWTH_MAX_RADIUS {
        let mut worst = f64::INFINITY;
        for p in &points {
            let mut x = p.clone();
            x[n - 1] += r;
            worst = worst.min(spec.eval(&x)?);
        }
        best = best.max(worst);
        if worst >= target {
            return Ok((Some(r), best));
        }
        r *= 2.0;
    }
    Ok((None, best))
}
