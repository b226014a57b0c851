//! Declarative drift functions built from monomial-like terms.
//!
//! Each component `f_i` is a sum of terms `coeff · Π factors`, where a factor
//! is `x_k^p`, `u_k^p`, `sin(v)` or `cos(v)`. Such drifts come with analytic
//! Jacobians and a natural interval extension for free.
//!
//! Factors parse from strings with 1-based indices: `x1`, `x2^3`, `u1`,
//! `sin(x1)`, `cos(u2)`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::dynamics::SystemModel;
use crate::interval::Interval;
use crate::reach::InclusionFunction;
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    State(usize),
    Input(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Pow(Var, u32),
    Sin(Var),
    Cos(Var),
}

impl Var {
    fn value(self, x: &[f64], u: &[f64]) -> f64 {
        match self {
            Var::State(i) => x[i],
            Var::Input(j) => u[j],
        }
    }

    fn interval(self, x: &[Interval], u: &[Interval]) -> Interval {
        match self {
            Var::State(i) => x[i],
            Var::Input(j) => u[j],
        }
    }
}

impl core::fmt::Display for Var {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Var::State(i) => write!(f, "x{}", i + 1),
            Var::Input(j) => write!(f, "u{}", j + 1),
        }
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, idx) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let k: usize = idx.parse().map_err(|_| Error::arg(format!("bad variable `{s}`")))?;
        if k == 0 {
            return Err(Error::arg(format!("variable indices start at 1 in `{s}`")));
        }
        match kind {
            "x" => Ok(Var::State(k - 1)),
            "u" => Ok(Var::Input(k - 1)),
            _ => Err(Error::arg(format!("bad variable `{s}`"))),
        }
    }
}

impl core::fmt::Display for Factor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Factor::Pow(v, 1) => write!(f, "{v}"),
            Factor::Pow(v, p) => write!(f, "{v}^{p}"),
            Factor::Sin(v) => write!(f, "sin({v})"),
            Factor::Cos(v) => write!(f, "cos({v})"),
        }
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
        if let Some(v) = inner("sin(") {
            return Ok(Factor::Sin(v.parse()?));
        }
        if let Some(v) = inner("cos(") {
            return Ok(Factor::Cos(v.parse()?));
        }
        match s.split_once('^') {
            Some((v, p)) => {
                let p: u32 = p.trim().parse().map_err(|_| Error::arg(format!("bad exponent in `{s}`")))?;
                Ok(Factor::Pow(v.parse()?, p))
            }
            None => Ok(Factor::Pow(s.parse()?, 1)),
        }
    }
}

impl Factor {
    pub fn var(&self) -> Var {
        match *self {
            Factor::Pow(v, _) | Factor::Sin(v) | Factor::Cos(v) => v,
        }
    }

    fn eval(&self, x: &[f64], u: &[f64]) -> f64 {
        match *self {
            Factor::Pow(v, p) => v.value(x, u).powi(p as i32),
            Factor::Sin(v) => v.value(x, u).sin(),
            Factor::Cos(v) => v.value(x, u).cos(),
        }
    }

    fn derivative(&self, x: &[f64], u: &[f64]) -> f64 {
        match *self {
            Factor::Pow(_, 0) => 0.0,
            Factor::Pow(v, p) => p as f64 * v.value(x, u).powi(p as i32 - 1),
            Factor::Sin(v) => v.value(x, u).cos(),
            Factor::Cos(v) => -v.value(x, u).sin(),
        }
    }

    fn eval_interval(&self, x: &[Interval], u: &[Interval]) -> Interval {
        let i = self.var().interval(x, u);
        match *self {
            Factor::Pow(_, p) => i.powi(p),
            Factor::Sin(_) => i.sin(),
            Factor::Cos(_) => i.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Factor>) -> Self {
        Self { coeff, factors }
    }

    /// Parses each factor string; an empty list is a constant term.
    pub fn parse(coeff: f64, factors: &[&str]) -> Result<Self> {
        Ok(Self { coeff, factors: factors.iter().map(|s| s.parse()).collect::<Result<_>>()? })
    }

    fn eval(&self, x: &[f64], u: &[f64]) -> f64 {
        self.factors.iter().fold(self.coeff, |acc, f| acc * f.eval(x, u))
    }

    /// `∂ term / ∂ var` by the product rule.
    fn partial(&self, var: Var, x: &[f64], u: &[f64]) -> f64 {
        let mut total = 0.0;
        for (k, fk) in self.factors.iter().enumerate() {
            if fk.var() != var {
                continue;
            }
            let rest: f64 =
                self.factors.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, f)| f.eval(x, u)).product();
            total += self.coeff * fk.derivative(x, u) * rest;
        }
        total
    }

    fn eval_interval(&self, x: &[Interval], u: &[Interval]) -> Interval {
        self.factors.iter().fold(Interval::point(self.coeff), |acc, f| acc * f.eval_interval(x, u))
    }
}

/// `f_i(x, u) = Σ_k term_{ik}(x, u)` for `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDrift {
    state_dim: usize,
    input_dim: usize,
    rows: Vec<Vec<Term>>,
}

impl TermDrift {
    pub fn new(state_dim: usize, input_dim: usize, rows: Vec<Vec<Term>>) -> Result<Self> {
        Error::check_dim(state_dim, rows.len())?;
        for term in rows.iter().flatten() {
            if !term.coeff.is_finite() {
                return Err(Error::arg("term coefficients must be finite"));
            }
            for f in &term.factors {
                let ok = match f.var() {
                    Var::State(i) => i < state_dim,
                    Var::Input(j) => j < input_dim,
                };
                if !ok {
                    return Err(Error::arg(format!("factor `{f}` is out of range")));
                }
            }
        }
        Ok(Self { state_dim, input_dim, rows })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn rows(&self) -> &[Vec<Term>] {
        &self.rows
    }

    pub fn eval(&self, x: &Vector, u: &Vector) -> Vector {
        let (xs, us) = (x.as_slice(), u.as_slice());
        Vector::from_iterator(self.state_dim, self.rows.iter().map(|r| r.iter().map(|t| t.eval(xs, us)).sum()))
    }

    pub fn state_jacobian(&self, x: &Vector, u: &Vector) -> Matrix {
        self.jacobian(x, u, self.state_dim, Var::State)
    }

    pub fn input_jacobian(&self, x: &Vector, u: &Vector) -> Matrix {
        self.jacobian(x, u, self.input_dim, Var::Input)
    }

    fn jacobian(&self, x: &Vector, u: &Vector, cols: usize, var: fn(usize) -> Var) -> Matrix {
        let (xs, us) = (x.as_slice(), u.as_slice());
        Matrix::from_fn(self.state_dim, cols, |i, j| self.rows[i].iter().map(|t| t.partial(var(j), xs, us)).sum())
    }

    /// Natural interval extension of every component.
    pub fn eval_interval(&self, x: &[Interval], u: &[Interval]) -> Vec<Interval> {
        self.rows.iter().map(|r| r.iter().fold(Interval::point(0.0), |acc, t| acc + t.eval_interval(x, u))).collect()
    }

    /// Model with this drift, constant diffusion `sigma` (n × m) and analytic Jacobians.
    pub fn into_system(self, sigma: Matrix) -> Result<SystemModel> {
        let m = sigma.ncols();
        let d = Arc::new(self);
        let (d1, d2, d3) = (d.clone(), d.clone(), d.clone());
        SystemModel::new(d.state_dim, d.input_dim, m, move |_, x, u| d1.eval(x, u)).with_constant_diffusion(sigma).map(
            |s| {
                s.with_state_jacobian(move |_, x, u| d2.state_jacobian(x, u))
                    .with_input_jacobian(move |_, x, u| d3.input_jacobian(x, u))
            },
        )
    }

    /// Face-pinned embedding from the natural interval extension.
    pub fn inclusion_function(&self) -> InclusionFunction {
        let d = self.clone();
        InclusionFunction::natural(self.state_dim, self.input_dim, move |_, x, u| d.eval_interval(x, u))
    }
}
