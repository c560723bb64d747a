//! Integer stores over a fixed set of variables.

use std::collections::BTreeMap;

use num::{BigInt, Integer, Signed, Zero};
use serde_json::{Map, Value};

use super::{eval_condition, Backend, BackendError};
use crate::syntax::{Atomic, BinOp, CmpOp, Condition, Expr, Header};
use crate::valuation::{Rational, Valuation};

/// Values of the declared variables, in the backend's (sorted) variable order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store(Vec<BigInt>);

impl Store {
    pub fn values(&self) -> &[BigInt] {
        &self.0
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalBackend {
    vars: Vec<String>,
    index: BTreeMap<String, usize>,
    bound: Option<BigInt>,
}

impl ClassicalBackend {
    pub fn new<S: AsRef<str>>(vars: &[S]) -> Self {
        let mut vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        vars.sort();
        vars.dedup();
        let index = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        ClassicalBackend { vars, index, bound: None }
    }

    pub fn from_header(h: &Header) -> Option<Self> {
        match h {
            Header::Classical { vars, .. } => Some(Self::new(vars)),
            Header::Quantum { .. } => None,
        }
    }

    /// Rejects any assignment whose result has absolute value above `bound`.
    pub fn with_bound(mut self, bound: impl Into<BigInt>) -> Self {
        self.bound = Some(bound.into());
        self
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// The all-zero store.
    pub fn zero_store(&self) -> Store {
        Store(vec![BigInt::zero(); self.vars.len()])
    }

    /// Store with the given values and zero elsewhere.
    pub fn store(&self, assignments: &[(&str, i64)]) -> Result<Store, BackendError> {
        let mut s = self.zero_store();
        for (name, value) in assignments {
            let i = self.slot(name)?;
            s.0[i] = BigInt::from(*value);
        }
        Ok(s)
    }

    /// Parses `x=0,y=1` (whitespace allowed) into a store.
    pub fn parse_init(&self, text: &str) -> Result<Store, String> {
        let mut s = self.zero_store();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| format!("expected `name=value`, got `{part}`"))?;
            let i = self.slot(name.trim()).map_err(|e| e.to_string())?;
            s.0[i] = value.trim().parse::<BigInt>().map_err(|e| format!("bad value for `{}`: {e}", name.trim()))?;
        }
        Ok(s)
    }

    pub fn get<'s>(&self, s: &'s Store, var: &str) -> Result<&'s BigInt, BackendError> {
        Ok(&s.0[self.slot(var)?])
    }

    fn slot(&self, var: &str) -> Result<usize, BackendError> {
        self.index.get(var).copied().ok_or_else(|| BackendError::UnknownVariable(var.to_string()))
    }

    pub fn eval_expr(&self, e: &Expr, s: &Store) -> Result<BigInt, BackendError> {
        Ok(match e {
            Expr::Const(c) => c.clone(),
            Expr::Var(v) => self.get(s, v)?.clone(),
            Expr::Neg(inner) => -self.eval_expr(inner, s)?,
            Expr::Bin(op, l, r) => {
                let a = self.eval_expr(l, s)?;
                let b = self.eval_expr(r, s)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.is_zero() {
                            return Err(BackendError::DivisionByZero);
                        }
                        a.div_floor(&b)
                    }
                }
            }
        })
    }

    fn assigned(&self, s: &Store, var: &str, value: BigInt) -> Result<Store, BackendError> {
        if let Some(bound) = &self.bound {
            if value.abs() > *bound {
                return Err(BackendError::Overflow { var: var.to_string(), value: value.to_string() });
            }
        }
        let mut out = s.clone();
        out.0[self.slot(var)?] = value;
        Ok(out)
    }
}

impl Backend for ClassicalBackend {
    type State = Store;

    fn name(&self) -> &'static str {
        "classical"
    }

    fn interp_atomic(&self, a: &Atomic, s: &Store) -> Result<Valuation<Store>, BackendError> {
        match a {
            Atomic::Assign { var, expr } => {
                let value = self.eval_expr(expr, s)?;
                Ok(Valuation::point(self.assigned(s, var, value)?))
            }
            Atomic::RandAssign { var, branches } => {
                let mut pairs: Vec<(Store, Rational)> = Vec::with_capacity(branches.len());
                for (w, e) in branches {
                    let value = self.eval_expr(e, s)?;
                    pairs.push((self.assigned(s, var, value)?, w.clone()));
                }
                Ok(Valuation::from_pairs(pairs)?)
            }
            Atomic::Gate { name, .. } => Err(BackendError::WrongBackend(format!("gate `{name}`"), "classical")),
            Atomic::Reset { .. } => Err(BackendError::WrongBackend("qubit reset".into(), "classical")),
            Atomic::Measure { .. } => Err(BackendError::WrongBackend("measurement".into(), "classical")),
        }
    }

    fn interp_cond(&self, b: &Condition, s: &Store) -> Result<bool, BackendError> {
        eval_condition(b, &|atom| match atom {
            Condition::Cmp(l, op, r) => {
                let a = self.eval_expr(l, s)?;
                let b = self.eval_expr(r, s)?;
                Ok(match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                })
            }
            Condition::Bit { .. } => Err(BackendError::WrongBackend("bit test".into(), "classical")),
            _ => unreachable!("eval_condition only passes atoms"),
        })
    }

    fn state_json(&self, s: &Store) -> Value {
        let mut m = Map::new();
        for (name, v) in self.vars.iter().zip(&s.0) {
            let value = v.to_string().parse::<serde_json::Number>().map(Value::Number).unwrap_or_else(|_| Value::String(v.to_string()));
            m.insert(name.clone(), value);
        }
        Value::Object(m)
    }
}
