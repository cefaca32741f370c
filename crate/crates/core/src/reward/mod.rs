//! Reward expression language.
//!
//! Stage rewards are plain data: arithmetic over a fixed set of aggregate
//! primitives evaluated against a [`NetworkState`].
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := NUMBER | IDENT '(' ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Expressions are capped at 1024 bytes and 32 levels of nesting.
//! Division by a value with magnitude below `1e-12` evaluates to zero.

mod parser;

use std::fmt;

pub use parser::{parse, ParseError, ParseErrorKind, MAX_DEPTH, MAX_LEN};

use crate::sim::{linear_to_db, NetworkState};

/// Grammar of the expression language, as shown to curriculum providers.
pub const GRAMMAR: &str = "expr   := term (('+' | '-') term)*
term   := factor (('*' | '/') factor)*
factor := NUMBER | IDENT '(' ')' | '(' expr ')' | '-' factor";

/// Aggregate quantities an expression can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    /// Number of active links.
    SumConnected,
    /// Links active both now and at the previous step.
    Persistence,
    SumQoe,
    /// `SumQoe` divided by the number of UEs.
    MeanQoe,
    /// Share of UEs holding at least one link.
    ConnectedUeFraction,
    /// Mean SINR in dB over active links, zero when none.
    MeanSinrDb,
}

impl Primitive {
    pub const ALL: [Primitive; 6] = [
        Primitive::SumConnected,
        Primitive::Persistence,
        Primitive::SumQoe,
        Primitive::MeanQoe,
        Primitive::ConnectedUeFraction,
        Primitive::MeanSinrDb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::SumConnected => "sum_connected",
            Primitive::Persistence => "persistence",
            Primitive::SumQoe => "sum_qoe",
            Primitive::MeanQoe => "mean_qoe",
            Primitive::ConnectedUeFraction => "connected_ue_fraction",
            Primitive::MeanSinrDb => "mean_sinr_db",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Primitive::SumConnected => "number of active UE-BS links at this step",
            Primitive::Persistence => "number of links active at this step and the previous one",
            Primitive::SumQoe => "sum of QoE over all UE-BS pairs",
            Primitive::MeanQoe => "sum of QoE over all pairs divided by the number of UEs",
            Primitive::ConnectedUeFraction => "fraction of UEs with at least one active link",
            Primitive::MeanSinrDb => "mean SINR in dB over active links (0 if none)",
        }
    }

    pub fn eval(self, state: &NetworkState) -> f64 {
        let m = state.num_ues() as f64;
        match self {
            Primitive::SumConnected => state.assoc.iter().map(|&x| f64::from(x)).sum(),
            Primitive::Persistence => state
                .assoc
                .iter()
                .zip(state.prev_assoc.iter())
                .map(|(&a, &b)| f64::from(a * b))
                .sum(),
            Primitive::SumQoe => state.qoe.iter().sum(),
            Primitive::MeanQoe => state.qoe.iter().sum::<f64>() / m,
            Primitive::ConnectedUeFraction => {
                (0..state.num_ues())
                    .filter(|&i| state.connections(i) > 0)
                    .count() as f64
                    / m
            }
            Primitive::MeanSinrDb => {
                let (sum, count) = state
                    .assoc
                    .iter()
                    .zip(state.sinr.iter())
                    .filter(|(&a, _)| a == 1)
                    .fold((0.0, 0usize), |(s, c), (_, &r)| (s + linear_to_db(r), c + 1));
                if count == 0 {
                    0.0
                } else {
                    sum / count as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardExpr {
    Constant(f64),
    Primitive(Primitive),
    Add(Box<RewardExpr>, Box<RewardExpr>),
    Sub(Box<RewardExpr>, Box<RewardExpr>),
    Mul(Box<RewardExpr>, Box<RewardExpr>),
    Div(Box<RewardExpr>, Box<RewardExpr>),
    Neg(Box<RewardExpr>),
    Paren(Box<RewardExpr>),
}

const DIV_EPSILON: f64 = 1e-12;

impl RewardExpr {
    /// Evaluates the expression. Total: never fails for a valid state.
    pub fn eval(&self, state: &NetworkState) -> f64 {
        match self {
            RewardExpr::Constant(v) => *v,
            RewardExpr::Primitive(p) => p.eval(state),
            RewardExpr::Add(a, b) => a.eval(state) + b.eval(state),
            RewardExpr::Sub(a, b) => a.eval(state) - b.eval(state),
            RewardExpr::Mul(a, b) => a.eval(state) * b.eval(state),
            RewardExpr::Div(a, b) => {
                let denom = b.eval(state);
                if denom.abs() < DIV_EPSILON {
                    log::warn!("reward expression divided by ~0 ({denom:e}); yielding 0");
                    0.0
                } else {
                    a.eval(state) / denom
                }
            }
            RewardExpr::Neg(a) => -a.eval(state),
            RewardExpr::Paren(a) => a.eval(state),
        }
    }

    pub fn primitives(&self) -> Vec<Primitive> {
        let mut out = Vec::new();
        self.collect_primitives(&mut out);
        out
    }

    fn collect_primitives(&self, out: &mut Vec<Primitive>) {
        match self {
            RewardExpr::Constant(_) => {}
            RewardExpr::Primitive(p) => {
                if !out.contains(p) {
                    out.push(*p)
                }
            }
            RewardExpr::Add(a, b)
            | RewardExpr::Sub(a, b)
            | RewardExpr::Mul(a, b)
            | RewardExpr::Div(a, b) => {
                a.collect_primitives(out);
                b.collect_primitives(out);
            }
            RewardExpr::Neg(a) | RewardExpr::Paren(a) => a.collect_primitives(out),
        }
    }
}

impl fmt::Display for RewardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardExpr::Constant(v) => write!(f, "{v}"),
            RewardExpr::Primitive(p) => write!(f, "{}()", p.name()),
            RewardExpr::Add(a, b) => write!(f, "{a} + {b}"),
            RewardExpr::Sub(a, b) => write!(f, "{a} - {b}"),
            RewardExpr::Mul(a, b) => write!(f, "{a} * {b}"),
            RewardExpr::Div(a, b) => write!(f, "{a} / {b}"),
            RewardExpr::Neg(a) => write!(f, "-{a}"),
            RewardExpr::Paren(a) => write!(f, "({a})"),
        }
    }
}

impl std::str::FromStr for RewardExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
