//! Traced grade-school algorithms and the task vocabulary around them.
//!
//! Variable names printed by each algorithm are fixed by [`protocol`]:
//!
//! | op     | variables |
//! |--------|-----------|
//! | add    | `x y res carry digx digy ds` |
//! | sub    | `x y res borrow digx digy ds` |
//! | mul    | `x y out_res carry mag fac x_c in_res term dm` |
//! | div    | `x y q rem mag ys qd` |
//! | median | `xs mv med a b s` + the add names + `hq hr hd cur` |

mod arith;
mod median;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tint::{parse_list, Render, TInt, TIntError};
use crate::trace::TraceContext;

pub use arith::{add, div, mul, sub};
pub use median::{halve, median, selection_sort};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgoError {
    #[error("subtraction would be negative")]
    NegativeDifference,
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty list")]
    EmptyList,
    #[error("operands do not match the task")]
    OperandMismatch,
    #[error("unrecognized problem line {0:?}")]
    BadProblem(String),
    #[error(transparent)]
    Value(#[from] TIntError),
}

/// A concrete traced operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Median,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Median];
    pub const ARITHMETIC: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Median => "median",
        }
    }

    fn symbol(self) -> Option<&'static str> {
        match self {
            Op::Add => Some("+"),
            Op::Sub => Some("-"),
            Op::Mul => Some("*"),
            Op::Div => Some("/"),
            Op::Median => None,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a dataset asks for: one operation, or the even arithmetic mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Add,
    Sub,
    Mul,
    Div,
    Median,
    /// Each sample is add, sub, mul or div with probability 1/4.
    Mixed,
}

impl TaskKind {
    pub fn op(self) -> Option<Op> {
        match self {
            TaskKind::Add => Some(Op::Add),
            TaskKind::Sub => Some(Op::Sub),
            TaskKind::Mul => Some(Op::Mul),
            TaskKind::Div => Some(Op::Div),
            TaskKind::Median => Some(Op::Median),
            TaskKind::Mixed => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self.op() {
            Some(op) => op.name(),
            None => "mixed",
        }
    }
}

impl FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "add" => TaskKind::Add,
            "sub" => TaskKind::Sub,
            "mul" => TaskKind::Mul,
            "div" => TaskKind::Div,
            "median" => TaskKind::Median,
            "mixed" => TaskKind::Mixed,
            other => return Err(format!("unknown task {other:?}")),
        })
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operands {
    Pair(TInt, TInt),
    List(Vec<TInt>),
}

impl Operands {
    pub fn digit_lengths(&self) -> Vec<usize> {
        match self {
            Operands::Pair(a, b) => vec![a.len(), b.len()],
            Operands::List(xs) => xs.iter().map(TInt::len).collect(),
        }
    }
}

/// A task result: an integer, or for medians possibly an integer plus one half.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerValue {
    pub value: TInt,
    pub half: bool,
}

impl AnswerValue {
    pub fn int(value: TInt) -> Self {
        AnswerValue { value, half: false }
    }

    /// Inverse of [`Render::render`]: `Q` or `Q . 5`, spaced or compact.
    pub fn parse(text: &str, op: Op) -> Option<Self> {
        let text = text.trim();
        let (int_part, half) = match text.split_once('.') {
            Some((q, frac)) if op == Op::Median && frac.trim() == "5" => (q, true),
            Some(_) => return None,
            None => (text, false),
        };
        let value = TInt::parse(int_part.trim()).ok()?;
        Some(AnswerValue { value, half })
    }
}

impl Render for AnswerValue {
    fn render(&self) -> String {
        if self.half {
            format!("{} . 5", self.value.render())
        } else {
            self.value.render()
        }
    }
}

/// Runs `op` on `operands` with full problem/answer framing.
pub fn run(ctx: &mut TraceContext, op: Op, operands: &Operands) -> Result<AnswerValue, AlgoError> {
    match (op, operands) {
        (Op::Add, Operands::Pair(x, y)) => Ok(AnswerValue::int(add(ctx, x, y))),
        (Op::Sub, Operands::Pair(x, y)) => sub(ctx, x, y).map(AnswerValue::int),
        (Op::Mul, Operands::Pair(x, y)) => Ok(AnswerValue::int(mul(ctx, x, y))),
        (Op::Div, Operands::Pair(x, y)) => div(ctx, x, y).map(AnswerValue::int),
        (Op::Median, Operands::List(xs)) => median(ctx, xs),
        _ => Err(AlgoError::OperandMismatch),
    }
}

/// The problem line `run` would print for these operands.
pub fn problem_line(op: Op, operands: &Operands) -> Result<String, AlgoError> {
    match (op.symbol(), operands) {
        (Some(sym), Operands::Pair(x, y)) => Ok(format!("{} {sym} {}", x.render(), y.render())),
        (None, Operands::List(xs)) => Ok(format!("median {}", xs.render())),
        _ => Err(AlgoError::OperandMismatch),
    }
}

/// Recovers the operation and operands from a problem line.
pub fn parse_problem(line: &str) -> Result<(Op, Operands), AlgoError> {
    let bad = || AlgoError::BadProblem(line.to_string());
    if let Some(rest) = line.strip_prefix("median ") {
        let xs = parse_list(rest).map_err(|_| bad())?;
        if xs.is_empty() {
            return Err(bad());
        }
        return Ok((Op::Median, Operands::List(xs)));
    }
    for op in Op::ARITHMETIC {
        let sym = format!(" {} ", op.symbol().unwrap());
        if let Some((a, b)) = line.split_once(&sym) {
            let x = TInt::parse(a).map_err(|_| bad())?;
            let y = TInt::parse(b).map_err(|_| bad())?;
            return Ok((op, Operands::Pair(x, y)));
        }
    }
    Err(bad())
}

/// Variable names an op's trace may assign.
pub fn protocol(op: Op) -> &'static [&'static str] {
    match op {
        Op::Add => &["x", "y", "res", "carry", "digx", "digy", "ds"],
        Op::Sub => &["x", "y", "res", "borrow", "digx", "digy", "ds"],
        Op::Mul => &["x", "y", "out_res", "carry", "mag", "fac", "x_c", "in_res", "term", "dm"],
        Op::Div => &["x", "y", "q", "rem", "mag", "ys", "qd"],
        Op::Median => &[
            "xs", "mv", "med", "a", "b", "s", "x", "y", "res", "carry", "digx", "digy", "ds", "hq", "hr", "hd",
            "cur",
        ],
    }
}
