//! Selection sort, halving and the list median.
//!
//! The median never treats addition as atomic: for even lengths the sum of
//! the two middle elements is traced in full, then halved digit by digit.

use crate::tint::{Render, TInt};
use crate::trace::TraceContext;

use super::{AlgoError, AnswerValue};

/// Sorts ascending. Per position it prints the selected minimum `mv` and the
/// list after the swap; comparisons are not printed.
pub fn selection_sort(ctx: &mut TraceContext, xs: &[TInt]) -> Result<Vec<TInt>, AlgoError> {
    if xs.is_empty() {
        return Err(AlgoError::EmptyList);
    }
    ctx.problem(format!("sort {}", xs.render()));
    ctx.assign("xs", xs);
    let sorted = selection_sort_body(ctx, xs.to_vec());
    ctx.answer(sorted.render());
    Ok(sorted)
}

pub(crate) fn selection_sort_body(ctx: &mut TraceContext, mut xs: Vec<TInt>) -> Vec<TInt> {
    for i in 0..xs.len().saturating_sub(1) {
        let j = (i..xs.len())
            .reduce(|best, k| if xs[k] < xs[best] { k } else { best })
            .expect("non-empty range");
        ctx.code("mv = min(xs[i:])");
        let mv = ctx.init_traced("mv", xs[j].clone());
        ctx.code("xs[j], xs[i] = xs[i], mv");
        xs[j] = xs[i].clone();
        xs[i] = mv;
        ctx.assign("xs", &xs);
    }
    xs
}

/// Halves `x` from its most significant digit: `cur = hr * 10 + hd`,
/// quotient digit `cur // 2` appended to `hq`, remainder `hr = cur % 2`.
/// Returns `(hq, hr)`.
pub fn halve(ctx: &mut TraceContext, x: &TInt) -> (TInt, TInt) {
    ctx.code("hq = 0");
    let mut hq = ctx.init_traced("hq", TInt::zero());
    ctx.code("hr = 0");
    let mut hr = ctx.init_traced("hr", TInt::zero());
    for d in x.msb_digits() {
        ctx.code("hd = next digit of x");
        let hd = ctx.init_traced("hd", TInt::digit(d));
        ctx.code("cur = hr * 10 + hd");
        let cur = ctx.init_traced("cur", hr.shift_left(1).checked_add(&hd));
        let (half, rem) = cur.div_small(2).expect("nonzero divisor");
        ctx.code("hq = hq * 10 + cur // 2");
        hq = hq.shift_left(1).checked_add(&half);
        ctx.assign("hq", &hq);
        ctx.code("hr = cur % 2");
        hr = ctx.init_traced("hr", TInt::from_u64(rem as u64));
    }
    (hq, hr)
}

pub fn median(ctx: &mut TraceContext, xs: &[TInt]) -> Result<AnswerValue, AlgoError> {
    if xs.is_empty() {
        return Err(AlgoError::EmptyList);
    }
    ctx.problem(format!("median {}", xs.render()));
    let value = median_body(ctx, xs);
    ctx.answer(value.render());
    Ok(value)
}

pub(crate) fn median_body(ctx: &mut TraceContext, xs: &[TInt]) -> AnswerValue {
    ctx.assign("xs", xs);
    let sorted = selection_sort_body(ctx, xs.to_vec());
    let n = sorted.len();
    if n % 2 == 1 {
        ctx.code("med = xs[n // 2]");
        let med = ctx.init_traced("med", sorted[n / 2].clone());
        return AnswerValue::int(med);
    }
    ctx.code("a = xs[n // 2 - 1]");
    let a = ctx.init_traced("a", sorted[n / 2 - 1].clone());
    ctx.code("b = xs[n // 2]");
    let b = ctx.init_traced("b", sorted[n / 2].clone());
    ctx.code("s = a + b");
    let s = super::arith::add_body(ctx, &a, &b);
    ctx.assign("s", &s);
    let (hq, hr) = halve(ctx, &s);
    ctx.code("med = hq");
    ctx.assign("med", &hq);
    AnswerValue { value: hq, half: !hr.is_zero() }
}
