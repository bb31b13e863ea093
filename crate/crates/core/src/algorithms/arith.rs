//! Grade-school arithmetic over traced integers.
//!
//! Each `*_body` function emits the step lines only; the public wrappers add
//! the problem and answer lines. Values produced by a digit-level computation
//! (extracted digits, digit sums and products, carries, counters, results of
//! atomic sub-calls) go through `init_traced` and may be hit by dynamic
//! noise. Structural updates (stripping a digit, growing a result, copying,
//! shifting) go through `assign` and are recorded as computed.

use crate::tint::{DigitBuf, Render, TInt};
use crate::trace::TraceContext;

use super::AlgoError;

/// `x + y`. Prints the argument line, then per digit position
/// `digx, digy, x, y, ds, res, carry`, and a final `res` when a carry is left.
pub fn add(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.problem(format!("{} + {}", x.render(), y.render()));
    let res = add_body(ctx, x, y);
    ctx.answer(res.render());
    res
}

pub(crate) fn add_body(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.assign_many(&[("x", x), ("y", y)]);
    let (mut x, mut y) = (x.clone(), y.clone());
    ctx.code("res = 0");
    let mut res = DigitBuf::from(ctx.init_traced("res", TInt::zero()));
    ctx.code("carry = 0");
    let mut carry = ctx.init_traced("carry", TInt::zero());
    while !(x.is_zero() && y.is_zero()) {
        ctx.code("digx = x[0]");
        let digx = ctx.init_traced("digx", x.lsd());
        ctx.code("digy = y[0]");
        let digy = ctx.init_traced("digy", y.lsd());
        ctx.code("x = x[1:]");
        x = x.strip_lsd();
        ctx.assign("x", &x);
        ctx.code("y = y[1:]");
        y = y.strip_lsd();
        ctx.assign("y", &y);
        ctx.code("ds = digx + digy + carry");
        let ds = ctx.init_traced("ds", digx.checked_add(&digy).checked_add(&carry));
        ctx.code("res = ds[0] + res");
        res.push_msd(ds.lsb_digits()[0]);
        ctx.assign("res", &res);
        ctx.code("carry = ds[1:]");
        carry = ctx.init_traced("carry", ds.strip_lsd());
    }
    if !carry.is_zero() {
        ctx.code("res = carry + res");
        res.push_tint(&carry);
        ctx.assign("res", &res);
    }
    res.to_tint()
}

/// `x - y` for `x >= y`, mirroring addition with a borrow.
pub fn sub(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> Result<TInt, AlgoError> {
    if x < y {
        return Err(AlgoError::NegativeDifference);
    }
    ctx.problem(format!("{} - {}", x.render(), y.render()));
    let res = sub_body(ctx, x, y);
    ctx.answer(res.render());
    Ok(res)
}

pub(crate) fn sub_body(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.assign_many(&[("x", x), ("y", y)]);
    let (mut x, mut y) = (x.clone(), y.clone());
    ctx.code("res = 0");
    let mut res = DigitBuf::from(ctx.init_traced("res", TInt::zero()));
    ctx.code("borrow = 0");
    let mut borrow = ctx.init_traced("borrow", TInt::zero());
    while !(x.is_zero() && y.is_zero()) {
        ctx.code("digx = x[0]");
        let mut digx = ctx.init_traced("digx", x.lsd());
        ctx.code("digy = y[0]");
        let digy = ctx.init_traced("digy", y.lsd());
        ctx.code("x = x[1:]");
        x = x.strip_lsd();
        ctx.assign("x", &x);
        ctx.code("y = y[1:]");
        y = y.strip_lsd();
        ctx.assign("y", &y);
        let need = digy.checked_add(&borrow);
        let mut taken = 0u64;
        // Runs once without noise; a corrupted digx may need another ten.
        while digx < need {
            ctx.code("digx = digx + 10");
            digx = ctx.init_traced("digx", digx.checked_add(&TInt::from_u64(10)));
            taken += 1;
        }
        ctx.code("ds = digx - digy - borrow");
        let diff = digx.checked_sub(&need).expect("digx >= need after borrowing");
        let ds = ctx.init_traced("ds", diff);
        ctx.code("res = ds[0] + res");
        res.push_msd(ds.lsb_digits()[0]);
        ctx.assign("res", &res);
        ctx.code("borrow = borrowed");
        borrow = ctx.init_traced("borrow", TInt::from_u64(taken));
    }
    if res.has_leading_zero() {
        ctx.code("res = strip_zeros(res)");
        res = DigitBuf::from(res.to_tint());
        ctx.assign("res", &res);
    }
    res.to_tint()
}

/// `x * y`: one row per digit of `y`, single-digit products per digit of a
/// copy of `x`, rows accumulated into `out_res` by an invisible addition.
pub fn mul(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.problem(format!("{} * {}", x.render(), y.render()));
    let res = mul_body(ctx, x, y);
    ctx.answer(res.render());
    res
}

pub(crate) fn mul_body(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.assign_many(&[("x", x), ("y", y)]);
    let mut y = y.clone();
    ctx.code("out_res = 0");
    let mut out_res = ctx.init_traced("out_res", TInt::zero());
    ctx.code("carry = 0");
    let mut carry = ctx.init_traced("carry", TInt::zero());
    ctx.code("mag = 0");
    let mut mag = ctx.init_traced("mag", TInt::zero());
    while !y.is_zero() {
        ctx.code("fac = y[0]");
        let fac = ctx.init_traced("fac", y.lsd());
        ctx.code("y = y[1:]");
        y = y.strip_lsd();
        ctx.assign("y", &y);
        ctx.code("x_c = x");
        let mut x_c = x.clone();
        ctx.assign("x_c", &x_c);
        ctx.code("in_res = 0");
        let mut in_res = DigitBuf::from(ctx.init_traced("in_res", TInt::zero()));
        while !x_c.is_zero() {
            ctx.code("term = x_c[0]");
            let term = ctx.init_traced("term", x_c.lsd());
            ctx.code("x_c = x_c[1:]");
            x_c = x_c.strip_lsd();
            ctx.assign("x_c", &x_c);
            ctx.code("dm = term * fac");
            let mut dm = ctx.init_traced("dm", term.checked_mul(&fac));
            if !carry.is_zero() {
                ctx.code("dm = dm + carry");
                dm = ctx.init_traced("dm", dm.checked_add(&carry));
            }
            ctx.code("in_res = dm[0] + in_res");
            in_res.push_msd(dm.lsb_digits()[0]);
            ctx.assign("in_res", &in_res);
            ctx.code("carry = dm[1:]");
            carry = ctx.init_traced("carry", dm.strip_lsd());
        }
        if !carry.is_zero() {
            ctx.code("in_res = carry + in_res");
            in_res.push_tint(&carry);
            ctx.assign("in_res", &in_res);
            ctx.code("carry = 0");
            carry = ctx.init_traced("carry", TInt::zero());
        }
        ctx.code("in_res = in_res << mag");
        let row = in_res.to_tint().shift_left(small(&mag));
        ctx.assign("in_res", &row);
        // `mag` holds the shift for the next row; the last row re-prints it.
        if y.is_zero() {
            ctx.code("mag = mag");
            ctx.assign("mag", &mag);
        } else {
            ctx.code("mag = mag + 1");
            mag = ctx.init_traced("mag", mag.checked_add(&TInt::digit(1)));
        }
        ctx.code("out_res = out_res + in_res");
        let sum = ctx.invisible(|c| add_body(c, &out_res, &row));
        out_res = ctx.init_traced("out_res", sum);
    }
    out_res
}

/// `floor(x / y)` by long division on a shifted divisor: for each magnitude
/// from `len(x) - len(y)` down to 0, subtract `ys = y << mag` while it fits,
/// counting the quotient digit `qd`. Subtractions are invisible sub-calls.
pub fn div(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> Result<TInt, AlgoError> {
    if y.is_zero() {
        return Err(AlgoError::DivisionByZero);
    }
    ctx.problem(format!("{} / {}", x.render(), y.render()));
    let q = div_body(ctx, x, y);
    ctx.answer(q.render());
    Ok(q)
}

/// Largest quotient digit; bounds the trial loop even on corrupted state.
const MAX_QUOTIENT_DIGIT: u8 = 9;

pub(crate) fn div_body(ctx: &mut TraceContext, x: &TInt, y: &TInt) -> TInt {
    ctx.assign_many(&[("x", x), ("y", y)]);
    let cap = TInt::digit(MAX_QUOTIENT_DIGIT);
    ctx.code("q = 0");
    let mut q = ctx.init_traced("q", TInt::zero());
    ctx.code("rem = x");
    let mut rem = x.clone();
    ctx.assign("rem", &rem);
    ctx.code("mag = len(x) - len(y)");
    let mut mag = ctx.init_traced("mag", TInt::from_u64(x.len().saturating_sub(y.len()) as u64));
    loop {
        ctx.code("ys = y << mag");
        let ys = y.shift_left(small(&mag));
        ctx.assign("ys", &ys);
        ctx.code("qd = 0");
        let mut qd = ctx.init_traced("qd", TInt::zero());
        while qd < cap && rem >= ys {
            ctx.code("rem = rem - ys");
            let diff = ctx.invisible(|c| sub_body(c, &rem, &ys));
            rem = ctx.init_traced("rem", diff);
            ctx.code("qd = qd + 1");
            qd = ctx.init_traced("qd", qd.checked_add(&TInt::digit(1)));
        }
        ctx.code("q = q * 10 + qd");
        q = q.shift_left(1).checked_add(&qd);
        ctx.assign("q", &q);
        if mag.is_zero() {
            break;
        }
        ctx.code("mag = mag - 1");
        let next = mag.checked_sub(&TInt::digit(1)).expect("mag > 0");
        mag = ctx.init_traced("mag", next);
    }
    q
}

fn small(t: &TInt) -> usize {
    t.to_u64().expect("shift magnitude fits in u64") as usize
}
