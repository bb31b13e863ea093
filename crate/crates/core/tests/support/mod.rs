//! Test-only oracles that share no code with the library's arithmetic.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Reads a spaced or compact digit string.
pub fn big(text: &str) -> BigUint {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    BigUint::parse_bytes(compact.as_bytes(), 10).unwrap_or_else(|| panic!("not a number: {text:?}"))
}

/// Digits separated by single spaces.
pub fn spaced(n: &BigUint) -> String {
    spaced_str(&n.to_str_radix(10))
}

fn spaced_str(digits: &str) -> String {
    digits.chars().map(String::from).collect::<Vec<_>>().join(" ")
}

fn list(xs: &[BigUint]) -> String {
    format!("[ {} ]", xs.iter().map(spaced).collect::<Vec<_>>().join(" , "))
}

fn parse_list(text: &str) -> Vec<BigUint> {
    let inner = text.trim().strip_prefix('[').and_then(|s| s.strip_suffix(']')).expect("list");
    inner.split(',').map(big).collect()
}

/// Expected answer line for a problem line, computed with big integers.
pub fn oracle_answer(problem: &str) -> String {
    if let Some(rest) = problem.strip_prefix("median ") {
        let mut xs = parse_list(rest);
        xs.sort();
        let n = xs.len();
        if n % 2 == 1 {
            return spaced(&xs[n / 2]);
        }
        let s = &xs[n / 2 - 1] + &xs[n / 2];
        let two = BigUint::from(2u8);
        let q = &s / &two;
        return if (&s % &two).is_zero() { spaced(&q) } else { format!("{} . 5", spaced(&q)) };
    }
    for sym in [" + ", " - ", " * ", " / "] {
        if let Some((a, b)) = problem.split_once(sym) {
            let (a, b) = (big(a), big(b));
            let v = match sym {
                " + " => a + b,
                " - " => a - b,
                " * " => a * b,
                _ => a / b,
            };
            return spaced(&v);
        }
    }
    panic!("unknown problem {problem:?}")
}

/// A corruption as recorded in the record metadata: which CoT line carries
/// it and the value that would have been printed without it.
#[derive(Debug, Clone)]
pub struct Mark {
    pub line: usize,
    pub var: String,
    pub original: String,
}

/// Walks a trace line by line, re-deriving every visible step from the
/// state the trace itself has shown so far. A freshly computed value may
/// differ from the re-derived one only on a marked line, and then the mark
/// must name the same variable and the re-derived value.
pub struct StepChecker<'a> {
    lines: &'a [String],
    pos: usize,
    marks: HashMap<usize, Mark>,
    pub marks_used: usize,
}

type Check<T> = Result<T, String>;

impl<'a> StepChecker<'a> {
    pub fn new(lines: &'a [String], marks: Vec<Mark>) -> Self {
        StepChecker { lines, pos: 0, marks: marks.into_iter().map(|m| (m.line, m)).collect(), marks_used: 0 }
    }

    fn take(&mut self) -> Check<&'a str> {
        let line = self.lines.get(self.pos).ok_or_else(|| format!("trace ended at line {}", self.pos))?;
        self.pos += 1;
        Ok(line)
    }

    fn binding(&mut self, name: &str) -> Check<(usize, &'a str)> {
        let at = self.pos;
        let line = self.take()?;
        let value = line
            .strip_prefix(name)
            .and_then(|s| s.strip_prefix(" = "))
            .ok_or_else(|| format!("line {at}: expected {name}, got {line:?}"))?;
        Ok((at, value))
    }

    /// A structural update: must match exactly.
    fn assign(&mut self, name: &str, expected: &str) -> Check<()> {
        let (at, value) = self.binding(name)?;
        if self.marks.contains_key(&at) {
            return Err(format!("line {at}: corruption recorded on a structural update"));
        }
        if value != expected {
            return Err(format!("line {at}: {name} = {value}, expected {expected}"));
        }
        Ok(())
    }

    /// A freshly computed value: matches unless this line is marked.
    fn init(&mut self, name: &str, expected: &BigUint) -> Check<BigUint> {
        let want = spaced(expected);
        let (at, value) = self.binding(name)?;
        match self.marks.get(&at) {
            Some(m) => {
                if m.var != name || m.original != want {
                    return Err(format!("line {at}: mark {m:?} does not match {name} = {want}"));
                }
                self.marks_used += 1;
                Ok(big(value))
            }
            None if value == want => Ok(expected.clone()),
            None => Err(format!("line {at}: {name} = {value}, expected {want}")),
        }
    }

    fn finish(&self) -> Check<()> {
        if self.pos != self.lines.len() {
            return Err(format!("{} unchecked lines", self.lines.len() - self.pos));
        }
        if self.marks_used != self.marks.len() {
            return Err(format!("{} of {} marks never reached", self.marks.len() - self.marks_used, self.marks.len()));
        }
        Ok(())
    }
}

fn ten() -> BigUint {
    BigUint::from(10u8)
}

fn small(n: &BigUint) -> usize {
    n.to_usize().expect("small value")
}

/// Partial result kept as MSB-first digits, positional zeros included.
#[derive(Default)]
struct Buf(String);

impl Buf {
    fn from_value(v: &BigUint) -> Buf {
        if v.is_zero() {
            Buf::default()
        } else {
            Buf(v.to_str_radix(10))
        }
    }

    fn render(&self) -> String {
        if self.0.is_empty() {
            "0".into()
        } else {
            spaced_str(&self.0)
        }
    }

    fn prepend(&mut self, v: &BigUint) {
        self.0.insert_str(0, &v.to_str_radix(10));
    }

    fn value(&self) -> BigUint {
        if self.0.is_empty() {
            BigUint::zero()
        } else {
            big(&self.0)
        }
    }
}

fn check_add(c: &mut StepChecker, x: &BigUint, y: &BigUint) -> Check<BigUint> {
    let line = c.take()?;
    if line != format!("x = {} , y = {}", spaced(x), spaced(y)) {
        return Err(format!("bad argument line {line:?}"));
    }
    let (mut x, mut y) = (x.clone(), y.clone());
    let mut res = Buf::from_value(&c.init("res", &BigUint::zero())?);
    let mut carry = c.init("carry", &BigUint::zero())?;
    while !(x.is_zero() && y.is_zero()) {
        let digx = c.init("digx", &(&x % ten()))?;
        let digy = c.init("digy", &(&y % ten()))?;
        x /= ten();
        c.assign("x", &spaced(&x))?;
        y /= ten();
        c.assign("y", &spaced(&y))?;
        let ds = c.init("ds", &(&digx + &digy + &carry))?;
        res.prepend(&(&ds % ten()));
        c.assign("res", &res.render())?;
        carry = c.init("carry", &(&ds / ten()))?;
    }
    if !carry.is_zero() {
        res.prepend(&carry);
        c.assign("res", &res.render())?;
    }
    Ok(res.value())
}

fn check_sub(c: &mut StepChecker, x: &BigUint, y: &BigUint) -> Check<BigUint> {
    let line = c.take()?;
    if line != format!("x = {} , y = {}", spaced(x), spaced(y)) {
        return Err(format!("bad argument line {line:?}"));
    }
    let (mut x, mut y) = (x.clone(), y.clone());
    let mut res = Buf::from_value(&c.init("res", &BigUint::zero())?);
    let mut borrow = c.init("borrow", &BigUint::zero())?;
    while !(x.is_zero() && y.is_zero()) {
        let mut digx = c.init("digx", &(&x % ten()))?;
        let digy = c.init("digy", &(&y % ten()))?;
        x /= ten();
        c.assign("x", &spaced(&x))?;
        y /= ten();
        c.assign("y", &spaced(&y))?;
        let need = &digy + &borrow;
        let mut taken = 0u32;
        while digx < need {
            digx = c.init("digx", &(&digx + ten()))?;
            taken += 1;
        }
        let ds = c.init("ds", &(&digx - &need))?;
        res.prepend(&(&ds % ten()));
        c.assign("res", &res.render())?;
        borrow = c.init("borrow", &BigUint::from(taken))?;
    }
    if res.0.len() > 1 && res.0.starts_with('0') {
        res = Buf::from_value(&res.value());
        c.assign("res", &res.render())?;
    }
    Ok(res.value())
}

fn check_mul(c: &mut StepChecker, x: &BigUint, y: &BigUint) -> Check<BigUint> {
    let line = c.take()?;
    if line != format!("x = {} , y = {}", spaced(x), spaced(y)) {
        return Err(format!("bad argument line {line:?}"));
    }
    let mut y = y.clone();
    let mut out = c.init("out_res", &BigUint::zero())?;
    let mut carry = c.init("carry", &BigUint::zero())?;
    let mut mag = c.init("mag", &BigUint::zero())?;
    while !y.is_zero() {
        let fac = c.init("fac", &(&y % ten()))?;
        y /= ten();
        c.assign("y", &spaced(&y))?;
        let mut xc = x.clone();
        c.assign("x_c", &spaced(&xc))?;
        let mut row = Buf::from_value(&c.init("in_res", &BigUint::zero())?);
        while !xc.is_zero() {
            let term = c.init("term", &(&xc % ten()))?;
            xc /= ten();
            c.assign("x_c", &spaced(&xc))?;
            let mut dm = c.init("dm", &(&term * &fac))?;
            if !carry.is_zero() {
                dm = c.init("dm", &(&dm + &carry))?;
            }
            row.prepend(&(&dm % ten()));
            c.assign("in_res", &row.render())?;
            carry = c.init("carry", &(&dm / ten()))?;
        }
        if !carry.is_zero() {
            row.prepend(&carry);
            c.assign("in_res", &row.render())?;
            carry = c.init("carry", &BigUint::zero())?;
        }
        let shifted = row.value() * ten().pow(small(&mag) as u32);
        c.assign("in_res", &spaced(&shifted))?;
        if y.is_zero() {
            c.assign("mag", &spaced(&mag))?;
        } else {
            mag = c.init("mag", &(&mag + 1u8))?;
        }
        out = c.init("out_res", &(&out + &shifted))?;
    }
    Ok(out)
}

fn digit_len(n: &BigUint) -> usize {
    n.to_str_radix(10).len()
}

fn check_div(c: &mut StepChecker, x: &BigUint, y: &BigUint) -> Check<BigUint> {
    let line = c.take()?;
    if line != format!("x = {} , y = {}", spaced(x), spaced(y)) {
        return Err(format!("bad argument line {line:?}"));
    }
    let mut q = c.init("q", &BigUint::zero())?;
    let mut rem = x.clone();
    c.assign("rem", &spaced(&rem))?;
    let mut mag = c.init("mag", &BigUint::from(digit_len(x).saturating_sub(digit_len(y))))?;
    loop {
        let ys = y * ten().pow(small(&mag) as u32);
        c.assign("ys", &spaced(&ys))?;
        let mut qd = c.init("qd", &BigUint::zero())?;
        while qd < BigUint::from(9u8) && rem >= ys {
            rem = c.init("rem", &(&rem - &ys))?;
            qd = c.init("qd", &(&qd + 1u8))?;
        }
        q = q * ten() + &qd;
        c.assign("q", &spaced(&q))?;
        if mag.is_zero() {
            return Ok(q);
        }
        mag = c.init("mag", &(&mag - 1u8))?;
    }
}

fn check_median(c: &mut StepChecker, xs: &[BigUint]) -> Check<String> {
    c.assign("xs", &list(xs))?;
    let mut xs = xs.to_vec();
    for i in 0..xs.len().saturating_sub(1) {
        let mut j = i;
        for k in i + 1..xs.len() {
            if xs[k] < xs[j] {
                j = k;
            }
        }
        let mv = c.init("mv", &xs[j].clone())?;
        xs[j] = xs[i].clone();
        xs[i] = mv;
        c.assign("xs", &list(&xs))?;
    }
    let n = xs.len();
    if n % 2 == 1 {
        return Ok(spaced(&c.init("med", &xs[n / 2].clone())?));
    }
    let a = c.init("a", &xs[n / 2 - 1].clone())?;
    let b = c.init("b", &xs[n / 2].clone())?;
    let s = check_add(c, &a, &b)?;
    c.assign("s", &spaced(&s))?;
    let mut hq = c.init("hq", &BigUint::zero())?;
    let mut hr = c.init("hr", &BigUint::zero())?;
    for d in s.to_str_radix(10).chars() {
        let hd = c.init("hd", &BigUint::from(d.to_digit(10).unwrap()))?;
        let cur = c.init("cur", &(&hr * ten() + &hd))?;
        hq = hq * ten() + (&cur / 2u8);
        c.assign("hq", &spaced(&hq))?;
        hr = c.init("hr", &(&cur % 2u8))?;
    }
    c.assign("med", &spaced(&hq))?;
    Ok(if hr.is_zero() { spaced(&hq) } else { format!("{} . 5", spaced(&hq)) })
}

/// Checks a full record: problem, every CoT line and the answer.
/// Returns how many marks were consumed.
pub fn check_trace(problem: &str, cot: &[String], answer: &str, marks: Vec<Mark>) -> Check<usize> {
    let mut c = StepChecker::new(cot, marks);
    let got = if let Some(rest) = problem.strip_prefix("median ") {
        check_median(&mut c, &parse_list(rest))?
    } else {
        let (sym, a, b) = [" + ", " - ", " * ", " / "]
            .iter()
            .find_map(|s| problem.split_once(s).map(|(a, b)| (*s, big(a), big(b))))
            .ok_or_else(|| format!("unknown problem {problem:?}"))?;
        let v = match sym {
            " + " => check_add(&mut c, &a, &b)?,
            " - " => check_sub(&mut c, &a, &b)?,
            " * " => check_mul(&mut c, &a, &b)?,
            _ => check_div(&mut c, &a, &b)?,
        };
        spaced(&v)
    };
    c.finish()?;
    if got != answer {
        return Err(format!("answer {answer:?}, trace implies {got:?}"));
    }
    Ok(c.marks_used)
}
