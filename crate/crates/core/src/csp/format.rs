use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Alphabet, Instance, PredId, Predicate};
use crate::error::{Error, Result};

/// Canonical text form: a `csp n m sigma k` header, one `pred` line per
/// registered predicate and one `c` line per constraint in stream order.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "csp {} {} {} {}", inst.n(), inst.m(), inst.sigma(), inst.k());
    for (id, p) in inst.predicates().iter() {
        let _ = writeln!(out, "pred {} {}", id, p.bitstring());
    }
    for c in inst.constraints() {
        let _ = write!(out, "c {}", c.pred);
        for v in &c.vars {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

fn arity_for(len: usize, sigma: usize) -> Option<usize> {
    let mut size = 1usize;
    for a in 1..=32 {
        size = size.checked_mul(sigma)?;
        if size == len {
            return Some(a);
        }
        if size > len {
            return None;
        }
    }
    None
}

/// Parses the canonical text form. Blank lines and `#` comments are skipped.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "csp" {
        return Err(err(hline, "expected `csp <n> <m> <sigma> <k>`".into()));
    }
    let num = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| err(line, format!("`{s}` is not a nonnegative integer")))
    };
    let n = num(h[1], hline)?;
    let m = num(h[2], hline)?;
    let sigma = num(h[3], hline)?;
    let k = num(h[4], hline)?;
    let alphabet = Alphabet::new(sigma).map_err(|e| err(hline, e.to_string()))?;
    let mut inst = Instance::new(n, alphabet);
    let mut ids: HashMap<String, PredId> = HashMap::new();

    for (line, body) in lines {
        let mut parts = body.split_whitespace();
        match parts.next() {
            Some("pred") => {
                let name = parts
                    .next()
                    .ok_or_else(|| err(line, "missing predicate id".into()))?;
                let bits = parts
                    .next()
                    .ok_or_else(|| err(line, "missing predicate table".into()))?;
                let arity = arity_for(bits.len(), sigma).ok_or_else(|| {
                    err(line, format!("table length {} is not a power of {sigma}", bits.len()))
                })?;
                let table = bits
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(err(line, format!("bad table symbol `{ch}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let p = Predicate::new(arity, sigma, table).map_err(|e| err(line, e.to_string()))?;
                let id = inst.intern(p).map_err(|e| err(line, e.to_string()))?;
                if ids.insert(name.to_string(), id).is_some() {
                    return Err(err(line, format!("predicate `{name}` defined twice")));
                }
            }
            Some("c") => {
                let name = parts
                    .next()
                    .ok_or_else(|| err(line, "missing predicate reference".into()))?;
                let id = *ids
                    .get(name)
                    .ok_or_else(|| err(line, format!("unknown predicate `{name}`")))?;
                let vars = parts
                    .map(|s| {
                        s.parse::<u32>()
                            .map_err(|_| err(line, format!("bad variable `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                inst.push(id, vars).map_err(|e| err(line, e.to_string()))?;
            }
            Some(other) => return Err(err(line, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    if inst.m() != m {
        return Err(err(hline, format!("header says m = {m} but {} constraints follow", inst.m())));
    }
    if inst.m() > 0 && inst.k() != k {
        return Err(err(hline, format!("header says k = {k} but the largest arity is {}", inst.k())));
    }
    Ok(inst)
}
