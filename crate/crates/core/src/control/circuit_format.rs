// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Line-oriented text form of a [`Circuit`].
//!
//! ```text
//! # comment
//! IONS 2
//! MW axis=y angle=-1.5707963267948966 phase=0
//! OPTZ phis=3.14159,0
//! MW axis=n(0.3,1.2) angle=0.5 phase=0
//! ```
//!
//! `axis` is `x`, `y`, `z` or `n(beta,theta)`. Angles are radians. Without
//! an `IONS` line the ion count comes from the first `OPTZ` line, or is 1.

use std::fmt::Write as _;

use super::{Circuit, GateOp, MwAxis};
use crate::error::{Error, Result};

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| perr(line, format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(perr(line, format!("{key} must be finite")));
    }
    Ok(x)
}

fn parse_axis(line: usize, v: &str) -> Result<MwAxis> {
    match v {
        "x" | "X" => Ok(MwAxis::X),
        "y" | "Y" => Ok(MwAxis::Y),
        "z" | "Z" => Ok(MwAxis::Z),
        _ => {
            let inner = v
                .strip_prefix("n(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| perr(line, format!("unknown axis '{v}'")))?;
            let (b, t) = inner.split_once(',').ok_or_else(|| perr(line, "axis n(...) needs beta,theta"))?;
            Ok(MwAxis::N { beta: parse_f64(line, "beta", b)?, theta: parse_f64(line, "theta", t)? })
        }
    }
}

/// `key=value` pairs; values may contain commas and parentheses but no spaces.
fn fields(line: usize, rest: &str) -> Result<Vec<(&str, &str)>> {
    rest.split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| perr(line, format!("expected key=value, got '{tok}'"))))
        .collect()
}

fn take<'a>(line: usize, kv: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    let mut it = kv.iter().filter(|(k, _)| *k == key);
    let v = it.next().ok_or_else(|| perr(line, format!("missing {key}=")))?;
    if it.next().is_some() {
        return Err(perr(line, format!("duplicate {key}=")));
    }
    Ok(v.1)
}

fn check_keys(line: usize, kv: &[(&str, &str)], allowed: &[&str]) -> Result<()> {
    match kv.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => Err(perr(line, format!("unknown field '{k}'"))),
        None => Ok(()),
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut n_ions: Option<usize> = None;
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match head {
            "IONS" => {
                if n_ions.is_some() || !ops.is_empty() {
                    return Err(perr(ln, "IONS must come once, before any gate"));
                }
                let n: usize = rest.trim().parse().map_err(|_| perr(ln, "IONS needs a positive integer"))?;
                if n == 0 {
                    return Err(perr(ln, "IONS must be positive"));
                }
                n_ions = Some(n);
            }
            "MW" => {
                let kv = fields(ln, rest)?;
                check_keys(ln, &kv, &["axis", "angle", "phase"])?;
                let axis = parse_axis(ln, take(ln, &kv, "axis")?)?;
                let angle = parse_f64(ln, "angle", take(ln, &kv, "angle")?)?;
                let phase = match kv.iter().any(|(k, _)| *k == "phase") {
                    true => parse_f64(ln, "phase", take(ln, &kv, "phase")?)?,
                    false => 0.0,
                };
                ops.push((ln, GateOp::Mw { axis, angle, phase }));
            }
            "OPTZ" => {
                let kv = fields(ln, rest)?;
                check_keys(ln, &kv, &["phis"])?;
                let phis = take(ln, &kv, "phis")?
                    .split(',')
                    .map(|v| parse_f64(ln, "phis", v))
                    .collect::<Result<Vec<f64>>>()?;
                match n_ions {
                    None => n_ions = Some(phis.len()),
                    Some(n) if n != phis.len() => {
                        return Err(perr(ln, format!("OPTZ has {} phases for {n} ions", phis.len())));
                    }
                    _ => {}
                }
                ops.push((ln, GateOp::OptZ { phis }));
            }
            other => return Err(perr(ln, format!("unknown gate '{other}'"))),
        }
    }
    let mut c = Circuit::new(n_ions.unwrap_or(1));
    for (ln, op) in ops {
        c.push(op).map_err(|e| perr(ln, e.to_string()))?;
    }
    Ok(c)
}

/// Writes `c` with full `f64` precision so that parsing returns it exactly.
pub fn write_circuit(c: &Circuit) -> String {
    let mut s = format!("IONS {}\n", c.n_ions);
    for op in &c.ops {
        match op {
            GateOp::Mw { axis, angle, phase } => {
                let ax = match axis {
                    MwAxis::X => "x".to_string(),
                    MwAxis::Y => "y".to_string(),
                    MwAxis::Z => "z".to_string(),
                    MwAxis::N { beta, theta } => format!("n({beta:?},{theta:?})"),
                };
                let _ = writeln!(s, "MW axis={ax} angle={angle:?} phase={phase:?}");
            }
            GateOp::OptZ { phis } => {
                let p: Vec<String> = phis.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(s, "OPTZ phis={}", p.join(","));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::simulate_circuit;
    use crate::qcore::distance_up_to_global_phase;
    use proptest::prelude::*;

    #[test]
    fn parses_example() {
        let c = parse_circuit(
            "# demo\nIONS 2\nMW axis=y angle=-1.5 phase=0.2\n\nOPTZ phis=3.0,0   # tail\nMW axis=n(0.3,1.2) angle=0.5\n",
        )
        .unwrap();
        assert_eq!(c.n_ions, 2);
        assert_eq!(c.ops.len(), 3);
        assert_eq!(c.ops[2], GateOp::Mw { axis: MwAxis::N { beta: 0.3, theta: 1.2 }, angle: 0.5, phase: 0.0 });
    }

    #[test]
    fn ion_count_from_optz() {
        let c = parse_circuit("MW axis=x angle=1 phase=0\nOPTZ phis=1,2,3\n").unwrap();
        assert_eq!(c.n_ions, 3);
        assert_eq!(parse_circuit("").unwrap().n_ions, 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("IONS 2\nMW axis=w angle=1\n", 2),
            ("IONS 2\nOPTZ phis=1\n", 2),
            ("\n\nFOO\n", 3),
            ("MW axis=x\n", 1),
            ("MW axis=x angle=nan\n", 1),
            ("MW axis=x angle=1 colour=red\n", 1),
            ("OPTZ phis=1,2\nOPTZ phis=1\n", 2),
            ("MW axis=x angle=1\nIONS 2\n", 2),
        ];
        for (text, line) in cases {
            match parse_circuit(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    proptest! {
        #[test]
        fn written_circuit_reparses_to_same_unitaries(
            angles in proptest::collection::vec(-7.0..7.0f64, 1..6),
            phis in proptest::collection::vec(-7.0..7.0f64, 3),
            beta in -3.0..3.0f64,
        ) {
            let mut c = Circuit::new(3);
            for (k, a) in angles.iter().enumerate() {
                let axis = match k % 4 { 0 => MwAxis::X, 1 => MwAxis::Y, 2 => MwAxis::Z, _ => MwAxis::N { beta, theta: *a } };
                c.push(GateOp::Mw { axis, angle: *a, phase: beta }).unwrap();
                c.push(GateOp::OptZ { phis: phis.clone() }).unwrap();
            }
            let back = parse_circuit(&write_circuit(&c)).unwrap();
            prop_assert_eq!(&back, &c);
            for (u, w) in simulate_circuit(&back).iter().zip(simulate_circuit(&c)) {
                prop_assert!(distance_up_to_global_phase(u, &w) < 1e-14);
            }
        }
    }
}
