//! CPLEX LP text export, for feeding a model to an external solver.

use std::fmt::Write;

use super::Model;

fn ident(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.()[]{}!#$%&',;?@~|".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, 'v');
    }
    s
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn expr(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    for (name, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { " -" } else if first { "" } else { " +" };
        let mag = a.abs();
        if mag == 1.0 {
            let _ = write!(out, "{sign} {name}");
        } else {
            let _ = write!(out, "{sign} {} {name}", num(mag));
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

pub fn to_lp(model: &Model, title: &str) -> String {
    let names: Vec<String> = model.vars.iter().map(|v| ident(&v.name)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {title}");
    out.push_str("Maximize\n obj:");
    expr(&mut out, model.vars.iter().enumerate().map(|(i, v)| (names[i].clone(), v.obj)));
    if model.obj_offset != 0.0 {
        let _ = write!(out, " + {} constant_one", num(model.obj_offset));
    }
    out.push_str("\nSubject To\n");
    for (i, r) in model.rows.iter().enumerate() {
        let base = ident(&format!("{}_{}_{i}", r.family, r.name));
        let terms = || r.coeffs.iter().map(|(v, a)| (names[v.0].clone(), *a));
        let mut line = |suffix: &str, op: &str, rhs: f64| {
            let _ = write!(out, " {base}{suffix}:");
            expr(&mut out, terms());
            let _ = writeln!(out, " {op} {}", num(rhs));
        };
        match (r.lo.is_finite(), r.hi.is_finite()) {
            (true, true) if r.lo == r.hi => line("", "=", r.lo),
            (true, true) => {
                line("_lo", ">=", r.lo);
                line("_hi", "<=", r.hi);
            }
            (true, false) => line("", ">=", r.lo),
            (false, true) => line("", "<=", r.hi),
            (false, false) => {}
        }
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars.iter().enumerate() {
        let lo = if v.lb.is_finite() { num(v.lb) } else { "-inf".into() };
        let hi = if v.ub.is_finite() { num(v.ub) } else { "+inf".into() };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", names[i]);
    }
    if model.obj_offset != 0.0 {
        out.push_str(" constant_one = 1\n");
    }
    let ints: Vec<&str> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integer)
        .map(|(i, _)| names[i].as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_model_text() {
        let mut m = Model::new();
        let x = m.add_binary("x_0_1_k0", 1.0);
        let p = m.add_var("p 3", 0.0, 4.0, true, -1000.0);
        m.add_le("deg", "n0k0", vec![(x, 1.0)], 1.0);
        m.add_eq("service", "u3", vec![(x, 1.0), (p, 1.0)], 4.0);
        m.add_row("rng", "l", vec![(x, 2.0), (p, -1.0)], 0.0, 3.0);
        let text = to_lp(&m, "demo");
        assert!(text.contains("obj: x_0_1_k0 - 1000 p_3"), "{text}");
        assert!(text.contains("service_u3_1: x_0_1_k0 + p_3 = 4"), "{text}");
        assert!(text.contains("rng_l_2_lo: 2 x_0_1_k0 - p_3 >= 0"), "{text}");
        assert!(text.contains(" 0 <= p_3 <= 4"));
        assert!(text.ends_with("End\n"));
    }
}
