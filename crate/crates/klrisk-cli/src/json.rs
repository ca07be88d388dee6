//! Hand-assembled JSON output: floats carry 17 significant digits, infinite
//! terms become the strings "inf" / "-inf", and key order is fixed by the
//! code, so identical runs produce byte-identical reports.

use klrisk::numeric::g17;

pub fn jstr(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn jnum(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".to_string()
    } else if x == f64::INFINITY {
        "\"inf\"".to_string()
    } else if x == f64::NEG_INFINITY {
        "\"-inf\"".to_string()
    } else {
        g17(x)
    }
}

pub fn jbool(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

pub fn jarr<I: IntoIterator<Item = String>>(items: I) -> String {
    let parts: Vec<String> = items.into_iter().collect();
    format!("[{}]", parts.join(","))
}

pub fn jobj(pairs: &[(&str, String)]) -> String {
    let parts: Vec<String> = pairs
        .iter()
        .map(|(k, v)| format!("{}:{}", jstr(k), v))
        .collect();
    format!("{{{}}}", parts.join(","))
}

pub fn jnum_vec(xs: &[f64]) -> String {
    jarr(xs.iter().map(|&x| jnum(x)))
}
