//! Canonical JSON emission: fixed key order (sorted), floats printed with 17
//! significant digits, so repeated runs are byte-identical.

use serde_json::Value;

/// Render a JSON value canonically. Object keys come out sorted (serde_json's
/// map is ordered), non-integer numbers in scientific notation with 17
/// significant digits.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                out.push_str(&format_float(f));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(k, out);
                out.push(':');
                write_value(&map[k.as_str()], out);
            }
            out.push('}');
        }
    }
}

fn format_float(f: f64) -> String {
    if !f.is_finite() {
        return "null".to_string();
    }
    if f == f.trunc() && f.abs() < 1e15 {
        // integral value: keep it readable
        return format!("{:.1}", f);
    }
    format!("{:.16e}", f)
}

fn write_string(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_output_is_stable_and_ordered() {
        let v = json!({"zeta": 1, "alpha": 0.5, "mid": [true, null, "x\"y"]});
        let s = to_canonical_string(&v);
        assert_eq!(
            s,
            "{\"alpha\":5.0000000000000000e-1,\"mid\":[true,null,\"x\\\"y\"],\"zeta\":1}"
        );
        assert_eq!(s, to_canonical_string(&v));
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        let v = json!({"pi": std::f64::consts::PI});
        assert_eq!(to_canonical_string(&v), "{\"pi\":3.1415926535897931e0}");
    }
}
