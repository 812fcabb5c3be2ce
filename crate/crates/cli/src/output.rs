//! CSV and JSON emission. Both carry the same metadata: a `#` comment block
//! for CSV, a `metadata` object for JSON.

use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub task: &'static str,
    pub method: Option<String>,
}

impl Metadata {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("smk_version", self.version.to_string()),
            ("config_sha256", self.config_sha256.clone()),
            ("seed", self.seed.to_string()),
            ("task", self.task.to_string()),
        ];
        if let Some(m) = &self.method {
            out.push(("method", m.clone()));
        }
        out
    }

    /// `# key: value` lines.
    pub fn comment_block(&self) -> String {
        let mut buf = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(buf, "# {k}: {v}");
        }
        buf
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(meta: &Metadata, header: &[String]) -> Self {
        let mut buf = meta.comment_block();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Rebuild every object with its keys in lexicographic order, whatever map
/// type `serde_json` was compiled with.
pub fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, sort_keys(v));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn json_report(meta: &Metadata, report: Value) -> Vec<u8> {
    let mut m = Map::new();
    for (k, v) in meta.pairs() {
        let v = if k == "seed" {
            Value::from(meta.seed)
        } else {
            Value::String(v)
        };
        m.insert(k.to_string(), v);
    }
    let mut root = Map::new();
    root.insert("metadata".into(), Value::Object(m));
    root.insert("report".into(), report);
    let mut s =
        serde_json::to_string_pretty(&sort_keys(Value::Object(root))).expect("serialising a Value");
    s.push('\n');
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata {
            version: "0.0.0",
            config_sha256: "ab".into(),
            seed: 3,
            task: "solve",
            method: Some("renewal".into()),
        }
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 0.0, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&meta(), &["t".into(), "p".into()]);
        c.row(&[num(0.0), num(1.0)]);
        let s = String::from_utf8(c.into_bytes()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# smk_version: 0.0.0");
        assert_eq!(lines[4], "# method: renewal");
        assert_eq!(lines[5], "t,p");
        assert!(!s.contains('\r'));
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn json_keys_sorted() {
        let v = serde_json::json!({"zeta": 1, "alpha": {"y": 2, "b": 3}});
        let s = String::from_utf8(json_report(&meta(), v)).unwrap();
        let a = s.find("\"alpha\"").unwrap();
        assert!(a < s.find("\"zeta\"").unwrap());
        assert!(s.find("\"b\"").unwrap() < s.find("\"y\"").unwrap());
        assert!(s.find("\"metadata\"").unwrap() < s.find("\"report\"").unwrap());
    }
}
