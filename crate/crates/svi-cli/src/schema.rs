//! Closed-schema validation of the TOML configuration: every key is declared
//! with its type and bounds, unknown keys are rejected with a nearest-match
//! suggestion, and all violations are collected before reporting.

use std::fmt;

use toml::Value;

#[derive(Debug, Clone)]
pub struct ConfigError {
    /// dotted path into the document, e.g. `numerics.dt`
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub enum KeyKind {
    Bool,
    /// float (integers accepted); optional lower bound, strict or not
    Float { min: Option<f64>, strict: bool },
    Int { min: Option<i64> },
    Str { allowed: &'static [&'static str] },
    AnyStr,
    FloatArray { min_len: usize },
    StrArray { allowed: &'static [&'static str] },
    Table(&'static [KeySpec]),
}

pub struct KeySpec {
    pub name: &'static str,
    pub kind: KeyKind,
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggest(unknown: &str, known: &[&str]) -> String {
    let mut best: Vec<(&str, usize)> =
        known.iter().map(|k| (*k, levenshtein(unknown, k))).collect();
    best.sort_by_key(|(_, d)| *d);
    match best.first() {
        Some((k, d)) if *d <= 3 => format!("; did you mean `{k}`?"),
        _ => String::new(),
    }
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn numeric(value: &Value) -> Option<f64> {
    match value {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn check_key(spec: &KeySpec, value: &Value, path: &str, errors: &mut Vec<ConfigError>) {
    let p = || path.to_string();
    match &spec.kind {
        KeyKind::Bool => {
            if !matches!(value, Value::Boolean(_)) {
                errors.push(ConfigError { path: p(), message: "expected a boolean".into() });
            }
        }
        KeyKind::Float { min, strict } => match numeric(value) {
            None => errors.push(ConfigError { path: p(), message: "expected a number".into() }),
            Some(v) => {
                if let Some(m) = min {
                    let violated = if *strict { v <= *m } else { v < *m };
                    if violated {
                        let op = if *strict { ">" } else { ">=" };
                        errors.push(ConfigError {
                            path: p(),
                            message: format!("value {v} violates the bound {} {op} {m}", spec.name),
                        });
                    }
                }
            }
        },
        KeyKind::Int { min } => match value {
            Value::Integer(v) => {
                if let Some(m) = min {
                    if v < m {
                        errors.push(ConfigError {
                            path: p(),
                            message: format!("value {v} violates the bound {} >= {m}", spec.name),
                        });
                    }
                }
            }
            _ => errors.push(ConfigError { path: p(), message: "expected an integer".into() }),
        },
        KeyKind::Str { allowed } => match value {
            Value::String(s) => {
                if !allowed.contains(&s.as_str()) {
                    errors.push(ConfigError {
                        path: p(),
                        message: format!(
                            "unknown value `{s}`; expected one of {}{}",
                            allowed.join(", "),
                            suggest(s, allowed)
                        ),
                    });
                }
            }
            _ => errors.push(ConfigError { path: p(), message: "expected a string".into() }),
        },
        KeyKind::AnyStr => {
            if !matches!(value, Value::String(_)) {
                errors.push(ConfigError { path: p(), message: "expected a string".into() });
            }
        }
        KeyKind::FloatArray { min_len } => match value {
            Value::Array(items) => {
                if items.len() < *min_len {
                    errors.push(ConfigError {
                        path: p(),
                        message: format!("needs at least {min_len} entries"),
                    });
                }
                for (i, item) in items.iter().enumerate() {
                    if numeric(item).is_none() {
                        errors.push(ConfigError {
                            path: format!("{path}[{i}]"),
                            message: "expected a number".into(),
                        });
                    }
                }
            }
            _ => errors.push(ConfigError { path: p(), message: "expected an array of numbers".into() }),
        },
        KeyKind::StrArray { allowed } => match value {
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::String(s) if allowed.contains(&s.as_str()) => {}
                        Value::String(s) => errors.push(ConfigError {
                            path: format!("{path}[{i}]"),
                            message: format!(
                                "unknown value `{s}`; expected one of {}{}",
                                allowed.join(", "),
                                suggest(s, allowed)
                            ),
                        }),
                        _ => errors.push(ConfigError {
                            path: format!("{path}[{i}]"),
                            message: "expected a string".into(),
                        }),
                    }
                }
            }
            _ => errors.push(ConfigError { path: p(), message: "expected an array of strings".into() }),
        },
        KeyKind::Table(inner) => {
            validate_table(value, inner, path, errors);
        }
    }
}

pub fn validate_table(
    value: &Value,
    specs: &[KeySpec],
    prefix: &str,
    errors: &mut Vec<ConfigError>,
) {
    let table = match value {
        Value::Table(t) => t,
        _ => {
            errors.push(ConfigError {
                path: if prefix.is_empty() { "<root>".into() } else { prefix.into() },
                message: "expected a table".into(),
            });
            return;
        }
    };
    let known: Vec<&str> = specs.iter().map(|s| s.name).collect();
    for (key, val) in table {
        match specs.iter().find(|s| s.name == key.as_str()) {
            Some(spec) => check_key(spec, val, &join(prefix, key), errors),
            None => errors.push(ConfigError {
                path: join(prefix, key),
                message: format!("unknown key{}", suggest(key, &known)),
            }),
        }
    }
}
