//! Reading DIMACS CNF and GCNF files clause by clause.

use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Header {
    pub vars: u32,
    pub clauses: u64,
    /// Present for GCNF input.
    pub groups: Option<u32>,
}

/// Streams the clauses of a DIMACS or GCNF file to `each(group, lits)`.
/// Plain CNF clauses get group `index + 1`, so every clause is its own group.
pub fn read_clauses<R: BufRead>(
    mut input: R,
    mut each: impl FnMut(u32, &[i32]),
) -> Result<Header, FormatError> {
    let mut header: Option<Header> = None;
    let mut line = Vec::new();
    let mut line_no = 0usize;
    let mut lits: Vec<i32> = Vec::new();
    let mut group: Option<u32> = None;
    let mut seen = 0u64;
    loop {
        line.clear();
        if input.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        line_no += 1;
        let err = |message: String| FormatError::Syntax {
            line: line_no,
            message,
        };
        let text = std::str::from_utf8(&line).map_err(|_| err("not UTF-8".into()))?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('c') || text.starts_with('%') {
            continue;
        }
        if let Some(rest) = text.strip_prefix('p') {
            if header.is_some() {
                return Err(err("second header line".into()));
            }
            let f: Vec<&str> = rest.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| err(format!("bad header number {s:?}: {e}")))
            };
            header = Some(match f.as_slice() {
                ["cnf", v, c] => Header {
                    vars: num(v)? as u32,
                    clauses: num(c)?,
                    groups: None,
                },
                ["gcnf", v, c, g] => Header {
                    vars: num(v)? as u32,
                    clauses: num(c)?,
                    groups: Some(num(g)? as u32),
                },
                _ => return Err(err(format!("unrecognised header {text:?}"))),
            });
            continue;
        }
        let h = header.ok_or_else(|| err("clause before header".into()))?;
        let mut body = text;
        if body.starts_with('{') {
            if h.groups.is_none() {
                return Err(err("group prefix in plain CNF".into()));
            }
            if !lits.is_empty() {
                return Err(err("group prefix inside a clause".into()));
            }
            let close = body
                .find('}')
                .ok_or_else(|| err("unterminated group prefix".into()))?;
            let g = body[1..close]
                .trim()
                .parse::<u32>()
                .map_err(|e| err(format!("bad group id: {e}")))?;
            if g > h.groups.unwrap_or(0) {
                return Err(err(format!(
                    "group {g} exceeds declared {}",
                    h.groups.unwrap_or(0)
                )));
            }
            group = Some(g);
            body = &body[close + 1..];
        } else if h.groups.is_some() && lits.is_empty() && group.is_none() {
            return Err(err("GCNF clause without group prefix".into()));
        }
        for tok in body.split_ascii_whitespace() {
            let l: i32 = tok
                .parse()
                .map_err(|e| err(format!("bad literal {tok:?}: {e}")))?;
            if l == 0 {
                seen += 1;
                let g = match h.groups {
                    Some(_) => group.take().expect("checked above"),
                    None => seen as u32,
                };
                each(g, &lits);
                lits.clear();
            } else {
                if l.unsigned_abs() > h.vars {
                    return Err(err(format!("literal {l} exceeds {} variables", h.vars)));
                }
                lits.push(l);
            }
        }
    }
    let h = header.ok_or(FormatError::Syntax {
        line: line_no,
        message: "missing header".into(),
    })?;
    if !lits.is_empty() {
        return Err(FormatError::Syntax {
            line: line_no,
            message: "unterminated final clause".into(),
        });
    }
    if seen != h.clauses {
        return Err(FormatError::Syntax {
            line: line_no,
            message: format!("header declares {} clauses, found {seen}", h.clauses),
        });
    }
    Ok(h)
}
