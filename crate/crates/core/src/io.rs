//! Text formats for graphs and update streams.
//!
//! Graph file: a header `n m` followed by `m` lines `u v w`.
//! Update file: lines `+ u v w` or `- u v`; a blank line ends a batch.
//! Lines starting with `#` are ignored in both.

use std::fmt::Write as _;

use crate::graph::{Batch, Graph, GraphError, UpdateOp, VertexId};

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, GraphError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hl, "n")?;
    let m: usize = field(toks.next(), hl, "m")?;
    if toks.next().is_some() {
        return Err(parse_err(hl, "trailing tokens in header"));
    }
    let mut g = Graph::new(n);
    for (ln, l) in lines {
        let mut t = l.split_whitespace();
        let u: VertexId = field(t.next(), ln, "u")?;
        let v: VertexId = field(t.next(), ln, "v")?;
        let w: f64 = field(t.next(), ln, "w")?;
        if t.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
        g.insert(u, v, w).map_err(|e| parse_err(ln, e.to_string()))?;
    }
    if g.m() != m {
        return Err(parse_err(hl, format!("header says {m} edges, found {}", g.m())));
    }
    Ok(g)
}

pub fn write_graph(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.u, e.v, e.w);
    }
    s
}

pub fn parse_op(l: &str, ln: usize) -> Result<UpdateOp, GraphError> {
    let mut t = l.split_whitespace();
    match t.next() {
        Some("+") => {
            let u = field(t.next(), ln, "u")?;
            let v = field(t.next(), ln, "v")?;
            let w = field(t.next(), ln, "w")?;
            if t.next().is_some() {
                return Err(parse_err(ln, "trailing tokens"));
            }
            Ok(UpdateOp::Insert { u, v, w })
        }
        Some("-") => {
            let u = field(t.next(), ln, "u")?;
            let v = field(t.next(), ln, "v")?;
            if t.next().is_some() {
                return Err(parse_err(ln, "trailing tokens"));
            }
            Ok(UpdateOp::Delete { u, v })
        }
        Some(other) => Err(parse_err(ln, format!("unknown op `{other}`"))),
        None => Err(parse_err(ln, "empty op")),
    }
}

pub fn parse_updates(text: &str) -> Result<Vec<Batch>, GraphError> {
    let mut batches = Vec::new();
    let mut cur = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.starts_with('#') {
            continue;
        }
        if l.is_empty() {
            if !cur.is_empty() {
                batches.push(std::mem::take(&mut cur));
            }
            continue;
        }
        cur.push(parse_op(l, i + 1)?);
    }
    if !cur.is_empty() {
        batches.push(cur);
    }
    Ok(batches)
}

pub fn write_updates(batches: &[Batch]) -> String {
    let mut s = String::new();
    for (i, b) in batches.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for op in b {
            match *op {
                UpdateOp::Insert { u, v, w } => {
                    let _ = writeln!(s, "+ {u} {v} {w}");
                }
                UpdateOp::Delete { u, v } => {
                    let _ = writeln!(s, "- {u} {v}");
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let g = parse_graph("# demo\n3 2\n0 1 0.5\n1 2 3\n").unwrap();
        assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let err = parse_graph("3 3\n0 1 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn updates_split_on_blank_lines() {
        let b = parse_updates("+ 0 1 2.5\n- 1 2\n\n\n+ 3 4 1\n").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0][1], UpdateOp::Delete { u: 1, v: 2 });
        assert_eq!(parse_updates(&write_updates(&b)).unwrap(), b);
    }

    #[test]
    fn bad_op_line_number() {
        let err = parse_updates("+ 0 1 1\n* 2 3\n").unwrap_err();
        assert_eq!(err, GraphError::Parse { line: 2, msg: "unknown op `*`".into() });
    }
}
