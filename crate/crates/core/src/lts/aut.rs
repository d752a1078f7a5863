//! Aldebaran `.aut` files with a `.meta` sidecar, and Graphviz output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{Action, Lts};

#[derive(Debug, thiserror::Error)]
pub enum AutError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn to_aut_string(l: &Lts) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "des ({},{},{})",
        l.initial(),
        l.num_transitions(),
        l.num_states()
    );
    for t in l.transitions() {
        let _ = writeln!(out, "({},\"{}\",{})", t.src, l.label(t.label), t.dst);
    }
    out
}

fn to_meta_string(l: &Lts) -> String {
    let mut out = String::new();
    if let Some(p) = l.pi() {
        let _ = writeln!(out, "pi={p}");
    }
    if let Some(t) = l.theta() {
        let _ = writeln!(out, "theta={t}");
    }
    if let Some(a) = l.declared_alphabet() {
        let names: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "alphabet={}", names.join(" "));
    }
    out
}

fn malformed(line: usize, message: impl Into<String>) -> AutError {
    AutError::Malformed {
        line,
        message: message.into(),
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize, AutError> {
    s.trim()
        .parse()
        .map_err(|_| malformed(line, format!("expected a number, found `{}`", s.trim())))
}

pub fn from_aut_str(text: &str) -> Result<Lts, AutError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "missing `des` header"))?;
    let inner = header
        .trim()
        .strip_prefix("des")
        .map(str::trim)
        .and_then(|h| h.strip_prefix('('))
        .and_then(|h| h.strip_suffix(')'))
        .ok_or_else(|| malformed(1, "malformed `des` header"))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 3 {
        return Err(malformed(1, "header needs three fields"));
    }
    let (init, ntrans, nstates) = (
        parse_usize(parts[0], 1)?,
        parse_usize(parts[1], 1)?,
        parse_usize(parts[2], 1)?,
    );
    if nstates == 0 || init >= nstates {
        return Err(malformed(1, "initial state out of range"));
    }
    let mut l = Lts::new(nstates, init);
    for (i, raw) in lines {
        let n = i + 1;
        let body = raw
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| malformed(n, "expected `(src,\"label\",dst)`"))?;
        let (src, rest) = body
            .split_once(',')
            .ok_or_else(|| malformed(n, "missing label"))?;
        let (label, dst) = rest
            .rsplit_once(',')
            .ok_or_else(|| malformed(n, "missing target"))?;
        let label = label.trim();
        let label = label
            .strip_prefix('"')
            .and_then(|x| x.strip_suffix('"'))
            .unwrap_or(label);
        let action: Action = label.parse().map_err(|e| malformed(n, format!("{e}")))?;
        let (s, d) = (parse_usize(src, n)?, parse_usize(dst, n)?);
        if s >= nstates || d >= nstates {
            return Err(malformed(n, "state out of range"));
        }
        l.add(s, &action, d);
    }
    if l.num_transitions() != ntrans {
        return Err(malformed(
            1,
            format!(
                "header announces {ntrans} transitions, found {}",
                l.num_transitions()
            ),
        ));
    }
    Ok(l)
}

fn apply_meta(l: &mut Lts, text: &str) -> Result<(), AutError> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| malformed(i + 1, "expected key=value"))?;
        match k.trim() {
            "pi" | "theta" => {
                let s = parse_usize(v, i + 1)?;
                if s >= l.num_states() {
                    return Err(malformed(i + 1, "state out of range"));
                }
                if k.trim() == "pi" {
                    l.set_pi(Some(s));
                } else {
                    l.set_theta(Some(s));
                }
            }
            "alphabet" => {
                let a: Result<Vec<Action>, _> =
                    v.split_whitespace().map(|x| x.parse::<Action>()).collect();
                l.set_alphabet(Some(a.map_err(|e| malformed(i + 1, e.to_string()))?));
            }
            other => return Err(malformed(i + 1, format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}

pub fn write_aut(l: &Lts, path: &Path) -> Result<(), AutError> {
    let io_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| AutError::Io { path: p, source }
    };
    fs::write(path, to_aut_string(l)).map_err(io_err(path))?;
    let meta = to_meta_string(l);
    let mp = meta_path(path);
    if meta.is_empty() {
        if mp.exists() {
            fs::remove_file(&mp).map_err(io_err(&mp))?;
        }
    } else {
        fs::write(&mp, meta).map_err(io_err(&mp))?;
    }
    Ok(())
}

pub fn read_aut(path: &Path) -> Result<Lts, AutError> {
    let text = fs::read_to_string(path).map_err(|source| AutError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut l = from_aut_str(&text)?;
    let mp = meta_path(path);
    if mp.exists() {
        let meta = fs::read_to_string(&mp).map_err(|source| AutError::Io {
            path: mp.display().to_string(),
            source,
        })?;
        apply_meta(&mut l, &meta)?;
    }
    Ok(l)
}

pub fn to_dot_string(l: &Lts) -> String {
    let mut out = String::from(
        "digraph lts {\n  rankdir=LR;\n  node [shape=circle];\n  start [shape=point];\n",
    );
    let _ = writeln!(out, "  start -> {};", l.initial());
    for s in 0..l.num_states() {
        if Some(s) == l.pi() {
            let _ = writeln!(out, "  {s} [label=\"pi\", shape=doublecircle, color=red];");
        } else if Some(s) == l.theta() {
            let _ = writeln!(out, "  {s} [label=\"theta\", style=dashed];");
        } else {
            let _ = writeln!(out, "  {s};");
        }
    }
    for t in l.transitions() {
        let style = if Some(t.dst) == l.theta() {
            ", style=dashed"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"{style}];",
            t.src,
            t.dst,
            l.label(t.label)
        );
    }
    out.push_str("}\n");
    out
}

pub fn write_dot(l: &Lts, path: &Path) -> Result<(), AutError> {
    fs::write(path, to_dot_string(l)).map_err(|source| AutError::Io {
        path: path.display().to_string(),
        source,
    })
}
