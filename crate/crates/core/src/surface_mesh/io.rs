//! Plain-text mesh files.
//!
//! Native format, `#` starts a comment:
//! ```text
//! <vertex count>
//! x y [z]          one line per vertex
//! <element count>
//! i j [k]          zero-based vertex indices
//! ```
//! Files whose first record starts with `v` are read as a Wavefront OBJ subset
//! (`v x y z` and triangular `f i j k`, one-based, `i/t/n` tokens allowed).

use std::fmt::Write as _;
use std::path::Path;

use super::{InterfaceMesh, Winding};
use crate::error::{Error, Result};

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

fn fixed<T: std::str::FromStr + Copy + Default, const D: usize>(toks: &[&str], line: usize) -> Result<[T; D]> {
    if toks.len() != D {
        return Err(Error::Parse {
            line,
            msg: format!("expected {D} values, found {}", toks.len()),
        });
    }
    let mut out = [T::default(); D];
    for (o, t) in out.iter_mut().zip(toks) {
        *o = parse(t, line)?;
    }
    Ok(out)
}

pub fn parse_mesh<const D: usize>(text: &str, winding: Winding) -> Result<InterfaceMesh<D>> {
    let recs: Vec<_> = records(text).collect();
    if recs.first().is_some_and(|(_, t)| t[0] == "v" || t[0] == "f") {
        return parse_obj(&recs, winding);
    }
    let mut it = recs.into_iter();
    let mut count = |what: &str| -> Result<usize> {
        let (line, toks) = it.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("missing {what} count"),
        })?;
        let [n] = fixed::<usize, 1>(&toks, line)?;
        Ok(n)
    };
    let nv = count("vertex")?;
    let mut it2 = std::iter::from_fn(|| it.next());
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, toks) = it2.next().ok_or(Error::Parse {
            line: 0,
            msg: "unexpected end of vertex list".into(),
        })?;
        verts.push(fixed::<f64, D>(&toks, line)?);
    }
    let (line, toks) = it2.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing element count".into(),
    })?;
    let [ne] = fixed::<usize, 1>(&toks, line)?;
    let mut els = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, toks) = it2.next().ok_or(Error::Parse {
            line: 0,
            msg: "unexpected end of element list".into(),
        })?;
        els.push(fixed::<usize, D>(&toks, line)?);
    }
    if let Some((line, _)) = it2.next() {
        return Err(Error::Parse {
            line,
            msg: "trailing data after element list".into(),
        });
    }
    InterfaceMesh::new(verts, els, winding)
}

fn parse_obj<const D: usize>(recs: &[(usize, Vec<&str>)], winding: Winding) -> Result<InterfaceMesh<D>> {
    if D != 3 {
        return Err(Error::Parse {
            line: recs[0].0,
            msg: "OBJ input is only accepted for 3D meshes".into(),
        });
    }
    let mut verts = Vec::new();
    let mut els = Vec::new();
    for (line, toks) in recs {
        match toks[0] {
            "v" => {
                let xyz = toks.get(1..4).ok_or(Error::Parse {
                    line: *line,
                    msg: "vertex needs three coordinates".into(),
                })?;
                verts.push(fixed::<f64, D>(xyz, *line)?);
            }
            "f" => {
                let idx: Vec<&str> = toks[1..].iter().map(|t| t.split('/').next().unwrap_or("")).collect();
                let one_based = fixed::<usize, D>(&idx, *line)?;
                if one_based.contains(&0) {
                    return Err(Error::Parse {
                        line: *line,
                        msg: "OBJ indices are one-based".into(),
                    });
                }
                els.push(one_based.map(|i| i - 1));
            }
            _ => {}
        }
    }
    InterfaceMesh::new(verts, els, winding)
}

pub fn read_mesh<const D: usize>(path: &Path, winding: Winding) -> Result<InterfaceMesh<D>> {
    parse_mesh(&std::fs::read_to_string(path)?, winding)
}

pub fn format_mesh<const D: usize>(mesh: &InterfaceMesh<D>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", mesh.n_vertices());
    for v in mesh.reference() {
        let cols: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
        let _ = writeln!(s, "{}", cols.join(" "));
    }
    let _ = writeln!(s, "{}", mesh.n_elements());
    for el in mesh.elements() {
        let cols: Vec<String> = el.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", cols.join(" "));
    }
    s
}

pub fn write_mesh<const D: usize>(mesh: &InterfaceMesh<D>, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}
