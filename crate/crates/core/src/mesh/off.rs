//! ASCII OFF reading and writing (`OFF` for R³, `nOFF` with a dimension line otherwise).

use std::fmt::Write as _;

use super::MeshSurface;
use crate::error::{Error, Result};

/// Parses an OFF document; polygons are fan-triangulated.
pub fn read_off(text: &str) -> Result<MeshSurface> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();
    let bad = |msg: &str| Error::InvalidMesh(format!("OFF: {msg}"));
    let header = tokens.next().ok_or_else(|| bad("empty file"))?;
    let dim = match header {
        "OFF" => 3,
        "nOFF" => tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("missing dimension"))?,
        other => return Err(bad(&format!("unsupported header '{other}'"))),
    };
    let mut number = |what: &str| -> Result<usize> {
        tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(&format!("expected {what}")))
    };
    let nv = number("vertex count")?;
    let nf = number("face count")?;
    let _edges = number("edge count")?;
    let mut rest = tokens;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut p = Vec::with_capacity(dim);
        for _ in 0..dim {
            let x: f64 = rest.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad coordinate"))?;
            p.push(x);
        }
        vertices.push(p);
    }
    let mut triangles = Vec::new();
    for _ in 0..nf {
        let k: usize = rest.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad face"))?;
        let mut idx = Vec::with_capacity(k);
        for _ in 0..k {
            idx.push(rest.next().and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| bad("bad face index"))?);
        }
        if k < 3 {
            return Err(bad("faces need at least three vertices"));
        }
        for i in 1..k - 1 {
            triangles.push([idx[0], idx[i], idx[i + 1]]);
        }
    }
    MeshSurface::new(vertices, triangles)
}

pub fn write_off(mesh: &MeshSurface) -> String {
    let d = mesh.ambient_dim();
    let mut s = String::new();
    if d == 3 {
        s.push_str("OFF\n");
    } else {
        let _ = writeln!(s, "nOFF\n{d}");
    }
    let _ = writeln!(s, "{} {} 0", mesh.vertices().len(), mesh.triangles().len());
    for v in mesh.vertices() {
        let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}
