use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Mesh, Point};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-empty line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last;
        self.next().ok_or_else(|| err(last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse::<T>().map_err(|_| err(line, format!("invalid {what} '{tok}'")))
}

fn expect_end(lines: &mut Lines, section: &str) -> Result<()> {
    let (ln, l) = lines.expect(&format!("$End{section}"))?;
    if l != format!("$End{section}") {
        return Err(err(ln, format!("expected $End{section}, found '{l}'")));
    }
    Ok(())
}

/// Reads a Gmsh MSH 2.2 ASCII file, keeping 3-node triangles only.
/// Nodes not referenced by any triangle are dropped.
pub fn parse_msh(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    let mut nodes: Option<(Vec<Point>, HashMap<usize, usize>)> = None;
    let mut tris: Option<Vec<[usize; 3]>> = None;
    let mut tri_lines: Vec<usize> = Vec::new();
    let mut saw_format = false;

    while let Some((ln, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let (fl, f) = lines.expect("format line")?;
                let mut it = f.split_whitespace();
                let version: f64 = parse_num(it.next(), fl, "version")?;
                let file_type: i32 = parse_num(it.next(), fl, "file type")?;
                if !(2.0..3.0).contains(&version) {
                    return Err(err(fl, format!("unsupported MSH version {version} (2.2 ASCII only)")));
                }
                if file_type != 0 {
                    return Err(err(fl, "binary MSH files are not supported"));
                }
                expect_end(&mut lines, "MeshFormat")?;
                saw_format = true;
            }
            "$Nodes" => {
                let (cl, c) = lines.expect("node count")?;
                let n: usize = parse_num(Some(c), cl, "node count")?;
                let mut pts = Vec::with_capacity(n);
                let mut ids = HashMap::with_capacity(n);
                for _ in 0..n {
                    let (nl, row) = lines.expect("node")?;
                    if row.starts_with('$') {
                        return Err(err(nl, format!("expected {n} nodes, section ended early")));
                    }
                    let mut it = row.split_whitespace();
                    let id: usize = parse_num(it.next(), nl, "node id")?;
                    let x: f64 = parse_num(it.next(), nl, "x coordinate")?;
                    let y: f64 = parse_num(it.next(), nl, "y coordinate")?;
                    if ids.insert(id, pts.len()).is_some() {
                        return Err(err(nl, format!("duplicate node id {id}")));
                    }
                    pts.push([x, y]);
                }
                expect_end(&mut lines, "Nodes")?;
                nodes = Some((pts, ids));
            }
            "$Elements" => {
                let (cl, c) = lines.expect("element count")?;
                let n: usize = parse_num(Some(c), cl, "element count")?;
                let mut out = Vec::new();
                for _ in 0..n {
                    let (el, row) = lines.expect("element")?;
                    if row.starts_with('$') {
                        return Err(err(el, format!("expected {n} elements, section ended early")));
                    }
                    let mut it = row.split_whitespace();
                    let _id: usize = parse_num(it.next(), el, "element id")?;
                    let ty: u32 = parse_num(it.next(), el, "element type")?;
                    let ntags: usize = parse_num(it.next(), el, "tag count")?;
                    for _ in 0..ntags {
                        let _: i64 = parse_num(it.next(), el, "tag")?;
                    }
                    if ty == 2 {
                        let a: usize = parse_num(it.next(), el, "node")?;
                        let b: usize = parse_num(it.next(), el, "node")?;
                        let c: usize = parse_num(it.next(), el, "node")?;
                        out.push([a, b, c]);
                        tri_lines.push(el);
                    }
                }
                expect_end(&mut lines, "Elements")?;
                tris = Some(out);
            }
            other if other.starts_with("$End") => {
                return Err(err(ln, format!("unexpected '{other}'")));
            }
            other if other.starts_with('$') => {
                let name = &other[1..];
                loop {
                    let (_, l) = lines.expect(&format!("$End{name}"))?;
                    if l == format!("$End{name}") {
                        break;
                    }
                }
            }
            other => return Err(err(ln, format!("unexpected content '{other}' outside a section"))),
        }
    }

    let end = lines.last + 1;
    if !saw_format {
        return Err(err(end, "missing $MeshFormat section"));
    }
    let (pts, ids) = nodes.ok_or_else(|| err(end, "missing $Nodes section"))?;
    let raw = tris.ok_or_else(|| err(end, "missing $Elements section"))?;
    if raw.is_empty() {
        return Err(err(end, "no triangle elements"));
    }
    let mut triangles = Vec::with_capacity(raw.len());
    for (t, ln) in raw.iter().zip(&tri_lines) {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            idx[k] = *ids.get(&t[k]).ok_or_else(|| err(*ln, format!("unknown node id {}", t[k])))?;
        }
        triangles.push(idx);
    }
    Mesh::new_compacting(pts, triangles)
}

/// Writes the mesh as MSH 2.2 ASCII with boundary lines and triangles.
pub fn write_msh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.vertices.len());
    for (i, p) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let nlines: usize = mesh.boundary_loops.iter().map(|l| l.len()).sum();
    let _ = writeln!(s, "{}", nlines + mesh.triangles.len());
    let mut id = 1;
    for (l, lp) in mesh.boundary_loops.iter().enumerate() {
        for i in 0..lp.len() {
            let _ = writeln!(s, "{id} 1 2 {} {} {} {}", l + 1, l + 1, lp[i] + 1, lp[(i + 1) % lp.len()] + 1);
            id += 1;
        }
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{id} 2 2 0 0 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_TRI: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n$Elements\n1\n1 2 2 0 1 1 2 3\n$EndElements\n";

    #[test]
    fn parses_single_triangle() {
        let m = parse_msh(ONE_TRI).unwrap();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_triangles(), 1);
        assert_eq!(m.boundary_loops.len(), 1);
        assert_eq!(m.boundary_loops[0].len(), 3);
    }

    #[test]
    fn missing_end_nodes_reports_line() {
        let text = ONE_TRI.replace("$EndNodes\n", "");
        match parse_msh(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_binary() {
        let text = ONE_TRI.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(parse_msh(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn clockwise_input_is_flipped() {
        let text = ONE_TRI.replace("1 2 2 0 1 1 2 3", "1 2 2 0 1 1 3 2");
        let m = parse_msh(&text).unwrap();
        assert!(m.tri_area(0) > 0.0);
    }

    #[test]
    fn skips_unknown_sections_and_lines() {
        let text = ONE_TRI.replace(
            "$Nodes",
            "$PhysicalNames\n1\n2 1 \"dom\"\n$EndPhysicalNames\n$Nodes",
        );
        let text = text.replace("1\n1 2 2 0 1 1 2 3", "2\n1 1 2 0 1 1 2\n2 2 2 0 1 1 2 3");
        let m = parse_msh(&text).unwrap();
        assert_eq!(m.num_triangles(), 1);
    }

    #[test]
    fn roundtrip() {
        let m = parse_msh(ONE_TRI).unwrap();
        let back = parse_msh(&write_msh(&m)).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
    }
}
