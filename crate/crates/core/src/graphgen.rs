//! Dataset generators and file formats.
//!
//! Graphs are small weighted undirected edge lists. Matrices are exchanged
//! as MatrixMarket files (`coordinate real symmetric` for symmetric inputs,
//! `array real general` for dense exports). Both file formats and the plain
//! edge-list format are 1-based; everything in memory is 0-based.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::SymMatrix;

const KARATE_EDGES: &str = include_str!("../assets/karate.edges");
const KARATE_LABELS: &str = include_str!("../assets/karate.labels");

/// Largest Kronecker power dimension accepted.
pub const MAX_KRONECKER_DIM: usize = 4096;

/// Weighted undirected graph without self-loops; edges stored with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= n {
                return Err(Error::InvalidIndex { index: v, dim: n });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({u}, {v})")));
            }
            out.push((u, v, w));
        }
        Ok(Graph { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn adjacency(&self) -> SymMatrix {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
        SymMatrix::symmetrized(m)
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(u, v, w) in &self.edges {
            d[u] += w;
            d[v] += w;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn num_components(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }
}

/// Zachary's karate club (34 members, 78 friendships).
pub fn karate_graph() -> Graph {
    parse_edge_list(KARATE_EDGES, Some(34)).expect("vendored karate edge list is valid")
}

/// Faction of each karate club member after the split: 0 for the
/// instructor's group, 1 for the administrator's.
pub fn karate_factions() -> Vec<usize> {
    parse_labels(KARATE_LABELS, 34).expect("vendored karate labels are valid")
}

/// `order`-fold Kronecker power of a symmetric 2×2 seed.
pub fn kronecker_matrix(seed: [[f64; 2]; 2], order: u32) -> Result<SymMatrix> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "Kronecker order must be at least 1".into(),
        ));
    }
    if order > MAX_KRONECKER_DIM.trailing_zeros() {
        return Err(Error::Size(format!(
            "Kronecker order {order} exceeds the {MAX_KRONECKER_DIM}-dimension limit"
        )));
    }
    if seed[0][1] != seed[1][0] {
        return Err(Error::NotSymmetric((seed[0][1] - seed[1][0]).abs()));
    }
    let n = 1usize << order;
    Ok(SymMatrix::from_fn(n, |i, j| {
        (0..order).fold(1.0, |acc, bit| acc * seed[(i >> bit) & 1][(j >> bit) & 1])
    }))
}

/// Cayley tree (Bethe lattice): the root has `z` children, every other
/// internal node has `z − 1`, and leaves sit `depth` levels below the root.
pub fn cayley_tree(z: usize, depth: usize) -> Result<Graph> {
    if z < 2 || depth < 1 {
        return Err(Error::InvalidArgument(format!(
            "cayley tree needs z >= 2 and depth >= 1, got z={z}, depth={depth}"
        )));
    }
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for level in 0..depth {
        let branching = if level == 0 { z } else { z - 1 };
        let mut next = Vec::with_capacity(frontier.len() * branching);
        for &parent in &frontier {
            for _ in 0..branching {
                edges.push((parent, next_id, 1.0));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Graph::new(next_id, edges)
}

/// Closed-form Cayley tree node count.
pub fn cayley_node_count(z: usize, depth: usize) -> usize {
    if z == 2 {
        1 + 2 * depth
    } else {
        1 + z * ((z - 1).pow(depth as u32) - 1) / (z - 2)
    }
}

/// `I − D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(g: &Graph) -> Result<SymMatrix> {
    let d = g.degrees();
    if let Some(isolated) = d.iter().position(|&x| x <= 0.0) {
        return Err(Error::IsolatedNode(isolated));
    }
    let mut m = DMatrix::identity(g.n(), g.n());
    for &(u, v, w) in g.edges() {
        let x = -w / (d[u] * d[v]).sqrt();
        m[(u, v)] = x;
        m[(v, u)] = x;
    }
    Ok(SymMatrix::symmetrized(m))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#') && !l.starts_with('%'))
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} '{tok}'"),
    })
}

fn one_based(v: usize, line: usize) -> Result<usize> {
    v.checked_sub(1).ok_or(Error::Parse {
        line,
        msg: "indices are 1-based".into(),
    })
}

/// Parses `u v [weight]` lines (1-based). Without `n`, the node count is the
/// largest index seen.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_node = 0;
    for (line, l) in content_lines(text) {
        let mut toks = l.split_whitespace();
        let u = one_based(parse_field(toks.next(), line, "source node")?, line)?;
        let v = one_based(parse_field(toks.next(), line, "target node")?, line)?;
        let w = match toks.next() {
            Some(t) => parse_field(Some(t), line, "weight")?,
            None => 1.0,
        };
        max_node = max_node.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    Graph::new(n.unwrap_or(max_node), edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, None)
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for &(u, v, w) in g.edges() {
        writeln!(out, "{} {} {}", u + 1, v + 1, fmt_real(w)).unwrap();
    }
    write_file(path.as_ref(), &out)
}

/// `node class` lines, 1-based nodes, 0-based classes; every node labeled.
pub fn parse_labels(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n];
    for (line, l) in content_lines(text) {
        let mut toks = l.split_whitespace();
        let node = one_based(parse_field(toks.next(), line, "node")?, line)?;
        let class: usize = parse_field(toks.next(), line, "class")?;
        if node >= n {
            return Err(Error::Parse {
                line,
                msg: format!("node {} out of range 1..={n}", node + 1),
            });
        }
        if labels[node].replace(class).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("node {} labeled twice", node + 1),
            });
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Schema(format!("node {} has no label", i + 1))))
        .collect()
}

pub fn read_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, n)
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("# node class\n");
    for (i, c) in labels.iter().enumerate() {
        writeln!(out, "{} {c}", i + 1).unwrap();
    }
    write_file(path.as_ref(), &out)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn format_matrix_market(m: &SymMatrix) -> String {
    let n = m.dim();
    let mut entries = Vec::new();
    for j in 0..n {
        for i in j..n {
            let v = m.get(i, j);
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    writeln!(out, "{n} {n} {}", entries.len()).unwrap();
    for (i, j, v) in entries {
        writeln!(out, "{} {} {}", i + 1, j + 1, fmt_real(v)).unwrap();
    }
    out
}

pub fn write_matrix_market(m: &SymMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_matrix_market(m))
}

/// Parses a `coordinate real|integer symmetric` MatrixMarket document.
pub fn parse_matrix_market(text: &str) -> Result<SymMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let h: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("malformed header '{header}'"),
        });
    }
    if h[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported format '{}', expected coordinate", h[2]),
        });
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field '{}'", h[3]),
        });
    }
    if h[4] != "symmetric" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected symmetric matrix, got '{}'", h[4]),
        });
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let mut toks = size.split_whitespace();
    let rows: usize = parse_field(toks.next(), size_line, "row count")?;
    let cols: usize = parse_field(toks.next(), size_line, "column count")?;
    let nnz: usize = parse_field(toks.next(), size_line, "entry count")?;
    if rows != cols || rows == 0 {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("symmetric matrix must be square and non-empty, got {rows}x{cols}"),
        });
    }

    let n = rows;
    let mut m = DMatrix::zeros(n, n);
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for (line, l) in body {
        let mut toks = l.split_whitespace();
        let i: usize = parse_field(toks.next(), line, "row index")?;
        let j: usize = parse_field(toks.next(), line, "column index")?;
        let v: f64 = parse_field(toks.next(), line, "value")?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Parse {
                line,
                msg: format!("index ({i}, {j}) out of range for {n}x{n}"),
            });
        }
        let (r, c) = (i.max(j) - 1, i.min(j) - 1);
        if !seen.insert((r, c)) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate entry ({i}, {j})"),
            });
        }
        m[(r, c)] = v;
        m[(c, r)] = v;
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("header declares {nnz} entries, found {count}"),
        });
    }
    Ok(SymMatrix::symmetrized(m))
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text)
}

/// Dense column-major `array real general` export.
pub fn format_matrix_market_dense(m: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(out, "{} {}", m.nrows(), m.ncols()).unwrap();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(out, "{}", fmt_real(m[(i, j)])).unwrap();
        }
    }
    out
}

pub fn write_matrix_market_dense(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_matrix_market_dense(m))
}

pub fn parse_matrix_market_dense(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let h: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if h.len() != 5
        || h[0] != "%%matrixmarket"
        || h[2] != "array"
        || h[3] != "real"
        || h[4] != "general"
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected 'array real general' header, got '{header}'"),
        });
    }
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let mut toks = size.split_whitespace();
    let rows: usize = parse_field(toks.next(), size_line, "row count")?;
    let cols: usize = parse_field(toks.next(), size_line, "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    for (line, l) in body {
        values.push(parse_field::<f64>(Some(l.trim()), line, "value")?);
    }
    if values.len() != rows * cols {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("expected {} values, found {}", rows * cols, values.len()),
        });
    }
    Ok(DMatrix::from_column_slice(rows, cols, &values))
}

pub fn read_matrix_market_dense(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market_dense(&text)
}
