//! Interval and triangle meshes, degree-of-freedom maps, and the plain-text
//! mesh file format.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMesh {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
}

impl IntervalMesh {
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }
}

pub fn build_interval_mesh(a: f64, b: f64, n_elements: usize) -> Result<IntervalMesh> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("interval endpoints must satisfy a < b, got [{a}, {b}]")));
    }
    if n_elements < 1 {
        return Err(Error::InvalidArgument("interval mesh needs at least one element".into()));
    }
    let nodes = (0..=n_elements)
        .map(|i| a + (b - a) * i as f64 / n_elements as f64)
        .collect();
    Ok(IntervalMesh { a, b, nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub n0: usize,
    pub n1: usize,
    pub tag: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub points: Vec<[f64; 2]>,
    /// Node index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl TriMesh {
    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Enforce every structural invariant; used by the file loader and the
    /// built-in mesher alike.
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::InvalidMesh(format!("triangle {t} references node {v} out of range")));
                }
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "orientation: triangle {t} is not counter-clockwise (signed area {:.3e})",
                    self.signed_area(t)
                )));
            }
        }
        // Count how many triangles own each undirected edge.
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (i, e) in self.boundary_edges.iter().enumerate() {
            if e.n0 >= n || e.n1 >= n {
                return Err(Error::InvalidMesh(format!("boundary edge {i} references a node out of range")));
            }
            let key = (e.n0.min(e.n1), e.n0.max(e.n1));
            match edge_count.get(&key) {
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge {i} ({}, {}) not on any triangle",
                        e.n0, e.n1
                    )))
                }
                Some(&c) if c != 1 => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge {i} ({}, {}) is interior (shared by {c} triangles)",
                        e.n0, e.n1
                    )))
                }
                _ => {}
            }
        }
        // Same-tag edges must form a single connected chain (or loop).
        let mut tags: Vec<u32> = self.boundary_edges.iter().map(|e| e.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        for tag in tags {
            self.chain_for_tag(tag)?;
        }
        Ok(())
    }

    /// All topological boundary edges (owned by exactly one triangle).
    pub fn topological_boundary(&self) -> Vec<(usize, usize)> {
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut out: Vec<(usize, usize)> = edge_count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(k, _)| k)
            .collect();
        out.sort_unstable();
        out
    }

    /// Nodes lying on tagged boundary edges.
    pub fn boundary_nodes(&self, tags: &[u32]) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| tags.contains(&e.tag))
            .flat_map(|e| [e.n0, e.n1])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Ordered node chain for the edges of one tag, with node degrees
    /// checked; returns the node sequence (open chain or closed loop).
    fn chain_for_tag(&self, tag: u32) -> Result<Vec<usize>> {
        let edges: Vec<&BoundaryEdge> = self.boundary_edges.iter().filter(|e| e.tag == tag).collect();
        if edges.is_empty() {
            return Err(Error::InvalidArgument(format!("no boundary edges with tag {tag}")));
        }
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in &edges {
            adj.entry(e.n0).or_default().push(e.n1);
            adj.entry(e.n1).or_default().push(e.n0);
        }
        for (node, nb) in &adj {
            if nb.len() > 2 {
                return Err(Error::InvalidMesh(format!(
                    "boundary edges with tag {tag} branch at node {node} (not a chain)"
                )));
            }
        }
        let mut endpoints: Vec<usize> = adj
            .iter()
            .filter(|(_, nb)| nb.len() == 1)
            .map(|(&node, _)| node)
            .collect();
        // Deterministic walk start: lexicographically smallest coordinate.
        let start = if endpoints.is_empty() {
            // Closed loop.
            *adj.keys().min().unwrap()
        } else {
            if endpoints.len() != 2 {
                return Err(Error::InvalidMesh(format!(
                    "boundary edges with tag {tag} form {} disconnected chains",
                    endpoints.len() / 2
                )));
            }
            endpoints.sort_by(|&a, &b| {
                let (pa, pb) = (self.points[a], self.points[b]);
                pa.partial_cmp(&pb).unwrap()
            });
            endpoints[0]
        };
        let mut chain = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|&v| v != prev);
            match next {
                Some(v) => {
                    chain.push(v);
                    prev = cur;
                    cur = v;
                    if v == start {
                        break; // closed loop
                    }
                }
                None => break, // open chain end
            }
        }
        if chain.len() != edges.len() + 1 {
            return Err(Error::InvalidMesh(format!(
                "boundary edges with tag {tag} do not form a single connected chain"
            )));
        }
        Ok(chain)
    }
}

/// Side tags for the rectangle mesher, in order bottom, right, top, left.
pub type SideTags = [u32; 4];

/// Structured rectangle mesh: each cell split into two CCW triangles.
pub fn build_rect_mesh(
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
    tags: SideTags,
) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("rect mesh needs positive cell counts".into()));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(Error::InvalidArgument("rect mesh ranges must be increasing".into()));
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            points.push([
                x_range.0 + (x_range.1 - x_range.0) * i as f64 / nx as f64,
                y_range.0 + (y_range.1 - y_range.0) * j as f64 / ny as f64,
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n01, n11) = (node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1));
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { n0: node(i, 0), n1: node(i + 1, 0), tag: tags[0] });
        boundary_edges.push(BoundaryEdge { n0: node(i, ny), n1: node(i + 1, ny), tag: tags[2] });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { n0: node(nx, j), n1: node(nx, j + 1), tag: tags[1] });
        boundary_edges.push(BoundaryEdge { n0: node(0, j), n1: node(0, j + 1), tag: tags[3] });
    }
    let mesh = TriMesh { points, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Free/constrained split of the scalar degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub total: usize,
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
}

impl DofMap {
    pub fn all_free(total: usize) -> Self {
        DofMap { total, free: (0..total).collect(), constrained: vec![] }
    }

    pub fn from_constrained(total: usize, constrained: &[usize]) -> Self {
        let mut flag = vec![false; total];
        for &c in constrained {
            flag[c] = true;
        }
        DofMap {
            total,
            free: (0..total).filter(|&i| !flag[i]).collect(),
            constrained: constrained.to_vec(),
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }
}

/// Parse the line-oriented mesh format:
/// `nodes <count>` then `x y` lines, `triangles <count>` then `i j k`
/// lines (0-based, CCW), `boundary <count>` then `i j tag` lines.
/// `#` starts a comment; parsing is locale-independent.
pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    struct Lines<'a> {
        inner: std::iter::Enumerate<std::str::Lines<'a>>,
    }
    impl<'a> Lines<'a> {
        fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
            for (idx, raw) in self.inner.by_ref() {
                let body = raw.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    continue;
                }
                return Some((idx + 1, body.split_whitespace().collect()));
            }
            None
        }
    }
    let mut lines = Lines { inner: text.lines().enumerate() };

    fn expect_header(tok: &[&str], line: usize, word: &str) -> Result<usize> {
        if tok.len() != 2 || tok[0] != word {
            return Err(Error::ParseError {
                line,
                message: format!("expected `{word} <count>`"),
            });
        }
        tok[1].parse::<usize>().map_err(|_| Error::ParseError {
            line,
            message: format!("bad count `{}`", tok[1]),
        })
    }

    let (line, tok) = lines
        .next_tokens()
        .ok_or(Error::ParseError { line: 0, message: "empty mesh file".into() })?;
    let n_nodes = expect_header(&tok, line, "nodes")?;
    let mut points = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, tok) = lines
            .next_tokens()
            .ok_or(Error::ParseError { line: 0, message: "unexpected end of file in nodes".into() })?;
        if tok.len() != 2 {
            return Err(Error::ParseError { line, message: "node line must be `x y`".into() });
        }
        let x: f64 = tok[0].parse().map_err(|_| Error::ParseError { line, message: format!("bad number `{}`", tok[0]) })?;
        let y: f64 = tok[1].parse().map_err(|_| Error::ParseError { line, message: format!("bad number `{}`", tok[1]) })?;
        points.push([x, y]);
    }

    let (line, tok) = lines
        .next_tokens()
        .ok_or(Error::ParseError { line: 0, message: "missing `triangles` section".into() })?;
    let n_tris = expect_header(&tok, line, "triangles")?;
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (line, tok) = lines
            .next_tokens()
            .ok_or(Error::ParseError { line: 0, message: "unexpected end of file in triangles".into() })?;
        if tok.len() != 3 {
            return Err(Error::ParseError { line, message: "triangle line must be `i j k`".into() });
        }
        let mut tri = [0usize; 3];
        for (slot, t) in tri.iter_mut().zip(tok.iter()) {
            *slot = t.parse().map_err(|_| Error::ParseError { line, message: format!("bad index `{t}`") })?;
        }
        triangles.push(tri);
    }

    let (line, tok) = lines
        .next_tokens()
        .ok_or(Error::ParseError { line: 0, message: "missing `boundary` section".into() })?;
    let n_edges = expect_header(&tok, line, "boundary")?;
    let mut boundary_edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, tok) = lines
            .next_tokens()
            .ok_or(Error::ParseError { line: 0, message: "unexpected end of file in boundary".into() })?;
        if tok.len() != 3 {
            return Err(Error::ParseError { line, message: "boundary line must be `i j tag`".into() });
        }
        let n0 = tok[0].parse().map_err(|_| Error::ParseError { line, message: format!("bad index `{}`", tok[0]) })?;
        let n1 = tok[1].parse().map_err(|_| Error::ParseError { line, message: format!("bad index `{}`", tok[1]) })?;
        let tag = tok[2].parse().map_err(|_| Error::ParseError { line, message: format!("bad tag `{}`", tok[2]) })?;
        boundary_edges.push(BoundaryEdge { n0, n1, tag });
    }

    let mesh = TriMesh { points, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

pub fn load_mesh_file(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!(
        "cannot read mesh file {}: {e}",
        path.display()
    )))?;
    parse_mesh(&text)
}

/// Ordered boundary chain for one tag with cumulative arclength normalized
/// to [0, 1]; the walk starts at the endpoint with the smaller coordinates.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub nodes: Vec<usize>,
    pub arclength: Vec<f64>,
}

pub fn boundary_trace(mesh: &TriMesh, tag: u32) -> Result<BoundaryTrace> {
    let chain = mesh.chain_for_tag(tag)?;
    let mut arclength = Vec::with_capacity(chain.len());
    let mut acc = 0.0;
    arclength.push(0.0);
    for w in chain.windows(2) {
        let (a, b) = (mesh.points[w[0]], mesh.points[w[1]]);
        acc += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        arclength.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::InvalidMesh(format!("tag {tag} chain has zero length")));
    }
    for s in &mut arclength {
        *s /= acc;
    }
    Ok(BoundaryTrace { nodes: chain, arclength })
}
