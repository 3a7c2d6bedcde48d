//! Conforming triangulations of the unit square and newest vertex bisection.
//!
//! Elements are stored counter-clockwise in a canonical vertex order
//! `[a, b, c]`: the refinement edge is `(a, b)` and `c` is the newest vertex.
//! Bisecting `[a, b, c]` at the midpoint `m` of `(a, b)` yields the children
//! `[c, a, m]` and `[b, c, m]`, whose refinement edges are the two remaining
//! edges of the parent.

use std::io::{BufRead, Write};

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Marker for a missing neighbour across a boundary edge.
pub const NO_ELEMENT: u32 = u32::MAX;

/// Region tags are bit sets, one bit per region.
pub const MAX_REGIONS: usize = 32;

const MAX_LATTICE_CELLS: usize = 64;

/// Open subdomain of the unit square.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `{x : normal · x > offset}`.
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// Open axis-aligned box.
    Box { min: Point, max: Point },
}

impl Region {
    pub fn contains(&self, x: Point) -> bool {
        match self {
            Region::HalfPlane { normal, offset } => normal[0] * x[0] + normal[1] * x[1] > *offset,
            Region::Box { min, max } => {
                x[0] > min[0] && x[0] < max[0] && x[1] > min[1] && x[1] < max[1]
            }
        }
    }

    /// Membership in the closure of the region, up to `tol`.
    pub fn contains_closed(&self, x: Point, tol: f64) -> bool {
        match self {
            Region::HalfPlane { normal, offset } => {
                let scale = normal[0].abs().max(normal[1].abs());
                normal[0] * x[0] + normal[1] * x[1] >= *offset - tol * scale
            }
            Region::Box { min, max } => {
                x[0] >= min[0] - tol
                    && x[0] <= max[0] + tol
                    && x[1] >= min[1] - tol
                    && x[1] <= max[1] + tol
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Region::HalfPlane { normal, offset } => {
                if !(normal[0].is_finite() && normal[1].is_finite() && offset.is_finite()) {
                    return Err(Error::Config("half-plane with non-finite data".into()));
                }
                if normal[0] == 0.0 && normal[1] == 0.0 {
                    return Err(Error::Config("half-plane with zero normal".into()));
                }
            }
            Region::Box { min, max } => {
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return Err(Error::Config(format!("empty box {min:?}..{max:?}")));
                }
            }
        }
        Ok(())
    }

    /// Whether the boundary of the region runs along edges of the criss-cross
    /// lattice with `n` cells per side.
    fn resolved_by_lattice(&self, n: usize) -> Result<bool> {
        let on_lattice = |c: f64| {
            let s = c * n as f64;
            (s - s.round()).abs() < 1e-9
        };
        match self {
            Region::HalfPlane { normal, offset } => {
                let [a, b] = *normal;
                let level = if b == 0.0 {
                    offset / a
                } else if a == 0.0 {
                    offset / b
                } else if a.abs() == b.abs() {
                    // x + y = level or x - y = level: cell diagonals
                    offset / a
                } else {
                    return Err(Error::Config(format!(
                        "interface with normal {normal:?} is not representable on the criss-cross lattice"
                    )));
                };
                Ok(on_lattice(level))
            }
            Region::Box { min, max } => Ok([min[0], min[1], max[0], max[1]]
                .iter()
                .all(|&c| on_lattice(c.clamp(0.0, 1.0)))),
        }
    }
}

/// The unit square together with the subdomains the initial mesh must resolve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainConfig {
    pub regions: Vec<Region>,
}

impl DomainConfig {
    pub fn unit_square() -> Self {
        Self::default()
    }

    pub fn with_regions(regions: Vec<Region>) -> Result<Self> {
        if regions.len() > MAX_REGIONS {
            return Err(Error::Config(format!(
                "at most {MAX_REGIONS} regions are supported, got {}",
                regions.len()
            )));
        }
        for r in &regions {
            r.validate()?;
        }
        Ok(Self { regions })
    }

    /// Bit set of the regions containing `x`.
    pub fn tag_of(&self, x: Point) -> u32 {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains(x))
            .fold(0, |tag, (i, _)| tag | (1 << i))
    }
}

/// Set of element indices selected for refinement. Sorted, without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkedSet(Vec<usize>);

impl MarkedSet {
    pub fn new(mut indices: Vec<usize>, n_elements: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= n_elements {
                return Err(Error::Config(format!(
                    "marked element {last} out of range for mesh with {n_elements} elements"
                )));
            }
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn all(n_elements: usize) -> Self {
        Self((0..n_elements).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.0.binary_search(&t).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub vertices: [u32; 2],
    /// Adjacent elements; `elements[1] == NO_ELEMENT` on the boundary.
    pub elements: [u32; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements[1] == NO_ELEMENT
    }
}

/// Edge list of a conforming mesh.
#[derive(Clone, Debug)]
pub struct Topology {
    pub edges: Vec<Edge>,
    /// `element_edges[t][k]` is the edge opposite local vertex `k` of element `t`.
    pub element_edges: Vec<[u32; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    vertices: Vec<Point>,
    elements: Vec<[u32; 3]>,
    region_tags: Vec<u32>,
    generations: Vec<u32>,
}

/// Output of [`Triangulation::refine`].
#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Triangulation,
    /// For every element of the new mesh, the element of the old mesh it descends from.
    pub parent: Vec<u32>,
    /// For every element of the old mesh, whether it was bisected.
    pub refined: Vec<bool>,
    /// Endpoints of the bisected edge for every vertex created by this refinement,
    /// in the order the vertices were appended.
    pub new_vertex_parents: Vec<[u32; 2]>,
}

impl Refinement {
    pub fn refined_count(&self) -> usize {
        self.refined.iter().filter(|&&r| r).count()
    }

    /// `#(T_H \ T_h) + #T_H <= #T_h`.
    pub fn satisfies_son_estimate(&self) -> bool {
        self.refined_count() + self.refined.len() <= self.mesh.n_elements()
    }

    /// Interpolates vertex values of a continuous piecewise affine function on
    /// the old mesh onto the new mesh. Exact, since new vertices are edge midpoints.
    pub fn prolongate(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len() + self.new_vertex_parents.len(), self.mesh.n_vertices());
        let mut fine = Vec::with_capacity(self.mesh.n_vertices());
        fine.extend_from_slice(coarse);
        for &[a, b] in &self.new_vertex_parents {
            // parents are always vertices of the old mesh
            fine.push(0.5 * (coarse[a as usize] + coarse[b as usize]));
        }
        fine
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist_sq(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn edge_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

impl Triangulation {
    /// Builds a mesh from arbitrary triangles. Orientation is made
    /// counter-clockwise and the refinement edge is the longest edge, ties
    /// broken by the smallest opposite vertex index.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: &[[usize; 3]],
        region_tags: Vec<u32>,
    ) -> Result<Self> {
        if region_tags.len() != triangles.len() {
            return Err(Error::Dimension {
                what: "region tags",
                expected: triangles.len(),
                got: region_tags.len(),
            });
        }
        let mut elements = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Config(format!("triangle {t} references a missing vertex")));
            }
            let [mut a, mut b, c] = *tri;
            let area = signed_area(vertices[a], vertices[b], vertices[c]);
            if !(area.abs() > 0.0) {
                return Err(Error::Config(format!("triangle {t} is degenerate")));
            }
            if area < 0.0 {
                std::mem::swap(&mut a, &mut b);
            }
            let v = [a, b, c];
            let len = |k: usize| dist_sq(vertices[v[(k + 1) % 3]], vertices[v[(k + 2) % 3]]);
            let longest = (0..3).map(len).fold(0.0, f64::max);
            let opposite = (0..3)
                .filter(|&k| len(k) >= longest * (1.0 - 1e-12))
                .min_by_key(|&k| v[k])
                .unwrap();
            elements.push([
                v[(opposite + 1) % 3] as u32,
                v[(opposite + 2) % 3] as u32,
                v[opposite] as u32,
            ]);
        }
        let generations = vec![0; elements.len()];
        Ok(Self { vertices, elements, region_tags, generations })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn elements(&self) -> &[[u32; 3]] {
        &self.elements
    }

    pub fn element(&self, t: usize) -> [usize; 3] {
        self.elements[t].map(|v| v as usize)
    }

    pub fn element_points(&self, t: usize) -> [Point; 3] {
        self.elements[t].map(|v| self.vertices[v as usize])
    }

    /// Local index of the refinement edge; edge `k` is opposite local vertex `k`.
    pub fn refinement_edge(&self, _t: usize) -> usize {
        2
    }

    pub fn region_tag(&self, t: usize) -> u32 {
        self.region_tags[t]
    }

    pub fn region_tags(&self) -> &[u32] {
        &self.region_tags
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generations[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_points(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_points(t);
        dist_sq(a, b).max(dist_sq(b, c)).max(dist_sq(c, a)).sqrt()
    }

    /// `h_T = |T|^{1/2}`.
    pub fn mesh_size(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.element_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.area(t)).sum()
    }

    /// Total area of the elements whose tag contains region `r`.
    pub fn region_area(&self, r: usize) -> f64 {
        (0..self.n_elements())
            .filter(|&t| self.region_tags[t] & (1 << r) != 0)
            .map(|t| self.area(t))
            .sum()
    }

    /// `max_T diam(T)^2 / |T|`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.n_elements())
            .map(|t| self.diameter(t).powi(2) / self.area(t))
            .fold(0.0, f64::max)
    }

    fn sorted_half_edges(&self) -> Vec<(u64, u32, u8)> {
        let mut half: Vec<(u64, u32, u8)> = self
            .elements
            .iter()
            .enumerate()
            .flat_map(|(t, e)| {
                (0..3u8).map(move |k| {
                    let a = e[(k as usize + 1) % 3];
                    let b = e[(k as usize + 2) % 3];
                    (edge_key(a, b), t as u32, k)
                })
            })
            .collect();
        half.sort_unstable();
        half
    }

    /// Edge list for a conforming mesh.
    pub fn topology(&self) -> Topology {
        let half = self.sorted_half_edges();
        let mut edges = Vec::with_capacity(half.len() / 2 + 1);
        let mut element_edges = vec![[0u32; 3]; self.n_elements()];
        let mut i = 0;
        while i < half.len() {
            let key = half[i].0;
            let mut j = i;
            let mut adjacent = [NO_ELEMENT; 2];
            while j < half.len() && half[j].0 == key {
                let (_, t, k) = half[j];
                debug_assert!(j - i < 2, "edge shared by more than two elements");
                if j - i < 2 {
                    adjacent[j - i] = t;
                }
                element_edges[t as usize][k as usize] = edges.len() as u32;
                j += 1;
            }
            edges.push(Edge {
                vertices: [(key >> 32) as u32, key as u32],
                elements: adjacent,
            });
            i = j;
        }
        Topology { edges, element_edges }
    }

    /// Every edge has one or two adjacent elements, and edges with a single
    /// element lie on the boundary of the bounding box. A hanging vertex
    /// produces interior edges with a single element.
    pub fn is_conforming(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        let on_side = |p: Point, q: Point| {
            (0..2).any(|d| {
                (p[d] == lo[d] && q[d] == lo[d]) || (p[d] == hi[d] && q[d] == hi[d])
            })
        };
        let half = self.sorted_half_edges();
        let mut i = 0;
        while i < half.len() {
            let key = half[i].0;
            let mut j = i;
            while j < half.len() && half[j].0 == key {
                j += 1;
            }
            match j - i {
                1 => {
                    let a = self.vertices[(key >> 32) as usize];
                    let b = self.vertices[(key & 0xffff_ffff) as usize];
                    if !on_side(a, b) {
                        return false;
                    }
                }
                2 => {}
                _ => return false,
            }
            i = j;
        }
        (0..self.n_elements()).all(|t| self.area(t) > 0.0)
    }

    fn bounding_box(&self) -> (Point, Point) {
        self.vertices.iter().fold(
            ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
            |(lo, hi), p| {
                ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
            },
        )
    }

    /// Vertices lying on boundary edges.
    pub fn boundary_vertices(&self, topology: &Topology) -> Vec<bool> {
        let mut on_boundary = vec![false; self.n_vertices()];
        for e in topology.edges.iter().filter(|e| e.is_boundary()) {
            on_boundary[e.vertices[0] as usize] = true;
            on_boundary[e.vertices[1] as usize] = true;
        }
        on_boundary
    }

    /// Coarsest conforming NVB refinement in which every marked element is bisected.
    ///
    /// Closure marks edges: the refinement edge of every marked element, and
    /// the refinement edge of every element that has any marked edge, until
    /// no new edge is marked. Each element is then bisected along its
    /// refinement edge, and its children again if their refinement edges are
    /// marked.
    pub fn refine(&self, marked: &MarkedSet) -> Refinement {
        let n = self.n_elements();
        if marked.is_empty() {
            return Refinement {
                mesh: self.clone(),
                parent: (0..n as u32).collect(),
                refined: vec![false; n],
                new_vertex_parents: Vec::new(),
            };
        }
        let topo = self.topology();
        let mut edge_marked = vec![false; topo.edges.len()];
        let mut stack = Vec::new();
        for &t in marked.indices() {
            let e = topo.element_edges[t][2] as usize;
            if !edge_marked[e] {
                edge_marked[e] = true;
                stack.push(e);
            }
        }
        while let Some(e) = stack.pop() {
            for &t in topo.edges[e].elements.iter().filter(|&&t| t != NO_ELEMENT) {
                let r = topo.element_edges[t as usize][2] as usize;
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    stack.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut new_vertex_parents = Vec::new();
        let mut midpoint_of = vec![u32::MAX; topo.edges.len()];
        let mut midpoint = |e: usize, vertices: &mut Vec<Point>| -> u32 {
            if midpoint_of[e] == u32::MAX {
                let [a, b] = topo.edges[e].vertices;
                let (pa, pb) = (vertices[a as usize], vertices[b as usize]);
                midpoint_of[e] = vertices.len() as u32;
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                new_vertex_parents.push([a, b]);
            }
            midpoint_of[e]
        };

        let mut elements = Vec::with_capacity(2 * n);
        let mut region_tags = Vec::with_capacity(2 * n);
        let mut generations = Vec::with_capacity(2 * n);
        let mut parent = Vec::with_capacity(2 * n);
        let mut refined = vec![false; n];
        for t in 0..n {
            let [v0, v1, v2] = self.elements[t];
            let ee = topo.element_edges[t];
            let tag = self.region_tags[t];
            let gen = self.generations[t];
            let mut push = |el: [u32; 3], g: u32| {
                elements.push(el);
                region_tags.push(tag);
                generations.push(g);
                parent.push(t as u32);
            };
            if !edge_marked[ee[2] as usize] {
                push([v0, v1, v2], gen);
                continue;
            }
            refined[t] = true;
            let m = midpoint(ee[2] as usize, &mut vertices);
            for (child, edge) in [([v2, v0, m], ee[1]), ([v1, v2, m], ee[0])] {
                if edge_marked[edge as usize] {
                    let [a, b, c] = child;
                    let m2 = midpoint(edge as usize, &mut vertices);
                    push([c, a, m2], gen + 2);
                    push([b, c, m2], gen + 2);
                } else {
                    push(child, gen + 1);
                }
            }
        }
        Refinement {
            mesh: Triangulation { vertices, elements, region_tags, generations },
            parent,
            refined,
            new_vertex_parents,
        }
    }

    /// Marks every element.
    pub fn refine_uniform(&self) -> Refinement {
        self.refine(&MarkedSet::all(self.n_elements()))
    }

    /// Plain text dump: `v x y` per vertex, then `t i j k r tag` per element
    /// with `r` the local index of the refinement edge (edge `k` is opposite
    /// vertex `k`).
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.vertices {
            writeln!(out, "v {} {}", p[0], p[1])?;
        }
        for (t, e) in self.elements.iter().enumerate() {
            writeln!(
                out,
                "t {} {} {} {} {}",
                e[0],
                e[1],
                e[2],
                self.refinement_edge(t),
                self.region_tags[t]
            )?;
        }
        Ok(())
    }

    /// Reads the format written by [`Triangulation::write_dump`]. Generations are reset to zero.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut elements = Vec::new();
        let mut region_tags = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let bad = || Error::Parse(format!("mesh dump line {}: {line:?}", lineno + 1));
            match fields.next() {
                None => continue,
                Some("v") => {
                    let x: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    let y: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    vertices.push([x, y]);
                }
                Some("t") => {
                    let mut nums = [0u32; 5];
                    for slot in nums.iter_mut() {
                        *slot = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    }
                    let [i, j, k, r, tag] = nums;
                    if r > 2 || [i, j, k].iter().any(|&v| v as usize >= vertices.len()) {
                        return Err(bad());
                    }
                    let v = [i, j, k];
                    let r = r as usize;
                    elements.push([v[(r + 1) % 3], v[(r + 2) % 3], v[r]]);
                    region_tags.push(tag);
                }
                Some(_) => return Err(bad()),
            }
        }
        let generations = vec![0; elements.len()];
        let mesh = Self { vertices, elements, region_tags, generations };
        if (0..mesh.n_elements()).any(|t| !(mesh.area(t) > 0.0)) {
            return Err(Error::Parse("mesh dump contains a non-positively oriented element".into()));
        }
        Ok(mesh)
    }
}

/// Criss-cross mesh of the unit square on the coarsest square lattice that
/// resolves every region boundary: each lattice cell is split by both
/// diagonals into four triangles whose refinement edges are the cell sides.
pub fn build_initial(config: &DomainConfig) -> Result<Triangulation> {
    let mut cells = None;
    for n in 1..=MAX_LATTICE_CELLS {
        let mut ok = true;
        for r in &config.regions {
            ok &= r.resolved_by_lattice(n)?;
        }
        if ok {
            cells = Some(n);
            break;
        }
    }
    let n = cells.ok_or_else(|| {
        Error::Config(format!(
            "region boundaries are not resolved by any lattice with at most {MAX_LATTICE_CELLS} cells per side"
        ))
    })?;

    let h = 1.0 / n as f64;
    let lattice = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut elements = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = vertices.len() as u32;
            vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            let p00 = lattice(i, j) as u32;
            let p10 = lattice(i + 1, j) as u32;
            let p11 = lattice(i + 1, j + 1) as u32;
            let p01 = lattice(i, j + 1) as u32;
            elements.extend([[p00, p10, c], [p10, p11, c], [p11, p01, c], [p01, p00, c]]);
        }
    }
    let mut mesh = Triangulation {
        vertices,
        region_tags: vec![0; elements.len()],
        generations: vec![0; elements.len()],
        elements,
    };
    mesh.region_tags = (0..mesh.n_elements()).map(|t| config.tag_of(mesh.barycenter(t))).collect();
    Ok(mesh)
}
