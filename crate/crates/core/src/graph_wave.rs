//! Discrete wave equation on metric graphs.
//!
//! Each edge `i` carries samples `u^i_0 … u^i_{Nᵢ}`; slot 0 sits on the `from`
//! vertex and slot `Nᵢ` on the `to` vertex. Vertex values are stored once, so
//! continuity holds by construction.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    #[serde(default)]
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub n_interior: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

/// Which end of an edge touches a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    From,
    To,
}

#[derive(Debug, Clone)]
struct Topology {
    ends: Vec<(usize, usize)>,
    lens: Vec<usize>,
    incident: Vec<Vec<(usize, End)>>,
    boundary: Vec<bool>,
}

impl GraphSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let g: GraphSpec = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    /// Path of `n` steps between two boundary vertices `"l"` and `"r"`.
    pub fn path(n: usize) -> Self {
        GraphSpec {
            vertices: vec![
                VertexSpec {
                    id: "l".into(),
                    boundary: true,
                },
                VertexSpec {
                    id: "r".into(),
                    boundary: true,
                },
            ],
            edges: vec![EdgeSpec {
                from: "l".into(),
                to: "r".into(),
                n_interior: n,
            }],
        }
    }

    /// Star with centre `"c"` and boundary leaves `"0"…"k-1"`, every edge of length `n`.
    pub fn star(k: usize, n: usize) -> Self {
        let mut vertices = vec![VertexSpec {
            id: "c".into(),
            boundary: false,
        }];
        let mut edges = Vec::new();
        for i in 0..k {
            vertices.push(VertexSpec {
                id: i.to_string(),
                boundary: true,
            });
            edges.push(EdgeSpec {
                from: i.to_string(),
                to: "c".into(),
                n_interior: n,
            });
        }
        GraphSpec { vertices, edges }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology().map(|_| ())
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    /// Degree of each vertex; a loop counts twice.
    pub fn degrees(&self) -> Result<Vec<usize>> {
        Ok(self.topology()?.incident.iter().map(Vec::len).collect())
    }

    fn topology(&self) -> Result<Topology> {
        if self.vertices.is_empty() {
            return Err(Error::Invalid("graph has no vertices".into()));
        }
        let mut index = HashMap::new();
        for (k, v) in self.vertices.iter().enumerate() {
            if index.insert(v.id.as_str(), k).is_some() {
                return Err(Error::Invalid(format!("duplicate vertex id {:?}", v.id)));
            }
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("edge refers to unknown vertex {id:?}")))
        };
        let mut ends = Vec::with_capacity(self.edges.len());
        let mut lens = Vec::with_capacity(self.edges.len());
        let mut incident = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            if e.n_interior == 0 {
                return Err(Error::Invalid(format!("edge {i} has n_interior = 0")));
            }
            let (a, b) = (lookup(&e.from)?, lookup(&e.to)?);
            ends.push((a, b));
            lens.push(e.n_interior);
            incident[a].push((i, End::From));
            incident[b].push((i, End::To));
        }
        let boundary: Vec<bool> = self.vertices.iter().map(|v| v.boundary).collect();
        for (k, inc) in incident.iter().enumerate() {
            if boundary[k] && inc.len() != 1 {
                return Err(Error::Invalid(format!(
                    "boundary vertex {:?} has degree {}",
                    self.vertices[k].id,
                    inc.len()
                )));
            }
            if inc.is_empty() && self.vertices.len() > 1 {
                return Err(Error::Invalid(format!("vertex {:?} is isolated", self.vertices[k].id)));
            }
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            for &(i, _) in &incident[k] {
                let (a, b) = ends[i];
                for w in [a, b] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invalid("graph is not connected".into()));
        }
        Ok(Topology {
            ends,
            lens,
            incident,
            boundary,
        })
    }
}

impl Topology {
    fn sample(&self, s: &GraphState, i: usize, j: usize) -> f64 {
        let (a, b) = self.ends[i];
        if j == 0 {
            s.vertices[a]
        } else if j == self.lens[i] {
            s.vertices[b]
        } else {
            s.interior[i][j - 1]
        }
    }

    /// Sample `u^i_{|F(i)−1|}` next to the vertex on the given end.
    fn neighbour(&self, s: &GraphState, i: usize, end: End) -> f64 {
        match end {
            End::From => self.sample(s, i, 1),
            End::To => self.sample(s, i, self.lens[i] - 1),
        }
    }
}

/// Values at one time level: one entry per vertex and `Nᵢ − 1` interior samples per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphState {
    pub vertices: Vec<f64>,
    pub interior: Vec<Vec<f64>>,
}

impl GraphState {
    fn zero(top: &Topology) -> Self {
        GraphState {
            vertices: vec![0.0; top.boundary.len()],
            interior: top.lens.iter().map(|&n| vec![0.0; n - 1]).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vertices
            .iter()
            .chain(self.interior.iter().flatten())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Field for `t = −1 … T` together with the boundary controls `f^k(1…T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphField {
    states: Vec<GraphState>,
    controls: BTreeMap<String, Vec<f64>>,
    horizon: usize,
}

impl GraphField {
    /// Zero state at `t = −1, 0`. Controls absent from the map are zero.
    pub fn new(graph: &GraphSpec, controls: BTreeMap<String, Vec<f64>>, horizon: usize) -> Result<Self> {
        let top = graph.topology()?;
        for (id, f) in &controls {
            let k = graph
                .vertex_index(id)
                .ok_or_else(|| Error::Invalid(format!("control for unknown vertex {id:?}")))?;
            if !top.boundary[k] {
                return Err(Error::Invalid(format!("control for internal vertex {id:?}")));
            }
            if f.len() != horizon {
                return Err(Error::Dimension(format!(
                    "control for {id:?} has length {}, expected T = {horizon}",
                    f.len()
                )));
            }
        }
        let zero = GraphState::zero(&top);
        Ok(GraphField {
            states: vec![zero.clone(), zero],
            controls,
            horizon,
        })
    }

    /// Last populated time level.
    pub fn current_time(&self) -> usize {
        self.states.len() - 2
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn controls(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.controls
    }

    /// State at time `t ≥ −1`.
    pub fn state(&self, t: i64) -> &GraphState {
        &self.states[(t + 1) as usize]
    }

    pub fn vertex(&self, k: usize, t: i64) -> f64 {
        self.state(t).vertices[k]
    }

    /// `u^i_{j,t}` for `j = 0…Nᵢ`.
    pub fn sample(&self, graph: &GraphSpec, i: usize, j: usize, t: i64) -> Result<f64> {
        let top = graph.topology()?;
        if i >= top.lens.len() || j > top.lens[i] {
            return Err(Error::Dimension(format!("no sample ({i}, {j})")));
        }
        Ok(top.sample(self.state(t), i, j))
    }

    /// Samples of edge `i` at time `t`, slots `0…Nᵢ`.
    pub fn edge_samples(&self, graph: &GraphSpec, i: usize, t: i64) -> Result<Vec<f64>> {
        let top = graph.topology()?;
        let s = self.state(t);
        Ok((0..=top.lens[i]).map(|j| top.sample(s, i, j)).collect())
    }
}

fn advance(top: &Topology, graph: &GraphSpec, field: &mut GraphField) {
    let t = field.current_time();
    let prev = &field.states[t];
    let cur = &field.states[t + 1];
    let mut next = GraphState::zero(top);
    for (i, row) in next.interior.iter_mut().enumerate() {
        for (m, x) in row.iter_mut().enumerate() {
            let j = m + 1;
            *x = top.sample(cur, i, j + 1) + top.sample(cur, i, j - 1) - prev.interior[i][m];
        }
    }
    for (k, inc) in top.incident.iter().enumerate() {
        next.vertices[k] = if top.boundary[k] {
            field.controls.get(&graph.vertices[k].id).map_or(0.0, |f| f[t])
        } else if inc.is_empty() {
            0.0
        } else {
            let p = inc.len() as f64;
            let sum: f64 = inc.iter().map(|&(i, end)| top.neighbour(cur, i, end)).sum();
            2.0 / p * sum - prev.vertices[k]
        };
    }
    field.states.push(next);
}

/// Advances a field populated through `t` to `t + 1`.
pub fn step(graph: &GraphSpec, field: &mut GraphField, t: usize) -> Result<()> {
    if field.current_time() != t {
        return Err(Error::Invalid(format!(
            "field is populated through t = {}, not {t}",
            field.current_time()
        )));
    }
    if t >= field.horizon {
        return Err(Error::Invalid(format!("t = {t} reaches the horizon {}", field.horizon)));
    }
    let top = graph.topology()?;
    advance(&top, graph, field);
    Ok(())
}

pub fn simulate(graph: &GraphSpec, controls: BTreeMap<String, Vec<f64>>, horizon: usize) -> Result<GraphField> {
    let top = graph.topology()?;
    let mut field = GraphField::new(graph, controls, horizon)?;
    for _ in 0..horizon {
        advance(&top, graph, &mut field);
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: usize,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    /// Leapfrog energy with vertex mass `pₖ/2`, conserved by the scheme.
    pub conserved: f64,
}

/// `(T_D(t), U_D(t))`: kinetic over interior points and all vertices, potential over edges.
pub fn energies(graph: &GraphSpec, field: &GraphField, t: usize) -> Result<(f64, f64)> {
    let top = graph.topology()?;
    check_time(field, t)?;
    let (cur, prev) = (field.state(t as i64), field.state(t as i64 - 1));
    Ok((kinetic(cur, prev, |_| 1.0), potential(&top, cur, cur)))
}

/// `½Σ wₙ(Δₜu)² + ½Σ(Δₓu_t)(Δₓu_{t−1})` with `wₙ = 1` inside edges and `pₖ/2` at internal vertices.
pub fn conserved_energy(graph: &GraphSpec, field: &GraphField, t: usize) -> Result<f64> {
    let top = graph.topology()?;
    check_time(field, t)?;
    Ok(conserved(&top, field, t))
}

pub fn energy_log(graph: &GraphSpec, field: &GraphField) -> Result<Vec<EnergyRecord>> {
    let top = graph.topology()?;
    Ok((0..=field.current_time())
        .map(|t| {
            let (cur, prev) = (field.state(t as i64), field.state(t as i64 - 1));
            let kinetic = kinetic(cur, prev, |_| 1.0);
            let potential = potential(&top, cur, cur);
            EnergyRecord {
                t,
                kinetic,
                potential,
                total: kinetic + potential,
                conserved: conserved(&top, field, t),
            }
        })
        .collect())
}

fn check_time(field: &GraphField, t: usize) -> Result<()> {
    if t > field.current_time() {
        return Err(Error::Invalid(format!(
            "t = {t} beyond populated time {}",
            field.current_time()
        )));
    }
    Ok(())
}

fn conserved(top: &Topology, field: &GraphField, t: usize) -> f64 {
    let (cur, prev) = (field.state(t as i64), field.state(t as i64 - 1));
    let weight = |k: usize| {
        if top.boundary[k] {
            0.0
        } else {
            top.incident[k].len() as f64 / 2.0
        }
    };
    kinetic(cur, prev, weight) + potential(top, cur, prev)
}

fn kinetic(cur: &GraphState, prev: &GraphState, vertex_weight: impl Fn(usize) -> f64) -> f64 {
    let edges: f64 = cur
        .interior
        .iter()
        .flatten()
        .zip(prev.interior.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let vertices: f64 = cur
        .vertices
        .iter()
        .zip(&prev.vertices)
        .enumerate()
        .map(|(k, (x, y))| vertex_weight(k) * (x - y).powi(2))
        .sum();
    0.5 * (edges + vertices)
}

/// `½ Σ_edges Σ_j (u_j − u_{j−1})(v_j − v_{j−1})`.
fn potential(top: &Topology, u: &GraphState, v: &GraphState) -> f64 {
    let mut acc = 0.0;
    for (i, &n) in top.lens.iter().enumerate() {
        for j in 1..=n {
            let du = top.sample(u, i, j) - top.sample(u, i, j - 1);
            let dv = top.sample(v, i, j) - top.sample(v, i, j - 1);
            acc += du * dv;
        }
    }
    0.5 * acc
}
