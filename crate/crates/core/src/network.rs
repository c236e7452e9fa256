//! Undirected network topology with a fixed edge orientation, its incidence
//! matrix, and the wiring between node plants and edge controllers.
//!
//! Signals are stacked block-wise: `Y_p` holds `N` blocks of width `m`, one
//! per node, and `U_c` holds `L` blocks, one per edge. Kronecker products
//! with `I_m` are applied as block loops and never materialised.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::systems::DynamicSystem;

/// Nodes `0..node_count` and oriented edges `(initial, terminal)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl NetworkTopology {
    /// Validates the edge list and connectivity.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("node_count must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (l, &(i, j)) in edges.iter().enumerate() {
            if i >= node_count || j >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge {l} ({i}, {j}) references a node outside 0..{node_count}"
                )));
            }
            if i == j {
                return Err(Error::InvalidTopology(format!("edge {l} is a self-loop at node {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidTopology(format!(
                    "edge {l} ({i}, {j}) duplicates an earlier edge between the same nodes"
                )));
            }
        }
        let topo = Self { node_count, edges };
        if let Some(unreachable) = topo.first_unreachable() {
            return Err(Error::Disconnected { unreachable });
        }
        Ok(topo)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    /// Per node, the `(neighbour, edge index)` pairs.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (l, &(i, j)) in self.edges.iter().enumerate() {
            adj[i].push((j, l));
            adj[j].push((i, l));
        }
        adj
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// The same graph with edge `l` pointing the other way.
    pub fn with_flipped_edge(&self, l: usize) -> Result<Self> {
        if l >= self.edges.len() {
            return Err(Error::RejectedInput(format!("edge index {l} out of range")));
        }
        let mut edges = self.edges.clone();
        let (i, j) = edges[l];
        edges[l] = (j, i);
        Ok(Self {
            node_count: self.node_count,
            edges,
        })
    }
}

/// Node-by-edge incidence matrix with entries in `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    /// Row-major dense entries.
    entries: Vec<i8>,
    /// Per column, `(row of +1, row of -1)`.
    ends: Vec<(usize, usize)>,
}

impl IncidenceMatrix {
    pub fn node_count(&self) -> usize {
        self.rows
    }

    pub fn edge_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, node: usize, edge: usize) -> i8 {
        self.entries[node * self.cols + edge]
    }

    /// `(initial, terminal)` of edge `l`.
    pub fn ends(&self, l: usize) -> (usize, usize) {
        self.ends[l]
    }

    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        self.entries
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|r| r[..self.cols].to_vec())
            .collect()
    }
}

pub fn build_incidence(topology: &NetworkTopology) -> IncidenceMatrix {
    let rows = topology.node_count;
    let cols = topology.edges.len();
    let mut entries = vec![0i8; rows * cols];
    for (l, &(i, j)) in topology.edges.iter().enumerate() {
        entries[i * cols + l] = 1;
        entries[j * cols + l] = -1;
    }
    IncidenceMatrix {
        rows,
        cols,
        entries,
        ends: topology.edges.clone(),
    }
}

/// `U_c = (Q^T (x) I_m) Y_p`: block `l` is `y_initial - y_terminal`.
pub fn edge_inputs(q: &IncidenceMatrix, y_p: &[f64], m: usize) -> Result<Vec<f64>> {
    check_len("edge_inputs: Y_p", q.rows * m, y_p.len())?;
    let mut u_c = vec![0.0; q.cols * m];
    edge_inputs_into(q, y_p, m, &mut u_c);
    Ok(u_c)
}

pub(crate) fn edge_inputs_into(q: &IncidenceMatrix, y_p: &[f64], m: usize, u_c: &mut [f64]) {
    for (l, &(i, j)) in q.ends.iter().enumerate() {
        for c in 0..m {
            u_c[l * m + c] = y_p[i * m + c] - y_p[j * m + c];
        }
    }
}

/// `U_p = (Q (x) I_m) Y_c`.
pub fn node_inputs(q: &IncidenceMatrix, y_c: &[f64], m: usize) -> Result<Vec<f64>> {
    check_len("node_inputs: Y_c", q.cols * m, y_c.len())?;
    let mut u_p = vec![0.0; q.rows * m];
    node_inputs_into(q, y_c, m, &mut u_p);
    Ok(u_p)
}

pub(crate) fn node_inputs_into(q: &IncidenceMatrix, y_c: &[f64], m: usize, u_p: &mut [f64]) {
    u_p.fill(0.0);
    for (l, &(i, j)) in q.ends.iter().enumerate() {
        for c in 0..m {
            let y = y_c[l * m + c];
            u_p[i * m + c] += y;
            u_p[j * m + c] -= y;
        }
    }
}

/// Both sides of `U_p^T Y_p = U_c^T Y_c` under the incidence wiring.
pub fn power_balance_identity(q: &IncidenceMatrix, y_p: &[f64], y_c: &[f64], m: usize) -> Result<(f64, f64)> {
    let u_p = node_inputs(q, y_c, m)?;
    let u_c = edge_inputs(q, y_p, m)?;
    let lhs = dot(&u_p, y_p);
    let rhs = dot(&u_c, y_c);
    Ok((lhs, rhs))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All signals of the closed loop at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoupledSignals {
    pub dx_p: Vec<f64>,
    pub dx_c: Vec<f64>,
    pub y_p: Vec<f64>,
    pub y_c: Vec<f64>,
    pub u_p: Vec<f64>,
    pub u_c: Vec<f64>,
}

/// Node plants and edge controllers wired through an incidence matrix.
#[derive(Debug, Clone)]
pub struct InterconnectedSystem {
    plants: Vec<DynamicSystem>,
    controllers: Vec<DynamicSystem>,
    topology: NetworkTopology,
    incidence: IncidenceMatrix,
    io_dim: usize,
    plant_offsets: Vec<usize>,
    controller_offsets: Vec<usize>,
}

impl InterconnectedSystem {
    /// Plants must have no direct feedthrough so the loop can be evaluated
    /// explicitly as `Y_p -> U_c -> Y_c -> U_p`.
    pub fn new(plants: Vec<DynamicSystem>, controllers: Vec<DynamicSystem>, topology: NetworkTopology) -> Result<Self> {
        check_len("interconnect: plant count", topology.node_count(), plants.len())?;
        check_len(
            "interconnect: controller count",
            topology.edge_count(),
            controllers.len(),
        )?;
        let io_dim = plants[0].io_dim();
        for s in plants.iter().chain(&controllers) {
            if s.io_dim() != io_dim {
                return Err(Error::InvalidParameter(format!(
                    "system '{}' has io_dim {} but the network channel width is {io_dim}",
                    s.name(),
                    s.io_dim()
                )));
            }
        }
        if let Some(p) = plants.iter().find(|p| p.has_feedthrough()) {
            return Err(Error::InvalidParameter(format!(
                "node plant '{}' has direct feedthrough; plant outputs must depend on state only",
                p.name()
            )));
        }
        let offsets = |systems: &[DynamicSystem]| {
            let mut acc = 0;
            let mut v = Vec::with_capacity(systems.len() + 1);
            for s in systems {
                v.push(acc);
                acc += s.state_dim();
            }
            v.push(acc);
            v
        };
        let plant_offsets = offsets(&plants);
        let controller_offsets = offsets(&controllers);
        let incidence = build_incidence(&topology);
        Ok(Self {
            plants,
            controllers,
            topology,
            incidence,
            io_dim,
            plant_offsets,
            controller_offsets,
        })
    }

    pub fn plants(&self) -> &[DynamicSystem] {
        &self.plants
    }

    pub fn controllers(&self) -> &[DynamicSystem] {
        &self.controllers
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    pub fn io_dim(&self) -> usize {
        self.io_dim
    }

    pub fn plant_state_dim(&self) -> usize {
        *self.plant_offsets.last().unwrap()
    }

    pub fn controller_state_dim(&self) -> usize {
        *self.controller_offsets.last().unwrap()
    }

    pub fn plant_state_range(&self, i: usize) -> std::ops::Range<usize> {
        self.plant_offsets[i]..self.plant_offsets[i + 1]
    }

    pub fn controller_state_range(&self, l: usize) -> std::ops::Range<usize> {
        self.controller_offsets[l]..self.controller_offsets[l + 1]
    }

    /// Smallest declared plant strictness.
    pub fn min_plant_epsilon(&self) -> f64 {
        self.plants
            .iter()
            .map(|p| p.osni_epsilon())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn signals_buffer(&self) -> CoupledSignals {
        let m = self.io_dim;
        CoupledSignals {
            dx_p: vec![0.0; self.plant_state_dim()],
            dx_c: vec![0.0; self.controller_state_dim()],
            y_p: vec![0.0; self.plants.len() * m],
            y_c: vec![0.0; self.controllers.len() * m],
            u_p: vec![0.0; self.plants.len() * m],
            u_c: vec![0.0; self.controllers.len() * m],
        }
    }

    pub fn coupled_rhs(&self, x_p: &[f64], x_c: &[f64]) -> Result<CoupledSignals> {
        check_len("coupled_rhs: X_p", self.plant_state_dim(), x_p.len())?;
        check_len("coupled_rhs: X_c", self.controller_state_dim(), x_c.len())?;
        let mut s = self.signals_buffer();
        self.coupled_rhs_into(x_p, x_c, &mut s);
        Ok(s)
    }

    /// Evaluates every closed-loop signal into a preallocated buffer
    /// (see [`Self::signals_buffer`]).
    pub fn coupled_rhs_into(&self, x_p: &[f64], x_c: &[f64], s: &mut CoupledSignals) {
        self.outputs_into(x_p, x_c, s);
        let m = self.io_dim;
        for (i, p) in self.plants.iter().enumerate() {
            let r = self.plant_state_range(i);
            p.dynamics_into(&x_p[r.clone()], &s.u_p[i * m..(i + 1) * m], &mut s.dx_p[r]);
        }
        for (l, c) in self.controllers.iter().enumerate() {
            let r = self.controller_state_range(l);
            c.dynamics_into(&x_c[r.clone()], &s.u_c[l * m..(l + 1) * m], &mut s.dx_c[r]);
        }
    }

    /// Fills `y_p`, `u_c`, `y_c`, `u_p` without computing derivatives.
    pub fn outputs_into(&self, x_p: &[f64], x_c: &[f64], s: &mut CoupledSignals) {
        let m = self.io_dim;
        for (i, p) in self.plants.iter().enumerate() {
            p.state_output_into(&x_p[self.plant_state_range(i)], &mut s.y_p[i * m..(i + 1) * m]);
        }
        edge_inputs_into(&self.incidence, &s.y_p, m, &mut s.u_c);
        let mut g = vec![0.0; m];
        for (l, c) in self.controllers.iter().enumerate() {
            let y = &mut s.y_c[l * m..(l + 1) * m];
            c.state_output_into(&x_c[self.controller_state_range(l)], y);
            if let Some(gf) = c.feedthrough_fn() {
                gf(&s.u_c[l * m..(l + 1) * m], &mut g);
                for (a, b) in y.iter_mut().zip(&g) {
                    *a += b;
                }
            }
        }
        node_inputs_into(&self.incidence, &s.y_c, m, &mut s.u_p);
    }
}

/// Stacks independent systems into one block-diagonal system with storage
/// `sum V_i` and strictness `min eps_i`.
pub fn aggregate(name: impl Into<String>, systems: &[DynamicSystem]) -> Result<DynamicSystem> {
    if systems.is_empty() {
        return Err(Error::RejectedInput("cannot aggregate an empty list of systems".into()));
    }
    let parts: Vec<(DynamicSystem, usize, usize)> = {
        let (mut xo, mut uo) = (0, 0);
        systems
            .iter()
            .map(|s| {
                let e = (s.clone(), xo, uo);
                xo += s.state_dim();
                uo += s.io_dim();
                e
            })
            .collect()
    };
    let state_dim: usize = systems.iter().map(|s| s.state_dim()).sum();
    let io_dim: usize = systems.iter().map(|s| s.io_dim()).sum();
    let eps = systems.iter().map(|s| s.osni_epsilon()).fold(f64::INFINITY, f64::min);
    let all_storage = systems.iter().all(|s| s.has_storage());
    let any_feedthrough = systems.iter().any(|s| s.has_feedthrough());

    let slices = |s: &DynamicSystem, xo: usize, uo: usize| (xo..xo + s.state_dim(), uo..uo + s.io_dim());
    let mut b = DynamicSystem::builder(name, state_dim, io_dim).osni_epsilon(eps);
    if state_dim > 0 {
        let p = parts.clone();
        b = b.dynamics(move |x, u, dx| {
            for (s, xo, uo) in &p {
                let (xr, ur) = slices(s, *xo, *uo);
                s.dynamics_into(&x[xr.clone()], &u[ur], &mut dx[xr]);
            }
        });
        let p = parts.clone();
        b = b.state_output(move |x, y| {
            for (s, xo, uo) in &p {
                let (xr, ur) = slices(s, *xo, *uo);
                s.state_output_into(&x[xr], &mut y[ur]);
            }
        });
    }
    if any_feedthrough {
        let p = parts.clone();
        b = b.feedthrough(move |u, y| {
            for (s, xo, uo) in &p {
                let (_, ur) = slices(s, *xo, *uo);
                s.feedthrough_into(&u[ur.clone()], &mut y[ur]);
            }
        });
    }
    if all_storage {
        let p = parts;
        b = b.storage(move |x| {
            p.iter()
                .map(|(s, xo, uo)| {
                    let (xr, _) = slices(s, *xo, *uo);
                    s.storage(&x[xr]).unwrap_or(0.0)
                })
                .sum()
        });
    }
    b.build()
}
