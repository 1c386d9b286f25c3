//! Internally node-disjoint paths by unit node-capacity max-flow.

use std::collections::VecDeque;

/// Up to `want` internally node-disjoint `s`–`t` paths whose intermediate
/// nodes all satisfy `allowed`. A direct `s`–`t` edge is ignored.
///
/// Node `v` is split into `2v` (in) and `2v + 1` (out) joined by an arc of
/// capacity one; each undirected edge becomes two unit arcs out→in.
pub(crate) fn disjoint_paths(
    adj: &[Vec<usize>],
    s: usize,
    t: usize,
    allowed: impl Fn(usize) -> bool,
    want: usize,
) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut graph = FlowGraph::new(2 * n);
    for v in 0..n {
        if v != s && v != t && allowed(v) {
            graph.add_arc(2 * v, 2 * v + 1);
        }
    }
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs {
            if u == v || (u == s && v == t) || (u == t && v == s) || u == t || v == s {
                continue;
            }
            graph.add_arc(2 * u + 1, 2 * v);
        }
    }
    let source = 2 * s + 1;
    let sink = 2 * t;
    let mut flow = 0;
    while flow < want && graph.augment(source, sink) {
        flow += 1;
    }
    (0..flow).map(|_| graph.take_path(source, sink)).collect()
}

struct Arc {
    to: usize,
    cap: u8,
    rev: usize,
    /// Forward arcs of the network (not residual twins).
    forward: bool,
}

struct FlowGraph {
    arcs: Vec<Vec<Arc>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            arcs: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    fn add_arc(&mut self, from: usize, to: usize) {
        let rev_from = self.arcs[to].len();
        let rev_to = self.arcs[from].len();
        self.arcs[from].push(Arc {
            to,
            cap: 1,
            rev: rev_from,
            forward: true,
        });
        self.arcs[to].push(Arc {
            to: from,
            cap: 0,
            rev: rev_to,
            forward: false,
        });
    }

    /// One BFS augmentation of a unit of flow.
    fn augment(&mut self, source: usize, sink: usize) -> bool {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.arcs.len()];
        let mut seen = vec![false; self.arcs.len()];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for (i, a) in self.arcs[u].iter().enumerate() {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    prev[a.to] = Some((u, i));
                    queue.push_back(a.to);
                }
            }
        }
        if !seen[sink] {
            return false;
        }
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            self.arcs[u][i].cap -= 1;
            let (to, rev) = (self.arcs[u][i].to, self.arcs[u][i].rev);
            self.arcs[to][rev].cap += 1;
            v = u;
        }
        true
    }

    /// Removes one unit of flow from source to sink and returns its node path.
    fn take_path(&mut self, source: usize, sink: usize) -> Vec<usize> {
        let mut path = vec![source / 2];
        let mut u = source;
        while u != sink {
            let i = self.arcs[u]
                .iter()
                .position(|a| a.forward && a.cap == 0)
                .expect("flow conservation");
            let to = self.arcs[u][i].to;
            // consume the flow so the arc is not reused
            self.arcs[u][i].cap = 1;
            let rev = self.arcs[u][i].rev;
            self.arcs[to][rev].cap = 0;
            self.arcs[u][i].forward = false;
            if to.is_multiple_of(2) {
                path.push(to / 2);
            }
            u = to;
        }
        path
    }
}
