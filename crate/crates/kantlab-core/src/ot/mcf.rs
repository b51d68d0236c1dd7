//! Exact successive-shortest-path min-cost flow over rationals.
//!
//! Small dense instances only (the transport LPs of this crate live on at
//! most a few thousand nodes). All arithmetic is exact; ties are broken by
//! lowest index so runs are reproducible.

use crate::rational::Rat;
use num_traits::Zero;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: Rat,
    cost: Rat,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    n: usize,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        MinCostFlow {
            n,
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Add a forward arc and its residual twin; returns the forward arc id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: Rat, cost: Rat) -> usize {
        let id = self.arcs.len();
        self.adj[from].push(id);
        self.arcs.push(Arc {
            to,
            cap,
            cost: cost.clone(),
        });
        self.adj[to].push(id + 1);
        self.arcs.push(Arc {
            to: from,
            cap: Rat::zero(),
            cost: -cost,
        });
        id
    }

    /// Flow currently on a forward arc.
    pub fn flow(&self, arc_id: usize) -> Rat {
        self.arcs[arc_id ^ 1].cap.clone()
    }

    /// Route all excess (positive entries of `excess` are supplies, negative
    /// are demands; they must sum to zero). Returns the total cost if
    /// feasible, `None` otherwise.
    pub fn solve(&mut self, mut excess: Vec<Rat>) -> Option<Rat> {
        assert_eq!(excess.len(), self.n);
        debug_assert!(excess.iter().sum::<Rat>().is_zero());
        let mut total = Rat::zero();
        loop {
            let sources: Vec<usize> = (0..self.n)
                .filter(|v| excess[*v] > Rat::zero())
                .collect();
            if sources.is_empty() {
                return Some(total);
            }
            // Bellman-Ford from all surplus nodes over the residual network.
            let mut dist: Vec<Option<Rat>> = vec![None; self.n];
            let mut pred: Vec<Option<usize>> = vec![None; self.n];
            for &s in &sources {
                dist[s] = Some(Rat::zero());
            }
            for _ in 0..self.n {
                let mut improved = false;
                for (id, arc) in self.arcs.iter().enumerate() {
                    if arc.cap.is_zero() {
                        continue;
                    }
                    let from = self.arcs[id ^ 1].to;
                    let Some(df) = dist[from].clone() else {
                        continue;
                    };
                    let cand = df + &arc.cost;
                    let better = match &dist[arc.to] {
                        None => true,
                        Some(cur) => cand < *cur,
                    };
                    if better {
                        dist[arc.to] = Some(cand);
                        pred[arc.to] = Some(id);
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            // Nearest deficit node, lowest index on ties.
            let mut target: Option<usize> = None;
            for v in 0..self.n {
                if excess[v] < Rat::zero() && dist[v].is_some() {
                    let better = match target {
                        None => true,
                        Some(t) => dist[v].as_ref().unwrap() < dist[t].as_ref().unwrap(),
                    };
                    if better {
                        target = Some(v);
                    }
                }
            }
            let Some(t) = target else {
                return None; // some excess cannot be routed
            };
            // Walk the path back to its source, collecting the bottleneck.
            let mut v = t;
            let mut path = Vec::new();
            let mut bottleneck: Option<Rat> = None;
            while let Some(id) = pred[v] {
                path.push(id);
                let cap = self.arcs[id].cap.clone();
                bottleneck = Some(match bottleneck {
                    None => cap,
                    Some(b) => b.min(cap),
                });
                v = self.arcs[id ^ 1].to;
            }
            let source = v;
            let delta = match bottleneck {
                None => excess[source].clone().min(-excess[t].clone()),
                Some(b) => b.min(excess[source].clone()).min(-excess[t].clone()),
            };
            debug_assert!(delta > Rat::zero());
            for id in &path {
                self.arcs[*id].cap -= &delta;
                let twin = *id ^ 1;
                self.arcs[twin].cap += &delta;
                total += &delta * &self.arcs[*id].cost;
            }
            excess[source] -= &delta;
            excess[t] += &delta;
        }
    }
}
