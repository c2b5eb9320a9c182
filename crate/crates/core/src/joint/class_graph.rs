//! Successive shortest paths specialised to the assignment network.
//!
//! Rows are inserted one at a time. After each insertion the labeling is
//! optimal for the rows seen so far, because every augmentation follows a
//! shortest path in the residual network. A residual path from a new row
//! to the sink only needs the K class nodes: it enters some class directly,
//! then may hop `a -> b` by moving an already placed row from `a` to `b`,
//! and finally takes the next unit arc of the last class. The cheapest row
//! for each hop sits on top of a heap keyed by `weight(j, a) - weight(j, b)`.
//! Each insertion costs `O(K^3 + K^2 log N)`.
//!
//! Exact ties are resolved deterministically: classes are scanned in tie
//! order, relaxations need a strict improvement (so direct placements win
//! over equal-cost detours), and heap ties go to the lower row index.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::objective::ScaledObjective;
use crate::rules::TieOrder;

const INF: i64 = i64::MAX / 4;
const NONE: usize = usize::MAX;

type MoveHeap = BinaryHeap<Reverse<(i64, usize, u32)>>;

struct State<'a> {
    obj: &'a ScaledObjective,
    k: usize,
    class_of: Vec<usize>,
    version: Vec<u32>,
    count: Vec<usize>,
    // heaps[a * k + b]: rows currently in `a`, keyed by the cost of moving them to `b`.
    heaps: Vec<MoveHeap>,
}

impl<'a> State<'a> {
    fn new(obj: &'a ScaledObjective) -> Self {
        let k = obj.n_classes();
        Self {
            obj,
            k,
            class_of: vec![NONE; obj.n_rows()],
            version: vec![0; obj.n_rows()],
            count: vec![0; k],
            heaps: (0..k * k).map(|_| BinaryHeap::new()).collect(),
        }
    }

    fn place(&mut self, row: usize, class: usize) {
        self.class_of[row] = class;
        self.version[row] = self.version[row].wrapping_add(1);
        let v = self.version[row];
        let w_here = self.obj.weight(row, class);
        for b in 0..self.k {
            if b != class {
                let key = w_here - self.obj.weight(row, b);
                self.heaps[class * self.k + b].push(Reverse((key, row, v)));
            }
        }
    }

    /// Cheapest valid move `a -> b`, dropping stale heap entries.
    fn best_move(&mut self, a: usize, b: usize) -> Option<(i64, usize)> {
        let heap = &mut self.heaps[a * self.k + b];
        while let Some(&Reverse((key, row, v))) = heap.peek() {
            if self.class_of[row] == a && self.version[row] == v {
                return Some((key, row));
            }
            heap.pop();
        }
        None
    }
}

/// Solves `obj` exactly. Returns `None` if the quotas cannot hold every row.
pub fn solve(obj: &ScaledObjective, ties: &TieOrder) -> Option<Vec<usize>> {
    let k = obj.n_classes();
    debug_assert_eq!(ties.n_classes(), k);
    let order = ties.order();
    let total_capacity: usize = (0..k).map(|y| obj.capacity(y)).sum();
    if total_capacity < obj.n_rows() {
        return None;
    }
    let mut st = State::new(obj);
    let mut dist = vec![INF; k];
    let mut pred: Vec<(usize, usize)> = vec![(NONE, NONE); k];
    let mut hop = vec![None; k * k];

    for r in 0..obj.n_rows() {
        for y in 0..k {
            dist[y] = -obj.weight(r, y);
            pred[y] = (NONE, NONE);
        }
        for &a in order {
            for &b in order {
                if a != b {
                    hop[a * k + b] = st.best_move(a, b);
                }
            }
        }
        for _ in 1..k {
            let mut changed = false;
            for &a in order {
                for &b in order {
                    if a == b {
                        continue;
                    }
                    if let Some((c, row)) = hop[a * k + b] {
                        let nd = dist[a] + c;
                        if nd < dist[b] {
                            dist[b] = nd;
                            pred[b] = (a, row);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut best = NONE;
        let mut best_cost = INF;
        for &y in order {
            if let Some(u) = obj.unit_cost(y, st.count[y] + 1) {
                if dist[y] + u < best_cost {
                    best_cost = dist[y] + u;
                    best = y;
                }
            }
        }
        if best == NONE {
            return None;
        }
        st.count[best] += 1;
        let mut y = best;
        let mut hops = 0;
        loop {
            let (a, moved) = pred[y];
            if a == NONE {
                break;
            }
            st.place(moved, y);
            y = a;
            hops += 1;
            debug_assert!(hops < k, "predecessor cycle");
        }
        st.place(r, y);
    }
    Some(st.class_of)
}
