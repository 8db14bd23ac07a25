//! Order-statistic sequence: an implicit-key treap supporting insertion,
//! removal and lookup by position in `O(log n)` expected time.
//!
//! The forest simulation keeps the alive individuals in planar (left to
//! right) order here; an individual's position is its left-count.

use alloc::vec::Vec;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node<T> {
    value: T,
    priority: u64,
    left: u32,
    right: u32,
    size: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct OrderStatisticList<T> {
    nodes: Vec<Node<T>>,
    free: Vec<u32>,
    root: u32,
    prio_state: u64,
}

impl<T: Copy> OrderStatisticList<T> {
    pub(crate) fn new() -> Self {
        OrderStatisticList { nodes: Vec::new(), free: Vec::new(), root: NIL, prio_state: 0x2545_f491_4f6c_dd1d }
    }

    pub(crate) fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    fn size(&self, n: u32) -> u32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].size
        }
    }

    fn update(&mut self, n: u32) {
        let (l, r) = {
            let node = &self.nodes[n as usize];
            (node.left, node.right)
        };
        self.nodes[n as usize].size = 1 + self.size(l) + self.size(r);
    }

    fn next_priority(&mut self) -> u64 {
        // xorshift64*; deterministic so that simulations are reproducible
        let mut x = self.prio_state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.prio_state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Splits `n` into the first `k` elements and the rest.
    fn split(&mut self, n: u32, k: u32) -> (u32, u32) {
        if n == NIL {
            return (NIL, NIL);
        }
        let left = self.nodes[n as usize].left;
        let ls = self.size(left);
        if k <= ls {
            let (a, b) = self.split(left, k);
            self.nodes[n as usize].left = b;
            self.update(n);
            (a, n)
        } else {
            let right = self.nodes[n as usize].right;
            let (a, b) = self.split(right, k - ls - 1);
            self.nodes[n as usize].right = a;
            self.update(n);
            (n, b)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].priority > self.nodes[b as usize].priority {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.update(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.update(b);
            b
        }
    }

    /// Inserts `value` so that it ends up at position `pos`.
    pub(crate) fn insert(&mut self, pos: usize, value: T) {
        assert!(pos <= self.len(), "insert position out of range");
        let priority = self.next_priority();
        let node = Node { value, priority, left: NIL, right: NIL, size: 1 };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        let (a, b) = self.split(self.root, pos as u32);
        let m = self.merge(a, id);
        self.root = self.merge(m, b);
    }

    /// Removes and returns the element at position `pos`.
    pub(crate) fn remove(&mut self, pos: usize) -> T {
        assert!(pos < self.len(), "remove position out of range");
        let (a, rest) = self.split(self.root, pos as u32);
        let (mid, b) = self.split(rest, 1);
        self.free.push(mid);
        self.root = self.merge(a, b);
        self.nodes[mid as usize].value
    }

    pub(crate) fn get(&self, pos: usize) -> T {
        assert!(pos < self.len(), "position out of range");
        let mut n = self.root;
        let mut k = pos as u32;
        loop {
            let node = &self.nodes[n as usize];
            let ls = self.size(node.left);
            if k < ls {
                n = node.left;
            } else if k == ls {
                return node.value;
            } else {
                k -= ls + 1;
                n = node.right;
            }
        }
    }

    #[cfg(test)]
    fn to_vec(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Debug, Clone)]
    enum Op {
        Insert(usize, u32),
        Remove(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (any::<usize>(), any::<u32>()).prop_map(|(p, v)| Op::Insert(p, v)),
            any::<usize>().prop_map(Op::Remove),
        ]
    }

    proptest! {
        #[test]
        fn matches_vec_model(ops in proptest::collection::vec(op(), 0..300)) {
            let mut list = OrderStatisticList::new();
            let mut model: Vec<u32> = Vec::new();
            for o in ops {
                match o {
                    Op::Insert(p, v) => {
                        let p = p % (model.len() + 1);
                        list.insert(p, v);
                        model.insert(p, v);
                    }
                    Op::Remove(p) => {
                        if model.is_empty() { continue; }
                        let p = p % model.len();
                        prop_assert_eq!(list.remove(p), model.remove(p));
                    }
                }
                prop_assert_eq!(list.len(), model.len());
            }
            prop_assert_eq!(list.to_vec(), model);
        }
    }
}
