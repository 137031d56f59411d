//! Arena treap ordered by `(length, id)`, augmented with subtree length sums and
//! counts so that prefix sums and weighted selection run in `O(log n)`.

use std::cmp::Ordering;

pub(crate) const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    len: f64,
    id: u64,
    prio: u64,
    left: u32,
    right: u32,
    sum: f64,
    count: u32,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key_cmp(a: (f64, u64), b: (f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone, Default)]
pub struct Treap {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    live: usize,
}

impl Treap {
    pub fn new() -> Self {
        Treap { nodes: Vec::new(), free: Vec::new(), root: NIL, live: 0 }
    }

    pub fn with_capacity(n: usize) -> Self {
        Treap { nodes: Vec::with_capacity(n), free: Vec::new(), root: NIL, live: 0 }
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn total(&self) -> f64 {
        self.sum_of(self.root)
    }

    pub fn length(&self, handle: u32) -> f64 {
        self.nodes[handle as usize].len
    }

    pub fn id(&self, handle: u32) -> u64 {
        self.nodes[handle as usize].id
    }

    fn sum_of(&self, t: u32) -> f64 {
        if t == NIL {
            0.0
        } else {
            self.nodes[t as usize].sum
        }
    }

    fn count_of(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].count
        }
    }

    fn update(&mut self, t: u32) {
        let (l, r) = {
            let n = &self.nodes[t as usize];
            (n.left, n.right)
        };
        let sum = self.sum_of(l) + self.nodes[t as usize].len + self.sum_of(r);
        let count = self.count_of(l) + 1 + self.count_of(r);
        let n = &mut self.nodes[t as usize];
        n.sum = sum;
        n.count = count;
    }

    /// Splits `t` into keys `< key` and the rest.
    fn split(&mut self, t: u32, key: (f64, u64)) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let node_key = (self.nodes[t as usize].len, self.nodes[t as usize].id);
        if key_cmp(node_key, key) == Ordering::Less {
            let right = self.nodes[t as usize].right;
            let (a, b) = self.split(right, key);
            self.nodes[t as usize].right = a;
            self.update(t);
            (t, b)
        } else {
            let left = self.nodes[t as usize].left;
            let (a, b) = self.split(left, key);
            self.nodes[t as usize].left = b;
            self.update(t);
            (a, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio >= self.nodes[b as usize].prio {
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

    pub fn insert(&mut self, len: f64, id: u64) -> u32 {
        let node = Node { len, id, prio: splitmix64(id), left: NIL, right: NIL, sum: len, count: 1 };
        let handle = match self.free.pop() {
            Some(h) => {
                self.nodes[h as usize] = node;
                h
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        self.root = self.insert_at(self.root, handle);
        self.live += 1;
        handle
    }

    /// Descends to where `x` belongs by priority and splits only the subtree below it.
    fn insert_at(&mut self, t: u32, x: u32) -> u32 {
        if t == NIL {
            return x;
        }
        let key = (self.nodes[x as usize].len, self.nodes[x as usize].id);
        if self.nodes[x as usize].prio > self.nodes[t as usize].prio {
            let (l, r) = self.split(t, key);
            self.nodes[x as usize].left = l;
            self.nodes[x as usize].right = r;
            self.update(x);
            return x;
        }
        let n = &self.nodes[t as usize];
        if key_cmp(key, (n.len, n.id)) == Ordering::Less {
            let c = self.insert_at(n.left, x);
            self.nodes[t as usize].left = c;
        } else {
            let c = self.insert_at(n.right, x);
            self.nodes[t as usize].right = c;
        }
        self.update(t);
        t
    }

    fn remove_at(&mut self, t: u32, key: (f64, u64)) -> u32 {
        debug_assert!(t != NIL, "key not present");
        let n = &self.nodes[t as usize];
        let (l, r) = (n.left, n.right);
        match key_cmp(key, (n.len, n.id)) {
            Ordering::Equal => return self.merge(l, r),
            Ordering::Less => {
                let c = self.remove_at(l, key);
                self.nodes[t as usize].left = c;
            }
            Ordering::Greater => {
                let c = self.remove_at(r, key);
                self.nodes[t as usize].right = c;
            }
        }
        self.update(t);
        t
    }

    pub fn remove(&mut self, handle: u32) {
        let key = (self.nodes[handle as usize].len, self.nodes[handle as usize].id);
        self.root = self.remove_at(self.root, key);
        self.free.push(handle);
        self.live -= 1;
    }

    /// `Σ len` over entries with `len <= x`.
    pub fn prefix_sum_le(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut t = self.root;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.len <= x {
                acc += self.sum_of(n.left) + n.len;
                t = n.right;
            } else {
                t = n.left;
            }
        }
        acc
    }

    /// Number of entries with `len <= x`.
    pub fn count_le(&self, x: f64) -> usize {
        let mut acc = 0usize;
        let mut t = self.root;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.len <= x {
                acc += self.count_of(n.left) as usize + 1;
                t = n.right;
            } else {
                t = n.left;
            }
        }
        acc
    }

    /// First entry (in key order) whose inclusive cumulative length reaches
    /// `target`, moved back to the smallest id of equal length. Falls back to
    /// the maximum when rounding carries the target past the total.
    pub fn select_by_weight(&self, target: f64) -> Option<u32> {
        if self.root == NIL {
            return None;
        }
        let mut t = self.root;
        let mut rest = target;
        let mut found = NIL;
        while t != NIL {
            let n = &self.nodes[t as usize];
            let ls = self.sum_of(n.left);
            if rest <= ls && n.left != NIL {
                t = n.left;
                continue;
            }
            rest -= ls;
            if rest <= n.len {
                found = t;
                break;
            }
            rest -= n.len;
            t = n.right;
        }
        if found == NIL {
            found = self.max()?;
        }
        Some(self.lower_bound_len(self.nodes[found as usize].len).unwrap_or(found))
    }

    /// First entry with `len >= x`.
    pub fn lower_bound_len(&self, x: f64) -> Option<u32> {
        let mut t = self.root;
        let mut best = NIL;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.len >= x {
                best = t;
                t = n.left;
            } else {
                t = n.right;
            }
        }
        (best != NIL).then_some(best)
    }

    pub fn max(&self) -> Option<u32> {
        let mut t = self.root;
        if t == NIL {
            return None;
        }
        while self.nodes[t as usize].right != NIL {
            t = self.nodes[t as usize].right;
        }
        Some(t)
    }

    pub fn min(&self) -> Option<u32> {
        let mut t = self.root;
        if t == NIL {
            return None;
        }
        while self.nodes[t as usize].left != NIL {
            t = self.nodes[t as usize].left;
        }
        Some(t)
    }

    /// Visits `(handle, len)` in increasing key order.
    pub fn for_each_in_order<F: FnMut(u32, f64)>(&self, mut f: F) {
        let mut stack = Vec::with_capacity(64);
        let mut t = self.root;
        loop {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            match stack.pop() {
                Some(top) => {
                    f(top, self.nodes[top as usize].len);
                    t = self.nodes[top as usize].right;
                }
                None => break,
            }
        }
    }

    /// Recomputes every aggregate from the leaves and reports whether the
    /// cached values agree bit for bit, together with key order and heap order.
    pub fn audit(&self) -> bool {
        fn walk(tr: &Treap, t: u32) -> Option<(f64, u32)> {
            if t == NIL {
                return Some((0.0, 0));
            }
            let n = &tr.nodes[t as usize];
            for c in [n.left, n.right] {
                if c != NIL && tr.nodes[c as usize].prio > n.prio {
                    return None;
                }
            }
            if n.left != NIL {
                let l = &tr.nodes[n.left as usize];
                if key_cmp((l.len, l.id), (n.len, n.id)) != Ordering::Less {
                    return None;
                }
            }
            if n.right != NIL {
                let r = &tr.nodes[n.right as usize];
                if key_cmp((r.len, r.id), (n.len, n.id)) != Ordering::Greater {
                    return None;
                }
            }
            let (ls, lc) = walk(tr, n.left)?;
            let (rs, rc) = walk(tr, n.right)?;
            let sum = ls + n.len + rs;
            let count = lc + 1 + rc;
            (sum.to_bits() == n.sum.to_bits() && count == n.count).then_some((sum, count))
        }
        match walk(self, self.root) {
            Some((_, c)) => c as usize == self.live,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_and_select() {
        let mut t = Treap::new();
        t.insert(0.5, 0);
        t.insert(0.3, 1);
        t.insert(0.2, 2);
        assert_eq!(t.prefix_sum_le(0.25), 0.2);
        assert_eq!(t.prefix_sum_le(0.3), 0.5);
        assert_eq!(t.prefix_sum_le(10.0), 1.0);
        assert_eq!(t.length(t.select_by_weight(0.4).unwrap()), 0.3);
        assert_eq!(t.length(t.select_by_weight(0.2).unwrap()), 0.2);
        assert_eq!(t.length(t.select_by_weight(0.9).unwrap()), 0.5);
        assert_eq!(t.length(t.select_by_weight(1.5).unwrap()), 0.5);
        assert!(t.audit());
    }

    #[test]
    fn ties_resolve_to_smallest_id() {
        let mut t = Treap::new();
        for id in [5u64, 3, 9, 1] {
            t.insert(0.25, id);
        }
        for target in [0.01, 0.3, 0.6, 0.99, 1.0] {
            assert_eq!(t.id(t.select_by_weight(target).unwrap()), 1);
        }
    }

    proptest! {
        #[test]
        fn matches_sorted_vector(ops in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..200)) {
            let mut t = Treap::new();
            let mut model: Vec<(f64, u64, u32)> = Vec::new();
            for (i, (x, del)) in ops.iter().enumerate() {
                if *del && !model.is_empty() {
                    let k = (x * model.len() as f64) as usize % model.len();
                    let (_, _, h) = model.remove(k);
                    t.remove(h);
                } else {
                    let len = x + 1e-3;
                    let h = t.insert(len, i as u64);
                    model.push((len, i as u64, h));
                }
                prop_assert!(t.audit());
                prop_assert_eq!(t.len(), model.len());
            }
            model.sort_by(|a, b| key_cmp((a.0, a.1), (b.0, b.1)));
            let mut seen = Vec::new();
            t.for_each_in_order(|h, _| seen.push(h));
            prop_assert_eq!(seen, model.iter().map(|m| m.2).collect::<Vec<_>>());
            let probe = 0.5;
            let expect: f64 = model.iter().filter(|m| m.0 <= probe).map(|m| m.0).sum();
            prop_assert!((t.prefix_sum_le(probe) - expect).abs() < 1e-12);
            prop_assert_eq!(t.count_le(probe), model.iter().filter(|m| m.0 <= probe).count());
        }
    }
}
