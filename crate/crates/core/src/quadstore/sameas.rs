use std::collections::HashMap;

/// Union-find over dictionary ids with member lists per root, so a class can
/// be enumerated without scanning every entity.
#[derive(Debug, Default, Clone)]
pub struct SameAsIndex {
    parent: HashMap<u32, u32>,
    rank: HashMap<u32, u8>,
    members: HashMap<u32, Vec<u32>>,
}

impl SameAsIndex {
    pub fn find(&self, mut id: u32) -> u32 {
        while let Some(&p) = self.parent.get(&id) {
            if p == id {
                break;
            }
            id = p;
        }
        id
    }

    fn find_compress(&mut self, id: u32) -> u32 {
        let root = self.find(id);
        let mut cur = id;
        while cur != root {
            let next = self.parent[&cur];
            self.parent.insert(cur, root);
            cur = next;
        }
        root
    }

    fn ensure(&mut self, id: u32) {
        if !self.parent.contains_key(&id) {
            self.parent.insert(id, id);
            self.rank.insert(id, 0);
            self.members.insert(id, vec![id]);
        }
    }

    pub fn union(&mut self, a: u32, b: u32) {
        self.ensure(a);
        self.ensure(b);
        let ra = self.find_compress(a);
        let rb = self.find_compress(b);
        if ra == rb {
            return;
        }
        let (rank_a, rank_b) = (self.rank[&ra], self.rank[&rb]);
        let (root, child) = if rank_a < rank_b { (rb, ra) } else { (ra, rb) };
        if rank_a == rank_b {
            *self.rank.get_mut(&root).unwrap() += 1;
        }
        self.parent.insert(child, root);
        let moved = self.members.remove(&child).unwrap_or_default();
        self.members.get_mut(&root).unwrap().extend(moved);
    }

    /// Every id equivalent to `id`, including itself.
    pub fn class_of(&self, id: u32) -> Vec<u32> {
        let root = self.find(id);
        self.members.get(&root).cloned().unwrap_or_else(|| vec![id])
    }

    pub fn clear(&mut self) {
        self.parent.clear();
        self.rank.clear();
        self.members.clear();
    }
}
