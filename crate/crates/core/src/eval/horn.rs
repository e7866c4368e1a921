/// A propositional Horn instance over atoms `0..num_atoms`.
///
/// Clauses are stored flat: clause `i` has head `heads[i]` and body
/// `bodies[body_start[i]..body_start[i + 1]]`. A clause with an empty body
/// is a fact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HornInstance {
    pub num_atoms: usize,
    pub heads: Vec<u32>,
    pub body_start: Vec<u32>,
    pub bodies: Vec<u32>,
}

impl HornInstance {
    pub fn new(num_atoms: usize) -> Self {
        HornInstance { num_atoms, heads: Vec::new(), body_start: vec![0], bodies: Vec::new() }
    }

    pub fn add_clause(&mut self, head: u32, body: &[u32]) {
        debug_assert!((head as usize) < self.num_atoms);
        self.heads.push(head);
        self.bodies.extend_from_slice(body);
        self.body_start.push(self.bodies.len() as u32);
    }

    pub fn add_fact(&mut self, head: u32) {
        self.add_clause(head, &[]);
    }

    pub fn num_clauses(&self) -> usize {
        self.heads.len()
    }

    pub fn body(&self, i: usize) -> &[u32] {
        &self.bodies[self.body_start[i] as usize..self.body_start[i + 1] as usize]
    }

    /// Total size: one per head plus one per body occurrence.
    pub fn size(&self) -> usize {
        self.heads.len() + self.bodies.len()
    }
}

/// Least model by unit propagation with per-clause counters of unsatisfied
/// body atoms. Each body occurrence is visited at most once.
pub fn horn_fixpoint(h: &HornInstance) -> Vec<bool> {
    let n = h.num_atoms;
    let m = h.num_clauses();
    // Occurrence lists in CSR form.
    let mut occ_start = vec![0u32; n + 1];
    for &a in &h.bodies {
        occ_start[a as usize + 1] += 1;
    }
    for i in 0..n {
        occ_start[i + 1] += occ_start[i];
    }
    let mut fill = occ_start.clone();
    let mut occ = vec![0u32; h.bodies.len()];
    for c in 0..m {
        for &a in h.body(c) {
            occ[fill[a as usize] as usize] = c as u32;
            fill[a as usize] += 1;
        }
    }
    let mut remaining: Vec<u32> = (0..m).map(|c| h.body_start[c + 1] - h.body_start[c]).collect();
    let mut model = vec![false; n];
    let mut queue: Vec<u32> = Vec::new();
    for c in 0..m {
        if remaining[c] == 0 {
            let a = h.heads[c];
            if !model[a as usize] {
                model[a as usize] = true;
                queue.push(a);
            }
        }
    }
    while let Some(a) = queue.pop() {
        for &c in &occ[occ_start[a as usize] as usize..occ_start[a as usize + 1] as usize] {
            let r = &mut remaining[c as usize];
            *r -= 1;
            if *r == 0 {
                let head = h.heads[c as usize];
                if !model[head as usize] {
                    model[head as usize] = true;
                    queue.push(head);
                }
            }
        }
    }
    model
}

/// Least model by repeated passes over all clauses; an oracle for
/// [`horn_fixpoint`].
pub fn horn_fixpoint_naive(h: &HornInstance) -> Vec<bool> {
    let mut model = vec![false; h.num_atoms];
    loop {
        let mut changed = false;
        for c in 0..h.num_clauses() {
            let head = h.heads[c] as usize;
            if !model[head] && h.body(c).iter().all(|&a| model[a as usize]) {
                model[head] = true;
                changed = true;
            }
        }
        if !changed {
            return model;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_instance() {
        // a.  b <- a.  c <- b, d.
        let mut h = HornInstance::new(4);
        h.add_fact(0);
        h.add_clause(1, &[0]);
        h.add_clause(2, &[1, 3]);
        assert_eq!(horn_fixpoint(&h), vec![true, true, false, false]);
        assert_eq!(horn_fixpoint_naive(&h), horn_fixpoint(&h));
    }

    #[test]
    fn repeated_body_atoms() {
        let mut h = HornInstance::new(3);
        h.add_fact(0);
        h.add_clause(1, &[0, 0]);
        h.add_clause(2, &[1, 2]);
        assert_eq!(horn_fixpoint(&h), vec![true, true, false]);
    }
}
