use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub element: &'static str,
    pub charge: i32,
    /// Hydrogens written inside a bracket atom; zero for organic-subset atoms.
    pub explicit_h: u32,
    pub in_ring: bool,
    pub degree: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

/// Heavy-atom connectivity of a molecule or salt (possibly several
/// dot-separated fragments).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    fragment_count: usize,
}

impl MolecularGraph {
    /// Builds a graph from atoms (element, charge, explicit H) and bonds,
    /// deriving degree, ring membership and fragment count.
    pub fn from_parts(atoms: Vec<(&'static str, i32, u32)>, bonds: Vec<Bond>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::Input("molecular graph has no atoms".into()));
        }
        let mut seen = BTreeSet::new();
        for b in &bonds {
            if b.a >= n || b.b >= n {
                return Err(Error::Input(format!(
                    "bond ({}, {}) references a missing atom (have {n})",
                    b.a, b.b
                )));
            }
            if b.a == b.b {
                return Err(Error::Input(format!("self-bond on atom {}", b.a)));
            }
            if !(1..=3).contains(&b.order) {
                return Err(Error::Input(format!("unsupported bond order {}", b.order)));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(Error::Input(format!(
                    "duplicate bond between {} and {}",
                    b.a, b.b
                )));
            }
        }

        let mut degree = vec![0usize; n];
        for b in &bonds {
            degree[b.a] += 1;
            degree[b.b] += 1;
        }
        let fragment_count = count_components(n, &bonds, None);
        let mut in_ring = vec![false; n];
        for (i, b) in bonds.iter().enumerate() {
            // A bond lies on a cycle iff removing it keeps its endpoints connected.
            if connected(n, &bonds, Some(i), b.a, b.b) {
                in_ring[b.a] = true;
                in_ring[b.b] = true;
            }
        }

        let atoms = atoms
            .into_iter()
            .enumerate()
            .map(|(i, (element, charge, explicit_h))| Atom {
                element,
                charge,
                explicit_h,
                in_ring: in_ring[i],
                degree: degree[i],
            })
            .collect();
        Ok(Self {
            atoms,
            bonds,
            fragment_count,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn fragment_count(&self) -> usize {
        self.fragment_count
    }

    /// Cyclomatic number: independent rings.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + self.fragment_count - self.atoms.len()
    }

    /// Sum of bond orders incident to atom `i`.
    pub fn bond_order_sum(&self, i: usize) -> u32 {
        self.bonds
            .iter()
            .filter(|b| b.a == i || b.b == i)
            .map(|b| u32::from(b.order))
            .sum()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.bonds.len() as f64 / self.atoms.len() as f64
    }

    /// Relabels atoms so that old atom `i` becomes atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.atoms.len();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::Input(format!("not a permutation of 0..{n}")));
        }
        let mut atoms = vec![None; n];
        for (old, a) in self.atoms.iter().enumerate() {
            atoms[perm[old]] = Some((a.element, a.charge, a.explicit_h));
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                order: b.order,
            })
            .collect();
        Self::from_parts(atoms.into_iter().map(Option::unwrap).collect(), bonds)
    }
}

fn adjacency(n: usize, bonds: &[Bond], skip: Option<usize>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        adj[b.a].push(b.b);
        adj[b.b].push(b.a);
    }
    adj
}

fn connected(n: usize, bonds: &[Bond], skip: Option<usize>, from: usize, to: usize) -> bool {
    let adj = adjacency(n, bonds, skip);
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

fn count_components(n: usize, bonds: &[Bond], skip: Option<usize>) -> usize {
    let adj = adjacency(n, bonds, skip);
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}
