use crate::numkernel::Matrix;

use super::MolecularGraph;

/// Element categories of the one-hot block; anything else maps to "other".
pub const ELEMENT_CLASSES: [&str; 9] = ["B", "C", "N", "O", "F", "S", "Cl", "I", "Li"];

/// Node feature width: 10 element slots, charge, degree/4, ring flag,
/// explicit-H/4, bond-order sum/4.
pub const NODE_FEATURES: usize = 15;

/// Node features and the symmetric-normalized adjacency `D^-1/2 (A+I) D^-1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturizedGraph {
    pub nodes: Matrix,
    pub adjacency: Matrix,
}

pub fn featurize(graph: &MolecularGraph) -> FeaturizedGraph {
    let n = graph.atom_count();
    let mut nodes = Matrix::zeros(n, NODE_FEATURES);
    for (i, atom) in graph.atoms().iter().enumerate() {
        let slot = ELEMENT_CLASSES
            .iter()
            .position(|e| *e == atom.element)
            .unwrap_or(ELEMENT_CLASSES.len());
        nodes.set(i, slot, 1.0);
        nodes.set(i, 10, f64::from(atom.charge));
        nodes.set(i, 11, atom.degree as f64 / 4.0);
        nodes.set(i, 12, if atom.in_ring { 1.0 } else { 0.0 });
        nodes.set(i, 13, f64::from(atom.explicit_h) / 4.0);
        nodes.set(i, 14, f64::from(graph.bond_order_sum(i)) / 4.0);
    }

    let mut a = Matrix::identity(n);
    for b in graph.bonds() {
        a.set(b.a, b.b, 1.0);
        a.set(b.b, b.a, 1.0);
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| 1.0 / a.row(i).iter().sum::<f64>().sqrt())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 {
                a.set(i, j, v * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
            }
        }
    }
    FeaturizedGraph {
        nodes,
        adjacency: a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn isolated_atom_has_unit_adjacency() {
        let fg = featurize(&parse_smiles("[Li+]").unwrap());
        assert_eq!(fg.adjacency.as_slice(), &[1.0]);
    }

    #[test]
    fn single_bond_pair_is_all_halves() {
        let fg = featurize(&parse_smiles("CO").unwrap());
        // deg(A+I) = 2 for both atoms, so every entry is 1/sqrt(2·2).
        for &v in fg.adjacency.as_slice() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn adjacency_symmetric_with_entries_in_unit_interval() {
        for s in [
            "CN1CCN(C)C1=O",
            "[Li+].[N-](S(=O)(=O)C(F)(F)F)S(=O)(=O)C(F)(F)F",
            "C1COCO1",
        ] {
            let fg = featurize(&parse_smiles(s).unwrap());
            let a = &fg.adjacency;
            for i in 0..a.rows() {
                assert!(a.get(i, i) > 0.0);
                for j in 0..a.cols() {
                    assert_eq!(a.get(i, j), a.get(j, i));
                    let v = a.get(i, j);
                    assert!(v == 0.0 || (v > 0.0 && v <= 1.0));
                }
            }
        }
    }

    #[test]
    fn node_features_for_carbonyl_carbon() {
        let fg = featurize(&parse_smiles("O=C1OCCO1").unwrap());
        let row = fg.nodes.row(1);
        assert_eq!(row[1], 1.0); // carbon
        assert_eq!(row[11], 3.0 / 4.0);
        assert_eq!(row[12], 1.0);
        assert_eq!(row[14], 4.0 / 4.0);
        let li = featurize(&parse_smiles("[Li+]").unwrap());
        assert_eq!(li.nodes.row(0)[8], 1.0);
        assert_eq!(li.nodes.row(0)[10], 1.0);
        let other = featurize(&parse_smiles("[Na+]").unwrap());
        assert_eq!(other.nodes.row(0)[9], 1.0);
    }

    #[test]
    fn relabeling_permutes_features_and_adjacency() {
        let g = parse_smiles("CN1CCN(C)C1=O").unwrap();
        let n = g.atom_count();
        let perm: Vec<usize> = (0..n).map(|i| (i * 3 + 2) % n).collect();
        let pg = g.permuted(&perm).unwrap();
        let (f, pf) = (featurize(&g), featurize(&pg));
        for i in 0..n {
            assert_eq!(f.nodes.row(i), pf.nodes.row(perm[i]));
            for j in 0..n {
                assert_eq!(f.adjacency.get(i, j), pf.adjacency.get(perm[i], perm[j]));
            }
        }
    }
}
