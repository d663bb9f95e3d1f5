use std::fmt;

use super::{parse_smiles, MolecularGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Salt,
    Solvent,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Salt => "salt",
            Role::Solvent => "solvent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constituent {
    pub name: &'static str,
    pub role: Role,
    pub smiles: &'static str,
    pub graph: MolecularGraph,
}

/// Number of electrolyte constituents in a formulation.
pub const CONSTITUENT_COUNT: usize = 8;

/// `(name, role, SMILES, CSV column)` in registry order.
pub const REGISTRY: [(&str, Role, &str, &str); CONSTITUENT_COUNT] = [
    ("LiCl", Role::Salt, "[Li+].[Cl-]", "mol_licl"),
    ("LiNO3", Role::Salt, "[Li+].[O-][N+](=O)[O-]", "mol_lino3"),
    (
        "LiBOB",
        Role::Salt,
        "[Li+].[B-]12(OC(=O)C(=O)O1)OC(=O)C(=O)O2",
        "mol_libob",
    ),
    (
        "LiTFSI",
        Role::Salt,
        "[Li+].[N-](S(=O)(=O)C(F)(F)F)S(=O)(=O)C(F)(F)F",
        "mol_litfsi",
    ),
    ("DOL", Role::Solvent, "C1COCO1", "mol_dol"),
    ("DMI", Role::Solvent, "CN1CCN(C)C1=O", "mol_dmi"),
    ("EC", Role::Solvent, "O=C1OCCO1", "mol_ec"),
    ("G4", Role::Solvent, "COCCOCCOCCOCCOC", "mol_g4"),
];

pub fn constituent_names() -> [&'static str; CONSTITUENT_COUNT] {
    REGISTRY.map(|r| r.0)
}

pub fn mol_columns() -> [&'static str; CONSTITUENT_COUNT] {
    REGISTRY.map(|r| r.3)
}

pub fn is_salt(index: usize) -> bool {
    REGISTRY[index].1 == Role::Salt
}

/// The eight constituents in fixed registry order:
/// LiCl, LiNO3, LiBOB, LiTFSI, DOL, DMI, EC, G4.
pub fn canonical_constituents() -> Vec<Constituent> {
    REGISTRY
        .iter()
        .map(|&(name, role, smiles, _)| Constituent {
            name,
            role,
            smiles,
            graph: parse_smiles(smiles).expect("built-in SMILES parses"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn heavy_formula(g: &MolecularGraph) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for a in g.atoms() {
            *m.entry(a.element).or_default() += 1;
        }
        m
    }

    #[test]
    fn registry_order_and_size() {
        let c = canonical_constituents();
        assert_eq!(c.len(), 8);
        assert_eq!(
            c.iter().map(|c| c.name).collect::<Vec<_>>(),
            ["LiCl", "LiNO3", "LiBOB", "LiTFSI", "DOL", "DMI", "EC", "G4"]
        );
        assert_eq!(c.iter().filter(|c| c.role == Role::Salt).count(), 4);
    }

    #[test]
    fn salts_carry_one_lithium_cation() {
        for c in canonical_constituents()
            .iter()
            .filter(|c| c.role == Role::Salt)
        {
            let li: Vec<_> = c
                .graph
                .atoms()
                .iter()
                .filter(|a| a.element == "Li")
                .collect();
            assert_eq!(li.len(), 1, "{}", c.name);
            assert_eq!(li[0].charge, 1, "{}", c.name);
            assert!(c.graph.fragment_count() >= 2, "{}", c.name);
            let net: i32 = c.graph.atoms().iter().map(|a| a.charge).sum();
            assert_eq!(net, 0, "{} should be charge-neutral", c.name);
        }
    }

    #[test]
    fn heavy_atom_formulas() {
        // Heavy-atom composition of each structure (hydrogens implicit).
        let expected: [&[(&str, usize)]; 8] = [
            &[("Cl", 1), ("Li", 1)],
            &[("Li", 1), ("N", 1), ("O", 3)],
            &[("B", 1), ("C", 4), ("Li", 1), ("O", 8)],
            &[("C", 2), ("F", 6), ("Li", 1), ("N", 1), ("O", 4), ("S", 2)],
            &[("C", 3), ("O", 2)],
            &[("C", 5), ("N", 2), ("O", 1)],
            &[("C", 3), ("O", 3)],
            &[("C", 10), ("O", 5)],
        ];
        for (c, exp) in canonical_constituents().iter().zip(expected) {
            let got = heavy_formula(&c.graph);
            let exp: BTreeMap<_, _> = exp.iter().copied().collect();
            assert_eq!(got, exp, "{}", c.name);
        }
    }

    #[test]
    fn tetraglyme_is_acyclic_chain() {
        let g4 = &canonical_constituents()[7];
        assert_eq!(g4.graph.atom_count(), 15);
        assert_eq!(g4.graph.bond_count(), 14);
        assert_eq!(g4.graph.ring_count(), 0);
    }

    #[test]
    fn ring_counts() {
        let rings: Vec<usize> = canonical_constituents()
            .iter()
            .map(|c| c.graph.ring_count())
            .collect();
        assert_eq!(rings, [0, 0, 2, 0, 1, 1, 1, 0]);
    }
}
