//! A bounded SMILES reader: organic-subset and bracket atoms, explicit bond
//! orders, branches, ring closures (single digit and `%nn`) and
//! dot-separated fragments. Aromatic atoms, stereochemistry, isotopes and
//! atom classes are rejected.

use std::collections::BTreeMap;

use thiserror::Error;

use super::graph::{Bond, MolecularGraph};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("SMILES parse error at byte {offset}: {reason}")]
pub struct SmilesError {
    pub offset: usize,
    pub reason: String,
}

fn err<T>(offset: usize, reason: impl Into<String>) -> Result<T, SmilesError> {
    Err(SmilesError {
        offset,
        reason: reason.into(),
    })
}

#[rustfmt::skip]
const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

const ORGANIC_SUBSET: &[&str] = &["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"];

fn element(symbol: &str) -> Option<&'static str> {
    ELEMENTS.iter().copied().find(|e| *e == symbol)
}

struct OpenRing {
    atom: usize,
    order: Option<u8>,
    offset: usize,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<(&'static str, i32, u32)>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending: Option<(u8, usize)>,
    branches: Vec<(Option<usize>, usize)>,
    branch_empty: bool,
    rings: BTreeMap<u32, OpenRing>,
}

/// Parses `text` into a heavy-atom graph.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    if text.is_empty() {
        return err(0, "empty SMILES string");
    }
    if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
        return err(i, "non-ASCII character");
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        branch_empty: false,
        rings: BTreeMap::new(),
    };
    p.run()?;
    MolecularGraph::from_parts(p.atoms, p.bonds).map_err(|e| SmilesError {
        offset: text.len(),
        reason: e.to_string(),
    })
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() {
                        return err(at, "branch without a preceding atom");
                    }
                    if self.pending.is_some() {
                        return err(at, "bond symbol before '('");
                    }
                    self.branches.push((self.prev, at));
                    self.branch_empty = true;
                    self.pos += 1;
                }
                b')' => {
                    let Some((anchor, _)) = self.branches.pop() else {
                        return err(at, "unbalanced ')'");
                    };
                    if self.pending.is_some() {
                        return err(at, "dangling bond before ')'");
                    }
                    if self.branch_empty {
                        return err(at, "empty branch");
                    }
                    self.prev = anchor;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' => {
                    if self.prev.is_none() {
                        return err(at, "bond without a preceding atom");
                    }
                    if self.pending.is_some() {
                        return err(at, "consecutive bond symbols");
                    }
                    let order = match c {
                        b'-' => 1,
                        b'=' => 2,
                        _ => 3,
                    };
                    self.pending = Some((order, at));
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return err(at, "dangling bond before '.'");
                    }
                    if self.prev.is_none() {
                        return err(at, "empty fragment before '.'");
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => self.bracket_atom()?,
                b'A'..=b'Z' => self.organic_atom()?,
                b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                    return err(at, "aromatic (lowercase) atoms are not supported")
                }
                b'/' | b'\\' | b'@' => return err(at, "stereochemistry is not supported"),
                b':' => return err(at, "aromatic bonds are not supported"),
                b'$' => return err(at, "quadruple bonds are not supported"),
                b'*' => return err(at, "wildcard atoms are not supported"),
                b']' => return err(at, "unbalanced ']'"),
                _ => return err(at, format!("unexpected character '{}'", c as char)),
            }
        }

        let end = self.src.len();
        if let Some((_, at)) = self.pending {
            return err(at, "dangling bond at end of input");
        }
        if let Some(&(_, at)) = self.branches.last() {
            return err(at, "unbalanced '('");
        }
        if let Some((n, ring)) = self.rings.iter().next() {
            return err(ring.offset, format!("ring bond {n} never closed"));
        }
        if self.prev.is_none() {
            return err(end, "empty fragment at end of input");
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: (&'static str, i32, u32)) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(p) = self.prev {
            let order = self.pending.take().map_or(1, |(o, _)| o);
            self.bonds.push(Bond {
                a: p,
                b: idx,
                order,
            });
        }
        self.prev = Some(idx);
        self.branch_empty = false;
    }

    fn organic_atom(&mut self) -> Result<(), SmilesError> {
        let at = self.pos;
        let single = std::str::from_utf8(&self.src[at..at + 1]).unwrap();
        let two = self
            .src
            .get(at..at + 2)
            .and_then(|s| std::str::from_utf8(s).ok());
        let symbol = match two {
            Some(s @ ("Cl" | "Br")) => s,
            _ if ORGANIC_SUBSET.contains(&single) => single,
            _ => {
                let shown = two.filter(|t| element(t).is_some()).unwrap_or(single);
                return if element(shown).is_some() {
                    err(at, format!("element '{shown}' must be written in brackets"))
                } else {
                    err(at, format!("unknown element symbol '{shown}'"))
                };
            }
        };
        self.pos += symbol.len();
        self.add_atom((element(symbol).unwrap(), 0, 0));
        Ok(())
    }

    fn bracket_atom(&mut self) -> Result<(), SmilesError> {
        let open = self.pos;
        let Some(close_rel) = self.src[open..].iter().position(|&b| b == b']') else {
            return err(open, "unclosed '['");
        };
        let close = open + close_rel;
        let body = &self.src[open + 1..close];
        let mut i = 0;
        let off = |i: usize| open + 1 + i;

        match body.first() {
            None => return err(open, "empty bracket atom"),
            Some(b) if b.is_ascii_digit() => return err(off(0), "isotopes are not supported"),
            Some(b) if b.is_ascii_lowercase() => {
                return err(off(0), "aromatic (lowercase) atoms are not supported")
            }
            Some(b) if !b.is_ascii_uppercase() => return err(off(0), "expected an element symbol"),
            _ => {}
        }
        let symbol_len = if body.get(1).is_some_and(u8::is_ascii_lowercase) {
            2
        } else {
            1
        };
        let symbol = std::str::from_utf8(&body[..symbol_len]).unwrap();
        let Some(elem) = element(symbol) else {
            return err(off(0), format!("unknown element symbol '{symbol}'"));
        };
        i += symbol_len;

        if body.get(i) == Some(&b'@') {
            return err(off(i), "stereochemistry is not supported");
        }

        let mut h = 0u32;
        if body.get(i) == Some(&b'H') {
            i += 1;
            h = 1;
            let start = i;
            while body.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            if i > start {
                h = std::str::from_utf8(&body[start..i])
                    .unwrap()
                    .parse()
                    .unwrap();
            }
        }

        let mut charge = 0i32;
        if let Some(&sign @ (b'+' | b'-')) = body.get(i) {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let start = i;
            while body.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            if i > start {
                let mag: i32 = std::str::from_utf8(&body[start..i])
                    .unwrap()
                    .parse()
                    .unwrap();
                charge = unit * mag;
            } else {
                charge = unit;
                while body.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }

        match body.get(i) {
            None => {}
            Some(b':') => return err(off(i), "atom classes are not supported"),
            Some(b'@') => return err(off(i), "stereochemistry is not supported"),
            Some(&c) => {
                return err(
                    off(i),
                    format!("unexpected '{}' in bracket atom", c as char),
                )
            }
        }

        self.pos = close + 1;
        self.add_atom((elem, charge, h));
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let at = self.pos;
        let number = if self.src[at] == b'%' {
            let digits = self.src.get(at + 1..at + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0')
                }
                _ => return err(at, "'%' must be followed by two digits"),
            }
        } else {
            self.pos += 1;
            u32::from(self.src[at] - b'0')
        };
        let Some(here) = self.prev else {
            return err(at, "ring bond without a preceding atom");
        };
        let order = self.pending.take().map(|(o, _)| o);

        match self.rings.remove(&number) {
            None => {
                self.rings.insert(
                    number,
                    OpenRing {
                        atom: here,
                        order,
                        offset: at,
                    },
                );
            }
            Some(open) => {
                if open.atom == here {
                    return err(at, format!("ring bond {number} closes on its own atom"));
                }
                let order = match (open.order, order) {
                    (Some(a), Some(b)) if a != b => {
                        return err(at, format!("conflicting bond orders on ring bond {number}"))
                    }
                    (a, b) => a.or(b).unwrap_or(1),
                };
                let dup = self.bonds.iter().any(|b| {
                    (b.a == open.atom && b.b == here) || (b.a == here && b.b == open.atom)
                });
                if dup {
                    return err(
                        at,
                        format!("ring bond {number} duplicates an existing bond"),
                    );
                }
                self.bonds.push(Bond {
                    a: open.atom,
                    b: here,
                    order,
                });
            }
        }
        Ok(())
    }
}
