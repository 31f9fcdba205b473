//! Per-class material compositions.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("ids for {kind} must be dense 1..={count}, found {id}")]
    SparseIds { kind: &'static str, count: usize, id: u32 },
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("unknown material id {0}")]
    UnknownMaterial(u32),
    #[error("unknown class id {0}")]
    UnknownClass(u32),
    #[error("class {0} already has a composition")]
    DuplicateClass(u32),
    #[error("class {0} has no composition")]
    MissingComposition(u32),
    #[error("material {material} listed twice for class {class}")]
    DuplicateMaterial { class: u32, material: u32 },
    #[error("mass {mass} kg for class {class}, material {material} must be finite and >= 0")]
    InvalidMass { class: u32, material: u32, mass: f64 },
    #[error("positional composition for class {class} has {got} entries, expected {expected}")]
    WrongArity { class: u32, got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaterialId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub id: MaterialId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectClass {
    pub id: ClassId,
    pub name: String,
}

/// Masses in kg, one entry per monitored material, in material-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn zeros(psi: usize) -> Self {
        MassVector(vec![0.0; psi])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> MassVector {
        MassVector(self.0.iter().map(|m| m * alpha).collect())
    }
}

/// How a class composition is supplied.
#[derive(Debug, Clone, PartialEq)]
pub enum MassInput {
    /// One mass per material, in material-id order; must be exactly psi long.
    Positional(Vec<f64>),
    /// Sparse `(material, mass)` pairs; materials not listed get 0 kg.
    Pairs(Vec<(MaterialId, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionRegistry {
    materials: Vec<Material>,
    classes: Vec<ObjectClass>,
    compositions: BTreeMap<ClassId, MassVector>,
}

fn check_dense<'a>(
    kind: &'static str,
    items: impl Iterator<Item = (u32, &'a str)>,
    count: usize,
) -> Result<(), CompositionError> {
    let mut names = HashSet::new();
    for (pos, (id, name)) in items.enumerate() {
        if id as usize != pos + 1 {
            return Err(CompositionError::SparseIds { kind, count, id });
        }
        if !names.insert(name) {
            return Err(CompositionError::DuplicateName {
                kind,
                name: name.to_string(),
            });
        }
    }
    Ok(())
}

impl CompositionRegistry {
    /// Materials and classes may arrive in any order but their ids must be
    /// exactly `1..=n`.
    pub fn new(
        mut materials: Vec<Material>,
        mut classes: Vec<ObjectClass>,
    ) -> Result<Self, CompositionError> {
        materials.sort_by_key(|m| m.id);
        classes.sort_by_key(|c| c.id);
        check_dense(
            "materials",
            materials.iter().map(|m| (m.id.0, m.name.as_str())),
            materials.len(),
        )?;
        check_dense(
            "classes",
            classes.iter().map(|c| (c.id.0, c.name.as_str())),
            classes.len(),
        )?;
        Ok(CompositionRegistry {
            materials,
            classes,
            compositions: BTreeMap::new(),
        })
    }

    pub fn psi(&self) -> usize {
        self.materials.len()
    }

    pub fn q(&self) -> usize {
        self.classes.len()
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn classes(&self) -> &[ObjectClass] {
        &self.classes
    }

    pub fn material_by_name(&self, name: &str) -> Option<MaterialId> {
        self.materials.iter().find(|m| m.name == name).map(|m| m.id)
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn has_class(&self, c: ClassId) -> bool {
        c.0 >= 1 && c.0 as usize <= self.classes.len()
    }

    pub fn has_material(&self, j: MaterialId) -> bool {
        j.0 >= 1 && j.0 as usize <= self.materials.len()
    }

    pub fn register_class(&mut self, c: ClassId, input: MassInput) -> Result<(), CompositionError> {
        if !self.has_class(c) {
            return Err(CompositionError::UnknownClass(c.0));
        }
        if self.compositions.contains_key(&c) {
            return Err(CompositionError::DuplicateClass(c.0));
        }
        let psi = self.psi();
        let check = |material: u32, mass: f64| {
            if mass.is_finite() && mass >= 0.0 {
                Ok(())
            } else {
                Err(CompositionError::InvalidMass { class: c.0, material, mass })
            }
        };
        let masses = match input {
            MassInput::Positional(masses) => {
                if masses.len() != psi {
                    return Err(CompositionError::WrongArity {
                        class: c.0,
                        got: masses.len(),
                        expected: psi,
                    });
                }
                for (j, &m) in masses.iter().enumerate() {
                    check(j as u32 + 1, m)?;
                }
                masses
            }
            MassInput::Pairs(pairs) => {
                let mut aligned = vec![0.0; psi];
                let mut seen = vec![false; psi];
                for (j, m) in pairs {
                    if !self.has_material(j) {
                        return Err(CompositionError::UnknownMaterial(j.0));
                    }
                    check(j.0, m)?;
                    let slot = j.0 as usize - 1;
                    if std::mem::replace(&mut seen[slot], true) {
                        return Err(CompositionError::DuplicateMaterial { class: c.0, material: j.0 });
                    }
                    aligned[slot] = m;
                }
                aligned
            }
        };
        self.compositions.insert(c, MassVector(masses));
        Ok(())
    }

    /// Errors if some declared class never received a composition.
    pub fn ensure_complete(&self) -> Result<(), CompositionError> {
        match self.classes.iter().find(|c| !self.compositions.contains_key(&c.id)) {
            Some(c) => Err(CompositionError::MissingComposition(c.id.0)),
            None => Ok(()),
        }
    }

    pub fn composition(&self, c: ClassId) -> Option<&MassVector> {
        self.compositions.get(&c)
    }

    pub fn class_mass(&self, c: ClassId, j: MaterialId) -> Result<f64, CompositionError> {
        let m = self
            .compositions
            .get(&c)
            .ok_or(CompositionError::UnknownClass(c.0))?;
        if !self.has_material(j) {
            return Err(CompositionError::UnknownMaterial(j.0));
        }
        Ok(m.0[j.0 as usize - 1])
    }

    /// Same registry with every composition multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> CompositionRegistry {
        CompositionRegistry {
            materials: self.materials.clone(),
            classes: self.classes.clone(),
            compositions: self
                .compositions
                .iter()
                .map(|(c, m)| (*c, m.scaled(alpha)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn materials() -> Vec<Material> {
        ["plastic", "glass", "gold"]
            .iter()
            .enumerate()
            .map(|(i, n)| Material { id: MaterialId(i as u32 + 1), name: n.to_string() })
            .collect()
    }

    fn classes() -> Vec<ObjectClass> {
        ["glucose meter", "inhaler"]
            .iter()
            .enumerate()
            .map(|(i, n)| ObjectClass { id: ClassId(i as u32 + 1), name: n.to_string() })
            .collect()
    }

    fn study_registry() -> CompositionRegistry {
        let mut reg = CompositionRegistry::new(materials(), classes()).unwrap();
        reg.register_class(ClassId(1), MassInput::Positional(vec![1.0, 2.0, 3.0])).unwrap();
        reg.register_class(ClassId(2), MassInput::Positional(vec![1.0, 2.0, 3.0])).unwrap();
        reg
    }

    #[test]
    fn study_masses() {
        let reg = study_registry();
        assert_eq!(reg.composition(ClassId(1)).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(reg.class_mass(ClassId(1), MaterialId(3)).unwrap(), 3.0);
        assert_eq!(reg.class_mass(ClassId(2), MaterialId(2)).unwrap(), 2.0);
        reg.ensure_complete().unwrap();
    }

    #[test]
    fn pairs_are_zero_padded() {
        let mut reg = CompositionRegistry::new(materials(), classes()).unwrap();
        reg.register_class(ClassId(1), MassInput::Pairs(vec![(MaterialId(1), 1.0)])).unwrap();
        assert_eq!(reg.composition(ClassId(1)).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(reg.class_mass(ClassId(1), MaterialId(2)).unwrap(), 0.0);
        assert_eq!(reg.ensure_complete(), Err(CompositionError::MissingComposition(2)));
    }

    #[test]
    fn registration_errors() {
        let mut reg = CompositionRegistry::new(materials(), classes()).unwrap();
        assert!(matches!(
            reg.register_class(ClassId(1), MassInput::Positional(vec![-1.0, 0.0, 0.0])),
            Err(CompositionError::InvalidMass { .. })
        ));
        assert!(matches!(
            reg.register_class(ClassId(1), MassInput::Positional(vec![1.0, 2.0])),
            Err(CompositionError::WrongArity { got: 2, expected: 3, .. })
        ));
        assert_eq!(
            reg.register_class(ClassId(1), MassInput::Pairs(vec![(MaterialId(4), 1.0)])),
            Err(CompositionError::UnknownMaterial(4))
        );
        assert_eq!(
            reg.register_class(ClassId(9), MassInput::Pairs(vec![])),
            Err(CompositionError::UnknownClass(9))
        );
        assert!(reg
            .register_class(ClassId(1), MassInput::Pairs(vec![(MaterialId(1), 1.0), (MaterialId(1), 2.0)]))
            .is_err());
        assert!(reg.register_class(ClassId(1), MassInput::Pairs(vec![(MaterialId(2), f64::NAN)])).is_err());
        reg.register_class(ClassId(1), MassInput::Pairs(vec![])).unwrap();
        assert_eq!(
            reg.register_class(ClassId(1), MassInput::Pairs(vec![])),
            Err(CompositionError::DuplicateClass(1))
        );
        assert!(reg.class_mass(ClassId(1), MaterialId(0)).is_err());
        assert!(reg.class_mass(ClassId(2), MaterialId(1)).is_err());
    }

    #[test]
    fn ids_must_be_dense_and_names_unique() {
        let mut m = materials();
        m[2].id = MaterialId(5);
        assert!(matches!(
            CompositionRegistry::new(m, classes()),
            Err(CompositionError::SparseIds { .. })
        ));
        let mut c = classes();
        c[1].name = c[0].name.clone();
        assert!(matches!(
            CompositionRegistry::new(materials(), c),
            Err(CompositionError::DuplicateName { .. })
        ));
        let mut shuffled = materials();
        shuffled.reverse();
        let reg = CompositionRegistry::new(shuffled, classes()).unwrap();
        assert_eq!(reg.material_by_name("plastic"), Some(MaterialId(1)));
    }
}
