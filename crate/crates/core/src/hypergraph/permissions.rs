use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use serde::{Deserialize, Serialize};

/// Permissions used when a policy does not declare its own universe.
pub const DEFAULT_PERMISSIONS: [&str; 8] = [
    "Read",
    "Write",
    "Execute",
    "List",
    "Delete",
    "PassRole",
    "AssumeRole",
    "RunInstances",
];

/// Upper bound on the universe size; sets are stored as a single `u64` mask.
pub const MAX_PERMISSIONS: usize = 64;

/// Index of a permission within a [`PermissionUniverse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permission(pub u8);

/// Subset of a fixed permission universe, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PermissionSet(u64);

impl PermissionSet {
    pub const fn empty() -> Self {
        PermissionSet(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        PermissionSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn single(p: Permission) -> Self {
        PermissionSet(1u64 << p.0)
    }

    pub fn insert(&mut self, p: Permission) {
        self.0 |= 1u64 << p.0;
    }

    pub fn remove(&mut self, p: Permission) {
        self.0 &= !(1u64 << p.0);
    }

    #[inline]
    pub fn contains(self, p: Permission) -> bool {
        self.0 & (1u64 << p.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: PermissionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: PermissionSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Permission> {
        (0..64u8).filter(move |i| self.0 & (1u64 << i) != 0).map(Permission)
    }
}

impl BitAnd for PermissionSet {
    type Output = PermissionSet;
    fn bitand(self, rhs: Self) -> Self {
        PermissionSet(self.0 & rhs.0)
    }
}

impl BitOr for PermissionSet {
    type Output = PermissionSet;
    fn bitor(self, rhs: Self) -> Self {
        PermissionSet(self.0 | rhs.0)
    }
}

impl Sub for PermissionSet {
    type Output = PermissionSet;
    fn sub(self, rhs: Self) -> Self {
        PermissionSet(self.0 & !rhs.0)
    }
}

impl FromIterator<Permission> for PermissionSet {
    fn from_iter<T: IntoIterator<Item = Permission>>(iter: T) -> Self {
        let mut set = PermissionSet::empty();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl fmt::Debug for PermissionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

/// The ordered, policy-wide list of permission names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PermissionUniverse {
    names: Vec<String>,
}

impl Default for PermissionUniverse {
    fn default() -> Self {
        PermissionUniverse {
            names: DEFAULT_PERMISSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PermissionUniverse {
    /// Builds a universe from distinct, non-empty names. Returns `None` when the
    /// list is empty, too large, or contains duplicates.
    pub fn new<I, S>(names: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() || names.len() > MAX_PERMISSIONS {
            return None;
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || names[..i].contains(n) {
                return None;
            }
        }
        Some(PermissionUniverse { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<Permission> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Permission(i as u8))
    }

    pub fn name(&self, p: Permission) -> &str {
        &self.names[p.0 as usize]
    }

    pub fn full(&self) -> PermissionSet {
        if self.names.len() == 64 {
            PermissionSet(u64::MAX)
        } else {
            PermissionSet((1u64 << self.names.len()) - 1)
        }
    }

    pub fn contains_set(&self, set: PermissionSet) -> bool {
        set.is_subset(self.full())
    }

    /// Resolves a list of names into a set; the first unknown name is returned as the error.
    pub fn set_of<'a, I>(&self, names: I) -> Result<PermissionSet, String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut set = PermissionSet::empty();
        for n in names {
            match self.lookup(n) {
                Some(p) => set.insert(p),
                None => return Err(n.to_string()),
            }
        }
        Ok(set)
    }

    pub fn names_of(&self, set: PermissionSet) -> Vec<String> {
        set.iter().map(|p| self.name(p).to_string()).collect()
    }

    pub fn render(&self, set: PermissionSet) -> String {
        format!("{{{}}}", self.names_of(set).join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra_stays_inside_universe() {
        let u = PermissionUniverse::default();
        let rw = u.set_of(["Read", "Write"]).unwrap();
        let r = u.set_of(["Read"]).unwrap();
        assert_eq!(rw & r, r);
        assert_eq!(rw - r, u.set_of(["Write"]).unwrap());
        assert!(u.contains_set(rw | u.full()));
        assert_eq!(u.full().len(), 8);
    }

    #[test]
    fn universe_rejects_duplicates_and_empty() {
        assert!(PermissionUniverse::new(["Read", "Read"]).is_none());
        assert!(PermissionUniverse::new(Vec::<String>::new()).is_none());
        assert!(PermissionUniverse::new([""]).is_none());
        let big: Vec<String> = (0..65).map(|i| format!("p{i}")).collect();
        assert!(PermissionUniverse::new(big).is_none());
    }

    #[test]
    fn unknown_name_is_reported() {
        let u = PermissionUniverse::default();
        assert_eq!(u.set_of(["Read", "Fly"]), Err("Fly".to_string()));
    }
}
