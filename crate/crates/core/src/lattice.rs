//! Lattice geometry and the sparse occupancy configuration.
//!
//! Occupied sites are stored twice: as a dense array (so that a uniformly
//! random particle can be drawn in O(1)) and in a hash map from site to array
//! slot. Sites are packed into a `u128` with `128 / d` bits per coordinate
//! (at most 32), which makes a neighbour lookup a single add or subtract.

use std::collections::HashMap;
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};

use crate::error::{Error, Result};
use crate::rng::mix64;

/// Largest supported dimension (8 bits per packed coordinate).
pub const MAX_DIM: usize = 16;

/// A point of the integer lattice `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(Vec<i32>);

impl LatticePoint {
    pub fn new(coords: Vec<i32>) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(d: usize) -> Self {
        LatticePoint(vec![0; d])
    }

    /// `sign * e_axis`.
    pub fn unit(d: usize, axis: usize, sign: i32) -> Self {
        let mut c = vec![0; d];
        c[axis] = sign;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64).abs()).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// True if `self - other` is a unit vector.
    pub fn is_neighbor_of(&self, other: &LatticePoint) -> bool {
        self.dim() == other.dim()
            && self.0.iter().zip(&other.0).map(|(a, b)| (*a as i64 - *b as i64).abs()).sum::<i64>() == 1
    }

    pub fn offset(&self, axis: usize, delta: i32) -> LatticePoint {
        let mut c = self.0.clone();
        c[axis] += delta;
        LatticePoint(c)
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The 2d nearest neighbours of `x`, ordered `+e_1, -e_1, +e_2, -e_2, ...`.
pub fn neighbors(x: &LatticePoint, d: usize) -> Result<Vec<LatticePoint>> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
    }
    Ok((0..2 * d).map(|dir| x.offset(dir / 2, direction_sign(dir))).collect())
}

#[inline]
pub(crate) fn direction_sign(dir: usize) -> i32 {
    if dir.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Packed lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(u128);

/// Hasher for packed sites: both halves of the key go through the SplitMix64
/// finaliser so that sites along a line do not land in neighbouring buckets.
#[derive(Default, Clone, Copy)]
pub struct SiteHasher(u64);

impl Hasher for SiteHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write_u128(&mut self, v: u128) {
        self.0 = mix64((v as u64) ^ mix64((v >> 64) as u64 ^ self.0));
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.0 = mix64(self.0 ^ u64::from_le_bytes(buf));
        }
    }
}

pub type SiteMap<V> = HashMap<Site, V, BuildHasherDefault<SiteHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SiteCodec {
    d: usize,
    bits: u32,
}

impl SiteCodec {
    pub(crate) fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        if d > MAX_DIM {
            return Err(Error::OutOfRange { d });
        }
        Ok(SiteCodec { d, bits: (128 / d as u32).min(32) })
    }

    #[inline]
    fn mask(&self) -> u128 {
        (1u128 << self.bits) - 1
    }

    #[inline]
    fn bias(&self) -> i64 {
        1i64 << (self.bits - 1)
    }

    pub(crate) fn encode(&self, x: &LatticePoint) -> Result<Site> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.dim() });
        }
        let mut key = 0u128;
        for (axis, &c) in x.coords().iter().enumerate() {
            let field = c as i64 + self.bias();
            if field < 1 || field as u128 >= self.mask() {
                return Err(Error::OutOfRange { d: self.d });
            }
            key |= (field as u128) << (axis as u32 * self.bits);
        }
        Ok(Site(key))
    }

    pub(crate) fn decode(&self, s: Site) -> LatticePoint {
        let coords = (0..self.d)
            .map(|axis| (((s.0 >> (axis as u32 * self.bits)) & self.mask()) as i64 - self.bias()) as i32)
            .collect();
        LatticePoint(coords)
    }

    /// The neighbour of `s` in direction `dir` (`+e_{dir/2}` for even `dir`).
    #[inline]
    pub(crate) fn step(&self, s: Site, dir: usize) -> Result<Site> {
        let shift = (dir / 2) as u32 * self.bits;
        let field = (s.0 >> shift) & self.mask();
        let unit = 1u128 << shift;
        if dir.is_multiple_of(2) {
            if field + 1 >= self.mask() {
                return Err(Error::OutOfRange { d: self.d });
            }
            Ok(Site(s.0 + unit))
        } else {
            if field <= 1 {
                return Err(Error::OutOfRange { d: self.d });
            }
            Ok(Site(s.0 - unit))
        }
    }

    /// Neighbour lookup without range checks. Valid sites keep every field in
    /// `1..mask`, so neighbours of a valid site never carry between fields.
    #[inline]
    fn step_unchecked(&self, s: Site, dir: usize) -> Site {
        let unit = 1u128 << ((dir / 2) as u32 * self.bits);
        if dir.is_multiple_of(2) {
            Site(s.0.wrapping_add(unit))
        } else {
            Site(s.0.wrapping_sub(unit))
        }
    }

    /// Direction index of `to - from`, if they are neighbours.
    fn direction(&self, from: &LatticePoint, to: &LatticePoint) -> Option<usize> {
        if !from.is_neighbor_of(to) {
            return None;
        }
        let (axis, diff) = from
            .coords()
            .iter()
            .zip(to.coords())
            .enumerate()
            .find_map(|(i, (a, b))| (a != b).then_some((i, b - a)))?;
        Some(2 * axis + usize::from(diff < 0))
    }
}

/// One elementary transition of the set-valued process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Death(LatticePoint),
    Birth { from: LatticePoint, to: LatticePoint },
    Jump { from: LatticePoint, to: LatticePoint },
}

/// What a move did to the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveEffect {
    Removed,
    Added,
    /// Birth onto an occupied site.
    Suppressed,
    Moved,
    /// Jump onto an occupied site: exchanging two occupied sites is the identity.
    Swapped,
}

/// Finite set of occupied sites with the ordered neighbour-pair count
/// `sum_{x != y occupied} 1{x - y is a unit vector}`.
#[derive(Debug, Clone)]
pub struct Configuration {
    codec: SiteCodec,
    sites: Vec<Site>,
    slot: SiteMap<u32>,
    pairs: u64,
}

impl Configuration {
    pub fn empty(d: usize) -> Result<Self> {
        Ok(Configuration { codec: SiteCodec::new(d)?, sites: Vec::new(), slot: SiteMap::default(), pairs: 0 })
    }

    /// The configuration `delta_0`: a single particle at the origin.
    pub fn single_origin(d: usize) -> Result<Self> {
        let mut cfg = Self::empty(d)?;
        cfg.insert(&LatticePoint::origin(d))?;
        Ok(cfg)
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a LatticePoint>>(d: usize, points: I) -> Result<Self> {
        let mut cfg = Self::empty(d)?;
        for p in points {
            cfg.insert(p)?;
        }
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.codec.d
    }

    pub fn count(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Ordered occupied neighbour pairs (twice the number of adjacent pairs).
    pub fn pair_count_ordered(&self) -> u64 {
        self.pairs
    }

    pub fn contains(&self, x: &LatticePoint) -> bool {
        self.codec.encode(x).map(|s| self.slot.contains_key(&s)).unwrap_or(false)
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.sites.iter().map(|&s| self.codec.decode(s))
    }

    /// Location of the particle in slot `i`.
    pub fn point_at(&self, i: usize) -> LatticePoint {
        self.codec.decode(self.sites[i])
    }

    /// Adds `x` if empty; returns whether the set changed.
    pub fn insert(&mut self, x: &LatticePoint) -> Result<bool> {
        let s = self.codec.encode(x)?;
        Ok(self.insert_site(s))
    }

    #[inline]
    fn occupied_neighbors(&self, s: Site) -> u64 {
        (0..2 * self.codec.d).filter(|&dir| self.slot.contains_key(&self.codec.step_unchecked(s, dir))).count() as u64
    }

    #[inline]
    fn insert_site(&mut self, s: Site) -> bool {
        if self.slot.contains_key(&s) {
            return false;
        }
        self.pairs += 2 * self.occupied_neighbors(s);
        self.slot.insert(s, self.sites.len() as u32);
        self.sites.push(s);
        true
    }

    #[inline]
    fn remove_slot(&mut self, i: usize) {
        let s = self.sites.swap_remove(i);
        self.slot.remove(&s);
        if i < self.sites.len() {
            self.slot.insert(self.sites[i], i as u32);
        }
        self.pairs -= 2 * self.occupied_neighbors(s);
    }

    /// Removes the particle in slot `i`.
    #[inline]
    pub fn kill(&mut self, i: usize) {
        self.remove_slot(i);
    }

    /// Birth from the particle in slot `i` onto its neighbour in direction `dir`.
    #[inline]
    pub fn birth_from(&mut self, i: usize, dir: usize) -> Result<MoveEffect> {
        let target = self.codec.step(self.sites[i], dir)?;
        Ok(if self.insert_site(target) { MoveEffect::Added } else { MoveEffect::Suppressed })
    }

    /// Stirring move of the particle in slot `i` across the edge in direction `dir`.
    #[inline]
    pub fn jump_from(&mut self, i: usize, dir: usize) -> Result<MoveEffect> {
        let from = self.sites[i];
        let target = self.codec.step(from, dir)?;
        if self.slot.contains_key(&target) {
            return Ok(MoveEffect::Swapped);
        }
        self.pairs -= 2 * self.occupied_neighbors(from);
        self.slot.remove(&from);
        self.sites[i] = target;
        // `from` is already gone, so it is not counted as a neighbour of `target`.
        self.pairs += 2 * self.occupied_neighbors(target);
        self.slot.insert(target, i as u32);
        Ok(MoveEffect::Moved)
    }

    fn slot_of(&self, x: &LatticePoint) -> Result<usize> {
        let s = self.codec.encode(x)?;
        self.slot.get(&s).map(|&i| i as usize).ok_or_else(|| Error::NotOccupied(x.to_string()))
    }

    /// Applies a move given in lattice coordinates.
    pub fn apply_move(&mut self, mv: &Move) -> Result<MoveEffect> {
        match mv {
            Move::Death(x) => {
                let i = self.slot_of(x)?;
                self.kill(i);
                Ok(MoveEffect::Removed)
            }
            Move::Birth { from, to } | Move::Jump { from, to } => {
                let i = self.slot_of(from)?;
                let dir = self
                    .codec
                    .direction(from, to)
                    .ok_or_else(|| Error::NotNeighbor { from: from.to_string(), to: to.to_string() })?;
                if matches!(mv, Move::Birth { .. }) {
                    self.birth_from(i, dir)
                } else {
                    self.jump_from(i, dir)
                }
            }
        }
    }

    /// Ordered neighbour pairs counted from scratch.
    pub fn recount_pairs(&self) -> u64 {
        self.sites.iter().map(|&s| self.occupied_neighbors(s)).sum()
    }
}
