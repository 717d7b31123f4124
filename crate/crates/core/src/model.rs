//! Lattice geometry, spin configurations, coupling kernels and boundary
//! conditions shared by every other module.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// A point of the integer lattice `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn offset(&self, by: &[i64]) -> Site {
        debug_assert_eq!(by.len(), self.0.len());
        Site(self.0.iter().zip(by).map(|(a, b)| a + b).collect())
    }

    pub fn coord_sum(&self) -> i64 {
        self.0.iter().sum()
    }
}

impl From<[i64; 2]> for Site {
    fn from(c: [i64; 2]) -> Self {
        Site(c.to_vec())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, c) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Distance used for the closures `Cl_m(Λ) = {i : dist(i, Λ) ≤ m}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Norm {
    #[default]
    Sup,
    Euclidean,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sup" | "max" | "inf" => Ok(Norm::Sup),
            "euclidean" | "l2" => Ok(Norm::Euclidean),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

/// A finite rectangular box `Λ` of the lattice.
///
/// Sites are enumerated in lexicographic order of their coordinates, the
/// last coordinate varying fastest. That order defines every linear index
/// used in the crate, including the canonical configuration code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    origin: Site,
    sides: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl LatticeBox {
    /// Box with the given side lengths anchored at the origin.
    pub fn new(sides: &[usize]) -> Result<Self> {
        Self::with_origin(Site::origin(sides.len()), sides)
    }

    pub fn with_origin(origin: Site, sides: &[usize]) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if origin.dim() != sides.len() {
            return Err(Error::DimensionMismatch {
                expected: sides.len(),
                got: origin.dim(),
            });
        }
        if sides.contains(&0) {
            return Err(Error::Geometry("box sides must be positive".into()));
        }
        let mut strides = vec![1usize; sides.len()];
        let mut len = 1usize;
        for d in (0..sides.len()).rev() {
            strides[d] = len;
            len = len
                .checked_mul(sides[d])
                .ok_or_else(|| Error::Geometry("box is too large".into()))?;
        }
        Ok(LatticeBox {
            origin,
            sides: sides.to_vec(),
            strides,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn origin(&self) -> &Site {
        &self.origin
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of sites `|Λ|`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.index_of(site).is_some()
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if site.dim() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for d in 0..self.dim() {
            let rel = site.0[d] - self.origin.0[d];
            if rel < 0 || rel >= self.sides[d] as i64 {
                return None;
            }
            idx += rel as usize * self.strides[d];
        }
        Some(idx)
    }

    pub fn site(&self, index: usize) -> Site {
        assert!(index < self.len, "site index {index} out of range");
        let mut rem = index;
        let coords = (0..self.dim())
            .map(|d| {
                let q = rem / self.strides[d];
                rem %= self.strides[d];
                self.origin.0[d] + q as i64
            })
            .collect();
        Site(coords)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len).map(move |n| self.site(n))
    }

    /// Wraps `site` onto the box as a torus and returns its linear index.
    pub fn wrap_index(&self, site: &Site) -> usize {
        let mut idx = 0usize;
        for d in 0..self.dim() {
            let rel = (site.0[d] - self.origin.0[d]).rem_euclid(self.sides[d] as i64);
            idx += rel as usize * self.strides[d];
        }
        idx
    }

    /// Distance from `site` to the box (zero inside).
    pub fn dist(&self, site: &Site, norm: Norm) -> f64 {
        let gaps = (0..self.dim()).map(|d| {
            let lo = self.origin.0[d];
            let hi = lo + self.sides[d] as i64 - 1;
            let c = site.0[d];
            (lo - c).max(c - hi).max(0) as f64
        });
        match norm {
            Norm::Sup => gaps.fold(0.0, f64::max),
            Norm::Euclidean => gaps.map(|g| g * g).sum::<f64>().sqrt(),
        }
    }

    /// The box enlarged by `m` sites on every side.
    pub fn padded(&self, m: usize) -> LatticeBox {
        let origin = Site(self.origin.0.iter().map(|c| c - m as i64).collect());
        let sides: Vec<usize> = self.sides.iter().map(|s| s + 2 * m).collect();
        LatticeBox::with_origin(origin, &sides).expect("padding a valid box")
    }

    /// `Cl_m(Λ)`, in lexicographic order.
    pub fn closure(&self, m: usize, norm: Norm) -> Vec<Site> {
        self.padded(m)
            .sites()
            .filter(|s| self.dist(s, norm) <= m as f64)
            .collect()
    }

    /// Partition into even and odd sublattices by parity of the coordinate sum.
    pub fn sublattices(&self) -> Result<(Vec<Site>, Vec<Site>)> {
        if self.dim() != 2 {
            return Err(Error::NotTwoDimensional(self.dim()));
        }
        Ok(self.sites().partition(|s| s.coord_sum().rem_euclid(2) == 0))
    }

    pub fn describe(&self) -> String {
        self.sides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x")
    }
}

/// A spin value in `{-1, +1}`. `Down < Up` matches the pointwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn value(self) -> i8 {
        match self {
            Spin::Down => -1,
            Spin::Up => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }

    pub fn from_value(v: i8) -> Option<Spin> {
        match v {
            -1 => Some(Spin::Down),
            1 => Some(Spin::Up),
            _ => None,
        }
    }

    pub fn from_bit(bit: bool) -> Spin {
        if bit {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Down => '-',
            Spin::Up => '+',
        }
    }
}

/// A ±1 assignment on every site of a box.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    region: LatticeBox,
    spins: Vec<Spin>,
}

impl SpinConfig {
    pub fn new(region: LatticeBox, spins: Vec<Spin>) -> Result<Self> {
        if spins.len() != region.len() {
            return Err(Error::Geometry(format!(
                "configuration has {} spins for a box of {} sites",
                spins.len(),
                region.len()
            )));
        }
        Ok(SpinConfig { region, spins })
    }

    pub fn uniform(region: LatticeBox, spin: Spin) -> Self {
        let spins = vec![spin; region.len()];
        SpinConfig { region, spins }
    }

    pub fn from_fn(region: LatticeBox, mut f: impl FnMut(&Site) -> Spin) -> Self {
        let spins = region.sites().map(|s| f(&s)).collect();
        SpinConfig { region, spins }
    }

    pub fn random<R: Rng + ?Sized>(region: LatticeBox, rng: &mut R) -> Self {
        let spins = (0..region.len()).map(|_| Spin::from_bit(rng.random())).collect();
        SpinConfig { region, spins }
    }

    /// Decodes the canonical index: bit `n` is `1` iff the `n`-th site in
    /// lexicographic order carries `+1`.
    pub fn from_index(region: LatticeBox, code: u64) -> Self {
        assert!(region.len() <= 64, "canonical code needs at most 64 sites");
        let spins = (0..region.len())
            .map(|n| Spin::from_bit((code >> n) & 1 == 1))
            .collect();
        SpinConfig { region, spins }
    }

    /// Canonical index; inverse of [`SpinConfig::from_index`].
    pub fn index(&self) -> u64 {
        assert!(self.spins.len() <= 64, "canonical code needs at most 64 sites");
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Spin::Up)
            .fold(0u64, |acc, (n, _)| acc | (1u64 << n))
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn get(&self, site: &Site) -> Option<Spin> {
        self.region.index_of(site).map(|n| self.spins[n])
    }

    pub fn at(&self, index: usize) -> Spin {
        self.spins[index]
    }

    pub fn set(&mut self, site: &Site, spin: Spin) -> Result<()> {
        let n = self
            .region
            .index_of(site)
            .ok_or_else(|| Error::SiteOutsideBox(site.clone()))?;
        self.spins[n] = spin;
        Ok(())
    }

    pub fn set_at(&mut self, index: usize, spin: Spin) {
        self.spins[index] = spin;
    }

    pub fn flipped(&self) -> SpinConfig {
        SpinConfig {
            region: self.region.clone(),
            spins: self.spins.iter().map(|s| s.flipped()).collect(),
        }
    }

    /// `self ≤ other` in the pointwise order.
    pub fn le(&self, other: &SpinConfig) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }

    /// Configuration translated by `shift` on the torus: `(θ σ)_i = σ_{i + shift}`.
    pub fn shifted_periodic(&self, shift: &[i64]) -> SpinConfig {
        SpinConfig::from_fn(self.region.clone(), |s| {
            self.spins[self.region.wrap_index(&s.offset(shift))]
        })
    }
}

/// Finite-range symmetric coupling weights `k(i)`.
///
/// Only non-zero weights are stored; `k(i) = 0` is implied elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingKernel {
    dim: usize,
    weights: BTreeMap<Vec<i64>, f64>,
}

impl CouplingKernel {
    /// Builds a kernel from explicit weights, rejecting asymmetric input.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (offset, w) in entries {
            if offset.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: offset.len(),
                });
            }
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("k({offset:?}) is not finite")));
            }
            if w != 0.0 {
                weights.insert(offset, w);
            }
        }
        for (offset, &w) in &weights {
            let neg: Vec<i64> = offset.iter().map(|c| -c).collect();
            let back = weights.get(&neg).copied().unwrap_or(0.0);
            if back != w {
                return Err(Error::AsymmetricKernel {
                    offset: offset.clone(),
                    forward: w,
                    backward: back,
                });
            }
        }
        Ok(CouplingKernel { dim, weights })
    }

    /// Builds a kernel from one representative of each `±i` pair; the mirror
    /// image is filled in. Conflicting duplicate entries are rejected.
    pub fn symmetric(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        let mut all: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (offset, w) in entries {
            if offset.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: offset.len(),
                });
            }
            let neg: Vec<i64> = offset.iter().map(|c| -c).collect();
            for key in [offset, neg] {
                if let Some(&prev) = all.get(&key) {
                    if prev != w {
                        return Err(Error::AsymmetricKernel {
                            offset: key,
                            forward: prev,
                            backward: w,
                        });
                    }
                }
                all.insert(key, w);
            }
        }
        Self::new(dim, all)
    }

    /// Two-dimensional range-1 kernel with `k(0)`, `k(±e1)`, `k(±e2)`.
    pub fn nearest_neighbor_2d(k0: f64, k1: f64, k2: f64) -> Self {
        Self::symmetric(2, [(vec![0, 0], k0), (vec![1, 0], k1), (vec![0, 1], k2)])
            .expect("nearest-neighbour kernel is symmetric")
    }

    pub fn zero(dim: usize) -> Self {
        CouplingKernel {
            dim,
            weights: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, offset: &[i64]) -> f64 {
        self.weights.get(offset).copied().unwrap_or(0.0)
    }

    /// Non-zero `(offset, weight)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.weights.iter().map(|(o, &w)| (o.as_slice(), w))
    }

    /// Range `R` in the sup-norm (0 for the zero kernel).
    pub fn range(&self) -> usize {
        self.weights
            .keys()
            .flat_map(|o| o.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// `B = Σ_j k(j)`.
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// `(k(0), k(e1), k(e2))` when the support lies in `{0, ±e1, ±e2}`.
    pub fn nearest_neighbor_weights(&self) -> Option<(f64, f64, f64)> {
        if self.dim != 2 {
            return None;
        }
        let allowed = |o: &[i64]| o[0].abs() + o[1].abs() <= 1;
        if !self.weights.keys().all(|o| allowed(o)) {
            return None;
        }
        Some((self.weight(&[0, 0]), self.weight(&[1, 0]), self.weight(&[0, 1])))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.values().all(|&w| w >= 0.0)
    }

    pub fn is_nonpositive(&self) -> bool {
        self.weights.values().all(|&w| w <= 0.0)
    }

    pub fn negated(&self) -> CouplingKernel {
        CouplingKernel {
            dim: self.dim,
            weights: self.weights.iter().map(|(o, w)| (o.clone(), -w)).collect(),
        }
    }

    /// Compact description, e.g. `k(0,0)=1;k(0,1)=1;...`.
    pub fn describe(&self) -> String {
        if self.weights.is_empty() {
            return "0".into();
        }
        self.weights
            .iter()
            .map(|(o, w)| {
                format!(
                    "k({})={w}",
                    o.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                )
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Model parameters: inverse temperature, external field and coupling kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaParams {
    pub beta: f64,
    pub h: f64,
    pub kernel: CouplingKernel,
    /// Metric for `Cl_m(Λ)` closures.
    pub norm: Norm,
}

impl PcaParams {
    pub fn new(beta: f64, h: f64, kernel: CouplingKernel) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter(format!("h must be finite, got {h}")));
        }
        Ok(PcaParams {
            beta,
            h,
            kernel,
            norm: Norm::Sup,
        })
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_kernel(&self, kernel: CouplingKernel) -> Self {
        PcaParams { kernel, ..self.clone() }
    }
}

/// The frozen exterior configuration `τ` of a fixed boundary condition.
#[derive(Clone, Debug, PartialEq)]
pub enum Tau {
    /// `τ ≡ s` on the whole exterior.
    Uniform(Spin),
    /// Explicit spins; only exterior sites are consulted.
    Sites(BTreeMap<Site, Spin>),
}

impl Tau {
    pub fn get(&self, site: &Site) -> Option<Spin> {
        match self {
            Tau::Uniform(s) => Some(*s),
            Tau::Sites(map) => map.get(site).copied(),
        }
    }

    /// Explicit `τ` on `Cl_width(Λ) \ Λ` (sup-norm frame), built from `f`.
    pub fn from_fn(region: &LatticeBox, width: usize, mut f: impl FnMut(&Site) -> Spin) -> Tau {
        let map = region
            .padded(width)
            .sites()
            .filter(|s| !region.contains(s))
            .map(|s| {
                let v = f(&s);
                (s, v)
            })
            .collect();
        Tau::Sites(map)
    }

    pub fn random<R: Rng + ?Sized>(region: &LatticeBox, width: usize, rng: &mut R) -> Tau {
        Tau::from_fn(region, width, |_| Spin::from_bit(rng.random()))
    }

    pub fn flipped(&self) -> Tau {
        match self {
            Tau::Uniform(s) => Tau::Uniform(s.flipped()),
            Tau::Sites(map) => Tau::Sites(map.iter().map(|(k, v)| (k.clone(), v.flipped())).collect()),
        }
    }
}

/// How a configuration on `Λ` is completed outside the box.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    Fixed(Tau),
}

impl BoundaryCondition {
    pub fn plus() -> Self {
        BoundaryCondition::Fixed(Tau::Uniform(Spin::Up))
    }

    pub fn minus() -> Self {
        BoundaryCondition::Fixed(Tau::Uniform(Spin::Down))
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryCondition::Periodic)
    }

    pub fn describe(&self) -> String {
        match self {
            BoundaryCondition::Periodic => "periodic".into(),
            BoundaryCondition::Fixed(Tau::Uniform(Spin::Up)) => "plus".into(),
            BoundaryCondition::Fixed(Tau::Uniform(Spin::Down)) => "minus".into(),
            BoundaryCondition::Fixed(Tau::Sites(_)) => "fixed".into(),
        }
    }
}

/// A configuration on `Λ` completed on the padded box `Cl_margin(Λ)`:
/// the lookup `j ↦ σ̃_j` with `σ̃ = σ_Λ τ_{Λ^c}` or its periodic continuation.
#[derive(Clone, Debug)]
pub struct ExtendedConfig {
    inner: LatticeBox,
    padded: LatticeBox,
    margin: usize,
    // 0 marks an exterior site that the boundary condition does not cover
    values: Vec<i8>,
}

impl ExtendedConfig {
    pub fn inner(&self) -> &LatticeBox {
        &self.inner
    }

    pub fn padded(&self) -> &LatticeBox {
        &self.padded
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn get(&self, site: &Site) -> Result<Spin> {
        let p = self
            .padded
            .index_of(site)
            .ok_or_else(|| Error::MissingBoundarySpin(site.clone()))?;
        Spin::from_value(self.values[p]).ok_or_else(|| Error::MissingBoundarySpin(site.clone()))
    }

    /// Raw spin values (`±1`, or `0` where no spin is defined) in padded order.
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// Padded linear index of the `n`-th site of `Λ`.
    pub fn padded_index_of_inner(&self, n: usize) -> usize {
        let mut rem = n;
        let mut idx = 0;
        for d in 0..self.inner.dim() {
            let q = rem / self.inner.strides()[d];
            rem %= self.inner.strides()[d];
            idx += (q + self.margin) * self.padded.strides()[d];
        }
        idx
    }

    /// `m_i = Σ_j k(i−j) σ̃_j + h` at any site whose kernel neighbourhood is
    /// covered, or the first missing exterior site.
    pub fn field(&self, site: &Site, params: &PcaParams) -> Result<f64> {
        let mut sum = params.h;
        for (o, w) in params.kernel.support() {
            sum += w * self.get(&site.offset(o))?.as_f64();
        }
        Ok(sum)
    }

    pub fn restrict(&self) -> SpinConfig {
        SpinConfig::from_fn(self.inner.clone(), |s| {
            self.get(s).expect("interior spins are always defined")
        })
    }
}

/// Completes `config` on `Cl_margin(Λ)` (sup-norm closure).
pub fn extend(config: &SpinConfig, bc: &BoundaryCondition, margin: usize) -> Result<ExtendedConfig> {
    extend_with_norm(config, bc, margin, Norm::Sup)
}

/// Completes `config` on `Cl_margin(Λ)` measured in `norm`; every site of
/// that closure must receive a spin.
pub fn extend_with_norm(
    config: &SpinConfig,
    bc: &BoundaryCondition,
    margin: usize,
    norm: Norm,
) -> Result<ExtendedConfig> {
    let ext = extend_available(config, bc, margin);
    for (p, site) in ext.padded.sites().enumerate() {
        if ext.values[p] == 0 && ext.inner.dist(&site, norm) <= margin as f64 {
            return Err(Error::MissingBoundarySpin(site));
        }
    }
    Ok(ext)
}

/// Completes `config` on the padded box wherever the boundary condition
/// provides a spin; uncovered sites fail on lookup.
pub fn extend_available(config: &SpinConfig, bc: &BoundaryCondition, margin: usize) -> ExtendedConfig {
    let inner = config.region().clone();
    let padded = inner.padded(margin);
    let values = padded
        .sites()
        .map(|site| match inner.index_of(&site) {
            Some(n) => config.at(n).value(),
            None => match bc {
                BoundaryCondition::Periodic => config.at(inner.wrap_index(&site)).value(),
                BoundaryCondition::Fixed(tau) => tau.get(&site).map_or(0, Spin::value),
            },
        })
        .collect();
    ExtendedConfig {
        inner,
        padded,
        margin,
        values,
    }
}

/// Kernel offsets translated to linear offsets of a padded layout, so the
/// local field at a padded index is a dot product over a short list.
#[derive(Clone, Debug)]
pub struct Stencil {
    taps: Vec<(isize, f64)>,
}

impl Stencil {
    pub fn new(kernel: &CouplingKernel, padded: &LatticeBox) -> Self {
        let taps = kernel
            .support()
            .map(|(o, w)| {
                let lin: isize = o
                    .iter()
                    .zip(padded.strides())
                    .map(|(c, s)| *c as isize * *s as isize)
                    .sum();
                (lin, w)
            })
            .collect();
        Stencil { taps }
    }

    /// `Σ_o k(o) σ̃_{p+o}` at padded index `p` (un-scaled, without `h`).
    #[inline]
    pub fn apply(&self, values: &[i8], p: usize) -> f64 {
        self.taps
            .iter()
            .map(|&(off, w)| w * values[(p as isize + off) as usize] as f64)
            .sum()
    }
}

/// Un-scaled local field `m_i = Σ_j k(i−j) σ̃_j + h` at `site`.
///
/// # Panics
///
/// If the kernel neighbourhood of `site` leaves the extended region or hits
/// an undefined exterior spin.
pub fn local_field(site: &Site, ext: &ExtendedConfig, params: &PcaParams) -> f64 {
    let sum: f64 = params
        .kernel
        .support()
        .map(|(o, w)| {
            // k is symmetric, so Σ_j k(i−j)σ̃_j = Σ_o k(o)σ̃_{i+o}
            let spin = ext
                .get(&site.offset(o))
                .unwrap_or_else(|e| panic!("local field at {site}: {e}"));
            w * spin.as_f64()
        })
        .sum();
    sum + params.h
}

/// Even / odd sublattices `(Λ_e, Λ_o)` of a planar box.
pub fn sublattices(region: &LatticeBox) -> Result<(Vec<Site>, Vec<Site>)> {
    region.sublattices()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> LatticeBox {
        LatticeBox::new(&[n, n]).unwrap()
    }

    fn nn_params(k0: f64, k1: f64, h: f64) -> PcaParams {
        PcaParams::new(1.0, h, CouplingKernel::nearest_neighbor_2d(k0, k1, k1)).unwrap()
    }

    #[test]
    fn periodic_wrap_reads_opposite_side() {
        let cfg = SpinConfig::uniform(square(2), Spin::Up);
        let ext = extend(&cfg, &BoundaryCondition::Periodic, 2).unwrap();
        assert_eq!(ext.get(&Site::from([2, 0])).unwrap(), Spin::Up);

        let mut cfg = SpinConfig::uniform(square(2), Spin::Up);
        cfg.set(&Site::from([0, 0]), Spin::Down).unwrap();
        let ext = extend(&cfg, &BoundaryCondition::Periodic, 1).unwrap();
        assert_eq!(ext.get(&Site::from([2, 0])).unwrap(), Spin::Down);
        assert_eq!(ext.get(&Site::from([-1, -1])).unwrap(), Spin::Up);
        assert_eq!(ext.get(&Site::from([2, 2])).unwrap(), Spin::Down);
    }

    #[test]
    fn fixed_boundary_reads_tau() {
        let region = LatticeBox::new(&[1]).unwrap();
        let cfg = SpinConfig::uniform(region, Spin::Up);
        let ext = extend(&cfg, &BoundaryCondition::minus(), 1).unwrap();
        assert_eq!(ext.get(&Site::new([1])).unwrap(), Spin::Down);
        assert_eq!(ext.get(&Site::new([0])).unwrap(), Spin::Up);
    }

    #[test]
    fn missing_boundary_spin_is_reported() {
        let region = square(2);
        let mut tau = BTreeMap::new();
        tau.insert(Site::from([-1, 0]), Spin::Up);
        let cfg = SpinConfig::uniform(region, Spin::Up);
        let err = extend(&cfg, &BoundaryCondition::Fixed(Tau::Sites(tau)), 1).unwrap_err();
        assert!(matches!(err, Error::MissingBoundarySpin(_)));
    }

    #[test]
    fn euclidean_closure_skips_corners() {
        let region = square(2);
        let cfg = SpinConfig::uniform(region.clone(), Spin::Up);
        let tau = Tau::Sites(
            region
                .closure(1, Norm::Euclidean)
                .into_iter()
                .filter(|s| !region.contains(s))
                .map(|s| (s, Spin::Down))
                .collect(),
        );
        let bc = BoundaryCondition::Fixed(tau);
        assert!(extend(&cfg, &bc, 1).is_err());
        let ext = extend_with_norm(&cfg, &bc, 1, Norm::Euclidean).unwrap();
        assert!(ext.get(&Site::from([-1, -1])).is_err());
        assert_eq!(ext.get(&Site::from([-1, 0])).unwrap(), Spin::Down);
        assert_eq!(region.closure(1, Norm::Euclidean).len(), 12);
        assert_eq!(region.closure(1, Norm::Sup).len(), 16);
    }

    #[test]
    fn interior_lookup_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = SpinConfig::random(square(3), &mut rng);
        for bc in [BoundaryCondition::Periodic, BoundaryCondition::plus()] {
            let ext = extend(&cfg, &bc, 2).unwrap();
            assert_eq!(ext.restrict(), cfg);
        }
    }

    #[test]
    fn local_field_examples() {
        let cfg = SpinConfig::uniform(square(3), Spin::Up);
        let ext = extend(&cfg, &BoundaryCondition::plus(), 1).unwrap();
        let centre = Site::from([1, 1]);
        assert_eq!(local_field(&centre, &ext, &nn_params(0.0, 1.0, 0.0)), 4.0);
        assert_eq!(local_field(&centre, &ext, &nn_params(0.0, 1.0, 0.5)), 4.5);
        let zero = PcaParams::new(1.0, 0.0, CouplingKernel::zero(2)).unwrap();
        assert_eq!(local_field(&centre, &ext, &zero), 0.0);
    }

    #[test]
    fn stencil_matches_local_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kernel = CouplingKernel::symmetric(
            2,
            [
                (vec![0, 0], 0.3),
                (vec![1, 0], -0.7),
                (vec![1, 1], 0.2),
                (vec![0, 2], 0.5),
            ],
        )
        .unwrap();
        let params = PcaParams::new(1.0, 0.1, kernel.clone()).unwrap();
        let cfg = SpinConfig::random(LatticeBox::new(&[3, 4]).unwrap(), &mut rng);
        let ext = extend(&cfg, &BoundaryCondition::Periodic, kernel.range()).unwrap();
        let stencil = Stencil::new(&kernel, ext.padded());
        for n in 0..cfg.len() {
            let p = ext.padded_index_of_inner(n);
            let fast = stencil.apply(ext.values(), p) + params.h;
            let slow = local_field(&cfg.region().site(n), &ext, &params);
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn sublattice_examples() {
        let (even, odd) = sublattices(&square(2)).unwrap();
        assert_eq!(even, vec![Site::from([0, 0]), Site::from([1, 1])]);
        assert_eq!(odd, vec![Site::from([0, 1]), Site::from([1, 0])]);
        let (even, odd) = sublattices(&square(1)).unwrap();
        assert_eq!((even.len(), odd.len()), (1, 0));
        let (even, odd) = sublattices(&square(3)).unwrap();
        assert_eq!((even.len(), odd.len()), (5, 4));
        let line = LatticeBox::new(&[4]).unwrap();
        assert_eq!(sublattices(&line).unwrap_err(), Error::NotTwoDimensional(1));
    }

    #[test]
    fn asymmetric_kernel_is_rejected() {
        let err = CouplingKernel::new(2, [(vec![1, 0], 1.0), (vec![-1, 0], 0.5)]).unwrap_err();
        assert!(matches!(err, Error::AsymmetricKernel { .. }));
        assert!(CouplingKernel::new(1, [(vec![2], 1.0)]).is_err());
        assert!(CouplingKernel::symmetric(1, [(vec![2], 1.0), (vec![-2], 2.0)]).is_err());
        let k = CouplingKernel::symmetric(1, [(vec![2], 1.0)]).unwrap();
        assert_eq!(k.weight(&[-2]), 1.0);
        assert_eq!(k.range(), 2);
    }

    #[test]
    fn params_reject_nonpositive_beta() {
        assert!(PcaParams::new(0.0, 0.0, CouplingKernel::zero(2)).is_err());
        assert!(PcaParams::new(-1.0, 0.0, CouplingKernel::zero(2)).is_err());
        assert!(PcaParams::new(f64::NAN, 0.0, CouplingKernel::zero(2)).is_err());
    }

    #[test]
    fn canonical_encoding_round_trips_exhaustively() {
        for sides in [vec![12], vec![3, 4], vec![2, 2, 3], vec![1, 1]] {
            let region = LatticeBox::new(&sides).unwrap();
            for code in 0..(1u64 << region.len()) {
                let cfg = SpinConfig::from_index(region.clone(), code);
                assert_eq!(cfg.index(), code);
            }
        }
    }

    #[test]
    fn canonical_bit_order_is_lexicographic() {
        let region = square(2);
        // bit 1 is the second site in lexicographic order, (0,1)
        let cfg = SpinConfig::from_index(region, 0b0010);
        assert_eq!(cfg.get(&Site::from([0, 1])), Some(Spin::Up));
        assert_eq!(cfg.get(&Site::from([1, 0])), Some(Spin::Down));
    }

    proptest! {
        #[test]
        fn field_is_shift_invariant_on_torus(
            code in 0u64..(1 << 12),
            k0 in -1.0f64..1.0, k1 in -1.0f64..1.0, k2 in -1.0f64..1.0, h in -1.0f64..1.0,
            sx in 0i64..3, sy in 0i64..4,
        ) {
            let region = LatticeBox::new(&[3, 4]).unwrap();
            let params = PcaParams::new(1.0, h, CouplingKernel::nearest_neighbor_2d(k0, k1, k2)).unwrap();
            let cfg = SpinConfig::from_index(region.clone(), code);
            let shifted = cfg.shifted_periodic(&[sx, sy]);
            let ext = extend(&cfg, &BoundaryCondition::Periodic, 1).unwrap();
            let ext_shifted = extend(&shifted, &BoundaryCondition::Periodic, 1).unwrap();
            let i = Site::from([sx, sy]);
            let a = local_field(&i, &ext, &params);
            let b = local_field(&Site::from([0, 0]), &ext_shifted, &params);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn extension_restricts_to_identity(code in 0u64..(1 << 9), plus in any::<bool>()) {
            let cfg = SpinConfig::from_index(square(3), code);
            let bc = if plus { BoundaryCondition::plus() } else { BoundaryCondition::Periodic };
            prop_assert_eq!(extend(&cfg, &bc, 1).unwrap().restrict(), cfg);
        }
    }
}
