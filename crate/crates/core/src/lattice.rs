//! Open square lattice, register layout of the composite Hilbert space, and
//! the state vector with mixed-radix gate application.
//!
//! Register order: links (vertex row-major, k = 1 then 2), then fermionic
//! modes (row-major, x2 major), then ancillas. Register 0 is the most
//! significant digit, so the layout matches left-to-right Kronecker order.

use crate::error::{Result, SimError};
use crate::linalg::{inner, norm, Matrix};
use crate::scalar::{czero, Real, C};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub x1: usize,
    pub x2: usize,
}

impl Vertex {
    pub const fn new(x1: usize, x2: usize) -> Self {
        Self { x1, x2 }
    }
    pub fn parity(self) -> Parity {
        if (self.x1 + self.x2).is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
    /// (−1)^{x1+x2}
    pub fn sign(self) -> f64 {
        match self.parity() {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
    pub fn step(self, dir: Dir) -> Vertex {
        match dir {
            Dir::One => Vertex::new(self.x1 + 1, self.x2),
            Dir::Two => Vertex::new(self.x1, self.x2 + 1),
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x1, self.x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    One,
    Two,
}

impl Dir {
    /// k = 1 or 2
    pub fn index(self) -> usize {
        match self {
            Dir::One => 1,
            Dir::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub origin: Vertex,
    pub dir: Dir,
}

impl Link {
    pub fn new(origin: Vertex, dir: Dir) -> Self {
        Self { origin, dir }
    }
    pub fn end(self) -> Vertex {
        self.origin.step(self.dir)
    }
    pub fn class(self) -> LinkClass {
        match (self.origin.parity(), self.dir) {
            (Parity::Even, Dir::One) => LinkClass::Eh,
            (Parity::Even, Dir::Two) => LinkClass::Ev,
            (Parity::Odd, Dir::One) => LinkClass::Oh,
            (Parity::Odd, Dir::Two) => LinkClass::Ov,
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.dir {
            Dir::One => 1,
            Dir::Two => 2,
        };
        write!(f, "{}-{}", self.origin, k)
    }
}

/// Gauge-matter classes: parity of the link origin and direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkClass {
    Eh,
    Ev,
    Oh,
    Ov,
}

impl LinkClass {
    pub fn parity(self) -> Parity {
        match self {
            LinkClass::Eh | LinkClass::Ev => Parity::Even,
            LinkClass::Oh | LinkClass::Ov => Parity::Odd,
        }
    }
    pub fn dir(self) -> Dir {
        match self {
            LinkClass::Eh | LinkClass::Oh => Dir::One,
            LinkClass::Ev | LinkClass::Ov => Dir::Two,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeGeometry {
    pub lx: usize,
    pub ly: usize,
}

impl LatticeGeometry {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(SimError::Geometry(format!("{lx}x{ly} has no vertices")));
        }
        Ok(Self { lx, ly })
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.x1 < self.lx && v.x2 < self.ly
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (0..self.ly).flat_map(|x2| (0..self.lx).map(move |x1| Vertex::new(x1, x2))).collect()
    }

    /// Row-major fermionic index.
    pub fn vertex_index(&self, v: Vertex) -> Option<usize> {
        self.contains(v).then(|| v.x2 * self.lx + v.x1)
    }

    pub fn has_link(&self, l: Link) -> bool {
        self.contains(l.origin) && self.contains(l.end())
    }

    pub fn links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for v in self.vertices() {
            for dir in [Dir::One, Dir::Two] {
                let l = Link::new(v, dir);
                if self.has_link(l) {
                    out.push(l);
                }
            }
        }
        out
    }

    pub fn links_of_class(&self, class: LinkClass) -> Vec<Link> {
        self.links().into_iter().filter(|l| l.class() == class).collect()
    }

    pub fn is_plaquette(&self, x: Vertex) -> bool {
        x.x1 + 1 < self.lx && x.x2 + 1 < self.ly
    }

    pub fn plaquettes(&self) -> Vec<Vertex> {
        self.vertices().into_iter().filter(|&v| self.is_plaquette(v)).collect()
    }

    pub fn plaquettes_of(&self, parity: Parity) -> Vec<Vertex> {
        self.plaquettes().into_iter().filter(|p| p.parity() == parity).collect()
    }

    /// Boundary links of plaquette x in stator order: bottom, right, top, left.
    pub fn plaquette_links(&self, x: Vertex) -> [Link; 4] {
        [
            Link::new(x, Dir::One),
            Link::new(x.step(Dir::One), Dir::Two),
            Link::new(x.step(Dir::Two), Dir::One),
            Link::new(x, Dir::Two),
        ]
    }

    /// Links touching vertex x: (outgoing, incoming).
    pub fn incident_links(&self, x: Vertex) -> (Vec<Link>, Vec<Link>) {
        let mut out = Vec::new();
        let mut inc = Vec::new();
        for dir in [Dir::One, Dir::Two] {
            let l = Link::new(x, dir);
            if self.has_link(l) {
                out.push(l);
            }
        }
        if x.x1 > 0 {
            inc.push(Link::new(Vertex::new(x.x1 - 1, x.x2), Dir::One));
        }
        if x.x2 > 0 {
            inc.push(Link::new(Vertex::new(x.x1, x.x2 - 1), Dir::Two));
        }
        (out, inc)
    }

    pub fn vertex_count(&self) -> usize {
        self.lx * self.ly
    }
    pub fn link_count(&self) -> usize {
        self.lx * (self.ly - 1) + (self.lx - 1) * self.ly
    }
    pub fn plaquette_count(&self) -> usize {
        (self.lx - 1) * (self.ly - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AncillaPolicy {
    /// one control per plaquette
    PerPlaquette,
    /// one control per even plaquette, moved right for the odd one
    Shared,
    /// physical registers only
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegisterKind {
    Link(Link),
    Fermion(Vertex),
    /// labeled by the plaquette the control rests on
    Ancilla(Vertex),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    pub kind: RegisterKind,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    pub geometry: LatticeGeometry,
    pub n: usize,
    pub policy: AncillaPolicy,
    registers: Vec<Register>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    links: HashMap<Link, usize>,
    fermions: HashMap<Vertex, usize>,
    ancillas: HashMap<Vertex, usize>,
    n_physical: usize,
}

pub fn build_layout(geometry: LatticeGeometry, n: usize, policy: AncillaPolicy) -> Result<RegisterLayout> {
    if n < 2 {
        return Err(SimError::GroupOrder(n));
    }
    if policy != AncillaPolicy::None && (geometry.lx < 2 || geometry.ly < 2) {
        return Err(SimError::Geometry(format!(
            "{}x{} has no plaquettes to host controls",
            geometry.lx, geometry.ly
        )));
    }
    let mut registers = Vec::new();
    let mut links = HashMap::new();
    let mut fermions = HashMap::new();
    let mut ancillas = HashMap::new();
    for l in geometry.links() {
        links.insert(l, registers.len());
        registers.push(Register { kind: RegisterKind::Link(l), dim: n });
    }
    for v in geometry.vertices() {
        fermions.insert(v, registers.len());
        registers.push(Register { kind: RegisterKind::Fermion(v), dim: 2 });
    }
    let n_physical = registers.len();
    let hosts: Vec<Vertex> = match policy {
        AncillaPolicy::PerPlaquette => geometry.plaquettes(),
        AncillaPolicy::Shared => geometry.plaquettes_of(Parity::Even),
        AncillaPolicy::None => vec![],
    };
    for p in hosts {
        ancillas.insert(p, registers.len());
        registers.push(Register { kind: RegisterKind::Ancilla(p), dim: n });
    }
    let dims: Vec<usize> = registers.iter().map(|r| r.dim).collect();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1]
            .checked_mul(dims[i + 1])
            .ok_or_else(|| SimError::Dimension("state dimension overflows usize".into()))?;
    }
    Ok(RegisterLayout { geometry, n, policy, registers, dims, strides, links, fermions, ancillas, n_physical })
}

impl RegisterLayout {
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn len(&self) -> usize {
        self.registers.len()
    }
    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }
    pub fn physical_dim(&self) -> usize {
        self.dims[..self.n_physical].iter().product()
    }
    pub fn ancilla_dim(&self) -> usize {
        self.dims[self.n_physical..].iter().product()
    }
    pub fn physical_registers(&self) -> std::ops::Range<usize> {
        0..self.n_physical
    }
    pub fn ancilla_registers(&self) -> std::ops::Range<usize> {
        self.n_physical..self.registers.len()
    }

    pub fn link(&self, l: Link) -> Result<usize> {
        self.links.get(&l).copied().ok_or_else(|| SimError::UnknownSite(format!("link {l}")))
    }
    pub fn fermion(&self, v: Vertex) -> Result<usize> {
        self.fermions.get(&v).copied().ok_or_else(|| SimError::UnknownSite(format!("vertex {v}")))
    }
    /// Ancilla resting on plaquette p, if any.
    pub fn ancilla_at(&self, p: Vertex) -> Option<usize> {
        self.ancillas.get(&p).copied()
    }

    /// Control register that mediates the plaquette term of p.
    pub fn control_for_plaquette(&self, p: Vertex) -> Result<usize> {
        if !self.geometry.is_plaquette(p) {
            return Err(SimError::UnknownSite(format!("plaquette {p}")));
        }
        match self.policy {
            AncillaPolicy::PerPlaquette => self.ancilla_at(p).ok_or_else(|| SimError::AncillaPolicy(format!("no control on {p}"))),
            AncillaPolicy::Shared => match p.parity() {
                Parity::Even => Ok(self.ancillas[&p]),
                Parity::Odd => {
                    if p.x1 == 0 {
                        return Err(SimError::AncillaPolicy(format!(
                            "odd plaquette {p} has no even plaquette to its left"
                        )));
                    }
                    self.ancilla_at(Vertex::new(p.x1 - 1, p.x2))
                        .ok_or_else(|| SimError::AncillaPolicy(format!("no control reaches {p}")))
                }
            },
            AncillaPolicy::None => Err(SimError::AncillaPolicy("layout has no ancillas".into())),
        }
    }

    /// Same lattice, physical registers only.
    pub fn physical(&self) -> RegisterLayout {
        build_layout(self.geometry, self.n, AncillaPolicy::None).expect("physical layout of a valid layout")
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            d[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        d
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn digit(&self, index: usize, reg: usize) -> usize {
        (index / self.strides[reg]) % self.dims[reg]
    }

    /// Fermionic (row-major) position of a fermion register.
    pub fn fermion_position(&self, reg: usize) -> usize {
        reg - self.geometry.link_count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    pub amps: Vec<C<T>>,
    dims: Vec<usize>,
}

impl<T: Real> StateVector<T> {
    pub fn from_amplitudes(layout: &RegisterLayout, amps: Vec<C<T>>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(SimError::Dimension(format!("{} amplitudes for dimension {}", amps.len(), layout.total_dim())));
        }
        Ok(Self { amps, dims: layout.dims().to_vec() })
    }

    pub fn basis(layout: &RegisterLayout, index: usize) -> Self {
        let mut amps = vec![czero(); layout.total_dim()];
        amps[index] = C::new(T::one(), T::zero());
        Self { amps, dims: layout.dims().to_vec() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn len(&self) -> usize {
        self.amps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }
    pub fn norm(&self) -> T {
        norm(&self.amps)
    }
}

pub fn build_global_singlet<T: Real>(layout: &RegisterLayout) -> StateVector<T> {
    let mut digits = vec![0usize; layout.len()];
    for (i, r) in layout.registers().iter().enumerate() {
        if let RegisterKind::Fermion(v) = r.kind {
            digits[i] = usize::from(v.parity() == Parity::Odd);
        }
    }
    let base = layout.index_of(&digits);
    let mut amps = vec![czero(); layout.total_dim()];
    let anc = layout.ancilla_dim();
    let a = T::one() / T::lit(anc as f64).sqrt();
    // ancillas are the trailing digits, so |in>^{⊗k} is a contiguous run
    for off in 0..anc {
        amps[base + off] = C::new(a, T::zero());
    }
    StateVector { amps, dims: layout.dims().to_vec() }
}

/// A gate bound to concrete targets: sparse rows over the gate-local basis plus
/// the global offsets of that basis.
#[derive(Clone, Debug)]
pub struct GateKernel<T: Real> {
    targets: Vec<usize>,
    offsets: Vec<usize>,
    rows: Vec<Vec<(usize, C<T>)>>,
    diagonal: Option<Vec<C<T>>>,
    other_dims: Vec<usize>,
    other_strides: Vec<usize>,
}

impl<T: Real> GateKernel<T> {
    pub fn new(dims: &[usize], matrix: &Matrix<T>, targets: &[usize]) -> Result<Self> {
        let mut seen = vec![false; dims.len()];
        for &t in targets {
            if t >= dims.len() {
                return Err(SimError::Targets(format!("register {t} out of range")));
            }
            if seen[t] {
                return Err(SimError::Targets(format!("register {t} repeated")));
            }
            seen[t] = true;
        }
        let gdim: usize = targets.iter().map(|&t| dims[t]).product();
        if !matrix.is_square() || matrix.rows() != gdim {
            return Err(SimError::Dimension(format!("{}x{} matrix on targets of dimension {gdim}", matrix.rows(), matrix.cols())));
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let mut offsets = vec![0usize; gdim];
        for (g, off) in offsets.iter_mut().enumerate() {
            let mut rem = g;
            for &t in targets.iter().rev() {
                *off += (rem % dims[t]) * strides[t];
                rem /= dims[t];
            }
        }
        let rows: Vec<Vec<(usize, C<T>)>> = (0..gdim)
            .map(|r| (0..gdim).filter(|&c| matrix[(r, c)] != czero()).map(|c| (c, matrix[(r, c)])).collect())
            .collect();
        let diagonal = matrix.is_diagonal().then(|| (0..gdim).map(|i| matrix[(i, i)]).collect());
        let (other_dims, other_strides) = (0..dims.len()).filter(|i| !seen[*i]).map(|i| (dims[i], strides[i])).unzip();
        Ok(Self { targets: targets.to_vec(), offsets, rows, diagonal, other_dims, other_strides })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn apply(&self, amps: &mut [C<T>]) {
        let gdim = self.offsets.len();
        let mut buf = vec![czero::<T>(); gdim];
        let mut counter = vec![0usize; self.other_dims.len()];
        let mut base = 0usize;
        loop {
            match &self.diagonal {
                Some(d) => {
                    for (g, &off) in self.offsets.iter().enumerate() {
                        amps[base + off] = amps[base + off] * d[g];
                    }
                }
                None => {
                    for (g, &off) in self.offsets.iter().enumerate() {
                        buf[g] = amps[base + off];
                    }
                    for (g, row) in self.rows.iter().enumerate() {
                        amps[base + self.offsets[g]] = row.iter().fold(czero(), |s, &(c, v)| s + v * buf[c]);
                    }
                }
            }
            // odometer over the non-target registers
            let mut i = counter.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                counter[i] += 1;
                base += self.other_strides[i];
                if counter[i] < self.other_dims[i] {
                    break;
                }
                base -= counter[i] * self.other_strides[i];
                counter[i] = 0;
            }
        }
    }
}

/// Checked gate application; rejects non-unitary matrices.
pub fn apply_gate<T: Real>(state: &mut StateVector<T>, gate: &Matrix<T>, targets: &[usize]) -> Result<()> {
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    if !gate.is_square() {
        return Err(SimError::Dimension("gate must be square".into()));
    }
    let res = (&(&gate.adjoint() * gate) - &Matrix::identity(gate.rows())).max_abs();
    if res > tol {
        return Err(SimError::NonUnitary(res.to_f64()));
    }
    let k = GateKernel::new(&state.dims, gate, targets)?;
    k.apply(&mut state.amps);
    Ok(())
}

/// |<a|b>|
pub fn fidelity_up_to_phase<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(SimError::Dimension(format!("{} vs {}", a.len(), b.len())));
    }
    Ok(inner(&a.amps, &b.amps).norm())
}

/// Physical amplitudes with every ancilla projected on |in>: (1 ⊗ <in|) ψ.
pub fn project_ancillas<T: Real>(layout: &RegisterLayout, amps: &[C<T>]) -> Vec<C<T>> {
    let anc = layout.ancilla_dim();
    let w = T::one() / T::lit(anc as f64).sqrt();
    amps.chunks(anc).map(|ch| ch.iter().fold(czero::<T>(), |s, &z| s + z).scale(w)).collect()
}

/// Embed physical amplitudes with all ancillas in |in>.
pub fn attach_ancillas<T: Real>(layout: &RegisterLayout, phys: &[C<T>]) -> StateVector<T> {
    let anc = layout.ancilla_dim();
    let w = T::one() / T::lit(anc as f64).sqrt();
    let mut amps = Vec::with_capacity(phys.len() * anc);
    for &p in phys {
        for _ in 0..anc {
            amps.push(p.scale(w));
        }
    }
    StateVector { amps, dims: layout.dims().to_vec() }
}

/// Probability weight left with the ancillas in |in>; 1 means fully restored.
pub fn ancilla_restoration<T: Real>(layout: &RegisterLayout, state: &StateVector<T>) -> T {
    norm(&project_ancillas(layout, &state.amps)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn layout22() -> RegisterLayout {
        build_layout(LatticeGeometry::new(2, 2).unwrap(), 3, AncillaPolicy::PerPlaquette).unwrap()
    }

    #[test]
    fn counts_and_dims() {
        let l = layout22();
        assert_eq!(l.total_dim(), 3888);
        assert_eq!(l.physical_dim(), 1296);
        let g = LatticeGeometry::new(2, 3).unwrap();
        let l23 = build_layout(g, 3, AncillaPolicy::PerPlaquette).unwrap();
        assert_eq!(l23.total_dim(), 64 * 2187 * 9);
        let l2 = build_layout(LatticeGeometry::new(2, 2).unwrap(), 2, AncillaPolicy::PerPlaquette).unwrap();
        assert_eq!(l2.total_dim(), 512);
        assert!(build_layout(LatticeGeometry::new(2, 2).unwrap(), 1, AncillaPolicy::PerPlaquette).is_err());
        assert!(build_layout(LatticeGeometry::new(1, 3).unwrap(), 3, AncillaPolicy::Shared).is_err());
    }

    #[test]
    fn link_order_is_vertex_major() {
        let l = layout22();
        let names: Vec<String> = l.geometry.links().iter().map(|x| x.to_string()).collect();
        assert_eq!(names, ["(0,0)-1", "(0,0)-2", "(1,0)-2", "(0,1)-1"]);
    }

    #[test]
    fn shared_policy_rejects_odd_plaquette_on_left_edge() {
        let l = build_layout(LatticeGeometry::new(3, 3).unwrap(), 3, AncillaPolicy::Shared).unwrap();
        assert!(l.control_for_plaquette(Vertex::new(1, 0)).is_ok());
        assert!(l.control_for_plaquette(Vertex::new(0, 1)).is_err());
    }

    #[test]
    fn singlet_support() {
        let l = layout22();
        let s: StateVector<f64> = build_global_singlet(&l);
        let nz: Vec<usize> = (0..s.len()).filter(|&i| s.amps[i].norm() > 0.0).collect();
        assert_eq!(nz.len(), 3);
        for &i in &nz {
            let d = l.digits(i);
            assert_eq!(&d[..4], &[0, 0, 0, 0]);
            assert_eq!(&d[4..8], &[0, 1, 1, 0]);
            assert!((s.amps[i].re - 3f64.powf(-0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_moves_label() {
        let l = layout22();
        let q = Matrix::<f64>::from_fn(3, 3, |r, cc| if r == (cc + 1) % 3 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let mut s = StateVector::basis(&l, 0);
        apply_gate(&mut s, &q, &[2]).unwrap();
        assert_eq!(l.digit(s.amps.iter().position(|z| z.norm() > 0.5).unwrap(), 2), 1);
        let bad = Matrix::<f64>::identity(3).scale_real(2.0);
        assert!(apply_gate(&mut s, &bad, &[2]).is_err());
        assert!(apply_gate(&mut s, &Matrix::identity(9), &[2, 2]).is_err());
        assert!(apply_gate(&mut s, &Matrix::identity(3), &[99]).is_err());
    }
}
