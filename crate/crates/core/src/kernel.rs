//! The interface shared by every 6×6 Green kernel, plus a block-corrupting wrapper used to
//! show that identity checks are not passing vacuously.

use crate::{Mat6, Point, Result, C64};

pub trait Kernel: Sync {
    /// Free-space wavenumber.
    fn k0(&self) -> f64;
    /// `g(r, r′)` for `r ≠ r′`.
    fn eval(&self, r: &Point, rp: &Point) -> Result<Mat6>;
    /// Material tensor `ε̄(r)` as a 6×6 matrix.
    fn material(&self, r: &Point) -> Mat6;
    /// Kernel of the reciprocal partner problem (same medium, transverse wavevector reversed).
    /// Equal to the kernel itself unless it depends on a transverse wavevector.
    fn partner(&self) -> Option<Box<dyn Kernel + '_>> {
        None
    }
    /// Coefficient `D(r)` of the local term `D δ(r − r′)` that the pointwise kernel omits.
    fn contact(&self, _r: &Point) -> Mat6 {
        Mat6::zeros()
    }
}

/// One of the four 3×3 blocks of a kernel, rows first: `[E←J, E←M, H←J, H←M]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    EJ,
    EM,
    HJ,
    HM,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::EJ, Block::EM, Block::HJ, Block::HM];

    pub fn offsets(self) -> (usize, usize) {
        match self {
            Block::EJ => (0, 0),
            Block::EM => (0, 3),
            Block::HJ => (3, 0),
            Block::HM => (3, 3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::EJ => "EJ",
            Block::EM => "EM",
            Block::HJ => "HJ",
            Block::HM => "HM",
        }
    }
}

/// Lexicographic "r above r′" ordering (z first).
pub fn ahead(r: &Point, rp: &Point) -> bool {
    for k in [2, 1, 0] {
        if r[k] != rp[k] {
            return r[k] > rp[k];
        }
    }
    false
}

/// Scales one block of `inner` by `factor` on the branch where `r` lies ahead of `r′`.
///
/// A uniform rescaling of a diagonal block keeps a kernel symmetric, so symmetry checks could
/// never see it; corrupting one branch models the typical bug of a wrong factor in one half of
/// a piecewise kernel and is visible to every identity.
pub struct Corrupted<'a, K: ?Sized> {
    pub inner: &'a K,
    pub block: Block,
    pub factor: C64,
}

impl<'a, K: Kernel + ?Sized> Corrupted<'a, K> {
    pub fn new(inner: &'a K, block: Block, factor: f64) -> Self {
        Corrupted { inner, block, factor: C64::new(factor, 0.0) }
    }

    fn corrupt(&self, mut g: Mat6) -> Mat6 {
        let (r0, c0) = self.block.offsets();
        for i in 0..3 {
            for j in 0..3 {
                g[(r0 + i, c0 + j)] *= self.factor;
            }
        }
        g
    }
}

impl<K: Kernel + ?Sized> Kernel for Corrupted<'_, K> {
    fn k0(&self) -> f64 {
        self.inner.k0()
    }

    fn eval(&self, r: &Point, rp: &Point) -> Result<Mat6> {
        let g = self.inner.eval(r, rp)?;
        Ok(if ahead(r, rp) { self.corrupt(g) } else { g })
    }

    fn material(&self, r: &Point) -> Mat6 {
        self.inner.material(r)
    }

    fn contact(&self, r: &Point) -> Mat6 {
        self.inner.contact(r)
    }

    fn partner(&self) -> Option<Box<dyn Kernel + '_>> {
        let p = self.inner.partner()?;
        Some(Box::new(OwnedCorrupted { inner: p, block: self.block, factor: self.factor }))
    }
}

struct OwnedCorrupted<'a> {
    inner: Box<dyn Kernel + 'a>,
    block: Block,
    factor: C64,
}

impl Kernel for OwnedCorrupted<'_> {
    fn k0(&self) -> f64 {
        self.inner.k0()
    }

    fn eval(&self, r: &Point, rp: &Point) -> Result<Mat6> {
        let c = Corrupted { inner: self.inner.as_ref(), block: self.block, factor: self.factor };
        c.eval(r, rp)
    }

    fn material(&self, r: &Point) -> Mat6 {
        self.inner.material(r)
    }

    fn contact(&self, r: &Point) -> Mat6 {
        self.inner.contact(r)
    }
}
