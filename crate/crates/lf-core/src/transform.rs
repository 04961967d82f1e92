//! Joint angular + spatial rotations and flips used for augmentation.

use crate::error::{LfError, Result};
use crate::lightfield::{LfDims, LightField4D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn quarter_turns(self) -> usize {
        self as usize
    }

    pub fn from_quarter_turns(k: usize) -> Self {
        Self::ALL[k % 4]
    }
}

/// Rotation followed by an optional horizontal then vertical flip.
///
/// A quarter turn maps `(u, v, x, y)` to `(v, U-1-u, y, X-1-x)`; the
/// horizontal flip maps it to `(u, V-1-v, x, Y-1-y)` and the vertical flip to
/// `(U-1-u, v, X-1-x, y)`. Angular and spatial planes always move together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct LfTransform {
    pub rotation: Rotation,
    pub flip_h: bool,
    pub flip_v: bool,
}

/// Signed 2x2 matrix acting on centered `(row, col)` coordinates.
type Mat = [[i8; 2]; 2];

fn mul(a: Mat, b: Mat) -> Mat {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

impl LfTransform {
    pub const IDENTITY: LfTransform = LfTransform { rotation: Rotation::R0, flip_h: false, flip_v: false };

    pub fn new(rotation: Rotation, flip_h: bool, flip_v: bool) -> Self {
        LfTransform { rotation, flip_h, flip_v }
    }

    /// All 16 combinations, indexed as `rotation * 4 + flip_h * 2 + flip_v`.
    pub fn all() -> [LfTransform; 16] {
        std::array::from_fn(|i| LfTransform::from_index(i))
    }

    pub fn from_index(i: usize) -> Self {
        LfTransform::new(Rotation::from_quarter_turns(i / 4), i & 2 != 0, i & 1 != 0)
    }

    pub fn index(self) -> usize {
        self.rotation.quarter_turns() * 4 + (self.flip_h as usize) * 2 + self.flip_v as usize
    }

    fn matrix(self) -> Mat {
        let quarter: Mat = [[0, 1], [-1, 0]];
        let mut m: Mat = [[1, 0], [0, 1]];
        for _ in 0..self.rotation.quarter_turns() {
            m = mul(quarter, m);
        }
        if self.flip_h {
            m = mul([[1, 0], [0, -1]], m);
        }
        if self.flip_v {
            m = mul([[-1, 0], [0, 1]], m);
        }
        m
    }

    /// Whether the transform exchanges the two axes of each plane.
    pub fn swaps_axes(self) -> bool {
        self.rotation.quarter_turns() % 2 == 1
    }

    /// A transform undoing `self` (one of the 16 combinations).
    pub fn inverse(self) -> LfTransform {
        let m = self.matrix();
        LfTransform::all()
            .into_iter()
            .find(|t| mul(t.matrix(), m) == [[1, 0], [0, 1]])
            .expect("the transform set is closed under inversion")
    }

    /// Composition applying `self` first, then `next`.
    pub fn then(self, next: LfTransform) -> LfTransform {
        let m = mul(next.matrix(), self.matrix());
        LfTransform::all().into_iter().find(|t| t.matrix() == m).expect("closed under composition")
    }

    pub fn output_dims(self, d: LfDims) -> LfDims {
        if self.swaps_axes() {
            LfDims { u: d.v, v: d.u, x: d.y, y: d.x, c: d.c }
        } else {
            d
        }
    }
}

/// Maps index `(a, b)` of an `(na, nb)` plane through `m` into the output plane.
#[inline]
fn map_plane(m: Mat, a: usize, b: usize, na: usize, nb: usize) -> (usize, usize) {
    // Doubled centered coordinates keep everything integral.
    let ca = 2 * a as isize - (na as isize - 1);
    let cb = 2 * b as isize - (nb as isize - 1);
    let ra = m[0][0] as isize * ca + m[0][1] as isize * cb;
    let rb = m[1][0] as isize * ca + m[1][1] as isize * cb;
    let (oa, ob) = if m[0][0] == 0 { (nb, na) } else { (na, nb) };
    (((ra + oa as isize - 1) / 2) as usize, ((rb + ob as isize - 1) / 2) as usize)
}

pub fn apply_transform(lf: &LightField4D, t: LfTransform) -> Result<LightField4D> {
    let d = lf.dims();
    if t.swaps_axes() && d.u != d.v {
        return Err(LfError::Transform(format!(
            "quarter-turn rotation needs a square angular grid, got {}x{}",
            d.u, d.v
        )));
    }
    let m = t.matrix();
    let od = t.output_dims(d);
    let mut out = vec![0.0; d.len()];
    let src = lf.data();
    let mut k = 0;
    for u in 0..d.u {
        for v in 0..d.v {
            let (ou, ov) = map_plane(m, u, v, d.u, d.v);
            for x in 0..d.x {
                for y in 0..d.y {
                    let (ox, oy) = map_plane(m, x, y, d.x, d.y);
                    let o = od.offset(ou, ov, ox, oy, 0);
                    out[o..o + d.c].copy_from_slice(&src[k..k + d.c]);
                    k += d.c;
                }
            }
        }
    }
    LightField4D::new(od, out)
}
