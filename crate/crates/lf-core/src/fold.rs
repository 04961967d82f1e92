use crate::error::{LfError, Result};
use crate::lightfield::{LfDims, LightField4D};

/// The four ways of slicing a light field into a batch of 2D images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneKind {
    /// Batch over `(u, v)`, images over `(x, y)`.
    Sai,
    /// Batch over `(x, y)`, images over `(u, v)`.
    MicroLens,
    /// Batch over `(u, x)`, images over `(v, y)`.
    EpiHorizontal,
    /// Batch over `(v, y)`, images over `(u, x)`.
    EpiVertical,
}

impl PlaneKind {
    pub const ALL: [PlaneKind; 4] = [PlaneKind::Sai, PlaneKind::MicroLens, PlaneKind::EpiHorizontal, PlaneKind::EpiVertical];

    /// Axes of `(u, v, x, y)` as `([batch_major, batch_minor], [row, col])`.
    pub fn axes(self) -> ([usize; 2], [usize; 2]) {
        match self {
            PlaneKind::Sai => ([0, 1], [2, 3]),
            PlaneKind::MicroLens => ([2, 3], [0, 1]),
            PlaneKind::EpiHorizontal => ([0, 2], [1, 3]),
            PlaneKind::EpiVertical => ([1, 3], [0, 2]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlaneKind::Sai => "sai",
            PlaneKind::MicroLens => "microlens",
            PlaneKind::EpiHorizontal => "epi-h",
            PlaneKind::EpiVertical => "epi-v",
        }
    }

    /// `(batch, height, width)` of the folding for the given extents.
    pub fn batch_shape(self, dims: LfDims) -> (usize, usize, usize) {
        let e = [dims.u, dims.v, dims.x, dims.y];
        let (b, i) = self.axes();
        (e[b[0]] * e[b[1]], e[i[0]], e[i[1]])
    }
}

impl std::str::FromStr for PlaneKind {
    type Err = LfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sai" => Ok(PlaneKind::Sai),
            "microlens" | "mla" => Ok(PlaneKind::MicroLens),
            "epi-h" | "epih" | "horizontal" => Ok(PlaneKind::EpiHorizontal),
            "epi-v" | "epiv" | "vertical" => Ok(PlaneKind::EpiVertical),
            _ => Err(LfError::dims(format!("unknown plane kind `{s}`"))),
        }
    }
}

/// A batch of planar images in `(n, c, h, w)` order, tagged with its folding.
///
/// Batch index `n` enumerates the two fixed axes lexicographically, e.g. for
/// `Sai` it is `u * V + v`; for `EpiVertical` it is `v * Y + y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedImages {
    pub kind: PlaneKind,
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

/// Visits every `(u, v, x, y)` together with its `(batch, row, col)` position.
fn for_each_site(dims: LfDims, kind: PlaneKind, mut f: impl FnMut(usize, usize, usize)) {
    let e = [dims.u, dims.v, dims.x, dims.y];
    let (b, i) = kind.axes();
    let mut p = [0usize; 4];
    for u in 0..dims.u {
        p[0] = u;
        for v in 0..dims.v {
            p[1] = v;
            for x in 0..dims.x {
                p[2] = x;
                for y in 0..dims.y {
                    p[3] = y;
                    f(p[b[0]] * e[b[1]] + p[b[1]], p[i[0]], p[i[1]]);
                }
            }
        }
    }
}

pub fn fold_to_plane(lf: &LightField4D, kind: PlaneKind) -> BatchedImages {
    let dims = lf.dims();
    let (batch, h, w) = kind.batch_shape(dims);
    let c = dims.c;
    let src = lf.data();
    let mut data = vec![0.0; src.len()];
    let mut k = 0;
    for_each_site(dims, kind, |n, row, col| {
        for ch in 0..c {
            data[((n * c + ch) * h + row) * w + col] = src[k + ch];
        }
        k += c;
    });
    BatchedImages { kind, batch, channels: c, height: h, width: w, data }
}

/// Inverse of [`fold_to_plane`]; the batch must carry the same `kind`.
pub fn unfold_from_plane(b: &BatchedImages, kind: PlaneKind, dims: (usize, usize, usize, usize)) -> Result<LightField4D> {
    if b.kind != kind {
        return Err(LfError::Kind { expected: kind, found: b.kind });
    }
    let dims = LfDims::new(dims.0, dims.1, dims.2, dims.3, b.channels);
    let want = kind.batch_shape(dims);
    if (b.batch, b.height, b.width) != want || b.data.len() != dims.len() {
        return Err(LfError::dims(format!(
            "{kind:?} batch {}x{}x{} does not match extents {dims} (expected {}x{}x{})",
            b.batch, b.height, b.width, want.0, want.1, want.2
        )));
    }
    let (h, w, c) = (b.height, b.width, b.channels);
    let mut data = vec![0.0; dims.len()];
    let mut k = 0;
    for_each_site(dims, kind, |n, row, col| {
        for ch in 0..c {
            data[k + ch] = b.data[((n * c + ch) * h + row) * w + col];
        }
        k += c;
    });
    LightField4D::new(dims, data)
}
