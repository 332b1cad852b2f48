//! Two-qubit gates in canonical (Cartan) form.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteOperator, Dims};
use crate::linalg::{c64, CMatrix, I};

/// Nonlocal coordinates `(c1, c2, c3)` of `exp(i/2 Σ c_k σ_k ⊗ σ_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanCoords {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CartanCoords {
    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        CartanCoords { c1, c2, c3 }
    }

    fn lerp(a: Self, b: Self, s: f64) -> Self {
        CartanCoords {
            c1: a.c1 + s * (b.c1 - a.c1),
            c2: a.c2 + s * (b.c2 - a.c2),
            c3: a.c3 + s * (b.c3 - a.c3),
        }
    }
}

pub fn cartan_gate(c: CartanCoords) -> BipartiteOperator {
    let (cm, sm) = (((c.c1 - c.c2) / 2.0).cos(), ((c.c1 - c.c2) / 2.0).sin());
    let (cp, sp) = (((c.c1 + c.c2) / 2.0).cos(), ((c.c1 + c.c2) / 2.0).sin());
    let outer = c64::from_polar(1.0, -c.c3 / 2.0);
    let inner = c64::from_polar(1.0, c.c3 / 2.0);
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = outer * cm;
    u[(3, 3)] = outer * cm;
    u[(0, 3)] = -I * outer * sm;
    u[(3, 0)] = -I * outer * sm;
    u[(1, 1)] = inner * cp;
    u[(2, 2)] = inner * cp;
    u[(1, 2)] = -I * inner * sp;
    u[(2, 1)] = -I * inner * sp;
    BipartiteOperator::new(Dims::square(2).expect("2x2 is valid"), u).expect("4x4")
}

/// Closed-form `(e_p, g_t)` of [`cartan_gate`].
pub fn cartan_ep_gt(c: CartanCoords) -> (f64, f64) {
    let (x, y, z) = (c.c1.sin().powi(2), c.c2.sin().powi(2), c.c3.sin().powi(2));
    let ep = 2.0 / 3.0 * (x * (1.0 - y) + y * (1.0 - z) + z * (1.0 - x));
    let gt = (x + y + z) / 3.0;
    (ep, gt)
}

/// Makhlin-type local invariants `(G1, G2)`.
pub fn local_invariants(c: CartanCoords) -> (c64, f64) {
    let [c1, c2, c3] = [c.c1, c.c2, c.c3];
    let cc = c1.cos().powi(2) * c2.cos().powi(2) * c3.cos().powi(2);
    let ss = c1.sin().powi(2) * c2.sin().powi(2) * c3.sin().powi(2);
    let g1 = c64::new(cc - ss, (2.0 * c1).sin() * (2.0 * c2).sin() * (2.0 * c3).sin() / 4.0);
    let g2 = (2.0 * c1).cos() + (2.0 * c2).cos() + (2.0 * c3).cos();
    (g1, g2)
}

/// `(E(U), E(U S))` from the local invariants.
pub fn e_from_invariants(g1: c64, g2: f64) -> (f64, f64) {
    let e = 1.0 - (3.0 + 2.0 * g1.norm() + g2) / 8.0;
    let e_swapped = 1.0 - (3.0 + 2.0 * g1.norm() - g2) / 8.0;
    (e, e_swapped)
}

/// Edges of the tetrahedron spanned by the identity (O), CNOT (A1),
/// DCNOT (A2) and SWAP (A3) in Cartan coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeylEdge {
    IdentityCnot,
    IdentitySwap,
    CnotDcnot,
    DcnotSwap,
    IdentityDcnot,
    CnotSwap,
}

const O: CartanCoords = CartanCoords::new(0.0, 0.0, 0.0);
const A1: CartanCoords = CartanCoords::new(FRAC_PI_2, 0.0, 0.0);
const A2: CartanCoords = CartanCoords::new(FRAC_PI_2, FRAC_PI_2, 0.0);
const A3: CartanCoords = CartanCoords::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2);

impl WeylEdge {
    pub const ALL: [WeylEdge; 6] = [
        WeylEdge::IdentityCnot,
        WeylEdge::IdentitySwap,
        WeylEdge::CnotDcnot,
        WeylEdge::DcnotSwap,
        WeylEdge::IdentityDcnot,
        WeylEdge::CnotSwap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeylEdge::IdentityCnot => "id-cnot",
            WeylEdge::IdentitySwap => "id-swap",
            WeylEdge::CnotDcnot => "cnot-dcnot",
            WeylEdge::DcnotSwap => "dcnot-swap",
            WeylEdge::IdentityDcnot => "id-dcnot",
            WeylEdge::CnotSwap => "cnot-swap",
        }
    }

    pub fn endpoints(self) -> (CartanCoords, CartanCoords) {
        match self {
            WeylEdge::IdentityCnot => (O, A1),
            WeylEdge::IdentitySwap => (O, A3),
            WeylEdge::CnotDcnot => (A1, A2),
            WeylEdge::DcnotSwap => (A2, A3),
            WeylEdge::IdentityDcnot => (O, A2),
            WeylEdge::CnotSwap => (A1, A3),
        }
    }

    /// Point at fraction `s ∈ [0, 1]` along the edge.
    pub fn point(self, s: f64) -> CartanCoords {
        let (a, b) = self.endpoints();
        CartanCoords::lerp(a, b, s)
    }

    /// Signed residual of the curve in the `(e_p, g_t)` plane that this edge
    /// maps onto; zero for every point on the edge.
    pub fn residual(self, ep: f64, gt: f64) -> f64 {
        let h = 1.0 - gt;
        match self {
            WeylEdge::IdentityCnot => gt - ep / 2.0,
            WeylEdge::IdentitySwap => ep - 2.0 * gt * h,
            WeylEdge::CnotDcnot => ep - 2.0 / 3.0,
            WeylEdge::DcnotSwap => ep + 2.0 * gt - 2.0,
            WeylEdge::IdentityDcnot => ep - (2.0 * gt - 1.5 * gt * gt),
            WeylEdge::CnotSwap => ep - (2.0 * h - 1.5 * h * h),
        }
    }
}
