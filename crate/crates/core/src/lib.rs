//! Numerical laboratory for constant-scalar-curvature Kähler geometry at desk scale.
//!
//! The crate is organized around the moment-polytope picture of toric Kähler
//! geometry and its one-dimensional reduction on P¹:
//!
//! - [`polytope`]: Delzant polytopes, exact vertex enumeration, interior and
//!   facet quadrature, the lattice-normalized boundary measure dσ, and lattice
//!   point counting.
//! - [`potentials`]: symplectic potentials u on the polytope, analytic Hessian
//!   and inverse-Hessian derivative tensors, Abreu's scalar-curvature operator
//!   R = -∂²u^{ij}/∂x^i∂x^j, and the Legendre transform to the Kähler side.
//! - [`stability`]: the polytope Futaki functional F(f) = -μ∫f + ∫_∂P f dσ,
//!   the toric K-energy, piecewise-linear test configurations and their weight
//!   spectra B_k/A_k, the trace-asymptotics cross-check of F, the norm D(T),
//!   Donaldson's Calabi-energy lower bound, and a crease-grid destabilizer scan.
//! - [`p1`]: the reduced S¹-invariant metric kernel on P¹ over the background
//!   moment coordinate x₀ ∈ [0,1] (metric density, curvature, Laplacian,
//!   Ricci potential).
//! - [`functionals`]: the energy functionals I, J, F⁰, F and the Mabuchi
//!   K-energy in the reduced coordinate, with their cocycle identities.
//! - [`bergman`]: monomial section norms, the density of states ρ_k, the
//!   Tian-Yau-Zelditch/Lu expansion checks, the M-matrix, and torus-invariant
//!   balanced-metric iteration.
//! - [`geodesics`]: Bergman approximations of Monge-Ampère geodesic segments
//!   and rays, the exact linear toric geodesic, and the Monge-Ampère mass
//!   identity for F⁰.
//! - [`flows`]: Kähler-Ricci and Calabi flows on the invariant P¹ slice with
//!   energy monotonicity monitors and convergence diagnostics.
//! - [`verify`]: the acceptance suite (quick and full tiers).
//!
//! Conventions are pinned once and used everywhere: on P¹ the background is
//! the Fubini-Study metric normalized to volume V = 1 over the moment interval
//! [0,1], for which the scalar curvature is identically 2, matching Abreu's
//! operator on the Guillemin potential of [0,1] and the mean-curvature
//! constant μ = σ(∂P)/Vol(P) = 2.

pub mod bergman;
pub mod fit;
pub mod flows;
pub mod functionals;
pub mod geodesics;
pub mod p1;
pub mod polytope;
pub mod potentials;
pub mod quad1d;
pub mod rational;
pub mod stability;
pub mod verify;
