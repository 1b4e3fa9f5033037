//! Conley-Zehnder indices of symplectic paths, Reeb spectra of irrational
//! ellipsoids, and exact checks of Tamura's partition of the positive
//! integers.
//!
//! Modules, bottom-up:
//!
//! - [`field`]: exact arithmetic in ℚ(√d) with certified floors.
//! - [`cz`]: crossing-form index engine and the closed rotation formula.
//! - [`weights`]: validated weight tuples and their exact ratios.
//! - [`ellipsoid`]: Reeb orbits of `∂E(a_1, …, a_m)` and their indices.
//! - [`tamura`]: Beatty/Tamura generators and partition scanners.
//! - [`sh`]: homology dimensions from orbit counting vs. the closed formula.
//! - [`cli`]: the `tamura-sh` command-line front end.

pub mod cli;
pub mod cz;
pub mod ellipsoid;
pub mod field;
pub mod sh;
pub mod tamura;
pub mod weights;

pub use cz::{cz_index, cz_rotation_analytic, HalfInteger, RotationPath, SymplecticPath};
pub use ellipsoid::{Ellipsoid, ReebOrbit};
pub use field::{FieldContext, QuadIrrational};
pub use tamura::{PartitionReport, TamuraFamily, Verdict};
