//! Finite-field tower arithmetic and dense linear algebra.

mod bitmat;
mod field;
mod matrix;
mod poly;

pub use bitmat::{solve_small, BitMatrix};
pub use field::{ExtField, FqmElem};
pub use matrix::{dot, lex_min_affine, vec_add, vec_scale, Field, Fq, Fqm, MatFq, MatFqm, Matrix, Rref, Solution, VecFqm};
