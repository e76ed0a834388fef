pub mod algebra;
pub mod ck;
pub mod cli;
pub mod constructions;
pub mod correspondence;
pub mod defect;
pub mod error;
pub mod power;
pub mod profile;
pub mod text;
