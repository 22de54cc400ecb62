pub mod dense;
pub mod precise;
