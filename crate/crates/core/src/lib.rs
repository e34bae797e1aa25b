pub mod complex;
pub mod filtration;
pub mod gf2;
pub mod dynamics;
pub mod linalg;
pub mod orbits;
pub mod certificates;
pub mod morse;
