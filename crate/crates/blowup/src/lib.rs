pub mod blowtime;
pub mod compactify;
pub mod drivers;
pub mod field;
pub mod integrate;
pub mod interval;
pub mod linalg;
pub mod manifold;
pub mod par;
pub mod poly;
pub mod program;
pub mod series;
