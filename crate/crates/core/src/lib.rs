pub mod model;
pub mod mu;
pub mod normalize;
pub mod parser;
pub mod syntax;
pub mod typeck;
