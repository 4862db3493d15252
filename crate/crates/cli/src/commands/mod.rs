pub mod augment;
pub mod evaluate;
pub mod optimize;
pub mod recall;
pub mod shape;
pub mod stats;
