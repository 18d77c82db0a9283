pub mod compute;
pub mod gen;
pub mod plot;
pub mod train;
pub mod vectorize;
