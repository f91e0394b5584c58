pub mod conv;
pub mod gradcheck;
