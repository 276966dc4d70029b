pub mod cdag;
pub mod par;
pub mod seq;
pub mod sim;
