pub mod hankel;
