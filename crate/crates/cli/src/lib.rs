pub mod app;
pub mod satkit;
