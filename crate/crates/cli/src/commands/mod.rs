pub mod analyze;
pub mod bounds;
pub mod sensitivity;
pub mod simulate;
pub mod verify;
