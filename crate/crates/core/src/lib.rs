pub mod geometry;
pub mod gsscene;
pub mod trajectory;
pub mod grounding;
pub mod imagination;
pub mod valuemap;
pub mod simworld;
