pub mod cli;
pub mod contact_analysis;
pub mod demonstration;
pub mod execution_sim;
pub mod geometry;
pub mod io;
pub mod motion_planning;
pub mod pipeline;
pub mod pose_estimation;
pub mod primitive_learning;
pub mod scenario;
pub mod scenarios;
pub mod shapes;
