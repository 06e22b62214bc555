pub mod akcore;
pub mod expr;
pub mod dim4;
pub mod forms;
pub mod hirzebruch;
pub mod framegeo;
pub mod jets;
pub mod wavebuild;
