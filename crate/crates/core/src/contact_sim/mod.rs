//! Physical plant: coil/head contact, the admittance model standing in for
//! the robot's compliant force mode, the wrist sensor and head motion.

pub mod contact;
pub mod motion;
pub mod plant;
pub mod sensor;

pub use contact::{
    contact_geometry, contact_wrench, friction_force, CoilModel, ContactGeometry, ContactState, HeadModel, Twist,
};
pub use motion::{head_motion_script, HeadMotion, Ramp};
pub use plant::{step_plant, PlantConfig, PlantStep};
pub use sensor::{read_wrench, Sensor, SensorModel};
