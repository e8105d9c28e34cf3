//! Headless, deterministic multirotor flight-dynamics simulator.
//!
//! The crate is split along the simulation pipeline:
//!
//! * [`frames`] – vector/quaternion algebra and ENU/FLU ↔ NED/FRD conversions
//! * [`dynamics`] – rotor model, torque allocation and RK4 rigid-body integration
//! * [`sensors`] – barometer, magnetometer, IMU and GPS models with noise processes
//! * [`control`] – control-backend contract, geometric tracking controller, reference trajectories
//! * [`mavlink`] – MAVLink v2 codec and the UDP hardware-in-the-loop bridge
//! * [`sim`] – scenarios, vehicle manager, main loop, telemetry and plotting

pub mod control;
pub mod dynamics;
pub mod frames;
pub mod mavlink;
pub mod sensors;
pub mod sim;

pub use dynamics::{MultirotorParams, RigidBodyState, RotorCommand, Wrench};
pub use frames::{FrameTag, Quaternion, Vec3};
