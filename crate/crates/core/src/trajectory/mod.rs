//! Approach planning: timing law, guard sphere, phase trajectories and
//! sensor zeroing.

pub mod phases;
pub mod profile;
pub mod zeroing;

pub use phases::{
    detect_contact, great_circle_point, guard_exit_point, plan_phase1, plan_phase2, plan_phase3, write_plans_csv,
    KeyPoints, MotionLimits, Phase, PhasePlan, PlanSample, SphereGuard, PLAN_CSV_HEADER,
};
pub use profile::{eval_profile, plan_profile, ProfileShape, TrapezoidProfile};
pub use zeroing::{phase4_zero_adjust, plan_retreat, retreat_pose, ZeroAdjustment};
