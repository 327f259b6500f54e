//! Joint optimization of UT transmit covariances and RIS phase shifts for
//! energy-efficient multiuser MIMO uplink with statistical UT-side CSI.
//!
//! Module map:
//! - [`channel`]: system configuration, statistical channel model, sampling.
//! - [`de`]: deterministic equivalent of the ergodic sum rate.
//! - [`power`]: water-filling and Dinkelbach power allocation.
//! - [`phase`]: weighted-MSE block coordinate descent with the MM phase step.
//! - [`ao`]: the outer alternating optimization for GEE or SE.
//! - [`montecarlo`]: sampled ergodic rate used as an independent check.

pub mod ao;
pub mod channel;
pub mod de;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod phase;
pub mod power;
pub mod rng;

pub use ao::{evaluate, maximize, Mode, OptimizerOptions, Solution, TraceRecord};
pub use channel::{
    dbm_to_watts, sample_h1, sample_ut_channel, synthesize_stats, ChannelRealization, RisBsChannel,
    SystemConfig, UtChannelStats,
};
pub use de::{de_fixed_point, de_fixed_point_from, de_rate, DeOptions, DeState, PhaseVector, PowerAllocation};
pub use error::{Error, Result};
pub use montecarlo::{ergodic_se, McEstimate};
pub use phase::{bcd_phase, mm_phase, rate_c, BcdOptions, MmOptions};
pub use power::{assemble_q, dinkelbach, gee_value, waterfill, DinkelbachOptions, GeeBreakdown};
