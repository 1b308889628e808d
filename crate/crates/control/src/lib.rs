//! Continuous-time SISO/LTI numerics for the agent toolset: transfer
//! functions, state space, poles and stability, time and frequency
//! responses, root locus, pole placement and LQR.
//!
//! ```
//! use agentctl_control::{make_tf, tf_to_ss};
//! let g = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap();
//! let ss = tf_to_ss(&g).unwrap();
//! assert_eq!(ss.a[(0, 0)], 2.0);
//! ```

pub mod analysis;
pub mod design;
pub mod eigen;
pub mod error;
pub mod format;
pub mod poly;
pub mod response;
pub mod system;

pub use analysis::{
    controllability_matrix, dc_gain, is_stable, poles, routh_rhp_count, zeros, DcGain, StabilityReport,
};
pub use design::{
    acker, care_residual, closed_loop_state_feedback, interconnect, is_stabilizable, lqr, place, Interconnect,
    LqrSolution,
};
pub use eigen::eigenvalues;
pub use error::{ControlError, Result};
pub use response::{
    frequency_response, root_locus_data, time_response, FrequencyResponseData, FrequencyResponseKind, RootLocusData,
    TimeGrid, TimeResponseData, TimeResponseKind,
};
pub use system::{make_ss, make_tf, ss_to_tf, tf_to_ss, LinearSystem, StateSpace, TransferFunction, MAX_ORDER};

pub use nalgebra::DMatrix;
pub use num_complex::Complex64;
