//! Radar point extraction, odometry and evaluation.

pub mod cfar;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod extractor;
pub mod io;
pub mod metrics;
pub mod odometry;
pub mod pose;
pub mod scan;
pub mod signal;
pub mod spatial;
pub mod synth;
pub mod table;
pub mod tuning;

pub use error::{Error, Result};
pub use pose::{Pose2, StampedPose, Trajectory};
pub use scan::{Point2, PointCloud, PolarScan, PowerUnit, ScanGeometry};

/// Runs the guide's snippets as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/scans.md")]
    pub mod scans {}
    #[doc = include_str!("../../../book/src/cfar.md")]
    pub mod cfar {}
    #[doc = include_str!("../../../book/src/extractors.md")]
    pub mod extractors {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub mod synthetic {}
    #[doc = include_str!("../../../book/src/odometry.md")]
    pub mod odometry {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    pub mod tuning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
