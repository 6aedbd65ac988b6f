//! SE(2) poses and timestamped trajectories.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Mul;

use crate::error::{Error, Result};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Rigid 2D transform; maps points from its child frame into its parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// `self^-1 * other`: `other` expressed in the frame of `self`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn translation_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Mul for Pose2 {
    type Output = Pose2;
    fn mul(self, rhs: Pose2) -> Pose2 {
        self.compose(&rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StampedPose {
    pub timestamp: f64,
    pub pose: Pose2,
}

/// Poses ordered by strictly increasing timestamp.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    poses: Vec<StampedPose>,
}

impl Trajectory {
    pub fn new(poses: Vec<StampedPose>) -> Result<Self> {
        if let Some(w) = poses.windows(2).find(|w| !(w[1].timestamp > w[0].timestamp)) {
            return Err(Error::InvalidParameter(format!(
                "trajectory timestamps must increase strictly ({} then {})",
                w[0].timestamp, w[1].timestamp
            )));
        }
        let poses = poses
            .into_iter()
            .map(|p| StampedPose {
                timestamp: p.timestamp,
                pose: Pose2::new(p.pose.x, p.pose.y, p.pose.theta),
            })
            .collect();
        Ok(Trajectory { poses })
    }

    pub fn from_parts(timestamps: &[f64], poses: &[Pose2]) -> Result<Self> {
        if timestamps.len() != poses.len() {
            return Err(Error::Dimension(format!(
                "{} timestamps for {} poses",
                timestamps.len(),
                poses.len()
            )));
        }
        Trajectory::new(
            timestamps
                .iter()
                .zip(poses)
                .map(|(&timestamp, &pose)| StampedPose { timestamp, pose })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn stamped(&self) -> &[StampedPose] {
        &self.poses
    }

    pub fn poses(&self) -> impl ExactSizeIterator<Item = Pose2> + '_ {
        self.poses.iter().map(|p| p.pose)
    }

    pub fn timestamps(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.poses.iter().map(|p| p.timestamp)
    }

    pub fn pose(&self, i: usize) -> Pose2 {
        self.poses[i].pose
    }

    /// Cumulative travelled distance at every pose, starting at 0.
    pub fn path_distances(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.poses.len());
        let mut acc = 0.0;
        for (i, p) in self.poses.iter().enumerate() {
            if i > 0 {
                let q = &self.poses[i - 1].pose;
                acc += (p.pose.x - q.x).hypot(p.pose.y - q.y);
            }
            d.push(acc);
        }
        d
    }

    pub fn path_length(&self) -> f64 {
        self.path_distances().last().copied().unwrap_or(0.0)
    }

    /// Left-multiplies every pose by `g`.
    pub fn transformed(&self, g: &Pose2) -> Trajectory {
        Trajectory {
            poses: self
                .poses
                .iter()
                .map(|p| StampedPose {
                    timestamp: p.timestamp,
                    pose: g.compose(&p.pose),
                })
                .collect(),
        }
    }
}
