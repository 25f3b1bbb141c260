use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::quaternion::Quaternion;
use super::sequence::{PoseSequence, Representation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    /// Index of the parent joint, `-1` for the root.
    pub parent: i64,
    /// Rest offset from the parent, in centimeters.
    pub offset: [f64; 3],
}

impl Joint {
    pub fn parent_index(&self) -> Option<usize> {
        usize::try_from(self.parent).ok()
    }

    pub fn offset(&self) -> Vector3<f64> {
        Vector3::from(self.offset)
    }
}

/// Topologically ordered joint tree with a single root at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joints: Vec<Joint>,
}

/// What forward kinematics does with the root joint's rotation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootRotation {
    #[default]
    Apply,
    /// Treat the root frame as the global frame (`R_root = I`).
    Fixed,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        let s = Self { joints };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let skel: Skeleton = serde_json::from_str(s)?;
        skel.validate()?;
        Ok(skel)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("skeleton serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidInput("skeleton has no joints".into()));
        }
        let roots = self.joints.iter().filter(|j| j.parent < 0).count();
        if roots != 1 {
            return Err(Error::InvalidInput(format!(
                "skeleton must have exactly one root, found {roots}"
            )));
        }
        if self.joints[0].parent != -1 {
            return Err(Error::InvalidInput("joint 0 must be the root (parent -1)".into()));
        }
        for (j, joint) in self.joints.iter().enumerate() {
            if !joint.offset.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "joint {j} ({}) has a non-finite offset",
                    joint.name
                )));
            }
            if j == 0 {
                continue;
            }
            match joint.parent_index() {
                Some(p) if p < j => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "joint {j} ({}) has parent {}; parents must precede children",
                        joint.name, joint.parent
                    )))
                }
            }
            if joint.offset().norm() == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "joint {j} ({}) has a zero-length offset",
                    joint.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Positions with every local rotation set to identity.
    pub fn rest_pose(&self) -> Vec<Vector3<f64>> {
        let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(self.len());
        for (j, joint) in self.joints.iter().enumerate() {
            let p = match joint.parent_index() {
                Some(parent) if j > 0 => pos[parent] + joint.offset(),
                _ => Vector3::zeros(),
            };
            pos.push(p);
        }
        pos
    }
}

/// Joint positions (cm) from per-joint local rotations, root at the origin.
///
/// Each joint's accumulated rotation is its parent's accumulated rotation
/// composed with its own local rotation; a joint's offset is rotated by the
/// accumulated rotation of its parent. For row vectors this is the familiar
/// `R_child · R_parent · … · R_root` chain.
pub fn forward_kinematics(skel: &Skeleton, local_rotations: &[Quaternion]) -> Result<Vec<Vector3<f64>>> {
    forward_kinematics_with(skel, local_rotations, RootRotation::Apply)
}

pub fn forward_kinematics_with(
    skel: &Skeleton,
    local_rotations: &[Quaternion],
    root: RootRotation,
) -> Result<Vec<Vector3<f64>>> {
    if local_rotations.len() != skel.len() {
        return Err(Error::InvalidInput(format!(
            "{} rotations for a skeleton with {} joints",
            local_rotations.len(),
            skel.len()
        )));
    }
    if let Some(j) = local_rotations.iter().position(|q| !q.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite rotation for joint {j}")));
    }
    let mut global: Vec<Quaternion> = Vec::with_capacity(skel.len());
    let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(skel.len());
    for (j, joint) in skel.joints.iter().enumerate() {
        match joint.parent_index() {
            Some(p) if j > 0 => {
                pos.push(pos[p] + global[p].rotate_vector(&joint.offset()));
                global.push(global[p] * local_rotations[j]);
            }
            _ => {
                pos.push(Vector3::zeros());
                global.push(match root {
                    RootRotation::Apply => local_rotations[j],
                    RootRotation::Fixed => Quaternion::IDENTITY,
                });
            }
        }
    }
    Ok(pos)
}

/// Moves the root to the origin in every frame and rescales each limb to
/// the skeleton's rest length while keeping its observed direction.
pub fn center_and_normalize(seq: &PoseSequence, skel: &Skeleton) -> Result<PoseSequence> {
    if seq.representation != Representation::PositionsCm {
        return Err(Error::InvalidInput(format!(
            "center_and_normalize needs positions, got {}",
            seq.representation
        )));
    }
    let k = skel.len();
    if seq.dims() != 3 * k {
        return Err(Error::InvalidInput(format!(
            "sequence has {} dimensions, skeleton needs {}",
            seq.dims(),
            3 * k
        )));
    }
    let mut out = DMatrix::zeros(seq.len(), seq.dims());
    for t in 0..seq.len() {
        let joint = |j: usize| {
            Vector3::new(
                seq.frames[(t, 3 * j)],
                seq.frames[(t, 3 * j + 1)],
                seq.frames[(t, 3 * j + 2)],
            )
        };
        let mut placed: Vec<Vector3<f64>> = Vec::with_capacity(k);
        for (j, def) in skel.joints.iter().enumerate() {
            let p = match def.parent_index() {
                Some(parent) if j > 0 => {
                    let limb = joint(j) - joint(parent);
                    let len = limb.norm();
                    if !(len > 0.0) {
                        return Err(Error::Degenerate(format!(
                            "frame {t}: limb {} -> {} has zero length",
                            skel.joints[parent].name, def.name
                        )));
                    }
                    placed[parent] + limb * (def.offset().norm() / len)
                }
                _ => Vector3::zeros(),
            };
            placed.push(p);
        }
        for (j, p) in placed.iter().enumerate() {
            out[(t, 3 * j)] = p.x;
            out[(t, 3 * j + 1)] = p.y;
            out[(t, 3 * j + 2)] = p.z;
        }
    }
    let mut result = seq.clone();
    result.frames = out;
    Ok(result)
}
