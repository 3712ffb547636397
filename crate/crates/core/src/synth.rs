//! Seeded synthetic fixtures: multi-view labeled datasets with classes that
//! are indistinguishable in some views, and point clouds with known topology.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{DataSource, HeldOutLabels, LabeledStack, UNLABELED};
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// One observed view of the shared latent classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpec {
    /// `m × d_latent` linear map from latent space to features.
    pub map: Matrix,
    pub noise_std: f64,
    /// `(a, b)`: class `b` is generated from class `a`'s latent mean in this
    /// view only, so the two cannot be told apart here.
    pub collapse: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewSpec {
    /// One latent mean per class (row `c − 1` is class `c`).
    pub class_means: Matrix,
    pub views: Vec<ViewSpec>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Fraction of each class's training block that carries a label.
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl TwoViewSpec {
    /// Four classes, two views; classes {1,2} merge in view 0 and {3,4} in
    /// view 1, so only the fused data separates all four.
    pub fn collapsing(noise_std: f64, train_per_class: usize, test_per_class: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5E_ED0F_D47A);
        let d = 4;
        let class_means = Matrix::identity(d, d) * 1.5;
        let mut random_map = |m: usize| Matrix::from_fn(m, d, |_, _| StandardNormal.sample(&mut rng));
        let views = vec![
            ViewSpec {
                map: random_map(6),
                noise_std,
                collapse: Some((1, 2)),
            },
            ViewSpec {
                map: random_map(8),
                noise_std,
                collapse: Some((3, 4)),
            },
        ];
        Self {
            class_means,
            views,
            train_per_class,
            test_per_class,
            labeled_fraction: 1.0,
            seed,
        }
    }

    pub fn classes(&self) -> usize {
        self.class_means.nrows()
    }

    fn validate(&self) -> Result<()> {
        let c = self.classes();
        if c == 0 || self.views.is_empty() {
            return Err(Error::validation("need at least one class and one view"));
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "labeled fraction must lie in (0, 1], got {}",
                self.labeled_fraction
            )));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::validation("need training and test instances for every class"));
        }
        for (i, v) in self.views.iter().enumerate() {
            if v.map.ncols() != self.class_means.ncols() || v.map.nrows() == 0 {
                return Err(Error::dimension(format!("view {i} map does not match latent dimension")));
            }
            if !(v.noise_std >= 0.0 && v.noise_std.is_finite()) {
                return Err(Error::validation(format!("view {i} noise must be finite and >= 0")));
            }
            if let Some((a, b)) = v.collapse {
                if a == 0 || b == 0 || a as usize > c || b as usize > c {
                    return Err(Error::validation(format!("view {i} collapses unknown classes ({a}, {b})")));
                }
            }
        }
        Ok(())
    }
}

/// Generated multi-view data with a block-wise train/test split.
///
/// Instances `0..n_train` form the training block and the rest the test
/// block; classes are interleaved inside each block.
#[derive(Debug, Clone)]
pub struct TwoViewData {
    /// One `n × m_i` matrix per view; row `p` of every view is the same instance.
    pub views: Vec<Matrix>,
    /// Ground-truth class of every instance.
    pub labels: Vec<u32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Whether each training-block instance (by position in `train`) is labeled.
    pub labeled: Vec<bool>,
}

pub fn gen_two_view(spec: &TwoViewSpec) -> Result<TwoViewData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.classes();
    let n_train = c * spec.train_per_class;
    let n = n_train + c * spec.test_per_class;
    let labels: Vec<u32> = (0..n)
        .map(|p| {
            let within = if p < n_train { p } else { p - n_train };
            (within % c) as u32 + 1
        })
        .collect();

    let views = spec
        .views
        .iter()
        .map(|view| {
            let noise = Normal::new(0.0, view.noise_std).expect("validated noise");
            let mut x = Matrix::zeros(n, view.map.nrows());
            for (p, &label) in labels.iter().enumerate() {
                let source_class = match view.collapse {
                    Some((a, b)) if label == b => a,
                    _ => label,
                };
                let mean = &view.map * spec.class_means.row(source_class as usize - 1).transpose();
                for j in 0..mean.len() {
                    x[(p, j)] = mean[j] + noise.sample(&mut rng);
                }
            }
            x
        })
        .collect();

    let per_class = ((spec.labeled_fraction * spec.train_per_class as f64).round() as usize).max(1);
    let mut labeled = vec![false; n_train];
    for class in 0..c {
        let mut members: Vec<usize> = (0..n_train).filter(|p| p % c == class).collect();
        members.shuffle(&mut rng);
        for &p in members.iter().take(per_class) {
            labeled[p] = true;
        }
    }

    Ok(TwoViewData {
        views,
        labels,
        train: (0..n_train).collect(),
        test: (n_train..n).collect(),
        labeled,
    })
}

/// Random draw of `count` positions out of a pool of `pool` test instances,
/// returned in ascending order. Only positions are drawn; no labels are read.
pub fn select_unlabeled(pool: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > pool {
        return Err(Error::validation(format!(
            "cannot draw {count} unlabeled instances from a pool of {pool}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA_11CE);
    let mut picked = rand::seq::index::sample(&mut rng, pool, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

impl TwoViewData {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Training stack: the whole training block (unlabeled where not
    /// selected for labeling) followed by the given test-block positions as
    /// unlabeled instances.
    pub fn training_stack(&self, unlabeled: &[usize]) -> Result<LabeledStack> {
        let rows: Vec<usize> = self
            .train
            .iter()
            .copied()
            .chain(unlabeled.iter().map(|&i| self.test[i]))
            .collect();
        let labels: Vec<u32> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, &p)| if self.labeled[i] { self.labels[p] } else { UNLABELED })
            .chain(unlabeled.iter().map(|_| UNLABELED))
            .collect();
        let sources = self
            .views
            .iter()
            .map(|v| DataSource::new(v.select_rows(rows.iter()), Some(labels.clone())))
            .collect::<Result<Vec<_>>>()?;
        LabeledStack::new(sources)
    }

    /// Test-block features of every view.
    pub fn test_views(&self) -> Vec<Matrix> {
        self.views.iter().map(|v| v.select_rows(self.test.iter())).collect()
    }

    pub fn test_labels(&self) -> HeldOutLabels {
        HeldOutLabels::new(self.test.iter().map(|&p| self.labels[p]).collect())
    }
}

/// Directions (radians) of the five fingers of the hand fixture.
pub const HAND_FINGER_ANGLES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
pub const HAND_PALM_RADIUS: f64 = 1.2;
pub const HAND_FINGER_LENGTH: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle { radius: f64, noise: f64 },
    Blob { center: Vec<f64>, std: f64 },
    /// Half-disc palm at the wrist (origin) with five straight fingers
    /// reaching out to radius [`HAND_FINGER_LENGTH`].
    Hand { noise: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSpec {
    pub shape: Shape,
    pub n: usize,
    pub seed: u64,
}

pub fn gen_point_cloud(spec: &PointCloudSpec) -> Result<Matrix> {
    if spec.n < 3 {
        return Err(Error::validation(format!("point cloud needs n >= 3, got {}", spec.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = |std: f64, rng: &mut ChaCha8Rng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * std
    };
    let n = spec.n;
    let x = match &spec.shape {
        Shape::Circle { radius, noise } => {
            let mut x = Matrix::zeros(n, 2);
            for p in 0..n {
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                x[(p, 0)] = radius * t.cos() + gauss(*noise, &mut rng);
                x[(p, 1)] = radius * t.sin() + gauss(*noise, &mut rng);
            }
            x
        }
        Shape::Blob { center, std } => {
            if center.is_empty() {
                return Err(Error::validation("blob center needs at least one coordinate"));
            }
            Matrix::from_fn(n, center.len(), |_, j| center[j] + gauss(*std, &mut rng))
        }
        Shape::Hand { noise } => {
            let palm = n * 2 / 5;
            let mut x = Matrix::zeros(n, 2);
            for p in 0..n {
                let (px, py) = if p < palm {
                    let r = HAND_PALM_RADIUS * rng.random::<f64>().sqrt();
                    let t = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
                    (r * t.cos(), r * t.sin())
                } else {
                    let finger = (p - palm) % HAND_FINGER_ANGLES.len();
                    let t = HAND_FINGER_ANGLES[finger];
                    // the last point of each finger sits exactly at the tip
                    let r = if p + HAND_FINGER_ANGLES.len() >= n {
                        HAND_FINGER_LENGTH
                    } else {
                        rng.random_range(HAND_PALM_RADIUS..HAND_FINGER_LENGTH)
                    };
                    (r * t.cos(), r * t.sin())
                };
                x[(p, 0)] = px + gauss(*noise, &mut rng);
                x[(p, 1)] = py + gauss(*noise, &mut rng);
            }
            x
        }
    };
    Ok(x)
}
