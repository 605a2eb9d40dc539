//! Ready-made charts, atlases, and invariant quantities.

use std::f64::consts::PI;

use super::chart::{Atlas, Chart, ChartCoords};
use super::checks::InvariantQuantity;
use super::FoliationError;
use crate::groups::GroupFamily;
use crate::taskspace::TaskFamily;

/// Builds a chart that simply partitions the ambient coordinates into
/// transverse and leaf index sets.
fn rectified_chart(
    id: &str,
    d: usize,
    transverse_idx: Vec<usize>,
    region: Box<dyn Fn(&[f64]) -> bool + Send + Sync>,
    sample_box: Vec<(f64, f64)>,
) -> Chart {
    let leaf_idx: Vec<usize> = (0..d).filter(|i| !transverse_idx.contains(i)).collect();
    let m = transverse_idx.len();
    let n = leaf_idx.len();
    let (t_fwd, l_fwd) = (transverse_idx.clone(), leaf_idx.clone());
    let forward = move |p: &[f64]| ChartCoords {
        transverse: t_fwd.iter().map(|&i| p[i]).collect(),
        leaf: l_fwd.iter().map(|&i| p[i]).collect(),
    };
    let backward = move |x: &[f64], y: &[f64]| {
        let mut p = vec![0.0; d];
        for (k, &i) in transverse_idx.iter().enumerate() {
            p[i] = x[k];
        }
        for (k, &i) in leaf_idx.iter().enumerate() {
            p[i] = y[k];
        }
        p
    };
    Chart::new(id, d, m, n, region, Box::new(forward), Box::new(backward), sample_box)
        .expect("catalog chart dimensions are consistent")
}

/// Polar coordinates on the punctured plane: transverse = radius, leaf =
/// angle, so the leaves are concentric circles (the rotation orbits).
///
/// Two charts cover the puncture: `polar+` takes angles in `(-π, π)` and
/// omits the non-positive x-axis, `polar-` takes `(0, 2π)` and omits the
/// non-negative x-axis.
pub fn polar_atlas() -> Atlas {
    let sample_box = vec![(-2.0, 2.0), (-2.0, 2.0)];
    let plus = Chart::new(
        "polar+",
        2,
        1,
        1,
        Box::new(|p: &[f64]| {
            (p[0] != 0.0 || p[1] != 0.0) && !(p[1] == 0.0 && p[0] < 0.0)
        }),
        Box::new(|p: &[f64]| {
            let r = p[0].hypot(p[1]);
            ChartCoords {
                transverse: vec![r],
                leaf: vec![p[1].atan2(p[0])],
            }
        }),
        Box::new(|x: &[f64], y: &[f64]| vec![x[0] * y[0].cos(), x[0] * y[0].sin()]),
        sample_box.clone(),
    )
    .expect("polar+ chart is well-formed");
    let minus = Chart::new(
        "polar-",
        2,
        1,
        1,
        Box::new(|p: &[f64]| {
            (p[0] != 0.0 || p[1] != 0.0) && !(p[1] == 0.0 && p[0] > 0.0)
        }),
        Box::new(|p: &[f64]| {
            let r = p[0].hypot(p[1]);
            let t = p[1].atan2(p[0]);
            let angle = if t <= 0.0 { t + 2.0 * PI } else { t };
            ChartCoords {
                transverse: vec![r],
                leaf: vec![angle],
            }
        }),
        Box::new(|x: &[f64], y: &[f64]| vec![x[0] * y[0].cos(), x[0] * y[0].sin()]),
        sample_box,
    )
    .expect("polar- chart is well-formed");
    Atlas::new("polar", vec![plus, minus]).expect("polar atlas is non-empty")
}

/// A chart pair that deliberately violates the foliated-transition
/// condition: the second chart shears the transverse coordinate by
/// `0.1 × leaf`, so the cross-derivative is exactly 0.1 everywhere.
pub fn defect_chart_pair() -> (Chart, Chart) {
    let sample_box = vec![(-2.0, 2.0), (-2.0, 2.0)];
    let base = rectified_chart(
        "defect-base",
        2,
        vec![0],
        Box::new(|_: &[f64]| true),
        sample_box.clone(),
    );
    let skew = Chart::new(
        "defect-skew",
        2,
        1,
        1,
        Box::new(|_: &[f64]| true),
        Box::new(|p: &[f64]| ChartCoords {
            transverse: vec![p[0] + 0.1 * p[1]],
            leaf: vec![p[1]],
        }),
        Box::new(|x: &[f64], y: &[f64]| vec![x[0] - 0.1 * y[0], y[0]]),
        sample_box,
    )
    .expect("skew chart is well-formed");
    (base, skew)
}

/// Atlas whose leaves are the orbits of the group's identity component
/// acting on the task family's coordinate space.
///
/// Catalog entries:
/// * translation on sinusoids: leaves are vertical-offset lines, transverse
///   coordinates `(A, ω, φ)`;
/// * affine (positive scale) on sinusoids with `A > 0`: leaves are the
///   2-parameter `(A, c)` sheets, transverse `(ω, φ)`;
/// * translation on polynomials: leaves move `c₀`, transverse
///   `(c₁, …, c_{d−1})`;
/// * affine on polynomials with `c₁ ≠ 0`: leaves move `(c₀, c₁)` jointly
///   with all other coefficients scaled along, transverse = the ratios
///   `cᵢ/c₁`; one chart per sign of `c₁`.
///
/// Affine maps with negative scale swap the two sinusoid phase branches and
/// the two polynomial charts; orbits of the full group are unions of leaves.
pub fn orbit_foliation(
    group: GroupFamily,
    family: &TaskFamily,
) -> Result<Atlas, FoliationError> {
    match (group, family) {
        (GroupFamily::Translation, TaskFamily::Sinusoid { .. }) => {
            let chart = rectified_chart(
                "sinusoid-offset",
                4,
                vec![0, 1, 2],
                Box::new(|p: &[f64]| p[0] >= 0.0),
                vec![(0.2, 3.0), (0.3, 3.0), (-3.0, 3.0), (-3.0, 3.0)],
            );
            Atlas::new("sinusoid/translation", vec![chart])
        }
        (GroupFamily::Affine, TaskFamily::Sinusoid { .. }) => {
            let chart = rectified_chart(
                "sinusoid-scale-offset",
                4,
                vec![1, 2],
                Box::new(|p: &[f64]| p[0] > 0.0),
                vec![(0.2, 3.0), (0.3, 3.0), (-3.0, 3.0), (-3.0, 3.0)],
            );
            Atlas::new("sinusoid/affine", vec![chart])
        }
        (GroupFamily::Translation, TaskFamily::PolyBasis { dim, .. }) => {
            let d = *dim;
            let chart = rectified_chart(
                "poly-offset",
                d,
                (1..d).collect(),
                Box::new(|_: &[f64]| true),
                vec![(-3.0, 3.0); d],
            );
            Atlas::new("poly/translation", vec![chart])
        }
        (GroupFamily::Affine, TaskFamily::PolyBasis { dim, .. }) => {
            let d = *dim;
            if d < 2 {
                // affine maps act transitively on constants: one leaf, no
                // transverse coordinates
                let chart = rectified_chart(
                    "poly1-scale-offset",
                    1,
                    vec![],
                    Box::new(|_: &[f64]| true),
                    vec![(-3.0, 3.0)],
                );
                return Atlas::new("poly/affine", vec![chart]);
            }
            let make = |id: &str, positive: bool| {
                let mut sample_box = vec![(-3.0, 3.0); d];
                sample_box[1] = if positive { (0.2, 3.0) } else { (-3.0, -0.2) };
                Chart::new(
                    id,
                    d,
                    d - 2,
                    2,
                    Box::new(move |p: &[f64]| if positive { p[1] > 0.0 } else { p[1] < 0.0 }),
                    Box::new(move |p: &[f64]| ChartCoords {
                        transverse: (2..d).map(|i| p[i] / p[1]).collect(),
                        leaf: vec![p[0], p[1]],
                    }),
                    Box::new(move |x: &[f64], y: &[f64]| {
                        let mut p = vec![0.0; d];
                        p[0] = y[0];
                        p[1] = y[1];
                        for i in 2..d {
                            p[i] = x[i - 2] * y[1];
                        }
                        p
                    }),
                    sample_box,
                )
                .expect("polynomial scale chart is well-formed")
            };
            Atlas::new(
                "poly/affine",
                vec![make("poly-scale+", true), make("poly-scale-", false)],
            )
        }
        (GroupFamily::Rotation2D, other) => Err(FoliationError::NoCatalogAtlas {
            group,
            family: other.name().to_string(),
        }),
    }
}

/// Distance from the origin; constant on rotation orbits.
pub fn radius_quantity() -> InvariantQuantity {
    InvariantQuantity::new("radius", 2, 1, Box::new(|p: &[f64]| vec![p[0].hypot(p[1])]))
}

/// `(ω, φ)` of a sinusoid; constant under vertical shifts and positive
/// rescalings. Its dimension 2 equals `d − n = 4 − 2` for the affine
/// foliation.
pub fn sinusoid_shape_quantity() -> InvariantQuantity {
    InvariantQuantity::new(
        "sinusoid-shape",
        4,
        2,
        Box::new(|p: &[f64]| vec![p[1], p[2]]),
    )
}

/// `(A, ω, φ)` of a sinusoid; constant under vertical shifts. Dimension 3
/// equals `d − n = 4 − 1` for the translation foliation.
pub fn sinusoid_profile_quantity() -> InvariantQuantity {
    InvariantQuantity::new(
        "sinusoid-profile",
        4,
        3,
        Box::new(|p: &[f64]| vec![p[0], p[1], p[2]]),
    )
}

/// All polynomial coefficients above the constant; constant under vertical
/// shifts. Dimension `d − 1`.
pub fn poly_tail_quantity(dim: usize) -> InvariantQuantity {
    assert!(dim >= 1);
    InvariantQuantity::new(
        format!("poly{dim}-tail"),
        dim,
        dim - 1,
        Box::new(|p: &[f64]| p[1..].to_vec()),
    )
}

/// Coefficient ratios `cᵢ/c₁` for `i ≥ 2`; constant under every affine
/// output map (shift moves only `c₀`, scale cancels). Dimension `d − 2`,
/// defined where `c₁ ≠ 0`.
pub fn poly_ratios_quantity(dim: usize) -> InvariantQuantity {
    assert!(dim >= 2);
    InvariantQuantity::new(
        format!("poly{dim}-ratios"),
        dim,
        dim - 2,
        Box::new(|p: &[f64]| (2..p.len()).map(|i| p[i] / p[1]).collect()),
    )
}
