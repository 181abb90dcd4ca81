use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family_tag;
use crate::error::{param, Result};
use crate::fields::{MergeSpec, SiteBoundary, SiteField};
use crate::graphs::{Family, LeveledDag};
use crate::hashing::derive_seed;
use crate::paths::count_large_paths;

/// Closed-form mean number of open large paths.
///
/// Hypercube (source and sink always open, `n - 1` interior vertices per
/// path): `n! * p_merge^n0 * p^(n - n0 - 1)`. n-ary tree (root always open,
/// `h` further vertices per path): `n^h * p_merge^h0 * p^(h - h0)`.
pub fn expected_open_paths(family: Family, p: f64, merge: Option<&MergeSpec>) -> Result<f64> {
    let dag = LeveledDag::new(family)?;
    if !(0.0..=1.0).contains(&p) {
        return param(format!("probability must lie in [0, 1], got {p}"));
    }
    if let Some(m) = merge {
        m.validate(&dag, p)?;
    }
    let (merged, p_merge) = merge.map_or((0, 1.0), |m| (m.size() as i32, m.p_merge));
    match family {
        Family::Hypercube { n } => {
            let paths: f64 = (1..=n).map(f64::from).product();
            Ok(paths * p_merge.powi(merged) * p.powi(n as i32 - merged - 1))
        }
        Family::NaryTree { n, h } => Ok((n as f64).powi(h as i32) * p_merge.powi(merged) * p.powi(h as i32 - merged)),
        other => param(format!("no closed-form path count for {other}")),
    }
}

/// The site field the moment formulas describe: hypercube source and sink
/// open, tree root open, everything else Bernoulli.
pub fn moment_site_field(dag: &LeveledDag, p: f64, seed: u64, merge: Option<MergeSpec>) -> Result<SiteField> {
    let boundary = match dag.family() {
        Family::Hypercube { .. } => SiteBoundary::SourceAndSinks,
        _ => SiteBoundary::Source,
    };
    SiteField::new(dag, p, seed, merge, boundary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub family: Family,
    pub p: f64,
    pub p_merge: Option<f64>,
    pub merge_size: u32,
    pub runs: u64,
    pub expected: f64,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    /// `Var(Y) / E[Y]^2` from the sample.
    pub relative_variance: f64,
    /// Delta-method standard error of `relative_variance`.
    pub relative_variance_se: f64,
}

/// Monte Carlo moments of the open-path count `Y` over `runs` site fields.
pub fn moment_study(dag: &LeveledDag, p: f64, merge: Option<MergeSpec>, runs: u64, seed: u64) -> Result<MomentReport> {
    if runs < 2 {
        return param("moment study needs at least two runs");
    }
    let expected = expected_open_paths(dag.family(), p, merge.as_ref())?;
    let tag = family_tag(dag.family());
    let counts: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let field = moment_site_field(dag, p, derive_seed(seed, tag, i), merge.clone())?;
            Ok(count_large_paths(dag, &field)?.count as f64)
        })
        .collect::<Result<_>>()?;
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let central = |k: i32| counts.iter().map(|y| (y - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let variance = m2 * n / (n - 1.0);
    let (relative_variance, relative_variance_se) = if mean > 0.0 {
        let r = variance / (mean * mean);
        let d_var = 1.0 / (mean * mean);
        let d_mean = -2.0 * variance / mean.powi(3);
        let var_r = d_var * d_var * (m4 - m2 * m2) / n + d_mean * d_mean * m2 / n + 2.0 * d_var * d_mean * m3 / n;
        (r, var_r.max(0.0).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(MomentReport {
        family: dag.family(),
        p,
        p_merge: merge.as_ref().map(|m| m.p_merge),
        merge_size: merge.as_ref().map_or(0, MergeSpec::size),
        runs,
        expected,
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        relative_variance,
        relative_variance_se,
    })
}

/// [`moment_study`] across sizes: `n` of the hypercube, or the arity of an
/// n-ary tree with the template's height.
pub fn variance_scaling_study(
    template: Family,
    sizes: &[u32],
    p: f64,
    merge: Option<MergeSpec>,
    runs: u64,
    seed: u64,
) -> Result<Vec<MomentReport>> {
    sizes
        .iter()
        .map(|&size| {
            let family = match template {
                Family::Hypercube { .. } => Family::Hypercube { n: size },
                Family::NaryTree { h, .. } => Family::NaryTree { n: size, h },
                other => return param(format!("variance study needs a finite family, got {other}")),
            };
            moment_study(&LeveledDag::new(family)?, p, merge.clone(), runs, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::StepRule;
    use crate::graphs::VertexKey;

    #[test]
    fn closed_forms() {
        let e = expected_open_paths(Family::Hypercube { n: 5 }, 0.5, None).unwrap();
        assert_eq!(e, 7.5);
        assert_eq!(expected_open_paths(Family::NaryTree { n: 3, h: 4 }, 1.0, None).unwrap(), 81.0);
        let m = MergeSpec::new([2, 4], 0.3);
        let t = expected_open_paths(Family::NaryTree { n: 3, h: 5 }, 0.5, Some(&m)).unwrap();
        assert!((t - 243.0 * 0.09 * 0.125).abs() < 1e-12);
        assert!((t - 2.734).abs() < 1e-3);
        assert!(expected_open_paths(Family::L2, 0.5, None).is_err());
        assert!(expected_open_paths(Family::Hypercube { n: 5 }, 0.5, Some(&MergeSpec::new([5], 0.2))).is_err());
    }

    #[test]
    fn q3_expectation_by_exhaustive_configurations() {
        // sum over all 2^6 open/closed patterns of the interior vertices
        let q = LeveledDag::hypercube(3).unwrap();
        let interior: Vec<u64> = (1..7).collect();
        let paths = crate::paths::enumerate_large_paths(&q, &SiteField::all_open(&q)).unwrap();
        let p: f64 = 0.5;
        let mut expectation = 0.0;
        for pattern in 0u32..64 {
            let open = |m: u64| m == 0 || m == 7 || pattern >> interior.iter().position(|&v| v == m).unwrap() & 1 == 1;
            let k = pattern.count_ones() as i32;
            let weight = p.powi(k) * (1.0 - p).powi(6 - k);
            let y = paths
                .iter()
                .filter(|path| path.iter().all(|v| matches!(v, VertexKey::Mask(m) if open(*m))))
                .count();
            expectation += weight * y as f64;
        }
        assert!((expectation - 1.5).abs() < 1e-12);
        assert_eq!(expected_open_paths(Family::Hypercube { n: 3 }, 0.5, None).unwrap(), 1.5);
    }

    #[test]
    fn certain_sites_have_no_variance() {
        for family in [Family::Hypercube { n: 5 }, Family::NaryTree { n: 3, h: 3 }] {
            let r = moment_study(&LeveledDag::new(family).unwrap(), 1.0, None, 50, 1).unwrap();
            assert_eq!(r.variance, 0.0);
            assert_eq!(r.mean, r.expected);
        }
    }

    #[test]
    fn moment_fields_pin_the_right_vertices() {
        let q = LeveledDag::hypercube(4).unwrap();
        let f = moment_site_field(&q, 0.0, 3, None).unwrap();
        assert!(f.is_open(&VertexKey::Mask(0)) && f.is_open(&VertexKey::Mask(15)));
        let t = LeveledDag::nary_tree(2, 2).unwrap();
        let g = moment_site_field(&t, 0.0, 3, None).unwrap();
        assert!(g.is_open(&t.source()));
        assert!(g.label_of(&t, &VertexKey::Path(vec![0, 1])).is_none());
    }
}
