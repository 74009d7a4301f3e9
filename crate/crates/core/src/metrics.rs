//! Pareto dominance, nondominated filtering, 2-D hypervolume and IGD.
//! Both objectives are minimised.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::objectives::ObjectiveValues;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub f1: f64,
    pub f2: f64,
    pub tag: String,
}

impl FrontPoint {
    pub fn new(tag: impl Into<String>, f1: f64, f2: f64) -> Self {
        Self {
            f1,
            f2,
            tag: tag.into(),
        }
    }

    pub fn values(&self) -> ObjectiveValues {
        ObjectiveValues { f1: self.f1, f2: self.f2 }
    }
}

pub fn dominates(a: &FrontPoint, b: &FrontPoint) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

/// Nondominated subset in input order; exact duplicates keep their first
/// occurrence.
pub fn pareto_filter(set: &[FrontPoint]) -> Vec<FrontPoint> {
    let mut out: Vec<FrontPoint> = Vec::new();
    for (i, p) in set.iter().enumerate() {
        let dominated = set.iter().any(|q| dominates(q, p));
        let duplicate = set[..i].iter().any(|q| q.f1 == p.f1 && q.f2 == p.f2);
        if !dominated && !duplicate {
            out.push(p.clone());
        }
    }
    out
}

/// Whether no point of `set` dominates another.
pub fn mutually_nondominated(set: &[FrontPoint]) -> bool {
    set.iter()
        .all(|p| set.iter().all(|q| !dominates(q, p)))
}

/// Area dominated by `front` inside the box bounded by `reference`. Points that
/// do not strictly dominate the reference contribute nothing.
pub fn hypervolume_2d(front: &[FrontPoint], reference: (f64, f64)) -> f64 {
    let (r1, r2) = reference;
    let inside: Vec<FrontPoint> = front
        .iter()
        .filter(|p| p.f1 < r1 && p.f2 < r2)
        .cloned()
        .collect();
    let mut pts = pareto_filter(&inside);
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1));
    let mut area = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let next = pts.get(i + 1).map_or(r1, |q| q.f1);
        area += (next - p.f1) * (r2 - p.f2);
    }
    area
}

/// Componentwise maximum over all points, scaled by 1.1.
pub fn default_reference(fronts: &[&[FrontPoint]]) -> Option<(f64, f64)> {
    let all = fronts.iter().flat_map(|f| f.iter());
    let (mut m1, mut m2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for p in all {
        m1 = m1.max(p.f1);
        m2 = m2.max(p.f2);
        any = true;
    }
    any.then_some((m1 * 1.1, m2 * 1.1))
}

/// Mean over `reference` of the Euclidean distance to the nearest front point.
pub fn igd(front: &[FrontPoint], reference: &[ObjectiveValues]) -> Result<f64> {
    if front.is_empty() || reference.is_empty() {
        return Err(Error::invalid("igd needs a nonempty front and reference"));
    }
    let total: f64 = reference
        .iter()
        .map(|r| {
            front
                .iter()
                .map(|p| (p.f1 - r.f1).hypot(p.f2 - r.f2))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference.len() as f64)
}

/// Formats a value with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn front_csv(front: &[FrontPoint]) -> String {
    let mut s = String::from("tag,f1,f2\n");
    for p in front {
        let _ = writeln!(s, "{},{},{}", p.tag, fmt_f64(p.f1), fmt_f64(p.f2));
    }
    s
}

pub fn export_front(front: &[FrontPoint], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, front_csv(front))
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Parses the output of [`front_csv`].
pub fn parse_front_csv(text: &str) -> Result<Vec<FrontPoint>> {
    let mut lines = text.lines();
    if lines.next() != Some("tag,f1,f2") {
        return Err(Error::invalid("front csv must start with `tag,f1,f2`"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut it = l.rsplitn(3, ',');
            let (f2, f1, tag) = (it.next(), it.next(), it.next());
            match (tag, f1.and_then(|v| v.parse().ok()), f2.and_then(|v| v.parse().ok())) {
                (Some(tag), Some(f1), Some(f2)) => Ok(FrontPoint::new(tag, f1, f2)),
                _ => Err(Error::invalid(format!("bad front row `{l}`"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(f1: f64, f2: f64) -> FrontPoint {
        FrontPoint::new("p", f1, f2)
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&fp(1.0, 1.0), &fp(2.0, 2.0)));
        assert!(!dominates(&fp(1.0, 2.0), &fp(2.0, 1.0)));
        assert!(!dominates(&fp(2.0, 1.0), &fp(1.0, 2.0)));
        assert!(!dominates(&fp(1.0, 1.0), &fp(1.0, 1.0)));
    }

    #[test]
    fn filter_examples() {
        let f = pareto_filter(&[fp(1.0, 2.0), fp(2.0, 1.0), fp(2.0, 2.0)]);
        assert_eq!(f, vec![fp(1.0, 2.0), fp(2.0, 1.0)]);
        assert_eq!(pareto_filter(&[fp(3.0, 3.0)]), vec![fp(3.0, 3.0)]);
        assert_eq!(pareto_filter(&[fp(1.0, 1.0), fp(1.0, 1.0)]).len(), 1);
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume_2d(&[fp(0.0, 0.0)], (1.0, 1.0)), 1.0);
        assert_eq!(hypervolume_2d(&[fp(1.0, 2.0), fp(2.0, 1.0)], (3.0, 3.0)), 3.0);
        assert_eq!(hypervolume_2d(&[fp(4.0, 0.0)], (3.0, 3.0)), 0.0);
    }

    #[test]
    fn igd_examples() {
        let r = [ObjectiveValues { f1: 0.0, f2: 1.0 }, ObjectiveValues { f1: 1.0, f2: 0.0 }];
        let v = igd(&[fp(0.0, 1.0)], &r).unwrap();
        assert!((v - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(igd(&[fp(0.0, 1.0), fp(1.0, 0.0)], &r).unwrap(), 0.0);
        assert!(igd(&[], &r).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        assert_eq!(front_csv(&[]), "tag,f1,f2\n");
        let pts = vec![
            FrontPoint::new("a", 0.1, 1.0 / 3.0),
            FrontPoint::new("b", 1e-300, -2.5e17),
        ];
        let text = front_csv(&pts);
        assert_eq!(text, front_csv(&pts));
        assert_eq!(parse_front_csv(&text).unwrap(), pts);
    }

    fn front() -> impl Strategy<Value = Vec<FrontPoint>> {
        proptest::collection::vec((0f64..1.0, 0f64..1.0), 1..8)
            .prop_map(|v| v.into_iter().map(|(a, b)| fp(a, b)).collect())
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(f in front()) {
            let once = pareto_filter(&f);
            prop_assert_eq!(pareto_filter(&once), once.clone());
            prop_assert!(mutually_nondominated(&once));
        }

        #[test]
        fn hypervolume_ignores_dominated_points(f in front()) {
            let r = (1.2, 1.2);
            let a = hypervolume_2d(&f, r);
            let b = hypervolume_2d(&pareto_filter(&f), r);
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn hypervolume_is_monotone(f in front(), x in 0f64..1.0, y in 0f64..1.0) {
            let r = (1.2, 1.2);
            let mut g = f.clone();
            g.push(fp(x, y));
            prop_assert!(hypervolume_2d(&g, r) >= hypervolume_2d(&f, r) - 1e-15);
        }

        #[test]
        fn igd_never_increases_with_more_points(f in front(), x in 0f64..1.0, y in 0f64..1.0) {
            let r: Vec<ObjectiveValues> = (0..11).map(|i| {
                let t = i as f64 / 10.0;
                ObjectiveValues { f1: t, f2: 1.0 - t }
            }).collect();
            let mut g = f.clone();
            g.push(fp(x, y));
            prop_assert!(igd(&g, &r).unwrap() <= igd(&f, &r).unwrap());
        }

        #[test]
        fn igd_is_zero_iff_reference_covered(f in front()) {
            let r: Vec<ObjectiveValues> = f.iter().map(|p| p.values()).collect();
            prop_assert!(igd(&f, &r).unwrap() < 1e-12);
            let off = vec![ObjectiveValues { f1: 2.0, f2: 2.0 }];
            prop_assert!(igd(&f, &off).unwrap() > 1e-12);
        }
    }
}
