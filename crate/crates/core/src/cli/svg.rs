//! Static SVG drawings of the Poincaré disk.

use std::fmt::Write as _;

use crate::embed::{EmbeddingTable, LabelHierarchy};

/// Points closer than this to a common line through the origin are joined by
/// a straight segment.
const COLLINEAR_EPS: f64 = 1e-9;
const ORTHOGONALITY_TOL: f64 = 1e-6;

/// Shape of the hyperbolic geodesic between two disk points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geodesic {
    /// Segment of a diameter.
    Line,
    /// Arc of the circle centred at `center` with `radius`, orthogonal to
    /// the unit circle. `sweep` is the SVG sweep flag for drawing from the
    /// first point to the second.
    Arc { center: [f64; 2], radius: f64, sweep: bool },
}

/// Construct the geodesic from `u` to `v`.
///
/// # Panics
/// When the computed circle misses the orthogonality or incidence checks by
/// more than 1e-6.
pub fn geodesic(u: [f64; 2], v: [f64; 2]) -> Geodesic {
    let cross = u[0] * v[1] - u[1] * v[0];
    if cross.abs() < COLLINEAR_EPS {
        return Geodesic::Line;
    }
    // 2 c.u = |u|^2 + 1 and 2 c.v = |v|^2 + 1
    let (nu, nv) = (u[0] * u[0] + u[1] * u[1], v[0] * v[0] + v[1] * v[1]);
    let (ru, rv) = ((nu + 1.0) / 2.0, (nv + 1.0) / 2.0);
    let center = [(ru * v[1] - rv * u[1]) / cross, (rv * u[0] - ru * v[0]) / cross];
    let c2 = center[0] * center[0] + center[1] * center[1];
    let radius = (c2 - 1.0).sqrt();
    let residual = (c2 - 1.0 - radius * radius).abs();
    let on_circle = |p: [f64; 2]| (((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius).abs();
    let scale = radius.max(1.0);
    assert!(
        residual <= ORTHOGONALITY_TOL * scale * scale
            && on_circle(u) <= ORTHOGONALITY_TOL * scale
            && on_circle(v) <= ORTHOGONALITY_TOL * scale,
        "geodesic construction failed for {u:?} -> {v:?}"
    );
    let (a, b) = (
        [u[0] - center[0], u[1] - center[1]],
        [v[0] - center[0], v[1] - center[1]],
    );
    Geodesic::Arc {
        center,
        radius,
        sweep: a[0] * b[1] - a[1] * b[0] > 0.0,
    }
}

/// Angle between the geodesic circle and the unit circle at their
/// intersections, as `|cos|` of the angle between normals. Zero means
/// orthogonal.
pub fn orthogonality_residual(g: &Geodesic) -> f64 {
    match *g {
        Geodesic::Line => 0.0,
        Geodesic::Arc { center, radius, .. } => {
            let c2 = center[0] * center[0] + center[1] * center[1];
            // at an intersection x: cos = x.(x - c) / r = (1 - x.c) / r, and x.c = (1 + |c|^2 - r^2) / 2
            ((1.0 - (1.0 + c2 - radius * radius) / 2.0) / radius).abs()
        }
    }
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Render the first 2-D factor of every row. Ids present in `hierarchy` are
/// drawn as labelled circles with geodesics along its edges; other ids are
/// drawn as dots. Without a hierarchy every row is a dot unless
/// `rows_are_labels` is set.
///
/// # Panics
/// When the table's ball dimension is not 2.
pub fn render_svg(table: &EmbeddingTable, hierarchy: Option<&LabelHierarchy>, rows_are_labels: bool) -> String {
    assert_eq!(table.ball_dim, 2, "only 2-D balls can be drawn");
    // y is flipped so the picture has the usual orientation
    let point = |i: usize| {
        let r = table.row(i);
        [r[0], -r[1]]
    };
    let mut s = String::new();
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.05 -1.05 2.1 2.1\" width=\"600\" height=\"600\">\n",
    );
    s.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"black\" stroke-width=\"0.005\"/>\n");

    if let Some(h) = hierarchy {
        s.push_str("<g fill=\"none\" stroke=\"#888\" stroke-width=\"0.003\">\n");
        for &(p, c) in h.edges() {
            let (Some(pi), Some(ci)) = (table.ids.get(h.labels().word(p)), table.ids.get(h.labels().word(c))) else {
                continue;
            };
            let (u, v) = (point(pi), point(ci));
            match geodesic(u, v) {
                Geodesic::Line => writeln!(
                    s,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                    fmt(u[0]),
                    fmt(u[1]),
                    fmt(v[0]),
                    fmt(v[1])
                )
                .unwrap(),
                Geodesic::Arc { radius, sweep, .. } => writeln!(
                    s,
                    "<path d=\"M {} {} A {} {} 0 0 {} {} {}\"/>",
                    fmt(u[0]),
                    fmt(u[1]),
                    fmt(radius),
                    fmt(radius),
                    u8::from(sweep),
                    fmt(v[0]),
                    fmt(v[1])
                )
                .unwrap(),
            }
        }
        s.push_str("</g>\n");
    }

    for i in 0..table.len() {
        let id = table.ids.word(i);
        let p = point(i);
        let is_label = hierarchy.map_or(rows_are_labels, |h| h.label_index(id).is_some());
        if is_label {
            writeln!(
                s,
                "<circle cx=\"{}\" cy=\"{}\" r=\"0.02\" fill=\"#1f77b4\"><title>{}</title></circle>",
                fmt(p[0]),
                fmt(p[1]),
                escape(id)
            )
            .unwrap();
        } else {
            writeln!(
                s,
                "<circle cx=\"{}\" cy=\"{}\" r=\"0.006\" fill=\"#d62728\"><title>{}</title></circle>",
                fmt(p[0]),
                fmt(p[1]),
                escape(id)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingRole, Vocabulary};

    #[test]
    fn diametric_points_give_a_line() {
        assert_eq!(geodesic([0.5, 0.0], [-0.5, 0.0]), Geodesic::Line);
        assert_eq!(geodesic([0.0, 0.0], [0.3, 0.4]), Geodesic::Line);
        assert_eq!(geodesic([0.1, 0.2], [0.3, 0.6]), Geodesic::Line);
    }

    #[test]
    fn generic_arcs_are_orthogonal() {
        let pairs = [
            ([0.5, 0.1], [-0.2, 0.7]),
            ([0.9, 0.0], [0.0, 0.9]),
            ([0.01, 0.02], [-0.3, 0.05]),
            ([0.99, 0.01], [0.98, -0.1]),
        ];
        for (u, v) in pairs {
            let g = geodesic(u, v);
            let Geodesic::Arc { center, radius, .. } = g else {
                panic!("expected an arc");
            };
            assert!(orthogonality_residual(&g) < 1e-6);
            for p in [u, v] {
                let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                assert!((d - radius).abs() < 1e-9 * radius.max(1.0));
            }
        }
    }

    #[test]
    fn sweep_follows_the_minor_arc() {
        // centre (1.25, 1.25); offsets (-0.75, -1.25) and (-1.25, -0.75) have negative cross product
        let Geodesic::Arc { sweep, .. } = geodesic([0.5, 0.0], [0.0, 0.5]) else {
            panic!()
        };
        assert!(!sweep);
        let Geodesic::Arc { sweep, .. } = geodesic([0.0, 0.5], [0.5, 0.0]) else {
            panic!()
        };
        assert!(sweep);
    }

    #[test]
    fn empty_table_is_boundary_only() {
        let t = EmbeddingTable::from_values(Vocabulary::new(), 1, 2, EmbeddingRole::Label, vec![]);
        let svg = render_svg(&t, None, true);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert_eq!(doc.root_element().attribute("viewBox"), Some("-1.05 -1.05 2.1 2.1"));
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 1);
    }

    #[test]
    fn hierarchy_drawing() {
        let h = LabelHierarchy::from_edges([("r", "a"), ("r", "b")]).unwrap();
        let ids = Vocabulary::from_words(["r", "a", "b", "w"]);
        let t = EmbeddingTable::from_values(
            ids,
            1,
            2,
            EmbeddingRole::Label,
            vec![0.0, 0.0, 0.5, 0.2, -0.4, 0.6, 0.1, 0.1],
        );
        let svg = render_svg(&t, Some(&h), false);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("line")).count(), 2);
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 5);
    }
}
