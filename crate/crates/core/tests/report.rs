// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::fs;

use gradprobe::dataset::InflectionExample;
use gradprobe::probing::collect_sites;
use gradprobe::report::{
    emit_curves, emit_heatmap, emit_scatter, heatmap_rows, heatmap_svg, parse_scatter_csv, scatter_csv, scatter_points,
    scatter_svg, CurveSet, Glyph, HeatmapGroup,
};
use gradprobe::seq2seq::CurvePoint;

fn attr(tag: &str, name: &str) -> Option<String> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    Some(tag[start..].split('"').next()?.to_string())
}

fn tags<'a>(svg: &'a str, class: &'a str) -> impl Iterator<Item = &'a str> + 'a {
    svg.lines().filter(move |l| l.contains(&format!("class=\"{class}")))
}

#[test]
fn scatter_points_round_trip() {
    let (model, _, dev) = common::toy_trained(30);
    let points = scatter_points(&model, &dev, 3, 7).unwrap();
    assert_eq!(points.len(), collect_sites(&model, &dev).unwrap().len());
    for p in &points {
        let e = &dev[p.example];
        if !e.is_gradating() {
            assert_eq!(p.glyph, Glyph::Dot);
        } else {
            let ev = e.event().unwrap();
            assert_eq!(p.glyph, Glyph::Letter(ev.consonant(), ev.direction));
        }
    }
    assert_eq!(Glyph::from_code("K").unwrap().code(), "K");

    let csv = scatter_csv(&points, &dev);
    assert_eq!(parse_scatter_csv(&csv).unwrap(), points);
    let svg = scatter_svg(&points, 3, 7);
    let plotted: Vec<(f64, f64)> = tags(&svg, "point")
        .map(|t| (attr(t, "data-x").unwrap().parse().unwrap(), attr(t, "data-y").unwrap().parse().unwrap()))
        .collect();
    let expected: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    assert_eq!(plotted, expected);
    for g in Glyph::ALL {
        assert!(svg.contains("class=\"legend\""));
        assert!(svg.contains(&g.code()) || g == Glyph::Dot);
    }

    let dir = tempfile::tempdir().unwrap();
    let (c1, s1) = emit_scatter(&model, &dev, 3, 7, &dir.path().join("a/scatter")).unwrap();
    let (c2, s2) = emit_scatter(&model, &dev, 3, 7, &dir.path().join("b/scatter")).unwrap();
    assert_eq!(fs::read(&c1).unwrap(), fs::read(c2).unwrap());
    assert_eq!(fs::read(&s1).unwrap(), fs::read(s2).unwrap());
    assert!(scatter_points(&model, &dev, 0, model.trace_dim()).is_err());
}

#[test]
fn heatmap_rows_blocks_and_signs() {
    let (model, _, _) = common::toy_trained(30);
    let words = [("tukka", "tukan"), ("pappi", "papin"), ("katu", "kadun"), ("rike", "rikkeen"), ("kala", "kalan"), ("talo", "talon")];
    let examples: Vec<InflectionExample> = words.iter().map(|(n, g)| InflectionExample::new(*n, *g)).collect();
    let rows = heatmap_rows(&model, &examples, 5).unwrap();
    for (r, e) in rows.iter().zip(&examples) {
        assert_eq!(r.activations.len(), e.nominative.chars().count());
        assert_eq!(r.char_ok.len(), r.predicted.chars().count());
    }
    let groups: Vec<HeatmapGroup> = rows.iter().map(|r| r.group).collect();
    assert_eq!(
        groups,
        [
            HeatmapGroup::Quantitative,
            HeatmapGroup::Quantitative,
            HeatmapGroup::Qualitative,
            HeatmapGroup::Quantitative,
            HeatmapGroup::None,
            HeatmapGroup::None
        ]
    );

    let svg = heatmap_svg(&rows, 5);
    let blocks: Vec<String> = tags(&svg, "block").map(|t| attr(t, "data-group").unwrap()).collect();
    assert_eq!(blocks, ["quantitative", "qualitative", "none"]);
    let mut cells = 0;
    for t in tags(&svg, "cell") {
        let v: f64 = attr(t, "data-value").unwrap().parse().unwrap();
        let class = attr(t, "class").unwrap();
        let fill = attr(t, "fill").unwrap();
        if v > 0.0 {
            assert_eq!(class, "cell pos");
            assert!(fill.starts_with("rgb(255,"));
        } else if v < 0.0 {
            assert_eq!(class, "cell neg");
            assert!(fill.ends_with(",255)"));
        }
        cells += 1;
    }
    assert_eq!(cells, examples.iter().map(|e| e.nominative.chars().count()).sum::<usize>());
    for r in &rows {
        let row_tag = svg.lines().find(|l| l.contains(&format!("data-word=\"{}\"", r.word))).unwrap();
        assert_eq!(attr(row_tag, "data-correct").unwrap(), r.correct().to_string());
    }
    let struck = svg.matches("line-through").count();
    assert_eq!(struck, rows.iter().filter(|r| !r.correct()).count());

    let dir = tempfile::tempdir().unwrap();
    let (c, s) = emit_heatmap(&model, &examples, 5, &dir.path().join("heat")).unwrap();
    assert_eq!(fs::read_to_string(s).unwrap(), svg);
    let lines = fs::read_to_string(c).unwrap().lines().count();
    assert_eq!(lines, 1 + cells);
}

#[test]
fn curves_cover_their_data() {
    let curve: Vec<CurvePoint> = (1..=6).map(|i| CurvePoint { step: 500 * i, dev_accuracy: 80.0 + i as f64 }).collect();
    let set = CurveSet::training(&[("model-1".into(), curve)]);
    let x = set.x_range();
    assert_eq!((x.min, x.max), (500.0, 3000.0));
    let csv = set.to_csv();
    assert!(csv.lines().all(|l| l.split(',').count() == 2 + set.metrics.len()));
    let svg = set.to_svg();
    assert_eq!(tags(&svg, "point").count(), 6);
    for t in tags(&svg, "point") {
        let y: f64 = attr(t, "data-y").unwrap().parse().unwrap();
        assert!(set.y_range(0).contains(y));
    }

    let single = CurveSet::training(&[("one".into(), vec![CurvePoint { step: 500, dev_accuracy: 50.0 }])]);
    let dir = tempfile::tempdir().unwrap();
    let (c, s) = emit_curves(&single, &dir.path().join("single")).unwrap();
    assert!(fs::read_to_string(s).unwrap().contains("<polyline"));
    assert_eq!(fs::read_to_string(c).unwrap(), "series,step,dev_accuracy\none,500,50\n");
    assert!(!fs::read_to_string(dir.path().join("single.svg")).unwrap().contains("NaN"));

    let empty = CurveSet::training(&[]);
    assert!(emit_curves(&empty, &dir.path().join("empty")).is_err());
}
