use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::synth::random_table;
use crate::table::{parse_table, TableFormat};

fn csv(src: &str) -> DataTable {
    parse_table(src.as_bytes(), TableFormat::Csv).unwrap()
}

fn chart(t: &DataTable, ty: ChartType) -> RenderedChart {
    render(t, &ChartSpec::for_table(t, ty, 640, 480, 11)).unwrap()
}

fn mark<'a>(c: &'a RenderedChart, cat: &str) -> &'a MarkAnnotation {
    c.marks().iter().find(|m| m.category == cat).unwrap()
}

#[test]
fn bar_heights_follow_values() {
    let t = csv("k,v\nA,10\nB,20");
    let c = chart(&t, ChartType::Bar);
    let (a, b) = (mark(&c, "A"), mark(&c, "B"));
    // axis [0, 22] widens to nice ticks [0, 25]; both bars stand on y(0)
    assert!((b.bbox.h - 2.0 * a.bbox.h).abs() <= 1.0);
    assert!((a.bbox.bottom() - b.bbox.bottom()).abs() < 1e-9);
    // the raster agrees with the annotation to within a pixel
    let (cx, _) = b.bbox.center();
    let color = c.image.get(cx as u32, (b.bbox.y + 2.0) as u32);
    assert_ne!(color, c.image.get(cx as u32, (b.bbox.y - 3.0) as u32));
}

#[test]
fn pie_sweeps_are_proportional() {
    let t = csv("k,v\nA,25\nB,75");
    let c = chart(&t, ChartType::Pie);
    let sweep = |cat| match mark(&c, cat).geometry {
        MarkGeometry::Wedge { sweep_deg, .. } => sweep_deg,
        _ => unreachable!(),
    };
    assert_eq!(sweep("A"), 90.0);
    assert_eq!(sweep("B"), 270.0);
    assert_eq!(extract_value_from_mark(&c, mark(&c, "B")).unwrap(), 75.0);
}

#[test]
fn replay_is_byte_identical() {
    let t = csv("k,a,b\nA,1,2\nB,3,4\nC,5,1");
    let spec = ChartSpec::for_table(&t, ChartType::GroupedBar, 400, 300, 99);
    let x = render(&t, &spec).unwrap();
    let y = render(&t, &spec).unwrap();
    assert_eq!(x.image.encode_png(), y.image.encode_png());
    assert_eq!(x.annotations, y.annotations);
}

#[test]
fn extraction_from_hand_built_axis() {
    // 0..100 axis over 400px: a 200px bar is worth 50
    let spec = ChartSpec::for_table(&csv("k,v\nA,50"), ChartType::Bar, 640, 480, 0);
    let tick = |v: &str, y: f64| TextAnnotation {
        content: v.into(),
        bbox: BBox::new(10.0, y - 4.0, 24.0, 8.0),
        role: TextRole::YTick,
    };
    let m = MarkAnnotation {
        series: "v".into(),
        category: "A".into(),
        value: 50.0,
        bbox: BBox::new(100.0, 250.0, 40.0, 200.0),
        geometry: MarkGeometry::Bar,
    };
    let zero = MarkAnnotation {
        bbox: BBox::new(200.0, 450.0, 40.0, 0.0),
        category: "B".into(),
        value: 0.0,
        ..m.clone()
    };
    let c = RenderedChart {
        image: RgbaImage::new(640, 480, [255; 4]),
        annotations: ChartAnnotations {
            source_table_id: String::new(),
            spec,
            marks: vec![m.clone(), zero.clone()],
            texts: vec![tick("100", 50.0), tick("50", 250.0), tick("0", 450.0)],
            pie_total: None,
        },
    };
    assert!((extract_value_from_mark(&c, &m).unwrap() - 50.0).abs() < 1e-12);
    assert_eq!(extract_value_from_mark(&c, &zero).unwrap(), 0.0);

    let stranger = MarkAnnotation { value: 1.0, ..m };
    assert_eq!(extract_value_from_mark(&c, &stranger), Err(RenderError::MarkNotInChart));
}

#[test]
fn zero_bar_reads_zero() {
    let t = csv("k,v\nA,0\nB,7");
    let c = chart(&t, ChartType::Bar);
    let a = mark(&c, "A");
    assert_eq!(a.bbox.h, 0.0);
    assert_eq!(extract_value_from_mark(&c, a).unwrap(), 0.0);
}

#[test]
fn negative_bars_hang_below_zero() {
    let t = csv("k,v\nA,-5\nB,10");
    let c = chart(&t, ChartType::Bar);
    assert!((extract_value_from_mark(&c, mark(&c, "A")).unwrap() + 5.0).abs() < 1e-9);
    assert!(mark(&c, "A").bbox.y > mark(&c, "B").bbox.y);
}

#[test]
fn pie_rejects_negatives() {
    let t = csv("k,v\nA,-1\nB,3");
    let spec = ChartSpec::for_table(&t, ChartType::Pie, 400, 300, 0);
    assert!(matches!(render(&t, &spec), Err(RenderError::UnsupportedCombination(_))));
}

#[test]
fn spec_errors() {
    let t = csv("k,v\nA,1\nB,3");
    let small = ChartSpec::for_table(&t, ChartType::Bar, 100, 300, 0);
    assert!(matches!(render(&t, &small), Err(RenderError::InvalidSpec(_))));

    let long = t.clone().with_title("x".repeat(200));
    let spec = ChartSpec::for_table(&long, ChartType::Bar, 200, 200, 0);
    assert!(matches!(render(&long, &spec), Err(RenderError::RenderOverflow(_))));

    let wide = csv("k,v\nAVeryLongCategoryName,1\nAnotherVeryLongCategory,3\nThird one here too,4");
    let spec = ChartSpec::for_table(&wide, ChartType::Bar, 200, 200, 0);
    assert!(matches!(render(&wide, &spec), Err(RenderError::RenderOverflow(_))));

    let mut bad_legend = ChartSpec::for_table(&t, ChartType::Bar, 300, 300, 0);
    bad_legend.legend = vec!["v".into()];
    assert!(matches!(render(&t, &bad_legend), Err(RenderError::InvalidSpec(_))));
}

#[test]
fn fitted_render_widens_until_labels_fit() {
    let wide = csv("k,v\nAVeryLongCategoryName,1\nAnotherVeryLongCategory,3\nThird one here too,4");
    let spec = ChartSpec::for_table(&wide, ChartType::Bar, 200, 200, 0);
    let c = render_fitted(&wide, &spec).unwrap();
    assert!(c.width() > 200 && c.width() <= 800);
    assert_eq!(c.spec().width_px, c.width());

    let long = csv("k,v\nA,1\nB,3").with_title("x".repeat(200));
    let spec = ChartSpec::for_table(&long, ChartType::Bar, 200, 200, 0);
    assert!(matches!(render_fitted(&long, &spec), Err(RenderError::RenderOverflow(_))));
}

#[test]
fn sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = csv("k,v\nA,3\nB,4");
    let c = chart(&t, ChartType::Line);
    let path = dir.path().join("c.png");
    c.save(&path).unwrap();
    assert!(dir.path().join("c.png.anno.json").exists());
    assert_eq!(RenderedChart::load(&path).unwrap(), c);
}

#[test]
fn random_charts_round_trip_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..70 {
        let ty = ChartType::ALL[i % 7];
        let t = random_table(&mut rng, ty);
        let spec = ChartSpec::for_table(&t, ty, 640, 480, i as u64).with_data_labels(i % 2 == 0);
        let c = render(&t, &spec).unwrap();
        assert_eq!(c.marks().len(), t.numeric_cell_count());
        for m in c.marks() {
            assert!(m.bbox.within(640.0, 480.0), "{ty}: {m:?}");
            assert!(m.bbox.area() > 0.0 || m.value == 0.0);
            assert_eq!(t.value(&m.series, &m.category), Some(m.value));
            let got = extract_value_from_mark(&c, m).unwrap();
            assert!((got - m.value).abs() / m.value.abs().max(REL_EPS) <= 0.02, "{ty} {got} vs {}", m.value);
        }
        for tx in c.texts() {
            assert!(tx.bbox.within(640.0, 480.0), "{tx:?}");
            assert!(!tx.content.is_empty());
        }
        for (i, a) in c.texts().iter().enumerate() {
            assert!(c.texts()[..i].iter().all(|b| b.bbox != a.bbox));
        }
        for name in &spec.legend {
            assert!(c.texts().iter().any(|x| x.role == TextRole::LegendEntry && &x.content == name));
        }
    }
}

#[test]
fn bar_extent_is_monotone() {
    let t = csv("k,v\nA,1\nB,2\nC,2.5\nD,9\nE,9.01");
    let c = chart(&t, ChartType::Bar);
    let hs: Vec<f64> = c.marks().iter().map(|m| m.bbox.h).collect();
    assert!(hs.windows(2).all(|w| w[0] < w[1]));
}
