use quick_xml::events::Event;
use rle_core::render::{self, RenderSpec};
use rle_core::rle::BoxplotStats;

fn stats(sample: &str, group: Option<&str>, median: f64, spread: f64) -> BoxplotStats {
    BoxplotStats {
        sample_id: sample.into(),
        group: group.map(Into::into),
        median,
        q1: median - spread,
        q3: median + spread,
        whisker_low: median - 2.0 * spread,
        whisker_high: median + 2.0 * spread,
        outliers: vec![median + 5.0 * spread],
    }
}

fn samples(k: usize, shift: f64) -> Vec<BoxplotStats> {
    (0..k)
        .map(|i| {
            let group = if i % 2 == 0 { "left" } else { "right" };
            stats(&format!("S{i}"), Some(group), shift * i as f64, 0.2 + 0.01 * i as f64)
        })
        .collect()
}

/// Returns the number of elements with the given class.
fn count_class(svg: &str, class: &str) -> usize {
    let mut reader = quick_xml::Reader::from_str(svg);
    let mut n = 0;
    loop {
        match reader.read_event().expect("well-formed SVG") {
            Event::Start(e) | Event::Empty(e) => {
                n += usize::from(
                    e.attributes()
                        .flatten()
                        .any(|a| a.key.as_ref() == b"class" && a.value.as_ref() == class.as_bytes()),
                );
            }
            Event::Eof => return n,
            _ => {}
        }
    }
}

fn box_lines(svg: &str) -> Vec<&str> {
    svg.lines()
        .map(str::trim_start)
        .filter(|l| ["<rect class=\"box\"", "<line class=\"median\"", "<line class=\"whisker\""].iter().any(|p| l.starts_with(p)))
        .collect()
}

#[test]
fn one_box_per_sample_in_order() {
    let s = samples(5, 0.1);
    let svg = render::render_boxplots(&s, &RenderSpec::rle("five")).unwrap();
    assert_eq!(count_class(&svg, "box"), 5);
    assert_eq!(count_class(&svg, "median"), 5);
    assert_eq!(count_class(&svg, "outlier"), 5);
    assert_eq!(count_class(&svg, "zero"), 1);
    let first = svg.find(">S0<").unwrap();
    let last = svg.find(">S4<").unwrap();
    assert!(first < last);
}

#[test]
fn zero_line_can_be_dropped() {
    let spec = RenderSpec {
        zero_line: false,
        ..RenderSpec::rle("plain")
    };
    let svg = render::render_boxplots(&samples(3, 0.0), &spec).unwrap();
    assert_eq!(count_class(&svg, "zero"), 0);
}

#[test]
fn single_panel_draws_the_same_boxes() {
    let s = samples(4, 0.05);
    let spec = RenderSpec::rle("same");
    let alone = render::render_boxplots(&s, &spec).unwrap();
    let panel = render::render_panel(&[("only".into(), s)], &spec).unwrap();
    assert_eq!(box_lines(&alone), box_lines(&panel));
    assert_eq!(count_class(&panel, "panel"), 1);
}

#[test]
fn six_series_fill_a_two_by_three_grid() {
    let series: Vec<(String, Vec<BoxplotStats>)> =
        (0..6).map(|p| (format!("p = {p}"), samples(3 + p, 0.1 / (p as f64 + 1.0)))).collect();
    let spec = RenderSpec::rle("grid");
    let svg = render::render_panel(&series, &spec).unwrap();
    assert_eq!(count_class(&svg, "panel"), 6);
    // sample counts differ between panels; each keeps its own boxes
    assert_eq!(count_class(&svg, "box"), (3..9).sum::<usize>());
    let width = format!("width=\"{}\"", spec.width * 3);
    assert!(svg.lines().nth(1).unwrap().contains(&width));
    for p in 0..6 {
        assert!(svg.contains(&format!(">p = {p}<")));
    }
}

#[test]
fn shared_limits_apply_to_every_panel() {
    let series = vec![("a".to_string(), samples(3, 0.1)), ("b".to_string(), samples(3, 1.0))];
    let spec = RenderSpec {
        y_limits: Some((-4.0, 4.0)),
        ..RenderSpec::rle("shared")
    };
    let svg = render::render_panel(&series, &spec).unwrap();
    let zero_lines: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"zero\"")).collect();
    assert_eq!(zero_lines.len(), 2);
    assert_eq!(zero_lines[0], zero_lines[1]);
}

#[test]
fn two_groups_get_two_fills_and_a_legend() {
    let svg = render::render_boxplots(&samples(4, 0.0), &RenderSpec::rle("groups")).unwrap();
    let fills: std::collections::BTreeSet<&str> = svg
        .lines()
        .filter(|l| l.contains("class=\"box\""))
        .filter_map(|l| l.split("fill=\"").nth(1)?.split('"').next())
        .collect();
    assert_eq!(fills.len(), 2);
    assert_eq!(count_class(&svg, "legend"), 2);
}
