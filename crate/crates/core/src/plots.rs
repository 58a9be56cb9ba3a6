//! SVG renderers for sequence index, state distribution, frequency and
//! modal plots.
//!
//! Output is plain SVG text built by hand, with fixed three-decimal
//! coordinates so the same input and config always give the same bytes.
//! Cells carry `data-row`/`data-pos`/`data-state` attributes and runs of one
//! state are drawn as a single rectangle (`data-len` positions wide).

use std::fmt::Write as _;

use thiserror::Error;

use crate::clustering::ClusterAssignment;
use crate::descriptives::{frequency_table, modal_sequence, state_distribution, FrequencyTable, StateDistribution};
use crate::sequence::{Alphabet, SequenceError, SequenceSet};

/// Okabe-Ito colour-blind safe palette.
pub const PALETTE: [&str; 8] = ["#E69F00", "#56B4E9", "#009E73", "#F0E442", "#0072B2", "#D55E00", "#CC79A7", "#000000"];

const MARGIN_LEFT: f64 = 90.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 36.0;
const MARGIN_RIGHT: f64 = 20.0;
const LEGEND_WIDTH: f64 = 170.0;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("plot of {width}x{height} px leaves no drawing area")]
    Dimensions { width: u32, height: u32 },
    #[error("{colors} colours for {states} states")]
    ColorCount { colors: usize, states: usize },
    #[error("nothing to draw: {0}")]
    Empty(&'static str),
    #[error("{labels} cluster labels for {rows} sequences")]
    SizeMismatch { labels: usize, rows: usize },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortKey {
    #[default]
    Input,
    FirstState,
    Cluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotConfig {
    width: u32,
    height: u32,
    state_names: Vec<String>,
    colors: Vec<String>,
    pub sort: SortKey,
    pub legend: bool,
    pub title: Option<String>,
}

/// Drawing area in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl PlotConfig {
    /// State names from the alphabet labels; colours from the alphabet where
    /// given, the default palette (cycled) otherwise.
    pub fn for_alphabet(alphabet: &Alphabet) -> Self {
        let colors = (0..alphabet.len())
            .map(|i| alphabet.color(i).map(str::to_string).unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string()))
            .collect();
        Self {
            width: 800,
            height: 500,
            state_names: (0..alphabet.len()).map(|i| alphabet.label(i).to_string()).collect(),
            colors,
            sort: SortKey::Input,
            legend: true,
            title: None,
        }
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Result<Self, PlotError> {
        self.width = width;
        self.height = height;
        self.area()?;
        Ok(self)
    }

    pub fn with_colors(mut self, colors: Vec<String>) -> Result<Self, PlotError> {
        if colors.len() != self.state_names.len() {
            return Err(PlotError::ColorCount {
                colors: colors.len(),
                states: self.state_names.len(),
            });
        }
        self.colors = colors;
        Ok(self)
    }

    pub fn with_sort(mut self, sort: SortKey) -> Self {
        self.sort = sort;
        self
    }

    pub fn with_legend(mut self, legend: bool) -> Self {
        self.legend = legend;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    pub fn area(&self) -> Result<Area, PlotError> {
        let right = MARGIN_RIGHT + if self.legend { LEGEND_WIDTH } else { 0.0 };
        let width = self.width as f64 - MARGIN_LEFT - right;
        let height = self.height as f64 - MARGIN_TOP - MARGIN_BOTTOM;
        if width < 10.0 || height < 10.0 {
            return Err(PlotError::Dimensions {
                width: self.width,
                height: self.height,
            });
        }
        Ok(Area {
            x: MARGIN_LEFT,
            y: MARGIN_TOP,
            width,
            height,
        })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    out: String,
    hatch: bool,
}

impl Svg {
    fn open(config: &PlotConfig, kind: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" class="{kind}">"#,
            w = config.width,
            h = config.height
        );
        let hatch = config.colors.len() > PALETTE.len();
        if hatch {
            out.push_str(
                r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#FFFFFF" stroke-width="2"/></pattern></defs>"##,
            );
            out.push('\n');
        }
        let _ = writeln!(out, r##"<rect x="0" y="0" width="{}" height="{}" fill="#FFFFFF"/>"##, config.width, config.height);
        if let Some(t) = &config.title {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="22" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
                config.width as f64 / 2.0,
                escape(t)
            );
        }
        Self { out, hatch }
    }

    /// Filled rectangle for `state`; hatched overlay once the palette cycles.
    #[allow(clippy::too_many_arguments)]
    fn state_rect(&mut self, class: &str, attrs: &str, x: f64, y: f64, w: f64, h: f64, state: usize, color: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect class="{class}" {attrs} data-state="{state}" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{color}"/>"#
        );
        if self.hatch && state >= PALETTE.len() {
            let _ = writeln!(
                self.out,
                r#"<rect class="hatch" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="url(#hatch)"/>"#
            );
        }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn x_axis(&mut self, area: &Area, positions: usize) {
        let cell = area.width / positions as f64;
        let step = positions.div_ceil(8).max(1);
        let base = area.y + area.height;
        let _ = writeln!(
            self.out,
            r##"<line x1="{:.3}" y1="{base:.3}" x2="{:.3}" y2="{base:.3}" stroke="#333333"/>"##,
            area.x,
            area.x + area.width
        );
        let mut t = 0;
        while t < positions {
            let x = area.x + (t as f64 + 0.5) * cell;
            self.text(x, base + 16.0, "middle", 11, &(t + 1).to_string());
            t += step;
        }
    }

    fn legend(&mut self, config: &PlotConfig, area: &Area) {
        if !config.legend {
            return;
        }
        let x = area.x + area.width + 16.0;
        for (i, name) in config.state_names.iter().enumerate() {
            let y = area.y + i as f64 * 20.0;
            self.state_rect("legend", &format!(r#"data-label="{}""#, escape(name)), x, y, 14.0, 14.0, i, &config.colors[i]);
            let mut label = name.clone();
            if self.hatch && i >= PALETTE.len() {
                label.push_str(" (hatched)");
            }
            self.text(x + 20.0, y + 11.0, "start", 12, &label);
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn check_colors(config: &PlotConfig, alphabet_size: usize) -> Result<(), PlotError> {
    if config.colors.len() != alphabet_size {
        return Err(PlotError::ColorCount {
            colors: config.colors.len(),
            states: alphabet_size,
        });
    }
    Ok(())
}

/// Draws one sequence as spell rectangles across `area.width`.
#[allow(clippy::too_many_arguments)]
fn strip(svg: &mut Svg, config: &PlotConfig, class: &str, row: usize, states: &[usize], area: &Area, y: f64, h: f64) {
    let cell = area.width / states.len() as f64;
    let mut start = 0;
    while start < states.len() {
        let s = states[start];
        let mut end = start + 1;
        while end < states.len() && states[end] == s {
            end += 1;
        }
        let attrs = format!(r#"data-row="{row}" data-pos="{start}" data-len="{}""#, end - start);
        svg.state_rect(class, &attrs, area.x + start as f64 * cell, y, (end - start) as f64 * cell, h, s, &config.colors[s]);
        start = end;
    }
}

/// Row order of an index plot under `config.sort`.
pub fn index_order(set: &SequenceSet, labels: Option<&ClusterAssignment>, sort: SortKey) -> Vec<usize> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    match (sort, labels) {
        (SortKey::Input, _) | (SortKey::Cluster, None) => {}
        (SortKey::FirstState, _) => order.sort_by_key(|&i| set.sequences()[i].states()[0]),
        (SortKey::Cluster, Some(l)) => order.sort_by_key(|&i| l.labels()[i]),
    }
    order
}

/// One row per sequence, one cell per position.
pub fn index_plot(set: &SequenceSet, labels: Option<&ClusterAssignment>, config: &PlotConfig) -> Result<String, PlotError> {
    check_colors(config, set.alphabet().len())?;
    if let Some(l) = labels {
        if l.len() != set.len() {
            return Err(PlotError::SizeMismatch {
                labels: l.len(),
                rows: set.len(),
            });
        }
    }
    let area = config.area()?;
    let order = index_order(set, labels, config.sort);
    let row_h = area.height / set.len() as f64;
    let mut svg = Svg::open(config, "index-plot");
    for (r, &i) in order.iter().enumerate() {
        strip(&mut svg, config, "cell", r, set.sequences()[i].states(), &area, area.y + r as f64 * row_h, row_h);
    }
    match (config.sort, labels) {
        (SortKey::Cluster, Some(l)) => {
            let mut first = 0;
            for c in 1..=l.k() {
                let size = l.sizes()[c - 1];
                let y0 = area.y + first as f64 * row_h;
                if first > 0 {
                    let _ = writeln!(
                        svg.out,
                        r##"<line class="separator" x1="{:.3}" y1="{y0:.3}" x2="{:.3}" y2="{y0:.3}" stroke="#FFFFFF" stroke-width="2"/>"##,
                        area.x,
                        area.x + area.width
                    );
                }
                svg.text(area.x - 8.0, y0 + size as f64 * row_h / 2.0 + 4.0, "end", 12, &format!("Cluster {c} ({size})"));
                first += size;
            }
        }
        _ => {
            svg.text(area.x - 8.0, area.y + area.height / 2.0, "end", 12, &format!("{} seq.", set.len()));
        }
    }
    svg.x_axis(&area, set.length());
    svg.legend(config, &area);
    Ok(svg.finish())
}

/// Stacked bars of state shares, one bar per position; each bar fills the
/// full height.
pub fn distribution_plot(dist: &StateDistribution, config: &PlotConfig) -> Result<String, PlotError> {
    check_colors(config, dist.states.len())?;
    if dist.is_empty() {
        return Err(PlotError::Empty("state distribution"));
    }
    let area = config.area()?;
    let cell = area.width / dist.len() as f64;
    let mut svg = Svg::open(config, "distribution-plot");
    for (t, shares) in dist.per_position.iter().enumerate() {
        let mut y = area.y;
        for (s, &p) in shares.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let h = p * area.height;
            let attrs = format!(r#"data-pos="{t}" data-share="{p}""#);
            svg.state_rect("band", &attrs, area.x + t as f64 * cell, y, cell, h, s, &config.colors[s]);
            y += h;
        }
    }
    for (frac, label) in [(0.0, "1.0"), (0.5, "0.5"), (1.0, "0")] {
        svg.text(area.x - 8.0, area.y + frac * area.height + 4.0, "end", 11, label);
    }
    svg.x_axis(&area, dist.len());
    svg.legend(config, &area);
    Ok(svg.finish())
}

/// Most frequent sequences top-down, each strip as tall as its share of the
/// cohort.
pub fn frequency_plot(freq: &FrequencyTable, config: &PlotConfig) -> Result<String, PlotError> {
    let Some(first) = freq.entries.first() else {
        return Err(PlotError::Empty("frequency table"));
    };
    let area = config.area()?;
    let positions = first.states.len();
    let mut svg = Svg::open(config, "frequency-plot");
    let mut y = area.y;
    for (r, e) in freq.entries.iter().enumerate() {
        if let Some(&bad) = e.states.iter().find(|&&s| s >= config.colors.len()) {
            return Err(PlotError::ColorCount {
                colors: config.colors.len(),
                states: bad + 1,
            });
        }
        let h = e.share * area.height;
        strip(&mut svg, config, "cell", r, &e.states, &area, y, h);
        y += h;
    }
    let covered: f64 = freq.entries.iter().map(|e| e.share).sum();
    svg.text(
        area.x - 8.0,
        area.y + area.height / 2.0,
        "end",
        12,
        &format!("top {} ({:.1}%)", freq.entries.len(), 100.0 * covered),
    );
    svg.x_axis(&area, positions);
    svg.legend(config, &area);
    Ok(svg.finish())
}

/// One modal-state strip per cluster (or one for the whole cohort).
pub fn modal_plot(set: &SequenceSet, labels: Option<&ClusterAssignment>, config: &PlotConfig) -> Result<String, PlotError> {
    check_colors(config, set.alphabet().len())?;
    let area = config.area()?;
    let groups: Vec<(String, SequenceSet)> = match labels {
        None => vec![("All".to_string(), set.clone())],
        Some(l) => {
            if l.len() != set.len() {
                return Err(PlotError::SizeMismatch {
                    labels: l.len(),
                    rows: set.len(),
                });
            }
            (1..=l.k())
                .map(|c| Ok((format!("Cluster {c}"), set.subset(&l.members(c))?)))
                .collect::<Result<_, PlotError>>()?
        }
    };
    let slot = area.height / groups.len() as f64;
    let h = slot * 0.7;
    let mut svg = Svg::open(config, "modal-plot");
    for (r, (name, sub)) in groups.iter().enumerate() {
        let y = area.y + r as f64 * slot + (slot - h) / 2.0;
        strip(&mut svg, config, "cell", r, modal_sequence(sub).states(), &area, y, h);
        svg.text(area.x - 8.0, y + h / 2.0 + 4.0, "end", 12, name);
    }
    svg.x_axis(&area, set.length());
    svg.legend(config, &area);
    Ok(svg.finish())
}

/// The four plots for the cohort, plus index, distribution and frequency
/// plots per cluster, keyed by file name `<prefix>_<kind>[_cluster<k>].svg`.
pub fn render_suite(
    set: &SequenceSet,
    labels: Option<&ClusterAssignment>,
    config: &PlotConfig,
    prefix: &str,
    top: usize,
) -> Result<Vec<(String, String)>, PlotError> {
    let mut out = vec![
        (format!("{prefix}_index.svg"), index_plot(set, labels, config)?),
        (format!("{prefix}_dist.svg"), distribution_plot(&state_distribution(set), config)?),
        (format!("{prefix}_freq.svg"), frequency_plot(&frequency_table(set, top), config)?),
        (format!("{prefix}_modal.svg"), modal_plot(set, labels, config)?),
    ];
    if let Some(l) = labels {
        for c in 1..=l.k() {
            let sub = set.subset(&l.members(c))?;
            let cfg = config.clone().with_title(format!("Cluster {c} (n = {})", sub.len()));
            out.push((format!("{prefix}_index_cluster{c}.svg"), index_plot(&sub, None, &cfg)?));
            out.push((format!("{prefix}_dist_cluster{c}.svg"), distribution_plot(&state_distribution(&sub), &cfg)?));
            out.push((format!("{prefix}_freq_cluster{c}.svg"), frequency_plot(&frequency_table(&sub, top), &cfg)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::StateSequence;

    fn set(a: usize, rows: &[Vec<usize>]) -> SequenceSet {
        let alphabet = Alphabet::new((0..a).map(|i| format!("s{i}"))).unwrap();
        let seqs = rows.iter().enumerate().map(|(i, r)| StateSequence::new(format!("p{i}"), r.clone()).unwrap()).collect();
        SequenceSet::new(alphabet, seqs, "week").unwrap()
    }

    fn attr<'a>(node: roxmltree::Node<'a, 'a>, name: &str) -> &'a str {
        node.attribute(name).unwrap_or_else(|| panic!("missing {name}"))
    }

    fn cells(svg: &str, class: &str) -> Vec<(usize, usize, usize, String)> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some(class))
            .map(|n| {
                (
                    attr(n, "data-row").parse().unwrap(),
                    attr(n, "data-pos").parse().unwrap(),
                    attr(n, "data-len").parse().unwrap(),
                    attr(n, "fill").to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn three_cells() {
        let s = set(3, &[vec![0, 1, 2]]);
        let cfg = PlotConfig::for_alphabet(s.alphabet());
        let svg = index_plot(&s, None, &cfg).unwrap();
        let c = cells(&svg, "cell");
        assert_eq!(c.len(), 3);
        for (i, cell) in c.iter().enumerate() {
            assert_eq!(cell, &(0, i, 1, PALETTE[i].to_string()));
        }
        assert_eq!(svg, index_plot(&s, None, &cfg).unwrap());
    }

    #[test]
    fn cluster_sort_is_contiguous() {
        let rows: Vec<Vec<usize>> = (0..9).map(|i| vec![i % 3, 0]).collect();
        let s = set(3, &rows);
        let labels = ClusterAssignment::from_labels((0..9).map(|i| 1 + (i % 3)).collect()).unwrap();
        let order = index_order(&s, Some(&labels), SortKey::Cluster);
        let seen: Vec<usize> = order.iter().map(|&i| labels.labels()[i]).collect();
        assert!(seen.windows(2).all(|w| w[0] <= w[1]));
        let cfg = PlotConfig::for_alphabet(s.alphabet()).with_sort(SortKey::Cluster);
        let svg = index_plot(&s, Some(&labels), &cfg).unwrap();
        assert!(svg.contains("Cluster 3 (3)"));
        // first row of the plot is the first cluster-1 sequence
        let c = cells(&svg, "cell");
        assert_eq!(c.iter().find(|x| x.0 == 0 && x.1 == 0).unwrap().3, PALETTE[s.sequences()[order[0]].states()[0]]);
    }

    #[test]
    fn distribution_bands() {
        let s = set(2, &[vec![0, 0], vec![1, 0]]);
        let cfg = PlotConfig::for_alphabet(s.alphabet());
        let area = cfg.area().unwrap();
        let svg = distribution_plot(&state_distribution(&s), &cfg).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let bands: Vec<(usize, f64)> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("band"))
            .map(|n| (attr(n, "data-pos").parse().unwrap(), attr(n, "height").parse().unwrap()))
            .collect();
        assert_eq!(bands.len(), 3);
        assert!((bands[0].1 - area.height / 2.0).abs() < 0.01);
        assert!((bands[1].1 - area.height / 2.0).abs() < 0.01);
        assert_eq!(bands[2], (1, area.height));
    }

    #[test]
    fn frequency_strip_ratio() {
        let mut rows = vec![vec![0, 0]; 6];
        rows.extend(vec![vec![1, 1]; 3]);
        rows.push(vec![0, 1]);
        let s = set(2, &rows);
        let cfg = PlotConfig::for_alphabet(s.alphabet());
        let svg = frequency_plot(&frequency_table(&s, 10), &cfg).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let mut heights = [0.0f64; 3];
        for n in doc.descendants().filter(|n| n.attribute("class") == Some("cell") && n.attribute("data-pos") == Some("0")) {
            heights[attr(n, "data-row").parse::<usize>().unwrap()] = attr(n, "height").parse().unwrap();
        }
        assert!((heights[0] / heights[2] - 6.0).abs() < 1e-3);
        assert!((heights[1] / heights[2] - 3.0).abs() < 1e-3);
        assert!(frequency_plot(&FrequencyTable { total: 0, distinct: 0, entries: vec![] }, &cfg).is_err());
    }

    #[test]
    fn modal_strips_per_cluster() {
        let s = set(3, &[vec![0, 0], vec![0, 1], vec![2, 2], vec![2, 1], vec![1, 1], vec![1, 2]]);
        let labels = ClusterAssignment::from_labels(vec![1, 1, 2, 2, 3, 3]).unwrap();
        let cfg = PlotConfig::for_alphabet(s.alphabet());
        let c = cells(&modal_plot(&s, Some(&labels), &cfg).unwrap(), "cell");
        // ties resolve to the lower state: cluster 1 -> [0, 0], 2 -> [2, 1], 3 -> [1, 1]
        let fills: Vec<(usize, usize, usize)> = c.iter().map(|x| (x.0, x.1, x.2)).collect();
        assert_eq!(fills, vec![(0, 0, 2), (1, 0, 1), (1, 1, 1), (2, 0, 2)]);
        assert_eq!(c[1].3, PALETTE[2]);
        assert_eq!(c[2].3, PALETTE[1]);
    }

    #[test]
    fn many_states_are_hatched() {
        let s = set(10, &[(0..10).collect()]);
        let cfg = PlotConfig::for_alphabet(s.alphabet());
        let svg = index_plot(&s, None, &cfg).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        assert!(svg.contains("(hatched)"));
        assert_eq!(svg.matches(r#"class="hatch""#).count(), 2 * 2);
        assert_eq!(cells(&svg, "cell")[8].3, PALETTE[0]);
    }

    #[test]
    fn config_validation() {
        let a = Alphabet::new(["x", "y"]).unwrap();
        assert!(PlotConfig::for_alphabet(&a).with_size(100, 40).is_err());
        assert!(PlotConfig::for_alphabet(&a).with_colors(vec!["#000000".into()]).is_err());
        let t = PlotConfig::for_alphabet(&a).with_title("a < b & c");
        let s = set(2, &[vec![0, 1]]);
        roxmltree::Document::parse(&index_plot(&s, None, &t).unwrap()).unwrap();
    }

    #[test]
    fn suite_file_names() {
        let s = set(2, &[vec![0, 1], vec![1, 1], vec![0, 0]]);
        let labels = ClusterAssignment::from_labels(vec![1, 2, 1]).unwrap();
        let names: Vec<String> = render_suite(&s, Some(&labels), &PlotConfig::for_alphabet(s.alphabet()), "out", 10)
            .unwrap()
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(names.len(), 10);
        assert_eq!(names[0], "out_index.svg");
        assert!(names.contains(&"out_freq_cluster2.svg".to_string()));
    }
}
