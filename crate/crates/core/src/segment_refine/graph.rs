//! Dense-cell graph segmentation.
//!
//! The image is resized to a fixed frame, non-overlapping square cells are
//! averaged into superpixel nodes, and components are grown greedily over
//! edges in ascending color-distance order with the adaptive threshold
//! `min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)`. Components below the minimum
//! size are absorbed by their lowest-weight neighbor in a second sweep.

use crate::geometry::Rect;
use crate::raster::ColorImage;

/// Grid of cell-mean colors over the segmentation frame.
#[derive(Clone, Debug)]
pub struct CellGrid {
    grid_w: usize,
    grid_h: usize,
    cell_px: usize,
    mean: Vec<[f32; 3]>,
}

impl CellGrid {
    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn cell_px(&self) -> usize {
        self.cell_px
    }

    #[inline]
    pub fn mean(&self, col: usize, row: usize) -> [f32; 3] {
        self.mean[row * self.grid_w + col]
    }
}

/// Resizes `img` to `frame_w x frame_h` and averages each
/// `cell_px x cell_px` block per channel. Frame dimensions must be multiples
/// of the cell size.
pub fn build_cell_grid(img: &ColorImage, frame_w: usize, frame_h: usize, cell_px: usize) -> CellGrid {
    assert!(cell_px >= 1 && frame_w.is_multiple_of(cell_px) && frame_h.is_multiple_of(cell_px));
    let frame = img.resize(frame_w, frame_h).expect("positive frame");
    let grid_w = frame_w / cell_px;
    let grid_h = frame_h / cell_px;
    let norm = (cell_px * cell_px) as f32;
    let mut mean = vec![[0f32; 3]; grid_w * grid_h];
    for y in 0..frame_h {
        let row = y / cell_px;
        for x in 0..frame_w {
            let px = frame.get(x, y);
            let m = &mut mean[row * grid_w + x / cell_px];
            for c in 0..3 {
                m[c] += px[c] as f32;
            }
        }
    }
    mean.iter_mut().for_each(|m| m.iter_mut().for_each(|c| *c /= norm));
    CellGrid { grid_w, grid_h, cell_px, mean }
}

/// A horizontal span of cells belonging to one segment: columns
/// `col_start..=col_end` of `row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentRun {
    pub row: u32,
    pub col_start: u32,
    pub col_end: u32,
}

/// One segment: its area, covering runs, and tight bounding box in
/// continuous cell units (cell `(r, c)` spans `[c, c+1] x [r, r+1]`).
#[derive(Clone, Debug)]
pub struct Segment {
    pub id: u32,
    pub area_cells: u32,
    pub runs: Vec<SegmentRun>,
    pub bbox: Rect,
}

/// Per-cell segment ids plus per-segment records.
#[derive(Clone, Debug)]
pub struct SegmentLabeling {
    grid_w: usize,
    grid_h: usize,
    labels: Vec<u32>,
    segments: Vec<Segment>,
}

impl SegmentLabeling {
    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.grid_w + col]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Max edge weight already absorbed into the component.
    internal: Vec<f32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n], internal: vec![0.0; n] }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let p = self.parent[i as usize];
            self.parent[i as usize] = self.parent[p as usize];
            i = self.parent[i as usize];
        }
        i
    }

    fn union(&mut self, a: u32, b: u32, weight: f32) {
        let (a, b) = if self.size[a as usize] >= self.size[b as usize] { (a, b) } else { (b, a) };
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        self.internal[a as usize] = weight.max(self.internal[a as usize]).max(self.internal[b as usize]);
    }
}

fn color_distance(a: [f32; 3], b: [f32; 3]) -> f32 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}

/// Segments the cell grid. `k` trades off component size against color
/// coherence; components smaller than `min_size` cells are merged away.
/// Labels are compacted to `0..S-1` in raster order of first occurrence.
pub fn segment_graph(grid: &CellGrid, k: f64, min_size: usize) -> SegmentLabeling {
    assert!(k > 0.0, "segmentation scale must be positive");
    let (gw, gh) = (grid.grid_w, grid.grid_h);
    let n = gw * gh;

    // 4-connectivity edges, deterministic construction order
    let mut edges: Vec<(f32, u32, u32)> = Vec::with_capacity(2 * n);
    for r in 0..gh {
        for c in 0..gw {
            let i = (r * gw + c) as u32;
            if c + 1 < gw {
                edges.push((color_distance(grid.mean(c, r), grid.mean(c + 1, r)), i, i + 1));
            }
            if r + 1 < gh {
                edges.push((color_distance(grid.mean(c, r), grid.mean(c, r + 1)), i, i + gw as u32));
            }
        }
    }
    // stable sort: equal weights keep construction order
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ds = DisjointSet::new(n);
    let k = k as f32;
    for &(w, a, b) in &edges {
        let ra = ds.find(a);
        let rb = ds.find(b);
        if ra == rb {
            continue;
        }
        let ta = ds.internal[ra as usize] + k / ds.size[ra as usize] as f32;
        let tb = ds.internal[rb as usize] + k / ds.size[rb as usize] as f32;
        if w <= ta.min(tb) {
            ds.union(ra, rb, w);
        }
    }

    // absorb undersized components along their cheapest boundary edges
    if min_size > 1 {
        for &(_, a, b) in &edges {
            let ra = ds.find(a);
            let rb = ds.find(b);
            if ra != rb && ((ds.size[ra as usize] as usize) < min_size || (ds.size[rb as usize] as usize) < min_size) {
                ds.union(ra, rb, 0.0);
            }
        }
    }

    // compact labels in raster order of first occurrence
    let mut label_of_root = vec![u32::MAX; n];
    let mut labels = vec![0u32; n];
    let mut next = 0u32;
    for i in 0..n {
        let root = ds.find(i as u32) as usize;
        if label_of_root[root] == u32::MAX {
            label_of_root[root] = next;
            next += 1;
        }
        labels[i] = label_of_root[root];
    }

    // per-segment runs, areas, and tight bboxes
    let count = next as usize;
    let mut segments: Vec<Segment> = (0..count as u32)
        .map(|id| Segment { id, area_cells: 0, runs: Vec::new(), bbox: Rect::new(0.0, 0.0, 0.0, 0.0) })
        .collect();
    let mut bounds = vec![(u32::MAX, u32::MAX, 0u32, 0u32); count];
    for r in 0..gh {
        let mut c = 0;
        while c < gw {
            let label = labels[r * gw + c];
            let start = c;
            while c < gw && labels[r * gw + c] == label {
                c += 1;
            }
            let end = c - 1;
            let seg = &mut segments[label as usize];
            seg.runs.push(SegmentRun { row: r as u32, col_start: start as u32, col_end: end as u32 });
            seg.area_cells += (end - start + 1) as u32;
            let b = &mut bounds[label as usize];
            b.0 = b.0.min(start as u32);
            b.1 = b.1.min(r as u32);
            b.2 = b.2.max(end as u32);
            b.3 = b.3.max(r as u32);
        }
    }
    for (seg, &(x1, y1, x2, y2)) in segments.iter_mut().zip(&bounds) {
        seg.bbox = Rect::new(x1 as f64, y1 as f64, (x2 + 1) as f64, (y2 + 1) as f64);
    }

    SegmentLabeling { grid_w: gw, grid_h: gh, labels, segments }
}
