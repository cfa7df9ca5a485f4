//! Static bounding-box tree (sort-tile-recursive packed R-tree) over mesh cells.

use crate::geometry::{barycentric, BBox, Point2};
use crate::mesh::Mesh;

const NODE_CAPACITY: usize = 8;

/// Barycentric tolerance of the closed-cell containment test.
pub const CONTAINMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Node {
    bbox: BBox,
    /// Cell ids for leaves, node ids otherwise.
    children: Vec<usize>,
    leaf: bool,
}

#[derive(Debug, Clone)]
pub struct BoxIndex {
    nodes: Vec<Node>,
    root: usize,
    cell_boxes: Vec<BBox>,
}

impl BoxIndex {
    pub fn build(mesh: &Mesh) -> Self {
        let scale = {
            let b = mesh.bbox();
            b.width().max(b.height()).max(1.0)
        };
        let eps = 1e-12 * scale;
        let cell_boxes: Vec<BBox> = (0..mesh.num_cells())
            .map(|c| mesh.cell_bbox(c).inflate(eps))
            .collect();

        let mut nodes = Vec::new();
        let items: Vec<(usize, BBox)> = cell_boxes.iter().copied().enumerate().collect();
        let mut level = pack(&items, true, &mut nodes);
        while level.len() > 1 {
            let items: Vec<(usize, BBox)> = level.iter().map(|&n| (n, nodes[n].bbox)).collect();
            level = pack(&items, false, &mut nodes);
        }
        let root = level[0];
        Self {
            nodes,
            root,
            cell_boxes,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.cell_boxes.len()
    }

    /// Bounding box of the indexed mesh.
    pub fn hull(&self) -> BBox {
        self.nodes[self.root].bbox
    }

    /// Cells whose (slightly inflated) bounding box contains `p`, ascending.
    pub fn query_point(&self, p: Point2) -> Vec<usize> {
        self.query_box(&BBox::new(p, p))
    }

    /// Cells whose bounding box intersects `b`, ascending.
    pub fn query_box(&self, b: &BBox) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bbox.intersects(b) {
                continue;
            }
            if node.leaf {
                out.extend(
                    node.children
                        .iter()
                        .copied()
                        .filter(|&c| self.cell_boxes[c].intersects(b)),
                );
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }
}

fn pack(items: &[(usize, BBox)], leaf: bool, nodes: &mut Vec<Node>) -> Vec<usize> {
    let n = items.len();
    let nleaves = n.div_ceil(NODE_CAPACITY);
    let nslices = (nleaves as f64).sqrt().ceil() as usize;
    let per_slice = nslices.max(1) * NODE_CAPACITY;
    let mut sorted: Vec<(usize, BBox)> = items.to_vec();
    sorted.sort_by(|a, b| a.1.center().x.total_cmp(&b.1.center().x).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(nleaves);
    for slice in sorted.chunks_mut(per_slice) {
        slice.sort_by(|a, b| a.1.center().y.total_cmp(&b.1.center().y).then(a.0.cmp(&b.0)));
        for group in slice.chunks(NODE_CAPACITY) {
            let bbox = group
                .iter()
                .fold(BBox::empty(), |acc, (_, b)| acc.merge(b));
            nodes.push(Node {
                bbox,
                children: group.iter().map(|(id, _)| *id).collect(),
                leaf,
            });
            out.push(nodes.len() - 1);
        }
    }
    out
}

/// Cell whose closed triangle contains `p` (barycentric coordinates
/// `>= -1e-12`), preferring the lowest id; `None` outside the mesh.
pub fn locate_point(index: &BoxIndex, mesh: &Mesh, p: Point2) -> Option<usize> {
    index
        .query_point(p)
        .into_iter()
        .find(|&c| contains(mesh, c, p))
}

pub(crate) fn contains(mesh: &Mesh, cell: usize, p: Point2) -> bool {
    barycentric(&mesh.triangle(cell), p)
        .iter()
        .all(|&l| l >= -CONTAINMENT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_rect_mesh};
    use crate::geometry::DiskGeometry;

    #[test]
    fn barycenter_is_found() {
        let m = build_rect_mesh(BBox::square(1.4), 8).unwrap();
        let idx = BoxIndex::build(&m);
        for c in 0..m.num_cells() {
            let t = m.triangle(c);
            let g = (1.0 / 3.0) * (t[0] + t[1] + t[2]);
            assert!(idx.query_point(g).contains(&c));
            assert_eq!(locate_point(&idx, &m, g), Some(c));
        }
    }

    #[test]
    fn outside_queries_are_empty() {
        let m = build_rect_mesh(BBox::square(1.0), 4).unwrap();
        let idx = BoxIndex::build(&m);
        let far = BBox::new(Point2::new(2.0, 2.0), Point2::new(3.0, 3.0));
        assert!(idx.query_box(&far).is_empty());
        assert_eq!(locate_point(&idx, &m, Point2::new(1.5, 0.0)), None);
    }

    #[test]
    fn shared_vertex_goes_to_lowest_id() {
        let m = build_rect_mesh(BBox::square(1.0), 2).unwrap();
        let idx = BoxIndex::build(&m);
        // The centre vertex (0,0) touches six cells of the 2x2 grid.
        let lowest = (0..m.num_cells())
            .find(|&c| contains(&m, c, Point2::new(0.0, 0.0)))
            .unwrap();
        assert_eq!(locate_point(&idx, &m, Point2::new(0.0, 0.0)), Some(lowest));
    }

    #[test]
    fn candidate_counts_are_small() {
        for n in [16usize, 32] {
            let m = build_rect_mesh(BBox::square(1.0), n).unwrap();
            assert!(m.num_cells() >= 512);
            let idx = BoxIndex::build(&m);
            let mut worst = 0;
            for k in 0..500 {
                let t = k as f64 * 0.618_033_988_75;
                let p = Point2::new(2.0 * t.fract() - 1.0, 2.0 * (t * 1.3).fract() - 1.0);
                worst = worst.max(idx.query_point(p).len());
            }
            // grid vertices included
            let p = Point2::new(0.0, 0.0);
            worst = worst.max(idx.query_point(p).len());
            assert!(worst <= 16, "n={n}: {worst} candidates");
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let m = build_disk_mesh(DiskGeometry::unit(), 3).unwrap();
        let idx = BoxIndex::build(&m);
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = Point2::new(2.4 * rnd() - 1.2, 2.4 * rnd() - 1.2);
            let brute = (0..m.num_cells()).find(|&c| contains(&m, c, p));
            assert_eq!(locate_point(&idx, &m, p), brute, "{p:?}");
        }
    }
}
