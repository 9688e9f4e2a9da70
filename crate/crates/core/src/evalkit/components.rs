/// A 4-connected component of a boolean grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    /// Member cells in row-major order.
    pub cells: Vec<(usize, usize)>,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
}

impl Component {
    pub fn area(&self) -> usize {
        self.cells.len()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.cells.len() as f64;
        let (sx, sy) = self.cells.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
        (sx / n, sy / n)
    }
}

/// 4-connected components of `on`, ordered by their first cell in row-major order.
pub fn connected_components(width: usize, height: usize, on: impl Fn(usize, usize) -> bool) -> Vec<Component> {
    let mut seen = vec![false; width * height];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for y0 in 0..height {
        for x0 in 0..width {
            if seen[y0 * width + x0] || !on(x0, y0) {
                continue;
            }
            seen[y0 * width + x0] = true;
            stack.push((x0, y0));
            let mut cells = Vec::new();
            while let Some((x, y)) = stack.pop() {
                cells.push((x, y));
                let mut visit = |nx: usize, ny: usize| {
                    if !seen[ny * width + nx] && on(nx, ny) {
                        seen[ny * width + nx] = true;
                        stack.push((nx, ny));
                    }
                };
                if x > 0 {
                    visit(x - 1, y);
                }
                if x + 1 < width {
                    visit(x + 1, y);
                }
                if y > 0 {
                    visit(x, y - 1);
                }
                if y + 1 < height {
                    visit(x, y + 1);
                }
            }
            cells.sort_by_key(|&(x, y)| (y, x));
            let bbox = cells.iter().fold((usize::MAX, usize::MAX, 0, 0), |b, &(x, y)| {
                (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y))
            });
            out.push(Component { cells, bbox });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_touch_splits() {
        let on = |x: usize, y: usize| (x < 2 && y < 2) || ((2..4).contains(&x) && (2..4).contains(&y));
        let c = connected_components(5, 5, on);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].bbox, (0, 0, 1, 1));
        assert_eq!(c[1].bbox, (2, 2, 3, 3));
        assert_eq!(c[0].centroid(), (0.5, 0.5));
    }

    #[test]
    fn u_shape_is_one_component() {
        let rows = ["#.#", "#.#", "###"];
        let c = connected_components(3, 3, |x, y| rows[y].as_bytes()[x] == b'#');
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].area(), 7);
    }
}
