//! Binary-region tools: 8-connected components, hole filling and Moore
//! neighbour boundary tracing.

use std::collections::VecDeque;

use crate::image::{BinaryMask, Contour, Point};

const NEIGHBOURS_8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Moore neighbourhood in clockwise order on screen (y grows downward),
/// starting from the west neighbour.
const MOORE: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// 8-connected components of the foreground, each as a list of raster
/// indices, in order of their first pixel in raster order.
pub fn components(mask: &BinaryMask) -> Vec<Vec<usize>> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(k) = queue.pop_front() {
            comp.push(k);
            let (x, y) = ((k % w) as i64, (k / w) as i64);
            for (dx, dy) in NEIGHBOURS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let nk = ny as usize * w + nx as usize;
                if bits[nk] && !seen[nk] {
                    seen[nk] = true;
                    queue.push_back(nk);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Largest 8-connected component; the earliest in raster order wins ties.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let comps = components(mask);
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    let mut best: Option<&Vec<usize>> = None;
    for c in &comps {
        if best.is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    if let Some(c) = best {
        for &k in c {
            out.set(k % mask.width(), k / mask.width(), true);
        }
    }
    out
}

/// Drops components smaller than `min_size` pixels.
pub fn remove_small(mask: &BinaryMask, min_size: usize) -> BinaryMask {
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    for c in components(mask).into_iter().filter(|c| c.len() >= min_size) {
        for k in c {
            out.set(k % mask.width(), k / mask.width(), true);
        }
    }
    out
}

/// Fills every background region that is not 4-connected to the frame
/// border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut outside = vec![false; bits.len()];
    let mut queue = VecDeque::new();
    let seed = |k: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if !bits[k] && !outside[k] {
            outside[k] = true;
            queue.push_back(k);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut queue);
        seed((h - 1) * w + x, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut queue);
        seed(y * w + w - 1, &mut outside, &mut queue);
    }
    while let Some(k) = queue.pop_front() {
        let (x, y) = (k % w, k / w);
        if x > 0 {
            seed(k - 1, &mut outside, &mut queue);
        }
        if x + 1 < w {
            seed(k + 1, &mut outside, &mut queue);
        }
        if y > 0 {
            seed(k - w, &mut outside, &mut queue);
        }
        if y + 1 < h {
            seed(k + w, &mut outside, &mut queue);
        }
    }
    BinaryMask::from_fn(w, h, |x, y| !outside[y * w + x])
}

/// Adds every `candidates` pixel that touches `mask` (8-neighbourhood).
pub fn merge_adjacent(mask: &BinaryMask, candidates: &BinaryMask) -> BinaryMask {
    let mut out = mask.clone();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) || !candidates.get(x, y) {
                continue;
            }
            let touches = NEIGHBOURS_8
                .iter()
                .any(|&(dx, dy)| mask.get_signed(x as i64 + dx, y as i64 + dy));
            if touches {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// Outer boundary of the component containing the first foreground pixel in
/// raster order (the topmost-leftmost one), traced clockwise with Moore
/// neighbour tracing. Stops when the start pixel is about to be left
/// towards the same neighbour as on the first step.
pub fn trace_boundary(mask: &BinaryMask) -> Contour {
    let Some(start_idx) = mask.bits().iter().position(|&b| b) else {
        return Contour::default();
    };
    let w = mask.width();
    let start = ((start_idx % w) as i64, (start_idx / w) as i64);
    let to_point = |(x, y): (i64, i64)| Point::new(x as f64, y as f64);

    let mut points = vec![start];
    let mut current = start;
    // direction (index into MOORE) from `current` to the backtrack pixel
    let mut back_dir = 0usize;
    let mut first_step: Option<(i64, i64)> = None;
    let limit = 4 * mask.bits().len() + 8;

    for _ in 0..limit {
        let mut found = None;
        for k in 1..=8 {
            let d = (back_dir + k) % 8;
            let cand = (current.0 + MOORE[d].0, current.1 + MOORE[d].1);
            if mask.get_signed(cand.0, cand.1) {
                found = Some((cand, d));
                break;
            }
        }
        let Some((next, d)) = found else {
            // isolated pixel
            break;
        };
        if current == start {
            match first_step {
                Some(f) if f == next => break,
                None => first_step = Some(next),
                _ => {}
            }
        }
        // the neighbour examined just before `next` is background and
        // becomes the new backtrack; express it relative to `next`
        let prev = (d + 7) % 8;
        let b = (current.0 + MOORE[prev].0, current.1 + MOORE[prev].1);
        let rel = (b.0 - next.0, b.1 - next.1);
        back_dir = MOORE
            .iter()
            .position(|&o| o == rel)
            .expect("backtrack pixel is a Moore neighbour of the next pixel");
        points.push(next);
        current = next;
    }

    if points.len() > 1 && points.last() == Some(&start) {
        points.pop();
    }
    let points: Vec<Point> = points.into_iter().map(to_point).collect();
    if points.len() >= 3 {
        Contour::closed(points).expect("Moore trace never repeats a consecutive pixel")
    } else {
        Contour::open(points)
    }
}
