//! Binary morphology on row-major `bool` masks.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// Connected components of `mask`. Labels start at 1 in raster order of each
/// component's first pixel; `areas[l - 1]` is the size of component `l`.
pub fn label_components(
    mask: &[bool],
    width: usize,
    height: usize,
    conn: Connectivity,
) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![0u32; width * height];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..width * height {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        let id = areas.len() as u32 + 1;
        let mut area = 0;
        labels[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if mask[j] && labels[j] == 0 {
                    labels[j] = id;
                    queue.push_back(j);
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Drops 8-connected components smaller than `min_area`.
pub fn remove_small_components(mask: &[bool], width: usize, height: usize, min_area: usize) -> Vec<bool> {
    let (labels, areas) = label_components(mask, width, height, Connectivity::Eight);
    labels
        .iter()
        .map(|&l| l > 0 && areas[l as usize - 1] >= min_area)
        .collect()
}

fn disk(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Pixels outside the image count as background.
pub fn erode(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let se = disk(radius);
    let mut out = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = se.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                nx >= 0
                    && ny >= 0
                    && nx < width as isize
                    && ny < height as isize
                    && mask[ny as usize * width + nx as usize]
            });
        }
    }
    out
}

pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let se = disk(radius);
    let mut out = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            for &(dx, dy) in &se {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && nx < width as isize && ny < height as isize {
                    out[ny as usize * width + nx as usize] = true;
                }
            }
        }
    }
    out
}

/// Erosion then dilation with a Euclidean disk of `radius`.
pub fn open(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    dilate(&erode(mask, width, height, radius), width, height, radius)
}

/// Sets every background pixel not 4-connected to the image border.
pub fn fill_holes(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut outside = vec![false; width * height];
    let mut queue = VecDeque::new();
    for y in 0..height {
        for x in 0..width {
            let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            let i = y * width + x;
            if border && !mask[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % width) as isize, (i / width) as isize);
        for &(dx, dy) in Connectivity::Four.offsets() {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                continue;
            }
            let j = ny as usize * width + nx as usize;
            if !mask[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    outside.iter().map(|&o| !o).collect()
}
