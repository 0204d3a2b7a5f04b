//! 8-connected component labelling and small-region cleanup.

use std::collections::VecDeque;

use super::Raster;

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Result of labelling: `labels[i]` is 0 for background, otherwise a
/// 1-based component index into `areas` (offset by one).
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<u32>,
    pub areas: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.areas.len()
    }
}

/// Labels 8-connected components of pixels with equal nonzero value.
///
/// Components are numbered in raster-scan order of their first pixel.
pub fn label_components<T: Copy + PartialEq + Default>(img: &Raster<T>) -> Components {
    let (w, h) = (img.width(), img.height());
    let zero = T::default();
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    let data = img.as_slice();

    for start in 0..w * h {
        if data[start] == zero || labels[start] != 0 {
            continue;
        }
        let value = data[start];
        areas.push(0);
        let id = areas.len() as u32;
        labels[start] = id;
        queue.push_back(start);
        let mut area = 0usize;
        while let Some(idx) = queue.pop_front() {
            area += 1;
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if labels[n] == 0 && data[n] == value {
                    labels[n] = id;
                    queue.push_back(n);
                }
            }
        }
        areas[id as usize - 1] = area;
    }
    Components { labels, areas }
}

/// Clears every 8-connected component with fewer than `min_area` pixels.
/// Surviving components are returned unchanged.
pub fn remove_small_regions(mask: &Raster<bool>, min_area: usize) -> Raster<bool> {
    let comps = label_components(mask);
    let data = comps
        .labels
        .iter()
        .map(|&l| l != 0 && comps.areas[l as usize - 1] >= min_area)
        .collect();
    Raster::from_vec(mask.width(), mask.height(), data).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> Raster<bool> {
        let mut m = Raster::filled(w, h, false);
        for &(x, y) in on {
            m.set(x, y, true);
        }
        m
    }

    fn block(x0: usize, y0: usize, bw: usize, bh: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                v.push((x, y));
            }
        }
        v
    }

    // Independent reference: repeated-relaxation labelling (min-label
    // propagation until fixpoint), no queue.
    fn brute_force_areas(m: &Raster<bool>) -> Vec<usize> {
        let (w, h) = (m.width(), m.height());
        let mut lab: Vec<usize> = (0..w * h).map(|i| if m.as_slice()[i] { i + 1 } else { 0 }).collect();
        loop {
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    if lab[i] == 0 {
                        continue;
                    }
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                continue;
                            }
                            let j = ny as usize * w + nx as usize;
                            if lab[j] != 0 && lab[j] < lab[i] {
                                lab[i] = lab[j];
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut counts = std::collections::BTreeMap::new();
        for &l in &lab {
            if l != 0 {
                *counts.entry(l).or_insert(0usize) += 1;
            }
        }
        let mut v: Vec<usize> = counts.into_values().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn empty_mask_stays_empty() {
        let m = Raster::filled(16, 12, false);
        assert_eq!(remove_small_regions(&m, 10), m);
    }

    #[test]
    fn area_threshold_is_inclusive() {
        let m = mask(8, 8, &block(2, 2, 3, 3));
        assert_eq!(remove_small_regions(&m, 9), m);
        assert_eq!(remove_small_regions(&m, 10), Raster::filled(8, 8, false));
    }

    #[test]
    fn keeps_only_large_component() {
        let mut on = block(0, 0, 5, 1);
        on.extend(block(10, 5, 10, 5));
        let m = mask(24, 12, &on);
        assert_eq!(brute_force_areas(&m), vec![5, 50]);
        let out = remove_small_regions(&m, 20);
        let expected = mask(24, 12, &block(10, 5, 10, 5));
        assert_eq!(out, expected);
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let m = mask(4, 4, &[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let c = label_components(&m);
        assert_eq!(c.areas, vec![4]);
    }

    #[test]
    fn labels_split_by_value() {
        let r = Raster::from_vec(4, 1, vec![1u16, 1, 2, 2]).unwrap();
        assert_eq!(label_components(&r).areas, vec![2, 2]);
    }

    proptest::proptest! {
        #[test]
        fn matches_relaxation_oracle(bits in proptest::collection::vec(proptest::bool::weighted(0.45), 20 * 14)) {
            let m = Raster::from_vec(20, 14, bits).unwrap();
            let mut areas = label_components(&m).areas;
            areas.sort_unstable();
            proptest::prop_assert_eq!(areas, brute_force_areas(&m));
        }

        #[test]
        fn cleanup_is_idempotent(bits in proptest::collection::vec(proptest::bool::weighted(0.4), 24 * 16), min_area in 0usize..12) {
            let m = Raster::from_vec(24, 16, bits).unwrap();
            let once = remove_small_regions(&m, min_area);
            proptest::prop_assert_eq!(remove_small_regions(&once, min_area), once);
        }
    }
}
