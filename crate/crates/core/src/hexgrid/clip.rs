//! Planar clipping against convex polygons.

type Pt = (f64, f64);

fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Signed shoelace area; positive for counter-clockwise rings. A repeated
/// closing vertex is harmless.
pub fn polygon_area(ring: &[Pt]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..ring.len() {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % ring.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}

/// Area of `subject ∩ clip` where `clip` is convex and counter-clockwise.
/// The subject may be concave and of either orientation.
pub fn polygon_clip_area(subject: &[Pt], clip: &[Pt]) -> f64 {
    let mut output: Vec<Pt> = subject.to_vec();
    if output.len() > 1 && output.first() == output.last() {
        output.pop();
    }
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        let mut prev_side = cross(a, b, prev);
        for &cur in &input {
            let cur_side = cross(a, b, cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(intersect(prev, cur, prev_side, cur_side));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(intersect(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    polygon_area(&output).abs()
}

fn intersect(p: Pt, q: Pt, sp: f64, sq: f64) -> Pt {
    let t = sp / (sp - sq);
    (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
}

/// Length of segment `a`-`b` lying inside the convex counter-clockwise
/// polygon `clip`.
pub fn clip_segment_length(a: Pt, b: Pt, clip: &[Pt]) -> f64 {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = (b.0 - a.0, b.1 - a.1);
    for i in 0..clip.len() {
        let p = clip[i];
        let q = clip[(i + 1) % clip.len()];
        // inside when cross(q - p, x - p) >= 0
        let num = cross(p, q, a);
        let den = (q.0 - p.0) * d.1 - (q.1 - p.1) * d.0;
        if den == 0.0 {
            if num < 0.0 {
                return 0.0;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 >= t1 {
            return 0.0;
        }
    }
    (t1 - t0) * d.0.hypot(d.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: [Pt; 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    #[test]
    fn shoelace_orientation() {
        assert_eq!(polygon_area(&UNIT), 1.0);
        let mut cw = UNIT.to_vec();
        cw.reverse();
        assert_eq!(polygon_area(&cw), -1.0);
    }

    #[test]
    fn clip_half_overlap() {
        let subject = [
            (0.5, -1.0),
            (2.0, -1.0),
            (2.0, 2.0),
            (0.5, 2.0),
            (0.5, -1.0),
        ];
        assert!((polygon_clip_area(&subject, &UNIT) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clip_concave_subject() {
        // U shape covering the unit square except the notch [0.25,0.75]x[0.5,1]
        let u = [
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.75, 1.0),
            (0.75, 0.5),
            (0.25, 0.5),
            (0.25, 1.0),
            (0.0, 1.0),
        ];
        assert!((polygon_clip_area(&u, &UNIT) - 0.75).abs() < 1e-12);
        let left = [(-1.0, -1.0), (0.5, -1.0), (0.5, 2.0), (-1.0, 2.0)];
        assert!((polygon_clip_area(&u, &left) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn segment_clip() {
        assert!((clip_segment_length((-1.0, 0.5), (2.0, 0.5), &UNIT) - 1.0).abs() < 1e-12);
        assert!((clip_segment_length((0.2, 0.2), (0.4, 0.2), &UNIT) - 0.2).abs() < 1e-12);
        assert_eq!(clip_segment_length((2.0, 2.0), (3.0, 3.0), &UNIT), 0.0);
        let diag = clip_segment_length((-1.0, -1.0), (2.0, 2.0), &UNIT);
        assert!((diag - 2f64.sqrt()).abs() < 1e-12);
    }
}
