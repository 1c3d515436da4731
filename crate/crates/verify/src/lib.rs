//! Measurements shared by the acceptance suite: detection matching against
//! ground truth, ramp coverage, step amplitudes and a plain normal-equation
//! least-squares oracle.

use fgd_core::saccade::SaccadeEvent;
use fgd_core::simulate::TrueSaccade;

/// Detector output scored against the generator's saccades.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionScore {
    pub truths: usize,
    pub detections: usize,
    pub matched: usize,
    /// Covered fraction of each matched ramp's interior samples.
    pub coverage: Vec<f64>,
}

impl DetectionScore {
    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.truths)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.detections)
    }

    pub fn min_coverage(&self) -> f64 {
        self.coverage.iter().cloned().fold(1.0, f64::min)
    }

    /// Covered fraction over all ramp samples pooled together.
    pub fn pooled_coverage(&self, ramp_lens: &[usize]) -> f64 {
        let total: usize = ramp_lens.iter().sum();
        let hit: f64 = self.coverage.iter().zip(ramp_lens).map(|(c, &n)| c * n as f64).sum();
        if total == 0 {
            1.0
        } else {
            hit / total as f64
        }
    }

    pub fn merge(&mut self, other: DetectionScore) {
        self.truths += other.truths;
        self.detections += other.detections;
        self.matched += other.matched;
        self.coverage.extend(other.coverage);
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Samples strictly between the last old-level and first new-level sample.
pub fn ramp_interior(t: &TrueSaccade) -> std::ops::Range<usize> {
    t.start_idx + 1..t.end_idx
}

/// One-to-one matching: a detection matches the first unmatched true
/// saccade whose ramp overlaps its window.
pub fn score_detection(truth: &[TrueSaccade], detected: &[SaccadeEvent]) -> DetectionScore {
    let mut used = vec![false; detected.len()];
    let mut score = DetectionScore {
        truths: truth.len(),
        detections: detected.len(),
        ..Default::default()
    };
    for t in truth {
        let hit = detected
            .iter()
            .enumerate()
            .find(|(j, d)| !used[*j] && d.start_idx <= t.end_idx && t.start_idx <= d.end_idx);
        if let Some((j, d)) = hit {
            used[j] = true;
            score.matched += 1;
            let ramp = ramp_interior(t);
            let n = ramp.len();
            let inside = ramp.filter(|&k| d.start_idx <= k && k <= d.end_idx).count();
            score.coverage.push(if n == 0 { 1.0 } else { inside as f64 / n as f64 });
        }
    }
    score
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Level after a saccade minus the level before it, each averaged over
/// `w` samples adjacent to the ramp.
pub fn step_amplitude(x: &[f64], t: &TrueSaccade, w: usize) -> f64 {
    let pre = &x[t.start_idx + 1 - w..=t.start_idx];
    let post = &x[t.end_idx..t.end_idx + w];
    mean(post) - mean(pre)
}

/// Least squares via the normal equations `A^T A c = A^T y`, solved by
/// Gaussian elimination with partial pivoting. `rows` holds the rows of A.
pub fn normal_equation_solve(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut m = vec![vec![0.0; p + 1]; p];
    for (r, &yk) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                m[i][j] += r[i] * r[j];
            }
            m[i][p] += r[i] * yk;
        }
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty");
        m.swap(col, piv);
        for row in col + 1..p {
            let f = m[row][col] / m[col][col];
            for k in col..=p {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut c = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| m[i][j] * c[j]).sum();
        c[i] = (m[i][p] - s) / m[i][i];
    }
    c
}

/// Largest absolute difference relative to the largest reference magnitude.
pub fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}
