//! Event-driven sticky particles: ballistic flight between perfectly inelastic
//! mergers. Serves as a brute-force reference for the 1D point mass.

use crate::error::{Error, Result};
use crate::quad::gk15;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Collision times closer than this are resolved as one multi-particle merge.
pub const SIMULTANEITY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem {
    pub positions: Vec<f64>,
    pub masses: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Number of original particles carried by each entry.
    pub counts: Vec<usize>,
    pub time: f64,
}

/// Bookkeeping of one call to [`ParticleSystem::evolve`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvolveReport {
    /// Merge groups resolved (a multi-merge counts once).
    pub events: usize,
    /// Particles absorbed into a neighbour.
    pub merges: usize,
    pub mass_drift: f64,
    pub momentum_drift: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    s + c
}

struct Event {
    t: f64,
    left: usize,
    right: usize,
    stamp: (u32, u32),
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    // Min-heap on time, then on the left index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t).then(o.left.cmp(&self.left))
    }
}

impl ParticleSystem {
    /// Midpoint sampling of `(ρ̄, w)` on `N` equal cells of `[a, b]`.
    pub fn discretize(rho_bar: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::Config(format!("particle discretization needs N ≥ 2 and a < b (got N = {n}, [{a}, {b}])")));
        }
        let h = (b - a) / n as f64;
        let mut positions = Vec::with_capacity(n);
        let mut masses = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        let mut f = |x: f64| rho_bar(x);
        for i in 0..n {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
            let mid = 0.5 * (lo + hi);
            let r = f(mid);
            if !(r > 0.0) {
                return Err(Error::Hypothesis(format!("density {r} is not positive at x = {mid}")));
            }
            let (m, _) = gk15(&mut f, lo, hi);
            positions.push(mid);
            masses.push(m);
            velocities.push(w(mid));
        }
        Ok(ParticleSystem { positions, masses, velocities, counts: vec![1; n], time: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn total_momentum(&self) -> f64 {
        compensated_sum(self.masses.iter().zip(&self.velocities).map(|(m, v)| m * v))
    }

    /// Advance to `t_end`, merging colliding neighbours.
    pub fn evolve(&self, t_end: f64) -> Result<(ParticleSystem, EvolveReport)> {
        if t_end < self.time {
            return Err(Error::Config(format!("cannot evolve backwards from t = {} to {t_end}", self.time)));
        }
        let n = self.len();
        let t_start = self.time;
        // Position of particle i at time t is anchor[i] + vel[i]·(t − t_start).
        let mut anchor = self.positions.clone();
        let mut mass = self.masses.clone();
        let mut vel = self.velocities.clone();
        let mut count = self.counts.clone();
        let mut alive = vec![true; n];
        let mut stamp = vec![0u32; n];
        let mut next: Vec<Option<usize>> = (0..n).map(|i| (i + 1 < n).then_some(i + 1)).collect();
        let mut prev: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
        let mass0 = self.total_mass();
        let mom0 = self.total_momentum();

        let collision = |anchor: &[f64], vel: &[f64], i: usize, j: usize| -> Option<f64> {
            let closing = vel[i] - vel[j];
            if closing > 0.0 {
                let gap = anchor[j] - anchor[i];
                Some(t_start + (gap / closing).max(0.0))
            } else {
                None
            }
        };
        let mut heap = BinaryHeap::new();
        for i in 0..n.saturating_sub(1) {
            if let Some(t) = collision(&anchor, &vel, i, i + 1) {
                heap.push(Event { t, left: i, right: i + 1, stamp: (0, 0) });
            }
        }

        let mut report = EvolveReport::default();
        while let Some(top) = heap.peek() {
            if top.t > t_end {
                break;
            }
            let tc = top.t;
            // Gather every valid event within the simultaneity window.
            let mut links: Vec<usize> = Vec::new();
            while let Some(e) = heap.peek() {
                if e.t > tc + SIMULTANEITY || e.t > t_end {
                    break;
                }
                let e = heap.pop().expect("peeked");
                let valid = alive[e.left]
                    && alive[e.right]
                    && next[e.left] == Some(e.right)
                    && stamp[e.left] == e.stamp.0
                    && stamp[e.right] == e.stamp.1;
                if valid {
                    links.push(e.left);
                }
            }
            if links.is_empty() {
                continue;
            }
            links.sort_unstable();
            links.dedup();
            let linked: std::collections::HashSet<usize> = links.iter().copied().collect();
            let mut touched = Vec::new();
            for &start in &links {
                if prev[start].is_some_and(|p| linked.contains(&p)) {
                    continue;
                }
                // Walk the contiguous chain start → … → end.
                let mut members = vec![start];
                let mut cur = start;
                while linked.contains(&cur) {
                    cur = next[cur].expect("linked particle has a right neighbour");
                    members.push(cur);
                }
                let m_tot = compensated_sum(members.iter().map(|&k| mass[k]));
                let p_tot = compensated_sum(members.iter().map(|&k| mass[k] * vel[k]));
                let x_c = compensated_sum(members.iter().map(|&k| mass[k] * (anchor[k] + vel[k] * (tc - t_start)))) / m_tot;
                let v_new = p_tot / m_tot;
                let keep = start;
                let last = *members.last().expect("non-empty");
                for &k in &members[1..] {
                    alive[k] = false;
                    count[keep] += count[k];
                }
                report.merges += members.len() - 1;
                report.events += 1;
                mass[keep] = m_tot;
                vel[keep] = v_new;
                anchor[keep] = x_c - v_new * (tc - t_start);
                stamp[keep] += 1;
                next[keep] = next[last];
                if let Some(r) = next[last] {
                    prev[r] = Some(keep);
                }
                touched.push(keep);
            }
            for &k in &touched {
                if let Some(l) = prev[k] {
                    if let Some(t) = collision(&anchor, &vel, l, k) {
                        heap.push(Event { t: t.max(tc), left: l, right: k, stamp: (stamp[l], stamp[k]) });
                    }
                }
                if let Some(r) = next[k] {
                    if let Some(t) = collision(&anchor, &vel, k, r) {
                        heap.push(Event { t: t.max(tc), left: k, right: r, stamp: (stamp[k], stamp[r]) });
                    }
                }
            }
        }

        let mut out = ParticleSystem { positions: vec![], masses: vec![], velocities: vec![], counts: vec![], time: t_end };
        let mut cur = (0..n).find(|&i| alive[i]);
        while let Some(i) = cur {
            out.positions.push(anchor[i] + vel[i] * (t_end - t_start));
            out.masses.push(mass[i]);
            out.velocities.push(vel[i]);
            out.counts.push(count[i]);
            cur = next[i];
        }
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        report.mass_drift = rel(out.total_mass(), mass0);
        report.momentum_drift = if mom0.abs() > 1e-300 * mass0 {
            rel(out.total_momentum(), mom0)
        } else {
            (out.total_momentum() - mom0).abs() / mass0.max(1e-300)
        };
        Ok((out, report))
    }

    /// `(position, mass, velocity)` of the heaviest entry; ties go to the leftmost.
    pub fn heaviest_cluster(&self) -> (f64, f64, f64) {
        let mut best = 0;
        for i in 1..self.len() {
            if self.masses[i] > self.masses[best] {
                best = i;
            }
        }
        (self.positions[best], self.masses[best], self.velocities[best])
    }

    pub fn strictly_sorted(&self) -> bool {
        self.positions.windows(2).all(|w| w[0] < w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_cells() {
        let s = ParticleSystem::discretize(|_| 1.0, |x| -x, -1.0, 1.0, 4).unwrap();
        assert_eq!(s.positions, vec![-0.75, -0.25, 0.25, 0.75]);
        assert!(s.masses.iter().all(|&m| (m - 0.5).abs() < 1e-15));
        assert_eq!(s.velocities, vec![0.75, 0.25, -0.25, -0.75]);
    }

    #[test]
    fn linear_density_cells() {
        let s = ParticleSystem::discretize(|x| 1.0 + x, |_| 0.0, 0.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(s.masses[0], 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(s.masses[1], 0.875, epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_density_rejected() {
        assert!(ParticleSystem::discretize(|x| x, |_| 0.0, -1.0, 1.0, 4).is_err());
    }

    #[test]
    fn head_on_pair() {
        let s = ParticleSystem {
            positions: vec![-1.0, 1.0],
            masses: vec![1.0, 1.0],
            velocities: vec![1.0, -1.0],
            counts: vec![1, 1],
            time: 0.0,
        };
        let (e, r) = s.evolve(2.0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.heaviest_cluster(), (0.0, 2.0, 0.0));
        assert_eq!(r.merges, 1);
    }

    #[test]
    fn simultaneous_triple_merges_once() {
        let s = ParticleSystem {
            positions: vec![-1.0, 0.0, 1.0],
            masses: vec![1.0, 1.0, 1.0],
            velocities: vec![1.0, 0.0, -1.0],
            counts: vec![1; 3],
            time: 0.0,
        };
        let (e, r) = s.evolve(1.5).unwrap();
        assert_eq!((e.len(), r.events, r.merges), (1, 1, 2));
        assert_eq!(e.counts, vec![3]);
    }
}
