use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::operator::{Boundary, Region};
use crate::{Error, Result};

/// `len` consecutive chain sites from `start` (1-based), wrapping past `n` on
/// closed chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub len: usize,
}

impl Interval {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// Segment `[first:last]`; `last < first` wraps around a ring of `n` sites.
    pub fn from_ends(first: usize, last: usize, n: usize) -> Self {
        let len = if last >= first { last - first + 1 } else { n - first + 1 + last };
        Self { start: first, len }
    }

    /// Last site, reduced mod `n`.
    pub fn end(&self, n: usize) -> usize {
        (self.start + self.len - 2) % n + 1
    }

    pub fn sites(&self, n: usize) -> Vec<usize> {
        (0..self.len).map(|i| (self.start - 1 + i) % n + 1).collect()
    }

    pub fn wraps(&self, n: usize) -> bool {
        self.start + self.len - 1 > n
    }

    pub fn overlap(&self, other: &Interval, n: usize) -> usize {
        let mine = self.sites(n);
        other.sites(n).iter().filter(|s| mine.contains(s)).count()
    }

    pub fn region(&self) -> Region {
        Region {
            starts: vec![self.start],
            lens: vec![self.len],
        }
    }

    pub fn label(&self, n: usize) -> String {
        format!("[{}:{}]", self.start, self.end(n))
    }
}

/// Placement of the `S` and `T` segments on a chain of `n` sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentLayout {
    pub n: usize,
    pub t: usize,
    pub boundary: Boundary,
    pub nu_bar: usize,
    pub r: usize,
    pub s: Vec<Interval>,
    /// `None` is the empty set (last entry on open chains).
    #[serde(rename = "T")]
    pub t_sets: Vec<Option<Interval>>,
    /// Gap after `S_k`; the last entry is the wrap-around gap.
    pub r_k: Vec<usize>,
    /// Largest slack allowed by the construction.
    pub slack_cap: usize,
    /// Whether every `r_k <= ceil(r / nu_bar)`.
    pub slack_within_even_share: bool,
    /// `(|T_k cap S_k|, |T_k cap S_k+1|)`, absent for empty `T_k`.
    pub overlaps: Vec<Option<(usize, usize)>>,
    pub min_overlap: usize,
    /// `n > 5 t`
    pub many_segments: bool,
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Deterministic layout: `s_1 = 1`, slack spread as evenly as possible with
/// earlier gaps filled first.
pub fn segment_layout(n: usize, t: usize, boundary: Boundary) -> Result<SegmentLayout> {
    if t < 2 || t > n {
        return Err(Error::InvalidParameter(format!(
            "segment length must satisfy 2 <= t <= n, got t = {t}, n = {n}"
        )));
    }
    let nu_bar = n / t;
    if nu_bar < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two segments, n / t = {nu_bar}"
        )));
    }
    let r = n - t * nu_bar;
    // open chains pin s_1 = 1 and s'_last = n, so the wrap gap is empty
    let gaps = match boundary {
        Boundary::Periodic => nu_bar,
        Boundary::Open => nu_bar - 1,
    };
    let (q, rem) = (r / gaps, r % gaps);
    let mut r_k: Vec<usize> = (0..gaps).map(|k| q + usize::from(k < rem)).collect();
    if boundary == Boundary::Open {
        r_k.push(0);
    }
    let mut s = Vec::with_capacity(nu_bar);
    let mut start = 1;
    for &rk in &r_k {
        s.push(Interval::new(start, t));
        start += t + rk;
    }
    let mut t_sets = Vec::with_capacity(nu_bar);
    for k in 0..nu_bar {
        if boundary == Boundary::Open && k + 1 == nu_bar {
            t_sets.push(None);
            continue;
        }
        let s_end = s[k].start + t - 1;
        let left = (t - r_k[k]) / 2;
        // T_k = [s'_k - left + 1 : s_{k+1} + ceil((t - r_k)/2) - 1], length t
        let from = s_end + 1 - left;
        let from = (from - 1) % n + 1;
        t_sets.push(Some(Interval::new(from, t)));
    }
    let overlaps: Vec<Option<(usize, usize)>> = t_sets
        .iter()
        .enumerate()
        .map(|(k, tk)| {
            tk.map(|tk| {
                (
                    tk.overlap(&s[k], n),
                    tk.overlap(&s[(k + 1) % nu_bar], n),
                )
            })
        })
        .collect();
    let min_overlap = overlaps
        .iter()
        .flatten()
        .map(|&(a, b)| a.min(b))
        .min()
        .unwrap_or(0);
    let even = ceil_div(r, nu_bar);
    Ok(SegmentLayout {
        n,
        t,
        boundary,
        nu_bar,
        r,
        slack_cap: ceil_div(r, gaps),
        slack_within_even_share: r_k.iter().all(|&x| x <= even),
        s,
        t_sets,
        r_k,
        overlaps,
        min_overlap,
        many_segments: n > 5 * t,
    })
}

impl SegmentLayout {
    /// A single segment covering the chain, with no `T` sets.
    pub fn whole(n: usize, boundary: Boundary) -> Self {
        Self {
            n,
            t: n,
            boundary,
            nu_bar: 1,
            r: 0,
            s: vec![Interval::new(1, n)],
            t_sets: vec![None],
            r_k: vec![0],
            slack_cap: 0,
            slack_within_even_share: true,
            overlaps: vec![None],
            min_overlap: 0,
            many_segments: false,
        }
    }

    /// `8 L^2 < t < n / 5`
    pub fn in_theorem_regime(&self, num_layers: usize) -> bool {
        8 * num_layers * num_layers < self.t && self.many_segments
    }

    /// Every `r_k <= t / 4`.
    pub fn slack_below_quarter(&self) -> bool {
        self.r_k.iter().all(|&x| 4 * x <= self.t)
    }

    /// All non-empty segments, `S` first.
    pub fn segments(&self) -> Vec<Interval> {
        self.s
            .iter()
            .copied()
            .chain(self.t_sets.iter().flatten().copied())
            .collect()
    }

    /// Structural checks; returns the first violated property.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.n;
        if self.s.iter().any(|s| s.len != self.t) {
            return Err("S segment of wrong length".into());
        }
        if self.t_sets.iter().flatten().any(|x| x.len != self.t) {
            return Err("T segment of wrong length".into());
        }
        for w in self.s.windows(2) {
            if w[0].start + w[0].len > w[1].start {
                return Err(format!("S segments {w:?} out of order or overlapping"));
            }
        }
        if let Some(last) = self.s.last() {
            if last.start + last.len - 1 > n {
                return Err("last S segment runs past n".into());
            }
        }
        if self.r_k.iter().sum::<usize>() != self.r {
            return Err("slack does not sum to r".into());
        }
        if self.r_k.iter().any(|&x| x > self.slack_cap) {
            return Err("slack above cap".into());
        }
        if self.boundary == Boundary::Open {
            if self.s[0].start != 1 || self.s[self.nu_bar - 1].end(n) != n {
                return Err("open chain must start at 1 and end at n".into());
            }
            if self.t_sets[self.nu_bar - 1].is_some() {
                return Err("open chain must have an empty last T".into());
            }
        }
        for (k, ov) in self.overlaps.iter().enumerate() {
            if let Some((a, b)) = ov {
                let need = (self.t - self.r_k[k]) / 2;
                if *a < need || *b < need {
                    return Err(format!("T_{} overlaps its neighbours by less than {need}", k + 1));
                }
            }
        }
        Ok(())
    }

    /// Text diagram: one row of site markers, one row for `S`, one for `T`.
    pub fn render_ascii(&self) -> String {
        let n = self.n;
        let mark = |k: usize| -> char {
            char::from_digit((k as u32 + 1) % 36, 36).unwrap_or('#')
        };
        let mut row_s = vec!['.'; n];
        for (k, s) in self.s.iter().enumerate() {
            for x in s.sites(n) {
                row_s[x - 1] = mark(k);
            }
        }
        let mut row_t = vec!['.'; n];
        for (k, tk) in self.t_sets.iter().enumerate() {
            if let Some(tk) = tk {
                for x in tk.sites(n) {
                    row_t[x - 1] = mark(k);
                }
            }
        }
        let ruler: String = (1..=n)
            .map(|i| if i % 10 == 0 { '|' } else { char::from(b'0' + (i % 10) as u8) })
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n={} t={} {} nu_bar={} r={} r_k={:?}",
            n, self.t, self.boundary, self.nu_bar, self.r, self.r_k
        );
        let _ = writeln!(out, "   {ruler}");
        let _ = writeln!(out, "T  {}", row_t.iter().collect::<String>());
        let _ = writeln!(out, "S  {}", row_s.iter().collect::<String>());
        for (k, s) in self.s.iter().enumerate() {
            let _ = write!(out, "S{}={} ", k + 1, s.label(n));
        }
        out.push('\n');
        for (k, tk) in self.t_sets.iter().enumerate() {
            match tk {
                Some(tk) => {
                    let _ = write!(out, "T{}={} ", k + 1, tk.label(n));
                }
                None => {
                    let _ = write!(out, "T{}=empty ", k + 1);
                }
            }
        }
        out.push('\n');
        out
    }
}
