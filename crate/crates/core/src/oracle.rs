//! Independent reference computations the simulator is checked against.
//! None of these touch the kernel.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Expected prevalence of a fully mixed discrete-time SIR process that
/// matches the toy epidemic's timing.
///
/// Each tick, infected individuals recover with probability `gamma`
/// first; then every susceptible is exposed to the contacts drawn on the
/// previous tick. `m = n k / 2` random pairs are drawn per tick, so a given
/// person sits in each pair with probability `2/n`, and a pair partner is
/// infected with probability `I/(n-1)`. Contacts from the initial state do
/// not exist, so transmission starts at tick 2.
pub fn sir_prevalence(n: f64, i0: f64, beta: f64, k: f64, gamma: f64, ticks: usize) -> Vec<f64> {
    let pairs = n * k / 2.0;
    let mut s = n - i0;
    let mut i = i0;
    let mut out = Vec::with_capacity(ticks + 1);
    out.push(i);
    for t in 1..=ticks {
        let i_after = i * (1.0 - gamma);
        let new = if t >= 2 {
            let per_pair = 2.0 / n * beta * i_after / (n - 1.0);
            s * (1.0 - (1.0 - per_pair).powf(pairs))
        } else {
            0.0
        };
        s -= new;
        i = i_after + new;
        out.push(i);
    }
    out
}

/// Compromise tick of every node when vulnerability and propagation are
/// both 1 and recovery is slower than the spread. `deps[a]` lists the
/// nodes `a` depends on; attacks travel from a dependency to its
/// dependents, one hop per tick. Relaxes edges until nothing changes.
pub fn attack_times(
    deps: &BTreeMap<String, Vec<String>>,
    target: &str,
    first_hit: u64,
) -> BTreeMap<String, Option<u64>> {
    let mut time: BTreeMap<String, Option<u64>> = deps.keys().map(|k| (k.clone(), None)).collect();
    time.insert(target.to_string(), Some(first_hit));
    loop {
        let mut changed = false;
        for (a, ds) in deps {
            for d in ds {
                if let Some(td) = time[d] {
                    let cand = td + 1;
                    if time[a].is_none_or(|ta| cand < ta) {
                        time.insert(a.clone(), Some(cand));
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return time;
        }
    }
}

/// Mean number of compromised leaves of a star whose hub is always
/// compromised, by plain Monte Carlo with its own generator.
pub fn star_leaves_monte_carlo(leaves: usize, vulnerability: f64, propagation: f64, runs: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut total = 0usize;
    for _ in 0..runs {
        for _ in 0..leaves {
            if rng.gen::<f64>() < propagation && rng.gen::<f64>() < vulnerability {
                total += 1;
            }
        }
    }
    total as f64 / runs as f64
}

/// `ln C(n, k)`.
fn ln_choose(n: u64, k: u64) -> f64 {
    let lg = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
    lg(n) - lg(k) - lg(n - k)
}

pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Long-run mean bed occupancy of `n` independent patients that fall ill
/// with probability `a` per tick and leave with probability `mu`, served by
/// `c` beds: E[min(X, c)] with X ~ Binomial(n, a/(a+mu)).
pub fn queue_occupancy(n: u64, a: f64, mu: f64, c: u64) -> f64 {
    let p = a / (a + mu);
    (0..=n).map(|x| binomial_pmf(n, p, x) * x.min(c) as f64).sum()
}

/// `(mean, sd)` of a binomial proportion.
pub fn binomial_band(n: u64, p: f64) -> (f64, f64) {
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Every simple path from `from` to `to` in a small directed graph,
/// cheapest first (ties by the sequence of link ids).
pub fn brute_force_route(links: &[(usize, usize, f64, &str)], from: usize, to: usize) -> Option<Vec<String>> {
    fn walk<'a>(
        links: &[(usize, usize, f64, &'a str)],
        at: usize,
        to: usize,
        seen: &mut Vec<usize>,
        path: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<&'a str>)>,
    ) {
        if at == to {
            let cost = path.iter().map(|&i| links[i].2).sum();
            out.push((cost, path.iter().map(|&i| links[i].3).collect()));
            return;
        }
        for (i, l) in links.iter().enumerate() {
            if l.0 == at && !seen.contains(&l.1) {
                seen.push(l.1);
                path.push(i);
                walk(links, l.1, to, seen, path, out);
                path.pop();
                seen.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(links, from, to, &mut vec![from], &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out.into_iter()
        .next()
        .map(|(_, p)| p.into_iter().map(String::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sir_conserves_and_peaks_once() {
        let i = sir_prevalence(500.0, 10.0, 0.025, 5.0, 0.05, 600);
        let peak = i.iter().cloned().fold(0.0, f64::max);
        let at = i.iter().position(|&x| x == peak).unwrap();
        assert!(peak > 100.0 && at > 10);
        assert!(i[..=at].windows(2).skip(2).all(|w| w[1] >= w[0]));
        assert!(i[at..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn no_transmission_means_geometric_decay() {
        let i = sir_prevalence(100.0, 10.0, 0.0, 4.0, 0.1, 3);
        assert!((i[3] - 10.0 * 0.9f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn chain_times_are_hop_counts() {
        let deps: BTreeMap<String, Vec<String>> = [("a", vec![]), ("b", vec!["a"]), ("c", vec!["b"])]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
            .collect();
        let t = attack_times(&deps, "a", 10);
        assert_eq!(t["a"], Some(10));
        assert_eq!(t["b"], Some(11));
        assert_eq!(t["c"], Some(12));
        let t = attack_times(&deps, "b", 10);
        assert_eq!(t["a"], None);
    }

    #[test]
    fn queue_mean_without_a_bed_limit_is_binomial() {
        let m = queue_occupancy(100, 0.01, 0.04, 100);
        assert!((m - 20.0).abs() < 1e-9);
        assert!(queue_occupancy(100, 0.01, 0.04, 10) < 10.0);
    }

    #[test]
    fn star_monte_carlo_is_near_its_mean() {
        let m = star_leaves_monte_carlo(4, 1.0, 0.5, 20_000, 7);
        assert!((m - 2.0).abs() < 0.05);
    }

    #[test]
    fn diamond_route() {
        let links = [(0, 1, 1.0, "a"), (1, 3, 5.0, "b"), (0, 2, 2.0, "c"), (2, 3, 1.0, "d")];
        assert_eq!(brute_force_route(&links, 0, 3).unwrap(), vec!["c", "d"]);
    }
}
