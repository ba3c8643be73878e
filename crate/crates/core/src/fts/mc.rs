//! Product-level model checker for the temporal fragment.
//!
//! Verdicts come from standard fixpoint evaluation; deadlock states are
//! totalized with an implicit self-loop. Counterexamples are
//! deterministic: the lexicographically smallest among the shortest
//! violating paths, with states ordered by id.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::formula::{StatePredicate, TemporalFormula};
use super::TransitionSystem;
use crate::variability::Verdict;

/// A violating path: a finite prefix, an optional lasso (the suffix from
/// `loop_index` repeats forever), and the state where the violation
/// manifests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub prefix: Vec<String>,
    pub loop_index: Option<usize>,
    pub violating: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub warnings: Vec<String>,
}

struct Checker<'a> {
    ids: Vec<&'a str>,
    labels: Vec<&'a BTreeSet<String>>,
    /// Totalized successor lists, sorted by destination id.
    succ: Vec<Vec<usize>>,
    initial: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn new(ts: &'a TransitionSystem) -> Self {
        let ids: Vec<&str> = ts.states().iter().map(|s| s.id.as_str()).collect();
        let initial: Vec<usize> = ts
            .initial()
            .iter()
            .map(|id| ids.iter().position(|x| x == id).expect("validated endpoints"))
            .collect();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
        for t in ts.transitions() {
            let src = ids.iter().position(|x| *x == t.src).expect("validated endpoints");
            let dst = ids.iter().position(|x| *x == t.dst).expect("validated endpoints");
            succ[src].insert(dst);
        }
        let succ: Vec<Vec<usize>> = succ
            .into_iter()
            .enumerate()
            .map(|(i, set)| {
                if set.is_empty() {
                    vec![i]
                } else {
                    let mut v: Vec<usize> = set.into_iter().collect();
                    v.sort_by_key(|j| ids[*j]);
                    v
                }
            })
            .collect();
        Checker {
            ids,
            labels: ts.states().iter().map(|s| &s.labels).collect(),
            succ,
            initial,
        }
    }

    fn holds(&self, p: &StatePredicate) -> Vec<bool> {
        self.labels.iter().map(|l| p.eval(l)).collect()
    }

    fn id_path(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|i| self.ids[*i].to_string()).collect()
    }

    /// Least fixpoint for `A[p U q]`: a state is in iff `q` holds, or
    /// `p` holds and every (totalized) successor is in.
    fn au_set(&self, p: &[bool], q: &[bool]) -> Vec<bool> {
        let n = self.ids.len();
        let mut z = q.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if !z[s] && p[s] && self.succ[s].iter().all(|t| z[*t]) {
                    z[s] = true;
                    changed = true;
                }
            }
            if !changed {
                return z;
            }
        }
    }

    /// Smallest (length, then lexicographic by ids) path from a seed to
    /// a target, expanding only through `allowed` states.
    fn best_path(
        &self,
        seeds: &[usize],
        allowed: &[bool],
        target: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut heap: BinaryHeap<Reverse<(usize, Vec<&str>, Vec<usize>)>> = BinaryHeap::new();
        let mut seen = vec![false; self.ids.len()];
        let mut seeds_sorted: Vec<usize> = seeds.to_vec();
        seeds_sorted.sort_by_key(|i| self.ids[*i]);
        seeds_sorted.dedup();
        for s in seeds_sorted {
            heap.push(Reverse((1, vec![self.ids[s]], vec![s])));
        }
        while let Some(Reverse((len, ids, path))) = heap.pop() {
            let node = *path.last().unwrap();
            if target(node) {
                return Some(path);
            }
            if seen[node] {
                continue;
            }
            seen[node] = true;
            for &next in &self.succ[node] {
                if allowed[next] && !seen[next] {
                    let mut ids2 = ids.clone();
                    ids2.push(self.ids[next]);
                    let mut path2 = path.clone();
                    path2.push(next);
                    heap.push(Reverse((len + 1, ids2, path2)));
                }
            }
        }
        None
    }

    fn reachable(&self, seeds: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.ids.len()];
        let mut queue: Vec<usize> = seeds.to_vec();
        while let Some(s) = queue.pop() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.extend(self.succ[s].iter().copied());
        }
        seen
    }

    fn check_ag(&self, p: &StatePredicate) -> (Verdict, Option<Counterexample>) {
        let holds = self.holds(p);
        let all = vec![true; self.ids.len()];
        match self.best_path(&self.initial, &all, |s| !holds[s]) {
            None => (Verdict::Pass, None),
            Some(path) => {
                let violating = Some(self.ids[*path.last().unwrap()].to_string());
                (
                    Verdict::Fail,
                    Some(Counterexample {
                        prefix: self.id_path(&path),
                        loop_index: None,
                        violating,
                    }),
                )
            }
        }
    }

    fn check_ef(&self, p: &StatePredicate) -> (Verdict, Option<Counterexample>) {
        let holds = self.holds(p);
        for &init in &self.initial {
            let reach = self.reachable(&[init]);
            if !reach.iter().enumerate().any(|(s, r)| *r && holds[s]) {
                // no witness path exists, so there is nothing to attach
                return (Verdict::Fail, None);
            }
        }
        (Verdict::Pass, None)
    }

    /// A violation of `A[p U q]` is a ¬q-path that reaches a ¬p∧¬q
    /// state, or a ¬q-lasso.
    fn au_counterexample(&self, seeds: &[usize], p: &[bool], q: &[bool]) -> Option<Counterexample> {
        let not_q: Vec<bool> = q.iter().map(|b| !b).collect();
        let bad_seeds: Vec<usize> = seeds.iter().copied().filter(|s| not_q[*s]).collect();
        if let Some(path) = self.best_path(&bad_seeds, &not_q, |s| !p[s] && not_q[s]) {
            let violating = Some(self.ids[*path.last().unwrap()].to_string());
            return Some(Counterexample { prefix: self.id_path(&path), loop_index: None, violating });
        }
        // lasso: states lying on a cycle within the ¬q region
        let n = self.ids.len();
        let mut on_cycle = vec![false; n];
        for s in 0..n {
            if !not_q[s] {
                continue;
            }
            let mut seen = vec![false; n];
            let mut queue: Vec<usize> =
                self.succ[s].iter().copied().filter(|t| not_q[*t]).collect();
            while let Some(t) = queue.pop() {
                if seen[t] {
                    continue;
                }
                seen[t] = true;
                queue.extend(self.succ[t].iter().copied().filter(|u| not_q[*u]));
            }
            on_cycle[s] = seen[s];
        }
        let stem = self.best_path(&bad_seeds, &not_q, |s| on_cycle[s])?;
        let knot = *stem.last().unwrap();
        let cycle_seeds: Vec<usize> =
            self.succ[knot].iter().copied().filter(|t| not_q[*t]).collect();
        let cycle = self
            .best_path(&cycle_seeds, &not_q, |s| s == knot)
            .expect("knot lies on a cycle");
        let mut prefix = stem.clone();
        prefix.extend(cycle[..cycle.len() - 1].iter().copied());
        Some(Counterexample {
            prefix: self.id_path(&prefix),
            loop_index: Some(stem.len() - 1),
            violating: Some(self.ids[knot].to_string()),
        })
    }

    fn check_au(
        &self,
        p: &StatePredicate,
        q: &StatePredicate,
    ) -> (Verdict, Option<Counterexample>) {
        let hp = self.holds(p);
        let hq = self.holds(q);
        let au = self.au_set(&hp, &hq);
        if self.initial.iter().all(|s| au[*s]) {
            return (Verdict::Pass, None);
        }
        let cex = self.au_counterexample(&self.initial, &hp, &hq);
        debug_assert!(cex.is_some(), "failed AU must admit a counterexample");
        (Verdict::Fail, cex)
    }

    fn check_ag_implies_au(
        &self,
        trigger: &StatePredicate,
        hold: &StatePredicate,
        release: &StatePredicate,
    ) -> (Verdict, Option<Counterexample>) {
        let ht = self.holds(trigger);
        let hp = self.holds(hold);
        let hq = self.holds(release);
        let au = self.au_set(&hp, &hq);
        let all = vec![true; self.ids.len()];
        let Some(stem) = self.best_path(&self.initial, &all, |s| ht[s] && !au[s]) else {
            return (Verdict::Pass, None);
        };
        let bad = *stem.last().unwrap();
        let tail = self
            .au_counterexample(&[bad], &hp, &hq)
            .expect("state outside the AU set must admit a counterexample");
        let mut prefix = self.id_path(&stem);
        prefix.extend(tail.prefix.iter().skip(1).cloned());
        let offset = stem.len() - 1;
        (
            Verdict::Fail,
            Some(Counterexample {
                prefix,
                loop_index: tail.loop_index.map(|i| i + offset),
                violating: tail.violating,
            }),
        )
    }
}

/// Checks one formula against a product transition system.
pub fn mc_product(ts: &TransitionSystem, formula: &TemporalFormula) -> McResult {
    let checker = Checker::new(ts);
    let known = ts.known_labels();
    let warnings: Vec<String> = formula
        .literals()
        .iter()
        .filter(|l| !known.contains(*l))
        .map(|l| format!("unknown label `{l}`"))
        .collect();
    let (verdict, counterexample) = match formula {
        TemporalFormula::Ag(p) => checker.check_ag(p),
        TemporalFormula::Au(p, q) => checker.check_au(p, q),
        TemporalFormula::Ef(p) => checker.check_ef(p),
        TemporalFormula::AgImpliesAu(p, q, r) => checker.check_ag_implies_au(p, q, r),
    };
    McResult { verdict, counterexample, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fts::{TsState, TsTransition};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ts(
        states: &[(&str, &[&str])],
        transitions: &[(&str, &str)],
        initial: &[&str],
    ) -> TransitionSystem {
        TransitionSystem::new(
            states
                .iter()
                .map(|(id, labels)| TsState {
                    id: id.to_string(),
                    labels: labels.iter().map(|l| l.to_string()).collect(),
                })
                .collect(),
            transitions
                .iter()
                .enumerate()
                .map(|(i, (src, dst))| TsTransition {
                    src: src.to_string(),
                    action: format!("t{i}"),
                    dst: dst.to_string(),
                })
                .collect(),
            initial.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn fml(text: &str) -> TemporalFormula {
        TemporalFormula::parse(text).unwrap()
    }

    #[test]
    fn ag_on_a_self_loop() {
        let sys = ts(&[("s0", &["p"])], &[("s0", "s0")], &["s0"]);
        assert_eq!(mc_product(&sys, &fml("AG p")).verdict, Verdict::Pass);
    }

    #[test]
    fn ag_fails_with_single_state_counterexample() {
        let sys = ts(&[("s0", &[])], &[("s0", "s0")], &["s0"]);
        let result = mc_product(&sys, &fml("AG q"));
        assert_eq!(result.verdict, Verdict::Fail);
        let cex = result.counterexample.unwrap();
        assert_eq!(cex.prefix, vec!["s0"]);
        assert!(!result.warnings.is_empty());
    }

    #[test]
    fn au_passes_on_two_state_chain() {
        let sys = ts(&[("s0", &["p"]), ("s1", &["q"])], &[("s0", "s1"), ("s1", "s1")], &["s0"]);
        assert_eq!(mc_product(&sys, &fml("A[p U q]")).verdict, Verdict::Pass);
    }

    #[test]
    fn au_fails_with_q_free_lasso() {
        let sys = ts(&[("s0", &["p"])], &[("s0", "s0")], &["s0"]);
        let result = mc_product(&sys, &fml("A[p U q]"));
        assert_eq!(result.verdict, Verdict::Fail);
        let cex = result.counterexample.unwrap();
        assert_eq!(cex.loop_index, Some(0));
        assert_eq!(cex.prefix, vec!["s0"]);
    }

    #[test]
    fn au_fails_at_not_p_not_q_state() {
        let sys = ts(
            &[("s0", &["p"]), ("s1", &[])],
            &[("s0", "s1"), ("s1", "s1")],
            &["s0"],
        );
        let result = mc_product(&sys, &fml("A[p U q]"));
        assert_eq!(result.verdict, Verdict::Fail);
        let cex = result.counterexample.unwrap();
        assert_eq!(cex.prefix, vec!["s0", "s1"]);
        assert_eq!(cex.loop_index, None);
    }

    #[test]
    fn ef_fail_has_no_counterexample() {
        let sys = ts(&[("s0", &[])], &[], &["s0"]);
        let result = mc_product(&sys, &fml("EF p"));
        assert_eq!(result.verdict, Verdict::Fail);
        assert!(result.counterexample.is_none());
    }

    #[test]
    fn deadlock_states_get_an_implicit_self_loop() {
        // without totalization, AG over the deadlocked s1 would be
        // vacuous in path semantics; with it, AU below must fail
        let sys = ts(&[("s0", &["p"]), ("s1", &["p"])], &[("s0", "s1")], &["s0"]);
        let result = mc_product(&sys, &fml("A[p U q]"));
        assert_eq!(result.verdict, Verdict::Fail);
        assert_eq!(result.counterexample.unwrap().loop_index, Some(1));
    }

    // enumeration-based oracle, independent of the fixpoint path:
    // explores all paths, cutting at ¬q-revisits for AU
    mod oracle {
        use super::*;

        pub fn reach(sys: &TransitionSystem, from: usize, succ: &[Vec<usize>]) -> Vec<bool> {
            let mut seen = vec![false; sys.states().len()];
            fn walk(s: usize, succ: &[Vec<usize>], seen: &mut Vec<bool>) {
                if seen[s] {
                    return;
                }
                seen[s] = true;
                for &t in &succ[s] {
                    walk(t, succ, seen);
                }
            }
            walk(from, succ, &mut seen);
            seen
        }

        pub fn au_holds(
            s: usize,
            p: &[bool],
            q: &[bool],
            succ: &[Vec<usize>],
            stack: &mut Vec<usize>,
        ) -> bool {
            if q[s] {
                return true;
            }
            if !p[s] {
                return false;
            }
            if stack.contains(&s) {
                // a ¬q cycle: some path never reaches q
                return false;
            }
            stack.push(s);
            let ok = succ[s].iter().all(|&t| au_holds(t, p, q, succ, stack));
            stack.pop();
            ok
        }
    }

    fn oracle_verdict(sys: &TransitionSystem, formula: &TemporalFormula) -> Verdict {
        let ids: Vec<&str> = sys.states().iter().map(|s| s.id.as_str()).collect();
        let index = |id: &str| ids.iter().position(|x| *x == id).unwrap();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
        for t in sys.transitions() {
            let (a, b) = (index(&t.src), index(&t.dst));
            if !succ[a].contains(&b) {
                succ[a].push(b);
            }
        }
        for (i, s) in succ.iter_mut().enumerate() {
            if s.is_empty() {
                s.push(i);
            }
        }
        let holds = |p: &StatePredicate| -> Vec<bool> {
            sys.states().iter().map(|s| p.eval(&s.labels)).collect()
        };
        let initials: Vec<usize> = sys.initial().iter().map(|s| index(s)).collect();
        let pass = match formula {
            TemporalFormula::Ag(p) => {
                let hp = holds(p);
                initials.iter().all(|&i| {
                    oracle::reach(sys, i, &succ)
                        .iter()
                        .enumerate()
                        .all(|(s, r)| !*r || hp[s])
                })
            }
            TemporalFormula::Ef(p) => {
                let hp = holds(p);
                initials.iter().all(|&i| {
                    oracle::reach(sys, i, &succ).iter().enumerate().any(|(s, r)| *r && hp[s])
                })
            }
            TemporalFormula::Au(p, q) => {
                let (hp, hq) = (holds(p), holds(q));
                initials.iter().all(|&i| oracle::au_holds(i, &hp, &hq, &succ, &mut Vec::new()))
            }
            TemporalFormula::AgImpliesAu(t, p, q) => {
                let (ht, hp, hq) = (holds(t), holds(p), holds(q));
                initials.iter().all(|&i| {
                    oracle::reach(sys, i, &succ).iter().enumerate().all(|(s, r)| {
                        !*r || !ht[s] || oracle::au_holds(s, &hp, &hq, &succ, &mut Vec::new())
                    })
                })
            }
        };
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub(crate) fn random_ts(rng: &mut StdRng, max_states: usize) -> TransitionSystem {
        let n = rng.gen_range(1..=max_states);
        let labels = ["p", "q", "r"];
        let states: Vec<TsState> = (0..n)
            .map(|i| TsState {
                id: format!("s{i}"),
                labels: labels
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|l| l.to_string())
                    .collect(),
            })
            .collect();
        let mut transitions = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(0.3) {
                    transitions.push(TsTransition {
                        src: format!("s{i}"),
                        action: format!("a{i}_{j}"),
                        dst: format!("s{j}"),
                    });
                }
            }
        }
        let initial = vec![format!("s{}", rng.gen_range(0..n))];
        TransitionSystem::new(states, transitions, initial).unwrap()
    }

    #[test]
    fn verdicts_agree_with_path_enumeration_oracle() {
        let formulas = [
            fml("AG p"),
            fml("A[p U q]"),
            fml("EF q"),
            fml("AG (p -> A[q U r])"),
            fml("AG (p | q)"),
            fml("A[p | r U q & r]"),
        ];
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let sys = random_ts(&mut rng, 6);
            for formula in &formulas {
                let got = mc_product(&sys, formula).verdict;
                let want = oracle_verdict(&sys, formula);
                assert_eq!(got, want, "system {sys:?} formula {formula}");
            }
        }
    }

    #[test]
    fn counterexamples_replay_as_real_violating_paths() {
        let mut rng = StdRng::seed_from_u64(11);
        let formulas = [fml("AG p"), fml("A[p U q]"), fml("AG (p -> A[q U r])")];
        for _ in 0..200 {
            let sys = random_ts(&mut rng, 6);
            for formula in &formulas {
                let result = mc_product(&sys, formula);
                let Some(cex) = &result.counterexample else { continue };
                // edges of the prefix must exist (totalized)
                for pair in cex.prefix.windows(2) {
                    assert!(
                        sys.transitions().iter().any(|t| t.src == pair[0] && t.dst == pair[1])
                            || pair[0] == pair[1]
                                && sys.transitions().iter().all(|t| t.src != pair[0]),
                        "missing edge {pair:?}"
                    );
                }
                if let Some(li) = cex.loop_index {
                    let last = cex.prefix.last().unwrap();
                    let back = &cex.prefix[li];
                    assert!(
                        sys.transitions().iter().any(|t| &t.src == last && &t.dst == back)
                            || last == back
                                && sys.transitions().iter().all(|t| &t.src != last),
                        "missing loop edge {last}->{back}"
                    );
                }
            }
        }
    }
}
