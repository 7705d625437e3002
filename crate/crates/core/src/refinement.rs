//! Refinement between Kripke structures through a state map.
//!
//! `K ⊑_E K'` (read: `K'` refines `K` under `E`) holds when every initial
//! state of `K'` maps into `init K` and every reachability `s →* s'` in `K'`
//! is matched by `E s →* E s'` in `K`. Two one-step conditions are sufficient:
//! simulation of every step of `K'`, or only of steps leaving reachable states.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kripke::{sat, CtlFormula, KripkeStructure, StateSet, TransitionSystem};

/// A function from refined states to abstract states. `None` means the map is
/// undefined on that state.
pub trait StateMap<R, A> {
    fn map_state(&self, state: &R) -> Option<A>;
}

/// A total map given by a closure.
#[derive(Debug, Clone, Copy)]
pub struct Total<F>(pub F);

impl<R, A, F: Fn(&R) -> A> StateMap<R, A> for Total<F> {
    fn map_state(&self, state: &R) -> Option<A> {
        Some((self.0)(state))
    }
}

/// A possibly partial map given by a closure.
#[derive(Debug, Clone, Copy)]
pub struct Partial<F>(pub F);

impl<R, A, F: Fn(&R) -> Option<A>> StateMap<R, A> for Partial<F> {
    fn map_state(&self, state: &R) -> Option<A> {
        (self.0)(state)
    }
}

/// The identity map.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<S: Clone> StateMap<S, S> for Identity {
    fn map_state(&self, state: &S) -> Option<S> {
        Some(state.clone())
    }
}

impl<R: Ord, A: Clone> StateMap<R, A> for BTreeMap<R, A> {
    fn map_state(&self, state: &R) -> Option<A> {
        self.get(state).cloned()
    }
}

impl<R, A, M: StateMap<R, A> + ?Sized> StateMap<R, A> for &M {
    fn map_state(&self, state: &R) -> Option<A> {
        (**self).map_state(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FailureReason {
    /// A refined initial state maps outside the abstract initial states.
    InitImageEscapes,
    /// A refined step has no abstract one-step counterpart.
    StepNotSimulated,
    /// A refined reachability has no abstract counterpart.
    ReachabilityLost,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InitImageEscapes => "init-image-escapes",
            Self::StepNotSimulated => "step-not-simulated",
            Self::ReachabilityLost => "reachability-lost",
        }
    }
}

/// A refined pair of states and their abstract images. For
/// [`FailureReason::InitImageEscapes`] both components are the offending
/// initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample<R, A> {
    pub refined_step: (R, R),
    pub abstract_images: (A, A),
    pub reason: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementVerdict<R, A> {
    pub counterexample: Option<Counterexample<R, A>>,
    /// Number of refined pairs (or steps) examined.
    pub pairs_checked: usize,
}

impl<R, A> RefinementVerdict<R, A> {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn image<R, A, E: StateMap<R, A>>(e: &E, s: &R) -> Result<A> {
    e.map_state(s).ok_or(Error::PartialStateMap)
}

/// `E` applied to every element of `set`.
pub fn image_set<R, A: Ord, E: StateMap<R, A>>(e: &E, set: &StateSet<R>) -> Result<StateSet<A>> {
    set.iter().map(|s| image(e, s)).collect()
}

/// Abstract successors of `a`, preferring the stored edges of `k`.
fn abstract_successors<T: TransitionSystem>(k: &KripkeStructure<T>, a: &T::State) -> StateSet<T::State> {
    match k.index_of(a) {
        Some(i) if !k.is_truncated() => {
            k.successor_indices(i).iter().map(|&j| k.state(j).clone()).collect()
        }
        _ => k.system().successors(a),
    }
}

fn init_escape<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
) -> Result<Option<Counterexample<TR::State, TA::State>>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    let abstract_init = k.init_set();
    for &i in k2.init_indices() {
        let s = k2.state(i);
        let a = image(e, s)?;
        if !abstract_init.contains(&a) {
            return Ok(Some(Counterexample {
                refined_step: (s.clone(), s.clone()),
                abstract_images: (a.clone(), a),
                reason: FailureReason::InitImageEscapes,
            }));
        }
    }
    Ok(None)
}

/// Decides `K ⊑_E K'` directly: for every initial `s0` of `K'` and every `s'`
/// reachable from it, `E s0 ∈ init K` and `E s0 →* E s'` in `K`.
///
/// Initial states are scanned in ascending order; for each, the images check
/// comes first, then reachable states in ascending order.
pub fn check_refinement_direct<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
) -> Result<RefinementVerdict<TR::State, TA::State>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    let images: Vec<TA::State> = k2.states().iter().map(|s| image(e, s)).collect::<Result<_>>()?;
    let abstract_init = k.init_set();
    let mut reach_cache: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    let mut pairs = 0;
    for &i in k2.init_indices() {
        let s0 = k2.state(i);
        let a0 = &images[i];
        pairs += 1;
        if !abstract_init.contains(a0) {
            return Ok(RefinementVerdict {
                counterexample: Some(Counterexample {
                    refined_step: (s0.clone(), s0.clone()),
                    abstract_images: (a0.clone(), a0.clone()),
                    reason: FailureReason::InitImageEscapes,
                }),
                pairs_checked: pairs,
            });
        }
        let a0_index = k.index_of(a0).expect("initial states belong to the structure");
        let reach = reach_cache.entry(a0_index).or_insert_with(|| k.forward_mask([a0_index]));
        let refined_reach = k2.forward_mask([i]);
        for (j, reachable) in refined_reach.iter().enumerate() {
            if !reachable {
                continue;
            }
            pairs += 1;
            let a = &images[j];
            if !k.index_of(a).is_some_and(|x| reach[x]) {
                return Ok(RefinementVerdict {
                    counterexample: Some(Counterexample {
                        refined_step: (s0.clone(), k2.state(j).clone()),
                        abstract_images: (a0.clone(), a.clone()),
                        reason: FailureReason::ReachabilityLost,
                    }),
                    pairs_checked: pairs,
                });
            }
        }
    }
    Ok(RefinementVerdict { counterexample: None, pairs_checked: pairs })
}

fn check_steps<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
    sources: &[bool],
) -> Result<RefinementVerdict<TR::State, TA::State>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    if let Some(cx) = init_escape(k, e, k2)? {
        return Ok(RefinementVerdict { counterexample: Some(cx), pairs_checked: 0 });
    }
    let images: Vec<TA::State> = k2.states().iter().map(|s| image(e, s)).collect::<Result<_>>()?;
    let mut pairs = 0;
    for (i, &active) in sources.iter().enumerate() {
        if !active {
            continue;
        }
        let a = &images[i];
        let next = abstract_successors(k, a);
        for &j in k2.successor_indices(i) {
            pairs += 1;
            if !next.contains(&images[j]) {
                return Ok(RefinementVerdict {
                    counterexample: Some(Counterexample {
                        refined_step: (k2.state(i).clone(), k2.state(j).clone()),
                        abstract_images: (a.clone(), images[j].clone()),
                        reason: FailureReason::StepNotSimulated,
                    }),
                    pairs_checked: pairs,
                });
            }
        }
    }
    Ok(RefinementVerdict { counterexample: None, pairs_checked: pairs })
}

/// Sufficient condition over every step of `K'`, reachable or not:
/// `E (init K') ⊆ init K` and `s →₁ s'` implies `E s →₁ E s'`.
///
/// Build `K'` with [`KripkeStructure::over_universe`] to include steps between
/// unreachable states.
pub fn check_strong_mt<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
) -> Result<RefinementVerdict<TR::State, TA::State>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    let all = alloc::vec![true; k2.len()];
    check_steps(k, e, k2, &all)
}

/// As [`check_strong_mt`], restricted to steps whose source is reachable from
/// an initial state of `K'`.
pub fn check_strong_mt_reachable<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
) -> Result<RefinementVerdict<TR::State, TA::State>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    let reachable = k2.forward_mask(k2.init_indices().iter().copied());
    check_steps(k, e, k2, &reachable)
}

/// `E (init K') ⊆ init K`, under the precondition that `K ⊑_E K'`.
pub fn check_init_ref<TA, TR, E>(k: &KripkeStructure<TA>, e: &E, k2: &KripkeStructure<TR>) -> Result<bool>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    if !check_refinement_direct(k, e, k2)?.holds() {
        return Err(Error::NotARefinement);
    }
    let init_image = image_set(e, &k2.init_set())?;
    Ok(init_image.is_subset(&k.init_set()))
}

/// Outcome of [`transfer_ef`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfTransfer<A: Ord> {
    /// `E` applied to the refined property.
    pub image: StateSet<A>,
    /// `K' ⊢ EF s'`.
    pub refined_ef: bool,
    /// `K ⊢ EF (E s')`, evaluated independently on `K`.
    pub abstract_ef: bool,
}

impl<A: Ord> EfTransfer<A> {
    /// The preservation implication on this instance.
    pub fn preserved(&self) -> bool {
        !self.refined_ef || self.abstract_ef
    }
}

/// Transfers the property `s'` of `K'` to `K` and evaluates `EF` on both
/// sides. Requires `K ⊑_E K'` and `init K ⊆ E (init K')`.
pub fn transfer_ef<TA, TR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
    property: &StateSet<TR::State>,
) -> Result<EfTransfer<TA::State>>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    E: StateMap<TR::State, TA::State>,
{
    if !check_refinement_direct(k, e, k2)?.holds() {
        return Err(Error::NotARefinement);
    }
    let init_image = image_set(e, &k2.init_set())?;
    if !k.init_set().is_subset(&init_image) {
        return Err(Error::InitialCoverage);
    }
    let refined_ef = sat(k2, &CtlFormula::ef(CtlFormula::Atom(property.clone())))?;
    let image = image_set(e, property)?;
    let within: BTreeSet<TA::State> = image.iter().filter(|a| k.contains(a)).cloned().collect();
    let abstract_ef = sat(k, &CtlFormula::ef(CtlFormula::Atom(within)))?;
    Ok(EfTransfer { image, refined_ef, abstract_ef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{build_kripke, Bounds, ExplicitSystem};

    fn set<const N: usize>(xs: [u32; N]) -> StateSet<u32> {
        xs.into_iter().collect()
    }

    fn kripke(edges: &[(u32, u32)], init: StateSet<u32>) -> KripkeStructure<ExplicitSystem<u32>> {
        build_kripke(&init, ExplicitSystem::from_edges(edges.iter().copied()), Bounds::default()).unwrap()
    }

    #[test]
    fn identity_refines_itself() {
        let k = kripke(&[(0, 1), (1, 2), (2, 0)], set([0]));
        assert!(check_refinement_direct(&k, &Identity, &k).unwrap().holds());
        assert!(check_strong_mt(&k, &Identity, &k).unwrap().holds());
        assert!(check_strong_mt_reachable(&k, &Identity, &k).unwrap().holds());
        assert!(check_init_ref(&k, &Identity, &k).unwrap());
    }

    #[test]
    fn stuttering_refinement_is_direct_but_not_strong() {
        // K: 0 → 1. K': 10 → 11 → 12 with 10,11 ↦ 0 and 12 ↦ 1.
        let k = kripke(&[(0, 1)], set([0]));
        let k2 = kripke(&[(10, 11), (11, 12)], set([10]));
        let e = Total(|s: &u32| if *s < 12 { 0 } else { 1 });
        assert!(check_refinement_direct(&k, &e, &k2).unwrap().holds());
        let v = check_strong_mt_reachable(&k, &e, &k2).unwrap();
        let cx = v.counterexample.unwrap();
        assert_eq!(cx.reason, FailureReason::StepNotSimulated);
        assert_eq!(cx.refined_step, (10, 11));
    }

    #[test]
    fn lost_reachability() {
        let k = kripke(&[(0, 1)], set([0]));
        let k2 = kripke(&[(10, 11)], set([10]));
        let e = Total(|s: &u32| if *s == 10 { 0 } else { 7 });
        let v = check_refinement_direct(&k, &e, &k2).unwrap();
        let cx = v.counterexample.unwrap();
        assert_eq!(cx.reason, FailureReason::ReachabilityLost);
        assert_eq!(cx.refined_step, (10, 11));
        assert_eq!(cx.abstract_images, (0, 7));
    }

    #[test]
    fn init_escape() {
        let k = kripke(&[(0, 1)], set([0]));
        let k2 = kripke(&[(10, 11)], set([10]));
        let e = Total(|s: &u32| s - 10 + 1);
        let v = check_refinement_direct(&k, &e, &k2).unwrap();
        assert_eq!(v.counterexample.unwrap().reason, FailureReason::InitImageEscapes);
        let v = check_strong_mt(&k, &e, &k2).unwrap();
        assert_eq!(v.counterexample.unwrap().reason, FailureReason::InitImageEscapes);
        assert_eq!(check_init_ref(&k, &e, &k2).unwrap_err(), Error::NotARefinement);
    }

    #[test]
    fn partial_map_is_an_error() {
        let k = kripke(&[(0, 1)], set([0]));
        let e = Partial(|s: &u32| (*s == 0).then_some(0));
        assert_eq!(check_refinement_direct(&k, &e, &k).unwrap_err(), Error::PartialStateMap);
    }

    #[test]
    fn unreachable_step_only_breaks_strong_mt() {
        // K': 0 → 1 reachable; 2 → 3 unreachable. K lacks an edge 2 → 3.
        let abstract_sys = ExplicitSystem::from_edges([(0, 1)]);
        let refined_sys = ExplicitSystem::from_edges([(0, 1), (2, 3)]);
        let k = build_kripke(&set([0]), abstract_sys, Bounds::default()).unwrap();
        let k2 = KripkeStructure::over_universe(refined_sys, set([0, 1, 2, 3]), set([0]), Bounds::default())
            .unwrap();
        assert!(check_refinement_direct(&k, &Identity, &k2).unwrap().holds());
        assert!(check_strong_mt_reachable(&k, &Identity, &k2).unwrap().holds());
        let cx = check_strong_mt(&k, &Identity, &k2).unwrap().counterexample.unwrap();
        assert_eq!(cx.refined_step, (2, 3));
    }

    #[test]
    fn transfer_ef_carries_reachability() {
        let k = kripke(&[(0, 1)], set([0]));
        let k2 = kripke(&[(10, 11), (11, 12)], set([10]));
        let e = Total(|s: &u32| if *s < 12 { 0 } else { 1 });
        let t = transfer_ef(&k, &e, &k2, &set([12])).unwrap();
        assert_eq!(t.image, set([1]));
        assert!(t.refined_ef && t.abstract_ef && t.preserved());
        let t = transfer_ef(&k, &e, &k2, &set([10])).unwrap();
        assert_eq!(t.image, set([0]));
        assert!(t.abstract_ef);
    }

    #[test]
    fn transfer_ef_needs_init_coverage() {
        let k = kripke(&[(0, 1)], set([0, 5]));
        let k2 = kripke(&[(10, 11)], set([10]));
        let e = Total(|s: &u32| if *s == 10 { 0 } else { 1 });
        assert_eq!(transfer_ef(&k, &e, &k2, &set([11])).unwrap_err(), Error::InitialCoverage);
    }
}
