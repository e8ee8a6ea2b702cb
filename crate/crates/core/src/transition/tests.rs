use super::*;
use crate::tree::{parse_bracketed, validate};

const DEPR: &str = "(depr (ns MultiIndex (func copy (arg levels))) (ns MultiIndex (func copy (arg codes))))";

fn derivation() -> Vec<(Transition, &'static str, String)> {
    use Label::*;
    vec![
        (Transition::shift(), "[codes, MultiIndex.copy, set_levels, set_codes]", "[levels]".into()),
        (Transition::unary(Arg), "[codes, MultiIndex.copy, set_levels, set_codes]", "[(arg levels)]".into()),
        (Transition::shift(), "[MultiIndex.copy, set_levels, set_codes]", "[(arg levels), codes]".into()),
        (Transition::unary(Arg), "[MultiIndex.copy, set_levels, set_codes]", "[(arg levels), (arg codes)]".into()),
        (
            Transition::shift(),
            "[set_levels, set_codes]",
            "[(arg levels), (arg codes), MultiIndex.copy]".into(),
        ),
        (
            Transition::reduce_lx_each(Func),
            "[set_levels, set_codes]",
            "[(ns MultiIndex (func copy (arg levels))), (ns MultiIndex (func copy (arg codes)))]".into(),
        ),
        (Transition::reduce_rx(Depr), "[set_levels, set_codes]", format!("[{DEPR}]")),
        (Transition::shift(), "[set_codes]", format!("[{DEPR}, set_levels]")),
        (Transition::shift(), "[]", format!("[{DEPR}, set_levels, set_codes]")),
        (
            Transition::reuse_args(),
            "[]",
            format!("[{DEPR}, (func set_levels (arg levels)), (func set_codes (arg codes))]"),
        ),
        (
            Transition::reuse_ns(),
            "[]",
            format!(
                "[{DEPR}, (ns MultiIndex (func set_levels (arg levels))), (ns MultiIndex (func set_codes (arg codes)))]"
            ),
        ),
        (
            Transition::reduce_rx(Repl),
            "[]",
            format!(
                "[{DEPR}, (repl (ns MultiIndex (func set_levels (arg levels))) (ns MultiIndex (func set_codes (arg codes))))]"
            ),
        ),
        (
            Transition::reduce_rx(Root),
            "[]",
            format!(
                "[(root {DEPR} (repl (ns MultiIndex (func set_levels (arg levels))) (ns MultiIndex (func set_codes (arg codes)))))]"
            ),
        ),
    ]
}

fn entities() -> Vec<CodeEntity> {
    CodeEntity::sequence(&["levels", "codes", "MultiIndex.copy", "set_levels", "set_codes"])
}

fn replay_strs(texts: &[&str], seq: &str) -> Result<ParserState, TransitionError> {
    replay(&CodeEntity::sequence(texts), &parse_sequence(seq).unwrap())
}

#[test]
fn golden_derivation_rows() {
    let mut state = ParserState::initial(entities());
    assert_eq!(state.buffer_string(), "[levels, codes, MultiIndex.copy, set_levels, set_codes]");
    assert_eq!(state.stack_string(), "[]");
    for (i, (t, buffer, stack)) in derivation().into_iter().enumerate() {
        assert!(state.legal_transitions().contains(&t), "row {i}: {t} not legal");
        state = state.apply(t).unwrap();
        assert_eq!(state.buffer_string(), buffer, "row {i}");
        assert_eq!(state.stack_string(), stack, "row {i}");
        assert!(state.conserves_entities(), "row {i}");
    }
    assert!(state.is_terminal());
    let gold = parse_bracketed(
        "(root (depr (ns MultiIndex (func copy (arg levels))) (ns MultiIndex (func copy (arg codes)))) \
         (repl (ns MultiIndex (func set_levels (arg levels))) (ns MultiIndex (func set_codes (arg codes)))))",
    )
    .unwrap();
    assert_eq!(state.forced_tree(), gold);
    let seq: Vec<Transition> = derivation().into_iter().map(|r| r.0).collect();
    assert_eq!(run(&entities(), &seq).unwrap(), gold);
}

#[test]
fn start_state_only_allows_shift() {
    let state = ParserState::initial(entities());
    assert_eq!(state.legal_transitions(), vec![Transition::shift()]);
    let empty = ParserState::initial(Vec::new());
    assert!(empty.legal_transitions().is_empty());
    assert!(!empty.is_terminal());
}

#[test]
fn arg_on_stack_excludes_reuse() {
    let state = replay_strs(&["levels", "codes"], "shift() unary_x(arg)").unwrap();
    let legal = state.legal_transitions();
    assert!(legal.contains(&Transition::shift()));
    assert!(legal.iter().all(|t| !matches!(
        t.kind(),
        TransitionKind::ReuseArgsRx | TransitionKind::ReuseNsRx | TransitionKind::ReuseFuncsRx
    )));
    // a lone arg cannot head anything or be wrapped further
    assert_eq!(legal, vec![Transition::shift()]);
}

#[test]
fn shift_moves_one_entity() {
    let s0 = ParserState::initial(entities());
    let s1 = s0.apply(Transition::shift()).unwrap();
    assert_eq!(s1.buffer().len() + 1, s0.buffer().len());
    assert_eq!(s1.stack().len(), s0.stack().len() + 1);
    assert_eq!(s0.stack().len(), 0, "apply must not mutate its input");
}

#[test]
fn reuse_args_copies_onto_existing_func() {
    let state = replay_strs(
        &["p", "A.f", "g"],
        "shift() unary_x(arg) shift() reduce_lx(func) reduce_rx(depr) shift() unary_x(func)",
    )
    .unwrap();
    assert_eq!(state.stack_string(), "[(depr (ns A (func f (arg p)))), (func g)]");
    let next = state.apply(Transition::reuse_args()).unwrap();
    assert_eq!(next.stack_string(), "[(depr (ns A (func f (arg p)))), (func g (arg p))]");
    assert!(next.conserves_entities());
    // one-shot: g now has arguments
    assert!(!next.is_legal(Transition::reuse_args()));
}

#[test]
fn reuse_funcs_wraps_replacement_args() {
    let state = replay_strs(
        &["errors", "tz_localize()", "nonexistent"],
        "shift() unary_x(arg) shift() reduce_lx(func) unary_x(ns) reduce_rx(depr) shift() unary_x(arg)",
    )
    .unwrap();
    let next = state.apply(Transition::reuse_funcs()).unwrap();
    assert_eq!(
        next.stack_string(),
        "[(depr (ns ⟨none⟩ (func tz_localize (arg errors)))), (func tz_localize (arg nonexistent))]"
    );
    assert!(next.conserves_entities());
}

#[test]
fn namespace_row_derivation() {
    let seq = "shift() unary_x(ns) unary_x(depr) shift() unary_x(ns) unary_x(repl) reduce_rx(root)";
    let tree = run(
        &CodeEntity::sequence(&["urllib", "urllib.request"]),
        &parse_sequence(seq).unwrap(),
    )
    .unwrap();
    assert_eq!(tree.to_bracketed(), "(root (depr (ns urllib)) (repl (ns urllib.request)))");
}

#[test]
fn root_requires_label_root() {
    let state = replay_strs(&["x"], "shift() unary_x(ns) unary_x(depr)").unwrap();
    assert!(state.buffer().is_empty());
    assert!(!state.is_terminal());
    assert!(state.is_legal(Transition::unary(Label::Root)));
    assert!(state.apply(Transition::unary(Label::Root)).unwrap().is_terminal());
}

#[test]
fn run_reports_non_terminal_and_illegal_steps() {
    let err = run(&CodeEntity::sequence(&["x"]), &parse_sequence("shift() unary_x(arg)").unwrap())
        .unwrap_err();
    assert!(matches!(err, TransitionError::NotTerminal { .. }), "{err:?}");
    let err = run(&CodeEntity::sequence(&["x"]), &parse_sequence("shift() shift()").unwrap())
        .unwrap_err();
    match err {
        TransitionError::IllegalAt { index, reason, .. } => {
            assert_eq!(index, 1);
            assert_eq!(reason, "buffer is empty");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn lx_root_accepts_replacement_first() {
    let tree = run(
        &CodeEntity::sequence(&["new_api", "old_api"]),
        &parse_sequence(
            "shift() unary_x(ns) unary_x(repl) shift() unary_x(ns) unary_x(depr) reduce_lx(root)",
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(tree.to_bracketed(), "(root (depr (ns old_api)) (repl (ns new_api)))");
}

#[test]
fn distributing_ns_over_attributes() {
    let state = replay_strs(
        &["_start", "_stop", "RangeIndex", "start", "stop"],
        "shift() unary_x(attr) shift() unary_x(attr) shift() reduce_lx_each(ns) reduce_rx(depr) \
         shift() shift() reuse_ns_rx()",
    )
    .unwrap();
    assert_eq!(
        state.stack_string(),
        "[(depr (ns RangeIndex (attr _start)) (ns RangeIndex (attr _stop))), \
         (ns RangeIndex (attr start)), (ns RangeIndex (attr stop))]"
    );
    assert!(state.conserves_entities());
    let done = state
        .apply(Transition::reduce_rx(Label::Repl))
        .unwrap()
        .apply(Transition::reduce_rx(Label::Root))
        .unwrap();
    assert!(done.is_terminal());
    assert!(validate(&done.forced_tree()).is_empty());
}

#[test]
fn inline_arguments_and_dotted_funcs() {
    let state = replay_strs(&["Series.clip(lower=threshold)"], "shift() unary_x(func)").unwrap();
    assert_eq!(state.stack_string(), "[(ns Series (func clip (arg lower=threshold)))]");
    assert!(state.conserves_entities());
    let state = replay_strs(&["deprecate()"], "shift()").unwrap();
    assert!(!state.is_legal(Transition::unary(Label::Ns)));
    assert!(!state.is_legal(Transition::unary(Label::Attr)));
}

#[test]
fn uncombinable_levels_are_illegal() {
    let two_depr = replay_strs(&["a", "b"], "shift() unary_x(ns) unary_x(depr) shift() unary_x(ns)").unwrap();
    assert!(!two_depr.is_legal(Transition::unary(Label::Depr)));
    assert!(two_depr.is_legal(Transition::unary(Label::Repl)));

    let buried = replay_strs(&["a", "b"], "shift() unary_x(ns) shift() unary_x(ns)").unwrap();
    assert!(!buried.is_legal(Transition::unary(Label::Depr)));
    assert!(buried.is_legal(Transition::reduce_rx(Label::Depr)));
}

#[test]
fn replaying_history_reproduces_state() {
    let state = replay_strs(
        &["levels", "codes", "MultiIndex.copy"],
        "shift() unary_x(arg) shift() unary_x(arg) shift() reduce_lx_each(func)",
    )
    .unwrap();
    let again = replay(state.entities(), state.history()).unwrap();
    assert_eq!(again, state);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    const POOL: &[&str] = &[
        "levels", "codes", "MultiIndex.copy", "set_levels()", "urllib.request", "Calendar.day_name",
        "f", "A.g(x)", "lower=threshold", "RangeIndex",
    ];

    fn walk(texts: Vec<&'static str>, choices: Vec<usize>) -> Vec<ParserState> {
        let mut state = ParserState::initial(CodeEntity::sequence(&texts));
        let mut states = vec![state.clone()];
        for c in choices {
            let legal = state.legal_transitions();
            if legal.is_empty() {
                break;
            }
            state = state.apply(legal[c % legal.len()]).unwrap();
            states.push(state.clone());
        }
        states
    }

    proptest! {
        #[test]
        fn random_walks_keep_invariants(
            texts in prop::collection::vec(prop::sample::select(POOL), 1..6),
            choices in prop::collection::vec(0usize..64, 0..40),
        ) {
            let states = walk(texts, choices);
            for pair in states.windows(2) {
                let (before, after) = (&pair[0], &pair[1]);
                prop_assert!(after.conserves_entities(), "{}", after.signature());
                // progress: (|buffer|, |stack|) decreases, or total height grows
                let measure = |s: &ParserState| (s.buffer().len(), s.stack().len());
                prop_assert!(
                    measure(after) < measure(before) || after.stack_height() > before.stack_height(),
                    "{} -> {}", before.signature(), after.signature()
                );
                let t = *after.history().last().unwrap();
                prop_assert_eq!(&before.apply(t).unwrap(), after);
            }
            let last = states.last().unwrap();
            prop_assert_eq!(&replay(last.entities(), last.history()).unwrap(), last);
            if last.is_terminal() {
                prop_assert!(validate(&last.forced_tree()).is_empty(), "{}", last.signature());
            }
        }

        #[test]
        fn illegal_transitions_are_rejected_without_change(
            texts in prop::collection::vec(prop::sample::select(POOL), 1..5),
            choices in prop::collection::vec(0usize..64, 0..20),
        ) {
            let state = walk(texts, choices).pop().unwrap();
            let legal = state.legal_transitions();
            for t in Transition::inventory() {
                prop_assert_eq!(state.apply(t).is_ok(), legal.contains(&t));
            }
        }
    }
}
