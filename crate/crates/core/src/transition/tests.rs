use super::*;
use crate::lf::{parse_template, IdiomRef};
use crate::synth;
use rand::Rng;

/// The running-example template with the fare comparison collapsed into
/// an idiom node, as template normalization produces it.
fn normalized_running_template() -> Template {
    let pattern = parse_template("( = ( ground_fare v_a ) v_a )", None)
        .unwrap()
        .root()
        .clone();
    let idiom = IdiomRef::new("idiom_0", pattern);
    let inner = Tree {
        label: NodeLabel::Pred("and".into()),
        children: vec![
            parse_template("( ground_transport v_a )", None).unwrap().root().clone(),
            parse_template("( to_city v_a v_e )", None).unwrap().root().clone(),
            parse_template("( from_airport v_a v_e )", None).unwrap().root().clone(),
            Tree::leaf(NodeLabel::Idiom(idiom)),
        ],
    };
    let exists = Tree {
        label: NodeLabel::Pred("exists".into()),
        children: vec![Tree::leaf(NodeLabel::Slot(SlotType::Variable)), inner],
    };
    let lambda = Tree {
        label: NodeLabel::Pred("lambda".into()),
        children: vec![
            Tree::leaf(NodeLabel::Slot(SlotType::Variable)),
            Tree::leaf(NodeLabel::Pred("e".into())),
            exists,
        ],
    };
    Template::new(lambda).unwrap()
}

#[test]
fn oracle_reproduces_the_seven_action_sequence() {
    let template = normalized_running_template();
    let actions = oracle_actions(&template);
    let keys: Vec<String> = actions.iter().map(Action::key).collect();
    assert_eq!(
        keys,
        vec![
            "gen ( ground_transport v_a )",
            "gen ( to_city v_a v_e )",
            "gen ( from_airport v_a v_e )",
            "gen idiom_0",
            "reduce and :- NT NT NT NT",
            "reduce exists :- v_a NT",
            "reduce lambda :- v_a e NT",
        ]
    );
    // The idiom unit carries the collapsed subtree.
    match &actions[3] {
        Action::Gen(unit) => {
            assert_eq!(
                unit.expand_idioms().canonical(),
                "( = ( ground_fare v_a ) v_a )"
            );
        }
        other => panic!("expected gen, got {other}"),
    }
    assert_eq!(execute(&actions).unwrap(), template);
}

#[test]
fn gen_pushes_a_leaf() {
    let unit = parse_template("( ground_transport v_a )", None)
        .unwrap()
        .root()
        .clone();
    let state = apply_action(&ParserState::new(), &Action::Gen(unit)).unwrap();
    assert_eq!(state.stack_len(), 1);
}

#[test]
fn reduce_attaches_parent_to_popped_subtrees() {
    let mut state = ParserState::new();
    for sym in ["a", "b", "c", "d"] {
        let unit = Tree::pred(sym, vec![Tree::leaf(NodeLabel::Slot(SlotType::Variable))]);
        state = apply_action(&state, &Action::Gen(unit)).unwrap();
    }
    let rule = Rule::new(
        "and",
        vec![
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
        ],
    )
    .unwrap();
    let state = apply_action(&state, &Action::Reduce(rule)).unwrap();
    assert_eq!(state.stack_len(), 1);
    assert_eq!(
        state.stack()[0].canonical(),
        "( and ( a v_a ) ( b v_a ) ( c v_a ) ( d v_a ) )"
    );
}

#[test]
fn reduce_on_empty_stack_is_inapplicable() {
    let rule = Rule::new("p", vec![BodyItem::NonTerminal]).unwrap();
    let err = apply_action(&ParserState::new(), &Action::Reduce(rule)).unwrap_err();
    assert!(matches!(err, TransitionError::InapplicableAction(_)));
}

#[test]
fn rules_need_a_nonterminal() {
    assert!(matches!(
        Rule::new("p", vec![BodyItem::Literal(NodeLabel::Pred("e".into()))]),
        Err(TransitionError::InvalidRule(_))
    ));
}

#[test]
fn single_gen_executes_to_leaf_template() {
    let unit = Tree::leaf(NodeLabel::Slot(SlotType::Variable));
    let template = execute(&[Action::Gen(unit)]).unwrap();
    assert_eq!(template.canonical(), "v_a");
}

#[test]
fn single_leaf_oracle_is_one_gen() {
    let template = parse_template("v_a", None).unwrap();
    let actions = oracle_actions(&template);
    assert_eq!(actions.len(), 1);
    assert!(matches!(actions[0], Action::Gen(_)));
}

#[test]
fn incomplete_sequences_are_rejected() {
    let unit = || Tree::pred("p", vec![Tree::leaf(NodeLabel::Slot(SlotType::Variable))]);
    let err = execute(&[Action::Gen(unit()), Action::Gen(unit())]).unwrap_err();
    assert_eq!(err, TransitionError::IncompleteParse { stack_len: 2 });
    assert_eq!(
        execute(&[]).unwrap_err(),
        TransitionError::IncompleteParse { stack_len: 0 }
    );
}

#[test]
fn oracle_execute_bijection_on_random_templates() {
    let mut rng = synth::seeded_rng(23);
    for _ in 0..1000 {
        let depth = rng.gen_range(1..6);
        let branch = rng.gen_range(1..4);
        let template = synth::random_template(&mut rng, depth, branch);
        let actions = oracle_actions(&template);
        assert_eq!(execute(&actions).unwrap(), template);
    }
}

#[test]
fn stack_size_arithmetic() {
    let template = normalized_running_template();
    let mut state = ParserState::new();
    for action in oracle_actions(&template) {
        let before = state.stack_len();
        state = apply_action(&state, &action).unwrap();
        match &action {
            Action::Gen(_) => assert_eq!(state.stack_len(), before + 1),
            Action::Reduce(rule) => {
                assert_eq!(state.stack_len(), before + 1 - rule.arity());
            }
        }
    }
}

#[test]
fn action_count_formula() {
    // |oracle(t)| = #terminal units + #internal rule applications.
    let mut rng = synth::seeded_rng(5);
    for _ in 0..100 {
        let template = synth::random_template(&mut rng, 4, 3);
        let actions = oracle_actions(&template);
        let gens = actions
            .iter()
            .filter(|a| matches!(a, Action::Gen(_)))
            .count();
        let reduces = actions.len() - gens;
        let mut units = 0;
        count_units(template.root(), &mut units);
        assert_eq!(gens, units);
        assert_eq!(reduces, count_rules(template.root()));
    }
}

fn count_units(node: &Tree, out: &mut usize) {
    if super::is_unit(node) {
        *out += 1;
        return;
    }
    for child in node.children.iter().filter(|c| super::is_nt_child(c)) {
        count_units(child, out);
    }
}

fn count_rules(node: &Tree) -> usize {
    if super::is_unit(node) {
        return 0;
    }
    1 + node
        .children
        .iter()
        .filter(|c| super::is_nt_child(c))
        .map(count_rules)
        .sum::<usize>()
}

#[test]
fn applicable_actions_are_sound() {
    let mut rng = synth::seeded_rng(17);
    let templates: Vec<Template> = (0..30)
        .map(|_| synth::random_template(&mut rng, 4, 3))
        .collect();
    let inventory = ActionInventory::from_templates(&templates);
    // Fuzz: random applicable actions always succeed; inapplicable ones fail.
    for _ in 0..200 {
        let mut state = ParserState::new();
        for _ in 0..30 {
            let applicable = applicable_actions(&state, &inventory);
            if state.stack_len() == 0 {
                let only_gens = applicable
                    .iter()
                    .all(|&id| matches!(inventory.get(id), Action::Gen(_)));
                assert!(only_gens, "first action must be a GEN");
            }
            for id in 0..inventory.len() {
                let result = apply_action(&state, inventory.get(id));
                if applicable.contains(&id) {
                    assert!(result.is_ok(), "applicable action failed");
                } else {
                    assert!(result.is_err(), "inapplicable action succeeded");
                }
            }
            if applicable.is_empty() {
                break;
            }
            let pick = applicable[rng.gen_range(0..applicable.len())];
            state = apply_action(&state, inventory.get(pick)).unwrap();
        }
    }
}

#[test]
fn extract_rules_covers_running_example() {
    let template = normalized_running_template();
    let rules = extract_rules(std::slice::from_ref(&template));
    let keys: Vec<String> = rules.iter().map(Rule::key).collect();
    assert!(keys.contains(&"and :- NT NT NT NT".to_string()));
    assert!(keys.contains(&"exists :- v_a NT".to_string()));
    assert!(keys.contains(&"lambda :- v_a e NT".to_string()));
}

#[test]
fn extract_rules_of_single_leaf_corpus_is_empty() {
    let template = parse_template("v_a", None).unwrap();
    assert!(extract_rules(std::slice::from_ref(&template)).is_empty());
}

#[test]
fn oracle_reduce_rules_appear_in_extract_rules() {
    let mut rng = synth::seeded_rng(31);
    let templates: Vec<Template> = (0..50)
        .map(|_| synth::random_template(&mut rng, 4, 3))
        .collect();
    let rules: std::collections::BTreeSet<String> = extract_rules(&templates)
        .iter()
        .map(Rule::key)
        .collect();
    for template in &templates {
        for action in oracle_actions(template) {
            if let Action::Reduce(rule) = action {
                assert!(rules.contains(&rule.key()));
            }
        }
    }
}

#[test]
fn action_json_round_trip() {
    let template = normalized_running_template();
    for action in oracle_actions(&template) {
        let line = action_to_json(&action);
        let parsed = action_from_json(&line).unwrap();
        assert_eq!(parsed.key(), action.key());
    }
    let gen_line = action_to_json(&Action::Gen(
        parse_template("( to_city v_a v_e )", None).unwrap().root().clone(),
    ));
    assert_eq!(
        gen_line,
        r#"{"kind":"gen","payload":"( to_city v_a v_e )"}"#
    );
    let rule = Rule::new(
        "and",
        vec![
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
            BodyItem::NonTerminal,
        ],
    )
    .unwrap();
    assert_eq!(
        action_to_json(&Action::Reduce(rule)),
        r#"{"kind":"reduce","head":"and","body":["NT","NT","NT","NT"]}"#
    );
}

#[test]
fn slot_layout_round_trips_assignments() {
    let template = normalized_running_template();
    let actions = oracle_actions(&template);
    let (expanded, layout) = slot_layout(&actions).unwrap();
    assert_eq!(expanded, template.expanded());
    // Pre-order slot assignment of the running example.
    let slots = SlotAssignment {
        entity_values: vec!["atlanta:ci".into(), "boston:ci".into()],
        variable_values: vec![
            "$0".into(),
            "$1".into(),
            "$1".into(),
            "$1".into(),
            "$1".into(),
            "$1".into(),
            "$0".into(),
        ],
    };
    let per_step = layout.per_step(&slots);
    // Rebuild grouped per step and type.
    let mut grouped: BTreeMap<usize, BTreeMap<SlotType, Vec<String>>> = BTreeMap::new();
    for (step, items) in &per_step {
        for (t, v) in items {
            grouped
                .entry(*step)
                .or_default()
                .entry(*t)
                .or_default()
                .push(v.clone());
        }
    }
    assert_eq!(layout.to_assignment(&grouped), slots);
    // The idiom unit at step 3 owns two variable slots of the expanded tree.
    let step3: Vec<_> = per_step[&3].iter().map(|(t, _)| *t).collect();
    assert_eq!(step3, vec![SlotType::Variable, SlotType::Variable]);
}
