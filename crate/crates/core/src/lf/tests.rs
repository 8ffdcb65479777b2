use super::*;
use crate::synth;
use rand::Rng;

const RUNNING_LF: &str = "( lambda $0 e ( exists $1 ( and ( ground_transport $1 ) \
     ( to_city $1 atlanta:ci ) ( from_airport $1 atlanta:ci ) ( = ( ground_fare $1 ) $0 ) ) ) )";

const RUNNING_TEMPLATE: &str = "(lambda v_a e (exists v_a (and ( ground_transport v_a ) \
     (to_city v_a v_e )(from_airport v_a v_e) ( =(ground_fare v_a ) v_a ))))";

#[test]
fn parse_two_node_tree() {
    let tree = parse_lf("(job $0)").unwrap();
    assert_eq!(tree.root().label, NodeLabel::Pred("job".into()));
    assert_eq!(tree.root().children.len(), 1);
    assert_eq!(
        tree.root().children[0].label,
        NodeLabel::Atom("$0".into())
    );
}

#[test]
fn parse_running_example() {
    let tree = parse_lf(RUNNING_LF).unwrap();
    let preds = tree.root().predicate_symbols();
    for expected in [
        "lambda",
        "exists",
        "and",
        "ground_transport",
        "to_city",
        "from_airport",
        "=",
        "ground_fare",
    ] {
        assert!(preds.contains(expected), "missing predicate {expected}");
    }
    let atoms: Vec<&str> = tree
        .root()
        .preorder()
        .filter_map(|n| match &n.label {
            NodeLabel::Atom(s) => Some(s.as_str()),
            _ => None,
        })
        .collect();
    assert!(atoms.contains(&"atlanta:ci"));
}

#[test]
fn parse_rejects_malformed_input() {
    assert_eq!(parse_lf("(and (a").unwrap_err(), LfError::UnbalancedParens);
    assert_eq!(parse_lf("").unwrap_err(), LfError::EmptyExpression);
    assert_eq!(parse_lf("( )").unwrap_err(), LfError::EmptyExpression);
    assert_eq!(parse_lf("a b").unwrap_err(), LfError::TrailingTokens);
    assert_eq!(parse_lf("(a))").unwrap_err(), LfError::TrailingTokens);
    assert_eq!(parse_lf("((a) b)").unwrap_err(), LfError::ExpectedSymbol);
    assert_eq!(
        parse_lf("(a \u{1}b)").unwrap_err(),
        LfError::IllegalToken('\u{1}')
    );
}

#[test]
fn serialize_two_node_tree() {
    let tree = parse_lf("(job $0)").unwrap();
    assert_eq!(serialize_lf(&tree), "( job $0 )");
}

#[test]
fn serialize_parse_identity_on_canonical_strings() {
    for text in [
        "( job $0 )",
        "a",
        RUNNING_LF,
        "( and ( a b ) ( c d e ) atlanta:ci )",
    ] {
        let canonical = serialize_lf(&parse_lf(text).unwrap());
        assert_eq!(serialize_lf(&parse_lf(&canonical).unwrap()), canonical);
    }
}

#[test]
fn random_trees_round_trip() {
    let mut rng = synth::seeded_rng(7);
    for _ in 0..300 {
        let depth = rng.gen_range(1..5);
        let branch = rng.gen_range(1..4);
        let tree = synth::random_lf(&mut rng, depth, branch);
        let text = serialize_lf(&tree);
        assert_eq!(parse_lf(&text).unwrap(), tree, "round trip failed: {text}");
    }
}

#[test]
fn parsed_nodes_partition_into_predicates_and_values() {
    let tree = parse_lf(RUNNING_LF).unwrap();
    for node in tree.root().preorder() {
        match &node.label {
            NodeLabel::Pred(_) => {}
            NodeLabel::Atom(_) => assert!(node.is_leaf(), "slot-value nodes must be leaves"),
            other => panic!("unexpected label in parsed LF: {other:?}"),
        }
    }
}

#[test]
fn extract_running_example_matches_displayed_template() {
    let tree = parse_lf(RUNNING_LF).unwrap();
    let (template, slots) = extract_template(&tree, &AtomLexicon::default()).unwrap();
    let expected = parse_template(RUNNING_TEMPLATE, None).unwrap();
    assert_eq!(template, expected);
    assert_eq!(slots.entity_values, vec!["atlanta:ci", "atlanta:ci"]);
    assert_eq!(
        slots.variable_values,
        vec!["$0", "$1", "$1", "$1", "$1", "$1", "$0"]
    );
}

#[test]
fn extract_without_atoms_is_identity() {
    let tree = parse_lf("( and ( p e ) ( q all ) )").unwrap();
    let (template, slots) = extract_template(&tree, &AtomLexicon::default()).unwrap();
    assert_eq!(template.root(), tree.root());
    assert!(slots.is_empty());
}

#[test]
fn entity_choice_does_not_change_template() {
    let a = parse_lf("( to_city $0 atlanta:ci )").unwrap();
    let b = parse_lf("( to_city $0 boston:ci )").unwrap();
    let lex = AtomLexicon::default();
    assert_eq!(
        extract_template(&a, &lex).unwrap().0,
        extract_template(&b, &lex).unwrap().0
    );
}

#[test]
fn extract_is_idempotent_on_templates() {
    let tree = parse_lf(RUNNING_LF).unwrap();
    let lex = AtomLexicon::default();
    let (template, _) = extract_template(&tree, &lex).unwrap();
    let again = SemanticTree::new(template.root().clone());
    let (template2, slots2) = extract_template(&again, &lex).unwrap();
    assert_eq!(template, template2);
    assert!(slots2.is_empty());
}

#[test]
fn lexicon_overrides_plain_symbols() {
    let lex = AtomLexicon::new(vec!["nyc".to_string()]).unwrap();
    let tree = parse_lf_with("( city nyc )", &lex).unwrap();
    let (template, slots) = extract_template(&tree, &lex).unwrap();
    assert_eq!(template.canonical(), "( city v_e )");
    assert_eq!(slots.entity_values, vec!["nyc"]);
}

#[test]
fn lexicon_rejects_variable_shaped_entries() {
    assert_eq!(
        AtomLexicon::new(vec!["$x".to_string()]).unwrap_err(),
        LfError::LexiconConflict("$x".into())
    );
}

#[test]
fn fill_empty_template_is_identity() {
    let template = parse_template("( p e )", None).unwrap();
    let filled = fill_template(&template, &SlotAssignment::default()).unwrap();
    assert_eq!(filled.root(), template.root());
}

#[test]
fn fill_round_trips_running_example() {
    let tree = parse_lf(RUNNING_LF).unwrap();
    let lex = AtomLexicon::default();
    let (template, slots) = extract_template(&tree, &lex).unwrap();
    assert_eq!(fill_template(&template, &slots).unwrap(), tree);
}

#[test]
fn fill_round_trips_random_trees() {
    let mut rng = synth::seeded_rng(11);
    let lex = AtomLexicon::default();
    for _ in 0..300 {
        let tree = synth::random_lf(&mut rng, 4, 3);
        let (template, slots) = extract_template(&tree, &lex).unwrap();
        assert_eq!(fill_template(&template, &slots).unwrap(), tree);
    }
}

#[test]
fn fill_checks_slot_arity() {
    let template = parse_template("( to_city v_a v_e )", None).unwrap();
    let err = fill_template(&template, &SlotAssignment::default()).unwrap_err();
    assert!(matches!(err, LfError::SlotArityMismatch { .. }));
}

#[test]
fn utterance_tokenization() {
    let utt = Utterance::from_text("show me  flights").unwrap();
    assert_eq!(utt.len(), 3);
    assert_eq!(utt.tokens()[2].text, "flights");
    assert_eq!(utt.tokens()[2].index, 2);
    assert!(Utterance::from_text("   ").is_err());
}
