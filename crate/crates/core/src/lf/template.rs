//! Template extraction and slot filling.

use super::{
    AtomLexicon, LfError, NodeLabel, SemanticTree, SlotAssignment, SlotType, Template, Tree,
};

/// Replaces every atom leaf by its typed slot variable and records the
/// replaced values in pre-order. Slot placeholders already present are
/// left untouched, so extraction is idempotent on templates.
pub fn extract_template(
    tree: &SemanticTree,
    lexicon: &AtomLexicon,
) -> Result<(Template, SlotAssignment), LfError> {
    let mut slots = SlotAssignment::default();
    let root = extract_node(tree.root(), lexicon, &mut slots)?;
    Ok((Template::new(root)?, slots))
}

fn extract_node(
    node: &Tree,
    lexicon: &AtomLexicon,
    slots: &mut SlotAssignment,
) -> Result<Tree, LfError> {
    if node.is_leaf() {
        let label = match &node.label {
            NodeLabel::Atom(s) => match lexicon.classify(s) {
                Some(SlotType::Variable) => {
                    slots.variable_values.push(s.clone());
                    NodeLabel::Slot(SlotType::Variable)
                }
                Some(SlotType::Entity) => {
                    slots.entity_values.push(s.clone());
                    NodeLabel::Slot(SlotType::Entity)
                }
                None => return Err(LfError::UnknownAtomCategory(s.clone())),
            },
            // Predicate term leaves may still be atoms under a wider
            // lexicon than the one used at parse time.
            NodeLabel::Pred(s) => match lexicon.classify(s) {
                Some(SlotType::Variable) => {
                    slots.variable_values.push(s.clone());
                    NodeLabel::Slot(SlotType::Variable)
                }
                Some(SlotType::Entity) => {
                    slots.entity_values.push(s.clone());
                    NodeLabel::Slot(SlotType::Entity)
                }
                None => node.label.clone(),
            },
            other => other.clone(),
        };
        return Ok(Tree::leaf(label));
    }
    let children = node
        .children
        .iter()
        .map(|c| extract_node(c, lexicon, slots))
        .collect::<Result<_, _>>()?;
    Ok(Tree {
        label: node.label.clone(),
        children,
    })
}

/// Reconstitutes a concrete logical form from a template and its slot
/// values. Collapsed idiom nodes are expanded first; values are consumed
/// in pre-order over the expanded tree.
pub fn fill_template(
    template: &Template,
    slots: &SlotAssignment,
) -> Result<SemanticTree, LfError> {
    let (want_entity, want_var) = template.slot_counts();
    if want_entity != slots.entity_values.len() || want_var != slots.variable_values.len() {
        return Err(LfError::SlotArityMismatch {
            want_entity,
            want_var,
            got_entity: slots.entity_values.len(),
            got_var: slots.variable_values.len(),
        });
    }
    let expanded = template.root().expand_idioms();
    let mut entities = slots.entity_values.iter();
    let mut vars = slots.variable_values.iter();
    let root = fill_node(&expanded, &mut entities, &mut vars);
    Ok(SemanticTree::new(root))
}

fn fill_node<'a>(
    node: &Tree,
    entities: &mut impl Iterator<Item = &'a String>,
    vars: &mut impl Iterator<Item = &'a String>,
) -> Tree {
    if node.is_leaf() {
        let label = match &node.label {
            NodeLabel::Slot(SlotType::Entity) => {
                NodeLabel::Atom(entities.next().expect("arity checked").clone())
            }
            NodeLabel::Slot(SlotType::Variable) => {
                NodeLabel::Atom(vars.next().expect("arity checked").clone())
            }
            other => other.clone(),
        };
        return Tree::leaf(label);
    }
    Tree {
        label: node.label.clone(),
        children: node
            .children
            .iter()
            .map(|c| fill_node(c, entities, vars))
            .collect(),
    }
}
