use super::*;
use crate::program::{execute, node, typecheck, FunctionKind, Value};
use crate::scene::{Color, Material, Relation, Shape, Size};

fn family(id: &str) -> QuestionFamily {
    builtin_families()
        .into_iter()
        .find(|f| f.family_id == id)
        .unwrap_or_else(|| {
            panic!("no family {id}");
        })
}

fn bind(pairs: &[(&str, Option<Value>)]) -> Binding {
    let mut b = Binding::new();
    for (name, value) in pairs {
        b.bind(*name, value.clone());
    }
    b
}

#[test]
fn builtin_catalog_parses_and_validates() {
    let families = builtin_families();
    assert!(
        families.len() >= 20,
        "catalog has {} families",
        families.len()
    );
}

#[test]
fn catalog_covers_every_question_type() {
    let families = builtin_families();
    for kind in FunctionKind::ALL.iter().filter(|k| k.is_root_kind()) {
        assert!(
            families.iter().any(|f| f.root_kind() == Some(*kind)),
            "no family roots at {kind}"
        );
    }
    // Both topologies and both relationship flavors.
    assert!(families
        .iter()
        .any(|f| f.program_template.iter().any(|n| n.inputs.len() == 2)));
    assert!(families
        .iter()
        .any(|f| f.program_template.iter().all(|n| n.inputs.len() < 2)));
    assert!(families.iter().any(|f| f
        .program_template
        .iter()
        .any(|n| n.kind == FunctionKind::Relate)));
    assert!(families.iter().any(|f| f
        .program_template
        .iter()
        .any(|n| n.kind.is_same_attribute())));
}

#[test]
fn catalog_spans_sizes_three_to_eighteen() {
    // "How many red things are there?" is a three-node program.
    let small = instantiate_program(
        &family("count_simple"),
        &bind(&[("<C>", Some(Value::Color(Color::Red))), ("<M>", None)]),
    )
    .unwrap();
    assert_eq!(small.len(), 3);

    // A fully bound two-hop reference chain reaches eighteen nodes.
    let f = family("query_color_relate2");
    let mut b = Binding::new();
    for slot in &f.slots {
        b.bind(slot.name.clone(), Some(slot.slot_type.domain()[0].clone()));
    }
    let large = instantiate_program(&f, &b).unwrap();
    assert_eq!(large.len(), 18);
}

#[test]
fn nil_removal_matches_the_published_example() {
    let f = family("count_simple");
    let program = instantiate_program(
        &f,
        &bind(&[("<C>", Some(Value::Color(Color::Red))), ("<M>", None)]),
    )
    .unwrap();
    let expected = crate::program::Program::new(vec![
        node(FunctionKind::Scene, &[], &[]),
        node(FunctionKind::FilterColor, &[0], &[Value::Color(Color::Red)]),
        node(FunctionKind::Count, &[1], &[]),
    ]);
    assert_eq!(program, expected);

    let program = instantiate_program(&f, &bind(&[("<C>", None), ("<M>", None)])).unwrap();
    let expected = crate::program::Program::new(vec![
        node(FunctionKind::Scene, &[], &[]),
        node(FunctionKind::Count, &[0], &[]),
    ]);
    assert_eq!(program, expected);
}

#[test]
fn unbound_slot_is_an_error() {
    let f = family("count_simple");
    let err = instantiate_program(&f, &bind(&[("<C>", Some(Value::Color(Color::Red)))]));
    assert_eq!(err, Err(FamilyError::UnboundSlot("<M>".into())));
}

#[test]
fn non_nullable_slot_rejects_nil() {
    let f = family("count_relate");
    let mut b = Binding::new();
    for slot in &f.slots {
        b.bind(slot.name.clone(), Some(slot.slot_type.domain()[0].clone()));
    }
    b.bind("<R>", None);
    assert!(matches!(
        instantiate_program(&f, &b),
        Err(FamilyError::InvalidBinding(_))
    ));
}

#[test]
fn every_family_instantiates_under_every_nil_pattern() {
    // Exhaustive sweep over nil subsets (one fixed non-nil value per slot);
    // every instantiation must typecheck after removal.
    for f in builtin_families() {
        let nullable: Vec<&ParameterSlot> = f.slots.iter().filter(|s| s.nullable).collect();
        assert!(nullable.len() <= 13, "sweep stays tractable");
        for mask in 0u32..(1 << nullable.len()) {
            let mut b = Binding::new();
            for slot in &f.slots {
                b.bind(slot.name.clone(), Some(slot.slot_type.domain()[0].clone()));
            }
            for (bit, slot) in nullable.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    b.bind(slot.name.clone(), None);
                }
            }
            let program = super::instantiate_unchecked(&f, &b)
                .unwrap_or_else(|e| panic!("{}: mask {mask:b}: {e}", f.family_id));
            assert_eq!(
                typecheck(&program),
                Ok(()),
                "{}: mask {mask:b}",
                f.family_id
            );
        }
    }
}

#[test]
fn realization_matches_the_published_example() {
    let f = family("count_simple");
    let synonyms = builtin_synonyms();
    let b = bind(&[("<C>", Some(Value::Color(Color::Red))), ("<M>", None)]);
    let text = realize_canonical(&f, &b, &synonyms, 0).unwrap();
    assert_eq!(text, "How many red things are there?");

    let b = bind(&[
        ("<C>", Some(Value::Color(Color::Red))),
        ("<M>", Some(Value::Material(Material::Metal))),
    ]);
    // Picker index 2 selects the "shiny" synonym for metal.
    let text = realize_with(&f, &b, &synonyms, 0, &mut |_| 2).unwrap();
    assert_eq!(text, "How many red shiny things are there?");
}

#[test]
fn nil_shape_slots_realize_as_generic_nouns() {
    let f = family("exist_simple");
    let synonyms = builtin_synonyms();
    let b = bind(&[("<Z>", None), ("<C>", None), ("<M>", None), ("<S>", None)]);
    assert_eq!(
        realize_canonical(&f, &b, &synonyms, 0).unwrap(),
        "Are there any things?"
    );
    // The second generic noun triggers article agreement.
    assert_eq!(
        realize_with(&f, &b, &synonyms, 1, &mut |_| 1).unwrap(),
        "Is there an object?"
    );
}

#[test]
fn relation_slots_realize_as_phrases() {
    let f = family("count_relate");
    let synonyms = builtin_synonyms();
    let mut b = Binding::new();
    for slot in &f.slots {
        b.bind(slot.name.clone(), None);
    }
    b.bind("<R>", Some(Value::Relation(Relation::Left)));
    b.bind("<S>", Some(Value::Shape(Shape::Cube)));
    b.bind("<Z2>", Some(Value::Size(Size::Small)));
    let text = realize_canonical(&f, &b, &synonyms, 0).unwrap();
    assert_eq!(text, "How many small things are left of the cube?");
}

#[test]
fn realizations_leave_no_holes_and_desynonymize_to_canonical() {
    use rand::Rng;
    let families = builtin_families();
    let synonyms = builtin_synonyms();
    let mut rng = crate::rng::derive(99, &[1]);
    let mut checked = 0;
    while checked < 10_000 {
        let f = &families[rng.random_range(0..families.len())];
        let mut b = Binding::new();
        for slot in &f.slots {
            let domain = slot.slot_type.domain();
            if slot.nullable && rng.random_bool(0.4) {
                b.bind(slot.name.clone(), None);
            } else {
                b.bind(
                    slot.name.clone(),
                    Some(domain[rng.random_range(0..domain.len())].clone()),
                );
            }
        }
        if b.validate(f).is_err() {
            continue;
        }
        let template_index = rng.random_range(0..f.text_templates.len());
        let realized = realize_with(f, &b, &synonyms, template_index, &mut |n| {
            rng.random_range(0..n)
        })
        .unwrap();
        assert!(!realized.contains('<'), "{realized}");
        assert!(!realized.contains("  "), "{realized}");
        let canonical = realize_canonical(f, &b, &synonyms, template_index).unwrap();
        assert_eq!(
            synonyms.desynonymize(&realized),
            synonyms.desynonymize(&canonical),
            "family {} template {template_index}",
            f.family_id
        );
        checked += 1;
    }
}

#[test]
fn desynonymize_rewrites_words_phrases_and_plurals() {
    let synonyms = builtin_synonyms();
    assert_eq!(
        synonyms.desynonymize("the big shiny block"),
        "the large metal cube"
    );
    assert_eq!(
        synonyms.desynonymize("How many tiny balls are to the left of the matte object?"),
        "How many small spheres are left of the rubber thing?"
    );
}

#[test]
fn undeclared_text_slot_fails_validation() {
    let json = r#"{
      "schema_version": 1,
      "families": [{
        "family_id": "bad",
        "slots": [{"name": "<C>", "type": "color", "nullable": true}],
        "program_template": [
          {"function": "scene", "inputs": [], "value_inputs": []},
          {"function": "filter_color", "inputs": [0], "value_inputs": ["<C>"]},
          {"function": "count", "inputs": [1], "value_inputs": []}
        ],
        "text_templates": ["How many <C> <M> things are there?"]
      }]
    }"#;
    match parse_families(json) {
        Err(FamilyError::Validation {
            family_id, rule, ..
        }) => {
            assert_eq!(family_id, "bad");
            assert_eq!(rule, "slot_declared");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_catalog_is_empty() {
    assert_eq!(parse_families("").unwrap(), Vec::new());
    assert_eq!(parse_families("  \n").unwrap(), Vec::new());
}

#[test]
fn instantiated_worked_binding_executes() {
    // End-to-end sanity: bind count_relate against the worked scene.
    let scene =
        crate::scene::SceneGraph::from_json_str(include_str!("../../tests/data/worked_scene.json"))
            .unwrap();
    let f = family("count_relate");
    let mut b = Binding::new();
    for slot in &f.slots {
        b.bind(slot.name.clone(), None);
    }
    b.bind("<S>", Some(Value::Shape(Shape::Cylinder)));
    b.bind("<R>", Some(Value::Relation(Relation::Behind)));
    b.bind("<S2>", Some(Value::Shape(Shape::Cube)));
    let program = instantiate_program(&f, &b).unwrap();
    // One cube (the large one) is behind the cylinder.
    assert_eq!(execute(&program, &scene), Ok(Value::Integer(1)));
}
