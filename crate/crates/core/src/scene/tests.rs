use super::*;

fn obj(
    id: usize,
    shape: Shape,
    size: Size,
    color: Color,
    material: Material,
    x: f64,
    y: f64,
) -> ObjectRecord {
    ObjectRecord {
        id,
        shape,
        size,
        color,
        material,
        position: [x, y, size.radius()],
        rotation: 0.0,
    }
}

/// Three objects spread along the behind axis: a large brown cube in the
/// back, a gray cylinder in the middle, a small brown cube in front.
fn three_object_scene() -> SceneGraph {
    SceneGraph::new(
        0,
        vec![
            obj(
                0,
                Shape::Cube,
                Size::Large,
                Color::Brown,
                Material::Rubber,
                0.5,
                1.2,
            ),
            obj(
                1,
                Shape::Cube,
                Size::Small,
                Color::Brown,
                Material::Rubber,
                -0.8,
                -1.3,
            ),
            obj(
                2,
                Shape::Cylinder,
                Size::Small,
                Color::Gray,
                Material::Metal,
                1.0,
                -0.1,
            ),
        ],
        [0.0, -1.0, -0.5],
    )
    .unwrap()
}

#[test]
fn axes_from_axis_aligned_view() {
    let (behind, right) = derive_axes([0.0, -1.0, -0.5]).unwrap();
    assert_eq!(behind, [0.0, 1.0]);
    assert_eq!(right, [1.0, 0.0]);
}

#[test]
fn vertical_view_is_degenerate() {
    assert_eq!(
        derive_axes([0.0, 0.0, -1.0]),
        Err(SceneError::DegenerateCamera)
    );
}

#[test]
fn axes_from_oblique_view() {
    // Hand-computed: ground projection of (1, 1, -1) normalizes to
    // (0.70710678, 0.70710678); behind negates it, right rotates -90 degrees.
    let (behind, right) = derive_axes([1.0, 1.0, -1.0]).unwrap();
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    assert!((behind[0] + inv_sqrt2).abs() < 1e-12);
    assert!((behind[1] + inv_sqrt2).abs() < 1e-12);
    assert!((right[0] + inv_sqrt2).abs() < 1e-12);
    assert!((right[1] - inv_sqrt2).abs() < 1e-12);
    // Unit length and perpendicular.
    assert!((behind[0] * behind[0] + behind[1] * behind[1] - 1.0).abs() < 1e-12);
    assert!((behind[0] * right[0] + behind[1] * right[1]).abs() < 1e-12);
}

#[test]
fn relate_pair_on_behind_axis() {
    let scene = SceneGraph::new(
        0,
        vec![
            obj(
                0,
                Shape::Cube,
                Size::Small,
                Color::Red,
                Material::Rubber,
                0.0,
                2.0,
            ),
            obj(
                1,
                Shape::Cube,
                Size::Small,
                Color::Blue,
                Material::Rubber,
                0.0,
                0.0,
            ),
        ],
        [0.0, -1.0, -0.5],
    )
    .unwrap();
    assert!(scene.relate_pair(0, 1, Relation::Behind).unwrap());
    assert!(scene.relate_pair(1, 0, Relation::Front).unwrap());
    assert!(!scene.relate_pair(0, 1, Relation::Front).unwrap());
    assert!(!scene.relate_pair(1, 0, Relation::Behind).unwrap());
}

#[test]
fn relate_pair_on_right_axis() {
    let scene = SceneGraph::new(
        0,
        vec![
            obj(
                0,
                Shape::Cube,
                Size::Small,
                Color::Red,
                Material::Rubber,
                3.0,
                0.0,
            ),
            obj(
                1,
                Shape::Cube,
                Size::Small,
                Color::Blue,
                Material::Rubber,
                0.0,
                0.0,
            ),
        ],
        [0.0, -1.0, -0.5],
    )
    .unwrap();
    assert!(scene.relate_pair(0, 1, Relation::Right).unwrap());
    assert!(scene.relate_pair(1, 0, Relation::Left).unwrap());
}

#[test]
fn ties_and_self_relations_hold_nothing() {
    let scene = SceneGraph::new(
        0,
        vec![
            obj(
                0,
                Shape::Cube,
                Size::Small,
                Color::Red,
                Material::Rubber,
                0.0,
                0.0,
            ),
            obj(
                1,
                Shape::Cube,
                Size::Small,
                Color::Blue,
                Material::Rubber,
                0.0,
                0.0,
            ),
        ],
        [0.0, -1.0, -0.5],
    )
    .unwrap();
    for &r in Relation::ALL {
        assert!(!scene.relate_pair(0, 1, r).unwrap());
        assert!(!scene.relate_pair(0, 0, r).unwrap());
    }
}

#[test]
fn unknown_object_is_an_error() {
    let scene = three_object_scene();
    assert_eq!(
        scene.relate_pair(0, 9, Relation::Left),
        Err(SceneError::UnknownObject(9))
    );
    assert_eq!(
        scene.same_attribute_set(9, AttributeKind::Color),
        Err(SceneError::UnknownObject(9))
    );
}

#[test]
fn same_attribute_excludes_anchor() {
    let scene = three_object_scene();
    // Both cubes are brown; the large one's same-shape set is the small one.
    let same_shape = scene.same_attribute_set(0, AttributeKind::Shape).unwrap();
    assert_eq!(same_shape, IdSet::from([1]));
    let same_color = scene.same_attribute_set(0, AttributeKind::Color).unwrap();
    assert_eq!(same_color, IdSet::from([1]));
    let same_material = scene
        .same_attribute_set(2, AttributeKind::Material)
        .unwrap();
    assert!(same_material.is_empty());
}

#[test]
fn single_object_scene_has_empty_same_sets() {
    let scene = SceneGraph::new(
        0,
        vec![obj(
            0,
            Shape::Cube,
            Size::Small,
            Color::Red,
            Material::Rubber,
            0.0,
            0.0,
        )],
        [0.0, -1.0, -0.5],
    )
    .unwrap();
    for kind in [
        AttributeKind::Size,
        AttributeKind::Color,
        AttributeKind::Material,
        AttributeKind::Shape,
    ] {
        assert!(scene.same_attribute_set(0, kind).unwrap().is_empty());
    }
}

#[test]
fn relationship_cache_matches_pairwise_definition() {
    let scene = three_object_scene();
    for &r in Relation::ALL {
        for b in 0..scene.len() {
            let cached: IdSet = scene.related_ids(r, b).unwrap().iter().copied().collect();
            let direct: IdSet = (0..scene.len())
                .filter(|&a| scene.relate_pair(a, b, r).unwrap())
                .collect();
            assert_eq!(cached, direct, "relation {r} of object {b}");
        }
    }
}

#[test]
fn half_planes_split_at_centroid() {
    let scene = three_object_scene();
    // Centroid y = (1.2 - 1.3 - 0.1) / 3 ≈ -0.0667 with behind axis (0, 1):
    // object 0 is in the behind half, objects 1 is in the front half and
    // object 2 (y = -0.1) is within a hair of the midline but still front.
    assert_eq!(scene.half_plane_ids(Relation::Behind), IdSet::from([0]));
    assert_eq!(scene.half_plane_ids(Relation::Front), IdSet::from([1, 2]));
    let left = scene.half_plane_ids(Relation::Left);
    let right = scene.half_plane_ids(Relation::Right);
    assert!(left.is_disjoint(&right));
}

#[test]
fn scene_json_round_trip_recomputes_relationships() {
    let scene = three_object_scene();
    let json = scene.to_json_string();
    assert!(json.contains("\"relationships\""));
    let reloaded = SceneGraph::from_json_str(&json).unwrap();
    assert_eq!(reloaded, scene);

    // Relationships are optional on input.
    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value.as_object_mut().unwrap().remove("relationships");
    let reloaded = SceneGraph::from_json_str(&value.to_string()).unwrap();
    assert_eq!(reloaded, scene);
}

#[test]
fn non_dense_ids_are_rejected() {
    let mut objects = vec![
        obj(
            0,
            Shape::Cube,
            Size::Small,
            Color::Red,
            Material::Rubber,
            0.0,
            0.0,
        ),
        obj(
            1,
            Shape::Cube,
            Size::Small,
            Color::Blue,
            Material::Rubber,
            1.0,
            1.0,
        ),
    ];
    objects[1].id = 5;
    assert_eq!(
        SceneGraph::new(0, objects, [0.0, -1.0, -0.5]),
        Err(SceneError::InvalidObjectIds)
    );
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_object(id: usize) -> impl Strategy<Value = ObjectRecord> {
        (
            prop_oneof![
                Just(Shape::Cube),
                Just(Shape::Sphere),
                Just(Shape::Cylinder)
            ],
            prop_oneof![Just(Size::Small), Just(Size::Large)],
            proptest::sample::select(Color::ALL),
            prop_oneof![Just(Material::Rubber), Just(Material::Metal)],
            -3.0..3.0f64,
            -3.0..3.0f64,
        )
            .prop_map(move |(shape, size, color, material, x, y)| ObjectRecord {
                id,
                shape,
                size,
                color,
                material,
                position: [x, y, size.radius()],
                rotation: 0.0,
            })
    }

    fn arb_scene() -> impl Strategy<Value = SceneGraph> {
        (3usize..=10, -1.0..1.0f64, -1.0..1.0f64).prop_flat_map(|(n, vx, vy)| {
            let view = if vx.abs() + vy.abs() < 0.1 {
                [1.0, 0.0, -0.8]
            } else {
                [vx, vy, -0.8]
            };
            (0..n)
                .map(arb_object)
                .collect::<Vec<_>>()
                .prop_map(move |objects| SceneGraph::new(0, objects, view).unwrap())
        })
    }

    proptest! {
        #[test]
        fn converse_laws(scene in arb_scene()) {
            for a in 0..scene.len() {
                for b in 0..scene.len() {
                    if a == b { continue; }
                    prop_assert_eq!(
                        scene.relate_pair(a, b, Relation::Left).unwrap(),
                        scene.relate_pair(b, a, Relation::Right).unwrap()
                    );
                    prop_assert_eq!(
                        scene.relate_pair(a, b, Relation::Behind).unwrap(),
                        scene.relate_pair(b, a, Relation::Front).unwrap()
                    );
                }
            }
        }

        #[test]
        fn cache_equals_recomputation(scene in arb_scene()) {
            let fresh = scene.recompute_relationships();
            for &r in Relation::ALL {
                prop_assert_eq!(scene.relationships(r), &fresh[match r {
                    Relation::Left => 0,
                    Relation::Right => 1,
                    Relation::Front => 2,
                    Relation::Behind => 3,
                }][..]);
            }
        }

        #[test]
        fn same_attribute_is_symmetric_and_irreflexive(scene in arb_scene()) {
            for kind in [AttributeKind::Size, AttributeKind::Color, AttributeKind::Material, AttributeKind::Shape] {
                for a in 0..scene.len() {
                    let sa = scene.same_attribute_set(a, kind).unwrap();
                    prop_assert!(!sa.contains(&a));
                    for &b in &sa {
                        prop_assert!(scene.same_attribute_set(b, kind).unwrap().contains(&a));
                    }
                }
            }
        }
    }
}
