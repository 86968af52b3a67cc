//! Hand-built GridHouse worlds and their goals.

use crate::env::gridhouse::{Attribute, Goal, GridWorld, ObjectSpec, ReceptacleSpec, RoomSpec};
use crate::task::{TaskFixture, TaskSpec, GRIDHOUSE};

fn open(name: &str) -> ReceptacleSpec {
    ReceptacleSpec { name: name.into(), openable: false, open: false }
}

fn closed(name: &str) -> ReceptacleSpec {
    ReceptacleSpec { name: name.into(), openable: true, open: false }
}

fn room(name: &str, receptacles: Vec<ReceptacleSpec>) -> RoomSpec {
    RoomSpec { name: name.into(), receptacles }
}

fn obj(name: &str, location: &str) -> ObjectSpec {
    ObjectSpec { name: name.into(), location: location.into(), clean: false, hot: false, cold: false }
}

fn goal(attribute: Option<Attribute>, object: &str, dest: &str) -> Goal {
    Goal { object_type: object.into(), attribute, destination_type: dest.into() }
}

const CLEAN: Option<Attribute> = Some(Attribute::Clean);
const HEAT: Option<Attribute> = Some(Attribute::Hot);
const COOL: Option<Attribute> = Some(Attribute::Cool);
const PICK: Option<Attribute> = None;

type Layout = (Vec<RoomSpec>, Vec<ObjectSpec>);

fn studio() -> Layout {
    (
        vec![room("kitchen", vec![
            open("countertop 1"),
            open("countertop 2"),
            closed("cabinet 1"),
            open("sinkbasin 1"),
            open("microwave 1"),
            closed("fridge 1"),
            open("shelf 1"),
            closed("drawer 1"),
        ])],
        vec![
            obj("mug 1", "countertop 1"),
            obj("apple 1", "countertop 2"),
            obj("plate 1", "cabinet 1"),
            obj("potato 1", "fridge 1"),
            obj("cup 1", "shelf 1"),
        ],
    )
}

fn flat() -> Layout {
    (
        vec![
            room("kitchen", vec![
                open("countertop 1"),
                open("sinkbasin 1"),
                open("microwave 1"),
                closed("fridge 1"),
                closed("cabinet 1"),
            ]),
            room("livingroom", vec![open("sofa 1"), open("sidetable 1"), open("shelf 1"), closed("drawer 1")]),
        ],
        vec![
            obj("cup 1", "sidetable 1"),
            obj("bowl 1", "shelf 1"),
            obj("bread 1", "countertop 1"),
            obj("tomato 1", "countertop 1"),
            obj("vase 1", "drawer 1"),
        ],
    )
}

fn cottage() -> Layout {
    (
        vec![
            room("kitchen", vec![open("countertop 1"), open("microwave 1"), closed("fridge 1"), open("diningtable 1")]),
            room("bathroom", vec![open("sinkbasin 1"), open("towelholder 1"), closed("cabinet 1")]),
            room("bedroom", vec![open("desk 1"), closed("drawer 1"), open("shelf 1")]),
        ],
        vec![
            obj("egg 1", "fridge 1"),
            obj("soapbar 1", "towelholder 1"),
            obj("book 1", "desk 1"),
            obj("cup 1", "diningtable 1"),
            obj("pen 1", "drawer 1"),
        ],
    )
}

fn larder() -> Layout {
    (
        vec![
            room("kitchen", vec![open("countertop 1"), open("countertop 2"), open("sinkbasin 1"), open("microwave 1")]),
            room("pantry", vec![open("shelf 1"), open("shelf 2"), closed("fridge 1"), closed("cabinet 1")]),
        ],
        vec![
            obj("potato 1", "shelf 1"),
            obj("lettuce 1", "shelf 2"),
            obj("knife 1", "countertop 2"),
            obj("bottle 1", "cabinet 1"),
            obj("spoon 1", "countertop 1"),
        ],
    )
}

fn townhouse() -> Layout {
    (
        vec![
            room("hall", vec![open("shelf 1"), closed("drawer 1"), open("sidetable 1")]),
            room("kitchen", vec![open("sinkbasin 1"), closed("fridge 1"), open("microwave 1"), open("countertop 1")]),
            room("diningroom", vec![open("diningtable 1"), closed("cabinet 1")]),
        ],
        vec![
            obj("apple 1", "sidetable 1"),
            obj("plate 1", "diningtable 1"),
            obj("keychain 1", "drawer 1"),
            obj("bowl 1", "countertop 1"),
        ],
    )
}

fn office() -> Layout {
    (
        vec![
            room("office", vec![open("desk 1"), open("shelf 1"), closed("drawer 1")]),
            room("kitchen", vec![
                open("countertop 1"),
                open("sinkbasin 1"),
                open("microwave 1"),
                closed("fridge 1"),
                closed("cabinet 1"),
                closed("cabinet 2"),
            ]),
        ],
        vec![
            obj("mug 1", "desk 1"),
            obj("mug 2", "cabinet 2"),
            obj("bread 1", "countertop 1"),
            obj("cd 1", "shelf 1"),
            obj("egg 1", "fridge 1"),
        ],
    )
}

fn lodge() -> Layout {
    (
        vec![
            room("kitchen", vec![
                open("countertop 1"),
                open("sinkbasin 1"),
                open("microwave 1"),
                closed("fridge 1"),
                closed("cabinet 1"),
                closed("cabinet 2"),
            ]),
            room("livingroom", vec![open("sofa 1"), open("sidetable 1"), open("shelf 1"), closed("drawer 1"), open("desk 1")]),
        ],
        vec![
            obj("mug 1", "countertop 1"),
            obj("cup 1", "shelf 1"),
            obj("apple 1", "sidetable 1"),
            obj("potato 1", "cabinet 1"),
            obj("tomato 1", "fridge 1"),
            obj("plate 1", "desk 1"),
            obj("bowl 1", "drawer 1"),
            obj("egg 1", "countertop 1"),
            obj("bread 1", "cabinet 2"),
        ],
    )
}

fn bungalow() -> Layout {
    (
        vec![
            room("bedroom", vec![open("desk 1"), open("shelf 1"), closed("drawer 1"), open("sidetable 1")]),
            room("kitchen", vec![open("countertop 1"), open("sinkbasin 1"), open("microwave 1"), closed("fridge 1")]),
            room("bathroom", vec![closed("cabinet 1"), open("towelholder 1")]),
        ],
        vec![
            obj("glass 1", "sidetable 1"),
            obj("pan 1", "countertop 1"),
            obj("lettuce 1", "fridge 1"),
            obj("cloth 1", "towelholder 1"),
            obj("pencil 1", "drawer 1"),
            obj("potato 1", "countertop 1"),
        ],
    )
}

fn annex() -> Layout {
    (
        vec![
            room("pantry", vec![open("shelf 1"), open("shelf 2"), closed("cabinet 1")]),
            room("kitchen", vec![
                open("countertop 1"),
                open("countertop 2"),
                open("sinkbasin 1"),
                open("microwave 1"),
                closed("fridge 1"),
            ]),
        ],
        vec![
            obj("kettle 1", "shelf 1"),
            obj("fork 1", "countertop 2"),
            obj("jar 1", "cabinet 1"),
            obj("carrot 1", "shelf 2"),
            obj("ladle 1", "countertop 1"),
        ],
    )
}

fn task(id: &str, layout: fn() -> Layout, g: Goal) -> TaskSpec {
    let (rooms, objects) = layout();
    TaskSpec {
        task_id: id.into(),
        instruction: g.instruction(),
        environment_id: GRIDHOUSE.into(),
        fixture: Some(TaskFixture::GridHouse(GridWorld { rooms, objects, goal: g })),
    }
}

/// Held-out tasks: six worlds, three goals each.
pub fn test_tasks() -> Vec<TaskSpec> {
    vec![
        task("gh-studio-clean-mug", studio, goal(CLEAN, "mug", "cabinet")),
        task("gh-studio-heat-apple", studio, goal(HEAT, "apple", "shelf")),
        task("gh-studio-pick-plate", studio, goal(PICK, "plate", "countertop")),
        task("gh-flat-clean-cup", flat, goal(CLEAN, "cup", "cabinet")),
        task("gh-flat-cool-tomato", flat, goal(COOL, "tomato", "shelf")),
        task("gh-flat-pick-vase", flat, goal(PICK, "vase", "sidetable")),
        task("gh-cottage-heat-egg", cottage, goal(HEAT, "egg", "diningtable")),
        task("gh-cottage-clean-cup", cottage, goal(CLEAN, "cup", "shelf")),
        task("gh-cottage-pick-book", cottage, goal(PICK, "book", "diningtable")),
        task("gh-larder-heat-potato", larder, goal(HEAT, "potato", "countertop")),
        task("gh-larder-cool-lettuce", larder, goal(COOL, "lettuce", "countertop")),
        task("gh-larder-pick-knife", larder, goal(PICK, "knife", "cabinet")),
        task("gh-townhouse-cool-apple", townhouse, goal(COOL, "apple", "diningtable")),
        task("gh-townhouse-clean-plate", townhouse, goal(CLEAN, "plate", "cabinet")),
        task("gh-townhouse-pick-keychain", townhouse, goal(PICK, "keychain", "shelf")),
        task("gh-office-heat-mug", office, goal(HEAT, "mug", "desk")),
        task("gh-office-cool-bread", office, goal(COOL, "bread", "cabinet")),
        task("gh-office-pick-cd", office, goal(PICK, "cd", "drawer")),
    ]
}

/// Training tasks on three further worlds.
pub fn train_tasks() -> Vec<TaskSpec> {
    vec![
        task("gh-lodge-clean-plate", lodge, goal(CLEAN, "plate", "sidetable")),
        task("gh-lodge-heat-potato", lodge, goal(HEAT, "potato", "shelf")),
        task("gh-lodge-cool-apple", lodge, goal(COOL, "apple", "countertop")),
        task("gh-lodge-cool-bowl", lodge, goal(COOL, "bowl", "shelf")),
        task("gh-lodge-clean-cup", lodge, goal(CLEAN, "cup", "desk")),
        task("gh-bungalow-clean-glass", bungalow, goal(CLEAN, "glass", "shelf")),
        task("gh-bungalow-heat-potato", bungalow, goal(HEAT, "potato", "desk")),
        task("gh-bungalow-cool-lettuce", bungalow, goal(COOL, "lettuce", "sidetable")),
        task("gh-bungalow-clean-cloth", bungalow, goal(CLEAN, "cloth", "cabinet")),
        task("gh-bungalow-clean-pan", bungalow, goal(CLEAN, "pan", "desk")),
        task("gh-annex-heat-kettle", annex, goal(HEAT, "kettle", "countertop")),
        task("gh-annex-cool-carrot", annex, goal(COOL, "carrot", "cabinet")),
        task("gh-annex-clean-fork", annex, goal(CLEAN, "fork", "shelf")),
        task("gh-annex-pick-jar", annex, goal(PICK, "jar", "countertop")),
        task("gh-annex-heat-ladle", annex, goal(HEAT, "ladle", "shelf")),
    ]
}
