//! Hand-built MiniDB databases and their tasks.

use crate::env::minidb::{parse_task_kind, DbTask, DbTaskKind, VerifySpec};
use crate::env::sql::{Column, ColumnType, Table, Value};
use crate::task::{TaskFixture, TaskSpec, MINIDB};

fn t(s: &str) -> Value {
    Value::Text(s.into())
}

fn i(v: i64) -> Value {
    Value::Int(v)
}

fn r(v: f64) -> Value {
    Value::Real(v)
}

fn table(name: &str, cols: &[(&str, ColumnType)], rows: Vec<Vec<Value>>) -> Table {
    Table {
        name: name.into(),
        columns: cols.iter().map(|(n, ty)| Column { name: n.to_string(), ty: *ty }).collect(),
        rows,
    }
}

use ColumnType::{Integer as INT, Real as REAL, Text as TEXT};

fn shop() -> Vec<Table> {
    vec![table(
        "orders",
        &[("id", INT), ("customer", TEXT), ("amount", REAL), ("status", TEXT)],
        vec![
            vec![i(1), t("ana"), r(12.5), t("shipped")],
            vec![i(2), t("bo"), r(40.0), t("pending")],
            vec![i(3), t("cy"), r(7.25), t("cancelled")],
            vec![i(4), t("dana"), r(99.0), t("pending")],
            vec![i(5), t("ana"), r(15.0), t("cancelled")],
            vec![i(6), t("eve"), r(60.0), t("shipped")],
        ],
    )]
}

fn staff() -> Vec<Table> {
    vec![table(
        "employees",
        &[("name", TEXT), ("dept", TEXT), ("hourly rate", REAL), ("start year", INT)],
        vec![
            vec![t("ana"), t("sales"), r(28.0), i(2017)],
            vec![t("bo"), t("sales"), r(41.5), i(2019)],
            vec![t("cy"), t("support"), r(19.0), i(2021)],
            vec![t("eve"), t("ops"), r(35.0), i(2019)],
            vec![t("finn"), t("sales"), r(33.0), i(2022)],
        ],
    )]
}

fn library() -> Vec<Table> {
    vec![table(
        "books",
        &[("title", TEXT), ("author", TEXT), ("year", INT), ("copies", INT)],
        vec![
            vec![t("Dune"), t("herbert"), i(1965), i(4)],
            vec![t("Earthsea"), t("le guin"), i(1968), i(2)],
            vec![t("The Dispossessed"), t("le guin"), i(1974), i(1)],
            vec![t("Foundation"), t("asimov"), i(1951), i(3)],
            vec![t("Brave New World"), t("huxley"), i(1932), i(5)],
            vec![t("Nineteen Eighty-Four"), t("orwell"), i(1949), i(6)],
        ],
    )]
}

fn weather() -> Vec<Table> {
    vec![table(
        "readings",
        &[("city", TEXT), ("day", INT), ("temp", REAL), ("rain", REAL)],
        vec![
            vec![t("oslo"), i(1), r(3.0), r(1.5)],
            vec![t("oslo"), i(2), r(5.0), r(0.0)],
            vec![t("oslo"), i(3), r(7.0), r(2.0)],
            vec![t("lima"), i(1), r(19.0), r(0.0)],
            vec![t("lima"), i(2), r(21.0), r(0.5)],
            vec![t("pune"), i(2), r(17.5), r(8.0)],
        ],
    )]
}

fn inventory() -> Vec<Table> {
    vec![table(
        "items",
        &[("key", TEXT), ("name", TEXT), ("stock", INT), ("price", REAL)],
        vec![
            vec![t("k-1"), t("lamp"), i(4), r(19.99)],
            vec![t("k-2"), t("desk"), i(0), r(149.0)],
            vec![t("k-3"), t("chair"), i(9), r(45.5)],
            vec![t("k-7"), t("rug"), i(0), r(80.0)],
            vec![t("k-9"), t("shelf"), i(2), r(60.0)],
        ],
    )]
}

fn flights() -> Vec<Table> {
    vec![table(
        "flights",
        &[("code", TEXT), ("origin", TEXT), ("dest", TEXT), ("seats", INT)],
        vec![
            vec![t("tp1"), t("lis"), t("opo"), i(120)],
            vec![t("tp4"), t("lis"), t("mad"), i(180)],
            vec![t("ba2"), t("lhr"), t("lis"), i(200)],
            vec![t("ib3"), t("mad"), t("opo"), i(90)],
            vec![t("tp7"), t("fnc"), t("opo"), i(150)],
        ],
    )]
}

fn sales() -> Vec<Table> {
    vec![table(
        "sales",
        &[("region", TEXT), ("rep", TEXT), ("units", INT), ("refund", REAL)],
        vec![
            vec![t("north"), t("ana"), i(12), r(0.0)],
            vec![t("north"), t("bo"), i(7), Value::Null],
            vec![t("south"), t("cy"), i(20), r(3.5)],
            vec![t("east"), t("dana"), i(5), Value::Null],
            vec![t("west"), t("eve"), i(9), r(1.0)],
        ],
    )]
}

fn school() -> Vec<Table> {
    vec![table(
        "students",
        &[("name", TEXT), ("grade", INT), ("score", REAL), ("club", TEXT)],
        vec![
            vec![t("ivy"), i(9), r(88.0), t("chess")],
            vec![t("jon"), i(10), r(72.5), t("drama")],
            vec![t("kai"), i(9), r(91.0), t("chess")],
            vec![t("lea"), i(11), r(65.0), t("robotics")],
            vec![t("max"), i(10), r(79.0), t("chess")],
            vec![t("noa"), i(11), r(84.0), Value::Null],
        ],
    )]
}

fn depot() -> Vec<Table> {
    vec![table(
        "parcels",
        &[("tracking id", TEXT), ("city", TEXT), ("weight", REAL), ("status", TEXT)],
        vec![
            vec![t("p-10"), t("porto"), r(2.5), t("in transit")],
            vec![t("p-11"), t("braga"), r(0.75), t("delivered")],
            vec![t("p-12"), t("porto"), r(4.0), t("held")],
            vec![t("p-13"), t("faro"), r(1.25), t("in transit")],
            vec![t("p-14"), t("braga"), r(3.0), t("held")],
        ],
    )]
}

struct Spec<'a> {
    id: &'a str,
    instruction: &'a str,
    sql: &'a [&'a str],
    truth: &'a str,
    verify: Option<(&'a str, &'a str)>,
}

fn task(db: fn() -> Vec<Table>, s: Spec<'_>) -> TaskSpec {
    let kind = parse_task_kind(s.instruction).unwrap_or(DbTaskKind::Select);
    TaskSpec {
        task_id: s.id.into(),
        instruction: s.instruction.into(),
        environment_id: MINIDB.into(),
        fixture: Some(TaskFixture::MiniDb(DbTask {
            tables: db(),
            kind,
            truth: s.truth.into(),
            verify: s.verify.map(|(q, e)| VerifySpec { query: q.into(), expected: e.into() }),
            reference_sql: s.sql.iter().map(|q| q.to_string()).collect(),
        })),
    }
}

macro_rules! spec {
    ($id:expr, $ins:expr, [$($q:expr),+], $truth:expr) => {
        Spec { id: $id, instruction: $ins, sql: &[$($q),+], truth: $truth, verify: None }
    };
    ($id:expr, $ins:expr, [$($q:expr),+], verify $vq:expr => $ve:expr) => {
        Spec { id: $id, instruction: $ins, sql: &[$($q),+], truth: "", verify: Some(($vq, $ve)) }
    };
}

pub fn test_tasks() -> Vec<TaskSpec> {
    vec![
        task(shop, spec!("db-shop-pending", "How many orders are pending?",
            ["SELECT COUNT(*) FROM orders WHERE status = 'pending'"], "2")),
        task(shop, spec!("db-shop-order4", "Which customer placed order 4?",
            ["SELECT customer FROM orders WHERE id = 4"], "dana")),
        task(shop, spec!("db-shop-drop-cancelled", "Delete the cancelled orders.",
            ["DELETE FROM orders WHERE status = 'cancelled'"],
            verify "SELECT COUNT(*) FROM orders WHERE status = 'cancelled'" => "0")),
        task(shop, spec!("db-shop-ship2", "Update order 2 to status shipped.",
            ["UPDATE orders SET status = 'shipped' WHERE id = 2"],
            verify "SELECT status FROM orders WHERE id = 2" => "shipped")),
        task(staff, spec!("db-staff-top-rate", "What is the highest hourly rate in the sales department?",
            ["SELECT MAX(`hourly rate`) FROM employees WHERE dept = 'sales'"], "41.5")),
        task(staff, spec!("db-staff-2019", "Who joined in 2019? List names alphabetically.",
            ["SELECT name FROM employees WHERE `start year` = 2019 ORDER BY name"], "bo, eve")),
        task(staff, spec!("db-staff-hire-kim", "Add a new employee kim in support at 22 per hour starting 2024.",
            ["INSERT INTO employees VALUES ('kim', 'support', 22, 2024)"],
            verify "SELECT COUNT(*) FROM employees WHERE name = 'kim'" => "1")),
        task(staff, spec!("db-staff-raise-ana", "Set the hourly rate of ana to 30.",
            ["UPDATE employees SET `hourly rate` = 30 WHERE name = 'ana'"],
            verify "SELECT `hourly rate` FROM employees WHERE name = 'ana'" => "30")),
        task(library, spec!("db-library-le-guin", "How many books by le guin are in the catalogue?",
            ["SELECT COUNT(*) FROM books WHERE author = 'le guin'"], "2")),
        task(library, spec!("db-library-copies", "What is the total of all copies held?",
            ["SELECT SUM(copies) FROM books"], "21")),
        task(library, spec!("db-library-prune", "Remove every book published before 1950.",
            ["DELETE FROM books WHERE year < 1950"],
            verify "SELECT COUNT(*) FROM books WHERE year < 1950" => "0")),
        task(library, spec!("db-library-dune-author", "Change the author of Dune to frank herbert.",
            ["UPDATE books SET author = 'frank herbert' WHERE title = 'Dune'"],
            verify "SELECT author FROM books WHERE title = 'Dune'" => "frank herbert")),
        task(weather, spec!("db-weather-oslo-avg", "What was the average temperature in oslo?",
            ["SELECT AVG(temp) FROM readings WHERE city = 'oslo'"], "5")),
        task(weather, spec!("db-weather-warmest", "Which city was warmest on day 2?",
            ["SELECT city FROM readings WHERE day = 2 ORDER BY temp DESC LIMIT 1"], "lima")),
        task(weather, spec!("db-weather-rome", "Insert a reading for rome on day 4 with temp 18 and rain 0.",
            ["INSERT INTO readings VALUES ('rome', 4, 18, 0)"],
            verify "SELECT temp FROM readings WHERE city = 'rome' AND day = 4" => "18")),
        task(weather, spec!("db-weather-drop-day1", "Delete all readings from day 1.",
            ["DELETE FROM readings WHERE day = 1"],
            verify "SELECT COUNT(*) FROM readings WHERE day = 1" => "0")),
        task(inventory, spec!("db-inventory-empty", "How many items are out of stock?",
            ["SELECT COUNT(*) FROM items WHERE stock = 0"], "2")),
        task(inventory, spec!("db-inventory-lamp", "What does the lamp cost?",
            ["SELECT price FROM items WHERE name = 'lamp'"], "19.99")),
        task(inventory, spec!("db-inventory-restock", "Update the stock of the desk to 12.",
            ["UPDATE items SET stock = 12 WHERE name = 'desk'"],
            verify "SELECT stock FROM items WHERE name = 'desk'" => "12")),
        task(inventory, spec!("db-inventory-drop-k7", "Remove the item whose key is k-7.",
            ["DELETE FROM items WHERE `key` = 'k-7'"],
            verify "SELECT COUNT(*) FROM items WHERE `key` = 'k-7'" => "0")),
        task(flights, spec!("db-flights-biggest", "Which flight from lis has the most seats?",
            ["SELECT code FROM flights WHERE origin = 'lis' ORDER BY seats DESC LIMIT 1"], "tp4")),
        task(flights, spec!("db-flights-opo-sum", "What is the sum of seats on flights to opo?",
            ["SELECT SUM(seats) FROM flights WHERE dest = 'opo'"], "360")),
        task(flights, spec!("db-flights-add-tp9", "Add flight tp9 from lis to fnc with 180 seats.",
            ["INSERT INTO flights VALUES ('tp9', 'lis', 'fnc', 180)"],
            verify "SELECT seats FROM flights WHERE code = 'tp9'" => "180")),
        task(flights, spec!("db-flights-drop-ba2", "Delete flight ba2.",
            ["DELETE FROM flights WHERE code = 'ba2'"],
            verify "SELECT COUNT(*) FROM flights WHERE code = 'ba2'" => "0")),
    ]
}

/// Id of the training task whose reference answer only a NULL→0 rewrite
/// turns correct.
pub const NULL_FIXED_TASK: &str = "db-sales-east-refunds";
/// Id of the training task that a NULL→0 rewrite breaks.
pub const NULL_BROKEN_TASK: &str = "db-school-noa-club";

pub fn train_tasks() -> Vec<TaskSpec> {
    vec![
        task(sales, spec!("db-sales-north-units", "What is the total of units sold in the north?",
            ["SELECT SUM(units) FROM sales WHERE region = 'north'"], "19")),
        task(sales, spec!("db-sales-reps", "How many reps are listed?",
            ["SELECT COUNT(*) FROM sales"], "5")),
        task(sales, spec!("db-sales-top-rep", "Which rep sold the most units?",
            ["SELECT rep FROM sales ORDER BY units DESC LIMIT 1"], "cy")),
        task(sales, spec!(NULL_FIXED_TASK, "What is the total refund in the east region?",
            ["SELECT SUM(refund) FROM sales WHERE region = 'east'"], "0")),
        task(sales, spec!("db-sales-drop-west", "Delete the west region rows.",
            ["DELETE FROM sales WHERE region = 'west'"],
            verify "SELECT COUNT(*) FROM sales WHERE region = 'west'" => "0")),
        task(sales, spec!("db-sales-fix-bo", "Update the units of bo to 8.",
            ["UPDATE sales SET units = 8 WHERE rep = 'bo'"],
            verify "SELECT units FROM sales WHERE rep = 'bo'" => "8")),
        task(school, spec!("db-school-chess", "How many students are in the chess club?",
            ["SELECT COUNT(*) FROM students WHERE club = 'chess'"], "3")),
        task(school, spec!("db-school-best", "Who has the top score?",
            ["SELECT name FROM students ORDER BY score DESC LIMIT 1"], "kai")),
        task(school, spec!(NULL_BROKEN_TASK, "What club is noa in?",
            ["SELECT club FROM students WHERE name = 'noa'"], "NULL")),
        task(school, spec!("db-school-enrol", "Insert a student oli in grade 9 with score 70 in drama.",
            ["INSERT INTO students VALUES ('oli', 9, 70, 'drama')"],
            verify "SELECT COUNT(*) FROM students WHERE name = 'oli'" => "1")),
        task(school, spec!("db-school-regrade", "Change the score of jon to 75.",
            ["UPDATE students SET score = 75 WHERE name = 'jon'"],
            verify "SELECT score FROM students WHERE name = 'jon'" => "75")),
        task(depot, spec!("db-depot-held", "Which parcels are held? List ids in order.",
            ["SELECT `tracking id` FROM parcels WHERE status = 'held' ORDER BY `tracking id`"], "p-12, p-14")),
        task(depot, spec!("db-depot-heaviest", "What is the maximum parcel weight for porto?",
            ["SELECT MAX(weight) FROM parcels WHERE city = 'porto'"], "4")),
        task(depot, spec!("db-depot-deliver", "Update parcel p-13 to delivered.",
            ["UPDATE parcels SET status = 'delivered' WHERE `tracking id` = 'p-13'"],
            verify "SELECT status FROM parcels WHERE `tracking id` = 'p-13'" => "delivered")),
        task(depot, spec!("db-depot-purge", "Delete all delivered parcels.",
            ["DELETE FROM parcels WHERE status = 'delivered'"],
            verify "SELECT COUNT(*) FROM parcels WHERE status = 'delivered'" => "0")),
    ]
}
