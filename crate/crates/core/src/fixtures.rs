//! Small reference plants in PIDL, used by tests, benches and examples.

use crate::graph::ProcessGraph;
use crate::ingest::{parse_pidl, SourceDoc};

/// Source, pump, splitter with fractions 0.25/0.75, two sinks.
pub const SPLITTER_PLANT: &str = "\
node S1 type=source flow=10
node P1 type=pump max_flow=12
node SP1 type=splitter split.out1=0.25 split.out2=0.75
node K1 type=sink
node K2 type=sink
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

/// Mixer, reactor and splitter in a loop; a fifth of the splitter outflow
/// returns to the mixer.
pub const RECYCLE_PLANT: &str = "\
node S1 type=source flow=10
node M1 type=mixer
node R1 type=tank volume=5
node SP1 type=splitter split.out1=0.2 split.out2=0.8
node K1 type=sink
pipe E1: S1.out1 -> M1.in1
pipe E2: M1.out1 -> R1.in1
pipe E3: R1.out1 -> SP1.in1
pipe E4: SP1.out1 -> M1.in2
pipe E5: SP1.out2 -> K1.in1
";

/// The recycle plant with an undersized pump after the mixer.
pub const RECYCLE_PUMPED: &str = "\
node S1 type=source flow=10
node M1 type=mixer
node P1 type=pump max_flow=12
node R1 type=tank volume=5
node SP1 type=splitter split.out1=0.2 split.out2=0.8
node K1 type=sink
pipe E1: S1.out1 -> M1.in1
pipe E2: M1.out1 -> P1.in1
pipe E3: P1.out1 -> R1.in1
pipe E4: R1.out1 -> SP1.in1
pipe E5: SP1.out1 -> M1.in2
pipe E6: SP1.out2 -> K1.in1
";

/// A line with an in-line flow transmitter feeding a controller that sets
/// the valve.
pub const INSTRUMENTED: &str = "\
node S1 type=source flow=10
node FT1 type=instrument
node P1 type=pump max_flow=15
node V1 type=valve
node K1 type=sink
node C1 type=controller
pipe E1: S1.out1 -> FT1.in1 diameter=0.1 length=3
pipe E2: FT1.out1 -> P1.in1 diameter=0.08 length=2
pipe E3: P1.out1 -> V1.in1
pipe E4: V1.out1 -> K1.in1
signal X1: FT1 -> C1
signal X2: C1 -> V1
";

/// Demo plant: a metered feed, a recycle loop through a pump and reactor, and
/// flow control on the product valve.
pub const DEMO_PLANT: &str = "\
# demo plant
node S1 type=source flow=10 material=water pos=doc:10,50
node FT1 type=instrument pos=doc:30,50
node M1 type=mixer pos=doc:50,50
node P1 type=pump max_flow=15 pos=doc:70,50
node R1 type=tank volume=2.5 pos=doc:90,50
node SP1 type=splitter split.out1=0.2 split.out2=0.8 pos=doc:110,50
node V1 type=valve pos=doc:130,50
node K1 type=sink pos=doc:150,50
node C1 type=controller pos=doc:90,20
pipe E1: S1.out1 -> FT1.in1 diameter=0.1 length=4
pipe E2: FT1.out1 -> M1.in1 diameter=0.1 length=6
pipe E3: M1.out1 -> P1.in1 diameter=0.1
pipe E4: P1.out1 -> R1.in1 diameter=0.1
pipe E5: R1.out1 -> SP1.in1 diameter=0.1
pipe E6: SP1.out1 -> M1.in2 diameter=0.05
pipe E7: SP1.out2 -> V1.in1 diameter=0.1
pipe E8: V1.out1 -> K1.in1 diameter=0.1
signal S-FT1: FT1 -> C1
signal S-V1: C1 -> V1
";

/// Drawing-derived view of [`RECYCLE_PUMPED`]: process data only.
pub const MERGE_2D: &str = RECYCLE_PUMPED;

/// Layout-derived view of the same plant: geometry only. Edge tags differ
/// from the drawing; edges match by endpoints.
pub const MERGE_3D: &str = "\
node S1 type=source pos=plant:0,0,1
node M1 type=mixer pos=plant:2,0,1
node P1 type=pump pos=plant:4,0,0.5
node R1 type=tank volume=5.0000001 pos=plant:6,0,0
node SP1 type=splitter pos=plant:8,0,1
node K1 type=sink pos=plant:10,0,1
pipe L1: S1.out1 -> M1.in1 diameter=0.1 length=2
pipe L2: M1.out1 -> P1.in1 diameter=0.1 length=2
pipe L3: P1.out1 -> R1.in1 diameter=0.08 length=2.2
pipe L4: R1.out1 -> SP1.in1 diameter=0.1 length=2.5
pipe L5: SP1.out1 -> M1.in2 diameter=0.05 length=7
pipe L6: SP1.out2 -> K1.in1 diameter=0.1 length=2
";

/// Seeded defects, one per check, each a small edit of [`SPLITTER_PLANT`]
/// (or [`RECYCLE_PLANT`] for loops).
pub mod defects {
    /// An extra tank with no connections.
    pub const C1_ISOLATED: &str = "\
node S1 type=source flow=10
node P1 type=pump max_flow=12
node SP1 type=splitter split.out1=0.25 split.out2=0.75
node K1 type=sink
node K2 type=sink
node T9 type=tank
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

    /// A pump declaring two outlets.
    pub const C2_CARDINALITY: &str = "\
node S1 type=source flow=10
node P1 type=pump max_flow=12 out=2
node SP1 type=splitter split.out1=0.25 split.out2=0.75
node K1 type=sink
node K2 type=sink
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

    /// A buffer tank with a spare, unconnected drain nozzle.
    pub const C3_DANGLING: &str = "\
node S1 type=source flow=10
node P1 type=pump max_flow=12
node T1 type=tank out=2
node SP1 type=splitter split.out1=0.25 split.out2=0.75
node K1 type=sink
node K2 type=sink
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> T1.in1
pipe E5: T1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

    /// The pump lacks `max_flow`.
    pub const C4_MISSING_ATTR: &str = "\
node S1 type=source flow=10
node P1 type=pump
node SP1 type=splitter split.out1=0.25 split.out2=0.75
node K1 type=sink
node K2 type=sink
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

    /// Fractions summing to 1.1.
    pub const C5_FRACTIONS: &str = "\
node S1 type=source flow=10
node P1 type=pump max_flow=12
node SP1 type=splitter split.out1=0.5 split.out2=0.6
node K1 type=sink
node K2 type=sink
pipe E1: S1.out1 -> P1.in1
pipe E2: P1.out1 -> SP1.in1
pipe E3: SP1.out1 -> K1.in1
pipe E4: SP1.out2 -> K2.in1
";

    /// A recycle loop.
    pub const C6_CYCLE: &str = super::RECYCLE_PLANT;
}

/// Parses a fixture. Panics on malformed text, which is a bug in the fixture.
pub fn load(id: &str, pidl: &str) -> ProcessGraph {
    parse_pidl(&SourceDoc::pidl(id, pidl)).unwrap_or_else(|e| panic!("fixture {id}: {e}"))
}

pub fn splitter_plant() -> ProcessGraph {
    load("splitter.pidl", SPLITTER_PLANT)
}

pub fn recycle_plant() -> ProcessGraph {
    load("recycle.pidl", RECYCLE_PLANT)
}

pub fn recycle_pumped() -> ProcessGraph {
    load("recycle_pumped.pidl", RECYCLE_PUMPED)
}

pub fn instrumented() -> ProcessGraph {
    load("instrumented.pidl", INSTRUMENTED)
}

pub fn demo_plant() -> ProcessGraph {
    load("demo.pidl", DEMO_PLANT)
}

/// All named plants, for checks that should hold on each of them.
pub fn all() -> Vec<(&'static str, ProcessGraph)> {
    vec![
        ("splitter", splitter_plant()),
        ("recycle", recycle_plant()),
        ("recycle_pumped", recycle_pumped()),
        ("instrumented", instrumented()),
        ("demo", demo_plant()),
    ]
}
