//! Synthetic plants of adjustable size for benchmarking.

use pidtwin_core::{fixtures, ProcessGraph};

/// PIDL for a train of `sections` recycle units between one source and one
/// sink. Each unit is mixer, pump, tank and splitter, with a tenth of the
/// splitter outflow returned to the mixer.
pub fn train_pidl(sections: usize) -> String {
    let mut nodes = String::from("node S1 type=source flow=100\n");
    let mut pipes = String::new();
    let mut upstream = "S1.out1".to_string();
    for i in 1..=sections {
        nodes.push_str(&format!(
            "node M{i} type=mixer\n\
             node P{i} type=pump max_flow=1000\n\
             node T{i} type=tank volume=10\n\
             node SP{i} type=splitter split.out1=0.1 split.out2=0.9\n\
             node FT{i} type=instrument\n"
        ));
        pipes.push_str(&format!(
            "pipe E{i}a: {upstream} -> M{i}.in1 diameter=0.1\n\
             pipe E{i}b: M{i}.out1 -> P{i}.in1 diameter=0.1\n\
             pipe E{i}c: P{i}.out1 -> T{i}.in1 diameter=0.1\n\
             pipe E{i}d: T{i}.out1 -> SP{i}.in1 diameter=0.1\n\
             pipe E{i}e: SP{i}.out1 -> M{i}.in2 diameter=0.05\n\
             pipe E{i}f: SP{i}.out2 -> FT{i}.in1 diameter=0.1\n"
        ));
        upstream = format!("FT{i}.out1");
    }
    nodes.push_str("node K1 type=sink\n");
    pipes.push_str(&format!("pipe E-out: {upstream} -> K1.in1\n"));
    nodes + &pipes
}

pub fn train(sections: usize) -> ProcessGraph {
    fixtures::load("train.pidl", &train_pidl(sections))
}
