// Parse a tab-separated edge list, collapse repeated interactions and cut
// the history into cumulative snapshots.

use temporal_embed::graph::{
    build_snapshots, clustering_coefficient, collapse_multi_edges, parse_edge_list,
};

const EDGES: &str = "\
# src\tdst\ttime
alice\tbob\t1
bob\tcarol\t2
alice\tbob\t3
carol\tdave\t5
dave\talice\t7
bob\tdave\t8
erin\tcarol\t9
";

pub fn run_example() -> temporal_embed::Result<()> {
    let g = parse_edge_list(EDGES.as_bytes(), "inline.tsv", false, false)?;
    println!(
        "{} nodes, {} edges, times {:?}",
        g.node_count(),
        g.edge_count(),
        g.time_range()
    );

    // Interactions within the same 4-tick bucket merge into one weighted edge.
    let merged = collapse_multi_edges(&g, 4)?;
    println!(
        "after collapsing into 4-tick buckets: {} edges",
        merged.edge_count()
    );

    let series = build_snapshots(&g, 3)?;
    for (k, (snap, boundary)) in series
        .snapshots()
        .iter()
        .zip(series.boundaries())
        .enumerate()
    {
        println!(
            "step {k}: t <= {boundary}, {} nodes, {} edges, clustering {:.3}",
            snap.present_count(),
            snap.edge_count(),
            clustering_coefficient(snap)
        );
    }
    assert_eq!(series.last().edge_count(), 6);
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}
