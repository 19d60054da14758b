mod common;

use std::io::Cursor;

use kgrag::ingest::{
    export_graph, load_graph, load_graph_dir, parse_edges, parse_nodes, read_node_file,
    write_export, EndpointRole, Error, IngestError, LoadError,
};
use kgrag::normalizer::AliasTable;

fn demo_records() -> (
    Vec<kgrag::ingest::NodeRecord>,
    Vec<kgrag::ingest::EdgeRecord>,
) {
    let dir = common::fixture_dir();
    (
        read_node_file(&dir.join("nodes.json")).unwrap(),
        kgrag::ingest::read_edge_file(&dir.join("edges.json")).unwrap(),
    )
}

#[test]
fn demo_export_round_trips_byte_for_byte() {
    let (nodes, edges) = demo_records();
    let mut builder = load_graph(&nodes, &edges).unwrap().into_builder();
    let aliases =
        AliasTable::parse(std::fs::File::open(common::fixture_dir().join("aliases.json")).unwrap())
            .unwrap();
    aliases.apply(&mut builder).unwrap();
    let graph = builder.freeze();

    let dir = tempfile::tempdir().unwrap();
    let first = export_graph(&graph);
    write_export(dir.path(), &first).unwrap();
    let reloaded = load_graph_dir(dir.path()).unwrap();
    assert_eq!(reloaded.stats(), graph.stats());
    assert_eq!(export_graph(&reloaded), first);
    assert_eq!(
        reloaded.find_alias("vpa").map(|id| reloaded.name(id)),
        Some("Valproate")
    );
}

#[test]
fn empty_layers_still_get_files() {
    let graph = load_graph(&[], &[]).unwrap();
    let files = export_graph(&graph);
    assert!(files.iter().any(|f| f.path.starts_with("nodes/")));
    assert!(files.iter().any(|f| f.path.starts_with("edges/")));
    assert!(files.iter().all(|f| f.contents == b"[]\n"));
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(matches!(
        parse_nodes(Cursor::new("{")),
        Err(IngestError::MalformedJson(_))
    ));
    assert!(matches!(
        parse_nodes(Cursor::new("{}")),
        Err(IngestError::NotAnArray)
    ));
    assert!(matches!(
        parse_nodes(Cursor::new(r#"[{"layer": "L1"}]"#)),
        Err(IngestError::MissingField { index: 0, .. })
    ));
    assert!(matches!(
        parse_edges(Cursor::new(
            r#"[{"head": "A", "relation": "treats", "tail": "B", "paper_count": 0}]"#
        )),
        Err(IngestError::NonpositiveCount { index: 0 })
    ));
}

#[test]
fn file_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "[{]").unwrap();
    let err = read_node_file(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    assert!(err.to_string().contains("broken.json"));
}

#[test]
fn every_unresolved_endpoint_is_listed() {
    let (nodes, _) = demo_records();
    let edges = parse_edges(Cursor::new(
        r#"[
            {"head": "Valproate", "relation": "treats", "tail": "Nowhere", "paper_count": 1},
            {"head": "Ghost", "relation": "treats", "tail": "Dravet Syndrome", "paper_count": 1}
        ]"#,
    ))
    .unwrap();
    let Err(LoadError::Unresolved(list)) = load_graph(&nodes, &edges) else {
        panic!("expected unresolved endpoints");
    };
    assert_eq!(list.len(), 2);
    assert_eq!(
        (list[0].record, &list[0].role, list[0].reference.as_str()),
        (0, &EndpointRole::Tail, "Nowhere")
    );
    assert_eq!(
        (list[1].record, &list[1].role, list[1].reference.as_str()),
        (1, &EndpointRole::Head, "Ghost")
    );
}

#[test]
fn generated_graphs_survive_export() {
    let mut rng = common::rng(21);
    for _ in 0..20 {
        let (graph, _) = common::random_connected_graph(&mut rng, 12, 6);
        let dir = tempfile::tempdir().unwrap();
        write_export(dir.path(), &export_graph(&graph)).unwrap();
        let back = load_graph_dir(dir.path()).unwrap();
        assert_eq!(back.stats(), graph.stats());
        let named = |g: &kgrag::KnowledgeGraph| {
            let mut v: Vec<(String, String, String, u32)> = g
                .triplets()
                .map(|(_, t)| {
                    (
                        g.name(t.head()).to_string(),
                        t.relation().name().to_string(),
                        g.name(t.tail()).to_string(),
                        t.paper_count(),
                    )
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(named(&back), named(&graph));
    }
}
