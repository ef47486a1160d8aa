mod common;

use sdfmig::analysis::format_frames_per_second;
use sdfmig::migration::{classify_channel, explore_single_migrations, migrate_task};
use sdfmig::platform::{tdma_wait, ChannelBinding, TileKind};
use sdfmig::rational;
use sdfmig::scenario::{emit_report, Report, ReportFormat, ReportRow};
use sdfmig::{ActorKind, AnalysisOptions, CommClass, MigrationSpec};

use common::mjpeg;

fn fps(s: &sdfmig::Scenario, g: &sdfmig::Sdfg) -> String {
    let r = sdfmig::self_timed_throughput(g, &AnalysisOptions::default()).unwrap();
    format_frames_per_second(&r, &s.meta.clock_hz, 2)
}

#[test]
fn reconstructed_fixture_throughputs() {
    let s = mjpeg();
    let m = s.mapping.as_ref().unwrap();
    assert_eq!(fps(&s, &s.analysable_graph().unwrap()), "13.30");
    let migrated =
        |a: &str| migrate_task(&s.graph, &s.platform, m, &MigrationSpec::new(a, s.defaults.clone()), &s.build);
    assert_eq!(fps(&s, &migrated("VLD").unwrap().graph), "13.30");
    assert_eq!(fps(&s, &migrated("IDCT").unwrap().graph), "17.23");
}

#[test]
fn idct_migration_classes_and_bindings() {
    let s = mjpeg();
    let out = migrate_task(
        &s.graph,
        &s.platform,
        s.mapping.as_ref().unwrap(),
        &MigrationSpec::new("IDCT", s.defaults.clone()),
        &s.build,
    )
    .unwrap();
    let class = |id: &str| classify_channel(out.application.channel(id).unwrap(), &out.application);
    assert_eq!(class("iq_idct"), CommClass::SH1);
    assert_eq!(class("idct_cc"), CommClass::HS1);
    assert_eq!(class("izz_iq"), CommClass::SS);

    let tile = out.mapping.tile_of("IDCT").unwrap();
    assert_eq!(out.platform.tile(tile.as_str()).unwrap().kind, TileKind::HardwareBlock);
    assert!(!out.mapping.tdma_slice.contains_key("IDCT"));
    // IQ now owns the whole wheel of T2.
    assert_eq!(tdma_wait("IQ", &out.platform, &out.mapping).unwrap(), 0);
    assert_eq!(out.graph.actor("IQ").unwrap().exec_time, 49_582);

    assert!(matches!(out.mapping.channel_binding["iq_idct"], ChannelBinding::Remote { .. }));
    match &out.mapping.channel_binding["idct_cc"] {
        ChannelBinding::RemoteMemory { batch, prefetch_time, fetch_path, .. } => {
            assert_eq!((*batch, *prefetch_time, *fetch_path), (1, 10_000, false));
        }
        other => panic!("unexpected binding {other:?}"),
    }
    for id in ["CC_ri", "CC1", "CC_m1", "CC2", "CC_ro"] {
        assert!(out.graph.contains_actor(id), "{id} missing");
    }
    assert!(!out.graph.contains_actor("CC_m2"));
    assert_eq!(out.graph.actor("CC2").unwrap().exec_time, 154_374);
    assert_eq!(out.graph.actor("CC_m1").unwrap().exec_time, 262_047);
}

#[test]
fn migrating_twice_is_rejected() {
    let s = mjpeg();
    let (once, _) = s.migrate("RE", &s.defaults).unwrap();
    assert_eq!(once.graph.actor("RE").unwrap().kind, ActorKind::Hardware);
    assert!(matches!(once.migrate("RE", &s.defaults), Err(sdfmig::Error::AlreadyHardware(_))));
    assert!(matches!(s.migrate("nope", &s.defaults), Err(sdfmig::Error::UnknownActor(_))));
}

#[test]
fn exploration_ranks_by_gain() {
    let s = mjpeg();
    let opts = AnalysisOptions::default();
    let baseline = s.throughput(&opts).unwrap();
    let entries = explore_single_migrations(
        &s.graph,
        &s.platform,
        s.mapping.as_ref().unwrap(),
        &s.defaults,
        &baseline,
        &s.meta.clock_hz,
        &s.build,
        &opts,
    );
    let order: Vec<&str> = entries.iter().map(|e| e.actor.as_str()).collect();
    assert_eq!(order, ["IDCT", "RE", "CC", "IQ", "IZZ", "VLD"]);
    let gains: Vec<_> = entries.iter().map(|e| e.gain().unwrap().clone()).collect();
    assert!(gains.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(rational::format_decimal(&gains[0], 2), "3.93");
}

#[test]
fn csv_report_is_byte_stable() {
    let s = mjpeg();
    let opts = AnalysisOptions::default();
    let render = || {
        let baseline = s.throughput(&opts).unwrap();
        let (_, out) = s.migrate("IDCT", &s.defaults).unwrap();
        let after = sdfmig::self_timed_throughput(&out.graph, &opts).unwrap();
        let report = Report {
            scenario: s.meta.name.clone(),
            clock_hz: s.meta.clock_hz.clone(),
            baseline,
            rows: vec![ReportRow { actor: "IDCT".into(), result: Ok(after) }],
            places: 2,
        };
        emit_report(&report, ReportFormat::Csv)
    };
    let first = render();
    assert_eq!(first, "actor,fps_before,fps_after,gain_fps\nIDCT,13.30,17.23,3.93\n");
    assert_eq!(render(), first);
}
