mod oracles;

use fr2sim::channel::{breakpoint_distance, umi_los_path_loss, LinkBudget};
use fr2sim::link_adapt::{illa_select_mcs, OllaState};
use fr2sim::mac::MacConfig;
use fr2sim::nr_tables::{
    compute_tbs, mcs_table, small_tbs_table, CqiTableId, McsTableId, TbsInput,
};
use fr2sim::phy::BlerModel;
use oracles::*;
use rand::{Rng, SeedableRng};

fn tbs_input(n_prb: u32, n_symbols: u32, n_layers: u32, mcs: fr2sim::McsEntry) -> TbsInput {
    TbsInput {
        n_prb,
        n_symbols_data: n_symbols,
        n_dmrs_re_per_prb: 12,
        x_overhead: 0,
        n_layers,
        mcs,
    }
}

#[test]
fn small_tbs_table_matches_transcription() {
    assert_eq!(small_tbs_table(), &SMALL_TBS[..]);
}

#[test]
fn tbs_matches_oracle_on_full_grid() {
    let mut reports = Vec::new();
    for table in McsTableId::ALL {
        for mcs in mcs_table(table).iter().filter(|e| !e.reserved) {
            for n_prb in 1..=66 {
                for layers in [1, 2] {
                    for symbols in [13, 9] {
                        let main = compute_tbs(&tbs_input(n_prb, symbols, layers, *mcs)).unwrap();
                        let oracle = tbs_oracle(n_prb, symbols, 12, 0, layers, mcs);
                        reports.push(OracleReport::new(
                            format!(
                                "T{table} mcs{} prb{n_prb} L{layers} sym{symbols}",
                                mcs.index
                            ),
                            f64::from(main),
                            f64::from(oracle),
                        ));
                    }
                }
            }
        }
    }
    let (n, failures) = summarize("tbs", &reports, 0.0);
    assert!(n > 8000);
    assert!(
        failures.is_empty(),
        "{:?}",
        &failures[..failures.len().min(5)]
    );
}

#[test]
fn tbs_oracle_examples() {
    let top2 = mcs_table(McsTableId::Table2)[27];
    assert_eq!(tbs_oracle(66, 13, 12, 0, 2, &top2), 139_376);
    let low = mcs_table(McsTableId::Table1)[0];
    assert_eq!(tbs_oracle(1, 13, 12, 0, 1, &low), 32);
    for table in McsTableId::ALL {
        for mcs in mcs_table(table).iter().filter(|e| !e.reserved) {
            let t = tbs_oracle(66, 13, 12, 0, 2, mcs);
            assert_eq!(t % 8, 0);
        }
    }
}

#[test]
fn path_loss_matches_formula() {
    let b = LinkBudget::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut reports = Vec::new();
    for i in 0..1000 {
        let d: f64 = rng.random_range(1.0..5000.0);
        let main = umi_los_path_loss(d, &b);
        let oracle = path_loss_oracle(d, b.carrier_freq_ghz, b.h_bs_m, b.h_ut_m);
        reports.push(OracleReport::new(format!("d{i}={d:.3}"), main, oracle));
    }
    let (_, failures) = summarize("path loss", &reports, 1e-9);
    assert!(failures.is_empty(), "{failures:?}");

    let bp = breakpoint_distance(&b);
    assert!((bp - 1488.0).abs() < 1e-9);
    let jump = umi_los_path_loss(bp + 1e-6, &b) - umi_los_path_loss(bp, &b);
    assert!(jump.abs() < 0.01, "{jump}");
    for (d, expect) in [(10.0, 83.77), (100.0, 102.32), (250.0, 110.65)] {
        assert!((umi_los_path_loss(d, &b) - expect).abs() < 0.01, "{d}");
    }
}

#[test]
fn illa_matches_scan_on_full_grid() {
    let model = BlerModel::default();
    let mut reports = Vec::new();
    for table in McsTableId::ALL {
        let cqi_table = table.cqi_table();
        for cqi in 1..=15u8 {
            for step in 0..=300 {
                let offset = -15.0 + 0.1 * f64::from(step);
                let mut olla = OllaState::new(0.1, 0.5).unwrap();
                olla.offset_db = offset;
                let main = illa_select_mcs(cqi, cqi_table, table, &olla, &model)
                    .unwrap()
                    .index;
                let oracle =
                    illa_scan_oracle(cqi_se(cqi_table, cqi), table, offset, model.shannon_gap_db);
                reports.push(OracleReport::new(
                    format!("T{table} cqi{cqi} off{offset:.1}"),
                    f64::from(main),
                    f64::from(oracle),
                ));
            }
        }
    }
    let (_, failures) = summarize("illa", &reports, 0.0);
    assert!(
        failures.is_empty(),
        "{:?}",
        &failures[..failures.len().min(5)]
    );

    assert_eq!(
        illa_scan_oracle(cqi_se(CqiTableId::Table3, 1), McsTableId::Table2, 0.0, 1.5),
        0
    );
    // the -15 dB floor pushes low and mid CQIs to index 0; CQI 15 still lands mid-table
    for cqi in 1..=3 {
        assert_eq!(
            illa_scan_oracle(
                cqi_se(CqiTableId::Table3, cqi),
                McsTableId::Table2,
                -15.0,
                1.5
            ),
            0
        );
    }
    assert_eq!(
        illa_scan_oracle(
            cqi_se(CqiTableId::Table3, 15),
            McsTableId::Table2,
            -15.0,
            1.5
        ),
        10
    );
}

#[test]
fn peak_throughput_closed_form_values() {
    let mac = MacConfig::default();
    let t1 = peak_throughput_closed_form(McsTableId::Table1, &mac);
    let t2 = peak_throughput_closed_form(McsTableId::Table2, &mac);
    // 1600 periods/s x (3 x 139376 + 94248) bits
    assert!((t2 - 819_801_600.0).abs() < 1.0, "{t2}");
    assert!((0.8e9..=0.85e9).contains(&t2));
    assert_eq!(t1 / t1, 1.0);
    // TBS quantization pulls the ratio below the unquantized 4/3.
    let ratio = t2 / t1;
    assert!((ratio - 512_376.0 / 389_400.0).abs() < 1e-12, "{ratio}");
    assert!((ratio - 4.0 / 3.0).abs() < 0.02);
}
