// Regenerates the committed golden trace bundle: a seeded synthetic run is
// recorded, then replayed, and the replay report is written next to the
// traces. Usage: make_golden <output-dir>. Timestamps are zeroed so the
// bundle is byte-stable across regenerations.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ddc/engine.hpp"
#include "ddc/synthetic.hpp"
#include "ddc/trace.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_golden <output-dir>\n";
        return 2;
    }
    const std::filesystem::path root(argv[1]);
    const std::filesystem::path trace_root = root / "traces";
    std::filesystem::remove_all(trace_root);

    ddc::GeneratorSpec spec;
    spec.seed = 20260813;
    spec.p = 0.7;
    spec.family = ddc::Family::dip_recover;
    spec.base_jitter = 0.6;
    spec.noise_sigma = 0.12;
    spec.len_min = 72;
    spec.len_max = 120;
    spec.top_k = 8;

    ddc::EngineConfig cfg;
    cfg.budget = 24;
    cfg.init_budget = 8;
    cfg.window_len = 48;
    cfg.max_tokens_per_path = 512;

    ddc::SyntheticSource synth(spec);
    ddc::RecordingSource recorder(synth, trace_root, "golden-q1", 0);
    const ddc::Engine engine(cfg);
    engine.run(recorder);

    // The bundle's reference report comes from replaying what was recorded.
    ddc::ReplaySource replay(trace_root / "golden-q1");
    const ddc::RunReport report = engine.run(replay);
    std::ofstream out(root / "expected_report.json", std::ios::trunc);
    out << report.to_json_string();
    if (!out) {
        std::cerr << "failed writing expected report\n";
        return 1;
    }
    std::cout << "golden bundle written to " << root.string() << "\n";
    return 0;
}
