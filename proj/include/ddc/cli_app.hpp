#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddc/config.hpp"
#include "ddc/engine.hpp"
#include "ddc/errors.hpp"
#include "ddc/gateway.hpp"
#include "ddc/simulation.hpp"
#include "ddc/synthetic.hpp"
#include "ddc/trace.hpp"

namespace ddc {

// Everything the CLI can set, bound to CLI11 options so each flag has a
// config-file equivalent with flag > file > default precedence.
struct CliState {
    std::uint64_t seed = 1;

    // simulate
    std::string experiment = "stopping";
    std::size_t trials = 1000;
    std::size_t paths_per_family = 500;
    std::string family = "stable_high";
    GeneratorSpec spec;
    StopPolicySim sim;

    // engine
    EngineConfig engine;

    // endpoint (api key comes from DDC_API_KEY only, never a flag)
    EndpointConfig endpoint;

    // io
    std::string dataset;
    std::string trace_dir;
    std::string out_dir = "out";
    std::vector<std::string> report_inputs;

    // check-condition; negative means point-mass (mu^2)
    double m2_c = -1.0;
    double m2_i = -1.0;
};

namespace cli_detail {

inline void write_file(const std::filesystem::path& file, const std::string& content) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << content;
    if (!out) throw ConfigError("failed writing " + file.string());
}

struct QuerySpec {
    std::string id;
    std::string prompt;
    std::string gold;
    bool has_gold = false;
};

inline std::vector<QuerySpec> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path);
    std::vector<QuerySpec> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        QuerySpec q;
        q.id = j.value("id", "q" + std::to_string(lineno));
        q.prompt = j.value("prompt", "");
        if (j.contains("gold")) {
            q.gold = j["gold"].is_string() ? j["gold"].get<std::string>() : j["gold"].dump();
            q.has_gold = true;
        }
        out.push_back(std::move(q));
    }
    if (out.empty()) throw ConfigError("dataset is empty: " + path);
    return out;
}

struct QueryResult {
    std::string id;
    RunReport report;
    std::string gold;
    bool has_gold = false;
};

inline nlohmann::ordered_json aggregate_json(const std::vector<QueryResult>& results) {
    std::size_t with_gold = 0, correct = 0, tokens = 0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        tokens += r.report.tokens_total;
        nlohmann::ordered_json row;
        row["id"] = r.id;
        row["final_answer"] = r.report.final_answer;
        row["stop_cause"] = r.report.stop_cause;
        row["paths_attempted"] = r.report.paths_attempted;
        row["tokens"] = r.report.tokens_total;
        if (r.has_gold) {
            ++with_gold;
            const bool ok = r.report.final_answer == r.gold;
            if (ok) ++correct;
            row["gold"] = r.gold;
            row["correct"] = ok;
        }
        rows.push_back(std::move(row));
    }
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["queries"] = results.size();
    j["with_gold"] = with_gold;
    j["correct"] = correct;
    if (with_gold > 0) {
        j["accuracy"] = detail::round_for_report(static_cast<double>(correct) /
                                                 static_cast<double>(with_gold));
    } else {
        j["accuracy"] = nullptr;
    }
    j["tokens_total"] = tokens;
    j["tokens_per_1e7"] = detail::round_for_report(static_cast<double>(tokens) / 1e7);
    j["rows"] = rows;
    return j;
}

inline std::uint64_t now_unix_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

}  // namespace cli_detail

inline int exec_simulate(CliState& s, std::ostream& out) {
    s.spec.seed = s.seed;
    s.spec.family = family_from_string(s.family);
    const std::filesystem::path dir(s.out_dir);

    if (s.experiment == "stopping") {
        const StoppingSummary summary = compare_stopping(s.spec, s.trials, s.sim);
        cli_detail::write_file(dir / "records.jsonl", trial_records_jsonl(summary));
        cli_detail::write_file(dir / "summary.json",
                               summary_json(s.spec, s.sim, summary).dump(2) + "\n");
        out << "stopping: trials=" << summary.trials << " mean_n_cow=" << summary.mean_n_cow
            << " mean_n_frq=" << summary.mean_n_frq << " acc_cow=" << summary.accuracy_cow
            << " acc_frq=" << summary.accuracy_frq << " acc_sc=" << summary.accuracy_sc << "\n";
        return 0;
    }
    if (s.experiment == "separation") {
        if (s.engine.window_len > s.spec.len_min) {
            throw ConfigError("--window must be <= --len-min so trend windows can fill");
        }
        GeneratorSpec degen = s.spec, dip = s.spec, stable = s.spec;
        degen.family = Family::degenerating;
        degen.seed = s.seed;
        dip.family = Family::dip_recover;
        dip.seed = s.seed + 1;
        stable.family = Family::stable_high;
        stable.seed = s.seed + 2;
        const SeparationRates rates =
            pruning_separation_experiment(degen, dip, stable, s.paths_per_family, s.engine);
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["paths_per_family"] = s.paths_per_family;
        j["prune_rate_degen"] = detail::round_for_report(rates.prune_rate_degen);
        j["survival_rate_dip"] = detail::round_for_report(rates.survival_rate_dip);
        j["survival_rate_stable"] = detail::round_for_report(rates.survival_rate_stable);
        j["tau_pass"] = detail::round_for_report(rates.thresholds.tau_pass);
        j["tau_drop"] = detail::round_for_report(rates.thresholds.tau_drop);
        j["tau_risk"] = detail::round_for_report(rates.thresholds.tau_risk);
        cli_detail::write_file(dir / "summary.json", j.dump(2) + "\n");
        out << "separation: prune_degen=" << rates.prune_rate_degen
            << " survive_dip=" << rates.survival_rate_dip
            << " survive_stable=" << rates.survival_rate_stable << "\n";
        return 0;
    }
    throw ConfigError("unknown experiment: " + s.experiment);
}

inline int exec_run(CliState& s, std::ostream& out) {
    const auto queries = cli_detail::load_dataset(s.dataset);
    s.endpoint.top_logprobs = s.engine.top_k;
    s.endpoint.resolve_env();
    s.endpoint.validate();
    const Engine engine(s.engine);
    const std::filesystem::path dir(s.out_dir);

    std::vector<cli_detail::QueryResult> results;
    bool transport_failed = false;
    std::string failure;
    for (const auto& q : queries) {
        LiveSource live(s.endpoint, q.prompt);
        try {
            RunReport report;
            if (!s.trace_dir.empty()) {
                RecordingSource recording(live, s.trace_dir, q.id, cli_detail::now_unix_ms());
                report = engine.run(recording);
            } else {
                report = engine.run(live);
            }
            cli_detail::write_file(dir / (q.id + ".report.json"), report.to_json_string());
            results.push_back({q.id, std::move(report), q.gold, q.has_gold});
        } catch (const TransportError& e) {
            transport_failed = true;
            failure = e.what();
            break;  // persist what we have, then signal transport failure
        }
    }
    cli_detail::write_file(dir / "aggregate.json",
                           cli_detail::aggregate_json(results).dump(2) + "\n");
    if (transport_failed) {
        throw TransportError(failure + " (partial results in " + s.out_dir + ")");
    }
    out << "run: queries=" << results.size() << " output=" << s.out_dir << "\n";
    return 0;
}

inline int exec_replay(CliState& s, std::ostream& out) {
    if (s.trace_dir.empty()) throw ConfigError("--trace-dir is required for replay");
    const std::filesystem::path root(s.trace_dir);
    if (!std::filesystem::is_directory(root)) {
        throw ConfigError("trace directory not found: " + s.trace_dir);
    }
    std::vector<std::string> query_ids;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory()) query_ids.push_back(entry.path().filename().string());
    }
    if (query_ids.empty()) throw ConfigError("no query directories in " + s.trace_dir);
    std::sort(query_ids.begin(), query_ids.end());

    std::map<std::string, cli_detail::QuerySpec> gold;
    if (!s.dataset.empty()) {
        for (auto& q : cli_detail::load_dataset(s.dataset)) gold[q.id] = q;
    }

    const Engine engine(s.engine);
    const std::filesystem::path dir(s.out_dir);
    std::vector<cli_detail::QueryResult> results;
    for (const auto& id : query_ids) {
        ReplaySource source(root / id);
        RunReport report = engine.run(source);
        cli_detail::write_file(dir / (id + ".report.json"), report.to_json_string());
        cli_detail::QueryResult r{id, std::move(report), "", false};
        if (auto it = gold.find(id); it != gold.end() && it->second.has_gold) {
            r.gold = it->second.gold;
            r.has_gold = true;
        }
        results.push_back(std::move(r));
    }
    cli_detail::write_file(dir / "aggregate.json",
                           cli_detail::aggregate_json(results).dump(2) + "\n");
    out << "replay: queries=" << results.size() << " output=" << s.out_dir << "\n";
    return 0;
}

inline int exec_report(CliState& s, std::ostream& out) {
    if (s.report_inputs.empty()) throw ConfigError("report needs at least one aggregate file");
    out << std::left << std::setw(32) << "input" << std::right << std::setw(9) << "queries"
        << std::setw(10) << "accuracy" << std::setw(14) << "tokens" << std::setw(14)
        << "tokens/1e7" << "\n";
    for (const auto& input : s.report_inputs) {
        std::ifstream in(input);
        if (!in) throw ConfigError("cannot open " + input);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(input + ": " + e.what());
        }
        const auto queries = j.value("queries", std::size_t{0});
        const auto tokens = j.value("tokens_total", std::size_t{0});
        std::ostringstream acc;
        if (j.contains("accuracy") && j["accuracy"].is_number()) {
            acc << std::fixed << std::setprecision(4) << j["accuracy"].get<double>();
        } else {
            acc << "-";
        }
        out << std::left << std::setw(32) << input << std::right << std::setw(9) << queries
            << std::setw(10) << acc.str() << std::setw(14) << tokens << std::setw(14)
            << std::setprecision(6) << static_cast<double>(tokens) / 1e7 << "\n";
    }
    return 0;
}

inline int exec_check_condition(CliState& s, std::ostream& out) {
    const double m2_c = s.m2_c < 0.0 ? s.spec.mu_c * s.spec.mu_c : s.m2_c;
    const double m2_i = s.m2_i < 0.0 ? s.spec.mu_i * s.spec.mu_i : s.m2_i;
    const ConditionCheck check =
        sufficient_condition(s.spec.p, s.spec.mu_c, s.spec.mu_i, m2_c, m2_i);
    out << "LHS=" << std::setprecision(10) << check.lhs << " RHS=" << check.rhs
        << " verdict=" << (check.holds ? "holds" : "fails") << "\n";
    return 0;
}

// Builds the full option tree over a CliState. Kept separate from execution
// so tests can parse argv vectors and inspect the bound values.
inline std::unique_ptr<CLI::App> build_cli(CliState& s) {
    auto app = std::make_unique<CLI::App>("adaptive sampled-reasoning controller", "ddc");
    app->require_subcommand(1);
    app->set_config("--config", "", "flat key-value config file; flags override it");
    app->add_option("--seed", s.seed, "master seed for all randomized work");

    auto add_engine_flags = [&](CLI::App* c) {
        c->add_option("--budget", s.engine.budget, "max paths attempted");
        c->add_option("--b-init", s.engine.init_budget, "unpruned init paths");
        c->add_option("--window", s.engine.window_len, "sliding window length in tokens");
        c->add_option("--gamma", s.engine.gamma, "majority fraction for the stop rule");
        c->add_option("--tau-stop", s.engine.tau_stop, "posterior threshold for stopping");
        c->add_option("--eta", s.engine.eta, "instability penalty coefficient");
        c->add_option("--k", s.engine.top_k, "top-k logprobs per token");
        c->add_option("--pass-percentile", s.engine.pass_percentile,
                      "init percentile for the fast-pass threshold");
        c->add_option("--drop-percentile", s.engine.drop_percentile,
                      "init percentile for the hard-drop threshold");
        c->add_option("--tukey-multiplier", s.engine.tukey_multiplier,
                      "IQR multiplier for the instability fence");
        c->add_option("--max-tokens-per-path", s.engine.max_tokens_per_path,
                      "per-path token cap");
        c->add_option("--stride", s.engine.stride, "gate cadence in tokens");
    };

    CLI::App* sim = app->add_subcommand("simulate", "synthetic Monte Carlo experiments");
    sim->fallthrough();
    sim->configurable();
    sim->add_option("--experiment", s.experiment, "stopping | separation")
        ->check(CLI::IsMember({"stopping", "separation"}));
    sim->add_option("--trials", s.trials, "independent trials")->check(CLI::PositiveNumber);
    sim->add_option("--p", s.spec.p, "probability a path is correct");
    sim->add_option("--mu-c", s.spec.mu_c, "mean weight of correct paths");
    sim->add_option("--mu-i", s.spec.mu_i, "mean weight of incorrect paths");
    sim->add_option("--weight-noise", s.spec.weight_noise,
                    "weight spread knob; 0 draws point masses");
    sim->add_option("--distractors", s.spec.distractors, "wrong-answer pool size");
    sim->add_option("--gamma", s.sim.gamma, "majority fraction for the stop rule");
    sim->add_option("--tau-stop", s.sim.tau_stop, "posterior threshold for stopping");
    sim->add_option("--budget", s.sim.budget, "vote budget per trial");
    sim->add_option("--min-votes", s.sim.min_votes, "votes before the stop rule may fire");
    sim->add_option("--sc-budget", s.sim.sc_budget, "fixed self-consistency width");
    sim->add_option("--weight-scale", s.sim.weight_scale, "scales every drawn weight");
    sim->add_option("--family", s.family,
                    "stable_high | dip_recover | degenerating | isotropic_noise");
    sim->add_option("--paths-per-family", s.paths_per_family,
                    "evaluation paths per family (separation)");
    sim->add_option("--len-min", s.spec.len_min, "min path length in tokens");
    sim->add_option("--len-max", s.spec.len_max, "max path length in tokens");
    sim->add_option("--base-conf", s.spec.base_conf, "flat confidence level");
    sim->add_option("--base-jitter", s.spec.base_jitter, "per-path base offset range");
    sim->add_option("--noise-sigma", s.spec.noise_sigma, "per-token noise sigma");
    sim->add_option("--dip-depth", s.spec.dip_depth, "dip_recover bump depth");
    sim->add_option("--dip-width", s.spec.dip_width, "dip_recover bump width in tokens");
    sim->add_option("--drift-rate", s.spec.drift_rate, "degenerating loss per token");
    sim->add_option("--window", s.engine.window_len, "trend window for separation gating");
    sim->add_option("--eta", s.engine.eta, "instability penalty coefficient");
    sim->add_option("--out", s.out_dir, "output directory");

    CLI::App* run = app->add_subcommand("run", "drive a live endpoint");
    run->fallthrough();
    run->configurable();
    add_engine_flags(run);
    run->add_option("--dataset", s.dataset, "JSONL queries: {id, prompt, gold?}")->required();
    run->add_option("--out", s.out_dir, "output directory");
    run->add_option("--trace-dir", s.trace_dir, "record replayable traces here");
    run->add_option("--base-url", s.endpoint.base_url,
                    "endpoint base URL (or DDC_BASE_URL)");
    run->add_option("--model", s.endpoint.model_name, "model name");
    run->add_option("--temperature", s.endpoint.temperature, "sampling temperature");
    run->add_option("--top-p", s.endpoint.top_p, "nucleus sampling mass");
    run->add_option("--timeout", s.endpoint.timeout_sec, "request timeout seconds");
    run->add_option("--retries", s.endpoint.retry_count, "transport retry count");
    run->add_option("--retry-backoff-ms", s.endpoint.retry_backoff_ms,
                    "backoff between retries");
    run->add_flag("--chat", s.endpoint.chat_mode, "use the chat endpoint");
    run->add_option("--prompt-template", s.endpoint.prompt_template,
                    "chat user-message wrapper with {prompt} placeholder");

    CLI::App* replay = app->add_subcommand("replay", "re-run recorded traces");
    replay->fallthrough();
    replay->configurable();
    add_engine_flags(replay);
    replay->add_option("--trace-dir", s.trace_dir, "trace root directory")->required();
    replay->add_option("--dataset", s.dataset, "optional JSONL with gold answers");
    replay->add_option("--out", s.out_dir, "output directory");

    CLI::App* report = app->add_subcommand("report", "tabulate aggregate files");
    report->fallthrough();
    report->configurable();
    report->add_option("--inputs", s.report_inputs, "aggregate.json files")->required();

    CLI::App* check = app->add_subcommand("check-condition", "evaluate the acceleration test");
    check->fallthrough();
    check->configurable();
    check->add_option("--p", s.spec.p, "probability a path is correct");
    check->add_option("--mu-c", s.spec.mu_c, "mean weight of correct paths");
    check->add_option("--mu-i", s.spec.mu_i, "mean weight of incorrect paths");
    check->add_option("--m2-c", s.m2_c, "second moment of correct weights (default mu_c^2)");
    check->add_option("--m2-i", s.m2_i, "second moment of incorrect weights (default mu_i^2)");

    return app;
}

inline int dispatch_cli(CLI::App& app, CliState& s, std::ostream& out) {
    if (app.got_subcommand("simulate")) return exec_simulate(s, out);
    if (app.got_subcommand("run")) return exec_run(s, out);
    if (app.got_subcommand("replay")) return exec_replay(s, out);
    if (app.got_subcommand("report")) return exec_report(s, out);
    if (app.got_subcommand("check-condition")) return exec_check_condition(s, out);
    throw ConfigError("no subcommand");
}

// Exit contract: 0 success, 2 usage/config, 3 transport, 4 numeric.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CliState s;
    auto app = build_cli(s);
    try {
        app->parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app->exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    try {
        return dispatch_cli(*app, s, out);
    } catch (const TransportError& e) {
        err << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ddc
