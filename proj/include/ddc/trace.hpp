#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ddc/errors.hpp"
#include "ddc/path_source.hpp"
#include "ddc/token_event.hpp"

namespace ddc {

inline constexpr int kTraceSchemaVersion = 1;

// One recorded path: everything needed to replay it verbatim. Logprobs are
// stored at full precision (shortest round-trip decimal form).
struct TraceRecord {
    int schema_version = kTraceSchemaVersion;
    std::string query_id;
    std::string path_id;
    std::vector<TokenEvent> events;
    std::string final_text;
    std::string extracted_answer;
    std::string outcome;  // engine terminal status string
    std::uint64_t started_unix_ms = 0;
    std::uint64_t finished_unix_ms = 0;
    bool truncated = false;  // set by the loader on files missing a final line

    bool operator==(const TraceRecord& o) const {
        if (schema_version != o.schema_version || query_id != o.query_id ||
            path_id != o.path_id || final_text != o.final_text ||
            extracted_answer != o.extracted_answer || outcome != o.outcome ||
            started_unix_ms != o.started_unix_ms || finished_unix_ms != o.finished_unix_ms ||
            events.size() != o.events.size()) {
            return false;
        }
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (events[i].position != o.events[i].position ||
                events[i].token_text != o.events[i].token_text ||
                events[i].top_logprobs != o.events[i].top_logprobs) {
                return false;
            }
        }
        return true;
    }
};

// Layout: <root>/<query_id>/<path_id>.jsonl, one JSON object per line:
// a header line, one line per event, and a final line.
inline std::filesystem::path trace_file_path(const std::filesystem::path& root,
                                             const std::string& query_id,
                                             const std::string& path_id) {
    return root / query_id / (path_id + ".jsonl");
}

inline void persist_trace(const TraceRecord& record, const std::filesystem::path& root) {
    const auto file = trace_file_path(root, record.query_id, record.path_id);
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw TransportError("cannot open trace file for writing: " + file.string());

    nlohmann::ordered_json header;
    header["type"] = "header";
    header["schema_version"] = record.schema_version;
    header["query_id"] = record.query_id;
    header["path_id"] = record.path_id;
    out << header.dump() << '\n';

    for (const auto& ev : record.events) {
        nlohmann::ordered_json e;
        e["type"] = "event";
        e["position"] = ev.position;
        e["top_logprobs"] = ev.top_logprobs;
        e["token_text"] = ev.token_text;
        out << e.dump() << '\n';
    }

    nlohmann::ordered_json fin;
    fin["type"] = "final";
    fin["final_text"] = record.final_text;
    fin["extracted_answer"] = record.extracted_answer;
    fin["outcome"] = record.outcome;
    fin["started_unix_ms"] = record.started_unix_ms;
    fin["finished_unix_ms"] = record.finished_unix_ms;
    out << fin.dump() << '\n';
    if (!out) throw TransportError("failed writing trace file: " + file.string());
}

// Reads one trace file. A missing final line yields a record flagged
// truncated instead of an error; replay marks such paths failed.
inline TraceRecord load_trace_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw TransportError("cannot open trace file: " + file.string());
    TraceRecord rec;
    std::string line;
    bool have_header = false, have_final = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            break;  // torn tail line: treat as truncation
        }
        const std::string type = j.value("type", "");
        if (type == "header") {
            const int version = j.value("schema_version", -1);
            if (version != kTraceSchemaVersion) {
                throw SchemaMismatchError("trace schema version " + std::to_string(version) +
                                          " in " + file.string() + ", expected " +
                                          std::to_string(kTraceSchemaVersion));
            }
            rec.query_id = j.value("query_id", "");
            rec.path_id = j.value("path_id", "");
            have_header = true;
        } else if (type == "event") {
            TokenEvent ev;
            ev.position = j.at("position").get<std::size_t>();
            ev.top_logprobs = j.at("top_logprobs").get<std::vector<double>>();
            ev.token_text = j.value("token_text", "");
            rec.events.push_back(std::move(ev));
        } else if (type == "final") {
            rec.final_text = j.value("final_text", "");
            rec.extracted_answer = j.value("extracted_answer", "");
            rec.outcome = j.value("outcome", "");
            rec.started_unix_ms = j.value("started_unix_ms", std::uint64_t{0});
            rec.finished_unix_ms = j.value("finished_unix_ms", std::uint64_t{0});
            have_final = true;
        }
    }
    if (!have_header) {
        throw SchemaMismatchError("trace file has no header line: " + file.string());
    }
    rec.truncated = !have_final;
    return rec;
}

// Replays one recorded path. A truncated record delivers its events and then
// raises a transport error so the consumer marks the path failed.
class ReplayStream : public PathStream {
   public:
    explicit ReplayStream(TraceRecord record) : record_(std::move(record)) {}

    std::optional<TokenEvent> next() override {
        if (cancelled_) return std::nullopt;
        if (pos_ < record_.events.size()) return record_.events[pos_++];
        if (record_.truncated) {
            throw TransportError("trace truncated: " + record_.query_id + "/" +
                                 record_.path_id);
        }
        return std::nullopt;
    }

    std::string final_text() override { return record_.final_text; }
    void cancel() override { cancelled_ = true; }

   private:
    TraceRecord record_;
    std::size_t pos_ = 0;
    bool cancelled_ = false;
};

// Replays one query directory in path-id order; runs dry after the last
// recorded path.
class ReplaySource : public PathSource {
   public:
    explicit ReplaySource(const std::filesystem::path& query_dir) {
        if (!std::filesystem::is_directory(query_dir)) {
            throw ConfigError("trace directory not found: " + query_dir.string());
        }
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(query_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) {
            throw ConfigError("no trace files in directory: " + query_dir.string());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) records_.push_back(load_trace_file(f));
    }

    std::unique_ptr<PathStream> start_path() override {
        if (next_ >= records_.size()) return nullptr;
        return std::make_unique<ReplayStream>(records_[next_++]);
    }

    const std::vector<TraceRecord>& records() const { return records_; }

   private:
    std::vector<TraceRecord> records_;
    std::size_t next_ = 0;
};

// Tees every delivered event into a trace file: wraps a live source so runs
// are replayable. Each path's trace is persisted when its stream ends,
// is cancelled, or the recorder is destroyed.
class RecordingStream : public PathStream {
   public:
    RecordingStream(std::unique_ptr<PathStream> inner, std::filesystem::path root,
                    std::string query_id, std::string path_id, std::uint64_t now_ms)
        : inner_(std::move(inner)), root_(std::move(root)) {
        record_.query_id = std::move(query_id);
        record_.path_id = std::move(path_id);
        record_.started_unix_ms = now_ms;
        record_.finished_unix_ms = now_ms;
    }

    ~RecordingStream() override { flush("abandoned"); }

    std::optional<TokenEvent> next() override {
        auto ev = inner_->next();
        if (ev) {
            record_.events.push_back(*ev);
        } else if (!flushed_ && !cancelled_) {
            record_.final_text = inner_->final_text();
            flush("completed");
        }
        return ev;
    }

    std::string final_text() override { return inner_->final_text(); }

    void cancel() override {
        cancelled_ = true;
        inner_->cancel();
        flush("cancelled");
    }

   private:
    void flush(const std::string& outcome) {
        if (flushed_) return;
        flushed_ = true;
        record_.outcome = outcome;
        persist_trace(record_, root_);
    }

    std::unique_ptr<PathStream> inner_;
    std::filesystem::path root_;
    TraceRecord record_;
    bool cancelled_ = false;
    bool flushed_ = false;
};

class RecordingSource : public PathSource {
   public:
    RecordingSource(PathSource& inner, std::filesystem::path root, std::string query_id,
                    std::uint64_t now_ms = 0)
        : inner_(inner), root_(std::move(root)), query_id_(std::move(query_id)), now_ms_(now_ms) {}

    std::unique_ptr<PathStream> start_path() override {
        auto stream = inner_.start_path();
        if (!stream) return nullptr;
        char name[16];
        std::snprintf(name, sizeof name, "path-%04zu", static_cast<std::size_t>(next_id_++));
        return std::make_unique<RecordingStream>(std::move(stream), root_, query_id_, name,
                                                 now_ms_);
    }

   private:
    PathSource& inner_;
    std::filesystem::path root_;
    std::string query_id_;
    std::uint64_t now_ms_;
    std::uint64_t next_id_ = 0;
};

}  // namespace ddc
