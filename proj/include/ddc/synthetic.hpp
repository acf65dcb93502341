#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/path_source.hpp"
#include "ddc/rng.hpp"
#include "ddc/token_event.hpp"

namespace ddc {

// Confidence-trajectory shapes. Values are global group confidence targets;
// the token realizer below converts each target into a top-k logprob vector
// that reproduces it exactly.
enum class Family { stable_high, dip_recover, degenerating, isotropic_noise };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::stable_high: return "stable_high";
        case Family::dip_recover: return "dip_recover";
        case Family::degenerating: return "degenerating";
        case Family::isotropic_noise: return "isotropic_noise";
    }
    return "stable_high";
}

inline Family family_from_string(const std::string& s) {
    if (s == "stable_high") return Family::stable_high;
    if (s == "dip_recover") return Family::dip_recover;
    if (s == "degenerating") return Family::degenerating;
    if (s == "isotropic_noise") return Family::isotropic_noise;
    throw ConfigError("unknown family: " + s);
}

struct GeneratorSpec {
    double p = 0.6;   // probability a path lands on the gold answer
    double mu_c = 0.8;  // mean vote weight given correct
    double mu_i = 0.4;  // mean vote weight given incorrect
    double weight_noise = 0.0;  // Beta spread knob; 0 = point mass at the mean
    std::size_t distractors = 3;  // distinct wrong answers, drawn uniformly
    Family family = Family::stable_high;
    std::uint64_t seed = 1;
    std::size_t top_k = 20;
    std::size_t len_min = 96;  // path length range in tokens
    std::size_t len_max = 160;

    // Trajectory shape.
    double base_conf = 4.0;    // flat confidence level
    double base_jitter = 0.0;  // per-path uniform offset on the base
    double noise_sigma = 0.10;  // per-token Gaussian noise
    double dip_depth = 0.8;    // dip_recover bump depth
    double dip_width = 12.0;   // dip_recover Gaussian width in tokens
    double drift_rate = 0.02;  // degenerating: confidence lost per token
    double ar_phi = 2.0 / 3.0;  // isotropic_noise AR(1) coefficient
    double ar_sigma = 0.35;    // isotropic_noise innovation scale
    double local_coupling = 0.5;  // local conf = exp(-coupling * global target)

    void validate() const {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("p must be in (0, 1)");
        if (!(mu_c > 0.0 && mu_c < 1.0) || !(mu_i > 0.0 && mu_i < 1.0)) {
            throw DomainError("mu_c and mu_i must be in (0, 1)");
        }
        if (!std::isfinite(weight_noise) || weight_noise < 0.0) {
            throw DomainError("weight_noise must be finite and >= 0");
        }
        if (distractors < 1) throw DomainError("distractor pool must be >= 1");
        if (top_k < 2) throw DomainError("top_k must be >= 2");
        if (len_min < 1 || len_max < len_min) throw DomainError("bad path length range");
        if (!(local_coupling > 0.0 && local_coupling <= 1.0)) {
            throw DomainError("local_coupling must be in (0, 1]");
        }
        if (!(std::abs(ar_phi) < 1.0)) throw DomainError("ar_phi must be in (-1, 1)");
    }
};

inline const std::string& gold_answer() {
    static const std::string g = "42";
    return g;
}

inline std::string distractor_answer(std::size_t i) { return std::to_string(101 + i); }

namespace detail {

// Realizes a (local, global) confidence pair as a descending top-k logprob
// vector: the head entry fixes the local confidence, the k-1 tail entries
// share whatever mass the global target requires. Feasible whenever
// local >= exp(-global), which the coupling local = exp(-rho*global) with
// rho <= 1 guarantees.
inline std::vector<double> realize_logprobs(double global_target, double local_coupling,
                                            std::size_t k) {
    const double head = -local_coupling * global_target;  // log local confidence
    double tail =
        -(static_cast<double>(k) * global_target + head) / static_cast<double>(k - 1);
    // rho = 1 makes head and tail equal in exact arithmetic; rounding must not
    // let the tail climb above the head and break the descending-order invariant.
    tail = std::min(tail, head);
    std::vector<double> lp(k, tail);
    lp[0] = head;
    return lp;
}

// Target global-confidence trajectory for one path.
inline std::vector<double> make_trajectory(const GeneratorSpec& spec, Rng& rng,
                                           std::size_t len) {
    std::vector<double> traj(len);
    const double base = spec.base_conf + (spec.base_jitter > 0.0
                                              ? rng.uniform(-spec.base_jitter, spec.base_jitter)
                                              : 0.0);
    switch (spec.family) {
        case Family::stable_high: {
            for (auto& v : traj) v = base + rng.normal(0.0, spec.noise_sigma);
            break;
        }
        case Family::dip_recover: {
            const double center = static_cast<double>(len) / 2.0;
            for (std::size_t t = 0; t < len; ++t) {
                const double d = (static_cast<double>(t) - center) / spec.dip_width;
                traj[t] = base - spec.dip_depth * std::exp(-0.5 * d * d) +
                          rng.normal(0.0, spec.noise_sigma);
            }
            break;
        }
        case Family::degenerating: {
            for (std::size_t t = 0; t < len; ++t) {
                traj[t] = base - spec.drift_rate * static_cast<double>(t) +
                          rng.normal(0.0, spec.noise_sigma);
            }
            break;
        }
        case Family::isotropic_noise: {
            // Stationary AR(1) around the base; phi near 2/3 keeps the
            // position-velocity cloud close to isotropic.
            const double stat_sigma =
                spec.ar_sigma / std::sqrt(1.0 - spec.ar_phi * spec.ar_phi);
            double x = rng.normal(0.0, stat_sigma);
            for (std::size_t t = 0; t < len; ++t) {
                traj[t] = base + x;
                x = spec.ar_phi * x + rng.normal(0.0, spec.ar_sigma);
            }
            break;
        }
    }
    for (auto& v : traj) v = std::clamp(v, 0.05, 40.0);
    return traj;
}

}  // namespace detail

// One drawn vote for the width-only (token-free) experiments.
struct VoteDraw {
    std::string answer;
    bool correct = false;
    double weight = 0.0;
};

inline VoteDraw draw_vote(Rng& rng, const GeneratorSpec& spec) {
    VoteDraw v;
    v.correct = rng.bernoulli(spec.p);
    double mu;
    if (v.correct) {
        v.answer = gold_answer();
        mu = spec.mu_c;
    } else {
        v.answer = distractor_answer(rng.index(spec.distractors));
        mu = spec.mu_i;
    }
    if (spec.weight_noise <= 0.0) {
        v.weight = mu;
    } else {
        const double kappa = 2.0 / spec.weight_noise;
        v.weight = rng.beta(mu * kappa, (1.0 - mu) * kappa);
    }
    return v;
}

// Fully precomputed synthetic path. Cancellation stops delivery immediately.
class SyntheticStream : public PathStream {
   public:
    SyntheticStream(const GeneratorSpec& spec, std::uint64_t path_index) {
        spec.validate();
        Rng rng = Rng::for_stream(spec.seed, path_index);
        const std::size_t len =
            spec.len_min + (spec.len_max > spec.len_min
                                ? rng.index(spec.len_max - spec.len_min + 1)
                                : 0);
        trajectory_ = detail::make_trajectory(spec, rng, len);
        const VoteDraw vote = draw_vote(rng, spec);
        answer_ = vote.answer;
        correct_ = vote.correct;
        drawn_weight_ = vote.weight;
        coupling_ = spec.local_coupling;
        k_ = spec.top_k;
        final_text_ = "synthetic reasoning path\n\\boxed{" + answer_ + "}";
    }

    std::optional<TokenEvent> next() override {
        if (cancelled_ || pos_ >= trajectory_.size()) return std::nullopt;
        TokenEvent ev;
        ev.position = pos_;
        ev.top_logprobs = detail::realize_logprobs(trajectory_[pos_], coupling_, k_);
        ++pos_;
        return ev;
    }

    std::string final_text() override { return final_text_; }
    void cancel() override { cancelled_ = true; }

    const std::string& answer() const { return answer_; }
    bool correct() const { return correct_; }
    double drawn_weight() const { return drawn_weight_; }
    const std::vector<double>& trajectory() const { return trajectory_; }

   private:
    std::vector<double> trajectory_;
    std::string answer_;
    std::string final_text_;
    bool correct_ = false;
    double drawn_weight_ = 0.0;
    double coupling_ = 0.5;
    std::size_t k_ = 20;
    std::size_t pos_ = 0;
    bool cancelled_ = false;
};

// Unbounded source: path i is generated from stream (seed, i), so runs are
// reproducible regardless of how many paths the engine actually pulls.
class SyntheticSource : public PathSource {
   public:
    explicit SyntheticSource(GeneratorSpec spec) : spec_(spec) { spec_.validate(); }

    std::unique_ptr<PathStream> start_path() override {
        return std::make_unique<SyntheticStream>(spec_, next_index_++);
    }

    std::uint64_t paths_started() const { return next_index_; }

   private:
    GeneratorSpec spec_;
    std::uint64_t next_index_ = 0;
};

// Uniform mixture over several specs; used to build mixed calibration pools.
class MixtureSource : public PathSource {
   public:
    MixtureSource(std::vector<GeneratorSpec> specs, std::uint64_t seed)
        : specs_(std::move(specs)), seed_(seed) {
        if (specs_.empty()) throw ConfigError("mixture needs at least one spec");
        for (auto& s : specs_) s.validate();
    }

    std::unique_ptr<PathStream> start_path() override {
        Rng pick = Rng::for_stream(seed_ ^ 0xA5A5A5A5A5A5A5A5ULL, next_index_);
        const GeneratorSpec& spec = specs_[pick.index(specs_.size())];
        return std::make_unique<SyntheticStream>(spec, next_index_++);
    }

   private:
    std::vector<GeneratorSpec> specs_;
    std::uint64_t seed_;
    std::uint64_t next_index_ = 0;
};

}  // namespace ddc
