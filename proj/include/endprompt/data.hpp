#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "endprompt/model.hpp"
#include "endprompt/position_plan.hpp"
#include "endprompt/rng.hpp"

namespace eplab {

// Byte-level vocabulary: token ids 0..255 are raw bytes, id 256 is the
// reserved terminal-cue token. Model vocab is therefore 257.
inline constexpr int kReservedCueId = 256;
inline constexpr int kByteVocabSize = 257;

struct Cue {
    std::string id;
    std::vector<int> tokens;
};

struct CueSet {
    std::vector<Cue> cues;

    void validate() const {
        if (cues.empty()) {
            throw std::invalid_argument("CueSet: must contain at least one cue");
        }
        for (const Cue& cue : cues) {
            if (cue.tokens.empty()) {
                throw std::invalid_argument("CueSet: cue " + cue.id + " is empty");
            }
        }
    }

    std::int64_t max_length() const {
        std::int64_t best = 0;
        for (const Cue& cue : cues) {
            best = std::max<std::int64_t>(best, static_cast<std::int64_t>(cue.tokens.size()));
        }
        return best;
    }

    const Cue& by_id(const std::string& id) const {
        for (const Cue& cue : cues) {
            if (cue.id == id) {
                return cue;
            }
        }
        throw std::invalid_argument("CueSet: no cue named " + id);
    }
};

inline std::vector<int> bytes_to_tokens(const std::string& text) {
    std::vector<int> out;
    out.reserve(text.size());
    for (char c : text) {
        out.push_back(static_cast<int>(static_cast<unsigned char>(c)));
    }
    return out;
}

// The three terminal cues: an explicit full-sentence prompt, the single
// reserved terminal token, and a minimal closing string.
inline CueSet default_cues() {
    CueSet set;
    set.cues.push_back(
        {"EP_1", bytes_to_tokens("This is the end of text, please pay attention here")});
    set.cues.push_back({"EP_2", {kReservedCueId}});
    set.cues.push_back({"EP_3", bytes_to_tokens("End.")});
    return set;
}

// Short analogs of the default cues for runs whose physical budget caps the
// cue length at 8 tokens.
inline CueSet smoke_cues() {
    CueSet set;
    set.cues.push_back({"EP_1", bytes_to_tokens("The end.")});
    set.cues.push_back({"EP_2", {kReservedCueId}});
    set.cues.push_back({"EP_3", bytes_to_tokens("End.")});
    return set;
}

struct SampleSpec {
    std::int64_t a = 0;
    std::int64_t L = 0;
    double s = 1.0;
    PlanKind plan_kind = PlanKind::endprompt;
    double prompt_weight = 0.1;
    double context_weight = 1.0;
    int pose_chunks = 2;

    void validate(const CueSet& cues) const {
        cues.validate();
        if (a < 1) throw std::invalid_argument("SampleSpec: a must be >= 1");
        if (!(prompt_weight > 0.0 && prompt_weight <= 1.0)) {
            throw std::invalid_argument("SampleSpec: prompt weight must be in (0, 1]");
        }
        if (!(context_weight > 0.0)) {
            throw std::invalid_argument("SampleSpec: context weight must be > 0");
        }
        if (!(s >= 1.0)) throw std::invalid_argument("SampleSpec: scale must be >= 1");
        if (a + cues.max_length() > L) {
            throw std::invalid_argument("SampleSpec: a + max cue length exceeds L");
        }
    }
};

struct SampleMeta {
    PlanKind plan = PlanKind::endprompt;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t L = 0;
    double s = 1.0;
    std::string cue_id;

    bool operator==(const SampleMeta&) const = default;
};

struct TrainingSample {
    std::vector<int> tokens;
    std::vector<std::int64_t> positions;
    std::vector<double> weights;
    SampleMeta meta;

    bool operator==(const TrainingSample&) const = default;
};

// Byte-level tokenization of the stream followed by segmentation into
// contiguous non-overlapping windows of length a. A trailing partial window
// is dropped; a stream shorter than a yields no windows.
inline std::vector<std::vector<int>> ingest(std::istream& in, std::int64_t a) {
    if (a < 1) {
        throw std::invalid_argument("ingest: window length must be >= 1");
    }
    std::vector<std::vector<int>> windows;
    std::vector<int> current;
    current.reserve(static_cast<std::size_t>(a));
    char c;
    while (in.get(c)) {
        current.push_back(static_cast<int>(static_cast<unsigned char>(c)));
        if (static_cast<std::int64_t>(current.size()) == a) {
            windows.push_back(std::move(current));
            current.clear();
            current.reserve(static_cast<std::size_t>(a));
        }
    }
    return windows;
}

// Appends a uniformly drawn cue to the context window, assigns positions per
// the configured plan and attaches target-aligned loss weights: a prediction
// whose target is a cue token carries the prompt weight, all others the
// context weight.
inline TrainingSample make_sample(const std::vector<int>& context, const CueSet& cues,
                                  const SampleSpec& spec, Rng& rng) {
    spec.validate(cues);
    if (static_cast<std::int64_t>(context.size()) != spec.a) {
        throw std::invalid_argument("make_sample: context window length does not match a");
    }
    const Cue& cue = cues.cues[rng.index(cues.cues.size())];
    const std::int64_t b = static_cast<std::int64_t>(cue.tokens.size());
    if (spec.a + b > spec.L) {
        throw std::invalid_argument("make_sample: capacity error, cue " + cue.id +
                                    " does not fit in the target window");
    }

    TrainingSample sample;
    sample.tokens = context;
    sample.tokens.insert(sample.tokens.end(), cue.tokens.begin(), cue.tokens.end());

    PositionPlan plan;
    switch (spec.plan_kind) {
        case PlanKind::endprompt:
            plan = endprompt_plan({spec.a, b, spec.L, spec.s});
            break;
        case PlanKind::full:
            plan = full_plan(spec.a + b, spec.s);
            break;
        case PlanKind::pose:
            plan = pose_plan(spec.a + b, spec.pose_chunks, spec.L, spec.s, rng);
            break;
    }
    sample.positions = plan.assigned;

    sample.weights.resize(static_cast<std::size_t>(spec.a + b - 1));
    for (std::int64_t i = 0; i < spec.a + b - 1; ++i) {
        const std::int64_t target = i + 1;
        sample.weights[static_cast<std::size_t>(i)] =
            target < spec.a ? spec.context_weight : spec.prompt_weight;
    }

    sample.meta = {spec.plan_kind, spec.a, b, spec.L, spec.s, cue.id};
    return sample;
}

namespace detail {

inline std::string format_double_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void validate_sample(const TrainingSample& sample, std::size_t line_no) {
    const auto fail = [line_no](const std::string& what) {
        throw std::runtime_error("sample validation error at line " + std::to_string(line_no) +
                                 ": " + what);
    };
    const SampleMeta& meta = sample.meta;
    if (meta.a < 1 || meta.b < 1 || meta.a + meta.b > meta.L || !(meta.s >= 1.0)) {
        fail("invalid plan metadata");
    }
    const std::int64_t n = meta.a + meta.b;
    if (static_cast<std::int64_t>(sample.tokens.size()) != n ||
        static_cast<std::int64_t>(sample.positions.size()) != n ||
        static_cast<std::int64_t>(sample.weights.size()) != n - 1) {
        fail("field lengths do not match a + b");
    }
    for (int tok : sample.tokens) {
        if (tok < 0 || tok >= kByteVocabSize) {
            fail("token id out of range");
        }
    }
    for (std::size_t i = 1; i < sample.positions.size(); ++i) {
        if (!(sample.positions[i] > sample.positions[i - 1])) {
            fail("positions not strictly increasing");
        }
    }
    if (sample.positions.front() < 0 || sample.positions.back() > meta.L - 1) {
        fail("positions outside [0, L-1]");
    }
    // Recompute the plan from the metadata where it is deterministic.
    if (meta.plan == PlanKind::endprompt) {
        const PositionPlan plan = endprompt_plan({meta.a, meta.b, meta.L, meta.s});
        if (plan.assigned != sample.positions) {
            fail("positions do not match the declared endprompt plan");
        }
    } else if (meta.plan == PlanKind::full) {
        const PositionPlan plan = full_plan(meta.a + meta.b, meta.s);
        if (plan.assigned != sample.positions) {
            fail("positions do not match the declared full plan");
        }
    }
    for (double w : sample.weights) {
        if (!(w >= 0.0)) {
            fail("negative weight");
        }
    }
    // Weights are two-valued, split at the context/prompt boundary.
    for (std::size_t i = 0; i + 1 < sample.weights.size(); ++i) {
        const std::int64_t target = static_cast<std::int64_t>(i) + 1;
        const std::int64_t next_target = target + 1;
        const bool same_region = (target < meta.a) == (next_target < meta.a);
        if (same_region && sample.weights[i] != sample.weights[i + 1]) {
            fail("weights not constant within a region");
        }
    }
}

}  // namespace detail

// One JSON object per line, keys exactly: "tokens", "positions", "weights"
// (6-decimal fixed point), "meta" {"plan","a","b","L","s","cue_id"}. Files
// may be concatenated.
inline void write_samples(const std::vector<TrainingSample>& samples, std::ostream& out) {
    char wbuf[32];
    for (const TrainingSample& sample : samples) {
        std::string line = "{\"tokens\":[";
        for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
            if (i > 0) line += ',';
            line += std::to_string(sample.tokens[i]);
        }
        line += "],\"positions\":[";
        for (std::size_t i = 0; i < sample.positions.size(); ++i) {
            if (i > 0) line += ',';
            line += std::to_string(sample.positions[i]);
        }
        line += "],\"weights\":[";
        for (std::size_t i = 0; i < sample.weights.size(); ++i) {
            if (i > 0) line += ',';
            std::snprintf(wbuf, sizeof(wbuf), "%.6f", sample.weights[i]);
            line += wbuf;
        }
        line += "],\"meta\":{\"plan\":\"";
        line += to_string(sample.meta.plan);
        line += "\",\"a\":" + std::to_string(sample.meta.a);
        line += ",\"b\":" + std::to_string(sample.meta.b);
        line += ",\"L\":" + std::to_string(sample.meta.L);
        line += ",\"s\":" + detail::format_double_shortest(sample.meta.s);
        line += ",\"cue_id\":" + nlohmann::json(sample.meta.cue_id).dump();
        line += "}}\n";
        out << line;
    }
    if (!out) {
        throw std::runtime_error("write_samples: stream write failed");
    }
}

inline std::vector<TrainingSample> read_samples(std::istream& in) {
    std::vector<TrainingSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("sample parse error at line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        const auto fail = [line_no](const std::string& what) {
            throw std::runtime_error("sample parse error at line " + std::to_string(line_no) +
                                     ": " + what);
        };
        if (!j.is_object() || j.size() != 4 || !j.contains("tokens") || !j.contains("positions") ||
            !j.contains("weights") || !j.contains("meta")) {
            fail("record must have exactly the keys tokens, positions, weights, meta");
        }
        const nlohmann::json& meta = j["meta"];
        if (!meta.is_object() || meta.size() != 6 || !meta.contains("plan") ||
            !meta.contains("a") || !meta.contains("b") || !meta.contains("L") ||
            !meta.contains("s") || !meta.contains("cue_id")) {
            fail("meta must have exactly the keys plan, a, b, L, s, cue_id");
        }
        TrainingSample sample;
        try {
            sample.tokens = j["tokens"].get<std::vector<int>>();
            sample.positions = j["positions"].get<std::vector<std::int64_t>>();
            sample.weights = j["weights"].get<std::vector<double>>();
            sample.meta.plan = plan_kind_from_string(meta["plan"].get<std::string>());
            sample.meta.a = meta["a"].get<std::int64_t>();
            sample.meta.b = meta["b"].get<std::int64_t>();
            sample.meta.L = meta["L"].get<std::int64_t>();
            sample.meta.s = meta["s"].get<double>();
            sample.meta.cue_id = meta["cue_id"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        detail::validate_sample(sample, line_no);
        samples.push_back(std::move(sample));
    }
    return samples;
}

// Groups samples by (a, b) in first-seen order and cuts each group into
// batches of at most batch_size rows, preserving order. Interpolation is
// left to the model: batches carry assigned positions plus the scale.
inline std::vector<Batch> batcher(const std::vector<TrainingSample>& samples,
                                  std::size_t batch_size) {
    if (batch_size == 0) {
        throw std::invalid_argument("batcher: batch size must be >= 1");
    }
    struct Group {
        std::int64_t a;
        std::int64_t b;
        std::vector<const TrainingSample*> rows;
    };
    std::vector<Group> groups;
    for (const TrainingSample& sample : samples) {
        Group* group = nullptr;
        for (Group& g : groups) {
            if (g.a == sample.meta.a && g.b == sample.meta.b) {
                group = &g;
                break;
            }
        }
        if (group == nullptr) {
            groups.push_back({sample.meta.a, sample.meta.b, {}});
            group = &groups.back();
        }
        group->rows.push_back(&sample);
    }

    std::vector<Batch> batches;
    for (const Group& group : groups) {
        for (std::size_t begin = 0; begin < group.rows.size(); begin += batch_size) {
            const std::size_t end = std::min(group.rows.size(), begin + batch_size);
            Batch batch;
            batch.scale = group.rows[begin]->meta.s;
            for (std::size_t i = begin; i < end; ++i) {
                const TrainingSample& s = *group.rows[i];
                if (s.tokens.size() != static_cast<std::size_t>(group.a + group.b) ||
                    s.meta.s != batch.scale) {
                    throw std::logic_error("batcher: grouping bug, mixed lengths or scales");
                }
                batch.tokens.push_back(s.tokens);
                batch.assigned.push_back(s.positions);
                batch.weights.push_back(s.weights);
            }
            batches.push_back(std::move(batch));
        }
    }
    return batches;
}

}  // namespace eplab
