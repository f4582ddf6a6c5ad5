#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "endprompt/data.hpp"
#include "endprompt/interval_set.hpp"
#include "endprompt/model.hpp"
#include "endprompt/position_plan.hpp"
#include "endprompt/rng.hpp"

namespace eplab {

struct NiahConfig {
    std::int64_t t_eval = 0;
    int key_len = 2;
    int value_len = 2;
    std::vector<int> filler_vocab;  // candidate filler token ids; keys/values drawn from it
    double depth_fraction = 0.0;
    int separator = kReservedCueId;

    static std::vector<int> default_filler_vocab() {
        std::vector<int> vocab;
        for (char c = 'a'; c <= 'p'; ++c) {
            vocab.push_back(static_cast<int>(c));
        }
        return vocab;
    }

    void validate() const {
        if (t_eval < 8 || key_len < 1 || value_len < 1) {
            throw std::invalid_argument("NiahConfig: degenerate sizes");
        }
        if (filler_vocab.size() < static_cast<std::size_t>(key_len + value_len) + 1) {
            throw std::invalid_argument("NiahConfig: filler vocabulary too small");
        }
        if (!(depth_fraction >= 0.0 && depth_fraction <= 1.0)) {
            throw std::invalid_argument("NiahConfig: depth fraction must be in [0, 1]");
        }
        const std::int64_t haystack_len = t_eval - value_len - (1 + key_len);
        if (haystack_len < key_len + value_len) {
            throw std::invalid_argument("NiahConfig: infeasible lengths");
        }
    }
};

// Single-needle retrieval probe. The prompt is haystack ++ query; the model
// must continue with the value tokens. The key occurs exactly once in the
// haystack because filler never draws key or value tokens.
struct NiahTask {
    std::vector<int> haystack;
    std::vector<int> key;
    std::vector<int> value;
    std::vector<int> query;  // separator ++ key
    std::int64_t needle_offset = 0;
    std::int64_t t_eval = 0;

    std::vector<int> prompt() const {
        std::vector<int> out = haystack;
        out.insert(out.end(), query.begin(), query.end());
        return out;
    }

    // Assigned distance from the first answer position back to the key start.
    std::int64_t retrieval_distance() const {
        return (t_eval - static_cast<std::int64_t>(value.size())) - needle_offset;
    }
};

namespace detail {

inline NiahTask gen_niah_at(Rng& rng, const NiahConfig& config, std::int64_t needle_offset) {
    config.validate();
    const std::int64_t haystack_len = config.t_eval - config.value_len - (1 + config.key_len);
    const std::int64_t max_offset = haystack_len - (config.key_len + config.value_len);
    if (needle_offset < 0 || needle_offset > max_offset) {
        throw std::invalid_argument("gen_niah: needle offset out of range");
    }

    NiahTask task;
    task.t_eval = config.t_eval;
    task.needle_offset = needle_offset;
    for (int i = 0; i < config.key_len; ++i) {
        task.key.push_back(config.filler_vocab[rng.index(config.filler_vocab.size())]);
    }
    // Redraw the value while key ++ value contains a second occurrence of the
    // key (possible when the key has repeated tokens); the key must occur
    // exactly once in the haystack.
    while (true) {
        task.value.clear();
        for (int i = 0; i < config.value_len; ++i) {
            task.value.push_back(config.filler_vocab[rng.index(config.filler_vocab.size())]);
        }
        std::vector<int> needle = task.key;
        needle.insert(needle.end(), task.value.begin(), task.value.end());
        bool duplicate = false;
        for (std::size_t start = 1; start + task.key.size() <= needle.size(); ++start) {
            if (std::equal(task.key.begin(), task.key.end(), needle.begin() + static_cast<std::ptrdiff_t>(start))) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            break;
        }
    }

    std::vector<int> filler_pool;
    for (int tok : config.filler_vocab) {
        if (std::find(task.key.begin(), task.key.end(), tok) == task.key.end() &&
            std::find(task.value.begin(), task.value.end(), tok) == task.value.end()) {
            filler_pool.push_back(tok);
        }
    }
    if (filler_pool.empty()) {
        throw std::invalid_argument("gen_niah: filler pool exhausted by key/value exclusion");
    }

    task.haystack.resize(static_cast<std::size_t>(haystack_len));
    for (std::int64_t i = 0; i < haystack_len; ++i) {
        task.haystack[static_cast<std::size_t>(i)] = filler_pool[rng.index(filler_pool.size())];
    }
    for (int i = 0; i < config.key_len; ++i) {
        task.haystack[static_cast<std::size_t>(needle_offset + i)] = task.key[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < config.value_len; ++i) {
        task.haystack[static_cast<std::size_t>(needle_offset + config.key_len + i)] =
            task.value[static_cast<std::size_t>(i)];
    }

    task.query.push_back(config.separator);
    task.query.insert(task.query.end(), task.key.begin(), task.key.end());
    return task;
}

}  // namespace detail

inline NiahTask gen_niah(Rng& rng, const NiahConfig& config) {
    config.validate();
    const std::int64_t haystack_len = config.t_eval - config.value_len - (1 + config.key_len);
    const std::int64_t max_offset = haystack_len - (config.key_len + config.value_len);
    const std::int64_t offset = static_cast<std::int64_t>(
        std::floor(config.depth_fraction * static_cast<double>(max_offset)));
    return detail::gen_niah_at(rng, config, std::min(offset, max_offset));
}

struct NllBucket {
    Interval range;
    double mean_nll = std::numeric_limits<double>::quiet_NaN();
    std::int64_t count = 0;
};

struct EvalReport {
    std::string model_id;
    std::string family = "niah_single";
    std::int64_t t_eval = 0;
    std::int64_t n = 0;
    double accuracy = 0.0;
    std::vector<NllBucket> buckets;
};

// The three distance regions a two-segment plan induces: local observed,
// intermediate gap, cross-segment band.
inline std::vector<Interval> buckets_from_spec(const PlanSpec& spec) {
    spec.validate();
    if (!spec.gap_condition()) {
        throw std::invalid_argument("buckets_from_spec: gap condition not met");
    }
    const std::int64_t m = std::max(spec.a, spec.b);
    return {{0, m - 1}, {m, spec.L - spec.a - spec.b}, {spec.L - spec.a - spec.b + 1, spec.L - 1}};
}

namespace detail {

inline void check_bucket_partition(const std::vector<Interval>& buckets, std::int64_t hi) {
    if (buckets.empty() || buckets.front().lo != 0 || buckets.back().hi != hi) {
        throw std::invalid_argument("buckets must partition [0, " + std::to_string(hi) + "]");
    }
    for (std::size_t i = 0; i + 1 < buckets.size(); ++i) {
        if (buckets[i + 1].lo != buckets[i].hi + 1) {
            throw std::invalid_argument("buckets must be contiguous and sorted");
        }
    }
}

struct TaskOutcome {
    bool match = false;
    double answer_nll = 0.0;
    std::int64_t distance = 0;
};

// Greedy-decodes the answer and scores the true answer teacher-forced. The
// greedy chain reuses the teacher-forced forward where causality makes the
// logits bit-identical (a correct prefix), so the decoded tokens equal the
// literal greedy_decode output.
inline TaskOutcome run_task(const TinyModelParams& params, const NiahTask& task, double s) {
    TaskOutcome outcome;
    outcome.distance = task.retrieval_distance();

    std::vector<int> full = task.prompt();
    const std::size_t t_prompt = full.size();
    full.insert(full.end(), task.value.begin(), task.value.end());
    std::vector<double> positions(full.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = static_cast<double>(i) / s;
    }
    const Mat logits = forward(params, full, positions);

    double nll = 0.0;
    bool match = true;
    bool prefix_correct = true;
    for (std::size_t i = 0; i < task.value.size(); ++i) {
        const Eigen::Index row_idx = static_cast<Eigen::Index>(t_prompt + i) - 1;
        const auto row = logits.row(row_idx);
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).exp().sum());
        nll += lse - row(task.value[i]);
        if (prefix_correct) {
            Eigen::Index best = 0;
            row.maxCoeff(&best);
            if (static_cast<int>(best) != task.value[i]) {
                match = false;
                prefix_correct = false;
            }
        }
    }
    outcome.match = match;
    outcome.answer_nll = nll / static_cast<double>(task.value.size());
    return outcome;
}

}  // namespace detail

// Exact-match retrieval accuracy plus the answer-NLL profile over the given
// distance buckets. Evaluation positions are always the contiguous integers
// 0..T_eval-1 divided by the interpolation scale; max_positions is the
// position budget of the trained plan.
inline EvalReport eval_retrieval(const TinyModelParams& params, const std::vector<NiahTask>& tasks,
                                 double s, std::int64_t max_positions,
                                 const std::vector<Interval>& buckets, std::string model_id,
                                 int threads = 1) {
    if (tasks.empty()) {
        throw std::invalid_argument("eval_retrieval: no tasks");
    }
    if (!(s >= 1.0)) {
        throw std::invalid_argument("eval_retrieval: scale must be >= 1");
    }
    for (const NiahTask& task : tasks) {
        if (task.t_eval > max_positions) {
            throw std::invalid_argument("eval_retrieval: T_eval " + std::to_string(task.t_eval) +
                                        " exceeds the supported position range " +
                                        std::to_string(max_positions));
        }
        if (task.t_eval != tasks.front().t_eval) {
            throw std::invalid_argument("eval_retrieval: mixed T_eval in task set");
        }
    }
    detail::check_bucket_partition(buckets, tasks.front().t_eval - 1);

    std::vector<detail::TaskOutcome> outcomes(tasks.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            outcomes[i] = detail::run_task(params, tasks[i], s);
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (workers == 1) {
        run_range(0, tasks.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (tasks.size() + static_cast<std::size_t>(workers) - 1) /
                                  static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(tasks.size(), begin + chunk);
            if (begin < end) {
                pool.emplace_back(run_range, begin, end);
            }
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }

    EvalReport report;
    report.model_id = std::move(model_id);
    report.t_eval = tasks.front().t_eval;
    report.n = static_cast<std::int64_t>(tasks.size());
    report.buckets.resize(buckets.size());
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        report.buckets[i].range = buckets[i];
    }

    std::int64_t correct = 0;
    std::vector<double> nll_sums(buckets.size(), 0.0);
    for (const detail::TaskOutcome& outcome : outcomes) {
        if (outcome.match) {
            ++correct;
        }
        for (std::size_t bkt = 0; bkt < buckets.size(); ++bkt) {
            if (outcome.distance >= buckets[bkt].lo && outcome.distance <= buckets[bkt].hi) {
                nll_sums[bkt] += outcome.answer_nll;
                ++report.buckets[bkt].count;
                break;
            }
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(tasks.size());
    for (std::size_t bkt = 0; bkt < buckets.size(); ++bkt) {
        if (report.buckets[bkt].count > 0) {
            report.buckets[bkt].mean_nll =
                nll_sums[bkt] / static_cast<double>(report.buckets[bkt].count);
        }
    }
    return report;
}

// Generates tasks whose retrieval distance is controlled to land inside each
// bucket (where feasible), n per bucket, evenly spread.
inline std::vector<NiahTask> tasks_for_buckets(Rng& rng, NiahConfig config,
                                               const std::vector<Interval>& buckets,
                                               int per_bucket) {
    config.validate();
    const std::int64_t t_prompt = config.t_eval - config.value_len;
    const std::int64_t haystack_len = t_prompt - (1 + config.key_len);
    const std::int64_t max_offset = haystack_len - (config.key_len + config.value_len);
    const std::int64_t d_min = t_prompt - max_offset;
    const std::int64_t d_max = t_prompt;

    std::vector<NiahTask> tasks;
    for (const Interval& bucket : buckets) {
        const std::int64_t lo = std::max(bucket.lo, d_min);
        const std::int64_t hi = std::min(bucket.hi, d_max);
        if (lo > hi) {
            continue;
        }
        for (int i = 0; i < per_bucket; ++i) {
            const std::int64_t d =
                lo + (2 * static_cast<std::int64_t>(i) + 1) * (hi - lo + 1) / (2 * per_bucket);
            tasks.push_back(detail::gen_niah_at(rng, config, t_prompt - std::min(d, hi)));
        }
    }
    return tasks;
}

struct ProfileRow {
    Interval bucket;
    double mean_nll = std::numeric_limits<double>::quiet_NaN();
    std::int64_t count = 0;
    bool in_observed = false;
    bool in_gap = false;
};

// Distance-bucketed answer NLL with each bucket flagged against the training
// plan's observed and gap regions.
inline std::vector<ProfileRow> distance_profile(const TinyModelParams& params,
                                                const std::vector<NiahTask>& tasks, double s,
                                                const std::vector<Interval>& buckets,
                                                const PlanSpec& train_spec, int threads = 1) {
    detail::check_bucket_partition(buckets, train_spec.L - 1);
    const EvalReport report = eval_retrieval(params, tasks, s, train_spec.L, buckets,
                                             "distance_profile", threads);
    const DistanceSet observed = observed_distances_closed_form(train_spec);
    std::vector<ProfileRow> rows(buckets.size());
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        rows[i].bucket = buckets[i];
        rows[i].mean_nll = report.buckets[i].mean_nll;
        rows[i].count = report.buckets[i].count;
        rows[i].in_observed = observed.contains(buckets[i].lo) && observed.contains(buckets[i].hi);
        if (train_spec.gap_condition()) {
            const DistanceSet gap = gap_distances(train_spec);
            rows[i].in_gap = gap.contains(buckets[i].lo) && gap.contains(buckets[i].hi);
        }
    }
    return rows;
}

inline std::string format_nll(double v) {
    if (std::isnan(v)) {
        return "NA";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string eval_report_csv_header(const EvalReport& report) {
    std::string header = "model,family,T_eval,n,accuracy";
    for (const NllBucket& bucket : report.buckets) {
        header += ",nll_" + std::to_string(bucket.range.lo) + "_" + std::to_string(bucket.range.hi);
    }
    return header;
}

inline std::string eval_report_csv_row(const EvalReport& report) {
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.6f", report.accuracy);
    std::string row = report.model_id + "," + report.family + "," + std::to_string(report.t_eval) +
                      "," + std::to_string(report.n) + "," + acc;
    for (const NllBucket& bucket : report.buckets) {
        row += "," + format_nll(bucket.mean_nll);
    }
    return row;
}

// Parses a CSV produced by eval_report_csv_header/row. Lines starting with
// '#' are metadata comments and are skipped.
inline std::vector<EvalReport> parse_eval_reports(std::istream& in) {
    std::vector<EvalReport> reports;
    std::string line;
    std::vector<Interval> buckets;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (!have_header) {
            if (fields.size() < 5 || fields[0] != "model") {
                throw std::runtime_error("eval csv: malformed header at line " +
                                         std::to_string(line_no));
            }
            for (std::size_t i = 5; i < fields.size(); ++i) {
                const std::string& name = fields[i];
                if (name.rfind("nll_", 0) != 0) {
                    throw std::runtime_error("eval csv: bad bucket column " + name);
                }
                const auto us = name.find('_', 4);
                buckets.push_back({std::stoll(name.substr(4, us - 4)),
                                   std::stoll(name.substr(us + 1))});
            }
            have_header = true;
            continue;
        }
        if (fields.size() != buckets.size() + 5) {
            throw std::runtime_error("eval csv: wrong field count at line " +
                                     std::to_string(line_no));
        }
        EvalReport report;
        report.model_id = fields[0];
        report.family = fields[1];
        report.t_eval = std::stoll(fields[2]);
        report.n = std::stoll(fields[3]);
        report.accuracy = std::stod(fields[4]);
        for (std::size_t i = 0; i < buckets.size(); ++i) {
            NllBucket bucket;
            bucket.range = buckets[i];
            if (fields[5 + i] != "NA") {
                bucket.mean_nll = std::stod(fields[5 + i]);
                bucket.count = -1;  // unknown from CSV
            }
            report.buckets.push_back(bucket);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

struct ComparisonTable {
    std::string header;
    std::vector<std::string> rows;

    std::string to_csv() const {
        std::string out = header + "\n";
        for (const std::string& row : rows) {
            out += row + "\n";
        }
        return out;
    }
};

// One row per model with a trailing "best" marker on the row with the
// highest retrieval accuracy.
inline ComparisonTable compare(const std::vector<EvalReport>& reports) {
    if (reports.empty()) {
        throw std::invalid_argument("compare: no reports");
    }
    for (const EvalReport& report : reports) {
        if (report.family != reports.front().family) {
            throw std::invalid_argument("compare: mismatched task families");
        }
        if (report.t_eval != reports.front().t_eval) {
            throw std::invalid_argument("compare: mismatched T_eval");
        }
        if (report.buckets.size() != reports.front().buckets.size()) {
            throw std::invalid_argument("compare: mismatched bucket sets");
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].accuracy > reports[best].accuracy) {
            best = i;
        }
    }
    ComparisonTable table;
    table.header = eval_report_csv_header(reports.front()) + ",best";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        table.rows.push_back(eval_report_csv_row(reports[i]) + "," + (i == best ? "*" : ""));
    }
    return table;
}

}  // namespace eplab
